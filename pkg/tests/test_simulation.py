import math

import numpy as np
import pytest

from gmm_dpi.gmm import GmmModel, TrainConfig, make_mu
from gmm_dpi.processing import construct_processing
from gmm_dpi.rng import TRIAL, substream
from gmm_dpi.simulation import DegenerateClassifierError, GridPoint, MeanEstimates, \
    TrialResult, aggregate, decision_statistic, exact_conditional_error, monte_carlo_error, \
    plugin_classify, run_experiment, run_trial
from gmm_dpi.gmm import sample_test_points
from gmm_dpi.special_math import q_function
from oracles import expected_error_balanced


def test_plugin_rule_and_ties():
    means = MeanEstimates(np.array([-1.0, 0.0]), np.array([1.0, 0.0]))
    assert plugin_classify(np.array([0.5, 3.0]), means) == 2
    assert plugin_classify(np.array([-0.1, 0.0]), means) == 1
    assert plugin_classify(np.array([0.0, 7.0]), means) == 1  # equidistant
    np.testing.assert_array_equal(plugin_classify(np.array([[2.0, 0], [-2.0, 0]]), means), [2, 1])


def test_decision_statistic_is_distance_difference():
    rng = np.random.default_rng(0)
    m1, m2, x = rng.standard_normal((3, 6))
    w = decision_statistic(x, MeanEstimates(m1, m2))
    assert w == pytest.approx(0.5 * (np.sum((x - m1) ** 2) - np.sum((x - m2) ** 2)))
    with pytest.raises(ValueError):
        decision_statistic(np.ones(5), MeanEstimates(m1, m2))


def test_mean_estimates_validate():
    with pytest.raises(ValueError):
        MeanEstimates(np.ones(2), np.ones(3))
    with pytest.raises(ValueError):
        MeanEstimates(np.array([np.inf]), np.array([0.0]))


def test_exact_error_with_true_means_is_bayes():
    mu = make_mu(10, 1.7, 1.0, 0)
    err = exact_conditional_error(MeanEstimates(-mu, mu), GmmModel(mu))
    assert err == pytest.approx(q_function(math.sqrt(1.7)), rel=1e-14)


def test_exact_error_matches_monte_carlo_for_fixed_means():
    rng = np.random.default_rng(3)
    model = GmmModel(make_mu(8, 1.0, 1.5, rng), 1.5)
    means = MeanEstimates(-model.mu + 0.4 * rng.standard_normal(8),
                          model.mu + 0.7 * rng.standard_normal(8))
    x, y = sample_test_points(model, 400000, rng)
    mc = monte_carlo_error(means, x, y)
    ex = exact_conditional_error(means, model)
    assert abs(mc - ex) < 4 * math.sqrt(ex * (1 - ex) / 400000)


def test_exact_error_degenerate():
    with pytest.raises(DegenerateClassifierError):
        exact_conditional_error(MeanEstimates(np.ones(3), np.ones(3)), GmmModel(np.ones(3)))


@pytest.mark.parametrize("S,n,d", [(1.0, 5, 20), (0.5, 20, 200)])
def test_mean_error_matches_quadrature_oracle(S, n, d):
    model = GmmModel(make_mu(d, S, 1.0, 1))
    cfg = TrainConfig(2 * n, 1.0)
    px = [run_trial(model, cfg, rng=substream(9, d, t)).p_x_err for t in range(6000)]
    se = np.std(px) / math.sqrt(len(px))
    assert abs(np.mean(px) - expected_error_balanced(S, n, d)) < 4 * se


def test_means_and_samples_draws_agree():
    model = GmmModel(make_mu(15, 0.8, 1.0, 2))
    cfg = TrainConfig(24, 0.5)
    A = construct_processing(model.mu, 4)
    a = [run_trial(model, cfg, A, substream(1, t), draw="means") for t in range(3000)]
    b = [run_trial(model, cfg, A, substream(2, t), draw="samples") for t in range(3000)]
    for attr in ("p_x_err", "p_z_err"):
        va, vb = np.array([getattr(r, attr) for r in a]), np.array([getattr(r, attr) for r in b])
        se = math.hypot(va.std(), vb.std()) / math.sqrt(3000)
        assert abs(va.mean() - vb.mean()) < 4 * se


def test_monte_carlo_mode_tracks_exact():
    model = GmmModel(make_mu(30, 1.0, 1.0, 0))
    A = construct_processing(model.mu, 5)
    cfg = TrainConfig(40, 1.0)
    ex = run_trial(model, cfg, A, substream(0, 1), test_mode="exact")
    mc = run_trial(model, cfg, A, substream(0, 1), test_mode="monte_carlo", n_test=200000,
                   chunk=30000)
    assert mc.p_x_err == pytest.approx(ex.p_x_err, abs=0.005)
    assert mc.p_z_err == pytest.approx(ex.p_z_err, abs=0.005)


def test_run_trial_without_processing_and_errors():
    model = GmmModel(make_mu(4, 1.0, 1.0, 0))
    r = run_trial(model, TrainConfig(10), rng=0)
    assert r.p_x_err == r.p_z_err and r.chi == 0
    with pytest.raises(ValueError):
        run_trial(model, TrainConfig(10), construct_processing(np.ones(5), 2))
    with pytest.raises(ValueError):
        run_trial(model, TrainConfig(10), rng=0, test_mode="bogus")
    with pytest.raises(ValueError):
        run_trial(model, TrainConfig(10), rng=0, draw="bogus")


def test_aggregate_statistics():
    trials = [TrialResult(0.3, 0.2, 100 / 3), TrialResult(0.4, 0.3, 25.0)]
    agg = aggregate(trials, snr=1, gamma=1, n_train=4, d=3, k=2, n1=2, n2=2)
    assert agg.mean_p_x == pytest.approx(0.35)
    assert agg.std_p_x == pytest.approx(np.std([0.3, 0.4], ddof=1))
    one = aggregate(trials[:1], snr=1, gamma=1, n_train=4, d=3, k=2, n1=2, n2=2)
    assert one.single_trial and one.std_chi == 0.0
    with pytest.raises(ValueError):
        aggregate([], snr=1, gamma=1, n_train=4, d=3, k=2, n1=2, n2=2)


POINTS = [GridPoint(1.0, 1.0, 40, 5), GridPoint(0.5, 0.5, 60, 5), GridPoint(1.0, 0.25, 100, 3)]


def test_experiment_deterministic_and_order_free():
    a = run_experiment(20, POINTS, 5, seed=3)
    b = run_experiment(20, POINTS[::-1], 5, seed=3)
    assert [r.chis for r in a] == [r.chis for r in b]
    c = run_experiment(20, POINTS, 5, seed=4)
    assert [r.chis for r in a] != [r.chis for r in c]


def test_experiment_parallel_matches_serial():
    a = run_experiment(20, POINTS, 4, seed=1)
    b = run_experiment(20, POINTS, 4, seed=1, jobs=2)
    assert a == b


def test_experiment_stream_layout():
    # trial t of grid point i uses exactly substream(seed, i, TRIAL, t)
    from gmm_dpi.rng import MEAN_VECTOR
    res = run_experiment(12, POINTS[:1], 2, seed=5)[0]
    mu = make_mu(12, 1.0, 1.0, substream(5, 0, MEAN_VECTOR))
    model = GmmModel(mu)
    A = construct_processing(mu, 5)
    r1 = run_trial(model, TrainConfig(40, 1.0), A, substream(5, 0, TRIAL, 1))
    assert res.chis[1] == r1.chi


def test_failed_point_is_reported_not_raised():
    res = run_experiment(10, [GridPoint(1.0, 0.1, 5, 3), GridPoint(1.0, 1.0, 20, 3)], 2, seed=0)
    bad = [r for r in res if r.error]
    assert len(bad) == 1 and bad[0].n_train == 5 and math.isnan(bad[0].mean_chi)


@pytest.mark.parametrize("draw", ["moment", "samples"])
def test_learned_processing_runs(draw):
    res = run_experiment(30, POINTS[:1], 3, seed=0, a_source="learned", m_unlabeled=3000,
                         unlabeled_draw=draw)
    assert res[0].error is None and res[0].mean_chi > 0


def test_learned_needs_unlabeled():
    res = run_experiment(30, POINTS[:1], 3, seed=0, a_source="learned")
    assert "m_unlabeled" in res[0].error
    with pytest.raises(ValueError):
        run_experiment(30, POINTS[:1], 0, seed=0)
