import numpy as np
import pytest
from scipy import stats

from gmm_dpi.processing import ConvergenceError, ProcessingMatrix, SampledSecondMoment, \
    StreamingSecondMoment, apply_processing, construct_processing, empirical_second_moment, \
    learn_direction, load_processing, power_iteration, save_processing


@pytest.mark.parametrize("d,k", [(1, 1), (2, 1), (5, 5), (50, 7), (300, 299), (2000, 1000)])
def test_construct_orthonormal_and_mean_preserving(d, k):
    mu = np.random.default_rng(d + k).standard_normal(d)
    A = construct_processing(mu, k)
    assert (A.k, A.d) == (k, d)
    assert A.orthonormality_error() <= 1e-10
    assert np.linalg.norm(A.rows @ mu) == pytest.approx(np.linalg.norm(mu), rel=1e-12)
    np.testing.assert_allclose(A.rows[0], mu / np.linalg.norm(mu), atol=1e-15)


def test_construct_sparse_direction():
    # basis-aligned direction: the skipped coordinate is the direction itself
    A = construct_processing(np.eye(6)[3] * 2.0, 4)
    assert A.orthonormality_error() < 1e-15
    np.testing.assert_array_equal(A.rows[0], np.eye(6)[3])


def test_construct_zero_is_degenerate():
    A = construct_processing(np.zeros(5), 3)
    assert A.degenerate
    np.testing.assert_array_equal(A.rows, np.eye(5)[:3])


def test_construct_scale_invariant():
    mu = np.random.default_rng(0).standard_normal(30)
    np.testing.assert_allclose(construct_processing(mu, 10).rows,
                               construct_processing(7.5 * mu, 10).rows, atol=1e-14)


@pytest.mark.parametrize("k", [0, 11])
def test_construct_bad_k(k):
    with pytest.raises(ValueError):
        construct_processing(np.ones(10), k)


def test_matrix_read_only_and_shape_checks():
    A = construct_processing(np.ones(4), 2)
    with pytest.raises(ValueError):
        A.rows[0, 0] = 1.0
    with pytest.raises(ValueError):
        ProcessingMatrix(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        apply_processing(A, np.ones(5))


def test_apply_single_and_batch():
    A = construct_processing(np.arange(1.0, 6.0), 3)
    X = np.random.default_rng(1).standard_normal((4, 5))
    np.testing.assert_allclose(apply_processing(A, X), X @ A.rows.T)
    np.testing.assert_allclose(A.apply(X[0]), A.rows @ X[0])


def test_projected_noise_stays_white():
    A = construct_processing(np.random.default_rng(0).standard_normal(20), 6)
    Z = np.random.default_rng(2).standard_normal((200000, 20)) @ A.rows.T
    np.testing.assert_allclose(np.cov(Z.T), np.eye(6), atol=0.015)


def test_power_iteration_diagonal():
    est = power_iteration(np.diag([2.0, 1.0]), rng=0)
    np.testing.assert_allclose(est.direction, [1.0, 0.0], atol=1e-9)
    assert est.top_eigenvalue == pytest.approx(2.0)
    assert est.residual <= 1e-10


def test_power_iteration_against_eigh():
    rng = np.random.default_rng(4)
    B = rng.standard_normal((40, 40))
    M = B @ B.T
    w, V = np.linalg.eigh(M)
    est = power_iteration(M, rng=rng, tol=1e-12)
    assert est.top_eigenvalue == pytest.approx(w[-1], rel=1e-10)
    assert abs(est.direction @ V[:, -1]) == pytest.approx(1.0, abs=1e-9)
    assert est.direction[np.flatnonzero(est.direction)[0]] > 0


def test_power_iteration_no_gap():
    with pytest.raises(ConvergenceError, match="spectral gap"):
        power_iteration(np.eye(8), rng=0)


def test_power_iteration_budget_exhausted():
    M = np.diag([1.0, 0.999999, 0.5])
    with pytest.raises(ConvergenceError) as info:
        power_iteration(M, max_iters=3, rng=0)
    assert info.value.estimate is not None and info.value.residual > 1e-10


def test_power_iteration_rejects_bad_controls():
    with pytest.raises(ValueError):
        power_iteration(np.eye(2), max_iters=0)


def test_streaming_matches_dense():
    X = np.random.default_rng(5).standard_normal((1001, 12))
    V = np.random.default_rng(6).standard_normal((12, 2))
    np.testing.assert_allclose(StreamingSecondMoment(X, 64) @ V,
                               empirical_second_moment(X) @ V, rtol=1e-12, atol=1e-13)
    Y = X.copy()
    Y[:, 0] += 3.0
    a = learn_direction(Y, rng=1, streaming=True, chunk_size=100)
    b = learn_direction(Y, rng=1, streaming=False)
    assert abs(a.direction @ b.direction) == pytest.approx(1.0, abs=1e-9)


def test_learn_direction_recovers_mean():
    rng = np.random.default_rng(7)
    mu = np.zeros(30)
    mu[2] = 2.0
    y = np.where(rng.random(20000) < 0.5, -1.0, 1.0)
    X = y[:, None] * mu + rng.standard_normal((20000, 30))
    est = learn_direction(X, rng=rng)
    assert abs(est.direction[2]) > 0.995
    with pytest.raises(ValueError):
        learn_direction(X[:1])


def _second_moment_by_sampling(mu, sigma, m, rng):
    y = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    X = y[:, None] * mu + sigma * rng.standard_normal((m, mu.size))
    return X.T @ X / m


@pytest.mark.parametrize("m", [3, 40])
def test_sampled_moment_distribution(m):
    # the factored draw must match explicit sampling entry by entry in distribution
    mu = np.array([0.8, -0.3, 0.0])
    rng_a, rng_b = np.random.default_rng(10), np.random.default_rng(11)
    a = np.array([SampledSecondMoment(mu, 1.3, m, rng_a).dense() for _ in range(4000)])
    b = np.array([_second_moment_by_sampling(mu, 1.3, m, rng_b) for _ in range(4000)])
    for i, j in [(0, 0), (0, 1), (1, 1), (2, 2), (0, 2)]:
        assert stats.ks_2samp(a[:, i, j], b[:, i, j]).pvalue > 1e-3
        assert a[:, i, j].mean() == pytest.approx(b[:, i, j].mean(), abs=0.08)
    expected = 1.3**2 * np.eye(3) + np.outer(mu, mu)
    np.testing.assert_allclose(a.mean(0), expected, atol=0.05)


def test_sampled_moment_validates_m():
    with pytest.raises(ValueError):
        SampledSecondMoment(np.ones(3), 1.0, 1)


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_save_load_roundtrip(tmp_path, suffix):
    A = construct_processing(np.random.default_rng(0).standard_normal(9), 4)
    path = tmp_path / f"A{suffix}"
    save_processing(A, path)
    B = load_processing(path)
    np.testing.assert_array_equal(A.rows, B.rows)


def test_save_reports_unwritable(tmp_path):
    with pytest.raises(OSError):
        save_processing(construct_processing(np.ones(3), 1), tmp_path / "missing" / "A.csv")


def test_pythagoras_for_projector():
    rng = np.random.default_rng(8)
    A = construct_processing(rng.standard_normal(60), 17)
    for x in rng.standard_normal((20, 60)) * 10.0 ** rng.integers(-3, 4, size=(20, 1)):
        inside = A.rows @ x
        outside = x - A.rows.T @ inside
        assert inside @ inside + outside @ outside == pytest.approx(x @ x, rel=1e-8)


def test_construct_deterministic():
    mu = np.random.default_rng(9).standard_normal(25)
    np.testing.assert_array_equal(construct_processing(mu, 9).rows, construct_processing(mu, 9).rows)


def test_exact_moment_operator_gives_mean_direction():
    mu = np.random.default_rng(10).standard_normal(50)
    M = np.eye(50) + np.outer(mu, mu)
    est = power_iteration(M, rng=0, tol=1e-13)
    cos = abs(est.direction @ mu) / np.linalg.norm(mu)
    assert np.arccos(min(cos, 1.0)) < 1e-8
    assert est.top_eigenvalue == pytest.approx(1.0 + mu @ mu, rel=1e-12)


def test_constant_samples_give_their_direction():
    v = np.array([3.0, -1.0, 2.0, 0.5])
    est = learn_direction(np.tile(v, (10, 1)), rng=0)
    assert abs(est.direction @ v) / np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def _cosines(m, seeds, d=200, S=0.5625):
    from gmm_dpi.gmm import make_mu
    out = []
    for s in seeds:
        mu = make_mu(d, S, 1.0, np.random.default_rng(s))
        g = np.random.default_rng(1000 + s)
        est = power_iteration(SampledSecondMoment(mu, 1.0, m, g), d, rng=g)
        out.append(abs(est.direction @ mu) / np.linalg.norm(mu))
    return np.array(out)


def test_angle_error_decreases_with_m():
    seeds = range(20)
    means = [np.mean(np.arccos(np.clip(_cosines(m, seeds), -1, 1))) for m in (10**3, 10**4, 10**5)]
    assert means[0] >= means[1] >= means[2]


@pytest.mark.slow
def test_learned_cosine_at_desk_scale():
    # d=2000, m=50000: the population cosine sits just above 0.9, so check the seed average
    cos = _cosines(50_000, range(20), d=2000)
    assert cos.mean() >= 0.9
    assert cos.min() > 0.88


@pytest.mark.slow
def test_learned_cosine_with_many_samples():
    cos = _cosines(5_000_000, range(5), d=2000)
    assert cos.min() >= 0.99
