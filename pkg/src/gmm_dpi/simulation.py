"""Monte-Carlo protocol: plug-in classifier, error before/after processing, efficiency."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as streams
from .gmm import GmmModel, LabeledDataset, TrainConfig, make_mu, sample_class_means, \
    sample_dataset, sample_test_points
from .processing import ProcessingMatrix, SampledSecondMoment, construct_processing, \
    learn_direction, power_iteration
from .special_math import q_function

log = logging.getLogger(__name__)


class DegenerateClassifierError(ValueError):
    pass


@dataclass(frozen=True)
class MeanEstimates:
    mu1_hat: np.ndarray
    mu2_hat: np.ndarray

    def __post_init__(self):
        m1 = np.asarray(self.mu1_hat, dtype=float)
        m2 = np.asarray(self.mu2_hat, dtype=float)
        if m1.shape != m2.shape or m1.ndim != 1:
            raise ValueError("class means must be vectors of equal length")
        if not (np.all(np.isfinite(m1)) and np.all(np.isfinite(m2))):
            raise ValueError("class means must be finite")
        object.__setattr__(self, "mu1_hat", m1)
        object.__setattr__(self, "mu2_hat", m2)

    def project(self, A: ProcessingMatrix) -> "MeanEstimates":
        return MeanEstimates(A.rows @ self.mu1_hat, A.rows @ self.mu2_hat)


@dataclass(frozen=True)
class TrialResult:
    p_x_err: float
    p_z_err: float
    chi: float


@dataclass(frozen=True)
class AggregateResult:
    snr: float
    gamma: float
    n_train: int
    d: int
    k: int
    n1: int
    n2: int
    trials: int
    mean_chi: float = math.nan
    std_chi: float = math.nan
    mean_p_x: float = math.nan
    std_p_x: float = math.nan
    mean_p_z: float = math.nan
    std_p_z: float = math.nan
    # trials == 1: std fields are 0 by convention, not estimates
    single_trial: bool = False
    error: str | None = None
    chis: tuple = field(default=(), repr=False)


def estimate_means(data: LabeledDataset) -> MeanEstimates:
    if len(data.class1_samples) == 0 or len(data.class2_samples) == 0:
        raise ValueError("classifier undefined without both class means")
    return MeanEstimates(data.class1_samples.mean(axis=0), data.class2_samples.mean(axis=0))


def decision_statistic(x, means: MeanEstimates):
    """``(m2 - m1)^T x - (||m2||^2 - ||m1||^2) / 2``; positive means class 2."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != means.mu1_hat.size:
        raise ValueError(f"expected dimension {means.mu1_hat.size}, got {x.shape[-1]}")
    diff = means.mu2_hat - means.mu1_hat
    t = 0.5 * (means.mu2_hat @ means.mu2_hat - means.mu1_hat @ means.mu1_hat)
    return x @ diff - t


def plugin_classify(x, means: MeanEstimates):
    """Label of the nearer estimated mean; exact ties go to class 1.

    Works on one vector (returns an int) or row-wise on an ``(n, d)`` array.
    """
    w = decision_statistic(x, means)
    labels = np.where(w > 0, 2, 1)
    return int(labels) if labels.ndim == 0 else labels


def exact_conditional_error(means: MeanEstimates, model: GmmModel) -> float:
    """Test error of ``plugin_classify`` for fixed means, integrated over the model.

    Given the means, the decision statistic is Gaussian within each class with
    standard deviation ``sigma ||m2 - m1||``, so the error is a sum of two Q terms.
    """
    if means.mu1_hat.size != model.d:
        raise ValueError("means and model dimensions differ")
    diff = means.mu2_hat - means.mu1_hat
    scale = model.sigma * np.linalg.norm(diff)
    if scale == 0:
        raise DegenerateClassifierError("estimated class means coincide")
    t = 0.5 * (means.mu2_hat @ means.mu2_hat - means.mu1_hat @ means.mu1_hat)
    proj = diff @ model.mu
    # class 1 errs when w > 0 with E[w] = -proj - t; class 2 errs when w <= 0 with E[w] = proj - t
    return 0.5 * q_function((t + proj) / scale) + 0.5 * q_function((proj - t) / scale)


def monte_carlo_error(means: MeanEstimates, x, labels) -> float:
    return float(np.mean(plugin_classify(x, means) != labels))


def _chi(p_x, p_z):
    return 100.0 * (p_x - p_z) / p_x if p_x > 0 else math.nan


def run_trial(model: GmmModel, config: TrainConfig, A: ProcessingMatrix | None = None,
              rng=None, test_mode: str = "exact", n_test: int = 100_000,
              draw: str = "means", chunk: int = 20_000) -> TrialResult:
    """One training draw, error before and after ``A``, and the efficiency.

    ``draw="means"`` samples the two class means from their exact sampling
    distribution, ``draw="samples"`` materialises the training set.  Both give
    the same result distribution.  ``test_mode`` is ``"exact"`` (closed-form
    error given the means) or ``"monte_carlo"`` (``n_test`` fresh points,
    shared by the raw and processed classifier).
    """
    rng = streams.as_generator(rng)
    if A is not None and A.d != model.d:
        raise ValueError(f"processing matrix expects d={A.d}, model has d={model.d}")
    if draw == "means":
        means = MeanEstimates(*sample_class_means(model, config, rng))
    elif draw == "samples":
        means = estimate_means(sample_dataset(model, config, rng))
    else:
        raise ValueError(f"unknown draw mode {draw!r}")
    zmeans = means.project(A) if A is not None else None

    if test_mode == "exact":
        p_x = exact_conditional_error(means, model)
        p_z = exact_conditional_error(zmeans, model.project(A)) if A is not None else p_x
    elif test_mode == "monte_carlo":
        wrong_x = wrong_z = 0
        for start in range(0, n_test, chunk):
            x, y = sample_test_points(model, min(chunk, n_test - start), rng)
            wrong_x += int(np.sum(plugin_classify(x, means) != y))
            if A is not None:
                wrong_z += int(np.sum(plugin_classify(x @ A.rows.T, zmeans) != y))
        p_x = wrong_x / n_test
        p_z = wrong_z / n_test if A is not None else p_x
    else:
        raise ValueError(f"unknown test mode {test_mode!r}")
    return TrialResult(p_x, p_z, _chi(p_x, p_z))


def aggregate(trials: list[TrialResult], **point) -> AggregateResult:
    chi = np.array([t.chi for t in trials])
    px = np.array([t.p_x_err for t in trials])
    pz = np.array([t.p_z_err for t in trials])
    n = len(trials)
    if n < 1:
        raise ValueError("need at least one trial")
    sd = (lambda a: float(np.std(a, ddof=1))) if n > 1 else (lambda a: 0.0)
    return AggregateResult(
        trials=n, mean_chi=float(chi.mean()), std_chi=sd(chi), mean_p_x=float(px.mean()),
        std_p_x=sd(px), mean_p_z=float(pz.mean()), std_p_z=sd(pz), single_trial=n == 1,
        chis=tuple(chi.tolist()), **point,
    )


@dataclass(frozen=True)
class GridPoint:
    snr: float
    gamma: float
    n_train: int
    k: int


def canonical_order(points):
    return sorted(points, key=lambda p: (p.snr, p.gamma, p.n_train, p.k))


def build_processing(mu, k, sigma, seed, index, a_source="true_direction", m_unlabeled=None,
                     unlabeled_draw="moment", max_iters=10_000, tol=1e-10):
    """Processing matrix for one grid point, from ``mu`` itself or learned."""
    if a_source == "true_direction":
        return construct_processing(mu, k)
    if a_source != "learned":
        raise ValueError(f"unknown a_source {a_source!r}")
    if not m_unlabeled or m_unlabeled < 2:
        raise ValueError("learned processing needs m_unlabeled >= 2")
    g = streams.substream(seed, index, streams.UNLABELED)
    if unlabeled_draw == "moment":
        op = SampledSecondMoment(mu, sigma, m_unlabeled, g)
        est = power_iteration(op, mu.size, max_iters=max_iters, tol=tol, rng=g)
    elif unlabeled_draw == "samples":
        y = np.where(g.random(m_unlabeled) < 0.5, -1.0, 1.0)
        X = y[:, None] * mu + sigma * g.standard_normal((m_unlabeled, mu.size))
        est = learn_direction(X, max_iters=max_iters, tol=tol, rng=g)
    else:
        raise ValueError(f"unknown unlabeled_draw {unlabeled_draw!r}")
    return construct_processing(est.direction, k)


def run_grid_point(index, point: GridPoint, d, sigma, trials, seed, test_mode="exact",
                   n_test=100_000, a_source="true_direction", m_unlabeled=None,
                   unlabeled_draw="moment", draw="means") -> AggregateResult:
    cfg = TrainConfig(point.n_train, point.gamma)
    info = dict(snr=point.snr, gamma=point.gamma, n_train=point.n_train, d=d, k=point.k,
                n1=cfg.n1, n2=cfg.n2)
    try:
        mu = make_mu(d, point.snr, sigma, streams.substream(seed, index, streams.MEAN_VECTOR))
        model = GmmModel(mu, sigma)
        A = build_processing(mu, point.k, sigma, seed, index, a_source, m_unlabeled,
                             unlabeled_draw)
        results = [
            run_trial(model, cfg, A, streams.substream(seed, index, streams.TRIAL, t),
                      test_mode, n_test, draw)
            for t in range(trials)
        ]
        out = aggregate(results, **info)
    except (ValueError, RuntimeError) as exc:
        log.error("grid point %s failed: %s", point, exc)
        return AggregateResult(trials=trials, error=str(exc), **info)
    log.info("S=%g gamma=%g N_train=%d k=%d: chi=%.3f +- %.3f", point.snr, point.gamma,
             point.n_train, point.k, out.mean_chi, out.std_chi)
    return out


def run_experiment(d, points, trials, seed, sigma=1.0, test_mode="exact", n_test=100_000,
                   a_source="true_direction", m_unlabeled=None, unlabeled_draw="moment",
                   draw="means", jobs=1) -> list[AggregateResult]:
    """Aggregate efficiency over ``trials`` for every grid point.

    Each point gets a fresh mean vector and its own ``A``; trials re-draw only
    the training set.  Streams are keyed by the point's position in canonical
    ``(snr, gamma, n_train, k)`` order, so results do not depend on input order
    or on ``jobs``.  Failed points come back with ``error`` set.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ordered = canonical_order(points)
    kw = dict(d=d, sigma=sigma, trials=trials, seed=seed, test_mode=test_mode, n_test=n_test,
              a_source=a_source, m_unlabeled=m_unlabeled, unlabeled_draw=unlabeled_draw,
              draw=draw)
    if jobs <= 1:
        return [run_grid_point(i, p, **kw) for i, p in enumerate(ordered)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run_grid_point, i, p, **kw) for i, p in enumerate(ordered)]
        return [f.result() for f in futures]
