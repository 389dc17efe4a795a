"""Symmetric two-class Gaussian mixture: model, training budget and sampling.

Class 1 is ``N(-mu, sigma^2 I_d)``, class 2 is ``N(mu, sigma^2 I_d)``, each with
prior 1/2.  The theory assumes bounded entries of ``mu`` and ``sigma``
independent of ``d``; neither is enforced here.
"""

from dataclasses import dataclass, field

import numpy as np

from .rng import as_generator


@dataclass(frozen=True)
class GmmModel:
    mu: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        if mu.size < 1:
            raise ValueError("mu must have at least one coordinate")
        if not np.all(np.isfinite(mu)):
            raise ValueError("mu must be finite")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def d(self) -> int:
        return self.mu.size

    def class_mean(self, label: int) -> np.ndarray:
        if label == 1:
            return -self.mu
        if label == 2:
            return self.mu
        raise ValueError(f"labels are 1 or 2, got {label}")

    def project(self, A) -> "GmmModel":
        """Model of ``z = A x``: mean ``A mu``, same sigma (rows of A are orthonormal)."""
        rows = getattr(A, "rows", A)
        return GmmModel(rows @ self.mu, self.sigma)


@dataclass(frozen=True)
class TrainConfig:
    """Labeled training budget ``n_train`` split with imbalance ``gamma``.

    ``n1 = int(n_train / (1 + gamma))`` and ``n2 = int(gamma * n_train / (1 + gamma))``
    with floor rounding, so ``n1 + n2`` may fall short of ``n_train`` by one.
    """

    n_train: int
    gamma: float = 1.0
    n1: int = field(init=False)
    n2: int = field(init=False)

    def __post_init__(self):
        if int(self.n_train) != self.n_train or self.n_train < 0:
            raise ValueError(f"n_train must be a non-negative integer, got {self.n_train}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        n = int(self.n_train)
        object.__setattr__(self, "n_train", n)
        object.__setattr__(self, "n1", int(n / (1 + self.gamma)))
        object.__setattr__(self, "n2", int(self.gamma * n / (1 + self.gamma)))


@dataclass(frozen=True)
class LabeledDataset:
    class1_samples: np.ndarray
    class2_samples: np.ndarray

    def __post_init__(self):
        x1 = np.asarray(self.class1_samples, dtype=float)
        x2 = np.asarray(self.class2_samples, dtype=float)
        if x1.ndim != 2 or x2.ndim != 2 or x1.shape[1] != x2.shape[1]:
            raise ValueError("class samples must be 2-D arrays with a common dimension")
        object.__setattr__(self, "class1_samples", x1)
        object.__setattr__(self, "class2_samples", x2)

    @property
    def d(self) -> int:
        return self.class1_samples.shape[1]

    def to_xy(self):
        """Stacked ``(X, y)`` with labels 1 and 2, class 1 first."""
        X = np.vstack([self.class1_samples, self.class2_samples])
        y = np.repeat([1, 2], [len(self.class1_samples), len(self.class2_samples)])
        return X, y


def snr(model: GmmModel) -> float:
    """Separation quality ``||mu||^2 / sigma^2``."""
    return float(model.mu @ model.mu) / model.sigma**2


def make_mu(d: int, target_snr: float, sigma: float = 1.0, rng=None) -> np.ndarray:
    """Random mean with uniform direction and ``||mu|| = sigma * sqrt(target_snr)``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if target_snr < 0:
        raise ValueError(f"target_snr must be non-negative, got {target_snr}")
    rng = as_generator(rng)
    v = rng.standard_normal(d)
    if target_snr == 0:
        return np.zeros(d)
    return sigma * np.sqrt(target_snr) * v / np.linalg.norm(v)


def sample_dataset(model: GmmModel, config: TrainConfig, rng=None) -> LabeledDataset:
    rng = as_generator(rng)
    s = model.sigma
    x1 = -model.mu + s * rng.standard_normal((config.n1, model.d))
    x2 = model.mu + s * rng.standard_normal((config.n2, model.d))
    return LabeledDataset(x1, x2)


def sample_class_means(model: GmmModel, config: TrainConfig, rng=None):
    """Draw the two per-class sample means without materialising the samples.

    The mean of ``n_j`` i.i.d. ``N(m_j, sigma^2 I)`` draws is exactly
    ``N(m_j, sigma^2 / n_j I)``, so this matches ``sample_dataset`` followed by
    averaging in distribution at O(d) cost.
    """
    if config.n1 < 1 or config.n2 < 1:
        raise ValueError("both classes need at least one training sample")
    rng = as_generator(rng)
    s = model.sigma
    m1 = -model.mu + (s / np.sqrt(config.n1)) * rng.standard_normal(model.d)
    m2 = model.mu + (s / np.sqrt(config.n2)) * rng.standard_normal(model.d)
    return m1, m2


def sample_test_points(model: GmmModel, n: int, rng=None):
    """``n`` labeled test points, labels uniform on {1, 2}."""
    rng = as_generator(rng)
    labels = np.where(rng.random(n) < 0.5, 1, 2)
    sign = np.where(labels == 2, 1.0, -1.0)
    x = sign[:, None] * model.mu + model.sigma * rng.standard_normal((n, model.d))
    return x, labels


def sample_test_point(model: GmmModel, rng=None):
    x, labels = sample_test_points(model, 1, rng)
    return x[0], int(labels[0])
