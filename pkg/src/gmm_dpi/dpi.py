"""Bayes error before and after a channel, for finite Markov chains ``y -> x -> z``."""

from dataclasses import dataclass

import numpy as np

from .rng import as_generator

MAX_ALPHABET = 64
_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteChain:
    """``prior[j] = P(y = j+1)``, ``emission[xi, j] = p(x = xi | y = j+1)``,
    ``channel[zeta, xi] = p(z = zeta | x = xi)``; columns are distributions."""

    prior: np.ndarray
    emission: np.ndarray
    channel: np.ndarray

    def __post_init__(self):
        prior = np.asarray(self.prior, dtype=float)
        emission = np.asarray(self.emission, dtype=float)
        channel = np.asarray(self.channel, dtype=float)
        problems = []
        if prior.shape != (2,) or np.any(prior < 0) or abs(prior.sum() - 1) > _TOL:
            problems.append("prior must be two non-negative numbers summing to 1")
        if emission.ndim != 2 or emission.shape[1] != 2:
            problems.append("emission must be |X| x 2")
        if channel.ndim != 2 or (emission.ndim == 2 and channel.shape[1] != emission.shape[0]):
            problems.append("channel must be |Z| x |X|")
        for name, table in (("emission", emission), ("channel", channel)):
            if table.ndim == 2:
                if np.any(table < 0) or np.any(np.abs(table.sum(axis=0) - 1) > _TOL):
                    problems.append(f"{name} columns must be probability vectors")
                if table.shape[0] > MAX_ALPHABET:
                    problems.append(f"{name} alphabet exceeds {MAX_ALPHABET} symbols")
        if problems:
            raise ValueError("; ".join(problems))
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "emission", emission)
        object.__setattr__(self, "channel", channel)

    def then(self, channel) -> "DiscreteChain":
        """Chain with ``channel`` applied after the current one."""
        return DiscreteChain(self.prior, self.emission, np.asarray(channel) @ self.channel)


def _min_sum(prior, likelihood):
    return float(np.minimum(prior[0] * likelihood[:, 0], prior[1] * likelihood[:, 1]).sum())


def bayes_error_x(chain: DiscreteChain) -> float:
    return _min_sum(chain.prior, chain.emission)


def bayes_error_z(chain: DiscreteChain) -> float:
    return _min_sum(chain.prior, chain.channel @ chain.emission)


@dataclass(frozen=True)
class DpiReport:
    err_x: float
    err_z: float
    holds: bool
    slack: float


def verify_dpi(chain: DiscreteChain) -> DpiReport:
    ex, ez = bayes_error_x(chain), bayes_error_z(chain)
    return DpiReport(ex, ez, ex <= ez + _TOL, ez - ex)


def random_chain(rng=None, nx=None, nz=None, max_alphabet: int = 8) -> DiscreteChain:
    """Chain with Dirichlet(1, ..., 1) columns and a uniform-random prior."""
    rng = as_generator(rng)
    nx = nx or int(rng.integers(1, max_alphabet + 1))
    nz = nz or int(rng.integers(1, max_alphabet + 1))
    p1 = rng.random()
    return DiscreteChain(
        np.array([p1, 1.0 - p1]),
        rng.dirichlet(np.ones(nx), size=2).T,
        rng.dirichlet(np.ones(nz), size=nx).T,
    )
