"""The mean-preserving semi-orthonormal operator ``A`` and how to learn it.

``A`` is ``k x d`` with ``A A^T = I_k`` and ``||A mu|| = ||mu||``: its first row
is the unit mean direction and the remaining rows are an orthonormal set
orthogonal to it.  The direction itself is the top eigenvector of the
mixture's second moment ``sigma^2 I + mu mu^T``, which can be estimated from
unlabeled data.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import as_generator

STREAMING_MIN_DIM = 4096
_BLOCK = 128


class ConvergenceError(RuntimeError):
    """Power iteration failed; ``residual`` holds the last relative residual."""

    def __init__(self, message, residual=float("nan"), estimate=None):
        super().__init__(message)
        self.residual = residual
        self.estimate = estimate


@dataclass(frozen=True)
class ProcessingMatrix:
    rows: np.ndarray
    # built for mu = 0: rows are orthonormal but carry no mean direction
    degenerate: bool = False

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] > rows.shape[1]:
            raise ValueError(f"rows must be a k x d array with k <= d, got {rows.shape}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def orthonormality_error(self) -> float:
        """``max |A A^T - I|``."""
        return float(np.max(np.abs(self.rows @ self.rows.T - np.eye(self.k))))

    def apply(self, x):
        return apply_processing(self, x)


@dataclass(frozen=True)
class DirectionEstimate:
    direction: np.ndarray
    top_eigenvalue: float
    iterations_used: int
    residual: float = 0.0


def _orthonormalize_block(B):
    """Classical Gram-Schmidt with one re-orthogonalisation pass, row-wise, in place."""
    for i in range(B.shape[0]):
        v = B[i]
        for _ in range(2):
            if i:
                v -= (B[:i] @ v) @ B[:i]
        nrm = np.linalg.norm(v)
        if nrm < 1e-12:
            raise ValueError("basis completion produced a dependent vector")
        v /= nrm
    return B


def construct_processing(mu_direction, k: int) -> ProcessingMatrix:
    """Build ``A`` whose first row is ``mu_direction / ||mu_direction||``.

    Rows 2..k come from Gram-Schmidt over the standard basis vectors in index
    order, skipping the coordinate where the direction is largest (that
    keeps the set linearly independent).  A direction with norm below 1e-8 is
    treated as ``mu = 0`` and the first ``k`` standard basis vectors are
    returned with ``degenerate=True``.
    """
    u = np.array(mu_direction, dtype=float).reshape(-1)
    d = u.size
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    nrm = np.linalg.norm(u)
    if nrm < 1e-8:
        return ProcessingMatrix(np.eye(d)[:k], degenerate=True)
    u = u / nrm
    rows = np.zeros((k, d))
    rows[0] = u
    skip = int(np.argmax(np.abs(u)))
    idx = [i for i in range(d) if i != skip][: k - 1]
    rows[np.arange(1, k), idx] = 1.0
    for start in range(1, k, _BLOCK):
        stop = min(start + _BLOCK, k)
        B = rows[start:stop]
        prev = rows[:start]
        for _ in range(2):
            B -= (B @ prev.T) @ prev
        _orthonormalize_block(B)
    return ProcessingMatrix(rows)


def apply_processing(A: ProcessingMatrix, x):
    """``z = A x`` for a single d-vector or row-wise for an ``(n, d)`` array."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != A.d:
        raise ValueError(f"expected last dimension {A.d}, got {x.shape[-1]}")
    return x @ A.rows.T


def empirical_second_moment(samples) -> np.ndarray:
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty (m, d) sample array")
    return (X.T @ X) / X.shape[0]


def _pairwise_sum(parts):
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


class StreamingSecondMoment:
    """``V -> Sigma_m V`` computed chunk by chunk, never forming ``d x d``.

    Chunk partials are combined by a fixed pairwise tree so the result is
    bitwise stable for a given ``chunk_size``.
    """

    def __init__(self, samples, chunk_size: int = 4096):
        self.samples = np.asarray(samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[0] == 0:
            raise ValueError("need a non-empty (m, d) sample array")
        self.chunk_size = chunk_size

    @property
    def shape(self):
        d = self.samples.shape[1]
        return (d, d)

    def __matmul__(self, V):
        X = self.samples
        parts = [
            X[i : i + self.chunk_size].T @ (X[i : i + self.chunk_size] @ V)
            for i in range(0, X.shape[0], self.chunk_size)
        ]
        return _pairwise_sum(parts) / X.shape[0]


class SampledSecondMoment:
    """Draw of ``Sigma_m`` for ``m`` unlabeled mixture samples, in factored form.

    Rotating the ``m`` samples by an orthogonal matrix whose first row is the
    (unknown) sign pattern divided by ``sqrt(m)`` shows that
    ``m Sigma_m = w w^T + sigma^2 W`` exactly in distribution, where
    ``w = sqrt(m) mu + sigma g`` with ``g ~ N(0, I_d)`` and ``W`` is an
    independent central Wishart(m - 1, I_d) matrix.  ``W`` is drawn with the
    Bartlett factor ``L L^T`` (or directly as ``G^T G`` when m - 1 < d), which
    costs O(d^2) memory instead of O(m d) samples.
    """

    def __init__(self, mu, sigma: float, m: int, rng=None):
        if m < 2:
            raise ValueError("need m >= 2 unlabeled samples")
        rng = as_generator(rng)
        mu = np.asarray(mu, dtype=float)
        d = mu.size
        self.m = int(m)
        self.sigma = float(sigma)
        self.w = np.sqrt(m) * mu + sigma * rng.standard_normal(d)
        dof = m - 1
        if dof >= d:
            L = np.tril(rng.standard_normal((d, d)), -1)
            L[np.diag_indices(d)] = np.sqrt(rng.chisquare(dof - np.arange(d)))
            self.factor = L
        else:
            self.factor = rng.standard_normal((dof, d)).T

    @property
    def shape(self):
        d = self.w.size
        return (d, d)

    def __matmul__(self, V):
        V = np.asarray(V, dtype=float)
        F = self.factor
        out = np.multiply.outer(self.w, self.w @ V) + self.sigma**2 * (F @ (F.T @ V))
        return out / self.m

    def dense(self) -> np.ndarray:
        return self @ np.eye(self.w.size)


def _canonical_sign(v):
    nz = np.flatnonzero(v)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def power_iteration(operator, d=None, max_iters: int = 10_000, tol: float = 1e-10, rng=None,
                    gap_tol: float = 1e-8) -> DirectionEstimate:
    """Top eigenvector of a symmetric PSD operator.

    ``operator`` is a ``d x d`` array or any object supporting ``operator @ V``
    for ``(d, p)`` arrays.  Two vectors are iterated together with a
    Rayleigh-Ritz step; iteration stops once the leading residual satisfies
    ``||M v - lambda v|| <= tol * lambda``.  The second Ritz value is used to
    detect a missing spectral gap, in which case the top direction is not
    identifiable and ``ConvergenceError`` is raised, as it is when
    ``max_iters`` runs out.
    """
    if d is None:
        d = operator.shape[0]
    if max_iters < 1 or tol <= 0:
        raise ValueError("need max_iters >= 1 and tol > 0")
    rng = as_generator(rng)
    p = min(2, d)
    V, _ = np.linalg.qr(rng.standard_normal((d, p)))
    residual = np.inf
    for it in range(1, max_iters + 1):
        W = operator @ V
        H = V.T @ W
        theta, Y = np.linalg.eigh(0.5 * (H + H.T))
        order = np.argsort(theta)[::-1]
        theta, Y = theta[order], Y[:, order]
        V = V @ Y
        W = W @ Y
        lam = theta[0]
        if lam <= 0:
            raise ConvergenceError("operator has no positive eigenvalue", residual)
        residual = np.linalg.norm(W[:, 0] - lam * V[:, 0]) / lam
        if residual <= tol:
            if p > 1 and theta[0] - theta[1] <= gap_tol * theta[0]:
                raise ConvergenceError(
                    f"no detectable spectral gap: leading Ritz values {theta[0]:.12g} and "
                    f"{theta[1]:.12g} coincide (residual {residual:.3e})",
                    residual,
                )
            v = _canonical_sign(V[:, 0] / np.linalg.norm(V[:, 0]))
            return DirectionEstimate(v, float(lam), it, float(residual))
        V, _ = np.linalg.qr(W)
    v = _canonical_sign(V[:, 0] / np.linalg.norm(V[:, 0]))
    raise ConvergenceError(
        f"power iteration did not converge in {max_iters} iterations "
        f"(relative residual {residual:.3e}, tol {tol:.1e})",
        float(residual),
        DirectionEstimate(v, float(lam), max_iters, float(residual)),
    )


def learn_direction(unlabeled, max_iters: int = 10_000, tol: float = 1e-10, rng=None,
                    streaming=None, chunk_size: int = 4096) -> DirectionEstimate:
    """Estimate ``+-mu / ||mu||`` from unlabeled mixture samples.

    The second moment is materialised for ``d <= 4096`` and applied in
    streaming form above that (or whenever ``streaming=True``).
    """
    X = np.asarray(unlabeled, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two unlabeled samples as an (m, d) array")
    d = X.shape[1]
    if streaming is None:
        streaming = d > STREAMING_MIN_DIM
    op = StreamingSecondMoment(X, chunk_size) if streaming else empirical_second_moment(X)
    return power_iteration(op, d, max_iters=max_iters, tol=tol, rng=rng)


def save_processing(A: ProcessingMatrix, path) -> None:
    """Write the rows of ``A`` row-major.

    ``.csv``: a ``k,d`` line then ``k`` lines of ``d`` values.  Anything else is
    binary: little-endian int64 ``k``, int64 ``d``, then ``k*d`` float64.
    """
    path = Path(path)
    try:
        if path.suffix == ".csv":
            with path.open("w") as fh:
                fh.write(f"{A.k},{A.d}\n")
                np.savetxt(fh, A.rows, delimiter=",", fmt="%.17g")
        else:
            with path.open("wb") as fh:
                fh.write(struct.pack("<qq", A.k, A.d))
                fh.write(np.ascontiguousarray(A.rows, dtype="<f8").tobytes())
    except OSError as exc:
        raise OSError(f"cannot write processing matrix to {path}: {exc}") from exc


def load_processing(path) -> ProcessingMatrix:
    path = Path(path)
    if path.suffix == ".csv":
        with path.open() as fh:
            k, d = (int(t) for t in fh.readline().split(","))
            rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    else:
        raw = path.read_bytes()
        k, d = struct.unpack("<qq", raw[:16])
        rows = np.frombuffer(raw[16:], dtype="<f8")
    return ProcessingMatrix(np.asarray(rows, dtype=float).reshape(k, d))
