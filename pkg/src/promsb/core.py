"""Generator-matrix algebra for continuous-time promoter chains.

Validation, stationary vectors, time-reversal adjoints, theta
decompositions into stochastic kernels, and the three-state refractory
rate recovery from eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    DimensionMismatch,
    NegativeOffDiagonal,
    NonPositiveRecovery,
    NotIrreducible,
    SingularSystem,
    ThetaTooSmall,
)

ROW_SUM_TOL = 1e-12
BALANCE_TOL = 1e-10


@dataclass(frozen=True)
class GeneratorMatrix:
    """Validated CTMC rate matrix: nonnegative off-diagonals, zero row sums,
    strongly connected positive support."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def theta(self) -> float:
        """Largest diagonal magnitude, the smallest valid decomposition rate."""
        return float(np.max(-np.diag(self.entries)))

    def scaled(self, factor: float) -> "GeneratorMatrix":
        """G/factor is again a generator for factor > 0."""
        return GeneratorMatrix(self.entries / factor)

    def __eq__(self, other) -> bool:
        return isinstance(other, GeneratorMatrix) and np.array_equal(
            self.entries, other.entries
        )


@dataclass(frozen=True)
class ThetaDecomposition:
    """G = theta * (Q - I) with Q row-stochastic."""

    theta: float
    kernel: np.ndarray


def validate_generator(raw) -> GeneratorMatrix:
    """Validate a raw square rate matrix.

    The diagonal is recomputed as the negative off-diagonal row sum; the
    supplied diagonal is ignored.  Raises NegativeOffDiagonal or
    NotIrreducible.
    """
    entries = np.array(raw, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {entries.shape}")
    n = entries.shape[0]
    if n < 2:
        raise DimensionMismatch("a generator needs at least 2 states")
    off = entries.copy()
    np.fill_diagonal(off, 0.0)
    if np.any(off < 0):
        i, j = np.argwhere(off < 0)[0]
        raise NegativeOffDiagonal(f"negative rate {entries[i, j]} at ({i}, {j})")
    np.fill_diagonal(off, -off.sum(axis=1))
    support = csr_matrix((off > 0).astype(np.int8))
    n_comp, _ = connected_components(support, directed=True, connection="strong")
    if n_comp != 1:
        raise NotIrreducible(f"support graph has {n_comp} strongly connected components")
    off.setflags(write=False)
    return GeneratorMatrix(off)


def stationary_vector(G: GeneratorMatrix) -> np.ndarray:
    """Unique probability vector with mu @ G = 0.

    Solved as the augmented least-squares system [G^T; 1^T] mu = [0; 1]
    via a QR-based solver.
    """
    n = G.n
    A = np.vstack([G.entries.T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    mu, _, rank, _ = scipy.linalg.lstsq(A, b, lapack_driver="gelsy")
    if rank < n:
        raise SingularSystem(f"balance system rank {rank} < {n}")
    residual = np.abs(mu @ G.entries)
    if residual.max() > BALANCE_TOL or abs(mu.sum() - 1.0) > BALANCE_TOL:
        raise SingularSystem(f"balance residual {residual.max():.3e} too large")
    if np.any(mu <= 0):
        raise SingularSystem("stationary vector not strictly positive")
    mu.setflags(write=False)
    return mu


def adjoint(G: GeneratorMatrix, mu: np.ndarray | None = None) -> GeneratorMatrix:
    """Time reversal D(mu)^{-1} G^T D(mu) with respect to the stationary mu.

    The adjoint is itself a generator with the same stationary vector, and
    the operation is an involution.
    """
    if mu is None:
        mu = stationary_vector(G)
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (G.n,):
        raise DimensionMismatch(f"mu shape {mu.shape} incompatible with n={G.n}")
    rev = (G.entries.T * mu) / mu[:, None]
    rev.setflags(write=False)
    return GeneratorMatrix(rev)


def decompose(G: GeneratorMatrix, theta: float | None = None) -> ThetaDecomposition:
    """Split G = theta (Q - I) with Q = I + G/theta row-stochastic.

    Defaults to theta = max_i |G[i,i]|, the choice with the fastest
    stick-breaking series convergence.
    """
    theta_min = G.theta
    if theta is None:
        theta = theta_min
    elif theta < theta_min * (1 - 1e-12):
        raise ThetaTooSmall(f"theta={theta} below theta(G)={theta_min}")
    Q = np.eye(G.n) + G.entries / theta
    # guard against a -0.0 or tiny negative diagonal at theta = theta(G)
    np.clip(Q, 0.0, None, out=Q)
    Q.setflags(write=False)
    return ThetaDecomposition(float(theta), Q)


def refractory_recover(lam1, lam2, lam3, lam4):
    """Recover (a, b, c, d) of the three-state refractory chain

        G = [[-a, a, 0], [b, -b-c, c], [0, d, -d]]

    from the nonzero eigenvalues (lam1, lam2) of -G and the eigenvalues
    (lam3, lam4) of -G with the first row and column removed.  Complex
    conjugate pairs are accepted; only the (real) sums and products enter.
    """
    s1 = np.real(lam1 + lam2)
    p1 = np.real(lam1 * lam2)
    s2 = np.real(lam3 + lam4)
    p2 = np.real(lam3 * lam4)
    a = s1 - s2
    if a <= 0:
        raise NonPositiveRecovery(f"lam1+lam2 - (lam3+lam4) = {a} <= 0")
    if p1 - p2 <= 0:
        raise NonPositiveRecovery(f"lam1*lam2 - lam3*lam4 = {p1 - p2} <= 0")
    b = s2 - (p1 - p2) / a
    if b <= 0:
        raise NonPositiveRecovery(f"recovered b = {b} <= 0")
    c = (p1 - p2) / a - p2 / b
    d = p2 / b
    if c <= 0 or d <= 0:
        raise NonPositiveRecovery(f"recovered c = {c}, d = {d} not both positive")
    return float(a), float(b), float(c), float(d)
