"""Bounded joint mRNA-protein model and its clumped stationary sampler.

The joint process is viewed as a promoter process on the product space
(state, mRNA count) with production rates alpha*m and death rate gamma,
realized at a finite mRNA capacity c chosen by tail tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import CapacityOverflow, SingularSystem
from .mrna import MrnaModel
from .msbm import TruncationPolicy, weighted_sums_clumped

STATE_CAP = 200_000


@dataclass(frozen=True)
class ProteinModel:
    """mRNA model plus per-mRNA protein production rate alpha, protein
    degradation rate gamma, and mRNA capacity c."""

    base: MrnaModel
    alpha: float
    gamma: float
    c: int

    def __post_init__(self):
        if self.alpha <= 0 or self.gamma <= 0:
            raise ValueError("alpha and gamma must be positive")
        if self.c < 1:
            raise ValueError("capacity c must be >= 1")

    @property
    def n_states(self) -> int:
        return self.base.G.n * (self.c + 1)

    def state_index(self, i, m):
        return i * (self.c + 1) + m

    def state_tuple(self, s):
        return s // (self.c + 1), s % (self.c + 1)

    @cached_property
    def bounded(self) -> "BoundedGenerator":
        return build_bounded_generator(self)

    @cached_property
    def stationary(self) -> np.ndarray:
        return self.bounded.stationary_vector()


@dataclass(frozen=True)
class BoundedGenerator:
    """Sparse generator on the product space, lexicographic state order
    (i, m) -> i*(c+1) + m; banded with at most n+3 nonzeros per row."""

    matrix: scipy.sparse.csr_matrix
    n: int
    c: int

    @property
    def n_states(self) -> int:
        return self.n * (self.c + 1)

    def stationary_vector(self) -> np.ndarray:
        """Exact stationary vector by sparse LU on the balance system with
        one equation replaced by the normalization."""
        N = self.n_states
        A = self.matrix.T.tolil()
        A[0, :] = 1.0
        b = np.zeros(N)
        b[0] = 1.0
        try:
            lu = scipy.sparse.linalg.splu(A.tocsc())
            mu = lu.solve(b)
        except RuntimeError as err:
            raise SingularSystem("sparse stationary solve failed") from err
        residual = np.abs(mu @ self.matrix)
        if residual.max() > 1e-8 * max(1.0, abs(self.matrix).max()):
            raise SingularSystem(f"balance residual {residual.max():.3e}")
        return mu


def build_bounded_generator(model: ProteinModel) -> BoundedGenerator:
    """Assemble the capacity-c generator: promoter switching at fixed m,
    mRNA birth beta_i blocked at m = c, death delta*m."""
    n, c = model.base.G.n, model.c
    N = n * (c + 1)
    if N > STATE_CAP:
        raise CapacityOverflow(f"{N} product states exceed cap {STATE_CAP}")
    G = model.base.G.entries
    beta = model.base.beta
    delta = model.base.delta
    rows, cols, vals = [], [], []
    for i in range(n):
        for m in range(c + 1):
            s = i * (c + 1) + m
            diag = G[i, i] - delta * m
            for j in range(n):
                if j != i and G[i, j] > 0:
                    rows.append(s)
                    cols.append(j * (c + 1) + m)
                    vals.append(G[i, j])
            if m < c and beta[i] > 0:
                rows.append(s)
                cols.append(s + 1)
                vals.append(beta[i])
                diag -= beta[i]
            if m > 0:
                rows.append(s)
                cols.append(s - 1)
                vals.append(delta * m)
            rows.append(s)
            cols.append(s)
            vals.append(diag)
    matrix = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(N, N))
    return BoundedGenerator(matrix, n, c)


def clumped_kernel(model: ProteinModel):
    """Stick parameters and padded transition tables of the clumped chain.

    The kernel rows come from the adjoint of the bounded generator with
    the diagonal zeroed; the adjoint and direct diagonals coincide, so
    the Beta parameters are -diag(G~)/gamma directly.  Returns
    (diag_over_gamma, cum_probs, targets) with rows padded to the widest
    row by repeating the final entry.
    """
    bg = model.bounded
    mu = model.stationary
    adj = scipy.sparse.csr_matrix(
        bg.matrix.T.multiply(mu[None, :]).multiply(1.0 / mu[:, None])
    )
    adj.setdiag(0.0)
    adj.eliminate_zeros()
    diag = -bg.matrix.diagonal()
    N = bg.n_states
    indptr, indices, data = adj.indptr, adj.indices, adj.data
    width = int(np.diff(indptr).max())
    cum = np.ones((N, width))
    targets = np.zeros((N, width), dtype=np.int64)
    for s in range(N):
        lo, hi = indptr[s], indptr[s + 1]
        probs = data[lo:hi] / diag[s]
        k = hi - lo
        cum[s, :k] = np.cumsum(probs)
        cum[s, k - 1 :] = 1.0
        targets[s, :k] = indices[lo:hi]
        targets[s, k:] = indices[hi - 1]
    return diag / model.gamma, cum, targets


def sample_protein_batch(
    model: ProteinModel,
    size: int,
    policy: TruncationPolicy,
    rng: np.random.Generator,
):
    """Vectorized stationary draws of (e, m, p).

    Runs the clumped chain over the product space from the exact bounded
    stationary law, accumulates the protein intensity
    (alpha/gamma) * sum m * X(i, m) with the residual lumped onto the last
    atom, and draws P Poisson.
    """
    diag, cum, targets = clumped_kernel(model)
    mu = model.stationary
    m_of_state = np.array(
        [model.state_tuple(s)[1] for s in range(model.n_states)], dtype=float
    )
    first, sums, last, residual = weighted_sums_clumped(
        diag, cum, mu, m_of_state[:, None], policy, rng, size, kernel_targets=targets
    )
    intensity = (model.alpha / model.gamma) * (sums[:, 0] + residual * m_of_state[last])
    p = rng.poisson(intensity)
    e, m = model.state_tuple(first)
    return e, m, p


def sample_protein_stationary(
    model: ProteinModel, policy: TruncationPolicy, rng: np.random.Generator
):
    """One stationary draw of (promoter state, mRNA count, protein count)."""
    e, m, p = sample_protein_batch(model, 1, policy, rng)
    return int(e[0]), int(m[0]), int(p[0])


def _stirling2(l: int) -> list[int]:
    """Row l of Stirling numbers of the second kind, exact integers."""
    row = [1]
    for n in range(1, l + 1):
        prev = row
        row = [0] * (n + 1)
        for k in range(1, n + 1):
            row[k] = (prev[k] if k < n else 0) * k + prev[k - 1]
    return row


def joint_moment(model: ProteinModel, k: int, l: int) -> float:
    """E[(M^c)^k (P^c)^l] at stationarity of the bounded joint process.

    Protein powers expand into falling factorials by Stirling numbers;
    each factorial moment is the matrix-product formula for the promoter
    view with production rates alpha*m and death rate gamma, with the
    weight m^k carried in the trailing vector.  All solves are sparse.
    """
    if k < 0 or l < 0:
        raise ValueError("moment orders must be nonnegative")
    bg = model.bounded
    mu = model.stationary
    N = bg.n_states
    m_of_state = np.asarray(
        [model.state_tuple(s)[1] for s in range(N)], dtype=float
    )
    b = model.alpha * m_of_state / model.gamma
    weight = m_of_state**k if k > 0 else np.ones(N)
    eye = scipy.sparse.identity(N, format="csc")
    stirling = _stirling2(l)
    total = float(mu @ weight) if l == 0 else 0.0
    # row = mu^T prod_{j=1..r} D(b)(I - G~/(gamma j))^{-1}, grown factor by
    # factor on the right
    row = mu.copy()
    for r in range(1, l + 1):
        lu = scipy.sparse.linalg.splu(eye - bg.matrix.tocsc() / (model.gamma * r))
        row = lu.solve(row * b, trans="T")
        if stirling[r]:
            total += stirling[r] * float(row @ weight)
    return total


def boundary_mass(base: MrnaModel, c: int) -> float:
    """Stationary probability of the capped mRNA level m = c."""
    model = ProteinModel(base, alpha=1.0, gamma=1.0, c=c)
    mu = model.stationary
    return float(mu[np.arange(base.G.n) * (c + 1) + c].sum())


def choose_capacity(base: MrnaModel, tail_tol: float) -> int:
    """Smallest capacity whose stationary boundary mass is below tail_tol,
    found by doubling then bisection."""
    if not 0 < tail_tol < 1:
        raise ValueError("tail_tol must be in (0, 1)")
    c = 1
    while boundary_mass(base, c) >= tail_tol:
        c *= 2
        if base.G.n * (c + 1) > STATE_CAP:
            raise CapacityOverflow(f"tail tolerance {tail_tol} not met below state cap")
    lo, hi = max(1, c // 2), c
    while lo < hi:
        mid = (lo + hi) // 2
        if boundary_mass(base, mid) < tail_tol:
            hi = mid
        else:
            lo = mid + 1
    return hi
