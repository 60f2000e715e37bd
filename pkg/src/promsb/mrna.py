"""Stationary sampling and moments for the multistate promoter mRNA process.

At stationarity the promoter state and latent measure are a stick-breaking
pair driven by the time-reversed generator scaled by the degradation rate,
and the mRNA count is Poisson with intensity beta . X / delta.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy import stats

from .core import GeneratorMatrix, adjoint, stationary_vector
from .errors import DimensionMismatch, SingularSystem
from .msbm import TruncationPolicy, sample_x_batch


@dataclass(frozen=True)
class MrnaModel:
    """Promoter generator G, per-state production rates beta, degradation
    rate delta."""

    G: GeneratorMatrix
    beta: np.ndarray
    delta: float = 1.0

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        if beta.shape != (self.G.n,):
            raise DimensionMismatch(f"beta shape {beta.shape} vs n={self.G.n}")
        if np.any(beta < 0) or not np.any(beta > 0):
            raise ValueError("beta must be nonnegative with at least one positive entry")
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    @cached_property
    def mu(self) -> np.ndarray:
        return stationary_vector(self.G)

    @cached_property
    def reversed_scaled(self) -> GeneratorMatrix:
        """adjoint(G)/delta, the generator of the stationary stick-breaking
        pair; equals adjoint(G/delta) since delta only rescales."""
        return adjoint(self.G, self.mu).scaled(self.delta)


@dataclass(frozen=True)
class MrnaDraw:
    e: int
    m: int
    x: np.ndarray
    lam: float


def sample_intensities(
    model: MrnaModel,
    size: int,
    policy: TruncationPolicy,
    rng: np.random.Generator,
    clumped: bool = False,
):
    """Batch of (promoter states, Poisson intensities beta . X / delta).

    The residual stick mass is lumped onto the last atom, keeping the
    intensity inside [min beta, max beta]/delta.
    """
    first, x = sample_x_batch(
        model.reversed_scaled, policy, rng, size, clumped=clumped
    )
    return first, x @ (model.beta / model.delta)


def sample_stationary(
    model: MrnaModel,
    policy: TruncationPolicy,
    rng: np.random.Generator,
    clumped: bool = False,
) -> MrnaDraw:
    """One stationary draw of (promoter state, mRNA count, latent measure)."""
    first, x = sample_x_batch(model.reversed_scaled, policy, rng, 1, clumped=clumped)
    lam = float(x[0] @ (model.beta / model.delta))
    m = int(rng.poisson(lam))
    return MrnaDraw(int(first[0]), m, x[0], lam)


def sample_stationary_batch(
    model: MrnaModel,
    size: int,
    policy: TruncationPolicy,
    rng: np.random.Generator,
    clumped: bool = False,
):
    """Vectorized stationary draws; returns (e, m, lam) arrays."""
    e, lam = sample_intensities(model, size, policy, rng, clumped=clumped)
    m = rng.poisson(lam)
    return e, m, lam


def mrna_factorial_moment(model: MrnaModel, k: int) -> float:
    """E[M(M-1)...(M-k+1)] at stationarity.

    Evaluates mu^T prod_{j=1..k} D(beta/delta) (I - G/(delta j))^{-1} 1.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return 1.0
    n = model.G.n
    bd = model.beta / model.delta
    v = np.ones(n)
    for j in range(k, 0, -1):
        try:
            v = scipy.linalg.solve(np.eye(n) - model.G.entries / (model.delta * j), v)
        except scipy.linalg.LinAlgError as err:  # pragma: no cover
            raise SingularSystem(f"resolvent solve failed at j={j}") from err
        v = bd * v
    return float(model.mu @ v)


def mrna_pmf_series(model: MrnaModel, i: int, m: int, n_terms: int = 200):
    """Alternating-series value of the stationary pmf at (promoter i,
    count m).

    Returns (value, converged); converged requires two consecutive term
    magnitudes below 1e-12 and a final value inside [0, 1].  Catastrophic
    cancellation for large beta/delta clears neither check, in which case
    the flag is False and the raw partial sum is still returned.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    n = model.G.n
    bd = model.beta / model.delta
    row = model.mu.copy()
    # row <- mu^T (1/m!) prod_{k=1..m} D(beta/delta)(I - G/(delta k))^{-1}
    for k in range(1, m + 1):
        row = (row * bd) / k
        row = scipy.linalg.solve(
            (np.eye(n) - model.G.entries / (model.delta * k)).T, row
        )
    value = row[i]
    term = row
    last, prev = np.inf, np.inf
    for j in range(1, n_terms):
        term = term * bd
        term = scipy.linalg.solve(
            (np.eye(n) - model.G.entries / (model.delta * (m + j))).T, term
        )
        term = -term / j
        value += term[i]
        prev, last = last, abs(term[i])
        # two consecutive negligible terms guard against a zero crossing
        if max(last, prev) < 1e-12:
            break
    converged = max(last, prev) < 1e-12 and 0.0 <= value <= 1.0
    return float(value), bool(converged)


def mrna_pmf_mc(
    model: MrnaModel,
    B: int,
    policy: TruncationPolicy,
    rng: np.random.Generator,
    m_max: int | None = None,
    clumped: bool = False,
    chunk: int = 20_000,
):
    """Monte Carlo pmf table over (promoter state, count).

    Entry (i, m) is the average over B intensity draws of
    1(E_b = i) * PoissonPmf(m; lambda_b).  When m_max is omitted the table
    runs to the largest count seen in companion Poisson draws plus 10.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    e, lam = sample_intensities(model, B, policy, rng, clumped=clumped)
    if m_max is None:
        m_max = int(rng.poisson(lam).max()) + 10
    grid = np.arange(m_max + 1)
    table = np.zeros((model.G.n, m_max + 1))
    for start in range(0, B, chunk):
        lam_c = lam[start : start + chunk]
        e_c = e[start : start + chunk]
        pmf = stats.poisson.pmf(grid[None, :], lam_c[:, None])
        for i in range(model.G.n):
            sel = e_c == i
            if sel.any():
                table[i] += pmf[sel].sum(axis=0)
    return table / B
