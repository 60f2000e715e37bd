"""Markovian stick-breaking samplers and moments.

GEM residual allocation, truncated sampling of the Markovian
stick-breaking measure with its initial atom (plain and clumped
constructions), truncation-length selection from the Poisson tail bound,
and conditional mixed moments of the measure.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import stats
from sympy.utilities.iterables import multiset_permutations

from .core import GeneratorMatrix, decompose, stationary_vector
from .errors import CombinatorialExplosion, SetsOverlap, ZeroDiagonal


@dataclass(frozen=True)
class TruncationPolicy:
    """Residual-mass tolerance epsilon, probability budget p, hard cap."""

    epsilon: float = 1e-6
    p: float = 1e-3
    max_terms: int = 10_000

    def __post_init__(self):
        if not (0 < self.epsilon < 1 and 0 < self.p < 1 and self.max_terms >= 1):
            raise ValueError(f"invalid truncation policy {self}")


@dataclass(frozen=True)
class TruncationLength:
    length: int
    clamped: bool

    def __int__(self) -> int:
        return self.length


@dataclass(frozen=True)
class StickSample:
    """Truncated stick-breaking realization.

    weights[j] = Z_j * prod_{i<j}(1 - Z_i); residual is the unallocated
    mass, reported rather than redistributed.
    """

    atoms: np.ndarray
    weights: np.ndarray
    residual: float

    @property
    def first_atom(self) -> int:
        return int(self.atoms[0])

    def coordinates(self, n: int, lump_residual: bool = True) -> np.ndarray:
        """Probability vector over n states; the residual is lumped onto
        the last atom so the result sums to one."""
        x = np.zeros(n)
        np.add.at(x, self.atoms, self.weights)
        if lump_residual:
            x[self.atoms[-1]] += self.residual
        return x

    def to_json(self) -> str:
        return json.dumps(
            {
                "atoms": [int(a) for a in self.atoms],
                "weights": [float(w) for w in self.weights],
                "residual": float(self.residual),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "StickSample":
        obj = json.loads(text)
        return cls(
            atoms=np.asarray(obj["atoms"], dtype=np.int64),
            weights=np.asarray(obj["weights"], dtype=float),
            residual=float(obj["residual"]),
        )


def truncation_length(theta: float, policy: TruncationPolicy) -> TruncationLength:
    """Number of stick terms so the residual exceeds epsilon with
    probability at most p.

    Returns 1 + w where w is the smallest integer with
    PoissonCDF(w; -theta*log(epsilon)) >= 1 - p, clamped to max_terms.
    """
    rate = -theta * math.log(policy.epsilon)
    if rate <= 0:
        return TruncationLength(1, False)
    w = int(stats.poisson.ppf(1 - policy.p, rate))
    # ppf can land one off at CDF plateaus; settle the boundary exactly
    while stats.poisson.cdf(w, rate) < 1 - policy.p:
        w += 1
    while w > 0 and stats.poisson.cdf(w - 1, rate) >= 1 - policy.p:
        w -= 1
    length = 1 + w
    if length > policy.max_terms:
        return TruncationLength(policy.max_terms, True)
    return TruncationLength(length, False)


def sample_gem(theta: float, length: int, rng: np.random.Generator):
    """Draw `length` GEM(theta) weights and the leftover mass."""
    z = rng.beta(1.0, theta, size=length)
    remaining = np.cumprod(1.0 - z)
    weights = z * np.concatenate(([1.0], remaining[:-1]))
    return weights, float(remaining[-1])


def _categorical(cum_rows: np.ndarray, states: np.ndarray, rng) -> np.ndarray:
    """One Markov transition for every row of `states` given per-state
    cumulative transition probabilities."""
    u = rng.random(states.shape[0])
    return np.sum(u[:, None] > cum_rows[states], axis=1)


def sample_msbmi(
    G: GeneratorMatrix, policy: TruncationPolicy, rng: np.random.Generator
) -> StickSample:
    """One truncated draw of (first atom, measure): stationary chain under
    Q = I + G/theta(G) with GEM(theta) weights."""
    atoms, weights, residual = sample_msbmi_batch(G, policy, rng, 1)
    return StickSample(atoms[0], weights[0], float(residual[0]))


def sample_msbmi_batch(
    G: GeneratorMatrix, policy: TruncationPolicy, rng: np.random.Generator, size: int
):
    """Vectorized plain sampler: (atoms, weights, residual) arrays with a
    common truncation length."""
    dec = decompose(G)
    mu = stationary_vector(G)
    length = truncation_length(dec.theta, policy).length
    cum_q = np.cumsum(dec.kernel, axis=1)
    atoms = np.empty((size, length), dtype=np.int64)
    atoms[:, 0] = rng.choice(G.n, size=size, p=mu)
    for j in range(1, length):
        atoms[:, j] = _categorical(cum_q, atoms[:, j - 1], rng)
    z = rng.beta(1.0, dec.theta, size=(size, length))
    remaining = np.cumprod(1.0 - z, axis=1)
    weights = z.copy()
    weights[:, 1:] *= remaining[:, :-1]
    return atoms, weights, remaining[:, -1]


def _clumped_ingredients(G: GeneratorMatrix):
    diag = -np.diag(G.entries)
    if np.any(diag == 0):
        raise ZeroDiagonal("clumped kernel undefined for a zero diagonal entry")
    kernel = G.entries / diag[:, None]
    np.fill_diagonal(kernel, 0.0)
    return diag, np.cumsum(kernel, axis=1)


def sample_msbmi_clumped(
    G: GeneratorMatrix, policy: TruncationPolicy, rng: np.random.Generator
) -> StickSample:
    """One draw by the clumped construction: non-repeating chain with
    kernel G[i,j]/(-G[i,i]) and sticks Beta(1, -G[T_j,T_j]).

    The path stops as soon as the realized residual drops below epsilon,
    or at max_terms.
    """
    diag, cum_k = _clumped_ingredients(G)
    mu = stationary_vector(G)
    atoms = [int(rng.choice(G.n, p=mu))]
    weights = []
    remaining = 1.0
    while True:
        state = atoms[-1]
        z = 1.0 - rng.random() ** (1.0 / diag[state])
        weights.append(z * remaining)
        remaining *= 1.0 - z
        if remaining < policy.epsilon or len(weights) >= policy.max_terms:
            break
        atoms.append(int(_categorical(cum_k, np.array([state]), rng)[0]))
    return StickSample(np.asarray(atoms), np.asarray(weights), remaining)


def weighted_sums_plain(
    G: GeneratorMatrix,
    values: np.ndarray,
    policy: TruncationPolicy,
    rng: np.random.Generator,
    size: int,
):
    """Plain-sampler accumulation of sum_j P_j * values[T_j] without
    storing paths.

    values has shape (n_states, k).  Returns (first_atoms, sums,
    last_atoms, residual).
    """
    dec = decompose(G)
    mu = stationary_vector(G)
    length = truncation_length(dec.theta, policy).length
    cum_q = np.cumsum(dec.kernel, axis=1)
    state = rng.choice(G.n, size=size, p=mu)
    first = state.copy()
    remaining = np.ones(size)
    sums = np.zeros((size, values.shape[1]))
    for j in range(length):
        if j > 0:
            state = _categorical(cum_q, state, rng)
        z = rng.beta(1.0, dec.theta, size=size)
        sums += (z * remaining)[:, None] * values[state]
        remaining *= 1.0 - z
    return first, sums, state, remaining


def weighted_sums_clumped(
    diag: np.ndarray,
    cum_kernel: np.ndarray,
    init_probs: np.ndarray,
    values: np.ndarray,
    policy: TruncationPolicy,
    rng: np.random.Generator,
    size: int,
    kernel_targets: np.ndarray | None = None,
):
    """Clumped accumulation of sum_j R_j * values[S_j] with per-path
    truncation at realized residual < epsilon.

    diag holds the stick parameters Beta(1, diag[state]); cum_kernel the
    per-state cumulative transition probabilities.  When the kernel is
    stored padded (cum_kernel column t is the cumulative probability of
    kernel_targets[state, t]), pass kernel_targets.  Returns
    (first_atoms, sums, last_atoms, residual).
    """
    state = rng.choice(len(init_probs), size=size, p=init_probs)
    first = state.copy()
    remaining = np.ones(size)
    sums = np.zeros((size, values.shape[1]))
    active = np.arange(size)
    for term in range(policy.max_terms):
        if term > 0:
            s = state[active]
            pos = _categorical(cum_kernel, s, rng)
            if kernel_targets is not None:
                state[active] = kernel_targets[s, pos]
            else:
                state[active] = pos
        s = state[active]
        z = 1.0 - rng.random(active.shape[0]) ** (1.0 / diag[s])
        sums[active] += (z * remaining[active])[:, None] * values[s]
        remaining[active] *= 1.0 - z
        active = active[remaining[active] >= policy.epsilon]
        if active.shape[0] == 0:
            break
    return first, sums, state, remaining


def sample_x_batch(
    G: GeneratorMatrix,
    policy: TruncationPolicy,
    rng: np.random.Generator,
    size: int,
    clumped: bool = False,
    lump_residual: bool = True,
):
    """Batch of (first_atom, coordinate vector) draws from the measure.

    With lump_residual the leftover mass goes to the last visited atom,
    making each row an exact probability vector.
    """
    eye = np.eye(G.n)
    if clumped:
        diag, cum_k = _clumped_ingredients(G)
        mu = stationary_vector(G)
        first, x, last, residual = weighted_sums_clumped(
            diag, cum_k, mu, eye, policy, rng, size
        )
    else:
        first, x, last, residual = weighted_sums_plain(G, eye, policy, rng, size)
    if lump_residual:
        x[np.arange(size), last] += residual
    return first, x


def _multinomial_count(counts) -> int:
    total = sum(counts)
    out = 1
    for c in counts:
        out *= math.comb(total, c)
        total -= c
    return out


def msbm_conditional_mixed_moment(
    G: GeneratorMatrix,
    sets,
    counts,
    x: int,
    input_is_adjoint: bool = False,
    perm_cap: int = 1_000_000,
) -> float:
    """E[prod_j nu(A_j)^{k_j} | T = x] for (T, nu) distributed as the
    stick-breaking measure of G.

    Averages, over all multiset permutations sigma of the exponent
    multiset, the x-entry of the reverse-ordered product of
    (I - G/j)^{-1} D(A_{sigma_j}) applied to the all-ones vector.  With
    input_is_adjoint, (T, nu) is the measure of the adjoint generator and
    the stationary-weighted row form is used instead (same G argument).
    """
    counts = [int(c) for c in counts]
    if len(sets) != len(counts) or any(c < 0 for c in counts):
        raise ValueError("sets and nonnegative counts must align")
    masks = []
    seen = np.zeros(G.n, dtype=bool)
    for a in sets:
        idx = np.asarray(a, dtype=np.int64)
        if np.any(seen[idx]):
            raise SetsOverlap("subsets must be pairwise disjoint")
        seen[idx] = True
        mask = np.zeros(G.n)
        mask[idx] = 1.0
        masks.append(mask)
    k = sum(counts)
    if k == 0:
        return 1.0
    n_perms = _multinomial_count(counts)
    if n_perms > perm_cap:
        raise CombinatorialExplosion(f"{n_perms} permutations exceed cap {perm_cap}")
    factors = [
        scipy.linalg.lu_factor(np.eye(G.n) - G.entries / j) for j in range(1, k + 1)
    ]
    mu = stationary_vector(G) if input_is_adjoint else None
    items = [j for j, c in enumerate(counts) for _ in range(c)]
    total = 0.0
    for sigma in multiset_permutations(items):
        if input_is_adjoint:
            w = mu.copy()
            for j, set_idx in enumerate(sigma):
                w = w * masks[set_idx]
                w = scipy.linalg.lu_solve(factors[j], w, trans=1)
            total += w[x] / mu[x]
        else:
            v = np.ones(G.n)
            for j, set_idx in enumerate(sigma):
                v = masks[set_idx] * v
                v = scipy.linalg.lu_solve(factors[j], v)
            total += v[x]
    return total / n_perms
