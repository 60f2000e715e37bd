"""Bayesian estimation of (beta, G) from stationary mRNA counts.

Unconstrained log/log-difference reparameterization under zero and
equality constraints, vague log-gamma priors, Monte Carlo likelihood via
truncated stick-breaking draws, and a Metropolis-within-Gibbs sampler.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import GeneratorMatrix, validate_generator
from .errors import MaskViolation, NonFiniteStart, NotIrreducible
from .mrna import MrnaModel, sample_intensities
from .msbm import TruncationPolicy

GAMMA_SHAPE = 0.01
GAMMA_RATE = 0.01

_TIE_TOL = 1e-9


def _parse_tie(tag: str):
    return tuple(int(t) for t in tag.split(":", 1)[1].split(","))


@dataclass(frozen=True)
class ConstraintMask:
    """Zero/equality structure of a candidate model.

    beta_pattern entries: "free" | "zero" | "tie:<k>"; g_pattern is an
    n x n grid of "free" | "zero" | "tie:<i>,<j>" with "" on the diagonal.
    Free beta entries are estimated under the strict ordering
    beta_first > ... > beta_last > 0.
    """

    n: int
    beta_pattern: tuple
    g_pattern: tuple

    def __post_init__(self):
        object.__setattr__(self, "beta_pattern", tuple(self.beta_pattern))
        object.__setattr__(self, "g_pattern", tuple(tuple(r) for r in self.g_pattern))
        if len(self.beta_pattern) != self.n or len(self.g_pattern) != self.n:
            raise MaskViolation("pattern dimensions disagree with n")
        if not self.free_beta:
            raise MaskViolation("at least one beta entry must be free")
        for tag in self.beta_pattern:
            if tag.startswith("tie:") and _parse_tie(tag)[0] not in self.free_beta:
                raise MaskViolation(f"beta tie target in {tag!r} is not free")
        for i, row in enumerate(self.g_pattern):
            for j, tag in enumerate(row):
                if i == j:
                    continue
                if tag.startswith("tie:") and _parse_tie(tag) not in self.free_g:
                    raise MaskViolation(f"g tie target in {tag!r} is not free")
        # structural irreducibility of the nonzero support
        support = np.zeros((self.n, self.n))
        for i, row in enumerate(self.g_pattern):
            for j, tag in enumerate(row):
                if i != j and tag != "zero":
                    support[i, j] = 1.0
        try:
            validate_generator(support)
        except NotIrreducible as err:
            raise MaskViolation("zero pattern leaves G reducible") from err

    @property
    def free_beta(self) -> tuple:
        return tuple(i for i, t in enumerate(self.beta_pattern) if t == "free")

    @property
    def free_g(self) -> tuple:
        return tuple(
            (i, j)
            for i in range(self.n)
            for j in range(self.n)
            if i != j and self.g_pattern[i][j] == "free"
        )

    @property
    def q(self) -> int:
        return len(self.free_beta) + len(self.free_g)

    def labels(self) -> list[str]:
        """Free-parameter names in eta order, original parameterization."""
        return [f"beta_{i + 1}" for i in self.free_beta] + [
            f"G_{i + 1},{j + 1}" for i, j in self.free_g
        ]

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "beta": list(self.beta_pattern),
             "g": [list(r) for r in self.g_pattern]}
        )

    @classmethod
    def from_json(cls, text: str) -> "ConstraintMask":
        obj = json.loads(text) if isinstance(text, str) else text
        return cls(int(obj["n"]), tuple(obj["beta"]), tuple(tuple(r) for r in obj["g"]))

    @classmethod
    def full(cls, n: int) -> "ConstraintMask":
        g = tuple(
            tuple("" if i == j else "free" for j in range(n)) for i in range(n)
        )
        return cls(n, ("free",) * n, g)


@dataclass(frozen=True)
class EtaVector:
    """Unconstrained parameter vector: log-differences of the ordered free
    beta entries followed by logs of the free G entries."""

    values: np.ndarray
    mask: ConstraintMask

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mask.q,):
            raise MaskViolation(f"eta length {values.shape} != q={self.mask.q}")
        object.__setattr__(self, "values", values)


def eta_from_params(model: MrnaModel, mask: ConstraintMask) -> EtaVector:
    """Transform a mask-conforming model into eta; exact inverse of
    params_from_eta."""
    beta, G = model.beta, model.G.entries
    if model.G.n != mask.n:
        raise MaskViolation(f"model has {model.G.n} states, mask {mask.n}")
    for i, tag in enumerate(mask.beta_pattern):
        if tag == "zero" and beta[i] != 0:
            raise MaskViolation(f"beta[{i}] = {beta[i]} should be zero")
        if tag.startswith("tie:"):
            (k,) = _parse_tie(tag)
            if abs(beta[i] - beta[k]) > _TIE_TOL * max(1.0, abs(beta[k])):
                raise MaskViolation(f"beta[{i}] != beta[{k}]")
    for i in range(mask.n):
        for j in range(mask.n):
            if i == j:
                continue
            tag = mask.g_pattern[i][j]
            if tag == "zero" and G[i, j] != 0:
                raise MaskViolation(f"G[{i},{j}] = {G[i, j]} should be zero")
            if tag.startswith("tie:"):
                k, l = _parse_tie(tag)
                if abs(G[i, j] - G[k, l]) > _TIE_TOL * max(1.0, abs(G[k, l])):
                    raise MaskViolation(f"G[{i},{j}] != G[{k},{l}]")
    free_b = beta[list(mask.free_beta)]
    if np.any(np.diff(free_b) >= 0) or free_b[-1] <= 0:
        raise MaskViolation("free beta entries must be strictly decreasing positive")
    head = np.log(np.concatenate([free_b[:-1] - free_b[1:], free_b[-1:]]))
    free_g_vals = np.array([G[i, j] for i, j in mask.free_g])
    if np.any(free_g_vals <= 0):
        raise MaskViolation("free G entries must be positive; mark zeros in the mask")
    tail = np.log(free_g_vals) if mask.free_g else np.empty(0)
    return EtaVector(np.concatenate([head, tail]), mask)


def params_from_eta(eta: EtaVector, delta: float = 1.0) -> MrnaModel:
    """Map eta back to a validated model under its mask."""
    mask = eta.mask
    r = len(mask.free_beta)
    exp_vals = np.exp(eta.values)
    free_b = np.cumsum(exp_vals[:r][::-1])[::-1]
    beta = np.zeros(mask.n)
    for idx, i in enumerate(mask.free_beta):
        beta[i] = free_b[idx]
    for i, tag in enumerate(mask.beta_pattern):
        if tag.startswith("tie:"):
            beta[i] = beta[_parse_tie(tag)[0]]
    G = np.zeros((mask.n, mask.n))
    for idx, (i, j) in enumerate(mask.free_g):
        G[i, j] = exp_vals[r + idx]
    for i in range(mask.n):
        for j in range(mask.n):
            tag = mask.g_pattern[i][j]
            if i != j and tag.startswith("tie:"):
                G[i, j] = G[_parse_tie(tag)]
    return MrnaModel(validate_generator(G), beta, delta)


def param_vector(model: MrnaModel, mask: ConstraintMask) -> np.ndarray:
    """Free parameters in original (beta, G) scale, eta order."""
    return np.concatenate(
        [
            model.beta[list(mask.free_beta)],
            [model.G.entries[i, j] for i, j in mask.free_g],
        ]
    )


def log_prior(eta_values: np.ndarray) -> float:
    """Sum of independent log-gamma prior log-densities: exp(eta_j) is
    Gamma(0.01, rate 0.01), Jacobian included."""
    a, b = GAMMA_SHAPE, GAMMA_RATE
    eta_values = np.asarray(eta_values, dtype=float)
    with np.errstate(over="ignore"):
        return float(
            np.sum(a * math.log(b) - gammaln(a) + a * eta_values - b * np.exp(eta_values))
        )


def _log_prior_term(v: float) -> float:
    a, b = GAMMA_SHAPE, GAMMA_RATE
    if v > 700.0:  # b * exp(v) overflows; the density is effectively zero
        return -math.inf
    return a * math.log(b) - float(gammaln(a)) + a * v - b * math.exp(v)


class LogLikResult(NamedTuple):
    value: float
    degenerate: bool


def log_likelihood_mc(
    data,
    model: MrnaModel,
    B: int,
    policy: TruncationPolicy,
    rng: np.random.Generator,
    clumped: bool = False,
) -> LogLikResult:
    """Monte Carlo log-likelihood of count data.

    One common set of B intensities serves every observation:
    sum_l log[(1/B) sum_b Poisson(M_l; lambda_b)], evaluated in
    log-sum-exp form.  If the inner average underflows to zero for some
    observation the result is -inf with the degenerate flag set.
    """
    data = np.asarray(data, dtype=np.int64)
    if data.size == 0 or np.any(data < 0):
        raise ValueError("data must be nonempty nonnegative counts")
    if B < 1:
        raise ValueError("B must be >= 1")
    _, lam = sample_intensities(model, B, policy, rng, clumped=clumped)
    uniq, counts = np.unique(data, return_counts=True)
    with np.errstate(divide="ignore"):
        log_lam = np.log(lam)
    # rows: unique observed counts; columns: intensity draws
    logpmf = uniq[:, None] * log_lam[None, :] - lam[None, :] - gammaln(uniq + 1)[:, None]
    if np.any(lam == 0):
        zero = lam == 0
        logpmf[:, zero] = np.where(uniq[:, None] == 0, 0.0, -np.inf)
    per_obs = logsumexp(logpmf, axis=1) - math.log(B)
    degenerate = bool(np.any(np.isneginf(per_obs)))
    return LogLikResult(float(counts @ per_obs), degenerate)


@dataclass(frozen=True)
class GibbsConfig:
    iterations: int = 5000
    burn_in: int = 2000
    proposal_sd: float = 0.25
    B: int = 5000
    policy: TruncationPolicy = TruncationPolicy(1e-6, 1e-3, 1000)
    seed: int | None = None
    adapt: bool = True
    adapt_window: int = 50
    adapt_low: float = 0.2
    adapt_high: float = 0.5
    share_lambda: bool = False
    clumped: bool = False
    delta: float = 1.0
    init_eta: tuple | None = None

    def __post_init__(self):
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")


@dataclass(frozen=True)
class PosteriorTrace:
    """Gibbs draws of eta with per-iteration acceptance flags."""

    draws: np.ndarray
    accepted: np.ndarray
    mask: ConstraintMask
    config: GibbsConfig
    seed: int
    proposal_sds: np.ndarray

    @property
    def acceptance_counts(self) -> np.ndarray:
        return self.accepted.sum(axis=0)

    @property
    def acceptance_rates(self) -> np.ndarray:
        return self.acceptance_counts / self.draws.shape[0]

    @property
    def post_burn_in(self) -> np.ndarray:
        return self.draws[self.config.burn_in :]

    @property
    def posterior_mean(self) -> np.ndarray:
        return self.post_burn_in.mean(axis=0)

    def posterior_mean_params(self) -> np.ndarray:
        """Posterior-mean estimate of the free parameters in the original
        (beta, G) scale: per-draw transform, then average."""
        total = np.zeros(self.mask.q)
        for row in self.post_burn_in:
            model = params_from_eta(EtaVector(row, self.mask), self.config.delta)
            total += param_vector(model, self.mask)
        return total / self.post_burn_in.shape[0]


def moment_init(data, mask: ConstraintMask, delta: float = 1.0) -> np.ndarray:
    """Method-of-moments starting point: free G entries 1, free beta
    spread geometrically (ratio 10) around delta * mean(M)."""
    m_bar = max(float(np.mean(data)), 1e-3)
    r = len(mask.free_beta)
    scale = m_bar * delta * r * 9.0 / (10.0**r - 1.0)
    free_b = scale * 10.0 ** np.arange(r - 1, -1, -1.0)
    head = np.log(np.concatenate([free_b[:-1] - free_b[1:], free_b[-1:]]))
    return np.concatenate([head, np.zeros(len(mask.free_g))])


def gibbs_fit(
    data,
    mask: ConstraintMask,
    config: GibbsConfig,
    loglik_fn: Callable[[np.ndarray], float] | None = None,
) -> PosteriorTrace:
    """Metropolis-within-Gibbs over the coordinates of eta.

    Each coordinate update proposes a Gaussian random-walk step and
    accepts on the posterior ratio; by default both the proposed and the
    current state are scored with fresh Monte Carlo likelihood draws.
    With share_lambda the two evaluations of a comparison reuse one RNG
    substream (common random numbers).  loglik_fn replaces the Monte
    Carlo likelihood (used to isolate proposal/acceptance correctness).
    """
    data = np.asarray(data, dtype=np.int64)
    seed = (
        config.seed
        if config.seed is not None
        else int(np.random.SeedSequence().entropy % (2**63))
    )
    rng = np.random.default_rng(seed)
    q = mask.q

    if loglik_fn is None:

        def evaluate(values: np.ndarray, gen: np.random.Generator) -> float:
            model = params_from_eta(EtaVector(values, mask), config.delta)
            return log_likelihood_mc(
                data, model, config.B, config.policy, gen, clumped=config.clumped
            ).value

    else:

        def evaluate(values: np.ndarray, gen: np.random.Generator) -> float:
            return float(loglik_fn(values))

    eta = (
        np.asarray(config.init_eta, dtype=float)
        if config.init_eta is not None
        else moment_init(data, mask, config.delta)
    )
    if eta.shape != (q,):
        raise MaskViolation(f"init eta length {eta.shape} != q={q}")
    start_ll = evaluate(eta, rng)
    if not np.isfinite(start_ll):
        raise NonFiniteStart(f"initial log-likelihood {start_ll}")

    sds = np.full(q, config.proposal_sd, dtype=float)
    draws = np.empty((config.iterations, q))
    accepted = np.zeros((config.iterations, q), dtype=bool)
    window_acc = np.zeros(q)
    for it in range(config.iterations):
        for j in range(q):
            proposal = eta.copy()
            proposal[j] = eta[j] + sds[j] * rng.standard_normal()
            if config.share_lambda:
                sub = rng.spawn(1)[0]
                state = sub.bit_generator.state
                ll_prop = evaluate(proposal, sub)
                sub.bit_generator.state = state
                ll_cur = evaluate(eta, sub)
            else:
                ll_prop = evaluate(proposal, rng)
                ll_cur = evaluate(eta, rng)
            log_alpha = (
                ll_prop
                + _log_prior_term(proposal[j])
                - ll_cur
                - _log_prior_term(eta[j])
            )
            if math.log(rng.random()) < log_alpha:
                eta = proposal
                accepted[it, j] = True
                window_acc[j] += 1
        draws[it] = eta
        if config.adapt and it < config.burn_in and (it + 1) % config.adapt_window == 0:
            rates = window_acc / config.adapt_window
            sds[rates > config.adapt_high] *= 1.5
            sds[rates < config.adapt_low] /= 1.5
            window_acc[:] = 0
    return PosteriorTrace(draws, accepted, mask, config, seed, sds)


def rmse(estimates, truth) -> np.ndarray:
    """Per-coordinate root mean squared error in the original (beta, G)
    parameterization."""
    estimates = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimates.ndim != 2 or estimates.shape[0] == 0 or estimates.shape[1] != truth.shape[0]:
        raise ValueError(f"bad estimate stack shape {estimates.shape}")
    return np.sqrt(np.mean((estimates - truth) ** 2, axis=0))
