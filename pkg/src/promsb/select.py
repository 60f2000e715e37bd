"""BIC model selection among constrained candidates fit to count data."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .infer import (
    ConstraintMask,
    EtaVector,
    GibbsConfig,
    gibbs_fit,
    params_from_eta,
)
from .mrna import MrnaModel, sample_intensities
from .msbm import TruncationPolicy


def bic(loglik: float, q: int, n_obs: int) -> float:
    return -2.0 * loglik + q * math.log(n_obs)


@dataclass(frozen=True)
class CandidateResult:
    name: str
    q: int
    loglik: float
    loglik_se: float
    bic: float
    bic_se: float
    selected: bool
    failed: bool
    eta: np.ndarray | None


def _loglik_batched(
    data: np.ndarray,
    model: MrnaModel,
    B: int,
    policy: TruncationPolicy,
    rng: np.random.Generator,
    n_batches: int = 20,
):
    """Log-likelihood from B intensity draws plus a batch-spread standard
    error (spread of the per-batch log-likelihoods over sqrt(batches))."""
    per_batch = max(B // n_batches, 1)
    uniq, counts = np.unique(data, return_counts=True)
    lg = gammaln(uniq + 1)
    batch_ll = np.empty(n_batches)
    # running log of sum_b pmf(m | lambda_b) per unique count
    running = np.full(uniq.shape, -np.inf)
    for b in range(n_batches):
        _, lam = sample_intensities(model, per_batch, policy, rng)
        with np.errstate(divide="ignore"):
            log_lam = np.log(lam)
        logpmf = uniq[:, None] * log_lam[None, :] - lam[None, :] - lg[:, None]
        if np.any(lam == 0):
            logpmf[:, lam == 0] = np.where(uniq[:, None] == 0, 0.0, -np.inf)
        chunk = logsumexp(logpmf, axis=1)
        batch_ll[b] = float(counts @ (chunk - math.log(per_batch)))
        running = np.logaddexp(running, chunk)
    total = float(counts @ (running - math.log(per_batch * n_batches)))
    se = float(np.std(batch_ll, ddof=1) / math.sqrt(n_batches))
    return total, se


def select_model(
    data,
    candidates: list[tuple[str, ConstraintMask]],
    fit_config: GibbsConfig,
    B_eval: int = 100_000,
    seed: int | None = None,
) -> list[CandidateResult]:
    """Fit every candidate, score each posterior-mean model by Monte Carlo
    log-likelihood, and mark the BIC winner.

    A candidate whose fit or evaluation fails (non-finite likelihood at
    the start, degenerate evaluation) is kept in the table with bic=+inf
    and failed=True.  Ties prefer the smaller q, then earlier input order.
    """
    data = np.asarray(data, dtype=np.int64)
    rng = np.random.default_rng(seed)
    results = []
    for idx, (name, mask) in enumerate(candidates):
        cfg_seed = int(rng.integers(0, 2**62)) if fit_config.seed is None else (
            fit_config.seed + idx
        )
        cfg = GibbsConfig(
            iterations=fit_config.iterations,
            burn_in=fit_config.burn_in,
            proposal_sd=fit_config.proposal_sd,
            B=fit_config.B,
            policy=fit_config.policy,
            seed=cfg_seed,
            adapt=fit_config.adapt,
            adapt_window=fit_config.adapt_window,
            adapt_low=fit_config.adapt_low,
            adapt_high=fit_config.adapt_high,
            share_lambda=fit_config.share_lambda,
            clumped=fit_config.clumped,
            delta=fit_config.delta,
            init_eta=None,
        )
        try:
            trace = gibbs_fit(data, mask, cfg)
            eta = trace.posterior_mean
            model = params_from_eta(EtaVector(eta, mask), cfg.delta)
            ll, se = _loglik_batched(data, model, B_eval, cfg.policy, rng)
            if not np.isfinite(ll):
                raise FloatingPointError("degenerate likelihood evaluation")
            results.append(
                CandidateResult(
                    name, mask.q, ll, se, bic(ll, mask.q, data.size), 2.0 * se,
                    selected=False, failed=False, eta=eta,
                )
            )
        except Exception:
            results.append(
                CandidateResult(
                    name, mask.q, -math.inf, math.nan, math.inf, math.nan,
                    selected=False, failed=True, eta=None,
                )
            )
    order = sorted(
        range(len(results)), key=lambda i: (results[i].bic, results[i].q, i)
    )
    best = order[0]
    return [
        CandidateResult(
            r.name, r.q, r.loglik, r.loglik_se, r.bic, r.bic_se,
            selected=(i == best), failed=r.failed, eta=r.eta,
        )
        for i, r in enumerate(results)
    ]
