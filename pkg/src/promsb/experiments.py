"""End-to-end study harnesses: repeated fits for parameter RMSE tables
and repeated structure selection, both over synthetic stationary mRNA
counts from a known model.

Defaults are desk-scale (few replicates, short chains); paper_scale=True
restores the full 20-replicate protocol.
"""
from __future__ import annotations

import multiprocessing as mp
from dataclasses import dataclass, replace

import numpy as np

from .infer import (
    ConstraintMask,
    GibbsConfig,
    eta_from_params,
    gibbs_fit,
    param_vector,
    rmse,
)
from .mrna import MrnaModel, sample_stationary_batch
from .msbm import TruncationPolicy
from .select import select_model

DEFAULT_POLICY = TruncationPolicy(1e-6, 1e-3, 1000)


def synthetic_counts(
    model: MrnaModel, L: int, seed: int, policy: TruncationPolicy = DEFAULT_POLICY
):
    rng = np.random.default_rng(seed)
    _, m, _ = sample_stationary_batch(model, L, policy, rng)
    return m


@dataclass(frozen=True)
class RmseReport:
    labels: list
    truth: np.ndarray
    estimates: np.ndarray
    rmse: np.ndarray
    L: int
    replicates: int
    seed: int


def _rmse_worker(args):
    model, mask, L, cfg, seed = args
    data = synthetic_counts(model, L, seed, cfg.policy)
    trace = gibbs_fit(data, mask, replace(cfg, seed=seed + 1))
    return trace.posterior_mean_params()


def _pool_map(fn, jobs, workers: int):
    if workers == 1 or len(jobs) == 1:
        return [fn(job) for job in jobs]
    with mp.Pool(min(workers, len(jobs))) as pool:
        return pool.map(fn, jobs)


def rmse_experiment(
    model: MrnaModel,
    mask: ConstraintMask,
    L: int = 1000,
    replicates: int = 3,
    fit_config: GibbsConfig | None = None,
    seed: int = 0,
    workers: int = 1,
    paper_scale: bool = False,
) -> RmseReport:
    """Fit `replicates` synthetic data sets of size L and report the
    per-parameter RMSE of the posterior-mean estimates."""
    if paper_scale:
        replicates = max(replicates, 20)
    cfg = fit_config or GibbsConfig()
    eta_from_params(model, mask)  # fail fast if model violates the mask
    truth = param_vector(model, mask)
    jobs = [
        (model, mask, L, cfg, seed + 1000 * r) for r in range(replicates)
    ]
    estimates = np.array(_pool_map(_rmse_worker, jobs, workers))
    return RmseReport(
        mask.labels(), truth, estimates, rmse(estimates, truth), L, replicates, seed
    )


@dataclass(frozen=True)
class SelectionReport:
    candidate_names: list
    winners: list
    tables: list
    L: int
    replicates: int
    seed: int

    @property
    def win_counts(self) -> dict:
        counts = {name: 0 for name in self.candidate_names}
        for w in self.winners:
            counts[w] += 1
        return counts


def _selection_worker(args):
    model, candidates, L, cfg, b_eval, seed = args
    data = synthetic_counts(model, L, seed, cfg.policy)
    return select_model(data, candidates, replace(cfg, seed=seed + 1), b_eval, seed + 2)


def selection_experiment(
    model: MrnaModel,
    candidates: list,
    L: int = 1000,
    replicates: int = 5,
    fit_config: GibbsConfig | None = None,
    B_eval: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    paper_scale: bool = False,
) -> SelectionReport:
    """Repeat structure selection on fresh synthetic data sets and report
    how often each candidate wins BIC."""
    if paper_scale:
        replicates = max(replicates, 20)
    cfg = fit_config or GibbsConfig()
    jobs = [
        (model, candidates, L, cfg, B_eval, seed + 1000 * r)
        for r in range(replicates)
    ]
    tables = _pool_map(_selection_worker, jobs, workers)
    winners = [next(r.name for r in table if r.selected) for table in tables]
    return SelectionReport(
        [name for name, _ in candidates], winners, tables, L, replicates, seed
    )
