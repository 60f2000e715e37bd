"""Exact-jump (Gillespie) simulation of the promoter CTMCs.

Independent oracle for the stick-breaking samplers: direct transcription
of the mRNA and joint mRNA-protein rate tables, with a thinned stationary
sampling helper.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import RunawayState
from .mrna import MrnaModel
from .protein import ProteinModel

RUNAWAY_CEILING = 10_000_000


@dataclass(frozen=True)
class Trajectory:
    """Jump times and the states entered at them; row 0 is the initial
    state at time 0."""

    times: np.ndarray
    states: np.ndarray


@njit(cache=True)
def _pick(cum_rates, total, u):
    target = u * total
    for idx in range(cum_rates.shape[0]):
        if cum_rates[idx] >= target:
            return idx
    return cum_rates.shape[0] - 1


@njit(cache=True)
def _mrna_rates(G, beta, delta, e, m, cum):
    n = G.shape[0]
    total = 0.0
    for j in range(n):
        if j != e:
            total += G[e, j]
        cum[j] = total
    total += beta[e]
    cum[n] = total
    total += delta * m
    cum[n + 1] = total
    return total


@njit(cache=True)
def _sim_mrna(G, beta, delta, e, m, t, t_end, times, es, ms, seed):
    np.random.seed(seed)
    n = G.shape[0]
    cum = np.empty(n + 2)
    count = 0
    cap = times.shape[0]
    while True:
        total = _mrna_rates(G, beta, delta, e, m, cum)
        t += np.random.exponential(1.0 / total)
        if t >= t_end:
            return count, e, m, t_end
        idx = _pick(cum, total, np.random.random())
        if idx < n:
            e = idx
        elif idx == n:
            m += 1
        else:
            m -= 1
        if count == cap:
            return -1, e, m, t
        times[count] = t
        es[count] = e
        ms[count] = m
        count += 1


@njit(cache=True)
def _thin_mrna(G, beta, delta, e, m, sample_times, seed):
    np.random.seed(seed)
    n = G.shape[0]
    cum = np.empty(n + 2)
    out_e = np.empty(sample_times.shape[0], dtype=np.int64)
    out_m = np.empty(sample_times.shape[0], dtype=np.int64)
    t = 0.0
    k = 0
    while k < sample_times.shape[0]:
        total = _mrna_rates(G, beta, delta, e, m, cum)
        t_next = t + np.random.exponential(1.0 / total)
        while k < sample_times.shape[0] and sample_times[k] < t_next:
            out_e[k] = e
            out_m[k] = m
            k += 1
        t = t_next
        idx = _pick(cum, total, np.random.random())
        if idx < n:
            e = idx
        elif idx == n:
            m += 1
        else:
            m -= 1
    return out_e, out_m


@njit(cache=True)
def _protein_rates(G, beta, delta, alpha, gamma, cap, e, m, p, cum):
    n = G.shape[0]
    total = 0.0
    for j in range(n):
        if j != e:
            total += G[e, j]
        cum[j] = total
    if cap < 0 or m < cap:
        total += beta[e]
    cum[n] = total
    total += delta * m
    cum[n + 1] = total
    total += alpha * m
    cum[n + 2] = total
    total += gamma * p
    cum[n + 3] = total
    return total


@njit(cache=True)
def _sim_protein(G, beta, delta, alpha, gamma, cap, e, m, p, t, t_end, times, es, ms, ps, seed):
    np.random.seed(seed)
    n = G.shape[0]
    cum = np.empty(n + 4)
    count = 0
    buf = times.shape[0]
    while True:
        total = _protein_rates(G, beta, delta, alpha, gamma, cap, e, m, p, cum)
        t += np.random.exponential(1.0 / total)
        if t >= t_end:
            return count, e, m, p, t_end
        idx = _pick(cum, total, np.random.random())
        if idx < n:
            e = idx
        elif idx == n:
            m += 1
        elif idx == n + 1:
            m -= 1
        elif idx == n + 2:
            p += 1
        else:
            p -= 1
        if m > RUNAWAY_CEILING or p > RUNAWAY_CEILING:
            return -2, e, m, p, t
        if count == buf:
            return -1, e, m, p, t
        times[count] = t
        es[count] = e
        ms[count] = m
        ps[count] = p
        count += 1


@njit(cache=True)
def _thin_protein(G, beta, delta, alpha, gamma, cap, e, m, p, sample_times, seed):
    np.random.seed(seed)
    n = G.shape[0]
    cum = np.empty(n + 4)
    k = 0
    out = np.empty((sample_times.shape[0], 3), dtype=np.int64)
    t = 0.0
    while k < sample_times.shape[0]:
        total = _protein_rates(G, beta, delta, alpha, gamma, cap, e, m, p, cum)
        t_next = t + np.random.exponential(1.0 / total)
        while k < sample_times.shape[0] and sample_times[k] < t_next:
            out[k, 0] = e
            out[k, 1] = m
            out[k, 2] = p
            k += 1
        t = t_next
        idx = _pick(cum, total, np.random.random())
        if idx < n:
            e = idx
        elif idx == n:
            m += 1
        elif idx == n + 1:
            m -= 1
        elif idx == n + 2:
            p += 1
        else:
            p -= 1
        if m > RUNAWAY_CEILING or p > RUNAWAY_CEILING:
            return out, -2
    return out, 0


def _kernel_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**31 - 1))


def simulate(
    model: MrnaModel | ProteinModel,
    t_end: float,
    rng: np.random.Generator,
    unbounded: bool = False,
) -> Trajectory:
    """Exact event-driven trajectory from state (0, 0[, 0]) to t_end.

    For a ProteinModel the mRNA birth is blocked at m = c unless
    `unbounded` lifts the cap (runaway counts beyond the ceiling abort).
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    buf = 4096
    chunks = []
    if isinstance(model, ProteinModel):
        base = model.base
        cap = -1 if unbounded else model.c
        e, m, p, t = 0, 0, 0, 0.0
        head = np.array([[0, 0, 0]])
        while True:
            times = np.empty(buf)
            es = np.empty(buf, dtype=np.int64)
            ms = np.empty(buf, dtype=np.int64)
            ps = np.empty(buf, dtype=np.int64)
            count, e, m, p, t = _sim_protein(
                base.G.entries, base.beta, base.delta, model.alpha, model.gamma,
                cap, e, m, p, t, t_end, times, es, ms, ps, _kernel_seed(rng),
            )
            if count == -2:
                raise RunawayState(f"count exceeded ceiling {RUNAWAY_CEILING}")
            full = count == -1
            if full:
                count = buf
            chunks.append((times[:count], np.stack([es[:count], ms[:count], ps[:count]], axis=1)))
            if not full:
                break
            buf *= 2
    else:
        e, m, t = 0, 0, 0.0
        head = np.array([[0, 0]])
        while True:
            times = np.empty(buf)
            es = np.empty(buf, dtype=np.int64)
            ms = np.empty(buf, dtype=np.int64)
            count, e, m, t = _sim_mrna(
                model.G.entries, model.beta, model.delta, e, m, t, t_end,
                times, es, ms, _kernel_seed(rng),
            )
            full = count == -1
            if full:
                count = buf
            chunks.append((times[:count], np.stack([es[:count], ms[:count]], axis=1)))
            if not full:
                break
            buf *= 2
    all_times = np.concatenate([np.zeros(1)] + [c[0] for c in chunks])
    all_states = np.concatenate([head] + [c[1] for c in chunks])
    return Trajectory(all_times, all_states)


def default_burn(model: MrnaModel | ProteinModel) -> float:
    """Conservative decorrelation horizon 20/min(delta, gamma, theta(G))."""
    if isinstance(model, ProteinModel):
        base = model.base
        slowest = min(base.delta, model.gamma, base.G.theta)
    else:
        slowest = min(model.delta, model.G.theta)
    return 20.0 / slowest


def default_gap(model: MrnaModel | ProteinModel) -> float:
    delta = model.base.delta if isinstance(model, ProteinModel) else model.delta
    return 10.0 / delta


def stationary_samples(
    model: MrnaModel | ProteinModel,
    t_burn: float,
    t_gap: float,
    count: int,
    rng: np.random.Generator,
    unbounded: bool = False,
) -> np.ndarray:
    """States recorded at t_burn + j*t_gap, j = 0..count-1, from one long
    trajectory started at (0, 0[, 0])."""
    if t_burn <= 0 or t_gap <= 0:
        raise ValueError("t_burn and t_gap must be positive")
    if count == 0:
        cols = 3 if isinstance(model, ProteinModel) else 2
        return np.empty((0, cols), dtype=np.int64)
    sample_times = t_burn + t_gap * np.arange(count)
    if isinstance(model, ProteinModel):
        base = model.base
        cap = -1 if unbounded else model.c
        out, status = _thin_protein(
            base.G.entries, base.beta, base.delta, model.alpha, model.gamma,
            cap, 0, 0, 0, sample_times, _kernel_seed(rng),
        )
        if status == -2:
            raise RunawayState(f"count exceeded ceiling {RUNAWAY_CEILING}")
        return out
    e, m = _thin_mrna(
        model.G.entries, model.beta, model.delta, 0, 0, sample_times, _kernel_seed(rng)
    )
    return np.stack([e, m], axis=1)
