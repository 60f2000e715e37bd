"""CSV/JSON readers and writers for every artifact the CLI emits.

CSV files open with a versioned schema comment so downstream plotting can
detect format drift; readers skip any leading `#` lines.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import GeneratorMatrix, validate_generator

SCHEMA_VERSION = 1


def _schema_line(name: str) -> str:
    return f"# schema={name} v{SCHEMA_VERSION}"


def write_generator_csv(path, G: GeneratorMatrix) -> None:
    lines = [f"# generator n={G.n}"]
    for row in G.entries:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_generator_csv(path) -> GeneratorMatrix:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or not lines[0].startswith("# generator n="):
        raise ValueError("missing '# generator n=<n>' header")
    n = int(lines[0].split("n=", 1)[1])
    rows = [[float(v) for v in line.split(",")] for line in lines[1 : n + 1]]
    return validate_generator(np.array(rows))


def write_generator_json(path, G: GeneratorMatrix) -> None:
    Path(path).write_text(json.dumps(G.entries.tolist()) + "\n")


def read_generator_json(path) -> GeneratorMatrix:
    return validate_generator(np.array(json.loads(Path(path).read_text())))


def read_counts(path):
    """Count data: newline-separated integers or single-column CSV, with
    an optional non-numeric header line."""
    values = []
    for line in Path(path).read_text().splitlines():
        token = line.split(",")[0].strip()
        if not token or token.startswith("#"):
            continue
        try:
            values.append(int(float(token)))
        except ValueError:
            if values:
                raise
            continue  # header line
    if not values:
        raise ValueError(f"no counts found in {path}")
    return np.array(values, dtype=np.int64)


def _write_rows(path, schema: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_schema_line(schema) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_mrna_draws(path, e, m, lam) -> None:
    _write_rows(
        path, "mrna-draws", ["e", "m", "lambda"],
        ((int(a), int(b), repr(float(c))) for a, b, c in zip(e, m, lam)),
    )


def write_protein_draws(path, e, m, p) -> None:
    _write_rows(
        path, "protein-draws", ["e", "m", "p"],
        ((int(a), int(b), int(c)) for a, b, c in zip(e, m, p)),
    )


def write_stick_sample(path, sample) -> None:
    Path(path).write_text(sample.to_json() + "\n")


def write_pmf(path, table) -> None:
    """table: iterable of (i, m, prob)."""
    _write_rows(
        path, "pmf", ["i", "m", "prob"],
        ((int(i), int(m), repr(float(p))) for i, m, p in table),
    )


def write_moments(path, table) -> None:
    """table: iterable of (k, l, value); l is 0 for mRNA-only moments."""
    _write_rows(
        path, "moments", ["k", "l", "value"],
        ((int(k), int(l), repr(float(v))) for k, l, v in table),
    )


def write_trajectory(path, trajectory, with_protein: bool) -> None:
    header = ["t", "e", "m", "p"] if with_protein else ["t", "e", "m"]
    rows = (
        [repr(float(t))] + [int(v) for v in state]
        for t, state in zip(trajectory.times, trajectory.states)
    )
    _write_rows(path, "trajectory", header, rows)


def write_trace(path, trace) -> None:
    """Gibbs trace: iter, eta_1..eta_q, accepted_1..accepted_q."""
    q = trace.mask.q
    header = (
        ["iter"]
        + [f"eta_{j + 1}" for j in range(q)]
        + [f"accepted_{j + 1}" for j in range(q)]
    )
    rows = (
        [it] + [repr(float(v)) for v in trace.draws[it]]
        + [int(a) for a in trace.accepted[it]]
        for it in range(trace.draws.shape[0])
    )
    _write_rows(path, "fit-trace", header, rows)


def write_fit_summary(path, trace, model, meta=None) -> None:
    """Posterior means mapped back to the (beta, G) scale, plus run
    metadata, as JSON."""
    labels = trace.mask.labels()
    summary = {
        "schema": f"fit-summary v{SCHEMA_VERSION}",
        "seed": trace.seed,
        "iterations": trace.config.iterations,
        "burn_in": trace.config.burn_in,
        "B": trace.config.B,
        "acceptance_rates": trace.acceptance_rates.tolist(),
        "posterior_mean_eta": trace.posterior_mean.tolist(),
        "estimates": dict(zip(labels, trace.posterior_mean_params().tolist())),
        "beta": model.beta.tolist(),
        "G": model.G.entries.tolist(),
    }
    if meta:
        summary.update(meta)
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")


def write_selection(path, results) -> None:
    _write_rows(
        path, "selection", ["candidate", "q", "loglik", "bic", "selected"],
        (
            (r.name, r.q, repr(float(r.loglik)), repr(float(r.bic)), int(r.selected))
            for r in results
        ),
    )


def read_masks_json(path):
    """JSON list of named masks: [{"name": ..., "n": ..., "beta": [...],
    "g": [[...]]}, ...]."""
    from .infer import ConstraintMask

    items = json.loads(Path(path).read_text())
    out = []
    for k, item in enumerate(items):
        name = item.get("name", f"candidate-{k + 1}")
        out.append((name, ConstraintMask.from_json(item)))
    return out


def write_rmse_table(path, labels, truth, rmse_values, meta_rows=()) -> None:
    """Per-parameter RMSE table in the experiment-report schema."""
    rows = [
        (lab, repr(float(t)), repr(float(r)))
        for lab, t, r in zip(labels, truth, rmse_values)
    ]
    rows.extend(meta_rows)
    _write_rows(path, "rmse", ["parameter", "truth", "rmse"], rows)
