"""Command-line front end.

Subcommands: sample-msbm, sample-mrna, sample-protein, simulate, moments,
fit, select, experiment.  All randomness is controlled by --seed; outputs
go to --out.  Usage errors exit 2, runtime errors exit 1 with a JSON
error object on stderr, success exits 0.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import fileio, presets
from .core import validate_generator
from .errors import PromsbError
from .infer import ConstraintMask, EtaVector, GibbsConfig, gibbs_fit, params_from_eta
from .mrna import (
    MrnaModel,
    mrna_factorial_moment,
    mrna_pmf_series,
    sample_stationary_batch,
)
from .msbm import TruncationPolicy, sample_msbmi, sample_msbmi_clumped
from .protein import ProteinModel, joint_moment, sample_protein_batch
from .ssa import default_burn, default_gap, simulate, stationary_samples
from .experiments import rmse_experiment, selection_experiment
from .select import select_model


def _default_workers() -> int:
    env = os.environ.get("PROMSB_WORKERS")
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


def _add_common(p, out_required=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=out_required)
    p.add_argument("--config", help="JSON file of flag defaults")


def _add_policy(p):
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--p", type=float, default=1e-3)
    p.add_argument("--max-terms", type=int, default=10_000)


def _policy(args) -> TruncationPolicy:
    return TruncationPolicy(args.eps, args.p, args.max_terms)


def _load_mrna_model(args) -> MrnaModel:
    delta = getattr(args, "delta", 1.0)
    if args.preset:
        return presets.MODELS[args.preset](delta)
    if not (args.generator and args.beta):
        raise SystemExit2("need --preset or both --generator and --beta")
    if args.generator.endswith(".json"):
        G = fileio.read_generator_json(args.generator)
    else:
        G = fileio.read_generator_csv(args.generator)
    beta = np.array([float(v) for v in args.beta.split(",")])
    return MrnaModel(G, beta, delta)


class SystemExit2(Exception):
    """Usage error detected after argparse (exit code 2)."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promsb",
        description="Multistate promoter expression models: stick-breaking "
        "samplers, moments, simulation, Bayesian fitting, and BIC selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p, with_delta=True):
        p.add_argument("--preset", choices=sorted(presets.MODELS))
        p.add_argument("--generator", help="generator matrix CSV or JSON file")
        p.add_argument("--beta", help="comma-separated transcription rates")
        if with_delta:
            p.add_argument("--delta", type=float, default=1.0)

    p = sub.add_parser("sample-msbm", help="one stick-breaking sample as JSON")
    p.add_argument("--generator", help="generator matrix CSV or JSON file")
    p.add_argument("--preset", choices=sorted(presets.MODELS))
    p.add_argument("--clumped", action="store_true")
    _add_policy(p)
    _add_common(p)

    p = sub.add_parser("sample-mrna", help="stationary (e, m, lambda) draws")
    model_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--clumped", action="store_true")
    _add_policy(p)
    _add_common(p)

    p = sub.add_parser("sample-protein", help="stationary (e, m, p) draws")
    model_flags(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_policy(p)
    _add_common(p)

    p = sub.add_parser("simulate", help="exact trajectory or thinned samples")
    model_flags(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--capacity", type=int)
    p.add_argument("--t-end", type=float)
    p.add_argument("--samples", type=int, help="thinned stationary samples instead of a trajectory")
    p.add_argument("--t-burn", type=float)
    p.add_argument("--t-gap", type=float)
    _add_common(p)

    p = sub.add_parser("moments", help="factorial/joint moments to stdout or CSV")
    model_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, default=0, help="protein power; 0 = mRNA only")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--capacity", type=int)
    _add_common(p, out_required=False)

    p = sub.add_parser("fit", help="Metropolis-within-Gibbs posterior sampling")
    p.add_argument("--data", required=True)
    p.add_argument("--mask", required=True, help="constraint mask JSON file or preset name")
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--burnin", type=int, default=2000)
    p.add_argument("--B", type=int, default=5000)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--p", type=float, default=1e-3)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--share-lambda", action="store_true")
    p.add_argument("--summary", help="summary JSON path (default <out>.summary.json)")
    _add_common(p)

    p = sub.add_parser("select", help="BIC table over candidate structures")
    p.add_argument("--data", required=True)
    p.add_argument("--candidates", help="JSON list of masks; default: built-in candidate set")
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--burnin", type=int, default=2000)
    p.add_argument("--B", type=int, default=5000)
    p.add_argument("--B-eval", type=int, default=100_000)
    p.add_argument("--delta", type=float, default=1.0)
    _add_common(p)

    p = sub.add_parser("experiment", help="replicated RMSE or selection study")
    p.add_argument("--preset", choices=sorted(presets.MODELS), required=True)
    p.add_argument("--mode", choices=["rmse", "selection"], default="rmse")
    p.add_argument("--L", type=int, default=1000)
    p.add_argument("--replicates", type=int, default=3)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--burnin", type=int, default=2000)
    p.add_argument("--B", type=int, default=5000)
    p.add_argument("--paper-scale", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--mask", help="mask JSON file or preset name (rmse mode)")
    _add_common(p)

    return parser


def _apply_config(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            for key, value in json.load(fh).items():
                attr = key.replace("-", "_")
                if hasattr(args, attr) and getattr(args, attr) is None:
                    setattr(args, attr, value)
    return args


def _load_mask(spec_arg: str) -> ConstraintMask:
    if spec_arg in presets.MASKS:
        return presets.MASKS[spec_arg]()
    with open(spec_arg) as fh:
        return ConstraintMask.from_json(fh.read())


def _cmd_sample_msbm(args):
    if args.preset:
        G = presets.MODELS[args.preset]().G
    elif args.generator:
        if args.generator.endswith(".json"):
            G = fileio.read_generator_json(args.generator)
        else:
            G = fileio.read_generator_csv(args.generator)
    else:
        raise SystemExit2("need --preset or --generator")
    rng = np.random.default_rng(args.seed)
    if args.clumped:
        sample = sample_msbmi_clumped(G, _policy(args), rng)
    else:
        sample = sample_msbmi(G, _policy(args), rng)
    fileio.write_stick_sample(args.out, sample)


def _cmd_sample_mrna(args):
    model = _load_mrna_model(args)
    rng = np.random.default_rng(args.seed)
    e, m, lam = sample_stationary_batch(
        model, args.n, _policy(args), rng, clumped=args.clumped
    )
    fileio.write_mrna_draws(args.out, e, m, lam)


def _cmd_sample_protein(args):
    base = _load_mrna_model(args)
    model = ProteinModel(base, args.alpha, args.gamma, args.capacity)
    rng = np.random.default_rng(args.seed)
    e, m, p = sample_protein_batch(model, args.n, _policy(args), rng)
    fileio.write_protein_draws(args.out, e, m, p)


def _cmd_simulate(args):
    base = _load_mrna_model(args)
    with_protein = args.alpha is not None
    if with_protein:
        if args.gamma is None or args.capacity is None:
            raise SystemExit2("protein simulation needs --alpha --gamma --capacity")
        model = ProteinModel(base, args.alpha, args.gamma, args.capacity)
    else:
        model = base
    rng = np.random.default_rng(args.seed)
    if args.samples:
        t_burn = args.t_burn if args.t_burn is not None else default_burn(model)
        t_gap = args.t_gap if args.t_gap is not None else default_gap(model)
        states = stationary_samples(model, t_burn, t_gap, args.samples, rng)
        if with_protein:
            fileio.write_protein_draws(args.out, states[:, 0], states[:, 1], states[:, 2])
        else:
            fileio.write_mrna_draws(args.out, states[:, 0], states[:, 1],
                                    states[:, 1].astype(float) * np.nan)
    else:
        if args.t_end is None:
            raise SystemExit2("need --t-end or --samples")
        traj = simulate(model, args.t_end, rng)
        fileio.write_trajectory(args.out, traj, with_protein)


def _cmd_moments(args):
    base = _load_mrna_model(args)
    if args.l > 0:
        if args.alpha is None or args.gamma is None or args.capacity is None:
            raise SystemExit2("joint moments need --alpha --gamma --capacity")
        model = ProteinModel(base, args.alpha, args.gamma, args.capacity)
        value = joint_moment(model, args.k, args.l)
    else:
        value = mrna_factorial_moment(base, args.k)
    if args.out:
        fileio.write_moments(args.out, [(args.k, args.l, value)])
    print(f"E-moment k={args.k} l={args.l}: {value:.6g}")


def _fit_config(args, seed_offset=0) -> GibbsConfig:
    return GibbsConfig(
        iterations=args.iters,
        burn_in=args.burnin,
        proposal_sd=0.25,
        B=args.B,
        policy=TruncationPolicy(getattr(args, "eps", 1e-6), getattr(args, "p", 1e-3), 1000),
        seed=args.seed + seed_offset,
        share_lambda=getattr(args, "share_lambda", False),
        delta=getattr(args, "delta", 1.0),
    )


def _cmd_fit(args):
    data = fileio.read_counts(args.data)
    mask = _load_mask(args.mask)
    trace = gibbs_fit(data, mask, _fit_config(args))
    fileio.write_trace(args.out, trace)
    model = params_from_eta(EtaVector(trace.posterior_mean, mask), args.delta)
    summary = args.summary or f"{args.out}.summary.json"
    fileio.write_fit_summary(summary, trace, model, {"data": args.data})


def _cmd_select(args):
    data = fileio.read_counts(args.data)
    if args.candidates:
        candidates = fileio.read_masks_json(args.candidates)
    else:
        candidates = presets.selection_candidates()
    results = select_model(
        data, candidates, _fit_config(args, 1), B_eval=args.B_eval, seed=args.seed
    )
    fileio.write_selection(args.out, results)


def _cmd_experiment(args):
    workers = args.workers if args.workers else _default_workers()
    model = presets.MODELS[args.preset]()
    cfg = _fit_config(args)
    if args.mode == "rmse":
        mask = _load_mask(args.mask) if args.mask else ConstraintMask.full(model.G.n)
        report = rmse_experiment(
            model, mask, args.L, args.replicates, cfg, args.seed, workers,
            paper_scale=args.paper_scale,
        )
        fileio.write_rmse_table(args.out, report.labels, report.truth, report.rmse)
    else:
        report = selection_experiment(
            model, presets.selection_candidates(), args.L, args.replicates, cfg,
            seed=args.seed, workers=workers, paper_scale=args.paper_scale,
        )
        rows = []
        for r, table in enumerate(report.tables):
            for res in table:
                rows.append((r, res.name, res.q, res.loglik, res.bic, int(res.selected)))
        with open(args.out, "w") as fh:
            fh.write("# schema=selection-experiment v1\n")
            fh.write("replicate,candidate,q,loglik,bic,selected\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")


_COMMANDS = {
    "sample-msbm": _cmd_sample_msbm,
    "sample-mrna": _cmd_sample_mrna,
    "sample-protein": _cmd_sample_protein,
    "simulate": _cmd_simulate,
    "moments": _cmd_moments,
    "fit": _cmd_fit,
    "select": _cmd_select,
    "experiment": _cmd_experiment,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config(args)
        _COMMANDS[args.command](args)
    except SystemExit2 as err:
        json.dump({"error": "usage", "message": str(err)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (PromsbError, OSError, ValueError, KeyError) as err:
        json.dump(
            {"error": type(err).__name__, "message": str(err)}, sys.stderr
        )
        sys.stderr.write("\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
