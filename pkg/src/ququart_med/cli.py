"""Command-line entry point.

Every subcommand prints one JSON document on stdout; logs go to stderr.
Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
The default output directory comes from ``$QUQUART_MED_OUT`` when ``--out`` is
not given.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import calibration, discrimination, montecarlo, pipeline
from .components import timing_report
from .config import ConfigError, load_config
from .receiver import ProbabilityTable, canonical_ensemble, collected_fraction

log = logging.getLogger("ququart_med")

OUT_ENV = "QUQUART_MED_OUT"


class UsageError(Exception):
    pass


def _dump(obj):
    print(json.dumps(obj, indent=2))


def _out_dir(args, cfg=None):
    out = getattr(args, "out", None) or (cfg.out_dir if cfg else None) or os.environ.get(OUT_ENV)
    if out:
        os.makedirs(out, exist_ok=True)
    return out


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _add_params(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--ideal", dest="preset", action="store_const", const="ideal", help="ideal calibrated receiver")
    g.add_argument("--paper", dest="preset", action="store_const", const="paper", help="measured hardware imperfections")
    p.add_argument("--config", help="INI run configuration")


def _config(args):
    return load_config(args.config, args.preset)


def cmd_bound(args):
    try:
        pg = discrimination.gus_bound(args.n, args.d)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _dump({"n": args.n, "d": args.d, "p_guess": pg, "p_err": 1.0 - pg})


def cmd_simulate(args):
    cfg = _config(args)
    ens = canonical_ensemble()
    table, post, assign, pg = calibration.evaluate(cfg.params, ens)
    lossless = dataclasses.replace(
        cfg.params, bs=dataclasses.replace(cfg.params.bs, loss_bs=0.0, loss_loop=0.0)
    )
    lossless_table = calibration.evaluate(lossless, ens)[0]
    report = {
        "preset": cfg.preset,
        "params": cfg.params.to_dict(),
        "p_guess": pg,
        "p_guess_argmax": discrimination.argmax_guess_probability(post),
        "p_guess_bin_normalized": discrimination.average_guess_probability(post, assign, bin_normalized=True),
        "collected_fraction": collected_fraction(table, priors=ens.priors),
        "collected_fraction_lossless": collected_fraction(lossless_table, lossless=True, priors=ens.priors),
        "gus_bound": discrimination.gus_bound(len(ens), 4),
        "srm": discrimination.srm_oracle(ens),
        "duples": assign.to_json()["duples"],
        "timing": timing_report(cfg.timing, cfg.params.n_passes),
    }
    out = _out_dir(args, cfg)
    if out:
        table.to_csv(os.path.join(out, "table.csv"))
        _write_json(os.path.join(out, "table.json"), table.to_json())
        _write_json(os.path.join(out, "posteriors.json"), post.to_json())
        _write_json(os.path.join(out, "duples.json"), assign.to_json())
        _write_json(os.path.join(out, "report.json"), report)
        log.info("wrote simulation outputs to %s", out)
    _dump(report)


def cmd_optimize(args):
    cfg = _config(args)
    free = calibration.FREE_PRESETS[args.free]
    log.info("optimizing %s with %d restarts", ",".join(free), args.restarts)
    res = calibration.optimize_receiver(cfg.params, free, tol=args.tol, max_restarts=args.restarts, seed=args.seed)
    report = res.to_json()
    report["initial_objective"] = calibration.guess_probability(cfg.params)
    out = _out_dir(args, cfg)
    if out:
        _write_json(os.path.join(out, "optimize.json"), report)
    _dump(report)


def cmd_montecarlo(args):
    cfg = _config(args)
    model = cfg.uncertainty
    overrides = {
        k: v for k, v in (
            ("n_samples", args.samples), ("seed", args.seed), ("sigma_angle", args.sigma_angle),
            ("sigma_r", args.sigma_r), ("distribution", args.distribution),
        ) if v is not None
    }
    try:
        model = dataclasses.replace(model, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rep = montecarlo.mc_guess_error(cfg.params, canonical_ensemble(), model, workers=args.workers)
    report = rep.to_json()
    report["model"] = dataclasses.asdict(model)
    out = _out_dir(args, cfg)
    if out:
        _write_json(os.path.join(out, "montecarlo.json"), report)
        rep.per_bin_csv(os.path.join(out, "per_bin_std.csv"))
    _dump(report)


def cmd_synth(args):
    cfg = _config(args)
    table = calibration.evaluate(cfg.params)[0]
    counts = pipeline.sample_counts(table, args.events, seed=args.seed)
    if args.out:
        pipeline.write_counts(counts, args.out)
    else:
        sys.stdout.write(pipeline.write_counts(counts))
        return
    _dump({"events": int(counts.counts.sum()), "path": args.out})


def cmd_analyze(args):
    cfg = _config(args)
    try:
        raw = pipeline.load_counts(args.counts, args.background, duration_s=args.duration)
    except (OSError, pipeline.SchemaError) as exc:
        raise ConfigError(str(exc)) from None
    cleaned = pipeline.subtract_background(raw)
    mc_std = None
    if args.mc:
        with open(args.mc, encoding="utf-8") as fh:
            mc_std = np.array(json.load(fh)["per_bin_std"])
    post = pipeline.counts_to_posteriors(cleaned, mc_std=mc_std)
    assign = discrimination.assign_guesses(
        discrimination.bayes_posteriors(calibration.evaluate(cfg.params)[0])
    )
    value, err = pipeline.experimental_pguess(post, assign)
    report = {
        "p_guess": value,
        "error": err,
        "events": float(cleaned.counts.sum()),
        "empty_bins": [[int(t), "HV"[k]] for t, k in np.argwhere(post.empty)],
        "duples": assign.to_json()["duples"],
        "assignment_preset": cfg.preset,
    }
    out = _out_dir(args, cfg)
    if out:
        _write_json(os.path.join(out, "exp_posteriors.json"), post.to_json())
        _write_json(os.path.join(out, "analyze.json"), report)
    _dump(report)


def cmd_compare(args):
    sim_path = os.path.join(args.sim, "table.json") if os.path.isdir(args.sim) else args.sim
    exp_path = os.path.join(args.exp, "exp_posteriors.json") if os.path.isdir(args.exp) else args.exp
    try:
        with open(sim_path, encoding="utf-8") as fh:
            sim = ProbabilityTable.from_json(json.load(fh))
        with open(exp_path, encoding="utf-8") as fh:
            exp = discrimination.PosteriorTable.from_json(json.load(fh))
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read inputs: {exc}") from None
    if sim.p.shape[1] != exp.n_bins or sim.p.shape[0] != exp.n_states:
        raise ConfigError("simulated and experimental tables have different shapes")
    rep = pipeline.compare(sim, exp, n_sigma=args.n_sigma, model_tol=args.model_tol)
    _dump(rep.to_json())


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ququart-med", description="Simulate and analyze a time-multiplexed minimum-error discrimination receiver."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="optimal guess probability D/N")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="simulate the receiver and discriminate")
    _add_params(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="maximize the guess probability over waveplate angles")
    _add_params(p)
    p.add_argument("--free", choices=sorted(calibration.FREE_PRESETS), default="angles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("montecarlo", help="propagate angle and reflectivity uncertainties")
    _add_params(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma-angle", type=float, help="degrees")
    p.add_argument("--sigma-r", type=float)
    p.add_argument("--distribution", choices=["gaussian", "uniform"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("synth", help="sample synthetic counts from a simulated table")
    _add_params(p)
    p.add_argument("--events", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="counts CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="experimental guess probability from count tables")
    _add_params(p)
    p.add_argument("--counts", required=True)
    p.add_argument("--background")
    p.add_argument("--duration", type=float, default=180.0, help="seconds per measurement")
    p.add_argument("--mc", help="montecarlo.json whose per-bin spreads are added in quadrature")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="compare simulate and analyze outputs")
    p.add_argument("--sim", required=True, help="simulate output dir or table.json")
    p.add_argument("--exp", required=True, help="analyze output dir or exp_posteriors.json")
    p.add_argument("--n-sigma", type=float, default=3.0)
    p.add_argument("--model-tol", type=float, default=0.0)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
