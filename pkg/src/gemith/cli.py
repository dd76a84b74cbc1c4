"""Command line entry point: ``gemith {run,gen,select-learners,bias-variance,report}``.

Exit codes: 0 on success, 1 on a configuration error, 2 when some repeats
of a run failed (the others are still recorded).
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset import GENERATORS, DatasetError, load_csv, make_fold_plan, save_csv, standardize_apply, standardize_fit
from .diagnostics import bias_variance_estimate
from .ensembles import METHODS, select_base_learners
from .experiment import (
    ConfigError,
    RunConfig,
    dumps_record,
    failed_repeats,
    render_table,
    report_hyperparams,
    report_timings,
    run_experiment,
    summary_rows,
    to_csv,
    write_outputs,
)
from .learners import default_spaces, make_estimator
from .oob import CACHE_ENV, OobCache

log = logging.getLogger("gemith")

# flag -> RunConfig field, for flags that override a config file
RUN_FLAGS = {
    "data": "data", "target": "target", "generator": "generator", "n": "n", "noise": "noise",
    "gen_seed": "gen_seed", "test_fraction": "test_fraction", "folds": "folds", "repeats": "repeats",
    "methods": "methods", "learners": "learners", "n_select": "n_select", "n_trials": "n_trials",
    "n_startup": "n_startup", "gamma": "gamma", "n_ei_candidates": "n_ei_candidates", "b": "b",
    "combo_cap": "combo_cap", "seed": "seed", "jobs": "jobs", "out": "out",
}


def _csv_list(text):
    return [item.strip() for item in text.split(",") if item.strip()]


def _add_data_args(p):
    p.add_argument("--data", help="CSV file with a header row")
    p.add_argument("--target", help="target column name or 0-based index (default: last column)")
    p.add_argument("--generator", choices=sorted(GENERATORS), help="synthetic generator instead of --data")
    p.add_argument("--n", type=int, help="rows to generate")
    p.add_argument("--noise", type=float, help="generator noise standard deviation")
    p.add_argument("--gen-seed", type=int, help="generator seed")


def _add_search_args(p):
    p.add_argument("--n-trials", type=int)
    p.add_argument("--n-startup", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--n-ei-candidates", type=int)
    p.add_argument("-b", "--b", type=int, help="candidate configs kept per learner")


def build_parser():
    parser = argparse.ArgumentParser(prog="gemith", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gemith {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="repeated hold-out experiment")
    run.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    _add_data_args(run)
    _add_search_args(run)
    run.add_argument("--test-fraction", type=float)
    run.add_argument("--folds", type=int)
    run.add_argument("--repeats", type=int)
    run.add_argument("--methods", type=_csv_list, help=f"comma list from {','.join(METHODS)}")
    run.add_argument("--learners", type=_csv_list, help="comma list of learner kinds in the pool")
    run.add_argument("--n-select", type=int)
    run.add_argument("--combo-cap", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--jobs", type=int, help="parallel repeats (default: all cores)")
    run.add_argument("--out", help="output directory for record.json and summaries")

    gen = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    gen.add_argument("name", choices=sorted(GENERATORS))
    gen.add_argument("--n", type=int, default=500)
    gen.add_argument("--noise", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    sel = sub.add_parser("select-learners", help="base-learner selection heuristic")
    _add_data_args(sel)
    _add_search_args(sel)
    sel.add_argument("--learners", type=_csv_list)
    sel.add_argument("--n-select", type=int, default=4)
    sel.add_argument("--folds", type=int, default=5)
    sel.add_argument("--seed", type=int, default=0)

    bv = sub.add_parser("bias-variance", help="bias-variance decomposition on synthetic data (JSON)")
    bv.add_argument("--learner", required=True, choices=sorted(s.kind for s in default_spaces()))
    bv.add_argument("--params", default="{}", help="learner hyperparameters as JSON")
    bv.add_argument("--generator", default="friedman1", choices=sorted(GENERATORS))
    bv.add_argument("--noise", type=float, default=1.0)
    bv.add_argument("--n-train", type=int, default=200)
    bv.add_argument("--n-test", type=int, default=500)
    bv.add_argument("--reps", type=int, default=200)
    bv.add_argument("--seed", type=int, default=0)

    rep = sub.add_parser("report", help="render tables from a run record")
    rep.add_argument("record", help="record.json written by `run`")
    rep.add_argument("--kind", choices=["summary", "hyperparams", "timings"], default="summary")
    rep.add_argument("--format", choices=["text", "csv"], default="text")
    return parser


def _run_config(args):
    cfg = RunConfig.from_json(args.config).to_dict() if args.config else RunConfig().to_dict()
    for flag, name in RUN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg[name] = value
    if args.data is not None and args.generator is None:
        cfg["generator"] = None
    if args.generator is not None and args.data is None:
        cfg["data"] = None
    return RunConfig.from_dict(cfg)


def cmd_run(args):
    cfg = _run_config(args).validate()
    record = run_experiment(cfg)
    if cfg.out:
        out = write_outputs(record, cfg.out)
        log.info("wrote %s", out)
    else:
        print(dumps_record(record))
    print(render_table(summary_rows(record)), file=sys.stderr if not cfg.out else sys.stdout)
    failed = failed_repeats(record)
    if failed:
        for r in record["repeats"]:
            if r["status"] != "ok":
                print(f"repeat {r['repeat']} failed: {r['error']}", file=sys.stderr)
        return 2
    return 0


def cmd_gen(args):
    gen = GENERATORS[args.name](noise_sd=args.noise)
    save_csv(gen.sample(args.n, args.seed), args.out)
    return 0


def _dataset_from_args(args):
    if (args.data is None) == (args.generator is None):
        raise ConfigError("give exactly one of --data or --generator")
    if args.data is not None:
        target = args.target
        if target is None:
            with open(args.data) as fh:
                target = len(fh.readline().split(",")) - 1
        return load_csv(args.data, target)
    gen = GENERATORS[args.generator](noise_sd=1.0 if args.noise is None else args.noise)
    return gen.sample(args.n or 500, args.gen_seed or 0)


def cmd_select(args):
    ds = _dataset_from_args(args)
    ds = standardize_apply(standardize_fit(ds), ds)
    defaults = RunConfig()
    params = RunConfig(
        n_trials=args.n_trials or defaults.n_trials,
        n_startup=defaults.n_startup if args.n_startup is None else args.n_startup,
        gamma=args.gamma or defaults.gamma,
        n_ei_candidates=args.n_ei_candidates or defaults.n_ei_candidates,
        b=args.b or defaults.b,
    ).search_params()
    pool_specs = {s.kind: s for s in default_spaces()}
    kinds = args.learners or list(pool_specs)
    unknown = [k for k in kinds if k not in pool_specs]
    if unknown:
        raise ConfigError(f"unknown learners {unknown}")
    plan = make_fold_plan(ds.n, args.folds, args.seed)
    sel = select_base_learners(ds, [pool_specs[k] for k in kinds], plan, params, args.seed, OobCache.from_env(),
                               args.n_select)
    report = {
        "chosen": [s.name for s in sel.specs],
        "order": sel.order,
        "survivors": sel.survivors,
        "pruned": sel.pruned,
        "oob_mse": sel.mse,
        "correlation": {"learners": sel.survivors, "matrix": sel.correlation.tolist()},
        "configs": {name: res.best.to_json() for name, res in sel.searches.items()},
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_bias_variance(args):
    try:
        params = json.loads(args.params)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--params is not valid JSON: {exc}") from exc
    gen = GENERATORS[args.generator](noise_sd=args.noise)
    estimator = make_estimator(args.learner, params, args.seed)
    report = bias_variance_estimate(estimator, gen, args.n_train, args.n_test, args.reps, args.seed)
    print(json.dumps({"learner": args.learner, "params": params, **report.to_dict()}, indent=2, sort_keys=True))
    return 0


def cmd_report(args):
    try:
        record = json.loads(Path(args.record).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read record {args.record}: {exc}") from exc
    builders = {"summary": summary_rows, "hyperparams": report_hyperparams, "timings": report_timings}
    try:
        rows = builders[args.kind](record)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"cannot build {args.kind} report: {exc}") from exc
    print(to_csv(rows) if args.format == "csv" else render_table(rows))
    return 0


COMMANDS = {
    "run": cmd_run,
    "gen": cmd_gen,
    "select-learners": cmd_select,
    "bias-variance": cmd_bias_variance,
    "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    log.debug("cache directory from $%s", CACHE_ENV)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
