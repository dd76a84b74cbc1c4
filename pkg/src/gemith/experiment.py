"""Repeated hold-out experiments and their reports.

A run repeats, ``repeats`` times: split the data, standardize features on
the training part, draw a fold plan, pick base learners, search their
hyperparameters, build every requested ensemble and score it on the
held-out rows. Every random stage gets its own seed derived from the
master seed and the repeat index, and all of them are written to the
record, so a record can be replayed exactly.
"""

import csv
import io
import json
import os
import time
import traceback
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .dataset import (
    GENERATORS,
    DatasetError,
    load_csv,
    make_fold_plan,
    standardize_apply,
    standardize_fit,
    train_test_split,
)
from .ensembles import (
    DEFAULT_COMBO_CAP,
    METHODS,
    fit_methods,
    predict_test,
    refit,
    run_searches,
    select_base_learners,
)
from .learners import default_spaces
from .oob import OobCache, oob_predict
from .search import SearchParams
from .utils import derive_seed, mse

TIMING_SUFFIX = "wall_time_s"
# execution settings that cannot change results; kept out of the record
EXECUTION_FIELDS = ("jobs", "out")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    data: str = None
    target: str = None
    generator: str = None
    n: int = 500
    noise: float = 1.0
    gen_seed: int = 0
    test_fraction: float = 0.2
    folds: int = 5
    repeats: int = 5
    resample_folds: bool = True
    methods: list = field(default_factory=lambda: list(METHODS))
    learners: list = field(default_factory=lambda: [s.kind for s in default_spaces()])
    n_select: int = 4
    n_trials: int = 30
    n_startup: int = 5
    gamma: float = 0.25
    n_ei_candidates: int = 24
    b: int = 12
    combo_cap: int = DEFAULT_COMBO_CAP
    seed: int = 0
    jobs: int = 0
    out: str = None

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def to_dict(self):
        return asdict(self)

    def search_params(self):
        return SearchParams(self.n_trials, self.n_startup, self.gamma, self.n_ei_candidates, self.b)

    def validate(self):
        if (self.data is None) == (self.generator is None):
            raise ConfigError("give exactly one of a dataset path or a generator")
        if self.data is not None and not Path(self.data).is_file():
            raise ConfigError(f"dataset not found: {self.data}")
        if self.generator is not None and self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}; choose from {sorted(GENERATORS)}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if self.folds < 2 or self.repeats < 1:
            raise ConfigError("need folds >= 2 and repeats >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown or empty methods {bad}; choose from {list(METHODS)}")
        kinds = {s.kind for s in default_spaces()}
        if [k for k in self.learners if k not in kinds] or len(set(self.learners)) != len(self.learners):
            raise ConfigError(f"learners must be distinct members of {sorted(kinds)}")
        if len(self.learners) < 1 or self.n_select < 1:
            raise ConfigError("need at least one learner")
        if self.combo_cap is not None and self.combo_cap < 1:
            raise ConfigError("combo_cap must be >= 1")
        try:
            self.search_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def load_dataset(self):
        if self.data is not None:
            target = self.target if self.target is not None else -1
            if target == -1:
                with open(self.data) as fh:
                    target = len(fh.readline().split(",")) - 1
            return load_csv(self.data, target)
        gen_cls = GENERATORS[self.generator]
        gen = gen_cls(noise_sd=self.noise)
        return gen.sample(self.n, self.gen_seed)


def repeat_seeds(seed, r, resample_folds=True):
    return {
        "split": derive_seed(seed, "split", r),
        "folds": derive_seed(seed, "folds", r if resample_folds else 0),
        "search": derive_seed(seed, "search", r),
    }


def _config_json(cfg):
    return None if cfg is None else cfg.to_json()


def run_repeat(cfg, ds, r):
    """One split/train/evaluate cycle; failures are recorded, not raised."""
    seeds = repeat_seeds(cfg.seed, r, cfg.resample_folds)
    out = {"repeat": r, "seeds": seeds, "status": "ok"}
    try:
        train, test = train_test_split(ds, cfg.test_fraction, seeds["split"])
        scaler = standardize_fit(train)
        train, test = standardize_apply(scaler, train), standardize_apply(scaler, test)
        out.update(n_train=train.n, n_test=test.n)
        plan = make_fold_plan(train.n, cfg.folds, seeds["folds"])
        search = cfg.search_params()
        cache = OobCache.from_env()
        pool_specs = {s.kind: s for s in default_spaces()}
        pool = [pool_specs[k] for k in cfg.learners]
        seed = seeds["search"]

        t0 = time.perf_counter()
        if len(pool) > cfg.n_select:
            sel = select_base_learners(train, pool, plan, search, seed, cache, cfg.n_select)
            specs = sel.specs
            searches = [sel.searches[s.name] for s in specs]
            out["selection"] = {
                "chosen": [s.name for s in specs],
                "order": sel.order,
                "pruned": sel.pruned,
                "oob_mse": sel.mse,
            }
        else:
            specs = pool
            searches = run_searches(train, specs, plan, search, seed, cache)
        configs = [res.best for res in searches]
        base_models = refit(specs, configs, train, seed)
        shared = time.perf_counter() - t0

        base_rows = []
        for spec, res, model in zip(specs, searches, base_models):
            vec = oob_predict(train, spec, res.best, plan, seed, cache)
            base_rows.append({
                "learner": spec.name,
                "config": _config_json(res.best),
                "oob_mse": mse(train.target, vec.predictions),
                "test_mse": mse(test.target, model.predict(test.features)),
                "candidates": [_config_json(c) for c in res.candidates],
                "candidate_losses": res.losses,
                "short": res.short,
            })
        out["base"] = base_rows

        methods = {}
        for method in cfg.methods:
            t1 = time.perf_counter()
            models, extras = fit_methods(
                train, specs, plan, search, seed, [method], cache, searches, cfg.combo_cap, base_models
            )
            model = models[method]
            entry = {
                "configs": [_config_json(c) for c in model.configs],
                "weights": None if model.weights is None else model.weights.w.tolist(),
                "oob_objective": model.objective,
                "test_mse": mse(test.target, predict_test(model, test.features)),
                TIMING_SUFFIX: shared + time.perf_counter() - t1,
            }
            if method == "GEM-ITH":
                res = extras["gem_ith"]
                entry["enumeration"] = {
                    "evaluated": len(res.combinations),
                    "total": res.n_total,
                    "subsampled": res.subsampled,
                    "best_index": res.best_index,
                    "best_combination": list(res.combinations[res.best_index]),
                }
            methods[method] = entry
        out["methods"] = methods
        out["fit_count"] = cache.fit_count
    except Exception as exc:  # a failed repeat must not sink the others
        out["status"] = "failed"
        out["error"] = f"{type(exc).__name__}: {exc}"
        out["traceback"] = traceback.format_exc()
    return out


def _summary(repeats, methods):
    summary = {}
    ok = [r for r in repeats if r["status"] == "ok"]
    for method in methods:
        vals = [r["methods"][method]["test_mse"] for r in ok]
        objs = [r["methods"][method]["oob_objective"] for r in ok]
        summary[method] = {
            "mean_test_mse": float(np.mean(vals)) if vals else None,
            "std_test_mse": float(np.std(vals)) if vals else None,
            "per_repeat_test_mse": vals,
            "mean_oob_objective": float(np.mean(objs)) if objs else None,
        }
    return summary


def run_experiment(cfg):
    """Run all repeats and return the JSON-ready record."""
    cfg.validate()
    try:
        ds = cfg.load_dataset()
    except DatasetError as exc:
        raise ConfigError(str(exc)) from exc
    jobs = cfg.jobs or os.cpu_count() or 1
    t0 = time.perf_counter()
    if jobs == 1 or cfg.repeats == 1:
        repeats = [run_repeat(cfg, ds, r) for r in range(cfg.repeats)]
    else:
        repeats = Parallel(n_jobs=min(jobs, cfg.repeats))(
            delayed(run_repeat)(cfg, ds, r) for r in range(cfg.repeats)
        )
    record = {
        "software": {"name": "gemith", "version": __version__},
        "config": {k: v for k, v in cfg.to_dict().items() if k not in EXECUTION_FIELDS},
        "dataset": {"n": ds.n, "p": ds.p, "features": list(ds.feature_names), "target": ds.target_name},
        "repeats": repeats,
        "summary": _summary(repeats, cfg.methods),
        TIMING_SUFFIX: time.perf_counter() - t0,
    }
    return record


def strip_timings(obj):
    """Copy of a record without wall-clock fields (and tracebacks)."""
    if isinstance(obj, dict):
        return {
            k: strip_timings(v) for k, v in obj.items() if not k.endswith(TIMING_SUFFIX) and k != "traceback"
        }
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


def dumps_record(record):
    return json.dumps(record, sort_keys=True, indent=2)


def write_outputs(record, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "record.json").write_text(dumps_record(record) + "\n")
    rows = summary_rows(record)
    (out / "summary.csv").write_text(to_csv(rows))
    (out / "summary.txt").write_text(render_table(rows) + "\n")
    return out


def failed_repeats(record):
    return [r["repeat"] for r in record["repeats"] if r["status"] != "ok"]


# -- reports -----------------------------------------------------------------


def summary_rows(record):
    """Mean test MSE per base learner and per method (one row each)."""
    ok = [r for r in record["repeats"] if r["status"] == "ok"]
    rows = [["model", "mean_test_mse", "std_test_mse", "mean_oob_objective", "repeats"]]
    names = []
    for r in ok:
        for b in r.get("base", []):
            if b["learner"] not in names:
                names.append(b["learner"])
    for name in names:
        vals = [b["test_mse"] for r in ok for b in r.get("base", []) if b["learner"] == name and "test_mse" in b]
        objs = [b["oob_mse"] for r in ok for b in r.get("base", []) if b["learner"] == name]
        rows.append([name, _fmt(np.mean(vals)) if vals else "", _fmt(np.std(vals)) if vals else "",
                     _fmt(np.mean(objs)), str(len(vals))])
    for method, s in record["summary"].items():
        n = len(s["per_repeat_test_mse"])
        rows.append([method, _fmt(s["mean_test_mse"]), _fmt(s["std_test_mse"]), _fmt(s["mean_oob_objective"]),
                     str(n)])
    return rows


def report_hyperparams(record):
    """Side-by-side GEM vs GEM-ITH configs, one row per hyperparameter."""
    ok = [r for r in record.get("repeats", []) if r.get("status") == "ok"]
    if not ok:
        raise ValueError("record has no successful repeats")
    for method in ("GEM", "GEM-ITH"):
        if any(method not in r["methods"] for r in ok):
            raise ValueError(f"record has no {method} entries")
    rows = [["repeat", "learner", "hyperparameter", "GEM", "GEM-ITH", "differs"]]
    for r in ok:
        learners = [b["learner"] for b in r["base"]]
        for name, c_gem, c_ith in zip(learners, r["methods"]["GEM"]["configs"], r["methods"]["GEM-ITH"]["configs"]):
            for hp in sorted(c_gem["values"]):
                a, b = c_gem["values"][hp], c_ith["values"][hp]
                rows.append([str(r["repeat"]), name, hp, _fmt(a), _fmt(b), "*" if a != b else ""])
    return rows


def report_timings(record):
    """Mean wall time per method plus a total row."""
    ok = [r for r in record.get("repeats", []) if r.get("status") == "ok"]
    rows = [["method", TIMING_SUFFIX]]
    total = 0.0
    methods = list(record.get("summary", {}))
    for method in methods:
        t = float(np.mean([r["methods"][method][TIMING_SUFFIX] for r in ok])) if ok else 0.0
        total += t
        rows.append([method, _fmt(t, 4)])
    if len(methods) > 1:
        rows.append(["total", _fmt(total, 4)])
    return rows


def _fmt(value, digits=6):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return f"{value:.{digits}g}"
    return str(value)


def render_table(rows):
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for j, row in enumerate(rows):
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def to_csv(rows):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()
