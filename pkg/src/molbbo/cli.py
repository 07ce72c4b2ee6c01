"""Command-line front door.

Subcommands: run-bbo (surrogate loop), run-ea (direct-EA baseline),
report (ECDF and expected-running-time CSVs from run logs),
surrogate-eval (learning-curve cross validation), gen-molecules (random
valid molecules for building datasets).  Configuration is a single JSON
document validated strictly: unknown fields are rejected.  Exit codes:
0 success, 2 configuration or usage errors, 3 objective failure.
"""

import argparse
import glob
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import graphcore
from .bbo import (BboConfig, ObjectiveUnavailable, config_to_dict, run_bbo,
                  run_ea_baseline)
from .bench import (CALLS, CPU_TIME, NO_SUCCESS, TargetGrid, ecdf, ert,
                    learning_curve, success_efforts, write_ecdf_csv,
                    write_ert_csv, write_learning_curve_csv)
from .evolution import EaConfig, apply_mutation, enumerate_valid_mutations
from .gp import DOT_PRODUCT, RBF, KernelSpec
from .graph import GraphError, parse_smiles
from .objectives import ObjectiveError, ObjectiveSpec, make_objective
from .runlog import LogSchemaError, RunLog, load_jsonl, validate, write_jsonl

CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _reject_unknown(d, allowed, where):
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError("unknown %s field(s): %s" % (where, ", ".join(unknown)))


def _bounds(value, name):
    if value is None:
        return None
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ConfigError("%s must be a [lo, hi] pair" % name)
    return (float(value[0]), float(value[1]))


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s is not valid JSON: %s" % (path, exc))
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(cfg, ("schema_version", "label", "objective", "kernel",
                          "bbo", "ea"), "config")
    version = cfg.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError("unknown config schema_version %r" % (version,))
    return cfg


def build_objective_spec(section) -> ObjectiveSpec:
    section = dict(section or {})
    _reject_unknown(section, ("kind", "seed", "noise_std", "command",
                              "timeout", "max_atoms"), "objective")
    try:
        return ObjectiveSpec(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError("bad objective section: %s" % exc)


def build_kernel_spec(section) -> KernelSpec:
    section = dict(section or {})
    _reject_unknown(section, ("family", "signal_variance", "length_scale",
                              "offset", "noise_variance",
                              "signal_variance_bounds", "length_scale_bounds",
                              "offset_bounds", "noise_variance_bounds"),
                    "kernel")
    for name in ("signal_variance_bounds", "length_scale_bounds",
                 "offset_bounds", "noise_variance_bounds"):
        if name in section:
            pair = _bounds(section[name], name)
            if pair is None:
                del section[name]
            else:
                section[name] = pair
    try:
        return KernelSpec(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError("bad kernel section: %s" % exc)


def build_bbo_config(cfg: dict, args) -> BboConfig:
    bbo = dict(cfg.get("bbo") or {})
    _reject_unknown(bbo, ("restarts", "init_pop_size", "xi", "budget",
                          "max_atoms", "shingle_capacity", "master_seed",
                          "doe_smiles"), "bbo")
    ea = dict(cfg.get("ea") or {})
    _reject_unknown(ea, ("steps", "insert_per_step", "perturbations",
                         "max_attempts", "max_population"), "ea")
    if "doe_smiles" in bbo:
        bbo["doe_smiles"] = tuple(bbo["doe_smiles"])
    if getattr(args, "seed", None) is not None:
        bbo["master_seed"] = args.seed
    if getattr(args, "budget", None) is not None:
        bbo["budget"] = args.budget
    try:
        config = BboConfig(ea=EaConfig(**ea),
                           kernel=build_kernel_spec(cfg.get("kernel")),
                           **bbo)
        for smi in config.doe_smiles:
            parse_smiles(smi, config.max_atoms)
        return config
    except (TypeError, ValueError, GraphError) as exc:
        raise ConfigError("bad run configuration: %s" % exc)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _finish_run(log: RunLog, out_dir, state=None):
    validate(log)
    os.makedirs(out_dir, exist_ok=True)
    write_jsonl(log, os.path.join(out_dir, "runlog.jsonl"))
    if state is not None:
        _write_json(os.path.join(out_dir, "state.json"), state)
    best = None
    for rec in log.records:
        if best is None or rec["value"] > best["value"]:
            best = rec
    summary = {"schema_version": 1,
               "label": log.header["label"],
               "method": log.header["method"],
               "calls_used": log.total_calls,
               "best_smiles": best["smiles"] if best else None,
               "best_value": best["value"] if best else None,
               "incomplete": bool(log.header.get("incomplete"))}
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return 3 if summary["incomplete"] else 0


def cmd_run_bbo(args) -> int:
    cfg_doc = load_config(args.config)
    config = build_bbo_config(cfg_doc, args)
    objective_spec = build_objective_spec(cfg_doc.get("objective"))
    label = cfg_doc.get("label", "bbo")
    objective = make_objective(objective_spec, pool_size=args.parallel)
    os.makedirs(args.out, exist_ok=True)
    state_path = os.path.join(args.out, "state.json")
    resume = None
    if args.resume:
        with open(args.resume) as fh:
            resume = json.load(fh)
    try:
        log = run_bbo(config, objective,
                      sequential=args.sequential,
                      parallel=args.parallel,
                      label=label,
                      objective_dict=_objective_dict(objective_spec),
                      checkpoint=lambda s: _write_json(state_path, s),
                      resume=resume)
    except ObjectiveUnavailable as exc:
        print("objective unavailable: %s" % exc, file=sys.stderr)
        header_log = RunLog({"schema_version": 1, "method": "bbo",
                             "label": label,
                             "config": config_to_dict(config),
                             "objective": _objective_dict(objective_spec),
                             "seed": config.master_seed,
                             "deterministic_timing": args.sequential,
                             "incomplete": True}, [])
        _finish_run(header_log, args.out)
        return 3
    finally:
        objective.close()
    return _finish_run(log, args.out)


def _objective_dict(spec: ObjectiveSpec) -> dict:
    return {"kind": spec.kind, "seed": spec.seed, "noise_std": spec.noise_std,
            "command": spec.command, "timeout": spec.timeout,
            "max_atoms": spec.max_atoms}


def cmd_run_ea(args) -> int:
    cfg_doc = load_config(args.config)
    config = build_bbo_config(cfg_doc, args)
    objective_spec = build_objective_spec(cfg_doc.get("objective"))
    label = cfg_doc.get("label", "ea")
    objective = make_objective(objective_spec, pool_size=args.parallel)
    try:
        log = run_ea_baseline(config, objective,
                              sequential=args.sequential,
                              label=label,
                              objective_dict=_objective_dict(objective_spec))
    except ObjectiveUnavailable as exc:
        print("objective unavailable: %s" % exc, file=sys.stderr)
        return 3
    finally:
        objective.close()
    state = {"schema_version": 1, "method": "ea", "resumable": False,
             "config": config_to_dict(config), "note":
             "rerunning with the same seed reproduces this run exactly"}
    return _finish_run(log, args.out, state=state)


def _parse_grid(text) -> TargetGrid:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
        return TargetGrid(lo, hi, step)
    except (ValueError, TypeError) as exc:
        raise ConfigError("bad grid %r (want lo:hi:step): %s" % (text, exc))


def cmd_report(args) -> int:
    paths = sorted(p for pattern in args.logs for p in glob.glob(pattern))
    if not paths:
        print("no run logs match %s" % " ".join(args.logs), file=sys.stderr)
        return 2
    logs = []
    for p in paths:
        log = load_jsonl(p)
        validate(log)
        logs.append(log)
    objectives = {json.dumps(l.header.get("objective"), sort_keys=True)
                  for l in logs}
    if len(objectives) > 1 and not args.mixed_ok:
        print("logs mix objectives; pass --mixed-ok to report anyway",
              file=sys.stderr)
        return 2
    grid = _parse_grid(args.grid)
    by_label = {}
    for log in logs:
        by_label.setdefault(log.header.get("label", "run"), []).append(log)

    os.makedirs(args.out, exist_ok=True)
    for axis, fname in ((CALLS, "ecdf_calls.csv"), (CPU_TIME, "ecdf_cpu.csv")):
        curves = {label: ecdf(group, grid, axis, mixed_ok=args.mixed_ok)
                  for label, group in sorted(by_label.items())}
        write_ecdf_csv(os.path.join(args.out, fname), curves)
    rows = []
    for label, group in sorted(by_label.items()):
        for target in args.targets:
            efforts = success_efforts(group, target)
            value = ert(group, target, mixed_ok=args.mixed_ok)
            rows.append({
                "label": label, "target": target,
                "ert": value if value == NO_SUCCESS else "%g" % value,
                "successes": len(efforts), "runs": len(group),
                "min": "%g" % min(efforts) if efforts else "",
                "median": "%g" % float(np.median(efforts)) if efforts else "",
                "max": "%g" % max(efforts) if efforts else ""})
    write_ert_csv(os.path.join(args.out, "ert.csv"), rows)
    return 0


def _load_dataset(path):
    good, bad = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            smiles, sep, value = line.rpartition(",")
            if not sep:
                bad.append((lineno, "no comma"))
                continue
            try:
                parse_smiles(smiles, graphcore.MAX_VERTICES)
                good.append((smiles, float(value)))
            except (GraphError, ValueError) as exc:
                bad.append((lineno, str(exc)))
    return good, bad


def cmd_surrogate_eval(args) -> int:
    good, bad = _load_dataset(args.data)
    for lineno, reason in bad[:20]:
        print("%s:%d: %s" % (args.data, lineno, reason), file=sys.stderr)
    if not good:
        print("dataset %s has no usable lines" % args.data, file=sys.stderr)
        return 2
    if len(bad) > 0.01 * (len(good) + len(bad)):
        print("aborting: %d of %d lines unparsable (> 1%%)"
              % (len(bad), len(good) + len(bad)), file=sys.stderr)
        return 2
    sizes = sorted(int(s) for s in args.sizes.split(","))
    family = DOT_PRODUCT if args.kernel == "dot" else RBF
    spec = KernelSpec(family=family)
    try:
        table = learning_curve(good, sizes, args.folds, spec,
                               np.random.default_rng(args.seed))
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    write_learning_curve_csv(os.path.join(args.out, "learning_curve.csv"),
                             table, args.folds)
    return 0


def cmd_gen_molecules(args) -> int:
    """Random valid molecules via mutation walks from methane."""
    if not 1 <= args.walk_length <= 20:
        raise ConfigError("--walk-length must be in 1..20")
    if args.count < 1:
        raise ConfigError("--count must be positive")
    objective = None
    if args.config:
        cfg_doc = load_config(args.config)
        objective = make_objective(build_objective_spec(cfg_doc.get("objective")))
    rng = np.random.default_rng(args.seed)
    methane = parse_smiles("C", args.max_atoms)
    seen = set()
    out = []
    attempts = 0
    while len(out) < args.count and attempts < args.count * 200:
        attempts += 1
        g = methane
        for _ in range(int(rng.integers(1, args.walk_length + 1))):
            ops = enumerate_valid_mutations(g, args.max_atoms)
            if not ops:
                break
            g = apply_mutation(g, ops[int(rng.integers(len(ops)))],
                               args.max_atoms)
        key = g.canonical_key()
        if key in seen:
            continue
        seen.add(key)
        out.append(key)
    try:
        with open(args.out, "w") as fh:
            for smiles in out:
                if objective is None:
                    fh.write(smiles + "\n")
                else:
                    value = objective(parse_smiles(smiles, args.max_atoms))
                    fh.write("%s,%.12g\n" % (smiles, value))
    finally:
        if objective is not None:
            objective.close()
    if len(out) < args.count:
        print("generated %d of %d requested molecules" % (len(out), args.count),
              file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="molbbo",
        description="surrogate-based black-box optimization of molecules")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's master seed")
        p.add_argument("--budget", type=int, default=None,
                       help="override the config's objective-call budget")
        p.add_argument("--sequential", action="store_true",
                       help="deterministic reference mode (zeroes logged times)")
        p.add_argument("--parallel", type=int, default=1, metavar="N",
                       help="parallel exact evaluations per step")

    p = sub.add_parser("run-bbo", help="run the surrogate-driven loop")
    add_run_flags(p)
    p.add_argument("--resume", default=None, metavar="STATE",
                   help="state.json from an interrupted run to continue")
    p.set_defaults(func=cmd_run_bbo)

    p = sub.add_parser("run-ea", help="run the direct-EA baseline")
    add_run_flags(p)
    p.set_defaults(func=cmd_run_ea)

    p = sub.add_parser("report", help="ECDF and ERT CSVs from run logs")
    p.add_argument("--logs", nargs="+", required=True,
                   help="run-log paths or globs")
    p.add_argument("--out", required=True)
    p.add_argument("--grid", default="-10:-1:0.01", help="target grid lo:hi:step")
    p.add_argument("--targets", type=float, nargs="*", default=[],
                   help="targets for expected-running-time rows")
    p.add_argument("--mixed-ok", action="store_true",
                   help="allow logs with different objectives")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("surrogate-eval", help="learning-curve cross validation")
    p.add_argument("--data", required=True, help='dataset of "smiles,value" lines')
    p.add_argument("--sizes", default="50,100,500,1000",
                   help="comma-separated training-set sizes")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--kernel", choices=("dot", "rbf"), default="dot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_surrogate_eval)

    p = sub.add_parser("gen-molecules",
                       help="sample random valid molecules into a dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-atoms", type=int, default=9)
    p.add_argument("--walk-length", type=int, default=20,
                   help="max mutations per walk (1..20)")
    p.add_argument("--config", default=None,
                   help="config whose objective labels each molecule")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=cmd_gen_molecules)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except LogSchemaError as exc:
        print("log error: %s" % exc, file=sys.stderr)
        return 2
    except ObjectiveError as exc:
        print("objective error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
