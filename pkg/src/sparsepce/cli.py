"""``sparsepce`` command line: build, study, eval, postproc.

Failures print one JSON object on stderr and exit with status 1.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .basis import BoundsError, to_reference
from .persistence import load_model, write_csv
from .postproc import moments
from .sampling import read_points_csv
from .study import (
    RunConfig,
    parse_criterion,
    run_build,
    run_study,
    study_metadata,
    write_build,
    write_statistics,
    write_study,
)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"usage: {message}")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--model", help="registered model name")
    p.add_argument("--dataset", help="CSV with header y1,...,yN,g (build only)")
    p.add_argument("--criterion", action="append",
                   help="K, E or A, optionally with a limit as KIND:LIMIT; repeatable")
    p.add_argument("--limit", type=float, help="limit for criteria given without one")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int, help="maximum number of model evaluations")
    p.add_argument("--batch", type=int)
    p.add_argument("--cv-size", type=int)
    p.add_argument("--cv-seed", type=int)
    p.add_argument("--max-terms", type=int)
    p.add_argument("--target-error", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsepce", description="Sparse adaptive polynomial chaos expansions")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_run_options(sub.add_parser("build", help="adaptive build; writes model.json and history.csv"))
    _add_run_options(sub.add_parser("study", help="replicated builds; writes study.csv and statistics.csv"))
    p = sub.add_parser("eval", help="evaluate a saved model at the points of a CSV file")
    p.add_argument("model_file")
    p.add_argument("points")
    p.add_argument("--out", help="predictions CSV (default: stdout)")
    p = sub.add_parser("postproc", help="moments and Sobol indices of a saved model")
    p.add_argument("model_file")
    p.add_argument("--out", default=".", help="directory for sobol.csv")
    return parser


_KEYS = ("model", "dataset", "bounds", "replicates", "seed", "budget", "batch", "cv_size",
         "cv_seed", "max_terms", "target_error", "out", "workers")


def run_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise CliError("config file must hold a JSON object")
        unknown = set(raw) - set(_KEYS) - {"criterion", "criteria", "limit"}
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
    values = {k: raw[k] for k in _KEYS if k in raw}
    for key in _KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    limit = args.limit if args.limit is not None else raw.get("limit")
    specs = args.criterion
    if specs is None:
        specs = raw.get("criteria") or ([raw["criterion"]] if "criterion" in raw else None)
    if specs is not None:
        criteria = []
        for spec in specs:
            if isinstance(spec, dict):
                spec = f"{spec['kind']}:{spec['limit']!r}"
            criteria.append(parse_criterion(spec, limit if limit is not None else 10.0))
        values["criteria"] = criteria
    elif limit is not None:
        values["criteria"] = [("K", float(limit))]
    return RunConfig(**values)


def cmd_build(args) -> int:
    config = run_config(args)
    model = run_build(config)
    model_path, history_path = write_build(model, config.out)
    info = model.build_info
    print(f"built {len(model.index_set)} terms from L={info['L']} evaluations "
          f"({info['stop_reason']}); wrote {model_path} and {history_path}")
    return 0


def cmd_study(args) -> int:
    config = run_config(args)
    records = run_study(config)
    raw_path = write_study(records, config.out)
    meta_path = Path(config.out) / "study.json"
    meta_path.write_text(json.dumps(study_metadata(config), indent=1) + "\n")
    print(f"wrote {len(records)} rows to {raw_path}")
    if config.replicates < 2:
        raise CliError("statistics need at least 2 replicates per criterion; "
                       f"raw results are in {raw_path}")
    stats_path = write_statistics(records, config.out)
    print(f"wrote {stats_path}")
    return 0


def _read_eval_points(path: str, dimension: int) -> np.ndarray:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
    with_g = first.split(",")[-1].strip() == "g"
    points, _ = read_points_csv(path, with_observations=with_g)
    if points.shape[1] != dimension:
        raise CliError(f"{path}: {points.shape[1]} coordinates per row, model expects {dimension}")
    return points


def cmd_eval(args) -> int:
    model = load_model(args.model_file)
    points = _read_eval_points(args.points, model.input_model.dimension)
    bad = []
    for n, y in enumerate(points, start=1):
        try:
            to_reference(model.input_model, y)
        except BoundsError:
            bad.append(n)
    if bad:
        shown = ",".join(map(str, bad[:20])) + (",..." if len(bad) > 20 else "")
        raise CliError(f"{args.points}: rows out of bounds: {shown}")
    pred = model.evaluate_many(points) if len(points) else np.empty(0)
    rows = ((float(v),) for v in pred)
    if args.out:
        write_csv(args.out, ["prediction"], rows)
    else:
        sys.stdout.write("prediction\n")
        for (v,) in rows:
            sys.stdout.write(repr(v) + "\n")
    return 0


def cmd_postproc(args) -> int:
    model = load_model(args.model_file)
    rep = moments(model)
    names = [f"y{n}" for n in range(1, model.input_model.dimension + 1)]
    print(f"mean      {rep.mean!r}")
    print(f"variance  {rep.variance!r}")
    if rep.zero_variance:
        print("zero variance: Sobol indices are set to 0")
    print("variable  first_order  total")
    for name, s1, st in zip(names, rep.first_order_sobol, rep.total_sobol):
        print(f"{name:<9} {s1:.6e} {st:.6e}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "sobol.csv", ["variable", "first_order", "total"],
              zip(names, rep.first_order_sobol, rep.total_sobol))
    return 0


COMMANDS = {"build": cmd_build, "study": cmd_study, "eval": cmd_eval, "postproc": cmd_postproc}


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one error line
        kind = type(exc).__name__
        message = str(exc).replace("\n", " ")
        if isinstance(exc, KeyError) and exc.args:
            message = str(exc.args[0])
        sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
