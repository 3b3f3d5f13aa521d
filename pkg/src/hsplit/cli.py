"""Command-line runner for backward-backward scenarios.

Usage::

    hsplit solve CONFIG.json --out DIR [--seed N] [--dump-points] [--with-reference]
    hsplit validate CONFIG.json
    hsplit suite DIR --out DIR [--jobs N]

CONFIG may also name a bundled scenario (``hsplit list`` prints them). Exit
status: 0 when every applicable diagnostic passes, 2 when one fails, 1 on
configuration or runtime errors. ``HS_LOG`` sets the log level.
"""
import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, kernels
from .errors import InvalidInputError, InvalidReferenceError
from .functions import function_from_descriptor
from .oracle import (Reference, default_region, region_from_descriptor, sample_point,
                     solve_reference)
from .spaces import space_from_descriptor
from .splitting import (ErrorSchedule, SplitProblem, StoppingRule, default_test_points,
                        limit_pair, run, run_diagnostics)

log = logging.getLogger("hsplit")

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
TRACE_COLUMNS = ["n", "phi_xy", "phi_xnext_y", "disp_x", "disp_y", "delta_n", "eps_n",
                 "dist_x_ref", "dist_y_ref"]


class ConfigError(Exception):
    """Configuration problems; each entry of ``errors`` names a field."""

    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = errors


def load_schema():
    return json.loads(resources.files("hsplit").joinpath("schema/scenario.schema.json")
                      .read_text(encoding="utf-8"))


def bundled_dir():
    return Path(str(resources.files("hsplit").joinpath("scenarios")))


def resolve_config(path):
    p = Path(path)
    if p.exists():
        return p
    for cand in (bundled_dir() / p.name, bundled_dir() / f"{p.name}.json"):
        if cand.exists():
            return cand
    raise ConfigError([f"config file {path!s} not found"])


@dataclass
class Scenario:
    config: dict
    path: Path
    problem: SplitProblem
    x0: object
    schedule: ErrorSchedule
    stop: StoppingRule
    reference: dict

    @property
    def name(self):
        return self.config.get("name", self.path.stem)


def _pointer(error):
    return "/" + "/".join(str(p) for p in error.absolute_path)


def _load_custom_values(sched, base):
    if "values" in sched:
        return sched["values"]
    if "path" in sched:
        path = (base / sched["path"]).resolve()
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        try:
            return [(float(r[0]), float(r[1])) for r in rows]
        except (ValueError, IndexError):
            # header row
            return [(float(r[0]), float(r[1])) for r in rows[1:]]
    raise InvalidInputError("custom schedule needs 'values' or 'path'")


def build_scenario(config, path, seed=None):
    """Schema and semantic validation; returns a :class:`Scenario`."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errs = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errs:
        msgs = []
        for e in errs:
            where = _pointer(e)
            if where == "/gamma":
                msgs.append(f"{where}: gamma must be > 0 (the quadratic coupling term "
                            f"d(x, y)^2 / (2 gamma) needs a positive step); got {e.instance!r}")
            else:
                msgs.append(f"{where}: {e.message}")
        raise ConfigError(msgs)

    errors = []

    def attempt(field_name, fn):
        try:
            return fn()
        except (InvalidInputError, KeyError, TypeError, ValueError, OSError) as exc:
            errors.append(f"/{field_name}: {exc}")
            return None

    space = attempt("space", lambda: space_from_descriptor(config["space"]))
    if space is None:
        raise ConfigError(errors)
    f = attempt("f", lambda: function_from_descriptor(space, config["f"]))
    g = attempt("g", lambda: function_from_descriptor(space, config["g"]))
    x0 = attempt("x0", lambda: space.parse_point(config["x0"]))

    seed = int(config.get("seed", 0) if seed is None else seed)
    sched_cfg = config.get("schedule", {"kind": "none"})
    kind = sched_cfg["kind"]

    def make_schedule():
        if kind == "none":
            return ErrorSchedule.none(seed)
        if kind == "inverse_square":
            return ErrorSchedule.inverse_square(sched_cfg.get("c", 0.0), seed)
        return ErrorSchedule.custom(_load_custom_values(sched_cfg, path.parent), seed)

    schedule = attempt("schedule", make_schedule)
    st = config.get("stopping", {})
    stop = attempt("stopping", lambda: StoppingRule(
        max_iterations=st.get("max_iter", 1000),
        displacement_tol=st.get("displacement_tol", 0.0),
        objective_tol=st.get("objective_tol"),
        optimal_value=config.get("reference", {}).get("value"),
        divergence_floor=st.get("divergence_floor", -1e15)))
    reference = dict(config.get("reference", {"kind": "none"}))
    if reference["kind"] == "explicit":
        for key in ("x", "y"):
            if key not in reference:
                errors.append(f"/reference/{key}: required for explicit references")
            else:
                reference[key] = attempt(f"reference/{key}",
                                         lambda key=key: space.parse_point(reference[key]))
    if reference["kind"] == "auto":
        reference["region"] = attempt("reference/region",
                                      lambda: region_from_descriptor(space, reference.get("region")))
    if errors:
        raise ConfigError(errors)
    problem = SplitProblem(space, f, g, config["gamma"])
    return Scenario(config, path, problem, x0, schedule, stop, reference)


def load_scenario(path, seed=None):
    path = resolve_config(path)
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from exc
    return build_scenario(config, path, seed)


def compute_reference(scenario, force_auto=False):
    ref = scenario.reference
    kind = ref["kind"]
    if kind == "none" and force_auto:
        kind = "auto"
    prob = scenario.problem
    if kind == "explicit":
        x, y = ref["x"], ref["y"]
        value = ref.get("value", prob.phi(x, y))
        return Reference(x, y, float(value), prob.fixed_point_residual(x, y))
    if kind == "auto":
        region = ref.get("region")
        return solve_reference(prob, region, ref.get("resolution", 40))
    return None


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def write_trace(trace, path, dump_points=False):
    space = trace.problem.space
    N = trace.iterations
    header = list(TRACE_COLUMNS)
    if dump_points:
        header += space.coord_names("x") + space.coord_names("y")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for n in range(N + 1):
            last = n == N
            row = [
                str(n),
                _fmt(trace.phi_xy[n]),
                "" if last else _fmt(trace.phi_xnext_y[n]),
                "" if last else _fmt(trace.disp_x[n]),
                "" if last else _fmt(trace.disp_y[n]),
                _fmt(trace.delta[n]),
                "" if last else _fmt(trace.eps[n]),
                _fmt(trace.dist_x_ref[n]) if trace.dist_x_ref else "",
                _fmt(trace.dist_y_ref[n]) if trace.dist_y_ref else "",
            ]
            if dump_points:
                row += [_fmt(c) for c in space.flatten(trace.xs[n]) + space.flatten(trace.ys[n])]
            w.writerow(row)


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _jsonable(v.item())
    return v


def solve(config_path, out, seed=None, dump_points=False, with_reference=False):
    """Run one scenario and write ``trace.csv`` and ``summary.json`` into ``out``."""
    t0 = time.perf_counter()
    sc = load_scenario(config_path, seed)
    ref = compute_reference(sc, force_auto=with_reference)
    pair = (ref.x, ref.y) if ref is not None else None
    trace = run(sc.problem, sc.x0, sc.schedule, sc.stop, pair)

    prob = sc.problem
    rng = np.random.default_rng([sc.schedule.seed, 1])
    region = sc.reference.get("region") or default_region(prob.space)
    n_test = int(sc.config.get("test_points", 10))
    test_points = default_test_points(prob, lambda r: sample_point(prob.space, region, r), rng,
                                      n_test)
    if pair is not None:
        test_points.append(pair)
    try:
        reports = run_diagnostics(trace, pair, ref.value if ref else None, test_points,
                                  sc.config.get("tolerances"))
    except InvalidReferenceError as exc:
        raise ConfigError([f"/reference: {exc}"]) from exc

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace(trace, out / "trace.csv", dump_points)
    failed = [k for k, r in reports.items() if r.verdict == "fail"]
    space = prob.space
    summary = {
        "scenario": sc.name,
        "config_hash": config_hash(sc.config),
        "version": __version__,
        "backend": kernels.BACKEND,
        "seed": sc.schedule.seed,
        "iterations": trace.iterations,
        "stop_reason": trace.stop_reason,
        "final_phi": trace.phi_xy[-1],
        "limit_phi": prob.phi(*limit_pair(trace)),
        "final_displacement_x": trace.disp_x[-1] if trace.disp_x else 0.0,
        "final_displacement_y": trace.disp_y[-1] if trace.disp_y else 0.0,
        "final_x": space.to_literal(trace.xs[-1]),
        "final_y": space.to_literal(trace.ys[-1]),
        "sum_delta": float(np.sum(trace.delta)),
        "sum_eps": float(np.sum(trace.eps)),
        "error_free": trace.error_free,
        "guarantees_void": trace.guarantees_void,
        "unbounded": trace.unbounded,
        "reference": None if ref is None else {
            "x": space.to_literal(ref.x), "y": space.to_literal(ref.y),
            "value": ref.value, "fixed_point_residual": ref.residual,
            "final_distance": space.distance(trace.xs[-1], ref.x)
            + space.distance(trace.ys[-1], ref.y),
        },
        "checks": {k: r.as_dict() for k, r in reports.items()},
        "passed": not failed,
        "failed_checks": failed,
        "wall_time_s": time.perf_counter() - t0,
    }
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2) + "\n",
                                      encoding="utf-8")
    log.info("%s: %d iterations, checks failed: %s", sc.name, trace.iterations, failed or "none")
    return (EXIT_FAIL if failed else EXIT_OK), summary


def validate(config_path):
    """Schema and semantic validation without running; returns a list of errors."""
    try:
        load_scenario(config_path)
    except ConfigError as exc:
        return exc.errors
    return []


def _suite_job(args):
    path, out = args
    try:
        code, _ = solve(path, out)
    except ConfigError as exc:
        return path, EXIT_ERROR, exc.errors
    except Exception as exc:  # isolate one scenario's crash from the rest
        return path, EXIT_ERROR, [repr(exc)]
    return path, code, []


def suite(directory, out, jobs=None):
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise ConfigError([f"no *.json scenarios in {directory}"])
    jobs_ = [(str(p), str(Path(out) / p.stem)) for p in paths]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        results = list(ex.map(_suite_job, jobs_))
    return results


def _configure_logging():
    level = os.environ.get("HS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser():
    p = argparse.ArgumentParser(prog="hsplit", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run one scenario")
    s.add_argument("config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--dump-points", action="store_true")
    s.add_argument("--with-reference", action="store_true",
                   help="compute an oracle reference when the config has none")
    v = sub.add_parser("validate", help="validate a scenario without running it")
    v.add_argument("config")
    u = sub.add_parser("suite", help="run every scenario in a directory")
    u.add_argument("directory")
    u.add_argument("--out", required=True)
    u.add_argument("--jobs", type=int, default=None)
    sub.add_parser("list", help="list bundled scenarios")
    return p


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            code, summary = solve(args.config, args.out, args.seed, args.dump_points,
                                  args.with_reference)
            status = "ok" if code == EXIT_OK else "FAILED: " + ", ".join(summary["failed_checks"])
            print(f"{summary['scenario']}: {summary['iterations']} iterations, "
                  f"final phi {summary['final_phi']:.12g}, {status}")
            return code
        if args.command == "validate":
            errors = validate(args.config)
            for e in errors:
                print(e, file=sys.stderr)
            if not errors:
                print("ok")
            return EXIT_ERROR if errors else EXIT_OK
        if args.command == "suite":
            worst = EXIT_OK
            for path, code, errs in suite(args.directory, args.out, args.jobs):
                label = {EXIT_OK: "ok", EXIT_FAIL: "diagnostics failed", EXIT_ERROR: "error"}[code]
                print(f"{Path(path).stem}: {label}")
                for e in errs:
                    print(f"  {e}", file=sys.stderr)
                if code == EXIT_ERROR or worst == EXIT_ERROR:
                    worst = EXIT_ERROR
                elif code == EXIT_FAIL:
                    worst = EXIT_FAIL
            return worst
        if args.command == "list":
            for p in sorted(bundled_dir().glob("*.json")):
                print(p.name)
            return EXIT_OK
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
