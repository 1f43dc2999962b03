"""Batch front-end: ``multislln VERB CONFIG.json``.

Exit codes: 0 success, 1 a verified identity failed, 2 configuration or I/O error.
Logarithms in every power-log normalization are natural logarithms with the
floor L(m) = max(ln m, 1).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import conditions, kronecker, lattice, pointproc, simulate
from .distributions import DistributionSpec
from .normalization import NormalizationSpec

VERBS = ("check-series", "simulate-slln", "simulate-ppp", "counterexample", "kronecker-check", "delta")
CONDITIONS = ("equal-moment", "eq4", "alpha", "three-series", "covariance", "pp-condition")


class ConfigError(Exception):
    pass


class IdentityFailure(Exception):
    pass


# JSON with 17 significant digits -------------------------------------------------

def _encode(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_encode(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    return json.dumps(obj)


def dumps(obj) -> str:
    return _encode(obj) + "\n"


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# config helpers -----------------------------------------------------------------

DEFAULTS = {
    "check-series": {
        "condition": None,
        "r": 2,
        "box": None,
        "q": 1,
        "alpha": 2.0,
        "mu": 1.0,
        "moment": 1.0,
        "moment_exponent": 0.0,
        "normalization": {"family": "product"},
        "distribution": {"kind": "normal", "mu": 0.0, "sigma": 1.0},
        "covariance": {"kind": "white", "var": 1.0},
        "intensity": {"kind": "homogeneous", "rate": 1.0},
        "kernel": {"kind": "independent", "dist": {"kind": "normal", "mu": 0.0, "sigma": 1.0}},
        "output": None,
    },
    "simulate-slln": {
        "generator": {"kind": "iid", "dist": {"kind": "normal", "mu": 0.0, "sigma": 1.0}},
        "box": [256, 256],
        "seed": None,
        "normalization": {"family": "product"},
        "replications": 100,
        "center": "analytic_mean",
        "output": None,
    },
    "simulate-ppp": {
        "intensity": {"kind": "homogeneous", "rate": 1.0},
        "kernel": {"kind": "independent", "dist": {"kind": "normal", "mu": 0.0, "sigma": 1.0}},
        "window": [16.0, 16.0],
        "seed": None,
        "corners": None,
        "points_output": None,
        "ratio_output": None,
    },
    "counterexample": {"N": [50, 50], "output": None},
    "kronecker-check": {"field": None, "normalization": {"family": "product"}, "mode": "max", "output": None},
    "delta": {"input": None, "output": None},
}

REQUIRED = {
    "check-series": ("condition",),
    "simulate-slln": ("seed",),
    "simulate-ppp": ("seed", "points_output", "ratio_output"),
    "kronecker-check": ("field",),
    "delta": ("input",),
}


def effective_config(verb: str, user: dict) -> dict:
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(user) - set(DEFAULTS[verb])
    if extra:
        raise ConfigError(f"unknown config keys for {verb}: {sorted(extra)}")
    cfg = copy.deepcopy(DEFAULTS[verb])
    cfg.update(copy.deepcopy(user))
    for key in REQUIRED.get(verb, ()):
        if cfg[key] is None:
            raise ConfigError(f"{verb} requires '{key}'")
    if verb == "check-series":
        if cfg["condition"] not in CONDITIONS:
            raise ConfigError(f"condition must be one of {list(CONDITIONS)}")
        if cfg["box"] is None:
            cfg["box"] = list(conditions.default_box(_int(cfg, "r")))
    if verb == "simulate-ppp" and cfg["corners"] is None:
        window = [float(t) for t in cfg["window"]]
        cfg["corners"] = [[t * k / 8 for t in window] for k in range(1, 9)]
    return cfg


def _int(cfg: dict, key: str) -> int:
    value = cfg[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"'{key}' must be an integer")
    return int(value)


def _float(cfg: dict, key: str) -> float:
    value = cfg[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number")
    return float(value)


def _index(cfg: dict, key: str) -> tuple:
    try:
        return lattice.as_index(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{key}' must be a list of positive integers: {exc}") from exc


def _parse(kind, obj, key: str):
    try:
        return kind(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{key}': {exc}") from exc


def _norm(cfg):
    return _parse(NormalizationSpec.from_json, cfg["normalization"], "normalization")


def _dist(obj, key="distribution"):
    return _parse(DistributionSpec.from_json, obj, key)


def _kernel(obj):
    if not isinstance(obj, dict) or obj.get("kind") != "independent" or set(obj) != {"kind", "dist"}:
        raise ConfigError("kernel must be {'kind': 'independent', 'dist': {...}}")
    return pointproc.MarkKernel.independent(_dist(obj["dist"], "kernel.dist"))


def _intensity(obj):
    if not isinstance(obj, dict) or obj.get("kind") != "homogeneous" or set(obj) != {"kind", "rate"}:
        raise ConfigError("intensity must be {'kind': 'homogeneous', 'rate': ...}")
    return _parse(lambda o: pointproc.IntensitySpec.homogeneous(float(o["rate"])), obj, "intensity")


def _covariance(obj):
    if not isinstance(obj, dict):
        raise ConfigError("covariance must be an object")
    kind = obj.get("kind")
    allowed = {"white": {"var"}, "geometric": {"var", "rho"}, "constant": {"var"},
               "moving_average": {"var", "weights"}}
    if kind not in allowed:
        raise ConfigError(f"covariance kind must be one of {sorted(allowed)}")
    extra = set(obj) - allowed[kind] - {"kind"}
    if extra:
        raise ConfigError(f"unexpected covariance keys {sorted(extra)}")

    def build(o):
        weights = np.asarray(o["weights"], dtype=np.float64) if kind == "moving_average" else None
        return conditions.CovarianceSpec(kind, var=float(o.get("var", 1.0)), rho=float(o.get("rho", 0.0)),
                                         weights=weights)
    return _parse(build, obj, "covariance")


def _generator(obj, box, seed):
    if not isinstance(obj, dict):
        raise ConfigError("generator must be an object")
    kind = obj.get("kind")

    def build(o):
        if kind == "ortho_martingale":
            dists = tuple(DistributionSpec.from_json(d) for d in o["axis_dists"])
            return simulate.FieldGenSpec(kind, box, seed, axis_dists=dists)
        weights = np.asarray(o["weights"], dtype=np.float64) if kind == "moving_average" else None
        return simulate.FieldGenSpec(kind, box, seed, dist=DistributionSpec.from_json(o["dist"]), weights=weights)
    return _parse(build, obj, "generator")


# verbs ---------------------------------------------------------------------------

def run_check_series(cfg: dict, threads: int) -> int:
    cond = cfg["condition"]
    box = _index(cfg, "box")
    try:
        if cond == "equal-moment":
            rep = conditions.check_equal_moment_condition(_int(cfg, "q"), _norm(cfg), box)
        elif cond == "eq4":
            rep = conditions.check_eq4(_int(cfg, "q"), _norm(cfg), box, mu=_float(cfg, "mu"))
        elif cond == "alpha":
            rep = conditions.check_alpha_condition(_float(cfg, "alpha"), _norm(cfg), box,
                                                   moment=_float(cfg, "moment"),
                                                   moment_exponent=_float(cfg, "moment_exponent"))
        elif cond == "three-series":
            res = conditions.three_series(_dist(cfg["distribution"]), _norm(cfg), box)
            _emit(dumps({name: r.to_json() for name, r in res._asdict().items()}), cfg["output"])
            return 0
        elif cond == "covariance":
            rep = conditions.covariance_series(_covariance(cfg["covariance"]), box)
        else:
            rep = pointproc.pp_condition_series(_intensity(cfg["intensity"]), _kernel(cfg["kernel"]),
                                                _norm(cfg), box)
    except (conditions.ConditionError, pointproc.PointProcessError) as exc:
        raise ConfigError(str(exc)) from exc
    _emit(dumps(rep.to_json()), cfg["output"])
    return 0


def run_simulate_slln(cfg: dict, threads: int) -> int:
    box = _index(cfg, "box")
    gen = _generator(cfg["generator"], box, _int(cfg, "seed"))
    reps = _int(cfg, "replications")
    try:
        center = simulate.CenterMode(cfg["center"])
    except ValueError as exc:
        raise ConfigError(f"invalid 'center': {exc}") from exc
    stats = simulate.slln_diagnostic(gen, _norm(cfg), reps, center, threads=threads)
    _emit(stats.to_csv(), cfg["output"])
    return 0


def run_simulate_ppp(cfg: dict, threads: int) -> int:
    window = [float(t) for t in cfg["window"]]
    try:
        pts = pointproc.gen_marked_poisson(_intensity(cfg["intensity"]), _kernel(cfg["kernel"]),
                                           window, _int(cfg, "seed"))
        ratios = pointproc.ergodic_ratio(pts, cfg["corners"])
    except pointproc.PointProcessError as exc:
        raise ConfigError(str(exc)) from exc
    points_path = Path(cfg["points_output"])
    pts.save(points_path, points_path.with_suffix(".json"))
    lines = [",".join([f"x_{i + 1}" for i in range(pts.r)] + ["ratio"])]
    for x, ratio in ratios:
        lines.append(",".join([format(c, ".17g") for c in x] + [format(ratio, ".17g")]))
    _emit("\n".join(lines) + "\n", cfg["ratio_output"])
    return 0


def run_counterexample(cfg: dict, threads: int) -> int:
    N = _index(cfg, "N")
    try:
        rep = kronecker.counterexample_verify(N)
    except kronecker.KroneckerError as exc:
        raise ConfigError(str(exc)) from exc
    lines = ["n1,n2,weighted_sum,ratio,expected_ratio"]
    lines += [f"{n1},{n2},{ws},{ratio},{exp}" for n1, n2, ws, ratio, exp in rep.rows]
    _emit("\n".join(lines) + "\n", cfg["output"])
    if not rep.ok:
        raise IdentityFailure(
            f"counterexample identities failed: delta_b_is_one={rep.delta_b_is_one}, "
            f"weighted_sums_zero={rep.weighted_sums_zero}, ratio_matches={rep.ratio_matches}"
        )
    return 0


def run_kronecker_check(cfg: dict, threads: int) -> int:
    field = lattice.read_field_csv(cfg["field"])
    try:
        rep = kronecker.kronecker_check(field, _norm(cfg), cfg["mode"])
    except (kronecker.KroneckerError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    out = {
        "mode": rep.mode.value,
        "series_partial": rep.series_partial,
        "ratio_curve": [{"n": list(n), "ratio": v} for n, v in rep.ratio_curve],
        "series_curve": [{"n": list(n), "partial": v} for n, v in rep.series_curve],
    }
    _emit(dumps(out), cfg["output"])
    return 0


def run_delta(cfg: dict, threads: int) -> int:
    field = lattice.read_field_csv(cfg["input"])
    _emit(lattice.field_to_csv(lattice.increment(field)), cfg["output"])
    return 0


RUNNERS = {
    "check-series": run_check_series,
    "simulate-slln": run_simulate_slln,
    "simulate-ppp": run_simulate_ppp,
    "counterexample": run_counterexample,
    "kronecker-check": run_kronecker_check,
    "delta": run_delta,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multislln",
        description="Experiments for strong laws of large numbers over multi-indexed sums. "
        "Power-log normalizations use natural logs floored at 1: L(m) = max(ln m, 1).",
    )
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("config", help="JSON config file ('-' reads stdin)")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration and exit")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for replications")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config == "-":
            user = json.load(sys.stdin)
        else:
            with open(args.config) as fh:
                user = json.load(fh)
        cfg = effective_config(args.verb, user)
        if args.dump_config:
            sys.stdout.write(dumps(cfg))
            return 0
        return RUNNERS[args.verb](cfg, max(1, args.threads))
    except IdentityFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"config error: invalid JSON: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, lattice.FieldError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
