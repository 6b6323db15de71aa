"""``qrdyn`` command line: point evaluation, direction and growth experiments,
and the verification suites.

Every command accepts ``--config FILE`` (JSON) whose keys are overridden by
explicit flags, ``--json`` for machine-readable stdout, ``--threads N`` and
``--out DIR``. Runs that write files also write ``manifest.json``.

Exit codes: 0 success, 1 a check failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, checks, dynamics, growth, zorich
from .errors import DomainError, EmptyEstimateError, MapOverflowError
from .maps import GluedMap, map_from_config
from .vecgeom.sphere import Cap, distance_to_caps, hausdorff_sphere, upper_hemisphere

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    map: dict = field(default_factory=lambda: {"kind": "ns", "T": 2.0})
    experiment: str = ""
    shells: list = field(default_factory=lambda: [50.0, 100.0, 200.0])
    radii: list = field(default_factory=lambda: [float(r) for r in range(20, 201, 20)])
    samples: int = 10_000
    grid_n: int = 20_000
    refine_steps: int = 20
    R: float = 10.0
    k_max: int = dynamics.K_MAX
    levels: int = 6
    hausdorff_tol: float = 0.15
    seed: int = 0
    output_dir: str = "."
    threads: int = 1
    target: str = "auto"

    def validate(self):
        for name in ("samples", "grid_n", "k_max", "levels", "threads"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be positive")
        if self.refine_steps < 0:
            raise UsageError("refine_steps must be non-negative")
        if not (self.R > 0 and self.hausdorff_tol > 0):
            raise UsageError("R and hausdorff_tol must be positive")
        if any(not r > 0 for r in self.shells) or any(not r > 0 for r in self.radii):
            raise UsageError("shells and radii must be positive")
        if self.target not in ("auto", "hemisphere", "caps", "none"):
            raise UsageError(f"unknown target {self.target!r}")
        return self

    def digest(self) -> str:
        d = asdict(self)
        d.pop("output_dir")
        d.pop("threads")  # results do not depend on the worker count
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {s!r}")
    return v


def _float_list(s: str) -> list:
    """``a,b,c`` or ``start:stop:step`` (stop included)."""
    if ":" in s:
        parts = [_float(p) for p in s.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"bad range {s!r}")
        a, b, h = parts
        k = int(math.floor((b - a) / h + 1e-9))
        return [a + i * h for i in range(k + 1)]
    return [_float(p) for p in s.split(",") if p.strip()]


def parse_point(s: str) -> np.ndarray:
    parts = s.split(",")
    if len(parts) != 3:
        raise UsageError(f"point must be three comma-separated numbers, got {s!r}")
    try:
        return np.array([_float(p) for p in parts])
    except argparse.ArgumentTypeError as e:
        raise UsageError(str(e)) from None


def fmt(v: float) -> str:
    return "{:.17g}".format(float(v))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--seed", type=int)

    mapopt = _Parser(add_help=False)
    mapopt.add_argument("--map", dest="map_kind", help="identity, scaling, zorich, ns, conjugated or glued")
    mapopt.add_argument("--map-config", type=Path, help="JSON map description")
    mapopt.add_argument("--ramp-height", type=_float, dest="T")
    mapopt.add_argument("--scale", type=_float, dest="c", help="factor for --map scaling")
    mapopt.add_argument("--cap", action="append", metavar="X,Y,Z,ETA",
                        help="cap center and half-angle (repeatable)")

    p = _Parser(prog="qrdyn", description="Quasiregular dynamics experiments.")
    p.add_argument("--version", action="version", version=f"qrdyn {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", parents=[common, mapopt], help="evaluate a map at one point")
    e.add_argument("--point", required=True, help="x,y,z")

    sub.add_parser("constants", parents=[common], help="modulus constants of Z")

    d = sub.add_parser("directions", parents=[common, mapopt], help="Julia limiting directions")
    d.add_argument("--shells", type=_float_list)
    d.add_argument("--grid-n", type=int)
    d.add_argument("--threshold-radius", type=_float, dest="R")
    d.add_argument("--k-max", type=int)
    d.add_argument("--levels", type=int)
    d.add_argument("--target", choices=["auto", "hemisphere", "caps", "none"])
    d.add_argument("--hausdorff-tol", type=_float)
    d.add_argument("--samples", type=int, help="sphere samples per threshold level")

    g = sub.add_parser("growth", parents=[common, mapopt], help="growth curve and order estimate")
    g.add_argument("--radii", type=_float_list)
    g.add_argument("--samples", type=int)
    g.add_argument("--refine-steps", type=int)

    c = sub.add_parser("covering", parents=[common], help="separating-surface check for one configuration")
    c.add_argument("--row", type=int, default=0, help="square row index n")
    c.add_argument("--center", type=int, default=0, help="central square index m")
    c.add_argument("--height", type=_float, default=10.0, help="slice height s")
    c.add_argument("--rays", type=int, default=1000)
    c.add_argument("--resolution", type=int, default=128)
    c.add_argument("--ply", type=Path, help="write the surface as ASCII PLY")

    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("suite", choices=[*checks.SUITES, "all"])
    return p


def _map_config(args, base: dict) -> dict:
    cfg = dict(base)
    if getattr(args, "map_config", None):
        cfg = json.loads(Path(args.map_config).read_text(encoding="utf-8"))
    if getattr(args, "map_kind", None):
        keep = "T" in cfg and args.map_kind in ("ns", "conjugated", "glued")
        cfg = {"kind": args.map_kind, **({"T": cfg["T"]} if keep else {})}
    if getattr(args, "T", None) is not None:
        cfg["T"] = args.T
    if getattr(args, "c", None) is not None:
        cfg["c"] = args.c
    if getattr(args, "cap", None):
        caps = []
        for s in args.cap:
            parts = s.split(",")
            if len(parts) != 4:
                raise UsageError(f"cap must be X,Y,Z,ETA, got {s!r}")
            try:
                vals = [_float(x) for x in parts]
            except argparse.ArgumentTypeError as e:
                raise UsageError(str(e)) from None
            caps.append({"center": vals[:3], "half_angle": vals[3]})
        cfg["caps"] = caps
    return cfg


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config: {e}") from None
        known = set(asdict(cfg))
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for k, val in raw.items():
            setattr(cfg, k, val)
    for k in ("threads", "output_dir", "seed", "shells", "grid_n", "R", "k_max", "levels",
              "target", "hausdorff_tol", "samples", "radii", "refine_steps"):
        val = getattr(args, k, None)
        if val is not None:
            setattr(cfg, k, val)
    cfg.map = _map_config(args, cfg.map)
    cfg.experiment = args.command
    return cfg.validate()


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_manifest(cfg: RunConfig, outputs, durations):
    man = {
        "command": cfg.experiment,
        "config": asdict(cfg),
        "config_hash": cfg.digest(),
        "outputs": sorted(outputs),
        "versions": {"qrdyn": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "durations_s": {k: round(v, 6) for k, v in durations.items()},
    }
    _write(Path(cfg.output_dir) / "manifest.json", _dumps(man))


def cmd_eval(args) -> int:
    cfg = load_config(args)
    x = parse_point(args.point)
    f = map_from_config(cfg.map)
    try:
        y = f(x)
    except MapOverflowError as e:
        print(f"overflow: {e}", file=sys.stderr)
        return EXIT_FAIL
    if args.json:
        print(json.dumps({"map": cfg.map, "input": x.tolist(), "output": y.tolist()}))
    else:
        print(" ".join(fmt(v) for v in y))
    return EXIT_OK


def cmd_constants(args) -> int:
    t0 = time.perf_counter()
    c = zorich.modulus_constants()
    if args.json:
        print(c.to_json())
    else:
        print(f"C1 = {fmt(c.C1)}\nC2 = {fmt(c.C2)}  ({time.perf_counter() - t0:.2f} s)")
    return EXIT_OK


def _direction_summary(D, f, cfg: RunConfig) -> dict:
    rep = {"status": D.status, "n_samples": len(D), "shell_radii": [float(r) for r in D.shell_radii]}
    target = cfg.target
    if target == "auto":
        target = "caps" if isinstance(f, GluedMap) else ("hemisphere" if cfg.map.get("kind") == "ns" else "none")
    rep["target"] = target
    if len(D) == 0 or target == "none":
        return rep
    if target == "hemisphere":
        caps = [upper_hemisphere()]
    else:
        if not isinstance(f, GluedMap):
            raise UsageError("target 'caps' needs a glued map")
        caps = f.caps
    rep["hausdorff"] = hausdorff_sphere(D, caps if len(caps) > 1 else caps[0])
    rep["max_distance_to_target"] = float(np.max(distance_to_caps(D.samples, caps)))
    rep["within_tolerance"] = bool(rep["hausdorff"] <= cfg.hausdorff_tol)
    per_cap = []
    for c in caps:
        inside = D.samples[np.asarray(c.contains(D.samples, tol=1e-3))]
        per_cap.append({**c.to_dict(), "n_samples": int(len(inside)),
                        "hausdorff": hausdorff_sphere(inside, c) if len(inside) else None})
    rep["per_cap"] = per_cap
    return rep


def cmd_directions(args) -> int:
    cfg = load_config(args)
    f = map_from_config(cfg.map)
    out = Path(cfg.output_dir)
    dur = {}
    t0 = time.perf_counter()
    try:
        ts = dynamics.threshold_sequence(f, cfg.R, cfg.levels, n=cfg.samples)
    except DomainError as e:
        ts = None
        reason = str(e)
    dur["thresholds"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if ts is None:
        from .vecgeom.sphere import DirectionSet
        D = DirectionSet(status="empty")
    else:
        reason = None
        D = dynamics.limiting_directions(f, cfg.shells, cfg.grid_n, ts, cfg.k_max, workers=cfg.threads)
    dur["directions"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    rep = _direction_summary(D, f, cfg)
    rep["thresholds"] = ts.to_dict() if ts else None
    if reason:
        rep["reason"] = reason
    dur["report"] = time.perf_counter() - t0
    _write(out / "directions.csv", D.to_csv())
    _write(out / "directions.json", D.to_json())
    _write(out / "report.json", _dumps(rep))
    write_manifest(cfg, ["directions.csv", "directions.json", "report.json"], dur)
    if args.json:
        print(json.dumps(rep, sort_keys=True))
    else:
        line = f"status={rep['status']} samples={rep['n_samples']}"
        if "hausdorff" in rep:
            line += f" hausdorff={rep['hausdorff']:.6g}"
        print(line)
    return EXIT_OK


def cmd_growth(args) -> int:
    cfg = load_config(args)
    f = map_from_config(cfg.map)
    out = Path(cfg.output_dir)
    radii = sorted(set(float(r) for r in cfg.radii))
    t0 = time.perf_counter()
    try:
        curve = growth.growth_curve(f, radii, cfg.samples, cfg.refine_steps)
    except MapOverflowError as e:
        msg = {"status": "overflow", "error": str(e), "point": np.asarray(e.point).tolist()}
        print(json.dumps(msg) if args.json else f"overflow: {e}", file=sys.stderr if not args.json else sys.stdout)
        return EXIT_FAIL
    dur = {"growth_curve": time.perf_counter() - t0}
    try:
        order = {"status": "ok", "order": growth.order_from_curve(curve.radii, curve.Mhat)}
    except DomainError as e:
        order = {"status": "undefined", "order": None, "reason": str(e)}
    order["radii"] = curve.radii.tolist()
    order["map"] = cfg.map
    _write(out / "growth.csv", curve.to_csv())
    _write(out / "order.json", _dumps(order))
    write_manifest(cfg, ["growth.csv", "order.json"], dur)
    if args.json:
        print(json.dumps(order, sort_keys=True))
    else:
        print(f"order = {order['order']}" if order["order"] is not None else f"order undefined: {order['reason']}")
    return EXIT_OK


def cmd_covering(args) -> int:
    cfg = load_config(args)
    try:
        rep = dynamics.covering_verification(args.row, args.center, args.height,
                                             n_rays=args.rays, res=args.resolution)
    except DomainError as e:
        raise UsageError(str(e)) from None
    if args.ply:
        _write(args.ply, rep.mesh.to_ply())
    print(rep.to_json() if args.json else f"passed={rep.passed} min_hits={rep.min_hits} "
          f"margin_low={rep.margin_low:.4g} margin_high={rep.margin_high:.4g}")
    del cfg
    return EXIT_OK if rep.passed else EXIT_FAIL


def _suite_kwargs(name, cfg):
    if name in ("zorich", "metrics", "covering"):
        return {"seed": cfg.seed}
    if name == "directions":
        return {"workers": cfg.threads}
    return {}


def cmd_verify(args) -> int:
    cfg = load_config(args)
    names = list(checks.SUITES) if args.suite == "all" else [args.suite]
    results, dur = [], {}
    for name in names:
        t0 = time.perf_counter()
        for r in checks.SUITES[name](**_suite_kwargs(name, cfg)):
            r["suite"] = name
            results.append(r)
            if args.json:
                print(json.dumps(r, sort_keys=True, default=float))
            else:
                print(f"{'PASS' if r['passed'] else 'FAIL'}  {name}.{r['check']}  value={r['value']}")
        dur[name] = time.perf_counter() - t0
    ok = all(r["passed"] for r in results)
    if args.output_dir:
        _write(Path(cfg.output_dir) / "verify.json", json.dumps(results, indent=2, default=float) + "\n")
        write_manifest(cfg, ["verify.json"], dur)
    if not args.json:
        print(f"{sum(r['passed'] for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "eval": cmd_eval,
    "constants": cmd_constants,
    "directions": cmd_directions,
    "growth": cmd_growth,
    "covering": cmd_covering,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"qrdyn: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, EmptyEstimateError) as e:
        print(f"qrdyn: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
