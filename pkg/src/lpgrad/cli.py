"""Batch command-line entry point.

Every subcommand validates its configuration, runs the corresponding
pipeline, and writes a JSON report plus CSV tables into the output
directory.  The full configuration is embedded verbatim in every output for
provenance, and identical configurations produce byte-identical files
regardless of the worker count.

Exit codes: 0 success, 2 validation failure or usage error, 3 when a
quadrature error bar crosses a pass/fail threshold (rerun with a finer
grid).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import counterexample as cx
from .curvature import k_global
from .errors import InconclusiveResolution, InvalidArgument
from .fields import make_cutoff
from .geodesic import greedy_covering
from .inequality import best_constant_search
from .quadrature import Rectangle
from .reporting import write_csv, write_json
from .surfaces import FlatSurface

SUBCOMMANDS = ("counterexample", "kq", "covering", "estimate",
               "integral-example", "optimality", "product")

_FIELD_TYPES = {
    "p": float, "beta": float, "delta": float, "kmax": int, "a": float,
    "K": float, "q": float, "R": float, "h": float, "order": int,
    "workers": int, "seed": int, "nmax": int, "budget": int, "V": float,
    "n": int, "alpha_scale": float, "surface": str, "family": str,
    "alpha": str, "centers": str, "region": str, "out": str,
}


@dataclass
class RunConfig:
    """Validated flags of one run; serialized into every output."""

    subcommand: str
    p: float = 4.0
    beta: float = 1.0
    delta: float = 0.1
    kmax: int = 8
    a: float = 1.75
    K: float = 0.0
    q: float = 2.0
    R: float = 1.0
    h: float = 1.0 / 512.0
    order: int = 4
    workers: int = 1
    seed: int = 0
    nmax: int = 10
    budget: int = 32
    V: float = 1.0
    n: int = 3
    surface: str = "flat"
    family: str = "uk"
    alpha: str = "linear"
    alpha_scale: float = 1.0
    centers: str = ""
    region: str = ""
    out: str = "."
    tolerances: dict = field(default_factory=dict)

    def provenance(self) -> dict:
        d = asdict(self)
        d.update(d.pop("tolerances"))
        return d


def _parse_centers(text):
    pts = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        x, y = part.split(",")
        pts.append((float(x), float(y)))
    return pts


def _surface_for(cfg: RunConfig):
    if cfg.surface == "flat":
        return FlatSurface(), None
    if cfg.surface == "sigma":
        spec = cx.CounterexampleSpec(p=cfg.p, beta=cfg.beta, delta=cfg.delta,
                                     k_max=cfg.kmax)
        bundle = cx.build_sigma(spec, workers=cfg.workers)
        return bundle.surface, bundle
    if cfg.surface == "remark":
        return cx.remark_surface(cfg.a, cfg.nmax, cfg.p), None
    raise InvalidArgument(f"unknown surface {cfg.surface!r}")


def _alpha_for(cfg: RunConfig):
    s = cfg.alpha_scale
    if s <= 0.0:
        raise InvalidArgument("alpha scale must be positive")
    if cfg.alpha == "linear":
        return lambda t: s * t
    if cfg.alpha == "quadratic":
        return lambda t: s * t * t
    if cfg.alpha == "exp":
        return lambda t: s * math.expm1(t)
    raise InvalidArgument(f"unknown alpha family {cfg.alpha!r}")


def _out_path(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.out, name)


def _run_counterexample(cfg: RunConfig):
    spec = cx.CounterexampleSpec(p=cfg.p, beta=cfg.beta, delta=cfg.delta,
                                 k_max=cfg.kmax)
    bundle = cx.build_sigma(spec, workers=cfg.workers)
    report = cx.verify_failure(bundle, h=cfg.h, workers=cfg.workers)
    prov = cfg.provenance()
    payload = {"config": prov, "report": report.to_dict(),
               "epsilon_schedule": {
                   "epsilons": bundle.schedule.epsilons,
                   "thresholds": bundle.schedule.thresholds,
                   "attained": bundle.schedule.attained}}
    write_json(_out_path(cfg, "counterexample_report.json"), payload)
    write_csv(_out_path(cfg, "counterexample_norms.csv"), report.csv_header,
              report.csv_rows(), prov)
    write_csv(_out_path(cfg, "counterexample_patches.csv"),
              ["m", "eps", "threshold", "core_closed", "core_quad",
               "core_relerr", "lap_core_p"],
              [[r["m"], r["eps"], r["threshold"], r["core_closed"],
                r["core_quad"], r["core_relerr"], r["lap_core_p"]]
               for r in report.per_patch], prov)
    return report


def cmd_counterexample(cfg: RunConfig) -> int:
    _run_counterexample(cfg)
    return 0


def cmd_kq(cfg: RunConfig) -> int:
    surface, bundle = _surface_for(cfg)
    if cfg.centers:
        centers = _parse_centers(cfg.centers)
    elif cfg.surface == "sigma":
        centers = list(bundle.spec.centers) + [(0.5, 0.0)]
    elif cfg.surface == "remark":
        centers = [(4.0 * n, 0.0) for n in range(1, min(cfg.nmax, 3) + 1)] + [(2.0, 0.0)]
    else:
        centers = [(0.0, 0.0)]
    stats = k_global(surface, centers, cfg.q, cfg.R, cfg.K, 2, cfg.h,
                     workers=cfg.workers)
    prov = cfg.provenance()
    write_json(_out_path(cfg, "kq_report.json"),
               {"config": prov, "stats": stats.to_dict()})
    write_csv(_out_path(cfg, "kq_centers.csv"), stats.csv_header,
              stats.csv_rows(), prov)
    return 0


def cmd_covering(cfg: RunConfig) -> int:
    surface, _ = _surface_for(cfg)
    if cfg.region:
        vals = [float(v) for v in cfg.region.split(",")]
        if len(vals) != 4:
            raise InvalidArgument("region must be xmin,xmax,ymin,ymax")
        region = Rectangle(*vals)
    elif cfg.surface == "sigma":
        region = Rectangle(-0.5, 3.5, -0.5, 0.5)
    else:
        region = Rectangle(0.0, 1.0, 0.0, 1.0)
    report = greedy_covering(surface, region, cfg.R, cfg.h)
    prov = cfg.provenance()
    write_json(_out_path(cfg, "covering_report.json"),
               {"config": prov, "report": report.to_dict()})
    write_csv(_out_path(cfg, "covering_centers.csv"), ["x", "y"],
              [[c[0], c[1]] for c in report.centers], prov)
    return 0


def cmd_estimate(cfg: RunConfig) -> int:
    prov = cfg.provenance()
    if cfg.family == "uk":
        surface, bundle = _surface_for(
            cfg if cfg.surface == "sigma" else
            RunConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(cfg)},
                         "surface": "sigma"}))
        family = [(f"k={k}", bundle.u_fields[k]) for k in range(cfg.kmax + 1)]
    elif cfg.family == "bump":
        surface = FlatSurface()
        family = (lambda w: make_cutoff(0.5 * w, w), 1.0, 12.0)
    else:
        raise InvalidArgument(f"unknown family {cfg.family!r}")
    best, rows = best_constant_search(surface, family, cfg.p, cfg.budget,
                                      h=cfg.h, workers=cfg.workers)
    write_json(_out_path(cfg, "estimate_report.json"),
               {"config": prov, "best": best.to_dict()})
    write_csv(_out_path(cfg, "estimate_scan.csv"),
              ["parameter", "Q_p", "numerator", "denominator", "error_estimate"],
              [[label, r.ratio, r.numerator, r.denominator, r.error_estimate]
               for label, r in rows], prov)
    return 0


def cmd_integral_example(cfg: RunConfig) -> int:
    report = cx.integral_bound_example(cfg.p, cfg.a, cfg.nmax, cfg.h,
                                       workers=cfg.workers)
    prov = cfg.provenance()
    write_json(_out_path(cfg, "integral_example_report.json"),
               {"config": prov, "report": report.to_dict()})
    write_csv(_out_path(cfg, "integral_example_balls.csv"), report.csv_header,
              report.csv_rows(), prov)
    return 0


def cmd_optimality(cfg: RunConfig) -> int:
    spec = cx.CounterexampleSpec(p=cfg.p, beta=cfg.beta, delta=cfg.delta,
                                 k_max=cfg.kmax)
    bundle = cx.build_sigma(spec, workers=cfg.workers)
    report = cx.optimality_schedule(_alpha_for(cfg), bundle)
    prov = cfg.provenance()
    write_json(_out_path(cfg, "optimality_report.json"),
               {"config": prov, "report": report.to_dict()})
    write_csv(_out_path(cfg, "optimality_centers.csv"),
              ["m", "s_m", "curvature_bound", "margin"],
              [[m, report.centers[m][0], report.curvature_bounds[m],
                report.margins[m]] for m in range(len(report.centers))], prov)
    return 0


def cmd_product(cfg: RunConfig) -> int:
    base = _run_counterexample(cfg)
    scaled = cx.product_norms(base, cfg.V, cfg.n)
    prov = cfg.provenance()
    write_json(_out_path(cfg, "product_report.json"),
               {"config": prov, "report": scaled.to_dict()})
    write_csv(_out_path(cfg, "product_norms.csv"), scaled.csv_header,
              scaled.csv_rows(), prov)
    return 0


_HANDLERS = {
    "counterexample": cmd_counterexample,
    "kq": cmd_kq,
    "covering": cmd_covering,
    "estimate": cmd_estimate,
    "integral-example": cmd_integral_example,
    "optimality": cmd_optimality,
    "product": cmd_product,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpgrad",
        description="Numerical laboratory for Lp gradient estimates on "
                    "conformally flat surfaces",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--p", type=float, default=4.0)
        sp.add_argument("--beta", type=float, default=1.0)
        sp.add_argument("--delta", type=float, default=0.1)
        sp.add_argument("--kmax", type=int, default=8)
        sp.add_argument("--a", type=float, default=1.75)
        sp.add_argument("--K", type=float, default=0.0)
        sp.add_argument("--q", type=float, default=2.0)
        sp.add_argument("--R", type=float, default=1.0 if name != "covering" else 0.25)
        sp.add_argument("--h", type=float,
                        default=1.0 / 512.0 if name in ("counterexample", "product")
                        else 1.0 / 128.0 if name not in ("covering",)
                        else 1.0 / 64.0)
        sp.add_argument("--order", type=int, default=4)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--nmax", type=int, default=10)
        sp.add_argument("--budget", type=int, default=32)
        sp.add_argument("--V", type=float, default=1.0)
        sp.add_argument("--n", type=int, default=3)
        sp.add_argument("--surface", type=str,
                        default="sigma" if name in ("covering", "estimate") else "flat")
        sp.add_argument("--family", type=str, default="uk")
        sp.add_argument("--alpha", type=str, default="linear")
        sp.add_argument("--alpha-scale", dest="alpha_scale", type=float, default=1.0)
        sp.add_argument("--centers", type=str, default="")
        sp.add_argument("--region", type=str, default="")
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--config", type=str, default=None)
        sp.add_argument("--tol", action="append", default=[],
                        metavar="NAME=VALUE")
    return parser


def _load_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidArgument(f"malformed config line: {line!r}")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in _FIELD_TYPES:
                raise InvalidArgument(f"unknown config key {key!r}")
            out[key] = _FIELD_TYPES[key](value.strip())
    return out


def _validate(cfg: RunConfig) -> None:
    if cfg.h <= 0.0:
        raise InvalidArgument("h must be positive")
    if cfg.workers < 1:
        raise InvalidArgument("workers must be >= 1")
    if cfg.q < 1.0:
        raise InvalidArgument("q must be >= 1")
    if cfg.R <= 0.0:
        raise InvalidArgument("R must be positive")
    if cfg.subcommand in ("counterexample", "product", "optimality"):
        # surfaces this spec builds require the core divergence condition
        cx.CounterexampleSpec(p=cfg.p, beta=cfg.beta, delta=cfg.delta,
                              k_max=cfg.kmax)
    if cfg.subcommand == "integral-example" and not (2.0 - 2.0 / cfg.p < cfg.a < 2.0):
        raise InvalidArgument("a must lie in (2 - 2/p, 2)")
    if cfg.subcommand == "covering" and not (0.0 < 2.0 * cfg.R <= 1.0):
        raise InvalidArgument("covering requires 0 < 2R <= 1")
    if cfg.subcommand == "product" and cfg.V <= 0.0:
        raise InvalidArgument("V must be positive")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    values = vars(args)
    config_path = values.pop("config", None)
    if config_path:
        try:
            file_values = _load_config_file(config_path)
        except OSError as exc:
            print(f"error: cannot read config file: {exc}", file=sys.stderr)
            return 2
        except InvalidArgument as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        # flags win: only fill values the command line left at their default
        defaults = vars(parser.parse_args([values["subcommand"]]))
        for key, val in file_values.items():
            if values.get(key) == defaults.get(key):
                values[key] = val
    tol_pairs = values.pop("tol", [])
    tolerances = {}
    for item in tol_pairs:
        if "=" not in item:
            print(f"error: --tol expects NAME=VALUE, got {item!r}", file=sys.stderr)
            return 2
        name, val = item.split("=", 1)
        tolerances[name.strip()] = float(val)
    out = values.pop("out", None)
    if out is None:
        out = os.environ.get("LPGRAD_OUTDIR", ".")
    cfg = RunConfig(out=out, tolerances=tolerances, **values)
    try:
        _validate(cfg)
        np.random.seed(cfg.seed % (2 ** 32))
        return _HANDLERS[cfg.subcommand](cfg)
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InconclusiveResolution as exc:
        print(f"inconclusive at this resolution: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
