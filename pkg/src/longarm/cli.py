"""Batch command-line front end.

Subcommands are thin adapters over the library: estimation jobs emit a
CSV table plus a JSON metadata sidecar; oracle and arithmetic commands
emit JSON to stdout. Identical (config, seed) produces byte-identical
output for any worker count.

Exit codes: 0 success, 2 validation error, 3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, analysis, brw, exact, lrp
from .gw import OffspringDist, total_progeny_pmf
from .kernel import KernelSpec, build_kernel


class ValidationError(Exception):
    pass


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("LONGARM_WORKERS", "1")))
    except ValueError:
        return 1


def _kernel_spec_from_args(args, cfg: dict) -> KernelSpec:
    obj = {"d": cfg.get("d", getattr(args, "d", None)),
           "alpha": cfg.get("alpha", getattr(args, "alpha", None)),
           "lambda": cfg.get("lambda", getattr(args, "lam", 1.0)),
           "shape": cfg.get("shape", getattr(args, "shape", "canonical"))}
    if "kappa" in cfg or getattr(args, "kappa", None) is not None:
        obj["kappa"] = cfg.get("kappa", getattr(args, "kappa", None))
    if "table" in cfg:
        obj["table"] = cfg["table"]
    if obj["d"] is None:
        raise ValidationError("kernel dimension d is required")
    try:
        return KernelSpec.from_json(obj)
    except (ValueError, KeyError, TypeError) as e:
        raise ValidationError(str(e)) from e


def _offspring_from_string(s: str) -> OffspringDist:
    if s == "binary":
        return OffspringDist.binary()
    if s == "geometric-half":
        return OffspringDist.geometric_half()
    try:
        return OffspringDist.from_table(json.loads(s))
    except (ValueError, json.JSONDecodeError) as e:
        raise ValidationError(f"bad offspring law {s!r}: {e}") from e


def _load_config(args) -> dict:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            return json.load(fh)
    return {}


def _parse_radii(val) -> list:
    if isinstance(val, str):
        return [int(x) for x in val.split(",") if x.strip()]
    return [int(x) for x in val]


def _write_outputs(out_path: str | None, csv_text: str, meta: dict) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(csv_text)
        with open(out_path + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(csv_text)
        sys.stderr.write(json.dumps(meta, sort_keys=True) + "\n")


def _emit(obj: dict) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


# ----------------------------------------------------------- subcommands

def cmd_brw_gamma(args) -> int:
    cfg = _load_config(args)
    spec = _kernel_spec_from_args(args, cfg.get("kernel", {}))
    off = _offspring_from_string(cfg.get("offspring", args.offspring))
    radii = _parse_radii(cfg.get("radii", args.radii))
    samples = int(cfg.get("samples", args.samples))
    seed = int(cfg.get("seed", args.seed))
    workers = int(cfg.get("workers", args.workers))
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    if not radii or any(r < 1 for r in radii):
        raise ValidationError("radii must be a nonempty list of integers >= 1")
    kernel = build_kernel(spec, tab_radius=args.tab_radius)
    cap_policy = None
    if cfg.get("cap", getattr(args, "cap", None)):
        fixed = int(cfg.get("cap", args.cap))
        cap_policy = lambda r: fixed
    t0 = time.time()
    table = brw.estimate_gamma_brw(off, kernel, radii, samples,
                                   cap_policy=cap_policy, seed=seed,
                                   workers=workers)
    meta = {"model": "BRW", "kernel": spec.to_json(), "offspring": off.to_json(),
            "radii": radii, "samples": samples, "seed": seed,
            "workers": workers, "version": __version__,
            "wall_time_s": round(time.time() - t0, 3),
            "rows": [asdict(r) for r in table.rows]}
    _write_outputs(args.output, table.to_csv(), meta)
    return 0


def cmd_lrp_gamma(args) -> int:
    cfg = _load_config(args)
    spec = _kernel_spec_from_args(args, cfg.get("kernel", {}))
    radii = _parse_radii(cfg.get("radii", args.radii))
    samples = int(cfg.get("samples", args.samples))
    window = int(cfg.get("window", args.window))
    seed = int(cfg.get("seed", args.seed))
    workers = int(cfg.get("workers", args.workers))
    vertex_cap = int(cfg.get("vertex_cap", args.vertex_cap))
    p_raw = cfg.get("p", args.p)
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    kernel = build_kernel(spec, tab_radius=args.tab_radius)
    t0 = time.time()
    if p_raw == "auto-pc":
        pc_info = lrp.estimate_pc(kernel, window, samples=max(1000, samples // 10),
                                  seed=seed + 1, workers=workers,
                                  halve_window=False)
        p = pc_info["p_c"]
    else:
        p, pc_info = float(p_raw), None
    try:
        table = lrp.estimate_gamma_lrp(kernel, p, radii, window, samples,
                                       vertex_cap=vertex_cap, seed=seed,
                                       workers=workers)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    meta = {"model": "LRP", "kernel": spec.to_json(), "p": p,
            "pc_estimate": pc_info, "radii": radii, "samples": samples,
            "window": window, "vertex_cap": vertex_cap, "seed": seed,
            "workers": workers, "version": __version__,
            "wall_time_s": round(time.time() - t0, 3),
            "rows": [asdict(r) for r in table.rows]}
    _write_outputs(args.output, table.to_csv(), meta)
    return 0


def cmd_estimate_pc(args) -> int:
    cfg = _load_config(args)
    spec = _kernel_spec_from_args(args, cfg.get("kernel", {}))
    kernel = build_kernel(spec, tab_radius=args.tab_radius)
    out = lrp.estimate_pc(kernel, int(cfg.get("window", args.window)),
                          samples=int(cfg.get("samples", args.samples)),
                          seed=int(cfg.get("seed", args.seed)),
                          workers=int(cfg.get("workers", args.workers)))
    _emit(out)
    return 0


def cmd_green(args) -> int:
    spec = _kernel_spec_from_args(args, {})
    kernel = build_kernel(spec, tab_radius=args.tab_radius)
    try:
        res = exact.green_function(kernel, args.N, args.R)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    lines = ["x,g"]
    idx = [0] * spec.d
    for x in range(args.R + 1):
        idx[0] = x
        lines.append(f"{x},{res.field[idx]!r}")
    meta = {"kernel": spec.to_json(), "N": res.N, "R": args.R,
            "residual": res.residual, "mass_outside": res.field.mass_outside,
            "version": __version__}
    _write_outputs(args.output, "\n".join(lines) + "\n", meta)
    return 0


def cmd_progeny(args) -> int:
    off = _offspring_from_string(args.offspring)
    pmf = total_progeny_pmf(off, args.n_max)
    lines = ["n,pmf"]
    lines.extend(f"{n},{float(pmf[n - 1])!r}" for n in range(1, args.n_max + 1))
    _write_outputs(args.output, "\n".join(lines) + "\n",
                   {"offspring": off.to_json(), "n_max": args.n_max,
                    "version": __version__})
    return 0


def _load_graph(path: str) -> exact.TinyGraph:
    with open(path) as fh:
        obj = json.load(fh)
    try:
        return exact.TinyGraph(n_vertices=int(obj["n_vertices"]),
                               edges=[(int(u), int(v), float(q))
                                      for u, v, q in obj["edges"]])
    except (KeyError, ValueError, TypeError) as e:
        raise ValidationError(f"bad graph file: {e}") from e


def cmd_enumerate(args) -> int:
    graph = _load_graph(args.graph)
    event = exact.connection_event(graph, args.source, args.target)
    prob = exact.enumerate_probability(graph, event)
    _emit({"probability": prob, "event": f"{args.source} <-> {args.target}"})
    return 0


def cmd_bk_check(args) -> int:
    graph = _load_graph(args.graph)
    ua, va = (int(x) for x in args.a.split(","))
    ub, vb = (int(x) for x in args.b.split(","))
    try:
        box, prod = exact.bk_check(graph, exact.connection_event(graph, ua, va),
                                   exact.connection_event(graph, ub, vb))
    except ValueError as e:
        raise ValidationError(str(e)) from e
    if box > prod + 1e-12:
        print(f"BK inequality violated: {box} > {prod}", file=sys.stderr)
        return 3
    _emit({"p_disjoint": box, "p_product": prod, "holds": True})
    return 0


def cmd_exponents(args) -> int:
    try:
        es = analysis.exponents(args.alpha)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    _emit(asdict(es))
    return 0


def cmd_check_beta(args) -> int:
    try:
        es = analysis.exponents(args.alpha)
        beta = args.beta if args.beta is not None else 0.5 * (es.beta_lo + es.beta_hi)
        ok, report = analysis.beta_constraints_hold(args.alpha, beta)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    _emit({"alpha": args.alpha, "beta": beta, "all_hold": ok,
           "constraints": report,
           "interval": [es.beta_lo, es.beta_hi]})
    return 0


def cmd_fit(args) -> int:
    rows = []
    with open(args.input) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            rows.append(dict(zip(header, line.strip().split(","))))
    if not rows:
        raise ValidationError("empty input table")
    value_col = args.value_column
    if value_col not in header:
        raise ValidationError(f"column {value_col!r} not in {header}")
    pts = []
    for row in rows:
        r, v = float(row["r"]), float(row[value_col])
        if v <= 0:
            continue
        if "ci_lo" in row and "ci_hi" in row:
            se = (float(row["ci_hi"]) - float(row["ci_lo"])) / (2 * 1.959964)
            pts.append((r, v, se))
        else:
            pts.append((r, v))
    try:
        fit = analysis.loglog_fit(pts)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    _emit({"slope": fit.slope, "intercept": fit.intercept,
           "slope_stderr": fit.slope_stderr, "r_squared": fit.r_squared})
    return 0


# ----------------------------------------------------------------- parser

def _add_kernel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lam", "--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--shape", default="canonical")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--tab-radius", type=int, default=None)


def _add_job_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON job file; overrides flags")
    p.add_argument("--radii", default="8,16,32")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--output", "-o", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="longarm",
                                 description="One-arm probabilities for critical "
                                             "BRW and long-range percolation")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("brw-gamma", help="Monte Carlo gamma(r) for critical BRW")
    _add_kernel_flags(p)
    _add_job_flags(p)
    p.add_argument("--offspring", default="binary")
    p.add_argument("--cap", type=int, default=None)
    p.set_defaults(func=cmd_brw_gamma)

    p = sub.add_parser("lrp-gamma", help="Monte Carlo gamma(r) for LRP")
    _add_kernel_flags(p)
    _add_job_flags(p)
    p.add_argument("--p", default="auto-pc")
    p.add_argument("--window", type=int, default=256)
    p.add_argument("--vertex-cap", type=int, default=20000)
    p.set_defaults(func=cmd_lrp_gamma)

    p = sub.add_parser("estimate-pc", help="critical point by tail-slope bisection")
    _add_kernel_flags(p)
    p.add_argument("--config", default=None)
    p.add_argument("--window", type=int, default=128)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.set_defaults(func=cmd_estimate_pc)

    p = sub.add_parser("green", help="windowed Green's function oracle")
    _add_kernel_flags(p)
    p.add_argument("--N", type=int, default=4096)
    p.add_argument("--R", type=int, default=1024)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("progeny", help="exact total-progeny distribution")
    p.add_argument("--offspring", default="binary")
    p.add_argument("--n-max", type=int, default=1000)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_progeny)

    p = sub.add_parser("enumerate", help="exhaustive connection probability")
    p.add_argument("--graph", required=True, help="TinyGraph JSON file")
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--target", type=int, required=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("bk-check", help="disjoint-occurrence inequality check")
    p.add_argument("--graph", required=True)
    p.add_argument("--a", required=True, help="connection event, e.g. 0,1")
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_bk_check)

    p = sub.add_parser("exponents", help="derived exponents for a given alpha")
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("check-beta", help="beta constraint arithmetic")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=None)
    p.set_defaults(func=cmd_check_beta)

    p = sub.add_parser("fit", help="log-log exponent fit of a CSV table")
    p.add_argument("--input", required=True)
    p.add_argument("--value-column", default="gamma_hat")
    p.set_defaults(func=cmd_fit)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (FloatingPointError, AssertionError, RuntimeError) as e:
        print(f"numerical guard: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
