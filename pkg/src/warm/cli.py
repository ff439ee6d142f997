"""``warm`` command line: equilibria, thresholds, phase sweeps, simulation, flows and reductions.

Exit codes: 0 success, 2 invalid input, 3 solver warnings under ``--strict``,
4 internal consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import families as fam
from .dynamics import FlowError, flow
from .equilibria import EPS_EIG, find_equilibria, support_lower_bound
from .model import (
    ModelError,
    build_family,
    check_symmetry,
    family_graph,
    load_model,
    model_to_dict,
)
from .reduction import ConsistencyError, enumerate_spanning_collections, star_forest_allocation
from .simulate import batch, default_seed
from .thresholds import family_threshold, uniform_numeric_threshold

EXIT_OK, EXIT_INVALID, EXIT_STRICT, EXIT_CONSISTENCY = 0, 2, 3, 4
STRUCT_MATCH = 1e-8


class UsageError(ValueError):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"parameter {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_value(v.strip())
    return out


def _model_args(p: argparse.ArgumentParser, alpha_required: bool = False) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="JSON model file")
    src.add_argument("--family", help="named family (star, cycle, complete, path, whisker, triangle, fixed_m, bernoulli, graph)")
    p.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE", help="family parameters, values parsed as JSON")
    p.add_argument("--alpha", type=float, required=alpha_required, help="reinforcement exponent (> 1)")


def _model(args, alpha: float | None = None):
    a = alpha if alpha is not None else args.alpha
    if args.model:
        return load_model(args.model, a)
    if a is None:
        raise UsageError("--alpha is required with --family")
    return build_family(args.family, parse_params(args.params), a)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=None if out is None else 2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


# --- structured-vs-dense consistency ---------------------------------------------


def structured_checks(family: str | None, params: dict, alpha: float) -> list[dict]:
    """Compare closed-form spectra with the dense solver for the families that have them."""
    rows = []

    def record(name, pairs_or_vals, model, point):
        closed = np.sort(np.asarray(pairs_or_vals, dtype=float))
        dense = fam.dense_spectrum(model, point)
        rows.append({"check": name, "error": float(np.max(np.abs(closed - dense)))})

    if family in ("triangle",) or (family in ("cycle", "complete") and params.get("n", params.get("n_v")) == 3):
        model = build_family("cycle", {"n": 3}, alpha)
        for b in fam.triangle_equilibria(alpha):
            if b.label in ("iv", "v"):
                p = np.array(b.points[0])
                odd = [i for i in range(3) if np.sum(np.isclose(p, p[i])) == 1][0]
                rep = p[(odd + 1) % 3]
                record(f"triangle_{b.label}", fam.triangle_structured_eigen(p[odd], rep, alpha, check=False), model, p)
    elif family == "star":
        n = int(params["n"])
        model = build_family("star", {"n": n}, alpha)
        for k in range(1, n):
            for e in fam.star_equilibria(n, k, alpha):
                vals = fam.expand_spectrum(fam.star_structured_eigen(n, k, e.v, e.u, alpha, check=False))
                record(f"star_k{k}_{e.branch}", vals, model, e.point)
    elif family == "whisker" and int(params.get("r", 0)) == int(params.get("s", -1)):
        r = int(params["r"])
        model = build_family("whisker", {"r": r, "s": r}, alpha)
        for e in fam.whisker_symmetric_equilibria(r, alpha):
            vals = fam.expand_spectrum(fam.whisker_structured_eigen(r, e.v, e.u, alpha, check=False))
            record(f"whisker_{'stable' if e.stable else 'unstable'}", vals, model, e.point)
    return rows


# --- commands ----------------------------------------------------------------------


def cmd_model(args) -> int:
    model = _model(args)
    if args.action == "validate":
        _emit({"schema": 1, "valid": True, "n": model.n, "subsets": len(model.dist)}, args.out)
        return EXIT_OK
    rep = check_symmetry(model.dist)
    doc = model_to_dict(model)
    doc.update(
        {
            "schema": 1,
            "label": model.label,
            "symmetry": {
                "strong": rep.strong,
                "weak": rep.weak,
                "p_m": {str(k): v for k, v in rep.p_m.items()},
                "a_m": {str(k): v for k, v in rep.a_m.items()},
                "min_size": rep.min_size,
            },
            "support_lower_bound": [float(b) for b in support_lower_bound(model)],
        }
    )
    _emit(doc, args.out)
    return EXIT_OK


def cmd_equilibria(args) -> int:
    model = _model(args)
    cat = find_equilibria(model, args.starts, eps=args.eps, dedup=args.dedup)
    doc = cat.to_dict()
    params = parse_params(args.params) if args.family else {}
    checks = structured_checks(args.family, params, model.alpha) if args.family else []
    doc["meta"]["structured_checks"] = checks
    _emit(doc, args.out)
    if any(c["error"] > STRUCT_MATCH for c in checks):
        print("structured and dense spectra disagree", file=sys.stderr)
        return EXIT_CONSISTENCY
    if args.strict and cat.meta["newton_failures"]:
        print(f"{cat.meta['newton_failures']} Newton starts did not converge", file=sys.stderr)
        return EXIT_STRICT
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.family:
        params = parse_params(args.params)
        try:
            res = family_threshold(args.family, params)
        except ModelError:
            if args.alpha_max is None:
                raise
            res = _numeric_uniform(args)
    else:
        res = _numeric_uniform(args)
    print(json.dumps(res.to_dict()))
    return EXIT_OK


def _numeric_uniform(args):
    model = _model(args, alpha=args.alpha or 2.0)
    if not check_symmetry(model.dist).weak:
        raise UsageError("the uniform point is an equilibrium only for symmetric laws; no threshold to compute")
    hi = args.alpha_max or 20.0
    return uniform_numeric_threshold(model, hi, family=args.family or "model")


def alpha_grid(lo: float, hi: float, count: int, log: bool) -> np.ndarray:
    if count < 2:
        raise UsageError("a sweep needs --count >= 2")
    if not (1.0 < lo < hi):
        raise UsageError("need 1 < alpha-min < alpha-max")
    return np.geomspace(lo, hi, count) if log else np.linspace(lo, hi, count)


def _phase_rows(job):
    model, alpha, starts, eps = job
    cat = find_equilibria(model.with_alpha(alpha), starts, eps=eps)
    rows = []
    for i, e in enumerate(cat):
        comps = sorted(e.point, reverse=True)
        rows.append([repr(float(alpha)), i, len(e.support)] + [repr(float(c)) for c in comps] + [repr(e.max_real), e.classification])
    return rows


def cmd_phase(args) -> int:
    grid = alpha_grid(args.alpha_min, args.alpha_max, args.count, args.log)
    model = _model(args, alpha=float(grid[0]))
    jobs = [(model, float(a), args.starts, args.eps) for a in grid]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            parts = list(ex.map(_phase_rows, jobs))
    else:
        parts = [_phase_rows(j) for j in jobs]
    header = ["alpha", "equilibrium_id", "support_size"] + [f"c_{i}" for i in range(model.n)] + ["max_re", "class"]
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for rows in parts:
            w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _model(args)
    seed = args.seed if args.seed is not None else default_seed()
    cat = find_equilibria(model, args.starts)
    res = batch(
        model,
        args.runs,
        args.steps,
        seed,
        cat,
        record_stride=args.record_stride,
        radius=args.radius,
        sort_coordinates=args.sort,
        jobs=args.jobs,
    )
    files = [str(p) for p in res.write_csv(args.out)] if args.out else []
    doc = {"schema": 1, "alpha": model.alpha, "steps": args.steps, "base_seed": seed, "files": files}
    doc.update(res.summary())
    print(json.dumps(doc))
    return EXIT_OK


def cmd_flow(args) -> int:
    model = _model(args)
    if args.v0:
        v0 = np.array([float(x) for x in args.v0.split(",")])
    else:
        v0 = np.full(model.n, 1.0 / model.n)
    traj = flow(model, v0, args.t_max, args.step, record_stride=args.record_stride)
    if args.out:
        traj.write_csv(args.out)
    doc = {
        "schema": 1,
        "alpha": model.alpha,
        "final": [float(c) for c in traj.final],
        "t_final": float(traj.times[-1]),
        "terminal_drift_norm": traj.terminal_drift_norm,
        "stop_reason": traj.stop_reason,
        "lyapunov_final": float(traj.lyapunov[-1]),
        "file": args.out,
    }
    print(json.dumps(doc))
    return EXIT_OK


def cmd_reduce(args) -> int:
    if args.model:
        raise UsageError("reduce works on graphs; give --family (use family 'graph' for an explicit edge list)")
    g = family_graph(args.family, parse_params(args.params))
    if g is None:
        raise UsageError(f"family {args.family!r} is not a graph")
    cols = enumerate_spanning_collections(g)
    allocs = star_forest_allocation(g, args.alpha)
    doc = {
        "schema": 1,
        "alpha": args.alpha,
        "collections": [{"parts": c.parts_dict()} for c in cols],
        "star_forest_allocations": [a.to_dict() for a in allocs],
    }
    _emit(doc, args.out)
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="warm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="validate or describe a model")
    p.add_argument("action", choices=["validate", "describe"])
    _model_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("equilibria", help="enumerate and classify all equilibria")
    _model_args(p)
    p.add_argument("--starts", type=int, default=50, help="Newton starts per face")
    p.add_argument("--eps", type=float, default=EPS_EIG, help="eigenvalue tolerance for 'critical'")
    p.add_argument("--dedup", type=float, default=1e-7)
    p.add_argument("--strict", action="store_true", help="exit 3 if any Newton start failed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("threshold", help="critical exponent of a family")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--family")
    p.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE")
    p.add_argument("--alpha", type=float, help="exponent used only to load a model file")
    p.add_argument("--alpha-max", type=float, help="upper bracket for the numeric fallback")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("phase", help="sweep alpha and tabulate every equilibrium")
    _model_args(p)
    p.add_argument("--alpha-min", type=float, required=True)
    p.add_argument("--alpha-max", type=float, required=True)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--log", action="store_true", help="geometric spacing")
    p.add_argument("--starts", type=int, default=50)
    p.add_argument("--eps", type=float, default=EPS_EIG)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("simulate", help="Monte-Carlo runs of the urn")
    _model_args(p)
    p.add_argument("--steps", type=int, default=100000)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=None, help="base seed (default: $WARM_SEED or 0)")
    p.add_argument("--record-stride", type=int, default=0, help="write a trace every K steps (0: none)")
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--sort", action="store_true", help="match endpoints after sorting coordinates")
    p.add_argument("--starts", type=int, default=50)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="prefix for PREFIX_runs.csv and PREFIX_trace_<run>.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("flow", help="integrate the mean-field ODE")
    _model_args(p)
    p.add_argument("--v0", help="comma-separated start point (default: barycentre)")
    p.add_argument("--t-max", type=float, default=200.0)
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--record-stride", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("reduce", help="spanning collections and star-forest allocations of a graph")
    _model_args(p, alpha_required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConsistencyError as exc:
        print(f"consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (ModelError, UsageError, FlowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
