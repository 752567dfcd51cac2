"""Experiment runner: every module exposed as a reproducible subcommand.

Each run writes results.csv plus manifest.json (and optional plan/flow
dumps) into --out.  Flags override values from an optional JSON config
file; identical seed+config yield byte-identical CSV bodies.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BadSubset, OtnodalError
from .families import FamilySpec, sample_family
from .graphs import (
    VertexFunction,
    centered_indicator,
    design_extremality_experiment,
    graph_w1,
    load_graph,
    perfect_domination_check,
    search_designs,
    uncertainty_product_graph,
    verify_design,
)
from .reporting import RunManifest, config_digest, file_digest, write_csv
from .spectral import heat_bound_check, sturm_hurwitz_check
from .transport import SolverConfig
from .uncertainty import (
    align_epsilon,
    critical_scale,
    cube_decomposition,
    scaling_sweep,
    uncertainty_product,
)
from .grids import nodal_measure

RESULT_COLUMNS = ["d", "n", "eps", "ratio", "w", "nodal", "lhs", "rhs", "quotient", "method"]


def _solver_config(args, h: float | None = None) -> SolverConfig:
    reg = args.reg
    if reg is None:
        reg = h if h is not None else 1e-3
    return SolverConfig(
        method=args.method,
        p=args.p,
        reg=reg,
        support_cap=args.support_cap,
    )


def _corpus_row(task):
    d, n, seed, k_max, method, p, reg, support_cap = task
    f = sample_family(FamilySpec("trig", dim=d, n=n, seed=seed, k_max=k_max))
    cfg = None
    if method != "auto":
        cfg = SolverConfig(method=method, p=p, reg=reg if reg else f.h,
                           support_cap=support_cap)
    rep = uncertainty_product(f, cfg)
    return {
        "d": d, "n": n, "eps": 0.0, "ratio": rep.ratio, "w": rep.w,
        "nodal": rep.nodal, "lhs": rep.lhs, "rhs": rep.rhs,
        "quotient": rep.quotient, "method": rep.method, "seed": seed,
    }


def _dump_first_plan(args, out: Path) -> None:
    from .grids import split_signs
    from .transport import solve_transport

    f = sample_family(FamilySpec("trig", dim=args.d, n=args.n, seed=args.seed,
                                 k_max=args.k_max))
    mu, nu = split_signs(f)
    cfg = SolverConfig(method="exact", p=args.p,
                       support_cap=args.support_cap or 700)
    solve = solve_transport(mu, nu, cfg)
    plan = solve.plan
    (out / "plan.json").write_text(json.dumps({
        "seed": args.seed, "p": args.p, "w": solve.cost,
        "aggregation_bound": solve.aggregation_bound,
        "pairs": plan.pairs.tolist(),
        "phi": plan.phi.tolist(), "psi": plan.psi.tolist(),
        "marginal_error": plan.marginal_error,
        "duality_gap": plan.duality_gap,
    }) + "\n")


def cmd_verify_grid(args, out: Path) -> dict:
    tasks = [
        (args.d, args.n, seed, args.k_max, args.method, args.p, args.reg,
         args.support_cap)
        for seed in range(args.seed, args.seed + args.seeds)
    ]
    if args.parallel > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as ex:
            rows = list(ex.map(_corpus_row, tasks))
    else:
        rows = [_corpus_row(t) for t in tasks]
    rows.sort(key=lambda r: r["seed"])
    write_csv(out / "results.csv", RESULT_COLUMNS + ["seed"], rows)
    if args.dump_plan:
        _dump_first_plan(args, out)
    if args.dump_grids:
        from .grids import save_grid

        gdir = out / "grids"
        gdir.mkdir(exist_ok=True)
        for seed in range(args.seed, args.seed + args.seeds):
            f = sample_family(
                FamilySpec("trig", dim=args.d, n=args.n, seed=seed, k_max=args.k_max)
            )
            save_grid(f, gdir / f"trig_{seed}.csv")
    quotients = [r["quotient"] for r in rows]
    return {"rows": len(rows), "min_quotient": min(quotients),
            "max_quotient": max(quotients)}


def cmd_proof_trace(args, out: Path) -> dict:
    f = sample_family(
        FamilySpec("trig", dim=args.d, n=args.n, seed=args.seed, k_max=args.k_max)
    )
    if args.eps is None:
        eps = align_epsilon(critical_scale(f, nodal_measure(f)), f.n)
    else:
        eps = args.eps
    dec = cube_decomposition(f, eps)
    rows = [
        {"d": args.d, "n": args.n, "eps": eps, "cube": idx,
         "l1_plus": lp, "l1_minus": lm, "class": cls}
        for idx, lp, lm, cls in zip(
            dec.indices.tolist(), dec.l1_plus.tolist(),
            dec.l1_minus.tolist(), dec.classes.tolist(),
        )
    ]
    write_csv(out / "results.csv",
              ["d", "n", "eps", "cube", "l1_plus", "l1_minus", "class"], rows)
    bounds = {k: (None if isinstance(v, float) and math.isnan(v) else v)
              for k, v in dec.bounds.items()}
    return {
        "eps": eps,
        "counts": {
            "negligible": dec.n_negligible,
            "non_negligible": dec.n_b,
            "balanced": dec.n_balanced,
            "unbalanced": dec.n_unbalanced,
        },
        "bounds": bounds,
    }


def cmd_extremal(args, out: Path) -> dict:
    eps_list = [float(tok) for tok in args.eps.split(",")]
    cfg = None
    if args.method != "auto":
        cfg = _solver_config(args)
    sweep = scaling_sweep(args.d, args.n_bumps, eps_list, cfg)
    rows = [
        {
            "d": r.d, "n": r.grid_n, "eps": r.eps, "ratio": r.ratio, "w": r.w,
            "nodal": r.nodal, "lhs": r.lhs, "rhs": r.rhs,
            "quotient": r.quotient, "method": r.method,
        }
        for r in sweep.rows
    ]
    write_csv(out / "results.csv", RESULT_COLUMNS, rows)
    return {"slope": sweep.slope, "target_slope": sweep.target_slope,
            "n_bumps": args.n_bumps}


def _band_row_task(task):
    from .spectral import band_row

    lam, seed, cfg, dim = task
    return band_row(lam, seed, cfg, dim)


def cmd_spectral(args, out: Path) -> dict:
    if args.lambdas:
        lams = [float(tok) for tok in args.lambdas.split(",")]
    else:
        lams = [float(tok) * math.pi**2 for tok in args.lambda_mults.split(",")]
    seeds = tuple(range(args.seed, args.seed + args.seeds))
    cfg = None
    if args.method != "auto":
        cfg = _solver_config(args)
    if args.parallel > 1:
        from .spectral import seed_band_row_cache

        tasks = [(lam, seed, cfg, args.d) for lam in lams for seed in seeds]
        with ProcessPoolExecutor(max_workers=args.parallel) as ex:
            rows = list(ex.map(_band_row_task, tasks))
        seed_band_row_cache(rows, tasks)
    heat = heat_bound_check(lams, seeds, cfg, dim=args.d)
    nodal = sturm_hurwitz_check(lams, seeds, cfg, dim=args.d)
    write_csv(
        out / "results.csv",
        ["d", "n", "lambda", "seed", "w", "l1", "w_over_l1", "nodal",
         "bound_quotient", "method"],
        [
            {"d": args.d, "n": hr.grid_n, "lambda": hr.lam, "seed": hr.seed,
             "w": hr.w, "l1": hr.l1, "w_over_l1": hr.w_over_l1,
             "nodal": hr.nodal, "bound_quotient": nr.quotient,
             "method": hr.method}
            for hr, nr in zip(heat.rows, nodal.rows)
        ],
    )
    return {"heat_slope": heat.slope, "nodal_slope": nodal.slope}


def _vertex_function(args, g) -> VertexFunction:
    if args.values:
        vals = np.loadtxt(args.values, ndmin=1)
        vals = vals - vals.mean()
        return VertexFunction(vals)
    if args.subset:
        subset = [int(tok) for tok in args.subset.split(",")]
        return centered_indicator(g, subset)
    raise OtnodalError("graph subcommand needs --values FILE or --subset LIST")


def cmd_graph(args, out: Path) -> dict:
    g = load_graph(args.graph)
    f = _vertex_function(args, g)
    rep = uncertainty_product_graph(g, f)
    cost, flow = graph_w1(g, f)
    write_csv(
        out / "results.csv",
        ["graph", "n", "w1", "boundary", "product", "normalized_product", "method"],
        [{"graph": args.graph, "n": g.n, "w1": rep.w1, "boundary": rep.boundary,
          "product": rep.product, "normalized_product": rep.normalized_product,
          "method": "exact"}],
    )
    if args.dump_flow:
        (out / "flow.json").write_text(json.dumps({
            "edges": [list(e) for e in g.edges],
            "flow": flow.flow.tolist(),
            "potentials": flow.potentials.tolist(),
            "cost": cost,
        }, indent=2) + "\n")
    return {"w1": rep.w1, "boundary": rep.boundary, "product": rep.product}


def cmd_designs(args, out: Path) -> dict:
    g = load_graph(args.graph)
    summary: dict = {"graph": args.graph, "task": args.task}
    if args.task == "verify":
        if not args.subset:
            raise BadSubset("designs --task verify needs --subset")
        subset = [int(tok) for tok in args.subset.split(",")]
        cert = verify_design(g, subset, args.k)
        summary.update(
            passed=cert.pass_,
            integrated_exactly=cert.integrated_exactly,
            orthogonal_prefix=cert.orthogonal_prefix,
            perfect_domination=perfect_domination_check(g, subset),
        )
        rows = [
            {"graph": args.graph, "eigenvalue": lam, "dim": dim, "residual": r,
             "orthogonal": int(r <= cert.design_tol)}
            for lam, dim, r in cert.residuals
        ]
        write_csv(out / "results.csv",
                  ["graph", "eigenvalue", "dim", "residual", "orthogonal"], rows)
        (out / "certificate.json").write_text(json.dumps({
            "subset": list(cert.subset), "k": cert.k_requested,
            "integrated_exactly": cert.integrated_exactly,
            "orthogonal_prefix": cert.orthogonal_prefix,
            "pass": cert.pass_,
            "residuals": [list(t) for t in cert.residuals],
        }, indent=2) + "\n")
    elif args.task == "search":
        res = search_designs(g, args.size, mode=args.mode,
                             samples=args.samples, seed=args.seed)
        summary.update(best_count=res.best_count, n_best=len(res.subsets),
                       scanned=res.scanned)
        rows = [
            {"graph": args.graph, "subset": " ".join(map(str, s)),
             "integrated_exactly": c.integrated_exactly,
             "orthogonal_prefix": c.orthogonal_prefix}
            for s, c in zip(res.subsets, res.certificates)
        ]
        write_csv(out / "results.csv",
                  ["graph", "subset", "integrated_exactly", "orthogonal_prefix"],
                  rows)
        (out / "certificates.json").write_text(json.dumps([
            {"subset": list(c.subset),
             "integrated_exactly": c.integrated_exactly,
             "orthogonal_prefix": c.orthogonal_prefix,
             "residuals": [list(t) for t in c.residuals]}
            for c in res.certificates
        ], indent=2) + "\n")
    else:  # extremality
        table = design_extremality_experiment(g, args.size, args.samples, args.seed)
        rows = [
            {"graph": args.graph, "kind": r.kind,
             "subset": " ".join(map(str, r.subset)),
             "product": r.product, "w1": r.w1, "boundary": r.boundary}
            for r in table.rows
        ]
        write_csv(out / "results.csv",
                  ["graph", "kind", "subset", "product", "w1", "boundary"], rows)
        summary.update(design_products=list(table.design_products),
                       random_quantiles=table.random_quantiles)
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="otnodal",
        description="transport-vs-interface numerical experiments",
    )
    ap.add_argument("--config", help="JSON config file; flags override its values")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--out", default="runs/latest", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--parallel", type=int, default=os.cpu_count() or 1)
        p.add_argument("--method", default="auto",
                       choices=["auto", "exact", "sinkhorn"])
        p.add_argument("--p", type=float, default=1.0)
        p.add_argument("--reg", type=float, default=None)
        p.add_argument("--support-cap", type=int, default=None)

    p = sub.add_parser("verify-grid", help="uncertainty products over a trig corpus")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--k-max", type=int, default=3)
    p.add_argument("--dump-plan", action="store_true",
                   help="write the first instance's exact plan to plan.json")
    p.add_argument("--dump-grids", action="store_true",
                   help="save each corpus function under grids/ (CSV, dim,n header)")
    p.set_defaults(func=cmd_verify_grid, method="sinkhorn", support_cap=700)

    p = sub.add_parser("proof-trace", help="cube decomposition at a given or critical eps")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--k-max", type=int, default=3)
    p.add_argument("--eps", type=float, default=None,
                   help="cube side (default: grid-aligned critical scale)")
    p.set_defaults(func=cmd_proof_trace)

    p = sub.add_parser("extremal", help="separated-bump scaling sweep")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n-bumps", type=int, default=16)
    p.add_argument("--eps", default="0.02,0.014,0.01,0.007",
                   help="comma-separated bump radii")
    p.set_defaults(func=cmd_extremal)

    p = sub.add_parser("spectral", help="heat-flow and nodal-growth band sweeps")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--lambda-mults", default="4,16,64,256",
                   help="band floors as multiples of pi^2")
    p.add_argument("--lambdas", default=None,
                   help="band floors as raw values (overrides --lambda-mults)")
    p.add_argument("--seeds", type=int, default=2)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("graph", help="W1/boundary/product for a vertex function")
    common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--values", help="file with one value per vertex")
    p.add_argument("--subset", help="comma-separated vertices (centered indicator)")
    p.add_argument("--dump-flow", action="store_true")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("designs", help="verify, search, or extremality experiment")
    common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--task", default="search",
                   choices=["verify", "search", "extremality"])
    p.add_argument("--subset", help="comma-separated vertices (verify task)")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--size", type=int, default=6)
    p.add_argument("--mode", default="exhaustive", choices=["exhaustive", "random"])
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=cmd_designs)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = ap.parse_args(argv)
    if args.config:
        # file values apply unless the flag was given explicitly
        file_cfg = json.loads(Path(args.config).read_text())
        for key, value in file_cfg.items():
            attr = key.replace("-", "_")
            flag = "--" + key.replace("_", "-")
            if hasattr(args, attr) and flag not in argv:
                setattr(args, attr, value)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        summary = args.func(args, out)
        config_echo = {
            k: v for k, v in vars(args).items() if k not in ("func", "config")
        }
        digests = {}
        if args.config:
            digests["config_file"] = file_digest(args.config)
        if getattr(args, "values", None):
            digests["values"] = file_digest(args.values)
        graph_arg = getattr(args, "graph", None)
        if graph_arg and Path(graph_arg).is_file():
            digests["graph"] = file_digest(graph_arg)
        digests["config"] = config_digest(config_echo)
        RunManifest(
            subcommand=args.subcommand,
            config=config_echo,
            seed=args.seed,
            artifact_version=__version__,
            input_digests=digests,
            summary=summary,
        ).write(out / "manifest.json")
    except (OtnodalError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
