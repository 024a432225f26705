"""``netdesign`` command line.  Exit status 0 on success, 2 on invalid input."""

from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings

from .bounds import report_for_design, write_reports
from .design import (
    DESIGNS,
    ExperimentConfig,
    Treatment,
    make_sampler,
    partition_by_degree,
    randomized_degree_blocking,
    read_treatment,
    read_type_partition,
    degree_type_partition,
    write_partition,
    write_treatment,
)
from .graph import (
    IsolatedVertexWarning,
    cycle_graph,
    gen_erdos_renyi,
    gen_preferential_attachment,
    read_edgelist,
    write_edgelist,
)
from .interference import LipschitzBudget, lipschitz_constants, lipschitz_norm
from .oracle import replication_rng
from .quasicoloring import (
    DEFAULT_SEARCH_CAP,
    bidegree_measure,
    find_perfect_quasicoloring,
    is_perfect_quasicoloring,
)
from .simulate import (
    ConfigError,
    RunConfig,
    SweepConfig,
    load_config,
    load_sweep,
    make_spec,
    rows_to_csv,
    run_experiment,
    sweep,
)

GRID_FIELDS = ("N", "density", "pow", "m", "gamma")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_run_flags(p: argparse.ArgumentParser, grid: bool) -> None:
    """One ``--flag`` per RunConfig field; defaults stay ``None`` so config files win."""
    p.add_argument("--config", help="JSON file whose keys are RunConfig field names")
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "redraw_model":
            p.add_argument(flag, action="store_true", default=None)
        elif f.name == "designs":
            p.add_argument(flag, nargs="+", choices=DESIGNS)
        elif grid and f.name in GRID_FIELDS:
            typ = int if f.name in ("N", "m") else float
            p.add_argument(flag, nargs="+", type=typ)
        else:
            typ = type(f.default) if f.default is not None else str
            p.add_argument(flag, type=typ)


def _overrides(args) -> dict:
    out = {}
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            out[f.name] = tuple(v) if isinstance(v, list) else v
    return out


def cmd_gen_graph(args) -> None:
    if args.family == "er":
        g = gen_erdos_renyi(args.N, args.density, args.seed)
    elif args.family == "pa":
        g = gen_preferential_attachment(args.N, args.pow, args.m, args.seed)
    else:
        g = cycle_graph(args.N)
    if args.out:
        write_edgelist(g, args.out)
    else:
        edges = sorted(g.edges())
        sys.stdout.write("".join([f"{g.num_vertices} {len(edges)}\n"] + [f"{u} {v}\n" for u, v in edges]))


def cmd_design(args) -> None:
    g = read_edgelist(args.graph)
    cfg = ExperimentConfig.for_graph(g, args.p, args.r)
    types = read_type_partition(args.types) if args.types else None
    rng = replication_rng(args.seed, 0)
    if args.partition_out:
        if args.design == "pbd":
            write_partition(partition_by_degree(g, cfg), args.partition_out)
        elif args.design == "pbd-random":
            # same stream as the draw below, so the written blocks are the ones used
            P = randomized_degree_blocking(g, cfg, replication_rng(args.seed, 0))
            write_partition(P, args.partition_out)
        else:
            raise ConfigError("--partition-out needs design pbd or pbd-random")
    mask = make_sampler(args.design, g, cfg, types)(rng)
    T = Treatment.from_mask(mask, cfg)
    if args.out:
        write_treatment(T, args.out)
    else:
        sys.stdout.write("".join(f"{v}\n" for v in sorted(T.treated)))


def cmd_qc_check(args) -> int:
    g = read_edgelist(args.graph)
    cfg = ExperimentConfig.for_graph(g, 1, 2)
    T = read_treatment(args.treated, cfg)
    types = read_type_partition(args.types) if args.types else None
    ok = is_perfect_quasicoloring(g, T.treated, types)
    if ok:
        print("PERFECT")
    else:
        print("NOT PERFECT")
        if types is None:
            for (a, b), m in bidegree_measure(g, T).atoms.items():
                print(f"{a} {b} {m!r}")
    return 0 if ok or not args.strict else 1


def cmd_qc_find(args) -> None:
    g = read_edgelist(args.graph)
    types = read_type_partition(args.types) if args.types else None
    Q = find_perfect_quasicoloring(g, types, cap=args.cap)
    if Q is None:
        print("NONE")
    else:
        print(" ".join(map(str, sorted(Q))))


def cmd_bounds(args) -> None:
    g = read_edgelist(args.graph)
    cfg = ExperimentConfig.for_graph(g, args.p, args.r)
    g.require_no_isolated()
    spec = make_spec(args.interference, args.gamma)
    k_v = lipschitz_constants(spec, g)
    rows = []
    for design in args.designs:
        types = None
        if design == "typed":
            types = read_type_partition(args.types) if args.types else degree_type_partition(g, cfg.r)
            lip = lipschitz_norm(spec, g, LipschitzBudget(0.0, args.K2), types)
        else:
            lip = lipschitz_norm(spec, g, LipschitzBudget(args.K1, args.K2))
        P = partition_by_degree(g, cfg) if design == "pbd" else None
        rep = report_for_design(g, design, cfg, k_v, args.K1, args.K2, lip, P=P, types=types)
        rows.append(rep.row(graph=args.graph, design=design, spec=f"{args.interference}:gamma={args.gamma!r}"))
    if args.out:
        write_reports(rows, args.out)
    else:
        write_reports(rows, sys.stdout)


def cmd_simulate(args) -> None:
    ov = _overrides(args)
    cfg = load_config(args.config, **ov) if args.config else RunConfig(**ov)
    _emit(rows_to_csv(run_experiment(cfg)), cfg.output)


def cmd_sweep(args) -> None:
    if args.config:
        sc = load_sweep(args.config)
    else:
        sc = SweepConfig()
    ov = _overrides(args)
    grid = {k: ov.pop(k) for k in GRID_FIELDS if k in ov}
    base = dataclasses.replace(sc.base, **ov)
    sc = dataclasses.replace(sc, base=base, **grid)
    _emit(rows_to_csv(sweep(sc, workers=base.workers)), base.output)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netdesign", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="write a random or canonical graph as an edge list")
    p.add_argument("--family", choices=("er", "pa", "cycle"), default="er")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--density", type=float, default=0.1)
    p.add_argument("--pow", type=float, default=1.0)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("design", help="draw one treatment set")
    p.add_argument("--graph", required=True)
    p.add_argument("--design", choices=DESIGNS, default="crd")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--types")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--partition-out")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("qc-check", help="is a treated set a perfect quasi-coloring?")
    p.add_argument("--graph", required=True)
    p.add_argument("--treated", required=True)
    p.add_argument("--types")
    p.add_argument("--strict", action="store_true", help="exit 1 when not perfect")
    p.set_defaults(func=cmd_qc_check)

    p = sub.add_parser("qc-find", help="search for a perfect quasi-coloring")
    p.add_argument("--graph", required=True)
    p.add_argument("--types")
    p.add_argument("--cap", type=int, default=DEFAULT_SEARCH_CAP)
    p.set_defaults(func=cmd_qc_find)

    p = sub.add_parser("bounds", help="bias/RMSE bound report as CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--designs", nargs="+", choices=DESIGNS, default=list(DESIGNS))
    p.add_argument("--interference", default="linear")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--K1", type=float, default=1.0)
    p.add_argument("--K2", type=float, default=1.0)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--types")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="log-MSE of each design on one graph")
    _add_run_flags(p, grid=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="simulate over a parameter grid")
    _add_run_flags(p, grid=True)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IsolatedVertexWarning)
            rc = args.func(args)
    except (ValueError, OSError, TypeError) as exc:
        print(f"netdesign: error: {exc}", file=sys.stderr)
        return 2
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
