"""Command-line entry point: ``cqa {generate,gap,scaling,resources,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..graphs import Graph, generate_random_regular, greedy_ordering, resource_report
from ..spectrum import DEFAULT_GRID, DEFAULT_S_TOL, min_gap, uniform_grid
from .experiment import ScreeningYieldError, assemble, generate_screened_ensemble, scaling_experiment
from .instances import InstanceDescriptor, derive_seed, random_3sat, read_instance, write_instance
from .verify import verify_suite

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS = {
    "seed": 0,
    "out": None,
    "problem": "gp",
    "method": "both",
    "sizes": "8,10,12,14",
    "per_size": 25,
    "degree": 6,
    "s_grid": str(DEFAULT_GRID),
    "s_tol": DEFAULT_S_TOL,
    "instance": None,
    "workers": 1,
    "colors": 3,
    "ordering": "identity",
    "clause_ratio": 4.0,
    "wall_time": False,
}


def parse_sizes(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    if isinstance(text, int):
        return [text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def parse_grid(text):
    """An integer means that many uniform points; a comma list is used as given."""
    if isinstance(text, int):
        return uniform_grid(text)
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    text = str(text)
    if "," not in text:
        return uniform_grid(int(text))
    return [float(x) for x in text.split(",") if x.strip()]


def methods_of(choice: str) -> tuple[str, ...]:
    return ("cqa", "penalty") if choice == "both" else (choice,)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # defaults are None so config-file values can be told apart from explicit flags
    common.add_argument("--config", help="TOML file of flag values; flags on the command line win")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--problem", choices=["gp", "gc", "sat"])
    common.add_argument("--method", choices=["penalty", "cqa", "both"])
    common.add_argument("--sizes", help="comma-separated sizes, e.g. 8,10,12")
    common.add_argument("--per-size", dest="per_size", type=int)
    common.add_argument("--degree", type=int)
    common.add_argument("--s-grid", dest="s_grid", help="point count or comma-separated s values")
    common.add_argument("--s-tol", dest="s_tol", type=float)
    common.add_argument("--instance", help="instance or graph JSON file")
    common.add_argument("--workers", type=int)
    common.add_argument("--colors", type=int, help="colors per vertex for gc instances")
    common.add_argument("--ordering", choices=["identity", "greedy"])
    common.add_argument("--clause-ratio", dest="clause_ratio", type=float)
    common.add_argument("--wall-time", dest="wall_time", action="store_const", const=True,
                        help="record real wall times in the CSV (breaks byte-identical reruns)")
    p = argparse.ArgumentParser(prog="cqa", description="Exact-diagonalization gaps for constrained quantum annealing.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write instance files")
    sub.add_parser("gap", parents=[common], help="gap curve and minimum gap for one instance")
    sub.add_parser("scaling", parents=[common], help="screened penalty-vs-CQA campaign")
    sub.add_parser("resources", parents=[common], help="coupler counts for a graph")
    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    return p


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in DEFAULTS:
                raise SystemExit(f"unknown config key {k!r}")
            cfg[key] = v
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    cfg["sizes"] = parse_sizes(cfg["sizes"])
    cfg["grid"] = parse_grid(cfg["s_grid"])
    return cfg


def _make_instances(cfg) -> list[InstanceDescriptor]:
    problem, seed, d = cfg["problem"], cfg["seed"], cfg["degree"]
    params_extra = {} if cfg["ordering"] == "identity" else {"ordering": cfg["ordering"]}
    out = []
    for n in cfg["sizes"]:
        if problem == "gp":
            for desc in generate_screened_ensemble(n, d, cfg["per_size"], seed):
                desc.params.update(params_extra)
                out.append(desc)
            continue
        for i in range(cfg["per_size"]):
            iseed = derive_seed(seed, n, i)
            if problem == "gc":
                g = generate_random_regular(n, d, iseed)
                params = {"seed": iseed, "degree": d, "n_c": cfg["colors"]}
                out.append(InstanceDescriptor("gc", n, g, "cqa", params))
            else:
                m = int(round(cfg["clause_ratio"] * n))
                clauses = random_3sat(n, m, iseed)
                out.append(InstanceDescriptor("sat", n, clauses, "cqa", {"seed": iseed, "m": m}))
    return out


def cmd_generate(cfg) -> int:
    out = Path(cfg["out"] or "instances")
    out.mkdir(parents=True, exist_ok=True)
    counts = {}
    for desc in _make_instances(cfg):
        i = counts.get(desc.n, 0)
        counts[desc.n] = i + 1
        path = out / f"{desc.problem}_n{desc.n}_{i:03d}_{desc.id}.json"
        write_instance(desc, path)
        print(path)
    return 0


def cmd_gap(cfg) -> int:
    if cfg["instance"]:
        desc = read_instance(cfg["instance"])
        if cfg["ordering"] != "identity":
            desc.params["ordering"] = cfg["ordering"]
    else:
        desc = _make_instances(dict(cfg, sizes=cfg["sizes"][:1], per_size=1))[0]
    report = {"instance_id": desc.id, "problem": desc.problem, "n": desc.n, "results": {}}
    for m in methods_of(cfg["method"]):
        d = desc.with_method(m)
        h_p, h_d, basis = assemble(d)
        res = min_gap(h_p, h_d, basis, cfg["grid"], cfg["s_tol"], seed=derive_seed(d.seed, 1), method=m)
        if cfg["out"]:
            path = Path(cfg["out"])
            if cfg["method"] == "both":
                path = path.with_name(f"{path.stem}.{m}{path.suffix or '.csv'}")
            res.curve.to_csv(path)
        report["results"][m] = {
            "gap_min": res.gap_min,
            "s_min": res.s_min,
            "e0_final": res.e0,
            "boundary": res.boundary,
            "basis_dim": basis.dim,
        }
    print(json.dumps(report, indent=2))
    return 0


def cmd_scaling(cfg) -> int:
    out = cfg["out"] or "scaling.csv"
    table = scaling_experiment(
        cfg["sizes"], cfg["per_size"], cfg["degree"], cfg["seed"], out,
        grid=cfg["grid"], s_tol=cfg["s_tol"], workers=cfg["workers"],
        methods=methods_of(cfg["method"]), record_wall_time=cfg["wall_time"],
    )
    print(json.dumps(table.summary, indent=2, sort_keys=True))
    return 0 if table.complete else 2


def cmd_resources(cfg) -> int:
    if cfg["instance"]:
        g = read_instance(cfg["instance"]).payload
        if not isinstance(g, Graph):
            raise SystemExit("resources needs a graph instance")
    else:
        g = generate_random_regular(cfg["sizes"][0], cfg["degree"], cfg["seed"])
    order = greedy_ordering(g) if cfg["ordering"] == "greedy" else list(range(g.n))
    report = {
        "n": g.n,
        "edges": len(g.edges),
        "ordering": order,
        "methods": {m: resource_report(g, m, order).to_dict() for m in methods_of(cfg["method"])},
    }
    text = json.dumps(report, indent=2)
    if cfg["out"]:
        Path(cfg["out"]).write_text(text + "\n")
    print(text)
    return 0


def cmd_verify(cfg) -> int:
    results = verify_suite()
    for r in results:
        print(r.line())
    if cfg["out"]:
        rows = [{"name": r.name, "passed": r.passed, "residual": r.residual, "detail": r.detail} for r in results]
        Path(cfg["out"]).write_text(json.dumps(rows, indent=2) + "\n")
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "generate": cmd_generate,
    "gap": cmd_gap,
    "scaling": cmd_scaling,
    "resources": cmd_resources,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    cfg = resolve(args)
    try:
        return COMMANDS[args.command](cfg)
    except ScreeningYieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
