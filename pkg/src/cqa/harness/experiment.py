"""Screened GP ensembles, penalty-vs-CQA minimum gaps and scaling campaigns."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..basis import (
    SymBasis,
    clause_sector,
    color_symmetrize,
    full_space,
    magnetization_sector,
    one_hot_sector,
    parity_symmetrize,
)
from ..graphs import generate_random_regular, greedy_ordering
from ..hamiltonian import (
    ClausePartition,
    build_3sat_driver,
    build_3sat_problem,
    build_gc_clique_driver,
    build_gc_problem,
    build_gp_penalized,
    build_gp_problem,
    build_transverse_driver,
    build_xy_ring_driver,
    diagonal_values,
    select_constraint_clauses,
)
from ..spectrum import DEFAULT_S_TOL, DEFAULT_TOL, min_gap, uniform_grid
from .instances import InstanceDescriptor, derive_seed

log = logging.getLogger(__name__)

CSV_HEADER = ["n", "instance_id", "seed", "method", "gap_min", "s_min", "e0_final", "wall_time_s"]
LEVEL_TOL = 1e-9


class ScreeningYieldError(RuntimeError):
    def __init__(self, n, d, wanted, accepted, attempts):
        self.n, self.d, self.wanted, self.accepted, self.attempts = n, d, wanted, accepted, attempts
        super().__init__(
            f"screening n={n}, d={d}: only {accepted} of {wanted} unique-ground instances "
            f"after {attempts} attempts"
        )


class InstanceError(RuntimeError):
    """A solver failure, tagged with the instance it happened on."""


@dataclass
class ClassicalSpectrum:
    levels: np.ndarray
    multiplicities: np.ndarray
    unique_ground: bool
    flip_paired: bool
    ground_states: np.ndarray = field(repr=False, default=None)

    @property
    def ground_energy(self) -> float:
        return float(self.levels[0])


def classical_spectrum(problem_op, basis, flip_pairing: bool | None = None) -> ClassicalSpectrum:
    """Exhaustive level structure of a diagonal operator on a sector.

    With flip pairing (default: the sector is flip-closed and the energies
    are flip-symmetric) a ground level of multiplicity 2, a state and its
    complement, counts as unique. Otherwise uniqueness means multiplicity 1.
    """
    if not problem_op.is_diagonal:
        raise ValueError("classical_spectrum needs a diagonal operator")
    values = diagonal_values(problem_op, basis)
    if flip_pairing is None:
        flip_pairing = False
        if not isinstance(basis, SymBasis) and basis.is_complement_closed():
            mask = (1 << basis.n_qubits) - 1
            partner = basis.index_array(basis.states ^ mask)
            flip_pairing = bool(np.all(np.abs(values[partner] - values) <= LEVEL_TOL))
    order = np.argsort(values, kind="stable")
    srt = values[order]
    breaks = np.flatnonzero(np.diff(srt) > LEVEL_TOL) + 1
    starts = np.concatenate([[0], breaks])
    mults = np.diff(np.concatenate([starts, [srt.size]]))
    levels = srt[starts]
    ground = np.sort(order[: mults[0]])
    unique = bool(mults[0] == (2 if flip_pairing else 1))
    return ClassicalSpectrum(levels, mults, unique, flip_pairing, ground)


def generate_screened_ensemble(n: int, d: int, count: int, seed: int, budget_factor: int = 100):
    """Random ``d``-regular GP instances whose balanced min cut is unique up to the global flip.

    Attempt ``i`` draws its graph from ``derive_seed(seed, n, d, i)``, so the
    accepted sequence depends only on the arguments.
    """
    if n % 2:
        raise ValueError(f"graph partitioning needs an even vertex count, got {n}")
    sector = magnetization_sector(n, 0)
    out = []
    attempts = budget_factor * count
    for i in range(attempts):
        gseed = derive_seed(seed, n, d, i)
        g = generate_random_regular(n, d, gseed)
        if classical_spectrum(build_gp_problem(g), sector).unique_ground:
            out.append(InstanceDescriptor("gp", n, g, "cqa", {"seed": gseed, "degree": d}))
            if len(out) == count:
                return out
    raise ScreeningYieldError(n, d, count, len(out), attempts)


def assemble(desc: InstanceDescriptor):
    """``(h_p, h_d, basis)`` for an instance and method.

    GP penalty: penalized, 1/n-normalized cost with the transverse driver on
    the parity-symmetric full space. GP CQA: bare cut cost with the XY ring
    on the parity-symmetric zero-magnetization sector. GC works inside the
    subspace invariant under relabelling colors (``params["symmetry"] =
    "none"`` switches this off): full space for the penalty method, one-hot
    sector for CQA.
    """
    p, n = desc.params, desc.n
    if desc.problem == "gp":
        g = desc.payload
        if desc.method == "penalty":
            return build_gp_penalized(g, p.get("alpha")), build_transverse_driver(n), parity_symmetrize(full_space(n))
        order = p.get("ordering", "identity")
        if order == "identity":
            order = list(range(n))
        elif order == "greedy":
            order = greedy_ordering(g)
        return build_gp_problem(g), build_xy_ring_driver(order), parity_symmetrize(magnetization_sector(n, 0))
    if desc.problem == "gc":
        g, n_c = desc.payload, int(p.get("n_c", 3))
        sym = p.get("symmetry", "colors") == "colors"
        if desc.method == "penalty":
            basis = full_space(g.n * n_c)
            h_p = build_gc_problem(g, n_c, "penalized", p.get("alpha", 1.0))
            h_d = build_transverse_driver(g.n * n_c)
        else:
            basis = one_hot_sector(g.n, n_c)
            h_p, h_d = build_gc_problem(g, n_c, "bare"), build_gc_clique_driver(g.n, n_c)
        return h_p, h_d, (color_symmetrize(basis, g.n, n_c) if sym else basis)
    clauses = desc.payload
    if desc.method == "penalty":
        part = ClausePartition(n, tuple(clauses), (), tuple(range(len(clauses))), tuple(range(n)))
        return build_3sat_problem(n, clauses, part), build_3sat_driver(n, part), full_space(n)
    part = select_constraint_clauses(clauses, n)
    return (
        build_3sat_problem(n, clauses, part),
        build_3sat_driver(n, part),
        clause_sector(n, part.constraint_clauses),
    )


@dataclass
class ScalingRecord:
    n: int
    instance_id: str
    seed: int
    method: str
    gap_min: float
    s_min: float
    e0_final: float
    wall_time: float
    basis_dim: int = 0
    boundary: bool = False

    def csv_row(self, wall_time: bool = True) -> list[str]:
        return [
            str(self.n),
            self.instance_id,
            str(self.seed),
            self.method,
            f"{self.gap_min:.17g}",
            f"{self.s_min:.17g}",
            f"{self.e0_final:.17g}",
            f"{self.wall_time:.6f}" if wall_time else "0",
        ]


def run_instance(desc: InstanceDescriptor, grid=None, s_tol: float = DEFAULT_S_TOL,
                 tol: float = DEFAULT_TOL) -> ScalingRecord:
    grid = uniform_grid() if grid is None else grid
    t0 = time.perf_counter()
    try:
        h_p, h_d, basis = assemble(desc)
        res = min_gap(h_p, h_d, basis, grid, s_tol, tol, seed=derive_seed(desc.seed, 1), method=desc.method)
    except Exception as exc:
        raise InstanceError(f"instance {desc.id} ({desc.problem}, {desc.method}, n={desc.n}): {exc}") from exc
    return ScalingRecord(
        n=desc.n,
        instance_id=desc.id,
        seed=desc.seed,
        method=desc.method,
        gap_min=res.gap_min,
        s_min=res.s_min,
        e0_final=res.e0,
        wall_time=time.perf_counter() - t0,
        basis_dim=basis.dim,
        boundary=res.boundary,
    )


def _run_task(task):
    desc, grid, s_tol, tol = task
    return run_instance(desc, grid, s_tol, tol)


def _median(xs):
    return float(np.median(xs)) if len(xs) else None


def summarize(records: list[ScalingRecord], sizes, methods) -> dict:
    by = {}
    for r in records:
        by.setdefault((r.n, r.method), []).append(r)
    per_size = {}
    ratios_all = []
    for n in sizes:
        entry = {}
        for m in methods:
            gaps = [r.gap_min for r in by.get((n, m), [])]
            entry[m] = {"count": len(gaps), "median_gap": _median(gaps)}
        if "cqa" in methods and "penalty" in methods:
            pen = {r.instance_id: r.gap_min for r in by.get((n, "penalty"), [])}
            ratios = [r.gap_min / pen[r.instance_id] for r in by.get((n, "cqa"), []) if r.instance_id in pen]
            entry["median_ratio_cqa_over_penalty"] = _median(ratios)
            ratios_all += ratios
        per_size[str(n)] = entry
    fits = {}
    for m in methods:
        pts = [(n, per_size[str(n)][m]["median_gap"]) for n in sizes if per_size[str(n)][m]["count"]]
        if len(pts) >= 2:
            ns, gs = np.array(pts).T
            slope, intercept = np.polyfit(ns, np.log(gs), 1)
            fits[m] = {"log_gap_slope": float(slope), "intercept": float(intercept), "points": len(pts)}
    return {
        "per_size": per_size,
        "fits": fits,
        "median_ratio_cqa_over_penalty": _median(ratios_all),
    }


@dataclass
class ScalingTable:
    records: list
    summary: dict
    complete: bool
    failures: dict
    csv_text: str

    def medians(self, method: str) -> dict:
        return {int(n): e[method]["median_gap"] for n, e in self.summary["per_size"].items()}


def scaling_experiment(sizes, per_size: int, d: int, seed: int, out_path=None, grid=None,
                       s_tol: float = DEFAULT_S_TOL, tol: float = DEFAULT_TOL, workers: int = 1,
                       methods=("cqa", "penalty"), record_wall_time: bool = False) -> ScalingTable:
    """Screen ``per_size`` GP instances per size, run both methods, write CSV and summary.

    Rows are ordered by (size, instance index, method) whatever the worker
    count. Wall times are only written when ``record_wall_time`` is set,
    otherwise the column holds 0 and reruns are byte-identical.
    """
    sizes = [int(n) for n in sizes]
    methods = tuple(sorted(methods))
    grid = uniform_grid() if grid is None else grid
    failures = {}
    tasks = []
    for n in sizes:
        if n % 2 or n <= d:
            failures[n] = f"size {n} must be even and larger than d={d}"
            continue
        try:
            ensemble = generate_screened_ensemble(n, d, per_size, seed)
        except ScreeningYieldError as exc:
            log.warning("%s", exc)
            failures[n] = str(exc)
            continue
        for desc in ensemble:
            for m in methods:
                tasks.append((desc.with_method(m), grid, s_tol, tol))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(t) for t in tasks]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.csv_row(record_wall_time))
    summary = summarize(records, sizes, methods)
    summary.update(
        complete=not failures,
        failures={str(k): v for k, v in failures.items()},
        sizes=sizes,
        per_size_requested=per_size,
        degree=d,
        seed=seed,
    )
    table = ScalingTable(records, summary, not failures, failures, buf.getvalue())
    if out_path is not None:
        out = Path(out_path)
        out.write_text(table.csv_text)
        summary_path(out).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return table


def summary_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".summary.json")
