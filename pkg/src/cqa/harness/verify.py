"""One-command run of every structural invariant across the package."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .. import reference as ref
from ..basis import (
    Clause,
    clause_sector,
    full_space,
    magnetization_sector,
    one_hot_sector,
    parity_symmetrize,
    popcount,
)
from ..graphs import Graph, cycle_completion, generate_random_regular, resource_report
from ..hamiltonian import (
    apply,
    build_3sat_driver,
    build_3sat_problem,
    build_gc_clique_driver,
    build_gc_problem,
    build_gp_penalized,
    build_gp_problem,
    build_transverse_driver,
    build_xy_ring_driver,
    clause_driver_block,
    interpolate,
    sector_invariance_check,
    select_constraint_clauses,
    to_dense,
)
from ..spectrum import lanczos_lowest


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float = 0.0
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: residual={self.residual:.3e} {self.detail}".rstrip()


def _disjoint_clauses(rng, n, count):
    perm = rng.permutation(n)
    return [
        Clause(tuple(perm[3 * i : 3 * i + 3].tolist()), tuple(rng.integers(0, 2, 3).tolist()))
        for i in range(count)
    ]


def check_regular_graphs():
    bad = 0
    for n, d, seed in [(12, 6, 7), (14, 6, 1), (10, 3, 2), (16, 5, 3), (20, 6, 4)]:
        g = generate_random_regular(n, d, seed)
        bad += int(set(g.degrees().tolist()) != {d})
        bad += int(g != generate_random_regular(n, d, seed))
    return CheckResult("graphs: regular output and seed reproducibility", bad == 0, bad)


def check_cycle_completion():
    rng = np.random.default_rng(11)
    worst = 0
    for trial in range(30):
        n = int(rng.integers(3, 16))
        m = int(rng.integers(0, n * (n - 1) // 2 + 1))
        pairs = list(itertools.combinations(range(n), 2))
        g = Graph(n, tuple(pairs[i] for i in rng.choice(len(pairs), m, replace=False)))
        order = rng.permutation(n).tolist()
        extra = cycle_completion(g, order)
        union = set(g.edges) | extra
        ring_ok = all((min(order[i], order[(i + 1) % n]), max(order[i], order[(i + 1) % n])) in union for i in range(n))
        pen = resource_report(g, "penalty")
        worst += int(len(extra) > n or not ring_ok or pen.base_edges + pen.additional_edges != n * (n - 1) // 2)
    return CheckResult("graphs: ring completion <= n, closes the cycle; penalty count exact", worst == 0, worst)


def check_sector_dimensions():
    bad = 0
    rng = np.random.default_rng(5)
    for n in range(1, 17):
        allst = np.arange(1 << n)
        pc = popcount(allst)
        for c in range(-n, n + 1, 2):
            k = (n + c) // 2
            b = magnetization_sector(n, c)
            bad += int(b.dim != math.comb(n, k) or b.dim != int(np.sum(pc == k)))
            bad += int(b.dim != magnetization_sector(n, -c).dim)
        for n_c in range(1, n + 1):
            if n % n_c == 0 and n_c ** (n // n_c) <= 70000:
                b = one_hot_sector(n // n_c, n_c)
                groups = [(allst >> (n - (i + 1) * n_c)) & ((1 << n_c) - 1) for i in range(n // n_c)]
                brute = np.ones(allst.size, bool)
                for gbits in groups:
                    brute &= popcount(gbits) == 1
                bad += int(b.dim != n_c ** (n // n_c) or b.dim != int(brute.sum()))
        for m in range(0, n // 3 + 1):
            cls = _disjoint_clauses(rng, n, m)
            b = clause_sector(n, cls)
            brute = sum(
                1 for s in range(1 << n)
                if all(tuple((s >> (n - 1 - q)) & 1 for q in cl.vars) != cl.violating for cl in cls)
            ) if n <= 12 else 7**m * 2 ** (n - 3 * m)
            bad += int(b.dim != 7**m * 2 ** (n - 3 * m) or b.dim != brute)
    return CheckResult("basis: sector dimension formulas vs brute force, n <= 16", bad == 0, bad)


def check_round_trip():
    bad = 0
    bases = [magnetization_sector(10, 0), magnetization_sector(9, 3), one_hot_sector(3, 4), full_space(8)]
    bases.append(clause_sector(9, _disjoint_clauses(np.random.default_rng(1), 9, 3)))
    for b in bases:
        bad += sum(int(b.index_of(b.state_of(p)) != p) for p in range(b.dim))
        s = b.states
        bad += int(np.any(np.diff(s) <= 0))
    for b in [parity_symmetrize(magnetization_sector(10, 0)), parity_symmetrize(full_space(7))]:
        mask = (1 << b.n_qubits) - 1
        bad += int(np.any(b.states >= (b.states ^ mask)))
        bad += int(b.dim * 2 != b.parent.dim)
    return CheckResult("basis: index round trip, ordering, representatives", bad == 0, bad)


def _families(rng, n_max=8):
    """(name, operator, basis, dense full-space reference) samples for n <= n_max."""
    out = []
    for n in range(4, n_max + 1, 2):
        d = 3 if n > 4 else 3
        g = generate_random_regular(n, d, int(rng.integers(1 << 30)))
        order = rng.permutation(n).tolist()
        z = magnetization_sector(n, 0)
        out.append(("gp_problem", build_gp_problem(g), parity_symmetrize(z), ref.gp_problem(n, g.edges)))
        out.append(("gp_penalized", build_gp_penalized(g), parity_symmetrize(full_space(n)),
                    ref.gp_penalized(n, g.edges, min(2 * d, n) / 8)))
        out.append(("transverse", build_transverse_driver(n), parity_symmetrize(full_space(n)), ref.transverse(n)))
        out.append(("xy_ring", build_xy_ring_driver(order), z, ref.xy_ring(order)))
        out.append(("xy_ring_sym", build_xy_ring_driver(order), parity_symmetrize(z), ref.xy_ring(order)))
        s = float(rng.uniform(0.05, 0.95))
        out.append(("gp_cqa_interp", interpolate(build_gp_problem(g), build_xy_ring_driver(order), s),
                    parity_symmetrize(z), s * ref.gp_problem(n, g.edges) + (1 - s) * ref.xy_ring(order)))
    for nv, nc in [(2, 3), (2, 4), (3, 2)]:
        g = Graph(nv, ((0, 1),)) if nv == 2 else Graph.cycle(3)
        n = nv * nc
        oh = one_hot_sector(nv, nc)
        out.append(("gc_bare", build_gc_problem(g, nc), full_space(n), ref.gc_problem(nv, g.edges, nc)))
        out.append(("gc_penalized", build_gc_problem(g, nc, "penalized"), full_space(n),
                    ref.gc_problem(nv, g.edges, nc, penalized=True)))
        out.append(("gc_clique", build_gc_clique_driver(nv, nc), oh, ref.gc_clique(nv, nc)))
    for n in (6, 8):
        cls = [Clause(tuple(rng.choice(n, 3, replace=False).tolist()), tuple(rng.integers(0, 2, 3).tolist()))
               for _ in range(5)]
        part = select_constraint_clauses(cls, n)
        sec = clause_sector(n, part.constraint_clauses)
        out.append(("sat_problem", build_3sat_problem(n, cls, part), sec, ref.sat_problem(n, part.remainder_clauses)))
        out.append(("sat_driver", build_3sat_driver(n, part), sec,
                    ref.sat_driver(n, part.constraint_clauses, part.free_bits)))
    return out


def check_matvec_vs_dense():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for name, op, basis, full in _families(rng):
        dense = ref.restrict(full, basis)
        for _ in range(50):
            v = rng.standard_normal(basis.dim)
            worst = max(worst, float(np.max(np.abs(apply(op, v, basis) - dense @ v))))
    return CheckResult("hamiltonian: matvec vs Kronecker dense, 50 vectors/family, n <= 8", worst < 1e-12, worst)


def check_symmetry():
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in (6, 8, 10):
        g = generate_random_regular(n, 3, int(rng.integers(1 << 30)))
        for op, basis in [
            (build_gp_problem(g), full_space(n)),
            (build_gp_penalized(g), full_space(n)),
            (build_transverse_driver(n), full_space(n)),
            (build_xy_ring_driver(n), full_space(n)),
            (build_gc_clique_driver(n // 2, 2), full_space(n)),
            (build_gc_problem(Graph.cycle(n // 2) if n // 2 >= 3 else Graph(n // 2, ()), 2, "penalized"), full_space(n)),
        ]:
            a = to_dense(op, basis)
            worst = max(worst, float(np.max(np.abs(a - a.T))))
        cls = [Clause(tuple(rng.choice(n, 3, replace=False).tolist()), (1, 0, 1)) for _ in range(4)]
        part = select_constraint_clauses(cls, n)
        a = to_dense(build_3sat_driver(n, part), full_space(n))
        worst = max(worst, float(np.max(np.abs(a - a.T))))
    return CheckResult("hamiltonian: dense forms symmetric, n <= 10", worst < 1e-12, worst)


def check_conservation():
    rng = np.random.default_rng(3)
    leak = 0.0
    for n in range(3, 13):
        for c in (0, 2, -2):
            if (n + c) % 2 == 0 and abs(c) <= n:
                leak += sector_invariance_check(build_xy_ring_driver(rng.permutation(n).tolist()),
                                                magnetization_sector(n, c)).leak
    for nv, nc in [(1, 3), (2, 3), (3, 4), (4, 3), (6, 2)]:
        leak += sector_invariance_check(build_gc_clique_driver(nv, nc), one_hot_sector(nv, nc)).leak
    for n in range(3, 13):
        cls = [Clause(tuple(rng.choice(n, 3, replace=False).tolist()), tuple(rng.integers(0, 2, 3).tolist()))
               for _ in range(n)]
        part = select_constraint_clauses(cls, n)
        leak += sector_invariance_check(build_3sat_driver(n, part), clause_sector(n, part.constraint_clauses)).leak
    return CheckResult("hamiltonian: conserving drivers leak exactly 0, n <= 12", leak == 0.0, leak)


def _constraint_diag(basis_full, kind, n, extra):
    s = basis_full.states
    if kind == "magnetization":
        return (2 * popcount(s) - n).astype(float)
    if kind == "one_hot":
        nv, nc = extra
        return np.array([sum(10**i * (2 * bin((x >> (n - (i + 1) * nc)) & ((1 << nc) - 1)).count("1") - nc)
                             for i in range(nv)) for x in s], dtype=float)
    cls = extra
    return np.array([sum(2**m * int(tuple((x >> (n - 1 - q)) & 1 for q in cl.vars) == cl.violating)
                         for m, cl in enumerate(cls)) for x in s], dtype=float)


def check_commutators():
    rng = np.random.default_rng(9)
    worst = 0.0
    for n in range(3, 9):
        fs = full_space(n)
        h = to_dense(build_xy_ring_driver(rng.permutation(n).tolist()), fs)
        c = np.diag(_constraint_diag(fs, "magnetization", n, None))
        worst = max(worst, float(np.max(np.abs(h @ c - c @ h))))
    for nv, nc in [(2, 3), (2, 4), (4, 2)]:
        n = nv * nc
        fs = full_space(n)
        h = to_dense(build_gc_clique_driver(nv, nc), fs)
        c = np.diag(_constraint_diag(fs, "one_hot", n, (nv, nc)))
        worst = max(worst, float(np.max(np.abs(h @ c - c @ h))))
    for n in (6, 8):
        cls = [Clause(tuple(rng.choice(n, 3, replace=False).tolist()), tuple(rng.integers(0, 2, 3).tolist()))
               for _ in range(4)]
        part = select_constraint_clauses(cls, n)
        fs = full_space(n)
        h = to_dense(build_3sat_driver(n, part), fs)
        c = np.diag(_constraint_diag(fs, "clauses", n, part.constraint_clauses))
        worst = max(worst, float(np.max(np.abs(h @ c - c @ h))))
    for n in (4, 6, 8):
        g = generate_random_regular(n, 3, int(rng.integers(1 << 30)))
        p = ref.parity(n)
        s = float(rng.uniform(0, 1))
        for hp, hd in [(build_gp_penalized(g), build_transverse_driver(n)),
                       (build_gp_problem(g), build_xy_ring_driver(n))]:
            h = to_dense(interpolate(hp, hd, s), full_space(n))
            worst = max(worst, float(np.max(np.abs(h @ p - p @ h))))
    return CheckResult("hamiltonian: dense [H, C] = 0 and [H_GP, P] = 0, n <= 8", worst < 1e-12, worst)


def check_one_magnon():
    worst = 0.0
    for n in range(4, 13):
        ev = np.linalg.eigvalsh(to_dense(build_xy_ring_driver(n), magnetization_sector(n, 2 - n)))
        exact = np.sort(-4.0 * np.cos(2 * np.pi * np.arange(n) / n))
        worst = max(worst, float(np.max(np.abs(ev - exact))))
    return CheckResult("hamiltonian: XY ring one-magnon band -4cos(2 pi m/n), n = 4..12", worst < 1e-10, worst)


def check_xy_nondegenerate():
    worst_gap = np.inf
    for n in range(4, 15, 2):
        ev = lanczos_lowest(build_xy_ring_driver(n), magnetization_sector(n, 0), 2).eigenvalues
        worst_gap = min(worst_gap, float(ev[1] - ev[0]))
    return CheckResult("hamiltonian: XY ring zero-sector ground state non-degenerate, even n = 4..14",
                       worst_gap > 1e-6, worst_gap, "(smallest E1-E0)")


def check_clause_block():
    worst = 0.0
    for j in range(8):
        bits = tuple((j >> (2 - i)) & 1 for i in range(3))
        worst = max(worst, float(np.max(np.abs(ref.clause_driver_pauli(bits) - clause_driver_block(j)))))
    return CheckResult("hamiltonian: clause driver Pauli form == 1 - |u><u| - |j><j|, all 8 patterns", worst < 1e-12, worst)


def check_lanczos_vs_dense():
    rng = np.random.default_rng(42)
    worst = 0.0
    for name, op, basis, full in _families(rng):
        k = min(4, basis.dim)
        dense = np.linalg.eigvalsh(ref.restrict(full, basis))[:k]
        got = lanczos_lowest(op, basis, k, seed=int(rng.integers(1 << 30))).eigenvalues
        worst = max(worst, float(np.max(np.abs(got - dense))))
    return CheckResult("spectrum: Lanczos lowest-4 vs dense", worst < 1e-9, worst)


def xy_zero_sector_gaps(sizes=range(6, 17, 2)):
    out = {}
    for n in sizes:
        ev = lanczos_lowest(build_xy_ring_driver(n), magnetization_sector(n, 0), 2).eigenvalues
        out[n] = float(ev[1] - ev[0])
    return out


def check_driver_gap_scaling():
    gaps = xy_zero_sector_gaps()
    ns = np.array(sorted(gaps))
    gs = np.array([gaps[n] for n in ns])
    slope = float(np.polyfit(np.log(ns), np.log(gs), 1)[0])
    band = float((gs * ns).max() / (gs * ns).min())
    ok = abs(slope + 1.0) <= 0.3 and band <= 2.0
    return CheckResult("spectrum: XY ring zero-sector gap ~ 1/n, even n = 6..16", ok, abs(slope + 1.0),
                       f"(slope={slope:.4f}, gap*n band ratio={band:.3f})")


CHECKS = [
    check_regular_graphs,
    check_cycle_completion,
    check_sector_dimensions,
    check_round_trip,
    check_symmetry,
    check_matvec_vs_dense,
    check_conservation,
    check_commutators,
    check_one_magnon,
    check_xy_nondegenerate,
    check_clause_block,
    check_lanczos_vs_dense,
    check_driver_gap_scaling,
]


def verify_suite() -> list[CheckResult]:
    out = []
    for check in CHECKS:
        try:
            out.append(check())
        except Exception as exc:  # failures are report content
            out.append(CheckResult(check.__name__, False, float("nan"), f"raised {type(exc).__name__}: {exc}"))
    return out
