"""Hamiltonians as sums of local real-symmetric terms, applied matrix-free on sectors.

Two term kinds exist. ``Diagonal`` holds a table of energies indexed by the
local z-configuration of its support. ``LocalBlock`` holds a small
``2^k x 2^k`` real symmetric matrix acting on at most three qubits. Local
configurations use the package bit convention (see ``cqa.basis``): the first
support qubit is the most significant bit, and bit 1 means sigma^z = +1.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import Clause, SymBasis, local_config
from .graphs import Graph

# sigma^z eigenvalue per local bit: bit 0 -> -1, bit 1 -> +1
_Z = np.array([-1.0, 1.0])
_ZZ = np.array([1.0, -1.0, -1.0, 1.0])

MAX_BLOCK_SUPPORT = 3
DENSE_DIM_CAP = 4096


class SectorViolationError(RuntimeError):
    """An operator term (or a driver/sector pairing) leaves the sector."""

    def __init__(self, message: str, term_index: int | None = None, term=None):
        self.term_index = term_index
        self.term = term
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Diagonal:
    support: tuple[int, ...]
    table: np.ndarray
    kind = "diag"

    def __post_init__(self):
        sup = tuple(int(q) for q in self.support)
        tab = np.asarray(self.table, dtype=float).reshape(-1)
        if tab.size != 1 << len(sup):
            raise ValueError(f"table of size {tab.size} does not match support {sup}")
        if len(set(sup)) != len(sup):
            raise ValueError(f"repeated qubit in support {sup}")
        tab.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "table", tab)

    def scaled(self, w: float) -> Diagonal:
        return Diagonal(self.support, w * self.table)

    @property
    def data(self):
        return self.table.tolist()


@dataclass(frozen=True, eq=False)
class LocalBlock:
    support: tuple[int, ...]
    matrix: np.ndarray
    kind = "block"

    def __post_init__(self):
        sup = tuple(int(q) for q in self.support)
        mat = np.array(self.matrix, dtype=float)
        d = 1 << len(sup)
        if not 1 <= len(sup) <= MAX_BLOCK_SUPPORT:
            raise ValueError(f"block support must have 1..{MAX_BLOCK_SUPPORT} qubits, got {sup}")
        if len(set(sup)) != len(sup):
            raise ValueError(f"repeated qubit in support {sup}")
        if mat.shape != (d, d):
            raise ValueError(f"block of shape {mat.shape} does not match support {sup}")
        if np.max(np.abs(mat - mat.T)) > 1e-14:
            raise ValueError("block matrix is not symmetric")
        mat.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "matrix", mat)

    def scaled(self, w: float) -> LocalBlock:
        return LocalBlock(self.support, w * self.matrix)

    @property
    def data(self):
        return self.matrix.tolist()

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.matrix - np.diag(np.diag(self.matrix)))


@dataclass(frozen=True, eq=False)
class Operator:
    """Real symmetric Hamiltonian on ``n_qubits`` qubits as a list of local terms.

    ``meta`` carries provenance such as the penalty weight and any warnings
    raised while building.
    """

    n_qubits: int
    terms: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        terms = tuple(self.terms)
        for t in terms:
            if t.support and max(t.support) >= self.n_qubits:
                raise ValueError(f"term support {t.support} exceeds {self.n_qubits} qubits")
        object.__setattr__(self, "terms", terms)

    @property
    def is_diagonal(self) -> bool:
        return all(t.kind == "diag" or t.is_diagonal for t in self.terms)

    def scaled(self, w: float) -> Operator:
        return Operator(self.n_qubits, tuple(t.scaled(w) for t in self.terms), dict(self.meta))

    def to_json(self) -> str:
        return json.dumps(
            [{"kind": t.kind, "support": list(t.support), "data": t.data} for t in self.terms]
        )


def _spread(pattern: int, support, n: int) -> int:
    """Place the bits of a local pattern onto the global qubit positions."""
    k = len(support)
    out = 0
    for j, q in enumerate(support):
        if (pattern >> (k - 1 - j)) & 1:
            out |= 1 << (n - 1 - q)
    return out


def _support_mask(support, n: int) -> int:
    return _spread((1 << len(support)) - 1, support, n)


def _block_transitions(term: LocalBlock, states: np.ndarray, n: int):
    """Yield ``(source_positions, target_states, amplitude)`` per nonzero block entry."""
    cfg = local_config(states, term.support, n)
    cleared = states & ~_support_mask(term.support, n)
    d = 1 << len(term.support)
    for a in range(d):
        src = np.flatnonzero(cfg == a)
        if src.size == 0:
            continue
        for b in range(d):
            amp = term.matrix[b, a]
            if amp != 0.0:
                yield src, cleared[src] | _spread(b, term.support, n), amp


def _route(basis, term_index, term, states, src, targets):
    idx, ok = basis.lookup(targets)
    if not np.all(ok):
        j = int(np.flatnonzero(~ok)[0])
        n = basis.n_qubits
        raise SectorViolationError(
            f"term #{term_index} ({term.kind} on qubits {list(term.support)}) maps "
            f"{int(states[src[j]]):0{n}b} to {int(targets[j]):0{n}b}, outside the sector",
            term_index,
            term,
        )
    return idx


def _check_sizes(op: Operator, basis):
    if op.n_qubits != basis.n_qubits:
        raise ValueError(f"operator has {op.n_qubits} qubits, basis has {basis.n_qubits}")


def apply(op: Operator, v, basis) -> np.ndarray:
    """Matrix-free ``H @ v`` on a sector or parity-symmetric basis.

    On a ``SymBasis`` each transition target is folded onto its canonical
    representative, which realizes ``<e_y|H|e_x> = H_yx + H_{~y,x}``. This
    is only correct when ``op`` as a whole commutes with the global flip.
    """
    _check_sizes(op, basis)
    v = np.asarray(v, dtype=float)
    if v.shape != (basis.dim,):
        raise ValueError(f"vector of shape {v.shape} does not match basis dimension {basis.dim}")
    n = basis.n_qubits
    states = basis.states
    w = np.zeros(basis.dim)
    for ti, term in enumerate(op.terms):
        if term.kind == "diag":
            w += term.table[local_config(states, term.support, n)] * v
            continue
        for src, targets, amp in _block_transitions(term, states, n):
            idx = _route(basis, ti, term, states, src, targets)
            w += np.bincount(idx, weights=amp * v[src], minlength=basis.dim)
    return w


def diagonal_values(op: Operator, basis) -> np.ndarray:
    """Diagonal matrix elements of ``op`` on every basis state."""
    _check_sizes(op, basis)
    n, states = basis.n_qubits, basis.states
    out = np.zeros(basis.dim)
    for term in op.terms:
        if term.kind == "diag":
            out += term.table[local_config(states, term.support, n)]
        else:
            out += np.diag(term.matrix)[local_config(states, term.support, n)]
    return out


def to_sparse(op: Operator, basis) -> sp.csr_matrix:
    """Assemble ``op`` on ``basis`` as a CSR matrix, term by term."""
    _check_sizes(op, basis)
    n, states, dim = basis.n_qubits, basis.states, basis.dim
    rows, cols, vals = [], [], []
    diag = np.zeros(dim)
    for ti, term in enumerate(op.terms):
        if term.kind == "diag":
            diag += term.table[local_config(states, term.support, n)]
            continue
        for src, targets, amp in _block_transitions(term, states, n):
            rows.append(_route(basis, ti, term, states, src, targets))
            cols.append(src)
            vals.append(np.full(src.size, amp))
    rows.append(np.arange(dim))
    cols.append(np.arange(dim))
    vals.append(diag)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    mat.sum_duplicates()
    return mat


def to_dense(op: Operator, basis) -> np.ndarray:
    if basis.dim > DENSE_DIM_CAP:
        raise ValueError(f"dense form limited to dimension {DENSE_DIM_CAP}, got {basis.dim}")
    mat = to_sparse(op, basis).toarray()
    asym = np.max(np.abs(mat - mat.T)) if mat.size else 0.0
    if asym >= 1e-12:
        raise AssertionError(f"dense operator not symmetric (residual {asym:.3e})")
    return mat


@dataclass
class InvarianceReport:
    leak: float
    violating_terms: list
    per_term: dict

    @property
    def conserved(self) -> bool:
        return self.leak == 0.0


def sector_invariance_check(op: Operator, basis) -> InvarianceReport:
    """Weight that block terms send outside the sector, summed over all basis states.

    The leak is the sum of squared amplitudes of transitions whose target is
    not in the sector; it is exactly zero for a conserving operator.
    """
    if isinstance(basis, SymBasis):
        basis = basis.parent
    _check_sizes(op, basis)
    n, states = basis.n_qubits, basis.states
    per_term = {}
    for ti, term in enumerate(op.terms):
        if term.kind == "diag":
            continue
        leaked = 0.0
        for src, targets, amp in _block_transitions(term, states, n):
            ok = basis.contains(targets)
            leaked += float(np.count_nonzero(~ok)) * amp * amp
        if leaked:
            per_term[ti] = leaked
    return InvarianceReport(sum(per_term.values()), sorted(per_term), per_term)


# ---------------------------------------------------------------------------
# builders


def build_gp_problem(g: Graph) -> Operator:
    """Cut size: ``1/2 sum_(ij in E) (1 - z_i z_j)``."""
    cut = np.array([0.0, 1.0, 1.0, 0.0])
    return Operator(g.n, tuple(Diagonal(e, cut) for e in g.edges), {"family": "gp_problem"})


def gp_alpha_bound(g: Graph) -> float:
    return min(2 * g.max_degree, g.n) / 8.0


def build_gp_penalized(g: Graph, alpha: float | None = None) -> Operator:
    """Penalty-method problem Hamiltonian ``(H_cut + alpha (sum_i z_i)^2) / n``.

    The square expands to ``n + 2 sum_{i<j} z_i z_j``, so every qubit pair
    gets a term (merged with the cut term where an edge exists) plus a
    constant. A user ``alpha`` below ``min(2*Delta, n)/8`` is accepted but
    recorded under ``meta["warnings"]``.
    """
    n = g.n
    bound = gp_alpha_bound(g)
    meta = {"family": "gp_penalized", "alpha_bound": bound, "warnings": []}
    if alpha is None:
        alpha = bound
    elif alpha < bound:
        msg = f"alpha={alpha} is below the ground-state-preserving bound {bound}"
        meta["warnings"].append(msg)
        warnings.warn(msg, stacklevel=2)
    meta["alpha"] = float(alpha)
    cut = np.array([0.0, 1.0, 1.0, 0.0])
    terms = []
    for u in range(n):
        for v in range(u + 1, n):
            table = 2.0 * alpha * _ZZ
            if g.has_edge(u, v):
                table = table + cut
            terms.append(Diagonal((u, v), table / n))
    terms.append(Diagonal((), [alpha]))  # alpha * n / n
    return Operator(n, tuple(terms), meta)


def build_transverse_driver(n: int) -> Operator:
    if n < 1:
        raise ValueError("transverse driver needs n >= 1")
    mx = np.array([[0.0, -1.0], [-1.0, 0.0]])
    return Operator(n, tuple(LocalBlock((q,), mx) for q in range(n)), {"family": "transverse"})


def _xy_block(weight: float) -> np.ndarray:
    """``-weight * (XX + YY)``: swaps 01 <-> 10 with amplitude ``-2*weight``."""
    m = np.zeros((4, 4))
    m[1, 2] = m[2, 1] = -2.0 * weight
    return m


def build_xy_ring_driver(ordering) -> Operator:
    """``-sum_i (X_i X_{i+1} + Y_i Y_{i+1})`` around the ring given by ``ordering``.

    An int ``n`` means the identity ordering. Rings need at least three
    qubits; with two the wraparound bond would duplicate the only edge.
    """
    order = list(range(ordering)) if isinstance(ordering, (int, np.integer)) else [int(q) for q in ordering]
    n = len(order)
    if n < 3:
        raise ValueError(f"XY ring needs at least 3 qubits, got {n}")
    if sorted(order) != list(range(n)):
        raise ValueError("ordering must be a permutation of 0..n-1")
    block = _xy_block(1.0)
    terms = tuple(LocalBlock((order[i], order[(i + 1) % n]), block) for i in range(n))
    return Operator(n, terms, {"family": "xy_ring", "ordering": order})


def build_gc_problem(g: Graph, n_c: int, mode: str = "bare", alpha: float = 1.0) -> Operator:
    """Graph-coloring cost on ``n * n_c`` qubits, qubit ``(i, k)`` at ``i*n_c + k``.

    ``bare``: ``sum_(ij in E) sum_k (1 + z_ik)(1 + z_jk)``.
    ``penalized`` adds ``alpha * sum_i (sum_k z_ik - c)^2`` with ``c = 2 - n_c``,
    the total z of a one-hot group under the up-means-colored convention.
    """
    if n_c < 1:
        raise ValueError("need at least one color")
    if mode not in ("bare", "penalized"):
        raise ValueError(f"mode must be 'bare' or 'penalized', got {mode!r}")
    same_up = np.array([0.0, 0.0, 0.0, 4.0])
    terms = [
        Diagonal((i * n_c + k, j * n_c + k), same_up) for i, j in g.edges for k in range(n_c)
    ]
    meta = {"family": f"gc_{mode}", "n_c": n_c}
    if mode == "penalized":
        c = 2 - n_c
        for i in range(g.n):
            group = [i * n_c + k for k in range(n_c)]
            for a in range(n_c):
                for b in range(a + 1, n_c):
                    terms.append(Diagonal((group[a], group[b]), 2.0 * alpha * _ZZ))
            for q in group:
                terms.append(Diagonal((q,), -2.0 * alpha * c * _Z))
        terms.append(Diagonal((), [alpha * g.n * (n_c + c * c)]))
        meta.update(alpha=alpha, constraint_value=c)
    return Operator(g.n * n_c, tuple(terms), meta)


def build_gc_clique_driver(n_vertices: int, n_c: int) -> Operator:
    """``-(1/n_c) sum_i sum_{k<l} (X X + Y Y)`` inside each vertex's color group."""
    block = _xy_block(1.0 / n_c)
    terms = tuple(
        LocalBlock((i * n_c + k, i * n_c + l), block)
        for i in range(n_vertices)
        for k in range(n_c)
        for l in range(k + 1, n_c)
    )
    return Operator(n_vertices * n_c, terms, {"family": "gc_clique", "n_c": n_c})


@dataclass(frozen=True)
class ClausePartition:
    """Split of a clause list into conserved constraint clauses and the rest."""

    n: int
    clauses: tuple
    constraint: tuple
    remainder: tuple
    free_bits: tuple

    @property
    def constraint_clauses(self) -> list[Clause]:
        return [self.clauses[i] for i in self.constraint]

    @property
    def remainder_clauses(self) -> list[Clause]:
        return [self.clauses[i] for i in self.remainder]


def select_constraint_clauses(clauses, n: int | None = None) -> ClausePartition:
    """Greedily promote clauses whose variables are disjoint from those already promoted."""
    clauses = tuple(clauses)
    if n is None:
        n = max((max(cl.vars) for cl in clauses), default=-1) + 1
    used: set[int] = set()
    chosen, rest = [], []
    for m, cl in enumerate(clauses):
        if max(cl.vars) >= n:
            raise ValueError(f"clause {cl.vars} refers to a qubit outside 0..{n - 1}")
        if used.isdisjoint(cl.vars):
            chosen.append(m)
            used.update(cl.vars)
        else:
            rest.append(m)
    free = tuple(q for q in range(n) if q not in used)
    return ClausePartition(n, clauses, tuple(chosen), tuple(rest), free)


def build_3sat_problem(n: int, clauses, partition: ClausePartition) -> Operator:
    """Sum of violation projectors ``|j_m><j_m|`` over the non-constraint clauses."""
    clauses = tuple(clauses)
    terms = []
    for m in partition.remainder:
        cl = clauses[m]
        table = np.zeros(8)
        table[cl.violating_index] = 1.0
        terms.append(Diagonal(cl.vars, table))
    return Operator(n, tuple(terms), {"family": "sat_problem"})


def clause_driver_block(violating_index: int) -> np.ndarray:
    """``1 - |u><u| - |j><j|`` with ``|u>`` the unnormalized sum of the 7 satisfying states.

    Equivalently minus the all-to-all hopping among the satisfying
    assignments; the forbidden state ``|j>`` is decoupled. Entries are exact
    integers, so no transition into ``|j>`` is ever produced.
    """
    u = np.ones(8)
    u[violating_index] = 0.0
    j = np.zeros(8)
    j[violating_index] = 1.0
    return np.eye(8) - np.outer(u, u) - np.outer(j, j)


def build_3sat_driver(n: int, partition: ClausePartition) -> Operator:
    """Clause drivers on the constraint clauses plus ``-X`` on every free bit."""
    terms = [
        LocalBlock(cl.vars, clause_driver_block(cl.violating_index))
        for cl in partition.constraint_clauses
    ]
    mx = np.array([[0.0, -1.0], [-1.0, 0.0]])
    terms += [LocalBlock((q,), mx) for q in partition.free_bits]
    return Operator(n, tuple(terms), {"family": "sat_driver"})


def interpolate(h_p: Operator, h_d: Operator, s: float) -> Operator:
    """``s * h_p + (1 - s) * h_d`` as a term list; zero-weight sides are dropped."""
    if h_p.n_qubits != h_d.n_qubits:
        raise ValueError("problem and driver act on different qubit counts")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return h_d
    if s == 1.0:
        return h_p
    terms = h_d.scaled(1.0 - s).terms + h_p.scaled(s).terms
    return Operator(h_p.n_qubits, terms, {"family": "interpolated", "s": s})
