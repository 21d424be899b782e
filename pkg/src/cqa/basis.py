"""Constrained Hilbert-space sectors and their symmetric subspaces.

Bit convention, used everywhere in the package: a basis state is an integer
whose binary string, read left to right, lists qubits ``0..n-1``. Qubit ``q``
is therefore bit ``n-1-q`` of the integer, and bit value 1 means spin up
(sigma^z eigenvalue +1). Sorting the integers sorts the bitstrings
lexicographically, which is the canonical state order of every sector.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp


class SectorError(ValueError):
    """Requested sector is empty or ill-defined."""


class MembershipError(ValueError):
    """A state does not belong to the sector."""


class SymmetryError(ValueError):
    """Sector is not closed under the global spin flip."""


@dataclass(frozen=True)
class Clause:
    """A 3SAT clause: three distinct qubits and the one assignment it forbids."""

    vars: tuple[int, int, int]
    violating: tuple[int, int, int]

    def __post_init__(self):
        v = tuple(int(x) for x in self.vars)
        b = tuple(int(x) for x in self.violating)
        if len(v) != 3 or len(set(v)) != 3 or min(v) < 0:
            raise ValueError(f"clause needs three distinct non-negative variables, got {v}")
        if len(b) != 3 or any(x not in (0, 1) for x in b):
            raise ValueError(f"violating pattern must be three bits, got {b}")
        object.__setattr__(self, "vars", v)
        object.__setattr__(self, "violating", b)

    @property
    def violating_index(self) -> int:
        """Local index of the forbidden assignment (first variable most significant)."""
        b0, b1, b2 = self.violating
        return (b0 << 2) | (b1 << 1) | b2

    def to_dict(self) -> dict:
        return {"vars": list(self.vars), "violating": list(self.violating)}

    @classmethod
    def from_dict(cls, data: dict) -> Clause:
        return cls(tuple(data["vars"]), tuple(data["violating"]))


def to_bitstring(state: int, n: int) -> str:
    return format(int(state), f"0{n}b") if n else ""


def from_bitstring(bits) -> int:
    if isinstance(bits, str):
        if bits and set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return int(bits, 2) if bits else 0
    return int(bits)


def qubit_bits(states: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Bit value of ``qubit`` for every state in ``states``."""
    return (states >> (n - 1 - qubit)) & 1


def local_config(states: np.ndarray, support, n: int) -> np.ndarray:
    """Local configuration index of ``support`` (first qubit most significant)."""
    out = np.zeros_like(states)
    for q in support:
        out = (out << 1) | qubit_bits(states, q, n)
    return out


def popcount(states: np.ndarray) -> np.ndarray:
    x = np.asarray(states, dtype=np.uint64)
    return np.bitwise_count(x).astype(np.int64)


class SectorBasis:
    """Sorted list of feasible basis states with a bidirectional index map.

    Subclasses supply the enumeration and a vectorized ``_rank`` returning
    positions plus a membership mask. Instances are immutable.
    """

    def __init__(self, n_qubits: int, constraint: dict, states: np.ndarray):
        self.n_qubits = int(n_qubits)
        self.constraint = dict(constraint)
        states = np.asarray(states, dtype=np.int64)
        states.setflags(write=False)
        self.states = states

    @property
    def dim(self) -> int:
        return int(self.states.size)

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"{type(self).__name__}(n_qubits={self.n_qubits}, {self.constraint}, dim={self.dim})"

    def _rank(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def contains(self, states) -> np.ndarray:
        return self._rank(np.asarray(states, dtype=np.int64))[1]

    def lookup(self, states) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized rank: ``(positions, in_sector_mask)``; positions are junk where the mask is False."""
        return self._rank(np.asarray(states, dtype=np.int64))

    def index_array(self, states) -> np.ndarray:
        idx, ok = self.lookup(states)
        if not np.all(ok):
            bad = int(np.asarray(states).reshape(-1)[~ok.reshape(-1)][0])
            raise MembershipError(
                f"state {to_bitstring(bad, self.n_qubits)} is outside sector {self.constraint}"
            )
        return idx

    def index_of(self, state) -> int:
        s = from_bitstring(state)
        idx, ok = self._rank(np.array([s], dtype=np.int64))
        if not ok[0]:
            raise MembershipError(
                f"state {to_bitstring(s, self.n_qubits)} is outside sector {self.constraint}"
            )
        return int(idx[0])

    def state_of(self, position: int) -> str:
        if not 0 <= position < self.dim:
            raise IndexError(f"position {position} out of range for dimension {self.dim}")
        return to_bitstring(self.states[position], self.n_qubits)

    def is_complement_closed(self) -> bool:
        if self.n_qubits == 0:
            return False
        mask = (1 << self.n_qubits) - 1
        return bool(np.all(self.contains(self.states ^ mask)))


def _in_range(states: np.ndarray, n: int) -> np.ndarray:
    return (states >= 0) & (states < (1 << n))


class FullSpace(SectorBasis):
    def __init__(self, n_qubits: int):
        if n_qubits < 1:
            raise SectorError("full space needs at least one qubit")
        super().__init__(n_qubits, {"kind": "full"}, np.arange(1 << n_qubits, dtype=np.int64))

    def _rank(self, states):
        return states.copy(), _in_range(states, self.n_qubits)


class MagnetizationSector(SectorBasis):
    """All states with total sigma^z equal to ``c``, i.e. ``(n+c)/2`` up spins.

    Positions come from the combinatorial number system: the rank of a
    weight-``k`` integer among all weight-``k`` integers in ascending order is
    ``sum_t C(p_t, t)`` over its set-bit positions ``p_1 < ... < p_k``.
    """

    def __init__(self, n_qubits: int, c: int):
        n, c = int(n_qubits), int(c)
        if n < 1:
            raise SectorError("magnetization sector needs at least one qubit")
        if abs(c) > n or (n + c) % 2:
            raise SectorError(f"no states with total magnetization {c} on {n} qubits")
        self.k = (n + c) // 2
        states = np.array(
            sorted(sum(1 << p for p in pos) for pos in combinations(range(n), self.k)),
            dtype=np.int64,
        )
        super().__init__(n, {"kind": "magnetization", "c": c}, states)
        self._binom = np.array(
            [[comb(p, j) for j in range(self.k + 2)] for p in range(n + 1)], dtype=np.int64
        )

    def _rank(self, states):
        n, k = self.n_qubits, self.k
        ok = _in_range(states, n)
        safe = np.where(ok, states, 0)
        rank = np.zeros_like(safe)
        count = np.zeros_like(safe)
        for p in range(n):
            bit = (safe >> p) & 1
            count += bit
            rank += bit * self._binom[p, np.minimum(count, k + 1)]
        ok &= count == k
        return rank, ok


class OneHotSector(SectorBasis):
    """Exactly one up spin in each ``n_c``-qubit vertex group.

    Qubit ``(vertex i, color k)`` is flat index ``i*n_c + k``. Positions are
    mixed-radix numbers whose digit for vertex ``i`` is ``n_c-1-k_i``, which
    reproduces lexicographic order.
    """

    def __init__(self, n_vertices: int, n_c: int):
        nv, nc = int(n_vertices), int(n_c)
        if nv < 1 or nc < 1:
            raise SectorError(f"need n_vertices >= 1 and n_c >= 1, got {nv}, {nc}")
        self.n_vertices, self.n_c = nv, nc
        n = nv * nc
        digits = np.indices((nc,) * nv).reshape(nv, -1)  # row i: digit of vertex i
        states = np.zeros(digits.shape[1], dtype=np.int64)
        for i in range(nv):
            states |= (np.int64(1) << ((nv - 1 - i) * nc + digits[i])).astype(np.int64)
        super().__init__(n, {"kind": "one_hot", "n_vertices": nv, "n_c": nc}, np.sort(states))

    def _rank(self, states):
        nv, nc = self.n_vertices, self.n_c
        ok = _in_range(states, self.n_qubits)
        safe = np.where(ok, states, 0)
        group_mask = (1 << nc) - 1
        rank = np.zeros_like(safe)
        for i in range(nv):
            g = (safe >> ((nv - 1 - i) * nc)) & group_mask
            ok &= popcount(g) == 1
            pos = np.zeros_like(g)
            for p in range(1, nc):
                pos += ((g >> p) & 1) * p
            rank = rank * nc + pos
        return rank, ok


class ClauseSector(SectorBasis):
    """States satisfying every constraint clause (clauses must be variable-disjoint)."""

    def __init__(self, n_qubits: int, clauses):
        n = int(n_qubits)
        if n < 1:
            raise SectorError("clause sector needs at least one qubit")
        clauses = tuple(clauses)
        used: set[int] = set()
        for cl in clauses:
            if max(cl.vars) >= n:
                raise SectorError(f"clause {cl.vars} refers to a qubit outside 0..{n - 1}")
            if used & set(cl.vars):
                raise SectorError(f"constraint clauses overlap on variables {sorted(used & set(cl.vars))}")
            used |= set(cl.vars)
        self.clauses = clauses
        self.n_qubits = n
        all_states = np.arange(1 << n, dtype=np.int64)
        super().__init__(
            n,
            {"kind": "clauses", "clauses": [cl.to_dict() for cl in clauses]},
            all_states[self._satisfies(all_states)],
        )

    def _satisfies(self, states):
        ok = np.ones(states.shape, dtype=bool)
        for cl in self.clauses:
            ok &= local_config(states, cl.vars, self.n_qubits) != cl.violating_index
        return ok

    def _rank(self, states):
        ok = _in_range(states, self.n_qubits)
        pos = np.searchsorted(self.states, states)
        pos_c = np.minimum(pos, self.dim - 1)
        ok &= self.states[pos_c] == states
        return pos_c, ok


def full_space(n: int) -> FullSpace:
    return FullSpace(n)


def magnetization_sector(n: int, c: int) -> MagnetizationSector:
    return MagnetizationSector(n, c)


def one_hot_sector(n_vertices: int, n_c: int) -> OneHotSector:
    return OneHotSector(n_vertices, n_c)


def clause_sector(n: int, constraint_clauses) -> ClauseSector:
    return ClauseSector(n, constraint_clauses)


class SymBasis:
    """Parity-symmetric half of a complement-closed sector.

    Basis vector ``e_x = (|x> + |~x>)/sqrt(2)`` for each representative ``x``,
    the lexicographically smaller member of its complement pair. Since
    ``x < ~x`` exactly when qubit 0 is down, the representatives are the
    first half of the parent's sorted states and share the parent's ranks.
    """

    normalization = 1.0 / np.sqrt(2.0)

    def __init__(self, parent: SectorBasis):
        if not parent.is_complement_closed():
            raise SymmetryError(f"sector {parent.constraint} is not closed under global spin flip")
        self.parent = parent
        self.n_qubits = parent.n_qubits
        self.constraint = dict(parent.constraint, parity=+1)
        self._mask = (1 << self.n_qubits) - 1
        self._msb = 1 << (self.n_qubits - 1)
        reps = parent.states[: parent.dim // 2]
        assert np.all((reps & self._msb) == 0)
        self.states = reps
        self.representatives = reps

    @property
    def dim(self) -> int:
        return int(self.states.size)

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"SymBasis(parent={self.parent!r}, dim={self.dim})"

    def canonical(self, states) -> np.ndarray:
        s = np.asarray(states, dtype=np.int64)
        return np.where((s & self._msb) != 0, s ^ self._mask, s)

    def lookup(self, states):
        return self.parent.lookup(self.canonical(states))

    def contains(self, states):
        return self.lookup(states)[1]

    def index_array(self, states):
        idx, ok = self.lookup(states)
        if not np.all(ok):
            bad = int(np.asarray(states).reshape(-1)[~ok.reshape(-1)][0])
            raise MembershipError(
                f"state {to_bitstring(bad, self.n_qubits)} is outside sector {self.parent.constraint}"
            )
        return idx

    def index_of(self, state) -> int:
        """Position of the symmetric vector containing ``state`` (either pair member)."""
        s = from_bitstring(state)
        return int(self.index_array(np.array([s]))[0])

    def state_of(self, position: int) -> str:
        if not 0 <= position < self.dim:
            raise IndexError(f"position {position} out of range for dimension {self.dim}")
        return to_bitstring(self.states[position], self.n_qubits)


def parity_symmetrize(sector: SectorBasis) -> SymBasis:
    return SymBasis(sector)


def permute_qubits(states: np.ndarray, perm, n: int) -> np.ndarray:
    """Move the bit of qubit ``q`` to qubit ``perm[q]``."""
    states = np.asarray(states, dtype=np.int64)
    out = np.zeros_like(states)
    for q, t in enumerate(perm):
        out |= ((states >> (n - 1 - q)) & 1) << (n - 1 - int(t))
    return out


class OrbitBasis:
    """Subspace of a sector invariant under a group of qubit permutations.

    Basis vector ``f_O = |O|^{-1/2} sum_{x in O} |x>`` for each orbit ``O`` of
    the parent's states. Orbits are ordered by their smallest member, which is
    also the listed representative. Only Hamiltonians commuting with every
    generator may be restricted here; the restriction is ``Q^T H Q`` with the
    isometry ``Q`` from :meth:`isometry`.
    """

    def __init__(self, parent: SectorBasis, generators, label: str = "perm"):
        n = parent.n_qubits
        gens = [tuple(int(x) for x in g) for g in generators]
        for g in gens:
            if sorted(g) != list(range(n)):
                raise SymmetryError(f"generator {g} is not a permutation of {n} qubits")
        partners = []
        for g in gens:
            idx, ok = parent.lookup(permute_qubits(parent.states, g, n))
            if not np.all(ok):
                raise SymmetryError(f"sector {parent.constraint} is not closed under qubit permutation {g}")
            partners.append(idx)
        # min-label propagation until each orbit shares the index of its smallest state
        label_of = np.arange(parent.dim)
        while True:
            new = label_of.copy()
            for idx in partners:
                np.minimum.at(new, idx, label_of)
                np.minimum(new, new[idx], out=new)
            new = new[new]
            if np.array_equal(new, label_of):
                break
            label_of = new
        reps, orbit_of = np.unique(label_of, return_inverse=True)
        self.parent = parent
        self.n_qubits = n
        self.generators = gens
        self.constraint = dict(parent.constraint, symmetry=label)
        self.orbit_of = orbit_of
        self.orbit_sizes = np.bincount(orbit_of)
        self.states = parent.states[reps]
        self.representatives = self.states

    @property
    def dim(self) -> int:
        return int(self.states.size)

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"OrbitBasis(parent={self.parent!r}, dim={self.dim})"

    def isometry(self) -> sp.csr_matrix:
        """``parent.dim x dim`` matrix with orthonormal columns (the orbit vectors)."""
        vals = 1.0 / np.sqrt(self.orbit_sizes[self.orbit_of])
        rows = np.arange(self.parent.dim)
        return sp.csr_matrix((vals, (rows, self.orbit_of)), shape=(self.parent.dim, self.dim))

    def index_of(self, state) -> int:
        """Orbit containing ``state``."""
        return int(self.orbit_of[self.parent.index_of(state)])

    def state_of(self, position: int) -> str:
        if not 0 <= position < self.dim:
            raise IndexError(f"position {position} out of range for dimension {self.dim}")
        return to_bitstring(self.states[position], self.n_qubits)


def color_symmetrize(sector, n_vertices: int, n_c: int) -> OrbitBasis:
    """Invariant subspace under relabelling the colors, applied to every vertex at once.

    Qubit ``(i, k)`` is flat index ``i*n_c + k``. A transposition and an
    ``n_c``-cycle of the colors generate the whole symmetric group.
    """
    if sector.n_qubits != n_vertices * n_c:
        raise SectorError(f"sector has {sector.n_qubits} qubits, expected {n_vertices}*{n_c}")

    def lift(color_perm):
        return [i * n_c + color_perm[k] for i in range(n_vertices) for k in range(n_c)]

    gens = []
    if n_c >= 2:
        gens.append(lift([1, 0] + list(range(2, n_c))))
        gens.append(lift(list(range(1, n_c)) + [0]))
    return OrbitBasis(sector, gens, label="colors")
