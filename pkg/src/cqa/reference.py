"""Dense full-space reference Hamiltonians built from Kronecker products of Pauli matrices.

These are deliberately independent of the term machinery in
``cqa.hamiltonian``: every operator is written out in the 2^n computational
basis and then restricted to a sector by plain indexing. Tests and the
verification suite compare the two routes. Dimension is limited to small n.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .basis import SymBasis

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Y = np.array([[0.0, -1j], [1j, 0.0]])
Z_STD = np.diag([1.0, -1.0])  # textbook sigma^z on |0>, |1>
Z_UP = -Z_STD  # package convention: bit 1 is spin up

MAX_QUBITS = 13


def pauli_product(n: int, factors: dict) -> np.ndarray:
    """Kronecker product with ``factors[q]`` on qubit ``q`` (qubit 0 leftmost) and identity elsewhere."""
    if n > MAX_QUBITS:
        raise ValueError(f"dense reference limited to {MAX_QUBITS} qubits")
    mats = [factors.get(q, I2) for q in range(n)]
    return reduce(np.kron, mats)


def _real(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if np.iscomplexobj(m):
        assert np.max(np.abs(m.imag)) < 1e-12
        return m.real.copy()
    return m


def gp_problem(n: int, edges) -> np.ndarray:
    h = np.zeros((1 << n, 1 << n))
    one = np.eye(1 << n)
    for u, v in edges:
        h += 0.5 * (one - pauli_product(n, {u: Z_UP, v: Z_UP}))
    return h


def total_z(n: int) -> np.ndarray:
    return sum(pauli_product(n, {q: Z_UP}) for q in range(n))


def gp_penalized(n: int, edges, alpha: float) -> np.ndarray:
    mz = total_z(n)
    return (gp_problem(n, edges) + alpha * mz @ mz) / n


def transverse(n: int) -> np.ndarray:
    return -sum(pauli_product(n, {q: X}) for q in range(n))


def xy_pairs(n: int, pairs, weight: float = 1.0) -> np.ndarray:
    h = np.zeros((1 << n, 1 << n), dtype=complex)
    for a, b in pairs:
        h -= weight * (pauli_product(n, {a: X, b: X}) + pauli_product(n, {a: Y, b: Y}))
    return _real(h)


def xy_ring(ordering) -> np.ndarray:
    order = list(ordering)
    n = len(order)
    return xy_pairs(n, [(order[i], order[(i + 1) % n]) for i in range(n)])


def gc_problem(n_vertices: int, edges, n_c: int, penalized: bool = False, alpha: float = 1.0) -> np.ndarray:
    n = n_vertices * n_c
    one = np.eye(1 << n)
    h = np.zeros((1 << n, 1 << n))
    for i, j in edges:
        for k in range(n_c):
            zi = pauli_product(n, {i * n_c + k: Z_UP})
            zj = pauli_product(n, {j * n_c + k: Z_UP})
            h += (one + zi) @ (one + zj)
    if penalized:
        c = 2 - n_c
        for i in range(n_vertices):
            m = sum(pauli_product(n, {i * n_c + k: Z_UP}) for k in range(n_c)) - c * one
            h += alpha * m @ m
    return h


def gc_clique(n_vertices: int, n_c: int) -> np.ndarray:
    pairs = [
        (i * n_c + k, i * n_c + l) for i in range(n_vertices) for k in range(n_c) for l in range(k + 1, n_c)
    ]
    n = n_vertices * n_c
    if not pairs:
        return np.zeros((1 << n, 1 << n))
    return xy_pairs(n, pairs, 1.0 / n_c)


def clause_projector_pauli(n: int, clause) -> np.ndarray:
    """``(1/8) prod_i [1 + (-1)^b_i sigma^z_i]`` in the textbook z basis, so it projects on bits ``b``."""
    mats = []
    for q in range(n):
        if q in clause.vars:
            b = clause.violating[clause.vars.index(q)]
            mats.append((I2 + (-1) ** b * Z_STD) / 2.0)
        else:
            mats.append(I2)
    return reduce(np.kron, mats)


def sat_problem(n: int, clauses) -> np.ndarray:
    h = np.zeros((1 << n, 1 << n))
    for cl in clauses:
        h += clause_projector_pauli(n, cl)
    return h


def clause_driver_pauli(clause_bits) -> np.ndarray:
    """Three-qubit clause driver from its Pauli expansion.

    ``1 - 8|+><+| + 2 sqrt(2)(|j><+| + |+><j|) - 2|j><j|`` with
    ``|+><+| = (1/8) prod (1 + X)`` and
    ``|j><+| = 1/(8 sqrt 8) prod [1 + X + (-1)^b (iY + Z)]``.
    """
    plus = reduce(np.kron, [(I2 + X) / 2.0] * 3)
    j_plus = reduce(
        np.kron, [I2 + X + (-1) ** b * (1j * Y + Z_STD) for b in clause_bits]
    ) / (8.0 * np.sqrt(8.0))
    j_j = reduce(np.kron, [(I2 + (-1) ** b * Z_STD) / 2.0 for b in clause_bits])
    h = np.eye(8) - 8.0 * plus + 2.0 * np.sqrt(2.0) * (j_plus + j_plus.conj().T) - 2.0 * j_j
    return _real(h)


def embed(n: int, support, block: np.ndarray) -> np.ndarray:
    """Embed a ``2^k`` block on ``support`` (first support qubit most significant) into 2^n."""
    k = len(support)
    rest = [q for q in range(n) if q not in support]
    perm = list(support) + rest
    full = np.kron(block, np.eye(1 << (n - k)))
    # full acts on qubits ordered as perm; reorder tensor axes back to 0..n-1
    t = full.reshape([2] * (2 * n))
    inv = np.argsort(perm)
    t = t.transpose(list(inv) + [n + a for a in inv])
    return t.reshape(1 << n, 1 << n)


def sat_driver(n: int, constraint_clauses, free_bits) -> np.ndarray:
    h = np.zeros((1 << n, 1 << n))
    for cl in constraint_clauses:
        h += embed(n, cl.vars, clause_driver_pauli(cl.violating))
    for q in free_bits:
        h -= pauli_product(n, {q: X})
    return h


def parity(n: int) -> np.ndarray:
    return reduce(np.kron, [X] * n)


def restrict(full: np.ndarray, basis) -> np.ndarray:
    """Matrix of a full-space operator in a sector or parity-symmetric basis."""
    if isinstance(basis, SymBasis):
        mask = (1 << basis.n_qubits) - 1
        x = basis.states
        xb = x ^ mask
        return 0.5 * (
            full[np.ix_(x, x)] + full[np.ix_(xb, x)] + full[np.ix_(x, xb)] + full[np.ix_(xb, xb)]
        )
    return full[np.ix_(basis.states, basis.states)]
