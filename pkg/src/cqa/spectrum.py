"""Lowest eigenvalues, gap curves and minimum relevant gaps along the anneal."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import ClauseSector, FullSpace, MagnetizationSector, OneHotSector, OrbitBasis, SymBasis
from .hamiltonian import Operator, SectorViolationError, build_xy_ring_driver, to_sparse

DEFAULT_TOL = 1e-10
DEGENERACY_TOL = 1e-9
DEFAULT_GRID = 41
DEFAULT_S_TOL = 1e-4

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConvergenceError(RuntimeError):
    """Lanczos hit its matvec budget; ``best`` holds the unconverged estimates."""

    def __init__(self, message: str, best: np.ndarray | None = None, s: float | None = None):
        self.best = best
        self.s = s
        super().__init__(message)


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray | None  # shape (k, dim)
    iterations: int
    converged: bool
    residuals: np.ndarray | None = None

    def clusters(self, tol: float = DEGENERACY_TOL) -> list[list[int]]:
        """Group indices of eigenvalues closer than ``tol`` into degenerate clusters."""
        out: list[list[int]] = []
        for i, e in enumerate(self.eigenvalues):
            if out and e - self.eigenvalues[out[-1][-1]] <= tol:
                out[-1].append(i)
            else:
                out.append([i])
        return out


def iteration_cap(k: int, dim: int) -> int:
    return 50 * k * max(1, math.ceil(math.log2(max(dim, 2))))


def _random_start(rng, dim, *against):
    v = rng.uniform(-1.0, 1.0, dim)
    for _ in range(2):
        for block in against:
            if block is not None and block.shape[0]:
                v -= (block @ v) @ block
    nrm = np.linalg.norm(v)
    return v / nrm if nrm > 1e-8 else None


def _thick_restart(matvec, dim, k, tol, rng, locked, budget, stop_above=None, basis_size=None):
    """Lowest ``k`` eigenpairs of ``A`` restricted to the complement of ``locked``.

    Symmetric Arnoldi (Lanczos with full reorthogonalization, so the
    projected matrix is kept as a dense array) with thick restarts that keep
    the lowest half of the Ritz vectors. Returns ``(values, vectors,
    matvecs, converged)``.

    With ``stop_above`` set, the run also ends as soon as the lowest Ritz
    value minus its residual exceeds it, which is all a verification pass
    needs to know.
    """
    p = 0 if locked is None else locked.shape[0]
    free = dim - p
    k = min(k, free)
    m = min(free, basis_size or max(2 * k + 20, 40))
    V = np.zeros((m + 1, dim))
    T = np.zeros((m, m))
    start = _random_start(rng, dim, locked)
    if start is None:
        raise ConvergenceError("could not draw a start vector outside the locked space")
    V[0] = start
    j0, used, scale = 0, 0, 1.0

    def deflate(w):
        if p:
            w -= (locked @ w) @ locked
        return w

    while True:
        beta = 0.0
        exhausted = False
        j = j0
        while j < m:
            w = deflate(matvec(V[j]))
            used += 1
            basis = V[: j + 1]
            h = basis @ w
            w -= h @ basis
            h2 = basis @ w
            w -= h2 @ basis
            h += h2
            w = deflate(w)
            T[: j + 1, j] = h
            T[j, : j + 1] = h
            scale = max(scale, float(np.abs(h).max()))
            beta = float(np.linalg.norm(w))
            j += 1
            if beta <= 1e-13 * scale:
                # invariant subspace: continue from a fresh orthogonal direction
                beta = 0.0
                fresh = None if j + p >= dim else _random_start(rng, dim, locked, V[:j])
                if fresh is None:
                    exhausted = True
                    break
                V[j] = fresh
            else:
                V[j] = w / beta
        mm = j
        theta, S = np.linalg.eigh(T[:mm, :mm])
        resid = np.abs(beta * S[mm - 1, :])
        done = bool(np.all(resid[:k] <= tol)) or exhausted
        if stop_above is not None and theta[0] - resid[0] > stop_above:
            done = True
        if done or used >= budget:
            vecs = S[:, :k].T @ V[:mm]
            return theta[:k].copy(), vecs, used, done
        keep = min(mm - 1, max(k + 1, (mm + k) // 2))
        V[:keep] = S[:, :keep].T @ V[:mm]
        V[keep] = V[mm]
        T[:] = 0.0
        T[np.arange(keep), np.arange(keep)] = theta[:keep]
        j0 = keep


def lanczos(matvec, dim: int, k: int = 1, tol: float = DEFAULT_TOL, seed=0,
            max_iter: int | None = None, diagonal: np.ndarray | None = None) -> EigenResult:
    """Lowest ``k`` eigenpairs of a symmetric operator given by ``matvec``.

    After the main run, deflated single-vector runs from fresh random starts
    look for any level below the current ``k``-th that the first Krylov space
    missed (degenerate copies are invisible to a single Krylov sequence).
    Pass ``diagonal`` for an operator known to be diagonal; its spectrum is
    then read off exactly.
    """
    if dim < 1:
        raise ValueError("empty basis")
    if not 1 <= k <= dim:
        raise ValueError(f"need 1 <= k <= dim, got k={k}, dim={dim}")
    if diagonal is not None:
        order = np.argsort(diagonal, kind="stable")[:k]
        vecs = np.zeros((k, dim))
        vecs[np.arange(k), order] = 1.0
        return EigenResult(np.asarray(diagonal)[order].astype(float), vecs, 0, True, np.zeros(k))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cap = max_iter if max_iter is not None else iteration_cap(k, dim)
    vals, vecs, used, ok = _thick_restart(matvec, dim, k, tol, rng, None, cap)
    if not ok:
        raise ConvergenceError(f"Lanczos did not converge within {cap} matvecs", vals)
    # every found vector stays locked, so each pass explores new directions
    while vecs.shape[0] < dim:
        kth = vals[k - 1]
        margin = max(tol, 1e-12 * abs(kth))
        nv, nvec, u, ok = _thick_restart(
            matvec, dim, 1, tol, rng, vecs, max(cap - used, 1), stop_above=kth - margin
        )
        used += u
        if not ok:
            raise ConvergenceError(f"Lanczos did not converge within {cap} matvecs", vals)
        if nv[0] >= kth - margin:
            break
        vals = np.append(vals, nv[0])
        vecs = np.vstack([vecs, nvec])
        order = np.argsort(vals, kind="stable")
        vals, vecs = vals[order], vecs[order]
    vals, vecs = vals[:k], vecs[:k]
    # re-orthonormalize within the returned set, then report true residuals
    q, _ = np.linalg.qr(vecs.T)
    q = q.T
    hq = np.array([matvec(x) for x in q])
    small = q @ hq.T
    small = (small + small.T) / 2
    vals, rot = np.linalg.eigh(small)
    vecs = rot.T @ q
    hv = rot.T @ hq
    residuals = np.linalg.norm(hv - vals[:, None] * vecs, axis=1)
    return EigenResult(vals, vecs, used, True, residuals)


def _compiled(op, basis):
    if sp.issparse(op):
        return op
    if isinstance(basis, OrbitBasis):
        return restrict_to_orbits(op, basis)
    return to_sparse(op, basis)


def restrict_to_orbits(op: Operator, basis: OrbitBasis, tol: float = 1e-12) -> sp.csr_matrix:
    """``Q^T H Q`` on an orbit basis, after checking that ``H`` keeps the subspace invariant."""
    q = basis.isometry()
    hq = to_sparse(op, basis.parent) @ q
    small = (q.T @ hq).tocsr()
    leak = abs(hq - q @ small)
    if leak.nnz and leak.max() > tol:
        raise SectorViolationError(
            f"operator does not commute with the {basis.constraint.get('symmetry')} symmetry "
            f"(leak {leak.max():.3e})"
        )
    return small


def _is_diagonal(mat) -> bool:
    coo = mat.tocoo()
    return not np.any((coo.row != coo.col) & (coo.data != 0))


def lowest_of_matrix(mat, k: int, tol: float = DEFAULT_TOL, seed=0) -> EigenResult:
    dim = mat.shape[0]
    if _is_diagonal(mat):
        return lanczos(None, dim, k, tol, seed, diagonal=mat.diagonal())
    return lanczos(mat.dot, dim, k, tol, seed)


def lanczos_lowest(op: Operator, basis, k: int = 1, tol: float = DEFAULT_TOL, seed=0) -> EigenResult:
    """Lowest ``k`` eigenpairs of ``op`` on ``basis`` (diagonal operators read off exactly)."""
    return lowest_of_matrix(_compiled(op, basis), k, tol, seed)


def describe_basis(basis) -> str:
    if isinstance(basis, OrbitBasis):
        return f"{describe_basis(basis.parent)}|{basis.constraint['symmetry']}-symmetric"
    if isinstance(basis, SymBasis):
        return f"{describe_basis(basis.parent)}|parity=+1"
    c = basis.constraint
    kind = c["kind"]
    if kind == "magnetization":
        return f"magnetization(n={basis.n_qubits},c={c['c']})"
    if kind == "one_hot":
        return f"one_hot(n_vertices={c['n_vertices']},n_c={c['n_c']})"
    if kind == "clauses":
        return f"clauses(n={basis.n_qubits},m={len(c['clauses'])})"
    return f"full(n={basis.n_qubits})"


@dataclass
class GapCurve:
    s: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    basis: str = ""
    method: str = ""

    @property
    def gap(self) -> np.ndarray:
        return self.e1 - self.e0

    @property
    def points(self):
        return list(zip(self.s.tolist(), self.e0.tolist(), self.e1.tolist(), self.gap.tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "e0", "e1", "gap"])
            for row in self.points:
                w.writerow([f"{x:.17g}" for x in row])


class AnnealPath:
    """``H(s) = s*H_p + (1-s)*H_d`` compiled once on a basis, evaluated at any ``s``."""

    def __init__(self, h_p, h_d, basis, tol: float = DEFAULT_TOL, seed=0):
        self.P = _compiled(h_p, basis)
        self.D = _compiled(h_d, basis)
        self.dim = self.P.shape[0]
        if self.dim < 2:
            raise ValueError("a gap needs a basis of dimension >= 2")
        self.tol = tol
        self.seed = seed
        self.evaluations = 0

    def matrix(self, s: float):
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {s}")
        if s == 1.0:
            return self.P
        if s == 0.0:
            return self.D
        return (s * self.P + (1.0 - s) * self.D).tocsr()

    def lowest_two(self, s: float) -> tuple[float, float]:
        self.evaluations += 1
        try:
            res = lowest_of_matrix(self.matrix(s), 2, self.tol, self.seed)
        except ConvergenceError as exc:
            raise ConvergenceError(f"{exc} at s={s}", exc.best, s) from exc
        return float(res.eigenvalues[0]), float(res.eigenvalues[1])

    def gap(self, s: float) -> float:
        e0, e1 = self.lowest_two(s)
        return e1 - e0


def uniform_grid(points: int = DEFAULT_GRID) -> np.ndarray:
    return np.linspace(0.0, 1.0, int(points))


def _check_grid(s_grid) -> np.ndarray:
    grid = np.asarray(s_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("s grid must be a non-empty list")
    if np.any(grid < 0) or np.any(grid > 1) or np.any(np.diff(grid) <= 0):
        raise ValueError("s grid must be strictly increasing inside [0, 1]")
    return grid


def gap_curve(h_p, h_d, basis, s_grid=None, tol: float = DEFAULT_TOL, seed=0,
              method: str = "", path: AnnealPath | None = None) -> GapCurve:
    grid = _check_grid(uniform_grid() if s_grid is None else s_grid)
    path = path or AnnealPath(h_p, h_d, basis, tol, seed)
    e = np.array([path.lowest_two(s) for s in grid])
    return GapCurve(grid, e[:, 0], e[:, 1], describe_basis(basis), method)


@dataclass
class MinGapResult:
    s_min: float
    gap_min: float
    refinement_width: float
    boundary: bool = False
    e0: float = float("nan")
    curve: GapCurve | None = field(default=None, repr=False)


def min_gap(h_p, h_d, basis, coarse_grid=None, s_tol: float = DEFAULT_S_TOL,
            tol: float = DEFAULT_TOL, seed=0, method: str = "") -> MinGapResult:
    """Coarse scan of the gap, then golden-section refinement around the coarse minimum.

    A refined point replaces the coarse minimum only if it is strictly
    lower, so a flat gap reports the first grid point. ``e0`` is the ground
    energy at ``s = 1`` when the grid reaches it.
    """
    grid = _check_grid(uniform_grid() if coarse_grid is None else coarse_grid)
    if grid.size < 3:
        raise ValueError("coarse grid needs at least 3 points")
    path = AnnealPath(h_p, h_d, basis, tol, seed)
    curve = gap_curve(h_p, h_d, basis, grid, method=method, path=path)
    gaps = curve.gap
    i = int(np.argmin(gaps))
    boundary = i == 0 or i == grid.size - 1
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]
    best_s, best_gap = float(grid[i]), float(gaps[i])

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = path.gap(c), path.gap(d)
    for s, f in ((c, fc), (d, fd)):
        if f < best_gap:
            best_s, best_gap = float(s), f
    while b - a > s_tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = path.gap(c)
            s_new, f_new = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = path.gap(d)
            s_new, f_new = d, fd
        if f_new < best_gap:
            best_s, best_gap = float(s_new), f_new
    e0_end = float(curve.e0[-1]) if grid[-1] == 1.0 else float("nan")
    return MinGapResult(best_s, best_gap, float(b - a), boundary, e0_end, curve)


def _incompatible(kind, basis):
    return SectorViolationError(f"driver {kind!r} does not conserve the sector of {describe_basis(basis)}")


def driver_ground_state(driver_kind: str, basis, ordering=None, seed=0) -> np.ndarray:
    """Ground state of a driver inside ``basis``, in the basis' own coordinates.

    Closed forms are used for the clique, clause and transverse drivers: a
    product of per-vertex W states, a product of uniform superpositions over
    each constraint clause's seven satisfying assignments times ``|+>`` on
    the free bits, and the uniform state. The XY ring has no closed form
    here and is diagonalized.
    """
    if isinstance(basis, OrbitBasis):
        if driver_kind == "xy_ring":
            raise _incompatible(driver_kind, basis)
        return basis.isometry().T @ driver_ground_state(driver_kind, basis.parent, ordering, seed)
    parent = basis.parent if isinstance(basis, SymBasis) else basis
    if driver_kind == "gc_clique":
        if not isinstance(basis, OneHotSector):
            raise _incompatible(driver_kind, basis)
        per_vertex = 1.0 / math.sqrt(basis.n_c)
        return np.full(basis.dim, per_vertex**basis.n_vertices)
    if driver_kind == "sat_driver":
        if not isinstance(basis, ClauseSector):
            raise _incompatible(driver_kind, basis)
        n_free = basis.n_qubits - 3 * len(basis.clauses)
        amp = (1.0 / math.sqrt(7.0)) ** len(basis.clauses) * (1.0 / math.sqrt(2.0)) ** n_free
        return np.full(basis.dim, amp)
    if driver_kind == "transverse":
        if not isinstance(parent, FullSpace):
            raise _incompatible(driver_kind, basis)
        return np.full(basis.dim, 1.0 / math.sqrt(basis.dim))
    if driver_kind == "xy_ring":
        if not isinstance(parent, MagnetizationSector):
            raise _incompatible(driver_kind, basis)
        op = build_xy_ring_driver(list(range(basis.n_qubits)) if ordering is None else ordering)
        vec = lanczos_lowest(op, basis, 1, seed=seed).vectors[0]
        return vec * np.sign(vec[np.argmax(np.abs(vec))])
    raise ValueError(f"unknown driver kind {driver_kind!r}")
