import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqa.basis import (
    Clause,
    MembershipError,
    OrbitBasis,
    SectorError,
    SymmetryError,
    clause_sector,
    color_symmetrize,
    from_bitstring,
    full_space,
    magnetization_sector,
    one_hot_sector,
    parity_symmetrize,
    permute_qubits,
    to_bitstring,
)


def brute(n, pred):
    """Oracle: filter all 2^n bitstrings (qubit 0 leftmost) through a predicate on the bit tuple."""
    return [int("".join(map(str, bits)), 2) if n else 0
            for bits in itertools.product((0, 1), repeat=n) if pred(bits)]


def labels(b):
    return [b.state_of(i) for i in range(b.dim)]


class TestConvention:
    def test_bitstrings(self):
        assert to_bitstring(3, 4) == "0011"
        assert from_bitstring("1100") == 12
        assert from_bitstring(5) == 5


class TestMagnetization:
    def test_n4_c0(self):
        assert labels(magnetization_sector(4, 0)) == ["0011", "0101", "0110", "1001", "1010", "1100"]

    def test_polarized(self):
        assert labels(magnetization_sector(2, 2)) == ["11"]

    def test_n14(self):
        b = magnetization_sector(14, 0)
        assert b.dim == 3432
        assert b.states.tolist() == brute(14, lambda x: sum(x) == 7)

    @pytest.mark.parametrize("n,c", [(4, 1), (3, 5), (2, -4)])
    def test_infeasible(self, n, c):
        with pytest.raises(SectorError):
            magnetization_sector(n, c)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n))))
    def test_dimension_and_states(self, nk):
        n, k = nk
        c = 2 * k - n
        b = magnetization_sector(n, c)
        assert b.dim == math.comb(n, k) == magnetization_sector(n, -c).dim
        assert b.states.tolist() == brute(n, lambda x: sum(x) == k)

    def test_index_examples(self):
        b = magnetization_sector(4, 0)
        assert b.index_of("0011") == 0
        assert b.state_of(5) == "1100"
        with pytest.raises(MembershipError):
            b.index_of("0001")
        with pytest.raises(IndexError):
            b.state_of(6)


class TestOneHot:
    def test_dims(self):
        assert one_hot_sector(2, 3).dim == 9
        assert labels(one_hot_sector(1, 1)) == ["1"]
        b = one_hot_sector(3, 3)
        assert b.dim == 27
        assert all(s.count("1") == 3 for s in labels(b))

    @pytest.mark.parametrize("nv,nc", [(1, 4), (2, 2), (3, 3), (4, 2), (2, 5)])
    def test_matches_brute_force(self, nv, nc):
        def pred(bits):
            return all(sum(bits[i * nc:(i + 1) * nc]) == 1 for i in range(nv))
        b = one_hot_sector(nv, nc)
        assert b.states.tolist() == brute(nv * nc, pred)
        assert b.index_array(b.states).tolist() == list(range(b.dim))

    def test_invalid(self):
        with pytest.raises(SectorError):
            one_hot_sector(0, 3)


class TestClauseSector:
    def test_one_clause(self):
        assert clause_sector(3, [Clause((0, 1, 2), (1, 0, 1))]).dim == 7

    def test_n10_two_clauses(self):
        cls = [Clause((0, 4, 7), (0, 0, 1)), Clause((2, 3, 9), (1, 1, 1))]
        b = clause_sector(10, cls)
        assert b.dim == 784

        def pred(bits):
            return all(tuple(bits[q] for q in cl.vars) != cl.violating for cl in cls)
        assert b.states.tolist() == brute(10, pred)

    def test_no_clauses(self):
        assert clause_sector(3, []).dim == 8

    def test_overlap(self):
        with pytest.raises(SectorError):
            clause_sector(6, [Clause((0, 1, 2), (0, 0, 0)), Clause((2, 3, 4), (0, 0, 0))])

    def test_clause_validation(self):
        with pytest.raises(ValueError):
            Clause((0, 0, 1), (0, 0, 0))
        with pytest.raises(ValueError):
            Clause((0, 1, 2), (0, 2, 0))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 12), st.data())
    def test_dimension_formula(self, n, data):
        perm = data.draw(st.permutations(range(n)))
        m = data.draw(st.integers(0, n // 3))
        bits = data.draw(st.lists(st.tuples(*[st.integers(0, 1)] * 3), min_size=m, max_size=m))
        cls = [Clause(tuple(perm[3 * i:3 * i + 3]), bits[i]) for i in range(m)]
        b = clause_sector(n, cls)
        assert b.dim == 7**m * 2 ** (n - 3 * m)
        for p in range(0, b.dim, max(1, b.dim // 17)):
            assert b.index_of(b.state_of(p)) == p


class TestParity:
    def test_zero_sector_n4(self):
        b = parity_symmetrize(magnetization_sector(4, 0))
        assert labels(b) == ["0011", "0101", "0110"]
        assert b.index_of("1100") == 0  # complement shares the vector

    def test_full_n3(self):
        assert parity_symmetrize(full_space(3)).dim == 4

    def test_not_closed(self):
        with pytest.raises(SymmetryError):
            parity_symmetrize(magnetization_sector(4, 2))

    @pytest.mark.parametrize("n", [2, 6, 10])
    def test_representatives(self, n):
        for parent in (full_space(n), magnetization_sector(n, 0)):
            b = parity_symmetrize(parent)
            mask = (1 << n) - 1
            assert np.all(b.states < (b.states ^ mask))
            assert 2 * b.dim == parent.dim
            assert [b.index_of(b.state_of(p)) for p in range(b.dim)] == list(range(b.dim))


class TestOrbits:
    def test_permute_qubits(self):
        # swapping qubits 0 and 2 of 100 gives 001
        assert permute_qubits(np.array([0b100]), [2, 1, 0], 3).tolist() == [0b001]

    @pytest.mark.parametrize("nv,nc,expected", [(3, 3, 5), (4, 3, 14), (2, 2, 2), (3, 2, 4), (1, 3, 1)])
    def test_color_orbits_count_partitions(self, nv, nc, expected):
        # orbits of colorings under color relabelling = set partitions into <= n_c blocks
        b = color_symmetrize(one_hot_sector(nv, nc), nv, nc)
        assert b.dim == expected
        assert b.orbit_sizes.sum() == nc**nv

    def test_isometry_orthonormal(self):
        b = color_symmetrize(full_space(6), 2, 3)
        q = b.isometry().toarray()
        assert np.allclose(q.T @ q, np.eye(b.dim), atol=1e-14)
        assert np.all(q.sum(axis=1) > 0)

    def test_orbits_are_closed(self):
        b = color_symmetrize(one_hot_sector(3, 3), 3, 3)
        for g in b.generators:
            moved = permute_qubits(b.parent.states, g, 9)
            assert np.array_equal(b.orbit_of[b.parent.index_array(moved)], b.orbit_of)

    def test_not_closed(self):
        sector = clause_sector(3, [Clause((0, 1, 2), (0, 0, 1))])
        assert OrbitBasis(sector, [[0, 1, 2]]).dim == 7
        with pytest.raises(SymmetryError):
            OrbitBasis(sector, [[2, 1, 0]])
        with pytest.raises(SymmetryError):
            OrbitBasis(sector, [[0, 0, 1]])

    def test_size_mismatch(self):
        with pytest.raises(SectorError):
            color_symmetrize(full_space(5), 2, 3)
