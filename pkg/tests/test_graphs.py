import itertools
import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from cqa.graphs import (
    Graph,
    GraphError,
    cycle_completion,
    generate_random_regular,
    greedy_ordering,
    read_graph,
    resource_report,
    write_graph,
)


def all_regular_graphs(n, d):
    """Exhaustive oracle: every labelled d-regular graph on n vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for es in itertools.combinations(pairs, n * d // 2):
        deg = Counter(itertools.chain.from_iterable(es))
        if all(deg[v] == d for v in range(n)):
            out.append(tuple(sorted(es)))
    return out


@st.composite
def graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(n, tuple(chosen))


class TestGraph:
    def test_canonical_edges(self):
        g = Graph(4, ((3, 1), (0, 2), (2, 1)))
        assert g.edges == ((0, 2), (1, 2), (1, 3))

    @pytest.mark.parametrize("edges", [((0, 0),), ((0, 1), (1, 0)), ((0, 4),), ((-1, 2),)])
    def test_invalid(self, edges):
        with pytest.raises(GraphError):
            Graph(4, edges)

    def test_degrees_and_neighbors(self):
        g = Graph.cycle(5)
        assert g.degrees().tolist() == [2] * 5
        assert g.neighbors(0) == [1, 4]
        assert g.has_edge(4, 0) and not g.has_edge(0, 2)

    def test_file_round_trip(self, tmp_path):
        g = generate_random_regular(10, 3, 5)
        path = tmp_path / "g.json"
        write_graph(g, path)
        data = json.loads(path.read_text())
        assert data["edges"] == sorted(data["edges"])
        assert all(u < v for u, v in data["edges"])
        assert read_graph(path) == g

    def test_reader_accepts_any_order_but_validates(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"n": 3, "edges": [[2, 1], [1, 0]]}))
        assert read_graph(path).edges == ((0, 1), (1, 2))
        path.write_text(json.dumps({"n": 3, "edges": [[0, 3]]}))
        with pytest.raises(GraphError):
            read_graph(path)


class TestRandomRegular:
    def test_k4_forced(self):
        for seed in range(5):
            assert generate_random_regular(4, 3, seed) == Graph.complete(4)

    def test_n12_d6(self):
        g = generate_random_regular(12, 6, 7)
        assert len(g.edges) == 36
        assert set(g.degrees().tolist()) == {6}

    @pytest.mark.parametrize("n,d", [(5, 3), (4, 4), (6, 7), (1, 0), (6, -1)])
    def test_parameter_errors(self, n, d):
        with pytest.raises(GraphError):
            generate_random_regular(n, d, 1)

    @pytest.mark.parametrize("n,d", [(6, 0), (8, 7), (10, 6), (14, 6), (20, 6), (9, 4)])
    def test_degree_validation(self, n, d):
        g = generate_random_regular(n, d, 3)
        assert np.all(g.degrees() == d)

    def test_reproducible(self):
        assert generate_random_regular(14, 6, 99) == generate_random_regular(14, 6, 99)
        assert generate_random_regular(14, 6, 99) != generate_random_regular(14, 6, 100)

    def test_accepts_generator(self):
        a = generate_random_regular(10, 3, np.random.default_rng(4))
        b = generate_random_regular(10, 3, np.random.default_rng(4))
        assert a == b

    @pytest.mark.parametrize("d", [2, 3])
    def test_uniform_over_labelled_graphs(self, d):
        # d=3 goes through the complement branch; both must be uniform over all 70 graphs
        support = all_regular_graphs(6, d)
        assert len(support) == 70
        rng = np.random.default_rng(12345)
        counts = Counter(generate_random_regular(6, d, rng).edges for _ in range(7000))
        assert set(counts) == set(support)
        assert chisquare([counts[g] for g in support]).pvalue > 1e-3


class TestCompletion:
    def test_k4_identity(self):
        assert cycle_completion(Graph.complete(4), [0, 1, 2, 3]) == set()

    def test_edgeless(self):
        assert cycle_completion(Graph(4, ()), [0, 1, 2, 3]) == {(0, 1), (1, 2), (2, 3), (0, 3)}

    def test_bad_ordering(self):
        with pytest.raises(GraphError):
            cycle_completion(Graph(3, ()), [0, 1, 1])

    @settings(max_examples=60, deadline=None)
    @given(graphs(), st.randoms(use_true_random=False))
    def test_closes_cycle(self, g, rnd):
        order = list(range(g.n))
        rnd.shuffle(order)
        extra = cycle_completion(g, order)
        assert len(extra) <= g.n
        union = set(g.edges) | extra
        if g.n >= 3:
            for i in range(g.n):
                u, v = order[i], order[(i + 1) % g.n]
                assert (min(u, v), max(u, v)) in union

    def test_degree6_n12_any_ordering(self):
        g = generate_random_regular(12, 6, 1)
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert len(cycle_completion(g, rng.permutation(12))) <= 12

    def test_greedy_ordering(self):
        g = generate_random_regular(12, 6, 1)
        order = greedy_ordering(g)
        assert sorted(order) == list(range(12))
        assert greedy_ordering(g) == order
        assert len(cycle_completion(g, order)) <= len(cycle_completion(g, range(12))) + 1


class TestResources:
    def test_penalty_n12(self):
        r = resource_report(generate_random_regular(12, 6, 2), "penalty")
        assert (r.base_edges, r.additional_edges, r.max_degree) == (36, 30, 11)
        assert r.embedding_qubit_estimate == 66 + 12

    def test_k4_cqa(self):
        r = resource_report(Graph.complete(4), "cqa", [0, 1, 2, 3])
        assert r.additional_edges == 0 and r.max_degree == 3

    def test_cqa_n12(self):
        g = generate_random_regular(12, 6, 2)
        r = resource_report(g, "cqa")
        assert r.additional_edges <= 12
        assert r.embedding_qubit_estimate == r.additional_edges

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            resource_report(Graph(2, ()), "bogus")

    @settings(max_examples=40, deadline=None)
    @given(graphs())
    def test_penalty_identity(self, g):
        r = resource_report(g, "penalty")
        assert r.base_edges + r.additional_edges == g.n * (g.n - 1) // 2
        assert resource_report(g, "cqa").additional_edges <= g.n
