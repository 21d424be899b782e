import itertools
import json
import math
from collections import Counter

import numpy as np
import pytest

from cqa.basis import Clause, full_space, magnetization_sector
from cqa.graphs import Graph, generate_random_regular, write_graph
from cqa.hamiltonian import Operator, build_gp_penalized, build_gp_problem, build_xy_ring_driver, diagonal_values
from cqa.harness.experiment import (
    CSV_HEADER,
    InstanceError,
    ScreeningYieldError,
    assemble,
    classical_spectrum,
    generate_screened_ensemble,
    run_instance,
    scaling_experiment,
    summary_path,
)
from cqa.harness.instances import (
    InstanceDescriptor,
    derive_seed,
    random_3sat,
    read_instance,
    write_instance,
)
from cqa.harness.verify import verify_suite
from cqa.spectrum import uniform_grid

FAST_GRID = uniform_grid(11)


def cut_levels(n, edges):
    """Oracle: balanced cut sizes by direct enumeration of vertex subsets."""
    return Counter(
        sum((u in s) != (v in s) for u, v in edges) for s in map(set, itertools.combinations(range(n), n // 2))
    )


class TestClassicalSpectrum:
    def test_k4(self):
        spec = classical_spectrum(build_gp_problem(Graph.complete(4)), magnetization_sector(4, 0))
        assert spec.levels.tolist() == [4.0] and spec.multiplicities.tolist() == [6]
        assert spec.flip_paired and not spec.unique_ground

    def test_six_cycle(self):
        g = Graph.cycle(6)
        spec = classical_spectrum(build_gp_problem(g), magnetization_sector(6, 0))
        oracle = cut_levels(6, g.edges)
        assert dict(zip(spec.levels.tolist(), spec.multiplicities.tolist())) == oracle == {2: 6, 4: 12, 6: 2}
        assert not spec.unique_ground

    def test_empty_remainder(self):
        spec = classical_spectrum(Operator(4, ()), full_space(4))
        assert spec.levels.tolist() == [0.0] and spec.multiplicities.tolist() == [16]
        assert not spec.unique_ground

    def test_invariants(self):
        g = generate_random_regular(10, 3, 8)
        spec = classical_spectrum(build_gp_problem(g), magnetization_sector(10, 0))
        assert spec.multiplicities.sum() == math.comb(10, 5)
        assert np.all(np.diff(spec.levels) > 0)
        assert dict(zip(spec.levels.tolist(), spec.multiplicities.tolist())) == cut_levels(10, g.edges)

    def test_needs_diagonal(self):
        with pytest.raises(ValueError):
            classical_spectrum(build_xy_ring_driver(4), magnetization_sector(4, 0))

    def test_unique_without_pairing(self):
        op = build_gp_problem(Graph(3, ((0, 1),)))
        spec = classical_spectrum(op, magnetization_sector(3, 1), flip_pairing=False)
        assert spec.multiplicities[0] == 1 and spec.unique_ground


class TestScreening:
    def test_yield(self):
        ens = generate_screened_ensemble(8, 3, 5, seed=1)
        assert len(ens) == 5
        for d in ens:
            assert classical_spectrum(build_gp_problem(d.payload), magnetization_sector(8, 0)).unique_ground
            assert set(d.payload.degrees().tolist()) == {3}

    def test_k4_fails(self):
        with pytest.raises(ScreeningYieldError) as err:
            generate_screened_ensemble(4, 3, 2, seed=0)
        assert err.value.accepted == 0 and err.value.attempts == 200

    def test_n8_degree6_never_unique(self):
        # every 6-regular graph on 8 vertices is K8 minus a perfect matching; its min
        # balanced cut picks one end of each matching edge, 2^4 = 16 ground states
        g = generate_random_regular(8, 6, 0)
        assert cut_levels(8, g.edges)[12] == 16
        with pytest.raises(ScreeningYieldError):
            generate_screened_ensemble(8, 6, 1, seed=0)

    def test_deterministic(self):
        a = [d.id for d in generate_screened_ensemble(10, 6, 3, seed=5)]
        assert a == [d.id for d in generate_screened_ensemble(10, 6, 3, seed=5)]
        assert a != [d.id for d in generate_screened_ensemble(10, 6, 3, seed=6)]

    def test_odd_n(self):
        with pytest.raises(ValueError):
            generate_screened_ensemble(7, 2, 1, 0)


class TestInstances:
    def test_id_stable_and_method_free(self):
        g = generate_random_regular(10, 3, 1)
        a = InstanceDescriptor("gp", 10, g, "cqa", {"seed": 3})
        assert a.id == InstanceDescriptor("gp", 10, g, "penalty", {"seed": 3}).id
        assert a.id != InstanceDescriptor("gp", 10, g, "cqa", {"seed": 4}).id
        assert len(a.id) == 16

    def test_round_trip(self, tmp_path):
        cls = random_3sat(6, 10, 2)
        d = InstanceDescriptor("sat", 6, cls, "penalty", {"seed": 2})
        path = tmp_path / "i.json"
        write_instance(d, path)
        data = json.loads(path.read_text())
        assert set(data) == {"problem", "n", "payload", "params", "id"}
        back = read_instance(path)
        assert back.id == d.id and back.method == "penalty" and back.payload == cls

    def test_id_mismatch(self, tmp_path):
        d = InstanceDescriptor("gp", 4, Graph.complete(4))
        data = d.to_dict()
        data["id"] = "0" * 16
        path = tmp_path / "i.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValueError):
            read_instance(path)

    def test_bare_graph(self, tmp_path):
        path = tmp_path / "g.json"
        write_graph(Graph.cycle(6), path)
        d = read_instance(path)
        assert d.problem == "gp" and d.payload == Graph.cycle(6)

    def test_validation(self):
        with pytest.raises(ValueError):
            InstanceDescriptor("tsp", 4, Graph(4, ()))
        with pytest.raises(ValueError):
            InstanceDescriptor("gp", 5, Graph(4, ()))
        with pytest.raises(ValueError):
            InstanceDescriptor("sat", 3, [Clause((0, 1, 3), (0, 0, 0))])

    def test_random_3sat(self):
        cls = random_3sat(8, 32, 1)
        assert len(cls) == 32 and all(len(set(c.vars)) == 3 for c in cls)
        assert cls == random_3sat(8, 32, 1)

    def test_derive_seed(self):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
        assert len({derive_seed(0, n, i) for n in range(10) for i in range(10)}) == 100
        assert 0 <= derive_seed(7) < 2**63


class TestRunInstance:
    def test_gp_dims_and_gaps(self):
        desc = generate_screened_ensemble(8, 3, 1, seed=2)[0]
        cqa = run_instance(desc.with_method("cqa"), FAST_GRID)
        pen = run_instance(desc.with_method("penalty"), FAST_GRID)
        assert cqa.basis_dim == 35 and pen.basis_dim == 128
        assert cqa.gap_min > 0 and pen.gap_min > 0
        assert 0 <= cqa.s_min <= 1 and 0 <= pen.s_min <= 1

    def test_cross_method_consistency(self):
        # penalty ground restricted to balanced states equals the CQA ground over n
        for desc in generate_screened_ensemble(10, 6, 3, seed=9):
            n = desc.n
            pen_vals = diagonal_values(build_gp_penalized(desc.payload), full_space(n))
            balanced = magnetization_sector(n, 0).contains(full_space(n).states)
            cut = diagonal_values(build_gp_problem(desc.payload), magnetization_sector(n, 0))
            assert np.min(pen_vals[balanced]) == pytest.approx(cut.min() / n, abs=1e-12)
            # and the penalty keeps the global minimum on balanced states
            assert np.min(pen_vals) == pytest.approx(np.min(pen_vals[balanced]), abs=1e-12)
            assert set(np.flatnonzero(np.abs(pen_vals - pen_vals.min()) < 1e-9)) == set(
                full_space(n).states[balanced][np.abs(pen_vals[balanced] - pen_vals.min()) < 1e-9]
            )

    def test_screened_cqa_gap_open_at_end(self):
        for desc in generate_screened_ensemble(10, 6, 4, seed=3):
            h_p, _, basis = assemble(desc)
            levels = np.unique(diagonal_values(h_p, basis))
            vals = np.sort(diagonal_values(h_p, basis))
            assert vals[1] - vals[0] > 0 and levels.size > 1

    def test_gc_triangle(self):
        desc = InstanceDescriptor("gc", 3, Graph.cycle(3), "cqa", {"n_c": 3})
        rec = run_instance(desc, FAST_GRID)
        assert rec.basis_dim == 5 and rec.gap_min > 0 and rec.e0_final == 0.0
        plain = InstanceDescriptor("gc", 3, Graph.cycle(3), "cqa", {"n_c": 3, "symmetry": "none"})
        assert run_instance(plain, FAST_GRID).gap_min == 0.0  # six degenerate colorings at s = 1

    def test_sat_small(self):
        cls = random_3sat(6, 8, 4)
        for m in ("cqa", "penalty"):
            rec = run_instance(InstanceDescriptor("sat", 6, cls, m, {"seed": 4}), FAST_GRID)
            assert rec.gap_min >= 0 and rec.e0_final >= 0

    def test_errors_carry_instance_id(self):
        desc = InstanceDescriptor("gp", 4, Graph.complete(4), "cqa", {"ordering": [0, 1, 1, 3]})
        with pytest.raises(InstanceError, match=desc.id):
            run_instance(desc, FAST_GRID)


class TestScaling:
    def test_rows_and_determinism(self, tmp_path):
        out = tmp_path / "a.csv"
        t = scaling_experiment([8, 10], 3, 3, seed=4, out_path=out, grid=FAST_GRID)
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 13
        assert t.complete and json.loads(summary_path(out).read_text())["complete"]
        out2 = tmp_path / "b.csv"
        scaling_experiment([8, 10], 3, 3, seed=4, out_path=out2, grid=FAST_GRID, workers=2)
        assert out.read_bytes() == out2.read_bytes()
        assert summary_path(out).read_bytes() == summary_path(out2).read_bytes()

    def test_rows_reproducible_in_isolation(self, tmp_path):
        t = scaling_experiment([10], 2, 6, seed=1, grid=FAST_GRID)
        ens = generate_screened_ensemble(10, 6, 2, seed=1)
        for rec in t.records:
            desc = next(d for d in ens if d.id == rec.instance_id).with_method(rec.method)
            assert abs(run_instance(desc, FAST_GRID).gap_min - rec.gap_min) <= 1e-9

    def test_summary_contents(self):
        t = scaling_experiment([10, 12], 3, 6, seed=2, grid=FAST_GRID)
        s = t.summary
        assert set(s["fits"]) == {"cqa", "penalty"}
        assert s["per_size"]["10"]["cqa"]["count"] == 3
        assert s["median_ratio_cqa_over_penalty"] > 1

    def test_partial_on_screening_failure(self, tmp_path):
        out = tmp_path / "p.csv"
        t = scaling_experiment([8, 10], 1, 6, seed=0, out_path=out, grid=FAST_GRID)
        assert not t.complete and "8" in t.summary["failures"]
        assert len(out.read_text().splitlines()) == 3
        summary = json.loads(summary_path(out).read_text())
        assert summary["per_size"]["8"]["cqa"]["median_gap"] is None

    def test_invalid_size_reported(self):
        t = scaling_experiment([7], 1, 6, seed=0, grid=FAST_GRID)
        assert not t.complete and t.records == []


def test_verify_suite_all_pass():
    results = verify_suite()
    assert len(results) >= 10
    failed = [r.line() for r in results if not r.passed]
    assert not failed, failed
