import random

import pytest

from loggen import build_log, random_traces
from oracles import oracle_dfg_edges, oracle_start_end, oracle_variant_counts
from pmchat.discovery import (
    ProcessModel,
    build_dfg,
    dependency_measure,
    dfg_to_dot,
    discover_model,
    extract_variants,
)
from pmchat.errors import ValidationError


class TestBuildDfg:
    def test_l1_edges(self, l1_log, kernel_backend):
        dfg = build_dfg(l1_log)
        assert dfg.edges == {
            ("A", "B"): 2,
            ("B", "C"): 2,
            ("B", "B"): 1,
            ("A", "C"): 1,
        }
        assert dfg.start_activities == {"A": 3}
        assert dfg.end_activities == {"C": 3}
        assert dfg.activity_frequencies == {"A": 3, "B": 3, "C": 3}

    def test_single_case_chain(self):
        log = build_log([("c", [("A", 0, None), ("B", 1000, None), ("C", 2000, None)])])
        dfg = build_dfg(log)
        assert dfg.edges == {("A", "B"): 1, ("B", "C"): 1}

    def test_edge_sum_identity_on_random_logs(self, kernel_backend):
        rng = random.Random(23)
        for _ in range(50):
            log = build_log(random_traces(rng))
            dfg = build_dfg(log)
            assert dfg.total_edge_frequency == log.total_events - len(log.cases)

    def test_matches_oracle_on_random_logs(self, kernel_backend):
        rng = random.Random(29)
        for _ in range(25):
            traces = random_traces(rng)
            dfg = build_dfg(build_log(traces))
            assert dfg.edges == dict(oracle_dfg_edges(traces))
            starts, ends = oracle_start_end(traces)
            assert dfg.start_activities == dict(starts)
            assert dfg.end_activities == dict(ends)


class TestVariants:
    def test_l1_variants(self, l1_log):
        variants = extract_variants(l1_log)
        assert [(v.activity_sequence, v.frequency) for v in variants] == [
            (("A", "B", "B", "C"), 1),
            (("A", "B", "C"), 1),
            (("A", "C"), 1),
        ]

    def test_identical_traces_collapse(self):
        traces = [(f"c{i}", [("A", 0, None), ("B", 1000, None)]) for i in range(5)]
        variants = extract_variants(build_log(traces))
        assert len(variants) == 1
        assert variants[0].frequency == 5

    def test_frequencies_sum_to_cases(self):
        rng = random.Random(31)
        for _ in range(25):
            log = build_log(random_traces(rng))
            assert sum(v.frequency for v in extract_variants(log)) == len(log.cases)

    def test_matches_oracle(self):
        rng = random.Random(37)
        traces = random_traces(rng)
        variants = extract_variants(build_log(traces))
        assert {v.activity_sequence: v.frequency for v in variants} == dict(
            oracle_variant_counts(traces)
        )

    def test_order_is_frequency_then_lexicographic(self):
        traces = (
            [(f"a{i}", [("B", 0, None)]) for i in range(2)]
            + [(f"b{i}", [("A", 0, None)]) for i in range(2)]
            + [("c0", [("C", 0, None)])]
        )
        variants = extract_variants(build_log(traces))
        assert [v.activity_sequence for v in variants] == [("A",), ("B",), ("C",)]


class TestDependencyMeasure:
    def test_l1_values(self, l1_log):
        dfg = build_dfg(l1_log)
        assert dependency_measure(dfg, "A", "B") == pytest.approx(2 / 3)
        assert dependency_measure(dfg, "B", "A") == pytest.approx(-2 / 3)
        assert dependency_measure(dfg, "B", "B") == 0.0

    def test_zero_when_unrelated(self, l1_log):
        dfg = build_dfg(l1_log)
        assert dependency_measure(dfg, "C", "A") == pytest.approx(-0.5)
        assert dependency_measure(dfg, "A", "A") == 0.0

    def test_antisymmetry_on_random_logs(self):
        rng = random.Random(41)
        for _ in range(10):
            log = build_log(random_traces(rng, max_cases=20))
            dfg = build_dfg(log)
            labels = sorted(dfg.activity_frequencies)
            for a in labels:
                for b in labels:
                    assert dependency_measure(dfg, a, b) == pytest.approx(
                        -dependency_measure(dfg, b, a)
                    )


class TestDiscoverModel:
    def test_l1_permissive_keeps_all_edges(self, l1_log):
        model = discover_model(l1_log, 0.0, 1)
        assert model.allowed_edges == frozenset(
            {("A", "B"), ("B", "C"), ("B", "B"), ("A", "C")}
        )
        assert model.allowed_starts == frozenset({"A"})
        assert model.allowed_ends == frozenset({"C"})
        assert model.warnings == ()

    def test_l1_frequency_two(self, l1_log):
        model = discover_model(l1_log, 0.0, 2)
        assert model.allowed_edges == frozenset({("A", "B"), ("B", "C")})

    def test_default_thresholds(self, l1_log):
        model = discover_model(l1_log)
        # freq >= 2 and dependency >= 0.5: A->B (2/3), B->C (2/3)
        assert model.allowed_edges == frozenset({("A", "B"), ("B", "C")})

    def test_degenerate_model_warns_but_returns(self):
        log = build_log([("c", [("A", 0, None), ("B", 1000, None)])])
        model = discover_model(log, 0.0, 99)
        assert model.allowed_edges == frozenset()
        assert model.warnings

    def test_rejects_bad_thresholds(self, l1_log):
        with pytest.raises(ValidationError):
            discover_model(l1_log, 1.0, 1)
        with pytest.raises(ValidationError):
            discover_model(l1_log, 0.5, 0)

    def test_model_round_trips_json(self, l1_log):
        model = discover_model(l1_log, 0.0, 1)
        assert ProcessModel.from_dict(model.to_dict()) == model

    def test_model_endpoint_validation(self):
        with pytest.raises(ValidationError):
            ProcessModel(
                activities=frozenset({"A"}),
                allowed_edges=frozenset({("A", "B")}),
                allowed_starts=frozenset({"A"}),
                allowed_ends=frozenset({"A"}),
            )


def test_dot_export_mentions_every_edge(l1_log):
    dot = dfg_to_dot(build_dfg(l1_log))
    assert dot.startswith("digraph dfg {")
    assert '"A" -> "B" [label="2"];' in dot
    assert '"B" -> "B" [label="1"];' in dot
