"""Cross-module invariants as hypothesis property tests."""

import hypothesis.strategies as st
from hypothesis import HealthCheck, given, settings

from pmchat.conformance import check_conformance, replay_case
from pmchat.dashboard import structural_stats
from pmchat.discovery import build_dfg, dependency_measure, discover_model, extract_variants
from pmchat.eventlog import Event, FilterCriteria, LogMetadata, filter_log, log_from_events, normalize
from pmchat.orgmining import handover_network, resource_activity_matrix, workload_stats

META = LogMetadata(
    sector="unknown", economic_activity="unknown", process_name="prop", organization="unknown"
)

_activities = st.sampled_from(["a", "b", "c", "d", "e"])
_resources = st.one_of(st.none(), st.sampled_from(["staff-1", "staff-2", "staff-3"]))


@st.composite
def logs(draw, min_cases=1, max_cases=12, resourced=False):
    n_cases = draw(st.integers(min_cases, max_cases))
    events = []
    for i in range(n_cases):
        length = draw(st.integers(1, 10))
        t = draw(st.integers(0, 10**6)) * 1000
        for _ in range(length):
            resource = (
                draw(st.sampled_from(["staff-1", "staff-2", "staff-3"]))
                if resourced
                else draw(_resources)
            )
            events.append(
                Event(
                    case_id=f"case-{i:02d}",
                    activity=draw(_activities),
                    timestamp_ms=t,
                    resource=resource,
                )
            )
            t += draw(st.sampled_from([0, 1000, 60000]))
    return log_from_events(events, META)


_SETTINGS = settings(
    max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)


@given(logs())
@_SETTINGS
def test_normalize_is_idempotent(log):
    assert normalize(log) == log


@given(logs())
@_SETTINGS
def test_filter_identity_with_empty_criteria(log):
    assert filter_log(log, FilterCriteria()).log_id == log.log_id


@given(logs())
@_SETTINGS
def test_dfg_edge_sum_identity(log):
    dfg = build_dfg(log)
    # Duplicate rows may collapse during normalization, so measure the final log.
    assert dfg.total_edge_frequency == log.total_events - len(log.cases)


@given(logs())
@_SETTINGS
def test_variant_frequencies_partition_cases(log):
    assert sum(v.frequency for v in extract_variants(log)) == len(log.cases)
    assert structural_stats(log).total_variants == len(extract_variants(log))


@given(logs())
@_SETTINGS
def test_dependency_antisymmetry(log):
    dfg = build_dfg(log)
    labels = sorted(dfg.activity_frequencies)
    for a in labels:
        for b in labels:
            assert abs(dependency_measure(dfg, a, b) + dependency_measure(dfg, b, a)) < 1e-12


@given(logs())
@_SETTINGS
def test_permissive_discovery_replays_perfectly(log):
    model = discover_model(log, 0.0, 1)
    assert check_conformance(model, log).log_fitness == 1.0


@given(logs(), st.integers(1, 3), st.sampled_from([0.0, 0.4, 0.8]))
@_SETTINGS
def test_fitness_bounds_and_move_accounting(log, freq_threshold, dep_threshold):
    model = discover_model(log, dep_threshold, freq_threshold)
    report = check_conformance(model, log)
    assert 0.0 <= report.log_fitness <= 1.0
    for case in log.cases:
        outcome = replay_case(model, case)
        assert outcome.allowed_moves + len(outcome.violations) == outcome.total_moves


@given(logs(resourced=True))
@_SETTINGS
def test_handover_sum_identity_fully_resourced(log):
    network = handover_network(log)
    assert network.total_handovers == log.total_events - len(log.cases)


@given(logs())
@_SETTINGS
def test_workload_is_matrix_marginal(log):
    matrix = resource_activity_matrix(log)
    workload = workload_stats(log)
    marginal = {}
    for (resource, _), count in matrix.counts.items():
        marginal[resource] = marginal.get(resource, 0) + count
    assert workload == dict(sorted(marginal.items(), key=lambda kv: (-kv[1], kv[0])))
