import pytest

from conftest import L1_METADATA
from pmchat.dashboard import ModuleOutputRecord
from pmchat.errors import ValidationError
from pmchat.pipeline import analyze_all, build_module_payload
from pmchat.promptengine import (
    OPTIMIZED_SECTIONS,
    ZERO_SHOT_SECTIONS,
    AnalysisTask,
    RenderBudget,
    build_optimized,
    build_zero_shot,
    default_fields_for,
    estimate_tokens,
    extract_section_headers,
    render_module_data,
)


def _records(log, modules=("dashboard",)):
    return {
        module: ModuleOutputRecord.fresh(log.log_id, module, build_module_payload(log, module))
        for module in modules
    }


@pytest.fixture()
def l1_outputs(l1_log):
    return _records(
        l1_log, ("dashboard", "discovery", "performance", "conformance", "orgmining")
    )


class TestRenderModuleData:
    def test_contains_headline_kpis(self, l1_outputs):
        text = render_module_data(l1_outputs, RenderBudget())
        assert "Total cases: 3" in text
        assert "Total variants: 3" in text
        assert "First event date: 2024-01-01T00:00:00Z" in text

    def test_block_order_is_fixed(self, l1_outputs):
        text = render_module_data(l1_outputs, RenderBudget())
        positions = [
            text.index(title + ":")
            for title in ("Dashboard", "Discovery", "Performance", "Conformance", "Organizational")
        ]
        assert positions == sorted(positions)

    def test_deterministic(self, l1_outputs):
        budget = RenderBudget()
        assert render_module_data(l1_outputs, budget) == render_module_data(l1_outputs, budget)

    def test_empty_outputs_error(self):
        with pytest.raises(ValidationError):
            render_module_data({}, RenderBudget())

    def test_truncation_keeps_highest_frequency_rows(self, l1_log):
        # A synthetic discovery payload with many variants of rising frequency.
        variants = [
            {"sequence": [f"act-{i}", "end"], "frequency": i, "example_case_id": f"case-{i}"}
            for i in range(1, 101)
        ]
        payload = {
            "dfg": {
                "activity_frequencies": {"a": 1},
                "edges": [],
                "start_activities": {"a": 1},
                "end_activities": {"a": 1},
            },
            "variants": sorted(variants, key=lambda v: -v["frequency"]),
            "model": {},
            "thresholds": {},
        }
        outputs = {"discovery": ModuleOutputRecord.fresh("x", "discovery", payload)}
        budget = RenderBudget(max_prompt_tokens=300)
        text = render_module_data(outputs, budget)
        assert estimate_tokens(text) <= 300
        assert "truncated" in text
        assert "act-100" in text  # highest frequency retained
        assert "act-1, end" not in text

    def test_no_case_ids_in_rendered_text(self, l1_outputs, l1_log):
        text = render_module_data(l1_outputs, RenderBudget())
        for case_id in l1_log.case_ids:
            assert case_id not in text


class TestPromptStructure:
    def test_zero_shot_headers_in_order(self, l1_outputs):
        fields = default_fields_for(L1_METADATA, "dashboard", AnalysisTask.ANALYTICS).zero_shot
        prompt = build_zero_shot(
            fields, AnalysisTask.ANALYTICS, render_module_data(l1_outputs, RenderBudget())
        )
        assert extract_section_headers(prompt) == list(ZERO_SHOT_SECTIONS)

    def test_optimized_headers_in_order(self, l1_outputs):
        fields = default_fields_for(L1_METADATA, "dashboard", AnalysisTask.ANALYTICS).optimized
        prompt = build_optimized(
            fields, AnalysisTask.ANALYTICS, render_module_data(l1_outputs, RenderBudget())
        )
        assert extract_section_headers(prompt) == list(OPTIMIZED_SECTIONS)

    def test_role_line_first(self):
        fields = default_fields_for(L1_METADATA, "discovery", AnalysisTask.ANALYTICS).zero_shot
        prompt = build_zero_shot(fields, AnalysisTask.ANALYTICS, "Dashboard:\nempty")
        assert prompt.splitlines()[0] == (
            "Role: Act as a business process analyst and process mining expert."
        )

    def test_table_one_style_role_example(self):
        fields = default_fields_for(L1_METADATA, "dashboard", AnalysisTask.ANALYTICS).zero_shot
        custom = type(fields)(
            **{
                **{f: getattr(fields, f) for f in fields.__dataclass_fields__},
                "role": (
                    "Act as a seasoned financial analyst with expertise in evaluating "
                    "corporate financial performance."
                ),
            }
        )
        prompt = build_zero_shot(custom, AnalysisTask.ANALYTICS, "Dashboard:\nempty")
        assert prompt.splitlines()[0] == (
            "Role: Act as a seasoned financial analyst with expertise in evaluating "
            "corporate financial performance."
        )

    def test_recommendations_directive_phrase(self):
        fields = default_fields_for(L1_METADATA, "dashboard", AnalysisTask.RECOMMENDATIONS).zero_shot
        prompt = build_zero_shot(fields, AnalysisTask.RECOMMENDATIONS, "Dashboard:\nempty")
        assert "Recommendations for Improvement" in prompt.rsplit("\n\n", 1)[-1]

    def test_empty_role_rejected_with_section_names(self):
        fields = default_fields_for(L1_METADATA, "dashboard", AnalysisTask.ANALYTICS).zero_shot
        broken = type(fields)(
            **{
                **{f: getattr(fields, f) for f in fields.__dataclass_fields__},
                "role": "",
                "task": " ",
            }
        )
        with pytest.raises(ValidationError, match="Role, Task"):
            build_zero_shot(broken, AnalysisTask.ANALYTICS, "x")

    def test_byte_identical_across_calls(self, l1_outputs):
        fields = default_fields_for(L1_METADATA, "performance", AnalysisTask.INTERPRETATION)
        module_data = render_module_data(l1_outputs, RenderBudget())
        first = build_optimized(fields.optimized, AnalysisTask.INTERPRETATION, module_data)
        second = build_optimized(fields.optimized, AnalysisTask.INTERPRETATION, module_data)
        assert first == second

    def test_module_data_is_last_header(self, l1_outputs):
        fields = default_fields_for(L1_METADATA, "dashboard", AnalysisTask.ANALYTICS).optimized
        prompt = build_optimized(
            fields, AnalysisTask.ANALYTICS, render_module_data(l1_outputs, RenderBudget())
        )
        assert extract_section_headers(prompt)[-1] == "Module Data"


class TestDefaults:
    def test_metadata_flows_into_sections(self):
        defaults = default_fields_for(L1_METADATA, "discovery", AnalysisTask.ANALYTICS)
        assert "Issuance Of Municipal License" in defaults.zero_shot.process
        assert "Public Sector" in defaults.zero_shot.sector
        assert "business process analyst" in defaults.zero_shot.role

    def test_defaults_pass_validation_for_all_modules_and_tasks(self, l1_outputs):
        module_data = render_module_data(l1_outputs, RenderBudget())
        for module in ("dashboard", "discovery", "performance", "conformance", "orgmining"):
            for task in AnalysisTask:
                defaults = default_fields_for(L1_METADATA, module, task)
                zero = build_zero_shot(defaults.zero_shot, task, module_data)
                opt = build_optimized(defaults.optimized, task, module_data)
                assert extract_section_headers(zero) == list(ZERO_SHOT_SECTIONS)
                assert extract_section_headers(opt) == list(OPTIMIZED_SECTIONS)

    def test_unknown_module_rejected(self):
        with pytest.raises(ValidationError):
            default_fields_for(L1_METADATA, "mystery", AnalysisTask.ANALYTICS)

    def test_task_parsing_aliases(self):
        assert AnalysisTask.parse("analytics") is AnalysisTask.ANALYTICS
        assert AnalysisTask.parse("Recommendations") is AnalysisTask.RECOMMENDATIONS
        with pytest.raises(ValidationError):
            AnalysisTask.parse("guesswork")


class TestBudget:
    def test_prompt_estimate_within_budget_with_oversized_variants(self, store, l1_parse_result):
        log_id, _ = store.register_log(l1_parse_result)
        analyze_all(store, log_id)
        outputs = store.load_outputs(log_id)
        # Inflate the variants table far beyond the budget.
        inflated = dict(outputs)
        payload = dict(inflated["discovery"].payload)
        payload["variants"] = [
            {"sequence": ["alpha", "beta", "gamma"], "frequency": i, "example_case_id": "x"}
            for i in range(400, 0, -1)
        ]
        inflated["discovery"] = ModuleOutputRecord.fresh(log_id, "discovery", payload)
        budget = RenderBudget(max_prompt_tokens=900)
        module_data = render_module_data(inflated, budget)
        fields = default_fields_for(L1_METADATA, "discovery", AnalysisTask.ANALYTICS)
        prompt = build_zero_shot(fields.zero_shot, AnalysisTask.ANALYTICS, module_data, RenderBudget(max_prompt_tokens=1200))
        assert estimate_tokens(prompt) <= 1200

    def test_budget_must_be_positive(self):
        with pytest.raises(ValidationError):
            RenderBudget(max_prompt_tokens=0)

    def test_estimate_is_ceil_div_four(self):
        assert estimate_tokens("") == 0
        assert estimate_tokens("abc") == 1
        assert estimate_tokens("abcd") == 1
        assert estimate_tokens("abcde") == 2
