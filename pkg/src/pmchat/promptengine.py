"""Prompt assembly for the two supported prompt styles.

A zero-shot prompt has twelve sections, an optimized prompt nine, each
emitted as ``Name: content`` paragraphs separated by blank lines, with the
module data last and a task-specific closing directive sentence appended
after it.  Prompts are built exclusively from stored KPI payloads and
metadata, never from raw events, so no case id or raw resource name can
appear in them.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Mapping

from .dashboard import ENGINE_MODULES, ModuleOutputRecord
from .errors import ValidationError
from .eventlog import LogMetadata

ZERO_SHOT_SECTIONS = (
    "Role",
    "Task",
    "Process",
    "Organization",
    "Sector",
    "KPIs",
    "Objective",
    "Considerations",
    "Deliverables",
    "Analysis Guidelines",
    "Additional Instructions",
    "Module Data",
)

OPTIMIZED_SECTIONS = (
    "Role",
    "Task",
    "Process",
    "Organization",
    "Analysis Focus",
    "Deep Dive",
    "Recommendations",
    "Additional Considerations",
    "Module Data",
)

_ALL_SECTION_NAMES = sorted(set(ZERO_SHOT_SECTIONS) | set(OPTIMIZED_SECTIONS), key=len, reverse=True)
_HEADER_RE = re.compile(r"^(" + "|".join(re.escape(n) for n in _ALL_SECTION_NAMES) + r"):")

TRUNCATION_MARKER = "… truncated {count} rows"

PROMPT_STYLES = ("zero_shot", "optimized")


class AnalysisTask(enum.Enum):
    ANALYTICS = "Analytics"
    INTERPRETATION = "Interpretation"
    RECOMMENDATIONS = "Recommendations"

    @classmethod
    def parse(cls, value: "str | AnalysisTask") -> "AnalysisTask":
        if isinstance(value, cls):
            return value
        for member in cls:
            if value.strip().lower() in (member.value.lower(), member.name.lower()):
                return member
        raise ValidationError(
            f"unknown analysis task {value!r}; expected one of "
            + ", ".join(m.value for m in cls)
        )


# Fixed closing directive per task; appended after the module data.
TASK_DIRECTIVES: dict[AnalysisTask, str] = {
    AnalysisTask.ANALYTICS: (
        "Deliver the Analytics of Process now: analyze the figures in the module "
        "data above and report concrete findings on process performance and metrics."
    ),
    AnalysisTask.INTERPRETATION: (
        "Deliver the Interpretation of Process now: interpret the figures in the "
        "module data above, identifying trends and outliers."
    ),
    AnalysisTask.RECOMMENDATIONS: (
        "Deliver the Recommendations for Improvement now: suggest strategies for "
        "process optimization grounded in the module data above."
    ),
}


@dataclass(frozen=True)
class RenderBudget:
    """Soft cap on prompt size, estimated as ceil(characters / 4) tokens."""

    max_prompt_tokens: int = 12000

    def __post_init__(self):
        if self.max_prompt_tokens <= 0:
            raise ValidationError("prompt budget must be positive")


def estimate_tokens(text: str) -> int:
    return (len(text) + 3) // 4


@dataclass(frozen=True)
class ZeroShotPromptFields:
    role: str
    task: str
    process: str
    organization: str
    sector: str
    kpis: str
    objective: str
    considerations: str
    deliverables: str
    analysis_guidelines: str
    additional_instructions: str


@dataclass(frozen=True)
class OptimizedPromptFields:
    role: str
    task: str
    process: str
    organization: str
    analysis_focus: str
    deep_dive: str
    recommendations: str
    additional_considerations: str


@dataclass(frozen=True)
class PromptFieldDefaults:
    zero_shot: ZeroShotPromptFields
    optimized: OptimizedPromptFields


MODULE_TITLES = {
    "dashboard": "dashboard KPI",
    "discovery": "process discovery",
    "performance": "performance mining",
    "conformance": "conformance checking",
    "orgmining": "organizational mining",
}

MODULE_BLOCK_TITLES = {
    "dashboard": "Dashboard",
    "discovery": "Discovery",
    "performance": "Performance",
    "conformance": "Conformance",
    "orgmining": "Organizational",
}

MODULE_KPI_DESCRIPTIONS = {
    "dashboard": (
        "Structural Analysis: Total cases, Total activities, Total variants, "
        "Total cases with rework. Temporal analysis: First event date, Last event date."
    ),
    "discovery": (
        "Activity frequencies, directly-follows edge frequencies, start and end "
        "activities, and variant frequencies."
    ),
    "performance": (
        "Case duration statistics (min, max, mean, median), per-edge waiting-time "
        "statistics, and the bottleneck ranking."
    ),
    "conformance": (
        "Log fitness, the number of violating cases, and the ranking of violation kinds."
    ),
    "orgmining": (
        "Handover-of-work counts between pseudonymized resources, the "
        "resource-activity matrix, and per-resource workload."
    ),
}

_TASK_PHRASES = {
    AnalysisTask.ANALYTICS: "a quantitative analysis of the reported figures",
    AnalysisTask.INTERPRETATION: "an interpretation of the trends and outliers behind the figures",
    AnalysisTask.RECOMMENDATIONS: "actionable recommendations for improving the process",
}

_TASK_DELIVERABLES = {
    AnalysisTask.ANALYTICS: (
        "A structured summary of findings with the supporting figures cited inline."
    ),
    AnalysisTask.INTERPRETATION: (
        "An explanation of the main trends and outliers with their most likely causes."
    ),
    AnalysisTask.RECOMMENDATIONS: (
        "A prioritized list of improvement actions, each tied to a reported figure "
        "and an expected impact."
    ),
}


# -- module data rendering ----------------------------------------------------


@dataclass
class _Table:
    """A truncatable list of rows inside a module block; rows carry a frequency."""

    rows: list[tuple[str, int]]

    def __post_init__(self):
        self.dropped: set[int] = set()

    def surviving(self) -> list[str]:
        return [text for i, (text, _) in enumerate(self.rows) if i not in self.dropped]

    def marker(self) -> str | None:
        if self.dropped:
            return _marker_line(len(self.dropped))
        return None


def _marker_line(count: int) -> str:
    return "  " + TRUNCATION_MARKER.format(count=count)


def _fmt_num(value: float) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return f"{value:g}"


def _render_block(module: str, payload: dict) -> tuple[list[object], list[_Table]]:
    """Returns the block's items (strings or _Table refs in order) and its tables."""
    items: list[object] = []
    tables: list[_Table] = []

    def add_table(rows: list[tuple[str, int]]):
        table = _Table(rows)
        tables.append(table)
        items.append(table)

    if module == "dashboard":
        s = payload["structural"]
        t = payload["temporal"]
        items.append(
            "Structural Analysis: Total cases: {0}, Total activities: {1}, "
            "Total variants: {2}, Total cases with rework: {3}".format(
                s["total_cases"],
                s["total_activities"],
                s["total_variants"],
                s["total_cases_with_rework"],
            )
        )
        items.append(
            "Temporal analysis: First event date: {0}, Last event date: {1}, "
            "Span: {2} seconds".format(
                t["first_event_date"], t["last_event_date"], t["span_seconds"]
            )
        )
    elif module == "discovery":
        variants = payload["variants"]
        dfg = payload["dfg"]
        items.append(f"Total variants: {len(variants)}")
        items.append("Start activities: " + ", ".join(sorted(dfg["start_activities"])))
        items.append("End activities: " + ", ".join(sorted(dfg["end_activities"])))
        items.append("Variants by frequency:")
        add_table(
            [
                (
                    "  " + " -> ".join(v["sequence"]) + f" ({v['frequency']} cases)",
                    v["frequency"],
                )
                for v in variants
            ]
        )
        items.append("Directly-follows edges (frequency):")
        add_table(
            [(f"  {e['from']} -> {e['to']}: {e['frequency']}", e["frequency"]) for e in dfg["edges"]]
        )
    elif module == "performance":
        duration = payload["case_duration"]
        items.append(
            "Case duration seconds: count {0}, min {1}, max {2}, mean {3}, median {4}".format(
                duration["count"],
                duration["min"],
                duration["max"],
                _fmt_num(duration["mean"]),
                _fmt_num(duration["median"]),
            )
        )
        items.append("Bottlenecks by mean waiting seconds:")
        add_table(
            [
                (
                    "  {0} -> {1}: mean {2}, frequency {3}".format(
                        b["from"], b["to"], _fmt_num(b["mean_waiting"]), b["frequency"]
                    ),
                    b["frequency"],
                )
                for b in payload["bottlenecks"]
            ]
        )
    elif module == "conformance":
        items.append(f"Log fitness: {payload['log_fitness']:.3f}")
        items.append(
            f"Violating cases: {payload['violating_case_count']} of {len(payload['per_case_fitness'])}"
        )
        items.append("Violation kinds by count:")
        add_table(
            [
                (f"  {kind}: {count}", count)
                for kind, count in payload["summary"]["top_kinds"]
            ]
        )
    elif module == "orgmining":
        handover = payload["handover"]
        items.append(f"Resources: {len(handover['resources'])}")
        items.append("Handover of work (counts):")
        add_table(
            [
                (f"  {e['from']} -> {e['to']}: {e['count']}", e["count"])
                for e in handover["edges"]
            ]
        )
        items.append("Workload (events per resource):")
        add_table(
            [(f"  {w['resource']}: {w['events']}", w["events"]) for w in payload["workload"]]
        )
    else:
        raise ValidationError(f"unknown module {module!r}")
    return items, tables


def render_module_data(
    outputs: Mapping[str, ModuleOutputRecord], budget: RenderBudget | None = None
) -> str:
    """Render stored payloads as titled text blocks in fixed module order.

    When the text exceeds the budget, table rows are dropped globally
    lowest-frequency-first (later modules lose ties first) and each
    shortened table gains an explicit truncation marker.
    """
    if not outputs:
        raise ValidationError("no module outputs to render; compute KPIs first")
    unknown = sorted(set(outputs) - set(ENGINE_MODULES))
    if unknown:
        raise ValidationError(f"unknown modules in outputs: {', '.join(unknown)}")

    blocks: list[tuple[str, list[object]]] = []
    all_tables: list[tuple[int, _Table]] = []
    for module_index, module in enumerate(ENGINE_MODULES):
        if module not in outputs:
            continue
        items, tables = _render_block(module, outputs[module].payload)
        blocks.append((MODULE_BLOCK_TITLES[module], items))
        for table in tables:
            all_tables.append((module_index, table))

    def render() -> str:
        parts = []
        for title, items in blocks:
            lines = [f"{title}:"]
            for item in items:
                if isinstance(item, _Table):
                    lines.extend(item.surviving())
                    marker = item.marker()
                    if marker:
                        lines.append(marker)
                else:
                    lines.append(item)
            parts.append("\n".join(lines))
        return "\n\n".join(parts)

    if budget is None:
        return render()

    # Deterministic drop order: lowest frequency first, later modules first on
    # ties, then bottom rows first.  Character totals are tracked
    # incrementally so truncating huge tables stays linear.
    drop_order: list[tuple[int, int, _Table]] = []
    for module_index, table in all_tables:
        for row_index in range(len(table.rows)):
            drop_order.append((row_index, module_index, table))
    drop_order.sort(key=lambda item: (item[2].rows[item[0]][1], -item[1], -item[0]))

    total_chars = len(render())
    cursor = 0
    while (total_chars + 3) // 4 > budget.max_prompt_tokens and cursor < len(drop_order):
        row_index, _, table = drop_order[cursor]
        cursor += 1
        total_chars -= len(table.rows[row_index][0]) + 1
        previously_dropped = len(table.dropped)
        table.dropped.add(row_index)
        if previously_dropped == 0:
            total_chars += len(_marker_line(1)) + 1
        else:
            total_chars += len(_marker_line(previously_dropped + 1)) - len(
                _marker_line(previously_dropped)
            )
    return render()


# -- prompt builders -----------------------------------------------------------


def _validate_required(pairs: list[tuple[str, str]]) -> None:
    missing = [name for name, value in pairs if not value.strip()]
    if missing:
        raise ValidationError("required prompt sections are empty: " + ", ".join(missing))


def _assemble(
    sections: list[tuple[str, str]],
    module_data: str,
    task: AnalysisTask,
    budget: RenderBudget | None,
    droppable: tuple[str, ...],
) -> str:
    def build(omitted: set[str]) -> str:
        paragraphs = [
            f"{name}: {content}" for name, content in sections if name not in omitted
        ]
        paragraphs.append(f"Module Data:\n{module_data}")
        paragraphs.append(TASK_DIRECTIVES[task])
        return "\n\n".join(paragraphs) + "\n"

    omitted: set[str] = set()
    prompt = build(omitted)
    if budget is not None:
        for name in droppable:
            if estimate_tokens(prompt) <= budget.max_prompt_tokens:
                break
            omitted.add(name)
            prompt = build(omitted)
    return prompt


def build_zero_shot(
    fields: ZeroShotPromptFields,
    task: AnalysisTask,
    module_data: str,
    budget: RenderBudget | None = None,
) -> str:
    """Assemble the 12-section zero-shot prompt with the closing task directive."""
    task = AnalysisTask.parse(task)
    _validate_required([("Role", fields.role), ("Task", fields.task)])
    sections = [
        ("Role", fields.role),
        ("Task", fields.task),
        ("Process", fields.process),
        ("Organization", fields.organization),
        ("Sector", fields.sector),
        ("KPIs", fields.kpis),
        ("Objective", fields.objective),
        ("Considerations", fields.considerations),
        ("Deliverables", fields.deliverables),
        ("Analysis Guidelines", fields.analysis_guidelines),
        ("Additional Instructions", fields.additional_instructions),
    ]
    return _assemble(
        sections,
        module_data,
        task,
        budget,
        droppable=("Additional Instructions", "Considerations"),
    )


def build_optimized(
    fields: OptimizedPromptFields,
    task: AnalysisTask,
    module_data: str,
    budget: RenderBudget | None = None,
) -> str:
    """Assemble the 9-section optimized prompt with the closing task directive."""
    task = AnalysisTask.parse(task)
    _validate_required([("Role", fields.role), ("Task", fields.task)])
    sections = [
        ("Role", fields.role),
        ("Task", fields.task),
        ("Process", fields.process),
        ("Organization", fields.organization),
        ("Analysis Focus", fields.analysis_focus),
        ("Deep Dive", fields.deep_dive),
        ("Recommendations", fields.recommendations),
        ("Additional Considerations", fields.additional_considerations),
    ]
    return _assemble(
        sections,
        module_data,
        task,
        budget,
        droppable=("Additional Considerations",),
    )


def build_prompt(
    style: str,
    defaults: PromptFieldDefaults,
    task: AnalysisTask,
    module_data: str,
    budget: RenderBudget | None = None,
) -> str:
    if style == "zero_shot":
        return build_zero_shot(defaults.zero_shot, task, module_data, budget)
    if style == "optimized":
        return build_optimized(defaults.optimized, task, module_data, budget)
    raise ValidationError(f"unknown prompt style {style!r}; expected one of {PROMPT_STYLES}")


def default_fields_for(
    metadata: LogMetadata, module: str, task: AnalysisTask
) -> PromptFieldDefaults:
    """Deterministic default field sets built from log metadata; all overridable."""
    task = AnalysisTask.parse(task)
    if module not in ENGINE_MODULES:
        raise ValidationError(f"unknown module {module!r}; expected one of {ENGINE_MODULES}")
    role = "Act as a business process analyst and process mining expert."
    task_text = (
        f"Review the {MODULE_TITLES[module]} results computed for the process and "
        f"prepare {_TASK_PHRASES[task]}."
    )
    process = f'The analysis covers the business process "{metadata.process_name}".'
    organization = f"The process is operated by {metadata.organization}."
    zero_shot = ZeroShotPromptFields(
        role=role,
        task=task_text,
        process=process,
        organization=organization,
        sector=(
            f"The organization belongs to the {metadata.sector} sector "
            f"(economic activity: {metadata.economic_activity})."
        ),
        kpis=MODULE_KPI_DESCRIPTIONS[module],
        objective=(
            "Turn the reported key performance indicators into concrete, "
            "decision-ready findings about how the process behaves."
        ),
        considerations=(
            "Work only with the aggregated figures provided in the module data; "
            "raw events and personal data are not available."
        ),
        deliverables=_TASK_DELIVERABLES[task],
        analysis_guidelines=(
            "Present the findings in short, plainly worded paragraphs and cite the "
            "exact figures from the module data when making a claim."
        ),
        additional_instructions=(
            "If a figure needed for a claim is missing from the module data, state "
            "that it is unavailable instead of estimating it."
        ),
    )
    optimized = OptimizedPromptFields(
        role=role,
        task=task_text,
        process=process,
        organization=organization,
        analysis_focus=(
            f"Focus on the {MODULE_TITLES[module]} indicators and what they reveal "
            "about flow, load, and deviations in the process."
        ),
        deep_dive=(
            "Examine the strongest and the weakest figures in the module data and "
            "explain what most plausibly drives each of them."
        ),
        recommendations=(
            "Propose specific changes the process owner can implement, ordered by "
            "expected effort, each tied to a figure in the module data."
        ),
        additional_considerations=(
            "Keep the language accessible to non-specialists and flag any conclusion "
            "that would need more data to confirm."
        ),
    )
    return PromptFieldDefaults(zero_shot=zero_shot, optimized=optimized)


def extract_section_headers(prompt: str) -> list[str]:
    """Canonical section names found at paragraph starts, in order of appearance."""
    headers: list[str] = []
    at_paragraph_start = True
    for line in prompt.split("\n"):
        if at_paragraph_start:
            match = _HEADER_RE.match(line)
            if match:
                headers.append(match.group(1))
        at_paragraph_start = line == ""
    return headers
