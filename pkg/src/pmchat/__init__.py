"""pmchat: conversational process mining.

Engine modules compute KPIs from normalized event logs (discovery,
performance, conformance, organizational mining, dashboard); prompts are
assembled from the persisted KPI payloads only and sent through a guarded,
retrying chat-completion gateway.
"""

from .conformance import ConformanceReport, Violation, check_conformance, conformance_summary, replay_case
from .dashboard import ModuleOutputRecord, StructuralStats, TemporalStats, structural_stats, temporal_stats
from .discovery import (
    DirectlyFollowsGraph,
    ProcessModel,
    Variant,
    build_dfg,
    dependency_measure,
    discover_model,
    extract_variants,
)
from .errors import PmchatError
from .eventlog import (
    Case,
    CleaningReport,
    ColumnMapping,
    Event,
    EventLog,
    FilterCriteria,
    LogMetadata,
    ParseResult,
    filter_log,
    log_from_events,
    normalize,
    parse_csv,
)
from .evaluation import RatingRecord, compare_styles, distribution
from .llmgateway import (
    ChatMessage,
    CompletionRequest,
    CompletionResult,
    DenyIndex,
    LlmGateway,
    MockProvider,
    NotAvailable,
    RetryPolicy,
    complete,
    complete_with_retry,
    redaction_guard,
)
from .orgmining import HandoverNetwork, ResourceActivityMatrix, handover_network, resource_activity_matrix, workload_stats
from .performance import DurationStats, case_durations, edge_waiting_stats, identify_bottlenecks, throughput
from .promptengine import (
    AnalysisTask,
    OptimizedPromptFields,
    RenderBudget,
    ZeroShotPromptFields,
    build_optimized,
    build_zero_shot,
    default_fields_for,
    render_module_data,
)
from .store import DataStore

__version__ = "0.1.0"
