"""Outdated-API cataloging, detection, and generation guardrails."""

from .advisories import AdvisoryRecord, SymbolSupplement, ingest_advisory, merge_into, to_catalog_records
from .catalog import (
    ApiCatalog,
    ApiPath,
    OutdatedApiRecord,
    PackageId,
    Version,
    VersionRange,
    catalog_load,
    catalog_query,
    catalog_save,
    grace_period,
    parse_version,
    version_in_ranges,
)
from .guardrail import (
    GenerationConfig,
    GenerationSession,
    HttpClient,
    LlmClient,
    TranscriptClient,
    emit_version_gate,
    generate_guarded,
    render_warning,
    wrap_prompt,
)
from .miner import (
    CandidateSet,
    CommitRecord,
    FunctionDelta,
    FunctionSnapshot,
    diff_snapshots,
    emit_catalog,
    filter_public,
    mine_repository,
    snapshot_functions,
)
from .sanitizer import (
    Finding,
    ImportBinding,
    SanitizationReport,
    detect_outdated,
    extract_code,
    parse_snippet,
    resolve_bindings,
    sanitize,
)
from .evalharness import (
    BenchmarkEntry,
    MetricsReport,
    TrialResult,
    extract_rate,
    f_api,
    f_api_plus,
    parse_rate,
    reduction_rate,
    report,
    run_trials,
)

__version__ = "0.1.0"
