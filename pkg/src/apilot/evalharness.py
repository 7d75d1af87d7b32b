"""Benchmark runner and metric computation over prompt sets and a client.

Every trial sends one benchmark prompt (vanilla mode) or runs the full
guarded loop, then measures the output with the sanitizer.  Whether an
output "contains" an API is always decided by detection findings, never by
substring search, so the harness cannot reproduce the regex false positive
it exists to expose.

The paper-style table mixes two aggregation conventions, so reductions are
reported both ways, labeled: ``mean_of_rates`` averages per-entry reduction
rates, ``rate_of_means`` reduces the averaged rates.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import ApiCatalog, ApiPath, PackageId
from .errors import ClientFailure, UndefinedReduction
from .guardrail import (
    GenerationConfig,
    GenerationSession,
    LlmClient,
    generate_guarded,
    wrap_prompt,
)
from .sanitizer import SanitizationReport, sanitize

MODE_VANILLA = "vanilla"
MODE_GUARDED = "guarded"
KINDS = ("deprecated", "patched", "usage_modified")


@dataclass(frozen=True)
class BenchmarkEntry:
    target_api: ApiPath
    kind: str
    instruction_prompt: str
    package: PackageId

    def key(self) -> str:
        return f"{self.package.name}:{self.target_api}"


@dataclass
class TrialResult:
    entry: BenchmarkEntry
    trial_index: int
    mode: str
    raw_output: str = ""
    extraction_ok: bool = False
    parse_ok: bool = False
    contains_target: bool = False
    contains_any_outdated: bool = False
    gen_time: float = 0.0
    san_time: float = 0.0
    error: str | None = None

    @property
    def completed(self) -> bool:
        return self.error is None


def load_benchmark(source) -> list[BenchmarkEntry]:
    """Read line-delimited benchmark entries.

    Each line is ``{"target_api", "kind", "package", "prompt"}``.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    entries = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        if doc["kind"] not in KINDS:
            raise ValueError(f"benchmark entry {doc.get('target_api')!r} has "
                             f"unknown kind {doc['kind']!r}")
        entries.append(BenchmarkEntry(
            target_api=ApiPath.from_dotted(doc["target_api"]),
            kind=doc["kind"],
            instruction_prompt=doc["prompt"],
            package=PackageId(doc["package"]),
        ))
    return entries


def _measure(report: SanitizationReport, entry: BenchmarkEntry,
             result: TrialResult) -> None:
    result.extraction_ok = report.extraction == "ok"
    result.parse_ok = result.extraction_ok and report.parse == "ok"
    result.contains_any_outdated = bool(report.findings)
    result.contains_target = any(
        f.api_path == entry.target_api for f in report.findings)


def _run_one(entry: BenchmarkEntry, trial_index: int, mode: str,
             client: LlmClient, catalog: ApiCatalog,
             config: GenerationConfig) -> TrialResult:
    result = TrialResult(entry=entry, trial_index=trial_index, mode=mode)
    try:
        if mode == MODE_VANILLA:
            prompt = wrap_prompt(entry.instruction_prompt, [])
            start = time.perf_counter()
            raw = client.send(prompt, config.temperature)
            result.gen_time = time.perf_counter() - start
            start = time.perf_counter()
            report = sanitize(raw, catalog, config.user_versions)
            result.san_time = time.perf_counter() - start
            result.raw_output = raw
            _measure(report, entry, result)
        else:
            session: GenerationSession = generate_guarded(
                entry.instruction_prompt, client, catalog, config)
            result.gen_time = session.gen_time
            result.san_time = session.san_time
            if session.iterations:
                last = session.iterations[-1]
                result.raw_output = last.raw_output
                _measure(last.report, entry, result)
    except ClientFailure as exc:
        result.error = str(exc)
    return result


def run_trials(entries, client: LlmClient, catalog: ApiCatalog,
               trials_per_entry: int = 10, mode: str = MODE_VANILLA,
               config: GenerationConfig | None = None,
               jobs: int = 1) -> list[TrialResult]:
    """Execute ``trials_per_entry`` independent trials per benchmark entry.

    Every entry's target API must be cataloged, otherwise its F_API could
    never fire and the benchmark would be silently miswired.  Client
    failures are recorded on their trial and excluded from rate
    denominators.  Results are keyed (entry, trial_index, mode), so the
    execution order never affects metrics.  Transcript-backed clients are
    serial; leave ``jobs`` at 1 when replaying one.
    """
    if trials_per_entry < 1:
        raise ValueError("trials_per_entry must be at least 1")
    if mode not in (MODE_VANILLA, MODE_GUARDED):
        raise ValueError(f"unknown mode {mode!r}")
    entries = list(entries)
    missing = [entry for entry in entries
               if not catalog.query(entry.package, entry.target_api)]
    if missing:
        names = ", ".join(f"{e.package.name}:{e.target_api}" for e in missing)
        raise ValueError(f"benchmark targets not in the catalog under test: "
                         f"{names}")
    config = config or GenerationConfig()
    work = [(entry, index) for entry in entries
            for index in range(trials_per_entry)]
    if jobs <= 1:
        return [_run_one(entry, index, mode, client, catalog, config)
                for entry, index in work]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_one, entry, index, mode, client,
                               catalog, config)
                   for entry, index in work]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

def _completed(results, entry=None, mode=None):
    return [
        r for r in results
        if r.completed
        and (entry is None or r.entry == entry)
        and (mode is None or r.mode == mode)
    ]


def f_api(results, entry: BenchmarkEntry, mode: str | None = None) -> float | None:
    """Fraction of completed trials whose output has a finding for the
    entry's target API; None when no trial completed."""
    trials = _completed(results, entry, mode)
    if not trials:
        return None
    return sum(r.contains_target for r in trials) / len(trials)


def f_api_plus(results, entry: BenchmarkEntry, mode: str | None = None) -> float | None:
    """As f_api, but any outdated-API finding counts."""
    trials = _completed(results, entry, mode)
    if not trials:
        return None
    return sum(r.contains_any_outdated for r in trials) / len(trials)


def extract_rate(results) -> float | None:
    trials = _completed(results)
    if not trials:
        return None
    return sum(r.extraction_ok for r in trials) / len(trials)


def parse_rate(results) -> float | None:
    """Fraction of extracted outputs that parse; None with zero extractions."""
    extracted = [r for r in _completed(results) if r.extraction_ok]
    if not extracted:
        return None
    return sum(r.parse_ok for r in extracted) / len(extracted)


def reduction_rate(vanilla_rate: float, guarded_rate: float) -> float:
    """Relative reduction (v - g) / v, as a percentage."""
    if vanilla_rate <= 0:
        raise UndefinedReduction(
            "reduction is undefined when the vanilla rate is zero")
    return (vanilla_rate - guarded_rate) / vanilla_rate * 100.0


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass
class EntryMetrics:
    entry: BenchmarkEntry
    f_api: dict[str, float | None] = field(default_factory=dict)
    f_api_plus: dict[str, float | None] = field(default_factory=dict)
    completed: dict[str, int] = field(default_factory=dict)
    failures: dict[str, int] = field(default_factory=dict)


@dataclass
class KindAggregate:
    kind: str
    metric: str                       # "f_api" | "f_api_plus"
    vanilla_mean: float | None
    guarded_mean: float | None
    reduction_rate_of_means: float | None
    reduction_mean_of_rates: float | None
    entries: int


@dataclass
class MetricsReport:
    per_entry: list[EntryMetrics]
    per_kind: list[KindAggregate]
    extract_rate: dict[str, float | None]
    parse_rate: dict[str, float | None]
    mean_gen_time: dict[str, float]
    mean_san_time: dict[str, float]
    failures: int

    def to_doc(self) -> dict:
        return {
            "per_entry": [
                {
                    "target_api": str(m.entry.target_api),
                    "package": m.entry.package.name,
                    "kind": m.entry.kind,
                    "f_api": m.f_api,
                    "f_api_plus": m.f_api_plus,
                    "completed": m.completed,
                    "failures": m.failures,
                }
                for m in self.per_entry
            ],
            "per_kind": [
                {
                    "kind": a.kind,
                    "metric": a.metric,
                    "vanilla_mean": a.vanilla_mean,
                    "guarded_mean": a.guarded_mean,
                    "reduction_rate_of_means_pct": a.reduction_rate_of_means,
                    "reduction_mean_of_rates_pct": a.reduction_mean_of_rates,
                    "entries": a.entries,
                }
                for a in self.per_kind
            ],
            "extract_rate": self.extract_rate,
            "parse_rate": self.parse_rate,
            "mean_gen_time_ms": {k: round(v * 1000.0, 3)
                                 for k, v in self.mean_gen_time.items()},
            "mean_san_time_ms": {k: round(v * 1000.0, 3)
                                 for k, v in self.mean_san_time.items()},
            "failures": self.failures,
        }


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    if not values:
        return None
    return sum(values) / len(values)


def report(results) -> MetricsReport:
    """Aggregate trial results per entry and per kind, both modes side by side."""
    entries: list[BenchmarkEntry] = []
    for r in results:
        if r.entry not in entries:
            entries.append(r.entry)
    modes = sorted({r.mode for r in results})

    per_entry: list[EntryMetrics] = []
    for entry in entries:
        metrics = EntryMetrics(entry=entry)
        for mode in modes:
            metrics.f_api[mode] = f_api(results, entry, mode)
            metrics.f_api_plus[mode] = f_api_plus(results, entry, mode)
            metrics.completed[mode] = len(_completed(results, entry, mode))
            metrics.failures[mode] = sum(
                1 for r in results
                if r.entry == entry and r.mode == mode and not r.completed)
        per_entry.append(metrics)

    per_kind: list[KindAggregate] = []
    for kind in KINDS:
        kind_metrics = [m for m in per_entry if m.entry.kind == kind]
        if not kind_metrics:
            continue
        for metric_name in ("f_api", "f_api_plus"):
            vanilla_rates = [getattr(m, metric_name).get(MODE_VANILLA)
                             for m in kind_metrics]
            guarded_rates = [getattr(m, metric_name).get(MODE_GUARDED)
                             for m in kind_metrics]
            vanilla_mean = _mean(vanilla_rates)
            guarded_mean = _mean(guarded_rates)
            rate_of_means = None
            if vanilla_mean and guarded_mean is not None:
                rate_of_means = reduction_rate(vanilla_mean, guarded_mean)
            per_entry_reductions = [
                reduction_rate(v, g)
                for v, g in zip(vanilla_rates, guarded_rates)
                if v and g is not None
            ]
            mean_of_rates = _mean(per_entry_reductions)
            per_kind.append(KindAggregate(
                kind=kind,
                metric=metric_name,
                vanilla_mean=vanilla_mean,
                guarded_mean=guarded_mean,
                reduction_rate_of_means=rate_of_means,
                reduction_mean_of_rates=mean_of_rates,
                entries=len(kind_metrics),
            ))

    extract = {mode: extract_rate([r for r in results if r.mode == mode])
               for mode in modes}
    parse = {mode: parse_rate([r for r in results if r.mode == mode])
             for mode in modes}
    gen_times = {mode: _mean([r.gen_time for r in _completed(results, mode=mode)]) or 0.0
                 for mode in modes}
    san_times = {mode: _mean([r.san_time for r in _completed(results, mode=mode)]) or 0.0
                 for mode in modes}
    return MetricsReport(
        per_entry=per_entry,
        per_kind=per_kind,
        extract_rate=extract,
        parse_rate=parse,
        mean_gen_time=gen_times,
        mean_san_time=san_times,
        failures=sum(1 for r in results if not r.completed),
    )


def _fmt(value: float | None, percent: bool = False) -> str:
    if value is None:
        return "-"
    if percent:
        return f"{value:.2f}%"
    return f"{value:.4f}"


def render_table(metrics: MetricsReport) -> str:
    """Aligned text table mirroring the w/o, w/, R_r layout."""
    headers = ["kind", "metric", "w/o", "w/",
               "R_r(rate-of-means)", "R_r(mean-of-rates)", "entries"]
    rows = [headers]
    for agg in metrics.per_kind:
        rows.append([
            agg.kind,
            "F_API" if agg.metric == "f_api" else "F_API+",
            _fmt(agg.vanilla_mean),
            _fmt(agg.guarded_mean),
            _fmt(agg.reduction_rate_of_means, percent=True),
            _fmt(agg.reduction_mean_of_rates, percent=True),
            str(agg.entries),
        ])
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = []
    for index, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i])
                               for i, cell in enumerate(row)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * widths[i]
                                   for i in range(len(headers))))
    tail = [
        "",
        "extract_rate: " + ", ".join(
            f"{mode}={_fmt(rate)}" for mode, rate in metrics.extract_rate.items()),
        "parse_rate:   " + ", ".join(
            f"{mode}={_fmt(rate)}" for mode, rate in metrics.parse_rate.items()),
        f"client failures: {metrics.failures}",
    ]
    return "\n".join(lines + tail)
