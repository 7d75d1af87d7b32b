"""Ingestion of security-advisory documents into patched-API records.

The accepted input is a per-advisory JSON document following a small
OSV-style subset::

    {
      "id": "CVE-2020-13901",
      "affected": [{
        "package": {"ecosystem": "PyPI", "name": "pandas"},
        "ranges": [{"type": "ECOSYSTEM",
                    "events": [{"introduced": "0"}, {"fixed": "1.0.4"}]}],
        "ecosystem_specific": {
          "imports": [{"path": "pandas", "symbols": ["read_pickle"]}]
        }
      }],
      "severity": [{"type": "CVSS_V3", "score": 9.8}],
      "details": "Buffer Overflow"
    }

Real advisory feeds frequently omit symbol-level data, so a curated
symbol supplement (advisory id -> list of dotted paths) is a first-class
input that fills the gap; without symbols an advisory cannot anchor
API detection and yields no records.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import (
    ApiCatalog,
    ApiPath,
    OutdatedApiRecord,
    PackageId,
    VersionRange,
    parse_version,
)
from .errors import MalformedAdvisory, MalformedVersion, UnsupportedEcosystem


@dataclass(frozen=True)
class AdvisoryRecord:
    """A parsed advisory: one package, its affected ranges, and symbols."""

    advisory_id: str
    package: PackageId
    affected_ranges: tuple[VersionRange, ...]
    symbols: tuple[ApiPath, ...] = ()
    bug_type: str = ""
    cvss: float | None = None


@dataclass
class SymbolSupplement:
    """Curated mapping advisory id -> dotted API paths."""

    by_advisory: dict[str, tuple[ApiPath, ...]] = field(default_factory=dict)

    @classmethod
    def load(cls, source) -> "SymbolSupplement":
        if hasattr(source, "read"):
            doc = json.load(source)
        else:
            doc = json.loads(Path(source).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise MalformedAdvisory("symbol supplement must map id -> paths")
        table = {}
        for advisory_id, paths in doc.items():
            table[advisory_id] = tuple(ApiPath.from_dotted(p) for p in paths)
        return cls(table)

    def get(self, advisory_id: str) -> tuple[ApiPath, ...]:
        return self.by_advisory.get(advisory_id, ())


def _parse_ranges(entries, advisory_id: str) -> tuple[VersionRange, ...]:
    ranges = []
    for entry in entries:
        introduced = None
        fixed = None
        for event in entry.get("events", []):
            if "introduced" in event:
                introduced = event["introduced"]
            if "fixed" in event:
                fixed = event["fixed"]
        try:
            introduced_v = parse_version(introduced if introduced not in (None, "0") else "0")
            fixed_v = parse_version(fixed) if fixed is not None else None
            ranges.append(VersionRange(introduced=introduced_v, fixed=fixed_v))
        except (MalformedVersion, ValueError) as exc:
            raise MalformedAdvisory(f"{advisory_id}: bad range: {exc}")
    return tuple(ranges)


def _parse_symbols(affected_entry) -> tuple[ApiPath, ...]:
    specific = affected_entry.get("ecosystem_specific") or {}
    symbols = []
    for item in specific.get("imports", []):
        prefix = item.get("path")
        for name in item.get("symbols", []):
            dotted = f"{prefix}.{name}" if prefix else name
            symbols.append(ApiPath.from_dotted(dotted))
    return tuple(symbols)


def _parse_cvss(severity) -> float | None:
    # Unknown encodings degrade to "absent"; detection never depends on cvss.
    candidates = []
    if isinstance(severity, (int, float)) and not isinstance(severity, bool):
        candidates.append(severity)
    elif isinstance(severity, list):
        for item in severity:
            if isinstance(item, dict):
                candidates.append(item.get("score"))
    for value in candidates:
        try:
            score = float(value)
        except (TypeError, ValueError):
            continue
        if 0.0 <= score <= 10.0:
            return score
    return None


def ingest_advisory(document: str | dict,
                    supplement: SymbolSupplement | None = None) -> AdvisoryRecord:
    """Parse one advisory document (JSON text or already-decoded object).

    Symbols come from the document's ecosystem-specific import data when
    present, otherwise from the supplement.  Raises UnsupportedEcosystem for
    non-PyPI advisories and MalformedAdvisory when id, package, or ranges are
    missing or inconsistent.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedAdvisory(f"advisory is not valid JSON: {exc}")
    else:
        doc = document
    if not isinstance(doc, dict):
        raise MalformedAdvisory("advisory document is not an object")

    advisory_id = doc.get("id")
    if not advisory_id:
        raise MalformedAdvisory("advisory has no id")
    affected = doc.get("affected") or []
    if not affected:
        raise MalformedAdvisory(f"{advisory_id}: no affected entry")
    entry = affected[0]

    package_info = entry.get("package") or {}
    ecosystem = (package_info.get("ecosystem") or "").lower()
    if ecosystem != "pypi":
        raise UnsupportedEcosystem(
            f"{advisory_id}: ecosystem {package_info.get('ecosystem')!r} is not PyPI")
    name = package_info.get("name")
    if not name:
        raise MalformedAdvisory(f"{advisory_id}: affected package has no name")

    ranges = _parse_ranges(entry.get("ranges") or [], advisory_id)
    if not ranges:
        raise MalformedAdvisory(f"{advisory_id}: no version ranges")

    symbols = _parse_symbols(entry)
    if not symbols and supplement is not None:
        symbols = supplement.get(advisory_id)

    return AdvisoryRecord(
        advisory_id=advisory_id,
        package=PackageId(name),
        affected_ranges=ranges,
        symbols=symbols,
        bug_type=doc.get("details") or "",
        cvss=_parse_cvss(doc.get("severity")),
    )


def to_catalog_records(advisory: AdvisoryRecord) -> list[OutdatedApiRecord]:
    """One patched record per symbol; symbol-less advisories yield none.

    A package-level-only advisory cannot anchor API detection, so it is
    reported on stderr and skipped.
    """
    if not advisory.symbols:
        print(f"NOTE {advisory.advisory_id}: package-level-only advisory for "
              f"{advisory.package.name}, no API symbols to catalog",
              file=sys.stderr)
        return []
    return [
        OutdatedApiRecord(
            api_path=symbol,
            package=advisory.package,
            kind="patched",
            advisory_id=advisory.advisory_id,
            affected_ranges=advisory.affected_ranges,
            bug_type=advisory.bug_type or None,
            cvss=advisory.cvss,
        )
        for symbol in advisory.symbols
    ]


def merge_into(catalog: ApiCatalog, records) -> ApiCatalog:
    """Return a new catalog with ``records`` merged in.

    Records colliding on (package, api_path, kind, advisory_id) replace the
    existing entry; everything else is untouched.  ``generated_at`` is
    preserved so re-merging is byte-identical.
    """
    merged = {record.key(): record for record in catalog.records}
    for record in records:
        merged[record.key()] = record
    return ApiCatalog(
        schema_version=catalog.schema_version,
        generated_at=catalog.generated_at,
        records=tuple(merged.values()),
    )
