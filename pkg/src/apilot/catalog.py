"""Domain types for outdated-API knowledge and the persistent catalog format.

An outdated API is one of three kinds:

* ``deprecated``      -- still callable but flagged for removal,
* ``patched``         -- vulnerable only inside its affected version ranges,
* ``usage_modified``  -- signature or return behaviour changed, or removed.

The catalog file is a single JSON document (see ``catalog_save``) so that
miner and advisory outputs merge deterministically and survive round trips.
"""

from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

from .errors import CorruptRecord, MalformedVersion, SchemaMismatch, WrongKind

SCHEMA_VERSION = 1

KIND_DEPRECATED = "deprecated"
KIND_PATCHED = "patched"
KIND_USAGE_MODIFIED = "usage_modified"
KINDS = (KIND_DEPRECATED, KIND_PATCHED, KIND_USAGE_MODIFIED)

CHANGE_REMOVED = "removed"
CHANGE_PARAMS = "params_changed"
CHANGE_RETURN = "return_changed"
CHANGES = (CHANGE_REMOVED, CHANGE_PARAMS, CHANGE_RETURN)


@dataclass(frozen=True, order=True)
class PackageId:
    """A registry-qualified package name, normalized for stable merging."""

    name: str
    registry: str = "pypi"

    def __post_init__(self):
        normalized = self.name.strip().lower().replace("_", "-")
        if not normalized:
            raise ValueError("package name must be non-empty")
        object.__setattr__(self, "name", normalized)

    def __str__(self) -> str:
        return f"{self.registry}:{self.name}"


@dataclass(frozen=True, order=True)
class ApiPath:
    """A dotted API path such as ``pandas.read_pickle``."""

    segments: tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("api path needs at least one segment")
        for seg in self.segments:
            if not seg.isidentifier():
                raise ValueError(f"invalid path segment {seg!r}")

    @classmethod
    def from_dotted(cls, dotted: str) -> "ApiPath":
        return cls(tuple(dotted.split(".")))

    @property
    def root(self) -> str:
        return self.segments[0]

    @property
    def terminal(self) -> str:
        return self.segments[-1]

    def child(self, *names: str) -> "ApiPath":
        return ApiPath(self.segments + names)

    def __str__(self) -> str:
        return ".".join(self.segments)


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class Version:
    """Release-segment version with lexicographic, zero-padded comparison.

    ``Version((2, 6))`` compares equal to ``Version((2, 6, 0))``.  Pre/post/dev
    suffixes are never part of ``release``; ``parse_version`` keeps them only
    in ``original_text``.
    """

    release: tuple[int, ...]
    original_text: str = ""

    def __post_init__(self):
        object.__setattr__(self, "release", tuple(self.release))
        if not self.release:
            raise ValueError("version needs at least one release component")
        if any(c < 0 for c in self.release):
            raise ValueError("release components must be non-negative")
        if not self.original_text:
            object.__setattr__(self, "original_text", str(self))

    def _key(self) -> tuple[int, ...]:
        rel = self.release
        end = len(rel)
        while end > 1 and rel[end - 1] == 0:
            end -= 1
        return rel[:end]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other: "Version") -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __str__(self) -> str:
        return ".".join(str(c) for c in self.release)


_VERSION_RUN = re.compile(r"\s*(\d+(?:\.\d+)*)")


def parse_version(text: str) -> Version:
    """Parse the leading dotted-integer run of ``text`` into a Version.

    Suffixes such as ``rc1``, ``.post1`` or stray letters are truncated and
    survive only in ``original_text``.  Raises MalformedVersion when the text
    does not start with an integer.
    """
    match = _VERSION_RUN.match(text or "")
    if not match:
        raise MalformedVersion(f"no leading integer in version text {text!r}")
    release = tuple(int(part) for part in match.group(1).split("."))
    return Version(release, original_text=text)


@dataclass(frozen=True)
class VersionRange:
    """Half-open affected range ``[introduced, fixed)``; no fix means unbounded."""

    introduced: Version = Version((0,), "0")
    fixed: Version | None = None

    def __post_init__(self):
        if self.fixed is not None and not self.introduced < self.fixed:
            raise ValueError(
                f"introduced {self.introduced} must be below fixed {self.fixed}")

    def contains(self, v: Version) -> bool:
        return self.introduced <= v and (self.fixed is None or v < self.fixed)

    def __str__(self) -> str:
        lower = f">={self.introduced}"
        if self.fixed is None:
            return lower
        return f"{lower},<{self.fixed}"


def version_in_ranges(v: Version, ranges: list[VersionRange] | tuple[VersionRange, ...]) -> bool:
    """True iff some range contains ``v``."""
    return any(r.contains(v) for r in ranges)


@dataclass(frozen=True, kw_only=True)
class OutdatedApiRecord:
    """One cataloged outdated API with its kind-specific evidence payload."""

    api_path: ApiPath
    package: PackageId
    kind: str

    # deprecated payload
    deprecated_date: date | None = None
    removed_date: date | None = None
    deprecated_in: Version | None = None
    removed_in: Version | None = None

    # patched payload
    advisory_id: str | None = None
    affected_ranges: tuple[VersionRange, ...] = ()
    bug_type: str | None = None
    cvss: float | None = None

    # usage_modified payload
    change: str | None = None
    old_signature: str | None = None
    new_signature: str | None = None

    # shared evidence (deprecated and usage_modified)
    evidence_commit: str | None = None
    evidence_date: date | None = None

    def label(self) -> str:
        tag = f"{self.package.name}/{self.api_path}/{self.kind}"
        if self.advisory_id:
            tag += f"/{self.advisory_id}"
        return tag

    def key(self) -> tuple:
        return (self.package, self.api_path, self.kind, self.advisory_id)


def validate_record(record: OutdatedApiRecord) -> None:
    """Raise CorruptRecord unless exactly the right payload is populated."""

    def fail(reason: str):
        raise CorruptRecord(f"record {record.label()}: {reason}")

    if record.kind not in KINDS:
        fail(f"unknown kind {record.kind!r}")

    deprecated_set = record.deprecated_date is not None
    patched_set = record.advisory_id is not None or record.affected_ranges
    usage_set = record.change is not None

    if record.kind == KIND_DEPRECATED:
        if not deprecated_set:
            fail("deprecated record needs deprecated_date")
        if patched_set or usage_set:
            fail("deprecated record carries a foreign payload")
        if record.removed_date is not None and record.removed_date < record.deprecated_date:
            fail("removed_date precedes deprecated_date")
        if not record.evidence_commit:
            fail("deprecated record needs evidence_commit")
    elif record.kind == KIND_PATCHED:
        if not record.advisory_id:
            fail("patched record needs advisory_id")
        if not record.affected_ranges:
            fail("patched record needs at least one affected range")
        if deprecated_set or usage_set or record.evidence_commit or record.evidence_date:
            fail("patched record carries a foreign payload")
        if record.cvss is not None and not 0.0 <= record.cvss <= 10.0:
            fail(f"cvss {record.cvss} outside [0, 10]")
    else:
        if record.change not in CHANGES:
            fail(f"unknown change class {record.change!r}")
        if deprecated_set or patched_set:
            fail("usage_modified record carries a foreign payload")
        if not record.old_signature:
            fail("usage_modified record needs old_signature")
        if record.change == CHANGE_REMOVED and record.new_signature is not None:
            fail("removed API cannot have a new_signature")
        if not record.evidence_commit:
            fail("usage_modified record needs evidence_commit")
        if record.evidence_date is None:
            fail("usage_modified record needs evidence_date")


def _record_sort_key(record: OutdatedApiRecord) -> tuple:
    return (record.package, record.api_path, record.kind, record.advisory_id or "")


@dataclass(frozen=True)
class ApiCatalog:
    """Immutable collection of outdated-API records with query indexes.

    Records are validated and canonically ordered at construction, so two
    catalogs with the same record set compare equal field for field.
    """

    schema_version: int = SCHEMA_VERSION
    generated_at: datetime = field(
        default_factory=lambda: datetime.now(timezone.utc))
    records: tuple[OutdatedApiRecord, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.records, key=_record_sort_key))
        object.__setattr__(self, "records", ordered)
        seen: set[tuple] = set()
        by_api: dict[tuple[PackageId, ApiPath], list[OutdatedApiRecord]] = {}
        roots: dict[str, set[PackageId]] = {}
        for record in ordered:
            validate_record(record)
            key = record.key()
            if key in seen:
                raise CorruptRecord(f"record {record.label()}: duplicate key")
            seen.add(key)
            by_api.setdefault((record.package, record.api_path), []).append(record)
            roots.setdefault(record.api_path.root, set()).add(record.package)
        object.__setattr__(self, "_by_api", by_api)
        object.__setattr__(self, "_roots", roots)

    def __len__(self) -> int:
        return len(self.records)

    def packages_for_root(self, root: str) -> tuple[PackageId, ...]:
        """Packages that catalog at least one API under import root ``root``."""
        return tuple(sorted(self._roots.get(root, ())))

    def query(self, package: PackageId, api: ApiPath,
              user_version: Version | None = None) -> list[OutdatedApiRecord]:
        """All records for (package, api), version-filtering patched ones.

        Deprecated and usage-modified records are version-independent threats
        and are always returned.
        """
        hits = self._by_api.get((package, api), [])
        if user_version is None:
            return list(hits)
        return [
            r for r in hits
            if r.kind != KIND_PATCHED
            or version_in_ranges(user_version, r.affected_ranges)
        ]


def catalog_query(catalog: ApiCatalog, package: PackageId, api: ApiPath,
                  user_version: Version | None = None) -> list[OutdatedApiRecord]:
    return catalog.query(package, api, user_version)


def grace_period(record: OutdatedApiRecord) -> int | None:
    """Whole days from deprecation to removal; None while not removed yet."""
    if record.kind != KIND_DEPRECATED:
        raise WrongKind(f"grace period is defined for deprecated records, "
                        f"not {record.kind}")
    if record.removed_date is None:
        return None
    return (record.removed_date - record.deprecated_date).days


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

_COMMON_KEYS = {"registry", "package", "api_path", "kind"}
_KIND_KEYS = {
    KIND_DEPRECATED: {"deprecated_date", "removed_date", "deprecated_in",
                      "removed_in", "evidence_commit"},
    KIND_PATCHED: {"advisory_id", "affected_ranges", "bug_type", "cvss"},
    KIND_USAGE_MODIFIED: {"change", "old_signature", "new_signature",
                          "evidence_commit", "evidence_date"},
}


def _version_to_text(v: Version) -> str:
    return v.original_text


def _record_to_doc(record: OutdatedApiRecord) -> dict:
    doc = {
        "registry": record.package.registry,
        "package": record.package.name,
        "api_path": str(record.api_path),
        "kind": record.kind,
    }
    if record.kind == KIND_DEPRECATED:
        doc["deprecated_date"] = record.deprecated_date.isoformat()
        if record.removed_date is not None:
            doc["removed_date"] = record.removed_date.isoformat()
        if record.deprecated_in is not None:
            doc["deprecated_in"] = _version_to_text(record.deprecated_in)
        if record.removed_in is not None:
            doc["removed_in"] = _version_to_text(record.removed_in)
        doc["evidence_commit"] = record.evidence_commit
    elif record.kind == KIND_PATCHED:
        doc["advisory_id"] = record.advisory_id
        doc["affected_ranges"] = [
            {"introduced": _version_to_text(r.introduced)}
            | ({"fixed": _version_to_text(r.fixed)} if r.fixed is not None else {})
            for r in record.affected_ranges
        ]
        if record.bug_type:
            doc["bug_type"] = record.bug_type
        if record.cvss is not None:
            doc["cvss"] = record.cvss
    else:
        doc["change"] = record.change
        doc["old_signature"] = record.old_signature
        if record.new_signature is not None:
            doc["new_signature"] = record.new_signature
        doc["evidence_commit"] = record.evidence_commit
        doc["evidence_date"] = record.evidence_date.isoformat()
    return doc


def _parse_date(text, label: str) -> date:
    try:
        return date.fromisoformat(text)
    except (TypeError, ValueError):
        raise CorruptRecord(f"record {label}: bad date {text!r}")


def _record_from_doc(doc) -> OutdatedApiRecord:
    if not isinstance(doc, dict):
        raise CorruptRecord(f"record {doc!r}: not an object")
    label = f"{doc.get('package')}/{doc.get('api_path')}"
    kind = doc.get("kind")
    if kind not in KINDS:
        raise CorruptRecord(f"record {label}: unknown kind {kind!r}")
    allowed = _COMMON_KEYS | _KIND_KEYS[kind]
    unknown = set(doc) - allowed
    if unknown:
        raise CorruptRecord(f"record {label}: unknown fields {sorted(unknown)}")
    for required in ("registry", "package", "api_path"):
        if required not in doc:
            raise CorruptRecord(f"record {label}: missing {required}")
    try:
        package = PackageId(doc["package"], registry=doc["registry"])
        api_path = ApiPath.from_dotted(doc["api_path"])
    except (ValueError, AttributeError) as exc:
        raise CorruptRecord(f"record {label}: {exc}")

    kwargs: dict = {"api_path": api_path, "package": package, "kind": kind}
    try:
        if kind == KIND_DEPRECATED:
            kwargs["deprecated_date"] = _parse_date(doc.get("deprecated_date"), label)
            if "removed_date" in doc:
                kwargs["removed_date"] = _parse_date(doc["removed_date"], label)
            if "deprecated_in" in doc:
                kwargs["deprecated_in"] = parse_version(doc["deprecated_in"])
            if "removed_in" in doc:
                kwargs["removed_in"] = parse_version(doc["removed_in"])
            kwargs["evidence_commit"] = doc.get("evidence_commit")
        elif kind == KIND_PATCHED:
            kwargs["advisory_id"] = doc.get("advisory_id")
            ranges = []
            for item in doc.get("affected_ranges", []):
                extra = set(item) - {"introduced", "fixed"}
                if extra:
                    raise CorruptRecord(
                        f"record {label}: unknown range fields {sorted(extra)}")
                introduced = parse_version(item.get("introduced", "0"))
                fixed = parse_version(item["fixed"]) if "fixed" in item else None
                ranges.append(VersionRange(introduced=introduced, fixed=fixed))
            kwargs["affected_ranges"] = tuple(ranges)
            kwargs["bug_type"] = doc.get("bug_type")
            if "cvss" in doc:
                if not isinstance(doc["cvss"], (int, float)) or isinstance(doc["cvss"], bool):
                    raise CorruptRecord(f"record {label}: cvss is not a number")
                kwargs["cvss"] = float(doc["cvss"])
        else:
            kwargs["change"] = doc.get("change")
            kwargs["old_signature"] = doc.get("old_signature")
            kwargs["new_signature"] = doc.get("new_signature")
            kwargs["evidence_commit"] = doc.get("evidence_commit")
            kwargs["evidence_date"] = _parse_date(doc.get("evidence_date"), label)
    except MalformedVersion as exc:
        raise CorruptRecord(f"record {label}: {exc}")
    except ValueError as exc:
        raise CorruptRecord(f"record {label}: {exc}")

    record = OutdatedApiRecord(**kwargs)
    validate_record(record)
    return record


def catalog_save(catalog: ApiCatalog, destination) -> None:
    """Write the catalog as a UTF-8 JSON document to a path or open file."""
    doc = {
        "schema_version": catalog.schema_version,
        "generated_at": catalog.generated_at.isoformat(),
        "records": [_record_to_doc(r) for r in catalog.records],
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")


def catalog_load(source) -> ApiCatalog:
    """Load and validate a catalog document from a path or open file.

    Raises SchemaMismatch on a wrong schema_version and CorruptRecord when a
    record violates an invariant.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptRecord(f"catalog document is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise CorruptRecord("catalog document is not an object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"expected schema_version {SCHEMA_VERSION}, "
            f"got {doc.get('schema_version')!r}")
    unknown = set(doc) - {"schema_version", "generated_at", "records"}
    if unknown:
        raise CorruptRecord(f"catalog document has unknown fields {sorted(unknown)}")
    try:
        generated_at = datetime.fromisoformat(doc["generated_at"])
    except (KeyError, TypeError, ValueError):
        raise CorruptRecord("catalog document has a bad generated_at timestamp")
    raw_records = doc.get("records", [])
    if not isinstance(raw_records, list):
        raise CorruptRecord("catalog records field is not a list")
    records = tuple(_record_from_doc(item) for item in raw_records)
    return ApiCatalog(schema_version=SCHEMA_VERSION,
                      generated_at=generated_at, records=records)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def record_explanation(record: OutdatedApiRecord) -> str:
    """One-paragraph human explanation of why the record's API is outdated."""
    api = str(record.api_path)
    if record.kind == KIND_DEPRECATED:
        text = f"{api} has carried a deprecation warning since {record.deprecated_date}"
        if record.removed_date is not None:
            days = grace_period(record)
            text += (f" and was removed on {record.removed_date}"
                     f" after a grace period of {days} days.")
        else:
            text += " and is not yet removed; removal may land in any future release."
        return text
    if record.kind == KIND_PATCHED:
        ranges = "; ".join(str(r) for r in record.affected_ranges)
        text = f"{api} is subject to advisory {record.advisory_id}"
        if record.bug_type:
            text += f" ({record.bug_type})"
        if record.cvss is not None:
            text += f" with CVSS {record.cvss:.1f}"
        text += f"; affected versions: {ranges}."
        return text
    if record.change == CHANGE_REMOVED:
        return (f"{api} was removed on {record.evidence_date}; the last known "
                f"signature was {record.old_signature}.")
    what = "parameters" if record.change == CHANGE_PARAMS else "return behaviour"
    text = (f"{api} changed its {what} on {record.evidence_date}: "
            f"{record.old_signature} became {record.new_signature}.")
    return text
