"""Detection of cataloged outdated APIs in LLM output.

The pass runs in four stages: pull the fenced code block out of the raw
transcript, parse it, resolve import/alias bindings, then walk call and
attribute nodes rewriting each dotted chain to its fully-qualified path and
querying the catalog.  Working on the syntax tree rather than the raw text
means an API name inside a string literal or comment can never fire.
"""

from __future__ import annotations

import ast
import time
from dataclasses import dataclass, field

from .catalog import (
    ApiCatalog,
    ApiPath,
    OutdatedApiRecord,
    PackageId,
    Version,
    record_explanation,
)
from .errors import ExtractionFailed, ParseFailure

FORM_MODULE = "module_import"
FORM_ALIASED_MODULE = "aliased_module"
FORM_FROM = "from_import"
FORM_ALIASED_FROM = "aliased_from"
FORM_STAR = "star_import"


@dataclass(frozen=True)
class ExtractedSnippet:
    code: str
    fence_language_tag: str | None
    block_index: int
    total_blocks: int


@dataclass(frozen=True)
class ImportBinding:
    """A local name bound by an import, with its fully-qualified target."""

    local_name: str
    target: ApiPath
    binding_form: str


@dataclass(frozen=True)
class Finding:
    """One detected use of a cataloged outdated API."""

    api_path: ApiPath
    record: OutdatedApiRecord
    call_site: tuple[int, int]
    resolution_chain: str
    reason: str


@dataclass
class SanitizationReport:
    """Outcome of one detection pass over raw LLM output."""

    extraction: str                      # "ok" | "failed"
    parse: str                           # "ok" | "failed"
    parse_diagnostic: str = ""
    findings: list[Finding] = field(default_factory=list)
    ban_list: list[ApiPath] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    snippet: ExtractedSnippet | None = None

    @property
    def clean(self) -> bool:
        return self.extraction == "ok" and self.parse == "ok" and not self.findings

    def to_doc(self) -> dict:
        return {
            "extraction": self.extraction,
            "parse": self.parse
                     if self.parse == "ok" or not self.parse_diagnostic
                     else f"failed({self.parse_diagnostic})",
            "findings": [
                {
                    "api": str(f.api_path),
                    "kind": f.record.kind,
                    **({"advisory": f.record.advisory_id}
                       if f.record.advisory_id else {}),
                    "line": f.call_site[0],
                    "col": f.call_site[1],
                    "reason": f.reason,
                }
                for f in self.findings
            ],
            "ban_list": [str(p) for p in self.ban_list],
            "timings_ms": {k: round(v * 1000.0, 3) for k, v in self.timings.items()},
        }


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def _scan_fenced_blocks(text: str) -> list[tuple[str, str | None]]:
    """Return (code, language tag) for every complete triple-backtick block."""
    blocks = []
    lines = text.splitlines()
    open_tag: str | None = None
    body: list[str] = []
    in_block = False
    for line in lines:
        stripped = line.strip()
        if not in_block and stripped.startswith("```"):
            tag = stripped[3:].strip() or None
            open_tag = tag
            body = []
            in_block = True
        elif in_block and stripped == "```":
            blocks.append(("\n".join(body), open_tag))
            in_block = False
        elif in_block:
            body.append(line)
    # An unterminated opening fence is incomplete and contributes nothing.
    return blocks


def extract_code(llm_output: str) -> ExtractedSnippet:
    """Select the code block from raw LLM output.

    With several complete blocks, prefers the longest one that parses,
    falling back to the longest overall.  Raises ExtractionFailed when no
    complete non-empty fenced block exists (an unterminated fence counts as
    incomplete).
    """
    blocks = [
        (code, tag) for code, tag in _scan_fenced_blocks(llm_output)
        if code.strip()
    ]
    if not blocks:
        raise ExtractionFailed("no complete fenced code block in output")

    def build(index: int) -> ExtractedSnippet:
        code, tag = blocks[index]
        return ExtractedSnippet(code=code, fence_language_tag=tag,
                                block_index=index, total_blocks=len(blocks))

    if len(blocks) == 1:
        return build(0)
    by_length = sorted(range(len(blocks)),
                       key=lambda i: len(blocks[i][0]), reverse=True)
    for index in by_length:
        try:
            ast.parse(blocks[index][0])
        except (SyntaxError, ValueError):
            continue
        return build(index)
    return build(by_length[0])


def parse_snippet(snippet: ExtractedSnippet) -> ast.Module:
    """Parse the snippet to a full syntax tree.

    Only syntax errors fail; undefined names and other semantic issues are
    not the parser's business.
    """
    try:
        return ast.parse(snippet.code)
    except SyntaxError as exc:
        raise ParseFailure(exc.msg or "syntax error",
                           line=exc.lineno, col=exc.offset)
    except ValueError as exc:
        # e.g. null bytes in the source; not a SyntaxError but still a
        # snippet that cannot become a tree.
        raise ParseFailure(str(exc))


# ---------------------------------------------------------------------------
# Binding resolution
# ---------------------------------------------------------------------------

def resolve_bindings(tree: ast.Module) -> list[ImportBinding]:
    """Collect import bindings at any scope, last same-name binding winning.

    Star imports are kept separately under the pseudo-name ``*`` and never
    shadow one another.  Relative imports have no absolute target and are
    skipped.
    """
    ordered: list[tuple[int, int, ImportBinding]] = []
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                target = ApiPath.from_dotted(alias.name)
                if alias.asname:
                    binding = ImportBinding(alias.asname, target, FORM_ALIASED_MODULE)
                else:
                    # "import a.b" binds the root name "a".
                    binding = ImportBinding(target.root, ApiPath((target.root,)),
                                            FORM_MODULE)
                ordered.append((node.lineno, node.col_offset, binding))
        elif isinstance(node, ast.ImportFrom):
            if node.level != 0 or not node.module:
                continue
            module = ApiPath.from_dotted(node.module)
            for alias in node.names:
                if alias.name == "*":
                    binding = ImportBinding("*", module, FORM_STAR)
                elif alias.asname:
                    binding = ImportBinding(alias.asname, module.child(alias.name),
                                            FORM_ALIASED_FROM)
                else:
                    binding = ImportBinding(alias.name, module.child(alias.name),
                                            FORM_FROM)
                ordered.append((node.lineno, node.col_offset, binding))
    ordered.sort(key=lambda item: (item[0], item[1]))

    named: dict[str, ImportBinding] = {}
    stars: list[ImportBinding] = []
    for _, _, binding in ordered:
        if binding.binding_form == FORM_STAR:
            if binding not in stars:
                stars.append(binding)
        else:
            named[binding.local_name] = binding
    return list(named.values()) + stars


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------

def _attribute_chain(node: ast.Attribute) -> list[str] | None:
    """Collapse ``a.b.c`` to its identifier chain; None for dynamic bases."""
    parts = [node.attr]
    current = node.value
    while isinstance(current, ast.Attribute):
        parts.append(current.attr)
        current = current.value
    if not isinstance(current, ast.Name):
        return None
    parts.append(current.id)
    parts.reverse()
    return parts


def detect_outdated(tree: ast.Module, bindings: list[ImportBinding],
                    catalog: ApiCatalog,
                    user_versions: dict[PackageId, Version] | None = None
                    ) -> list[Finding]:
    """Walk call and attribute nodes and report cataloged API uses.

    Each dotted chain is rewritten by substituting its leading identifier
    through the binding table.  String literals, comments, and identifier
    mentions outside call/attribute positions never produce findings.  Under
    a star import of module M, a bare call name matching a cataloged symbol
    of M is reported with the star-import assumption spelled out.
    """
    user_versions = user_versions or {}
    named = {b.local_name: b for b in bindings if b.binding_form != FORM_STAR}
    stars = [b for b in bindings if b.binding_form == FORM_STAR]
    findings: list[Finding] = []

    def query(path: ApiPath, site: tuple[int, int], chain_text: str):
        for package in catalog.packages_for_root(path.root):
            records = catalog.query(package, path, user_versions.get(package))
            for record in records:
                findings.append(Finding(
                    api_path=path,
                    record=record,
                    call_site=site,
                    resolution_chain=chain_text,
                    reason=record_explanation(record),
                ))

    for node in ast.walk(tree):
        if isinstance(node, ast.Attribute) and isinstance(node.ctx, ast.Load):
            chain = _attribute_chain(node)
            if not chain:
                continue
            binding = named.get(chain[0])
            if binding is None:
                continue
            path = ApiPath(binding.target.segments + tuple(chain[1:]))
            chain_text = (f"{'.'.join(chain)} -> {path} "
                          f"via {binding.binding_form} of {binding.target}")
            query(path, (node.lineno, node.col_offset), chain_text)
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            name = node.func.id
            site = (node.lineno, node.col_offset)
            binding = named.get(name)
            if binding is not None:
                chain_text = (f"{name} -> {binding.target} "
                              f"via {binding.binding_form}")
                query(binding.target, site, chain_text)
                continue
            for star in stars:
                path = star.target.child(name)
                chain_text = (f"{name} -> {path} assuming star import "
                              f"of {star.target} provides it")
                query(path, site, chain_text)

    findings.sort(key=lambda f: (f.call_site, str(f.api_path),
                                 f.record.kind, f.record.advisory_id or ""))
    return findings


def _ban_list(findings: list[Finding]) -> list[ApiPath]:
    seen: dict[ApiPath, None] = {}
    for finding in findings:
        seen.setdefault(finding.api_path)
    return list(seen)


def _parse_and_detect(snippet: ExtractedSnippet, catalog: ApiCatalog,
                      user_versions, timings: dict[str, float]
                      ) -> SanitizationReport:
    start = time.perf_counter()
    try:
        tree = parse_snippet(snippet)
    except ParseFailure as exc:
        timings["parse"] = time.perf_counter() - start
        return SanitizationReport(extraction="ok", parse="failed",
                                  parse_diagnostic=str(exc), timings=timings,
                                  snippet=snippet)
    timings["parse"] = time.perf_counter() - start

    start = time.perf_counter()
    bindings = resolve_bindings(tree)
    findings = detect_outdated(tree, bindings, catalog, user_versions)
    timings["detect"] = time.perf_counter() - start
    return SanitizationReport(extraction="ok", parse="ok", findings=findings,
                              ban_list=_ban_list(findings), timings=timings,
                              snippet=snippet)


def sanitize(llm_output: str, catalog: ApiCatalog,
             user_versions: dict[PackageId, Version] | None = None
             ) -> SanitizationReport:
    """Run extraction, parsing, binding resolution, and detection.

    Failures downgrade gracefully: a failed extraction implies a failed
    parse and an empty finding list.  Per-stage durations are captured in
    the report.
    """
    timings: dict[str, float] = {}
    start = time.perf_counter()
    try:
        snippet = extract_code(llm_output)
    except ExtractionFailed:
        timings["extraction"] = time.perf_counter() - start
        return SanitizationReport(extraction="failed", parse="failed",
                                  parse_diagnostic="no code extracted",
                                  timings=timings)
    timings["extraction"] = time.perf_counter() - start
    return _parse_and_detect(snippet, catalog, user_versions, timings)


def check_source(code: str, catalog: ApiCatalog,
                 user_versions: dict[PackageId, Version] | None = None
                 ) -> SanitizationReport:
    """Detection pass over bare source text, skipping fence extraction.

    Used by the standalone check mode when the input is a source file rather
    than an LLM transcript.
    """
    snippet = ExtractedSnippet(code=code, fence_language_tag=None,
                               block_index=0, total_blocks=1)
    return _parse_and_detect(snippet, catalog, user_versions,
                             timings={"extraction": 0.0})
