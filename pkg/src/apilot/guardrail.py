"""Ban-list-driven regeneration loop and version-gated output.

The loop wraps the user prompt in a fixed template that forces a single
fenced code block, sends it to a pluggable client, sanitizes the response,
and re-prompts with an accumulated ban list until the output is clean or the
iteration budget is spent.  Patched-API output can be wrapped in a version
gate that only runs the flagged call when the installed package version is
outside every affected range.
"""

from __future__ import annotations

import ast
import json
import os
import textwrap
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import (
    ApiCatalog,
    ApiPath,
    PackageId,
    Version,
    VersionRange,
    parse_version,
    version_in_ranges,
)
from .errors import ClientFailure
from .sanitizer import (
    ExtractedSnippet,
    Finding,
    SanitizationReport,
    parse_snippet,
    sanitize,
)

# The wrapping prompt is a versioned asset: any change to the text shows up
# in review as a diff of these constants.
PROMPT_HEADER = (
    "Respond with exactly one Python code block fenced by triple backticks "
    "(```), and write nothing outside the fence."
)
PROMPT_TASK_LABEL = "Task:"
PROMPT_BAN_LABEL = "Do not call any of the following APIs:"
PROMPT_FORMAT_REMINDER = (
    "Reminder: the previous response could not be read as a single fenced "
    "code block. Reply with one ``` fenced block only.")


def wrap_prompt(user_prompt: str, ban_list: list[ApiPath] | tuple[ApiPath, ...] = (),
                format_reminder: bool = False) -> str:
    """Build the deterministic wrapping prompt around ``user_prompt``.

    The template has a fixed instruction section, the user prompt verbatim,
    and, when the ban list is non-empty, an enumerated section of forbidden
    dotted paths.
    """
    sections = [PROMPT_HEADER, f"{PROMPT_TASK_LABEL}\n{user_prompt}"]
    if ban_list:
        banned = "\n".join(f"  {i}. {path}" for i, path in enumerate(ban_list, 1))
        sections.append(f"{PROMPT_BAN_LABEL}\n{banned}")
    if format_reminder:
        sections.append(PROMPT_FORMAT_REMINDER)
    return "\n\n".join(sections)


# ---------------------------------------------------------------------------
# Clients
# ---------------------------------------------------------------------------

class LlmClient:
    """Contract for code-generating model clients.

    ``send`` is a black box: the loop never inspects client internals.
    Implementations must either tolerate concurrent send calls or document
    themselves as serial.
    """

    def send(self, prompt: str, temperature: float) -> str:
        raise NotImplementedError


class TranscriptClient(LlmClient):
    """Mock client replaying an ordered list of canned responses.

    One response is consumed per send regardless of the prompt; exhaustion is
    a ClientFailure.  Serial by design, guarded by a lock.
    """

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self._cursor = 0
        self._lock = threading.Lock()
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path) -> "TranscriptClient":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, list) or not all(isinstance(x, str) for x in doc):
            raise ClientFailure(f"transcript {path} is not a list of strings")
        return cls(doc)

    def send(self, prompt: str, temperature: float) -> str:
        with self._lock:
            self.calls.append(prompt)
            if self._cursor >= len(self._responses):
                raise ClientFailure(
                    f"transcript exhausted after {self._cursor} responses")
            response = self._responses[self._cursor]
            self._cursor += 1
            return response


class HttpClient(LlmClient):
    """Minimal HTTP-backed client.

    Posts ``{"model", "prompt", "temperature"}`` as JSON and accepts either a
    top-level ``text`` field or an OpenAI-style ``choices`` list in the
    response.  The auth token is read from a named environment variable,
    never stored inline.
    """

    def __init__(self, endpoint: str, model: str = "",
                 token_env_var: str = "APILOT_LLM_TOKEN", timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.token_env_var = token_env_var
        self.timeout = timeout

    def send(self, prompt: str, temperature: float) -> str:
        import requests

        headers = {}
        token = os.environ.get(self.token_env_var, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            response = requests.post(
                self.endpoint,
                json={"model": self.model, "prompt": prompt,
                      "temperature": temperature},
                headers=headers, timeout=self.timeout)
            response.raise_for_status()
            doc = response.json()
        except Exception as exc:
            raise ClientFailure(f"HTTP client failed: {exc}")
        if isinstance(doc, dict):
            if isinstance(doc.get("text"), str):
                return doc["text"]
            choices = doc.get("choices")
            if isinstance(choices, list) and choices:
                first = choices[0]
                if isinstance(first, dict):
                    if isinstance(first.get("text"), str):
                        return first["text"]
                    message = first.get("message")
                    if isinstance(message, dict) and isinstance(
                            message.get("content"), str):
                        return message["content"]
        raise ClientFailure("HTTP response carries no generated text")


def load_client(config_path) -> LlmClient:
    """Build a client from its JSON configuration document."""
    doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
    kind = doc.get("kind")
    if kind == "mock":
        transcript = doc.get("transcript_path")
        if not transcript:
            raise ClientFailure("mock client config needs transcript_path")
        base = Path(config_path).parent
        path = Path(transcript)
        if not path.is_absolute():
            path = base / path
        return TranscriptClient.from_file(path)
    if kind == "http":
        endpoint = doc.get("endpoint")
        if not endpoint:
            raise ClientFailure("http client config needs endpoint")
        return HttpClient(endpoint=endpoint, model=doc.get("model", ""),
                          token_env_var=doc.get("token_env_var",
                                                "APILOT_LLM_TOKEN"))
    raise ClientFailure(f"unknown client kind {kind!r}")


# ---------------------------------------------------------------------------
# Generation loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenerationConfig:
    max_iterations: int = 3
    temperature: float = 0.7
    user_versions: dict[PackageId, Version] | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class IterationRecord:
    wrapped_prompt: str
    raw_output: str
    report: SanitizationReport


@dataclass
class GenerationSession:
    """Full transcript of one guarded generation run."""

    original_prompt: str
    iterations: list[IterationRecord] = field(default_factory=list)
    cumulative_ban_list: list[ApiPath] = field(default_factory=list)
    status: str = "exhausted"            # "clean" | "exhausted"
    final_code: str = ""
    warnings: list[str] = field(default_factory=list)
    gen_time: float = 0.0
    san_time: float = 0.0

    def to_doc(self) -> dict:
        return {
            "original_prompt": self.original_prompt,
            "status": self.status,
            "final_code": self.final_code,
            "cumulative_ban_list": [str(p) for p in self.cumulative_ban_list],
            "warnings": list(self.warnings),
            "gen_time_ms": round(self.gen_time * 1000.0, 3),
            "san_time_ms": round(self.san_time * 1000.0, 3),
            "iterations": [
                {
                    "wrapped_prompt": it.wrapped_prompt,
                    "raw_output": it.raw_output,
                    "report": it.report.to_doc(),
                }
                for it in self.iterations
            ],
        }


def render_warning(finding: Finding) -> str:
    """One-paragraph explanation of a finding for the exhausted-path report."""
    line, col = finding.call_site
    return (f"{finding.api_path} (line {line}, column {col}): "
            f"{finding.reason} Resolved as {finding.resolution_chain}.")


def generate_guarded(prompt: str, client: LlmClient, catalog: ApiCatalog,
                     config: GenerationConfig | None = None) -> GenerationSession:
    """Run the iterative ban-list loop against ``client``.

    Each iteration wraps the original prompt with the cumulative ban list,
    sends it, and sanitizes the response.  Findings extend the ban list;
    extraction or parse failures consume an iteration and add a format
    reminder.  The loop performs at most ``max_iterations`` client calls.
    ClientFailure propagates with the partial session attached.
    """
    config = config or GenerationConfig()
    session = GenerationSession(original_prompt=prompt)
    banned: dict[ApiPath, None] = {}
    format_reminder = False
    last_snippet_code = ""

    for _ in range(config.max_iterations):
        wrapped = wrap_prompt(prompt, list(banned), format_reminder=format_reminder)
        start = time.perf_counter()
        try:
            raw = client.send(wrapped, config.temperature)
        except ClientFailure as exc:
            session.gen_time += time.perf_counter() - start
            exc.session = session
            raise
        session.gen_time += time.perf_counter() - start

        start = time.perf_counter()
        report = sanitize(raw, catalog, config.user_versions)
        session.san_time += time.perf_counter() - start
        session.iterations.append(IterationRecord(wrapped, raw, report))

        if report.extraction != "ok" or report.parse != "ok":
            format_reminder = True
            continue
        format_reminder = False
        last_snippet_code = report.snippet.code if report.snippet else ""
        if not report.findings:
            session.status = "clean"
            session.final_code = last_snippet_code
            break
        for path in report.ban_list:
            banned.setdefault(path)
        session.cumulative_ban_list = list(banned)

    session.cumulative_ban_list = list(banned)
    if session.status != "clean":
        session.status = "exhausted"
        session.final_code = last_snippet_code
        session.warnings = [
            render_warning(f)
            for record in session.iterations
            for f in record.report.findings
        ]
    return session


# ---------------------------------------------------------------------------
# Version gate
# ---------------------------------------------------------------------------

_GATE_TEMPLATE = '''\
from importlib.metadata import version as _installed_version

_PACKAGE = {package!r}
_FLAGGED_API = {api!r}
# Affected intervals as (introduced, fixed) version texts; an empty fixed
# string means the interval is unbounded above.
_AFFECTED_RANGES = {ranges}


def _release_tuple(text):
    parts = []
    for piece in str(text).split("."):
        digits = ""
        for ch in piece:
            if ch.isdigit():
                digits += ch
            else:
                break
        if not digits:
            break
        parts.append(int(digits))
    return tuple(parts) if parts else (0,)


def _version_lt(a, b):
    length = max(len(a), len(b))
    a = a + (0,) * (length - len(a))
    b = b + (0,) * (length - len(b))
    return a < b


def _version_affected(text, ranges):
    current = _release_tuple(text)
    for introduced, fixed in ranges:
        low = _release_tuple(introduced)
        if _version_lt(current, low):
            continue
        if fixed and not _version_lt(current, _release_tuple(fixed)):
            continue
        return True
    return False


if _version_affected(_installed_version(_PACKAGE), _AFFECTED_RANGES):
    # Installed version is affected: run the safe alternative instead.
{clean_branch}
else:
    # Installed version is outside every affected range, so the flagged
    # API is safe to use here.
{vulnerable_branch}
'''


def _indent_snippet(code: str) -> str:
    body = code.rstrip("\n")
    if not body.strip():
        body = "pass"
    return textwrap.indent(body, "    ")


def emit_version_gate(package: PackageId, affected_ranges,
                      vulnerable_snippet: str,
                      clean_snippet: str | None = None) -> str:
    """Render runtime version-gated source around a patched-API snippet.

    The vulnerable branch only runs when the installed version of
    ``package`` is outside every affected range; otherwise the clean snippet
    runs, or a warning naming the API is printed when no alternative exists.
    The emitted text parses on its own.
    """
    ranges = list(affected_ranges)
    if not ranges:
        raise ValueError("version gate needs at least one affected range")
    api_name = _flagged_api_name(vulnerable_snippet)
    if clean_snippet is None:
        clean_branch = _indent_snippet(
            f'print("WARNING: {api_name} is vulnerable in the installed "\n'
            f'      "version of {package.name}; no safe alternative was "\n'
            f'      "generated, so nothing was executed.")')
    else:
        clean_branch = _indent_snippet(clean_snippet)
    rendered_ranges = [
        (r.introduced.original_text, r.fixed.original_text if r.fixed else "")
        for r in ranges
    ]
    source = _GATE_TEMPLATE.format(
        package=package.name,
        api=api_name,
        ranges=repr(rendered_ranges),
        clean_branch=clean_branch,
        vulnerable_branch=_indent_snippet(vulnerable_snippet),
    )
    # Self-check: the gate must itself survive the snippet parser.
    parse_snippet(ExtractedSnippet(code=source, fence_language_tag=None,
                                   block_index=0, total_blocks=1))
    return source


def _flagged_api_name(snippet: str) -> str:
    """Best-effort dotted name of the flagged call, for warning text."""
    try:
        tree = ast.parse(snippet)
    except SyntaxError:
        return "the flagged API"
    for node in ast.walk(tree):
        if isinstance(node, ast.Call):
            try:
                return ast.unparse(node.func)
            except Exception:
                continue
    return "the flagged API"


def interpret_gate_condition(gate_source: str, installed: Version) -> str:
    """Decide which branch the gate would take for ``installed``.

    Reads the affected-range literal back out of the emitted source and
    evaluates membership with the catalog's own version semantics; the
    generated code is never executed.  Returns ``"clean"`` or
    ``"vulnerable"``.
    """
    tree = ast.parse(gate_source)
    ranges_literal = None
    for node in ast.walk(tree):
        if (isinstance(node, ast.Assign)
                and any(isinstance(t, ast.Name) and t.id == "_AFFECTED_RANGES"
                        for t in node.targets)):
            ranges_literal = ast.literal_eval(node.value)
    if ranges_literal is None:
        raise ValueError("gate source has no affected-range literal")
    ranges = [
        VersionRange(introduced=parse_version(introduced or "0"),
                     fixed=parse_version(fixed) if fixed else None)
        for introduced, fixed in ranges_literal
    ]
    return "clean" if version_in_ranges(installed, ranges) else "vulnerable"
