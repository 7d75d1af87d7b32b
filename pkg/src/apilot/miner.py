"""Collection of deprecated and usage-modified APIs from commit histories.

Each commit carries before/after sources for its changed files.  Both sides
are converted to per-function snapshots and diffed; the classified deltas
accumulate into a CandidateSet which, joined with the public-API filter,
yields catalog records.

Commit input comes either from a local git repository (read through the git
object store) or from a replayable JSON fixture file; the fixture format is
the ground truth for the test surface.
"""

from __future__ import annotations

import ast
import json
import subprocess
import sys
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .catalog import (
    ApiPath,
    OutdatedApiRecord,
    PackageId,
)
from .errors import EmptyHistory, ParseFailure

CLASS_REMOVED = "removed"
CLASS_PARAMS = "params_changed"
CLASS_RETURN = "return_changed"
CLASS_DEPRECATION = "deprecation_added"


@dataclass(frozen=True)
class ChangedFile:
    """One file touched by a commit; ``None`` source means absent on that side."""

    path: str
    before_source: str | None
    after_source: str | None

    def __post_init__(self):
        if self.before_source is None and self.after_source is None:
            raise ValueError(f"{self.path}: before and after cannot both be absent")


@dataclass(frozen=True)
class CommitRecord:
    id: str
    date: date
    changed_files: tuple[ChangedFile, ...]
    parent_id: str | None = None

    def __post_init__(self):
        if not self.changed_files:
            raise ValueError(f"commit {self.id} has no changed files")


@dataclass(frozen=True)
class FunctionSnapshot:
    """Structural view of one function definition at one revision."""

    qualified_name: str
    file_path: str
    param_list: tuple[tuple[str, bool], ...]
    return_exprs: tuple[str, ...]
    has_deprecation_warning: bool
    source_span: tuple[int, int]


@dataclass(frozen=True)
class FunctionDelta:
    """Classified change of one function between parent and child commit."""

    qualified_name: str
    file_path: str
    classification: str
    old: FunctionSnapshot
    new: FunctionSnapshot | None
    commit: str
    date: date

    def key(self) -> tuple[str, str]:
        return (self.file_path, self.qualified_name)


@dataclass
class DeprecationCandidate:
    """First deprecation-added delta plus the removal that ends the grace period."""

    first_delta: FunctionDelta
    removal: FunctionDelta | None = None

    @property
    def deprecated_date(self) -> date:
        return self.first_delta.date

    @property
    def removed_date(self) -> date | None:
        return self.removal.date if self.removal is not None else None


@dataclass
class CandidateSet:
    """Accumulated mining output, keyed by (file path, qualified name).

    Keys carry the file path so same-named functions in different files never
    merge.  Absorbing deltas in commit order is associative: splitting one
    stream into ordered batches yields the same set.
    """

    deprecated: dict[tuple[str, str], DeprecationCandidate] = field(default_factory=dict)
    usage_modified: dict[tuple[str, str], FunctionDelta] = field(default_factory=dict)

    def absorb(self, delta: FunctionDelta) -> None:
        key = delta.key()
        if delta.classification == CLASS_DEPRECATION:
            self.deprecated.setdefault(key, DeprecationCandidate(delta))
            return
        self.usage_modified[key] = delta
        if delta.classification == CLASS_REMOVED:
            candidate = self.deprecated.get(key)
            if candidate is not None and candidate.removal is None:
                candidate.removal = delta


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------

_WARN_CALLEES = {"warn", "warn_explicit"}


def _callee_terminal(func: ast.expr) -> str | None:
    if isinstance(func, ast.Name):
        return func.id
    if isinstance(func, ast.Attribute):
        return func.attr
    return None


def _own_body_walk(node: ast.AST):
    """Yield nodes of a definition body without descending into nested defs."""
    stack = list(ast.iter_child_nodes(node))
    while stack:
        child = stack.pop()
        if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            continue
        yield child
        stack.extend(ast.iter_child_nodes(child))


def detect_deprecation(func_node: ast.FunctionDef | ast.AsyncFunctionDef) -> bool:
    """True when the definition emits a deprecation warning or wears a
    deprecation decorator.

    The fixed pattern list: a call to a warning emitter (``warn`` or
    ``warn_explicit``) whose arguments name a category identifier containing
    "Deprecat", or a decorator whose dotted name contains "deprecat"
    case-insensitively.  A bare ``warn("msg")`` without a category does not
    count, and neither does FutureWarning.
    """
    for decorator in func_node.decorator_list:
        target = decorator.func if isinstance(decorator, ast.Call) else decorator
        try:
            rendered = ast.unparse(target)
        except Exception:
            continue
        if "deprecat" in rendered.lower():
            return True

    for node in _own_body_walk(func_node):
        if not isinstance(node, ast.Call):
            continue
        if _callee_terminal(node.func) not in _WARN_CALLEES:
            continue
        candidates = list(node.args) + [kw.value for kw in node.keywords]
        for arg in candidates:
            name = None
            if isinstance(arg, ast.Name):
                name = arg.id
            elif isinstance(arg, ast.Attribute):
                name = arg.attr
            if name and "Deprecat" in name:
                return True
    return False


def _param_list(args: ast.arguments) -> tuple[tuple[str, bool], ...]:
    params: list[tuple[str, bool]] = []
    positional = list(args.posonlyargs) + list(args.args)
    defaults = list(args.defaults)
    no_default = len(positional) - len(defaults)
    for index, arg in enumerate(positional):
        params.append((arg.arg, index >= no_default))
    if args.vararg is not None:
        params.append(("*" + args.vararg.arg, False))
    for arg, default in zip(args.kwonlyargs, args.kw_defaults):
        params.append((arg.arg, default is not None))
    if args.kwarg is not None:
        params.append(("**" + args.kwarg.arg, False))
    return tuple(params)


def _return_exprs(func_node) -> tuple[str, ...]:
    exprs = []
    ordered = sorted(
        (n for n in _own_body_walk(func_node) if isinstance(n, ast.Return)),
        key=lambda n: (n.lineno, n.col_offset),
    )
    for node in ordered:
        exprs.append(ast.unparse(node.value) if node.value is not None else "")
    return tuple(exprs)


def snapshot_functions(source: str, file_path: str) -> list[FunctionSnapshot]:
    """One snapshot per function or method definition in ``source``.

    Qualified names include class and function nesting (``C.m``).  Raises
    ParseFailure with the first error location when the source does not parse.
    """
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        raise ParseFailure(exc.msg or "syntax error", path=file_path,
                           line=exc.lineno, col=exc.offset)
    except ValueError as exc:
        raise ParseFailure(str(exc), path=file_path)
    snapshots: dict[str, FunctionSnapshot] = {}

    def visit(body, prefix: str):
        for node in body:
            if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
                qualified = prefix + node.name
                # A conditional redefinition wins, matching runtime binding.
                snapshots[qualified] = FunctionSnapshot(
                    qualified_name=qualified,
                    file_path=file_path,
                    param_list=_param_list(node.args),
                    return_exprs=_return_exprs(node),
                    has_deprecation_warning=detect_deprecation(node),
                    source_span=(node.lineno, node.end_lineno or node.lineno),
                )
                visit(node.body, qualified + ".")
            elif isinstance(node, ast.ClassDef):
                visit(node.body, prefix + node.name + ".")
            elif isinstance(node, (ast.If, ast.Try, ast.With, ast.For, ast.While)):
                for child_body in _nested_bodies(node):
                    visit(child_body, prefix)

    def _nested_bodies(node):
        for attr in ("body", "orelse", "finalbody"):
            block = getattr(node, attr, None)
            if block:
                yield block
        for handler in getattr(node, "handlers", []):
            yield handler.body

    visit(tree.body, "")
    return list(snapshots.values())


# ---------------------------------------------------------------------------
# Diffing and mining
# ---------------------------------------------------------------------------

def diff_snapshots(old: list[FunctionSnapshot], new: list[FunctionSnapshot],
                   commit: CommitRecord, file_path: str) -> list[FunctionDelta]:
    """Classify changes between two snapshot lists of the same file.

    A function may yield several deltas at once (parameters and return both
    changed, say).  Additions without prior presence yield nothing.
    """
    new_by_name = {s.qualified_name: s for s in new}
    deltas: list[FunctionDelta] = []

    def emit(classification, old_snap, new_snap):
        deltas.append(FunctionDelta(
            qualified_name=old_snap.qualified_name,
            file_path=file_path,
            classification=classification,
            old=old_snap,
            new=new_snap,
            commit=commit.id,
            date=commit.date,
        ))

    for old_snap in old:
        new_snap = new_by_name.get(old_snap.qualified_name)
        if new_snap is None:
            emit(CLASS_REMOVED, old_snap, None)
            continue
        if old_snap.param_list != new_snap.param_list:
            emit(CLASS_PARAMS, old_snap, new_snap)
        if Counter(old_snap.return_exprs) != Counter(new_snap.return_exprs):
            emit(CLASS_RETURN, old_snap, new_snap)
        if not old_snap.has_deprecation_warning and new_snap.has_deprecation_warning:
            emit(CLASS_DEPRECATION, old_snap, new_snap)
    return deltas


def mine_repository(commits, since: date | None = None,
                    candidates: CandidateSet | None = None) -> CandidateSet:
    """Snapshot and diff every changed file of every commit at or after ``since``.

    Unparseable file versions are skipped with a diagnostic on stderr, never
    aborting the mine.  Pass the returned set back in as ``candidates`` to
    continue accumulation over a later batch.  Raises EmptyHistory when no
    commit matches.
    """
    result = candidates if candidates is not None else CandidateSet()
    matched = False
    for commit in commits:
        if since is not None and commit.date < since:
            continue
        matched = True
        for changed in commit.changed_files:
            try:
                old = (snapshot_functions(changed.before_source, changed.path)
                       if changed.before_source is not None else [])
                new = (snapshot_functions(changed.after_source, changed.path)
                       if changed.after_source is not None else [])
            except ParseFailure:
                print(f"SKIP {commit.id} {changed.path}: parse failure",
                      file=sys.stderr)
                continue
            for delta in diff_snapshots(old, new, commit, changed.path):
                result.absorb(delta)
    if not matched:
        raise EmptyHistory(
            "no commit at or after "
            f"{since.isoformat() if since else 'the start date'}")
    return result


# ---------------------------------------------------------------------------
# Public-API filter
# ---------------------------------------------------------------------------

@dataclass
class _ModuleSurface:
    dotted: tuple[str, ...]
    is_package: bool
    exports: set[str] | None           # literal __all__, or None when absent
    reexports: list[tuple[str, str, str]]  # (local name, source module, source name)


def _module_surface(py_file: Path, dotted: tuple[str, ...],
                    package_name: str) -> _ModuleSurface | None:
    try:
        tree = ast.parse(py_file.read_text(encoding="utf-8"))
    except (SyntaxError, UnicodeDecodeError):
        return None
    exports: set[str] | None = None
    reexports: list[tuple[str, str, str]] = []
    for node in tree.body:
        if isinstance(node, ast.Assign):
            targets = [t.id for t in node.targets if isinstance(t, ast.Name)]
            if "__all__" in targets and isinstance(node.value, (ast.List, ast.Tuple)):
                literal = set()
                ok = True
                for element in node.value.elts:
                    if isinstance(element, ast.Constant) and isinstance(element.value, str):
                        literal.add(element.value)
                    else:
                        ok = False
                if ok:
                    exports = literal
        elif isinstance(node, ast.ImportFrom) and node.module and node.level in (0, 1):
            if node.level == 1:
                source = ".".join(dotted + tuple(node.module.split(".")))
            else:
                module = node.module
                if not module.startswith(package_name):
                    continue
                source = module
            for alias in node.names:
                if alias.name == "*":
                    continue
                reexports.append((alias.asname or alias.name, source, alias.name))
    return _ModuleSurface(dotted=dotted, is_package=py_file.name == "__init__.py",
                          exports=exports, reexports=reexports)


def _is_public_path(segments: tuple[str, ...]) -> bool:
    return all(not seg.startswith("_") for seg in segments)


def _module_dotted_for(file_path: str, package_name: str) -> tuple[str, ...] | None:
    parts = Path(file_path).parts
    if package_name not in parts:
        return None
    start = parts.index(package_name)
    trimmed = list(parts[start:])
    stem = trimmed[-1]
    if not stem.endswith(".py"):
        return None
    stem = stem[:-3]
    if stem == "__init__":
        return tuple(trimmed[:-1])
    return tuple(trimmed[:-1]) + (stem,)


def filter_public(candidates: CandidateSet, package_root: Path | str):
    """Map each candidate to every importable public dotted path reaching it.

    A path survives when no segment starts with an underscore and, when the
    module that provides its root symbol declares a literal ``__all__``, the
    symbol appears in it.  Re-exports through ``from module import name`` in
    package ``__init__`` files are followed one level.

    Returns a stably ordered list of (ApiPath, FunctionDelta) pairs.
    """
    package_root = Path(package_root)
    package_name = package_root.name

    surfaces: dict[tuple[str, ...], _ModuleSurface] = {}
    for py_file in sorted(package_root.rglob("*.py")):
        rel = py_file.relative_to(package_root.parent)
        dotted = _module_dotted_for(str(rel), package_name)
        if dotted is None:
            continue
        surface = _module_surface(py_file, dotted, package_name)
        if surface is not None:
            surfaces[dotted] = surface

    entries: list[tuple[tuple[str, str], FunctionDelta]] = []
    for key, candidate in candidates.deprecated.items():
        entries.append((key, candidate.first_delta))
    for key, delta in candidates.usage_modified.items():
        entries.append((key, delta))

    results: list[tuple[ApiPath, FunctionDelta]] = []
    for (file_path, qualified_name), delta in sorted(
            entries, key=lambda item: (item[0], item[1].classification)):
        module = _module_dotted_for(file_path, package_name)
        if module is None or module not in surfaces:
            continue
        qualified_segments = tuple(qualified_name.split("."))
        root_symbol = qualified_segments[0]

        paths: list[tuple[tuple[str, ...], _ModuleSurface, str]] = [
            (module + qualified_segments, surfaces[module], root_symbol)]
        module_dotted_name = ".".join(module)
        for surface in surfaces.values():
            if not surface.is_package:
                continue
            for local, source, source_name in surface.reexports:
                if source == module_dotted_name and source_name == root_symbol:
                    paths.append((surface.dotted + (local,) + qualified_segments[1:],
                                  surface, local))

        for segments, owner, exported_symbol in paths:
            if not _is_public_path(segments):
                continue
            if owner.exports is not None and exported_symbol not in owner.exports:
                continue
            try:
                results.append((ApiPath(segments), delta))
            except ValueError:
                continue

    results.sort(key=lambda pair: (pair[0], pair[1].classification))
    return results


# ---------------------------------------------------------------------------
# Catalog emission
# ---------------------------------------------------------------------------

def render_signature(snapshot: FunctionSnapshot) -> str:
    """Render ``name(p1, p2=...)`` from a snapshot's parameter list."""
    name = snapshot.qualified_name.split(".")[-1]
    rendered = ", ".join(
        f"{param}=..." if has_default else param
        for param, has_default in snapshot.param_list)
    return f"{name}({rendered})"


def emit_catalog(candidates: CandidateSet, public_paths, package: PackageId
                 ) -> list[OutdatedApiRecord]:
    """Turn public candidate paths into catalog records with stable ordering."""
    records: dict[tuple, OutdatedApiRecord] = {}
    for api_path, delta in public_paths:
        if delta.classification == CLASS_DEPRECATION:
            candidate = candidates.deprecated.get(delta.key())
            if candidate is None:
                continue
            record = OutdatedApiRecord(
                api_path=api_path,
                package=package,
                kind="deprecated",
                deprecated_date=candidate.deprecated_date,
                removed_date=candidate.removed_date,
                evidence_commit=candidate.first_delta.commit,
            )
        else:
            new_signature = (render_signature(delta.new)
                             if delta.new is not None else None)
            record = OutdatedApiRecord(
                api_path=api_path,
                package=package,
                kind="usage_modified",
                change=delta.classification,
                old_signature=render_signature(delta.old),
                new_signature=new_signature,
                evidence_commit=delta.commit,
                evidence_date=delta.date,
            )
        records[record.key()] = record
    return sorted(records.values(),
                  key=lambda r: (r.package, r.api_path, r.kind))


# ---------------------------------------------------------------------------
# Commit sources
# ---------------------------------------------------------------------------

def load_fixture_commits(source) -> list[CommitRecord]:
    """Read the replayable commit-stream fixture format.

    The document is ``{"commits": [...]}`` where each commit carries ``id``,
    ``date`` (YYYY-MM-DD), optional ``parent_id``, and ``changed_files`` with
    inline ``before``/``after`` sources (null when the file is absent on that
    side).
    """
    if hasattr(source, "read"):
        doc = json.load(source)
    else:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    commits = []
    for item in doc["commits"]:
        files = tuple(
            ChangedFile(path=f["path"], before_source=f.get("before"),
                        after_source=f.get("after"))
            for f in item["changed_files"])
        commits.append(CommitRecord(
            id=item["id"],
            date=date.fromisoformat(item["date"]),
            parent_id=item.get("parent_id"),
            changed_files=files,
        ))
    return commits


def _git(repo: Path, *args: str) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        check=True, capture_output=True, text=True)
    return proc.stdout


def _git_show(repo: Path, commit: str, path: str) -> str | None:
    proc = subprocess.run(
        ["git", "-C", str(repo), "show", f"{commit}:{path}"],
        capture_output=True, text=True)
    if proc.returncode != 0:
        return None
    return proc.stdout


def read_git_commits(repo: Path | str, suffix: str = ".py") -> list[CommitRecord]:
    """Replay a local git history as CommitRecords, oldest first.

    Only files ending in ``suffix`` are materialized.  Merge commits diff
    against their first parent.
    """
    repo = Path(repo)
    log = _git(repo, "log", "--reverse", "--first-parent",
               "--format=%H %cs %P")
    commits: list[CommitRecord] = []
    for line in log.splitlines():
        parts = line.split()
        if not parts:
            continue
        commit_id = parts[0]
        commit_date = date.fromisoformat(parts[1])
        parent = parts[2] if len(parts) > 2 else None
        if parent is None:
            names = _git(repo, "ls-tree", "-r", "--name-only", commit_id)
            changed = [n for n in names.splitlines() if n.endswith(suffix)]
        else:
            names = _git(repo, "diff", "--name-only", parent, commit_id)
            changed = [n for n in names.splitlines() if n.endswith(suffix)]
        files = []
        for name in changed:
            before = _git_show(repo, parent, name) if parent else None
            after = _git_show(repo, commit_id, name)
            if before is None and after is None:
                continue
            files.append(ChangedFile(path=name, before_source=before,
                                     after_source=after))
        if files:
            commits.append(CommitRecord(
                id=commit_id, date=commit_date, parent_id=parent,
                changed_files=tuple(files)))
    return commits
