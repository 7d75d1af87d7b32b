"""Command-line entry point: mine / ingest / check / generate / eval.

Exit codes are a stable contract: 0 success or clean, 1 findings,
2 operational error, 3 exhausted generation.  Machine-readable output is
always written alongside the human tables so CI never has to parse prose.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

from .advisories import SymbolSupplement, ingest_advisory, merge_into, to_catalog_records
from .catalog import (
    ApiCatalog,
    PackageId,
    Version,
    catalog_load,
    catalog_save,
    grace_period,
    parse_version,
)
from .errors import (
    ApilotError,
    ClientFailure,
    EmptyHistory,
    MalformedAdvisory,
    MalformedVersion,
    UnsupportedEcosystem,
)
from .evalharness import load_benchmark, render_table, report, run_trials
from .guardrail import GenerationConfig, generate_guarded, load_client
from .miner import (
    emit_catalog,
    filter_public,
    load_fixture_commits,
    mine_repository,
    read_git_commits,
)
from .sanitizer import check_source, sanitize

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2
EXIT_EXHAUSTED = 3

CATALOG_ENV = "APILOT_CATALOG"


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _read_input(path_or_dash: str) -> str:
    if path_or_dash == "-":
        return sys.stdin.read()
    return Path(path_or_dash).read_text(encoding="utf-8")


def _user_versions(pairs) -> dict[PackageId, Version]:
    versions: dict[PackageId, Version] = {}
    for pair in pairs or []:
        name, _, version_text = pair.partition("=")
        if not name or not version_text:
            raise ApilotError(
                f"--package-version wants name=version, got {pair!r}")
        versions[PackageId(name)] = parse_version(version_text)
    return versions


@dataclass(frozen=True)
class CliConfig:
    """Shared command configuration; flags always win over the environment."""

    catalog_path: str | None = None
    client_path: str | None = None
    max_iterations: int = 3
    temperature: float = 0.7
    user_versions: dict[PackageId, Version] = field(default_factory=dict)
    out_path: str | None = None
    verbose: bool = False

    @classmethod
    def from_args(cls, args, environ=None) -> "CliConfig":
        env = os.environ if environ is None else environ
        return cls(
            catalog_path=args.catalog or env.get(CATALOG_ENV),
            client_path=args.client,
            max_iterations=args.max_iter,
            temperature=args.temperature,
            user_versions=_user_versions(args.package_version),
            out_path=args.out,
            verbose=args.verbose,
        )

    def load_catalog(self) -> ApiCatalog:
        if not self.catalog_path:
            raise ApilotError(
                f"no catalog given; use --catalog or set {CATALOG_ENV}")
        return catalog_load(self.catalog_path)

    def generation_config(self) -> GenerationConfig:
        return GenerationConfig(
            max_iterations=self.max_iterations,
            temperature=self.temperature,
            user_versions=self.user_versions or None,
        )


def _merge_and_save(records, out_path: str) -> ApiCatalog:
    target = Path(out_path)
    if target.exists():
        base = catalog_load(target)
    else:
        base = ApiCatalog(generated_at=datetime.now(timezone.utc), records=())
    merged = merge_into(base, records)
    catalog_save(merged, target)
    return merged


# ---------------------------------------------------------------------------
# mine
# ---------------------------------------------------------------------------

def _materialize_fixture_tree(commits, workdir: Path) -> None:
    final: dict[str, str | None] = {}
    for commit in commits:
        for changed in commit.changed_files:
            final[changed.path] = changed.after_source
    for path, source in final.items():
        if source is None:
            continue
        relative = Path(path)
        if relative.is_absolute() or ".." in relative.parts:
            continue
        target = workdir / relative
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(source, encoding="utf-8")


def _pick_package_root(base: Path, package: PackageId) -> Path | None:
    candidates = [package.name, package.name.replace("-", "_")]
    for name in candidates:
        if (base / name).is_dir():
            return base / name
    dirs = [d for d in base.iterdir() if d.is_dir() and not d.name.startswith(".")]
    if len(dirs) == 1:
        return dirs[0]
    return None


def cmd_mine(args) -> int:
    package = PackageId(args.package)
    since = date.fromisoformat(args.since) if args.since else None
    repo = Path(args.repo)
    if not repo.exists():
        return _fail(f"repo {repo} is not readable")

    try:
        if repo.is_dir():
            commits = read_git_commits(repo)
            package_root = (Path(args.package_root) if args.package_root
                            else _pick_package_root(repo, package))
            if package_root is None or not package_root.is_dir():
                return _fail(
                    f"cannot locate the package tree under {repo}; "
                    "pass --package-root")
            candidates = mine_repository(commits, since=since)
            pairs = filter_public(candidates, package_root)
        else:
            commits = load_fixture_commits(repo)
            candidates = mine_repository(commits, since=since)
            with tempfile.TemporaryDirectory() as tmp:
                workdir = Path(tmp)
                _materialize_fixture_tree(commits, workdir)
                package_root = (workdir / args.package_root if args.package_root
                                else _pick_package_root(workdir, package))
                if package_root is None or not package_root.is_dir():
                    return _fail(
                        f"fixture stream has no package tree for {package.name}")
                pairs = filter_public(candidates, package_root)
    except EmptyHistory as exc:
        return _fail(str(exc))
    except (OSError, ValueError, KeyError, ApilotError) as exc:
        return _fail(f"cannot mine {repo}: {exc}")

    records = emit_catalog(candidates, pairs, package)
    merged = _merge_and_save(records, args.out)

    by_change: dict[str, int] = {}
    for delta in candidates.usage_modified.values():
        by_change[delta.classification] = by_change.get(delta.classification, 0) + 1
    changes = " ".join(f"{k}={v}" for k, v in sorted(by_change.items())) or "none"
    print(f"candidates: deprecated={len(candidates.deprecated)} "
          f"usage_modified={len(candidates.usage_modified)} ({changes})")
    print(f"records emitted: {len(records)}; catalog now has {len(merged)} records")

    graces = []
    for record in records:
        if record.kind == "deprecated":
            days = grace_period(record)
            graces.append((str(record.api_path),
                           "not removed yet" if days is None else f"{days}"))
    if graces:
        print("grace periods (days): "
              + "; ".join(f"{api}={days}" for api, days in graces))
        removed = [int(days) for _, days in graces if days != "not removed yet"]
        if removed:
            print(f"minimum grace period over removed APIs: {min(removed)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    advisory_dir = Path(args.advisories)
    if not advisory_dir.is_dir():
        return _fail(f"advisory directory {advisory_dir} is not readable")
    supplement = None
    if args.symbols:
        try:
            supplement = SymbolSupplement.load(args.symbols)
        except (OSError, ValueError, MalformedAdvisory) as exc:
            return _fail(f"cannot load symbol supplement: {exc}")

    records = []
    ingested = 0
    for doc_path in sorted(advisory_dir.glob("*.json")):
        try:
            advisory = ingest_advisory(doc_path.read_text(encoding="utf-8"),
                                       supplement)
        except (MalformedAdvisory, UnsupportedEcosystem) as exc:
            return _fail(f"{doc_path.name}: {exc}")
        ingested += 1
        records.extend(to_catalog_records(advisory))

    merged = _merge_and_save(records, args.out)
    print(f"ingested {ingested} advisories into {len(records)} patched records; "
          f"catalog now has {len(merged)} records")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _findings_table(report_obj) -> str:
    if not report_obj.findings:
        return "no findings"
    rows = [["api", "kind", "advisory", "line", "col"]]
    for finding in report_obj.findings:
        rows.append([
            str(finding.api_path),
            finding.record.kind,
            finding.record.advisory_id or "-",
            str(finding.call_site[0]),
            str(finding.call_site[1]),
        ])
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    lines[1:1] = ["  ".join("-" * w for w in widths)]
    for finding in report_obj.findings:
        lines.append(f"* {finding.reason}")
    return "\n".join(lines)


def cmd_check(args) -> int:
    try:
        config = CliConfig.from_args(args)
        catalog = config.load_catalog()
    except ApilotError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(f"cannot read catalog: {exc}")
    try:
        text = _read_input(args.input)
    except OSError as exc:
        return _fail(f"cannot read input: {exc}")

    versions = config.user_versions or None
    if "```" in text:
        result = sanitize(text, catalog, versions)
    else:
        result = check_source(text, catalog, versions)

    print(f"extraction: {result.extraction}")
    diagnostic = f" ({result.parse_diagnostic})" if result.parse_diagnostic else ""
    print(f"parse:      {result.parse}{diagnostic}")
    print(_findings_table(result))
    if result.ban_list:
        print("ban list: " + ", ".join(str(p) for p in result.ban_list))

    if config.out_path:
        Path(config.out_path).write_text(
            json.dumps(result.to_doc(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
    if config.verbose:
        print(json.dumps(result.to_doc(), indent=2, sort_keys=True))

    if result.extraction != "ok" or result.parse != "ok":
        return EXIT_ERROR
    return EXIT_FINDINGS if result.findings else EXIT_OK


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    try:
        config = CliConfig.from_args(args)
        catalog = config.load_catalog()
        generation = config.generation_config()
    except (ApilotError, MalformedVersion, ValueError) as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(f"cannot read catalog: {exc}")
    if not config.client_path:
        return _fail("no client configuration; use --client")
    try:
        client = load_client(config.client_path)
    except (ClientFailure, OSError, ValueError) as exc:
        return _fail(f"cannot load client: {exc}")
    prompt = args.prompt if args.prompt != "-" else sys.stdin.read()

    log_path = (Path(config.out_path) if config.out_path
                else Path("apilot_session.json"))
    try:
        session = generate_guarded(prompt, client, catalog, generation)
    except ClientFailure as exc:
        if exc.session is not None:
            log_path.write_text(
                json.dumps(exc.session.to_doc(), indent=2, sort_keys=True) + "\n",
                encoding="utf-8")
        return _fail(f"client failed: {exc}")

    log_path.write_text(
        json.dumps(session.to_doc(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    print(session.final_code)
    if session.status == "exhausted":
        print("\n-- warnings: the generated code still uses outdated APIs --")
        for warning in session.warnings:
            print(f"* {warning}")
        print(f"session log: {log_path}", file=sys.stderr)
        return EXIT_EXHAUSTED
    print(f"session log: {log_path}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval(args) -> int:
    try:
        config = CliConfig.from_args(args)
        catalog = config.load_catalog()
        generation = config.generation_config()
    except (ApilotError, MalformedVersion, ValueError) as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(f"cannot read catalog: {exc}")
    if not config.client_path:
        return _fail("no client configuration; use --client")
    try:
        client = load_client(config.client_path)
        entries = load_benchmark(args.bench)
    except (ClientFailure, OSError, ValueError, KeyError, ApilotError) as exc:
        return _fail(f"cannot set up eval: {exc}")

    run_dir = Path(config.out_path) if config.out_path else (
        Path("runs") / datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ"))
    run_dir.mkdir(parents=True, exist_ok=True)

    modes = ["vanilla", "guarded"] if args.mode == "both" else [args.mode]
    results = []
    try:
        for mode in modes:
            results.extend(run_trials(entries, client, catalog,
                                      trials_per_entry=args.trials, mode=mode,
                                      config=generation, jobs=args.jobs))
    except ValueError as exc:
        return _fail(str(exc))

    logs = [
        {
            "target_api": str(r.entry.target_api),
            "package": r.entry.package.name,
            "kind": r.entry.kind,
            "trial_index": r.trial_index,
            "mode": r.mode,
            "raw_output": r.raw_output,
            "extraction_ok": r.extraction_ok,
            "parse_ok": r.parse_ok,
            "contains_target": r.contains_target,
            "contains_any_outdated": r.contains_any_outdated,
            "gen_time_ms": round(r.gen_time * 1000.0, 3),
            "san_time_ms": round(r.san_time * 1000.0, 3),
            "error": r.error,
        }
        for r in results
    ]
    (run_dir / "trials.json").write_text(
        json.dumps(logs, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    metrics = report(results)
    (run_dir / "metrics.json").write_text(
        json.dumps(metrics.to_doc(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    print(render_table(metrics))
    print(f"\nrun artifacts: {run_dir}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--catalog",
                        help=f"catalog file (or set {CATALOG_ENV})")
    shared.add_argument("--client", help="client configuration JSON")
    shared.add_argument("--max-iter", type=int, default=3,
                        help="generation iteration budget (default 3)")
    shared.add_argument("--temperature", type=float, default=0.7,
                        help="sampling temperature passed to the client")
    shared.add_argument("--package-version", action="append", metavar="NAME=VER",
                        help="pin a package version, repeatable")
    shared.add_argument("--out", help="output path (meaning varies per command)")
    shared.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="apilot",
        description="Catalog outdated APIs, detect them in generated code, "
                    "and steer generation away from them.")
    commands = parser.add_subparsers(dest="command", required=True)

    mine = commands.add_parser("mine", parents=[shared],
                               help="mine a repository history into a catalog")
    mine.add_argument("--repo", required=True,
                      help="git repository or commit-stream fixture file")
    mine.add_argument("--package", required=True, help="package name")
    mine.add_argument("--since", help="ignore commits before this date")
    mine.add_argument("--package-root",
                      help="package source tree for the public-API filter")
    mine.set_defaults(func=cmd_mine, needs_out=True)

    ingest = commands.add_parser("ingest", parents=[shared],
                                 help="ingest advisory documents into a catalog")
    ingest.add_argument("--advisories", required=True,
                        help="directory of advisory JSON documents")
    ingest.add_argument("--symbols", help="symbol supplement JSON")
    ingest.set_defaults(func=cmd_ingest, needs_out=True)

    check = commands.add_parser("check", parents=[shared],
                                help="detect outdated APIs in a file or stdin")
    check.add_argument("input", help="source file, transcript file, or -")
    check.set_defaults(func=cmd_check, needs_out=False)

    generate = commands.add_parser("generate", parents=[shared],
                                   help="run the guarded generation loop")
    generate.add_argument("--prompt", required=True,
                          help="user prompt text, or - for stdin")
    generate.set_defaults(func=cmd_generate, needs_out=False)

    evaluate = commands.add_parser("eval", parents=[shared],
                                   help="run the benchmark harness")
    evaluate.add_argument("--bench", required=True,
                          help="benchmark JSONL file")
    evaluate.add_argument("--trials", type=int, default=10)
    evaluate.add_argument("--mode", choices=["both", "vanilla", "guarded"],
                          default="both")
    evaluate.add_argument("--jobs", type=int, default=1,
                          help="trial parallelism (transcript clients are serial)")
    evaluate.set_defaults(func=cmd_eval, needs_out=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "needs_out", False) and not args.out:
        return _fail(f"{args.command} needs --out for the catalog document")
    try:
        return args.func(args)
    except ApilotError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
