#!/usr/bin/env python3
"""End-to-end demo: benchmark eval against a deterministic mock client.

Builds the advisory catalog in memory, replays a scripted client whose
vanilla outputs sometimes use pandas.read_pickle, runs both modes over the
fixture benchmark's pandas entry, and prints the w/o, w/, R_r table.

Usage:
    python3 scripts/run_mock_eval.py [--trials 4]
"""

from __future__ import annotations

import argparse
from datetime import datetime, timezone
from pathlib import Path

from apilot.advisories import (
    SymbolSupplement,
    ingest_advisory,
    merge_into,
    to_catalog_records,
)
from apilot.catalog import ApiCatalog
from apilot.evalharness import load_benchmark, render_table, report, run_trials
from apilot.guardrail import LlmClient

ROOT = Path(__file__).resolve().parents[1]

BANNED = "```python\nimport pandas as pd\ndf = pd.read_pickle(path)\n```"
CLEAN = ("```python\nimport json\n\nwith open(path) as fh:\n"
         "    df = json.load(fh)\n```")


class ScriptedClient(LlmClient):
    """Emits the flagged call on every other fresh prompt, and always backs
    off to the clean variant once the prompt carries a ban list."""

    def __init__(self):
        self.fresh_prompts = 0

    def send(self, prompt: str, temperature: float) -> str:
        if "Do not call" in prompt:
            return CLEAN
        self.fresh_prompts += 1
        return BANNED if self.fresh_prompts % 2 else CLEAN


def build_catalog() -> ApiCatalog:
    supplement = SymbolSupplement.load(ROOT / "fixtures" / "symbol_supplement.json")
    records = []
    for doc_path in sorted((ROOT / "fixtures" / "advisories").glob("*.json")):
        records.extend(to_catalog_records(
            ingest_advisory(doc_path.read_text(encoding="utf-8"), supplement)))
    return merge_into(
        ApiCatalog(generated_at=datetime.now(timezone.utc)), records)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=4)
    args = parser.parse_args()

    catalog = build_catalog()
    entries = [e for e in load_benchmark(ROOT / "fixtures" / "benchmark.jsonl")
               if e.package.name == "pandas"]
    client = ScriptedClient()

    results = run_trials(entries, client, catalog,
                         trials_per_entry=args.trials, mode="vanilla")
    results += run_trials(entries, client, catalog,
                          trials_per_entry=args.trials, mode="guarded")
    print(render_table(report(results)))


if __name__ == "__main__":
    main()
