#!/usr/bin/env python3
"""Mine the fixture commit histories and print the grace-period table.

Replays each package's commit stream, classifies the deltas, and reports
days from first deprecation warning to removal ("-" while not removed).

Usage:
    python3 scripts/mine_grace_periods.py
"""

from __future__ import annotations

from pathlib import Path

from apilot.miner import load_fixture_commits, mine_repository

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    print(f"{'package':10s} {'deprecated on':14s} {'removed on':14s} GP (days)")
    observed = []
    for history in sorted((ROOT / "fixtures" / "repos").glob("*_history.json")):
        package = history.stem.replace("_history", "")
        candidates = mine_repository(load_fixture_commits(history))
        for entry in candidates.deprecated.values():
            removed = entry.removed_date
            days = "-" if removed is None else str(
                (removed - entry.deprecated_date).days)
            print(f"{package:10s} {entry.deprecated_date!s:14s} "
                  f"{removed or '-'!s:14s} {days}")
            if removed is not None:
                observed.append((removed - entry.deprecated_date).days)
    if observed:
        print(f"\nminimum grace period over removed APIs: {min(observed)} days")


if __name__ == "__main__":
    main()
