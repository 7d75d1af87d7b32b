#!/usr/bin/env python3
"""Build an outdated-API catalog from the checked-in advisory fixtures.

Usage:
    python3 scripts/build_catalog.py [--out catalog.json]

Equivalent CLI invocation:
    apilot ingest --advisories fixtures/advisories \
        --symbols fixtures/symbol_supplement.json --out catalog.json
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
from apilot.catalog import ApiCatalog, catalog_save

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="catalog.json")
    args = parser.parse_args()

    supplement = SymbolSupplement.load(ROOT / "fixtures" / "symbol_supplement.json")
    records = []
    for doc_path in sorted((ROOT / "fixtures" / "advisories").glob("*.json")):
        advisory = ingest_advisory(doc_path.read_text(encoding="utf-8"),
                                   supplement)
        records.extend(to_catalog_records(advisory))

    catalog = merge_into(
        ApiCatalog(generated_at=datetime.now(timezone.utc)), records)
    catalog_save(catalog, args.out)

    by_package: dict[str, int] = {}
    for record in catalog.records:
        by_package[record.package.name] = by_package.get(record.package.name, 0) + 1
    print(f"wrote {len(catalog)} patched records to {args.out}")
    for name in sorted(by_package):
        print(f"  {name:12s} {by_package[name]}")


if __name__ == "__main__":
    main()
