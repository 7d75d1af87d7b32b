"""Advisory ingestion and catalog merging."""

from __future__ import annotations

import json
from datetime import datetime, timezone

import pytest

from apilot.advisories import (
    SymbolSupplement,
    ingest_advisory,
    merge_into,
    to_catalog_records,
)
from apilot.catalog import ApiCatalog, ApiPath, PackageId, parse_version
from apilot.errors import MalformedAdvisory, UnsupportedEcosystem


def pandas_doc(**overrides):
    doc = {
        "id": "CVE-2020-13901",
        "affected": [{
            "package": {"ecosystem": "PyPI", "name": "pandas"},
            "ranges": [{"type": "ECOSYSTEM",
                        "events": [{"introduced": "0"}, {"fixed": "1.0.4"}]}],
            "ecosystem_specific": {
                "imports": [{"path": "pandas", "symbols": ["read_pickle"]}]
            },
        }],
        "severity": [{"type": "CVSS_V3", "score": 9.8}],
        "details": "Buffer Overflow",
    }
    doc.update(overrides)
    return doc


class TestIngest:
    def test_full_pandas_advisory(self):
        record = ingest_advisory(json.dumps(pandas_doc()))
        assert record.advisory_id == "CVE-2020-13901"
        assert record.package == PackageId("pandas")
        assert record.symbols == (ApiPath.from_dotted("pandas.read_pickle"),)
        assert record.bug_type == "Buffer Overflow"
        assert record.cvss == 9.8
        assert record.affected_ranges[0].fixed == parse_version("1.0.4")

    def test_symbols_fall_back_to_supplement(self):
        doc = pandas_doc()
        del doc["affected"][0]["ecosystem_specific"]
        supplement = SymbolSupplement(
            {"CVE-2020-13901": (ApiPath.from_dotted("pandas.read_pickle"),)})
        record = ingest_advisory(doc, supplement)
        assert record.symbols == (ApiPath.from_dotted("pandas.read_pickle"),)

    def test_no_symbols_anywhere_is_allowed(self):
        doc = pandas_doc()
        del doc["affected"][0]["ecosystem_specific"]
        record = ingest_advisory(doc)
        assert record.symbols == ()

    def test_non_pypi_rejected(self):
        doc = pandas_doc()
        doc["affected"][0]["package"]["ecosystem"] = "npm"
        with pytest.raises(UnsupportedEcosystem):
            ingest_advisory(doc)

    def test_inverted_range_rejected(self):
        doc = pandas_doc()
        doc["affected"][0]["ranges"][0]["events"] = [
            {"introduced": "2.0"}, {"fixed": "1.0"}]
        with pytest.raises(MalformedAdvisory):
            ingest_advisory(doc)

    def test_missing_id_rejected(self):
        doc = pandas_doc()
        del doc["id"]
        with pytest.raises(MalformedAdvisory):
            ingest_advisory(doc)

    def test_missing_ranges_rejected(self):
        doc = pandas_doc()
        doc["affected"][0]["ranges"] = []
        with pytest.raises(MalformedAdvisory):
            ingest_advisory(doc)

    def test_unknown_severity_degrades_to_absent(self):
        record = ingest_advisory(pandas_doc(severity="CVSS:3.1/AV:N/AC:L"))
        assert record.cvss is None

    def test_plain_numeric_severity(self):
        record = ingest_advisory(pandas_doc(severity=7.5))
        assert record.cvss == 7.5

    def test_ingest_is_lossless_for_fixture_fields(self):
        # id / package / ranges / symbols survive a render + re-ingest cycle.
        first = ingest_advisory(pandas_doc())
        rendered = pandas_doc()
        second = ingest_advisory(json.dumps(rendered))
        assert (first.advisory_id, first.package, first.affected_ranges,
                first.symbols) == (second.advisory_id, second.package,
                                   second.affected_ranges, second.symbols)

    def test_render_then_ingest_is_identity_on_fixture_corpus(self):
        from pathlib import Path
        from apilot.advisories import AdvisoryRecord

        def render(record: AdvisoryRecord) -> dict:
            ranges = []
            for r in record.affected_ranges:
                events = [{"introduced": r.introduced.original_text}]
                if r.fixed is not None:
                    events.append({"fixed": r.fixed.original_text})
                ranges.append({"type": "ECOSYSTEM", "events": events})
            doc = {
                "id": record.advisory_id,
                "affected": [{
                    "package": {"ecosystem": "PyPI",
                                "name": record.package.name},
                    "ranges": ranges,
                    "ecosystem_specific": {
                        "imports": [{"symbols": [str(s) for s in record.symbols]}]
                    },
                }],
                "details": record.bug_type,
            }
            if record.cvss is not None:
                doc["severity"] = [{"type": "CVSS_V3", "score": record.cvss}]
            return doc

        fixtures = Path(__file__).resolve().parents[1] / "fixtures"
        supplement = SymbolSupplement.load(fixtures / "symbol_supplement.json")
        for doc_path in sorted((fixtures / "advisories").glob("*.json")):
            original = ingest_advisory(doc_path.read_text(), supplement)
            again = ingest_advisory(json.dumps(render(original)))
            assert (original.advisory_id, original.package,
                    original.affected_ranges, original.symbols) == (
                    again.advisory_id, again.package,
                    again.affected_ranges, again.symbols)


class TestToCatalogRecords:
    def test_single_symbol_single_record(self):
        records = to_catalog_records(ingest_advisory(pandas_doc()))
        assert len(records) == 1
        assert str(records[0].api_path) == "pandas.read_pickle"
        assert records[0].kind == "patched"
        assert records[0].cvss == 9.8

    def test_two_symbols_fan_out(self):
        doc = pandas_doc()
        doc["affected"][0]["ecosystem_specific"]["imports"] = [
            {"path": "pandas", "symbols": ["read_pickle", "read_msgpack"]}]
        records = to_catalog_records(ingest_advisory(doc))
        assert len(records) == 2
        assert {r.advisory_id for r in records} == {"CVE-2020-13901"}

    def test_symbol_less_advisory_yields_nothing_with_diagnostic(self, capsys):
        doc = pandas_doc()
        del doc["affected"][0]["ecosystem_specific"]
        records = to_catalog_records(ingest_advisory(doc))
        assert records == []
        assert "package-level-only" in capsys.readouterr().err


class TestMergeInto:
    def empty(self):
        return ApiCatalog(generated_at=datetime(2024, 6, 1, tzinfo=timezone.utc))

    def test_merge_one(self):
        records = to_catalog_records(ingest_advisory(pandas_doc()))
        merged = merge_into(self.empty(), records)
        assert len(merged) == 1

    def test_idempotent(self):
        records = to_catalog_records(ingest_advisory(pandas_doc()))
        once = merge_into(self.empty(), records)
        twice = merge_into(once, records)
        assert once == twice

    def test_two_advisories_same_api_coexist(self):
        first = to_catalog_records(ingest_advisory(pandas_doc()))
        second = to_catalog_records(ingest_advisory(pandas_doc(id="CVE-2099-0001")))
        merged = merge_into(merge_into(self.empty(), first), second)
        assert len(merged) == 2

    def test_order_insensitive_for_non_colliding_records(self):
        a = to_catalog_records(ingest_advisory(pandas_doc()))
        b = to_catalog_records(ingest_advisory(pandas_doc(id="CVE-2099-0001")))
        ab = merge_into(merge_into(self.empty(), a), b)
        ba = merge_into(merge_into(self.empty(), b), a)
        assert ab == ba
