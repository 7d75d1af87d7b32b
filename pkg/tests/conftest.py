"""Shared fixtures: a small catalog covering all three outdated-API kinds."""

from __future__ import annotations

from datetime import date, datetime, timezone

import pytest

from apilot.catalog import (
    ApiCatalog,
    ApiPath,
    OutdatedApiRecord,
    PackageId,
    VersionRange,
    parse_version,
)


def pandas_read_pickle() -> OutdatedApiRecord:
    return OutdatedApiRecord(
        api_path=ApiPath.from_dotted("pandas.read_pickle"),
        package=PackageId("pandas"),
        kind="patched",
        advisory_id="CVE-2020-13901",
        affected_ranges=(VersionRange(fixed=parse_version("1.0.4")),),
        bug_type="Buffer Overflow",
        cvss=9.8,
    )


def ssl_protocol_constant() -> OutdatedApiRecord:
    return OutdatedApiRecord(
        api_path=ApiPath.from_dotted("ssl.PROTOCOL_TLSv1_2"),
        package=PackageId("ssl"),
        kind="deprecated",
        deprecated_date=date(2021, 5, 3),
        evidence_commit="f00dfeed",
    )


def hashlib_md5() -> OutdatedApiRecord:
    return OutdatedApiRecord(
        api_path=ApiPath.from_dotted("hashlib.md5"),
        package=PackageId("hashlib"),
        kind="deprecated",
        deprecated_date=date(2020, 1, 1),
        evidence_commit="cafebabe",
    )


def networkx_matrix_removed() -> OutdatedApiRecord:
    return OutdatedApiRecord(
        api_path=ApiPath.from_dotted("networkx.to_numpy_matrix"),
        package=PackageId("networkx"),
        kind="usage_modified",
        change="removed",
        old_signature="to_numpy_matrix(G)",
        evidence_commit="beefcake",
        evidence_date=date(2023, 1, 17),
    )


def networkx_mixing_params() -> OutdatedApiRecord:
    return OutdatedApiRecord(
        api_path=ApiPath.from_dotted("networkx.degree_mixing_matrix"),
        package=PackageId("networkx"),
        kind="usage_modified",
        change="params_changed",
        old_signature="degree_mixing_matrix(G, x=...)",
        new_signature="degree_mixing_matrix(G, x=..., mapping=...)",
        evidence_commit="0ddba11",
        evidence_date=date(2021, 7, 1),
    )


def build_small_catalog() -> ApiCatalog:
    return ApiCatalog(
        generated_at=datetime(2024, 6, 1, tzinfo=timezone.utc),
        records=(
            pandas_read_pickle(),
            ssl_protocol_constant(),
            hashlib_md5(),
            networkx_matrix_removed(),
            networkx_mixing_params(),
        ),
    )


@pytest.fixture
def small_catalog() -> ApiCatalog:
    return build_small_catalog()
