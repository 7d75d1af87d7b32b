"""Trials, rate computations, and the metrics report."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apilot.catalog import ApiPath, PackageId
from apilot.errors import UndefinedReduction
from apilot.evalharness import (
    BenchmarkEntry,
    TrialResult,
    extract_rate,
    f_api,
    f_api_plus,
    load_benchmark,
    parse_rate,
    reduction_rate,
    render_table,
    report,
    run_trials,
)
from apilot.guardrail import TranscriptClient
from tests.conftest import build_small_catalog

SHARED_CATALOG = build_small_catalog()

PICKLE_ENTRY = BenchmarkEntry(
    target_api=ApiPath.from_dotted("pandas.read_pickle"),
    kind="patched",
    instruction_prompt="Load pickled pandas object from file.",
    package=PackageId("pandas"),
)

TARGET_OUTPUT = "```python\nimport pandas as pd\npd.read_pickle(p)\n```"
OTHER_OUTDATED = "```python\nimport networkx as nx\nnx.to_numpy_matrix(G)\n```"
CLEAN_OUTPUT = "```python\nvalue = 1\n```"
UNFENCED = "no code here"


class TestRunTrials:
    def test_one_entry_three_trials(self):
        client = TranscriptClient([CLEAN_OUTPUT] * 3)
        results = run_trials([PICKLE_ENTRY], client, SHARED_CATALOG,
                             trials_per_entry=3, mode="vanilla")
        assert len(results) == 3
        assert all(r.completed for r in results)

    def test_two_of_ten_give_f_api_fraction(self):
        # Counting oracle: 2 target hits out of 10 completed trials = 0.2.
        responses = [TARGET_OUTPUT, CLEAN_OUTPUT, CLEAN_OUTPUT, TARGET_OUTPUT,
                     CLEAN_OUTPUT, CLEAN_OUTPUT, CLEAN_OUTPUT, CLEAN_OUTPUT,
                     CLEAN_OUTPUT, CLEAN_OUTPUT]
        client = TranscriptClient(responses)
        results = run_trials([PICKLE_ENTRY], client, SHARED_CATALOG,
                             trials_per_entry=10, mode="vanilla")
        assert f_api(results, PICKLE_ENTRY) == pytest.approx(0.2)

    def test_guarded_mode_over_always_clean_mock(self):
        client = TranscriptClient([CLEAN_OUTPUT] * 4)
        results = run_trials([PICKLE_ENTRY], client, SHARED_CATALOG,
                             trials_per_entry=4, mode="guarded")
        assert all(not r.contains_any_outdated for r in results)

    def test_client_failures_recorded_and_excluded(self):
        client = TranscriptClient([TARGET_OUTPUT, CLEAN_OUTPUT])
        results = run_trials([PICKLE_ENTRY], client, SHARED_CATALOG,
                             trials_per_entry=4, mode="vanilla")
        failed = [r for r in results if not r.completed]
        assert len(failed) == 2
        # Denominator counts completed trials only: 1 of 2 hit the target.
        assert f_api(results, PICKLE_ENTRY) == pytest.approx(0.5)

    def test_alternative_outdated_counts_for_plus_only(self):
        client = TranscriptClient([OTHER_OUTDATED])
        results = run_trials([PICKLE_ENTRY], client, SHARED_CATALOG,
                             trials_per_entry=1, mode="vanilla")
        assert f_api(results, PICKLE_ENTRY) == 0.0
        assert f_api_plus(results, PICKLE_ENTRY) == 1.0

    def test_contains_flags_use_detection_not_text(self):
        mention_only = ('```python\nprint("try pandas.read_pickle later")\n```')
        client = TranscriptClient([mention_only])
        results = run_trials([PICKLE_ENTRY], client, SHARED_CATALOG,
                             trials_per_entry=1, mode="vanilla")
        assert results[0].contains_target is False
        assert results[0].contains_any_outdated is False

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            run_trials([PICKLE_ENTRY], TranscriptClient([]), SHARED_CATALOG,
                       trials_per_entry=1, mode="both")

    def test_uncataloged_target_rejected(self):
        stray = BenchmarkEntry(
            target_api=ApiPath.from_dotted("pandas.read_csv"),
            kind="patched",
            instruction_prompt="Read a csv file.",
            package=PackageId("pandas"),
        )
        with pytest.raises(ValueError, match="read_csv"):
            run_trials([stray], TranscriptClient([CLEAN_OUTPUT]),
                       SHARED_CATALOG, trials_per_entry=1, mode="vanilla")


class TestRates:
    def make_results(self, flags):
        results = []
        for index, (extraction_ok, parse_ok) in enumerate(flags):
            results.append(TrialResult(
                entry=PICKLE_ENTRY, trial_index=index, mode="vanilla",
                extraction_ok=extraction_ok,
                parse_ok=parse_ok and extraction_ok))
        return results

    def test_all_conforming(self):
        results = self.make_results([(True, True)] * 5)
        assert extract_rate(results) == 1.0
        assert parse_rate(results) == 1.0

    def test_one_fence_less_output_in_fifty(self):
        # Counting oracle: 49/50 extracted = 0.98.
        results = self.make_results([(True, True)] * 49 + [(False, False)])
        assert extract_rate(results) == pytest.approx(0.98)

    def test_parse_rate_denominator_is_extracted(self):
        results = self.make_results(
            [(True, True), (True, False), (False, False)])
        assert parse_rate(results) == pytest.approx(0.5)

    def test_zero_extractions_is_undefined(self):
        results = self.make_results([(False, False)] * 3)
        assert parse_rate(results) is None

    def test_f_api_boundaries(self):
        hits = [TrialResult(entry=PICKLE_ENTRY, trial_index=i, mode="vanilla",
                            extraction_ok=True, parse_ok=True,
                            contains_target=True, contains_any_outdated=True)
                for i in range(10)]
        assert f_api(hits, PICKLE_ENTRY) == 1.0
        misses = self.make_results([(True, True)] * 10)
        assert f_api(misses, PICKLE_ENTRY) == 0.0


class TestReductionRate:
    def test_mean_deprecated_row(self):
        assert reduction_rate(0.2878, 0.0424) == pytest.approx(85.27, abs=0.01)

    def test_mean_patched_row_rate_of_means(self):
        # The two labeled conventions disagree on the same inputs: the
        # rate-of-means reading of these aggregates gives 91.73.
        assert reduction_rate(0.2538, 0.0210) == pytest.approx(91.73, abs=0.01)

    def test_mean_patched_row_mean_of_rates(self):
        # Averaging the per-pair reductions is the other labeled
        # convention and lands on 93.64 for the same aggregates.
        pairs = [(0.4900, 0.0600), (0.2749, 0.0209), (0.1900, 0.0000),
                 (0.1621, 0.0063), (0.2066, 0.0000), (0.3293, 0.0549),
                 (0.1236, 0.0051)]
        rates = [reduction_rate(v, g) for v, g in pairs]
        assert sum(rates) / len(rates) == pytest.approx(93.64, abs=0.01)

    def test_identity_is_zero(self):
        assert reduction_rate(0.25, 0.25) == 0.0

    def test_zero_vanilla_is_undefined(self):
        with pytest.raises(UndefinedReduction):
            reduction_rate(0.0, 0.0)

    def test_rate_reconstructed_from_large_trial_counts(self):
        # A 10,000-trial batch with 2,878 target hits lands exactly on
        # 0.2878.
        results = [
            TrialResult(entry=PICKLE_ENTRY, trial_index=i, mode="vanilla",
                        extraction_ok=True, parse_ok=True,
                        contains_target=i < 2878,
                        contains_any_outdated=i < 2878)
            for i in range(10_000)
        ]
        assert f_api(results, PICKLE_ENTRY) == pytest.approx(0.2878)


@st.composite
def trial_batch(draw):
    n = draw(st.integers(min_value=1, max_value=20))
    results = []
    for index in range(n):
        target = draw(st.booleans())
        # A target finding is itself an outdated finding, so contains_any
        # can never be False when contains_target is True.
        any_outdated = target or draw(st.booleans())
        results.append(TrialResult(
            entry=PICKLE_ENTRY, trial_index=index, mode="vanilla",
            extraction_ok=True, parse_ok=True,
            contains_target=target, contains_any_outdated=any_outdated))
    return results


class TestPlusDominates:
    @settings(max_examples=200, deadline=None)
    @given(results=trial_batch())
    def test_f_api_plus_at_least_f_api(self, results):
        assert f_api_plus(results, PICKLE_ENTRY) >= f_api(results, PICKLE_ENTRY)


class TestReport:
    def build_results(self):
        vanilla = TranscriptClient(
            [TARGET_OUTPUT, TARGET_OUTPUT, CLEAN_OUTPUT, CLEAN_OUTPUT])
        guarded = TranscriptClient([CLEAN_OUTPUT] * 4)
        results = run_trials([PICKLE_ENTRY], vanilla, SHARED_CATALOG,
                             trials_per_entry=4, mode="vanilla")
        results += run_trials([PICKLE_ENTRY], guarded, SHARED_CATALOG,
                              trials_per_entry=4, mode="guarded")
        return results

    def test_aggregates_match_hand_computation(self):
        # Spreadsheet oracle on the fixture counts: vanilla 2/4 = 0.5,
        # guarded 0/4 = 0.0, reduction 100%.
        metrics = report(self.build_results())
        agg = next(a for a in metrics.per_kind
                   if a.kind == "patched" and a.metric == "f_api")
        assert agg.vanilla_mean == pytest.approx(0.5)
        assert agg.guarded_mean == pytest.approx(0.0)
        assert agg.reduction_rate_of_means == pytest.approx(100.0)
        assert agg.reduction_mean_of_rates == pytest.approx(100.0)

    def test_empty_input_report(self):
        metrics = report([])
        assert metrics.per_entry == []
        assert metrics.per_kind == []

    def test_single_entry_report_renders(self):
        client = TranscriptClient([CLEAN_OUTPUT])
        results = run_trials([PICKLE_ENTRY], client, SHARED_CATALOG,
                             trials_per_entry=1, mode="vanilla")
        table = render_table(report(results))
        assert "patched" in table
        assert "F_API" in table

    def test_report_reproducible_from_results_alone(self):
        results = self.build_results()
        first = json.dumps(report(results).to_doc(), sort_keys=True)
        second = json.dumps(report(results).to_doc(), sort_keys=True)
        assert first == second


class TestParallelTrials:
    class StatelessClient:
        def send(self, prompt, temperature):
            return TARGET_OUTPUT if "pickle" in prompt.lower() else CLEAN_OUTPUT

    def test_parallel_results_match_serial_metrics(self):
        client = self.StatelessClient()
        serial = run_trials([PICKLE_ENTRY], client, SHARED_CATALOG,
                            trials_per_entry=6, mode="vanilla", jobs=1)
        parallel = run_trials([PICKLE_ENTRY], client, SHARED_CATALOG,
                              trials_per_entry=6, mode="vanilla", jobs=3)
        assert f_api(serial, PICKLE_ENTRY) == f_api(parallel, PICKLE_ENTRY)
        assert ({(r.trial_index, r.contains_target) for r in serial}
                == {(r.trial_index, r.contains_target) for r in parallel})


class TestLoadBenchmark:
    def test_jsonl_round_trip(self, tmp_path):
        lines = [
            {"target_api": "pandas.read_pickle", "kind": "patched",
             "package": "pandas", "prompt": "Load pickled pandas object."},
            {"target_api": "networkx.to_numpy_matrix", "kind": "usage_modified",
             "package": "networkx", "prompt": "Graph adjacency as matrix."},
        ]
        bench = tmp_path / "bench.jsonl"
        bench.write_text("\n".join(json.dumps(l) for l in lines))
        entries = load_benchmark(bench)
        assert len(entries) == 2
        assert entries[0].target_api == ApiPath.from_dotted("pandas.read_pickle")
        assert entries[1].package == PackageId("networkx")

    def test_unknown_kind_rejected(self, tmp_path):
        bench = tmp_path / "bench.jsonl"
        bench.write_text(json.dumps(
            {"target_api": "pandas.read_pickle", "kind": "sideways",
             "package": "pandas", "prompt": "x"}) + "\n")
        with pytest.raises(ValueError, match="sideways"):
            load_benchmark(bench)
