"""Trial-log durability and the report/exports built from it."""

from __future__ import annotations

import json
from dataclasses import replace

import pytest

from microtune.engine import GridStrategy, RandomStrategy, SimEvaluator, RunSpec, execute_run, run_spec_to_doc
from microtune.errors import ReportError, TrialLogError
from microtune.simulate import FailureRule
from microtune.store import (
    TrialLogWriter,
    baseline_from_log,
    build_report,
    compare_runs,
    export_csv,
    export_series,
    export_svg,
    normalize_log_text,
    read_log,
    report_from_log,
    report_to_json,
    trial_from_record,
    trial_to_record,
)
from microtune.tracing import MeasurementProtocol
from microtune.trial import Trial, TrialStatus

from test_engine import make_trial

PROTOCOL = MeasurementProtocol(requests=10, warmup=2)


def run_and_log(tmp_path, space, scenario, name="run-0001", strategy=None, budget=None):
    spec = RunSpec(
        space=space,
        strategy=strategy or GridStrategy(),
        protocol=PROTOCOL,
        evaluator=SimEvaluator(scenario=scenario, seed=0),
        budget=budget,
    )
    path = tmp_path / f"{name}.jsonl"
    with TrialLogWriter(path, name, run_spec_to_doc(spec)) as writer:
        state = execute_run(spec, sink=writer.append, run_id=name)
        writer.close(state.status.value)
    return path, state, spec


class TestTrialLog:
    def test_fresh_log_is_header_plus_trial(self, tmp_path):
        path = tmp_path / "log.jsonl"
        with TrialLogWriter(path, "r1", {"strategy": {"type": "grid"}}) as writer:
            writer.append(make_trial(1, mean=0.8, baseline=True))
        lines = path.read_text().splitlines()
        assert len(lines) == 2

    def test_out_of_order_append_rejected(self, tmp_path):
        with TrialLogWriter(tmp_path / "log.jsonl", "r1", {}) as writer:
            writer.append(make_trial(1, mean=0.8))
            writer.append(make_trial(2, mean=0.8))
            writer.append(make_trial(3, mean=0.8))
            with pytest.raises(TrialLogError, match="out-of-order"):
                writer.append(make_trial(5, mean=0.8))

    def test_first_trial_must_be_one(self, tmp_path):
        with TrialLogWriter(tmp_path / "log.jsonl", "r1", {}) as writer:
            with pytest.raises(TrialLogError, match="out-of-order"):
                writer.append(make_trial(2, mean=0.8))

    def test_idempotent_retry_suppressed(self, tmp_path):
        path = tmp_path / "log.jsonl"
        trial = make_trial(1, mean=0.8)
        with TrialLogWriter(path, "r1", {}) as writer:
            writer.append(trial)
            writer.append(trial)  # retry: suppressed, not duplicated
        assert len(read_log(path).trials) == 1

    def test_conflicting_retry_rejected(self, tmp_path):
        with TrialLogWriter(tmp_path / "log.jsonl", "r1", {}) as writer:
            writer.append(make_trial(1, mean=0.8))
            with pytest.raises(TrialLogError, match="conflicting"):
                writer.append(make_trial(1, mean=0.9))

    def test_hundred_appends_recovered_verbatim(self, tmp_path):
        path = tmp_path / "log.jsonl"
        trials = [make_trial(i, mean=0.5 + i / 1000, baseline=(i == 1)) for i in range(1, 101)]
        with TrialLogWriter(path, "r1", {}) as writer:
            for trial in trials:
                writer.append(trial)
            writer.close("finished")
        data = read_log(path)
        assert list(data.trials) == trials
        assert data.footer["status"] == "finished"

    def test_record_round_trip_preserves_floats(self):
        trial = make_trial(3, mean=0.6839999999999999, config_index=5)
        assert trial_from_record(trial_to_record(trial)) == trial

    def test_unterminated_log_readable(self, tmp_path):
        # simulates a crash: header + trials, no footer
        path = tmp_path / "log.jsonl"
        writer = TrialLogWriter(path, "r1", {})
        writer.append(make_trial(1, mean=0.8))
        writer._fh.close()  # abandon without footer
        data = read_log(path)
        assert data.footer is None
        assert len(data.trials) == 1

    def test_header_required(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text('{"kind": "trial", "trial_id": 1}\n')
        with pytest.raises(TrialLogError, match="before header"):
            read_log(path)

    def test_footer_terminates_the_log(self, tmp_path):
        path = tmp_path / "log.jsonl"
        with TrialLogWriter(path, "r1", {}) as writer:
            writer.append(make_trial(1, mean=0.8))
            writer.close("finished")
        with open(path, "a") as fh:
            fh.write(json.dumps(trial_to_record(make_trial(2, mean=0.7))) + "\n")
        with pytest.raises(TrialLogError, match="after footer"):
            read_log(path)


class TestBuildReport:
    def test_paper_numbers(self):
        baseline = make_trial(1, mean=0.8100, baseline=True)
        trials = [
            baseline,
            make_trial(2, mean=0.7245),
            make_trial(3, mean=0.7445),
        ]
        report = build_report(trials, baseline)
        assert report.best.trial_id == 2
        assert report.improvement_percent == pytest.approx(10.5556, abs=0.0001)
        assert report.baseline_mean == 0.8100

    def test_incomplete_trailing_segment(self):
        baseline = make_trial(1, mean=0.8, baseline=True)
        trials = [
            baseline,
            make_trial(2, mean=0.9),
            make_trial(3, reason="oom"),
            make_trial(4, mean=0.7),
            make_trial(5, reason="timeout"),
            make_trial(6, mean=0.8),
        ]
        report = build_report(trials, baseline)
        assert len(report.sorted_series) == 5
        statuses = [t.status for t in report.sorted_series]
        assert statuses == [TrialStatus.COMPLETE] * 3 + [TrialStatus.INCOMPLETE] * 2
        means = [t.stats.mean_s for t in report.sorted_series[:3]]
        assert means == sorted(means)
        assert [t.trial_id for t in report.sorted_series[3:]] == [3, 5]
        assert report.complete_count == 3
        assert report.incomplete_count == 2

    def test_series_is_permutation_of_candidates(self):
        baseline = make_trial(1, mean=0.8, baseline=True)
        trials = [baseline] + [make_trial(i, mean=1.0 / i) for i in range(2, 12)]
        report = build_report(trials, baseline)
        assert sorted(t.trial_id for t in report.sorted_series) == list(range(2, 12))

    def test_no_complete_candidates_degenerate(self):
        baseline = make_trial(1, mean=0.8, baseline=True)
        trials = [baseline, make_trial(2, reason="oom")]
        report = build_report(trials, baseline)
        assert report.best is None
        assert report.improvement_percent is None

    def test_incomplete_baseline_rejected(self):
        baseline = make_trial(1, reason="oom", baseline=True)
        with pytest.raises(ReportError, match="baseline"):
            build_report([baseline], baseline)

    def test_ties_sorted_by_trial_id(self):
        baseline = make_trial(1, mean=0.8, baseline=True)
        trials = [baseline, make_trial(3, mean=0.7), make_trial(2, mean=0.7)]
        report = build_report(trials, baseline)
        assert [t.trial_id for t in report.sorted_series] == [2, 3]
        assert report.best.trial_id == 2


class TestReplay:
    def test_replayed_report_is_byte_identical(self, tmp_path, demo_space, demo_scenario):
        path, state, spec = run_and_log(tmp_path, demo_space, demo_scenario)
        online = build_report(
            state.trials,
            state.baseline_trial,
            run_id="run-0001",
            strategy={"type": "grid"},
            space_name=spec.space.name,
        )
        replayed = report_from_log(path)
        assert report_to_json(replayed) == report_to_json(online)

    def test_replay_with_incomplete_trials(self, tmp_path, demo_space, demo_scenario):
        failing = replace(
            demo_scenario,
            failures=(FailureRule(when={"gc": "serial", "heap": 256 * 1024**2}, reason="oom"),),
        )
        path, state, spec = run_and_log(tmp_path, demo_space, failing, name="run-0002")
        online = build_report(
            state.trials,
            state.baseline_trial,
            run_id="run-0002",
            strategy={"type": "grid"},
            space_name=spec.space.name,
        )
        assert report_to_json(report_from_log(path)) == report_to_json(online)
        assert online.incomplete_count == 1

    def test_baseline_recovered_from_log(self, tmp_path, demo_space, demo_scenario):
        path, state, _ = run_and_log(tmp_path, demo_space, demo_scenario, name="run-0003")
        baseline = baseline_from_log(read_log(path))
        assert baseline == state.baseline_trial

    def test_normalization_masks_only_timing(self, tmp_path, demo_space, demo_scenario):
        path_a, _, _ = run_and_log(tmp_path, demo_space, demo_scenario, name="run-a")
        path_b, _, _ = run_and_log(tmp_path, demo_space, demo_scenario, name="run-a2")
        text_a = path_a.read_text().replace("run-a", "run-x")
        text_b = path_b.read_text().replace("run-a2", "run-x")
        assert normalize_log_text(text_a) == normalize_log_text(text_b)


class TestCompareRuns:
    def _report(self, trials, baseline, **meta):
        return build_report(trials, baseline, **meta)

    def test_time_saving_reconstruction(self):
        # grid reaches the target after 100 s, random after 16 s -> saving 0.84
        baseline = make_trial(1, mean=0.81, baseline=True)
        grid_trials = [baseline] + [
            make_trial(i, mean=0.9 - 0.01 * i, elapsed=10.0) for i in range(2, 12)
        ]
        # best grid mean: 0.9 - 0.11 = 0.79... make last trial the global best
        grid_trials.append(make_trial(12, mean=0.7245, elapsed=0.0))
        random_trials = [
            make_trial(1, mean=0.81, baseline=True),
            make_trial(2, mean=0.80, elapsed=8.0),
            make_trial(3, mean=0.7445, elapsed=8.0),
        ]
        report_a = self._report(grid_trials, baseline, run_id="a", space_name="s")
        report_b = self._report(random_trials, random_trials[0], run_id="b", space_name="s")
        cmp = compare_runs(report_a, report_b, q=0.05)
        assert cmp.global_best_mean_s == 0.7245
        assert cmp.first.time_to_target.elapsed_s == pytest.approx(100.0)
        assert cmp.second.time_to_target.elapsed_s == pytest.approx(16.0)
        assert cmp.relative_time_saving == pytest.approx(0.84)

    def test_identical_runs_save_nothing(self):
        baseline = make_trial(1, mean=0.81, baseline=True)
        trials = [baseline, make_trial(2, mean=0.7, elapsed=5.0)]
        report = self._report(trials, baseline, run_id="a", space_name="s")
        cmp = compare_runs(report, report)
        assert cmp.relative_time_saving == pytest.approx(0.0)

    def test_unreached_target_gives_none(self):
        baseline = make_trial(1, mean=0.81, baseline=True)
        report_a = self._report(
            [baseline, make_trial(2, mean=0.7, elapsed=5.0)], baseline, space_name="s"
        )
        report_b = self._report(
            [make_trial(1, mean=0.81, baseline=True), make_trial(2, reason="oom")],
            make_trial(1, mean=0.81, baseline=True),
            space_name="s",
        )
        cmp = compare_runs(report_a, report_b)
        assert cmp.second.time_to_target is None
        assert cmp.relative_time_saving is None

    def test_mismatched_spaces_rejected(self):
        baseline = make_trial(1, mean=0.81, baseline=True)
        report_a = self._report([baseline], baseline, space_name="s1")
        report_b = self._report([baseline], baseline, space_name="s2")
        with pytest.raises(ReportError, match="mismatched spaces"):
            compare_runs(report_a, report_b)

    def test_sim_grid_vs_random_end_to_end(self, tmp_path, demo_space, demo_scenario):
        path_a, _, _ = run_and_log(tmp_path, demo_space, demo_scenario, name="grid")
        path_b, _, _ = run_and_log(
            tmp_path,
            demo_space,
            demo_scenario,
            name="random",
            strategy=RandomStrategy(seed=2),
            budget=6,
        )
        cmp = compare_runs(report_from_log(path_a), report_from_log(path_b))
        assert cmp.global_best_mean_s == pytest.approx(0.684, rel=1e-12)
        assert cmp.first.time_to_target is not None
        assert cmp.second.time_to_target is not None


class TestExports:
    def _simple_report(self):
        baseline = make_trial(1, mean=0.81, baseline=True)
        trials = [
            baseline,
            make_trial(2, mean=0.9, config_index=4),
            make_trial(3, mean=0.7, config_index=2),
            make_trial(4, reason="oom", config_index=1),
        ]
        return build_report(trials, baseline, run_id="r")

    def test_csv_rows(self):
        report = self._simple_report()
        lines = export_csv(report).splitlines()
        assert lines[0] == "rank,config_index,mean_s,status"
        assert len(lines) == 4
        assert lines[1].startswith("1,2,0.7,complete")
        assert lines[3] == "3,1,,incomplete"

    def test_csv_empty_run_header_only(self):
        baseline = make_trial(1, mean=0.81, baseline=True)
        report = build_report([baseline], baseline)
        assert export_csv(report).splitlines() == ["rank,config_index,mean_s,status"]

    def test_svg_contains_baseline_marker(self):
        report = self._simple_report()
        svg = export_svg(report)
        assert svg.startswith("<svg")
        assert 'class="baseline"' in svg
        assert 'data-baseline-mean="0.81"' in svg
        assert 'class="incomplete"' in svg
        assert 'class="series"' in svg

    def test_unknown_format_rejected(self):
        with pytest.raises(ReportError, match="unknown export format"):
            export_series(self._simple_report(), "pdf")

    def test_export_series_dispatch(self):
        report = self._simple_report()
        assert export_series(report, "csv") == export_csv(report)
        assert export_series(report, "svg") == export_svg(report)
