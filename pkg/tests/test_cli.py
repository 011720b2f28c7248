"""Command-line surface: every subcommand end-to-end."""

from __future__ import annotations

import json

import pytest

from microtune.cli import main

from conftest import DATA_DIR

RUNSPEC = str(DATA_DIR / "runspecs" / "gc_heap_grid.json")
RANDOM_RUNSPEC = str(DATA_DIR / "runspecs" / "gc_heap_random.json")
REFERENCE_SPACE = str(DATA_DIR / "spaces" / "jvm_docker_reference.json")


class TestValidateSpace:
    def test_valid_space_ok(self, capsys):
        assert main(["validate-space", REFERENCE_SPACE]) == 0
        out = capsys.readouterr().out
        assert "ok" in out and "177147" in out

    def test_malformed_space_names_parameter(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(
            json.dumps(
                {
                    "parameters": [
                        {
                            "name": "gc",
                            "kind": "categorical",
                            "values": ["serial", "g1", "zgc"],
                            "default": "cms",
                            "render": {"target": "runtime-flag", "template": "-D{value}"},
                        }
                    ]
                }
            )
        )
        assert main(["validate-space", str(bad)]) == 1
        err = capsys.readouterr().err
        assert "gc" in err and "default" in err

    def test_missing_file(self, capsys):
        assert main(["validate-space", "/nonexistent.json"]) == 1
        assert "error" in capsys.readouterr().err


class TestCardinality:
    def test_reference_space(self, capsys):
        assert main(["cardinality", REFERENCE_SPACE]) == 0
        assert capsys.readouterr().out.strip() == "177147"


class TestRunAndReport:
    def test_grid_run_then_report(self, tmp_path, capsys):
        log = tmp_path / "grid.jsonl"
        assert main(["run", RUNSPEC, "--log", str(log), "--run-id", "run-0001"]) == 0
        out = capsys.readouterr().out
        assert "best mean 0.684000 s" in out
        assert "improvement 14.5000% vs baseline" in out

        assert main(["report", str(log)]) == 0
        report_out = capsys.readouterr().out
        assert "best mean:      0.684000 s" in report_out
        assert "improvement:    14.5000%" in report_out
        assert "baseline mean:  0.800000 s" in report_out

    def test_report_exports(self, tmp_path, capsys):
        log = tmp_path / "grid.jsonl"
        main(["run", RUNSPEC, "--log", str(log), "--quiet"])
        capsys.readouterr()

        csv_path = tmp_path / "series.csv"
        assert main(["report", str(log), "--format", "csv", "--out", str(csv_path)]) == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "rank,config_index,mean_s,status"
        assert len(lines) == 7  # 6 candidates + header

        svg_path = tmp_path / "series.svg"
        assert main(["report", str(log), "--format", "svg", "--out", str(svg_path)]) == 0
        assert 'data-baseline-mean="0.8"' in svg_path.read_text()

        capsys.readouterr()
        assert main(["report", str(log), "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["best"]["mean_s"] == pytest.approx(0.684, rel=1e-12)

    def test_quiet_suppresses_progress(self, tmp_path, capsys):
        log = tmp_path / "grid.jsonl"
        main(["run", RUNSPEC, "--log", str(log), "--quiet"])
        out = capsys.readouterr().out
        assert "trial 2" not in out

    def test_invalid_runspec_fails(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"space": "missing.json"}))
        assert main(["run", str(bad), "--log", str(tmp_path / "x.jsonl")]) == 1
        assert "error" in capsys.readouterr().err


class TestCompare:
    def test_compare_grid_and_random(self, tmp_path, capsys):
        grid_log = tmp_path / "grid.jsonl"
        random_log = tmp_path / "random.jsonl"
        main(["run", RUNSPEC, "--log", str(grid_log), "--quiet"])
        main(["run", RANDOM_RUNSPEC, "--log", str(random_log), "--quiet"])
        capsys.readouterr()

        assert main(["compare", str(grid_log), str(random_log)]) == 0
        out = capsys.readouterr().out
        assert "global best mean: 0.684000 s" in out
        assert "relative time saving" in out

        assert main(["compare", str(grid_log), str(random_log), "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["first"]["best_mean_s"] == pytest.approx(0.684, rel=1e-12)
        assert doc["first"]["time_to_target"] is not None


class TestUsage:
    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
