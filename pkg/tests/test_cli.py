"""Command-line behavior: exit codes, overrides, and written artifacts."""

import json

import numpy as np
import pytest

from voxelites.cli import main
from voxelites.metrics import METRICS_HEADER
from voxelites.phenotype import grid_to_json

RUN_YAML = """\
loop:
  init_population: 30
  children_per_generation: 10
  max_generations: 60
encodings:
  - kind: direct
  - kind: parametric
replicates: 1
base_seed: 5
snapshot_cadence: 30
output_dir: "{out}"
"""

SWEEP_YAML = """\
loop:
  init_population: 15
  children_per_generation: 5
  max_generations: 20
sweep:
  encoding: direct
  grid:
    p_mut: [0.05, 0.2]
  select: 1
replicates: 1
base_seed: 2
snapshot_cadence: 10
output_dir: "{out}"
"""


def write_config(tmp_path, template, **fields):
    path = tmp_path / "config.yaml"
    path.write_text(template.format(**fields))
    return str(path)


def run_cli(*argv):
    return main(list(argv))


class TestRun:
    def test_happy_path_writes_artifacts(self, tmp_path, capsys):
        config = write_config(tmp_path, RUN_YAML, out=tmp_path / "out")
        assert run_cli("run", config) == 0
        out = tmp_path / "out"
        assert (out / "manifest.json").exists()
        text = (out / "metrics_r000.csv").read_text()
        assert text.splitlines()[0] == METRICS_HEADER
        assert (out / "archive_r000.json").exists()
        captured = capsys.readouterr()
        assert captured.out == ""  # stdout stays clean for piping
        assert "replicate" in captured.err

    def test_seed_and_out_flags_override_config(self, tmp_path):
        config = write_config(tmp_path, RUN_YAML, out=tmp_path / "ignored")
        assert run_cli("run", config, "--quiet", "--seed", "99",
                       "--out", str(tmp_path / "real"), "--replicates", "2") == 0
        manifest = json.loads((tmp_path / "real" / "manifest.json").read_text())
        assert manifest["seeds"] == [99, 100]
        assert not (tmp_path / "ignored").exists()

    def test_override_flag_reaches_nested_fields(self, tmp_path):
        config = write_config(tmp_path, RUN_YAML, out=tmp_path / "out")
        assert run_cli("run", config, "--quiet",
                       "--override", "loop.max_generations=0") == 0
        rows = (tmp_path / "out" / "metrics_r000.csv").read_text().splitlines()
        assert len(rows) == 2  # header plus the generation-0 snapshot
        assert rows[1].startswith("0,")

    def test_same_invocation_is_deterministic(self, tmp_path):
        config_a = write_config(tmp_path, RUN_YAML, out=tmp_path / "a")
        assert run_cli("run", config_a, "--quiet") == 0
        config_b = (tmp_path / "b.yaml")
        config_b.write_text(RUN_YAML.format(out=tmp_path / "b"))
        assert run_cli("run", str(config_b), "--quiet") == 0
        for name in ("metrics_r000.csv", "archive_r000.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestExitCodes:
    def test_missing_config_file_is_io_error(self, tmp_path, capsys):
        assert run_cli("run", str(tmp_path / "absent.yaml")) == 2
        assert "absent.yaml" in capsys.readouterr().err

    def test_bad_field_is_config_error_naming_the_field(self, tmp_path, capsys):
        config = write_config(tmp_path, RUN_YAML, out=tmp_path / "out")
        code = run_cli("run", config, "--quiet", "--override", "loop.max_generations=-3")
        assert code == 1
        assert "loop.max_generations" in capsys.readouterr().err

    def test_unknown_key_is_config_error(self, tmp_path, capsys):
        config = write_config(tmp_path, RUN_YAML, out=tmp_path / "out")
        assert run_cli("run", config, "--quiet", "--override", "mystery_key=1") == 1
        assert "mystery_key" in capsys.readouterr().err

    def test_unwritable_output_is_io_error(self, tmp_path):
        config = write_config(tmp_path, RUN_YAML, out="/proc/voxelites-denied")
        assert run_cli("run", config, "--quiet") == 2

    def test_malformed_archive_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run_cli("render-archive", str(bad), "--out", str(tmp_path / "x.svg")) == 1


class TestValidateConfig:
    def test_valid_run_config(self, tmp_path, capsys):
        config = write_config(tmp_path, RUN_YAML, out=tmp_path / "out")
        assert run_cli("validate-config", config) == 0
        assert "ok" in capsys.readouterr().out.lower()

    def test_valid_sweep_config(self, tmp_path):
        config = write_config(tmp_path, SWEEP_YAML, out=tmp_path / "out")
        assert run_cli("validate-config", config) == 0

    def test_invalid_config_reports_field(self, tmp_path, capsys):
        config = write_config(tmp_path, RUN_YAML, out=tmp_path / "out")
        assert run_cli("validate-config", config, "--override", "grid.rows=0") == 1
        assert "grid.rows" in capsys.readouterr().err

    def test_validation_does_not_run_anything(self, tmp_path):
        config = write_config(tmp_path, RUN_YAML, out=tmp_path / "out")
        run_cli("validate-config", config)
        assert not (tmp_path / "out").exists()


class TestSweepAndAggregate:
    def test_sweep_then_aggregate(self, tmp_path):
        sweep_config = write_config(tmp_path, SWEEP_YAML, out=tmp_path / "sweep")
        assert run_cli("sweep", sweep_config, "--quiet") == 0
        report = json.loads((tmp_path / "sweep" / "sweep_manifest.json").read_text())
        assert len(report["points"]) == 2
        manifests = [
            str(tmp_path / "sweep" / f"point_{i:03d}" / "manifest.json") for i in range(2)
        ]
        assert run_cli("aggregate", *manifests, "--out", str(tmp_path / "agg")) == 0
        assert (tmp_path / "agg" / "summary.csv").exists()
        assert (tmp_path / "agg" / "curve_qd_score.svg").exists()

    def test_aggregate_no_figures(self, tmp_path):
        sweep_config = write_config(tmp_path, SWEEP_YAML, out=tmp_path / "sweep")
        run_cli("sweep", sweep_config, "--quiet")
        manifest = str(tmp_path / "sweep" / "point_000" / "manifest.json")
        assert run_cli("aggregate", manifest, "--out", str(tmp_path / "agg"),
                       "--no-figures") == 0
        assert not list((tmp_path / "agg").glob("*.svg"))


@pytest.fixture()
def finished_run(tmp_path):
    config = write_config(tmp_path, RUN_YAML, out=tmp_path / "out")
    assert run_cli("run", config, "--quiet") == 0
    return tmp_path / "out"


class TestRendering:
    def test_render_archive_both_modes(self, finished_run, tmp_path):
        archive = str(finished_run / "archive_r000.json")
        for color in ("fitness", "encoding"):
            out = tmp_path / f"{color}.svg"
            assert run_cli("render-archive", archive, "--out", str(out), "--color", color) == 0
            assert out.read_bytes().startswith(b"<?xml")

    def test_render_phenotype_from_grid_json(self, tmp_path):
        rng = np.random.default_rng(1)
        grid_path = tmp_path / "grid.json"
        grid_path.write_text(json.dumps(grid_to_json(rng.integers(0, 4, size=(11, 14)))))
        out = tmp_path / "grid.svg"
        assert run_cli("render-phenotype", str(grid_path), "--out", str(out)) == 0
        assert out.stat().st_size > 0

    def test_render_phenotype_from_archive_bin(self, finished_run, tmp_path):
        archive = json.loads((finished_run / "archive_r000.json").read_text())
        target = archive["elites"][0]["bin"]
        out = tmp_path / "elite.svg"
        code = run_cli("render-phenotype", str(finished_run / "archive_r000.json"),
                       "--out", str(out), "--bin", f"{target[0]},{target[1]}")
        assert code == 0 and out.stat().st_size > 0

    def test_render_phenotype_defaults_to_best_elite(self, finished_run, tmp_path):
        out = tmp_path / "best.svg"
        assert run_cli("render-phenotype", str(finished_run / "archive_r000.json"),
                       "--out", str(out)) == 0
        assert out.stat().st_size > 0

    def test_render_phenotype_empty_bin_fails_cleanly(self, finished_run, tmp_path, capsys):
        archive = json.loads((finished_run / "archive_r000.json").read_text())
        filled = {tuple(e["bin"]) for e in archive["elites"]}
        empty = next(
            (i, j) for i in range(16) for j in range(16) if (i, j) not in filled
        )
        code = run_cli("render-phenotype", str(finished_run / "archive_r000.json"),
                       "--out", str(tmp_path / "no.svg"), "--bin", f"{empty[0]},{empty[1]}")
        assert code == 1


class TestExport:
    def test_export_phenotypes_csv(self, finished_run, tmp_path):
        out = tmp_path / "phenotypes.csv"
        assert run_cli("export-phenotypes", str(finished_run / "archive_r000.json"),
                       "--out", str(out)) == 0
        header = out.read_text().splitlines()[0]
        assert header.startswith("encoding_tag,fitness,cell_000")
