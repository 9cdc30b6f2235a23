"""CLI pipeline on a micro configuration: artifacts, exit codes, determinism."""

import json
from pathlib import Path

import numpy as np
import pytest

from flowop.cli import main
from flowop.errors import ConfigError
from flowop.runconfig import RunConfig

MICRO_CFG = """
# micro pipeline exercising every stage quickly
seed = 7
field_kinds = velocity,pressure
n_timesteps = 12
n_nodes = 500
ladder = custom
velocities = 0.2,0.3,0.5,0.4,0.7
val_velocities = 0.3
grid_nx = 32
grid_ny = 12
mlp_ae.hidden = 96
mlp_ae.latent_dim = 8
mlp_ae.epochs = 10
cae.channels = 4,8
cae.latent_dim = 8
cae.epochs = 5
ldon.basis = 4
ldon.branch_width = 16
ldon.trunk_width = 8
ldon.scales = 1,20,100
ldon.epochs = 20
ldon.decay_every = 0
fno.modes = 4,4
fno.width = 4
fno.epochs = 4
mscale_fno.subnets = 2
mscale_fno.scales = 1,40
mscale_fno.width = 3
mscale_fno.epochs = 3
dtw.band = 3
"""


@pytest.fixture(scope="module")
def cfg_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "micro.cfg"
    path.write_text(MICRO_CFG)
    return str(path)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory, cfg_file):
    """Full gen -> interp -> train -> predict -> evaluate -> report run."""
    root = tmp_path_factory.mktemp("run")
    raw = root / "raw"
    grid = root / "grid"
    assert main(["gen-data", "--config", cfg_file, "--out", str(raw)]) == 0
    assert main(["interp", "--config", cfg_file, "--data", str(raw),
                 "--out", str(grid)]) == 0
    models = root / "models"
    assert main(["train", "--config", cfg_file, "--data", str(raw),
                 "--model", "mlp-ae", "--field", "velocity",
                 "--out", str(models / "mlp-ae")]) == 0
    assert main(["train", "--config", cfg_file, "--data", str(grid),
                 "--model", "cae", "--field", "velocity",
                 "--out", str(models / "cae")]) == 0
    assert main(["train", "--config", cfg_file, "--data", str(raw),
                 "--model", "ms-ldon", "--field", "velocity",
                 "--ae", str(models / "mlp-ae" / "checkpoint.nosg"),
                 "--out", str(models / "ms-ldon")]) == 0
    assert main(["train", "--config", cfg_file, "--data", str(grid),
                 "--model", "fno", "--field", "velocity",
                 "--out", str(models / "fno")]) == 0
    assert main(["train", "--config", cfg_file, "--data", str(grid),
                 "--model", "mscale-fno", "--field", "velocity",
                 "--out", str(models / "mscale-fno")]) == 0
    preds = root / "preds"
    assert main(["predict", "--checkpoint", str(models / "fno" / "checkpoint.nosg"),
                 "--data", str(grid), "--case", "0.4", "--field", "velocity",
                 "--out", str(preds)]) == 0
    assert main(["predict",
                 "--checkpoint", str(models / "ms-ldon" / "checkpoint.nosg"),
                 "--ae", str(models / "mlp-ae" / "checkpoint.nosg"),
                 "--data", str(raw), "--case", "0.4", "--field", "velocity",
                 "--out", str(preds)]) == 0
    evals = root / "evals"
    assert main(["evaluate", "--config", cfg_file,
                 "--pred", str(preds / "pred_fno_velocity_u0.4.nosg"),
                 "--ref", str(grid / "velocity_u0.4.nosg"),
                 "--model", "fno", "--out", str(evals / "fno")]) == 0
    assert main(["report", "--run", str(evals), "--out", str(root / "report")]) == 0
    return root


class TestGenData:
    def test_manifest_counts_and_split(self, pipeline):
        manifest = json.loads((pipeline / "raw" / "manifest.json").read_text())
        velocity_cases = [
            c for c in manifest["cases"] if c["field_kind"] == "velocity"
        ]
        assert len(velocity_cases) == 5
        roles = sorted(c["role"] for c in velocity_cases)
        assert roles.count("train") == 2
        assert roles.count("val") == 1
        assert roles.count("test") == 2
        assert len(list((pipeline / "raw").glob("*.nosg"))) == 10

    def test_resolved_config_echoed(self, pipeline):
        echo = (pipeline / "raw" / "resolved_config.txt").read_text()
        assert "seed = 7" in echo
        assert "interp.mask_factor = 2.5" in echo  # default filled in


class TestInterp:
    def test_structured_files_and_fidelity(self, pipeline):
        manifest = json.loads((pipeline / "grid" / "manifest.json").read_text())
        assert manifest["layout"] == "structured"
        fidelity = (pipeline / "grid" / "fidelity_report.csv").read_text()
        assert fidelity.startswith("metric,case,model,key,value")
        assert "interp_fidelity_pct" in fidelity


class TestTrainPredict:
    def test_history_csv_written(self, pipeline):
        text = (pipeline / "models" / "fno" / "history.csv").read_text()
        assert text.startswith("epoch,train_loss,val_loss")
        assert len(text.strip().splitlines()) == 5  # header + 4 epochs

    def test_prediction_round_trips(self, pipeline):
        from flowop.nosg import load_series

        pred = load_series(
            pipeline / "preds" / "pred_ms-ldon_velocity_u0.4.nosg"
        )
        assert pred.values.shape[0] == 12

    def test_missing_ae_is_config_error(self, pipeline, cfg_file):
        code = main(["train", "--config", cfg_file,
                     "--data", str(pipeline / "raw"),
                     "--model", "ldon", "--field", "velocity",
                     "--out", str(pipeline / "never")])
        assert code == 2
        assert not (pipeline / "never").exists()  # no partial artifacts

    def test_grid_model_on_unstructured_is_data_error(self, pipeline, cfg_file):
        code = main(["train", "--config", cfg_file,
                     "--data", str(pipeline / "raw"),
                     "--model", "fno", "--field", "velocity",
                     "--out", str(pipeline / "never2")])
        assert code == 3
        assert not (pipeline / "never2").exists()


class TestEvaluate:
    def test_metric_csvs_schema(self, pipeline):
        out = pipeline / "evals" / "fno"
        for name in ("relative_l2", "dtw", "capture_ratio"):
            text = (out / f"{name}.csv").read_text()
            assert text.startswith("metric,case,model,key,value")

    def test_pred_equals_ref_gives_zero_metrics(self, pipeline, cfg_file, tmp_path):
        ref = pipeline / "grid" / "velocity_u0.4.nosg"
        out = tmp_path / "self"
        assert main(["evaluate", "--config", cfg_file, "--pred", str(ref),
                     "--ref", str(ref), "--model", "self", "--out", str(out)]) == 0
        rows = (out / "relative_l2.csv").read_text().strip().splitlines()[1:]
        assert all(float(r.rsplit(",", 1)[1]) == 0.0 for r in rows)
        dtw_rows = (out / "dtw.csv").read_text().strip().splitlines()[1:]
        assert all(float(r.rsplit(",", 1)[1]) == 0.0 for r in dtw_rows)

    def test_probe_signal_csvs(self, pipeline):
        files = list((pipeline / "evals" / "fno").glob("probe_P*.csv"))
        assert len(files) == 6
        text = files[0].read_text()
        assert text.splitlines()[0] == "t,value"


class TestReport:
    def test_comparison_tables(self, pipeline):
        report_dir = pipeline / "report"
        table = (report_dir / "comparison_relative_l2_mean.csv").read_text()
        lines = table.strip().splitlines()
        assert lines[0].startswith("model,")
        assert len(lines) == 2  # one evaluated model


class TestErrors:
    def test_unknown_config_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("definitely_not_a_key = 3\n")
        assert main(["gen-data", "--config", str(bad),
                     "--out", str(tmp_path / "x")]) == 2
        assert not (tmp_path / "x").exists()

    def test_missing_config_file(self, tmp_path):
        assert main(["gen-data", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path / "x")]) == 2

    def test_duplicate_key_rejected(self, tmp_path):
        bad = tmp_path / "dup.cfg"
        bad.write_text("seed = 1\nseed = 2\n")
        with pytest.raises(ConfigError, match="duplicate"):
            RunConfig.from_file(bad)

    def test_missing_data_dir(self, cfg_file, tmp_path):
        assert main(["interp", "--config", cfg_file,
                     "--data", str(tmp_path / "ghost"),
                     "--out", str(tmp_path / "y")]) == 3


class TestDeterminism:
    def test_gen_data_byte_identical(self, cfg_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["gen-data", "--config", cfg_file, "--out", str(a)]) == 0
        assert main(["gen-data", "--config", cfg_file, "--out", str(b)]) == 0
        for f in sorted(a.glob("*.nosg")):
            assert f.read_bytes() == (b / f.name).read_bytes()
