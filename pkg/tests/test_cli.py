"""Command line behavior: flags, output strings, exit codes."""

import json
import os
import re
import subprocess
import sys

import numpy as np
import pytest

import nnfuzz.cli as cli
import nnfuzz.orchestrator as orch
from nnfuzz.errors import CampaignAborted
from nnfuzz.model_format import manifest_to_dict, save_model
from nnfuzz.tensorfile import read_tensor, write_tensor

from engine_fixtures import fixture_path


def run_cli(*argv):
    return cli.main(list(argv))


# ---------------------------------------------------------------------------
# argument handling


def test_missing_required_flag_exits_one(capsys):
    code = run_cli("fuzz", "--classifier", "x.json")
    assert code == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_exits_one(capsys):
    code = run_cli("coverage", "--classifier", "x.json", "--dataset", "d",
                   "--frobnicate")
    assert code == 1


def test_help_exits_zero(capsys):
    assert run_cli("--help") == 0
    assert "fuzz" in capsys.readouterr().out


def test_console_script_installed():
    result = subprocess.run(["nnfuzz", "--help"], capture_output=True, text=True)
    assert result.returncode == 0
    assert "validate-model" in result.stdout


# ---------------------------------------------------------------------------
# validate-model


def test_validate_model_ok_silent(capsys):
    code = run_cli("validate-model",
                   "--manifest", fixture_path("classifier.json"),
                   "--weights", fixture_path("classifier.bin"))
    assert code == 0
    assert capsys.readouterr().out == ""


def test_validate_model_violations_exit_two(tmp_path, capsys, golden_classifier):
    # both violations sit at the schema level, so they report together
    d = manifest_to_dict(golden_classifier.manifest)
    d["input_range"] = [1.0, 0.0]
    d["layers"][0]["activation"] = "gelu"
    mpath = tmp_path / "bad.json"
    mpath.write_text(json.dumps(d))
    wpath = tmp_path / "bad.bin"
    wpath.write_bytes(golden_classifier.flat_weights.tobytes())

    code = run_cli("validate-model", "--manifest", str(mpath),
                   "--weights", str(wpath))
    assert code == 2
    out_lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert len(out_lines) >= 2  # one violation per line


def test_validate_model_missing_weights(tmp_path, capsys):
    code = run_cli("validate-model",
                   "--manifest", fixture_path("classifier.json"),
                   "--weights", str(tmp_path / "absent.bin"))
    assert code == 2


# ---------------------------------------------------------------------------
# coverage


def test_coverage_golden_dataset(capsys, golden_classifier, golden):
    from nnfuzz.coverage import CoverageTracker, activation_profile
    from nnfuzz.inference import forward
    from nnfuzz.model_format import neuron_count

    tracker = CoverageTracker(neuron_count(golden_classifier), 0.25)
    for name in sorted(os.listdir(golden["dataset"])):
        if name.endswith(".tensor"):
            _, record = forward(
                golden_classifier,
                read_tensor(os.path.join(golden["dataset"], name)),
            )
            tracker.update(activation_profile(record, 0.25))
    expected = f"{tracker.nc_ratio() * 100:.2f}"

    code = run_cli("coverage", "--classifier", fixture_path("classifier.json"),
                   "--dataset", golden["dataset"])
    assert code == 0
    assert capsys.readouterr().out.strip() == expected


def test_coverage_empty_dataset_prints_zero(tmp_path, capsys):
    code = run_cli("coverage", "--classifier", fixture_path("classifier.json"),
                   "--dataset", str(tmp_path))
    assert code == 0
    assert capsys.readouterr().out.strip() == "0.00"


def test_coverage_crafted_thirty_percent(tmp_path, capsys):
    # dense layer with 10 units; exactly 3 rows respond to the lit pixel
    from engine_fixtures import dense_model

    kernel = np.full((10, 4), -1.0, dtype=np.float32)
    kernel[:3, 0] = 1.0
    model = dense_model(kernel, np.zeros(10, np.float32), input_shape=(2, 2, 1))
    save_model(model, tmp_path / "m.json", tmp_path / "m.bin")
    img = np.zeros((2, 2, 1), dtype=np.float32)
    img[0, 0, 0] = 1.0
    dataset = tmp_path / "data"
    dataset.mkdir()
    write_tensor(dataset / "img.tensor", img)

    code = run_cli("coverage", "--classifier", str(tmp_path / "m.json"),
                   "--dataset", str(dataset))
    assert code == 0
    assert capsys.readouterr().out.strip() == "30.00"


# ---------------------------------------------------------------------------
# mutate


def test_mutate_identity_writes_parent_copies(tmp_path, capsys):
    parent = np.random.default_rng(0).random((8, 8, 1), dtype=np.float32)
    write_tensor(tmp_path / "parent.tensor", parent)
    out = tmp_path / "out"
    code = run_cli("mutate", "--input", str(tmp_path / "parent.tensor"),
                   "--out", str(out),
                   "--gen-forward", fixture_path("gen_identity_fwd.json"),
                   "--gen-backward", fixture_path("gen_identity_bwd.json"),
                   "--per-parent", "4", "--noise-scale", "0")
    assert code == 0
    files = sorted(os.listdir(out))
    assert files == [f"cand-{i:03d}.tensor" for i in range(4)]
    for name in files:
        assert read_tensor(out / name).tobytes() == parent.tobytes()


def test_mutate_aeg_without_generators_errors(tmp_path, capsys):
    write_tensor(tmp_path / "p.tensor", np.zeros((4, 4, 1), np.float32))
    code = run_cli("mutate", "--input", str(tmp_path / "p.tensor"),
                   "--out", str(tmp_path / "out"))
    assert code == 1
    assert "gen-forward" in capsys.readouterr().err


def test_mutate_classical(tmp_path, capsys):
    write_tensor(tmp_path / "p.tensor",
                 np.random.default_rng(1).random((6, 6, 1), dtype=np.float32))
    out = tmp_path / "out"
    code = run_cli("mutate", "--input", str(tmp_path / "p.tensor"),
                   "--out", str(out), "--mutator", "classical",
                   "--per-parent", "6", "--seed", "3")
    assert code == 0
    assert len(os.listdir(out)) == 6
    for name in os.listdir(out):
        c = read_tensor(out / name)
        assert c.min() >= 0.0 and c.max() <= 1.0


# ---------------------------------------------------------------------------
# fuzz


@pytest.fixture
def small_campaign(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    report = tmp_path / "report.json"
    code = run_cli(
        "fuzz",
        "--classifier", fixture_path("classifier.json"),
        "--gen-forward", fixture_path("gen_identity_fwd.json"),
        "--gen-backward", fixture_path("gen_identity_bwd.json"),
        "--extractor", fixture_path("extractor.json"),
        "--dataset", fixture_path("dataset"),
        "--corpus", str(corpus),
        "--iterations", "12",
        "--report", str(report),
    )
    out = capsys.readouterr().out
    return code, out, report, corpus


def test_fuzz_summary_line(small_campaign):
    code, out, report, corpus = small_campaign
    assert code == 0
    assert re.search(
        r"final NC: \d+\.\d{2}% \| findings: \d+ \| pool size: \d+", out
    )
    assert os.path.exists(report)
    assert os.path.exists(corpus / "pool.json")


def test_fuzz_report_echoes_config(small_campaign):
    code, _, report, _ = small_campaign
    assert code == 0
    data = json.load(open(report))
    assert data["config"]["iterations"] == 12
    assert data["config"]["top_k"] == 5
    assert data["config"]["feedback"] == "parent_relative"
    assert data["iterations_run"] == 12


def test_fuzz_feedback_flag_spelling(tmp_path, capsys):
    code = run_cli(
        "fuzz",
        "--classifier", fixture_path("classifier.json"),
        "--gen-forward", fixture_path("gen_identity_fwd.json"),
        "--gen-backward", fixture_path("gen_identity_bwd.json"),
        "--extractor", fixture_path("extractor.json"),
        "--dataset", fixture_path("dataset"),
        "--corpus", str(tmp_path / "corpus"),
        "--iterations", "3",
        "--feedback", "global",
        "--report", str(tmp_path / "report.json"),
    )
    assert code == 0
    data = json.load(open(tmp_path / "report.json"))
    assert data["config"]["feedback"] == "global_cumulative"


def test_fuzz_engine_error_exits_one(tmp_path, capsys):
    code = run_cli(
        "fuzz",
        "--classifier", str(tmp_path / "missing.json"),
        "--gen-forward", fixture_path("gen_identity_fwd.json"),
        "--gen-backward", fixture_path("gen_identity_bwd.json"),
        "--extractor", fixture_path("extractor.json"),
        "--dataset", fixture_path("dataset"),
        "--corpus", str(tmp_path / "corpus"),
        "--iterations", "3",
        "--report", str(tmp_path / "report.json"),
    )
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_fuzz_abort_exits_three(tmp_path, capsys, monkeypatch):
    def exploding(config):
        raise CampaignAborted("lost the disk")

    monkeypatch.setattr(cli, "run_campaign", exploding)
    code = run_cli(
        "fuzz",
        "--classifier", fixture_path("classifier.json"),
        "--gen-forward", fixture_path("gen_identity_fwd.json"),
        "--gen-backward", fixture_path("gen_identity_bwd.json"),
        "--extractor", fixture_path("extractor.json"),
        "--dataset", fixture_path("dataset"),
        "--corpus", str(tmp_path / "corpus"),
        "--iterations", "3",
        "--report", str(tmp_path / "report.json"),
    )
    assert code == 3
    assert "lost the disk" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# report


def campaign_report(tmp_path):
    config = orch.CampaignConfig(
        classifier=fixture_path("classifier.json"),
        extractor=fixture_path("extractor.json"),
        dataset=fixture_path("dataset"),
        corpus=str(tmp_path / "corpus"),
        report=str(tmp_path / "report.json"),
        gen_forward=fixture_path("gen_identity_fwd.json"),
        gen_backward=fixture_path("gen_identity_bwd.json"),
        iterations=8,
    )
    orch.run_campaign(config)
    return config.report


def test_report_text_mode(tmp_path, capsys):
    report = campaign_report(tmp_path)
    capsys.readouterr()
    assert run_cli("report", "--report", report) == 0
    out = capsys.readouterr().out
    assert "iterations: 8" in out
    assert "final NC:" in out
    assert re.search(r"findings: \d+ \(\d+ duplicates suppressed\)", out)
    assert "INCOMPLETE" not in out


def test_report_csv_mode(tmp_path, capsys):
    report = campaign_report(tmp_path)
    capsys.readouterr()
    assert run_cli("report", "--report", report, "--format", "csv") == 0
    rows = [r for r in capsys.readouterr().out.splitlines() if r.strip()]
    assert rows[0] == "iteration,nc_ratio,kept,findings"
    assert len(rows) == 1 + 8
    first = rows[1].split(",")
    assert first[0] == "1"
    assert 0.0 <= float(first[1]) <= 1.0


def test_report_corrupt_json_names_offset(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"iterations_run": 3, oops')
    assert run_cli("report", "--report", str(bad)) == 1
    err = capsys.readouterr().err
    assert "byte" in err
    assert re.search(r"byte \d+", err)


def test_report_missing_file(tmp_path, capsys):
    assert run_cli("report", "--report", str(tmp_path / "nope.json")) == 1


def test_log_env_var_accepted(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NNFUZZ_LOG", "debug")
    code = run_cli("coverage", "--classifier", fixture_path("classifier.json"),
                   "--dataset", str(tmp_path))
    assert code == 0
