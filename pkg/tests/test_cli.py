import shutil

import pytest

from volcast.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from volcast.config import load_config

TINY = """\
models = ["HAR", "CSR-A"]

[paths]
prices = "data/prices"
features = "data/features"
output = "out"
sectors = "data/sectors.csv"

[backtest]
estimation_window = 40
calibration_window = 20
seed = 1

[evaluation]
n_boot = 50

[synth]
n_stocks = 2
n_days = 110
session_minutes = 31
attention_coef = 0.15
seed = 1
"""


@pytest.fixture()
def tiny_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(TINY)
    return path


def test_help_and_usage_errors(tmp_path):
    assert main(["--help"]) == EXIT_OK
    assert main(["nope"]) == EXIT_USAGE
    assert main(["ingest"]) == EXIT_USAGE  # --config missing
    bad = tmp_path / "bad.toml"
    bad.write_text("[paths]\nprices = 'p'\n")
    assert main(["--config", str(bad), "ingest"]) == EXIT_USAGE


def test_missing_data_exit_code(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        'symbols = ["GONE"]\n[paths]\nprices = "p"\nfeatures = "f"\noutput = "o"\n'
    )
    (tmp_path / "p").mkdir()
    assert main(["--config", str(cfg), "ingest"]) == EXIT_DATA


def test_init_config_parses(tmp_path, capsys):
    assert main(["init-config"]) == EXIT_OK
    text = capsys.readouterr().out
    path = tmp_path / "default.toml"
    path.write_text(text)
    cfg = load_config(path)
    assert cfg.evaluation.n_boot == 2000


def test_synth_requires_section(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[paths]\nprices = "p"\nfeatures = "f"\noutput = "o"\n')
    assert main(["--config", str(cfg), "synth"]) == EXIT_USAGE


def test_pipeline_end_to_end(tiny_config, tmp_path):
    assert main(["--config", str(tiny_config), "pipeline"]) == EXIT_OK
    out = tmp_path / "out"
    for artifact in (
        "realized/SYN000.csv",
        "matrices/SYN000_h1.csv",
        "matrices/SYN000_h1.roles.json",
        "forecasts.csv",
        "audits.json",
        "report/losses.csv",
        "report/report.txt",
    ):
        assert (out / artifact).exists(), artifact
    report = (out / "report" / "report.txt").read_text()
    assert "benchmark: HAR" in report

    # reruns are byte-identical (fresh output tree, same seed)
    forecasts_1 = (out / "forecasts.csv").read_bytes()
    shutil.rmtree(out)
    shutil.rmtree(tmp_path / "data")
    assert main(["--config", str(tiny_config), "pipeline"]) == EXIT_OK
    assert (out / "forecasts.csv").read_bytes() == forecasts_1

    # seed override changes the synthetic data and forecasts
    shutil.rmtree(out)
    shutil.rmtree(tmp_path / "data")
    assert main(["--config", str(tiny_config), "--seed", "2", "pipeline"]) == EXIT_OK
    assert (out / "forecasts.csv").read_bytes() != forecasts_1
