import numpy as np
import pytest

from kronmc import load_matrix_csv
from kronmc.cli import UsageError, main, parse_args, parse_config


def test_parse_args_sweep_invocation():
    inv = parse_args(["sweep", "--config", "c.cfg", "--out", "r.csv"])
    assert inv.subcommand == "sweep"
    assert inv.options.config == "c.cfg"
    assert inv.options.out == "r.csv"


def test_parse_args_missing_required_flag():
    with pytest.raises(UsageError, match="--config"):
        parse_args(["sweep", "--out", "r.csv"])


def test_parse_args_bad_seed_names_flag():
    with pytest.raises(UsageError, match="--seed"):
        parse_args(["synth", "--out", "x", "--seed", "abc"])


def test_parse_args_requires_subcommand():
    with pytest.raises(UsageError, match="subcommand"):
        parse_args([])


def test_parse_args_unknown_flag():
    with pytest.raises(UsageError, match="--bogus"):
        parse_args(["synth", "--out", "x", "--bogus", "1"])


def test_main_maps_usage_error_to_exit_1(capsys):
    assert main(["sweep"]) == 1
    assert "error" in capsys.readouterr().err


def test_parse_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nn = 10\nmethod=kkmcex\n\nmu = 1e-3,1\n")
    parsed = parse_config(cfg)
    assert parsed == {"n": "10", "method": "kkmcex", "mu": "1e-3,1"}


@pytest.fixture
def synth_dataset(tmp_path):
    cfg = tmp_path / "synth.cfg"
    cfg.write_text("n = 10\nl = 10\ngraph_p = 0.3\n")
    out = tmp_path / "data"
    status = main(["synth", "--config", str(cfg), "--out", str(out), "--seed", "4"])
    assert status == 0
    return tmp_path, out


def test_synth_fit_verify_end_to_end(synth_dataset, capsys):
    tmp_path, out = synth_dataset
    for suffix in (".f.csv", ".kx.csv", ".ky.csv"):
        path = out.parent / (out.name + suffix)
        assert path.exists() and path.stat().st_size > 0

    fit_cfg = tmp_path / "fit.cfg"
    fit_cfg.write_text(
        f"f = {out}.f.csv\nkx = {out}.kx.csv\nky = {out}.ky.csv\n")
    pred_out = tmp_path / "run"
    status = main(["fit", "--config", str(fit_cfg), "--out", str(pred_out),
                   "--method", "kkmcex", "--mu", "1e-8", "--ps", "100",
                   "--seed", "1"])
    assert status == 0
    pred = load_matrix_csv(f"{pred_out}.pred.csv")
    truth = load_matrix_csv(f"{out}.f.csv")
    assert np.linalg.norm(pred - truth) / np.linalg.norm(truth) <= 1e-5
    assert (tmp_path / "run.model.csv").stat().st_size > 0

    status = main(["verify", "--seed", "0", "--out", str(tmp_path / "report.csv")])
    assert status == 0
    report = (tmp_path / "report.csv").read_text().splitlines()
    assert report[0] == "instance,bias_sq,variance,empirical_mse,bound,margin"
    assert len(report) > 1
    assert "verify: PASS" in capsys.readouterr().out


def test_fit_rejects_nonpositive_mu(synth_dataset, capsys):
    tmp_path, out = synth_dataset
    fit_cfg = tmp_path / "fit.cfg"
    fit_cfg.write_text(
        f"f = {out}.f.csv\nkx = {out}.kx.csv\nky = {out}.ky.csv\n")
    status = main(["fit", "--config", str(fit_cfg), "--out", str(tmp_path / "x"),
                   "--method", "kkmcex", "--mu", "0"])
    assert status == 1
    assert "--mu" in capsys.readouterr().err


def test_synth_outputs_are_byte_identical(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n = 8\nl = 8\ngraph_p = 0.3\n")
    for name in ("a", "b"):
        assert main(["synth", "--config", str(cfg), "--out",
                     str(tmp_path / name), "--seed", "7"]) == 0
    for suffix in (".f.csv", ".kx.csv", ".ky.csv"):
        a = (tmp_path / ("a" + suffix)).read_bytes()
        b = (tmp_path / ("b" + suffix)).read_bytes()
        assert a == b


def test_sweep_csv_deterministic_modulo_seconds(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("synth = 1\nn = 10\nl = 10\ngraph_p = 0.3\n"
                   "method = kkmcex\nps = 20,50\nrealizations = 2\nmu = 1e-6\n")
    outs = []
    for name in ("r1.csv", "r2.csv"):
        assert main(["sweep", "--config", str(cfg), "--out",
                     str(tmp_path / name), "--seed", "3"]) == 0
        lines = (tmp_path / name).read_text().splitlines()
        masked = [",".join(f for k, f in enumerate(line.split(",")) if k != 4)
                  for line in lines]
        outs.append(masked)
    assert outs[0] == outs[1]
    assert len(outs[0]) == 1 + 4


def test_gridsearch_cli(tmp_path):
    cfg = tmp_path / "gs.cfg"
    cfg.write_text("synth = 1\nn = 10\nl = 10\ngraph_p = 0.3\n"
                   "method = kkmcex\nps = 50\nmu = 1e-8,1.0,1e6\nsnr = 1\n")
    out = tmp_path / "best.csv"
    assert main(["gridsearch", "--config", str(cfg), "--out", str(out),
                 "--seed", "2"]) == 0
    header, row = out.read_text().strip().splitlines()
    assert header == "mu,eta"
    a = out.read_bytes()
    assert main(["gridsearch", "--config", str(cfg), "--out", str(out),
                 "--seed", "2"]) == 0
    assert out.read_bytes() == a


def test_online_cli_trace(tmp_path):
    cfg = tmp_path / "online.cfg"
    cfg.write_text("synth = 1\nn = 8\nl = 8\ngraph_p = 0.3\n"
                   "method = orrmcex\nps = 50\nmu = 1e-6\ndim = 16\n"
                   "step_rule = decay\nstep_c = 1.0\nstep_n0 = 20\n")
    out = tmp_path / "trace.csv"
    assert main(["online", "--config", str(cfg), "--out", str(out),
                 "--epochs", "3", "--stride", "16", "--seed", "1"]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "iteration,seconds,nmse"
    assert len(lines) == 1 + 3 * 32 // 16


def test_cli_writes_only_declared_outputs(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n = 6\nl = 6\ngraph_p = 0.3\n")
    before = set(p.name for p in tmp_path.iterdir())
    assert main(["synth", "--config", str(cfg), "--out", "ds", "--seed", "0"]) == 0
    after = set(p.name for p in tmp_path.iterdir())
    assert after - before == {"ds.f.csv", "ds.kx.csv", "ds.ky.csv"}
