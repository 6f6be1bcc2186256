import json

from mixsel.cli import main
from mixsel.dataset import load_csv


def test_train_help(capsys):
    assert main(["train", "--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_unknown_subcommand(capsys):
    assert main(["fly"]) != 0
    assert "usage" in capsys.readouterr().err


def test_unknown_flag(capsys):
    assert main(["train", "--wings"]) != 0


def test_gen_data_long_tail(tmp_path, capsys):
    out = tmp_path / "lt.csv"
    assert main(["gen-data", "--blobs", "m=4", "d=3", "per-class=50", "seed=2",
                 "--longtail", "rho=10", "n-max=50", "--out", str(out)]) == 0
    assert load_csv(out).class_counts.tolist() == [50, 23, 11, 5]


def test_gen_data_grid(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["gen-data", "--blobs", "m=3", "h=2", "w=2", "ch=1", "per-class=4", "--out", str(out)]) == 0
    assert load_csv(out).grid == (2, 2, 1)


def test_gen_data_bad_key(tmp_path, capsys):
    assert main(["gen-data", "--blobs", "m=3", "d=2", "per-class=2", "colour=red",
                 "--out", str(tmp_path / "x.csv")]) == 2
    assert "colour" in capsys.readouterr().err


def test_smoke_end_to_end(tmp_path, capsys):
    data = tmp_path / "blobs.csv"
    run = tmp_path / "run"
    assert main(["gen-data", "--blobs", "m=10", "d=16", "per-class=200", "seed=1", "--out", str(data)]) == 0
    assert main(["train", "--data", str(data), "--epochs", "5", "--out", str(run)]) == 0
    for name in ("config.echo.json", "epochs.csv", "selection_trace.jsonl", "model.ckpt",
                 "plot_class_accuracy.csv", "plot_selected_classes.csv"):
        assert (run / name).exists()
    capsys.readouterr()

    assert main(["eval", "--ckpt", str(run / "model.ckpt"), "--data", str(data)]) == 0
    report = json.loads(capsys.readouterr().out)
    last = (run / "epochs.csv").read_text().splitlines()[-1].split(",")
    assert report["accuracy"] == float(last[2])
    assert 0 <= report["calibration"]["ece"] <= 1

    assert main(["inspect-log", str(run)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["records"] == 50

    assert main(["export-plot-data", str(run), "--k", "1", "--out", str(tmp_path / "plots")]) == 0
    assert (tmp_path / "plots" / "plot_selected_classes.csv").exists()


def test_train_from_config_with_overrides(tmp_path):
    run = tmp_path / "a"
    assert main(["train", "--blobs", "m=3", "d=4", "per-class=20", "--epochs", "2", "--hidden", "4",
                 "--n-min", "1", "--delta", "1", "--no-selection", "--out", str(run)]) == 0
    echo = json.loads((run / "config.echo.json").read_text())
    assert echo["train"]["selection_enabled"] is False
    run2 = tmp_path / "b"
    assert main(["train", "--config", str(run / "config.echo.json"), "--out", str(run2)]) == 0
    assert (run / "epochs.csv").read_bytes() == (run2 / "epochs.csv").read_bytes()


def test_train_without_source_fails(tmp_path, capsys):
    assert main(["train", "--out", str(tmp_path / "x")]) == 2


def test_train_abort_maps_to_exit_code_2(monkeypatch, capsys):
    import mixsel.cli as cli
    from mixsel.harness import TrainingAborted

    def boom(cfg):
        raise TrainingAborted("non-finite loss at epoch 1")

    monkeypatch.setattr(cli, "run_training", boom)
    assert cli.main(["train", "--blobs", "m=3", "d=4", "per-class=5", "--out", "unused"]) == 2
    assert "non-finite" in capsys.readouterr().err
