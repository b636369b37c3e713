import csv

import numpy as np
import pytest

from aliasnet import kspace, tensorio
from aliasnet.cli import main


def run(argv):
    return main([str(a) for a in argv])


def gen_args(out_dir, n=16, frames=8, sequences=2, seed=3, mask="radial:8"):
    return ["gen-data", "--n", n, "--frames", frames, "--sequences", sequences,
            "--period", 4, "--mask", mask, "--noise-sigma", 0.01,
            "--seed", seed, "--out-dir", out_dir]


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "data"
    assert run(gen_args(path, frames=16, sequences=4)) == 0
    return path


@pytest.fixture(scope="module")
def model_path(tmp_path_factory, data_dir):
    path = tmp_path_factory.mktemp("cli") / "model.sdae"
    assert run(["train", "--data", data_dir, "--depth", 1, "--epochs", 150,
                "--batch-size", 16, "--out", path]) == 0
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_gen_data_is_byte_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert run(gen_args(tmp_path / sub)) == 0
    for name in ("mask.mrt", "train_inputs.mrt", "train_targets.mrt",
                 "test_sequence.mrt", "test_kspace.mrt", "meta.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_gen_data_rejects_non_divisor_uniform(tmp_path, capsys):
    code = run(gen_args(tmp_path / "x", n=32, mask="uniform:3"))
    assert code == 2
    assert "32" in capsys.readouterr().err


def test_gen_data_vd_mask_fraction_matches_bit_count(tmp_path):
    out = tmp_path / "vd"
    assert run(gen_args(out, n=32, mask="vd:0.25:6")) == 0
    mask = kspace.load_mask(out / "mask.mrt")
    assert mask.fraction == mask.keep.sum() / mask.keep.size


def test_train_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "nowhere"
    code = run(["train", "--data", missing, "--depth", 1, "--out", tmp_path / "m.sdae"])
    assert code == 2
    assert "nowhere" in capsys.readouterr().err


def test_train_depth1_descends(data_dir, tmp_path):
    out = tmp_path / "m1.sdae"
    assert run(["train", "--data", data_dir, "--depth", 1, "--epochs", 10,
                "--batch-size", 16, "--out", out]) == 0
    rows = read_csv(out.with_name("m1_layer1.csv"))
    assert rows[0] == ["epoch", "train_cost", "val_cost"]
    costs = [float(r[1]) for r in rows[1:]]
    assert costs[-1] < costs[0]


def test_train_divergence_exits_one(data_dir, tmp_path, capsys):
    code = run(["train", "--data", data_dir, "--depth", 1, "--epochs", 40,
                "--batch-size", 16, "--learning-rate", 1e8,
                "--out", tmp_path / "m.sdae"])
    assert code == 1
    assert "diverged" in capsys.readouterr().err


def test_compare_outputs(model_path, data_dir, tmp_path):
    out = tmp_path / "cmp"
    assert run(["compare", "--model", model_path, "--data", data_dir,
                "--out-dir", out, "--save-images", 2]) == 0
    summary = read_csv(out / "summary.csv")
    assert summary[0] == ["dataset", "method", "nmse_mean", "nmse_std",
                          "ssim_mean", "ssim_std", "latency_mean_s", "latency_std_s"]
    by_method = {row[1]: row for row in summary[1:]}
    assert set(by_method) == {"zero_filled", "diff_cs", "sdae"}
    # trained model beats the zero-filled adjoint on the synthetic benchmark
    assert float(by_method["sdae"][2]) < float(by_method["zero_filled"][2])
    frames = read_csv(out / "frames.csv")
    assert frames[0] == ["dataset", "method", "frame", "nmse", "ssim", "latency_s"]
    assert len(frames) - 1 == 3 * 16
    pgms = sorted(p.name for p in out.glob("*.pgm"))
    assert "recon_sdae_f000.pgm" in pgms and "diff_zero_filled_f015.pgm" in pgms
    # difference images are valid 8-bit PGMs (clipped to [0, 1] before quantizing)
    data = (out / "diff_sdae_f000.pgm").read_bytes()
    assert data.startswith(b"P5\n16 16\n255\n")


def test_benchmark_csv_round_trip(model_path, data_dir, tmp_path, capsys):
    out = tmp_path / "latency.csv"
    assert run(["benchmark", "--model", model_path, "--data", data_dir,
                "--frames", 4, "--reps", 2, "--acquisition-rate", 7.0,
                "--out", out]) == 0
    printed = capsys.readouterr().out
    assert "PASS" in printed or "FAIL" in printed
    rows = read_csv(out)
    assert rows[0] == ["method", "frames", "reps", "mean_s", "std_s", "fps"]
    by_method = {r[0]: r for r in rows[1:]}
    # printed fps lines match the CSV numbers (1 decimal place in the print)
    for method, row in by_method.items():
        assert f"{method}: {float(row[5]):.1f} fps" in printed
    # relative speed on the default demo setup
    assert float(by_method["sdae"][5]) > float(by_method["diff_cs"][5])


def test_reconstruct_zero_filled_and_traces(model_path, data_dir, tmp_path):
    out = tmp_path / "recon.mrt"
    traces = tmp_path / "traces.csv"
    assert run(["reconstruct", "--kspace", data_dir / "test_kspace.mrt",
                "--mask", data_dir / "mask.mrt", "--method", "diff_cs",
                "--max-iters", 5, "--out", out, "--traces", traces]) == 0
    images = tensorio.load_tensor(out)
    assert images.shape == (16, 16, 16)
    rows = read_csv(traces)
    assert rows[0] == ["frame", "iter", "objective"]
    # objectives are non-increasing within each frame
    per_frame = {}
    for frame, it, obj in rows[1:]:
        per_frame.setdefault(int(frame), []).append(float(obj))
    assert all(np.all(np.diff(v) <= 1e-12) for v in per_frame.values())


def test_reconstruct_sdae_requires_model(data_dir, tmp_path):
    code = run(["reconstruct", "--kspace", data_dir / "test_kspace.mrt",
                "--mask", data_dir / "mask.mrt", "--method", "sdae",
                "--out", tmp_path / "r.mrt"])
    assert code == 2


def test_mask_preview_prints_fraction(tmp_path, capsys):
    out = tmp_path / "m.pgm"
    assert run(["mask-preview", "--mask", "uniform:4", "--n", 16, "--out", out]) == 0
    printed = capsys.readouterr().out
    assert "fraction 0.25" in printed
    assert out.read_bytes().startswith(b"P5\n16 16\n255\n")


def test_config_file_supplies_and_cli_overrides(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("n=16\nframes=8\nsequences=2\nperiod=4\nmask=radial:8\n"
                      "noise-sigma=0.01\nseed=3\n")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run(["gen-data", "--config", config, "--out-dir", out_a]) == 0
    assert run(gen_args(out_b)) == 0
    assert (out_a / "meta.txt").read_bytes() == (out_b / "meta.txt").read_bytes()
    # explicit flag wins over the file
    out_c = tmp_path / "c"
    assert run(["gen-data", "--config", config, "--seed", 4, "--out-dir", out_c]) == 0
    assert tensorio.read_metadata(out_c / "meta.txt")["seed"] == "4"


def test_config_rejects_unknown_key(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("bogus=1\n")
    assert run(["gen-data", "--config", config, "--out-dir", tmp_path / "x"]) == 2
    assert "bogus" in capsys.readouterr().err


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("ALIASNET_SEED", "77")
    out = tmp_path / "env"
    assert run(["gen-data", "--n", "16", "--frames", "4", "--sequences", "1",
                "--period", "2", "--mask", "radial:8", "--out-dir", out]) == 0
    assert tensorio.read_metadata(out / "meta.txt")["seed"] == "77"


def test_missing_required_option(capsys):
    assert run(["train", "--depth", 1, "--out", "x.sdae"]) == 2
    assert "--data" in capsys.readouterr().err
