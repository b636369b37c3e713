"""Command-line pipeline: data generation, training, reconstruction,
method comparison, and latency benchmarking.

Every flag may also come from a ``--config`` file of key=value lines (keys
are the flag names with dashes or underscores); explicit flags win over the
file, the file wins over built-in defaults.  Unknown config keys are
rejected.  The default seed is ``$ALIASNET_SEED`` (0 when unset).

Exit codes: 0 success, 1 computational failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines, kspace, metrics, phantom, sdae, tensorio

_REQUIRED = object()
_SEED_DEFAULT = object()


def _seed_fallback() -> int:
    return int(os.environ.get("ALIASNET_SEED", "0"))


class _Opt:
    def __init__(self, kind, default, help):
        self.kind = kind
        self.default = default
        self.help = help


_COMMON = {
    "config": _Opt(str, None, "key=value file supplying any flag of this command"),
    "seed": _Opt(int, _SEED_DEFAULT, "RNG seed (default: $ALIASNET_SEED or 0)"),
}

_ISTA_OPTS = {
    "lam": _Opt(float, 0.01, "l1 weight for the diff-cs solver"),
    "max_iters": _Opt(int, 50, "diff-cs iteration budget"),
    "tol": _Opt(float, 1e-6, "diff-cs relative objective-change stop"),
    "step": _Opt(float, 1.0, "diff-cs gradient step size in (0, 1]"),
}

_OPTIONS: dict[str, dict[str, _Opt]] = {
    "gen-data": {
        **_COMMON,
        "n": _Opt(int, 32, "image side length"),
        "frames": _Opt(int, 64, "frames per sequence"),
        "sequences": _Opt(int, 8, "training sequences (one extra is held out for testing)"),
        "period": _Opt(int, 16, "frames per motion cycle"),
        "motion_amp": _Opt(float, 0.15, "motion amplitude in [0, 0.3]"),
        "mask": _Opt(str, "radial:24", "mask spec: radial:L | uniform:F | vd:FRACTION:DECAY"),
        "noise_sigma": _Opt(float, 0.01, "k-space noise std per real component"),
        "out_dir": _Opt(str, _REQUIRED, "output directory"),
    },
    "train": {
        **_COMMON,
        "data": _Opt(str, _REQUIRED, "directory produced by gen-data"),
        "depth": _Opt(int, 3, "hidden layers (1..4)"),
        "out": _Opt(str, _REQUIRED, "model file to write"),
        "epochs": _Opt(int, 200, "epochs per layer"),
        "learning_rate": _Opt(float, 0.01, "gradient step size"),
        "momentum": _Opt(float, 0.9, "momentum coefficient"),
        "batch_size": _Opt(int, 64, "mini-batch size"),
        "lambda_sparse": _Opt(float, 0.001, "sparsity weight on the deepest layer"),
        "smooth_eps": _Opt(float, 1e-8, "l1 smoothing epsilon"),
        "val_fraction": _Opt(float, 0.1, "validation split fraction"),
    },
    "reconstruct": {
        **_COMMON,
        **_ISTA_OPTS,
        "model": _Opt(str, None, "model file (required for --method sdae)"),
        "kspace": _Opt(str, _REQUIRED, "complex k-space tensor, one or more frames"),
        "mask": _Opt(str, _REQUIRED, "mask tensor file"),
        "method": _Opt(str, "sdae", "zero_filled | diff_cs | sdae"),
        "out": _Opt(str, _REQUIRED, "reconstructed image tensor to write"),
        "traces": _Opt(str, None, "CSV of per-iteration objectives (diff_cs only)"),
    },
    "compare": {
        **_COMMON,
        **_ISTA_OPTS,
        "model": _Opt(str, _REQUIRED, "trained model file"),
        "data": _Opt(str, _REQUIRED, "directory produced by gen-data"),
        "out_dir": _Opt(str, _REQUIRED, "output directory for CSVs and images"),
        "dataset": _Opt(str, "synthetic", "dataset label for the CSV tables"),
        "save_images": _Opt(int, 3, "how many frames get PGM recon/difference images"),
    },
    "benchmark": {
        **_COMMON,
        **_ISTA_OPTS,
        "model": _Opt(str, _REQUIRED, "trained model file"),
        "data": _Opt(str, _REQUIRED, "directory produced by gen-data"),
        "frames": _Opt(int, 0, "frame budget (0 = all)"),
        "warmup": _Opt(int, 1, "untimed warmup passes"),
        "reps": _Opt(int, 3, "timed passes"),
        "acquisition_rate": _Opt(float, 7.0, "fps threshold the sdae must beat"),
        "out": _Opt(str, _REQUIRED, "latency CSV to write"),
    },
    "mask-preview": {
        **_COMMON,
        "mask": _Opt(str, _REQUIRED, "mask spec: radial:L | uniform:F | vd:FRACTION:DECAY"),
        "n": _Opt(int, 100, "image side length"),
        "out": _Opt(str, None, "PGM preview to write (centered layout)"),
    },
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aliasnet",
        description="Undersampled dynamic-MRI simulation and autoencoder reconstruction",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for command, table in _OPTIONS.items():
        sub = subs.add_parser(command, help=None)
        for dest, opt in table.items():
            sub.add_argument(
                "--" + dest.replace("_", "-"),
                dest=dest, type=opt.kind, default=None, help=opt.help,
            )
    return parser


def _resolve(command: str, args: argparse.Namespace) -> dict:
    table = _OPTIONS[command]
    from_file: dict[str, str] = {}
    if args.config is not None:
        raw = tensorio.read_metadata(args.config)
        for key, value in raw.items():
            dest = key.replace("-", "_")
            if dest not in table or dest == "config":
                raise ValueError(f"unknown config key {key!r} for command {command}")
            from_file[dest] = value
    resolved = {}
    for dest, opt in table.items():
        if dest == "config":
            continue
        value = getattr(args, dest)
        if value is None and dest in from_file:
            value = opt.kind(from_file[dest])
        if value is None:
            value = opt.default
        if value is _SEED_DEFAULT:
            value = _seed_fallback()
        if value is _REQUIRED:
            raise ValueError(f"missing required option --{dest.replace('_', '-')}")
        resolved[dest] = value
    return resolved


def _parse_mask_spec(spec: str, n: int, seed) -> kspace.SamplingMask:
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "radial" and len(parts) == 2:
            return kspace.mask_radial(n, int(parts[1]), seed=seed)
        if kind == "uniform" and len(parts) == 2:
            return kspace.mask_uniform(n, int(parts[1]))
        if kind == "vd" and len(parts) == 3:
            return kspace.mask_variable_density(n, float(parts[1]), float(parts[2]), seed=seed)
    except ValueError as exc:
        raise ValueError(f"invalid mask spec {spec!r}: {exc}") from exc
    raise ValueError(f"invalid mask spec {spec!r}; "
                     "expected radial:LINES, uniform:FACTOR, or vd:FRACTION:DECAY")


def _fmt(value: float) -> str:
    return format(value, ".12g")


def _ista_config(cfg: dict) -> baselines.IstaConfig:
    return baselines.IstaConfig(
        lam=cfg["lam"], max_iters=cfg["max_iters"], tol=cfg["tol"], step=cfg["step"],
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen_data(cfg: dict) -> int:
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    n, seed = cfg["n"], cfg["seed"]
    mask = _parse_mask_spec(cfg["mask"], n, seed)

    suite = phantom.phantom_suite(
        n, cfg["sequences"] + 1, cfg["frames"],
        period=cfg["period"], motion_amp=cfg["motion_amp"], seed=seed,
    )
    train_seqs, test_seq = suite[:-1], suite[-1]
    training = phantom.build_training_set(
        train_seqs, mask, noise_sigma=cfg["noise_sigma"], seed=seed, mask_id=cfg["mask"],
    )

    acq_rng = np.random.default_rng(seed)
    test_frames = np.stack([
        kspace.acquire(frame, mask, noise_sigma=cfg["noise_sigma"],
                       seed=int(s))
        for frame, s in zip(test_seq.frames, acq_rng.integers(0, 2**63, size=len(test_seq)))
    ])

    kspace.save_mask(out_dir / "mask.mrt", mask)
    tensorio.save_tensor(out_dir / "train_inputs.mrt", training.inputs)
    tensorio.save_tensor(out_dir / "train_targets.mrt", training.targets)
    tensorio.save_tensor(out_dir / "test_sequence.mrt", test_seq.frames)
    tensorio.save_tensor(out_dir / "test_kspace.mrt", test_frames)
    tensorio.write_metadata(out_dir / "meta.txt", {
        "n": n,
        "frames": cfg["frames"],
        "period": cfg["period"],
        "mask": "mask.mrt",  # relative to this directory
        "mask_spec": cfg["mask"],
        "noise_sigma": _fmt(cfg["noise_sigma"]),
        "seed": seed,
        "sequences": cfg["sequences"],
        "motion_amp": _fmt(cfg["motion_amp"]),
    })
    print(f"wrote {out_dir}/mask.mrt (fraction {mask.fraction:.4f}) and "
          f"{training.inputs.shape[1]} training pairs")
    return 0


def cmd_train(cfg: dict) -> int:
    data_dir = Path(cfg["data"])
    meta = tensorio.read_metadata(data_dir / "meta.txt")
    n = int(meta["n"])
    inputs = tensorio.load_tensor(data_dir / "train_inputs.mrt")
    targets = tensorio.load_tensor(data_dir / "train_targets.mrt")
    dims = sdae.architecture_dims(n, cfg["depth"])
    if inputs.shape[0] != dims[0]:
        raise ValueError(
            f"training data has {inputs.shape[0]} rows but n={n} implies {dims[0]}"
        )
    config = sdae.TrainConfig(
        learning_rate=cfg["learning_rate"], momentum=cfg["momentum"],
        epochs=cfg["epochs"], batch_size=cfg["batch_size"],
        lambda_sparse=cfg["lambda_sparse"], smooth_eps=cfg["smooth_eps"],
        seed=cfg["seed"],
    )
    model, reports = sdae.stack_train(
        (inputs, targets), dims, config, val_fraction=cfg["val_fraction"],
    )
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    sdae.save_model(out, model)
    for level, report in enumerate(reports, start=1):
        sdae.write_train_report(out.with_name(out.stem + f"_layer{level}.csv"), report)
    print(f"wrote {out} (dims {dims}); final layer cost {_fmt(reports[-1].train_cost[-1])}")
    return 0


def _load_kspace_frames(path) -> np.ndarray:
    frames = tensorio.load_tensor(path, as_complex=True)
    if frames.ndim == 2:
        frames = frames[None]
    if frames.ndim != 3:
        raise ValueError(f"{path}: expected (T, n, n) or (n, n) k-space data, got {frames.shape}")
    return frames


def cmd_reconstruct(cfg: dict) -> int:
    frames = _load_kspace_frames(cfg["kspace"])
    mask = kspace.load_mask(cfg["mask"])
    model = None
    if cfg["method"] == "sdae":
        if cfg["model"] is None:
            raise ValueError("--method sdae needs --model")
        model = sdae.load_model(cfg["model"])
        if model.dims[0] != mask.n * mask.n:
            raise ValueError(
                f"model expects {model.dims[0]} pixels but mask side {mask.n} implies {mask.n**2}"
            )
    estimates = baselines.online_reconstruct(
        frames, mask, cfg["method"], config=_ista_config(cfg), model=model,
    )
    tensorio.save_tensor(cfg["out"], np.stack([e.image for e in estimates]))
    if cfg["traces"] is not None:
        with open(cfg["traces"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame", "iter", "objective"])
            for t, est in enumerate(estimates):
                for it, value in enumerate(est.objective_trace):
                    writer.writerow([t, it, _fmt(value)])
    print(f"wrote {cfg['out']} ({len(estimates)} frames, method {cfg['method']})")
    return 0


def cmd_compare(cfg: dict) -> int:
    data_dir = Path(cfg["data"])
    truth = tensorio.load_tensor(data_dir / "test_sequence.mrt")
    frames = _load_kspace_frames(data_dir / "test_kspace.mrt")
    mask = kspace.load_mask(data_dir / "mask.mrt")
    model = sdae.load_model(cfg["model"])
    if model.dims[0] != mask.n * mask.n:
        raise ValueError(
            f"model expects {model.dims[0]} pixels but images have {mask.n**2}"
        )
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    total = frames.shape[0]
    image_slots = sorted(set(np.linspace(0, total - 1, min(cfg["save_images"], total), dtype=int)))
    rows = []
    summary = []
    for method in baselines.METHODS:
        estimates = baselines.online_reconstruct(
            frames, mask, method, config=_ista_config(cfg), model=model,
        )
        scores = [metrics.quality(est.image, ref) for est, ref in zip(estimates, truth)]
        for t, (est, score) in enumerate(zip(estimates, scores)):
            rows.append([cfg["dataset"], method, t, _fmt(score.nmse), _fmt(score.ssim),
                         _fmt(est.latency_s)])
        nmses = np.array([s.nmse for s in scores])
        ssims = np.array([s.ssim for s in scores])
        lats = np.array([e.latency_s for e in estimates])
        summary.append([cfg["dataset"], method,
                        _fmt(nmses.mean()), _fmt(nmses.std()),
                        _fmt(ssims.mean()), _fmt(ssims.std()),
                        _fmt(lats.mean()), _fmt(lats.std())])
        for t in image_slots:
            tensorio.write_pgm(out_dir / f"recon_{method}_f{t:03d}.pgm", estimates[t].image)
            diff = np.clip(10.0 * np.abs(estimates[t].image - truth[t]), 0.0, 1.0)
            tensorio.write_pgm(out_dir / f"diff_{method}_f{t:03d}.pgm", diff)

    with open(out_dir / "frames.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "method", "frame", "nmse", "ssim", "latency_s"])
        writer.writerows(rows)
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "method", "nmse_mean", "nmse_std",
                         "ssim_mean", "ssim_std", "latency_mean_s", "latency_std_s"])
        writer.writerows(summary)
    for line in summary:
        print(f"{line[1]}: nmse {line[2]} +- {line[3]}, ssim {line[4]} +- {line[5]}")
    return 0


def cmd_benchmark(cfg: dict) -> int:
    data_dir = Path(cfg["data"])
    frames = _load_kspace_frames(data_dir / "test_kspace.mrt")
    mask = kspace.load_mask(data_dir / "mask.mrt")
    model = sdae.load_model(cfg["model"])
    if cfg["frames"]:
        frames = frames[: cfg["frames"]]
    ista = _ista_config(cfg)

    closures = {
        "zero_filled": lambda y: kspace.zero_filled(y, mask),
        "diff_cs": lambda y: baselines.differential_cs(
            y, kspace.zero_filled(y, mask), mask, ista).image,
        "sdae": lambda y: sdae.reconstruct(model, kspace.zero_filled(y, mask)),
    }
    reports = {}
    for method, fn in closures.items():
        reports[method] = metrics.benchmark_latency(
            fn, list(frames), warmup=cfg["warmup"], reps=cfg["reps"],
        )
        print(f"{method}: {reports[method].fps:.1f} fps "
              f"({reports[method].mean_s * 1e3:.2f} ms/frame)")

    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "frames", "reps", "mean_s", "std_s", "fps"])
        for method, rep in reports.items():
            writer.writerow([method, frames.shape[0], cfg["reps"],
                             _fmt(rep.mean_s), _fmt(rep.std_s), _fmt(rep.fps)])
    verdict = "PASS" if reports["sdae"].fps > cfg["acquisition_rate"] else "FAIL"
    print(f"sdae vs acquisition rate {cfg['acquisition_rate']:.1f} fps: {verdict}")
    return 0


def cmd_mask_preview(cfg: dict) -> int:
    mask = _parse_mask_spec(cfg["mask"], cfg["n"], cfg["seed"])
    print(f"mask {cfg['mask']} at n={cfg['n']}: fraction {mask.fraction:.6f} "
          f"({int(mask.keep.sum())} of {mask.n ** 2} samples)")
    if cfg["out"] is not None:
        tensorio.write_pgm(cfg["out"], np.fft.fftshift(mask.keep).astype(np.float64))
        print(f"wrote {cfg['out']}")
    return 0


_HANDLERS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "reconstruct": cmd_reconstruct,
    "compare": cmd_compare,
    "benchmark": cmd_benchmark,
    "mask-preview": cmd_mask_preview,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args.command, args)
        return _HANDLERS[args.command](cfg)
    except (sdae.TrainingError, baselines.SolverError, metrics.NondeterminismError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
