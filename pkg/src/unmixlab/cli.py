"""Batch command-line front-end.

Subcommands: synth, train, unmix, eval, render, sweep-window, and ablate
(train without the discriminator). Every command is deterministic given
its config and seed; a manifest with content hashes of inputs and outputs
is written beside the results. Exit codes: 0 success, 2 usage or input
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import io
from .baselines import AdmmParams, fcls_unmix, sunsal_unmix
from .core import (
    ConfigError,
    NumericsError,
    UnmixError,
    extract_patch,
    mirror_pad,
    split_dataset,
)
from .gan import (
    Discriminator,
    DiscriminatorConfig,
    TrainConfig,
    TrainResult,
    infer_abundance,
    train,
)
from .metrics import evaluate
from .render import render_maps
from .synth import GbmParams, SlicParams, synthesize_dataset
from .transformer import PatchTransformer, TransformerConfig

BUNDLED_LIBRARY = "library198.csv"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, inputs: list[Path], outputs: list[Path]) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _load_json(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        loaded = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON: {e}") from e
    if not isinstance(loaded, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    return loaded


def _threads() -> int:
    raw = os.environ.get("UNMIX_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"UNMIX_THREADS must be an integer, got {raw!r}")


def _apply_config(args: argparse.Namespace, keys: tuple[str, ...]) -> None:
    """Fill flags the user left unset from the command's JSON config."""
    cfg = _load_json(getattr(args, "config", None))
    unknown = set(cfg) - set(keys)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in keys:
        if getattr(args, key, None) is None and key in cfg:
            setattr(args, key, cfg[key])


def _parse_gamma(raw, n_pairs: int) -> np.ndarray:
    if isinstance(raw, str):
        raw = [float(tok) for tok in raw.split(",")] if "," in raw else float(raw)
    if isinstance(raw, (int, float)):
        return np.full(n_pairs, float(raw))
    values = np.asarray(raw, dtype=np.float64)
    if values.size != n_pairs:
        raise ConfigError(f"gamma list has {values.size} entries, expected {n_pairs} pairs")
    return values


def _parse_snr(raw) -> float | None:
    if raw is None or (isinstance(raw, str) and raw.lower() == "none"):
        return None
    return float(raw)


def _bundled_library() -> Path:
    return Path(resources.files("unmixlab").joinpath("data", BUNDLED_LIBRARY))


def _out_dir(raw: str) -> Path:
    out = Path(raw)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args: argparse.Namespace) -> int:
    config = {
        "rows": 100,
        "cols": 100,
        "p_initial": 4,
        "slic": {"K": None, "q": 0.5, "iterations": 10},
        "gamma": 0.2,
        "snr_db": 20.0,
        "seed": 0,
        "endmember_csv": None,
        "blob_count": 3,
    }
    file_cfg = _load_json(args.config)
    slic_cfg = file_cfg.pop("slic", {})
    unknown = (set(file_cfg) - set(config)) | (set(slic_cfg) - set(config["slic"]))
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config["slic"].update(slic_cfg)
    config.update(file_cfg)
    for key in ("rows", "cols", "p_initial", "seed", "blob_count"):
        flag = getattr(args, key, None)
        if flag is not None:
            config[key] = flag
    if args.snr is not None:
        config["snr_db"] = args.snr
    if args.gamma is not None:
        config["gamma"] = args.gamma
    if args.endmember_csv is not None:
        config["endmember_csv"] = args.endmember_csv
    if args.k is not None:
        config["slic"]["K"] = args.k

    rows, cols, p_initial = int(config["rows"]), int(config["cols"]), int(config["p_initial"])
    k = config["slic"]["K"]
    slic = SlicParams(
        k=int(k) if k else max(1, rows * cols // 100),
        q=float(config["slic"]["q"]),
        iterations=int(config["slic"]["iterations"]),
    )
    p_final = 2 * p_initial
    gbm = GbmParams(p_final, _parse_gamma(config["gamma"], p_final * (p_final - 1) // 2))
    snr_db = _parse_snr(config["snr_db"])
    csv_path = Path(config["endmember_csv"]) if config["endmember_csv"] else _bundled_library()
    if not csv_path.exists():
        raise ConfigError(f"endmember CSV not found: {csv_path}")
    library, names = io.load_endmember_csv(csv_path)

    cube, truth, m, chosen = synthesize_dataset(
        rows,
        cols,
        p_initial,
        library,
        names,
        slic,
        gbm,
        snr_db,
        int(config["seed"]),
        blob_count=int(config["blob_count"]),
    )
    out = _out_dir(args.out)
    io.save_cube(out / "cube.hsic", cube)
    io.save_abundance(out / "abundance_true.hsic", truth)
    io.save_endmember_csv(out / "endmembers.csv", m, chosen)
    config["endmember_csv"] = str(csv_path)
    config["slic"]["K"] = slic.k
    outputs = [out / "cube.hsic", out / "abundance_true.hsic", out / "endmembers.csv"]
    _write_manifest(out, "synth", config, [csv_path], outputs)
    print(f"synth: wrote {rows}x{cols}x{cube.bands} cube and {truth.endmembers} abundance maps to {out}")
    return 0


def _train_configs(
    file_cfg: dict, args: argparse.Namespace, bands: int, default_p: int
) -> tuple[TrainConfig, TransformerConfig, DiscriminatorConfig]:
    """Defaults, overridden by the JSON config, overridden by CLI flags."""
    config = {
        "epochs": 100,
        "batch_size": 32,
        "lr": 2e-4,
        "beta1": 0.7,
        "beta2": 0.999,
        "lambda_cor": 10.0,
        "seed": 0,
        "s": 5,
        "labeled_fraction": 0.4,
        "use_discriminator": True,
        "heads": 0,
        "d_k": 64,
        "blocks": 6,
        "ffn_hidden": 0,
        "freeze_positions": False,
        "d_hidden": [64, 32],
        "p": default_p,
    }
    unknown = set(file_cfg) - set(config)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config.update(file_cfg)
    for key in (
        "epochs",
        "batch_size",
        "lr",
        "beta1",
        "beta2",
        "lambda_cor",
        "seed",
        "s",
        "labeled_fraction",
        "heads",
        "d_k",
        "blocks",
        "ffn_hidden",
        "p",
    ):
        flag = getattr(args, key, None)
        if flag is not None:
            config[key] = flag
    if getattr(args, "no_discriminator", False):
        config["use_discriminator"] = False
    if getattr(args, "d_hidden", None):
        config["d_hidden"] = [int(tok) for tok in args.d_hidden.split(",")]
    p = int(config["p"])
    tcfg = TrainConfig(
        epochs=int(config["epochs"]),
        batch_size=int(config["batch_size"]),
        lr=float(config["lr"]),
        beta1=float(config["beta1"]),
        beta2=float(config["beta2"]),
        lambda_cor=float(config["lambda_cor"]),
        seed=int(config["seed"]),
        s=int(config["s"]),
        labeled_fraction=float(config["labeled_fraction"]),
        use_discriminator=bool(config["use_discriminator"]),
    )
    gcfg = TransformerConfig(
        bands=bands,
        p=p,
        s=tcfg.s,
        heads=int(config["heads"]),
        d_k=int(config["d_k"]),
        blocks=int(config["blocks"]),
        ffn_hidden=int(config["ffn_hidden"]),
        freeze_positions=bool(config["freeze_positions"]),
    )
    dcfg = DiscriminatorConfig(p=p, hidden=tuple(int(h) for h in config["d_hidden"]))
    return tcfg, gcfg, dcfg


def save_checkpoint(path: str | Path, result: TrainResult) -> None:
    params = {f"g.{k}": v for k, v in result.generator.state_dict().items()}
    params.update({f"d.{k}": v for k, v in result.discriminator.state_dict().items()})
    extra = {
        "transformer": result.generator.config.to_dict(),
        "discriminator": result.discriminator.config.to_dict(),
        "train": result.train_config.to_dict(),
    }
    io.save_params(path, params, extra=extra)


def load_checkpoint(path: str | Path) -> tuple[PatchTransformer, Discriminator, TrainConfig]:
    params, extra = io.load_params(path)
    gcfg = TransformerConfig.from_dict(extra["transformer"])
    dcfg = DiscriminatorConfig.from_dict(extra["discriminator"])
    tcfg = TrainConfig.from_dict(extra["train"])
    generator = PatchTransformer(gcfg, seed=0)
    generator.load_state_dict({k[2:]: v for k, v in params.items() if k.startswith("g.")})
    discriminator = Discriminator(dcfg, seed=0)
    discriminator.load_state_dict({k[2:]: v for k, v in params.items() if k.startswith("d.")})
    return generator, discriminator, tcfg


def _load_dataset(args: argparse.Namespace) -> tuple[Path, Path]:
    if getattr(args, "dataset", None):
        base = Path(args.dataset)
        return base / "cube.hsic", base / "abundance_true.hsic"
    if not (getattr(args, "cube", None) and getattr(args, "labels", None)):
        raise ConfigError("need either --dataset DIR or both --cube and --labels")
    return Path(args.cube), Path(args.labels)


def cmd_train(args: argparse.Namespace) -> int:
    cube_path, labels_path = _load_dataset(args)
    for p in (cube_path, labels_path):
        if not p.exists():
            raise ConfigError(f"missing input file: {p}")
    cube = io.load_cube(cube_path)
    labels = io.load_abundance(labels_path)
    tcfg, gcfg, dcfg = _train_configs(_load_json(args.config), args, cube.bands, labels.endmembers)

    split = split_dataset(cube.n_pixels, tcfg.labeled_fraction, tcfg.seed)
    result = train(cube, labels, split, tcfg, gcfg, dcfg)

    out = _out_dir(args.out)
    ckpt = out / "checkpoint.params"
    save_checkpoint(ckpt, result)
    loss_csv = out / "loss_history.csv"
    io.save_loss_history(loss_csv, result.history)
    config = {"train": tcfg.to_dict(), "transformer": gcfg.to_dict(), "discriminator": dcfg.to_dict()}
    _write_manifest(out, "train", config, [cube_path, labels_path], [ckpt, loss_csv])
    final = result.history[-1] if result.history else (0, 0.0, 0.0, 0.0)
    print(
        f"train: {tcfg.epochs} epochs over {split.labeled.size} labeled pixels, "
        f"final g_loss {final[2]:.4g}, wrote {ckpt}"
    )
    return 0


def cmd_unmix(args: argparse.Namespace) -> int:
    _apply_config(
        args,
        ("cube", "checkpoint", "baseline", "endmembers", "lambda_sparse", "rho",
         "max_iters", "tol", "attention", "seed"),
    )
    if not args.cube:
        raise ConfigError("--cube is required")
    cube_path = Path(args.cube)
    if not cube_path.exists():
        raise ConfigError(f"missing cube file: {cube_path}")
    cube = io.load_cube(cube_path)
    out = _out_dir(args.out)
    outputs: list[Path] = []
    inputs: list[Path] = [cube_path]
    config: dict = {"cube": str(cube_path), "seed": args.seed}

    if args.baseline:
        if not args.endmembers:
            raise ConfigError("--baseline requires --endmembers CSV")
        lib_path = Path(args.endmembers)
        if not lib_path.exists():
            raise ConfigError(f"missing endmember CSV: {lib_path}")
        inputs.append(lib_path)
        library, _ = io.load_endmember_csv(lib_path)
        config["baseline"] = args.baseline
        if args.baseline == "fcls":
            est = fcls_unmix(cube, library)
            est_path = out / "abundance_est.hsic"
            io.save_abundance(est_path, est)
            outputs.append(est_path)
        else:
            tol = args.tol if args.tol is not None else 1e-6
            params = AdmmParams(
                lambda_sparse=args.lambda_sparse if args.lambda_sparse is not None else 1e-3,
                rho=args.rho if args.rho is not None else 1.0,
                max_iters=args.max_iters if args.max_iters is not None else 1000,
                tol_primal=tol,
                tol_dual=tol,
                sum_to_one=not args.no_sum_to_one,
            )
            config["admm"] = {
                "lambda_sparse": params.lambda_sparse,
                "rho": params.rho,
                "max_iters": params.max_iters,
                "tol": params.tol_primal,
                "sum_to_one": params.sum_to_one,
            }
            result = sunsal_unmix(cube, library, params)
            if not result.converged:
                print(
                    f"unmix: ADMM not converged after {result.iterations} iterations "
                    f"(residuals {result.residuals[-1]})",
                    file=sys.stderr,
                )
            est_path = out / "abundance_est.hsic"
            io.save_container(est_path, result.values, "abundance")
            outputs.append(est_path)
            diag_path = out / "admm_diagnostics.csv"
            with open(diag_path, "w") as f:
                f.write("pixel,primal,dual\n")
                for i, (r, s) in enumerate(result.pixel_residuals):
                    f.write(f"{i},{r:.9e},{s:.9e}\n")
            outputs.append(diag_path)
    else:
        if not args.checkpoint:
            raise ConfigError("need --checkpoint or --baseline")
        ckpt_path = Path(args.checkpoint)
        if not ckpt_path.exists():
            raise ConfigError(f"missing checkpoint: {ckpt_path}")
        inputs.append(ckpt_path)
        generator, _, _ = load_checkpoint(ckpt_path)
        config["checkpoint"] = str(ckpt_path)
        est = infer_abundance(cube, generator, threads=_threads())
        est_path = out / "abundance_est.hsic"
        io.save_abundance(est_path, est)
        outputs.append(est_path)
        if args.attention:
            try:
                r, c = (int(tok) for tok in args.attention.split(","))
            except ValueError:
                raise ConfigError(f"--attention expects 'row,col', got {args.attention!r}")
            s = generator.config.s
            half = (s - 1) // 2
            padded = mirror_pad(cube, half)
            patch = extract_patch(padded, r, c, s, margin=half)
            scores = generator.attention_scores_of_center(patch)  # (h, s, s)
            att_path = out / f"attention_r{r}_c{c}.hsic"
            io.save_container(att_path, np.moveaxis(scores, 0, 2), "attention")
            outputs.append(att_path)
            config["attention"] = [r, c]

    _write_manifest(out, "unmix", config, inputs, outputs)
    print(f"unmix: wrote {outputs[0]}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    _apply_config(args, ("est", "true", "cube", "endmembers", "gamma", "seed"))
    if not args.est:
        raise ConfigError("--est is required")
    est_path = Path(args.est)
    if not est_path.exists():
        raise ConfigError(f"missing estimate file: {est_path}")
    est = io.load_abundance(est_path)
    a_true = cube = m = None
    names = None
    inputs = [est_path]
    if args.true:
        p = Path(args.true)
        if not p.exists():
            raise ConfigError(f"missing ground truth file: {p}")
        a_true = io.load_abundance(p)
        inputs.append(p)
    if args.cube and args.endmembers:
        cube_p, lib_p = Path(args.cube), Path(args.endmembers)
        for q in (cube_p, lib_p):
            if not q.exists():
                raise ConfigError(f"missing file: {q}")
        cube = io.load_cube(cube_p)
        m, names = io.load_endmember_csv(lib_p)
        inputs.extend([cube_p, lib_p])
    if a_true is None and (cube is None or m is None):
        raise ConfigError("nothing to evaluate: need --true, or --cube with --endmembers")

    mixing = "linear"
    if args.gamma is not None and m is not None:
        n_pairs = m.endmembers * (m.endmembers - 1) // 2
        mixing = GbmParams(m.endmembers, _parse_gamma(args.gamma, n_pairs))
    report = evaluate(est, a_true=a_true, cube=cube, m=m, mixing=mixing, endmember_names=names)

    out = _out_dir(args.out)
    json_path = out / "report.json"
    json_path.write_text(report.to_json() + "\n")
    txt_path = out / "report.txt"
    txt_path.write_text(report.format_table() + "\n")
    _write_manifest(out, "eval", {"gamma": args.gamma}, inputs, [json_path, txt_path])
    print(report.format_table())
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    _apply_config(args, ("input", "stem", "seed"))
    if not args.input:
        raise ConfigError("--input is required")
    in_path = Path(args.input)
    if not in_path.exists():
        raise ConfigError(f"missing input container: {in_path}")
    values = io.load_container(in_path)
    out = _out_dir(args.out)
    stem = args.stem or in_path.stem
    written = render_maps(values, out, stem, png=not args.no_png)
    _write_manifest(out, "render", {"stem": stem, "png": not args.no_png}, [in_path], written)
    print(f"render: wrote {len(written)} images to {out}")
    return 0


def cmd_sweep_window(args: argparse.Namespace) -> int:
    cube_path, labels_path = _load_dataset(args)
    for p in (cube_path, labels_path):
        if not p.exists():
            raise ConfigError(f"missing input file: {p}")
    cube = io.load_cube(cube_path)
    labels = io.load_abundance(labels_path)
    sizes = [int(tok) for tok in args.sizes.split(",")]
    if any(s % 2 == 0 or s < 1 for s in sizes):
        raise ConfigError(f"window sizes must be odd and positive, got {sizes}")

    from .metrics import armse as _armse
    from .metrics import rms_aad as _rms_aad

    rows = []
    for s in sizes:
        file_cfg = _load_json(args.config)
        file_cfg["s"] = s
        size_args = argparse.Namespace(**vars(args))
        size_args.s = None  # the sweep owns the window size
        tcfg, gcfg, dcfg = _train_configs(file_cfg, size_args, cube.bands, labels.endmembers)
        split = split_dataset(cube.n_pixels, tcfg.labeled_fraction, tcfg.seed)
        result = train(cube, labels, split, tcfg, gcfg, dcfg)
        est = infer_abundance(cube, result.generator, threads=_threads())
        test = split.unlabeled
        rows.append(
            (
                s,
                _armse(labels.pixels()[test], est.pixels()[test]),
                _rms_aad(labels.pixels()[test], est.pixels()[test]),
            )
        )
        print(f"sweep: s={s} aRMSE={rows[-1][1]:.4e} rmsAAD={rows[-1][2]:.4e}")

    out = _out_dir(args.out)
    csv_path = out / "window_sweep.csv"
    with open(csv_path, "w") as f:
        f.write("size,armse,rms_aad\n")
        for s, a, d in rows:
            f.write(f"{s},{a:.9e},{d:.9e}\n")
    _write_manifest(out, "sweep-window", {"sizes": sizes}, [cube_path, labels_path], [csv_path])
    print(f"sweep: wrote {csv_path}")
    return 0


def _add_train_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--dataset", help="directory produced by synth")
    sub.add_argument("--cube", help="cube container (alternative to --dataset)")
    sub.add_argument("--labels", help="abundance container with training labels")
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--epochs", type=int)
    sub.add_argument("--batch-size", dest="batch_size", type=int)
    sub.add_argument("--lr", type=float)
    sub.add_argument("--beta1", type=float)
    sub.add_argument("--beta2", type=float)
    sub.add_argument("--lambda-cor", dest="lambda_cor", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--s", type=int, help="patch window side")
    sub.add_argument("--labeled-fraction", dest="labeled_fraction", type=float)
    sub.add_argument("--heads", type=int)
    sub.add_argument("--d-k", dest="d_k", type=int)
    sub.add_argument("--blocks", type=int)
    sub.add_argument("--ffn-hidden", dest="ffn_hidden", type=int)
    sub.add_argument("--d-hidden", dest="d_hidden", help="discriminator hidden widths, e.g. 64,32")
    sub.add_argument("--p", type=int, help="endmember count (default: label maps)")
    sub.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unmixlab", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p_synth = subs.add_parser("synth", help="synthesize a structured dataset")
    p_synth.add_argument("--config", help="JSON config file")
    p_synth.add_argument("--rows", type=int)
    p_synth.add_argument("--cols", type=int)
    p_synth.add_argument("--p-initial", dest="p_initial", type=int)
    p_synth.add_argument("--k", type=int, help="target superpixel count")
    p_synth.add_argument("--gamma", help="bilinear coefficient, scalar or comma list")
    p_synth.add_argument("--snr", help="target SNR in dB, or 'none'")
    p_synth.add_argument("--seed", type=int)
    p_synth.add_argument("--blob-count", dest="blob_count", type=int)
    p_synth.add_argument("--endmember-csv", dest="endmember_csv")
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synth)

    p_train = subs.add_parser("train", help="adversarially train the generator")
    _add_train_flags(p_train)
    p_train.add_argument("--no-discriminator", dest="no_discriminator", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_ablate = subs.add_parser("ablate", help="train without the discriminator")
    _add_train_flags(p_ablate)
    p_ablate.set_defaults(func=cmd_train, no_discriminator=True)

    p_unmix = subs.add_parser("unmix", help="estimate abundances for a cube")
    p_unmix.add_argument("--config", help="JSON config file")
    p_unmix.add_argument("--cube")
    p_unmix.add_argument("--checkpoint")
    p_unmix.add_argument("--baseline", choices=("fcls", "sunsal"))
    p_unmix.add_argument("--endmembers", help="endmember CSV for baselines")
    p_unmix.add_argument("--lambda-sparse", dest="lambda_sparse", type=float)
    p_unmix.add_argument("--rho", type=float)
    p_unmix.add_argument("--max-iters", dest="max_iters", type=int)
    p_unmix.add_argument("--tol", type=float)
    p_unmix.add_argument("--no-sum-to-one", dest="no_sum_to_one", action="store_true")
    p_unmix.add_argument("--attention", help="emit center attention maps for pixel 'row,col'")
    p_unmix.add_argument("--seed", type=int)
    p_unmix.add_argument("--out", required=True)
    p_unmix.set_defaults(func=cmd_unmix)

    p_eval = subs.add_parser("eval", help="compute evaluation metrics")
    p_eval.add_argument("--config", help="JSON config file")
    p_eval.add_argument("--est")
    p_eval.add_argument("--true", dest="true")
    p_eval.add_argument("--cube")
    p_eval.add_argument("--endmembers")
    p_eval.add_argument("--gamma", help="reconstruction mixing coefficient(s); default linear")
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_render = subs.add_parser("render", help="write grayscale maps as PGM/PNG")
    p_render.add_argument("--config", help="JSON config file")
    p_render.add_argument("--input")
    p_render.add_argument("--stem")
    p_render.add_argument("--no-png", dest="no_png", action="store_true")
    p_render.add_argument("--seed", type=int)
    p_render.add_argument("--out", required=True)
    p_render.set_defaults(func=cmd_render)

    p_sweep = subs.add_parser("sweep-window", help="train and evaluate per window size")
    _add_train_flags(p_sweep)
    p_sweep.add_argument("--sizes", default="3,5,7,9")
    p_sweep.add_argument("--no-discriminator", dest="no_discriminator", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep_window)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericsError as e:
        print(f"error (numerical): {e}", file=sys.stderr)
        return 3
    except (UnmixError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
