"""Single entry point for dataset synthesis, both training stages,
generation, interpolation, and all evaluations.

Configuration layers, lowest to highest precedence: preset defaults,
--config file (YAML tree), V2F_-prefixed environment variables, and
command-line flags.  Every run echoes its fully resolved config to the
output directory.  Exit codes: 0 success, 2 usage/configuration,
3 data, 4 checkpoint mismatch.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import os
import sys
from datetime import datetime, timezone

import click
import numpy as np

from .config import (
    RunConfig,
    config_to_dict,
    load_config_file,
    merge_config,
    preset_config,
    save_config_file,
)
from .errors import (
    CheckpointError,
    ConfigurationError,
    InsufficientDataError,
    InvalidInputError,
    InvalidQueryError,
    Voice2FaceError,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CHECKPOINT = 4


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigurationError as exc:
            _fail(exc, EXIT_CONFIG)
        except CheckpointError as exc:
            _fail(exc, EXIT_CHECKPOINT)
        except (InvalidInputError, InsufficientDataError, InvalidQueryError) as exc:
            _fail(exc, EXIT_DATA)
        except Voice2FaceError as exc:
            _fail(exc, EXIT_DATA)

    return wrapper


def _fail(exc: Exception, code: int) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def common_options(fn):
    fn = click.option("--preset", type=click.Choice(["paper", "toy"]), default=None,
                      help="Configuration preset (default: paper, or the config file's).")(fn)
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="YAML config file merged over the preset.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Random seed.")(fn)
    fn = click.option("--output-dir", type=click.Path(), default=None,
                      help="Output directory (default: timestamped under ./runs).")(fn)
    fn = click.option("--force", is_flag=True, help="Allow writing into a non-empty directory.")(fn)
    return fn


def resolve_config(
    preset: str | None,
    config_path: str | None,
    seed: int | None,
    overrides: dict | None = None,
    default_preset: str = "paper",
) -> RunConfig:
    file_data = load_config_file(config_path) if config_path else {}
    preset_name = preset or file_data.get("preset") or default_preset
    cfg = preset_config(preset_name)
    file_overrides = {k: v for k, v in file_data.items() if k != "preset"}
    if file_overrides:
        cfg = merge_config(cfg, file_overrides)
    if overrides:
        cfg = merge_config(cfg, _prune(overrides))
    if seed is not None:
        cfg.seed = seed
    cfg.preset = preset_name
    cfg.validate()
    return cfg


def _prune(tree: dict) -> dict:
    out = {}
    for key, value in tree.items():
        if isinstance(value, dict):
            sub = _prune(value)
            if sub:
                out[key] = sub
        elif value is not None:
            out[key] = value
    return out


def prepare_output_dir(flag: str | None, cfg: RunConfig, command: str, force: bool) -> str:
    path = flag or cfg.output_dir
    if path is None:
        stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
        path = os.path.join("runs", f"{command}-{stamp}")
    if os.path.isdir(path) and os.listdir(path) and not force:
        raise ConfigurationError(
            f"output directory {path!r} exists and is not empty (use --force to proceed)"
        )
    os.makedirs(path, exist_ok=True)
    return path


def echo_config(cfg: RunConfig, out_dir: str) -> None:
    # output_dir is run-specific provenance; the echoed config should
    # reproduce results wherever it is replayed.
    save_config_file(dataclasses.replace(cfg, output_dir=None),
                     os.path.join(out_dir, "resolved_config.yaml"))


def _require_file(path: str | None, what: str) -> str:
    if path is None:
        raise ConfigurationError(f"missing required {what}")
    if not os.path.exists(path):
        raise ConfigurationError(f"{what} not found: {path}")
    return path


def _load_dataset(manifest: str, cfg: RunConfig, splits: str | None, split: str | None):
    from .data.manifest import ClipDataset

    dataset = ClipDataset.from_manifest(manifest, cfg.audio, cfg.image)
    if splits or split:
        if not (splits and split):
            raise ConfigurationError("--splits and --split must be given together")
        with open(_require_file(splits, "splits file")) as fh:
            split_ids = json.load(fh)
        if split not in split_ids:
            raise ConfigurationError(f"split {split!r} not in {sorted(split_ids)}")
        wanted = set(split_ids[split])
        dataset = dataset.subset([r for r in dataset.records if r.clip_id in wanted])
    return dataset


def _write_json(out_dir: str, name: str, payload: dict) -> str:
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


@click.group()
def cli() -> None:
    """Cross-modal voice/face matching and speech-conditioned generation."""


@cli.command("synth-data")
@click.option("--identities", type=int, default=None, help="Number of identities.")
@click.option("--clips", type=int, default=None, help="Clips per identity.")
@click.option("--frames", type=int, default=None, help="Frames per clip.")
@click.option("--image-size", type=int, default=48, help="Stored PNG resolution.")
@common_options
@cli_errors
def cmd_synth_data(identities, clips, frames, image_size, preset, config_path, seed, output_dir, force):
    """Synthesize the toy paired-modality dataset."""
    from .data.toydata import synthesize_toy_dataset

    overrides = {"toy_data": {"n_identities": identities, "clips_per_identity": clips,
                              "frames_per_clip": frames}}
    cfg = resolve_config(preset, config_path, seed, overrides, default_preset="toy")
    out_dir = prepare_output_dir(output_dir, cfg, "synth-data", force)
    echo_config(cfg, out_dir)
    records = synthesize_toy_dataset(
        out_dir,
        n_identities=cfg.toy_data.n_identities,
        clips_per_identity=cfg.toy_data.clips_per_identity,
        seed=cfg.seed,
        audio_config=cfg.audio,
        toy_config=cfg.toy_data,
        image_size=image_size,
    )
    click.echo(f"wrote {len(records)} clips to {os.path.join(out_dir, 'manifest.jsonl')}")


@cli.command("import-data")
@click.option("--csv", "csv_path", type=click.Path(), required=True, help="CSV manifest to import.")
@click.option("--out", "out_path", type=click.Path(), required=True, help="JSONL manifest to write.")
@cli_errors
def cmd_import_data(csv_path, out_path):
    """Convert a CSV manifest to the JSON-lines format."""
    from .data.manifest import import_csv_manifest, save_manifest

    records = import_csv_manifest(_require_file(csv_path, "CSV manifest"))
    save_manifest(records, out_path)
    click.echo(f"wrote {len(records)} clips to {out_path}")


@cli.command("train-inference")
@click.option("--manifest", type=click.Path(), required=True, help="Dataset manifest (JSONL).")
@click.option("--mode", type=click.Choice(["vf", "fv"]), default=None)
@click.option("--k", type=int, default=None, help="K-way setting for training.")
@click.option("--batch-size", type=int, default=None)
@click.option("--lr", type=float, default=None, help="Initial learning rate.")
@click.option("--max-epochs", type=int, default=None)
@click.option("--batches-per-epoch", type=int, default=None)
@click.option("--resume", is_flag=True, help="Resume from the run's last checkpoint.")
@common_options
@cli_errors
def cmd_train_inference(manifest, mode, k, batch_size, lr, max_epochs, batches_per_epoch,
                        resume, preset, config_path, seed, output_dir, force):
    """Train the speech/face encoders with K-way matching."""
    from .matching_train import train_inference

    overrides = {"inference": {"mode": mode, "k": k, "batch_size": batch_size,
                               "lr_init": lr, "max_epochs": max_epochs,
                               "batches_per_epoch": batches_per_epoch}}
    cfg = resolve_config(preset, config_path, seed, overrides)
    out_dir = prepare_output_dir(output_dir, cfg, "train-inference", force or resume)
    echo_config(cfg, out_dir)
    dataset = _load_dataset(_require_file(manifest, "manifest"), cfg, None, None)
    result = train_inference(cfg, dataset, out_dir, resume=resume)
    final = result.history[-1]
    click.echo(
        f"finished after {len(result.history)} epochs ({result.stopped_reason}); "
        f"val_acc={final.val_acc:.3f}; checkpoint: {result.checkpoint_path}"
    )


@cli.command("eval-matching")
@click.option("--manifest", type=click.Path(), required=True)
@click.option("--checkpoint", type=click.Path(), required=True, help="Inference checkpoint.")
@click.option("--mode", type=click.Choice(["vf", "fv"]), default="vf")
@click.option("--k", type=int, default=10)
@click.option("--repeats", type=int, default=5)
@click.option("--n-examples", type=int, default=None)
@click.option("--splits", type=click.Path(), default=None, help="splits.json from a training run.")
@click.option("--split", type=str, default=None, help="Which split to evaluate (e.g. test).")
@common_options
@cli_errors
def cmd_eval_matching(manifest, checkpoint, mode, k, repeats, n_examples, splits, split,
                      preset, config_path, seed, output_dir, force):
    """Evaluate matching accuracy with resampled negatives."""
    from .matching_train import evaluate_matching, load_inference_encoders
    from .seeding import derive_rngs

    cfg = resolve_config(preset, config_path, seed)
    out_dir = prepare_output_dir(output_dir, cfg, "eval-matching", force)
    echo_config(cfg, out_dir)
    dataset = _load_dataset(_require_file(manifest, "manifest"), cfg, splits, split)
    speech, face = load_inference_encoders(_require_file(checkpoint, "checkpoint"))
    report = evaluate_matching(
        speech, face, dataset, k=k, mode=mode,
        rng=derive_rngs(cfg.seed)["eval"], n_repeats=repeats, n_examples=n_examples,
    )
    path = _write_json(out_dir, "matching_eval.json", report.to_dict())
    click.echo(f"{mode} {k}-way accuracy {report.mean_acc:.3f} +/- {report.std_acc:.3f} ({path})")


@cli.command("train-gan")
@click.option("--manifest", type=click.Path(), required=True)
@click.option("--encoder-checkpoint", type=click.Path(), default=None,
              help="Inference checkpoint to transfer encoders from.")
@click.option("--mismatched-identity-loss/--no-mismatched-identity-loss", default=None,
              help="Include the matched-minus-mismatched condition terms (default on).")
@click.option("--transfer/--no-transfer", "transfer", default=None,
              help="Transfer trained encoders (disable for the from-scratch ablation).")
@click.option("--max-iters", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--r1-gamma", type=float, default=None)
@click.option("--r1-interval", type=int, default=None)
@click.option("--d-steps", type=int, default=None, help="Discriminator steps per generator step.")
@common_options
@cli_errors
def cmd_train_gan(manifest, encoder_checkpoint, mismatched_identity_loss, transfer, max_iters,
                  batch_size, r1_gamma, r1_interval, d_steps,
                  preset, config_path, seed, output_dir, force):
    """Train the conditional generator and discriminator."""
    from .gan.training import train_gan

    overrides = {"gan": {"use_mismatched_identity_loss": mismatched_identity_loss,
                         "transfer_encoders": transfer, "max_iters": max_iters,
                         "batch_size": batch_size, "r1_gamma": r1_gamma,
                         "r1_interval": r1_interval, "d_steps_per_g": d_steps}}
    cfg = resolve_config(preset, config_path, seed, overrides)
    out_dir = prepare_output_dir(output_dir, cfg, "train-gan", force)
    echo_config(cfg, out_dir)
    dataset = _load_dataset(_require_file(manifest, "manifest"), cfg, None, None)
    if cfg.gan.transfer_encoders:
        _require_file(encoder_checkpoint, "encoder checkpoint (or pass --no-transfer)")
    result = train_gan(cfg, dataset, out_dir, encoder_checkpoint=encoder_checkpoint)
    click.echo(f"trained {result.iters_run} iterations; checkpoint: {result.checkpoint_path}")


def _truncation_value(truncation: float | None) -> float | None:
    if truncation is not None and truncation <= 0:
        return None  # non-positive disables the truncation trick
    return truncation


@cli.command("generate")
@click.option("--checkpoint", type=click.Path(), required=True, help="GAN checkpoint.")
@click.option("--speech", type=click.Path(), required=True, help="WAV file to condition on.")
@click.option("--n", type=int, default=8, help="Number of images (fresh latent each).")
@click.option("--truncation", type=float, default=1.0,
              help="Truncation threshold; <= 0 disables.")
@common_options
@cli_errors
def cmd_generate(checkpoint, speech, n, truncation, preset, config_path, seed, output_dir, force):
    """Generate face images from one speech segment."""
    from .data.audio import load_wav, preprocess_audio
    from .data.images import save_png
    from .gan.latent import sample_latent, truncate_latent
    from .gan.training import load_gan_checkpoint
    from .seeding import derive_rngs

    cfg = resolve_config(preset, config_path, seed)
    out_dir = prepare_output_dir(output_dir, cfg, "generate", force)
    echo_config(cfg, out_dir)
    generator, _, speech_encoder = load_gan_checkpoint(_require_file(checkpoint, "checkpoint"))
    rngs = derive_rngs(cfg.seed)
    raw, rate = load_wav(_require_file(speech, "speech file"))
    wave = preprocess_audio(raw, rate, cfg.audio, rngs["data"])
    c = speech_encoder.embed_numpy(wave)
    truncation = _truncation_value(truncation)
    z = sample_latent(rngs["latent"], n, generator.config.z_dim)
    if truncation is not None:
        z = truncate_latent(z, truncation, rngs["latent"])
    images = generator.generate_numpy(z, np.repeat(c, n, axis=0))
    files = []
    for i in range(n):
        name = f"gen_{i:03d}.png"
        save_png(os.path.join(out_dir, name), images[i])
        files.append(name)
    _write_json(out_dir, "generate.json",
                {"n": n, "files": files, "truncation": truncation, "seed": cfg.seed})
    click.echo(f"wrote {n} images to {out_dir}")


@cli.command("interpolate")
@click.option("--checkpoint", type=click.Path(), required=True, help="GAN checkpoint.")
@click.option("--which", type=click.Choice(["condition", "latent"]), default="condition")
@click.option("--speech-a", type=click.Path(), required=True, help="First endpoint WAV.")
@click.option("--speech-b", type=click.Path(), default=None,
              help="Second endpoint WAV (condition sweeps).")
@click.option("--n-steps", type=int, default=8)
@common_options
@cli_errors
def cmd_interpolate(checkpoint, which, speech_a, speech_b, n_steps,
                    preset, config_path, seed, output_dir, force):
    """Render a row of images sweeping one latent between two endpoints."""
    from .data.audio import load_wav, preprocess_audio
    from .data.images import image_grid, save_png
    from .evaluation.interpolate import interpolate_grid
    from .gan.latent import sample_latent
    from .gan.training import load_gan_checkpoint
    from .seeding import derive_rngs

    cfg = resolve_config(preset, config_path, seed)
    out_dir = prepare_output_dir(output_dir, cfg, "interpolate", force)
    echo_config(cfg, out_dir)
    generator, _, speech_encoder = load_gan_checkpoint(_require_file(checkpoint, "checkpoint"))
    rngs = derive_rngs(cfg.seed)

    def _condition(path: str) -> np.ndarray:
        raw, rate = load_wav(_require_file(path, "speech file"))
        return speech_encoder.embed_numpy(preprocess_audio(raw, rate, cfg.audio, rngs["data"]))[0]

    c_a = _condition(speech_a)
    if which == "condition":
        if speech_b is None:
            raise ConfigurationError("--speech-b is required for condition interpolation")
        endpoint_a, endpoint_b = c_a, _condition(speech_b)
        fixed = sample_latent(rngs["latent"], 1, generator.config.z_dim)[0]
    else:
        endpoint_a, endpoint_b = sample_latent(rngs["latent"], 2, generator.config.z_dim)
        fixed = c_a
    images = interpolate_grid(generator, endpoint_a, endpoint_b, which, fixed, n_steps)
    save_png(os.path.join(out_dir, "interpolation.png"), image_grid(images, n_cols=n_steps))
    _write_json(out_dir, "interpolate.json",
                {"which": which, "n_steps": n_steps, "file": "interpolation.png", "seed": cfg.seed})
    click.echo(f"wrote interpolation row to {out_dir}")


@cli.command("evaluate")
@click.argument("experiment",
                type=click.Choice(["qta1", "qta1-control", "qta2-vf", "qta2-fv", "qta3"]))
@click.option("--manifest", type=click.Path(), required=True, help="Evaluation dataset manifest.")
@click.option("--checkpoint", type=click.Path(), required=True, help="GAN checkpoint.")
@click.option("--inference-checkpoint", type=click.Path(), required=True,
              help="Inference checkpoint providing the judge encoders.")
@click.option("--other-checkpoint", type=click.Path(), default=None,
              help="Second GAN checkpoint (qta2-vf comparison).")
@click.option("--gallery", type=click.Path(), default=None,
              help="Gallery manifest for qta3 (defaults to --manifest).")
@click.option("--metric", "metrics", multiple=True, type=click.Choice(["l1", "l2", "cd"]),
              help="qta3 distance metrics (default: all three).")
@click.option("--n-pairs", type=int, default=500, help="qta1 / qta1-control pairs.")
@click.option("--n-items", type=int, default=None, help="qta2 items (default: one per clip).")
@click.option("--n-queries", type=int, default=None, help="qta3 queries (default: one per speaker).")
@click.option("--truncation", type=float, default=None,
              help="Truncation threshold; default off for qta1/qta2, 1.0 for qta3; <= 0 disables.")
@click.option("--splits", type=click.Path(), default=None, help="splits.json from a training run.")
@click.option("--split", type=str, default=None, help="Which split to evaluate (e.g. test).")
@common_options
@cli_errors
def cmd_evaluate(experiment, manifest, checkpoint, inference_checkpoint, other_checkpoint,
                 gallery, metrics, n_pairs, n_items, n_queries, truncation, splits, split,
                 preset, config_path, seed, output_dir, force):
    """Run one of the quantitative analyses and write its JSON report."""
    from .evaluation.qta import (
        VS_GROUND_TRUTH,
        VS_OTHER_GENERATOR,
        qta1_attribute_control,
        qta1_condition_correlation,
        qta2_fv_accuracy,
        qta2_vf_preference,
        qta3_retrieval,
    )
    from .gan.training import load_gan_checkpoint
    from .matching_train import load_inference_encoders
    from .seeding import derive_rngs

    cfg = resolve_config(preset, config_path, seed)
    out_dir = prepare_output_dir(output_dir, cfg, f"evaluate-{experiment}", force)
    echo_config(cfg, out_dir)
    dataset = _load_dataset(_require_file(manifest, "manifest"), cfg, splits, split)
    generator, _, gan_speech = load_gan_checkpoint(_require_file(checkpoint, "checkpoint"))
    _, judge_face = load_inference_encoders(_require_file(inference_checkpoint, "inference checkpoint"))
    rng = derive_rngs(cfg.seed)["eval"]
    if truncation is None:
        qta3_truncation = 1.0  # generation-time default; qta1/qta2 run untruncated
    else:
        qta3_truncation = _truncation_value(truncation)
    truncation = _truncation_value(truncation)

    if experiment == "qta1":
        report = qta1_condition_correlation(
            generator, judge_face, gan_speech, dataset, n_pairs, rng, truncation=truncation
        ).to_dict()
    elif experiment == "qta1-control":
        report = qta1_attribute_control(
            generator, judge_face, gan_speech, dataset, n_pairs, rng, truncation=truncation
        ).to_dict()
    elif experiment == "qta2-vf":
        other = None
        comparator = VS_GROUND_TRUTH
        if other_checkpoint is not None:
            other, _, _ = load_gan_checkpoint(_require_file(other_checkpoint, "other checkpoint"))
            comparator = VS_OTHER_GENERATOR
        report = qta2_vf_preference(
            generator, gan_speech, judge_face, dataset, comparator, rng,
            other_generator=other, n_items=n_items, truncation=truncation,
        ).to_dict()
    elif experiment == "qta2-fv":
        report = qta2_fv_accuracy(
            generator, gan_speech, judge_face, dataset, rng,
            n_items=n_items, truncation=truncation,
        ).to_dict()
    else:
        gallery_path = gallery or manifest
        gallery_ds = _load_dataset(_require_file(gallery_path, "gallery manifest"), cfg, None, None)
        reports = qta3_retrieval(
            generator, judge_face, gan_speech, gallery_ds, rng,
            metrics=tuple(metrics) or ("l1", "l2", "cd"),
            n_queries=n_queries,
            truncation=qta3_truncation,
        )
        report = {metric: rep.to_dict() for metric, rep in reports.items()}

    path = _write_json(out_dir, f"{experiment.replace('-', '_')}.json", report)
    click.echo(f"wrote {path}")


def main() -> None:
    cli(auto_envvar_prefix="V2F")


if __name__ == "__main__":
    main()
