"""Configuration dataclasses and the paper/toy presets.

All default hyperparameters live here so the full-scale preset and the
desk-scale toy preset can be reviewed side by side.  Configs are plain
dataclasses convertible to/from nested dicts, which is also the on-disk
format (YAML, one document, key-value tree).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from .errors import ConfigurationError

EMBED_DIM = 128

VF = "vf"
FV = "fv"


@dataclass
class AudioConfig:
    sample_rate: int = 16000
    duration_s: float = 6.0
    rms_reference: float = 0.01

    @property
    def n_samples(self) -> int:
        return int(round(self.sample_rate * self.duration_s))


@dataclass
class ImageConfig:
    resolution: int = 128
    augment_flip: bool = True


@dataclass
class SpeechEncoderConfig:
    n_filters: int = 64
    sinc_kernel_size: int = 251
    sinc_stride: int = 1
    # Waveforms arrive RMS-normalized to 0.01; the gain rescales them to
    # unit RMS so batch-norm statistics sit at a healthy scale.
    input_gain: float = 100.0
    min_low_hz: float = 30.0
    min_band_hz: float = 50.0
    block_channels: tuple[int, ...] = (64, 128, 128, 256, 256, 512, 512)
    block_kernels: tuple[int, ...] = (20, 11, 11, 11, 11, 11, 11)
    block_strides: tuple[int, ...] = (10, 2, 1, 2, 1, 2, 2)
    embed_dim: int = EMBED_DIM


@dataclass
class FaceEncoderConfig:
    resolution: int = 128
    # One entry per downsampling stage (the first is the stem block).
    # resolution / 2**len(channels) must equal 4: the trunk always ends
    # on a 4x4 map before global sum pooling.
    channels: tuple[int, ...] = (64, 128, 256, 512, 1024)
    final_block: bool = True
    embed_dim: int = EMBED_DIM


@dataclass
class GeneratorConfig:
    resolution: int = 128
    # One entry per upsampling stage, starting from the 4x4 seed.
    channels: tuple[int, ...] = (1024, 512, 256, 128, 64)
    z_dim: int = EMBED_DIM
    cond_dim: int = EMBED_DIM
    seed_channels: int = 1024


@dataclass
class InferenceTrainConfig:
    mode: str = VF
    k: int = 10
    batch_size: Optional[int] = None  # resolved per mode: V-F 32, F-V 12
    lr_init: float = 0.001
    momentum: float = 0.9
    weight_decay: float = 5e-4
    decay_factor: float = 10.0
    patience_epochs: int = 1
    max_decays: int = 3
    max_epochs: int = 200
    batches_per_epoch: int = 100
    val_fraction: float = 0.1
    test_fraction: float = 0.2
    n_val_examples: int = 200

    def resolved_batch_size(self) -> int:
        if self.batch_size is not None:
            return self.batch_size
        return 32 if self.mode == VF else 12

    def validate(self) -> None:
        if self.mode not in (VF, FV):
            raise ConfigurationError(f"mode must be '{VF}' or '{FV}', got {self.mode!r}")
        if self.k < 2:
            raise ConfigurationError("k must be >= 2")
        for name in ("lr_init", "momentum", "weight_decay", "decay_factor"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be positive")


@dataclass
class GanTrainConfig:
    lr_g: float = 1e-4
    lr_d: float = 5e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.9
    batch_size: int = 24
    d_steps_per_g: int = 2
    r1_gamma: float = 10.0
    r1_interval: int = 1  # 1 = eager (every D step); >1 = lazy, penalty scaled by interval
    max_iters: int = 500_000
    use_mismatched_identity_loss: bool = True
    transfer_encoders: bool = True
    freeze_speech_encoder: bool = True
    finetune_face_trunk: bool = True
    log_every: int = 10
    sample_every: int = 500
    checkpoint_every: int = 0  # 0 = only final

    def validate(self) -> None:
        if self.d_steps_per_g < 1:
            raise ConfigurationError("d_steps_per_g must be >= 1")
        if self.r1_interval < 1:
            raise ConfigurationError("r1_interval must be >= 1")
        for name in ("lr_g", "lr_d", "batch_size", "r1_gamma"):
            if getattr(self, name) <= 0 and name != "r1_gamma":
                raise ConfigurationError(f"{name} must be positive")


@dataclass
class ToyDataConfig:
    n_identities: int = 20
    clips_per_identity: int = 5
    frames_per_clip: int = 4
    # Clip audio files are longer than the training window so several
    # distinct time slots exist within each clip.
    file_duration_factor: float = 2.0


@dataclass
class RunConfig:
    preset: str = "paper"
    seed: int = 0
    output_dir: Optional[str] = None
    audio: AudioConfig = field(default_factory=AudioConfig)
    image: ImageConfig = field(default_factory=ImageConfig)
    speech_encoder: SpeechEncoderConfig = field(default_factory=SpeechEncoderConfig)
    face_encoder: FaceEncoderConfig = field(default_factory=FaceEncoderConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    inference: InferenceTrainConfig = field(default_factory=InferenceTrainConfig)
    gan: GanTrainConfig = field(default_factory=GanTrainConfig)
    toy_data: ToyDataConfig = field(default_factory=ToyDataConfig)

    def validate(self) -> None:
        self.inference.validate()
        self.gan.validate()
        for cfg in (self.face_encoder,):
            res, n_stages = cfg.resolution, len(cfg.channels)
            if res != 4 * 2**n_stages:
                raise ConfigurationError(
                    f"face encoder: resolution {res} needs {res.bit_length() - 3} "
                    f"downsampling stages, got {n_stages} channel entries"
                )
        gen = self.generator
        if gen.resolution != 4 * 2 ** len(gen.channels):
            raise ConfigurationError(
                f"generator: resolution {gen.resolution} does not match "
                f"{len(gen.channels)} upsampling stages"
            )
        if self.image.resolution != self.face_encoder.resolution:
            raise ConfigurationError("image resolution != face encoder resolution")
        if self.image.resolution != self.generator.resolution:
            raise ConfigurationError("image resolution != generator resolution")


def paper_preset() -> RunConfig:
    """Full-scale defaults: 6 s / 16 kHz audio, 128x128 faces."""
    return RunConfig(preset="paper")


def toy_preset() -> RunConfig:
    """Desk-scale defaults: 1 s audio, 32x32 faces, small networks.

    Channel widths here are this repository's choices for CPU-only runs,
    not values carried over from the full-scale configuration.
    """
    return RunConfig(
        preset="toy",
        audio=AudioConfig(sample_rate=16000, duration_s=1.0, rms_reference=0.01),
        image=ImageConfig(resolution=32, augment_flip=True),
        speech_encoder=SpeechEncoderConfig(
            n_filters=16,
            sinc_kernel_size=65,
            sinc_stride=4,
            min_low_hz=30.0,
            min_band_hz=50.0,
            block_channels=(32, 64, 128, 128),
            block_kernels=(9, 9, 9, 9),
            block_strides=(4, 2, 2, 2),
        ),
        face_encoder=FaceEncoderConfig(resolution=32, channels=(16, 32, 64), final_block=False),
        generator=GeneratorConfig(resolution=32, channels=(128, 64, 32), seed_channels=128),
        inference=InferenceTrainConfig(
            batch_size=16,
            batches_per_epoch=24,
            max_epochs=60,
            n_val_examples=150,
        ),
        gan=GanTrainConfig(
            batch_size=12,
            max_iters=600,
            sample_every=200,
            log_every=10,
        ),
    )


_PRESETS = {"paper": paper_preset, "toy": toy_preset}


def preset_config(name: str) -> RunConfig:
    try:
        return _PRESETS[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; choose from {sorted(_PRESETS)}"
        ) from None


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    return dataclasses.asdict(cfg)


def _build(cls, data: dict[str, Any]):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigurationError(f"unknown config key {key!r} for {cls.__name__}")
        ftype = fields[key].type
        if dataclasses.is_dataclass(_SECTION_TYPES.get(key)) and isinstance(value, dict):
            kwargs[key] = _build(_SECTION_TYPES[key], value)
        elif isinstance(value, list) and "tuple" in str(ftype):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


_SECTION_TYPES = {
    "audio": AudioConfig,
    "image": ImageConfig,
    "speech_encoder": SpeechEncoderConfig,
    "face_encoder": FaceEncoderConfig,
    "generator": GeneratorConfig,
    "inference": InferenceTrainConfig,
    "gan": GanTrainConfig,
    "toy_data": ToyDataConfig,
}


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    base = preset_config(data.get("preset", "paper"))
    return merge_config(base, data)


def merge_config(base: RunConfig, overrides: dict[str, Any]) -> RunConfig:
    """Apply a (possibly partial) nested dict of overrides onto a config."""
    merged = config_to_dict(base)
    _deep_update(merged, overrides)
    return _build(RunConfig, merged)


def _deep_update(dst: dict[str, Any], src: dict[str, Any]) -> None:
    for key, value in src.items():
        if isinstance(value, dict) and isinstance(dst.get(key), dict):
            _deep_update(dst[key], value)
        else:
            dst[key] = value


def load_config_file(path: str) -> dict[str, Any]:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config file {path} is not valid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must contain a mapping")
    return data


def save_config_file(cfg: RunConfig, path: str) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
