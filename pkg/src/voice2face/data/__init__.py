from .audio import AudioWaveform, preprocess_audio, load_wav, save_wav
from .images import FaceImage, preprocess_image, load_png, save_png
from .manifest import ClipRecord, ClipDataset, load_manifest, save_manifest, import_csv_manifest, split_clips
from .sampling import MatchingExample, ValidationExample, sample_kway_batch, build_validation_examples, realize_example
from .toydata import synthesize_toy_dataset

__all__ = [
    "AudioWaveform",
    "FaceImage",
    "ClipRecord",
    "ClipDataset",
    "MatchingExample",
    "ValidationExample",
    "preprocess_audio",
    "preprocess_image",
    "load_wav",
    "save_wav",
    "load_png",
    "save_png",
    "load_manifest",
    "save_manifest",
    "import_csv_manifest",
    "split_clips",
    "sample_kway_batch",
    "build_validation_examples",
    "realize_example",
    "synthesize_toy_dataset",
]
