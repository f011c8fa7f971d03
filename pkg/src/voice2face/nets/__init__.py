from .sinc import SincConv1d
from .speech import SpeechEncoder
from .face import FaceEncoder
from .generator import Generator, adain
from .checkpoint import save_checkpoint, load_checkpoint, FORMAT_VERSION

__all__ = [
    "SincConv1d",
    "SpeechEncoder",
    "FaceEncoder",
    "Generator",
    "adain",
    "save_checkpoint",
    "load_checkpoint",
    "FORMAT_VERSION",
]
