"""Export a pretrained face-recognition backbone to ONNX with stage taps."""

from .arch import FaceBackbone, seeded_init, stage_final_conv_indices
from .export import (
    ArchitectureMismatch,
    ExportFailure,
    ExportManifest,
    export_backbone,
    export_random_init,
)
from .fixtures import generate_parity_fixture

__version__ = "0.1.0"
