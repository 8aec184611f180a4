from .config import ModelConfig
from .network import AttractorSet, ExtractionResult, SeparationResult, UniSepNet

__all__ = [
    "ModelConfig",
    "UniSepNet",
    "AttractorSet",
    "SeparationResult",
    "ExtractionResult",
]
