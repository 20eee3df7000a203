"""Full-reference quality evaluation of stereoscopic omnidirectional images.

Predictive-coding codes of non-overlapping viewport blocks drive a binocular
rivalry score per stereo viewport; viewport scores are fused with content and
latitude weights into one quality value.
"""

from .coding import CodingResult, Dictionary, PatchCodes, PcHyperparams, encode, encode_patches, train_dictionary
from .errors import FormatError, InvalidArgumentError, NumericFailureError, UndefinedCorrelationError
from .fusion import LaplaceLatitudeModel, fuse
from .harness import fit_logistic, plcc, rmse, run_benchmark, srocc
from .pipeline import PipelineConfig, ScoreResult, score_pair
from .sphere import ErpImage, ErpStereoPair, Viewpoint, extract_stereo_viewports, render_viewport, sample_viewpoints

__version__ = "0.1.0"

__all__ = [
    "CodingResult", "Dictionary", "PatchCodes", "PcHyperparams", "encode", "encode_patches",
    "train_dictionary", "FormatError", "InvalidArgumentError", "NumericFailureError",
    "UndefinedCorrelationError", "LaplaceLatitudeModel", "fuse", "fit_logistic", "plcc", "rmse",
    "run_benchmark", "srocc", "PipelineConfig", "ScoreResult", "score_pair", "ErpImage",
    "ErpStereoPair", "Viewpoint", "extract_stereo_viewports", "render_viewport", "sample_viewpoints",
]
