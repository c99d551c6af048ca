"""Polarimetric DoFP frame encoding, dataset curation and detection evaluation."""

__version__ = "0.1.0"

from .dataset import (
    Annotation,
    BoundingBox,
    DatasetManifest,
    ImageRecord,
    stats,
    subsample,
    validate,
)
from .encoding import (
    ChannelCombo,
    EncodedImage,
    NormalizationSpec,
    PolarEncoder,
    PolarImage,
    encode_channel,
    encode_combo,
    fixed_specs,
    write_encoded,
)
from .evaluation import DetectionEvaluator, EvalConfig, EvalReport, evaluate, load_detections
from .metrics import (
    APResult,
    DetectionRecord,
    average_precision,
    error_rate_evolution,
    iou,
    weighted_map,
)
from .mosaic import DEFAULT_LAYOUT, Demosaicer, MosaicLayout, quad_to_stokes_image, split
from .stokes import (
    Aop,
    Dop,
    IntensityQuad,
    StokesTransformer,
    StokesVector,
    aop,
    dop,
    forward_quad,
    intensity_at,
    stokes_from_quad,
)
from .synth import PolarField, Region, SceneSpec, render_raw, render_stokes

__all__ = [
    "Annotation",
    "Aop",
    "aop",
    "APResult",
    "average_precision",
    "BoundingBox",
    "ChannelCombo",
    "DatasetManifest",
    "DEFAULT_LAYOUT",
    "Demosaicer",
    "DetectionEvaluator",
    "DetectionRecord",
    "Dop",
    "dop",
    "encode_channel",
    "encode_combo",
    "EncodedImage",
    "error_rate_evolution",
    "EvalConfig",
    "EvalReport",
    "evaluate",
    "fixed_specs",
    "forward_quad",
    "ImageRecord",
    "intensity_at",
    "IntensityQuad",
    "iou",
    "load_detections",
    "MosaicLayout",
    "NormalizationSpec",
    "PolarEncoder",
    "PolarField",
    "PolarImage",
    "quad_to_stokes_image",
    "Region",
    "render_raw",
    "render_stokes",
    "SceneSpec",
    "split",
    "stats",
    "stokes_from_quad",
    "StokesTransformer",
    "StokesVector",
    "subsample",
    "validate",
    "weighted_map",
    "write_encoded",
]
