"""KL-divergence-gradient saliency maps (Python bindings)."""

from ._core import (
    DegenerateGradient,
    Error,
    InvalidArgument,
    IoError,
    MalformedContainer,
    ShapeMismatch,
    StageError,
    TargetOutOfRange,
    UnsupportedDType,
    ValueOutOfRange,
    calibrate_perplexity,
    combine,
    explain,
    finalize_map,
    gaussian_joint,
    kl_divergence,
    kl_gradient,
    minmax_normalize,
    npy_read,
    npy_write,
    overlay,
    pairwise_sq_dists,
    render,
    resize_bilinear,
    salient_area_fraction,
    standardize,
    studentt_joint,
)

__all__ = [name for name in dir() if not name.startswith("_")]
