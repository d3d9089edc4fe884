"""Robust hyperspectral classification.

Arrays follow one convention throughout: cubes are float32 ``(bands, H, W)``,
probability and hidden fields are float64 ``(K, H, W)``, label images are
integer ``(H, W)`` with 0 for unlabeled, and pixel lists are flat row-major
indices.
"""

from ._core import (
    PROBABILITY_FLOOR,
    FormatError,
    HsrcError,
    InfeasibleSplit,
    InvalidArgument,
    IoError,
    MlrModel,
    argmax_labeling,
    bayes_error,
    classification_quality,
    default_grid,
    estimate_optimal_fraction,
    group_soft_threshold,
    make_splits,
    nonrejected_accuracy,
    parse_grid,
    predict_probs,
    project_simplex,
    prox_data,
    reject_at_fraction,
    rejection_count,
    rejection_field,
    segsalsa,
    segsalsa_objective,
    sigma_for_bayes_error,
    sweep,
    synth,
    train_mlr,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
