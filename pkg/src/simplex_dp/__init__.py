"""Differentially private sums, counts and means via simplex augmentation."""

from .estimators import (
    EstimatorId,
    MeanReleaseReport,
    center_release,
    plugin_release,
    refine_count,
    resize_release,
    simplex_known_n_release,
    simplex_release,
)
from .mechanisms import NoiseSource
from .privacy_core import Bounds, PureDP, ZCDP

__all__ = [
    "Bounds",
    "EstimatorId",
    "MeanReleaseReport",
    "NoiseSource",
    "PureDP",
    "ZCDP",
    "center_release",
    "plugin_release",
    "refine_count",
    "resize_release",
    "simplex_known_n_release",
    "simplex_release",
]
