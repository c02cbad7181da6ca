"""Hierarchical fault detection with Bayesian fusion of monitoring statistics."""

from .dpi import (
    DeepDetector,
    DetectionRecord,
    StreamState,
    build_dpi,
    detect,
    detect_batch,
    dpi_features,
    dpi_posteriors,
    dpi_statistics,
    new_stream,
)
from .fusion import FusionParams, bayes_posterior, fuse_odbs, weight_and_fuse
from .kde import ControlLimit, kde_control_limit, silverman_bandwidth
from .statistics import (
    KINDS,
    StatisticSeries,
    i2_statistic,
    qi_statistic,
    spe_statistic,
    t2_statistic,
)

__all__ = [
    "KINDS", "ControlLimit", "DeepDetector", "DetectionRecord", "FusionParams",
    "StatisticSeries", "StreamState", "bayes_posterior", "build_dpi", "detect",
    "detect_batch", "dpi_features", "dpi_posteriors", "dpi_statistics", "fuse_odbs",
    "i2_statistic", "kde_control_limit", "new_stream", "qi_statistic",
    "silverman_bandwidth", "spe_statistic", "t2_statistic", "weight_and_fuse",
]
