"""Dual reference set outlier detection over natural-neighbour graphs."""

from drod.data_io import DataMatrix, load_csv, standardize, write_scores
from drod.detector import DetectorConfig, ScoreVector, detect
from drod.evaluation import auc, precision_at_s

__all__ = [
    "DataMatrix",
    "DetectorConfig",
    "ScoreVector",
    "auc",
    "detect",
    "load_csv",
    "precision_at_s",
    "standardize",
    "write_scores",
]

__version__ = "0.1.0"
