"""Pareto simulated annealing for logistic classifiers that trades balanced
accuracy against underestimation of desirable outcomes for a minority group."""

from .data import (
    AnnealConfig,
    Dataset,
    ModelParams,
    ObjectiveValues,
    Solution,
    SplitIndices,
    split_70_30,
    validate_dataset,
)
from .psa import ParetoArchive, finalize_archive, run_chain, run_psa

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig",
    "Dataset",
    "ModelParams",
    "ObjectiveValues",
    "ParetoArchive",
    "Solution",
    "SplitIndices",
    "finalize_archive",
    "run_chain",
    "run_psa",
    "split_70_30",
    "validate_dataset",
]
