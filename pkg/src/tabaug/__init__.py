"""Benchmarking toolkit for tabular data augmentation on binary outcome prediction."""

from .data import TabularDataset, GroupedFolds, load_csv, write_csv, grouped_kfold, make_synthetic
from .seeds import SeedStream

__all__ = [
    "TabularDataset",
    "GroupedFolds",
    "SeedStream",
    "load_csv",
    "write_csv",
    "grouped_kfold",
    "make_synthetic",
]

__version__ = "0.1.0"
