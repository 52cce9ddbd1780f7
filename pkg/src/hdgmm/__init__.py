"""Incremental high-dimensional Gaussian mixtures for dictionary compression.

The main entry points are re-exported here; see the submodules for the rest.
"""
from .em_batch import bic, bic_scan, fit_batch, init_model, param_count
from .em_online import OnlineConfig, fit_online
from .errors import DegenerateComponentError, FormatError, HdgmmError, InsufficientDataError
from .kernels import BACKEND
from .matching import Dictionary, full_match, hdgmm_match, svd_compress, svd_match
from .model import Component, HdGmmModel, log_likelihood, responsibilities
from .reduction import CompressedDataset, reduce_dataset, reconstruction_mae
from .stiefel import StiefelSettings, principal_angles

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Component",
    "CompressedDataset",
    "DegenerateComponentError",
    "Dictionary",
    "FormatError",
    "HdGmmModel",
    "HdgmmError",
    "InsufficientDataError",
    "OnlineConfig",
    "StiefelSettings",
    "bic",
    "bic_scan",
    "fit_batch",
    "fit_online",
    "full_match",
    "hdgmm_match",
    "init_model",
    "log_likelihood",
    "param_count",
    "principal_angles",
    "reconstruction_mae",
    "reduce_dataset",
    "responsibilities",
    "svd_compress",
    "svd_match",
]
