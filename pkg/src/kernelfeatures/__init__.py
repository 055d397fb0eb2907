"""Explicit Gaussian-kernel feature maps and linear SVM training over them."""

from .dataio import LabeledDataset, ParseError, SparseVector, load_libsvm, parse_libsvm
from .featuremap import FeatureMapSpec, MapKind, approx_kernel, build_map, exact_gaussian_kernel, map_features
from .features import SparseFeatures
from .svm import LinearModel, TrainConfig, train_pegasos

__version__ = "0.1.0"

__all__ = [
    "LabeledDataset",
    "ParseError",
    "SparseVector",
    "load_libsvm",
    "parse_libsvm",
    "FeatureMapSpec",
    "MapKind",
    "approx_kernel",
    "build_map",
    "exact_gaussian_kernel",
    "map_features",
    "SparseFeatures",
    "LinearModel",
    "TrainConfig",
    "train_pegasos",
]
