"""Bit-packed hyperdimensional computing: kernels, encoders, models and experiment tooling."""

from .encoding import Codebook, Discretizer, build_codebook, discretize, encode, encode_batch, fit_discretizer
from .hypervector import PackedBitMatrix, pack, unpack
from .model import HDModel, Predictions, predict, train_classical, train_online

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "Discretizer",
    "HDModel",
    "PackedBitMatrix",
    "Predictions",
    "build_codebook",
    "discretize",
    "encode",
    "encode_batch",
    "fit_discretizer",
    "pack",
    "predict",
    "train_classical",
    "train_online",
    "unpack",
]
