"""Nonlinear CCA under representation-rate constraints.

Linear CCA and ACE baselines, CRCCA fitted by alternating uniform
quantization, a constrained Arimoto-Blahut solver for the known-distribution
case, Good-Turing entropy estimates and a synthetic benchmark generator.
"""

__version__ = "0.1.0"

from .ace import AceModel, fit_ace, predict_ace
from .crcca import CrccaConfig, CrccaModel, evaluate, fit_crcca, sweep_levels
from .dataset import PairedDataset, SplitSpec, load_csv, load_paired, save_csv, split
from .entropy import good_turing, good_turing_entropy, plugin_entropy_bits
from .linear_cca import LinearCcaModel, fit_linear_cca, normalized_objective, project
from .quantizer import LatticeGrid, QuantizedMap, affine_correct, build_grid, fit_rsuq, predict
from .rd_solver import DiscreteChannel, solve_rd
from .synthgen import generate

__all__ = [
    "AceModel", "CrccaConfig", "CrccaModel", "DiscreteChannel", "LatticeGrid", "LinearCcaModel",
    "PairedDataset", "QuantizedMap", "SplitSpec", "affine_correct", "build_grid", "evaluate",
    "fit_ace", "fit_crcca", "fit_linear_cca", "fit_rsuq", "generate", "good_turing", "good_turing_entropy",
    "load_csv", "load_paired", "normalized_objective", "plugin_entropy_bits", "predict",
    "predict_ace", "project", "save_csv", "solve_rd", "split", "sweep_levels",
]
