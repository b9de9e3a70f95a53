"""Generalized non-orthogonal joint diagonalization (GNJD) with LU factors and elementary rotations."""
from .exceptions import (
    ConfigurationError,
    DegenerateInputError,
    DimensionError,
    FormatError,
    GNJDError,
    NumericalError,
    RotationIndexError,
    SingularityError,
)
from .jbss import BlockPlan, estimate_targets, plan_blocks, separate, unmix
from .matrix import TargetSet, apply_left_elementary, apply_right_elementary, diag_norm_sq, off_norm_sq
from .metrics import cost_split, gnjd_cost, j_isi, oron
from .solver import SolverConfig, SolverReport, UnmixingSet, select_targets, solve
from .synth import GroundTruth, MultisetSignal, gen_am_bpsk_sources, gen_exact, gen_mixtures, gen_noisy

__version__ = "0.1.0"

__all__ = [
    "BlockPlan",
    "ConfigurationError",
    "DegenerateInputError",
    "DimensionError",
    "FormatError",
    "GNJDError",
    "GroundTruth",
    "MultisetSignal",
    "NumericalError",
    "RotationIndexError",
    "SingularityError",
    "SolverConfig",
    "SolverReport",
    "TargetSet",
    "UnmixingSet",
    "apply_left_elementary",
    "apply_right_elementary",
    "cost_split",
    "diag_norm_sq",
    "estimate_targets",
    "gen_am_bpsk_sources",
    "gen_exact",
    "gen_mixtures",
    "gen_noisy",
    "gnjd_cost",
    "j_isi",
    "off_norm_sq",
    "oron",
    "plan_blocks",
    "select_targets",
    "separate",
    "solve",
    "unmix",
]
