"""Robust Chinese-remainder reconstruction of several integers from unordered noisy residues."""
from .arbitrary import CutPlan, build_cut_plan, pruned_cuts, reconstruct_arbitrary
from .bounded import Reconstruction, reconstruct_bounded
from .errors import CRTError, InputError, ReconstructionError
from .gcrtmn import MultiSolution, QuotientTable, gcrtmn_exact, gcrtmn_robust
from .mle import NoiseModel, TrimmedSet, mle_circular, mle_closed_form, trim_outliers
from .modular import ModulusSystem, ResidueTable, crt_reconstruct, validate_system
from .remainder_code import encode, list_decode, unique_decode
from .sim import SimConfig, SimReport, snr_sweep

__version__ = "0.1.0"

__all__ = [
    "CRTError", "CutPlan", "InputError", "ModulusSystem", "MultiSolution", "NoiseModel",
    "QuotientTable", "Reconstruction", "ReconstructionError", "ResidueTable", "SimConfig",
    "SimReport", "TrimmedSet", "build_cut_plan", "crt_reconstruct", "encode", "gcrtmn_exact",
    "gcrtmn_robust", "list_decode", "mle_circular", "mle_closed_form", "pruned_cuts",
    "reconstruct_arbitrary", "reconstruct_bounded", "snr_sweep", "trim_outliers",
    "unique_decode", "validate_system",
]
