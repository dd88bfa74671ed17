"""One-variable d-bar machinery on lattice rules."""
from .cauchy import CauchyOperator, KernelBand, KernelSplit, cauchy_solve, hs_norm, split
from .extension import ExtensionResult, extension_operator
from .grid import DbarOperator, dbar_matrix, dbar_residual
from .hormander import HormanderReport, WeightedDbarProblem, hormander_solve
from .shell import ShellWeight, shell_weight

__all__ = [
    "CauchyOperator", "KernelBand", "KernelSplit", "cauchy_solve", "hs_norm", "split",
    "ExtensionResult", "extension_operator",
    "DbarOperator", "dbar_matrix", "dbar_residual",
    "HormanderReport", "WeightedDbarProblem", "hormander_solve",
    "ShellWeight", "shell_weight",
]
