"""Pseudo-spectral tools for the dissipative surface quasi-geostrophic equation.

The package bundles a periodic spectral core, a Littlewood-Paley filter bank,
an integrating-factor RK4 solver, a shell-decay regularity monitor and a
numerical checker for the frequency-localised estimates that the regularity
argument relies on.
"""

__version__ = "0.1.0"

from .estimators import HolderExponentEstimator, LittlewoodPaleyTransformer, QGSimulator
from .littlewood_paley import BesovParams, DyadicDecomposition, ShellSpectrum, build_decomposition
from .monitor import BootstrapParams, BootstrapTrace, ExponentFit, bootstrap, fit_exponent
from .solver import SolverConfig, SolverState, simulate
from .spectral import Grid2D, PhysParams, SpectralField, get_grid, to_real, to_spectral

__all__ = [
    "__version__",
    "Grid2D",
    "SpectralField",
    "PhysParams",
    "get_grid",
    "to_spectral",
    "to_real",
    "DyadicDecomposition",
    "BesovParams",
    "ShellSpectrum",
    "build_decomposition",
    "SolverConfig",
    "SolverState",
    "simulate",
    "BootstrapParams",
    "BootstrapTrace",
    "ExponentFit",
    "bootstrap",
    "fit_exponent",
    "LittlewoodPaleyTransformer",
    "HolderExponentEstimator",
    "QGSimulator",
]
