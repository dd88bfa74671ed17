"""Bergman-space projections, Hankel-operator spectra and d-bar solvers on model domains.

Submodules are imported on first attribute access so the command line can
configure BLAS threads before numpy is loaded.
"""
import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "UnitDisc": "domains", "Annulus": "domains", "Lens": "domains", "Bidisc": "domains",
    "contains": "domains", "build_quadrature": "domains", "flood_fill_connected": "domains",
    "QuadratureRule": "domains",
    "monomial_basis": "bergman", "gram": "bergman", "orthonormalize": "bergman",
    "orthonormal_basis": "bergman", "bergman_kernel": "bergman", "project": "bergman",
    "from_expression": "symbols", "polynomial_symbol": "symbols", "Symbol": "symbols",
    "hankel_gram": "hankel", "singular_spectrum": "hankel", "restrict_symbol": "hankel",
    "truncated_hankel": "hankel", "HankelSpectrum": "hankel",
    "TruncationFamily": "diagnostics", "verdict": "diagnostics", "certificate": "diagnostics",
    "essential_norm_proxy": "diagnostics",
    "parse_config": "config", "load_config": "config",
    "run_experiment": "experiments",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    if name in _EXPORTS:
        module = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
