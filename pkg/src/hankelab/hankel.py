"""Truncated Hankel operators ``H_phi f = phi f - P(phi f)`` and their singular spectra.

The matrix assembled here is the Gram matrix of the residuals
``(I - P)(phi e_n)``: ``M = A - B^H B`` with ``A = <phi e_m, phi e_n>`` and ``B``
the coefficients of ``phi e_n`` in an enlarged orthonormal basis. ``P`` projects
onto that enlarged space, so holomorphic polynomial symbols of degree up to
``projection_extra`` give ``M = 0`` exactly (up to rounding).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .bergman import OrthonormalBasis, chunks, extend_basis, orthonormal_basis
from .domains import Lens, QuadratureRule
from .errors import GeometryError, NumericalError
from .symbols import Symbol

DEFAULT_EXTRA = {1: 8, 2: 4}


def default_extra(dimension: int) -> int:
    return DEFAULT_EXTRA.get(dimension, 4)


def _gram_parts(symbol, basis, rule, projection):
    k = basis.retained_rank
    A = np.zeros((k, k), dtype=complex)
    B = np.zeros((projection.retained_rank, k), dtype=complex)
    for sl in chunks(len(rule)):
        X = rule.nodes[sl]
        Eb = projection.evaluate(X)
        Phi = symbol(X)[:, None] * Eb[:, :k]
        WPhi = rule.weights[sl, None] * Phi
        A += Phi.conj().T @ WPhi
        B += Eb.conj().T @ WPhi
    return A, B


def hankel_gram(symbol: Symbol, basis: OrthonormalBasis, rule: QuadratureRule,
                projection: Optional[OrthonormalBasis] = None,
                extra: Optional[int] = None, return_scale: bool = False):
    """Hermitian PSD matrix ``M[m, n] = <(I-P) phi e_n, (I-P) phi e_m>``.

    ``projection`` must extend ``basis`` (its first columns are ``basis``);
    when omitted it is built with :func:`extend_basis`. With ``return_scale``
    the largest ``||phi e_n||^2`` is returned too: rounding in ``M`` is
    relative to that, not to ``||M||``.
    """
    if projection is None:
        extra = default_extra(rule.dimension) if extra is None else extra
        projection = extend_basis(basis, rule, extra)
    A, B = _gram_parts(symbol, basis, rule, projection)
    M = A - B.conj().T @ B
    M = 0.5 * (M + M.conj().T)
    if return_scale:
        return M, float(np.max(np.abs(np.diag(A)))) if A.size else 0.0
    return M


@dataclass(frozen=True)
class HankelSpectrum:
    singular_values: np.ndarray = field(repr=False)
    degree_cap: object = None
    resolution: Optional[int] = None
    domain_label: str = ""

    def __len__(self):
        return len(self.singular_values)

    def scaled(self, c: float) -> "HankelSpectrum":
        return replace(self, singular_values=c * self.singular_values)


def singular_spectrum(M: np.ndarray, degree_cap=None, resolution=None,
                      domain_label: str = "", scale: Optional[float] = None) -> HankelSpectrum:
    """Square roots of the eigenvalues of ``M``, clipped at zero, non-increasing.

    A negative eigenvalue below ``-1e-6 * scale`` is an assembly error;
    ``scale`` defaults to ``||M||``.
    """
    M = np.asarray(M)
    if M.size == 0:
        return HankelSpectrum(np.zeros(0), degree_cap, resolution, domain_label)
    lam = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    scale = max(np.max(np.abs(lam)), scale or 0.0)
    if lam[0] < -1e-6 * scale:
        raise NumericalError(f"Hankel Gram has eigenvalue {lam[0]:.3e} (norm {scale:.3e}); "
                             "assembly is not positive semidefinite")
    sigma = np.sqrt(np.clip(lam, 0.0, None))[::-1]
    return HankelSpectrum(sigma, degree_cap, resolution, domain_label)


def restrict_symbol(symbol: Symbol, lens) -> Symbol:
    """``R_U phi``: the same evaluators, now evaluated on ``lens``."""
    if (symbol.domain is not None and isinstance(lens, Lens)
            and lens.base != symbol.domain and lens != symbol.domain):
        raise GeometryError(f"{lens.label} is not a sub-domain of {symbol.domain.label}")
    return replace(symbol, domain=lens)


@dataclass(frozen=True)
class TruncatedHankel:
    """Everything produced for one truncation: the matrix, the bases and the spectrum."""

    gram: np.ndarray = field(repr=False)
    basis: OrthonormalBasis = field(repr=False)
    projection: OrthonormalBasis = field(repr=False)
    spectrum: HankelSpectrum = field(repr=False)

    def column_norms(self) -> np.ndarray:
        """``||H_phi e_n||`` for each basis element."""
        return np.sqrt(np.clip(np.real(np.diag(self.gram)), 0.0, None))


def truncated_hankel(symbol: Symbol, domain, cap, rule: QuadratureRule,
                     threshold: float = 1e-10, extra: Optional[int] = None) -> TruncatedHankel:
    basis = orthonormal_basis(domain, cap, rule, threshold)
    extra = default_extra(rule.dimension) if extra is None else extra
    projection = extend_basis(basis, rule, extra)
    M, scale = hankel_gram(symbol, basis, rule, projection, return_scale=True)
    spectrum = singular_spectrum(M, cap, rule.resolution, domain.label, scale)
    return TruncatedHankel(M, basis, projection, spectrum)
