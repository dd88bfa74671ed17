"""Discrete Cauchy transform ``S g(z) = (1/pi) sum_xi w(xi) g(xi) / (z - xi)``.

The sum runs over lattice nodes with ``|z - xi|`` at least the puncture
radius. On a lattice the kernel only depends on ``z - xi``, so every
operator here is one FFT convolution. The near/far split restricts the
kernel to a distance band; the two bands partition the punctured kernel
exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft as sfft
from scipy.sparse.linalg import LinearOperator, eigsh

from ..domains import QuadratureRule
from .grid import require_lattice

NORM_TOL = 1e-8


def _reaches(dist, radius):
    # shared comparison so adjacent bands never overlap or leave gaps
    return dist >= radius * (1 - 1e-12)


class KernelBand:
    """The Cauchy kernel restricted to ``r_min <= |z - xi| < r_max``, times a density.

    Acts as ``f -> C_band(f * density)`` on node samples.
    """

    def __init__(self, rule: QuadratureRule, r_min: float, r_max: float = math.inf,
                 density=None):
        lat = require_lattice(rule)
        self.rule = rule
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self.density = None if density is None else np.asarray(density, dtype=complex)
        h = lat.spacing
        nx, ny = lat.shape
        mx = np.arange(-(nx - 1), nx)
        my = np.arange(-(ny - 1), ny)
        d = h * (mx[:, None] + 1j * my[None, :])
        dist = np.abs(d)
        band = _reaches(dist, self.r_min)
        if math.isfinite(self.r_max):
            band &= ~_reaches(dist, self.r_max)
        kernel = np.zeros(d.shape, dtype=complex)
        kernel[band] = h * h / (np.pi * d[band])
        self._kernel = kernel
        self._empty = not band.any()
        # the kernel FFTs are reused by every apply/adjoint call
        self._fshape = tuple(sfft.next_fast_len(3 * s - 2) for s in lat.shape)
        self._khat = None
        self._khat_adj = None

    def _convolve(self, grid, adjoint=False):
        if self._khat is None:
            self._khat = sfft.fft2(self._kernel, self._fshape)
            self._khat_adj = sfft.fft2(np.conj(self._kernel[::-1, ::-1]), self._fshape)
        khat = self._khat_adj if adjoint else self._khat
        full = sfft.ifft2(sfft.fft2(grid, self._fshape) * khat)
        nx, ny = grid.shape
        # "same" window: kernel centre sits at (nx-1, ny-1)
        return full[nx - 1:2 * nx - 1, ny - 1:2 * ny - 1]

    def _to_grid(self, values):
        lat = self.rule.lattice
        grid = np.zeros(lat.shape, dtype=complex)
        grid[lat.ij[:, 0], lat.ij[:, 1]] = values
        return grid

    def _from_grid(self, grid):
        lat = self.rule.lattice
        return grid[lat.ij[:, 0], lat.ij[:, 1]]

    @property
    def is_zero(self) -> bool:
        return self._empty or (self.density is not None and not np.any(self.density))

    def apply(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=complex)
        if self.density is not None:
            f = f * self.density
        if self._empty:
            return np.zeros(len(self.rule), dtype=complex)
        return self._from_grid(self._convolve(self._to_grid(f)))

    __call__ = apply

    def adjoint(self, v) -> np.ndarray:
        """Adjoint in the uniform-weight L2 inner product of the lattice."""
        if self._empty:
            return np.zeros(len(self.rule), dtype=complex)
        out = self._from_grid(self._convolve(self._to_grid(v), adjoint=True))
        if self.density is not None:
            out = out * np.conj(self.density)
        return out

    def hs_norm(self) -> float:
        """``sqrt(sum_{z, xi} w(z) w(xi) |kernel(z, xi)|^2)``."""
        if self._empty:
            return 0.0
        mass = np.ones(len(self.rule)) if self.density is None else np.abs(self.density) ** 2
        k2 = np.abs(self._kernel) ** 2
        nx, ny = self.rule.lattice.shape
        total = sfft.irfft2(sfft.rfft2(self._to_grid(mass).real, self._fshape)
                            * sfft.rfft2(k2, self._fshape), self._fshape)
        total = total[nx - 1:2 * nx - 1, ny - 1:2 * ny - 1]
        return float(math.sqrt(max(self._from_grid(total).sum(), 0.0)))

    def operator_norm(self, seed: int = 0) -> float:
        """L2 operator norm: largest eigenvalue of ``A^H A`` by Lanczos, fixed start vector."""
        if self.is_zero:
            return 0.0
        n = len(self.rule)
        gram = LinearOperator((n, n), matvec=lambda x: self.adjoint(self.apply(x)), dtype=complex)
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lam = eigsh(gram, k=1, which="LM", v0=v0, tol=NORM_TOL, return_eigenvectors=False)
        return float(math.sqrt(max(lam[0].real, 0.0)))


class CauchyOperator(KernelBand):
    """Punctured Cauchy transform on a lattice rule.

    ``puncture_radius`` defaults to one cell diagonal ``h*sqrt(2)`` and may not
    be smaller. ``density`` multiplies the input first, so passing samples of
    ``dbar(psi)`` gives the operator ``f -> S(f dbar psi)``.
    """

    def __init__(self, rule: QuadratureRule, puncture_radius: Optional[float] = None,
                 density=None):
        h = require_lattice(rule).spacing
        cell = h * math.sqrt(2)
        if puncture_radius is None:
            puncture_radius = cell
        if puncture_radius < cell * (1 - 1e-12):
            raise ValueError(f"puncture radius {puncture_radius} is below one cell diameter {cell}")
        super().__init__(rule, puncture_radius, math.inf, density)

    @property
    def puncture_radius(self) -> float:
        return self.r_min


def cauchy_solve(op: CauchyOperator, g) -> np.ndarray:
    """Node samples of ``u`` with ``dbar u ~ g`` (times the operator's density)."""
    return op.apply(g)


@dataclass
class KernelSplit:
    epsilon: float
    near: KernelBand
    far: KernelBand

    def apply(self, f) -> np.ndarray:
        return self.near.apply(f) + self.far.apply(f)


def split(op: CauchyOperator, epsilon: float) -> KernelSplit:
    """``S = A_eps + B_eps`` by the indicator of ``|z - xi| < eps``."""
    if epsilon < op.puncture_radius * (1 - 1e-12):
        raise ValueError(f"split radius {epsilon} is inside the puncture {op.puncture_radius}")
    near = KernelBand(op.rule, op.puncture_radius, epsilon, op.density)
    far = KernelBand(op.rule, epsilon, math.inf, op.density)
    return KernelSplit(float(epsilon), near, far)


def hs_norm(part, weights=None) -> float:
    """Discrete Hilbert-Schmidt norm of a kernel band, or of a dense kernel matrix.

    For a matrix ``K[z, xi]`` pass the quadrature ``weights`` of the common rule.
    """
    if isinstance(part, KernelBand):
        return part.hs_norm()
    K = np.asarray(part)
    w = np.ones(K.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    return float(math.sqrt(np.einsum("i,j,ij->", w, w, np.abs(K) ** 2)))
