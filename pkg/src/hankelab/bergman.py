"""Numerically orthonormal Bergman-space bases built from monomials.

Inner products use the physics convention: ``G[m, n] = sum_j w_j conj(v_m(x_j)) v_n(x_j)``,
so that ``G = V^H W V`` for the node-by-monomial evaluation matrix ``V`` and a
coefficient matrix ``Q`` is orthonormal when ``Q^H G Q = I``.

Monomials are centred and scaled to the domain (``((z - c) / s)^n``) which
spans the same space as ``z^n`` but keeps the Gram matrix far better
conditioned on off-centre domains such as lenses.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .domains import Annulus, Bidisc, Lens, QuadratureRule, UnitDisc
from .errors import NumericalError

DEFAULT_THRESHOLD = 1e-10
CHUNK = 16384


def chunks(n: int, size: int = CHUNK):
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))


@dataclass(frozen=True)
class MonomialBasis:
    """Ordered exponent tuples plus the affine change of variable applied before powering.

    ``cap`` is an int (total degree, or |exponent| for Laurent bases) or a
    tuple of per-variable degree caps.
    """

    cap: Union[int, tuple]
    exponents: np.ndarray = field(repr=False)
    center: tuple = (0j,)
    scale: tuple = (1.0,)
    laurent: bool = False

    @property
    def dimension(self) -> int:
        return self.exponents.shape[1]

    def __len__(self):
        return len(self.exponents)

    @property
    def multi_indices(self) -> list:
        return [tuple(int(a) for a in e) for e in self.exponents]

    def evaluate(self, points) -> np.ndarray:
        """Monomial values, shape ``(n_points, len(self))``."""
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        out = np.ones((pts.shape[0], len(self)), dtype=complex)
        for v in range(self.dimension):
            t = (pts[:, v] - self.center[v]) / self.scale[v]
            e = self.exponents[:, v]
            hi = int(e.max())
            lo = int(e.min())
            pos = t[:, None] ** np.arange(max(hi, 0) + 1)[None, :]
            if lo < 0:
                neg = (1.0 / t)[:, None] ** np.arange(-lo + 1)[None, :]
                out *= np.where(e >= 0, pos[:, np.maximum(e, 0)], neg[:, np.maximum(-e, 0)])
            else:
                out *= pos[:, e]
        return out

    def enlarged(self, extra: int) -> "MonomialBasis":
        """Same change of variable, cap raised by ``extra`` in every direction."""
        if isinstance(self.cap, tuple):
            cap = tuple(c + extra for c in self.cap)
        else:
            cap = self.cap + extra
        return _make(cap, self.dimension, self.center, self.scale, self.laurent)


def _make(cap, dimension, center, scale, laurent) -> MonomialBasis:
    if laurent:
        if dimension != 1:
            raise ValueError("Laurent bases are one-dimensional")
        ms = sorted(range(-cap, cap + 1), key=lambda m: (abs(m), -m))
        exps = np.array(ms, dtype=int)[:, None]
    elif dimension == 1:
        cap = cap[0] if isinstance(cap, tuple) else cap
        exps = np.arange(cap + 1)[:, None]
    else:
        if isinstance(cap, tuple):
            box = list(itertools.product(*(range(c + 1) for c in cap)))
        else:
            box = [e for e in itertools.product(range(cap + 1), repeat=dimension) if sum(e) <= cap]
        # graded, then lexicographic with the first variable leading
        box.sort(key=lambda e: (sum(e), tuple(-a for a in e)))
        exps = np.array(box, dtype=int)
    if cap_is_negative(cap):
        raise ValueError("degree caps must be non-negative")
    return MonomialBasis(cap, exps, tuple(complex(c) for c in center),
                         tuple(float(s) for s in scale), laurent)


def cap_is_negative(cap) -> bool:
    return min(cap) < 0 if isinstance(cap, tuple) else cap < 0


def monomial_basis(domain, cap) -> MonomialBasis:
    """Monomials adapted to ``domain``: Laurent on the annulus, centred on lenses."""
    if isinstance(domain, UnitDisc):
        return _make(cap, 1, (0,), (domain.radius,), False)
    if isinstance(domain, Annulus):
        return _make(cap, 1, (0,), (domain.outer_radius,), True)
    if isinstance(domain, Lens):
        x0, x1, y0, y1 = domain.bbox()
        c = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        s = 0.5 * np.hypot(x1 - x0, y1 - y0)
        return _make(cap, 1, (c,), (s,), False)
    if isinstance(domain, Bidisc):
        return _make(cap, 2, (0, 0), (domain.radius1, domain.radius2), False)
    raise TypeError(f"unsupported domain {domain!r}")


@dataclass(frozen=True)
class GramMatrix:
    entries: np.ndarray = field(repr=False)
    basis: MonomialBasis
    rule: QuadratureRule = field(repr=False)


def weighted_products(rule: QuadratureRule, left, right=None) -> np.ndarray:
    """``L^H W R`` accumulated over node chunks; ``left``/``right`` map node slices to value blocks."""
    right = left if right is None else right
    acc = None
    for sl in chunks(len(rule)):
        a = left(sl)
        b = a if right is left else right(sl)
        part = a.conj().T @ (rule.weights[sl, None] * b)
        acc = part if acc is None else acc + part
    return acc


def gram(basis: MonomialBasis, rule: QuadratureRule) -> GramMatrix:
    if basis.dimension != rule.dimension:
        raise ValueError("basis and rule dimensions differ")
    G = weighted_products(rule, lambda sl: basis.evaluate(rule.nodes[sl]))
    G = 0.5 * (G + G.conj().T)
    return GramMatrix(G, basis, rule)


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal functions ``e_k = sum_m Q[m, k] * monomial_m``.

    Only the first ``retained_rank`` directions of the equilibrated Gram
    spectrum survive the relative threshold; the rest are dropped, never inverted.
    """

    monomials: MonomialBasis
    coefficients: np.ndarray = field(repr=False)
    retained_rank: int
    threshold: float
    eigenvalue_max: float
    eigenvalue_min: float
    orthonormality_residual: float

    def __len__(self):
        return self.retained_rank

    def evaluate(self, points) -> np.ndarray:
        return self.monomials.evaluate(points) @ self.coefficients

    def metadata(self) -> dict:
        cap = None if self.monomials is None else self.monomials.cap
        return {
            "degree_cap": list(cap) if isinstance(cap, tuple) else cap,
            "monomials": self.coefficients.shape[0],
            "retained_rank": self.retained_rank,
            "threshold": self.threshold,
            "eigenvalue_max": self.eigenvalue_max,
            "eigenvalue_min": self.eigenvalue_min,
            "orthonormality_residual": self.orthonormality_residual,
        }


def _aligned_inverse_root(Gs: np.ndarray, threshold: float, absolute: bool = False):
    """Coefficients of an orthonormal basis for the equilibrated Gram ``Gs``.

    The retained eigenvectors are rotated (orthogonal Procrustes) towards the
    leading monomials, so on domains where monomials are already orthogonal
    the result stays diagonal rather than an arbitrary rotation.
    """
    lam, V = np.linalg.eigh(Gs)
    lam_max = lam[-1]
    if lam_max <= 0:
        raise NumericalError("Gram matrix has no positive eigenvalue")
    cut = threshold if absolute else threshold * lam_max
    keep = lam >= cut
    k = int(keep.sum())
    if k == 0:
        return np.zeros((Gs.shape[0], 0), dtype=complex), lam
    lam_k = lam[keep][::-1]
    V_k = V[:, keep][:, ::-1]
    # overlap of the new basis with the first k equilibrated monomials
    C = np.sqrt(lam_k)[:, None] * V_k.conj().T[:, :k]
    X, _, Yh = np.linalg.svd(C)
    return (V_k / np.sqrt(lam_k)[None, :]) @ (X @ Yh), lam


def orthonormalize(G: Union[GramMatrix, np.ndarray],
                   relative_threshold: float = DEFAULT_THRESHOLD) -> OrthonormalBasis:
    """Hermitian eigendecomposition of the diagonally equilibrated Gram with relative truncation.

    ``G`` may also be a bare Hermitian array; the result then has no monomials attached.
    """
    if not 1e-14 <= relative_threshold <= 1e-4:
        raise ValueError("relative_threshold must lie in [1e-14, 1e-4]")
    A = G.entries if isinstance(G, GramMatrix) else np.asarray(G, dtype=complex)
    monomials = G.basis if isinstance(G, GramMatrix) else None
    d = np.real(np.diag(A)).copy()
    if np.any(d <= 0):
        raise NumericalError("a monomial has zero discrete norm; quadrature too coarse for this basis")
    s = 1.0 / np.sqrt(d)
    Gs = s[:, None] * A * s[None, :]
    Qs, lam = _aligned_inverse_root(Gs, relative_threshold)
    if Qs.shape[1] == 0:
        raise NumericalError("all Gram eigenvalues fall below the threshold")
    Q = s[:, None] * Qs
    resid = np.max(np.abs(Q.conj().T @ A @ Q - np.eye(Q.shape[1])))
    lam_max = float(lam[-1])
    return OrthonormalBasis(monomials, Q, Q.shape[1], relative_threshold, lam_max,
                            float(lam[0]), float(resid))


def orthonormal_basis(domain, cap, rule: QuadratureRule,
                      relative_threshold: float = DEFAULT_THRESHOLD) -> OrthonormalBasis:
    return orthonormalize(gram(monomial_basis(domain, cap), rule), relative_threshold)


def extend_basis(basis: OrthonormalBasis, rule: QuadratureRule, extra: int) -> OrthonormalBasis:
    """Orthonormal basis of a larger monomial space whose leading columns are ``basis``.

    The added directions are the enlarged monomials with their components
    along ``basis`` removed (two passes), then orthonormalized with the same
    threshold, measured against each monomial's own norm.
    """
    if extra <= 0:
        return basis
    small = basis.monomials
    big = small.enlarged(extra)
    pos = {e: i for i, e in enumerate(big.multi_indices)}
    rows = np.array([pos[e] for e in small.multi_indices])
    fresh = np.setdiff1d(np.arange(len(big)), rows)
    Gb = gram(big, rule).entries

    Qe = np.zeros((len(big), basis.retained_rank), dtype=complex)
    Qe[rows] = basis.coefficients
    R = np.zeros((len(big), len(fresh)), dtype=complex)
    R[fresh, np.arange(len(fresh))] = 1.0
    for _ in range(2):
        R -= Qe @ (Qe.conj().T @ Gb @ R)
    Gr = R.conj().T @ Gb @ R
    Gr = 0.5 * (Gr + Gr.conj().T)
    s = 1.0 / np.sqrt(np.real(np.diag(Gb))[fresh])
    Qs, _ = _aligned_inverse_root(s[:, None] * Gr * s[None, :], basis.threshold, absolute=True)
    Q = np.hstack([Qe, R @ (s[:, None] * Qs)])
    resid = np.max(np.abs(Q.conj().T @ Gb @ Q - np.eye(Q.shape[1])))
    return OrthonormalBasis(big, Q, Q.shape[1], basis.threshold, basis.eigenvalue_max,
                            basis.eigenvalue_min, float(resid))


def basis_values(basis: OrthonormalBasis, rule: QuadratureRule) -> np.ndarray:
    """All basis functions at all nodes. Fine for planar rules; product rules should stream."""
    return basis.evaluate(rule.nodes)


def bergman_kernel(basis: OrthonormalBasis, z, w):
    """Truncated kernel ``K_N(z, w) = sum_k e_k(z) conj(e_k(w))``.

    Scalars in, scalar out; arrays of points give the full matrix ``K[i, j] = K_N(z_i, w_j)``.
    """
    scalar = np.ndim(z) == 0 and np.ndim(w) == 0 if basis.monomials.dimension == 1 else (
        np.ndim(z) == 1 and np.ndim(w) == 1)
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    ww = np.atleast_1d(np.asarray(w, dtype=complex))
    if basis.monomials.dimension == 2:
        zz = zz.reshape(-1, 2)
        ww = ww.reshape(-1, 2)
    K = basis.evaluate(zz) @ basis.evaluate(ww).conj().T
    return K[0, 0] if scalar else K


def project(basis: OrthonormalBasis, rule: QuadratureRule, samples) -> np.ndarray:
    """Coefficients ``c_k = sum_j w_j f(x_j) conj(e_k(x_j))`` of the Bergman projection."""
    samples = np.asarray(samples)
    if samples.shape[0] != len(rule):
        raise ValueError("samples must be indexed like the rule nodes")
    vec = samples.ndim == 1
    s = samples[:, None] if vec else samples
    c = weighted_products(rule, lambda sl: basis.evaluate(rule.nodes[sl]),
                          lambda sl: s[sl])
    return c[:, 0] if vec else c


def reconstruct(basis: OrthonormalBasis, coefficients, points) -> np.ndarray:
    """``P f = sum_k c_k e_k`` evaluated at ``points``."""
    return basis.evaluate(points) @ np.asarray(coefficients)
