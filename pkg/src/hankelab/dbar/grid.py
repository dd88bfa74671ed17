"""Finite-difference d-bar on the nodes of a lattice rule."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..domains import QuadratureRule


def require_lattice(rule: QuadratureRule):
    if rule.lattice is None:
        raise ValueError("this operation needs a lattice rule (build_quadrature(..., scheme='grid'))")
    return rule.lattice


def _neighbours(rule: QuadratureRule):
    lat = require_lattice(rule)
    padded = np.full((lat.shape[0] + 2, lat.shape[1] + 2), -1, dtype=np.int64)
    padded[1:-1, 1:-1] = lat.index_grid()
    i = lat.ij[:, 0] + 1
    j = lat.ij[:, 1] + 1
    return padded[i + 1, j], padded[i - 1, j], padded[i, j + 1], padded[i, j - 1]


@dataclass(frozen=True)
class DbarOperator:
    """Sparse centred-difference d-bar, ``(u_E - u_W + i (u_N - u_S)) / 4h``.

    Equations are written only at nodes whose four neighbours are nodes too
    (``rows``); unknowns live on every node. The system is therefore
    underdetermined and minimal-norm solutions are meaningful.
    """

    matrix: sp.csr_matrix = field(repr=False)
    rows: np.ndarray = field(repr=False)
    spacing: float
    conjugate: sp.csr_matrix = field(repr=False)

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, u):
        return self.matrix @ u

    def interior_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[self.rows] = True
        return mask


def dbar_matrix(rule: QuadratureRule) -> DbarOperator:
    """Assemble ``d/dzbar`` (and, for diagnostics, ``d/dz``) on a lattice rule."""
    h = require_lattice(rule).spacing
    E, W, N, S = _neighbours(rule)
    ok = (E >= 0) & (W >= 0) & (N >= 0) & (S >= 0)
    rows = np.nonzero(ok)[0]
    m, n = len(rows), len(rule)
    c = 1.0 / (4.0 * h)
    r = np.tile(np.arange(m), 4)
    cols = np.concatenate([E[ok], W[ok], N[ok], S[ok]])
    ones = np.ones(m)
    dbar = sp.csr_matrix((np.concatenate([c * ones, -c * ones, 1j * c * ones, -1j * c * ones]),
                          (r, cols)), shape=(m, n))
    d = sp.csr_matrix((np.concatenate([c * ones, -c * ones, -1j * c * ones, 1j * c * ones]),
                       (r, cols)), shape=(m, n))
    return DbarOperator(dbar, rows, h, d)


def dbar_residual(rule: QuadratureRule, u, g, mask=None, op: DbarOperator = None) -> float:
    """``||dbar u - g||`` in the discrete L2 norm over the equation rows (optionally masked)."""
    op = op or dbar_matrix(rule)
    r = op @ np.asarray(u, dtype=complex) - np.asarray(g, dtype=complex)[op.rows]
    w = rule.weights[op.rows]
    if mask is not None:
        keep = np.asarray(mask)[op.rows]
        r, w = r[keep], w[keep]
    return float(np.sqrt(np.dot(w, np.abs(r) ** 2)))
