"""Weighted minimal-norm solutions of ``dbar u = g`` on a planar lattice.

The solution minimizes ``sum_j w_j |u_j|^2 exp(-k psi_j)`` subject to the
discrete equations. With ``W = diag(w exp(-k psi))`` it is
``u = W^{-1} D^H (D W^{-1} D^H)^{-1} g``; the normal matrix is sparse, so it
is equilibrated by its diagonal and factored with SuperLU.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..domains import QuadratureRule
from ..errors import NumericalError
from .grid import DbarOperator, dbar_matrix

EXP_FLOOR = -700.0
BACKWARD_TOL = 1e-8


def clipped_exp(x):
    return np.exp(np.clip(x, EXP_FLOOR, -EXP_FLOOR))


@dataclass(frozen=True)
class WeightedDbarProblem:
    rule: QuadratureRule
    data: np.ndarray = field(repr=False)
    weight_exponent: np.ndarray = field(repr=False)
    weight_scale: float = 0.0

    def __post_init__(self):
        n = len(self.rule)
        data = np.asarray(self.data, dtype=complex)
        psi = np.broadcast_to(np.asarray(self.weight_exponent, dtype=float), (n,)).copy()
        if data.shape != (n,):
            raise ValueError(f"expected {n} data samples, got shape {data.shape}")
        if not np.all(np.isfinite(psi)):
            raise ValueError("weight exponent must be finite at every node")
        if self.weight_scale < 0:
            raise ValueError("weight scale k must be non-negative")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "weight_exponent", psi)

    def weight(self) -> np.ndarray:
        """Pointwise ``exp(-k psi)`` with the exponent clipped to stay representable."""
        return clipped_exp(-self.weight_scale * self.weight_exponent)


@dataclass(frozen=True)
class HormanderReport:
    residual: float
    relative_residual: float
    backward_error: float
    weighted_norm: float
    lhs: float
    rhs: float
    weight_scale: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else 0.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d


def hormander_solve(problem: WeightedDbarProblem, dbar: Optional[DbarOperator] = None,
                    check: bool = True):
    """Return ``(u, report)`` for the weighted minimal-norm problem.

    ``report.lhs`` and ``report.rhs`` are the two sides of the discrete estimate
    ``sum w |u|^2 e^{-k psi} / (1+|z|^2)^2 <= sum w |g|^2 e^{-k psi}``. The
    solve is accepted when the componentwise backward error is at rounding
    level; the plain residual can look large at extreme ``k`` because ``u``
    becomes huge where the weight is tiny.
    """
    rule = problem.rule
    D = dbar if dbar is not None else dbar_matrix(rule)
    g = problem.data
    w = rule.weights
    n = len(rule)
    gr = g[D.rows]

    kpsi = problem.weight_scale * problem.weight_exponent
    # W^{-1} up to the constant exp(-max k psi), which cancels in u
    winv = clipped_exp(kpsi - kpsi.max()) / w
    if not np.any(gr):
        u = np.zeros(n, dtype=complex)
    else:
        L = (D.matrix @ sp.diags(winv) @ D.matrix.conj().T).tocsc()
        diag = L.diagonal().real
        if np.any(diag <= 0):
            raise NumericalError("weighted normal matrix has a non-positive diagonal")
        s = 1.0 / np.sqrt(diag)
        S = sp.diags(s)
        lu = splu((S @ L @ S).tocsc())
        lam = s * lu.solve(s * gr)
        u = winv * (D.matrix.conj().T @ lam)
        if not np.all(np.isfinite(u)):
            raise NumericalError("weighted d-bar solve produced non-finite values")

    r = D.matrix @ u - gr
    scale = abs(D.matrix) @ np.abs(u) + np.abs(gr)
    backward = float(np.max(np.abs(r) / np.where(scale > 0, scale, 1.0))) if len(r) else 0.0
    if check and backward > BACKWARD_TOL:
        raise NumericalError(f"d-bar system not solved: backward error {backward:.2e}")
    wr = w[D.rows]
    residual = float(np.sqrt(np.dot(wr, np.abs(r) ** 2)))
    gnorm = float(np.sqrt(np.dot(wr, np.abs(gr) ** 2)))

    weight = problem.weight()
    z = rule.z
    lhs = float(np.sum(w * np.abs(u) ** 2 * weight / (1 + np.abs(z) ** 2) ** 2))
    rhs = float(np.sum(w * np.abs(g) ** 2 * weight))
    report = HormanderReport(
        residual=residual,
        relative_residual=residual / gnorm if gnorm > 0 else 0.0,
        backward_error=backward,
        weighted_norm=float(np.sqrt(np.sum(w * np.abs(u) ** 2 * weight))),
        lhs=lhs,
        rhs=rhs,
        weight_scale=float(problem.weight_scale),
    )
    return u, report
