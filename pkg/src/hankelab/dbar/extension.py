"""Extension of holomorphic functions from a lens ``U = Omega ∩ B(p, r)`` to ``Omega``.

Construction: with ``r1 = r - delta`` and ``r2 = (r1 + r)/2`` take a cutoff
``chi`` equal to 1 near ``B(p, r2)`` and 0 outside ``B(p, r)``, and the weight
``psi(z) = |z-p|^2 - r2^2``. For growing ``k`` solve ``dbar u_k = f dbar(chi)``
with weight ``exp(-k psi)`` and set ``E f = chi f - u_k``. ``E f`` is
holomorphic, and ``u_k`` is pushed out of ``B(p, r2)`` as ``k`` grows because
the data lives where ``psi > 0``. The error is measured on ``Omega ∩ B(p, r1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..domains import Lens, QuadratureRule, lattice_rule
from ..errors import GeometryError
from .grid import dbar_matrix
from .hormander import HormanderReport, WeightedDbarProblem, hormander_solve

# cutoff transition band inside [r2, r], as fractions of r - r2
CUTOFF_START = 0.25
CUTOFF_END = 0.95
HOLOMORPHY_TOL = 0.2


def smoothstep(t):
    """C-infinity step: 1 for ``t <= 0``, 0 for ``t >= 1``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1.0)), 0.0)
        b = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    return a / (a + b)


def smoothstep_prime(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > 0) & (t < 1)
    s = t[inside]
    a = np.exp(-1.0 / (1 - s))
    b = np.exp(-1.0 / s)
    da = -a / (1 - s) ** 2
    db = b / s**2
    out[inside] = (da * b - a * db) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class Cutoff:
    """Radial cutoff ``chi(|z - p|)`` with its analytic d-bar derivative."""

    center: complex
    start: float
    end: float

    def _t(self, z):
        return (np.abs(z - self.center) - self.start) / (self.end - self.start)

    def __call__(self, z):
        return smoothstep(self._t(z))

    def dbar(self, z):
        # d|z-p|/dzbar = (z-p) / (2|z-p|)
        d = np.abs(z - self.center)
        safe = np.where(d > 0, d, 1.0)
        slope = smoothstep_prime(self._t(z)) / (self.end - self.start)
        return np.where(d > 0, slope * (z - self.center) / (2 * safe), 0.0)


@dataclass
class ExtensionResult:
    values: np.ndarray = field(repr=False)
    achieved_error: float
    used_k: Optional[int]
    converged: bool
    sweep: list
    reports: list = field(repr=False, default_factory=list)

    def as_dict(self) -> dict:
        return {
            "achieved_error": self.achieved_error,
            "used_k": self.used_k,
            "converged": self.converged,
            "sweep": [{"k": k, "error": e} for k, e in self.sweep],
            "reports": [r.as_dict() for r in self.reports],
        }


def default_k_sequence(k_max: int) -> list:
    ks, k = [], 1
    while k < k_max:
        ks.append(k)
        k *= 2
    ks.append(int(k_max))
    return ks


def holomorphy_ratio(rule: QuadratureRule, values, inside, op=None) -> float:
    """``||dbar f|| / (||d f|| + ||f|| / diam)`` on rows whose stencil stays in ``inside``."""
    op = op or dbar_matrix(rule)
    leaks = (abs(op.matrix) @ (~inside).astype(float)) > 0
    keep = inside[op.rows] & ~leaks
    if not keep.any():
        raise GeometryError("lens is too thin for a difference stencil at this resolution")
    w = rule.weights[op.rows][keep]
    f = np.where(inside, values, 0)
    db = (op.matrix @ f)[keep]
    d = (op.conjugate @ f)[keep]
    fr = f[op.rows][keep]
    nb = np.sqrt(np.dot(w, np.abs(db) ** 2))
    nd = np.sqrt(np.dot(w, np.abs(d) ** 2))
    nf = np.sqrt(np.dot(w, np.abs(fr) ** 2)) / np.sqrt(w.sum())
    denom = nd + nf
    return float(nb / denom) if denom > 0 else 0.0


def extension_operator(f: Union[Callable, np.ndarray], lens: Lens, epsilon: float, delta: float,
                       k_max: int = 32, rule: Optional[QuadratureRule] = None,
                       resolution: int = 128, ks: Optional[Sequence[int]] = None,
                       stop_early: bool = True,
                       holomorphy_tol: float = HOLOMORPHY_TOL) -> ExtensionResult:
    """Extend ``f`` from ``lens`` to its base domain.

    ``f`` is a callable on complex nodes, or samples at the nodes of ``rule``
    (a lattice rule on ``lens.base``) that fall inside the lens, or samples at
    every node of ``rule``. The k-sweep stops at the first ``k`` whose relative
    error on ``Omega ∩ B(p, r - delta)`` is at most ``epsilon`` unless
    ``stop_early`` is false. Running out of ``k`` is reported, not raised.
    """
    p, r = lens.center, lens.radius
    if not 0 < delta < r:
        raise ValueError(f"need 0 < delta < r, got delta={delta}, r={r}")
    rule = rule if rule is not None else lattice_rule(lens.base, resolution)
    z = rule.z
    dist = np.abs(z - p)
    in_lens = dist < r
    if callable(f):
        fz = np.zeros(len(z), dtype=complex)
        fz[in_lens] = f(z[in_lens])
    else:
        arr = np.asarray(f, dtype=complex)
        if arr.shape == (len(z),):
            fz = np.where(in_lens, arr, 0)
        elif arr.shape == (int(in_lens.sum()),):
            fz = np.zeros(len(z), dtype=complex)
            fz[in_lens] = arr
        else:
            raise ValueError(f"f has {arr.shape[0]} samples; expected {len(z)} or {in_lens.sum()}")

    op = dbar_matrix(rule)
    ratio = holomorphy_ratio(rule, fz, in_lens, op)
    if ratio > holomorphy_tol:
        raise ValueError(f"f is not holomorphic on the lens (d-bar ratio {ratio:.3f})")

    r1 = r - delta
    r2 = 0.5 * (r1 + r)
    chi = Cutoff(p, r2 + CUTOFF_START * (r - r2), r2 + CUTOFF_END * (r - r2))
    g = fz * chi.dbar(z)
    psi = dist**2 - r2**2
    inner = dist < r1
    w = rule.weights
    fnorm = np.sqrt(np.sum(w[inner] * np.abs(fz[inner]) ** 2))
    chif = chi(z) * fz

    sweep, reports = [], []
    best = (np.inf, None, chif)
    for k in (ks if ks is not None else default_k_sequence(k_max)):
        u, report = hormander_solve(WeightedDbarProblem(rule, g, psi, float(k)), op)
        E = chif - u
        err = np.sqrt(np.sum(w[inner] * np.abs(fz[inner] - E[inner]) ** 2))
        err = float(err / fnorm) if fnorm > 0 else float(err)
        sweep.append((int(k), err))
        reports.append(report)
        if err < best[0]:
            best = (err, int(k), E)
        if stop_early and err <= epsilon:
            return ExtensionResult(E, err, int(k), True, sweep, reports)
    err, k, E = best
    return ExtensionResult(E, err, k, err <= epsilon, sweep, reports)
