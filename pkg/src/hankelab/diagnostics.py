"""Compactness verdicts for families of truncated spectra, and finite-rank certificates.

A single truncation cannot tell a compact operator from a non-compact one,
so the verdict looks at a family of truncations at growing caps and
compares them at a common resolved index ``k* = floor(smallest size / 2)``:

* the compression singular value ``sigma_{k*}`` can only grow with the cap
  (interlacing), so a compact operator shows a *converged* value while a
  non-compact one keeps it on a plateau bounded away from zero;
* the head of the largest spectrum, ``sigma_0 .. sigma_{k*}``, decays like a
  power ``(k+1)^slope``; compact model operators have ``slope <= -1/2``;
* the number of singular values above the resolved level ``sigma_{k*}`` of
  the smallest member is bounded for a compact operator, so it stops
  changing with the cap, while an essential spectrum above that level
  (infinite multiplicity) makes it grow with every cap.

A family is compact-consistent when the tail has settled and either the
head decays fast or the count is stable; non-compact-consistent when the
tail holds above the plateau floor, the head is flat and the count grows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .hankel import HankelSpectrum

GROWTH_TOL = 0.02
ZERO_TOL = 1e-6
SLOPE_CEILING = -0.5
PLATEAU_FRACTION = 0.1


class VerdictLabel(str, Enum):
    COMPACT = "CompactConsistent"
    NONCOMPACT = "NonCompactConsistent"
    INCONCLUSIVE = "Inconclusive"


def cap_size(cap) -> int:
    """Ordering key for a degree cap: an int, or a tuple of per-variable caps."""
    if isinstance(cap, (tuple, list)):
        return int(sum(cap))
    return int(cap)


def format_cap(cap) -> str:
    if isinstance(cap, (tuple, list)):
        return "x".join(str(int(c)) for c in cap)
    return str(cap)


@dataclass(frozen=True)
class TruncationFamily:
    spectra: tuple

    def __post_init__(self):
        spectra = tuple(self.spectra)
        if len(spectra) < 3:
            raise ValueError("a truncation family needs at least 3 members")
        keys = [cap_size(s.degree_cap) for s in spectra]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise ValueError(f"degree caps must be strictly increasing, got "
                             f"{[s.degree_cap for s in spectra]}")
        if any(len(s) == 0 for s in spectra):
            raise ValueError("empty spectrum in family")
        object.__setattr__(self, "spectra", spectra)

    @classmethod
    def from_values(cls, arrays: Sequence, caps: Optional[Sequence] = None, label: str = ""):
        """Family built straight from singular-value arrays (caps default to sizes)."""
        caps = caps if caps is not None else [len(a) for a in arrays]
        return cls(tuple(HankelSpectrum(np.sort(np.asarray(a, dtype=float))[::-1], c, None, label)
                         for a, c in zip(arrays, caps)))

    def __len__(self):
        return len(self.spectra)

    @property
    def caps(self) -> list:
        return [s.degree_cap for s in self.spectra]

    @property
    def smallest(self) -> HankelSpectrum:
        return min(self.spectra, key=len)

    @property
    def largest(self) -> HankelSpectrum:
        return self.spectra[-1]

    @property
    def tail_index(self) -> int:
        return len(self.smallest) // 2

    def scaled(self, c: float) -> "TruncationFamily":
        return TruncationFamily(tuple(s.scaled(c) for s in self.spectra))


@dataclass(frozen=True)
class Thresholds:
    """``plateau_floor=None`` means ``0.1 * sigma_max`` of the smallest member."""

    plateau_floor: Optional[float] = None
    slope_ceiling: float = SLOPE_CEILING
    growth_tol: float = GROWTH_TOL
    zero_tol: float = ZERO_TOL

    def scaled(self, c: float) -> "Thresholds":
        floor = None if self.plateau_floor is None else c * self.plateau_floor
        return replace(self, plateau_floor=floor, zero_tol=c * self.zero_tol)


@dataclass(frozen=True)
class CompactnessVerdict:
    label: VerdictLabel
    tail_statistic: float
    decay_slope: float
    tail_index: int
    tail_values: list
    plateau_floor: float
    thresholds: Thresholds
    level_counts: list = field(default_factory=list)

    def as_dict(self) -> dict:
        slope = self.decay_slope
        return {
            "label": self.label.value,
            "tail_statistic": self.tail_statistic,
            "decay_slope": slope if math.isfinite(slope) else None,
            "tail_index": self.tail_index,
            "tail_values": list(self.tail_values),
            "level_counts": list(self.level_counts),
            "plateau_floor": self.plateau_floor,
            "slope_ceiling": self.thresholds.slope_ceiling,
            "growth_tol": self.thresholds.growth_tol,
            "zero_tol": self.thresholds.zero_tol,
        }


def decay_slope(values, upto: int, floor: float = 0.0) -> float:
    """Least-squares slope of ``log sigma_k`` against ``log(k+1)`` for ``k <= upto``.

    Values at or below ``floor`` are dropped; with fewer than two left the
    spectrum has collapsed and the slope is ``-inf``.
    """
    s = np.asarray(values, dtype=float)[: upto + 1]
    k = np.arange(len(s))
    keep = s > floor
    if keep.sum() < 2:
        return -math.inf
    x = np.log(k[keep] + 1.0)
    y = np.log(s[keep])
    return float(np.polyfit(x, y, 1)[0])


def level_counts(family: TruncationFamily, level: float) -> list:
    """``#{k : sigma_k >= level}`` for every member."""
    return [int(np.count_nonzero(s.singular_values >= level)) for s in family.spectra]


def verdict(family: TruncationFamily, thresholds: Optional[Thresholds] = None) -> CompactnessVerdict:
    t = thresholds or Thresholds()
    ks = family.tail_index
    tail = [float(s.singular_values[ks]) for s in family.spectra]
    stat = max(tail)
    floor = (PLATEAU_FRACTION * float(family.smallest.singular_values[0])
             if t.plateau_floor is None else t.plateau_floor)
    peak = max(float(s.singular_values[0]) for s in family.spectra)

    if peak <= t.zero_tol:
        return CompactnessVerdict(VerdictLabel.COMPACT, stat, -math.inf, ks, tail, floor, t,
                                  [0] * len(family))

    slope = decay_slope(family.largest.singular_values, ks, t.zero_tol)
    level = (1 - t.growth_tol) * float(family.smallest.singular_values[ks])
    counts = level_counts(family, max(level, t.zero_tol))
    pairs = list(zip(tail, tail[1:]))
    settled = all(b <= a * (1 + t.growth_tol) + t.zero_tol for a, b in pairs)
    holding = all(b >= a * (1 - t.growth_tol) for a, b in pairs)
    # one value may straddle the level between members
    count_stable = max(counts) - min(counts) <= 1
    count_grows = all(b > a for a, b in zip(counts, counts[1:]))

    if settled and (slope <= t.slope_ceiling or count_stable):
        label = VerdictLabel.COMPACT
    elif min(tail) >= floor and slope > t.slope_ceiling and holding and count_grows:
        label = VerdictLabel.NONCOMPACT
    else:
        label = VerdictLabel.INCONCLUSIVE
    return CompactnessVerdict(label, stat, slope, ks, tail, floor, t, counts)


def essential_norm_proxy(family: TruncationFamily, k: int) -> list:
    """``[(cap, sigma_k), ...]`` in cap order."""
    if not 0 <= k < len(family.smallest):
        raise ValueError(f"index {k} is outside the smallest truncation ({len(family.smallest)})")
    return [(s.degree_cap, float(s.singular_values[k])) for s in family.spectra]


def compression(M) -> np.ndarray:
    """Hermitian square root ``T`` of the PSD Hankel Gram, so ``||T h||^2 = h^H M h``."""
    M = np.asarray(M, dtype=complex)
    lam, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return (V * np.sqrt(np.clip(lam, 0, None))) @ V.conj().T


@dataclass(frozen=True)
class CompactnessCertificate:
    epsilon: float
    rank: int
    K: np.ndarray = field(repr=False)
    residual_norm: float
    T: np.ndarray = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    degenerate: bool = False

    def bound(self, h) -> tuple:
        """``(||T h||, eps ||h|| + ||K h||)`` for a vector ``h``."""
        h = np.asarray(h)
        return (float(np.linalg.norm(self.T @ h)),
                float(self.epsilon * np.linalg.norm(h) + np.linalg.norm(self.K @ h)))

    def as_dict(self) -> dict:
        return {"epsilon": self.epsilon, "rank": self.rank, "residual_norm": self.residual_norm,
                "degenerate": self.degenerate, "dimension": int(self.T.shape[0])}


def certificate(M, epsilon: float) -> CompactnessCertificate:
    """Best rank-``k`` approximation ``K`` of ``T = M^{1/2}`` with the least ``k``
    such that ``sigma_{k+1} <= epsilon``; then ``||T h|| <= eps ||h|| + ||K h||``.

    If every singular value exceeds ``epsilon`` the certificate degenerates to
    ``K = T`` (``degenerate=True``, residual 0).
    """
    if not epsilon > 0:
        raise ValueError("certificate epsilon must be positive")
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    lam, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    order = np.argsort(lam)[::-1]
    lam, V = lam[order], V[:, order]
    sigma = np.sqrt(np.clip(lam, 0, None))
    T = (V * sigma) @ V.conj().T
    below = np.nonzero(sigma <= epsilon)[0]
    if len(below):
        rank = int(below[0])
        residual = float(sigma[rank])
        degenerate = False
    else:
        rank, residual, degenerate = n, 0.0, True
    K = (V[:, :rank] * sigma[:rank]) @ V[:, :rank].conj().T
    return CompactnessCertificate(float(epsilon), rank, K, residual, T, sigma, degenerate)


def spectra_rows(family: TruncationFamily, label: Optional[str] = None):
    for s in family.spectra:
        for i, v in enumerate(s.singular_values):
            yield (label or s.domain_label, format_cap(s.degree_cap), i, repr(float(v)))


def write_spectra_csv(path, families) -> None:
    """``domain_label, degree_cap, index, sigma`` for every member of every family."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["domain_label", "degree_cap", "index", "sigma"])
        for fam in families:
            out.writerows(spectra_rows(fam))


def write_trend_csv(path, trends) -> None:
    """``trends`` maps a domain label to ``(k, [(cap, sigma_k), ...])``."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["domain_label", "degree_cap", "k", "sigma_k"])
        for label, (k, rows) in trends.items():
            for cap, v in rows:
                out.writerow([label, format_cap(cap), k, repr(float(v))])
