import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import bidisc_tensor_spectrum, disc_hankel_sigma

from hankelab.diagnostics import (Thresholds, TruncationFamily, VerdictLabel, certificate,
                                  compression, decay_slope, essential_norm_proxy, format_cap,
                                  verdict, write_spectra_csv, write_trend_csv)
from hankelab.domains import UnitDisc, build_quadrature
from hankelab.hankel import truncated_hankel
from hankelab.symbols import from_expression


def harmonic_family(sizes=(10, 20, 40)):
    return TruncationFamily.from_values([1 / np.arange(1, n + 1) for n in sizes])


@pytest.fixture(scope="module")
def disc_family(disc_polar_256):
    phi = from_expression("conj(z)")
    return TruncationFamily(tuple(
        truncated_hankel(phi, UnitDisc(), c, disc_polar_256).spectrum for c in (10, 20, 30)))


# ------------------------------------------------------------------ verdicts

def test_harmonic_family_is_compact():
    v = verdict(harmonic_family())
    assert v.label is VerdictLabel.COMPACT
    assert v.tail_index == 5
    assert math.isclose(v.decay_slope, -1.0, abs_tol=1e-9)
    assert v.tail_values == pytest.approx([1 / 6] * 3)


def test_identity_family_is_noncompact():
    fam = TruncationFamily.from_values([np.ones(n) for n in (10, 20, 40)])
    v = verdict(fam)
    assert v.label is VerdictLabel.NONCOMPACT
    assert v.decay_slope == pytest.approx(0.0, abs=1e-12)


def test_zero_family_is_compact_with_infinite_slope():
    fam = TruncationFamily.from_values([np.zeros(n) for n in (4, 8, 12)])
    v = verdict(fam)
    assert v.label is VerdictLabel.COMPACT
    assert v.decay_slope == -math.inf
    assert v.as_dict()["decay_slope"] is None


def test_growing_tail_is_not_compact():
    # sigma_{k*} keeps climbing with the cap although the head decays fast
    arrays = [np.r_[1.0, 0.1 * s * np.ones(9)] for s in (1, 2, 4)]
    fam = TruncationFamily.from_values(arrays, caps=[10, 20, 30])
    assert verdict(fam).label is not VerdictLabel.COMPACT


def test_growing_tail_below_floor_is_inconclusive():
    arrays = [np.r_[1.0, 0.01 * s * np.ones(9)] for s in (1, 2, 4)]
    fam = TruncationFamily.from_values(arrays, caps=[10, 20, 30])
    v = verdict(fam, Thresholds(plateau_floor=0.5))
    assert v.label is VerdictLabel.INCONCLUSIVE


def test_converged_slow_head_is_compact():
    # flat head, but the same values at every cap: finitely many above any level
    arrays = [np.arange(1, n + 1) ** -0.3 for n in (10, 20, 40)]
    v = verdict(TruncationFamily.from_values(arrays))
    assert v.decay_slope > -0.5
    assert v.level_counts == [6, 6, 6]
    assert v.label is VerdictLabel.COMPACT


def test_growing_multiplicity_is_noncompact():
    # each value repeated once more per cap, as for a box truncation of a tensor product
    base = 1 / np.arange(1, 8)
    arrays = [np.sort(np.repeat(base, m))[::-1] for m in (3, 4, 5)]
    v = verdict(TruncationFamily.from_values(arrays))
    assert v.level_counts[0] < v.level_counts[1] < v.level_counts[2]
    assert v.label is VerdictLabel.NONCOMPACT


def test_bidisc_oracle_family_is_noncompact():
    caps = [(4, 4), (6, 6), (8, 8)]
    fam = TruncationFamily.from_values([bidisc_tensor_spectrum(c) for c in caps], caps=caps)
    v = verdict(fam)
    assert v.label is VerdictLabel.NONCOMPACT
    assert v.level_counts == [15, 21, 27]


def test_disc_family_is_compact(disc_family):
    v = verdict(disc_family)
    assert v.label is VerdictLabel.COMPACT
    assert v.decay_slope <= -0.5


@given(st.floats(1e-3, 1e3))
def test_verdict_is_scale_invariant(c):
    for fam in (harmonic_family(), TruncationFamily.from_values([np.ones(n) for n in (5, 9, 13)])):
        a = verdict(fam)
        b = verdict(fam.scaled(c), Thresholds().scaled(c))
        assert a.label == b.label
        assert a.level_counts == b.level_counts
        assert math.isclose(a.decay_slope, b.decay_slope, abs_tol=1e-9)


def test_verdict_is_deterministic(disc_family):
    assert verdict(disc_family).as_dict() == verdict(disc_family).as_dict()


def test_family_validation():
    with pytest.raises(ValueError):
        TruncationFamily.from_values([np.ones(3), np.ones(4)])
    with pytest.raises(ValueError):
        TruncationFamily.from_values([np.ones(3)] * 3, caps=[5, 5, 6])
    with pytest.raises(ValueError):
        TruncationFamily.from_values([np.ones(3), np.ones(0), np.ones(4)], caps=[1, 2, 3])


def test_decay_slope_of_pure_power():
    s = (np.arange(20) + 1.0) ** -1.5
    assert decay_slope(s, 19) == pytest.approx(-1.5)
    assert decay_slope([1.0, 0.0, 0.0], 2) == -math.inf


# ------------------------------------------------------------------ essential-norm proxy

def test_proxy_on_harmonic_family():
    assert essential_norm_proxy(harmonic_family(), 3) == [(10, 0.25), (20, 0.25), (40, 0.25)]


def test_proxy_on_disc(disc_family):
    rows = essential_norm_proxy(disc_family, 5)
    assert [c for c, _ in rows] == [10, 20, 30]
    for _, v in rows:
        assert v == pytest.approx(1 / math.sqrt(42), rel=1e-3)


def test_proxy_index_out_of_range():
    with pytest.raises(ValueError):
        essential_norm_proxy(harmonic_family(), 10)
    with pytest.raises(ValueError):
        essential_norm_proxy(harmonic_family(), -1)


# ------------------------------------------------------------------ certificates

def test_certificate_of_zero():
    c = certificate(np.zeros((4, 4)), 0.1)
    assert c.rank == 0 and c.residual_norm == 0.0 and not np.any(c.K)


def test_certificate_diagonal_example():
    M = np.diag([1, 1 / 4, 1 / 9, 1 / 16])
    c = certificate(M, 0.3)
    assert c.rank == 3
    assert c.residual_norm == pytest.approx(0.25)
    assert np.linalg.norm(c.T - c.K, 2) == pytest.approx(0.25, rel=1e-12)


def test_certificate_degenerates_when_eps_is_small():
    M = np.diag([1.0, 0.5])
    c = certificate(M, 0.1)
    assert c.degenerate and c.rank == 2
    assert np.allclose(c.K, c.T)


def test_certificate_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        certificate(np.eye(2), 0.0)


def test_disc_certificate(disc_polar_256):
    th = truncated_hankel(from_expression("conj(z)"), UnitDisc(), 20, disc_polar_256)
    c = certificate(th.gram, 0.05)
    # 1/sqrt((n+1)(n+2)) <= 0.05 first at n = 19
    assert c.rank == 19
    assert c.residual_norm == pytest.approx(disc_hankel_sigma(19), rel=1e-3)


def _random_psd(rng, n, decay):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(A)
    lam = decay ** np.arange(n)
    return (Q * lam) @ Q.conj().T


@given(st.integers(2, 12), st.floats(0.2, 0.9), st.floats(1e-3, 0.9),
       st.integers(0, 2**31 - 1))
def test_certificate_is_eckart_young(n, decay, eps, seed):
    rng = np.random.default_rng(seed)
    M = _random_psd(rng, n, decay)
    c = certificate(M, eps)
    sigma = np.sqrt(np.clip(np.linalg.eigvalsh(M), 0, None))[::-1]
    expected = sigma[c.rank] if c.rank < n else 0.0
    err = np.linalg.norm(c.T - c.K, 2)
    assert abs(err - expected) <= 1e-12 * max(sigma[0], 1e-300) + 1e-14
    assert c.residual_norm <= eps or c.degenerate
    assert np.linalg.matrix_rank(c.K, tol=1e-10 * sigma[0]) <= c.rank
    for _ in range(20):
        h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        h /= np.linalg.norm(h)
        lhs, rhs = c.bound(h)
        assert lhs <= rhs + 1e-10


def test_compression_squares_back():
    rng = np.random.default_rng(5)
    M = _random_psd(rng, 6, 0.5)
    T = compression(M)
    assert np.allclose(T @ T, M)
    assert np.allclose(T, T.conj().T)


def test_certificate_is_deterministic():
    M = _random_psd(np.random.default_rng(1), 8, 0.6)
    a, b = certificate(M, 0.05), certificate(M, 0.05)
    assert a.rank == b.rank and np.array_equal(a.K, b.K)


# ------------------------------------------------------------------ CSV output

def test_spectra_csv(tmp_path):
    fam = harmonic_family((3, 5, 7))
    p = tmp_path / "s.csv"
    write_spectra_csv(p, [fam])
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["domain_label", "degree_cap", "index", "sigma"]
    assert len(rows) == 1 + 3 + 5 + 7
    assert float(rows[2][3]) == 0.5


def test_trend_csv_formats_tuple_caps(tmp_path):
    p = tmp_path / "t.csv"
    write_trend_csv(p, {"bidisc": (3, [((4, 4), 0.5), ((6, 6), 0.25)])})
    rows = list(csv.reader(open(p)))
    assert rows[1] == ["bidisc", "4x4", "3", "0.5"]
    assert format_cap(12) == "12"
