"""Twisted transfer-operator oracles for finite Markov shifts."""

import itertools
import math

import numpy as np
import pytest

from lcltflow.errors import IllConditionedFit, NoGapError
from lcltflow.spectral import (EigenCurve, TwistedOperatorModel,
                               eigen_curve_rows, expansion_fit, fourier_lclt,
                               leading_eigenvalue, twisted_matrix,
                               unit_modulus_scan)
from lcltflow.systems import MarkovShiftBase


def coin_chain():
    """iid +/-1 with unit roof as a 2-state chain: value depends only on
    the landing state."""
    P = [[0.5, 0.5], [0.5, 0.5]]
    f = np.zeros((2, 2, 2))
    f[:, 0, 0] = -1.0
    f[:, 1, 0] = 1.0
    f[:, :, 1] = 1.0
    return MarkovShiftBase(P, f)


P3 = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]


def chain3():
    """Three-state chain with zero-mean values and mean roof 5/3."""
    f = np.zeros((3, 3, 2))
    f[:, :, 1] = 1.0
    f[0, 0] = [0.5, 1.0]
    f[0, 1] = [1.0, 2.0]
    f[1, 1] = [-0.5, 1.0]
    f[1, 2] = [-1.0, 3.0]
    f[2, 0] = [0.0, 2.0]
    f[2, 2] = [0.0, 1.0]
    return MarkovShiftBase(P3, f)


def int_chain3():
    """Integer-valued observable on the same transition structure, with
    stationary mean zero (all six edges carry weight 1/6)."""
    f = np.zeros((3, 3, 2))
    f[:, :, 1] = 1.0
    f[0, 0, 0] = 1.0
    f[0, 1, 0] = -1.0
    f[1, 1, 0] = 2.0
    f[1, 2, 0] = -2.0
    f[2, 0, 0] = 3.0
    f[2, 2, 0] = -3.0
    return MarkovShiftBase(P3, f)


# ---------------------------------------------------------------------------
# eigenvalue curve
# ---------------------------------------------------------------------------

def test_coin_leading_eigenvalue_is_cos_t():
    model = TwistedOperatorModel(coin_chain(), components=(0,))
    curve = EigenCurve(model)
    for t in (0.1, 0.3, 0.7, 1.2):
        assert curve.lam([t]) == pytest.approx(math.cos(t), abs=1e-12)


def test_no_gap_at_degenerate_twist():
    model = TwistedOperatorModel(coin_chain(), components=(0,))
    with pytest.raises(NoGapError):
        leading_eigenvalue(twisted_matrix(model, [math.pi / 2]))


def test_coin_expansion_fit():
    model = TwistedOperatorModel(coin_chain(), components=(0,))
    drift, m, order = expansion_fit(EigenCurve(model))
    # log cos t = -t^2/2 - t^4/12 - ...: variance 1, drift 0, quartic tail
    assert abs(drift[0]) < 1e-10
    assert m[0, 0] == pytest.approx(0.5, abs=1e-6)
    assert order == pytest.approx(4.0, abs=0.2)


def test_chain3_expansion_drift_matches_means():
    sys = chain3()
    assert sys.nu_phi == pytest.approx(0.0, abs=1e-14)
    assert sys.nu_tau == pytest.approx(5 / 3, abs=1e-14)
    model = TwistedOperatorModel(sys)
    drift, m, order = expansion_fit(EigenCurve(model))
    assert drift[0] == pytest.approx(0.0, abs=1e-8)
    assert drift[1] == pytest.approx(5 / 3, abs=1e-8)
    # the covariance matrix must be symmetric positive definite
    assert np.allclose(m, m.T)
    assert np.all(np.linalg.eigvalsh(m) > 0)
    assert order >= 2.9


def test_deterministic_roof_expansion_is_exact():
    model = TwistedOperatorModel(coin_chain(), components=(1,))
    drift, m, order = expansion_fit(EigenCurve(model))
    # constant roof 1: log lambda_t = i t exactly
    assert drift[0] == pytest.approx(1.0, abs=1e-12)
    assert abs(m[0, 0]) < 1e-9
    assert order == math.inf


def test_expansion_fit_rejects_bad_radius():
    model = TwistedOperatorModel(coin_chain(), components=(0,))
    with pytest.raises(IllConditionedFit):
        expansion_fit(EigenCurve(model), h=0.5)


# ---------------------------------------------------------------------------
# fourier inversion
# ---------------------------------------------------------------------------

def test_lattice_exact_coin_binomial():
    model = TwistedOperatorModel(coin_chain(), components=(0,))
    assert fourier_lclt(model, 10, [0.0]) == pytest.approx(252 / 1024,
                                                           abs=1e-10)
    assert fourier_lclt(model, 10, [2.0]) == pytest.approx(210 / 1024,
                                                           abs=1e-10)
    # parity: odd values unreachable in 10 steps
    assert fourier_lclt(model, 10, [3.0]) == pytest.approx(0.0, abs=1e-10)
    # off-lattice target short-circuits to 0
    assert fourier_lclt(model, 10, [0.5]) == 0.0
    assert fourier_lclt(model, 0, [0.0]) == 1.0
    assert fourier_lclt(model, 0, [1.0]) == 0.0


def _enumerate_chain3_pmf(sys, n):
    """Exact pmf of S_n under the stationary start, by path enumeration."""
    pmf = {}
    states = range(3)
    for path in itertools.product(states, repeat=n + 1):
        p = sys.stationary[path[0]]
        s = 0.0
        ok = True
        for i, j in zip(path, path[1:]):
            if sys.P[i][j] == 0:
                ok = False
                break
            p *= sys.P[i][j]
            s += sys.f[i, j, 0]
        if ok and p > 0:
            pmf[round(s)] = pmf.get(round(s), 0.0) + p
    return pmf


def test_lattice_exact_matches_path_enumeration():
    sys = int_chain3()
    model = TwistedOperatorModel(sys, components=(0,))
    assert abs(model.nu_f[0]) < 1e-14
    pmf = _enumerate_chain3_pmf(sys, 4)
    for v in range(-8, 9):
        assert fourier_lclt(model, 4, [float(v)]) == pytest.approx(
            pmf.get(v, 0.0), abs=1e-10)


def test_lattice_exact_rejects_noninteger_values():
    model = TwistedOperatorModel(chain3(), components=(0,))
    with pytest.raises(ValueError, match="integer-valued"):
        fourier_lclt(model, 4, [0.0])


def _fejer(z, eps):
    if abs(z) < 1e-12:
        return 1 / (2 * math.pi)
    return (1 - math.cos(eps * z)) / (math.pi * eps ** 2 * z ** 2)


def test_smoothed_mode_matches_kernel_expectation():
    # coin: S_10 is binomial; E[h(S_10 - v)] with the triangular frequency
    # profile, i.e. the Fejer-type kernel h(z) = (1 - cos eps z)/(pi eps^2
    # z^2), computable exactly from the binomial weights
    model = TwistedOperatorModel(coin_chain(), components=(0,))
    eps = 0.8
    for v in (0.0, 0.4):
        oracle = sum(math.comb(10, k) / 1024 * _fejer((2 * k - 10) - v, eps)
                     for k in range(11))
        got = fourier_lclt(model, 10, [v], mode="Smoothed", eps=eps)
        assert got == pytest.approx(oracle, abs=1e-10)
    with pytest.raises(ValueError):
        fourier_lclt(model, 10, [0.0], mode="Smoothed")
    with pytest.raises(ValueError):
        fourier_lclt(model, 10, [0.0], mode="Bogus")


# ---------------------------------------------------------------------------
# unit-modulus scan
# ---------------------------------------------------------------------------

def test_unit_modulus_scan_detects_lattice():
    model = TwistedOperatorModel(coin_chain(), components=(0,))
    grid = [[t] for t in np.concatenate([np.pi * np.arange(-3, 4),
                                         [0.4, 1.1, 2.0]])]
    res = unit_modulus_scan(model, grid)
    hits = sorted(t[0] for t, _ in res["detections"])
    assert hits == pytest.approx(list(np.pi * np.arange(-3, 4)), abs=1e-12)
    assert res["inferred_M"].kind == "lattice"
    assert float(res["inferred_M"].a) == pytest.approx(2.0, abs=1e-12)
    # lambda(pi) = -1: coset shift 1 modulo the lattice spacing 2
    assert res["shift"] == pytest.approx(1.0, abs=1e-9)


def test_unit_modulus_scan_aperiodic_case():
    model = TwistedOperatorModel(chain3(), components=(0,))
    grid = [[t] for t in np.linspace(0.3, 6.0, 40)]
    res = unit_modulus_scan(model, grid)
    assert res["detections"] == []
    assert res["inferred_M"].kind == "R"


def test_eigen_curve_rows_shape():
    model = TwistedOperatorModel(chain3())
    rows = eigen_curve_rows(model, [[0.0, 0.0], [0.1, 0.2]])
    assert len(rows) == 2 and len(rows[0]) == 6
    assert rows[0][2] == pytest.approx(1.0)   # lambda(0) = 1
    assert rows[0][5] > 0                     # spectral gap at 0
