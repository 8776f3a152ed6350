import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmse_lab import specfun as sf

# e^x E_h(x) at 60 digits
REFERENCE = [
    (1, 1.0, 0.59634736232319407434),
    (2, 0.5, 0.53854468375813476558),
    (5, 0.01, 0.24917079336604643476),
    (3, 7.5, 0.097579452736563177303),
    (10, 100.0, 0.0090983068619603731145),
    (34, 177.83, 0.0047243182415297751985),
    (1, 1e-3, 6.3378740703254879563),
    (20, 1e3, 0.00098041096754380376562),
]


@pytest.mark.parametrize("h,x,expected", REFERENCE)
def test_expint_scaled_reference(h, x, expected):
    assert sf.expint_scaled(h, x) == pytest.approx(expected, rel=1e-13)


def test_expint_scaled_against_quadrature():
    # e^x E_1(x) = int_1^inf e^{-x(t-1)} / t dt
    from scipy import integrate

    for x in (0.2, 1.0, 3.0):
        val, _ = integrate.quad(lambda t: math.exp(-x * (t - 1.0)) / t, 1.0, np.inf,
                                epsabs=0, epsrel=1e-13)
        assert sf.expint_scaled(1, x) == pytest.approx(val, rel=1e-11)


def test_expint_small_argument_limit():
    for h in (2, 3, 7):
        assert sf.expint_scaled(h, 1e-12) == pytest.approx(1.0 / (h - 1), rel=1e-9)


def test_expint_large_argument_finite():
    v = sf.expint_scaled(4, 1e8)
    assert math.isfinite(v) and v == pytest.approx(1e-8, rel=1e-7)


def test_expint_seq_matches_scalar():
    for x in (0.01, 0.9, 1.1, 40.0):
        seq = sf.expint_scaled_seq(12, x)
        for h in range(1, 13):
            assert seq[h - 1] == pytest.approx(sf.expint_scaled(h, x), rel=1e-13)


@pytest.mark.parametrize("h,x", [(0, 1.0), (1, 0.0), (1, -1.0), (2, math.inf), (1.5, 1.0)])
def test_expint_domain_errors(h, x):
    with pytest.raises(ValueError):
        sf.expint_scaled(h, x)


def test_expint_mp_twin():
    # quadrature reference: mpmath.expint itself drops digits for large h and x
    with mpmath.workdps(60):
        for x in (0.3, 177.83):
            got = sf.expint_scaled_seq_mp(34, x)
            for h in (1, 7, 34):
                ref = mpmath.quad(lambda t: mpmath.exp(-x * (t - 1)) / t**h,
                                  [1, 1.01, 1.1, 2, mpmath.inf])
                assert abs(got[h - 1] - ref) < mpmath.mpf(10) ** -40 * abs(ref)


@given(h=st.integers(1, 30), x=st.floats(1e-3, 1e3))
def test_expint_recurrence(h, x):
    lhs = sf.expint_scaled(h + 1, x)
    rhs = (1.0 - x * sf.expint_scaled(h, x)) / h
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


@given(h=st.integers(1, 40), x=st.floats(1e-6, 1e6))
def test_expint_bracketing(h, x):
    # 1/(x+h) < e^x E_h(x) <= 1/(x+h-1)
    v = sf.expint_scaled(h, x)
    assert v > 1.0 / (x + h) * (1 - 1e-13)
    assert v <= 1.0 / (x + h - 1) * (1 + 1e-13)


@pytest.mark.parametrize("j,expected", [(1, -0.5772156649015329), (2, 0.42278433509846713),
                                        (4, 1.2561176684318005)])
def test_digamma_values(j, expected):
    assert sf.digamma_int(j) == pytest.approx(expected, abs=1e-15)


def test_digamma_vs_mpmath():
    for j in (1, 3, 17, 250):
        assert sf.digamma_int(j) == pytest.approx(float(mpmath.digamma(j)), rel=1e-15, abs=1e-16)


@given(j=st.integers(1, 5000))
def test_digamma_difference(j):
    d = sf.digamma_int(j + 1) - sf.digamma_int(j)
    assert abs(d - 1.0 / j) <= np.spacing(abs(sf.digamma_int(j + 1)))


def test_digamma_domain():
    with pytest.raises(ValueError):
        sf.digamma_int(0)


@pytest.mark.parametrize("n,m,expected", [(1, 1, 0.0), (2, 3, math.log(2.0)),
                                          (3, 5, math.log(288.0))])
def test_log_multivariate_gamma(n, m, expected):
    assert sf.log_multivariate_gamma(n, m) == pytest.approx(expected, abs=1e-14)


def test_log_multivariate_gamma_large_and_domain():
    exact = sum(math.lgamma(200 - i + 1) for i in range(1, 101))
    assert sf.log_multivariate_gamma(100, 200) == pytest.approx(exact, rel=1e-14)
    with pytest.raises(ValueError):
        sf.log_multivariate_gamma(3, 2)


def _fsum_series(z, b, terms=60):
    out, t = [1.0], 1.0
    for k in range(terms):
        t *= -z * (k + 1) / ((k + 2) * (b + k))
        out.append(t)
    return math.fsum(out)


def test_theta_reference_value():
    assert sf.theta_2f2(2, 2, 0.025) == pytest.approx(0.98360699934564222054, rel=1e-14)
    assert sf.theta_2f2(2, 2, 0.025) == pytest.approx(_fsum_series(0.1, 3.0), rel=1e-14)


def test_theta_zero_and_domain():
    assert sf.theta_2f2(3, 5, 0.0) == 1.0
    with pytest.raises(ValueError):
        sf.theta_2f2(2, 2, -0.1)


def test_hyp2f2_against_mpmath_wide_range():
    with mpmath.workdps(40):
        for b in (2.0, 3.0, 6.0, 33.0):
            for z in np.concatenate([np.linspace(0.0, 5.0, 6), np.geomspace(5.0, 1e3, 25)]):
                ref = float(mpmath.hyp2f2(1, 1, 2, b, -mpmath.mpf(float(z))))
                assert sf.hyp2f2_neg(b, float(z)) == pytest.approx(ref, rel=1e-9)


def test_hyp2f2_series_quadrature_overlap():
    for b in (2.0, 3.0, 5.0):
        for z in np.linspace(20.0, 30.0, 11):
            series, err = sf._hyp2f2_series(float(z), b)
            quad = sf._hyp2f2_quad(float(z), b)
            if err < 1e-11 * abs(series):
                assert series == pytest.approx(quad, rel=1e-9)
            ref = float(mpmath.hyp2f2(1, 1, 2, b, -float(z)))
            assert quad == pytest.approx(ref, rel=1e-9)


@given(nr=st.integers(1, 8), nt=st.integers(1, 8), k=st.floats(0.0, 100.0))
def test_theta_monotone_positive(nr, nt, k):
    a = sf.theta_2f2(nr, nt, k)
    b = sf.theta_2f2(nr, nt, k * 1.1 + 0.01)
    assert 0.0 < b <= a <= 1.0
