import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmse_lab import asymptotics as asy
from mmse_lab import closedform as cf
from mmse_lab.channels import (AntennaConfig, CorrelationMatrix, IidRayleigh, RicianRank1,
                               SeparableRayleigh, build_exp_correlation)
from mmse_lab.matkit import RepeatedEigenvalues
from mmse_lab.montecarlo import LOG2E, mc_estimate
from mmse_lab.specfun import expint_scaled
from mmse_lab.verify import mc_mi_evaluator, mi_quadrature_oracle, realization_mi_evaluator

I = CorrelationMatrix.identity
E = build_exp_correlation


def _raw_iid_mi(n, m, x):
    """Factorial-matrix determinant sum with the multivariate-gamma normalizers, in mpmath."""
    with mpmath.workdps(50):
        x = mpmath.mpf(x)
        total = 0
        for k in range(1, n + 1):
            mat = mpmath.matrix(n, n)
            for s in range(1, n + 1):
                for t in range(1, n + 1):
                    tau = n + m - s - t
                    v = mpmath.factorial(tau)
                    if t == k:
                        v *= sum(mpmath.expint(h, x) for h in range(1, tau + 2))
                    mat[s - 1, t - 1] = v
            total += mpmath.det(mat)
        gam = mpmath.fprod(mpmath.gamma(m - i + 1) for i in range(1, n + 1)) * \
            mpmath.fprod(mpmath.gamma(n - i + 1) for i in range(1, n + 1))
        return float(mpmath.exp(x) * total / gam / mpmath.log(2))


@pytest.mark.parametrize("nr,nt", [(2, 2), (3, 2), (2, 4), (4, 4), (5, 3)])
@pytest.mark.parametrize("snr", [0.5, 10.0, 300.0])
def test_iid_matches_raw_factorial_form(nr, nt, snr):
    cfg = AntennaConfig(nr, nt)
    x = nt / snr
    raw = nt * (_raw_iid_mi(cfg.n, cfg.m, x) - _raw_iid_mi(cfg.n_prime, cfg.m_prime, x))
    assert cf.iid_sum_rate(cfg, snr) == pytest.approx(raw, rel=1e-11)


@pytest.mark.parametrize("nr", [2, 3, 5, 8])
@pytest.mark.parametrize("snr", [0.1, 10.0, 1e4])
def test_iid_two_transmit_special_case(nr, snr):
    a = 2.0 / snr
    e = [None] + [expint_scaled(k, a) for k in range(1, nr + 2)]
    special = 2.0 * LOG2E * (sum(e[1:nr + 1]) + nr * (e[nr + 1] - e[nr]))
    assert cf.iid_sum_rate(AntennaConfig(nr, 2), snr) == pytest.approx(special, rel=1e-11)


@pytest.mark.parametrize("nt", [2, 3, 6])
@pytest.mark.parametrize("snr", [0.1, 10.0, 1e4])
def test_iid_two_receive_special_case(nt, snr):
    x = nt / snr
    special = nt * LOG2E * ((nt - 1) * expint_scaled(nt - 1, x) + (3 - 2 * nt) * expint_scaled(nt, x)
                            + nt * expint_scaled(nt + 1, x))
    assert cf.iid_sum_rate(AntennaConfig(2, nt), snr) == pytest.approx(special, rel=1e-10)


def test_iid_2x2_vs_monte_carlo():
    est = mc_estimate(IidRayleigh(AntennaConfig(2, 2)), 10.0, "mmse_rate", 10**6, 1)
    assert abs(cf.iid_sum_rate(AntennaConfig(2, 2), 10.0) - est.mean) < 3 * est.stderr


def test_iid_low_snr_limit_and_guard():
    v = cf.iid_sum_rate(AntennaConfig(3, 2), 1e-9)
    assert 0 < v and v == pytest.approx(3 * LOG2E * 1e-9, rel=1e-6)
    with pytest.raises(ValueError):
        cf.iid_sum_rate(AntennaConfig(33, 4), 1.0)
    with pytest.raises(ValueError):
        cf.iid_sum_rate(AntennaConfig(3, 1), 1.0)
    with pytest.raises(ValueError):
        cf.iid_sum_rate(AntennaConfig(3, 2), 0.0)


def test_iid_sixty_db_conditioning():
    # E_1 log singularity at small argument: compare with the affine expansion
    for nr, nt in ((2, 2), (4, 2), (6, 6)):
        cfg = AntennaConfig(nr, nt)
        hi = asy.high_snr_params(IidRayleigh(cfg))
        exact = cf.iid_sum_rate(cfg, 1e6)
        assert abs(exact - asy.affine_rate(hi, 1e6)) < 0.01


def test_large_iid_uses_extended_precision():
    # dimension 16 and up is beyond float64 for the binomial determinant
    cfg = AntennaConfig(32, 16)
    hi = asy.high_snr_params(IidRayleigh(cfg))
    assert abs(cf.iid_sum_rate(cfg, 1e6) - asy.affine_rate(hi, 1e6)) < 0.01


@pytest.mark.parametrize("p", [2, 3])
def test_semicorr_matches_quadrature(p):
    eigs = E(2, 0.5).eig
    np.testing.assert_allclose(eigs, [1.5, 0.5])
    cfg = AntennaConfig(p, 2)
    assert cf.semicorr_opt_mi(eigs, p, cfg, 10.0) == pytest.approx(
        mi_quadrature_oracle(eigs, p, 2, cfg, 10.0), abs=1e-6)


def test_semicorr_near_identity_vs_monte_carlo():
    cfg = AntennaConfig(3, 3)
    est = mc_estimate(IidRayleigh(cfg), 10.0, "opt_mi", 400_000, 2)
    v = cf.semicorr_opt_mi(E(3, 1e-5).eig, 3, cfg, 10.0)
    assert abs(v - cf.iid_opt_mi(cfg, 10.0)) < 1e-3
    assert abs(v - est.mean) < 3 * est.stderr + 1e-3


def test_semicorr_scalar_case():
    for p in (1, 3):
        cfg = AntennaConfig(p, 1)
        assert cf.semicorr_opt_mi(np.array([1.0]), p, cfg, 5.0) == pytest.approx(
            cf.iid_opt_mi(cfg, 5.0), rel=1e-13)


def test_semicorr_argument_checks():
    with pytest.raises(ValueError):
        cf.semicorr_opt_mi([1.5, 0.5], 3, AntennaConfig(2, 2), 1.0)
    with pytest.raises(RepeatedEigenvalues):
        cf.semicorr_opt_mi([1.5, 1.5, 0.0 + 1e-3], 2, AntennaConfig(3, 2), 1.0)


def test_rxcorr_vs_monte_carlo():
    cfg = AntennaConfig(5, 3)
    m = SeparableRayleigh(cfg, E(5, 0.5), I(3))
    est = mc_estimate(m, 10.0, "mmse_rate", 400_000, 3)
    assert abs(cf.rxcorr_sum_rate(m.R.eig, cfg, 10.0) - est.mean) < 3 * est.stderr


@pytest.mark.parametrize("rho", [1e-3, 1e-5])
def test_rxcorr_continuity(rho):
    cfg = AntennaConfig(5, 3)
    for snr in (1.0, 100.0):
        assert abs(cf.rxcorr_sum_rate(E(5, rho).eig, cfg, snr) - cf.iid_sum_rate(cfg, snr)) < 1e-3


def test_rxcorr_repeated():
    with pytest.raises(RepeatedEigenvalues):
        cf.rxcorr_sum_rate(np.ones(3), AntennaConfig(3, 2), 1.0)


def test_txcorr_vs_monte_carlo_and_ordering():
    cfg = AntennaConfig(5, 3)
    for rho in (0.5, 0.9):
        m = SeparableRayleigh(cfg, I(5), E(3, rho))
        est = mc_estimate(m, 100.0, "mmse_rate", 200_000, 4)
        assert abs(cf.txcorr_sum_rate(m.S, cfg, 100.0) - est.mean) < 3 * est.stderr
    assert cf.txcorr_sum_rate(E(3, 0.9), cfg, 100.0) < cf.txcorr_sum_rate(E(3, 0.5), cfg, 100.0)


def test_txcorr_continuity_and_identity_minor():
    cfg = AntennaConfig(5, 3)
    assert abs(cf.txcorr_sum_rate(E(3, 1e-5), cfg, 10.0) - cf.iid_sum_rate(cfg, 10.0)) < 1e-3
    # S^{33} is the identity; S itself has distinct eigenvalues
    S = CorrelationMatrix(np.array([[1.0, 0.4, 0.0], [0.4, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    m = SeparableRayleigh(cfg, I(5), S)
    est = mc_estimate(m, 10.0, "mmse_rate", 200_000, 5)
    assert abs(cf.txcorr_sum_rate(S, cfg, 10.0) - est.mean) < 3 * est.stderr


def test_txcorr_repeated_minor():
    S = CorrelationMatrix(np.array([[1.0, 0.3, 0.3], [0.3, 1.0, 0.3], [0.3, 0.3, 1.0]]))
    with pytest.raises(RepeatedEigenvalues):
        cf.txcorr_sum_rate(S, AntennaConfig(3, 3), 1.0)


def test_compose_two_evaluator_paths_iid():
    for nr, nt in ((2, 2), (4, 3), (2, 5)):
        cfg = AntennaConfig(nr, nt)
        model = IidRayleigh(cfg)
        composed = cf.theorem1_compose(model, 7.0, cf.closed_mi_evaluator(model))
        assert composed == pytest.approx(cf.iid_sum_rate(cfg, 7.0), rel=1e-12)
        # a bare config is treated column by column
        assert cf.theorem1_compose(cfg, 7.0, cf.closed_mi_evaluator(model)) == pytest.approx(
            composed, rel=1e-12)


def test_compose_identity_channel():
    assert cf.theorem1_compose(AntennaConfig(2, 2), 2.0,
                               realization_mi_evaluator(np.eye(2))) == pytest.approx(2.0)


def test_compose_rician_monte_carlo():
    model = RicianRank1(AntennaConfig(2, 2), 2.0, 0.3, 0.8)
    composed = cf.theorem1_compose(model, 10.0, mc_mi_evaluator(model, 10**6, 10))
    direct = mc_estimate(model, 10.0, "mmse_rate", 10**6, 20)
    assert abs(composed.mean - direct.mean) < 3 * math.hypot(composed.stderr, direct.stderr)


def test_rx_only_reduced_terms_are_equal():
    model = SeparableRayleigh(AntennaConfig(4, 3), E(4, 0.6), I(3))
    ev = cf.closed_mi_evaluator(model)
    assert ev(5.0, 0) == ev(5.0, 2)


def test_dispatcher():
    cfg = AntennaConfig(3, 2)
    assert cf.mmse_sum_rate(SeparableRayleigh(cfg, I(3), I(2)), 3.0) == pytest.approx(
        cf.iid_sum_rate(cfg, 3.0))
    with pytest.raises(cf.ClosedFormUnavailable):
        cf.mmse_sum_rate(SeparableRayleigh(cfg, E(3, 0.2), E(2, 0.2)), 3.0)
    with pytest.raises(cf.ClosedFormUnavailable):
        cf.mmse_sum_rate(RicianRank1(cfg, 1.0), 3.0)


GRID_MODELS = [
    IidRayleigh(AntennaConfig(2, 2)),
    IidRayleigh(AntennaConfig(6, 3)),
    IidRayleigh(AntennaConfig(3, 6)),
    IidRayleigh(AntennaConfig(6, 6)),
    SeparableRayleigh(AntennaConfig(4, 4), E(4, 0.7), I(4)),
    SeparableRayleigh(AntennaConfig(3, 5), I(3), E(5, 0.6)),
]


@pytest.mark.parametrize("model", GRID_MODELS, ids=lambda m: m.describe())
def test_closed_vs_monte_carlo_grid(model):
    for db in range(0, 31, 5):
        snr = 10.0 ** (db / 10.0)
        est = mc_estimate(model, snr, "mmse_rate", 100_000, 1000 + db)
        assert abs(cf.mmse_sum_rate(model, snr) - est.mean) < 3 * est.stderr, db


MONO_MODELS = GRID_MODELS + [SeparableRayleigh(AntennaConfig(2, 3), E(2, 0.3), I(3))]


@given(idx=st.integers(0, len(MONO_MODELS) - 1), a=st.floats(-20.0, 50.0),
       d=st.floats(0.01, 10.0))
def test_rates_increase_with_snr(idx, a, d):
    model = MONO_MODELS[idx]
    lo, hi = 10.0 ** (a / 10.0), 10.0 ** ((a + d) / 10.0)
    r_lo, r_hi = cf.mmse_sum_rate(model, lo), cf.mmse_sum_rate(model, hi)
    assert 0.0 <= r_lo < r_hi
    assert cf.opt_mi(model, lo) < cf.opt_mi(model, hi)
    assert r_hi <= cf.opt_mi(model, hi) + 1e-9
