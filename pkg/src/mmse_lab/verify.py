"""Independent oracles for the closed forms and the asymptotic parameters.

* per-realization check that the MMSE sum rate equals the full-minus-reduced
  log-det decomposition (a purely algebraic identity),
* the ergodic MI by quadrature against the unordered-eigenvalue density of
  ``H^H H`` (no exponential integrals involved),
* empirical high/low-SNR parameters read off any rate function.

Each ``suite_*`` function returns a JSON-ready report
``{suite, cases, max_residual, pass}``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import asymptotics as asy
from . import closedform as cf
from .channels import (AntennaConfig, ChannelModel, IidRayleigh, RicianRank1,
                       SeparableRayleigh, build_exp_correlation, sample_channels)
from .matkit import strict_descending
from .montecarlo import LOG2E, mc_estimate, opt_mi_realization, sum_rate_realization

LN2 = math.log(2.0)
DENSITY_TOL = 1e-8


# --- per-realization identity ----------------------------------------------

def decomposition_realization(h: np.ndarray, snr: float) -> np.ndarray | float:
    """``Nt I_opt(H) - sum_i I_opt(H_i)`` with every term at ``snr / Nt`` per stream."""
    h = np.asarray(h)
    nt = h.shape[-1]
    if nt < 2:
        raise ValueError("the decomposition needs nt >= 2")
    red_snr = snr * (nt - 1) / nt
    full = nt * np.asarray(opt_mi_realization(h, snr))
    red = sum(np.asarray(opt_mi_realization(np.delete(h, i, axis=-1), red_snr))
              for i in range(nt))
    return full - red


def theorem1_identity_check(h: np.ndarray, snr: float) -> float:
    """Max absolute gap between the MMSE sum rate and its log-det decomposition."""
    lhs = np.asarray(sum_rate_realization(h, snr))
    rhs = np.asarray(decomposition_realization(h, snr))
    return float(np.max(np.abs(lhs - rhs)))


# --- quadrature oracle --------------------------------------------------------

def _density_fn(eigs: np.ndarray, p: int, q: int) -> Callable[[float], float]:
    n = min(p, q)
    if np.allclose(eigs, 1.0, rtol=0.0, atol=cf.IDENTITY_SNAP):
        # unit covariance: Laguerre-polynomial form of the Wishart eigenvalue density
        m, a = max(p, q), abs(p - q)
        weights = [math.exp(math.lgamma(k + 1) - math.lgamma(k + a + 1)) for k in range(n)]

        def f(lam: float) -> float:
            s = sum(w * special.eval_genlaguerre(k, a, lam) ** 2 for k, w in enumerate(weights))
            return s * lam**a * math.exp(-lam) / n
        return f

    beta = strict_descending(eigs)
    base = beta[:, None] ** np.arange(q)[None, :]
    vand = np.linalg.det(base)
    # cofactors of the Vandermonde base: expanding det D_k along column k
    cof = vand * np.linalg.inv(base).T
    ks = np.arange(q - n + 1, q + 1)
    powers = p - q + ks - 1
    log_norm = np.array([math.lgamma(int(a) + 1) for a in powers])
    bscale = beta ** (q - p - 1)

    def f(lam: float) -> float:
        ex = np.exp(-lam / beta) * bscale
        col = ex @ cof[:, ks - 1]
        with np.errstate(divide="ignore"):
            lp = np.where(powers > 0, powers * math.log(lam) if lam > 0 else -np.inf, 0.0)
        return float(np.sum(col * np.exp(lp - log_norm))) / (n * vand)
    return f


def _integrate(fun: Callable[[float], float], scale: float) -> tuple[float, float]:
    pts = [0.0, scale, 4.0 * scale, 16.0 * scale]
    total, err = 0.0, 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        v, e = integrate.quad(fun, a, b, epsabs=1e-12, epsrel=1e-12, limit=400)
        total += v
        err += e
    v, e = integrate.quad(fun, pts[-1], np.inf, epsabs=1e-12, epsrel=1e-12, limit=400)
    return total + v, err + e


def eigenvalue_density(eigs, p: int, q: int) -> Callable[[float], float]:
    """Density of an unordered nonzero eigenvalue of ``H^H H`` (semi-correlated)."""
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size != q:
        raise ValueError("need q eigenvalues")
    return _density_fn(eigs, p, q)


def mi_quadrature_oracle(eigs, p: int, q: int, cfg: AntennaConfig, snr: float) -> float:
    """Ergodic MI (bits) as ``n * int log2(1 + snr/Nt lam) f(lam) dlam``.

    ``eigs`` are the ``q`` eigenvalues of the one-sided correlation matrix;
    all-ones selects the uncorrelated density. Raises ``ArithmeticError`` if the
    density does not integrate to one within 1e-8 or the quadrature error
    estimate exceeds 1e-8.
    """
    if sorted((p, q)) != sorted((cfg.nr, cfg.nt)):
        raise ValueError(f"(p={p}, q={q}) does not match nr={cfg.nr}, nt={cfg.nt}")
    eigs = np.asarray(eigs, dtype=float)
    f = eigenvalue_density(eigs, p, q)
    n = min(p, q)
    scale = float(np.max(eigs)) * max(p, q)
    mass, mass_err = _integrate(f, scale)
    if abs(mass - 1.0) > DENSITY_TOL:
        raise ArithmeticError(f"eigenvalue density integrates to {mass!r}")
    c = snr / cfg.nt
    val, err = _integrate(lambda lam: math.log1p(c * lam) * f(lam), scale)
    if n * LOG2E * err > DENSITY_TOL:
        raise ArithmeticError(f"quadrature error estimate {err:g} too large")
    return n * LOG2E * val


# --- empirical asymptotes ---------------------------------------------------

HIGH_SNR_DB = (50.0, 60.0)
LOW_SNR_STEP = 1e-4


@dataclass(frozen=True)
class EmpiricalHigh:
    slope: float
    offset: float


@dataclass(frozen=True)
class EmpiricalLow:
    rate_deriv: float
    rate_second: float
    ebno_min: float
    s0: float


def empirical_asymptote_fit(rate_fn: Callable[[float], float], regime: str,
                            cfg: AntennaConfig | None = None):
    """Read affine or wideband parameters off ``rate_fn(snr)`` (bits/s/Hz).

    ``high``: two-point fit at 50 and 60 dB. ``low``: with ``I(0) = 0``,
    ``I'(0) ~ (4 I(h) - I(2h)) / 2h`` and ``I''(0) ~ (I(2h) - 2 I(h)) / h^2``
    at ``h = 1e-4``; then ``Eb/N0_min = 1 / I'(0)`` and
    ``S0 = 2 ln2 I'(0)^2 / -I''(0)``. ``cfg`` is accepted for reporting only.
    """
    if regime == "high":
        s1, s2 = (10.0 ** (d / 10.0) for d in HIGH_SNR_DB)
        i1, i2 = rate_fn(s1), rate_fn(s2)
        slope = (i2 - i1) / math.log2(s2 / s1)
        offset = math.log2(s2) - i2 / slope if abs(slope) > 1e-9 else math.inf
        return EmpiricalHigh(slope, offset)
    if regime == "low":
        h = LOW_SNR_STEP
        i1, i2 = rate_fn(h), rate_fn(2.0 * h)
        d1 = (4.0 * i1 - i2) / (2.0 * h)
        d2 = (i2 - 2.0 * i1) / (h * h)
        return EmpiricalLow(d1, d2, 1.0 / d1, 2.0 * LN2 * d1 * d1 / -d2)
    raise ValueError(f"regime must be 'high' or 'low', got {regime!r}")


def mc_rate_fn(model: ChannelModel, metric: str, nsamples: int, seed: int) -> Callable[[float], float]:
    """Monte-Carlo rate function; every snr reuses the same draws."""
    return lambda snr: mc_estimate(model, snr, metric, nsamples, seed).mean


def closed_rate_fn(model: ChannelModel, receiver: str = "mmse") -> Callable[[float], float]:
    if receiver == "mmse":
        return lambda snr: cf.mmse_sum_rate(model, snr)
    return lambda snr: cf.opt_mi(model, snr)


# --- suites -------------------------------------------------------------------

def _report(suite: str, cases: list[dict], residual_key: str = "residual") -> dict:
    finite = [c[residual_key] for c in cases if math.isfinite(c[residual_key])]
    return {
        "suite": suite,
        "cases": cases,
        "max_residual": max(finite) if finite else 0.0,
        "pass": all(c["pass"] for c in cases),
    }


def default_models(nr: int = 4, nt: int = 3) -> list[ChannelModel]:
    cfg = AntennaConfig(nr, nt)
    return [
        IidRayleigh(cfg),
        SeparableRayleigh(cfg, build_exp_correlation(nr, 0.6), build_exp_correlation(nt, 0.4)),
        RicianRank1(cfg, 2.0, 0.4, -0.7),
    ]


def suite_identity(trials: int = 1000, seed: int = 1, snrs=(0.1, 1.0, 10.0, 100.0),
                   models: list[ChannelModel] | None = None, tol: float = 1e-9) -> dict:
    """Decomposition identity on ``trials`` draws per (model, snr)."""
    cases = []
    for model in models or default_models():
        h = sample_channels(model, seed, 0, trials)
        for snr in snrs:
            r = theorem1_identity_check(h, snr)
            cases.append({"model": model.describe(), "snr": snr, "trials": trials,
                          "residual": r, "pass": bool(r < tol)})
    return _report("identity", cases)


def suite_specfun() -> dict:
    """Special-function self-consistency checks against extended precision."""
    import mpmath

    from . import specfun as sf

    cases = []
    t0 = time.perf_counter()
    # recurrence e^x E_{h+1} = (1 - x e^x E_h) / h
    worst = 0.0
    for x in np.geomspace(1e-3, 1e3, 61):
        seq = [sf.expint_scaled(h, float(x)) for h in range(1, 22)]
        for h in range(1, 21):
            rhs = (1.0 - x * seq[h - 1]) / h
            worst = max(worst, abs(seq[h] - rhs) / abs(seq[h]))
    cases.append({"check": "expint recurrence", "residual": worst, "tol": 1e-12,
                  "pass": bool(worst < 1e-12)})
    # digamma differences, to the rounding unit of psi(j+1)
    worst = 0.0
    for j in range(1, 200):
        d = sf.digamma_int(j + 1) - sf.digamma_int(j)
        ulps = abs(d - 1.0 / j) / np.spacing(abs(sf.digamma_int(j + 1)))
        worst = max(worst, ulps)
    cases.append({"check": "digamma difference (ulps)", "residual": float(worst), "tol": 1.0,
                  "pass": bool(worst <= 1.0)})
    # log multivariate gamma against exact factorials
    worst = 0.0
    for n in range(1, 9):
        for m in range(n, 12):
            exact = math.log(math.prod(math.factorial(m - i) for i in range(1, n + 1)))
            worst = max(worst, abs(sf.log_multivariate_gamma(n, m) - exact) / max(1.0, exact))
    cases.append({"check": "log multivariate gamma", "residual": worst, "tol": 1e-13,
                  "pass": bool(worst < 1e-13)})
    # 2F2: series vs quadrature on the overlap, and both vs mpmath
    worst_overlap = 0.0
    worst_ref = 0.0
    with mpmath.workdps(40):
        for b in (2.0, 3.0, 5.0, 9.0):
            for z in np.linspace(20.0, 30.0, 6):
                ser, err = sf._hyp2f2_series(float(z), b)
                quad = sf._hyp2f2_quad(float(z), b)
                if err < 1e-11 * abs(ser):
                    worst_overlap = max(worst_overlap, abs(ser - quad) / abs(quad))
            for z in np.concatenate([[0.0, 1e-3, 0.5], np.geomspace(1.0, 1e3, 13)]):
                ref = float(mpmath.hyp2f2(1, 1, 2, b, -mpmath.mpf(float(z))))
                worst_ref = max(worst_ref, abs(sf.hyp2f2_neg(b, float(z)) - ref) / abs(ref))
    cases.append({"check": "2F2 series/quadrature overlap", "residual": worst_overlap,
                  "tol": 1e-9, "pass": bool(worst_overlap < 1e-9)})
    cases.append({"check": "2F2 vs extended precision", "residual": worst_ref, "tol": 1e-9,
                  "pass": bool(worst_ref < 1e-9)})
    elapsed = time.perf_counter() - t0
    cases.append({"check": "runtime seconds", "residual": elapsed, "tol": 5.0,
                  "pass": bool(elapsed < 5.0)})
    rep = _report("specfun", cases[:-1])
    rep["cases"] = cases
    rep["pass"] = rep["pass"] and cases[-1]["pass"]
    return rep


def suite_closed_vs_mc(model: ChannelModel, snrs_db=(0.0, 10.0, 20.0, 30.0),
                       nsamples: int = 100_000, seed: int = 1, nsigma: float = 3.0) -> dict:
    """Exact (or decomposition-with-MC for models without a closed form) vs direct MC.

    The residual is the gap in units of the combined standard error.
    """
    cases = []
    try:
        cf.closed_mi_evaluator(model)
        exact = True
    except cf.ClosedFormUnavailable:
        exact = False
    for db in snrs_db:
        snr = 10.0 ** (db / 10.0)
        mc = mc_estimate(model, snr, "mmse_rate", nsamples, seed)
        if exact:
            ref, ref_err, method = cf.mmse_sum_rate(model, snr), 0.0, "closed"
        else:
            est = cf.theorem1_compose(model, snr, mc_mi_evaluator(model, nsamples, seed + 1))
            ref, ref_err, method = est.mean, est.stderr, "decomposition-mc"
        z = abs(ref - mc.mean) / math.hypot(mc.stderr, ref_err)
        cases.append({"model": model.describe(), "snr_db": db, "reference": ref,
                      "method": method, "mc": mc.mean, "mc_stderr": mc.stderr,
                      "residual": z, "pass": bool(z < nsigma)})
    return _report("closed-vs-mc", cases)


def mc_mi_evaluator(model: ChannelModel, nsamples: int, seed: int):
    """Monte-Carlo MI evaluator for the decomposition; column ``i`` uses seed ``seed+i+1``."""
    def ev(snr: float, col: int | None):
        if col is None:
            return mc_estimate(model, snr, "opt_mi", nsamples, seed)
        # the metric applies the (Nt-1)/Nt factor itself, so undo it here
        nt = model.cfg.nt
        return mc_estimate(model, snr * nt / (nt - 1), f"opt_mi_reduced_{col + 1}",
                           nsamples, seed + col + 1)
    return ev


def quad_mi_evaluator(model: ChannelModel):
    """Quadrature MI evaluator for one-sided correlated (or i.i.d.) Rayleigh models."""
    cfg = model.cfg
    red = AntennaConfig(cfg.nr, cfg.nt - 1) if cfg.nt > 1 else None
    if isinstance(model, IidRayleigh):
        R = S = None
    elif isinstance(model, SeparableRayleigh) and (model.R.is_identity or model.S.is_identity):
        R, S = model.R, model.S
    else:
        raise cf.ClosedFormUnavailable(f"no quadrature path for {model.describe()}")

    def ev(snr: float, col: int | None):
        c = cfg if col is None else red
        if S is not None and not S.is_identity:
            eigs = S.eig if col is None else S.minor(col).eig
            return mi_quadrature_oracle(eigs, c.nr, c.nt, c, snr)
        eigs = np.ones(c.nr) if R is None else R.eig
        return mi_quadrature_oracle(eigs, c.nt, c.nr, c, snr)
    return ev


def realization_mi_evaluator(h: np.ndarray):
    """Evaluator built from one fixed realization (no expectation taken)."""
    h = np.asarray(h)

    def ev(snr: float, col: int | None):
        return float(opt_mi_realization(h if col is None else np.delete(h, col, axis=-1), snr))
    return ev


def suite_asymptote(model: ChannelModel, nsamples: int = 200_000, seed: int = 1) -> dict:
    """Printed asymptotic parameters vs empirical fits of the exact rate."""
    cases = []
    cfg = model.cfg
    try:
        cf.closed_mi_evaluator(model)
        mmse_fn = closed_rate_fn(model, "mmse")
        opt_fn = closed_rate_fn(model, "opt")
    except cf.ClosedFormUnavailable:
        # common random numbers across the snr stencil keep the differences smooth
        mmse_fn = mc_rate_fn(model, "mmse_rate", nsamples, seed)
        opt_fn = mc_rate_fn(model, "opt_mi", nsamples, seed)
    lo = asy.low_snr_params(model)
    emp = empirical_asymptote_fit(mmse_fn, "low", cfg)
    emp_opt = empirical_asymptote_fit(opt_fn, "low", cfg)
    rel = lambda a, b: abs(a - b) / abs(b)
    cases.append({"check": "ebno_min", "printed": lo.ebno_min, "empirical": emp.ebno_min,
                  "residual": rel(emp.ebno_min, lo.ebno_min), "tol": 0.01})
    cases.append({"check": "ebno_min opt", "printed": lo.ebno_min, "empirical": emp_opt.ebno_min,
                  "residual": rel(emp_opt.ebno_min, lo.ebno_min), "tol": 0.01})
    cases.append({"check": "S0", "printed": lo.s0, "empirical": emp.s0,
                  "residual": rel(emp.s0, lo.s0), "tol": 0.02})
    cases.append({"check": "S0 ratio", "printed": lo.ratio, "empirical": emp.s0 / emp_opt.s0,
                  "residual": rel(emp.s0 / emp_opt.s0, lo.ratio), "tol": 0.02})
    hi = asy.high_snr_params(model, "mmse")
    hi_opt = asy.high_snr_params(model, "opt")
    fit = empirical_asymptote_fit(mmse_fn, "high", cfg)
    fit_opt = empirical_asymptote_fit(opt_fn, "high", cfg)
    cases.append({"check": "S_inf", "printed": hi.slope, "empirical": fit.slope,
                  "residual": abs(fit.slope - hi.slope), "tol": 0.01})
    if math.isfinite(hi.offset):
        cases.append({"check": "L_inf", "printed": hi.offset, "empirical": fit.offset,
                      "residual": abs(fit.offset - hi.offset), "tol": 0.02})
        dex = fit.offset - fit_opt.offset
        cases.append({"check": "excess offset", "printed": hi.excess, "empirical": dex,
                      "residual": abs(dex - hi.excess), "tol": 0.02})
    for c in cases:
        c["pass"] = bool(c["residual"] < c["tol"])
    return _report("asymptote", cases)


__all__ = [
    "decomposition_realization", "theorem1_identity_check", "eigenvalue_density",
    "mi_quadrature_oracle", "EmpiricalHigh", "EmpiricalLow", "empirical_asymptote_fit",
    "mc_rate_fn", "closed_rate_fn", "mc_mi_evaluator", "quad_mi_evaluator",
    "realization_mi_evaluator", "default_models", "suite_identity",
    "suite_specfun", "suite_closed_vs_mc", "suite_asymptote",
]
