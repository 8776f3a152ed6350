"""Exact finite-SNR rate formulas.

* i.i.d. Rayleigh: determinant sums over Hankel matrices of factorials.
* semi-correlated Rayleigh (one-sided correlation ``L`` with distinct
  eigenvalues): Vandermonde-ratio determinant sums.
* the MMSE sum rate through the full-minus-reduced mutual-information
  decomposition, for any evaluator of the optimal-receiver mutual information.

Internally everything is in nats and the argument of the exponential
integrals is ``x = Nt / snr`` (divided by an eigenvalue for the correlated
forms). The full channel and every column-deleted channel share the same
``x`` because the reduced term runs at ``(Nt-1)/Nt * snr`` with ``Nt-1``
streams.

Determinant sums are evaluated in float64 when the underlying Vandermonde /
binomial matrix is well conditioned, and otherwise in mpmath with enough
digits to absorb the cancellation; clustered (but distinct) eigenvalues are
therefore handled without perturbation.
"""

from __future__ import annotations

import math
from math import comb

import numpy as np

from .channels import (AntennaConfig, ChannelModel, CorrelationMatrix, IidRayleigh,
                       RicianRank1, SeparableRayleigh)
from .matkit import RepeatedEigenvalues, strict_descending, vandermonde
from .montecarlo import LOG2E, MonteCarloEstimate
from .specfun import expint_scaled_seq, expint_scaled_seq_mp

MAX_IID_DIM = 32
_COND_FLOAT_MAX = 1e6
IDENTITY_SNAP = 1e-8


class ClosedFormUnavailable(NotImplementedError):
    """No exact expression is implemented for this channel model."""


def _check_snr(snr: float) -> None:
    if not snr > 0 or not math.isfinite(snr):
        raise ValueError(f"snr must be finite and > 0, got {snr!r}")


def _mp_dps(extra_digits: float) -> int:
    return 30 + int(math.ceil(max(extra_digits, 0.0)))


def _phi_table(x: float, cmax: int) -> np.ndarray:
    """``phi[c-1] = sum_{h=1}^c e^x E_h(x)`` for c = 1..cmax."""
    return np.cumsum(expint_scaled_seq(cmax, x))


def _phi_table_mp(x, cmax: int) -> list:
    out = []
    acc = 0
    for v in expint_scaled_seq_mp(cmax, x):
        acc = acc + v
        out.append(acc)
    return out


# --- i.i.d. Rayleigh -------------------------------------------------------

def _iid_base(n: int, m: int) -> np.ndarray:
    # tau_{s,t}! / ((m-s)! (n-t)!) = C(n+m-s-t, n-t); the row/column factorials
    # multiply out to Gamma_n(m) Gamma_n(n), so they cancel the normalizer
    return np.array([[comb(n + m - s - t, n - t) for t in range(1, n + 1)]
                     for s in range(1, n + 1)], dtype=float)


def _iid_mi_nats(n: int, m: int, x: float) -> float:
    """``E[ln det(I + H^H H / x)]``-type sum for an ``n x m`` i.i.d. Wishart (nats)."""
    base = _iid_base(n, m)
    tau = np.array([[n + m - s - t for t in range(1, n + 1)] for s in range(1, n + 1)])
    if np.linalg.cond(base) < _COND_FLOAT_MAX:
        phi = _phi_table(x, n + m - 1)
        total = 0.0
        for k in range(n):
            mat = base.copy()
            mat[:, k] = base[:, k] * phi[tau[:, k]]
            total += np.linalg.det(mat)
        return float(total)
    import mpmath

    with mpmath.workdps(_mp_dps(math.log10(np.linalg.cond(base)))):
        mp = mpmath.mp
        phi = _phi_table_mp(x, n + m - 1)
        total = mp.mpf(0)
        for k in range(n):
            mat = mp.matrix(n, n)
            for s in range(n):
                for t in range(n):
                    v = mp.mpf(comb(n + m - (s + 1) - (t + 1), n - (t + 1)))
                    mat[s, t] = v * phi[int(tau[s, k])] if t == k else v
            total += mp.det(mat)
        return float(total)


def iid_opt_mi(cfg: AntennaConfig, snr: float) -> float:
    """Ergodic optimal-receiver mutual information of an i.i.d. Rayleigh channel (bits)."""
    _check_snr(snr)
    if cfg.m > MAX_IID_DIM:
        raise ValueError(f"i.i.d. closed form limited to dimensions <= {MAX_IID_DIM}")
    return LOG2E * _iid_mi_nats(cfg.n, cfg.m, cfg.nt / snr)


def iid_sum_rate(cfg: AntennaConfig, snr: float) -> float:
    """Exact MMSE achievable sum rate for i.i.d. Rayleigh fading (bits/s/Hz)."""
    _check_snr(snr)
    cfg.require_reduced()
    if cfg.m > MAX_IID_DIM:
        raise ValueError(f"i.i.d. closed form limited to dimensions <= {MAX_IID_DIM}")
    x = cfg.nt / snr
    full = _iid_mi_nats(cfg.n, cfg.m, x)
    reduced = _iid_mi_nats(cfg.n_prime, cfg.m_prime, x)
    return LOG2E * cfg.nt * (full - reduced)


# --- semi-correlated Rayleigh ----------------------------------------------

def _vandermonde_digits(eigs: np.ndarray) -> float:
    q = eigs.size
    if q < 2:
        return 0.0
    rel = abs(vandermonde(eigs)) / eigs[0] ** (q * (q - 1) // 2)
    return -math.log10(rel) if rel > 0 else 300.0


def _lemma1_nats(eigs: np.ndarray, p: int, x: float) -> float:
    """Semi-correlated ergodic MI (nats); ``eigs`` strictly descending, length q."""
    q = eigs.size
    n = min(p, q)
    ks = range(q - n + 1, q + 1)  # 1-based column index
    base = eigs[:, None] ** np.arange(q)[None, :]
    if q == 1 or np.linalg.cond(base) < _COND_FLOAT_MAX:
        phis = np.array([_phi_table(x / b, p) for b in eigs])
        total = 0.0
        for k in ks:
            mat = base.copy()
            mat[:, k - 1] = base[:, k - 1] * phis[:, p - q + k - 1]
            total += np.linalg.det(mat)
        return float(total / vandermonde(eigs))
    import mpmath

    with mpmath.workdps(_mp_dps(_vandermonde_digits(eigs))):
        mp = mpmath.mp
        beta = [mp.mpf(float(b)) for b in eigs]
        phis = [_phi_table_mp(mp.mpf(x) / b, p) for b in beta]
        total = mp.mpf(0)
        for k in ks:
            mat = mp.matrix(q, q)
            for s in range(q):
                for t in range(q):
                    v = beta[s] ** t
                    mat[s, t] = v * phis[s][p - q + k - 1] if t == k - 1 else v
            total += mp.det(mat)
        vand = mp.mpf(1)
        for k in range(q):
            for l in range(k):
                vand *= beta[k] - beta[l]
        return float(total / vand)


def _onesided_nats(eigs: np.ndarray, p: int, x: float) -> float:
    # Unit trace per antenna pins the eigenvalue sum, so the MI moves only to
    # second order away from the identity; snap near-identity spectra to it.
    if np.allclose(eigs, 1.0, rtol=0.0, atol=IDENTITY_SNAP):
        q = eigs.size
        return _iid_mi_nats(min(p, q), max(p, q), x)
    return _lemma1_nats(strict_descending(eigs), p, x)


def semicorr_opt_mi(eigs, p: int, cfg: AntennaConfig, snr: float) -> float:
    """Ergodic MI (bits) of a one-sided correlated Rayleigh channel.

    ``eigs`` are the eigenvalues of the ``q x q`` correlation matrix (transmit
    or receive side), strictly descending; ``p`` is the antenna count on the
    other side, so ``{p, q} == {nr, nt}``.
    """
    _check_snr(snr)
    e = np.asarray(eigs, dtype=float)
    if sorted((p, e.size)) != sorted((cfg.nr, cfg.nt)):
        raise ValueError(f"(p={p}, q={e.size}) does not match nr={cfg.nr}, nt={cfg.nt}")
    return LOG2E * _onesided_nats(e, p, cfg.nt / snr)


def rxcorr_sum_rate(r_eigs, cfg: AntennaConfig, snr: float) -> float:
    """MMSE sum rate with receive correlation only (eigenvalues of R, descending)."""
    _check_snr(snr)
    cfg.require_reduced()
    v = strict_descending(r_eigs)
    if v.size != cfg.nr:
        raise ValueError("need nr receive-correlation eigenvalues")
    x = cfg.nt / snr
    # all nt column-deleted channels share the law CN(0, R (x) I_{nt-1})
    return LOG2E * cfg.nt * (_lemma1_nats(v, cfg.nt, x) - _lemma1_nats(v, cfg.nt - 1, x))


def txcorr_sum_rate(S: CorrelationMatrix, cfg: AntennaConfig, snr: float) -> float:
    """MMSE sum rate with transmit correlation only.

    ``S`` and every principal minor ``S^{ii}`` must have distinct eigenvalues
    or be the identity.
    """
    _check_snr(snr)
    cfg.require_reduced()
    if S.dim != cfg.nt:
        raise ValueError("transmit correlation must be nt x nt")
    x = cfg.nt / snr
    full = _onesided_nats(S.eig, cfg.nr, x)
    reduced = [_onesided_nats(S.minor(i).eig, cfg.nr, x) for i in range(cfg.nt)]
    return LOG2E * (cfg.nt * full - math.fsum(reduced))


# --- decomposition -----------------------------------------------------------

def theorem1_compose(model, snr: float, mi_evaluator):
    """MMSE sum rate as ``Nt E[I_opt(H)] - sum_i E[I_opt(H_i)]``.

    ``mi_evaluator(snr, column)`` returns the expected optimal-receiver MI
    (bits) of the full channel when ``column is None``, else of the channel with
    0-based ``column`` deleted, evaluated at the snr it is handed (the caller
    passes ``(Nt-1)/Nt * snr`` for reduced channels). ``model`` is a channel
    model or a bare :class:`AntennaConfig`; models with exchangeable columns
    evaluate a single reduced term.

    Returns a float, or a :class:`MonteCarloEstimate` when the evaluator does
    (standard errors combined assuming independent estimates).
    """
    _check_snr(snr)
    cfg = model if isinstance(model, AntennaConfig) else model.cfg
    cfg.require_reduced()
    nt = cfg.nt
    red_snr = snr * (nt - 1) / nt
    full = mi_evaluator(snr, None)
    if getattr(model, "exchangeable", False):
        one = mi_evaluator(red_snr, 0)
        reduced = [(one, nt)]
    else:
        reduced = [(mi_evaluator(red_snr, i), 1) for i in range(nt)]

    if isinstance(full, MonteCarloEstimate):
        mean = nt * full.mean - math.fsum(w * r.mean for r, w in reduced)
        var = (nt * full.stderr) ** 2 + math.fsum((w * r.stderr) ** 2 for r, w in reduced)
        return MonteCarloEstimate(mean, math.sqrt(var), full.nsamples, full.seed)
    return nt * full - math.fsum(w * r for r, w in reduced)


def closed_mi_evaluator(model: ChannelModel):
    """Exact optimal-receiver MI evaluator for :func:`theorem1_compose`.

    Covers i.i.d. and semi-correlated Rayleigh models.
    """
    cfg = model.cfg
    red_cfg = AntennaConfig(cfg.nr, cfg.nt - 1) if cfg.nt > 1 else None
    if isinstance(model, IidRayleigh) or (
            isinstance(model, SeparableRayleigh) and model.R.is_identity and model.S.is_identity):
        def ev(snr, col):
            return iid_opt_mi(cfg if col is None else red_cfg, snr)
        return ev
    if isinstance(model, SeparableRayleigh) and model.S.is_identity:
        def ev(snr, col):
            c = cfg if col is None else red_cfg
            return semicorr_opt_mi(model.R.eig, c.nt, c, snr)
        return ev
    if isinstance(model, SeparableRayleigh) and model.R.is_identity:
        def ev(snr, col):
            if col is None:
                return semicorr_opt_mi(model.S.eig, cfg.nr, cfg, snr)
            return semicorr_opt_mi(model.S.minor(col).eig, cfg.nr, red_cfg, snr)
        return ev
    raise ClosedFormUnavailable(f"no exact mutual-information expression for {model.describe()}")


def opt_mi(model: ChannelModel, snr: float) -> float:
    """Exact ergodic optimal-receiver MI (bits) where a closed form exists."""
    return closed_mi_evaluator(model)(snr, None)


def mmse_sum_rate(model: ChannelModel, snr: float) -> float:
    """Exact MMSE sum rate, dispatching on the model family.

    Raises :class:`ClosedFormUnavailable` for doubly-correlated and Rician
    channels and :class:`RepeatedEigenvalues` for clustered correlation spectra.
    """
    if isinstance(model, IidRayleigh):
        return iid_sum_rate(model.cfg, snr)
    if isinstance(model, SeparableRayleigh):
        if model.R.is_identity and model.S.is_identity:
            return iid_sum_rate(model.cfg, snr)
        if model.S.is_identity:
            return rxcorr_sum_rate(model.R.eig, model.cfg, snr)
        if model.R.is_identity:
            return txcorr_sum_rate(model.S, model.cfg, snr)
        raise ClosedFormUnavailable("doubly-correlated Rayleigh has no exact expression here")
    if isinstance(model, RicianRank1):
        raise ClosedFormUnavailable("Rician fading has no exact expression here")
    raise TypeError(type(model).__name__)


__all__ = [
    "ClosedFormUnavailable", "RepeatedEigenvalues", "iid_opt_mi", "iid_sum_rate",
    "semicorr_opt_mi", "rxcorr_sum_rate", "txcorr_sum_rate", "theorem1_compose",
    "closed_mi_evaluator", "opt_mi", "mmse_sum_rate",
]
