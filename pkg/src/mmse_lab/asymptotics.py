"""High- and low-SNR parameters of the MMSE and optimal-receiver rates.

High SNR: ``I(snr) ~ S_inf (log2 snr - L_inf)`` with the offset in 3 dB units.
Everything is assembled from the expected log-determinant
``E[J] = E[log2 det(W)]`` of the smaller Gram matrix ``W`` of ``H``; the MMSE
offset is ``log2 Nt - (Nt E[J(H)] - sum_i E[J(H_i)]) / Nt`` and the optimal
offset is ``log2 Nt - E[J(H)] / min(Nr, Nt)``.

Low SNR: ``I ~ S0 log2((Eb/N0) / (Eb/N0)_min)`` with both receivers sharing
``(Eb/N0)_min = ln 2 / Nr``; the wideband slopes follow from the dispersions
``zeta(H H^H)`` and ``zeta(H_i H_i^H)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channels import (AntennaConfig, ChannelModel, CorrelationMatrix, IidRayleigh,
                       RicianRank1, SeparableRayleigh)
from .matkit import RepeatedEigenvalues, diag_of_inverse, signed_logdet, strict_descending
from .montecarlo import LOG2E
from .specfun import EULER_GAMMA, digamma_int, harmonic, theta_2f2

INFINITE_OFFSET = math.inf
LN2 = math.log(2.0)
_COND_FLOAT_MAX = 1e6

RECEIVERS = ("mmse", "opt")


@dataclass(frozen=True)
class HighSnrAffine:
    """Affine high-SNR parameters; ``offset`` is ``inf`` when the slope is zero."""

    slope: float
    offset: float
    excess: float
    receiver: str

    def rate(self, snr: float) -> float:
        return affine_rate(self, snr)


@dataclass(frozen=True)
class LowSnrParams:
    """Low-SNR parameters. ``s0`` belongs to ``receiver``; ``ratio = s0 / s0_opt``."""

    ebno_min: float
    s0: float
    s0_opt: float
    ratio: float
    receiver: str
    nr: int

    @property
    def ebno_min_received(self) -> float:
        return self.nr * self.ebno_min

    @property
    def ebno_min_db(self) -> float:
        return 10.0 * math.log10(self.ebno_min)


@dataclass(frozen=True)
class DispersionSet:
    zeta_full: float
    zeta_reduced: tuple
    zeta_r: float | None = None
    zeta_s: float | None = None
    zeta_s_minors: tuple | None = None


@dataclass(frozen=True)
class LargeSystemLimits:
    offset: float
    excess: float
    s0_ratio: float


def _check_receiver(receiver: str) -> None:
    if receiver not in RECEIVERS:
        raise ValueError(f"receiver must be one of {RECEIVERS}, got {receiver!r}")


# --- expected log-determinants ---------------------------------------------

def _log2_vandermonde_sum_mp(r: np.ndarray, cols: list[int]) -> list[float]:
    import mpmath

    q = r.size
    rel = 1.0
    for k in range(q):
        for l in range(k):
            rel *= abs(r[k] - r[l]) / r[0]
    with mpmath.workdps(30 + int(math.ceil(-math.log10(max(rel, 1e-300))))):
        mp = mpmath.mp
        rr = [mp.mpf(float(v)) for v in r]
        vand = mp.mpf(1)
        for k in range(q):
            for l in range(k):
                vand *= rr[k] - rr[l]
        out = []
        for j in cols:
            mat = mp.matrix(q, q)
            for s in range(q):
                for t in range(q):
                    v = rr[s] ** t
                    mat[s, t] = v * mp.log(rr[s]) / mp.log(2) if t == j - 1 else v
            out.append(float(mp.det(mat) / vand))
        return out


def y_ratios(r_eigs, cols) -> np.ndarray:
    """``det Y_j(r) / prod_{i<j}(r_j - r_i)`` for each 1-based ``j`` in ``cols``.

    ``Y_j`` is the Vandermonde matrix ``[r_s^{t-1}]`` with column ``j``
    multiplied by ``log2 r_s``. At ``r = (1, ..., 1)`` the ratio is the limit
    ``log2e (psi(j) - psi(N+1-j))``.
    """
    r = np.asarray(r_eigs, dtype=float)
    q = r.size
    cols = [int(j) for j in cols]
    if np.all(r == 1.0):
        return np.array([LOG2E * (digamma_int(j) - digamma_int(q + 1 - j)) for j in cols])
    r = strict_descending(r)
    base = r[:, None] ** np.arange(q)[None, :]
    if np.linalg.cond(base) >= _COND_FLOAT_MAX:
        return np.array(_log2_vandermonde_sum_mp(r, cols))
    vand = np.linalg.det(base)
    out = []
    for j in cols:
        mat = base.copy()
        mat[:, j - 1] *= np.log2(r)
        out.append(np.linalg.det(mat) / vand)
    return np.array(out)


def _log2det(a: CorrelationMatrix) -> float:
    sign, logabs = signed_logdet(a.entries)
    return LOG2E * logabs


def _wishart_logdet(eigs, big: int, small: int) -> float:
    """``E log2 det(G^H diag(eigs) G)`` for ``G`` of size ``big x small`` (``big >= small``)."""
    cols = range(big - small + 1, big + 1)
    return (LOG2E * math.fsum(digamma_int(l) for l in range(1, small + 1))
            + float(np.sum(y_ratios(eigs, cols))))


def iid_expected_logdet(nr: int, nt: int) -> float:
    """``E[J]`` for i.i.d. Rayleigh (bits)."""
    n, m = min(nr, nt), max(nr, nt)
    return LOG2E * math.fsum(digamma_int(m - l) for l in range(n))


def expected_logdet(model: ChannelModel, column: int | None = None) -> float:
    """``E[J(H)]`` or, with a 0-based ``column``, ``E[J(H_column)]`` (bits)."""
    cfg = model.cfg
    nr, nt = cfg.nr, cfg.nt
    if column is not None:
        cfg.require_reduced()
        nt -= 1
    if isinstance(model, IidRayleigh):
        return iid_expected_logdet(nr, nt)
    if isinstance(model, SeparableRayleigh):
        S = model.S if column is None else model.S.minor(column)
        if nr >= nt:
            return _log2det(S) + _wishart_logdet(model.R.eig, nr, nt)
        return _log2det(model.R) + _wishart_logdet(S.eig, nt, nr)
    if isinstance(model, RicianRank1):
        k = model.k_factor
        n, m = min(nr, nt), max(nr, nt)
        return (iid_expected_logdet(nr, nt) - n * math.log2(k + 1.0)
                + k * n * LOG2E * theta_2f2(m, n, k))
    raise TypeError(type(model).__name__)


# --- printed correction terms ----------------------------------------------

def corr_f(S: CorrelationMatrix) -> float:
    """Transmit-correlation shift of the MMSE offset, ``mean_k log2 [S^-1]_kk``."""
    return float(np.mean(np.log2(diag_of_inverse(S.entries))))


def corr_g(R: CorrelationMatrix, nt: int) -> float:
    """Receive-correlation shift of the MMSE offset (needs ``Nr >= Nt``)."""
    nr = R.dim
    if nr < nt:
        raise ValueError("receive-correlation shift needs nr >= nt")
    if R.is_identity:
        return 0.0
    y = float(y_ratios(R.eig, [nr - nt + 1])[0])
    return LOG2E * (harmonic(nr - nt) - harmonic(nt - 1)) - y


def corr_g1(S: CorrelationMatrix) -> float:
    """Transmit-correlation part of the excess offset; nonnegative."""
    return corr_f(S) + _log2det(S) / S.dim


def corr_g2(R: CorrelationMatrix, nt: int) -> float:
    """Receive-correlation part of the excess offset."""
    nr = R.dim
    if nr < nt:
        raise ValueError("receive-correlation excess needs nr >= nt")
    y = y_ratios(np.ones(nr) if R.is_identity else R.eig, range(nr - nt + 1, nr + 1))
    return (float(np.sum(y[1:])) - (nt - 1) * float(y[0])) / nt


def rician_h1(cfg: AntennaConfig, k_factor: float) -> float:
    """Rician shift of the MMSE offset relative to ``K = 0``."""
    nr, nt = cfg.nr, cfg.nt
    return math.log2(k_factor + 1.0) - k_factor * LOG2E * (
        nt * theta_2f2(nr, nt, k_factor) - (nt - 1) * theta_2f2(nr, nt - 1, k_factor))


def rician_h2(cfg: AntennaConfig, k_factor: float) -> float:
    """Rician shift of the excess offset relative to ``K = 0``."""
    nr, nt = cfg.nr, cfg.nt
    return -LOG2E * k_factor * (nt - 1) * (
        theta_2f2(nr, nt, k_factor) - theta_2f2(nr, nt - 1, k_factor))


# --- high SNR ----------------------------------------------------------------

def iid_mmse_offset(nr: int, nt: int) -> float:
    """``log2 Nt - log2e (H_{Nr-Nt} - gamma)`` for ``Nr >= Nt``."""
    if nr < nt:
        return INFINITE_OFFSET
    return math.log2(nt) - LOG2E * (harmonic(nr - nt) - EULER_GAMMA)


def iid_excess_offset(nr: int, nt: int) -> float:
    """``log2e ((Nr/Nt) sum_{l=Nr-Nt+1}^{Nr} 1/l - 1)`` for ``Nr >= Nt``."""
    if nr < nt:
        return INFINITE_OFFSET
    return LOG2E * ((nr / nt) * math.fsum(1.0 / l for l in range(nr - nt + 1, nr + 1)) - 1.0)


def _mmse_offset(model: ChannelModel) -> float:
    cfg = model.cfg
    if cfg.nr < cfg.nt:
        return INFINITE_OFFSET
    full = expected_logdet(model)
    if model.exchangeable:
        reduced = cfg.nt * expected_logdet(model, 0)
    else:
        reduced = math.fsum(expected_logdet(model, i) for i in range(cfg.nt))
    return math.log2(cfg.nt) - (cfg.nt * full - reduced) / cfg.nt


def _opt_offset(model: ChannelModel) -> float:
    cfg = model.cfg
    return math.log2(cfg.nt) - expected_logdet(model) / cfg.n


def high_snr_params(model: ChannelModel, receiver: str = "mmse") -> HighSnrAffine:
    """Slope, power offset and excess offset for either receiver.

    For ``Nr < Nt`` the MMSE slope is 0 and its offset and excess are ``inf``.
    """
    _check_receiver(receiver)
    cfg = model.cfg
    cfg.require_reduced()
    l_opt = _opt_offset(model)
    l_mmse = _mmse_offset(model)
    excess = l_mmse - l_opt if math.isfinite(l_mmse) else INFINITE_OFFSET
    if receiver == "opt":
        return HighSnrAffine(float(cfg.n), l_opt, excess, "opt")
    slope = float(cfg.nt) if cfg.nr >= cfg.nt else 0.0
    return HighSnrAffine(slope, l_mmse, excess, "mmse")


def large_system_limits(beta: float) -> LargeSystemLimits:
    """Limits as ``Nr, Nt -> inf`` with ``Nt / Nr = beta`` fixed."""
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"load ratio beta must be in (0, 1], got {beta!r}")
    ratio = (1.0 + beta) / (1.0 + 2.0 * beta)
    if beta == 1.0:
        return LargeSystemLimits(INFINITE_OFFSET, INFINITE_OFFSET, ratio)
    offset = math.log2(beta / (1.0 - beta))
    excess = math.log2(1.0 / (1.0 - beta)) / beta - LOG2E
    return LargeSystemLimits(offset, excess, ratio)


def affine_rate(params: HighSnrAffine, snr: float) -> float:
    """``S_inf (log2 snr - L_inf)``; zero-slope parameters give 0."""
    if not snr > 0:
        raise ValueError("snr must be > 0")
    if params.slope == 0.0:
        return 0.0
    if not math.isfinite(params.offset):
        raise ValueError("affine approximation needs a finite power offset")
    return params.slope * (math.log2(snr) - params.offset)


# --- low SNR -----------------------------------------------------------------

def _zeta_corr(c: CorrelationMatrix) -> float:
    return float(np.sum(np.abs(c.entries) ** 2)) / c.dim


def dispersion_closed_form(model: ChannelModel) -> DispersionSet:
    """Exact dispersions of ``H H^H`` and of every ``H_i H_i^H``."""
    cfg = model.cfg
    nr, nt = cfg.nr, cfg.nt
    if isinstance(model, IidRayleigh):
        red = (nr + nt - 1) / (nt - 1) if nt > 1 else math.nan
        return DispersionSet((nr + nt) / nt, (red,) * nt)
    if isinstance(model, SeparableRayleigh):
        zr = _zeta_corr(model.R)
        zs = _zeta_corr(model.S)
        if nt > 1:
            minors = tuple(_zeta_corr(model.S.minor(i)) for i in range(nt))
            red = tuple(zr + nr / (nt - 1) * z for z in minors)
        else:
            minors, red = (), (math.nan,)
        return DispersionSet(zr + nr / nt * zs, red, zr, zs, minors)
    if isinstance(model, RicianRank1):
        k = model.k_factor
        full = (nr * k * k + (nr + nt) * (2 * k + 1) / nt) / (k + 1) ** 2
        red = ((nr * k * k + (nr + nt - 1) * (2 * k + 1) / (nt - 1)) / (k + 1) ** 2
               if nt > 1 else math.nan)
        return DispersionSet(full, (red,) * nt)
    raise TypeError(type(model).__name__)


def wideband_slopes(nr: int, nt: int, disp: DispersionSet) -> tuple[float, float]:
    """``(S0_mmse, S0_opt)`` from the dispersions."""
    shrink = ((nt - 1) / nt) ** 2
    s0_mmse = 2.0 * nr / (nt * disp.zeta_full - shrink * math.fsum(disp.zeta_reduced))
    s0_opt = 2.0 * nr / disp.zeta_full
    return s0_mmse, s0_opt


def low_snr_params(model: ChannelModel, receiver: str = "mmse") -> LowSnrParams:
    """Minimum Eb/N0 (linear, transmit side) and wideband slopes."""
    _check_receiver(receiver)
    cfg = model.cfg
    cfg.require_reduced()
    s0_mmse, s0_opt = wideband_slopes(cfg.nr, cfg.nt, dispersion_closed_form(model))
    s0 = s0_mmse if receiver == "mmse" else s0_opt
    return LowSnrParams(LN2 / cfg.nr, s0, s0_opt, s0 / s0_opt, receiver, cfg.nr)


def wideband_rate(params: LowSnrParams, ebno: float, received: bool = False) -> float:
    """``S0 log2(ebno / ebno_min)``; ``received=True`` takes the received-side Eb/N0."""
    if received:
        ebno = ebno / params.nr
    if ebno < params.ebno_min * (1.0 - 1e-12):
        raise ValueError(f"Eb/N0 {ebno:g} is below the minimum {params.ebno_min:g}")
    return params.s0 * math.log2(max(ebno, params.ebno_min) / params.ebno_min)


def ebno_to_snr(rate_fn: Callable[[float], float], ebno: float,
                lo: float = 1e-12, hi: float = 1e6, rtol: float = 1e-10,
                max_iter: int = 200) -> float:
    """Solve ``ebno = snr / I(snr)`` for ``snr`` by bisection in ``log snr``.

    ``rate_fn`` returns the rate in bits/s/Hz. ``snr / I(snr)`` increases with
    snr for any concave rate, so a bracket check is enough.
    """
    def excess(log_snr: float) -> float:
        s = math.exp(log_snr)
        return s / rate_fn(s) - ebno

    a, b = math.log(lo), math.log(hi)
    fa, fb = excess(a), excess(b)
    if fa > 0 or fb < 0:
        raise ValueError(f"Eb/N0 {ebno:g} not bracketed by snr in [{lo:g}, {hi:g}]")
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if excess(mid) > 0:
            b = mid
        else:
            a = mid
        if b - a <= rtol:
            break
    return math.exp(0.5 * (a + b))


def rate_approx(params, snr: float | None = None, ebno: float | None = None,
                rate_fn: Callable[[float], float] | None = None,
                received: bool = False) -> float:
    """Evaluate an asymptotic approximation.

    * ``HighSnrAffine`` with ``snr``: affine rate.
    * ``LowSnrParams`` with ``ebno``: wideband rate.
    * ``rate_fn`` with ``ebno``: the snr solving ``ebno = snr / I(snr)``.
    """
    if rate_fn is not None:
        if ebno is None:
            raise ValueError("mapping mode needs ebno")
        if received:
            if not isinstance(params, LowSnrParams):
                raise ValueError("received-side conversion needs LowSnrParams")
            ebno = ebno / params.nr
        return ebno_to_snr(rate_fn, ebno)
    if isinstance(params, HighSnrAffine):
        if snr is None:
            raise ValueError("affine approximation needs snr")
        return affine_rate(params, snr)
    if isinstance(params, LowSnrParams):
        if ebno is None:
            raise ValueError("wideband approximation needs ebno")
        return wideband_rate(params, ebno, received)
    raise TypeError(type(params).__name__)


__all__ = [
    "INFINITE_OFFSET", "HighSnrAffine", "LowSnrParams", "DispersionSet", "LargeSystemLimits",
    "RepeatedEigenvalues", "y_ratios", "iid_expected_logdet", "expected_logdet",
    "corr_f", "corr_g", "corr_g1", "corr_g2", "rician_h1", "rician_h2",
    "iid_mmse_offset", "iid_excess_offset", "high_snr_params", "large_system_limits",
    "affine_rate", "dispersion_closed_form", "wideband_slopes", "low_snr_params",
    "wideband_rate", "ebno_to_snr", "rate_approx",
]
