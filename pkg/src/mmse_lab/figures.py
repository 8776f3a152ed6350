"""Dataset presets reproducing the standard rate figures.

Each preset is a small frozen dataclass; ``build_rows`` turns it into CSV rows
``(x, value, stderr_or_None, method, model)``. Offsets are reported in dB here
(``10 log10 2`` per 3 dB unit), everything else in bits/s/Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import asymptotics as asy
from . import closedform as cf
from .channels import (AntennaConfig, CorrelationMatrix, IidRayleigh, RicianRank1,
                       SeparableRayleigh, build_exp_correlation)
from .montecarlo import mc_estimate

DB_PER_3DB_UNIT = 10.0 * math.log10(2.0)

Row = tuple


@dataclass(frozen=True)
class IidSweep:
    """MMSE rate vs snr for i.i.d. ``n x n`` channels: MC, exact and affine."""
    sizes: tuple = (2, 4)
    snr_db: tuple = tuple(np.arange(0.0, 30.1, 5.0))
    x_name: str = "snr_db"
    value_name: str = "value_bits"


@dataclass(frozen=True)
class WidebandSweep:
    """Rate vs Eb/N0 for an i.i.d. channel with both receivers."""
    nr: int = 3
    nt: int = 3
    ebno_db: tuple = tuple(np.arange(-6.0, 4.01, 0.5))
    x_name: str = "ebno_db"
    value_name: str = "value_bits"


@dataclass(frozen=True)
class TxCorrSweep:
    """Transmit-correlated MMSE rate vs snr: MC, exact and affine."""
    nr: int = 5
    nt: int = 3
    rhos: tuple = (0.5, 0.9)
    snr_db: tuple = tuple(np.arange(0.0, 30.1, 5.0))
    x_name: str = "snr_db"
    value_name: str = "value_bits"


@dataclass(frozen=True)
class RicianShiftSweep:
    """Offset shifts ``h1(K)`` and ``h2(K)`` in dB."""
    nr: int = 2
    nt: int = 2
    k_factors: tuple = tuple(np.arange(0.0, 10.01, 0.5))
    x_name: str = "k_factor"
    value_name: str = "value_db"


@dataclass(frozen=True)
class CorrShiftSweep:
    """Offset shifts from transmit (``f(S)``) and receive (``g(R)``) correlation, dB."""
    sizes: tuple = (2, 4)
    rhos: tuple = tuple(np.round(np.arange(0.0, 0.951, 0.05), 10))
    x_name: str = "rho"
    value_name: str = "value_db"


PRESETS = {1: IidSweep(), 2: WidebandSweep(), 3: TxCorrSweep(), 4: RicianShiftSweep(),
           5: CorrShiftSweep()}


def _snr_rows(models, labels, grid_db, nsamples, seed):
    rows = []
    for model, tag in zip(models, labels):
        hi = asy.high_snr_params(model, "mmse")
        for db in grid_db:
            snr = 10.0 ** (db / 10.0)
            est = mc_estimate(model, snr, "mmse_rate", nsamples, seed)
            rows.append((db, est.mean, est.stderr, "mc", tag))
            rows.append((db, cf.mmse_sum_rate(model, snr), None, "closed", tag))
            rows.append((db, asy.affine_rate(hi, snr), None, "affine", tag))
    return rows


def build_rows(fig_id: int, nsamples: int = 100_000, seed: int = 1) -> tuple[list[Row], str, str]:
    """Rows plus the names of the x and value columns for figure ``fig_id``."""
    if fig_id not in PRESETS:
        raise ValueError(f"unknown figure id {fig_id!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[fig_id]
    rows: list[Row] = []
    if isinstance(p, IidSweep):
        models = [IidRayleigh(AntennaConfig(n, n)) for n in p.sizes]
        rows = _snr_rows(models, [m.describe() for m in models], p.snr_db, nsamples, seed)
    elif isinstance(p, TxCorrSweep):
        cfg = AntennaConfig(p.nr, p.nt)
        models = [SeparableRayleigh(cfg, CorrelationMatrix.identity(p.nr),
                                    build_exp_correlation(p.nt, rho)) for rho in p.rhos]
        labels = [f"{m.describe()}[rho_t={rho:g}]" for m, rho in zip(models, p.rhos)]
        rows = _snr_rows(models, labels, p.snr_db, nsamples, seed)
    elif isinstance(p, WidebandSweep):
        model = IidRayleigh(AntennaConfig(p.nr, p.nt))
        for receiver in ("mmse", "opt"):
            lo = asy.low_snr_params(model, receiver)
            rate = (lambda s: cf.mmse_sum_rate(model, s)) if receiver == "mmse" else \
                (lambda s: cf.opt_mi(model, s))
            tag = f"{model.describe()}[{receiver}]"
            for db in p.ebno_db:
                ebno = 10.0 ** (db / 10.0)
                if ebno < lo.ebno_min:
                    continue
                snr = asy.ebno_to_snr(rate, ebno)
                rows.append((db, snr / ebno, None, "closed", tag))
                rows.append((db, asy.wideband_rate(lo, ebno), None, "wideband", tag))
    elif isinstance(p, RicianShiftSweep):
        cfg = AntennaConfig(p.nr, p.nt)
        tag = RicianRank1(cfg, 0.0).describe().replace("K=0", "K")
        for k in p.k_factors:
            rows.append((k, DB_PER_3DB_UNIT * asy.rician_h1(cfg, k), None, "h1", tag))
            rows.append((k, DB_PER_3DB_UNIT * asy.rician_h2(cfg, k), None, "h2", tag))
    elif isinstance(p, CorrShiftSweep):
        for n in p.sizes:
            for rho in p.rhos:
                c = build_exp_correlation(n, float(rho))
                rows.append((rho, DB_PER_3DB_UNIT * asy.corr_f(c), None, "tx_shift",
                             f"separable[S]({n}x{n})"))
                rows.append((rho, DB_PER_3DB_UNIT * asy.corr_g(c, n), None, "rx_shift",
                             f"separable[R]({n}x{n})"))
    return rows, p.x_name, p.value_name


__all__ = ["PRESETS", "IidSweep", "WidebandSweep", "TxCorrSweep", "RicianShiftSweep",
           "CorrShiftSweep", "build_rows", "DB_PER_3DB_UNIT"]
