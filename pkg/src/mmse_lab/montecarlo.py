"""Per-realization MMSE / optimal rates and seeded Monte-Carlo estimation.

Realization functions accept a single ``(nr, nt)`` matrix or a stack
``(batch, nr, nt)``. ``snr`` is always linear (``P / N0``).

Estimation splits the sample range into fixed-size batches. Batch boundaries
do not depend on the number of worker threads and batch statistics are merged
in index order, so the estimate is bit-identical for any thread count.
"""

from __future__ import annotations

import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import ChannelModel, sample_channels
from .matkit import diag_of_inverse

LOG2E = 1.0 / math.log(2.0)
BATCH_SIZE = 4096
THREADS_ENV = "MMSE_LAB_THREADS"


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    nsamples: int
    seed: int

    def __post_init__(self):
        if self.stderr < 0 or self.nsamples < 1:
            raise ValueError("invalid Monte-Carlo estimate")


def _gram(h: np.ndarray, snr: float) -> np.ndarray:
    nt = h.shape[-1]
    g = np.conj(np.swapaxes(h, -1, -2)) @ h
    return np.eye(nt) + (snr / nt) * g


def _check_snr(snr: float) -> None:
    if not snr > 0:
        raise ValueError(f"snr must be > 0 (linear scale), got {snr!r}")


def sinr_per_stream(h: np.ndarray, snr: float) -> np.ndarray:
    """MMSE output SINRs ``1/[(I + snr/Nt H^H H)^{-1}]_ii - 1``."""
    _check_snr(snr)
    d = diag_of_inverse(_gram(np.asarray(h), snr))
    return np.maximum((1.0 - d) / d, 0.0)


def _mmse_rate_nats(h: np.ndarray, snr: float) -> np.ndarray:
    # log(1 + gamma_i) = -log [A^{-1}]_ii
    d = diag_of_inverse(_gram(h, snr))
    return -np.sum(np.log(d), axis=-1)


def _logdet_nats(a: np.ndarray) -> np.ndarray:
    sign, logabs = np.linalg.slogdet(a)
    return logabs


def sum_rate_realization(h: np.ndarray, snr: float) -> np.ndarray | float:
    """Sum of ``log2(1 + gamma_i)`` over the MMSE streams, in bits/s/Hz."""
    _check_snr(snr)
    out = LOG2E * _mmse_rate_nats(np.asarray(h), snr)
    return float(out) if np.ndim(out) == 0 else out


def opt_mi_realization(h: np.ndarray, snr: float) -> np.ndarray | float:
    """``log2 det(I + snr/Nt H H^H)`` in bits/s/Hz."""
    _check_snr(snr)
    out = LOG2E * _logdet_nats(_gram(np.asarray(h), snr))
    return float(out) if np.ndim(out) == 0 else out


def delete_column(h: np.ndarray, i: int) -> np.ndarray:
    return np.delete(h, i, axis=-1)


def reduced_opt_mi_realization(h: np.ndarray, snr: float, i: int) -> np.ndarray | float:
    """Optimal MI of ``H_i`` at ``(Nt-1)/Nt * snr`` (the reduced term of the decomposition)."""
    nt = np.shape(h)[-1]
    return opt_mi_realization(delete_column(np.asarray(h), i), snr * (nt - 1) / nt)


def logdet_j(h: np.ndarray) -> np.ndarray | float:
    """``log2 det`` of the smaller of ``H H^H`` and ``H^H H``."""
    h = np.asarray(h)
    nr, nt = h.shape[-2:]
    hh = np.conj(np.swapaxes(h, -1, -2))
    gram = hh @ h if nr >= nt else h @ hh
    out = LOG2E * _logdet_nats(gram)
    return float(out) if np.ndim(out) == 0 else out


# --- metrics -----------------------------------------------------------------

_METRIC_RE = re.compile(r"^(mmse_rate|opt_mi|dispersion_full|logdet_full|"
                        r"opt_mi_reduced|dispersion_reduced|logdet_reduced)(?:_(\d+))?$")

RATIO_METRICS = ("dispersion_full", "dispersion_reduced")


def parse_metric(metric: str, nt: int) -> tuple[str, int | None]:
    """Split ``'opt_mi_reduced_2'`` into ``('opt_mi_reduced', 1)`` (0-based column)."""
    m = _METRIC_RE.match(metric)
    if not m:
        raise ValueError(f"unknown metric {metric!r}")
    name, idx = m.group(1), m.group(2)
    reduced = name.endswith("_reduced")
    if reduced != (idx is not None):
        raise ValueError(f"metric {metric!r}: reduced metrics need a 1-based column suffix")
    if not reduced:
        return name, None
    col = int(idx) - 1
    if nt < 2:
        raise ValueError(f"metric {metric!r} needs nt >= 2")
    if not 0 <= col < nt:
        raise ValueError(f"metric {metric!r}: column must be in 1..{nt}")
    return name, col


def _batch_values(name: str, col: int | None, h: np.ndarray, snr: float) -> np.ndarray:
    if col is not None:
        nt = h.shape[-1]
        h = delete_column(h, col)
    if name == "mmse_rate":
        return LOG2E * _mmse_rate_nats(h, snr)
    if name == "opt_mi":
        return LOG2E * _logdet_nats(_gram(h, snr))
    if name == "opt_mi_reduced":
        # H_i^H H_i scaled by snr/Nt of the full channel
        return LOG2E * _logdet_nats(_gram(h, snr * (nt - 1) / nt))
    if name in ("logdet_full", "logdet_reduced"):
        return logdet_j(h)
    if name in RATIO_METRICS:
        theta = h @ np.conj(np.swapaxes(h, -1, -2))
        tr = np.real(np.trace(theta, axis1=-2, axis2=-1))
        tr2 = np.sum(np.abs(theta) ** 2, axis=(-2, -1))
        return np.stack([tr2, tr], axis=-1)
    raise ValueError(name)  # pragma: no cover


@dataclass
class _Moments:
    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, values: np.ndarray) -> "_Moments":
        v = values.reshape(values.shape[0], -1)
        mean = v.mean(axis=0)
        c = v - mean
        return cls(v.shape[0], mean, c.T @ c)

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.n * other.n / n)
        return _Moments(n, mean, m2)


def worker_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def mc_estimate(model: ChannelModel, snr: float, metric: str, nsamples: int, seed: int,
                threads: int | None = None) -> MonteCarloEstimate:
    """Seeded sample mean (with standard error) of a per-realization metric.

    ``metric`` is one of ``mmse_rate``, ``opt_mi``, ``opt_mi_reduced_<i>``,
    ``dispersion_full``, ``dispersion_reduced_<i>``, ``logdet_full``,
    ``logdet_reduced_<i>`` (``i`` is 1-based). Dispersion metrics return the
    plug-in ratio ``Nr E[tr T^2] / E[tr T]^2`` with a delta-method stderr.
    """
    _check_snr(snr)
    if nsamples < 100:
        raise ValueError("mc_estimate needs nsamples >= 100")
    name, col = parse_metric(metric, model.cfg.nt)

    starts = list(range(0, nsamples, BATCH_SIZE))

    def run(start: int) -> _Moments:
        count = min(BATCH_SIZE, nsamples - start)
        h = sample_channels(model, seed, start, count)
        return _Moments.of(_batch_values(name, col, h, snr))

    workers = threads if threads is not None else worker_count()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    acc = parts[0]
    for p in parts[1:]:
        acc = acc.merge(p)

    if name in RATIO_METRICS:
        cov = acc.m2 / (acc.n - 1) / acc.n
        ex2, ex1 = acc.mean
        nr = model.cfg.nr
        ratio = nr * ex2 / ex1**2
        grad = np.array([nr / ex1**2, -2.0 * nr * ex2 / ex1**3])
        var = float(grad @ cov @ grad)
        return MonteCarloEstimate(float(ratio), math.sqrt(max(var, 0.0)), nsamples, seed)
    var = float(acc.m2[0, 0]) / (acc.n - 1)
    return MonteCarloEstimate(float(acc.mean[0]), math.sqrt(var / acc.n), nsamples, seed)
