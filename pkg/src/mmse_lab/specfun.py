"""Scalar special functions used by the closed-form rate expressions.

Everything here works on plain Python floats/ints. The exponential integral is
only ever exposed in the scaled form ``e^x E_h(x)``: the rate formulas multiply
``e^{N_t/snr}`` by ``E_h(N_t/snr)`` and only the product is representable at
low SNR.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

EULER_GAMMA = 0.57721566490153286061

_EPS = np.finfo(float).eps
_FPMIN = 1e-300
_CF_MAXITER = 10_000


def _check_order(h: int) -> None:
    if int(h) != h or h < 1:
        raise ValueError(f"exponential integral order must be an integer >= 1, got {h!r}")


def _check_arg(x: float) -> None:
    if not (x > 0.0) or not math.isfinite(x):
        raise ValueError(f"exponential integral argument must be finite and > 0, got {x!r}")


def _e1_scaled_series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!), for 0 < x <= 1
    terms = [-EULER_GAMMA, -math.log(x)]
    t = 1.0
    k = 1
    while True:
        t *= -x / k
        term = -t / k
        terms.append(term)
        if abs(term) < 1e-18:
            break
        k += 1
    return math.exp(x) * math.fsum(terms)


def _en_scaled_cf(h: int, x: float) -> float:
    """Modified Lentz evaluation of e^x E_h(x), valid for x > 1."""
    b = x + h
    c = 1.0 / _FPMIN
    d = 1.0 / b
    out = d
    for i in range(1, _CF_MAXITER):
        an = -i * (h - 1 + i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        out *= delta
        if abs(delta - 1.0) < _EPS:
            return out
    raise ArithmeticError(f"continued fraction for E_{h}({x}) did not converge")


def expint_scaled_seq(hmax: int, x: float) -> np.ndarray:
    """Return ``[e^x E_1(x), ..., e^x E_hmax(x)]`` as a float array."""
    _check_order(hmax)
    _check_arg(x)
    out = np.empty(hmax)
    if x <= 1.0:
        # upward recurrence amplifies errors by x/h <= 1 here
        out[0] = _e1_scaled_series(x)
        for h in range(1, hmax):
            out[h] = (1.0 - x * out[h - 1]) / h
    else:
        for h in range(1, hmax + 1):
            out[h - 1] = _en_scaled_cf(h, x)
    return out


def expint_scaled(h: int, x: float) -> float:
    """``e^x E_h(x)`` for integer ``h >= 1`` and ``x > 0``.

    Finite for every positive ``x``; tends to ``1/(h-1)`` as ``x -> 0`` for
    ``h >= 2`` and to ``1/x`` as ``x -> inf``.
    """
    _check_order(h)
    _check_arg(x)
    if x <= 1.0:
        return float(expint_scaled_seq(h, x)[-1])
    return _en_scaled_cf(h, x)


def digamma_int(j: int) -> float:
    """Digamma at a positive integer: ``sum_{k<j} 1/k - gamma``."""
    if int(j) != j or j < 1:
        raise ValueError(f"digamma_int needs an integer >= 1, got {j!r}")
    return math.fsum([1.0 / k for k in range(1, int(j))] + [-EULER_GAMMA])


def harmonic(n: int) -> float:
    """``sum_{k=1}^n 1/k`` (0 for n <= 0)."""
    return math.fsum(1.0 / k for k in range(1, int(n) + 1))


def log_multivariate_gamma(n: int, m: int) -> float:
    """Log of the normalized complex multivariate gamma ``prod_{i=1}^n Gamma(m-i+1)``."""
    if n < 1 or m < n:
        raise ValueError(f"log_multivariate_gamma requires m >= n >= 1, got n={n}, m={m}")
    return math.fsum(math.lgamma(m - i + 1) for i in range(1, n + 1))


# --- 2F2(1,1;2,b;-z) -------------------------------------------------------

_SERIES_ZMAX = 30.0
_SERIES_RTOL = 1e-11


def _hyp2f2_series(z: float, b: float) -> tuple[float, float]:
    """Alternating series sum_k (-z)^k / ((k+1)(b)_k) and an error bound."""
    terms = [1.0]
    t = 1.0
    peak = 1.0
    k = 0
    while True:
        t *= -z * (k + 1) / ((k + 2) * (b + k))
        k += 1
        terms.append(t)
        peak = max(peak, abs(t))
        if k > z and abs(t) < 1e-18 * peak:
            break
        if k > 10_000:
            raise ArithmeticError("2F2 series did not converge")
    total = math.fsum(terms)
    return total, 4.0 * _EPS * peak


def _hyp2f2_quad(z: float, b: float) -> float:
    # Euler integral of 1F1(1;b;-t), integrated once more over t in [0, z]
    def kernel(u: float) -> float:
        y = z * u
        g = 1.0 if y == 0.0 else -math.expm1(-y) / y
        return (1.0 - u) ** (b - 2.0) * g

    breaks = [p for p in (1.0 / z, 10.0 / z, 100.0 / z) if 0.0 < p < 1.0]
    val, _ = integrate.quad(kernel, 0.0, 1.0, points=breaks or None,
                            epsabs=0.0, epsrel=1e-13, limit=400)
    return (b - 1.0) * val


def hyp2f2_neg(b: float, z: float) -> float:
    """``2F2(1,1;2,b;-z)`` for ``b >= 2`` and ``z >= 0``."""
    if z < 0:
        raise ValueError(f"argument z must be >= 0, got {z!r}")
    if b < 2:
        raise ValueError(f"lower parameter b must be >= 2, got {b!r}")
    if z == 0.0:
        return 1.0
    if z <= _SERIES_ZMAX:
        val, err = _hyp2f2_series(z, b)
        if err <= _SERIES_RTOL * abs(val):
            return val
    return _hyp2f2_quad(z, b)


def theta_2f2(nr: int, nt: int, k_factor: float) -> float:
    """``2F2(1,1;2,nr+1;-K nr nt)``, the Rician log-det correction term."""
    if k_factor < 0:
        raise ValueError(f"Rician K-factor must be >= 0, got {k_factor!r}")
    return hyp2f2_neg(nr + 1.0, k_factor * nr * nt)


def expint_scaled_seq_mp(hmax: int, x, ctx=None) -> list:
    """Extended-precision twin of :func:`expint_scaled_seq` (mpmath, current dps)."""
    import mpmath

    mp = ctx or mpmath.mp
    _check_order(hmax)
    x = mp.mpf(x)
    if not x > 0:
        raise ValueError("exponential integral argument must be > 0")
    eps = mp.mpf(2) ** (-mp.prec)
    out = []
    if x <= 1:
        total = -mp.euler - mp.log(x)
        t = mp.mpf(1)
        k = 1
        while True:
            t *= -x / k
            term = -t / k
            total += term
            if abs(term) < eps * abs(total):
                break
            k += 1
        out.append(mp.exp(x) * total)
        for h in range(1, hmax):
            out.append((1 - x * out[-1]) / h)
        return out
    tiny = mp.mpf(10) ** (-mp.dps * 4)
    for h in range(1, hmax + 1):
        b = x + h
        c = 1 / tiny
        d = 1 / b
        acc = d
        i = 1
        while True:
            an = -i * (h - 1 + i)
            b += 2
            d = 1 / (an * d + b)
            c = b + an / c
            delta = c * d
            acc *= delta
            if abs(delta - 1) < eps:
                break
            i += 1
            if i > 100_000:
                raise ArithmeticError("extended-precision continued fraction did not converge")
        out.append(acc)
    return out
