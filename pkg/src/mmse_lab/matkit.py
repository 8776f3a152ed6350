"""Small dense matrix kernel.

All functions take numpy arrays. ``diag_of_inverse`` also accepts stacks of
matrices (``(..., n, n)``), which is what the Monte-Carlo engine feeds it.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

MAX_DIM = 64


class RepeatedEigenvalues(ValueError):
    """Eigenvalues are not strictly separated, so a Vandermonde denominator vanishes."""


class SignedLogDet(NamedTuple):
    sign: float | complex
    log_abs: float


def _square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {a.shape}")
    if a.shape[-1] > MAX_DIM:
        raise ValueError(f"matrix dimension {a.shape[-1]} exceeds the {MAX_DIM}x{MAX_DIM} cap")
    if a.shape[-1] < 1:
        raise ValueError("empty matrix")
    return a


def is_hermitian(a: np.ndarray, rtol: float = 1e-12) -> bool:
    a = _square(a)
    scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
    return bool(np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2)))) <= rtol * scale)


def hermitian_eig_desc(a: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, sorted descending (stable on ties)."""
    a = _square(a)
    if a.ndim != 2:
        raise ValueError("hermitian_eig_desc takes a single matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if not is_hermitian(a, rtol):
        raise ValueError("matrix is not Hermitian")
    try:
        w = np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ArithmeticError("Hermitian eigensolver did not converge") from exc
    return w[np.argsort(-w, kind="stable")]


def signed_logdet(a: np.ndarray) -> SignedLogDet:
    """Determinant as (sign, ln|det|) from a pivoted LU factorization.

    For complex input ``sign`` is the unit-modulus phase of the determinant.
    A singular matrix gives ``SignedLogDet(0, -inf)``.
    """
    a = _square(a)
    sign, logabs = np.linalg.slogdet(a)
    if sign == 0:
        return SignedLogDet(0.0, -np.inf)
    if np.iscomplexobj(sign):
        sign = complex(sign)
        if abs(sign.imag) <= 1e-14:
            sign = float(np.sign(sign.real))
    else:
        sign = float(sign)
    return SignedLogDet(sign, float(logabs))


def diag_of_inverse(a: np.ndarray) -> np.ndarray:
    """Diagonal of ``A^{-1}`` for Hermitian positive-definite ``A`` (stacks allowed).

    Computed through the Cholesky factor, ``[A^{-1}]_ii = sum_k |(L^{-1})_ki|^2``,
    so every entry is real and positive.
    """
    a = _square(a)
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("matrix is not numerically positive definite") from exc
    linv = np.linalg.inv(chol)
    return np.sum(np.abs(linv) ** 2, axis=-2)


def minor(a: np.ndarray, i: int) -> np.ndarray:
    """Matrix with row and column ``i`` removed (the principal ``(i,i)`` minor)."""
    a = _square(a)
    keep = np.delete(np.arange(a.shape[-1]), i)
    return a[..., keep[:, None], keep[None, :]]


def strict_descending(values, gap: float = 1e-9) -> np.ndarray:
    """Validate that ``values`` are positive and strictly decreasing.

    Raises :class:`RepeatedEigenvalues` when two consecutive values are closer
    than ``gap * values[0]``.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-d vector of eigenvalues")
    if np.any(v <= 0):
        raise ValueError("eigenvalues must be positive")
    if v.size > 1 and np.any((v[:-1] - v[1:]) <= gap * v[0]):
        raise RepeatedEigenvalues(f"eigenvalues not strictly separated: {v}")
    return v


def vandermonde(values: np.ndarray) -> float:
    """``prod_{l<k} (v_k - v_l)``, the determinant of ``[v_s^(t-1)]``."""
    v = np.asarray(values, dtype=float)
    out = 1.0
    for k in range(v.size):
        for l in range(k):
            out *= v[k] - v[l]
    return out
