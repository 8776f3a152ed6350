"""Channel models and counter-based sampling of channel realizations.

Three model families are supported: i.i.d. Rayleigh, separable (Kronecker)
correlated Rayleigh ``R^{1/2} G S^{1/2}``, and uncorrelated Rician with a rank-1
line-of-sight component. All are normalized so that ``E[tr(H H^H)] = Nr Nt``.

Sampling is keyed by ``(seed, sample index)``: sample ``i`` consumes Philox
counter block ``i * blocks_per_sample`` onward, so any sample can be drawn on
its own and batches can be split across workers without changing a bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .matkit import hermitian_eig_desc, is_hermitian

_UNIT_DIAG_TOL = 1e-12
_SQRT_CLAMP = 1e-14


@dataclass(frozen=True)
class AntennaConfig:
    nr: int
    nt: int

    def __post_init__(self):
        for name in ("nr", "nt"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def n(self) -> int:
        return min(self.nr, self.nt)

    @property
    def m(self) -> int:
        return max(self.nr, self.nt)

    @property
    def n_prime(self) -> int:
        return min(self.nr, self.nt - 1)

    @property
    def m_prime(self) -> int:
        return max(self.nr, self.nt - 1)

    @property
    def beta(self) -> float:
        return self.nt / self.nr

    def require_reduced(self) -> None:
        """MMSE sum-rate quantities delete a column of H, so need ``nt >= 2``."""
        if self.nt < 2:
            raise ValueError("MMSE sum-rate quantities need nt >= 2")


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Hermitian positive-definite matrix with unit diagonal."""

    entries: np.ndarray
    eig: np.ndarray = field(init=False, repr=False)
    sqrt: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex if np.iscomplexobj(self.entries) else float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"correlation matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("correlation matrix has non-finite entries")
        if not is_hermitian(a, 1e-12):
            raise ValueError("correlation matrix is not Hermitian")
        if np.max(np.abs(np.diag(a) - 1.0)) > _UNIT_DIAG_TOL:
            raise ValueError("correlation matrix must have unit diagonal")
        a.setflags(write=False)
        eig = hermitian_eig_desc(a)
        if eig[-1] <= 0:
            raise ValueError("correlation matrix is not positive definite")
        eig.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "eig", eig)
        if self.is_identity:
            root = None
        else:
            w, v = np.linalg.eigh(a)
            root = (v * np.sqrt(np.maximum(w, _SQRT_CLAMP))) @ v.conj().T
            root.setflags(write=False)
        object.__setattr__(self, "sqrt", root)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.entries, np.eye(self.dim)))

    def minor(self, i: int) -> "CorrelationMatrix":
        keep = [j for j in range(self.dim) if j != i]
        return CorrelationMatrix(self.entries[np.ix_(keep, keep)])

    @classmethod
    def identity(cls, dim: int) -> "CorrelationMatrix":
        return cls(np.eye(dim))


def build_exp_correlation(dim: int, rho: float) -> CorrelationMatrix:
    """Exponential correlation model, entries ``rho^|i-j|``."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"exponential correlation needs 0 <= rho < 1, got {rho!r}")
    idx = np.arange(dim)
    return CorrelationMatrix(float(rho) ** np.abs(idx[:, None] - idx[None, :]))


def array_response(dim: int, theta: float) -> np.ndarray:
    """Half-wavelength uniform linear array, ``a_k = exp(i pi k sin(theta))``."""
    return np.exp(1j * math.pi * np.arange(dim) * math.sin(theta))


@dataclass(frozen=True)
class IidRayleigh:
    cfg: AntennaConfig

    tag = "iid"
    exchangeable = True

    def describe(self) -> str:
        return f"iid({self.cfg.nr}x{self.cfg.nt})"


@dataclass(frozen=True)
class SeparableRayleigh:
    cfg: AntennaConfig
    R: CorrelationMatrix
    S: CorrelationMatrix

    tag = "separable"

    def __post_init__(self):
        if self.R.dim != self.cfg.nr or self.S.dim != self.cfg.nt:
            raise ValueError(
                f"correlation dims (R {self.R.dim}, S {self.S.dim}) do not match "
                f"nr={self.cfg.nr}, nt={self.cfg.nt}")

    @property
    def exchangeable(self) -> bool:
        # deleting any column leaves the same distribution only without tx correlation
        return self.S.is_identity

    def describe(self) -> str:
        side = []
        if not self.R.is_identity:
            side.append("R")
        if not self.S.is_identity:
            side.append("S")
        return f"separable[{'+'.join(side) or 'I'}]({self.cfg.nr}x{self.cfg.nt})"


@dataclass(frozen=True)
class RicianRank1:
    cfg: AntennaConfig
    k_factor: float
    theta_r: float = 0.0
    theta_t: float = 0.0

    tag = "rician"
    # rates depend on the specular component only through K, so every
    # reduced channel H_i has the same rate statistics
    exchangeable = True

    def __post_init__(self):
        if not (self.k_factor >= 0) or not math.isfinite(self.k_factor):
            raise ValueError(f"Rician K-factor must be finite and >= 0, got {self.k_factor!r}")

    @property
    def a_r(self) -> np.ndarray:
        return array_response(self.cfg.nr, self.theta_r)

    @property
    def a_t(self) -> np.ndarray:
        return array_response(self.cfg.nt, self.theta_t)

    @property
    def mean(self) -> np.ndarray:
        k = self.k_factor
        return math.sqrt(k / (k + 1.0)) * np.outer(self.a_r, self.a_t)

    def describe(self) -> str:
        return f"rician(K={self.k_factor:g})({self.cfg.nr}x{self.cfg.nt})"


ChannelModel = Union[IidRayleigh, SeparableRayleigh, RicianRank1]


# --- config parsing ---------------------------------------------------------

def _matrix_from_json(rows) -> np.ndarray:
    arr = []
    for row in rows:
        out_row = []
        for v in row:
            if isinstance(v, (list, tuple)):
                if len(v) != 2:
                    raise ValueError("complex entries must be [re, im] pairs")
                out_row.append(complex(v[0], v[1]))
            else:
                out_row.append(v)
        arr.append(out_row)
    a = np.array(arr)
    if np.iscomplexobj(a) and np.all(a.imag == 0):
        a = a.real
    return a.astype(complex if np.iscomplexobj(a) else float)


def build_model(desc: dict) -> ChannelModel:
    """Build a validated model from a parsed JSON config document.

    Keys: ``model`` (iid|separable|rician), ``nr``, ``nt``, and optionally
    ``rho_r``/``rho_t`` (exponential shorthand), ``R``/``S`` (explicit
    matrices, which win over the shorthand), ``k_factor``, ``theta_r``,
    ``theta_t``.
    """
    try:
        kind = desc["model"]
        cfg = AntennaConfig(desc["nr"], desc["nt"])
    except KeyError as exc:
        raise ValueError(f"channel config missing key {exc}") from None
    if kind == "iid":
        return IidRayleigh(cfg)
    if kind == "separable":
        if desc.get("R") is not None:
            R = CorrelationMatrix(_matrix_from_json(desc["R"]))
        else:
            R = build_exp_correlation(cfg.nr, float(desc.get("rho_r", 0.0)))
        if desc.get("S") is not None:
            S = CorrelationMatrix(_matrix_from_json(desc["S"]))
        else:
            S = build_exp_correlation(cfg.nt, float(desc.get("rho_t", 0.0)))
        return SeparableRayleigh(cfg, R, S)
    if kind == "rician":
        return RicianRank1(cfg, float(desc.get("k_factor", 0.0)),
                           float(desc.get("theta_r", 0.0)), float(desc.get("theta_t", 0.0)))
    raise ValueError(f"unknown channel model {kind!r}")


# --- sampling ---------------------------------------------------------------

def _blocks_per_sample(cfg: AntennaConfig) -> int:
    # one 64-bit word per uniform, two uniforms per complex entry, 4 words per block
    return -(-2 * cfg.nr * cfg.nt // 4)


def standard_complex_normal(seed: int, start: int, count: int, nr: int, nt: int) -> np.ndarray:
    """CN(0,1) matrices for sample indices ``start .. start+count-1``.

    Box-Muller on Philox output: sample ``i`` starts at counter block
    ``i * ceil(2 nr nt / 4)`` under key ``seed``.
    """
    cfg = AntennaConfig(nr, nt)
    bps = _blocks_per_sample(cfg)
    words = 4 * bps
    bitgen = np.random.Philox(key=int(seed))
    if start:
        bitgen.advance(start * bps)
    raw = bitgen.random_raw(count * words).reshape(count, words)[:, : 2 * nr * nt]
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u1 = u[:, 0::2]
    u2 = u[:, 1::2]
    # |z|^2 ~ Exp(1): unit total variance, 1/2 per real component
    z = np.sqrt(-np.log(u1)) * np.exp(2j * math.pi * u2)
    return z.reshape(count, nr, nt)


def sample_channels(model: ChannelModel, seed: int, start: int, count: int) -> np.ndarray:
    """Draw ``count`` realizations, shape ``(count, nr, nt)``."""
    cfg = model.cfg
    g = standard_complex_normal(seed, start, count, cfg.nr, cfg.nt)
    if isinstance(model, IidRayleigh):
        return g
    if isinstance(model, SeparableRayleigh):
        if model.R.sqrt is not None:
            g = model.R.sqrt @ g
        if model.S.sqrt is not None:
            g = g @ model.S.sqrt
        return g
    if isinstance(model, RicianRank1):
        k = model.k_factor
        # H = D_r (sqrt(K/(K+1)) 1 1^T + sqrt(1/(K+1)) G) D_t with D = diag(a).
        # Rotating the circular noise by the unit-modulus phases leaves its law
        # unchanged, and makes every rate statistic exactly angle-free per sample.
        los = math.sqrt(k / (k + 1.0))
        h = math.sqrt(1.0 / (k + 1.0)) * g + los
        return model.a_r[:, None] * h * model.a_t[None, :]
    raise TypeError(f"unsupported model {type(model).__name__}")


def sample_channel(model: ChannelModel, seed: int, index: int) -> np.ndarray:
    """One ``nr x nt`` realization for ``(seed, index)``."""
    return sample_channels(model, seed, index, 1)[0]
