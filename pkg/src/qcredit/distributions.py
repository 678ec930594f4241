"""Latent-factor credit model: normal CDF helpers, the discretized latent
grid, per-obligor conditional default probabilities and the affine
rotation-angle fit used by the loading circuit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special


def normal_cdf(x):
    """Standard normal CDF. Accepts a scalar or an array."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("normal_cdf requires finite input")
    out = special.ndtr(arr)
    return float(out) if out.ndim == 0 else out


def normal_inv_cdf(p):
    """Inverse standard normal CDF on the open interval (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0) & (arr < 1)):
        raise ValueError("normal_inv_cdf requires 0 < p < 1")
    out = special.ndtri(arr)
    return float(out) if out.ndim == 0 else out


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


@dataclass(frozen=True, eq=False)
class LatentGrid:
    """Truncated, discretized standard normal on ``2**n_z`` affine points.

    ``z[i] = a_z * i + b_z`` spans ``[-z_max, z_max]``; ``q[i]`` is the
    normal density at ``z[i]`` renormalized to sum to one.
    """

    n_z: int
    z_max: float
    a_z: float
    b_z: float
    z: np.ndarray
    q: np.ndarray

    @property
    def size(self):
        return self.z.shape[0]

    @property
    def points(self):
        return list(zip(self.z.tolist(), self.q.tolist()))

    def mean(self):
        return float(np.dot(self.q, self.z))


def build_latent_grid(n_z: int, z_max: float = 3.0) -> LatentGrid:
    if n_z < 1:
        raise ValueError("n_z must be at least 1")
    if not z_max > 0:
        raise ValueError("z_max must be positive")
    n = 1 << n_z
    a_z = 2.0 * z_max / (n - 1)
    b_z = -float(z_max)
    z = a_z * np.arange(n) + b_z
    # symmetrize so q[i] == q[n-1-i] holds to the last bit
    dens = np.exp(-0.25 * (z * z + z[::-1] * z[::-1]))
    q = dens / dens.sum()
    z.setflags(write=False)
    q.setflags(write=False)
    return LatentGrid(n_z, float(z_max), a_z, b_z, z, q)


@dataclass(frozen=True)
class Asset:
    """One obligor: integer loss given default, base PD and factor loading."""

    lgd: int
    pd0: float
    rho: float = 0.0

    def __post_init__(self):
        if isinstance(self.lgd, bool) or not float(self.lgd).is_integer() or self.lgd < 1:
            raise ValueError(f"lgd must be a positive integer, got {self.lgd!r}")
        object.__setattr__(self, "lgd", int(self.lgd))
        if not 0.0 <= self.pd0 <= 1.0:
            raise ValueError(f"pd0 must lie in [0, 1], got {self.pd0!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho!r}")


@dataclass(frozen=True)
class Portfolio:
    assets: tuple[Asset, ...]

    def __init__(self, assets: Sequence[Asset]):
        assets = tuple(assets)
        if not assets:
            raise ValueError("a portfolio needs at least one asset")
        object.__setattr__(self, "assets", assets)

    @property
    def K(self):
        return len(self.assets)

    @property
    def lgds(self):
        return np.array([a.lgd for a in self.assets], dtype=np.int64)

    @property
    def pd0(self):
        return np.array([a.pd0 for a in self.assets])

    @property
    def rhos(self):
        return np.array([a.rho for a in self.assets])

    @property
    def total_lgd(self):
        return int(sum(a.lgd for a in self.assets))

    @property
    def n_S(self):
        # floor(log2(sum lgd)) + 1, exact for integers
        return self.total_lgd.bit_length()

    @classmethod
    def from_records(cls, records):
        return cls([Asset(**r) for r in records])


def conditional_pd(asset: Asset, z):
    """Default probability of ``asset`` given latent factor value(s) ``z``."""
    z = np.asarray(z, dtype=float)
    if asset.pd0 in (0.0, 1.0) or asset.rho == 0.0:
        out = np.full(z.shape, asset.pd0)
    else:
        u = (normal_inv_cdf(asset.pd0) - math.sqrt(asset.rho) * z) / math.sqrt(1 - asset.rho)
        out = special.ndtr(u)
    return float(out) if out.ndim == 0 else out


def angle_of(p):
    """RY angle whose ``|1>`` probability is ``p``: ``2 * arcsin(sqrt(p))``."""
    arr = np.asarray(p, dtype=float)
    if not np.all((arr >= 0) & (arr <= 1)):
        raise ValueError("probability outside [0, 1]")
    out = 2.0 * np.arcsin(np.sqrt(arr))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class AngleFit:
    """Affine approximation ``theta(z_i) ~ slope * i + intercept``."""

    slope: float
    intercept: float
    residual: float
    target: np.ndarray

    def angles(self, n_points=None):
        n = self.target.shape[0] if n_points is None else n_points
        return self.slope * np.arange(n) + self.intercept

    def clamped_angles(self):
        return np.clip(self.angles(), 0.0, math.pi)


def fit_linear_angles(asset: Asset, grid: LatentGrid) -> AngleFit:
    """Probability-weighted least-squares line through the exact angles."""
    theta = np.atleast_1d(angle_of(conditional_pd(asset, grid.z)))
    i = np.arange(grid.size, dtype=float)
    w = grid.q
    mean_i = np.dot(w, i)
    mean_t = np.dot(w, theta)
    var_i = np.dot(w, (i - mean_i) ** 2)
    slope = np.dot(w, (i - mean_i) * (theta - mean_t)) / var_i
    intercept = mean_t - slope * mean_i
    residual = float(np.max(np.abs(slope * i + intercept - theta)))
    theta.setflags(write=False)
    return AngleFit(float(slope), float(intercept), residual, theta)
