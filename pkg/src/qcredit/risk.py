"""Classical ground truth and the VaR / ECR pipeline.

Exact loss distributions by enumeration, expected loss, quantile search
(exact scan and amplitude-estimated bisection) and a seeded Monte Carlo
baseline with partitioned random streams.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .circuit import StateVector
from .distributions import (
    LatentGrid,
    Portfolio,
    conditional_pd,
    normal_cdf,
    normal_inv_cdf,
    normal_pdf,
)
from .errors import SizeError
from .model_circuits import build_A, layout_for
from .qae import QAE_MAX_QUBITS, error_bound, run_qae, sample_estimate

ENUM_MAX_BITS = 24
CDF_TOL = 1e-12
METHODS = ("exact", "qae", "mc")


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Law of the total loss on the integer support ``0 .. 2**n_S - 1``."""

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != np.shape(self.support):
            raise ValueError("support and probs differ in length")
        if np.any(probs < -1e-15) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be non-negative and sum to 1")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_probs(cls, probs):
        probs = np.asarray(probs, dtype=float)
        return cls(np.arange(probs.shape[0], dtype=np.int64), probs)

    def cdf(self):
        return np.minimum(np.cumsum(self.probs), 1.0)

    def mean(self):
        return float(np.dot(self.support, self.probs))

    def total_variation(self, other):
        return 0.5 * float(np.abs(self.probs - other.probs).sum())


@dataclass(eq=False)
class RiskReport:
    alpha: float
    expected_loss: float
    var: int
    ecr: float
    method: str
    diagnostics: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def probes(self):
        return len(self.diagnostics)

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "method": self.method,
            "expected_loss": self.expected_loss,
            "var": self.var,
            "ecr": self.ecr,
            "probes": self.probes,
            "bisection_trace": list(self.diagnostics),
            "warnings": list(self.warnings),
        }


def _outcomes(K):
    x = np.arange(1 << K, dtype=np.int64)
    return (x[:, None] >> np.arange(K)) & 1


def conditional_pd_matrix(portfolio: Portfolio, grid: LatentGrid | None):
    """``P[X_k = 1 | z_i]`` with shape ``(grid points, K)``; one row if no grid."""
    if grid is None:
        return portfolio.pd0[None, :]
    return np.stack([np.atleast_1d(conditional_pd(a, grid.z)) for a in portfolio.assets], axis=1)


def exact_loss_distribution(portfolio: Portfolio, grid: LatentGrid | None = None,
                            max_bits=ENUM_MAX_BITS) -> DiscreteDistribution:
    """Enumerate all default patterns (and grid points for the latent model)."""
    K = portfolio.K
    nz = 0 if grid is None else grid.n_z
    if K + nz > max_bits:
        raise SizeError(f"enumeration over {K + nz} bits exceeds the limit of {max_bits}")
    X = _outcomes(K)
    loss = X @ portfolio.lgds
    P = conditional_pd_matrix(portfolio, grid)
    weights = np.ones(1) if grid is None else grid.q
    probs = np.zeros(1 << portfolio.n_S)
    for w, p in zip(weights, P):
        pattern = np.prod(np.where(X == 1, p, 1.0 - p), axis=1)
        probs += w * np.bincount(loss, weights=pattern, minlength=probs.shape[0])
    return DiscreteDistribution.from_probs(probs)


def loss_distribution_from_state(state: StateVector, portfolio: Portfolio,
                                 grid: LatentGrid | None) -> DiscreteDistribution:
    """Read the law of the sum register off a simulated oracle state."""
    lay = layout_for(portfolio, grid)
    return DiscreteDistribution.from_probs(state.marginal(lay.sum_register))


def expected_loss_independent(portfolio: Portfolio) -> float:
    return float(sum(a.lgd * a.pd0 for a in portfolio.assets))


def expected_loss_gci(portfolio: Portfolio, grid: LatentGrid) -> float:
    """Expected loss under the discretized latent model the circuits load."""
    P = conditional_pd_matrix(portfolio, grid)
    return float(grid.q @ (P @ portfolio.lgds))


def expected_loss(portfolio: Portfolio, grid: LatentGrid | None) -> float:
    if grid is None:
        return expected_loss_independent(portfolio)
    return expected_loss_gci(portfolio, grid)


def _expected_loss_density(portfolio, z):
    return sum(a.lgd * conditional_pd(a, z) for a in portfolio.assets) * normal_pdf(z)


def expected_loss_gci_continuous(portfolio: Portfolio) -> float:
    """Expected loss under the untruncated normal factor (adaptive quadrature)."""
    val, _ = integrate.quad(lambda z: float(_expected_loss_density(portfolio, z)),
                            -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(val)


def discretization_bound(portfolio: Portfolio, grid: LatentGrid, span=12.0, n=200001) -> float:
    """Upper bound on ``|E_grid[L] - E[L]|``.

    ``Lip(g) * W1(q, N(0,1))`` where ``g(z) = sum_k lgd_k p_k(z)`` and ``W1``
    is the 1-Wasserstein distance between the grid law and the standard
    normal (Kantorovich-Rubinstein duality).
    """
    t = np.linspace(-span, span, n)
    grid_cdf = np.zeros_like(t)
    for z, q in zip(grid.z, grid.q):
        grid_cdf += q * (t >= z)
    w1 = float(integrate.trapezoid(np.abs(grid_cdf - normal_cdf(t)), t))
    slope = np.zeros_like(t)
    for a in portfolio.assets:
        if a.rho == 0.0 or a.pd0 in (0.0, 1.0):
            continue
        u = (normal_inv_cdf(a.pd0) - math.sqrt(a.rho) * t) / math.sqrt(1 - a.rho)
        slope += a.lgd * normal_pdf(u) * math.sqrt(a.rho / (1 - a.rho))
    # 1% margin covers the sampled maximum of the derivative
    return 1.01 * float(slope.max()) * w1


def var_exact(dist: DiscreteDistribution, alpha: float) -> int:
    """Smallest loss ``x`` with ``P[L <= x] >= alpha``."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    cdf = dist.cdf()
    hit = np.flatnonzero(cdf >= alpha - CDF_TOL)
    return int(dist.support[hit[0]]) if hit.size else int(dist.support[-1])


def bisection_var(cdf_estimate, n_S: int, alpha: float):
    """Integer bisection for the smallest ``x`` with ``cdf_estimate(x) >= alpha``.

    Bracket starts at ``lo = -1`` (CDF 0) and ``hi = 2**n_S - 1`` (CDF 1); the
    probe is the rounded-down midpoint. Returns ``(var, trace, warnings)``.
    """
    lo, hi = -1, (1 << n_S) - 1
    trace = []
    while hi - lo > 1:
        mid = lo + (hi - lo) // 2
        est, bound = cdf_estimate(mid)
        above = est >= alpha
        trace.append({"threshold": mid, "estimate": est, "bound": bound,
                      "lower": lo, "upper": hi, "above": bool(above)})
        if above:
            hi = mid
        else:
            lo = mid
    warnings = []
    probed = sorted((t["threshold"], t["estimate"]) for t in trace)
    ests = [e for _, e in probed]
    if any(b < a for a, b in zip(ests, ests[1:])):
        warnings.append("non-monotone CDF estimates across probes; "
                        "VaR taken from the monotone envelope")
        envelope = np.maximum.accumulate(ests)
        hits = [x for (x, _), e in zip(probed, envelope) if e >= alpha]
        hi = min(hits) if hits else (1 << n_S) - 1
    return hi, trace, warnings


def var_bisection_qae(portfolio: Portfolio, grid: LatentGrid | None, alpha: float, m: int,
                      mode="linear", shots=None, seed=None, max_qubits=QAE_MAX_QUBITS,
                      backend=None) -> RiskReport:
    """VaR by bisection over amplitude-estimated CDF values."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    seeds = np.random.SeedSequence(seed).spawn(portfolio.n_S) if shots else None

    calls = []

    def probe(x):
        res = run_qae(build_A(portfolio, grid, x, mode), m, max_qubits, backend)
        est = sample_estimate(res, shots, seeds[len(calls)]) if shots else res.estimate
        calls.append(x)
        return est, error_bound(est, res.samples_M)

    var, trace, warnings = bisection_var(probe, portfolio.n_S, alpha)
    el = expected_loss(portfolio, grid)
    return RiskReport(alpha, el, int(var), var - el, "qae", trace, warnings)


def _sample_losses(portfolio, grid, n, rng, chunk=1 << 18):
    """Draw ``n`` total losses: grid index ``i ~ q`` then Bernoulli defaults."""
    P = conditional_pd_matrix(portfolio, grid)
    lgd = portfolio.lgds
    out = np.empty(n, dtype=np.int64)
    for start in range(0, n, chunk):
        size = min(chunk, n - start)
        if grid is None:
            p = P[0]
        else:
            p = P[rng.choice(grid.size, size=size, p=grid.q)]
        defaults = rng.random((size, portfolio.K)) < p
        out[start:start + size] = defaults @ lgd
    return out


def mc_losses(portfolio: Portfolio, grid: LatentGrid | None, samples: int, seed=None,
              partitions: int = 1) -> np.ndarray:
    """Seeded loss samples; partition ``j`` uses child stream ``j`` of ``seed``."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if partitions < 1:
        raise ValueError("partitions must be at least 1")
    children = np.random.SeedSequence(seed).spawn(partitions)
    sizes = [samples // partitions + (j < samples % partitions) for j in range(partitions)]
    parts = [_sample_losses(portfolio, grid, s, np.random.default_rng(c))
             for s, c in zip(sizes, children) if s]
    return np.concatenate(parts)


def mc_simulate(portfolio: Portfolio, grid: LatentGrid | None, samples: int, seed=None,
                alpha: float = 0.95, partitions: int = 1):
    """Empirical loss distribution plus VaR/ECR from Monte Carlo samples."""
    losses = mc_losses(portfolio, grid, samples, seed, partitions)
    counts = np.bincount(losses, minlength=1 << portfolio.n_S)
    dist = DiscreteDistribution.from_probs(counts / samples)
    var = var_exact(dist, alpha)
    el = expected_loss(portfolio, grid)
    return dist, RiskReport(alpha, el, var, var - el, "mc")


def mc_convergence(portfolio: Portfolio, grid: LatentGrid | None, sample_sizes,
                   trials: int = 200, x: int | None = None, seed=None):
    """RMSE of the empirical ``P[L <= x]`` over independent runs per sample size.

    Returns ``(rows, slope, x)``; ``slope`` is the least-squares slope of
    log RMSE against log M and ``x`` the evaluated loss level.
    """
    exact = exact_loss_distribution(portfolio, grid)
    if x is None:
        x = var_exact(exact, 0.5)
    target = float(exact.cdf()[x])
    root = np.random.SeedSequence(seed)
    rows = []
    for M, ss in zip(sample_sizes, root.spawn(len(sample_sizes))):
        errs = []
        for child in ss.spawn(trials):
            losses = _sample_losses(portfolio, grid, int(M), np.random.default_rng(child))
            errs.append(np.mean(losses <= x) - target)
        rmse = float(np.sqrt(np.mean(np.square(errs))))
        rows.append({"M": int(M), "rmse": rmse, "trials": trials,
                     "reference_rmse": math.sqrt(target * (1 - target) / M)})
    slope = float(np.polyfit(np.log([r["M"] for r in rows]),
                             np.log([r["rmse"] for r in rows]), 1)[0]) if len(rows) > 1 else float("nan")
    return rows, slope, x


def ecr(portfolio: Portfolio, grid: LatentGrid | None, alpha: float, method="exact",
        m: int = 4, mode="linear", shots=None, seed=None, mc_samples: int = 100_000,
        max_qubits=QAE_MAX_QUBITS, backend=None) -> RiskReport:
    """Economic capital ``VaR - E[L]``; the expected loss is always classical."""
    if method == "exact":
        var = var_exact(exact_loss_distribution(portfolio, grid), alpha)
        el = expected_loss(portfolio, grid)
        return RiskReport(alpha, el, var, var - el, "exact")
    if method == "qae":
        return var_bisection_qae(portfolio, grid, alpha, m, mode, shots, seed, max_qubits, backend)
    if method == "mc":
        return mc_simulate(portfolio, grid, mc_samples, seed, alpha)[1]
    raise ValueError(f"method must be one of {METHODS}, got {method!r}")
