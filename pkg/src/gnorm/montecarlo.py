"""Monte Carlo estimates of norms of structured random matrices.

Sample ``s`` always uses substream ``s`` of the ensemble spec and results
are reduced in sample order, so serial and threaded runs agree bit for bit.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, ExponentPair, as_profile
from .ensembles import EnsembleSpec, sample_matrix
from .envelope import d_infinity, d_infinity_weibull, envelope_report, weighted_sum
from .pqnorm import AscentConfig, alternating_norm_lower, column_norms, row_norms

MC_ASCENT = AscentConfig(restarts=8, rel_tolerance=1e-8)
CAVEAT = "norm values are certified lower bounds unless interval-converged"


def default_workers() -> int:
    env = os.environ.get("GNORM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SampleStats:
    n_samples: int
    mean: float
    stderr: float
    moments: dict = field(default_factory=dict)
    tail_freqs: dict = field(default_factory=dict)
    seed: int = 0
    norm_method: str = "alternating"
    caveat: str = CAVEAT

    @property
    def ci95(self) -> tuple[float, float]:
        return self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "mean": self.mean,
            "stderr": self.stderr,
            "ci95": list(self.ci95),
            "moments": {str(k): v for k, v in self.moments.items()},
            "tail_freqs": {str(k): v for k, v in self.tail_freqs.items()},
            "seed": self.seed,
            "norm_method": self.norm_method,
            "caveat": self.caveat,
        }


@dataclass(frozen=True)
class Draws:
    """Per-sample values in sample order."""

    norm: np.ndarray
    max_abs: np.ndarray
    row_max: np.ndarray
    col_max: np.ndarray


def _check_n(N: int):
    if N < 2:
        raise DomainError("need at least two samples")


def _map_ordered(fn, N: int, workers: int | None):
    workers = 1 if workers is None else workers
    if workers <= 1:
        return [fn(s) for s in range(N)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(N)))


def simulate(A, pq: ExponentPair | None, spec: EnsembleSpec, N: int, cfg: AscentConfig | None = None,
             workers: int | None = 1, with_norm: bool = True) -> Draws:
    """Draw ``N`` matrices and record the norm, the largest entry and the row/column maxima."""
    _check_n(N)
    P = as_profile(A)
    cfg = cfg or MC_ASCENT

    def one(s):
        X = sample_matrix(P, spec, s)
        mx = float(np.abs(X).max())
        if pq is None:
            return 0.0, mx, 0.0, 0.0
        rmax = float(row_norms(X, pq.p_star).max())
        cmax = float(column_norms(X, pq.q).max())
        val = alternating_norm_lower(X, pq, cfg).value if with_norm else 0.0
        return val, mx, rmax, cmax

    out = np.array(_map_ordered(one, N, workers), dtype=float).reshape(N, 4)
    return Draws(out[:, 0].copy(), out[:, 1].copy(), out[:, 2].copy(), out[:, 3].copy())


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    mean = math.fsum(x.tolist()) / len(x)
    var = math.fsum(((x - mean) ** 2).tolist()) / (len(x) - 1)
    return mean, math.sqrt(var / len(x))


def power_mean(x: np.ndarray, rho: float) -> float:
    if rho < 1:
        raise DomainError("rho must be >= 1")
    top = float(np.max(np.abs(x))) if len(x) else 0.0
    if top == 0.0:
        return 0.0
    return top * (math.fsum(((np.abs(x) / top) ** rho).tolist()) / len(x)) ** (1.0 / rho)


def stats_from_values(values: np.ndarray, seed: int, rhos=(), thresholds=(), method: str = "alternating") -> SampleStats:
    mean, se = _mean_stderr(values)
    return SampleStats(
        n_samples=len(values),
        mean=mean,
        stderr=se,
        moments={float(r): power_mean(values, r) for r in rhos},
        tail_freqs={float(t): float(np.mean(values >= t)) for t in thresholds},
        seed=seed,
        norm_method=method,
    )


def estimate_expected_norm(A, pq: ExponentPair, spec: EnsembleSpec, N: int, cfg: AscentConfig | None = None,
                           rhos=(), thresholds=(), workers: int | None = 1) -> SampleStats:
    """Sample mean of ``||X o A||_{p->q}`` (alternating lower bounds per sample)."""
    d = simulate(A, pq, spec, N, cfg, workers)
    return stats_from_values(d.norm, spec.seed, rhos, thresholds)


def estimate_expected_max(A, spec: EnsembleSpec, N: int, workers: int | None = 1) -> SampleStats:
    """Sample mean of ``max_ij |a_ij X_ij|``."""
    d = simulate(A, None, spec, N, workers=workers)
    return stats_from_values(d.max_abs, spec.seed, method="max_entry")


def estimate_moment(A, pq: ExponentPair, spec: EnsembleSpec, rho: float, N: int,
                    cfg: AscentConfig | None = None, workers: int | None = 1) -> float:
    """Empirical ``(mean of ||X o A||^rho)^{1/rho}``."""
    if rho < 1:
        raise DomainError("rho must be >= 1")
    return power_mean(simulate(A, pq, spec, N, cfg, workers).norm, rho)


def tail_frequency(A, pq: ExponentPair, spec: EnsembleSpec, threshold: float, N: int,
                   cfg: AscentConfig | None = None, workers: int | None = 1) -> float:
    """Empirical frequency of ``||X o A|| >= threshold``."""
    return float(np.mean(simulate(A, pq, spec, N, cfg, workers).norm >= threshold))


def comparability_report(A, pq: ExponentPair, spec: EnsembleSpec, N: int, cfg: AscentConfig | None = None,
                         workers: int | None = 1, rowcol_budget: int = 20_000) -> dict:
    """The Monte Carlo mean norm next to both sides of the two-sided envelope.

    ``lower_ratio = E||.|| / max(E max row, E max col, E max entry)`` is at
    least one sample by sample; ``upper_ratio`` divides by
    ``sqrt(p*) D1 + sqrt(q) D2 + D_tail`` where ``D_tail`` is the Weibull
    weighted functional for Weibull entries and ``D_inf`` otherwise.
    """
    P = as_profile(A)
    d = simulate(P, pq, spec, N, cfg, workers)
    env = envelope_report(P, pq, rowcol_budget)
    norm_mean, norm_se = _mean_stderr(d.norm)
    max_mean, max_se = _mean_stderr(d.max_abs)
    row_mean, row_se = _mean_stderr(d.row_max)
    col_mean, col_se = _mean_stderr(d.col_max)
    if spec.kind == "weibull":
        tail, tail_name = d_infinity_weibull(P, spec.r), f"d_inf_weibull(r={spec.r})"
    else:
        tail, tail_name = d_infinity(P), "d_inf"
    upper_den = weighted_sum(pq, env.d1, env.d2, tail)
    lower_den = max(row_mean, col_mean, max_mean)
    degenerate = P.is_zero()
    return {
        "n_samples": N,
        "seed": spec.seed,
        "ensemble": spec.to_dict(),
        "e_norm": norm_mean,
        "e_norm_stderr": norm_se,
        "e_max": max_mean,
        "e_max_stderr": max_se,
        "e_row_max": row_mean,
        "e_row_max_stderr": row_se,
        "e_col_max": col_mean,
        "e_col_max_stderr": col_se,
        "envelope": env.to_dict(),
        "tail_functional": tail_name,
        "tail_value": tail,
        "lower_denominator": lower_den,
        "upper_denominator": upper_den,
        "lower_ratio": norm_mean / lower_den if lower_den > 0 else 1.0,
        "lower_margin": 3.0 * norm_se / lower_den if lower_den > 0 else 0.0,
        "upper_ratio": norm_mean / upper_den if upper_den > 0 else 0.0,
        "e_max_over_tail": max_mean / tail if tail > 0 else 0.0,
        "per_sample_floor_ok": bool(np.all(d.norm >= np.maximum(np.maximum(d.row_max, d.col_max), d.max_abs))),
        "degenerate": degenerate,
        "caveat": CAVEAT,
    }
