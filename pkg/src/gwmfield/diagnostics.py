"""Empirical verification of sample-path claims on simulated data.

Estimators, deliberately simple and with fixed fit ranges so nothing is
silently tuned:

- fractal dimension of the path graph from the log-log slope of the
  empirical variogram over the smallest decade of lags (the increment
  standard deviation of an index-beta field scales like lag^beta, and the
  graph dimension is n + 1 - beta)
- tail memory exponent from the log-log slope of the covariance itself
  over a large-lag window
- local self-similarity: rescaled increment covariances against the
  tangent-field prediction along a sequence of shrinking scales
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModelParams, covariance_table, tangent_field_cov, variogram
from .errors import ModelParamError
from .fieldsim import FieldSample, Grid, simulate

__all__ = [
    "DiagnosticsReport",
    "LassTable",
    "estimate_fractal_dim",
    "fractal_dim_replicates",
    "estimate_memory_exponent",
    "check_lass",
    "diagnostics_report",
]


@dataclass(frozen=True)
class DiagnosticsReport:
    """Replicate-study summary; dimensions clamped into [n, n+1]."""

    estimated_fractal_dim: float
    estimated_holder: float
    estimated_memory_exponent: float | None
    fractal_dim_half_width: float
    n_replicates: int

    def to_dict(self) -> dict:
        return {
            "estimated_fractal_dim": self.estimated_fractal_dim,
            "estimated_holder": self.estimated_holder,
            "estimated_memory_exponent": self.estimated_memory_exponent,
            "fractal_dim_half_width": self.fractal_dim_half_width,
            "n_replicates": self.n_replicates,
        }


def _sample_variogram(values: np.ndarray, lags: np.ndarray) -> np.ndarray:
    out = np.empty(lags.size)
    for i, h in enumerate(lags):
        diff = values[h:] - values[:-h]
        out[i] = np.dot(diff, diff) / diff.size
    return out


def _sample_variogram_2d(field: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """Axis-lag variogram of an isotropic 2D field, rows and columns pooled."""
    out = np.empty(lags.size)
    for i, h in enumerate(lags):
        dr = field[:, h:] - field[:, :-h]
        dc = field[h:, :] - field[:-h, :]
        out[i] = (np.sum(dr * dr) + np.sum(dc * dc)) / (dr.size + dc.size)
    return out


def estimate_fractal_dim(sample: FieldSample, lag_range=None) -> float:
    """Graph dimension n + 1 - slope/2 from the small-lag variogram slope.

    lag_range: integer lags (grid units), default 1..10 (one decade,
    >= 8 points).  2D fields use axis lags with rows and columns pooled
    (isotropy makes the axis variogram the radial one).  Raises on a
    constant sample.
    """
    lags = np.arange(1, 11) if lag_range is None else np.asarray(lag_range, dtype=int)
    if sample.values.size < 1024:
        raise ValueError("need >= 1024 points for a stable estimate")
    if sample.grid.dims == 1:
        if lags.size < 2 or lags.min() < 1 or lags.max() >= sample.values.size:
            raise ValueError("lag_range must hold >= 2 in-grid positive lags")
        emp = _sample_variogram(sample.values, lags)
        spacing = sample.grid.spacing[0]
    else:
        n1, n2 = sample.grid.sizes
        if sample.grid.spacing[0] != sample.grid.spacing[1]:
            raise ModelParamError("2D estimator expects square spacing")
        if lags.size < 2 or lags.min() < 1 or lags.max() >= min(n1, n2):
            raise ValueError("lag_range must hold >= 2 in-grid positive lags")
        emp = _sample_variogram_2d(sample.values.reshape(n1, n2), lags)
        spacing = sample.grid.spacing[0]
    if np.any(emp <= 0):
        raise ModelParamError("degenerate (constant) sample")
    r = lags * spacing
    slope = np.polyfit(np.log(r), np.log(emp), 1)[0]
    n = sample.params.n
    return n + 1.0 - slope / 2.0


def fractal_dim_replicates(p: ModelParams, grid: Grid, seeds, lag_range=None) -> np.ndarray:
    """Fractal-dimension estimates across seeded replicates."""
    return np.array([
        estimate_fractal_dim(simulate(p, grid, seed), lag_range) for seed in seeds
    ])


def estimate_memory_exponent(p: ModelParams, r_range) -> float:
    """Log-log slope of the covariance over a large-lag window.

    Expected -(2 alpha + n) for alpha < 1; the alpha = 1 exponential
    regime has no power-law exponent and is rejected.
    """
    if p.alpha >= 1.0:
        raise ModelParamError("memory exponent defined for alpha < 1 only")
    r = np.asarray(r_range, dtype=float)
    if r.size < 4 or np.any(r <= 0):
        raise ValueError("r_range must hold >= 4 positive lags")
    cov = covariance_table(p, r)
    if np.any(cov <= 0):
        raise ModelParamError("covariance underflow in the requested range")
    return float(np.polyfit(np.log(r), np.log(cov), 1)[0])


@dataclass(frozen=True)
class LassTable:
    """Rescaled increment covariances along shrinking scales."""

    rhos: np.ndarray
    rescaled: np.ndarray
    target: float
    gaps: np.ndarray

    @property
    def gaps_decrease(self) -> bool:
        return bool(np.all(np.diff(self.gaps) < 0))


def check_lass(p: ModelParams, rhos, u: float, v: float, uv_dist: float) -> LassTable:
    """Convergence of rescaled increments to the tangent-field covariance.

    For each scale rho: [s2(rho u) + s2(rho v) - s2(rho |u-v|)] / (2 rho^{2H'})
    with H' = alpha*gamma - n/2, compared against the tangent prediction.
    rhos must decrease toward 0.
    """
    rhos = np.asarray(rhos, dtype=float)
    if np.any(rhos <= 0) or np.any(np.diff(rhos) >= 0):
        raise ValueError("rhos must be positive and strictly decreasing")
    hp = p.alpha_gamma - p.n / 2.0
    target = tangent_field_cov(p, u, v, uv_dist)  # validates the ag range

    def s2(x):
        return variogram(p, float(x)) if x > 0 else 0.0

    rescaled = np.array([
        (s2(rho * u) + s2(rho * v) - s2(rho * uv_dist)) / (2.0 * rho ** (2 * hp))
        for rho in rhos
    ])
    return LassTable(rhos=rhos, rescaled=rescaled, target=target,
                     gaps=np.abs(rescaled - target))


def diagnostics_report(p: ModelParams, grid: Grid, seeds,
                       tail_range=None) -> DiagnosticsReport:
    """Replicate study of the path estimators for one parameter set."""
    dims = fractal_dim_replicates(p, grid, seeds)
    mean_dim = float(np.clip(dims.mean(), p.n, p.n + 1))
    half = float(1.96 * dims.std(ddof=1) / np.sqrt(dims.size)) if dims.size > 1 else 0.0
    mem = None
    if p.alpha < 1.0:
        rr = np.geomspace(20.0, 200.0, 12) if tail_range is None else tail_range
        mem = -estimate_memory_exponent(p, rr)
    return DiagnosticsReport(
        estimated_fractal_dim=mean_dim,
        estimated_holder=p.n + 1.0 - mean_dim,
        estimated_memory_exponent=mem,
        fractal_dim_half_width=half,
        n_replicates=len(list(seeds)),
    )
