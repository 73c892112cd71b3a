"""Covariance engine for the generalized Whittle-Matern (GWM) family.

A GWM field on R^n is the centered, stationary, isotropic Gaussian field
with spectral density

    S(w) = (2 pi)^{-n} (|w|^{2 alpha} + lambda^2)^{-gamma},
    alpha in (0, 1], gamma > 0, lambda > 0.

For alpha = 1 the covariance has the classical Whittle-Matern closed form
(a power of the lag times a Macdonald function).  For alpha < 1 no closed
form exists and the engine evaluates the covariance by quadrature, using
two independent integral representations:

- a Hankel-transform ("Bochner") form with an oscillatory Bessel-J kernel,
  kept as a verification oracle, and
- a rotated-contour ("Macdonald") form whose kernel K_{(n-2)/2} has fixed
  argument after rescaling, so the integrand decays like exp(-u) uniformly
  in the lag.  This is the production path.

The module also provides the exact variance, the variogram, large-lag and
small-lag asymptotic laws, and the derived sample-path property constants
(Holder exponent, fractal dimension, local self-similarity order and
amplitude, tail memory exponent).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.integrate import quad

from .errors import InfiniteVarianceError, ModelParamError, NumericalError
from .specfun import bessel_j_zeros

__all__ = [
    "ModelParams",
    "QuadConfig",
    "LocalProps",
    "spectral_density",
    "cov_whittle_matern",
    "cov_bochner",
    "cov_macdonald",
    "covariance",
    "covariance_table",
    "variance",
    "variogram",
    "cov_large_lag",
    "large_lag_terms",
    "variogram_small_lag",
    "small_lag_integral",
    "lass_amplitude",
    "tangent_field_cov",
    "local_props",
    "variogram_log_branch_constant",
]


# --------------------------------------------------------------------------
# parameter and configuration types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelParams:
    """Parameters (alpha, gamma, lambda, n) of a GWM field on R^n.

    alpha : fractional order of the Laplacian, in (0, 1]
    gamma : overall spectral exponent, > 0
    lam   : inverse length scale lambda, > 0
    n     : spatial dimension, 1, 2 or 3

    The field has finite variance iff alpha * gamma > n / 2; operations
    that need a finite variance enforce that separately.
    """

    alpha: float
    gamma: float
    lam: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0) or not math.isfinite(self.alpha):
            raise ModelParamError(f"alpha must be in (0, 1], got {self.alpha}")
        if not (self.gamma > 0.0) or not math.isfinite(self.gamma):
            raise ModelParamError(f"gamma must be > 0, got {self.gamma}")
        if not (self.lam > 0.0) or not math.isfinite(self.lam):
            raise ModelParamError(f"lambda must be > 0, got {self.lam}")
        if self.n not in (1, 2, 3):
            raise ModelParamError(f"dimension n must be 1, 2 or 3, got {self.n}")

    @property
    def alpha_gamma(self) -> float:
        return self.alpha * self.gamma

    def require_finite_variance(self):
        if self.alpha_gamma <= self.n / 2.0:
            raise InfiniteVarianceError(
                f"infinite variance: alpha*gamma = {self.alpha_gamma:.6g} "
                f"<= n/2 = {self.n / 2.0}"
            )


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and truncation for the covariance quadratures.

    upper_cutoff is the point where the Macdonald kernel has fully
    underflowed; integrands are hard-truncated there.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    upper_cutoff: float = 705.0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ModelParamError("quadrature tolerances must be positive")
        if self.upper_cutoff < 50:
            raise ModelParamError("upper_cutoff must be >= 50")


DEFAULT_QUAD = QuadConfig()


@dataclass(frozen=True)
class LocalProps:
    """Sample-path properties derived from (alpha, gamma, n).

    holder_exponent  : H = min(alpha*gamma - n/2, 1)
    fractal_dim      : n + 1 - H (graph dimension)
    lass_order       : local self-similarity order, defined only when
                       alpha*gamma is in (n/2, (n+2)/2), else None
    lass_amplitude   : amplitude of the tangent-field covariance, or None
    memory_exponent  : covariance tail decays like r^{-memory_exponent}
                       (= 2*alpha + n) when alpha < 1; None when the tail
                       is exponential (alpha = 1)
    exponential_tail : True iff alpha = 1
    differentiable   : True iff alpha*gamma > (n+2)/2
    """

    holder_exponent: float
    fractal_dim: float
    lass_order: float | None
    lass_amplitude: float | None
    memory_exponent: float | None
    exponential_tail: bool
    differentiable: bool


# --------------------------------------------------------------------------
# spectral density, closed form, variance
# --------------------------------------------------------------------------

def spectral_density(p: ModelParams, omega_norm):
    """Isotropic spectral density (2 pi)^{-n} (w^{2a} + lam^2)^{-g} at |w|."""
    w = np.asarray(omega_norm, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral_density: frequency norm must be >= 0")
    out = (2.0 * np.pi) ** (-p.n) * (w ** (2.0 * p.alpha) + p.lam**2) ** (-p.gamma)
    return out if out.ndim else float(out)


def cov_whittle_matern(p: ModelParams, r):
    """Closed-form covariance for alpha = 1 (the Whittle-Matern class).

    C(r) = 2^{1-n/2-g} / (pi^{n/2} Gamma(g)) (r/lam)^{g-n/2} K_{g-n/2}(lam r)

    Requires gamma > n/2; the r -> 0 limit (the variance) is returned at
    r = 0.  Vectorized over r.
    """
    if p.alpha != 1.0:
        raise ModelParamError("cov_whittle_matern requires alpha = 1")
    if p.gamma <= p.n / 2.0:
        raise ModelParamError("cov_whittle_matern requires gamma > n/2")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("lag must be a norm, >= 0")
    nu = p.gamma - p.n / 2.0
    pref = 2.0 ** (1.0 - p.n / 2.0 - p.gamma) / (np.pi ** (p.n / 2.0) * special.gamma(p.gamma))
    rp = np.where(r > 0, r, 1.0)
    # (r/lam)^nu K_nu(lam r) via the exponentially scaled Bessel function:
    # the power and exp(-lam r) factors combine in the exponent, so large
    # lam r underflows cleanly to 0 instead of producing inf * 0
    with np.errstate(under="ignore"):
        vals = pref * np.exp(nu * np.log(rp / p.lam) - p.lam * rp) * special.kve(nu, p.lam * rp)
    out = np.where(r > 0, vals, variance(p))
    return out if out.ndim else float(out)


def variance(p: ModelParams) -> float:
    """Exact variance C(0) of the field.

    lam^{n/a - 2g} / (2^n pi^{n/2} a Gamma(n/2))
        * Gamma(g - n/(2a)) Gamma(n/(2a)) / Gamma(g)

    Rejects alpha*gamma <= n/2 (the Gamma factor hits its pole at the
    boundary) with a dedicated infinite-variance error.
    """
    p.require_finite_variance()
    a, g, lam, n = p.alpha, p.gamma, p.lam, p.n
    return float(
        lam ** (n / a - 2.0 * g)
        / (2.0**n * np.pi ** (n / 2.0) * a * special.gamma(n / 2.0))
        * special.gamma(g - n / (2.0 * a))
        * special.gamma(n / (2.0 * a))
        / special.gamma(g)
    )


# --------------------------------------------------------------------------
# Macdonald-kernel representation (production path for alpha < 1)
# --------------------------------------------------------------------------
#
# After rescaling u -> u / r the covariance reads
#
#   C(r) = -pref(n) r^{-n} Im int_0^oo K_{(n-2)/2}(u) u^{n/2}
#                               (e^{i pi a} (u/r)^{2a} + lam^2)^{-g} du
#
# with pref(n) = 2^{-(n-2)/2} pi^{-(n+2)/2}.  The kernel argument is fixed,
# so the integrand decays like exp(-u) for every lag.  Two features need
# resolving: the "knee" where (u/r)^{2a} ~ lam^2, and, for alpha > 1/2, a
# near-pole where Re(e^{i pi a} w + lam^2) crosses zero (the factor then
# peaks sharply as alpha -> 1).

def _macdonald_prefactor(n: int) -> float:
    return 2.0 ** (-(n - 2) / 2.0) * np.pi ** (-(n + 2) / 2.0)


def _macdonald_imag_factor(u, alpha, gamma, lam2, log_r):
    """Im[(e^{i pi a} (u/r)^{2a} + lam^2)^{-g}] via real arithmetic."""
    w = np.exp(2.0 * alpha * (np.log(u) - log_r))
    re = w * np.cos(np.pi * alpha) + lam2
    im = w * np.sin(np.pi * alpha)
    phase = np.arctan2(im, re)
    with np.errstate(under="ignore"):
        return np.exp(-0.5 * gamma * np.log(re * re + im * im)) * np.sin(-gamma * phase)


def _pole_position_scaled(alpha: float, lam: float) -> float | None:
    """Position u/r where Re(e^{i pi a} (u/r)^{2a} + lam^2) = 0, if any."""
    c = np.cos(np.pi * alpha)
    if c >= -1e-12:
        return None
    return float((lam * lam / (-c)) ** (1.0 / (2.0 * alpha)))


def cov_macdonald(p: ModelParams, r: float, q: QuadConfig = DEFAULT_QUAD) -> float:
    """Covariance via the rotated-contour K-kernel integral, alpha < 1, r > 0.

    Valid for every gamma > 0 (finite variance is not required away from
    the origin).  Adaptive Gauss-Kronrod panels with breakpoints at the
    knee and at the near-pole of the rational factor; hard truncation at
    q.upper_cutoff where the kernel underflows.
    """
    if not (0.0 < p.alpha < 1.0):
        raise ModelParamError("cov_macdonald requires alpha in (0, 1)")
    if not (r > 0):
        raise ValueError("cov_macdonald requires r > 0; use variance() at r = 0")
    nu = (p.n - 2) / 2.0
    lam2 = p.lam * p.lam
    log_r = np.log(r)
    alpha, gamma, n = p.alpha, p.gamma, p.n

    def f(u):
        with np.errstate(under="ignore"):
            kern = special.kv(nu, u) * u ** (n / 2.0)
        return kern * _macdonald_imag_factor(u, alpha, gamma, lam2, log_r)

    knee = r * p.lam ** (1.0 / alpha)
    pts = {x for x in (knee, 10.0 * knee, 1.0, 50.0) if 0.0 < x < q.upper_cutoff}
    sp = _pole_position_scaled(alpha, p.lam)
    if sp is not None:
        up = r * sp
        pts.update(x for x in (0.8 * up, up, 1.25 * up) if 0.0 < x < q.upper_cutoff)
    with np.errstate(under="ignore"):
        out = quad(
            f, 0.0, q.upper_cutoff, points=sorted(pts),
            epsabs=q.abs_tol, epsrel=q.rel_tol, limit=q.max_subdivisions,
            full_output=1,
        )
    val, err = out[0], out[1]
    if len(out) > 3:  # message present -> quadpack flagged non-convergence
        if err > 100.0 * max(q.abs_tol, abs(val) * q.rel_tol):
            raise NumericalError(
                f"Macdonald quadrature did not converge: estimate {val:.6g}, "
                f"error estimate {err:.2g}"
            )
    return float(-_macdonald_prefactor(p.n) * r ** (-float(p.n)) * val)


# ---- fast vectorized evaluator (shared-structure panels per lag) ----------
#
# Used for covariance tables (simulation grids, likelihood lags) where the
# same (alpha, gamma, lam, n) is evaluated at many lags.  For n = 1 and
# n = 3 the kernel K_{+-1/2} is an exact exponential, so node placement is
# free; only n = 2 pays for K_0 evaluations.  Panels: a geometric ladder in
# u covering [A, 50] plus, when the near-pole exists, a graded cluster
# around it.  Accuracy (validated against the adaptive path and a
# high-precision reference): ~1e-8 relative for alpha <= 0.99, degrading
# to ~1e-6 in the most extreme corner (alpha = 0.999, n = 2, large
# alpha*gamma).

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)
_TABLE_CUTOFF = 50.0  # exp(-50) ~ 2e-22: negligible against 1e-12 targets


def _graded_cluster_fractions(delta: float) -> np.ndarray:
    """Subdivision of [0, 1] refined geometrically toward the midpoint."""
    dg = max(delta / 16.0, 1e-8)
    m = int(np.ceil(np.log2(0.6 / dg)))
    g = 0.6 * 2.0 ** (-np.arange(m + 1, dtype=float))
    g = np.concatenate([g, [0.0]])
    fr = np.concatenate([0.5 - g / 1.2, 0.5 + g[::-1][1:] / 1.2])
    return np.unique(np.concatenate([[0.0], fr, [1.0]]))


def _macdonald_table(p: ModelParams, lags: np.ndarray) -> np.ndarray:
    """Covariance at an array of positive lags, alpha < 1, vectorized."""
    r = np.asarray(lags, dtype=float)
    alpha, gamma, lam, n = p.alpha, p.gamma, p.lam, p.n
    sinpa, cospa = np.sin(np.pi * alpha), np.cos(np.pi * alpha)
    lam2 = lam * lam
    B = _TABLE_CUTOFF
    knee = r * lam ** (1.0 / alpha)
    # lower truncation: below A the integrand behaves like u^{2a + ...};
    # (A / scale)^{2a+1} <= 1e-12 keeps the dropped mass negligible
    eps_a = 10.0 ** (-12.0 / (2.0 * alpha + 1.0))
    A = np.maximum(np.minimum(knee, 1.0) * eps_a, 1e-290)

    sp = _pole_position_scaled(alpha, lam)
    if sp is not None:
        delta = min(sinpa / (-cospa) / (2.0 * alpha), 0.3)
        up = r * sp
        c1 = np.clip(up * 0.4, A, B)
        c2 = np.clip(up * 1.6, A, B)
        fr = _graded_cluster_fractions(delta)
    else:
        c1 = c2 = np.clip(knee, A, B)
        fr = np.linspace(0.0, 1.0, 5)

    # ladder width shrinks with alpha*gamma: the phase of the rational
    # factor swings by ~pi*a*g across the transition and must be resolved
    lw = min(0.35, 0.7 / max(2.0, alpha * gamma))
    n1 = max(int(np.ceil(np.max(np.log(c1 / A)) / (2.0 * lw))), 2)
    n3 = max(int(np.ceil(np.max(np.log(B / c2)) / lw)), 2)
    e1 = A[:, None] * np.exp(np.linspace(0, 1, n1 + 1)[None, :] * np.log(c1 / A)[:, None])
    e2 = c1[:, None] + (c2 - c1)[:, None] * fr[None, 1:-1]
    e3 = c2[:, None] * np.exp(np.linspace(0, 1, n3 + 1)[None, :] * np.log(B / c2)[:, None])
    edges = np.concatenate([e1, e2, e3], axis=1)

    a, b = edges[:, :-1], edges[:, 1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    u = mid[:, :, None] + half[:, :, None] * _GL_NODES[None, None, :]
    w = half[:, :, None] * _GL_WEIGHTS[None, None, :]
    with np.errstate(under="ignore"):
        if n == 1:
            kern = np.sqrt(np.pi / 2.0) * np.exp(-u)
        elif n == 3:
            kern = np.sqrt(np.pi / 2.0) * np.exp(-u) * u
        else:
            kern = special.kv(0.0, u) * u
        integ = _macdonald_imag_factor(u, alpha, gamma, lam2, np.log(r)[:, None, None])
        val = np.sum(kern * integ * w, axis=(1, 2))
    return -_macdonald_prefactor(n) * r ** (-float(n)) * val


# --------------------------------------------------------------------------
# Bochner (Hankel transform) representation: verification oracle
# --------------------------------------------------------------------------

def _euler_apex(partial_sums: np.ndarray) -> float:
    """Iterated pairwise averaging of a sequence of partial sums."""
    row = np.asarray(partial_sums, dtype=float)
    while row.size > 1:
        row = 0.5 * (row[:-1] + row[1:])
    return float(row[0])


def cov_bochner(p: ModelParams, r: float, q: QuadConfig = DEFAULT_QUAD) -> float:
    """Covariance via the oscillatory Bessel-J spectral integral.

    C(r) = (2 pi)^{-n/2} r^{(2-n)/2}
           int_0^oo J_{(n-2)/2}(w r) w^{n/2} (w^{2a} + lam^2)^{-g} dw

    Integrates between consecutive Bessel zeros and accelerates the
    alternating partial sums by iterated averaging.  Kept as a cross-check
    oracle for the Macdonald path and for the alpha = 1 closed form; the
    production evaluator is cov_macdonald.
    """
    if p.alpha_gamma <= p.n / 2.0:
        raise InfiniteVarianceError("cov_bochner requires alpha*gamma > n/2")
    if not (r > 0):
        raise ValueError("cov_bochner requires r > 0")
    nu = (p.n - 2) / 2.0
    alpha, gamma, lam2 = p.alpha, p.gamma, p.lam**2

    def g(w):
        return special.jv(nu, w * r) * w ** (p.n / 2.0) * (w ** (2.0 * alpha) + lam2) ** (-gamma)

    max_zeros = 400
    zeros = bessel_j_zeros(nu, max_zeros) / r
    knee = p.lam ** (1.0 / alpha)
    head_pts = sorted({x for x in (knee, 10.0 * knee) if 0.0 < x < zeros[0]})
    head, _ = quad(g, 0.0, zeros[0], points=head_pts or None,
                   epsabs=1e-14, epsrel=1e-11, limit=q.max_subdivisions)

    sums = [head]
    batch = 24
    prev_apex = None
    lo = zeros[0]
    for k in range(1, max_zeros):
        term, _ = quad(g, lo, zeros[k], epsabs=1e-14, epsrel=1e-11, limit=60)
        sums.append(sums[-1] + term)
        lo = zeros[k]
        if k % batch == 0 and k >= 2 * batch:
            apex = _euler_apex(sums[-64:])
            if prev_apex is not None:
                scale = max(abs(apex), q.abs_tol)
                if abs(apex - prev_apex) <= max(q.abs_tol, 0.1 * q.rel_tol * scale):
                    prev_apex = apex
                    break
            prev_apex = apex
    else:
        apex = _euler_apex(sums[-64:])
        if prev_apex is None or abs(apex - prev_apex) > 1e4 * max(
            q.abs_tol, q.rel_tol * abs(apex)
        ):
            raise NumericalError(
                f"Bochner series did not stabilize after {max_zeros} zeros "
                f"(last apex {apex:.6g})"
            )
        prev_apex = apex

    pref = (2.0 * np.pi) ** (-p.n / 2.0) * r ** ((2.0 - p.n) / 2.0)
    return float(pref * prev_apex)


# --------------------------------------------------------------------------
# dispatcher, tables, variogram
# --------------------------------------------------------------------------

def covariance(p: ModelParams, r: float, q: QuadConfig = DEFAULT_QUAD) -> float:
    """Covariance C(r) at lag norm r >= 0.

    Dispatch: the lag-zero value comes from the exact variance, alpha = 1
    from the closed form, and alpha < 1 from the Macdonald-kernel
    quadrature.  Continuous across the branch boundaries.
    """
    if not (r >= 0):
        raise ValueError("lag must be a norm, >= 0")
    if r == 0.0:
        return variance(p)
    if p.alpha == 1.0:
        return float(cov_whittle_matern(p, r))
    return cov_macdonald(p, r, q)


def _table_workers() -> int:
    try:
        return max(1, int(os.environ.get("GWM_THREADS", "1")))
    except ValueError:
        return 1


def covariance_table(p: ModelParams, lags, q: QuadConfig = DEFAULT_QUAD) -> np.ndarray:
    """Covariance evaluated at an array of lags (the shared table currency).

    alpha = 1 uses the vectorized closed form; alpha < 1 uses the fast
    fixed-structure Macdonald evaluator (cross-validated against
    cov_macdonald).  Lags may repeat and include 0.  Evaluation is chunked;
    chunks are independent, so results are bitwise identical for any
    GWM_THREADS worker count.
    """
    lags = np.asarray(lags, dtype=float)
    if np.any(lags < 0):
        raise ValueError("lags must be >= 0")
    flat = lags.ravel()
    out = np.empty_like(flat)
    zero = flat == 0.0
    if np.any(zero):
        out[zero] = variance(p)
    pos = ~zero
    if np.any(pos):
        rpos = flat[pos]
        if p.alpha == 1.0:
            vals = cov_whittle_matern(p, rpos)
        else:
            chunks = [rpos[i:i + 2048] for i in range(0, rpos.size, 2048)]
            workers = _table_workers()
            if workers > 1 and len(chunks) > 1:
                with ThreadPoolExecutor(max_workers=workers) as ex:
                    parts = list(ex.map(lambda c: _macdonald_table(p, c), chunks))
            else:
                parts = [_macdonald_table(p, c) for c in chunks]
            vals = np.concatenate(parts)
        out[pos] = vals
    return out.reshape(lags.shape)


def variogram(p: ModelParams, r, q: QuadConfig = DEFAULT_QUAD):
    """Variogram sigma^2(r) = 2 (C(0) - C(r)); requires finite variance."""
    v0 = variance(p)
    r_arr = np.asarray(r, dtype=float)
    if r_arr.ndim == 0:
        return 2.0 * (v0 - covariance(p, float(r_arr), q))
    return 2.0 * (v0 - covariance_table(p, r_arr, q))


# --------------------------------------------------------------------------
# large-lag asymptotics
# --------------------------------------------------------------------------

def large_lag_terms(p: ModelParams, r: float, terms: int = 1) -> np.ndarray:
    """Terms of the large-lag expansion of C(r), for divergence monitoring.

    alpha < 1: term j (j = 1..terms) equals

        (-1)^{j-1} Gamma(g+j)/(Gamma(g) j!) Gamma(a j + 1) Gamma(a j + n/2)
        * 2^{2 a j} lam^{-2g-2j} sin(pi a j) pi^{-(n+2)/2} r^{-2 a j - n}

    (hyperbolic tail; the lam power is -2g-2j because the j-th term of the
    binomial expansion carries lam^{-2(g+j)}).

    alpha = 1: term j (j = 0..terms-1) of the exponential-tail expansion

        2^{(1-n)/2-g} pi^{-(n-1)/2} / Gamma(g) e^{-lam r}
        * Gamma(g+j-(n-1)/2) / Gamma(g-j-(n-1)/2) / (2^j j!)
        * lam^{-j-g+(n-1)/2} r^{-j+g-(n+1)/2}

    where terms with a Gamma pole in the denominator vanish (the series
    terminates for half-integer smoothness).
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if not (r > 0):
        raise ValueError("r must be > 0")
    a, g, lam, n = p.alpha, p.gamma, p.lam, p.n
    if a < 1.0:
        j = np.arange(1, terms + 1, dtype=float)
        return (
            (-1.0) ** (j - 1)
            * special.gamma(g + j) / (special.gamma(g) * special.factorial(j))
            * special.gamma(a * j + 1.0) * special.gamma(a * j + n / 2.0)
            * 2.0 ** (2.0 * a * j) * lam ** (-2.0 * g - 2.0 * j)
            * np.sin(np.pi * a * j) * np.pi ** (-(n + 2) / 2.0)
            * r ** (-2.0 * a * j - n)
        )
    if g <= n / 2.0:
        raise ModelParamError("alpha = 1 tail expansion requires gamma > n/2")
    j = np.arange(0, terms, dtype=float)
    pref = 2.0 ** ((1.0 - n) / 2.0 - g) * np.pi ** (-(n - 1) / 2.0) / special.gamma(g)
    with np.errstate(under="ignore"):
        return (
            pref * np.exp(-lam * r)
            * special.gamma(g + j - (n - 1) / 2.0) * special.rgamma(g - j - (n - 1) / 2.0)
            / (2.0**j * special.factorial(j))
            * lam ** (-j - g + (n - 1) / 2.0) * r ** (-j + g - (n + 1) / 2.0)
        )


def cov_large_lag(p: ModelParams, r: float, terms: int = 1) -> float:
    """Partial sum of the large-lag covariance expansion (see large_lag_terms).

    An asymptotic series: the caller judges validity (fixed r, growing
    number of terms eventually diverges when alpha < 1).
    """
    return float(np.sum(large_lag_terms(p, r, terms)))


# --------------------------------------------------------------------------
# small-lag variogram law
# --------------------------------------------------------------------------

_BORDER_EPS = 1e-12


def small_lag_integral(alpha_gamma: float, n: int) -> float:
    """Limit of the regularized Bessel-moment integral behind the small-lag law.

    I = Gamma(n/2 - ag) / (2^{2 ag - n/2} Gamma(ag)),
    for ag strictly inside (n/2, (n+2)/2).  Negative throughout that range,
    which makes the variogram coefficient positive.
    """
    ag = float(alpha_gamma)
    lo, hi = n / 2.0, (n + 2) / 2.0
    if not (lo + _BORDER_EPS < ag < hi - _BORDER_EPS):
        raise ModelParamError(
            f"small_lag_integral requires alpha*gamma in ({lo}, {hi}) exclusive"
        )
    return float(special.gamma(n / 2.0 - ag) / (2.0 ** (2.0 * ag - n / 2.0) * special.gamma(ag)))


def variogram_small_lag(p: ModelParams, r):
    """Leading small-lag behaviour of the variogram.

    Three regimes in ag = alpha*gamma:

    - ag in (n/2, (n+2)/2):  -2^{1-2ag} pi^{-n/2} Gamma(n/2-ag)/Gamma(ag)
                             * r^{2ag-n}            (fractional power)
    - ag = (n+2)/2:          2^{-n} pi^{-n/2} / Gamma((n+2)/2)
                             * r^2 log(1/r)          (borderline)
    - ag > (n+2)/2:          lam^{-2g+(n+2)/a} Gamma(g-(n+2)/(2a))
                             Gamma((n+2)/(2a)) / (2^{n+1} pi^{n/2} a
                             Gamma((n+2)/2) Gamma(g)) * r^2   (smooth)
    """
    p.require_finite_variance()
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("variogram_small_lag requires r > 0")
    ag = p.alpha_gamma
    n = p.n
    border = (n + 2) / 2.0
    if abs(ag - border) <= _BORDER_EPS:
        coef = 2.0 ** (-n) * np.pi ** (-n / 2.0) / special.gamma(border)
        out = coef * r**2 * np.log(1.0 / r)
    elif ag < border:
        coef = (
            -(2.0 ** (1.0 - 2.0 * ag)) * np.pi ** (-n / 2.0)
            * special.gamma(n / 2.0 - ag) / special.gamma(ag)
        )
        out = coef * r ** (2.0 * ag - n)
    else:
        a, g, lam = p.alpha, p.gamma, p.lam
        coef = (
            lam ** (-2.0 * g + (n + 2.0) / a)
            / (2.0 ** (n + 1) * np.pi ** (n / 2.0) * a * special.gamma(border))
            * special.gamma(g - (n + 2.0) / (2.0 * a))
            * special.gamma((n + 2.0) / (2.0 * a))
            / special.gamma(g)
        )
        out = coef * r**2
    return out if out.ndim else float(out)


def variogram_log_branch_offset(p: ModelParams) -> float:
    """Constant offset in the borderline small-lag law (numeric extra).

    At ag = (n+2)/2 the regularized integral behind the variogram satisfies

        I(r) = -log(1/r) / (2^{(n+2)/2} Gamma((n+2)/2)) + A + o(1)

    and this returns A, computed from its decomposition: the convergent
    part of the integral at lag zero, a rational-integrand piece whose
    lag-zero limit is (psi(gamma) + euler_gamma) after the substitution
    k -> k/lag-scale (the convergence is non-uniform, so the limit is not
    the pointwise-zero integrand), and the lambda-dependent logarithmic
    offset.
    """
    n, a, lam = p.n, p.alpha, p.lam
    ag = p.alpha_gamma
    if abs(ag - (n + 2) / 2.0) > _BORDER_EPS:
        raise ModelParamError("log-branch offset is defined only at alpha*gamma = (n+2)/2")
    nu = (n - 2) / 2.0
    c_n = 1.0 / (2.0**nu * special.gamma(n / 2.0))
    c_quad = 1.0 / (2.0 ** ((n + 2) / 2.0) * special.gamma((n + 2) / 2.0))

    def head(k):
        # J_nu(k)/k^nu - c_n + c_quad k^2 is O(k^4); direct evaluation loses
        # all digits against k^{-3}, so use the ascending series for small k
        if k < 0.5:
            bracket = sum(
                (-1.0) ** j * k ** (2 * j) / (2.0 ** (2 * j + nu)
                                              * special.factorial(j) * special.gamma(nu + j + 1))
                for j in range(2, 9)
            )
        else:
            bracket = special.jv(nu, k) / k**nu - c_n + c_quad * k**2
        return bracket * k ** (n - 1.0 - 2.0 * ag)

    i_head, _ = quad(head, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11, limit=200)

    # oscillatory tail of the J part, integrated between Bessel zeros
    zeros = bessel_j_zeros(nu, 240)
    zeros = zeros[zeros > 1.0]

    def jtail(k):
        return special.jv(nu, k) * k ** (n - 1.0 - 2.0 * ag - nu)

    sums = []
    lo = 1.0
    total = 0.0
    for z in zeros:
        t, _ = quad(jtail, lo, z, epsabs=1e-14, epsrel=1e-11, limit=60)
        total += t
        sums.append(total)
        lo = z
    i_tail_j = _euler_apex(np.asarray(sums[-64:]))
    i_tail_const = -c_n * 0.5  # -c_n * int_1^oo k^{-3} dk
    i1_zero = i_head + i_tail_j + i_tail_const
    c_sub = 1.0 / (2.0 ** ((n + 4) / 2.0) * a * special.gamma((n + 2) / 2.0))
    i3_zero = c_sub * (special.digamma(p.gamma) + np.euler_gamma)
    return float(i1_zero + i3_zero + c_sub * np.log(lam * lam))


# --------------------------------------------------------------------------
# sample-path properties
# --------------------------------------------------------------------------

def lass_amplitude(p: ModelParams) -> float:
    """Amplitude A of the tangent-field covariance.

    A = -2^{-2ag} pi^{-n/2} Gamma(n/2 - ag) / Gamma(ag), positive for
    ag in (n/2, (n+2)/2); half the fractional-power variogram coefficient.
    """
    ag = p.alpha_gamma
    lo, hi = p.n / 2.0, (p.n + 2) / 2.0
    if not (lo + _BORDER_EPS < ag < hi - _BORDER_EPS):
        raise ModelParamError("lass_amplitude requires alpha*gamma in (n/2, (n+2)/2)")
    return float(
        -(2.0 ** (-2.0 * ag)) * np.pi ** (-p.n / 2.0)
        * special.gamma(p.n / 2.0 - ag) / special.gamma(ag)
    )


def tangent_field_cov(p: ModelParams, u: float, v: float, uv_dist: float) -> float:
    """Covariance of the tangent (fractional Levy Brownian) field.

    A (u^{2H'} + v^{2H'} - |u-v|^{2H'}) with H' = alpha*gamma - n/2.
    Inputs are the norms |u|, |v| and |u - v|.
    """
    if min(u, v, uv_dist) < 0:
        raise ValueError("tangent_field_cov takes norms, >= 0")
    hp = p.alpha_gamma - p.n / 2.0
    amp = lass_amplitude(p)

    def pw(x):
        return x ** (2.0 * hp) if x > 0 else 0.0

    return amp * (pw(u) + pw(v) - pw(uv_dist))


def local_props(p: ModelParams) -> LocalProps:
    """Sample-path property bundle derived from alpha*gamma and n."""
    p.require_finite_variance()
    ag = p.alpha_gamma
    n = p.n
    h = min(ag - n / 2.0, 1.0)
    in_lass_range = (n / 2.0 + _BORDER_EPS) < ag < ((n + 2) / 2.0 - _BORDER_EPS)
    return LocalProps(
        holder_exponent=h,
        fractal_dim=n + 1.0 - h,
        lass_order=(ag - n / 2.0) if in_lass_range else None,
        lass_amplitude=lass_amplitude(p) if in_lass_range else None,
        memory_exponent=(2.0 * p.alpha + n) if p.alpha < 1.0 else None,
        exponential_tail=(p.alpha == 1.0),
        differentiable=(ag > (n + 2) / 2.0),
    )
