"""Fitting pipeline for daily wind-speed series.

Steps, in the order the data flows:

1. deseasonalize       square-root transform, day-of-year climatology fit
                       with a degree-8 polynomial, exact mean-centering;
                       the residuals are the "velocity" series
2. periodogram /       power spectral density estimates; Welch uses
   welch_psd           50%-overlapping Hamming-windowed blocks of length 73
3. empirical_variogram mean squared increments per integer lag
4. extended process    four-parameter family K * Y_{alpha,gamma}(ell t)
                       with lambda = 1: amplitude K, time rescale ell
5. profiled likelihood Gaussian NLL with the variance s^2 profiled out
                       analytically; the correlation matrix is Toeplitz,
                       solved by a Levinson recursion that also yields the
                       log-determinant in O(N^2)
6. nelder_mead / fit   derivative-free simplex search over transformed
                       parameters, multi-start
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModelParams, covariance, covariance_table, spectral_density, variance
from .errors import DataFormatError, ModelParamError, NumericalError

__all__ = [
    "DailySeries",
    "SeasonalModel",
    "ExtendedParams",
    "FitResult",
    "NelderMeadResult",
    "deseasonalize",
    "periodogram",
    "welch_psd",
    "WelchResult",
    "empirical_variogram",
    "extended_cov",
    "extended_psd",
    "k_from_s2",
    "correlation_table",
    "toeplitz_solve_logdet",
    "profile_s2",
    "reduced_nll",
    "nelder_mead",
    "fit",
]

DAYS_PER_YEAR = 365
SEASONAL_DEGREE = 8


# --------------------------------------------------------------------------
# deseasonalization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DailySeries:
    """Daily mean wind speeds with a (year, day-of-year) calendar.

    Day-of-year runs 1..365 (Feb 29 entries are excluded upstream by the
    parser); the calendar must be strictly increasing and each year
    complete.
    """

    values: np.ndarray
    years: np.ndarray
    days: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        y = np.asarray(self.years, dtype=int)
        d = np.asarray(self.days, dtype=int)
        if not (v.size == y.size == d.size):
            raise DataFormatError("values, years, days must have equal length")
        if np.any(v < 0):
            raise DataFormatError("daily mean speeds must be >= 0")
        if np.any((d < 1) | (d > DAYS_PER_YEAR)):
            raise DataFormatError("day-of-year out of 1..365 (Feb 29 must be dropped)")
        key = y.astype(np.int64) * 1000 + d
        if np.any(np.diff(key) <= 0):
            raise DataFormatError("calendar must be strictly increasing")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "years", y)
        object.__setattr__(self, "days", d)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class SeasonalModel:
    """Degree-8 seasonal polynomial in the day of year.

    The regression abscissa is the affine map x = (day - offset) / scale
    sending days 1..365 onto [-1, 1]; coefficients are in the power basis
    of x (constant term first).
    """

    coefficients: tuple[float, ...]
    day_offset: float = 183.0
    day_scale: float = 182.0

    def evaluate(self, day):
        x = (np.asarray(day, dtype=float) - self.day_offset) / self.day_scale
        out = np.polynomial.polynomial.polyval(x, np.asarray(self.coefficients))
        return out if out.ndim else float(out)


def deseasonalize(d: DailySeries) -> tuple[np.ndarray, SeasonalModel]:
    """Velocity series: sqrt(daily mean) minus the fitted seasonal curve.

    The seasonal curve regresses the across-year average of sqrt(daily
    mean) per day of year on a degree-8 polynomial (abscissa scaled to
    [-1, 1]; raw powers of 1..365 would be hopelessly ill-conditioned).
    The residual series is mean-centered exactly before being returned.
    """
    nyears = len(d) // DAYS_PER_YEAR
    if nyears < 2 or len(d) != nyears * DAYS_PER_YEAR:
        raise DataFormatError(
            f"need >= 2 complete 365-day years, got {len(d)} entries"
        )
    roots = np.sqrt(d.values)
    day_means = np.zeros(DAYS_PER_YEAR)
    counts = np.zeros(DAYS_PER_YEAR)
    np.add.at(day_means, d.days - 1, roots)
    np.add.at(counts, d.days - 1, 1.0)
    if np.any(counts == 0):
        raise DataFormatError("every day of year must be present")
    day_means /= counts

    days = np.arange(1, DAYS_PER_YEAR + 1, dtype=float)
    model_tmp = SeasonalModel(coefficients=(0.0,))
    x = (days - model_tmp.day_offset) / model_tmp.day_scale
    coeffs = np.polynomial.polynomial.polyfit(x, day_means, SEASONAL_DEGREE)
    model = SeasonalModel(coefficients=tuple(float(c) for c in coeffs))

    velocity = roots - model.evaluate(d.days)
    velocity = velocity - velocity.mean()
    assert abs(velocity.mean()) <= 1e-10
    return velocity, model


# --------------------------------------------------------------------------
# spectral and variogram estimators
# --------------------------------------------------------------------------

def periodogram(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw periodogram |sum x_j e^{-i w j}|^2 / (2 pi N) at Fourier frequencies.

    Returns (omega_k, values) for omega_k = 2 pi k / N, k = 0..floor(N/2).
    Its Riemann sum over (-pi, pi] equals the sample second moment exactly
    (discrete Parseval).
    """
    x = np.asarray(v, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("periodogram needs at least 2 samples")
    spec = np.abs(np.fft.rfft(x)) ** 2 / (2.0 * np.pi * n)
    omegas = 2.0 * np.pi * np.arange(spec.size) / n
    return omegas, spec


@dataclass(frozen=True)
class WelchResult:
    omegas: np.ndarray
    psd: np.ndarray
    block_len: int
    step: int
    n_blocks: int


def welch_psd(v: np.ndarray, block_len: int = 73, overlap: float = 0.5,
              window: str = "hamming") -> WelchResult:
    """Welch PSD estimate: averaged windowed block periodograms.

    Block start step is floor(block_len * (1 - overlap)); the trailing
    partial block is discarded.  The window is normalized by its mean
    square so a unit-variance white-noise input has expected level
    1 / (2 pi) at every bin.
    """
    x = np.asarray(v, dtype=float)
    n = x.size
    if block_len > n:
        raise ValueError("block length exceeds series length")
    if not (0.0 <= overlap < 1.0):
        raise ValueError("overlap must be in [0, 1)")
    if window != "hamming":
        raise ValueError("only the Hamming window is supported")
    step = int(math.floor(block_len * (1.0 - overlap)))
    if step < 1:
        raise ValueError("overlap too large for this block length")
    n_blocks = (n - block_len) // step + 1
    win = np.hamming(block_len)
    norm = 2.0 * np.pi * np.sum(win**2)
    acc = np.zeros(block_len // 2 + 1)
    for b in range(n_blocks):
        seg = x[b * step: b * step + block_len]
        acc += np.abs(np.fft.rfft(win * seg)) ** 2 / norm
    psd = acc / n_blocks
    omegas = 2.0 * np.pi * np.arange(psd.size) / block_len
    return WelchResult(omegas=omegas, psd=psd, block_len=block_len,
                       step=step, n_blocks=n_blocks)


def empirical_variogram(v: np.ndarray, h_max: int) -> np.ndarray:
    """Mean squared increment per lag: (N-h)^{-1} sum (y_{i+h} - y_i)^2, h=1..h_max."""
    y = np.asarray(v, dtype=float)
    if not (0 < h_max < y.size):
        raise ValueError("h_max must be in 1..N-1")
    out = np.empty(h_max)
    for h in range(1, h_max + 1):
        diff = y[h:] - y[:-h]
        out[h - 1] = np.dot(diff, diff) / diff.size
    return out


# --------------------------------------------------------------------------
# extended four-parameter process
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtendedParams:
    """(alpha, gamma, K, ell) family: K * Y_{alpha,gamma}(ell t) at lambda = 1.

    ell rescales time, K rescales amplitude; s2 is the process variance,
    tied to K by s2 = K^2 C_{alpha,gamma}(0).
    """

    alpha: float
    gamma: float
    k_amp: float
    ell: float
    s2: float = float("nan")

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ModelParamError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.gamma <= 0 or self.k_amp <= 0 or self.ell <= 0:
            raise ModelParamError("gamma, K, ell must all be > 0")
        if self.alpha * self.gamma <= 0.5:
            raise ModelParamError("alpha*gamma must exceed 1/2 (finite variance, n = 1)")

    def base_params(self) -> ModelParams:
        return ModelParams(self.alpha, self.gamma, 1.0, 1)


def k_from_s2(s2: float, alpha: float, gamma: float) -> float:
    """Amplitude K from the variance identity s2 = K^2 C_{alpha,gamma}(0)."""
    base = variance(ModelParams(alpha, gamma, 1.0, 1))
    return math.sqrt(s2 / base)


def extended_cov(theta: ExtendedParams, lag) -> float:
    """Covariance K^2 C_{alpha,gamma}(ell * lag) of the extended process."""
    if np.ndim(lag) == 0:
        return theta.k_amp**2 * covariance(theta.base_params(), theta.ell * float(lag))
    lags = theta.ell * np.asarray(lag, dtype=float)
    return theta.k_amp**2 * covariance_table(theta.base_params(), lags)


def extended_psd(theta: ExtendedParams, omegas, alias_terms: int = 500) -> np.ndarray:
    """Discrete-time PSD of the extended process at unit sampling.

    The process sampled at integers has PSD(w) = sum_j S_ext(w - 2 pi j)
    where S_ext(w) = (K^2 / ell) S_{alpha,gamma}(w / ell) at lambda = 1.
    The alias sum is truncated once its tail is negligible.
    """
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    p = theta.base_params()
    scale = theta.k_amp**2 / theta.ell
    out = scale * spectral_density(p, np.abs(w) / theta.ell)
    for j in range(1, alias_terms + 1):
        lo = np.abs(w - 2.0 * np.pi * j) / theta.ell
        hi = np.abs(w + 2.0 * np.pi * j) / theta.ell
        add = scale * (spectral_density(p, lo) + spectral_density(p, hi))
        out += add
        if np.max(add) < 1e-12 * np.max(out):
            break
    return out


def correlation_table(thetap: tuple[float, float, float], n: int) -> np.ndarray:
    """Correlations rho(0..n-1) of the extended process; independent of K."""
    alpha, gamma, ell = thetap
    if alpha * gamma <= 0.5:
        raise ModelParamError("alpha*gamma must exceed 1/2")
    p = ModelParams(alpha, gamma, 1.0, 1)
    lags = ell * np.arange(n, dtype=float)
    tab = covariance_table(p, lags)
    return tab / tab[0]


# --------------------------------------------------------------------------
# Toeplitz likelihood via Levinson recursion
# --------------------------------------------------------------------------

def toeplitz_solve_logdet(c: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve T x = y and return (x, log det T) for symmetric Toeplitz T.

    T has first column c; Levinson recursion, O(N^2) time, O(N) memory.
    The log-determinant accumulates the prediction-error variances of the
    embedded Durbin recursion.  Raises on a non-positive-definite input.
    """
    c = np.asarray(c, dtype=float)
    y = np.asarray(y, dtype=float)
    n = c.size
    if y.size != n:
        raise ValueError("c and y must have the same length")
    if c[0] <= 0:
        raise NumericalError("Toeplitz matrix not positive definite (c[0] <= 0)")
    logdet = n * math.log(c[0])
    x = np.zeros(n)
    b = y / c[0]
    x[0] = b[0]
    if n == 1:
        return x, logdet
    r = c[1:] / c[0]
    yv = np.zeros(n - 1)
    yv[0] = -r[0]
    alpha = -r[0]
    beta = 1.0
    for k in range(1, n):
        beta = (1.0 - alpha * alpha) * beta
        if beta <= 0.0:
            raise NumericalError(
                f"Toeplitz matrix not positive definite (step {k})"
            )
        logdet += math.log(beta)
        yv_rev = yv[k - 1:: -1].copy()
        mu = (b[k] - np.dot(r[:k], x[k - 1:: -1])) / beta
        x[:k] += mu * yv_rev
        x[k] = mu
        if k < n - 1:
            alpha = -(r[k] + np.dot(r[:k], yv_rev)) / beta
            yv[:k] += alpha * yv_rev
            yv[k] = alpha
    return x, logdet


def _likelihood_parts(thetap, v: np.ndarray) -> tuple[float, float]:
    """(y' rho^{-1} y, log det rho) for the extended-process correlation."""
    y = np.asarray(v, dtype=float)
    rho = correlation_table(thetap, y.size)
    x, logdet = toeplitz_solve_logdet(rho, y)
    quad = float(np.dot(y, x))
    if not np.isfinite(quad) or not np.isfinite(logdet) or quad <= 0:
        raise NumericalError("likelihood pieces not finite and positive")
    return quad, logdet


def profile_s2(thetap, v: np.ndarray) -> float:
    """Profiled variance: the NLL in s2 is minimized at y' rho^{-1} y / N."""
    quad, _ = _likelihood_parts(thetap, v)
    return quad / np.asarray(v).size


def reduced_nll(thetap, v: np.ndarray) -> float:
    """Profiled negative log-likelihood of the extended process.

    (N/2) log(y' rho^{-1} y) + (1/2) log det rho
        + (N/2) (1 + log 2 pi - log N)
    """
    y = np.asarray(v, dtype=float)
    n = y.size
    quad, logdet = _likelihood_parts(thetap, y)
    return float(
        0.5 * n * math.log(quad) + 0.5 * logdet
        + 0.5 * n * (1.0 + math.log(2.0 * math.pi) - math.log(n))
    )


# --------------------------------------------------------------------------
# Nelder-Mead simplex search
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    n_evals: int


def nelder_mead(f, x0, step: float = 0.25, xtol: float = 1e-4, ftol: float = 1e-6,
                max_iter: int = 2000) -> NelderMeadResult:
    """Minimize f by the reflection/expansion/contraction/shrink simplex.

    Terminates when the simplex diameter falls below xtol and the value
    spread below ftol, or at max_iter.  Derivative-free; f must be finite
    at the initial simplex vertices.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    verts = np.tile(x0, (dim + 1, 1))
    for i in range(dim):
        verts[i + 1, i] += step
    vals = np.array([f(v) for v in verts])
    n_evals = dim + 1
    if not np.all(np.isfinite(vals)):
        raise NumericalError("objective not finite at the initial simplex")

    refl, expand, contract, shrink = 1.0, 2.0, 0.5, 0.5
    iterations = 0
    converged = False
    while iterations < max_iter:
        iterations += 1
        order = np.argsort(vals, kind="stable")
        verts, vals = verts[order], vals[order]
        diameter = np.max(np.linalg.norm(verts[1:] - verts[0], axis=1))
        spread = vals[-1] - vals[0]
        if diameter < xtol and spread < ftol:
            converged = True
            break

        centroid = verts[:-1].mean(axis=0)
        xr = centroid + refl * (centroid - verts[-1])
        fr = f(xr); n_evals += 1
        if fr < vals[0]:
            xe = centroid + expand * (centroid - verts[-1])
            fe = f(xe); n_evals += 1
            if fe < fr:
                verts[-1], vals[-1] = xe, fe
            else:
                verts[-1], vals[-1] = xr, fr
        elif fr < vals[-2]:
            verts[-1], vals[-1] = xr, fr
        else:
            xc = centroid + contract * (verts[-1] - centroid)
            fc = f(xc); n_evals += 1
            if fc < vals[-1]:
                verts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, dim + 1):
                    verts[i] = verts[0] + shrink * (verts[i] - verts[0])
                    vals[i] = f(verts[i])
                n_evals += dim

    order = np.argsort(vals, kind="stable")
    verts, vals = verts[order], vals[order]
    return NelderMeadResult(x=verts[0].copy(), fun=float(vals[0]),
                            iterations=iterations, converged=converged,
                            n_evals=n_evals)


# --------------------------------------------------------------------------
# model fitting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    params: ExtendedParams
    nll_reduced: float
    iterations: int
    converged: bool
    family: str
    n_evals: int = 0


# alpha search transform: alpha = min(1, 1.1 * sigmoid(z)) keeps alpha in
# (0, 1] and makes the boundary value exactly reachable (the objective is
# flat in z beyond the cap, which the simplex handles by value spread)
_ALPHA_CAP_SCALE = 1.1
_LOG_BOUND = 5.0

# default multi-start grid: alpha*gamma targets x ell candidates, trimmed
# to five spanning starts; a sixth start sits on the alpha = 1 boundary
_DEFAULT_START_GRID = [(0.75, 0.5), (1.5, 0.5), (2.5, 0.5), (1.5, 3.0), (2.5, 3.0)]
_DEFAULT_START_ALPHA = 0.75


def _alpha_from_z(z: float) -> float:
    return min(1.0, _ALPHA_CAP_SCALE / (1.0 + math.exp(-z)))


def _z_from_alpha(alpha: float) -> float:
    if alpha >= 1.0:
        return 4.0  # inside the flat cap region
    q = alpha / _ALPHA_CAP_SCALE
    return math.log(q / (1.0 - q))


def _gwm_objective(v: np.ndarray):
    def obj(u):
        z, lg, ll = u
        if abs(lg) > _LOG_BOUND or abs(ll) > _LOG_BOUND:
            return np.inf
        alpha = _alpha_from_z(z)
        gamma, ell = math.exp(lg), math.exp(ll)
        if alpha * gamma <= 0.5 + 1e-9:
            return np.inf
        try:
            val = reduced_nll((alpha, gamma, ell), v)
        except (NumericalError, ModelParamError):
            return np.inf
        return val if np.isfinite(val) else np.inf
    return obj


def _wm_objective(v: np.ndarray):
    def obj(u):
        lg, ll = u
        if abs(lg) > _LOG_BOUND or abs(ll) > _LOG_BOUND:
            return np.inf
        gamma, ell = math.exp(lg), math.exp(ll)
        if gamma <= 0.5 + 1e-9:
            return np.inf
        try:
            val = reduced_nll((1.0, gamma, ell), v)
        except (NumericalError, ModelParamError):
            return np.inf
        return val if np.isfinite(val) else np.inf
    return obj


def fit(v: np.ndarray, family: str = "gwm", starts=None,
        max_iter: int = 2000) -> FitResult:
    """Maximum-likelihood fit of the extended process to a velocity series.

    family "wm" fixes alpha = 1 and searches (gamma, ell); family "gwm"
    searches (alpha, gamma, ell) with alpha in (0, 1].  The search runs in
    log-transformed coordinates from several starts (the default grid
    spans alpha*gamma in {0.75, 1.5, 2.5} and ell in {0.5, 3}; the GWM
    family adds an alpha = 1 boundary start so the nested WM optimum is
    always a candidate).  s2 and K are back-filled from the profiled
    variance and the variance identity.

    starts: optional list of (gamma, ell) for "wm" or (alpha, gamma, ell)
    for "gwm" overriding the default grid.
    """
    y = np.asarray(v, dtype=float)
    if y.size < 100:
        raise ValueError("fit needs at least 100 samples")
    if family not in ("wm", "gwm"):
        raise ValueError("family must be 'wm' or 'gwm'")

    if family == "wm":
        obj = _wm_objective(y)
        if starts is None:
            start_list = [(ag, ell) for ag, ell in _DEFAULT_START_GRID]
        else:
            start_list = list(starts)
        x0s = [np.array([math.log(g), math.log(ell)]) for g, ell in start_list]
    else:
        obj = _gwm_objective(y)
        if starts is None:
            a0 = _DEFAULT_START_ALPHA
            start_list = [(a0, ag / a0, ell) for ag, ell in _DEFAULT_START_GRID]
            start_list.append((1.0, 1.0, 0.75))  # boundary candidate
        else:
            start_list = list(starts)
        x0s = [np.array([_z_from_alpha(a), math.log(g), math.log(ell)])
               for a, g, ell in start_list]

    best = None
    total_evals = 0
    for x0 in x0s:
        if not np.isfinite(obj(x0)):
            continue
        res = nelder_mead(obj, x0, max_iter=max_iter)
        total_evals += res.n_evals
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun):
        raise NumericalError("all fit starts failed (non-finite likelihood)")

    if family == "wm":
        alpha = 1.0
        gamma, ell = math.exp(best.x[0]), math.exp(best.x[1])
    else:
        alpha = _alpha_from_z(best.x[0])
        gamma, ell = math.exp(best.x[1]), math.exp(best.x[2])
    s2 = profile_s2((alpha, gamma, ell), y)
    params = ExtendedParams(alpha=alpha, gamma=gamma,
                            k_amp=k_from_s2(s2, alpha, gamma), ell=ell, s2=s2)
    return FitResult(params=params, nll_reduced=best.fun,
                     iterations=best.iterations, converged=best.converged,
                     family=family, n_evals=total_evals)
