"""Generalized Whittle-Matern random fields.

Covariance engine (exact quadrature paths, closed forms, asymptotic laws),
seeded Gaussian field simulation by circulant embedding, sample-path
diagnostics, and a Toeplitz profiled-likelihood fitting pipeline for daily
wind-speed series.
"""

from .core import (
    LocalProps,
    ModelParams,
    QuadConfig,
    cov_bochner,
    cov_large_lag,
    cov_macdonald,
    cov_whittle_matern,
    covariance,
    covariance_table,
    lass_amplitude,
    large_lag_terms,
    local_props,
    small_lag_integral,
    spectral_density,
    tangent_field_cov,
    variance,
    variogram,
    variogram_small_lag,
)
from .diagnostics import (
    DiagnosticsReport,
    check_lass,
    diagnostics_report,
    estimate_fractal_dim,
    estimate_memory_exponent,
)
from .errors import (
    DataFormatError,
    GwmError,
    InfiniteVarianceError,
    ModelParamError,
    NumericalError,
)
from .fieldsim import FieldSample, Grid, circulant_embedding, simulate
from .inference import (
    DailySeries,
    ExtendedParams,
    FitResult,
    SeasonalModel,
    correlation_table,
    deseasonalize,
    empirical_variogram,
    extended_cov,
    extended_psd,
    fit,
    k_from_s2,
    nelder_mead,
    periodogram,
    profile_s2,
    reduced_nll,
    welch_psd,
)
from .winddata import STATIONS, file_checksum, load_plain_series, load_wind_file

__version__ = "0.1.0"
