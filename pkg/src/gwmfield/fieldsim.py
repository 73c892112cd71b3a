"""Seeded simulation of GWM sample paths (1D) and fields (2D).

Circulant embedding on the doubled torus: the covariance sequence on the
grid is wrapped into an even circulant row whose FFT gives the exact
process spectrum on the torus.  When the minimal embedding is not
nonnegative definite the negative eigenvalues are clipped at zero and the
clipped mass fraction is recorded; the draw is then approximate with a
quantified error, and fails hard when the clipped fraction exceeds 1e-3.

Gaussian variates come from a counter-based generator (Philox) keyed by
the seed, so a fixed (params, grid, seed) triple reproduces the same field
byte for byte on any machine and for any worker count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, covariance_table
from .errors import ModelParamError, NumericalError

__all__ = ["Grid", "FieldSample", "EmbeddingSpectrum", "circulant_embedding", "simulate",
           "write_field_csv", "write_field_raw"]

MAX_GRID_POINTS = 1 << 22
CLIP_FAIL_FRACTION = 1e-3


@dataclass(frozen=True)
class Grid:
    """Regular 1D or 2D sampling grid: sizes per axis, spacing per axis."""

    sizes: tuple[int, ...]
    spacing: tuple[float, ...]

    def __post_init__(self):
        if len(self.sizes) not in (1, 2) or len(self.spacing) != len(self.sizes):
            raise ModelParamError("grid must be 1D or 2D with one spacing per axis")
        if any(int(s) != s or s < 8 for s in self.sizes):
            raise ModelParamError("grid sizes must be integers >= 8")
        if any(not (d > 0) for d in self.spacing):
            raise ModelParamError("grid spacing must be > 0")
        if int(np.prod(self.sizes)) > MAX_GRID_POINTS:
            raise ModelParamError(f"grid exceeds {MAX_GRID_POINTS} points")

    @property
    def dims(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class EmbeddingSpectrum:
    """Eigenvalues of the (block-)circulant extension of a covariance row."""

    eigenvalues: np.ndarray
    min_eigenvalue: float
    clipped_mass_fraction: float


@dataclass(frozen=True)
class FieldSample:
    """One seeded realization of the field on a grid (row-major values)."""

    grid: Grid
    values: np.ndarray
    seed: int
    params: ModelParams
    embedding_min_eigenvalue: float = 0.0
    clipped_mass_fraction: float = 0.0


def circulant_embedding(cov_lags: np.ndarray) -> EmbeddingSpectrum:
    """Spectrum of the circulant extension of covariance lags c_0..c_{N-1}.

    The row is the even wrap [c_0 .. c_{N-1}, c_{N-2} .. c_1] (domain
    doubling, M = 2N - 2), whose spectrum is real.  Negative eigenvalues
    are clipped to zero; raises when the clipped mass fraction of the
    spectrum exceeds 1e-3.
    """
    c = np.asarray(cov_lags, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise ModelParamError("cov_lags must be a 1D array with at least 2 entries")
    row = np.concatenate([c, c[-2:0:-1]])
    eig = np.fft.fft(row).real
    return _spectrum_from_eigenvalues(eig)


def _spectrum_from_eigenvalues(eig: np.ndarray) -> EmbeddingSpectrum:
    min_eig = float(eig.min())
    total = float(np.abs(eig).sum())
    clipped = float(np.abs(eig[eig < 0]).sum()) / total if total > 0 else 0.0
    if clipped > CLIP_FAIL_FRACTION:
        raise NumericalError(
            f"circulant embedding failed: clipped mass fraction {clipped:.3g} "
            f"exceeds {CLIP_FAIL_FRACTION}"
        )
    return EmbeddingSpectrum(np.maximum(eig, 0.0), min_eig, clipped)


def _torus_distances(grid: Grid) -> np.ndarray:
    """Euclidean distances from the origin on the doubled torus."""
    ms = [2 * s - 2 for s in grid.sizes]
    axes = []
    for m, d in zip(ms, grid.spacing):
        j = np.arange(m)
        axes.append(np.minimum(j, m - j) * d)
    if grid.dims == 1:
        return axes[0]
    return np.sqrt(axes[0][:, None] ** 2 + axes[1][None, :] ** 2)


def simulate(p: ModelParams, grid: Grid, seed: int) -> FieldSample:
    """Draw one Gaussian realization with covariance C(p, .) at grid lags.

    Exact (up to the recorded clipped mass) via circulant embedding;
    deterministic in (p, grid, seed).
    """
    if p.n != grid.dims:
        raise ModelParamError(
            f"model dimension n={p.n} must match grid dimension {grid.dims}"
        )
    p.require_finite_variance()

    dist = _torus_distances(grid)
    uniq, inv = np.unique(dist, return_inverse=True)
    cov_u = covariance_table(p, uniq)
    row = cov_u[inv].reshape(dist.shape)

    if grid.dims == 1:
        eig = np.fft.fft(row).real
    else:
        eig = np.fft.fft2(row).real
    spec = _spectrum_from_eigenvalues(eig)

    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    shape = spec.eigenvalues.shape if grid.dims == 2 else (spec.eigenvalues.size,)
    a = rng.standard_normal(shape)
    b = rng.standard_normal(shape)
    m_total = float(np.prod(shape))
    coeff = np.sqrt(spec.eigenvalues) * (a + 1j * b)
    z = (np.fft.fft2(coeff) if grid.dims == 2 else np.fft.fft(coeff)) / np.sqrt(m_total)
    if grid.dims == 1:
        values = z.real[: grid.sizes[0]].copy()
    else:
        values = z.real[: grid.sizes[0], : grid.sizes[1]].ravel()
    return FieldSample(
        grid=grid,
        values=values,
        seed=int(seed),
        params=p,
        embedding_min_eigenvalue=spec.min_eigenvalue,
        clipped_mass_fraction=spec.clipped_mass_fraction,
    )


# --------------------------------------------------------------------------
# on-disk formats (documented bit-exactly in the README)
# --------------------------------------------------------------------------

def write_field_csv(sample: FieldSample, path: str) -> None:
    """CSV with header x[,y],value; '.' decimal, 17 significant digits."""
    g = sample.grid
    with open(path, "w", newline="\n") as fh:
        if g.dims == 1:
            fh.write("x,value\n")
            for i, v in enumerate(sample.values):
                fh.write(f"{i * g.spacing[0]:.17g},{v:.17g}\n")
        else:
            fh.write("x,y,value\n")
            n1, n2 = g.sizes
            vals = sample.values.reshape(n1, n2)
            for i in range(n1):
                for j in range(n2):
                    fh.write(
                        f"{i * g.spacing[0]:.17g},{j * g.spacing[1]:.17g},{vals[i, j]:.17g}\n"
                    )


def write_field_raw(sample: FieldSample, path_prefix: str) -> tuple[str, str]:
    """Raw little-endian float64 dump plus a JSON sidecar with the metadata.

    Returns (data_path, sidecar_path).  The dump is the row-major value
    array; the sidecar carries everything needed to reinterpret it.
    """
    data_path = path_prefix + ".f64"
    meta_path = path_prefix + ".json"
    with open(data_path, "wb") as fh:
        fh.write(np.ascontiguousarray(sample.values, dtype="<f8").tobytes())
    meta = {
        "schema_version": 1,
        "dtype": "float64",
        "byte_order": "little",
        "layout": "row-major",
        "sizes": list(sample.grid.sizes),
        "spacing": list(sample.grid.spacing),
        "seed": sample.seed,
        "params": {
            "alpha": sample.params.alpha,
            "gamma": sample.params.gamma,
            "lambda": sample.params.lam,
            "n": sample.params.n,
        },
        "embedding_min_eigenvalue": sample.embedding_min_eigenvalue,
        "clipped_mass_fraction": sample.clipped_mass_fraction,
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return data_path, meta_path
