"""Single-realization Gaussian random field simulation on the grid.

Fields are drawn exactly: assemble the dense covariance matrix over all H*W
cells, factorize (lower Cholesky L), and return mean + L z with z a vector of
iid standard normals. Standard normals come from numpy's Generator
(PCG64 bit stream, ziggurat normal algorithm), fixed per build so identical
seeds reproduce identical fields.

Dense factorization is refused above MAX_SIM_CELLS = 4096 cells (64 x 64):
the benchmark grids are 32 x 32 and larger case-study grids are ingested from
point data, never simulated.

Non-stationary parameter fields (local range, anisotropy ratio, tilt, mean)
vary smoothly across the domain through a fixed low-frequency generator:
corner-anchored bilinear ramps by default, a sinusoidal alternative behind
``generator="sinusoidal"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import (AnisotropyField, CovarianceModel, NonstationaryField,
                         StationaryParams, cov_matrix_cholesky)
from .errors import ParameterError, SizeLimitError
from .grid import GridField, grid_locations
from .seeding import stable_seed

__all__ = [
    "MAX_SIM_CELLS",
    "SimulationSpec",
    "ParamFieldSpec",
    "sample_grf",
    "make_param_fields",
    "sample_composite",
]

MAX_SIM_CELLS = 4096


@dataclass(frozen=True)
class SimulationSpec:
    """One exact GRF draw: grid dims, covariance model, mean, seed."""

    height: int
    width: int
    covariance: CovarianceModel
    mean: float | GridField = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.height < 2 or self.width < 2:
            raise ParameterError(
                f"simulation grid must be at least 2x2, got {self.height}x{self.width}")
        if isinstance(self.mean, GridField):
            if (self.mean.height, self.mean.width) != (self.height, self.width):
                raise ParameterError(
                    f"mean field shape {(self.mean.height, self.mean.width)} does not "
                    f"match grid {(self.height, self.width)}")


def sample_grf(spec: SimulationSpec, record: list | None = None) -> GridField:
    """Draw one Gaussian random field realization for the spec.

    Exact dense sampling: values = mean + L z, L the lower Cholesky factor of
    the full covariance matrix over all cells, z ~ N(0, I) seeded by
    spec.seed (PCG64 + ziggurat, see module docstring). Identical specs give
    identical fields. Jitter escalations during factorization are appended to
    ``record`` when provided.
    """
    n = spec.height * spec.width
    if n > MAX_SIM_CELLS:
        raise SizeLimitError(
            f"dense simulation limited to {MAX_SIM_CELLS} cells (64x64); "
            f"requested {spec.height}x{spec.width} = {n}. Larger grids are "
            f"meant to be ingested from point data, not simulated.")
    locs = grid_locations(spec.height, spec.width)
    _, lower, _ = cov_matrix_cholesky(locs, spec.covariance, record)
    z = np.random.default_rng(np.uint64(spec.seed)).standard_normal(n)
    vals = lower @ z
    if isinstance(spec.mean, GridField):
        vals = vals + spec.mean.values.ravel()
    else:
        vals = vals + float(spec.mean)
    return GridField(vals.reshape(spec.height, spec.width))


@dataclass(frozen=True)
class ParamFieldSpec:
    """Ranges for smoothly varying non-stationary parameter fields.

    phi_range is in cell units (min, max local major range). The anisotropy
    ratio (minor/major, in (0, 1]) and the tilt vary across the domain within
    their ranges; the local mean is a centered ramp with half-width
    mean_amplitude. generator is "bilinear" (default) or "sinusoidal".
    """

    phi_range: tuple[float, float]
    anis_ratio_range: tuple[float, float] = (1.0, 1.0)
    tilt_range: tuple[float, float] = (0.0, 0.0)
    mean_amplitude: float = 0.0
    generator: str = "bilinear"

    def __post_init__(self):
        lo, hi = self.phi_range
        if not (0 < lo <= hi):
            raise ParameterError(f"phi_range must satisfy 0 < min <= max, got {self.phi_range}")
        rlo, rhi = self.anis_ratio_range
        if not (0 < rlo <= rhi <= 1.0):
            raise ParameterError(
                f"anis_ratio_range must satisfy 0 < min <= max <= 1, got {self.anis_ratio_range}")
        tlo, thi = self.tilt_range
        if not tlo <= thi:
            raise ParameterError(f"tilt_range must be ordered, got {self.tilt_range}")
        if self.generator not in ("bilinear", "sinusoidal"):
            raise ParameterError(
                f"generator must be 'bilinear' or 'sinusoidal', got '{self.generator}'")


def _ramp(h: int, w: int, generator: str, orientation: str) -> np.ndarray:
    """A smooth [0, 1] surface. Orientations keep the parameter fields from
    all varying along the same axis: 'diag' runs corner (1,1) -> (H,W),
    'antidiag' runs corner (1,W) -> (H,1), 'horizontal' runs left -> right.
    """
    ii = np.arange(h, dtype=np.float64)[:, None] / max(h - 1, 1)
    jj = np.arange(w, dtype=np.float64)[None, :] / max(w - 1, 1)
    if generator == "bilinear":
        if orientation == "diag":
            r = (ii + jj) / 2.0
        elif orientation == "antidiag":
            r = (ii + (1.0 - jj)) / 2.0
        else:
            r = np.broadcast_to(jj, (h, w)).copy()
    else:  # sinusoidal: same orientations, one smooth oscillation per side
        if orientation == "diag":
            r = (2.0 + np.sin(np.pi * (ii - 0.5)) + np.sin(np.pi * (jj - 0.5))) / 4.0
        elif orientation == "antidiag":
            r = (2.0 + np.sin(np.pi * (ii - 0.5)) + np.sin(np.pi * (0.5 - jj))) / 4.0
        else:
            r = np.broadcast_to((1.0 + np.sin(np.pi * (jj - 0.5))) / 2.0, (h, w)).copy()
    return r


def make_param_fields(spec: ParamFieldSpec, dims: tuple[int, int]) -> NonstationaryField:
    """Build per-cell sigma, nu, anisotropy, and mean fields from ranges.

    sigma(s) = 1 and nu(s) = 1/2 everywhere (ParamFieldSpec ranges only cover
    range, ratio, tilt, mean). The local major range and the tilt ramp along
    the main diagonal (so tilt is exactly tilt_range[0] at cell (1,1) and
    tilt_range[1] at (H,W) under the bilinear generator), the ratio along the
    anti-diagonal, and the mean left-to-right in [-A, +A]. Every component is
    continuous: 4-neighbor increments stay below (max-min)/min(H,W)*4.
    """
    h, w = dims
    if h < 2 or w < 2:
        raise ParameterError(f"parameter fields need at least 2x2 grid, got {h}x{w}")
    phi_lo, phi_hi = spec.phi_range
    ratio_lo, ratio_hi = spec.anis_ratio_range
    tilt_lo, tilt_hi = spec.tilt_range
    g = spec.generator
    major = phi_lo + (phi_hi - phi_lo) * _ramp(h, w, g, "diag")
    ratio = ratio_lo + (ratio_hi - ratio_lo) * _ramp(h, w, g, "antidiag")
    tilt = tilt_lo + (tilt_hi - tilt_lo) * _ramp(h, w, g, "diag")
    mean = spec.mean_amplitude * (2.0 * _ramp(h, w, g, "horizontal") - 1.0)
    anis = AnisotropyField(major=major, minor=major * ratio, tilt=tilt)
    ones = np.ones((h, w))
    return NonstationaryField(
        sigma_field=GridField(ones),
        nu_field=GridField(0.5 * ones),
        anis_field=anis,
        mean_field=GridField(mean),
    )


def sample_composite(exp_params: StationaryParams, wave_params: StationaryParams,
                     dims: tuple[int, int], seed: int, mode: str = "product",
                     record: list | None = None) -> GridField:
    """Draw a composite Exponential/Wave field.

    mode="product" (default): one GRF under the pointwise-product covariance.
    mode="join": two independent GRFs, Exponential filling columns left of the
    vertical midline and Wave filling the rest.
    """
    h, w = dims
    if mode == "product":
        model = CovarianceModel.product_exp_wave(exp_params, wave_params)
        return sample_grf(SimulationSpec(h, w, model, 0.0, seed), record)
    if mode == "join":
        left = sample_grf(SimulationSpec(
            h, w, CovarianceModel("exponential", exp_params), 0.0,
            stable_seed(seed, "join-exponential")), record)
        right = sample_grf(SimulationSpec(
            h, w, CovarianceModel("wave", wave_params), 0.0,
            stable_seed(seed, "join-wave")), record)
        vals = left.values.copy()
        vals[:, w // 2:] = right.values[:, w // 2:]
        return GridField(vals)
    raise ParameterError(f"composite mode must be 'product' or 'join', got '{mode}'")
