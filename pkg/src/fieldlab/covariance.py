"""Stationary and non-stationary covariance functions and matrix assembly.

Stationary families (isotropic, distance h in cell units):

* Exponential          C(h) = sigma2 * exp(-h / phi)            (+ tau2 at h = 0)
* Wave                 C(h) = sigma2 * (phi / h) * sin(h / phi) (C(0) = sigma2)
* Matern               C(h) = sigma2 * M_nu(h / phi), with
                       M_nu(d) = d^nu * K_nu(d) / (2^(nu-1) * Gamma(nu)); M_nu(0) = 1
* Product Exp x Wave   pointwise product of an Exponential and a Wave covariance

The non-stationary Matern kernel uses per-location variances sigma(s),
smoothnesses nu(s), and 2x2 anisotropy matrices Sigma(s) built from local
major/minor ranges and a tilt angle:

    C(si, sj) = sigma_i * sigma_j * |Sigma_i|^(1/4) * |Sigma_j|^(1/4)
                * |(Sigma_i + Sigma_j) / 2|^(-1/2) * M_order(sqrt(Q_ij)),
    Q_ij      = (si - sj)^T ((Sigma_i + Sigma_j) / 2)^(-1) (si - sj),
    order     = sqrt(nu_i + nu_j).

With constant parameter fields Sigma = phi^2 I and nu = 1/2 this collapses to
the stationary Matern of smoothness 1 at distance |si - sj| / phi. The Matern
argument is sqrt(Q) at unit scale; Q is already range-normalized through Sigma.

Matrix assembly adds diagonal jitter only when a Cholesky factorization fails,
escalating geometrically from 1e-10 to 1e-6 of the marginal variance; every
escalation is recorded so runs can report it in their metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky as _cholesky
from scipy.spatial.distance import cdist
from scipy.special import gamma as _gamma
from scipy.special import kv as _besselk

from .errors import NotPositiveDefiniteError, ParameterError, ShapeError, SolverError
from .grid import GridField

__all__ = [
    "StationaryParams",
    "LocalAnisotropy",
    "AnisotropyField",
    "NonstationaryField",
    "CovarianceModel",
    "cov_exponential",
    "cov_wave",
    "cov_product_exp_wave",
    "matern_correlation",
    "q_distance",
    "cov_nonstationary",
    "pairwise_cov",
    "build_cov_matrix",
    "JitterEvent",
    "STATIONARY_FAMILIES",
    "ALL_FAMILIES",
]

STATIONARY_FAMILIES = ("exponential", "exponential_nugget", "matern", "wave",
                       "product_exp_wave")
ALL_FAMILIES = STATIONARY_FAMILIES + ("nonstationary_matern",)

# Jitter escalation: start at 1e-10 * variance, multiply by 10 up to 1e-6.
_JITTER_START_REL = 1e-10
_JITTER_MAX_REL = 1e-6


@dataclass(frozen=True)
class StationaryParams:
    """Parameters of a stationary isotropic covariance.

    Attributes
    ----------
    sigma2 : float
        Marginal variance, > 0.
    phi : float
        Range in cell units, > 0.
    tau2 : float
        Nugget variance added at lag zero, >= 0.
    nu : float
        Matern smoothness, > 0 (only read by the Matern family).
    """

    sigma2: float = 1.0
    phi: float = 1.0
    tau2: float = 0.0
    nu: float = 0.5

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ParameterError(f"sigma2 must be > 0, got {self.sigma2}")
        if not self.phi > 0:
            raise ParameterError(f"phi must be > 0, got {self.phi}")
        if self.tau2 < 0:
            raise ParameterError(f"tau2 must be >= 0, got {self.tau2}")
        if not self.nu > 0:
            raise ParameterError(f"nu must be > 0, got {self.nu}")


@dataclass(frozen=True)
class LocalAnisotropy:
    """Local 2x2 anisotropy Sigma(s) = R(tilt) diag(major^2, minor^2) R(tilt)^T."""

    range_major: float
    range_minor: float
    tilt: float = 0.0

    def __post_init__(self):
        if not (self.range_major >= self.range_minor > 0):
            raise ParameterError(
                "anisotropy requires range_major >= range_minor > 0, got "
                f"major={self.range_major}, minor={self.range_minor}")

    def matrix(self) -> np.ndarray:
        """The induced symmetric positive-definite 2x2 matrix."""
        c, s = math.cos(self.tilt), math.sin(self.tilt)
        a2, b2 = self.range_major ** 2, self.range_minor ** 2
        return np.array([
            [a2 * c * c + b2 * s * s, (a2 - b2) * s * c],
            [(a2 - b2) * s * c, a2 * s * s + b2 * c * c],
        ])


@dataclass(frozen=True)
class AnisotropyField:
    """Per-cell anisotropy parameters as three H x W arrays."""

    major: np.ndarray
    minor: np.ndarray
    tilt: np.ndarray

    def __post_init__(self):
        major = np.asarray(self.major, dtype=np.float64)
        minor = np.asarray(self.minor, dtype=np.float64)
        tilt = np.asarray(self.tilt, dtype=np.float64)
        if not (major.shape == minor.shape == tilt.shape) or major.ndim != 2:
            raise ShapeError("anisotropy component arrays must share one 2-D shape")
        if not np.all(major >= minor):
            raise ParameterError("range_major must be >= range_minor everywhere")
        if not np.all(minor > 0):
            raise ParameterError("range_minor must be > 0 everywhere")
        object.__setattr__(self, "major", major)
        object.__setattr__(self, "minor", minor)
        object.__setattr__(self, "tilt", tilt)

    @property
    def shape(self) -> tuple[int, int]:
        return self.major.shape

    def at(self, i: int, j: int) -> LocalAnisotropy:
        return LocalAnisotropy(float(self.major[i, j]), float(self.minor[i, j]),
                               float(self.tilt[i, j]))

    def sigma_components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Entries (a, b, c) of Sigma = [[a, b], [b, c]] per cell, vectorized."""
        cos_t, sin_t = np.cos(self.tilt), np.sin(self.tilt)
        a2, b2 = self.major ** 2, self.minor ** 2
        a = a2 * cos_t ** 2 + b2 * sin_t ** 2
        c = a2 * sin_t ** 2 + b2 * cos_t ** 2
        b = (a2 - b2) * sin_t * cos_t
        return a, b, c


@dataclass(frozen=True)
class NonstationaryField:
    """Per-cell parameter fields of the non-stationary Matern kernel."""

    sigma_field: GridField
    nu_field: GridField
    anis_field: AnisotropyField
    mean_field: GridField | None = None

    def __post_init__(self):
        shape = (self.sigma_field.height, self.sigma_field.width)
        others = {"nu_field": (self.nu_field.height, self.nu_field.width),
                  "anis_field": self.anis_field.shape}
        if self.mean_field is not None:
            others["mean_field"] = (self.mean_field.height, self.mean_field.width)
        for name, other in others.items():
            if other != shape:
                raise ShapeError(
                    f"{name} shape {other} does not match sigma_field shape {shape}")
        if not np.all(self.sigma_field.values > 0):
            raise ParameterError("sigma(s) must be > 0 everywhere")
        if not np.all(self.nu_field.values > 0):
            raise ParameterError("nu(s) must be > 0 everywhere")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.sigma_field.height, self.sigma_field.width)

    def mean_values(self) -> np.ndarray:
        if self.mean_field is None:
            return np.zeros(self.shape)
        return self.mean_field.values


# ---------------------------------------------------------------------------
# Stationary covariance functions (scalar or ndarray h)


def _check_lags(h):
    h = np.asarray(h, dtype=np.float64)
    if np.any(h < 0):
        raise ParameterError("lag distances must be nonnegative")
    return h


def cov_exponential(h, p: StationaryParams):
    """Exponential covariance sigma2*exp(-h/phi), plus tau2 exactly at h=0."""
    h = _check_lags(h)
    out = p.sigma2 * np.exp(-h / p.phi)
    if p.tau2 > 0:
        out = np.where(h == 0, out + p.tau2, out)
    return out if out.ndim else float(out)


def cov_wave(h, p: StationaryParams):
    """Wave (hole-effect) covariance sigma2*(phi/h)*sin(h/phi); sinc limit at 0."""
    h = _check_lags(h)
    # np.sinc(t) = sin(pi t)/(pi t), so sin(u)/u = np.sinc(u/pi); exact 1 at u=0.
    out = p.sigma2 * np.sinc(h / (p.phi * np.pi))
    if p.tau2 > 0:
        out = np.where(h == 0, out + p.tau2, out)
    return out if out.ndim else float(out)


def cov_product_exp_wave(h, p_exp: StationaryParams, p_wave: StationaryParams):
    """Pointwise product of an Exponential and a Wave covariance.

    A product of valid covariances is itself valid; at h=0 the value is
    sigma2_exp * sigma2_wave. Component nuggets are rejected because the
    composite's nugget behavior would be ambiguous.
    """
    if p_exp.tau2 != 0 or p_wave.tau2 != 0:
        raise ParameterError("product components must have tau2 = 0")
    h = _check_lags(h)
    out = np.asarray(cov_exponential(h, p_exp)) * np.asarray(cov_wave(h, p_wave))
    return out if out.ndim else float(out)


def matern_correlation(h, nu: float, phi: float):
    """Matern correlation M_nu(h/phi) = (h/phi)^nu K_nu(h/phi) / (2^(nu-1) Gamma(nu)).

    Equals 1 at h = 0 and exp(-h/phi) for nu = 1/2. Closed forms are used for
    nu in {1/2, 1, 3/2, 5/2}; other orders go through scipy's K_nu.
    """
    if not nu > 0:
        raise ParameterError(f"nu must be > 0, got {nu}")
    if not phi > 0:
        raise ParameterError(f"phi must be > 0, got {phi}")
    h = _check_lags(h)
    d = h / phi
    if nu == 0.5:
        out = np.exp(-d)
    elif nu == 1.5:
        out = (1.0 + d) * np.exp(-d)
    elif nu == 2.5:
        out = (1.0 + d + d * d / 3.0) * np.exp(-d)
    else:
        # Generic order. d^nu*K_nu(d) -> 2^(nu-1)*Gamma(nu) as d -> 0; guard the
        # 0 * inf indeterminate at tiny arguments by snapping to the limit 1.
        d = np.atleast_1d(d)
        out = np.ones_like(d)
        pos = d > 1e-10
        if np.any(pos):
            dp = d[pos]
            if nu == 1.0:
                out[pos] = dp * _besselk(1.0, dp)
            else:
                coef = 2.0 ** (1.0 - nu) / _gamma(nu)
                out[pos] = coef * dp ** nu * _besselk(nu, dp)
        # K_nu underflows to 0 for large arguments, which is the right limit.
        out = np.where(np.isfinite(out), out, 0.0)
        if np.ndim(h) == 0:
            return float(out[0])
        return out
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Non-stationary kernel


def q_distance(si, sj, anis_i: LocalAnisotropy, anis_j: LocalAnisotropy) -> float:
    """Quadratic-form distance Q_ij = (si-sj)^T ((Sigma_i+Sigma_j)/2)^(-1) (si-sj).

    Symmetric in (i, j); zero iff si = sj; reduces to the squared Euclidean
    distance when both Sigma are the identity.
    """
    diff = np.asarray(si, dtype=np.float64) - np.asarray(sj, dtype=np.float64)
    avg = 0.5 * (anis_i.matrix() + anis_j.matrix())
    a, b, c = avg[0, 0], avg[0, 1], avg[1, 1]
    det = a * c - b * b
    if det <= 0 or not np.isfinite(det):
        cond = np.linalg.cond(avg)
        raise SolverError(
            f"averaged anisotropy matrix is numerically singular "
            f"(det={det:.3e}, cond={cond:.3e})")
    # Explicit 2x2 inverse keeps this exact and cheap.
    q = (c * diff[0] ** 2 - 2.0 * b * diff[0] * diff[1] + a * diff[1] ** 2) / det
    return float(max(q, 0.0))


def cov_nonstationary(si, sj, nsf: NonstationaryField, tau2: float = 0.0) -> float:
    """Non-stationary Matern covariance between grid cells si=(i,j), sj.

    Locations index the parameter fields directly (cell coordinates). The
    determinant prefactors cancel at si = sj, giving sigma_i^2 (+ tau2).
    """
    ii, ij = int(si[0]), int(si[1])
    ji, jj = int(sj[0]), int(sj[1])
    h, w = nsf.shape
    for (r, c) in ((ii, ij), (ji, jj)):
        if not (0 <= r < h and 0 <= c < w):
            raise ParameterError(f"location ({r}, {c}) outside {h}x{w} parameter grid")
    sig_i = float(nsf.sigma_field.values[ii, ij])
    sig_j = float(nsf.sigma_field.values[ji, jj])
    nu_i = float(nsf.nu_field.values[ii, ij])
    nu_j = float(nsf.nu_field.values[ji, jj])
    anis_i = nsf.anis_field.at(ii, ij)
    anis_j = nsf.anis_field.at(ji, jj)
    det_i = float(np.linalg.det(anis_i.matrix()))
    det_j = float(np.linalg.det(anis_j.matrix()))
    avg = 0.5 * (anis_i.matrix() + anis_j.matrix())
    det_avg = float(np.linalg.det(avg))
    q = q_distance((ii, ij), (ji, jj), anis_i, anis_j)
    order = math.sqrt(nu_i + nu_j)
    prefactor = sig_i * sig_j * det_i ** 0.25 * det_j ** 0.25 / math.sqrt(det_avg)
    value = prefactor * float(matern_correlation(math.sqrt(q), order, 1.0))
    if tau2 > 0 and (ii, ij) == (ji, jj):
        value += tau2
    return value


# ---------------------------------------------------------------------------
# Tagged covariance model and matrix assembly


@dataclass(frozen=True)
class CovarianceModel:
    """Tagged covariance family with its parameters.

    Use the factory classmethods rather than the raw constructor:
    ``CovarianceModel.exponential(...)``, ``.exponential_nugget(...)``,
    ``.matern(...)``, ``.wave(...)``, ``.product_exp_wave(...)``,
    ``.nonstationary(...)``.
    """

    family: str
    params: StationaryParams | None = None
    wave_params: StationaryParams | None = None
    ns_field: NonstationaryField | None = None
    ns_tau2: float = 0.0

    def __post_init__(self):
        if self.family not in ALL_FAMILIES:
            raise ParameterError(
                f"unknown covariance family '{self.family}'; expected one of {ALL_FAMILIES}")
        if self.family == "nonstationary_matern":
            if self.ns_field is None:
                raise ParameterError("nonstationary_matern requires parameter fields")
            if self.ns_tau2 < 0:
                raise ParameterError(f"nugget must be >= 0, got {self.ns_tau2}")
        elif self.family == "product_exp_wave":
            if self.params is None or self.wave_params is None:
                raise ParameterError("product_exp_wave requires both component params")
            if self.params.tau2 != 0 or self.wave_params.tau2 != 0:
                raise ParameterError("product components must have tau2 = 0")
        else:
            if self.params is None:
                raise ParameterError(f"family '{self.family}' requires params")
            if self.family == "exponential_nugget" and not self.params.tau2 > 0:
                raise ParameterError("exponential_nugget requires tau2 > 0")

    # -- factories ---------------------------------------------------------
    @classmethod
    def exponential(cls, sigma2: float = 1.0, phi: float = 1.0,
                    tau2: float = 0.0) -> "CovarianceModel":
        return cls("exponential", StationaryParams(sigma2, phi, tau2))

    @classmethod
    def exponential_nugget(cls, sigma2: float, phi: float,
                           tau2: float) -> "CovarianceModel":
        return cls("exponential_nugget", StationaryParams(sigma2, phi, tau2))

    @classmethod
    def matern(cls, sigma2: float = 1.0, phi: float = 1.0, nu: float = 0.5,
               tau2: float = 0.0) -> "CovarianceModel":
        return cls("matern", StationaryParams(sigma2, phi, tau2, nu))

    @classmethod
    def wave(cls, sigma2: float = 1.0, phi: float = 1.0,
             tau2: float = 0.0) -> "CovarianceModel":
        return cls("wave", StationaryParams(sigma2, phi, tau2))

    @classmethod
    def product_exp_wave(cls, p_exp: StationaryParams,
                         p_wave: StationaryParams) -> "CovarianceModel":
        return cls("product_exp_wave", p_exp, wave_params=p_wave)

    @classmethod
    def nonstationary(cls, nsf: NonstationaryField,
                      tau2: float = 0.0) -> "CovarianceModel":
        return cls("nonstationary_matern", ns_field=nsf, ns_tau2=tau2)

    # -- helpers -----------------------------------------------------------
    @property
    def marginal_variance(self) -> float:
        """sigma^2 scale used for jitter sizing (nugget excluded)."""
        if self.family == "nonstationary_matern":
            return float(np.max(self.ns_field.sigma_field.values) ** 2)
        if self.family == "product_exp_wave":
            return self.params.sigma2 * self.wave_params.sigma2
        return self.params.sigma2

    @property
    def nugget(self) -> float:
        if self.family == "nonstationary_matern":
            return self.ns_tau2
        if self.family == "product_exp_wave":
            return 0.0
        return self.params.tau2

    def describe(self) -> dict:
        """JSON-friendly parameter summary for manifests."""
        out: dict = {"family": self.family}
        if self.params is not None:
            out["params"] = {"sigma2": self.params.sigma2, "phi": self.params.phi,
                             "tau2": self.params.tau2, "nu": self.params.nu}
        if self.wave_params is not None:
            out["wave_params"] = {"sigma2": self.wave_params.sigma2,
                                  "phi": self.wave_params.phi}
        if self.ns_field is not None:
            out["ns"] = {"shape": list(self.ns_field.shape), "tau2": self.ns_tau2}
        return out


def _ns_pairwise(nsf: NonstationaryField, loc_a: np.ndarray,
                 loc_b: np.ndarray) -> np.ndarray:
    """Vectorized non-stationary Matern covariance block between location sets."""
    h, w = nsf.shape
    ia = (loc_a[:, 0].astype(np.intp), loc_a[:, 1].astype(np.intp))
    ib = (loc_b[:, 0].astype(np.intp), loc_b[:, 1].astype(np.intp))
    if (loc_a < 0).any() or (loc_b < 0).any() or \
            (loc_a[:, 0] >= h).any() or (loc_b[:, 0] >= h).any() or \
            (loc_a[:, 1] >= w).any() or (loc_b[:, 1] >= w).any():
        raise ParameterError("locations outside the parameter grid")

    a_all, b_all, c_all = nsf.anis_field.sigma_components()
    det_all = a_all * c_all - b_all ** 2
    sig = nsf.sigma_field.values
    nus = nsf.nu_field.values

    def gather(arr, idx):
        return arr[idx]

    a_i, a_j = gather(a_all, ia)[:, None], gather(a_all, ib)[None, :]
    b_i, b_j = gather(b_all, ia)[:, None], gather(b_all, ib)[None, :]
    c_i, c_j = gather(c_all, ia)[:, None], gather(c_all, ib)[None, :]
    det_i = gather(det_all, ia)[:, None]
    det_j = gather(det_all, ib)[None, :]
    sig_i = gather(sig, ia)[:, None]
    sig_j = gather(sig, ib)[None, :]
    nu_i = gather(nus, ia)[:, None]
    nu_j = gather(nus, ib)[None, :]

    am = 0.5 * (a_i + a_j)
    bm = 0.5 * (b_i + b_j)
    cm = 0.5 * (c_i + c_j)
    det_m = am * cm - bm ** 2
    if np.any(det_m <= 0):
        raise SolverError("averaged anisotropy matrix singular in matrix assembly")

    d0 = loc_a[:, 0][:, None] - loc_b[:, 0][None, :]
    d1 = loc_a[:, 1][:, None] - loc_b[:, 1][None, :]
    q = (cm * d0 ** 2 - 2.0 * bm * d0 * d1 + am * d1 ** 2) / det_m
    np.maximum(q, 0.0, out=q)
    root_q = np.sqrt(q)

    order = np.sqrt(nu_i + nu_j)
    # Constant nu fields give a single Matern order for the whole block, the
    # common case; group by unique order otherwise.
    orders = np.unique(order)
    corr = np.empty_like(root_q)
    if orders.size == 1:
        corr[:] = matern_correlation(root_q, float(orders[0]), 1.0)
    else:
        order_full = np.broadcast_to(order, corr.shape)
        for o in orders:
            sel = order_full == o
            corr[sel] = matern_correlation(root_q[sel], float(o), 1.0)

    pref = sig_i * sig_j * det_i ** 0.25 * det_j ** 0.25 / np.sqrt(det_m)
    return pref * corr


def pairwise_cov(model: CovarianceModel, loc_a: np.ndarray, loc_b: np.ndarray,
                 add_nugget: bool) -> np.ndarray:
    """Covariance block C[a, b] between two location sets (n, 2) and (m, 2).

    The nugget is added only where the lag is exactly zero and only when
    add_nugget is set; prediction right-hand sides use add_nugget=False so a
    nugget screens observations rather than being interpolated.
    """
    loc_a = np.asarray(loc_a, dtype=np.float64)
    loc_b = np.asarray(loc_b, dtype=np.float64)
    if model.family == "nonstationary_matern":
        out = _ns_pairwise(model.ns_field, loc_a, loc_b)
        if add_nugget and model.ns_tau2 > 0:
            same = (loc_a[:, None, 0] == loc_b[None, :, 0]) & \
                   (loc_a[:, None, 1] == loc_b[None, :, 1])
            out = out + model.ns_tau2 * same
        return out
    dists = cdist(loc_a, loc_b)
    p = model.params
    if model.family in ("exponential", "exponential_nugget"):
        out = p.sigma2 * np.exp(-dists / p.phi)
    elif model.family == "matern":
        out = p.sigma2 * np.asarray(matern_correlation(dists, p.nu, p.phi))
    elif model.family == "wave":
        out = p.sigma2 * np.sinc(dists / (p.phi * np.pi))
    elif model.family == "product_exp_wave":
        pw = model.wave_params
        out = (p.sigma2 * np.exp(-dists / p.phi)) * \
              (pw.sigma2 * np.sinc(dists / (pw.phi * np.pi)))
    else:  # pragma: no cover - guarded by CovarianceModel validation
        raise ParameterError(f"unhandled family {model.family}")
    if add_nugget and model.nugget > 0:
        out = out + model.nugget * (dists == 0.0)
    return out


@dataclass
class JitterEvent:
    """Record of one diagonal-jitter escalation during matrix assembly."""

    family: str
    n: int
    epsilon: float

    def as_dict(self) -> dict:
        return {"family": self.family, "n": self.n, "epsilon": self.epsilon}


def _chol_with_jitter(c: np.ndarray, model: CovarianceModel,
                      record: list | None) -> tuple[np.ndarray, np.ndarray, float]:
    """Lower-triangular factor of c, escalating diagonal jitter on failure."""
    try:
        return c, _cholesky(c, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass  # escalate jitter below (scipy re-exports numpy's LinAlgError)
    scale = model.marginal_variance
    eps = _JITTER_START_REL * scale
    eye = np.eye(c.shape[0])
    while eps <= _JITTER_MAX_REL * scale * (1 + 1e-12):
        cj = c + eps * eye
        try:
            lower = _cholesky(cj, lower=True)
        except np.linalg.LinAlgError:
            eps *= 10.0
            continue
        if record is not None:
            record.append(JitterEvent(model.family, c.shape[0], eps))
        return cj, lower, eps
    raise NotPositiveDefiniteError(
        f"covariance matrix (family '{model.family}', n={c.shape[0]}) is not "
        f"positive definite after jitter up to {_JITTER_MAX_REL:g} * sigma2")


def build_cov_matrix(locations: np.ndarray, model: CovarianceModel,
                     record: list | None = None) -> np.ndarray:
    """Assemble the n x n covariance matrix over locations, jittered if needed.

    Parameters
    ----------
    locations : (n, 2) array
        Cell coordinates (row, col).
    model : CovarianceModel
    record : list, optional
        JitterEvent entries are appended here whenever jitter was required.

    Returns
    -------
    (n, n) symmetric positive-definite matrix (the jittered matrix when
    jitter was needed, so the returned matrix always passes Cholesky).
    """
    locations = np.asarray(locations, dtype=np.float64)
    if locations.ndim != 2 or locations.shape[1] != 2 or locations.shape[0] < 1:
        raise ShapeError(f"locations must be (n, 2) with n >= 1, got {locations.shape}")
    c = pairwise_cov(model, locations, locations, add_nugget=True)
    c_final, _, _ = _chol_with_jitter(c, model, record)
    return c_final


def cov_matrix_cholesky(locations: np.ndarray, model: CovarianceModel,
                        record: list | None = None
                        ) -> tuple[np.ndarray, np.ndarray, float]:
    """Covariance matrix plus its lower Cholesky factor and applied jitter.

    Same contract as build_cov_matrix but also returns the factor so samplers
    do not factorize twice.
    """
    locations = np.asarray(locations, dtype=np.float64)
    if locations.ndim != 2 or locations.shape[1] != 2 or locations.shape[0] < 1:
        raise ShapeError(f"locations must be (n, 2) with n >= 1, got {locations.shape}")
    c = pairwise_cov(model, locations, locations, add_nugget=True)
    return _chol_with_jitter(c, model, record)
