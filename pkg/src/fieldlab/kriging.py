"""Ordinary kriging with known covariance parameters.

The predictor at target s0 is the BLUP sum(lambda_i * Z(s_i)) whose weights
solve the bordered system

    [ C   1 ] [ lambda ]   [ c0 ]
    [ 1^T 0 ] [ mu     ] = [ 1  ]

with C the observation covariance matrix (nugget on its diagonal) and c0 the
target-to-observation covariance vector (nugget-free, so a nugget screens the
observations instead of being reproduced). The unbiasedness row forces the
weights to sum to one; the Lagrange multiplier mu is internal bookkeeping.

The bordered matrix is factorized once (LU) and reused for the right-hand
sides of every grid cell: O(n^3 + N n^2) for n observations and N targets.
Above ``max_global`` observations the solver switches to a local k-nearest-
neighbor system per target (k = ``neighborhood``), which keeps dense grids
like a 128 x 128 case study tractable.

Both stationary families and the non-stationary Matern model go through the
same system; only the covariance evaluations differ.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.spatial import cKDTree

from .covariance import CovarianceModel, build_cov_matrix, pairwise_cov
from .errors import InsufficientDataError, SolverError
from .grid import GridField, ObservationMask, grid_locations

__all__ = [
    "KrigingSystem",
    "KrigingPrediction",
    "build_kriging_system",
    "ok_predict",
    "DEFAULT_MAX_GLOBAL",
    "DEFAULT_NEIGHBORHOOD",
]

DEFAULT_MAX_GLOBAL = 4096
DEFAULT_NEIGHBORHOOD = 64


@dataclass
class KrigingSystem:
    """The assembled global OK system for one (field, mask, model) triple."""

    obs_locations: np.ndarray   # (n, 2) cell coordinates
    obs_values: np.ndarray      # (n,)
    cov: CovarianceModel
    augmented_matrix: np.ndarray  # (n+1, n+1): [[C, 1], [1^T, 0]]


@dataclass
class KrigingPrediction:
    """Predictions at all cells plus the worst unbiasedness residual."""

    field: GridField
    weights_sum_check: float   # max |sum(lambda) - 1| over all targets


def _observations(field: GridField, mask: ObservationMask) -> tuple[np.ndarray, np.ndarray]:
    mask.require_same_shape(field)
    idx = mask.observed_flat_indices()
    if idx.size < 2:
        raise InsufficientDataError(
            f"ordinary kriging needs at least 2 observations, got {idx.size}")
    locs = grid_locations(field.height, field.width)[idx]
    vals = field.values.ravel()[idx]
    return locs, vals


def build_kriging_system(field: GridField, mask: ObservationMask,
                         cov: CovarianceModel,
                         record: list | None = None) -> KrigingSystem:
    """Assemble the bordered (n+1) x (n+1) OK matrix over observed cells."""
    locs, vals = _observations(field, mask)
    n = locs.shape[0]
    c = build_cov_matrix(locs, cov, record)
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = c
    aug[:n, n] = 1.0
    aug[n, :n] = 1.0
    return KrigingSystem(locs, vals, cov, aug)


def ok_predict(field: GridField, mask: ObservationMask, cov: CovarianceModel,
               max_global: int = DEFAULT_MAX_GLOBAL,
               neighborhood: int = DEFAULT_NEIGHBORHOOD,
               record: list | None = None) -> KrigingPrediction:
    """Ordinary-kriging prediction at every grid cell.

    Uses the global system (single factorization, one solve per target
    right-hand side) when the observation count is at most ``max_global``,
    otherwise a k-nearest-neighbor local system with k = ``neighborhood``.
    With tau2 = 0 the prediction at an observed cell reproduces the
    observation to solver precision; weights always sum to 1 (the returned
    weights_sum_check is the worst deviation).
    """
    locs, vals = _observations(field, mask)
    n = locs.shape[0]
    targets = grid_locations(field.height, field.width)
    if n <= max_global:
        pred, check = _predict_global(field, mask, cov, targets, record)
    else:
        pred, check = _predict_local(locs, vals, cov, targets,
                                     min(neighborhood, n), record)
    return KrigingPrediction(
        GridField(pred.reshape(field.height, field.width),
                  cell_size=field.cell_size, origin=field.origin),
        check)


def _predict_global(field: GridField, mask: ObservationMask, cov: CovarianceModel,
                    targets: np.ndarray, record: list | None) -> tuple[np.ndarray, float]:
    system = build_kriging_system(field, mask, cov, record)
    n = system.obs_values.size
    try:
        factor = lu_factor(system.augmented_matrix)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"kriging system singular after jitter: {exc}") from exc
    rhs = np.empty((n + 1, targets.shape[0]))
    rhs[:n] = pairwise_cov(cov, system.obs_locations, targets, add_nugget=False)
    rhs[n] = 1.0
    weights = lu_solve(factor, rhs)
    check = float(np.max(np.abs(weights[:n].sum(axis=0) - 1.0)))
    if not np.all(np.isfinite(weights)):
        raise SolverError("kriging solve produced non-finite weights")
    pred = weights[:n].T @ system.obs_values
    return pred, check


def _predict_local(locs: np.ndarray, vals: np.ndarray, cov: CovarianceModel,
                   targets: np.ndarray, k: int,
                   record: list | None) -> tuple[np.ndarray, float]:
    tree = cKDTree(locs)
    _, nbrs = tree.query(targets, k=k)
    nbrs = np.atleast_2d(nbrs)
    pred = np.empty(targets.shape[0])
    worst = 0.0
    for t in range(targets.shape[0]):
        idx = nbrs[t]
        sub_locs = locs[idx]
        c = build_cov_matrix(sub_locs, cov, record)
        aug = np.zeros((k + 1, k + 1))
        aug[:k, :k] = c
        aug[:k, k] = 1.0
        aug[k, :k] = 1.0
        rhs = np.empty(k + 1)
        rhs[:k] = pairwise_cov(cov, sub_locs, targets[t:t + 1], add_nugget=False)[:, 0]
        rhs[k] = 1.0
        try:
            sol = np.linalg.solve(aug, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                f"local kriging system singular at target {t}: {exc}") from exc
        worst = max(worst, abs(float(sol[:k].sum()) - 1.0))
        pred[t] = sol[:k] @ vals[idx]
    if not np.isfinite(pred).all():
        raise SolverError("local kriging produced non-finite predictions")
    return pred, worst
