"""Evaluation metrics: RMSE, MAE, Moran's I, and Moran's-I discrepancy.

RMSE and MAE are computed over an explicit evaluation mask (typically the
unobserved cells). Moran's I is the global spatial autocorrelation

    I = (N / W) * sum_ij w_ij (x_i - xbar)(x_j - xbar) / sum_i (x_i - xbar)^2

over a contiguity weight matrix w on the grid: rook (4-neighbor) or queen
(8-neighbor), either binary or row-standardized. Default is rook + binary.
The per-run Moran discrepancy is |I(pred) - I(truth)| on full fields; the
experiment harness aggregates it across runs (mean and standard deviation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError, UndefinedMetricError
from .grid import GridField, ObservationMask

__all__ = [
    "SpatialWeights",
    "rmse",
    "mae",
    "morans_i",
    "mi_discrepancy",
]

_ROOK_OFFSETS = ((-1, 0), (1, 0), (0, -1), (0, 1))
_QUEEN_OFFSETS = _ROOK_OFFSETS + ((-1, -1), (-1, 1), (1, -1), (1, 1))


@dataclass(frozen=True)
class SpatialWeights:
    """Contiguity weight scheme for Moran's I.

    scheme: "rook" (shared edges) or "queen" (edges + corners).
    normalization: "binary" (w_ij in {0,1}, symmetric) or "row" (each row of
    w sums to 1, so W = N).
    """

    scheme: str = "rook"
    normalization: str = "binary"

    def __post_init__(self):
        if self.scheme not in ("rook", "queen"):
            raise ParameterError(f"scheme must be 'rook' or 'queen', got '{self.scheme}'")
        if self.normalization not in ("binary", "row"):
            raise ParameterError(
                f"normalization must be 'binary' or 'row', got '{self.normalization}'")

    @property
    def offsets(self) -> tuple[tuple[int, int], ...]:
        return _ROOK_OFFSETS if self.scheme == "rook" else _QUEEN_OFFSETS


def _eval_values(pred: GridField, truth: GridField,
                 eval_mask: ObservationMask) -> tuple[np.ndarray, np.ndarray]:
    if (pred.height, pred.width) != (truth.height, truth.width):
        raise ShapeError(
            f"prediction shape {(pred.height, pred.width)} does not match "
            f"truth shape {(truth.height, truth.width)}")
    eval_mask.require_same_shape(truth)
    sel = eval_mask.bits.astype(bool)
    if not sel.any():
        raise UndefinedMetricError("evaluation mask selects no cells")
    return pred.values[sel], truth.values[sel]


def rmse(pred: GridField, truth: GridField, eval_mask: ObservationMask) -> float:
    """Root mean squared error over the cells selected by eval_mask."""
    p, t = _eval_values(pred, truth, eval_mask)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def mae(pred: GridField, truth: GridField, eval_mask: ObservationMask) -> float:
    """Mean absolute error over the cells selected by eval_mask."""
    p, t = _eval_values(pred, truth, eval_mask)
    return float(np.mean(np.abs(p - t)))


def _neighbor_degree(h: int, w: int, weights: SpatialWeights) -> np.ndarray:
    deg = np.zeros((h, w))
    for (di, dj) in weights.offsets:
        valid = np.ones((h, w))
        src = valid[max(di, 0): h + min(di, 0), max(dj, 0): w + min(dj, 0)]
        deg[max(-di, 0): h + min(-di, 0), max(-dj, 0): w + min(-dj, 0)] += src
    return deg


def _neighbor_sum(dev: np.ndarray, weights: SpatialWeights) -> np.ndarray:
    """For each cell, the sum of dev over its in-grid neighbors."""
    h, w = dev.shape
    out = np.zeros_like(dev)
    for (di, dj) in weights.offsets:
        src = dev[max(di, 0): h + min(di, 0), max(dj, 0): w + min(dj, 0)]
        out[max(-di, 0): h + min(-di, 0), max(-dj, 0): w + min(-dj, 0)] += src
    return out


def morans_i(field: GridField, weights: SpatialWeights = SpatialWeights()) -> float:
    """Global Moran's I of a grid field under the given contiguity weights.

    Raises UndefinedMetricError on constant fields (zero variance denominator).
    Invariant under translation and positive scaling of the field.
    """
    x = field.values
    n = x.size
    if n < 2:
        raise UndefinedMetricError("Moran's I needs at least 2 cells")
    dev = x - x.mean()
    denom = float((dev ** 2).sum())
    if denom == 0.0:
        raise UndefinedMetricError("Moran's I undefined on a constant field")
    nbr = _neighbor_sum(dev, weights)
    if weights.normalization == "binary":
        num = float((dev * nbr).sum())
        total_w = float(_neighbor_degree(field.height, field.width, weights).sum())
    else:  # row-standardized: w_ij = 1/deg_i, W = N
        deg = _neighbor_degree(field.height, field.width, weights)
        num = float((dev * nbr / deg).sum())
        total_w = float(n)
    return (n / total_w) * num / denom


def mi_discrepancy(pred: GridField, truth: GridField,
                   weights: SpatialWeights = SpatialWeights()) -> float:
    """Absolute Moran's-I discrepancy |I(pred) - I(truth)| on full fields."""
    return abs(morans_i(pred, weights) - morans_i(truth, weights))
