"""Regular grids, observation masks, sampling protocols, and rasterization.

The spatial domain is a regular H x W grid of unit-square cells indexed
row-major, row i in 1..H and column j in 1..W (stored 0-based internally).
A GridField holds one real value per cell; an ObservationMask marks the
subset of cells whose values are observed. Scattered point data enters the
grid world through rasterize_points, which sums point values per cell.

File formats
------------
Grid CSV   : H rows by W comma-separated decimal values, no header. The NaN
             literal is forbidden; fields are finite by invariant.
Mask CSV   : same layout with entries 0 or 1.
Points CSV : header ``x,y,value``, one observation per row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, MaskError, ParameterError, ShapeError

__all__ = [
    "GridField",
    "ObservationMask",
    "SplitSpec",
    "PointObservation",
    "RasterizeResult",
    "sample_mask",
    "split_mask",
    "rasterize_points",
    "grid_locations",
    "read_grid_csv",
    "write_grid_csv",
    "read_mask_csv",
    "write_mask_csv",
    "read_points_csv",
    "write_points_csv",
]

# Shortest decimal representation that round-trips IEEE doubles.
_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class GridField:
    """An H x W array of finite real values with coordinate metadata.

    Parameters
    ----------
    values : array_like, shape (H, W)
        Field values, row-major. Coerced to float64.
    cell_size : float
        World units per cell side (default 1.0).
    origin : (float, float)
        World coordinates of the center of cell (1, 1).
    """

    values: np.ndarray
    cell_size: float = 1.0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise ShapeError(f"grid values must be 2-D, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            bad = int(np.count_nonzero(~np.isfinite(vals)))
            raise ParameterError(f"grid contains {bad} non-finite value(s)")
        if not float(self.cell_size) > 0:
            raise ParameterError(f"cell_size must be positive, got {self.cell_size}")
        object.__setattr__(self, "values", vals)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def n_cells(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ObservationMask:
    """Binary H x W array marking observed cells (1 = observed)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ShapeError(f"mask must be 2-D, got shape {bits.shape}")
        if not np.isin(bits, (0, 1)).all():
            raise MaskError("mask entries must all be 0 or 1")
        object.__setattr__(self, "bits", bits.astype(np.uint8))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def count(self) -> int:
        """Number of observed cells."""
        return int(self.bits.sum())

    def complement(self) -> "ObservationMask":
        return ObservationMask(1 - self.bits)

    def observed_flat_indices(self) -> np.ndarray:
        """Row-major flat indices of observed cells, ascending."""
        return np.flatnonzero(self.bits.ravel())

    def require_same_shape(self, field: GridField) -> None:
        if (self.height, self.width) != (field.height, field.width):
            raise ShapeError(
                f"mask shape {(self.height, self.width)} does not match "
                f"field shape {(field.height, field.width)}"
            )


@dataclass(frozen=True)
class SplitSpec:
    """Subsample-then-split protocol for observation masks.

    subsample_fraction selects which share of observed cells is kept as
    available data; train_fraction then applies to that subsample, not to
    the full grid.
    """

    subsample_fraction: float = 1.0
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        for name in ("subsample_fraction", "train_fraction"):
            v = getattr(self, name)
            if not 0.0 <= float(v) <= 1.0:
                raise ParameterError(f"{name} must be within [0, 1], got {v}")


@dataclass(frozen=True)
class PointObservation:
    """A scattered observation at world coordinates (x, y)."""

    x: float
    y: float
    value: float

    def __post_init__(self):
        for name in ("x", "y", "value"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ParameterError(f"point {name} must be finite, got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class RasterizeResult:
    """Output of rasterize_points: summed cell values, hit mask, skip count."""

    field: GridField
    mask: ObservationMask
    n_ignored: int


def grid_locations(h: int, w: int) -> np.ndarray:
    """Cell-center coordinates (row, col) of every cell, row-major, shape (h*w, 2).

    Distances between cells are Euclidean in cell units, so only coordinate
    differences matter; 0-based centers are used.
    """
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64),
                             np.arange(w, dtype=np.float64), indexing="ij")
    return np.column_stack([rows.ravel(), cols.ravel()])


def sample_mask(h: int, w: int, fraction: float, seed: int) -> ObservationMask:
    """Sample a mask with exactly round(fraction*h*w) observed cells.

    Cells are chosen uniformly without replacement; the count is fixed
    (not a per-cell Bernoulli draw) so observed totals are assertable and
    run-to-run variance matches a fixed-count protocol. Deterministic in seed.
    """
    if h < 1 or w < 1:
        raise ParameterError(f"grid dims must be positive, got {h}x{w}")
    if not 0.0 <= float(fraction) <= 1.0:
        raise ParameterError(f"fraction must be within [0, 1], got {fraction}")
    n = h * w
    count = int(round(float(fraction) * n))
    rng = np.random.default_rng(np.uint64(seed))
    chosen = rng.permutation(n)[:count]
    bits = np.zeros(n, dtype=np.uint8)
    bits[chosen] = 1
    return ObservationMask(bits.reshape(h, w))


def split_mask(mask: ObservationMask, train_fraction: float,
               seed: int) -> tuple[ObservationMask, ObservationMask]:
    """Partition a mask's observed cells into disjoint train / test masks.

    |train| = round(train_fraction * |mask|); train and test are disjoint and
    their union is the input mask. Deterministic in seed.
    """
    if not 0.0 < float(train_fraction) < 1.0:
        raise ParameterError(
            f"train_fraction must be strictly inside (0, 1), got {train_fraction}")
    obs = mask.observed_flat_indices()
    if obs.size < 2:
        raise InsufficientDataError(
            f"need at least 2 observed cells to split, got {obs.size}")
    n_train = int(round(float(train_fraction) * obs.size))
    rng = np.random.default_rng(np.uint64(seed))
    perm = rng.permutation(obs.size)
    train_idx = obs[perm[:n_train]]
    test_idx = obs[perm[n_train:]]
    shape = (mask.height, mask.width)
    train = np.zeros(mask.bits.size, dtype=np.uint8)
    test = np.zeros(mask.bits.size, dtype=np.uint8)
    train[train_idx] = 1
    test[test_idx] = 1
    return ObservationMask(train.reshape(shape)), ObservationMask(test.reshape(shape))


def rasterize_points(points: list[PointObservation], h: int, w: int,
                     bbox: tuple[float, float, float, float]) -> RasterizeResult:
    """Aggregate scattered points onto an h x w grid by summation.

    bbox = (xmin, ymin, xmax, ymax). Column index grows with x, row index
    with y. A point exactly on an interior cell boundary lands in the
    larger-index cell (the floor rule below); points exactly on the bbox max
    edge belong to the last cell. Points outside the bbox are ignored and
    counted in the result. An empty point list yields an all-zero mask.
    """
    if h < 1 or w < 1:
        raise ParameterError(f"grid dims must be positive, got {h}x{w}")
    xmin, ymin, xmax, ymax = (float(v) for v in bbox)
    if not (xmax > xmin and ymax > ymin):
        raise ParameterError(f"bbox must have positive extent, got {bbox}")
    dx = (xmax - xmin) / w
    dy = (ymax - ymin) / h
    per_cell: dict[tuple[int, int], list[float]] = {}
    ignored = 0
    for p in points:
        if not (xmin <= p.x <= xmax and ymin <= p.y <= ymax):
            ignored += 1
            continue
        col = w - 1 if p.x == xmax else int(np.floor((p.x - xmin) / dx))
        row = h - 1 if p.y == ymax else int(np.floor((p.y - ymin) / dy))
        # Float roundoff can nudge an in-bbox point across the last boundary.
        col = min(col, w - 1)
        row = min(row, h - 1)
        per_cell.setdefault((row, col), []).append(p.value)
    sums = np.zeros((h, w), dtype=np.float64)
    hit = np.zeros((h, w), dtype=np.uint8)
    for (row, col), vals in per_cell.items():
        # summing in sorted order makes the result independent of the
        # point-list permutation despite float non-associativity
        sums[row, col] = float(np.sum(np.sort(np.asarray(vals))))
        hit[row, col] = 1
    field = GridField(sums, cell_size=dx, origin=(xmin + dx / 2, ymin + dy / 2))
    return RasterizeResult(field, ObservationMask(hit), ignored)


# ---------------------------------------------------------------------------
# File I/O


def write_grid_csv(field: GridField, path: str | Path) -> None:
    np.savetxt(path, field.values, fmt=_FLOAT_FMT, delimiter=",")


def read_grid_csv(path: str | Path) -> GridField:
    try:
        vals = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise ParameterError(f"cannot parse grid CSV {path}: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise ParameterError(
            f"grid CSV {path} contains non-finite entries (NaN literal is forbidden)")
    return GridField(vals)


def write_mask_csv(mask: ObservationMask, path: str | Path) -> None:
    np.savetxt(path, mask.bits, fmt="%d", delimiter=",")


def read_mask_csv(path: str | Path) -> ObservationMask:
    try:
        bits = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise ParameterError(f"cannot parse mask CSV {path}: {exc}") from exc
    if not np.isin(bits, (0.0, 1.0)).all():
        raise MaskError(f"mask CSV {path} has entries other than 0/1")
    return ObservationMask(bits.astype(np.uint8))


def read_points_csv(path: str | Path) -> list[PointObservation]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header] != ["x", "y", "value"]:
            raise ParameterError(
                f"points CSV {path} must start with header 'x,y,value', got {header}")
        points = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParameterError(
                    f"points CSV {path} line {lineno}: expected 3 columns, got {len(row)}")
            try:
                points.append(PointObservation(float(row[0]), float(row[1]), float(row[2])))
            except (ValueError, ParameterError) as exc:
                raise ParameterError(f"points CSV {path} line {lineno}: {exc}") from exc
    return points


def write_points_csv(points: list[PointObservation], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "value"])
        for p in points:
            writer.writerow([_FLOAT_FMT % p.x, _FLOAT_FMT % p.y, _FLOAT_FMT % p.value])
