"""Simulate random fields from every covariance family and render heatmaps.

Run from the repository root:

    python3 demos/01_simulate_fields.py

Writes one SVG per family into demos/out/.
"""

from pathlib import Path

import numpy as np

from fieldlab import (CovarianceModel, ParamFieldSpec, SimulationSpec,
                      field_to_svg, make_param_fields, sample_grf, save_svg)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

H = W = 32
PHI = 0.1 * 32  # range = 10% of the grid side

# ---------------------------------------------------------------------------
# Stationary families. Same seed everywhere so the panels differ only through
# their covariance structure.

models = {
    "exponential": CovarianceModel.exponential(1.0, PHI),
    "exponential_nugget": CovarianceModel.exponential_nugget(1.0, PHI, 0.3),
    "matern_nu15": CovarianceModel.matern(1.0, PHI, nu=1.5),
    "wave": CovarianceModel.wave(1.0, PHI),
}

for name, model in models.items():
    field = sample_grf(SimulationSpec(H, W, model, 0.0, seed=42))
    print(f"{name:20s} min {field.values.min():+.2f}  "
          f"max {field.values.max():+.2f}  "
          f"std {field.values.std():.2f}")
    save_svg(field_to_svg(field), OUT / f"field_{name}.svg")

# ---------------------------------------------------------------------------
# Nonstationary Matern: parameter fields vary smoothly over the grid, so the
# local range, anisotropy, and smoothness drift from corner to corner.

spec = ParamFieldSpec(phi_range=(2.0, 8.0), anis_ratio_range=(0.4, 1.0),
                      tilt_range=(0.0, np.pi / 2))
ns = make_param_fields(spec, (H, W))
model = CovarianceModel.nonstationary(ns)
field = sample_grf(SimulationSpec(H, W, model, 0.0, seed=42))
print(f"{'nonstationary':20s} min {field.values.min():+.2f}  "
      f"max {field.values.max():+.2f}  "
      f"std {field.values.std():.2f}")
save_svg(field_to_svg(field), OUT / "field_nonstationary.svg")

print(f"\nwrote {len(models) + 1} SVG heatmaps to {OUT}")
