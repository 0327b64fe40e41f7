"""Benchmark harness: simulate, mask, predict, score, aggregate.

A plan spans a grid of experiment cells (range fraction x observed fraction)
with several runs per cell. Every run simulates a fresh truth field and a
fresh observation mask, hands the same masked data to each requested model,
and scores root mean squared error on the unobserved cells plus the
spatial-autocorrelation discrepancy on the full field. Rows come back in
plan order regardless of how many worker processes computed them, so the
emitted CSV is byte-stable.

Models:

* ``kriging``      ordinary kriging under the plan's stationary covariance;
                   under the nonstationary family it deliberately uses a
                   misspecified stationary exponential baseline.
* ``kriging_ns``   ordinary kriging under the true location-dependent
                   covariance (nonstationary plans only).
* ``ml_base``      standard-convolution network, mask as a second input
                   channel, trained on the masked objective alone.
* ``ml_vsl``       partial-convolution network with mask stream, trained
                   with the full adaptive smooth objective.
"""

from __future__ import annotations

import dataclasses
import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .covariance import (ALL_FAMILIES, CovarianceModel, StationaryParams)
from .errors import ConfigError, FieldLabError
from .grid import GridField, ObservationMask, sample_mask, split_mask
from .kriging import DEFAULT_MAX_GLOBAL, DEFAULT_NEIGHBORHOOD, ok_predict
from .metrics import SpatialWeights, mi_discrepancy, rmse
from .network import TrainConfig, UNetConfig, train_single_field
from .seeding import stable_seed
from .simulate import (ParamFieldSpec, SimulationSpec, make_param_fields,
                       sample_composite, sample_grf)

__all__ = [
    "MODEL_NAMES",
    "METRIC_NAMES",
    "ExperimentPlan",
    "ResultRow",
    "AggregateCell",
    "run_plan",
    "aggregate",
    "results_csv",
    "aggregate_table_md",
    "format_mean_std",
]

MODEL_NAMES = ("kriging", "kriging_ns", "ml_base", "ml_vsl")
METRIC_NAMES = ("rmse", "mi_rmse")


@dataclass(frozen=True)
class ExperimentPlan:
    """One benchmark sweep: family x phi_fractions x observed_fractions x runs.

    ``phi_fractions`` express the covariance range as a fraction of the
    longer grid side. The nonstationary family takes its ranges from
    ``ns_spec`` instead (absolute cell units); phi_fraction then only labels
    the cell and salts its seed. ``wave_phi_fraction`` (product family)
    defaults to the cell's own phi fraction when unset.
    """

    family: str = "exponential"
    phi_fractions: tuple[float, ...] = (0.1,)
    observed_fractions: tuple[float, ...] = (0.2, 0.5, 0.8)
    models: tuple[str, ...] = ("kriging",)
    runs: int = 1
    grid: tuple[int, int] = (32, 32)
    base_seed: int = 0
    sigma2: float = 1.0
    tau2: float = 0.0
    nu: float = 0.5
    mean: float = 0.0
    wave_phi_fraction: float | None = None
    composite_mode: str = "product"
    ns_spec: ParamFieldSpec | None = None
    ns_tau2: float = 0.0
    unet_vsl: UNetConfig = field(default_factory=lambda: UNetConfig(
        partial_conv=True, in_channels=1))
    unet_base: UNetConfig = field(default_factory=lambda: UNetConfig(
        partial_conv=False, in_channels=2))
    train: TrainConfig = field(default_factory=TrainConfig)
    weights: SpatialWeights = field(default_factory=SpatialWeights)
    eval_mode: str = "unobserved"
    heldout_train_fraction: float = 0.8
    kriging_max_global: int = DEFAULT_MAX_GLOBAL
    kriging_neighborhood: int = DEFAULT_NEIGHBORHOOD

    def __post_init__(self):
        if self.family not in ALL_FAMILIES:
            raise ConfigError(f"unknown covariance family '{self.family}'")
        if not self.models:
            raise ConfigError("plan needs at least one model")
        if len(set(self.models)) != len(self.models):
            raise ConfigError(f"duplicate models in {self.models}")
        for m in self.models:
            if m not in MODEL_NAMES:
                raise ConfigError(f"unknown model '{m}' (known: {MODEL_NAMES})")
        if "kriging_ns" in self.models and self.family != "nonstationary_matern":
            raise ConfigError(
                "kriging_ns needs the nonstationary family; under a stationary "
                "family it would be identical to kriging")
        if self.family == "nonstationary_matern" and self.ns_spec is None:
            raise ConfigError("nonstationary family needs ns_spec")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        h, w = self.grid
        if h < 2 or w < 2:
            raise ConfigError(f"grid must be at least 2x2, got {self.grid}")
        if not self.phi_fractions:
            raise ConfigError("phi_fractions must be nonempty")
        for f_ in self.phi_fractions:
            if f_ <= 0:
                raise ConfigError(f"phi fractions must be positive, got {f_}")
        if not self.observed_fractions:
            raise ConfigError("observed_fractions must be nonempty")
        for p in self.observed_fractions:
            if not 0 < p < 1:
                raise ConfigError(f"observed fractions must lie in (0,1), got {p}")
        if self.eval_mode not in ("unobserved", "heldout"):
            raise ConfigError(f"eval_mode must be unobserved|heldout, got '{self.eval_mode}'")
        if not 0 < self.heldout_train_fraction < 1:
            raise ConfigError("heldout_train_fraction must lie in (0,1)")
        if self.composite_mode not in ("product", "join"):
            raise ConfigError(f"composite_mode must be product|join, got '{self.composite_mode}'")

        seeds = {}
        for phi_f in self.phi_fractions:
            for p in self.observed_fractions:
                for r in range(self.runs):
                    s = self.cell_seed(phi_f, p, r)
                    if s in seeds:
                        raise ConfigError(
                            f"seed collision between cells {seeds[s]} and "
                            f"{(phi_f, p, r)}; change base_seed")
                    seeds[s] = (phi_f, p, r)

    def cell_seed(self, phi_fraction: float, observed_fraction: float,
                  run: int) -> int:
        return stable_seed(self.base_seed, self.family, phi_fraction,
                           observed_fraction, run)

    @property
    def side(self) -> int:
        return max(self.grid)

    def phi_cells(self, phi_fraction: float) -> float:
        return phi_fraction * self.side

    def n_rows(self) -> int:
        return (len(self.phi_fractions) * len(self.observed_fractions)
                * self.runs * len(self.models) * len(METRIC_NAMES))


@dataclass(frozen=True)
class ResultRow:
    """One scored (model, metric) outcome of one run.

    ``value`` is None exactly when ``status`` is a failure marker of the form
    ``failed:<ErrorType>``; successful rows carry status ``ok``.
    """

    model: str
    metric: str
    phi_fraction: float
    observed_fraction: float
    run: int
    value: float | None
    status: str = "ok"


def _truth_covariance(plan: ExperimentPlan, phi_fraction: float) -> CovarianceModel:
    phi = plan.phi_cells(phi_fraction)
    if plan.family == "exponential":
        return CovarianceModel.exponential(plan.sigma2, phi, plan.tau2)
    if plan.family == "exponential_nugget":
        return CovarianceModel.exponential_nugget(plan.sigma2, phi, plan.tau2)
    if plan.family == "matern":
        return CovarianceModel.matern(plan.sigma2, phi, plan.nu, plan.tau2)
    if plan.family == "wave":
        return CovarianceModel.wave(plan.sigma2, phi, plan.tau2)
    if plan.family == "product_exp_wave":
        wave_f = plan.wave_phi_fraction if plan.wave_phi_fraction is not None \
            else phi_fraction
        return CovarianceModel.product_exp_wave(
            StationaryParams(plan.sigma2, phi),
            StationaryParams(1.0, plan.phi_cells(wave_f)))
    nsf = make_param_fields(plan.ns_spec, plan.grid)
    return CovarianceModel.nonstationary(nsf, plan.ns_tau2)


def _simulate_truth(plan: ExperimentPlan, phi_fraction: float,
                    seed: int) -> GridField:
    h, w = plan.grid
    if plan.family == "product_exp_wave" and plan.composite_mode == "join":
        wave_f = plan.wave_phi_fraction if plan.wave_phi_fraction is not None \
            else phi_fraction
        return sample_composite(
            StationaryParams(plan.sigma2, plan.phi_cells(phi_fraction)),
            StationaryParams(1.0, plan.phi_cells(wave_f)),
            plan.grid, seed, mode="join")
    model = _truth_covariance(plan, phi_fraction)
    if plan.family == "nonstationary_matern":
        mean = GridField(model.ns_field.mean_values())
        return sample_grf(SimulationSpec(h, w, model, mean, seed))
    return sample_grf(SimulationSpec(h, w, model, plan.mean, seed))


def _kriging_covariance(plan: ExperimentPlan, phi_fraction: float,
                        model_name: str) -> CovarianceModel:
    if model_name == "kriging_ns":
        return _truth_covariance(plan, phi_fraction)
    if plan.family == "nonstationary_matern":
        # Deliberately misspecified stationary baseline: exponential with the
        # anisotropy ramp's midpoint range and unit variance.
        lo, hi = plan.ns_spec.phi_range
        return CovarianceModel.exponential(1.0, (lo + hi) / 2.0, plan.ns_tau2)
    return _truth_covariance(plan, phi_fraction)


def _predict(plan: ExperimentPlan, model_name: str, phi_fraction: float,
             truth: GridField, mask: ObservationMask, cell_seed: int) -> GridField:
    if model_name in ("kriging", "kriging_ns"):
        cov = _kriging_covariance(plan, phi_fraction, model_name)
        pred = ok_predict(truth, mask, cov,
                          max_global=plan.kriging_max_global,
                          neighborhood=plan.kriging_neighborhood)
        return pred.field
    cfg = plan.unet_vsl if model_name == "ml_vsl" else plan.unet_base
    # ml_base trains on the masked objective alone; only ml_vsl adds the
    # decayed smoothness terms.
    omega0 = plan.train.omega0 if model_name == "ml_vsl" else 0.0
    train = dataclasses.replace(
        plan.train, omega0=omega0,
        seed=stable_seed(cell_seed, "train", model_name))
    return train_single_field(truth, mask, cfg, train).prediction


def _run_cell(plan: ExperimentPlan, phi_fraction: float,
              observed_fraction: float, run: int) -> list[ResultRow]:
    """All rows of one (phi, observed, run) cell, in model x metric order."""
    cell_seed = plan.cell_seed(phi_fraction, observed_fraction, run)
    h, w = plan.grid

    def rows_for(model_name: str, values: dict[str, float | None],
                 status: dict[str, str]) -> list[ResultRow]:
        return [ResultRow(model_name, metric, phi_fraction, observed_fraction,
                          run, values[metric], status[metric])
                for metric in METRIC_NAMES]

    try:
        truth = _simulate_truth(plan, phi_fraction, stable_seed(cell_seed, "field"))
        mask = sample_mask(h, w, observed_fraction, stable_seed(cell_seed, "mask"))
        if plan.eval_mode == "heldout":
            fit_mask, eval_mask = split_mask(
                mask, plan.heldout_train_fraction, stable_seed(cell_seed, "split"))
        else:
            fit_mask, eval_mask = mask, mask.complement()
    except FieldLabError as exc:
        failure = f"failed:{type(exc).__name__}"
        return [row for m in plan.models
                for row in rows_for(m, dict.fromkeys(METRIC_NAMES),
                                    dict.fromkeys(METRIC_NAMES, failure))]

    out: list[ResultRow] = []
    for model_name in plan.models:
        values: dict[str, float | None] = dict.fromkeys(METRIC_NAMES)
        status = dict.fromkeys(METRIC_NAMES, "ok")
        try:
            pred = _predict(plan, model_name, phi_fraction, truth, fit_mask,
                            cell_seed)
        except FieldLabError as exc:
            failure = f"failed:{type(exc).__name__}"
            status = dict.fromkeys(METRIC_NAMES, failure)
            out.extend(rows_for(model_name, values, status))
            continue
        try:
            values["rmse"] = rmse(pred, truth, eval_mask)
        except FieldLabError as exc:
            status["rmse"] = f"failed:{type(exc).__name__}"
        try:
            values["mi_rmse"] = mi_discrepancy(pred, truth, plan.weights)
        except FieldLabError as exc:
            status["mi_rmse"] = f"failed:{type(exc).__name__}"
        out.extend(rows_for(model_name, values, status))
    return out


def _run_cell_star(args) -> list[ResultRow]:
    return _run_cell(*args)


def run_plan(plan: ExperimentPlan, jobs: int = 1) -> list[ResultRow]:
    """Execute every cell of the plan and return rows in plan order.

    ``jobs`` > 1 distributes cells over worker processes; results are
    gathered back in plan order, so the output is identical for any job
    count. jobs=1 runs inline and is the byte-reproducibility reference.
    """
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    tasks = [(plan, phi_f, p, r)
             for phi_f in plan.phi_fractions
             for p in plan.observed_fractions
             for r in range(plan.runs)]
    if jobs == 1:
        per_cell = [_run_cell(*t) for t in tasks]
    else:
        with multiprocessing.Pool(processes=jobs) as pool:
            per_cell = pool.map(_run_cell_star, tasks)
    return [row for rows in per_cell for row in rows]


@dataclass(frozen=True)
class AggregateCell:
    """Mean +/- sample standard deviation of one (model, metric, cell) group."""

    model: str
    metric: str
    phi_fraction: float
    observed_fraction: float
    n_ok: int
    n_failed: int
    mean: float | None
    std: float | None

    @property
    def display(self) -> str:
        if self.n_ok == 0:
            return f"— ({self.n_failed} failed)"
        return format_mean_std(self.mean, self.std)


def format_mean_std(mean: float, std: float) -> str:
    return f"{mean:.3f} ± {std:.2f}"


def aggregate(rows: list[ResultRow]) -> list[AggregateCell]:
    """Collapse runs to mean ± sample std (n-1) per (model, metric, cell).

    Order-independent: any permutation of the same rows aggregates to the
    identical cell list (sorted by model, metric, phi, observed fraction).
    A single successful run reports std 0. Cells whose runs all failed keep
    mean/std None and display as an em-dash with the failure count.
    """
    groups: dict[tuple, list[float]] = {}
    failures: dict[tuple, int] = {}
    for row in rows:
        key = (row.model, row.metric, row.phi_fraction, row.observed_fraction)
        groups.setdefault(key, [])
        failures.setdefault(key, 0)
        if row.status == "ok":
            groups[key].append(row.value)
        else:
            failures[key] += 1
    cells = []
    for key in sorted(groups):
        vals = groups[key]
        if vals:
            mean = sum(vals) / len(vals)
            std = math.sqrt(sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) \
                if len(vals) > 1 else 0.0
        else:
            mean = std = None
        cells.append(AggregateCell(
            model=key[0], metric=key[1], phi_fraction=key[2],
            observed_fraction=key[3], n_ok=len(vals), n_failed=failures[key],
            mean=mean, std=std))
    return cells


def results_csv(rows: list[ResultRow]) -> str:
    """Per-run rows as CSV text (deterministic formatting, %.17g values)."""
    lines = ["model,metric,phi_fraction,observed_fraction,run,value,status"]
    for r in rows:
        value = "" if r.value is None else f"{r.value:.17g}"
        lines.append(f"{r.model},{r.metric},{r.phi_fraction:g},"
                     f"{r.observed_fraction:g},{r.run},{value},{r.status}")
    return "\n".join(lines) + "\n"


def aggregate_table_md(cells: list[AggregateCell]) -> str:
    """Markdown tables, one per (metric, phi_fraction): models x observed %."""
    out: list[str] = []
    combos = sorted({(c.metric, c.phi_fraction) for c in cells})
    for metric, phi_f in combos:
        subset = [c for c in cells if c.metric == metric and c.phi_fraction == phi_f]
        fracs = sorted({c.observed_fraction for c in subset})
        models = sorted({c.model for c in subset})
        out.append(f"### {metric}, range fraction {phi_f:g}\n")
        out.append("| model | " + " | ".join(f"{p:.0%} observed" for p in fracs) + " |")
        out.append("|" + "---|" * (len(fracs) + 1))
        lookup = {(c.model, c.observed_fraction): c for c in subset}
        for m in models:
            row = [lookup[(m, p)].display if (m, p) in lookup else ""
                   for p in fracs]
            out.append(f"| {m} | " + " | ".join(row) + " |")
        out.append("")
    out.append("Aggregates are mean ± sample standard deviation (n−1) over runs.")
    return "\n".join(out) + "\n"
