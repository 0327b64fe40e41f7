import numpy as np
import pytest

from fieldlab.errors import ConfigError
from fieldlab.harness import (METRIC_NAMES, AggregateCell, ExperimentPlan,
                              ResultRow, aggregate, aggregate_table_md,
                              format_mean_std, results_csv, run_plan)
from fieldlab.network import TrainConfig, UNetConfig


def kriging_plan(**kw):
    defaults = dict(family="exponential", phi_fractions=(0.1,),
                    observed_fractions=(0.5,), models=("kriging",),
                    runs=1, grid=(8, 8), base_seed=11)
    defaults.update(kw)
    return ExperimentPlan(**defaults)


def test_single_cell_row_count_and_order():
    rows = run_plan(kriging_plan())
    assert len(rows) == 2
    assert [r.metric for r in rows] == list(METRIC_NAMES)
    assert all(r.model == "kriging" and r.status == "ok" for r in rows)
    assert all(r.value is not None for r in rows)


def test_identical_plan_identical_rows():
    plan = kriging_plan(runs=2, observed_fractions=(0.3, 0.6))
    assert run_plan(plan) == run_plan(plan)


def test_n_rows_accounting():
    plan = kriging_plan(phi_fractions=(0.1, 0.3), observed_fractions=(0.2, 0.5),
                        runs=3)
    rows = run_plan(plan)
    assert len(rows) == plan.n_rows() == 2 * 2 * 3 * 1 * 2


def test_plan_validation():
    with pytest.raises(ConfigError):
        kriging_plan(models=())
    with pytest.raises(ConfigError):
        kriging_plan(models=("kriging", "kriging"))
    with pytest.raises(ConfigError):
        kriging_plan(models=("gradient_boost",))
    with pytest.raises(ConfigError):
        kriging_plan(family="cubic")
    with pytest.raises(ConfigError):
        kriging_plan(runs=0)
    with pytest.raises(ConfigError):
        kriging_plan(observed_fractions=(1.5,))
    with pytest.raises(ConfigError):
        kriging_plan(phi_fractions=())
    with pytest.raises(ConfigError):
        kriging_plan(eval_mode="loocv")
    with pytest.raises(ConfigError):
        kriging_plan(models=("kriging_ns",))  # needs nonstationary family


def test_cell_seeds_distinct():
    plan = kriging_plan(phi_fractions=(0.1, 0.3), observed_fractions=(0.2, 0.8),
                        runs=4)
    seeds = {plan.cell_seed(f, p, r)
             for f in plan.phi_fractions
             for p in plan.observed_fractions
             for r in range(plan.runs)}
    assert len(seeds) == 2 * 2 * 4


def test_failed_cells_keep_rows():
    # a constant truth field makes Moran's I undefined on the prediction
    # comparison only if prediction is constant too; instead force failure
    # with an observed fraction so small the mask is empty
    plan = kriging_plan(grid=(3, 3), observed_fractions=(0.01,))
    rows = run_plan(plan)
    assert len(rows) == 2
    assert all(r.status.startswith("failed:") for r in rows)
    assert all(r.value is None for r in rows)
    assert rows[0].status == "failed:InsufficientDataError"


def test_heldout_eval_mode_runs():
    rows = run_plan(kriging_plan(eval_mode="heldout",
                                 heldout_train_fraction=0.8,
                                 observed_fractions=(0.6,)))
    assert all(r.status == "ok" for r in rows)


def test_results_csv_shape():
    text = results_csv(run_plan(kriging_plan()))
    lines = text.strip().split("\n")
    assert lines[0] == "model,metric,phi_fraction,observed_fraction,run,value,status"
    assert len(lines) == 3
    assert lines[1].startswith("kriging,rmse,0.1,0.5,0,")
    assert lines[1].endswith(",ok")


def test_results_csv_failure_rows_have_empty_value():
    row = ResultRow("kriging", "rmse", 0.1, 0.5, 0, None,
                    "failed:UndefinedMetricError")
    text = results_csv([row])
    assert ",,failed:UndefinedMetricError" in text


def test_aggregate_mean_std():
    rows = [ResultRow("kriging", "rmse", 0.1, 0.5, r, v)
            for r, v in enumerate([1.0, 3.0])]
    (cell,) = aggregate(rows)
    assert cell.mean == pytest.approx(2.0)
    assert cell.std == pytest.approx(np.std([1.0, 3.0], ddof=1))
    assert cell.display == "2.000 ± 1.41"


def test_aggregate_single_run_std_zero():
    (cell,) = aggregate([ResultRow("kriging", "rmse", 0.1, 0.5, 0, 0.7)])
    assert cell.std == 0.0
    assert cell.display == "0.700 ± 0.00"


def test_aggregate_order_independent():
    rows = [ResultRow("kriging", m, f, p, r, 0.5 + r)
            for m in METRIC_NAMES for f in (0.1, 0.3) for p in (0.2,)
            for r in range(3)]
    assert aggregate(rows) == aggregate(rows[::-1])


def test_aggregate_all_failed_cell():
    rows = [ResultRow("kriging", "rmse", 0.1, 0.5, r, None,
                      "failed:UndefinedMetricError") for r in range(3)]
    (cell,) = aggregate(rows)
    assert cell.n_ok == 0 and cell.n_failed == 3
    assert cell.mean is None and cell.std is None
    assert "—" in cell.display and "3 failed" in cell.display


def test_aggregate_mixed_failures_use_ok_runs_only():
    rows = [ResultRow("kriging", "rmse", 0.1, 0.5, 0, 1.0),
            ResultRow("kriging", "rmse", 0.1, 0.5, 1, None, "failed:X"),
            ResultRow("kriging", "rmse", 0.1, 0.5, 2, 3.0)]
    (cell,) = aggregate(rows)
    assert cell.n_ok == 2 and cell.n_failed == 1
    assert cell.mean == pytest.approx(2.0)


def test_format_mean_std():
    assert format_mean_std(0.585, 0.0449) == "0.585 ± 0.04"
    assert format_mean_std(2.0, 1.4142135) == "2.000 ± 1.41"


def test_aggregate_table_contains_cells():
    rows = run_plan(kriging_plan(runs=2, observed_fractions=(0.3, 0.6)))
    table = aggregate_table_md(aggregate(rows))
    assert "| kriging |" in table
    assert "30% observed" in table and "60% observed" in table
    assert "rmse" in table and "mi_rmse" in table


def test_ml_model_in_plan_smoke():
    # tiny net, tiny grid, few iterations: exercises the ml path end to end
    plan = kriging_plan(
        grid=(8, 8), observed_fractions=(0.5,), models=("kriging", "ml_vsl"),
        unet_vsl=UNetConfig(depth=1, base_channels=2, partial_conv=True,
                            in_channels=1),
        train=TrainConfig(iterations=3, gauss_k=3, blur_k=3))
    rows = run_plan(plan)
    assert len(rows) == 4
    assert {r.model for r in rows} == {"kriging", "ml_vsl"}
    assert all(r.status == "ok" for r in rows)


def test_jobs_validation():
    with pytest.raises(ConfigError):
        run_plan(kriging_plan(), jobs=0)
