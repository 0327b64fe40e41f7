import math

import numpy as np
import pytest

from fieldlab.covariance import (AnisotropyField, CovarianceModel,
                                 NonstationaryField, StationaryParams,
                                 cov_exponential)
from fieldlab.errors import InsufficientDataError
from fieldlab.grid import (GridField, ObservationMask, grid_locations,
                           sample_mask)
from fieldlab.kriging import ok_predict
from fieldlab.simulate import SimulationSpec, sample_grf

from oracles import brute_force_ok


def exp_model(sigma2=1.0, phi=2.0, tau2=0.0):
    if tau2 > 0:
        return CovarianceModel.exponential_nugget(sigma2, phi, tau2)
    return CovarianceModel.exponential(sigma2, phi)


def mask_from_cells(h, w, cells):
    bits = np.zeros((h, w))
    for i, j in cells:
        bits[i, j] = 1.0
    return ObservationMask(bits)


def test_single_observation_rejected():
    field = GridField(np.zeros((4, 4)))
    mask = mask_from_cells(4, 4, [(0, 0)])
    with pytest.raises(InsufficientDataError):
        ok_predict(field, mask, exp_model())


def test_two_equal_observations_constant_prediction():
    vals = np.zeros((4, 4))
    vals[0, 0] = vals[3, 3] = 5.0
    field = GridField(vals)
    mask = mask_from_cells(4, 4, [(0, 0), (3, 3)])
    pred = ok_predict(field, mask, exp_model())
    np.testing.assert_allclose(pred.field.values, 5.0, atol=1e-8)
    assert pred.weights_sum_check <= 1e-8


def test_midpoint_of_two_observations_is_their_mean():
    vals = np.zeros((1, 5))
    vals[0, 0], vals[0, 4] = 2.0, 6.0
    field = GridField(vals)
    mask = mask_from_cells(1, 5, [(0, 0), (0, 4)])
    pred = ok_predict(field, mask, exp_model())
    assert pred.field.values[0, 2] == pytest.approx(4.0, abs=1e-10)


def test_matches_brute_force_oracle_5x5():
    rng = np.random.default_rng(0)
    p = StationaryParams(1.0, 2.0)
    model = exp_model(1.0, 2.0)
    cells = [(0, 1), (2, 3), (4, 0)]
    vals = np.zeros((5, 5))
    for i, j in cells:
        vals[i, j] = rng.standard_normal()
    field = GridField(vals)
    mask = mask_from_cells(5, 5, cells)
    pred = ok_predict(field, mask, model)

    obs_locs = [(float(i + 1), float(j + 1)) for i, j in cells]
    obs_vals = np.array([vals[i, j] for i, j in cells])
    targets = [(float(i + 1), float(j + 1)) for i in range(5) for j in range(5)]

    def cov_fn(a, b, on_diag):
        h = math.hypot(a[0] - b[0], a[1] - b[1])
        return cov_exponential(h, p)

    want, wsum = brute_force_ok(obs_locs, obs_vals, targets, cov_fn)
    np.testing.assert_allclose(pred.field.values.ravel(), want, atol=1e-8)
    np.testing.assert_allclose(wsum, 1.0, atol=1e-8)


def test_exactness_without_nugget():
    rng = np.random.default_rng(1)
    field = sample_grf(SimulationSpec(8, 8, exp_model(), 0.0, 3))
    mask = sample_mask(8, 8, 0.5, 4)
    pred = ok_predict(field, mask, exp_model())
    obs = mask.bits.astype(bool)
    assert np.max(np.abs(pred.field.values[obs] - field.values[obs])) <= 1e-6
    assert pred.weights_sum_check <= 1e-8


def test_nugget_screening_smooths_observations():
    field = sample_grf(SimulationSpec(8, 8, exp_model(tau2=0.3), 0.0, 5))
    mask = sample_mask(8, 8, 0.5, 6)
    pred = ok_predict(field, mask, exp_model(tau2=0.3))
    obs = mask.bits.astype(bool)
    # with a nugget the predictor is NOT exact at data points
    assert np.max(np.abs(pred.field.values[obs] - field.values[obs])) > 1e-6
    assert pred.weights_sum_check <= 1e-8


def test_permutation_invariance_of_observations():
    # prediction depends on the observation SET, not the order the mask
    # enumerates it; compare two fields whose unobserved cells differ
    rng = np.random.default_rng(2)
    vals = rng.standard_normal((6, 6))
    mask = sample_mask(6, 6, 0.4, 7)
    other = vals.copy()
    other[mask.bits == 0] = rng.standard_normal(int((mask.bits == 0).sum()))
    a = ok_predict(GridField(vals), mask, exp_model())
    b = ok_predict(GridField(other), mask, exp_model())
    np.testing.assert_allclose(a.field.values, b.field.values, atol=1e-10)


def test_local_neighborhood_path_stays_exact():
    rng = np.random.default_rng(3)
    field = sample_grf(SimulationSpec(8, 8, exp_model(), 0.0, 8))
    mask = sample_mask(8, 8, 0.6, 9)
    pred = ok_predict(field, mask, exp_model(), max_global=10, neighborhood=12)
    obs = mask.bits.astype(bool)
    assert np.max(np.abs(pred.field.values[obs] - field.values[obs])) <= 1e-6
    assert pred.weights_sum_check <= 1e-8


def test_local_close_to_global_on_dense_data():
    field = sample_grf(SimulationSpec(8, 8, exp_model(), 0.0, 10))
    mask = sample_mask(8, 8, 0.5, 11)
    full = ok_predict(field, mask, exp_model())
    local = ok_predict(field, mask, exp_model(), max_global=10, neighborhood=24)
    # a 24-neighbor window on an 8x8 grid sees most of the data
    assert np.max(np.abs(full.field.values - local.field.values)) < 0.2


def test_nonstationary_constant_fields_match_stationary_matern():
    h = w = 6
    ones = np.ones((h, w))
    phi = 2.0
    nsf = NonstationaryField(
        sigma_field=GridField(ones),
        nu_field=GridField(ones * 0.5),
        anis_field=AnisotropyField(major=ones * phi, minor=ones * phi,
                                   tilt=np.zeros((h, w))))
    ns_model = CovarianceModel.nonstationary(nsf)
    # equivalent stationary kernel: Matern with smoothness sqrt(1/2+1/2)=1,
    # unit scale on sqrt(Q)=h/phi
    st_model = CovarianceModel.matern(1.0, phi, nu=1.0)
    rng = np.random.default_rng(4)
    vals = rng.standard_normal((h, w))
    mask = sample_mask(h, w, 0.4, 12)
    a = ok_predict(GridField(vals), mask, ns_model)
    b = ok_predict(GridField(vals), mask, st_model)
    np.testing.assert_allclose(a.field.values, b.field.values, atol=1e-8)
