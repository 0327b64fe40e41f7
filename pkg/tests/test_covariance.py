import math

import numpy as np
import pytest

from fieldlab.covariance import (ALL_FAMILIES, AnisotropyField,
                                 CovarianceModel, LocalAnisotropy,
                                 NonstationaryField, StationaryParams,
                                 build_cov_matrix, cov_exponential,
                                 cov_matrix_cholesky, cov_nonstationary,
                                 cov_product_exp_wave, cov_wave,
                                 matern_correlation, pairwise_cov, q_distance)
from fieldlab.errors import ParameterError
from fieldlab.grid import GridField, grid_locations
from fieldlab.simulate import ParamFieldSpec, make_param_fields

from oracles import mp_matern


# ---------------------------------------------------------------------------
# stationary families


def test_exponential_reference_values():
    p = StationaryParams(1.0, 2.0)
    assert cov_exponential(0.0, p) == 1.0
    assert cov_exponential(2.0, p) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert round(cov_exponential(2.0, p), 6) == 0.367879


def test_exponential_nugget_at_zero_only():
    p = StationaryParams(1.0, 2.0, tau2=0.3)
    assert cov_exponential(0.0, p) == pytest.approx(1.3, rel=1e-15)
    assert cov_exponential(1e-9, p) < 1.0   # nugget drops off zero lag


def test_exponential_rejects_negative_lag():
    with pytest.raises(ParameterError):
        cov_exponential(-1.0, StationaryParams(1.0, 1.0))


def test_wave_reference_values():
    p = StationaryParams(1.0, 3.0)
    assert cov_wave(0.0, p) == 1.0
    assert cov_wave(math.pi * 3.0, p) == pytest.approx(0.0, abs=1e-15)
    assert cov_wave(3.0, p) == pytest.approx(math.sin(1.0), rel=1e-15)
    assert round(cov_wave(3.0, p), 6) == 0.841471


def test_wave_bounded_by_sill():
    p = StationaryParams(2.0, 1.5)
    hs = np.linspace(0.0, 30.0, 400)
    vals = cov_wave(hs, p)
    assert np.all(np.abs(vals) <= 2.0 + 1e-12)


def test_product_reference_values():
    pe = StationaryParams(1.0, 2.0)
    pw = StationaryParams(1.0, 2.0)
    assert cov_product_exp_wave(0.0, pe, pw) == 1.0
    assert cov_product_exp_wave(math.pi * 2.0, pe, pw) == pytest.approx(0.0, abs=1e-15)
    got = cov_product_exp_wave(2.0, pe, pw)
    assert got == pytest.approx(math.exp(-1.0) * math.sin(1.0), rel=1e-15)
    assert round(got, 6) == 0.309560


def test_product_reduces_to_exponential_for_huge_wave_range():
    pe = StationaryParams(1.0, 3.0)
    pw = StationaryParams(1.0, 1e12)
    for h in np.linspace(0.0, 20.0, 50):
        assert cov_product_exp_wave(h, pe, pw) == pytest.approx(
            cov_exponential(h, pe), abs=1e-9)


def test_monotone_families_bounded_by_zero_lag():
    p = StationaryParams(1.3, 2.5)
    hs = np.linspace(0.0, 25.0, 200)
    assert np.all(cov_exponential(hs, p) <= cov_exponential(0.0, p))
    for nu in (0.5, 1.0, 1.5, 2.5):
        m = matern_correlation(hs, nu, 2.5)
        assert np.all(m <= 1.0 + 1e-12)


# ---------------------------------------------------------------------------
# matern


def test_matern_half_equals_exponential():
    hs = np.linspace(0.0, 10.0, 100)
    got = matern_correlation(hs, 0.5, 1.7)
    want = np.exp(-hs / 1.7)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_matern_one_at_zero_lag():
    for nu in (0.5, 0.7, 1.0, 1.5, 2.5, 3.2):
        assert matern_correlation(0.0, nu, 1.0) == 1.0


@pytest.mark.parametrize("nu", [1.0, 0.7, 1.5, 2.5, 3.2])
def test_matern_matches_high_precision_oracle(nu):
    for h in (0.3, 1.0, 2.4, 5.0):
        got = matern_correlation(h, nu, 1.0)
        assert got == pytest.approx(mp_matern(h, nu, 1.0), rel=1e-10)


def test_matern_rejects_bad_params():
    with pytest.raises(ParameterError):
        matern_correlation(1.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        matern_correlation(1.0, 0.5, 0.0)


# ---------------------------------------------------------------------------
# nonstationary kernel


def iso(phi):
    return LocalAnisotropy(range_major=phi, range_minor=phi, tilt=0.0)


def test_q_distance_zero_at_same_point():
    a = iso(2.0)
    assert q_distance((1.0, 1.0), (1.0, 1.0), a, a) == 0.0


def test_q_distance_identity_matrices_give_squared_euclid():
    a = iso(1.0)
    got = q_distance((0.0, 0.0), (3.0, 4.0), a, a)
    assert got == pytest.approx(25.0, rel=1e-12)


def test_q_distance_matches_two_by_two_hand_inverse():
    ai = LocalAnisotropy(2.0, 1.0, tilt=0.0)
    aj = LocalAnisotropy(3.0, 1.5, tilt=math.pi / 2)
    d = np.array([1.0, 2.0])
    avg = (ai.matrix() + aj.matrix()) / 2.0
    det = avg[0, 0] * avg[1, 1] - avg[0, 1] * avg[1, 0]
    inv = np.array([[avg[1, 1], -avg[0, 1]], [-avg[1, 0], avg[0, 0]]]) / det
    want = float(d @ inv @ d)
    got = q_distance((0.0, 0.0), (1.0, 2.0), ai, aj)
    assert got == pytest.approx(want, rel=1e-12)


def constant_ns_field(h, w, sigma=1.0, nu=0.5, phi=2.0, mean=None):
    ones = np.ones((h, w))
    anis = AnisotropyField(major=ones * phi, minor=ones * phi,
                           tilt=np.zeros((h, w)))
    return NonstationaryField(
        sigma_field=GridField(ones * sigma), nu_field=GridField(ones * nu),
        anis_field=anis,
        mean_field=None if mean is None else GridField(mean))


def test_cov_nonstationary_zero_lag_is_sigma_squared():
    nsf = constant_ns_field(4, 4, sigma=1.5)
    got = cov_nonstationary((1.0, 2.0), (1.0, 2.0), nsf)
    assert got == pytest.approx(1.5 ** 2, rel=1e-12)


def test_cov_nonstationary_constant_fields_reduce_to_matern():
    # constant sigma=1, nu=1/2, Sigma=phi^2 I: smoothness sqrt(1/2+1/2)=1
    # at scaled distance |si-sj|/phi
    phi = 2.0
    nsf = constant_ns_field(6, 6, phi=phi)
    si, sj = (1.0, 1.0), (4.0, 5.0)
    dist = math.hypot(3.0, 4.0)
    got = cov_nonstationary(si, sj, nsf)
    want = matern_correlation(dist / phi, 1.0, 1.0)
    assert got == pytest.approx(want, rel=1e-10)


def test_cov_nonstationary_symmetric():
    rng = np.random.default_rng(3)
    spec = ParamFieldSpec(phi_range=(1.0, 4.0), anis_ratio_range=(0.5, 1.0),
                          tilt_range=(0.0, math.pi / 2))
    nsf = make_param_fields(spec, (8, 8))
    for _ in range(20):
        si = tuple(rng.uniform(1, 8, 2))
        sj = tuple(rng.uniform(1, 8, 2))
        assert cov_nonstationary(si, sj, nsf) == pytest.approx(
            cov_nonstationary(sj, si, nsf), abs=1e-12)


# ---------------------------------------------------------------------------
# matrix assembly


def test_build_cov_matrix_single_location():
    model = CovarianceModel.exponential(1.0, 2.0)
    m = build_cov_matrix(np.array([[1.0, 1.0]]), model)
    np.testing.assert_allclose(m, [[1.0]], atol=0)


def test_build_cov_matrix_off_diagonal_at_range():
    model = CovarianceModel.exponential(1.0, 3.0)
    locs = np.array([[1.0, 1.0], [1.0, 4.0]])
    m = build_cov_matrix(locs, model)
    assert m[0, 1] == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert m[0, 1] == m[1, 0]


def test_build_cov_matrix_three_collinear_hand_assembly():
    p = StationaryParams(1.0, 2.0, tau2=0.1)
    model = CovarianceModel.exponential_nugget(1.0, 2.0, 0.1)
    locs = np.array([[1.0, 1.0], [1.0, 2.0], [1.0, 3.0]])
    m = build_cov_matrix(locs, model)
    want = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            h = abs(i - j) * 1.0
            want[i, j] = cov_exponential(h, p) if i != j else 1.0 + 0.1
    np.testing.assert_allclose(m, want, atol=1e-15)


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_cholesky_succeeds_all_families_16x16(family):
    locs = grid_locations(16, 16)
    side = 16.0
    for frac in (0.1, 0.4, 0.8):
        phi = frac * side
        if family == "exponential":
            model = CovarianceModel.exponential(1.0, phi)
        elif family == "exponential_nugget":
            model = CovarianceModel.exponential_nugget(1.0, phi, 0.3)
        elif family == "matern":
            model = CovarianceModel.matern(1.0, phi, nu=1.5)
        elif family == "wave":
            model = CovarianceModel.wave(1.0, phi)
        elif family == "product_exp_wave":
            model = CovarianceModel.product_exp_wave(
                StationaryParams(1.0, phi), StationaryParams(1.0, phi))
        else:
            spec = ParamFieldSpec(phi_range=(phi * 0.5, phi),
                                  anis_ratio_range=(0.6, 1.0),
                                  tilt_range=(0.0, math.pi / 4))
            model = CovarianceModel.nonstationary(make_param_fields(spec, (16, 16)))
        record = []
        cov, low, jitter = cov_matrix_cholesky(locs, model, record)
        assert np.all(np.isfinite(low))
        # factor actually reproduces the (jittered) covariance matrix
        n = cov.shape[0]
        np.testing.assert_allclose(low @ low.T, cov + jitter * np.eye(n),
                                   atol=1e-8)


def test_pairwise_cov_matches_scalar_calls():
    model = CovarianceModel.exponential(1.2, 2.5)
    a = np.array([[1.0, 1.0], [2.0, 3.0]])
    b = np.array([[4.0, 1.0], [1.0, 1.0], [5.0, 5.0]])
    got = pairwise_cov(model, a, b, add_nugget=False)
    for i in range(2):
        for j in range(3):
            h = float(np.hypot(*(a[i] - b[j])))
            assert got[i, j] == pytest.approx(
                cov_exponential(h, StationaryParams(1.2, 2.5)), rel=1e-14)


def test_local_anisotropy_validation():
    with pytest.raises(ParameterError):
        LocalAnisotropy(range_major=1.0, range_minor=2.0, tilt=0.0)
    with pytest.raises(ParameterError):
        LocalAnisotropy(range_major=1.0, range_minor=0.0, tilt=0.0)
