import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasespace.ensemble import POSITIVE_P, Q_FUNCTION, WIGNER, PhaseSample, WeightedEnsemble
from phasespace.gaussian import (
    CovarianceSpec,
    FactorizationError,
    coherent_spec,
    factor_covariance,
    randomize_phase,
    sample_gaussian,
    squeezed_spec,
    thermal_spec,
)

ORDERINGS = [POSITIVE_P, WIGNER, Q_FUNCTION]


def covariance_estimate(ens):
    z = np.concatenate([ens.alpha, ens.beta], axis=1)
    dz = z - z.mean(axis=0)
    return dz.T @ dz / (len(ens) - 1)


@pytest.mark.parametrize("ordering", ORDERINGS)
@pytest.mark.parametrize("spec_fn", [
    lambda o: coherent_spec([1 + 2j, -0.5], o),
    lambda o: thermal_spec([0.3, 2.0], o),
    lambda o: squeezed_spec(0.7, o, theta=0.4, amplitude=0.5j),
])
def test_factor_residual(ordering, spec_fn):
    spec = spec_fn(ordering)
    f = factor_covariance(spec)
    assert f.residual(spec.sigma) < 1e-10


@pytest.mark.parametrize("ordering", [WIGNER, Q_FUNCTION])
def test_reality_constraint_rows(ordering):
    spec = squeezed_spec(0.5, ordering, theta=1.0)
    b = factor_covariance(spec).b
    np.testing.assert_allclose(b[1], np.conj(b[0]), atol=1e-12)


def test_asymmetric_sigma_rejected():
    sigma = np.array([[0, 1], [0.5, 0]], dtype=complex)
    with pytest.raises(FactorizationError, match="symmetric"):
        factor_covariance(CovarianceSpec([0, 0], sigma, WIGNER))


def test_unphysical_covariance_rejected():
    # negative quadrature variance: occupation -1 in the Wigner ordering
    with pytest.raises(FactorizationError):
        factor_covariance(thermal_spec([-1.0], WIGNER))


def test_spec_shape_and_mean_checks():
    with pytest.raises(ValueError):
        CovarianceSpec([0, 0, 0], np.zeros((3, 3)), POSITIVE_P)
    with pytest.raises(ValueError, match="conj"):
        CovarianceSpec([1j, 1j], np.zeros((2, 2)), WIGNER)
    CovarianceSpec([1j, 1j], np.zeros((2, 2)), POSITIVE_P)


def test_coherent_P_is_deterministic(rng):
    spec = coherent_spec([1 + 1j], POSITIVE_P)
    s = sample_gaussian(spec, factor_covariance(spec), rng)
    assert isinstance(s, PhaseSample)
    assert s.alpha[0] == 1 + 1j and s.beta[0] == 1 - 1j


def test_factor_dimension_mismatch(rng):
    spec = coherent_spec([1], WIGNER)
    other = factor_covariance(coherent_spec([1, 2], WIGNER))
    with pytest.raises(ValueError):
        sample_gaussian(spec, other, rng, 3)


@pytest.mark.parametrize("ordering", ORDERINGS)
def test_sampled_covariance_matches(ordering, rng):
    spec = squeezed_spec(0.4, ordering, theta=0.3, amplitude=0.2 - 0.1j)
    ens = sample_gaussian(spec, factor_covariance(spec), rng, 200_000)
    assert isinstance(ens, WeightedEnsemble) and ens.ordering == ordering
    np.testing.assert_allclose(np.concatenate([ens.alpha, ens.beta], axis=1).mean(axis=0),
                               spec.mean, atol=0.01)
    np.testing.assert_allclose(covariance_estimate(ens), spec.sigma, atol=0.02)


def test_random_multimode_covariance(rng):
    # oracle: draw a PSD quadrature covariance and map it to amplitudes
    m = 3
    a = rng.standard_normal((2 * m, 2 * m))
    c = a @ a.T / (2 * m)
    eye = np.eye(m)
    u = np.block([[eye, 1j * eye], [eye, -1j * eye]])
    sigma = u @ c @ u.T
    spec = CovarianceSpec(np.zeros(2 * m), sigma, WIGNER)
    f = factor_covariance(spec)
    assert f.residual(sigma) < 1e-10
    ens = sample_gaussian(spec, f, rng, 200_000)
    np.testing.assert_allclose(covariance_estimate(ens), sigma, atol=0.03 * np.abs(sigma).max())


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_takagi_any_complex_symmetric(m, seed):
    r = np.random.default_rng(seed)
    a = r.standard_normal((2 * m, 2 * m)) + 1j * r.standard_normal((2 * m, 2 * m))
    sigma = a + a.T
    spec = CovarianceSpec(np.zeros(2 * m), sigma, POSITIVE_P)
    f = factor_covariance(spec)
    assert f.residual(sigma) < 1e-10 * max(1.0, np.abs(sigma).max())


@pytest.mark.parametrize("ordering, expected", [(POSITIVE_P, 0.8), (WIGNER, 1.3), (Q_FUNCTION, 1.8)])
def test_thermal_second_moment(ordering, expected, rng):
    spec = thermal_spec([0.8], ordering)
    ens = sample_gaussian(spec, factor_covariance(spec), rng, 100_000)
    terms = (ens.alpha[:, 0] * ens.beta[:, 0]).real
    se = terms.std(ddof=1) / math.sqrt(terms.size)
    assert abs(terms.mean() - expected) < 3 * se


def test_randomize_phase(rng):
    spec = coherent_spec([2.0], WIGNER)
    ens = sample_gaussian(spec, factor_covariance(spec), rng, 50_000)
    rot = randomize_phase(ens, rng)
    np.testing.assert_allclose(np.abs(rot.alpha), np.abs(ens.alpha))
    np.testing.assert_array_equal(rot.weight, ens.weight)
    assert abs(rot.alpha.mean()) < 0.05
    p = randomize_phase(PhaseSample([1 + 0j], [2 + 0j]), rng)
    assert p.alpha[0] * p.beta[0] == pytest.approx(2.0)
