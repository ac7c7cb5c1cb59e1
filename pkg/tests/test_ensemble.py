import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasespace.ensemble import (
    POSITIVE_P,
    Q_FUNCTION,
    WIGNER,
    Ordering,
    PhaseSample,
    WeightedEnsemble,
    compensated_mean,
    compensated_sum,
    effective_sample_size,
    mean_and_error,
    moment_estimate_number,
    ordering_for,
    weighted_mean,
)


def test_orderings():
    assert POSITIVE_P.doubled and POSITIVE_P.s == 0
    assert WIGNER.s == 0.5 and not WIGNER.doubled
    assert Q_FUNCTION.s == 1.0
    assert ordering_for("W") is WIGNER
    assert ordering_for("positive-P") is POSITIVE_P
    assert ordering_for(1.0) == Q_FUNCTION
    assert ordering_for(0.25).name == "s=0.25"
    with pytest.raises(ValueError):
        ordering_for("X")
    with pytest.raises(ValueError):
        Ordering(0.5, True)
    with pytest.raises(ValueError):
        Ordering(-0.1, False)


def test_conjugacy_enforced():
    a = np.array([[1 + 1j]])
    WeightedEnsemble(a, np.conj(a), 1.0, WIGNER)
    with pytest.raises(ValueError, match="conj"):
        WeightedEnsemble(a, a, 1.0, WIGNER)
    # doubled space allows independent beta
    WeightedEnsemble(a, a, 1.0, POSITIVE_P)


def test_sample_construction():
    s = PhaseSample([1, 2], [3, 4], 0.5j)
    assert s.mode_count == 2 and s.weight == 0.5j
    with pytest.raises(ValueError):
        PhaseSample([1, 2], [3], 1.0)
    with pytest.raises(ValueError):
        PhaseSample([1], [1], math.nan)


def test_from_samples_iteration_roundtrip():
    samples = [PhaseSample([k, 1j * k], [2 * k, 0], 1 + k) for k in range(4)]
    ens = WeightedEnsemble.from_samples(samples, POSITIVE_P)
    assert len(ens) == 4 and ens.mode_count == 2
    back = ens.samples
    for a, b in zip(samples, back):
        np.testing.assert_array_equal(a.alpha, b.alpha)
        assert a.weight == b.weight
    assert ens[2].weight == 3
    with pytest.raises(ValueError):
        WeightedEnsemble.from_samples([], POSITIVE_P)


def test_concat_checks_compatibility():
    a = WeightedEnsemble(np.ones((2, 1)), np.ones((2, 1)), 1, POSITIVE_P)
    assert len(a.concat(a)) == 4
    b = WeightedEnsemble(np.ones((2, 1)), np.ones((2, 1)), 1, Q_FUNCTION)
    with pytest.raises(ValueError):
        a.concat(b)


@pytest.mark.parametrize("ordering", [POSITIVE_P, WIGNER])
def test_csv_round_trip_is_exact(tmp_path, rng, ordering):
    alpha = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
    beta = np.conj(alpha) if not ordering.doubled else rng.standard_normal((5, 2)) + 0j
    ens = WeightedEnsemble(alpha, beta, rng.standard_normal(5) + 1j * rng.standard_normal(5), ordering)
    path = tmp_path / "ens.csv"
    ens.to_csv(path)
    back = WeightedEnsemble.from_csv(path)
    assert back.ordering == ordering
    np.testing.assert_array_equal(back.alpha, ens.alpha)
    np.testing.assert_array_equal(back.beta, ens.beta)
    np.testing.assert_array_equal(back.weight, ens.weight)


def test_compensated_sum_cancellation():
    assert compensated_sum([1e16, 1.0, -1e16]) == 1.0
    assert np.sum([1e16, 1.0, -1e16]) != 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e12, 1e12), min_size=1, max_size=60), st.randoms())
def test_compensated_sum_order_insensitive(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert compensated_sum(values) == compensated_sum(shuffled)
    assert compensated_mean(values) == compensated_sum(values) / len(values)


def test_weighted_mean_known_values():
    ens = WeightedEnsemble(np.array([[1.0], [3.0]]), np.array([[1.0], [3.0]]), [2.0, 0.0], POSITIVE_P)
    mean, se = weighted_mean(ens, lambda a, b: a[:, 0])
    assert mean == 1.0
    # terms (2, 0): sample variance 2, se = sqrt(2/2)
    assert se == pytest.approx(1.0)
    mean, se = weighted_mean(ens, lambda a, b: 5.0)
    assert mean == 5.0


def test_weighted_mean_reports_bad_index():
    ens = WeightedEnsemble(np.array([[1.0], [0.0], [2.0]]), np.ones((3, 1)), 1, POSITIVE_P)
    with pytest.raises(ValueError, match="index 1"), np.errstate(all="ignore"):
        weighted_mean(ens, lambda a, b: 1.0 / a[:, 0])


def test_mean_and_error_single_term():
    assert mean_and_error([2 + 1j]) == (2 + 1j, 0.0)
    with pytest.raises(ValueError):
        mean_and_error([])


def test_number_estimate_subtracts_vacuum():
    alpha = np.array([[1.0 + 0j], [1j]])
    ens = WeightedEnsemble(alpha, np.conj(alpha), 1.0, WIGNER)
    est, err = moment_estimate_number(ens)
    assert est[0] == pytest.approx(0.5)
    assert err[0] == 0.0


def test_number_estimate_gaussian_oracle(rng):
    # Q samples of a coherent state |z>: alpha = z + complex normal of variance 1
    z = 1.5 - 0.5j
    n = 200_000
    alpha = z + math.sqrt(0.5) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    ens = WeightedEnsemble(alpha[:, None], np.conj(alpha)[:, None], 1.0, Q_FUNCTION)
    est, err = moment_estimate_number(ens)
    assert abs(est[0] - abs(z) ** 2) < 3 * err[0]


def test_effective_sample_size():
    assert effective_sample_size(np.ones(10)) == pytest.approx(10)
    assert effective_sample_size([1, 0, 0, 0]) == pytest.approx(1)
    assert effective_sample_size([1, -1, 1, -1]) == pytest.approx(0)
