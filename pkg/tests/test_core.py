import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from armaml.core import (
    ArmaOrder,
    ArmaParams,
    DimensionError,
    FitResult,
    TimeSeries,
    validate_params,
)


def test_timeseries_mask_and_stats():
    x = TimeSeries.from_values([1.0, np.nan, 3.0])
    assert x.n == 3 and x.n_obs == 2 and x.has_missing
    assert x.mean() == 2.0
    assert np.isnan(x.values[1])


@pytest.mark.parametrize("vals", [[], [np.nan, np.nan]])
def test_timeseries_rejects_empty(vals):
    with pytest.raises(ValueError):
        TimeSeries.from_values(vals)


def test_timeseries_rejects_inf():
    with pytest.raises(ValueError):
        TimeSeries(np.array([1.0, np.inf]), np.array([False, False]))


def test_types_are_immutable():
    p = ArmaParams([0.5], [])
    with pytest.raises(ValueError):
        p.phi[0] = 0.1
    with pytest.raises(Exception):
        p.sigma2 = 2.0


def test_order_counts():
    assert ArmaOrder(2, 1, True).d == 5
    assert ArmaOrder(2, 1, False).d == 4
    assert ArmaOrder(1, 2, True).param_names() == ["phi1", "theta1", "theta2", "mean"]
    with pytest.raises(ValueError):
        ArmaOrder(-1, 0)


@given(st.integers(0, 6), st.integers(0, 6))
def test_d_is_p_plus_q_plus_two_with_mean(p, q):
    assert ArmaOrder(p, q, True).d == p + q + 2


@pytest.mark.parametrize(
    "phi,causal",
    [((1.1, 0.1), False), ((1.1, -0.2), True), ((), True), ((1.0,), False), ((-0.999,), True)],
)
def test_causality_examples(phi, causal):
    order = ArmaOrder(len(phi), 0)
    assert validate_params(ArmaParams(phi, []), order).causal is causal


def test_invertibility_and_sigma2_independent():
    order = ArmaOrder(0, 1)
    rep = validate_params(ArmaParams([], [1.5], sigma2=-1.0), order)
    assert rep.causal and not rep.invertible and not rep.sigma2_positive and not rep.valid
    assert validate_params(ArmaParams(), ArmaOrder(0, 0)).valid


def test_boundary_tolerance():
    order = ArmaOrder(1, 0)
    assert not validate_params(ArmaParams([1.0 / (1 + 5e-9)], []), order).causal
    assert validate_params(ArmaParams([1.0 / (1 + 1e-6)], []), order).causal


def test_length_mismatch():
    with pytest.raises(DimensionError):
        validate_params(ArmaParams([0.1, 0.2], []), ArmaOrder(1, 0))


@settings(max_examples=200)
@given(st.lists(st.floats(-2.5, 2.5).filter(lambda v: v == 0 or abs(v) > 1e-3), min_size=1, max_size=4))
def test_validate_agrees_with_numpy_roots(phi):
    # independent check on the roots of Phi itself (not the inverted roots)
    roots = np.roots(np.r_[-np.asarray(phi)[::-1], 1.0])
    if roots.size and abs(np.abs(roots).min() - 1) < 1e-6:
        return
    expected = roots.size == 0 or np.abs(roots).min() > 1
    assert validate_params(ArmaParams(phi, []), ArmaOrder(len(phi), 0)).causal == expected


def test_params_vector_roundtrip():
    order = ArmaOrder(2, 1, True)
    p = ArmaParams([0.1, 0.2], [0.3], 2.0, 5.0)
    v = p.to_vector(True)
    assert v.tolist() == [0.1, 0.2, 0.3, 5.0]
    back = ArmaParams.from_vector(v, order, sigma2=2.0)
    assert back.to_dict() == p.to_dict()


def test_fitresult_serializes():
    order = ArmaOrder(1, 0)
    f = FitResult(order, ArmaParams([0.5], []), -10.0, 22.0, 2, np.array([-10.0, -11.0]), True)
    d = f.with_se([0.1]).to_dict()
    assert d["se"] == {"phi1": 0.1}
    assert d["per_start_logliks"] == [-10.0, -11.0]
