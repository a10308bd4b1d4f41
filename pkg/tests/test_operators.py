import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherestab.errors import DomainError, ResolutionError
from spherestab.functionals import sharp_constant
from spherestab.harmonics import SpectralFunction
from spherestab.operators import (
    A2s,
    H,
    P2s,
    apply_multiplier,
    eigenvalue_lambda,
    multiplier_A2s,
    multiplier_An,
    multiplier_B,
    multiplier_H,
    multiplier_P2s,
    pv_H_zonal_oracle,
)
from spherestab.specfun import gegenbauer_eval


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_symbol_matches_principal_value(n):
    for l in range(1, 9):
        g = lambda t: gegenbauer_eval(n, l, t) / gegenbauer_eval(n, l, 1.0)
        oracle = pv_H_zonal_oracle(n, g, 64)
        assert oracle == pytest.approx(multiplier_H(n, l), rel=1e-10)


def test_symbol_values():
    assert multiplier_H(2, 0) == 0.0
    assert multiplier_H(2, 1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert multiplier_H(2, 2) == pytest.approx(3 * math.pi, rel=1e-15)
    assert eigenvalue_lambda(4, 2) == pytest.approx(5 / 3, rel=1e-15)
    assert eigenvalue_lambda(2, 3) == pytest.approx(11 / 6, rel=1e-15)
    assert multiplier_An(4, 1) == pytest.approx(24.0)
    assert multiplier_An(2, 3) == pytest.approx(12.0)
    assert multiplier_An(3, 0) == 0.0
    assert multiplier_P2s(3, 1.0, 2) == pytest.approx(4 / 35, rel=1e-14)
    assert multiplier_B(2, 3) == 3.5


@given(st.integers(min_value=1, max_value=12))
@settings(max_examples=12, deadline=None)
def test_degree_one_symbol_is_sharp_constant(n):
    assert multiplier_H(n, 1) == pytest.approx(sharp_constant(n), rel=1e-12)
    assert eigenvalue_lambda(n, 1) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_H_is_endpoint_derivative_of_riesz_symbol(n):
    # (P_2s(0) - P_2s(l)) / 2s -> psi(l + n/2) - psi(n/2) as s -> 0, error O(s)
    pref = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    for l in range(1, 7):
        q = lambda s: pref * (multiplier_P2s(n, s, 0) - multiplier_P2s(n, s, l)) / (2 * s)
        est = (10 * q(1e-5) - q(1e-4)) / 9
        assert est == pytest.approx(multiplier_H(n, l), rel=1e-8)


def test_riesz_pair_inverse():
    l = np.arange(10)
    np.testing.assert_allclose(multiplier_P2s(3, 0.7, l) * multiplier_A2s(3, 0.7, l), 1.0, rtol=1e-13)
    both = P2s(3, 0.7).then(A2s(3, 0.7))
    np.testing.assert_allclose(both(l), 1.0, rtol=1e-13)


def test_H_monotone():
    vals = multiplier_H(3, np.arange(30))
    assert np.all(np.diff(vals) > 0)


def test_apply_multiplier():
    u = SpectralFunction.harmonic(2, 4, 3, 2) + 2.0
    Hu = apply_multiplier(u, H(2))
    assert Hu.degree(0)[0] == 0.0
    assert Hu.degree(3)[2] == pytest.approx(multiplier_H(2, 3))
    with pytest.raises(DomainError):
        apply_multiplier(u, H(3))


def test_domain_errors():
    with pytest.raises(DomainError):
        multiplier_P2s(2, 1.0, 1)
    with pytest.raises(DomainError):
        multiplier_A2s(2, 0.0, 1)
    with pytest.raises(DomainError):
        eigenvalue_lambda(2, 0)
    with pytest.raises(DomainError):
        multiplier_H(0, 1)
    with pytest.raises(ResolutionError):
        pv_H_zonal_oracle(2, lambda t: t, 4)
