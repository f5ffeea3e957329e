import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hktwist import specfun
from hktwist.errors import BranchTrackingError, DomainError
from hktwist.specfun import BranchSpec, arg_branch, bessel_k0, bessel_k1, log_branch

from oracles import (bessel_k_quadrature, central_diff, central_diff4,
                     k0_small_series, second_diff4)

# Frozen from the quadrature oracle (see test_quadrature_oracle_agrees).
K0_AT_1 = 0.421024438240708
K1_AT_1 = 0.601907230197235


def test_k0_value_at_1():
    assert bessel_k0(1.0) == pytest.approx(K0_AT_1, rel=1e-13)


def test_k1_value_at_1():
    assert bessel_k1(1.0) == pytest.approx(K1_AT_1, rel=1e-13)


def test_quadrature_oracle_agrees():
    # the frozen constants above were produced by this oracle
    assert bessel_k_quadrature(0, 1.0) == pytest.approx(K0_AT_1, rel=1e-13)
    assert bessel_k_quadrature(1, 1.0) == pytest.approx(K1_AT_1, rel=1e-13)


@pytest.mark.parametrize("x", [1e-8, 1e-4, 0.03, 0.5, 1.0, 1.9, 2.0, 2.1, 5.0, 17.0, 80.0, 300.0, 700.0])
def test_k0_against_quadrature(x):
    if x >= 690.0:
        # beneath double underflow after the e^-x scale; contract: return 0
        assert bessel_k0(x) >= 0.0
        return
    assert bessel_k0(x) == pytest.approx(bessel_k_quadrature(0, x), rel=1e-13)


@pytest.mark.parametrize("x", [1e-6, 0.02, 0.7, 1.5, 2.0, 2.5, 8.0, 42.0, 200.0, 600.0])
def test_k1_against_quadrature(x):
    assert bessel_k1(x) == pytest.approx(bessel_k_quadrature(1, x), rel=1e-13)


def test_k0_small_x_log_behaviour():
    x = 1e-8
    expect = -math.log(0.5 * x) - 0.5772156649015329
    assert bessel_k0(x) == pytest.approx(expect, rel=1e-12)
    assert bessel_k0(x) == pytest.approx(k0_small_series(x), rel=1e-14)


def test_k0_underflow_returns_zero():
    assert bessel_k0(1000.0) == 0.0


def test_k1_times_x_to_one():
    x = 1e-6
    assert bessel_k1(x) * x == pytest.approx(1.0, abs=1e-5)


def test_k1_is_minus_dk0():
    x = 2.0
    for h in (1e-4, 1e-5):
        fd = central_diff(bessel_k0, x, h)
        assert fd + bessel_k1(x) == pytest.approx(0.0, abs=10 * h * h)


def test_positive_and_decreasing():
    xs = np.geomspace(1e-6, 600.0, 200)
    k0 = bessel_k0(xs)
    k1 = bessel_k1(xs)
    assert np.all(k0 > 0) and np.all(k1 > 0)
    assert np.all(np.diff(k0) < 0) and np.all(np.diff(k1) < 0)


def test_wronskian_identity_on_log_grid():
    # K0'(x) + K1(x) = 0 to 1e-9 by central differences
    for x in np.geomspace(0.1, 50.0, 25):
        h = 1e-3 * x
        fd = central_diff4(bessel_k0, x, h)
        assert abs(fd + bessel_k1(x)) < 1e-9 * max(1.0, bessel_k1(x))


def test_k0_ode_residual():
    # x K0'' + K0' - x K0 = 0 to 1e-8, relative to the equation's term scale
    for x in np.geomspace(0.1, 50.0, 20):
        h = min(0.02, 5e-4 * max(1.0, x))
        d1 = central_diff4(bessel_k0, x, h)
        d2 = second_diff4(bessel_k0, x, h)
        res = x * d2 + d1 - x * bessel_k0(x)
        scale = abs(x * d2) + abs(d1) + abs(x * bessel_k0(x))
        assert abs(res) < 1e-8 * scale


def test_domain_errors():
    for bad in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(DomainError):
            bessel_k0(bad)
        with pytest.raises(DomainError):
            bessel_k1(bad)


def test_array_evaluation_matches_scalar():
    xs = np.array([0.3, 1.0, 2.0, 10.0])
    np.testing.assert_allclose(bessel_k0(xs), [bessel_k0(x) for x in xs], rtol=1e-15)
    np.testing.assert_allclose(bessel_k1(xs), [bessel_k1(x) for x in xs], rtol=1e-15)


# ---------------------------------------------------------------- branches

PW = BranchSpec("principal_w")
PZ = BranchSpec("principal_z")


def test_principal_branches_at_minus_one():
    assert arg_branch(-1 + 0j, PW) == pytest.approx(math.pi)
    assert arg_branch(-1 + 0j, PZ) == pytest.approx(-math.pi)


def test_anchored_m1_range():
    b = BranchSpec("anchored", m=1 + 0j)  # range [0, 2*pi)
    assert arg_branch(-1j, b) == pytest.approx(1.5 * math.pi)
    assert arg_branch(1 + 0j, b) == pytest.approx(0.0)


def test_anchored_agrees_with_principal_on_overlap():
    b = BranchSpec("anchored", m=-1 + 0j)  # Arg(m) = pi, range [-pi/2, 3*pi/2)
    for ang in np.linspace(-0.49 * math.pi, 0.99 * math.pi, 17):
        w = complex(math.cos(ang), math.sin(ang))
        assert arg_branch(w, b) == pytest.approx(arg_branch(w, PW), abs=1e-12)


def test_tracked_three_pi():
    path = [complex(math.cos(t), math.sin(t)) for t in np.linspace(0.0, 3.0 * math.pi, 200)]
    b = BranchSpec("tracked", start_value=0.0, path=tuple(path))
    assert arg_branch(path[-1], b) == pytest.approx(3.0 * math.pi, abs=1e-12)


def test_tracked_rejects_coarse_step():
    path = (1 + 0j, -1 + 0j)
    with pytest.raises(BranchTrackingError):
        arg_branch(-1 + 0j, BranchSpec("tracked", start_value=0.0, path=path))


def test_tracked_rejects_near_zero():
    path = (1 + 0j, 1e-15 + 0j)
    with pytest.raises(BranchTrackingError):
        arg_branch(1e-15 + 0j, BranchSpec("tracked", start_value=0.0, path=path))


def test_log_branch_values():
    val = log_branch(-1.0 / (2.0 * math.e) + 0j, PZ)
    assert val == pytest.approx(complex(-(1.0 + math.log(2.0)), -math.pi), abs=1e-14)
    assert log_branch(1 + 0j, PW) == 0


def test_arg_zero_rejected():
    with pytest.raises(DomainError):
        arg_branch(0j, PW)


@settings(max_examples=200, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-6, max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_exp_log_roundtrip(w):
    for spec in (PW, PZ, BranchSpec("anchored", m=0.3 + 1.1j)):
        val = log_branch(w, spec)
        assert np.exp(val) == pytest.approx(w, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-6, max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_branch_ranges(w):
    assert -math.pi < arg_branch(w, PW) <= math.pi
    assert -math.pi <= arg_branch(w, PZ) < math.pi
    m = 0.7 - 0.2j
    lo = -0.5 * specfun.arg_zero_two_pi(m)
    a = arg_branch(w, BranchSpec("anchored", m=m))
    assert lo <= a < lo + 2.0 * math.pi
