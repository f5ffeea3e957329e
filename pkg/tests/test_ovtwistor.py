import cmath
import math

import numpy as np
import pytest

from hktwist.errors import DomainError, RayProximityError
from hktwist.ovspace import OVParams, OVPoint
from hktwist.ovtwistor import (
    QuadratureParams,
    RaySpec,
    asym_log0,
    bessel_angle_sum,
    extract_xi0,
    log_xm_inst,
    log_xm_ov,
    symplectic_residual,
    xe_ov,
    xm_inst,
    xm_ov,
    xm_sf,
)

from oracles import inst_log_oracle

TWO_PI = 2.0 * math.pi
Q = QuadratureParams(tol=1e-12)
LAM = 4j


def richardson_pair(f, eps=1e-6):
    return 2.0 * f(eps / 2) - f(eps)


# ----------------------------------------------------------------- electric


def test_xe_trivial_values():
    assert xe_ov(1.0, 0.0, 1j) == pytest.approx(1.0)
    assert xe_ov(0.0, 0.9, 0.3 + 0.4j) == pytest.approx(cmath.exp(0.9j))
    assert xe_ov(1.0, 0.0, -1.0) == pytest.approx(math.exp(-2.0 * math.pi), rel=1e-12)


def test_xe_contracting_on_plus_ray():
    ray = RaySpec(base=0.4 + 0.3j, sign=+1)
    for s in np.geomspace(0.05, 20.0, 25):
        assert abs(xe_ov(ray.base, 1.3, ray.point(s))) < 1.0


def test_xe_domain():
    with pytest.raises(DomainError):
        xe_ov(1.0, 0.0, 0.0)


# ----------------------------------------------------------------- semiflat


def test_xm_sf_log_terms_vanish():
    assert xm_sf(4j, 0.0, 1.0, LAM) == pytest.approx(math.exp(-4.0), rel=1e-13)


def test_xm_sf_magnitude_reality():
    for xi in (0.3 + 0.4j, -1.2 + 0.1j, 0.05 - 0.6j):
        v = abs(xm_sf(0.2 + 0.1j, 1.1, xi, LAM)) * abs(xm_sf(0.2 + 0.1j, 1.1, -1 / np.conj(xi), LAM))
        assert v == pytest.approx(1.0, rel=1e-12)


def test_xm_sf_theta_periodicity():
    a = xm_sf(0.2 + 0.1j, 0.3, 0.7j, LAM)
    b = xm_sf(0.2 + 0.1j, 0.3 + TWO_PI, 0.7j, LAM)
    assert a == pytest.approx(b, rel=1e-12)


# ---------------------------------------------------------------- instanton


def test_inst_small_at_large_base():
    assert abs(log_xm_inst(3.0, 0.3, 0.7 + 0.2j, Q)) < 1e-7


def test_inst_matches_naive_oracle():
    for z, xi in [(0.2 + 0j, 0.5 + 0.6j), (0.35 - 0.2j, -0.8 + 0.3j), (3.0, 0.7 + 0.2j)]:
        mine = log_xm_inst(z, 0.4, xi, Q)
        oracle = inst_log_oracle(z, 0.4, xi)
        assert mine == pytest.approx(oracle, abs=5e-10)


def test_inst_theta_e_periodicity():
    a = log_xm_inst(0.25, 0.8, 0.4 + 0.9j, Q)
    b = log_xm_inst(0.25, 0.8 + TWO_PI, 0.4 + 0.9j, Q)
    assert a == pytest.approx(b, abs=1e-12)


def test_inst_antipodal_reality():
    for xi in (0.7 + 0.2j, -0.4 + 1.1j, 0.3 - 0.5j):
        a = log_xm_inst(0.2, 0.9, xi, Q)
        b = log_xm_inst(0.2, 0.9, -1.0 / np.conj(xi), QuadratureParams(h=0.13, tol=1e-12))
        assert abs(a + np.conj(b)) < 1e-9


def test_ray_proximity_guard():
    z = 0.2 + 0j
    with pytest.raises(RayProximityError):
        xm_inst(z, 0.4, -abs(z) * 0.5 * (1 + 1e-12j), Q)


# -------------------------------------------------------------------- jumps


@pytest.mark.parametrize("z", [0.2 + 0j, 0.5 * cmath.exp(1j * math.pi / 3)])
def test_jump_plus_ray(z):
    theta_e, theta_m = 0.7, 1.1
    for s in np.geomspace(0.3, 3.0, 5):
        xi0 = RaySpec(z, +1).point(s)

        def side(sign):
            return richardson_pair(lambda e: xm_ov(z, theta_e, theta_m, xi0 * (1 + sign * 1j * e), LAM, Q))

        ratio = side(+1) / side(-1)
        target = 1.0 / (1.0 - xe_ov(z, theta_e, xi0))
        assert abs(ratio / target - 1.0) < 1e-8


@pytest.mark.parametrize("z", [0.2 + 0j, 0.5 * cmath.exp(1j * math.pi / 3)])
def test_jump_minus_ray(z):
    theta_e, theta_m = 0.7, 1.1
    for s in np.geomspace(0.3, 3.0, 5):
        xi0 = RaySpec(z, -1).point(s)

        def side(sign):
            return richardson_pair(lambda e: xm_ov(z, theta_e, theta_m, xi0 * (1 + sign * 1j * e), LAM, Q))

        ratio = side(+1) / side(-1)
        target = 1.0 - 1.0 / xe_ov(z, theta_e, xi0)
        assert abs(ratio / target - 1.0) < 1e-8


# ------------------------------------------------------------------ reality


def test_reality_twenty_point_grid():
    z, theta_e, theta_m = 0.22 + 0.13j, 0.65, 2.3
    rng = np.random.default_rng(7)
    count = 0
    while count < 20:
        xi = rng.uniform(0.2, 2.0) * cmath.exp(1j * rng.uniform(0, TWO_PI))
        try:
            v = xm_ov(z, theta_e, theta_m, xi, LAM, Q) * np.conj(
                xm_ov(z, theta_e, theta_m, -1.0 / np.conj(xi), LAM, Q)
            )
        except RayProximityError:
            continue
        assert abs(v - 1.0) < 1e-8
        count += 1


# -------------------------------------------------------------- asymptotics


def test_asym_log0_odd_symmetry():
    z, tm = 0.3 + 0.1j, 0.4
    assert asym_log0(z, 0.0, tm) == 1j * tm  # sine sum vanishes identically
    plus = asym_log0(z, 0.8, tm)
    minus = asym_log0(z, -0.8, tm)
    assert plus.real == pytest.approx(-minus.real, rel=1e-12)
    assert bessel_angle_sum(z, 0.8) == pytest.approx(plus.real)


def test_asym_extraction_matches_series():
    z, theta_e, theta_m = 0.3 + 0j, 0.7, 1.1
    want = asym_log0(z, theta_e, theta_m)
    for rho in (1e-2, 1e-3):
        got = extract_xi0(z, theta_e, theta_m, LAM, rho, q=Q)
        assert abs(got - want) < 1e-6


def test_asym_z0_domain():
    with pytest.raises(DomainError):
        asym_log0(0.0, 0.3, 0.1)


# --------------------------------------------------------------- symplectic


P = OVParams()


def test_symplectic_residual_basic():
    pt = OVPoint(0.3 + 0j, 0.2, 1.0)
    assert symplectic_residual(pt, 0.7 + 0.2j, P, Q, h=1e-4) < 1e-4


def test_symplectic_residual_theta_m_invariant():
    pt1 = OVPoint(0.3 + 0j, 0.2, 1.0)
    pt2 = OVPoint(0.3 + 0j, 0.2, 4.4)
    r1 = symplectic_residual(pt1, 0.7 + 0.2j, P, Q, h=1e-4)
    r2 = symplectic_residual(pt2, 0.7 + 0.2j, P, Q, h=1e-4)
    assert abs(r1 - r2) < 1e-9


def build_fd_form(pt, xi, h=1e-4):
    """-(1/4 pi^2) dlogXe ^ dlogXm by central differences in chart coordinates."""
    from hktwist.ovtwistor import log_xe_ov

    base = pt.coords
    de = np.zeros(4, dtype=complex)
    dm = np.zeros(4, dtype=complex)

    def logs(c4):
        zz = complex(c4[0], c4[1])
        return (
            log_xe_ov(zz, TWO_PI * c4[2], xi),
            log_xm_ov(zz, TWO_PI * c4[2], TWO_PI * c4[3], xi, LAM, Q),
        )

    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        ep, mp_ = logs(base + e)
        em, mm = logs(base - e)
        de[i] = (ep - em) / (2 * h)
        dm[i] = (mp_ - mm) / (2 * h)
    return -(np.outer(de, dm) - np.outer(dm, de)) / (4.0 * math.pi ** 2)


def test_symplectic_continuity_across_plus_ray():
    # the 2-form built from Xm on either side of l_+ agrees: the jump factor
    # wedges to zero against dlogXe. Side limits are Richardson-extrapolated
    # with the offset kept above the ray swing of the z-differencing.
    pt = OVPoint(0.3 + 0j, 0.2, 1.0)
    xi0 = RaySpec(pt.z, +1).point(0.8)
    eps = 1e-3

    def side(sign):
        f1 = build_fd_form(pt, xi0 * cmath.exp(sign * 1j * eps))
        f2 = build_fd_form(pt, xi0 * cmath.exp(sign * 0.5j * eps))
        return 2.0 * f2 - f1

    assert np.max(np.abs(side(+1) - side(-1))) < 1e-6
