"""Gibbons-Hawking data of the periodic single-charge space.

Everything is expressed in the chart coordinates (x1, x2, x3, t) with
z = x1 + i*x2 and t = theta_m / (2*pi). The potential is the Poisson-resummed
log + Bessel series; the direct charge sum is kept as an independent route
(they differ by a constant absorbed into |Lambda|, which the tests pin down).
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import digamma

from ._backend import njit
from .errors import BranchError, DomainError, SingularityError
from .specfun import _k0_raw, _k1_raw, principal_w

TWO_PI = 2.0 * math.pi


@njit
def _v_inst(absz, x3, tol):
    """Instanton part of V: (1/pi) * sum_{n>=1} cos(2 pi n x3) K0(2 pi n |z|).

    Truncated when the K0 envelope (monotone in n) drops below tol.
    """
    total = 0.0
    for n in range(1, 100000):
        k0 = _k0_raw(TWO_PI * n * absz)
        if k0 < tol:
            break
        total += math.cos(TWO_PI * n * x3) * k0
    return total / math.pi


@njit
def _a_inst(absz, x3, tol):
    """Instanton series of the connection: 2*sum_{n>=1} sin(2 pi n x3) |z| K1(2 pi n |z|)."""
    total = 0.0
    for n in range(1, 100000):
        k1 = absz * _k1_raw(TWO_PI * n * absz)
        if k1 < tol:
            break
        total += math.sin(TWO_PI * n * x3) * k1
    return 2.0 * total


@njit
def _v_grid(absz, x3, logfac, tol, out):
    for i in range(absz.shape[0]):
        out[i] = -math.log(absz[i]) / TWO_PI + logfac + _v_inst(absz[i], x3[i], tol)


def _direct_sum(absz2, x3, n_terms):
    """(1/4 pi) sum_{|n| <= N} (1/sqrt(|z|^2 + (x3+n)^2) - c_n), c_0 = 0, c_n = 1/|n|."""
    n = np.arange(1, n_terms + 1, dtype=np.float64)
    plus = 1.0 / np.sqrt(absz2 + (x3 + n) ** 2) - 1.0 / n
    minus = 1.0 / np.sqrt(absz2 + (x3 - n) ** 2) - 1.0 / n
    head = 1.0 / math.sqrt(absz2 + x3 * x3)
    return (head + float(plus.sum() + minus.sum())) / (2.0 * TWO_PI)


@dataclass(frozen=True)
class OVParams:
    """Cutoff and evaluation tolerances for the periodic-charge geometry."""

    cutoff: complex = 4j
    series_tol: float = 1e-12
    base_bound: float = 1.0

    def __post_init__(self):
        if self.cutoff == 0:
            raise ValueError("cutoff must be nonzero")
        if self.series_tol <= 0 or self.base_bound <= 0:
            raise ValueError("series_tol and base_bound must be positive")
        # sample V over the admitted domain; the default bound keeps V > 0
        for r in (1e-3, 0.3 * self.base_bound, self.base_bound):
            for x3 in (0.0, 0.25, 0.5):
                if _potential_value(r, x3, self) <= 0.0:
                    raise ValueError(
                        f"V <= 0 at |z|={r}, x3={x3}: base_bound too large for |cutoff|"
                    )


@dataclass(frozen=True)
class OVPoint:
    """A point of the total space in one of the two magnetic charts."""

    z: complex
    x3: float
    theta_m: float
    chart: str = "principal"

    def __post_init__(self):
        if self.chart not in ("principal", "continued"):
            raise ValueError(f"chart must be 'principal' or 'continued', got {self.chart!r}")

    @property
    def coords(self):
        return np.array([self.z.real, self.z.imag, self.x3, self.theta_m / TWO_PI])


def _potential_value(absz, x3, p):
    return (
        -math.log(absz / abs(p.cutoff)) / TWO_PI
        + _v_inst(absz, x3, p.series_tol)
    )


_AXIS_OFFSET_CACHE = {}


def _axis_offset():
    """Constant potential(series) - potential_direct(N->inf), fixed by c_n = 1/|n|.

    Independent of (z, x3); the |Lambda| part is added separately. Computed
    once by Richardson extrapolation in N (the tail decays like 1/N^2).
    """
    if "c0" not in _AXIS_OFFSET_CACHE:
        absz, x3 = 0.2, 0.25
        series = -math.log(absz) / TWO_PI + _v_inst(absz, x3, 1e-15)
        s1 = _direct_sum(absz * absz, x3, 30000)
        s2 = _direct_sum(absz * absz, x3, 60000)
        direct = (4.0 * s2 - s1) / 3.0
        _AXIS_OFFSET_CACHE["c0"] = series - direct
    return _AXIS_OFFSET_CACHE["c0"]


def potential(z, x3, p):
    """Positive harmonic potential V(z, x3).

    Away from z = 0 this is the resummed form
    -(1/2 pi) log(|z|/|Lambda|) + (1/pi) sum_n cos(2 pi n x3) K0(2 pi n |z|);
    on the axis z = 0 (x3 not an integer) the direct charge sum is used, whose
    limit has a digamma closed form, shifted by the resummation constant.
    """
    z = complex(z)
    absz = abs(z)
    y = x3 - math.floor(x3)
    if absz == 0.0:
        if y == 0.0:
            raise SingularityError("potential undefined at a charge point")
        g = 0.5772156649015328606
        limit = (1.0 / y - digamma(1.0 + y) - digamma(1.0 - y) - 2.0 * g) / (2.0 * TWO_PI)
        v = float(limit) + _axis_offset() + math.log(abs(p.cutoff)) / TWO_PI
    else:
        v = _potential_value(absz, y, p)
    if v <= 0.0:
        raise DomainError(f"V = {v} <= 0 at z={z}, x3={x3}: outside the admitted domain")
    return v


def potential_direct(z, x3, n_terms):
    """Direct charge sum with regularization constants c_0 = 0, c_n = 1/|n|."""
    z = complex(z)
    absz2 = abs(z) ** 2
    y = x3 - math.floor(x3 + 0.5)  # exact symmetry under x3 -> x3 + 1 and x3 -> -x3
    if absz2 == 0.0 and y == 0.0:
        raise SingularityError("potential_direct undefined at a charge point")
    return _direct_sum(absz2, abs(y), int(n_terms))


def connection(z, x3, p):
    """Coefficients (A_z, A_zbar, A_x3) of the U(1) connection 1-form A.

    A = A^sf + A^inst with the semiflat part (i/4 pi)(Log(z/L) - Log(zbar/Lbar)) dx3
    (principal branch) and the Bessel-series instanton part on dz/z - dzbar/zbar.
    """
    z = complex(z)
    if z == 0:
        raise SingularityError("connection undefined at z = 0")
    s = 1j * _a_inst(abs(z), x3 - math.floor(x3), p.series_tol)  # purely imaginary series
    a_z = -s / (2.0 * TWO_PI * z)
    a_zbar = s / (2.0 * TWO_PI * z.conjugate())
    a_x3 = -principal_w(z / p.cutoff) / TWO_PI
    return a_z, a_zbar, complex(a_x3)


def connection_real(z, x3, p):
    """The three real coefficients (A_1, A_2, A_3) of A in dx1, dx2, dx3."""
    a_z, a_zbar, a_x3 = connection(z, x3, p)
    a1 = a_z + a_zbar
    a2 = 1j * (a_z - a_zbar)
    for name, val in (("A_1", a1), ("A_2", a2), ("A_3", a_x3)):
        if abs(val.imag) > 1e-13 * (1.0 + abs(val)):
            raise AssertionError(f"{name} has stray imaginary part {val.imag}")
    return np.array([a1.real, a2.real, a_x3.real])


def metric(pt, p):
    """Hyperkahler metric as a symmetric 4x4 matrix in (x1, x2, x3, t)."""
    v = potential(pt.z, pt.x3, p)
    a = connection_real(pt.z, pt.x3, p)
    u = np.array([a[0], a[1], a[2], 1.0])
    g = np.outer(u, u) / v
    g[0, 0] += v
    g[1, 1] += v
    g[2, 2] += v
    return 0.5 * (g + g.T)


def symplectic_forms(pt, p):
    """The triple of Kahler forms as antisymmetric coefficient matrices.

    omega_j = dx^j ^ (dtheta_m/2pi + A) + V * (star dx^j), with
    star dx1 = dx2^dx3, star dx2 = dx3^dx1, star dx3 = dx1^dx2.
    """
    v = potential(pt.z, pt.x3, p)
    a1, a2, a3 = connection_real(pt.z, pt.x3, p)

    def asym(entries):
        m = np.zeros((4, 4))
        for (i, j), val in entries.items():
            m[i, j] = val
            m[j, i] = -val
        return m

    w1 = asym({(0, 1): a2, (0, 2): a3, (0, 3): 1.0, (1, 2): v})
    w2 = asym({(0, 1): -a1, (1, 2): a3, (1, 3): 1.0, (0, 2): -v})
    w3 = asym({(0, 2): -a1, (1, 2): -a2, (2, 3): 1.0, (0, 1): v})
    return w1, w2, w3


def holo_symplectic(pt, xi, p, limit=None):
    """Twistor-family holomorphic symplectic form at twistor parameter xi.

    limit='zero' returns xi*Omega at xi=0, limit='inf' returns Omega/xi at
    xi=infinity; otherwise xi must be nonzero.
    """
    w1, w2, w3 = symplectic_forms(pt, p)
    wp = w1 + 1j * w2
    wm = w1 - 1j * w2
    if limit == "zero":
        return -0.5j * wp
    if limit == "inf":
        return -0.5j * wm
    xi = complex(xi)
    if xi == 0:
        raise DomainError("xi = 0 requires limit='zero'")
    return -0.5j / xi * wp + w3.astype(complex) - 0.5j * xi * wm


def pairing_one_forms(pt, xi, p):
    """The electric/magnetic 1-forms whose wedge rebuilds Omega/(4 pi^2)."""
    v = potential(pt.z, pt.x3, p)
    a1, a2, a3 = connection_real(pt.z, pt.x3, p)
    xi = complex(xi)
    pi = math.pi
    # a dz + b dzbar = (a+b) dx1 + i(a-b) dx2
    ae, be = pi / xi, pi * xi
    vec_e = np.array([ae + be, 1j * (ae - be), 2j * pi, 0.0])
    am, bm = 1j * pi * v / xi, -1j * pi * v * xi
    vec_m = np.array([
        am + bm + 2j * pi * a1,
        1j * (am - bm) + 2j * pi * a2,
        2j * pi * a3,
        2j * pi,
    ])
    return vec_e, vec_m


def chart_transition(pt, target):
    """Move a point to the other magnetic chart across the Log(z/Lambda) cut.

    Counterclockwise continuation (principal -> continued) shifts
    theta_m -> theta_m + 2 pi x3 - pi; the reverse crossing undoes it exactly.
    """
    if target not in ("principal", "continued"):
        raise ValueError(f"unknown chart {target!r}")
    if pt.chart == target:
        return pt
    shift = TWO_PI * pt.x3 - math.pi
    if target == "continued":
        theta = pt.theta_m + shift
    else:
        theta = pt.theta_m - shift
    return replace(pt, theta_m=theta, chart=target)


def on_cut(z, p, tol=1e-14):
    """True when z/Lambda sits on the negative real axis (the chart cut)."""
    w = complex(z) / p.cutoff
    return w.real < 0 and abs(w.imag) <= tol * abs(w)


def potential_grid(zs, x3s, p):
    """Vectorized potential over matching arrays (used by the CLI sweeps)."""
    absz = np.abs(np.asarray(zs, dtype=complex)).ravel()
    x3 = np.asarray(x3s, dtype=float).ravel()
    x3 = x3 - np.floor(x3)
    if np.any(absz == 0):
        raise SingularityError("potential_grid requires z != 0; use potential() on the axis")
    out = np.empty_like(absz)
    _v_grid(absz, x3, math.log(abs(p.cutoff)) / TWO_PI, p.series_tol, out)
    if np.any(out <= 0):
        raise DomainError("V <= 0 encountered in grid evaluation")
    return out.reshape(np.shape(zs))


def require_off_cut(z, p):
    if on_cut(z, p):
        raise BranchError(f"z = {z} lies on the chart cut (negative axis of z/Lambda)")
