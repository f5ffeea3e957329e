"""Electric and magnetic twistor coordinates of the periodic-charge space.

The instanton factor is a pair of Cauchy-type integrals along the rays
l_+(z) = (-z)*(0, inf) and l_-(z) = (+z)*(0, inf). In the log-radial variable
the integrand decays double-exponentially, so a uniform trapezoid rule
converges geometrically. Near a ray the kernel's pole is removed exactly via
the partial fraction (xi+s)/(s(s-s_p)) = -1/s + 2/(s-s_p): the 2/(s-s_p) piece
is regularized by a rational window whose integral is +-i*pi in closed form,
which is what makes +-1e-6 approaches to the rays affordable.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchError, DomainError, InvariantViolationError, RayProximityError
from .ovspace import holo_symplectic, on_cut
from .specfun import arg_zero_two_pi, bessel_k0, principal_w

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RaySpec:
    """One of the two jump rays l_{+-}(z), parametrized xi' = -+ z * s, s > 0."""

    base: complex
    sign: int  # +1 for l_+, -1 for l_-

    def __post_init__(self):
        if self.base == 0:
            raise DomainError("rays are attached to nonzero base points")
        if self.sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def direction(self):
        u = self.base / abs(self.base)
        return -u if self.sign > 0 else u

    def point(self, s):
        return self.direction * abs(self.base) * s


@dataclass(frozen=True)
class QuadratureParams:
    """Trapezoid spacing/truncation controls for the ray integrals."""

    h: float = 0.2
    tol: float = 1e-12
    min_dist: float = 1e-8  # minimum |sin(angle to ray)| admitted

    def __post_init__(self):
        if self.h <= 0 or self.tol <= 0 or self.min_dist <= 0:
            raise ValueError("quadrature parameters must be positive")


DEFAULT_QUAD = QuadratureParams()


def xe_ov(z, theta_e, xi):
    """Electric coordinate exp(pi z / xi + i theta_e + pi xi zbar)."""
    return cmath.exp(log_xe_ov(z, theta_e, xi))


def log_xe_ov(z, theta_e, xi):
    xi = complex(xi)
    if xi == 0:
        raise DomainError("xe_ov undefined at xi = 0")
    z = complex(z)
    return math.pi * z / xi + 1j * theta_e + math.pi * xi * z.conjugate()


def _log_cutoff_ratio(z, cutoff, chart):
    w = z / cutoff
    if chart == "principal":
        if on_cut(z, _CutProxy(cutoff)):
            raise BranchError("z/Lambda on the principal cut; supply chart data")
        return complex(math.log(abs(w)), principal_w(w))
    if chart == "continued":
        if w.real > 0 and abs(w.imag) <= 1e-14 * abs(w):
            raise BranchError("z/Lambda on the continued-chart cut")
        return complex(math.log(abs(w)), arg_zero_two_pi(w))
    raise ValueError(f"unknown chart {chart!r}")


class _CutProxy:
    def __init__(self, cutoff):
        self.cutoff = cutoff


def semiflat_coefficient(z, cutoff, chart="principal"):
    """c = (z Log(z/Lambda) - z) / (2i); log Xm_sf = c/xi + i theta_m + conj(c) xi."""
    z = complex(z)
    if z == 0:
        raise DomainError("semiflat coefficient undefined at z = 0")
    lg = _log_cutoff_ratio(z, complex(cutoff), chart)
    return (z * lg - z) / 2j


def log_xm_sf(z, theta_m, xi, cutoff, chart="principal"):
    xi = complex(xi)
    if xi == 0:
        raise DomainError("xm_sf undefined at xi = 0")
    c = semiflat_coefficient(z, cutoff, chart)
    return c / xi + 1j * theta_m + c.conjugate() * xi


def xm_sf(z, theta_m, xi, cutoff, chart="principal"):
    """Semiflat magnetic coordinate (principal branch tied to the chart)."""
    return cmath.exp(log_xm_sf(z, theta_m, xi, cutoff, chart))


def _ray_log_values(sigma, absz, s_theta):
    """Log(1 - Xe(xi'(sigma))) on l_+ (s_theta = +theta_e) or of Xe^-1 on l_-.

    Returns the principal log; the guard Re(1 - Xe) > 0 holds because
    |Xe| < 1 strictly along both rays.
    """
    g = np.exp(-sigma) + absz * absz * np.exp(sigma)
    x = np.exp(-math.pi * g + 1j * s_theta)
    if np.any(np.abs(x) >= 1.0):
        raise InvariantViolationError("|Xe| >= 1 on a jump ray")
    if np.any(1.0 - x.real <= 0.0):
        raise InvariantViolationError("Re(1 - Xe) <= 0 on a jump ray")
    return np.log1p(-x)


def _ray_value_at(s, absz, s_theta):
    g = 1.0 / s + absz * absz * s
    x = np.exp(-math.pi * g + 1j * s_theta)
    return np.log1p(-x), x


def _ray_integral(z, theta_e, xi, sign, q):
    """I = int_0^inf (ds/s) (xi + xi')/(xi' - xi) L(xi') along l_sign(z)."""
    z = complex(z)
    absz = abs(z)
    c = -z if sign > 0 else z
    s_p = xi / c
    delta = math.atan2(s_p.imag, s_p.real)
    if abs(math.sin(delta)) < q.min_dist and s_p.real > 0:
        raise RayProximityError(
            f"xi = {xi} is within {q.min_dist} of ray l_{'+' if sign > 0 else '-'}({z})"
        )
    s_theta = theta_e if sign > 0 else -theta_e

    # node window: L has its maximum at sigma* = -log|z|
    sig_star = -math.log(absz)
    halfw = math.acosh(1.0 + (math.log(1.0 / q.tol) + 8.0) / (TWO_PI * absz))
    lo = sig_star - halfw
    hi = sig_star + halfw

    pole_mode = abs(delta) < 0.7
    if pole_mode:
        lp, _ = _ray_value_at(np.array([s_p]), absz, s_theta)
        lp = complex(lp[0])
        sig_p = cmath.log(s_p)
        tail = math.log(max(4.0 * abs(lp) * max(abs(s_p), 1.0 / abs(s_p)), 1.0) / q.tol) + 5.0
        lo = min(lo, sig_p.real - tail)
        hi = max(hi, sig_p.real + tail)
        # d/ds Log(1 - Xe) at the pole, for the removable-singularity limit
        x_p = cmath.exp(-math.pi * (1.0 / s_p + absz * absz * s_p) + 1j * s_theta)
        dx_p = x_p * (-math.pi) * (-1.0 / (s_p * s_p) + absz * absz)
        lprime = -dx_p / (1.0 - x_p)
        sing = 2.0 * lp * (1j * math.pi if delta > 0 else -1j * math.pi)

    def evaluate(h):
        n_lo = int(math.floor((sig_star - lo) / h))
        n_hi = int(math.ceil((hi - sig_star) / h))
        sigma = sig_star + h * np.arange(-n_lo, n_hi + 1)
        lvals = _ray_log_values(sigma, absz, s_theta)
        s = np.exp(sigma)
        if not pole_mode:
            integrand = (s + s_p) / (s - s_p) * lvals
        else:
            phi = 2.0 * s_p / (s + s_p)
            diff = s - s_p
            near = np.abs(diff) < 1e-3 * abs(s_p)
            ratio = np.empty_like(lvals)
            np.divide(lvals - lp * phi, diff, out=ratio, where=~near)
            if near.any():
                ratio[near] = lprime + lp / (2.0 * s_p)
            integrand = -lvals + 2.0 * ratio * s
        return integrand.sum() * h

    h = q.h
    prev = evaluate(h)
    for _ in range(10):
        h *= 0.5
        cur = evaluate(h)
        if abs(cur - prev) <= 0.25 * q.tol * max(1.0, abs(cur)):
            prev = cur
            break
        prev = cur
    return prev + sing if pole_mode else prev


def log_xm_inst(z, theta_e, xi, q=DEFAULT_QUAD):
    """Logarithm of the instanton factor: (i/4 pi)(I_+ - I_-)."""
    z = complex(z)
    xi = complex(xi)
    if z == 0 or xi == 0:
        raise DomainError("xm_inst requires z != 0 and xi != 0")
    ip = _ray_integral(z, theta_e, xi, +1, q)
    im = _ray_integral(z, theta_e, xi, -1, q)
    return 0.25j / math.pi * (ip - im)


def xm_inst(z, theta_e, xi, q=DEFAULT_QUAD):
    return cmath.exp(log_xm_inst(z, theta_e, xi, q))


def log_xm_ov(z, theta_e, theta_m, xi, cutoff, q=DEFAULT_QUAD, chart="principal"):
    """Continuous logarithm of Xm_ov = Xm_sf * Xm_inst."""
    return log_xm_sf(z, theta_m, xi, cutoff, chart) + log_xm_inst(z, theta_e, xi, q)


def xm_ov(z, theta_e, theta_m, xi, cutoff, q=DEFAULT_QUAD, chart="principal"):
    return cmath.exp(log_xm_ov(z, theta_e, theta_m, xi, cutoff, q, chart))


def bessel_angle_sum(z, theta_e, tol=1e-14):
    """(1/pi) sum_{s>=1} sin(s theta_e) K0(2 pi s |z|) / s (real part of the
    xi^0 term of log Xm as xi -> 0)."""
    absz = abs(complex(z))
    if absz == 0:
        raise DomainError("angle sum undefined at z = 0")
    total = 0.0
    for n in range(1, 100000):
        k0 = bessel_k0(TWO_PI * n * absz)
        if k0 / n < tol:
            break
        total += math.sin(n * theta_e) * k0 / n
    return total / math.pi


def asym_log0(z, theta_e, theta_m, tol=1e-14):
    """xi^0 coefficient of log Xm_ov as xi -> 0: i theta_m + Bessel angle sum."""
    return 1j * theta_m + bessel_angle_sum(z, theta_e, tol)


def extract_xi0(z, theta_e, theta_m, cutoff, rho, direction=None, q=DEFAULT_QUAD):
    """Measure the xi^0 coefficient of log Xm_ov from two small-|xi| samples.

    The known semiflat part c/xi + i theta_m + conj(c) xi is removed first
    (its xi^1 piece is the conjugate of the xi^-1 piece, the reality pairing);
    a small Vandermonde solve in (xi^0, xi^1, xi^2) then eats the leading
    instanton slopes, leaving an O(rho^3) error.
    """
    z = complex(z)
    if direction is None:
        direction = cmath.exp(1j * (cmath.phase(z) + 0.4 * math.pi))
    c = semiflat_coefficient(z, cutoff)
    xis = np.array([rho, 0.5 * rho, 0.25 * rho]) * direction
    vals = [
        log_xm_ov(z, theta_e, theta_m, xi, cutoff, q)
        - (c / xi + 1j * theta_m + c.conjugate() * xi)
        for xi in xis
    ]
    vander = np.vander(xis, 3, increasing=True)
    g0 = np.linalg.solve(vander, np.array(vals))[0]
    return 1j * theta_m + g0


def symplectic_residual(pt, xi, p, q=DEFAULT_QUAD, h=1e-4, nudge=0.0):
    """Max coefficient gap between -(1/4 pi^2) dlogXe ^ dlogXm and Omega(xi).

    Central differences in the chart coordinates (x1, x2, x3, t); `nudge`
    rotates xi off a ray by that angle before differencing (used by the
    ray-continuity check).
    """
    xi = complex(xi) * cmath.exp(1j * nudge)
    base = pt.coords

    def logs(c4):
        z = complex(c4[0], c4[1])
        te = TWO_PI * c4[2]
        tm = TWO_PI * c4[3]
        return (
            log_xe_ov(z, te, xi),
            log_xm_ov(z, te, tm, xi, p.cutoff, q, pt.chart),
        )

    de = np.zeros(4, dtype=complex)
    dm = np.zeros(4, dtype=complex)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        ep, mp_ = logs(base + e)
        em, mm = logs(base - e)
        de[i] = (ep - em) / (2 * h)
        dm[i] = (mp_ - mm) / (2 * h)
    built = -(np.outer(de, dm) - np.outer(dm, de)) / (4.0 * math.pi ** 2)
    target = holo_symplectic(pt, xi, p)
    return float(np.max(np.abs(built - target)))
