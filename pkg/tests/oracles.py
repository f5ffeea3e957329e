"""Independent numerical oracles used to freeze expected values.

These deliberately avoid the implementation paths they check: Bessel values
come from the integral representation summed by a composite trapezoid rule,
derivatives from central differences, and series limits from direct partial
sums.
"""

import math

import numpy as np


def bessel_k_quadrature(nu, x, h=5e-3, tol=5e-15):
    """K_nu(x) = int_0^inf exp(-x*cosh t) * cosh(nu*t) dt by trapezoid.

    The integrand decays double-exponentially in t, so a uniform step with
    adaptive truncation converges geometrically; `h` is halved until two
    successive answers agree to `tol` relatively.
    """
    # truncate where exp(-x cosh t) is below roundoff relative to exp(-x)
    tmax = math.acosh(min((x + 45.0) / x, 1e12))

    def run(step):
        t = np.arange(0.0, tmax, step)
        vals = np.exp(-x * np.cosh(t)) * np.cosh(nu * t)
        return (vals.sum() - 0.5 * vals[0]) * step

    prev = run(h)
    for _ in range(8):
        h *= 0.5
        cur = run(h)
        if abs(cur - prev) <= tol * abs(cur):
            return cur
        prev = cur
    return prev


def k0_small_series(x, terms=60):
    """Small-x oracle: K0 = -(log(x/2)+gamma) I0 + sum H_k t^k/(k!)^2."""
    g = 0.5772156649015328606
    t = 0.25 * x * x
    i0 = 1.0
    s = 0.0
    term = 1.0
    hk = 0.0
    for k in range(1, terms):
        term *= t / (k * k)
        hk += 1.0 / k
        i0 += term
        s += hk * term
    return -(math.log(0.5 * x) + g) * i0 + s


def central_diff(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def central_diff4(f, x, h):
    """Fourth-order central first derivative."""
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h)


def second_diff(f, x, h):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def second_diff4(f, x, h):
    """Fourth-order central second derivative."""
    return (
        -f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)
    ) / (12.0 * h * h)


def grad4(f, pt, h):
    """Central-difference gradient of a scalar function of 4 coordinates."""
    pt = np.asarray(pt, dtype=float)
    out = np.zeros(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        out[i] = (f(pt + e) - f(pt - e)) / (2.0 * h)
    return out


def inst_log_oracle(z, theta_e, xi, h=0.02, pad=6.0):
    """Naive fixed-step trapezoid for log Xm_inst, valid away from the rays.

    Independent of the production path: parametrizes each ray by s = e^sigma
    and sums the raw Cauchy kernel with no pole handling.
    """
    z = complex(z)
    absz = abs(z)
    total = 0j
    for sign, s_th in ((+1, theta_e), (-1, -theta_e)):
        c = -z if sign > 0 else z
        s_p = xi / c
        star = -math.log(absz)
        width = math.acosh(1.0 + 40.0 / (2.0 * math.pi * absz)) + pad
        sigma = np.arange(star - width, star + width, h)
        s = np.exp(sigma)
        g = np.exp(-sigma) + absz * absz * s
        x = np.exp(-math.pi * g + 1j * s_th)
        lvals = np.log1p(-x)
        total += sign * ((s + s_p) / (s - s_p) * lvals).sum() * h
    return 0.25j / math.pi * total
