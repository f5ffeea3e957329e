"""Field interpolation: bicubic spline in (log r, theta) plus a center patch.

Spline coefficients are assembled once with scipy (not-a-knot radially,
periodic in angle) into a per-cell polynomial table that the jitted transport
kernels evaluate directly, including first derivatives. Inside the innermost
rings the log-radial chart degenerates, so a small Cartesian polynomial patch
fitted on the inner rings takes over; the two agree to the fit residual.
"""

import math

import numpy as np
from scipy.interpolate import CubicSpline

from ._backend import njit


def build_cell_coeffs(u, theta, values):
    """Tensor-product bicubic coefficients on a uniform (u, theta) grid.

    values: (n_u, n_t, k) real. Returns (n_u-1, n_t, 4, 4, k) with the angle
    index wrapping; C[i, j, a, b] multiplies (u-u_i)^(3-a) (th-th_j)^(3-b).
    """
    n_u, n_t, k = values.shape
    su = CubicSpline(u, values, axis=0)  # not-a-knot
    cu = su.c  # (4, n_u-1, n_t, k)
    th_ext = np.concatenate([theta, [theta[0] + 2.0 * math.pi]])
    ext = np.concatenate([cu, cu[:, :, :1, :]], axis=2)
    st = CubicSpline(th_ext, ext, axis=2, bc_type="periodic")
    ct = st.c  # (4, 4, n_u-1, n_t, k)
    return np.ascontiguousarray(ct.transpose(2, 3, 0, 1, 4))


@njit(inline="always")
def _cell_eval(coeffs, i, j, du_loc, dt_loc, out_f, out_du, out_dt):
    """Evaluate value and first derivatives of all components in one cell."""
    k = coeffs.shape[4]
    for c in range(k):
        f = 0.0
        fdu = 0.0
        fdt = 0.0
        for a in range(4):
            pa = du_loc ** (3 - a)
            pda = (3 - a) * du_loc ** (2 - a) if a < 3 else 0.0
            for b in range(4):
                pb = dt_loc ** (3 - b)
                pdb = (3 - b) * dt_loc ** (2 - b) if b < 3 else 0.0
                cc = coeffs[i, j, a, b, c]
                f += cc * pa * pb
                fdu += cc * pda * pb
                fdt += cc * pa * pdb
        out_f[c] = f
        out_du[c] = fdu
        out_dt[c] = fdt


@njit
def spline_eval(coeffs, u0, du, t0, dt, n_u, n_t, u, th, out_f, out_du, out_dt):
    """Evaluate the tensor spline at (u, th); th wraps mod 2*pi."""
    iu = int(math.floor((u - u0) / du))
    if iu < 0:
        iu = 0
    if iu > n_u - 2:
        iu = n_u - 2
    tw = (th - t0) % (2.0 * math.pi)
    jt = int(math.floor(tw / dt))
    if jt > n_t - 1:
        jt = n_t - 1
    _cell_eval(coeffs, iu, jt, u - (u0 + iu * du), tw - jt * dt, out_f, out_du, out_dt)


def fit_center_patch(xs, ys, values, degree=4):
    """Least-squares polynomial fit in (x, y) for the innermost region.

    values: (n_pts, k). Returns (n_terms, k) coefficients over the monomial
    basis x^p y^q with p+q <= degree, ordered lexicographically in (p, q).
    """
    terms = [(p, q) for p in range(degree + 1) for q in range(degree + 1 - p)]
    a = np.stack([xs ** p * ys ** q for (p, q) in terms], axis=1)
    coef, *_ = np.linalg.lstsq(a, values, rcond=None)
    resid = np.max(np.abs(a @ coef - values)) if len(xs) else 0.0
    powers = np.array(terms, dtype=np.int64)
    return powers, coef, float(resid)


@njit
def patch_eval(powers, coef, x, y, out_f, out_dx, out_dy):
    k = coef.shape[1]
    for c in range(k):
        out_f[c] = 0.0
        out_dx[c] = 0.0
        out_dy[c] = 0.0
    for t in range(powers.shape[0]):
        p = powers[t, 0]
        q = powers[t, 1]
        xp = x ** p
        yq = y ** q
        dxp = p * x ** (p - 1) if p > 0 else 0.0
        dyq = q * y ** (q - 1) if q > 0 else 0.0
        for c in range(k):
            cc = coef[t, c]
            out_f[c] += cc * xp * yq
            out_dx[c] += cc * dxp * yq
            out_dy[c] += cc * xp * dyq
