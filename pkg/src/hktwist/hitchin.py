"""Harmonic-metric solver for the rank-2 wild Higgs bundle with quadratic
determinant, plus the framed-bundle data consumed by the transport layer.

The unknown is the log-metric S (traceless Hermitian, three real fields) on a
geometric polar grid; H = exp(S) keeps det = 1 and positivity unconditionally.
The discretized equation per interior node is the conjugated residual
P = H^(1/2) [ H^-1 H_zzbar - H^-1 H_zbar H^-1 H_z - (T Td - Td T) ] H^(-1/2),
Td = H^-1 T*^t H, which is exactly Hermitian on Hermitian nodal data; its
(P11, Re P12, Im P12) components are driven to zero by a damped quasi-Newton
iteration with a finite-difference colored sparse Jacobian.
"""

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from ._backend import USE_NUMBA, njit
from .errors import DomainError, SolverError
from .interp import build_cell_coeffs, fit_center_patch, patch_eval, spline_eval
from .specfun import principal_z

TWO_PI = 2.0 * math.pi


# ----------------------------------------------------------------- specs


@dataclass(frozen=True)
class HiggsSpec:
    """Wild Higgs data: quadratic-differential parameter and parabolic weight."""

    m: complex = 0j
    m3: float = 0.0

    def __post_init__(self):
        if not (-0.5 < self.m3 <= 0.5):
            raise ValueError(f"m3 must lie in (-1/2, 1/2], got {self.m3}")

    @property
    def turning_radius(self):
        return math.sqrt(2.0 * abs(self.m))


@dataclass(frozen=True)
class PolarGrid:
    """Geometric (log-uniform) radial rings by uniform angles."""

    R: float = 4.0
    n_r: int = 96
    n_theta: int = 128
    r_min: float = 0.0  # 0 -> default R/200

    def __post_init__(self):
        if self.n_theta % 4 != 0:
            raise ValueError("n_theta must be divisible by 4")
        if self.n_r < 8:
            raise ValueError("n_r too small")
        if self.r_min <= 0.0:
            object.__setattr__(self, "r_min", self.R / 200.0)
        if not 0 < self.r_min < self.R:
            raise ValueError("need 0 < r_min < R")

    @property
    def u(self):
        return np.linspace(math.log(self.r_min), math.log(self.R), self.n_r)

    @property
    def du(self):
        return (math.log(self.R) - math.log(self.r_min)) / (self.n_r - 1)

    @property
    def radii(self):
        return np.exp(self.u)

    @property
    def theta(self):
        return np.arange(self.n_theta) * (TWO_PI / self.n_theta)

    @property
    def dtheta(self):
        return TWO_PI / self.n_theta

    def nodes_z(self):
        r = self.radii[:, None]
        th = self.theta[None, :]
        return r * np.exp(1j * th)


def check_grid_radius(spec, grid):
    need = 3.0 * max(1.0, spec.turning_radius / math.sqrt(2.0) * math.sqrt(2.0))
    need = 3.0 * max(1.0, math.sqrt(2.0 * abs(spec.m)))
    if grid.R < need - 1e-12:
        raise DomainError(f"grid radius {grid.R} below 3*max(1, sqrt|2m|) = {need}")


# ----------------------------------------------------- Higgs field matrices


def higgs_matrix(spec, z, mode="cyclic"):
    """2x2 Higgs coefficient T with theta = T dz."""
    z = np.asarray(z, dtype=complex)
    t = np.zeros(z.shape + (2, 2), dtype=complex)
    if mode == "cyclic":
        t[..., 0, 1] = 1.0
        t[..., 1, 0] = z * z + 2.0 * spec.m
    elif mode == "diagonal":
        t[..., 0, 0] = z
        t[..., 1, 1] = -z
    else:
        raise ValueError(f"unknown Higgs mode {mode!r}")
    return t


def eigenvalue_lambda(spec, z):
    """Branch of sqrt(z^2 + 2m) asymptotic to +z, single-valued for |z|^2 > |2m|."""
    z = np.asarray(z, dtype=complex)
    return z * np.sqrt(1.0 + 2.0 * spec.m / (z * z))


# ------------------------------------------------------- S <-> H closed forms


def expm_traceless(s1, s2, s3):
    """exp of S = [[s1, s2+i s3], [s2-i s3, -s1]] (arrays ok)."""
    lam = np.sqrt(s1 * s1 + s2 * s2 + s3 * s3)
    ch = np.cosh(lam)
    f = np.where(lam > 1e-8, np.sinh(np.where(lam > 1e-8, lam, 1.0)) / np.where(lam > 1e-8, lam, 1.0), 1.0 + lam * lam / 6.0)
    h11 = ch + f * s1
    h22 = ch - f * s1
    h12 = f * (s2 + 1j * s3)
    return h11, h12, h22


def logm_det1(h11, h12, h22):
    """Inverse of expm_traceless for Hermitian positive det-1 matrices."""
    tr = h11 + h22
    ch = np.maximum(tr / 2.0, 1.0)
    lam = np.arccosh(ch)
    sh = np.sinh(lam)
    g = np.where(lam > 1e-8, lam / np.where(sh > 0, sh, 1.0), 1.0 - lam * lam / 6.0)
    s1 = g * (h11 - ch)
    s12 = g * h12
    return np.stack([np.real(s1), np.real(s12), np.imag(s12)], axis=-1)


# --------------------------------------------------------------- boundary


def semiflat_boundary(spec, z):
    """Decoupled metric: diag(|w|^{2 m3}, |w|^{-2 m3}) on the unit eigenframe,
    pushed to the global frame. Exact Hitchin solution away from the turning
    disk; Hermitian with det 1 by construction."""
    z = complex(z)
    lam = complex(eigenvalue_lambda(spec, z))
    if abs(2.0 * spec.m / (z * z)) > 0.75:
        raise DomainError(f"eigenframe ill-conditioned at z = {z}: radius too small")
    r = abs(z)
    v = np.array([[1.0, 1.0], [lam, -lam]])
    d = np.diag([r ** (-2.0 * spec.m3), r ** (2.0 * spec.m3)])
    vinv = np.linalg.inv(v)
    h = 2.0 * abs(lam) * (vinv.conj().T @ d @ vinv)
    h = 0.5 * (h + h.conj().T)
    return h


def boundary_s_fields(spec, grid, mode="cyclic"):
    """S = log H on the outer ring (identity metric in diagonal mode)."""
    if mode == "diagonal":
        return np.zeros((grid.n_theta, 3))
    out = np.zeros((grid.n_theta, 3))
    R = grid.R
    for j, th in enumerate(grid.theta):
        h = semiflat_boundary(spec, R * np.exp(1j * th))
        out[j] = logm_det1(h[0, 0].real, h[0, 1], h[1, 1].real)
    return out


# ------------------------------------------------------------ residual core

# The njit kernel loops nodes with scalar complex algebra; the numpy kernel
# does the same arithmetic on whole-grid arrays. Both produce the residual on
# rings 0..n_r-2 (outer ring is Dirichlet data).


@njit(inline="always")
def _pprime(h11, h12, h22, m11, m12, m21, m22, t11, t12, t21, t22):
    """Components (P11, Re P12, Im P12) of H^(1/2) R H^(-1/2) where
    R = Hinv*(M) - (T*Td - Td*T), M supplied, Td = Hinv T*^t H."""
    det = h11 * h22 - (h12 * h12.conjugate()).real
    i11 = h22 / det
    i12 = -h12 / det
    i21 = -h12.conjugate() / det
    i22 = h11 / det
    # Td = Hinv @ conj(T).T @ H
    c11 = t11.conjugate()
    c12 = t21.conjugate()
    c21 = t12.conjugate()
    c22 = t22.conjugate()
    a11 = i11 * c11 + i12 * c21
    a12 = i11 * c12 + i12 * c22
    a21 = i21 * c11 + i22 * c21
    a22 = i21 * c12 + i22 * c22
    d11 = a11 * h11 + a12 * h12.conjugate()
    d12 = a11 * h12 + a12 * h22
    d21 = a21 * h11 + a22 * h12.conjugate()
    d22 = a21 * h12 + a22 * h22
    # commutator T@Td - Td@T
    k11 = t11 * d11 + t12 * d21 - (d11 * t11 + d12 * t21)
    k12 = t11 * d12 + t12 * d22 - (d11 * t12 + d12 * t22)
    k21 = t21 * d11 + t22 * d21 - (d21 * t11 + d22 * t21)
    k22 = t21 * d12 + t22 * d22 - (d21 * t12 + d22 * t22)
    # R = Hinv @ M - K
    r11 = i11 * m11 + i12 * m21 - k11
    r12 = i11 * m12 + i12 * m22 - k12
    r21 = i21 * m11 + i22 * m21 - k21
    r22 = i21 * m12 + i22 * m22 - k22
    # H^(1/2) = (H + I)/sqrt(tr + 2); H^(-1/2) its adjugate (det = 1)
    s = math.sqrt((h11 + h22).real + 2.0)
    q11 = (h11 + 1.0) / s
    q12 = h12 / s
    q21 = h12.conjugate() / s
    q22 = (h22 + 1.0) / s
    w11 = q11 * r11 + q12 * r21
    w12 = q11 * r12 + q12 * r22
    w21 = q21 * r11 + q22 * r21
    w22 = q21 * r12 + q22 * r22
    p11 = w11 * q22 + w12 * (-q21)
    p12 = w11 * (-q12) + w12 * q11
    return p11.real, p12.real, p12.imag


@njit
def _residual_loop(su1, su2, su3, sc, radii, du, dth, t11, t12, t21, t22, out):
    n_r = su1.shape[0]
    n_t = su1.shape[1]
    h11 = np.empty((n_r, n_t))
    h12 = np.empty((n_r, n_t), dtype=np.complex128)
    h22 = np.empty((n_r, n_t))
    for i in range(n_r):
        for j in range(n_t):
            lam = math.sqrt(su1[i, j] ** 2 + su2[i, j] ** 2 + su3[i, j] ** 2)
            c = math.cosh(lam)
            f = math.sinh(lam) / lam if lam > 1e-8 else 1.0 + lam * lam / 6.0
            h11[i, j] = c + f * su1[i, j]
            h22[i, j] = c - f * su1[i, j]
            h12[i, j] = f * (su2[i, j] + 1j * su3[i, j])
    # center matrix
    lamc = math.sqrt(sc[0] ** 2 + sc[1] ** 2 + sc[2] ** 2)
    cc = math.cosh(lamc)
    fc = math.sinh(lamc) / lamc if lamc > 1e-8 else 1.0 + lamc * lamc / 6.0
    hc11 = cc + fc * sc[0]
    hc22 = cc - fc * sc[0]
    hc12 = fc * (sc[1] + 1j * sc[2])

    for i in range(n_r - 1):
        r = radii[i]
        for j in range(n_t):
            jp = j + 1 if j + 1 < n_t else 0
            jm = j - 1 if j - 1 >= 0 else n_t - 1
            th = j * dth
            eth = math.cos(th) - 1j * math.sin(th)
            # assemble the three Hermitian matrices H, H_r(-like), H_th and
            # the second-derivative combination M = H_zzbar - Hzb Hinv Hz
            a11 = h11[i, j] + 0j
            a12 = h12[i, j]
            a22 = h22[i, j] + 0j
            # theta derivatives
            d11t = (h11[i, jp] - h11[i, jm]) / (2.0 * dth)
            d12t = (h12[i, jp] - h12[i, jm]) / (2.0 * dth)
            d22t = (h22[i, jp] - h22[i, jm]) / (2.0 * dth)
            l11t = (h11[i, jp] - 2.0 * h11[i, j] + h11[i, jm]) / (dth * dth)
            l12t = (h12[i, jp] - 2.0 * h12[i, j] + h12[i, jm]) / (dth * dth)
            l22t = (h22[i, jp] - 2.0 * h22[i, j] + h22[i, jm]) / (dth * dth)
            if i >= 1:
                iu = 1.0 / (r * du)
                d11r = (h11[i + 1, j] - h11[i - 1, j]) * 0.5 * iu
                d12r = (h12[i + 1, j] - h12[i - 1, j]) * 0.5 * iu
                d22r = (h22[i + 1, j] - h22[i - 1, j]) * 0.5 * iu
                # laplacian radial part: (f_uu)/r^2 + 0 (log-radial metric folds f_r/r in)
                lap11 = (h11[i + 1, j] - 2.0 * h11[i, j] + h11[i - 1, j]) / (du * du)
                lap12 = (h12[i + 1, j] - 2.0 * h12[i, j] + h12[i - 1, j]) / (du * du)
                lap22 = (h22[i + 1, j] - 2.0 * h22[i, j] + h22[i - 1, j]) / (du * du)
                m11 = (lap11 + l11t) / (4.0 * r * r)
                m12 = (lap12 + l12t) / (4.0 * r * r)
                m22 = (lap22 + l22t) / (4.0 * r * r)
            else:
                # innermost ring: radial stencil through the center value
                a = r
                b = radii[1] - r
                w_c = -b / (a * (a + b))
                w_0 = (b - a) / (a * b)
                w_1 = a / (b * (a + b))
                d11r = w_c * hc11 + w_0 * h11[0, j] + w_1 * h11[1, j]
                d12r = w_c * hc12 + w_0 * h12[0, j] + w_1 * h12[1, j]
                d22r = w_c * hc22 + w_0 * h22[0, j] + w_1 * h22[1, j]
                v_c = 2.0 / (a * (a + b))
                v_0 = -2.0 / (a * b)
                v_1 = 2.0 / (b * (a + b))
                rr11 = v_c * hc11 + v_0 * h11[0, j] + v_1 * h11[1, j]
                rr12 = v_c * hc12 + v_0 * h12[0, j] + v_1 * h12[1, j]
                rr22 = v_c * hc22 + v_0 * h22[0, j] + v_1 * h22[1, j]
                m11 = (rr11 + d11r / r + l11t / (r * r)) / 4.0
                m12 = (rr12 + d12r / r + l12t / (r * r)) / 4.0
                m22 = (rr22 + d22r / r + l22t / (r * r)) / 4.0
            # Hz = e^{-i th} (H_r - i H_th / r)/2
            z11 = 0.5 * eth * (d11r - 1j * d11t / r)
            z12 = 0.5 * eth * (d12r - 1j * d12t / r)
            z21 = 0.5 * eth * (d12r.conjugate() - 1j * d12t.conjugate() / r)
            z22 = 0.5 * eth * (d22r - 1j * d22t / r)
            # Hzb = Hz^dagger
            b11 = z11.conjugate()
            b12 = z21.conjugate()
            b21 = z12.conjugate()
            b22 = z22.conjugate()
            det = (a11 * a22).real - (a12 * a12.conjugate()).real
            i11 = a22 / det
            i12 = -a12 / det
            i21 = -a12.conjugate() / det
            i22 = a11 / det
            # M -= Hzb @ Hinv @ Hz
            x11 = b11 * i11 + b12 * i21
            x12 = b11 * i12 + b12 * i22
            x21 = b21 * i11 + b22 * i21
            x22 = b21 * i12 + b22 * i22
            m11 = m11 - (x11 * z11 + x12 * z21)
            m12 = m12 - (x11 * z12 + x12 * z22)
            m21c = m12.conjugate()
            m22 = m22 - (x21 * z12 + x22 * z22)
            p1, p2, p3 = _pprime(
                a11, a12, a22, m11, m12, m21c, m22,
                t11[i, j], t12[i, j], t21[i, j], t22[i, j],
            )
            out[i, j, 0] = p1
            out[i, j, 1] = p2
            out[i, j, 2] = p3


def _residual_numpy(su, sc, radii, du, dth, tmat):
    """Vectorized residual; same arithmetic as the njit loop."""
    n_r, n_t, _ = su.shape
    h11, h12, h22 = expm_traceless(su[..., 0], su[..., 1], su[..., 2])
    hc11, hc12, hc22 = expm_traceless(sc[0], sc[1], sc[2])

    th = np.arange(n_t) * dth
    eth = np.exp(-1j * th)[None, :]
    r = radii[: n_r - 1, None]

    def stack(m11, m12, m22):
        out = np.empty(m11.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = m11
        out[..., 0, 1] = m12
        out[..., 1, 0] = np.conj(m12)
        out[..., 1, 1] = m22
        return out

    H = stack(h11 + 0j, h12, h22 + 0j)

    def theta_d(f):
        return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * dth)

    def theta_dd(f):
        return (np.roll(f, -1, axis=1) - 2.0 * f + np.roll(f, 1, axis=1)) / (dth * dth)

    comps = {}
    for name, f, fc in (("h11", h11 + 0j, hc11), ("h12", h12, hc12), ("h22", h22 + 0j, hc22)):
        dt = theta_d(f)[: n_r - 1]
        ddt = theta_dd(f)[: n_r - 1]
        dr = np.empty((n_r - 1, n_t), dtype=complex)
        lap = np.empty((n_r - 1, n_t), dtype=complex)
        dr[1:] = (f[2:n_r] - f[: n_r - 2]) / (2.0 * du) / radii[1 : n_r - 1, None]
        lap[1:] = (
            (f[2:n_r] - 2.0 * f[1 : n_r - 1] + f[: n_r - 2]) / (du * du) + ddt[1:]
        ) / (4.0 * radii[1 : n_r - 1, None] ** 2)
        a = radii[0]
        b = radii[1] - radii[0]
        dr[0] = (-b / (a * (a + b))) * fc + ((b - a) / (a * b)) * f[0] + (a / (b * (a + b))) * f[1]
        rr0 = (2.0 / (a * (a + b))) * fc - (2.0 / (a * b)) * f[0] + (2.0 / (b * (a + b))) * f[1]
        lap[0] = (rr0 + dr[0] / a + ddt[0] / (a * a)) / 4.0
        comps[name] = (dr, dt, lap)

    hz = np.empty((n_r - 1, n_t, 2, 2), dtype=complex)
    lapm = np.empty((n_r - 1, n_t, 2, 2), dtype=complex)
    for (i, j, name) in ((0, 0, "h11"), (0, 1, "h12"), (1, 1, "h22")):
        dr, dt, lap = comps[name]
        hz[..., i, j] = 0.5 * eth * (dr - 1j * dt / r)
        lapm[..., i, j] = lap
    hz[..., 1, 0] = 0.5 * eth * (np.conj(comps["h12"][0]) - 1j * np.conj(comps["h12"][1]) / r)
    lapm[..., 1, 0] = np.conj(lapm[..., 0, 1])

    Hi = np.linalg.inv(H[: n_r - 1])
    hzb = np.conj(np.swapaxes(hz, -1, -2))
    M = lapm - hzb @ Hi @ hz
    T = tmat[: n_r - 1]
    Td = Hi @ np.conj(np.swapaxes(T, -1, -2)) @ H[: n_r - 1]
    R = Hi @ M - (T @ Td - Td @ T)
    s = np.sqrt(np.real(H[: n_r - 1, ..., 0, 0] + H[: n_r - 1, ..., 1, 1]) + 2.0)
    Q = (H[: n_r - 1] + np.eye(2)) / s[..., None, None]
    Qi = np.empty_like(Q)
    Qi[..., 0, 0] = Q[..., 1, 1]
    Qi[..., 1, 1] = Q[..., 0, 0]
    Qi[..., 0, 1] = -Q[..., 0, 1]
    Qi[..., 1, 0] = -Q[..., 1, 0]
    P = Q @ R @ Qi
    out = np.empty((n_r - 1, n_t, 3))
    out[..., 0] = P[..., 0, 0].real
    out[..., 1] = P[..., 0, 1].real
    out[..., 2] = P[..., 0, 1].imag
    return out


# ------------------------------------------------------------- solver


@dataclass(frozen=True)
class NewtonParams:
    max_iters: int = 40
    tol: float = 1e-8
    damping: float = 0.5   # step shrink factor in the line search
    fd_eps: float = 1e-6


@dataclass
class MetricField:
    """Solved log-metric on a polar grid, plus the solve diagnostics."""

    spec: HiggsSpec
    grid: PolarGrid
    mode: str
    s_fields: np.ndarray  # (n_r, n_theta, 3); outer ring = boundary data
    residual_sup: float
    residual_history: list
    def center_s(self):
        return derived_center(self.s_fields, self.grid.radii)

    def h_matrices(self):
        h11, h12, h22 = expm_traceless(
            self.s_fields[..., 0], self.s_fields[..., 1], self.s_fields[..., 2]
        )
        return h11, h12, h22


def derived_center(s_fields, radii):
    """Even-extension value at r = 0 from the first two ring means."""
    m0 = s_fields[0].mean(axis=0)
    m1 = s_fields[1].mean(axis=0)
    r0sq = radii[0] ** 2
    r1sq = radii[1] ** 2
    return (m0 * r1sq - m1 * r0sq) / (r1sq - r0sq)


def _residual_for(su, sc, grid, tmat):
    if USE_NUMBA:
        out = np.empty((grid.n_r - 1, grid.n_theta, 3))
        _residual_loop(
            np.ascontiguousarray(su[..., 0]),
            np.ascontiguousarray(su[..., 1]),
            np.ascontiguousarray(su[..., 2]),
            sc,
            grid.radii,
            grid.du,
            grid.dtheta,
            np.ascontiguousarray(tmat[..., 0, 0]),
            np.ascontiguousarray(tmat[..., 0, 1]),
            np.ascontiguousarray(tmat[..., 1, 0]),
            np.ascontiguousarray(tmat[..., 1, 1]),
            out,
        )
        return out
    return _residual_numpy(su, sc, grid.radii, grid.du, grid.dtheta, tmat)


def hitchin_residual(field):
    """Residual of a MetricField on its own grid (sup over components)."""
    tmat = higgs_matrix(field.spec, field.grid.nodes_z(), field.mode)
    res = _residual_for(field.s_fields, field.center_s(), field.grid, tmat)
    return res


def _initial_guess(spec, grid, mode):
    s = np.zeros((grid.n_r, grid.n_theta, 3))
    if mode == "diagonal" or abs(spec.m) == 0 and spec.m3 == 0.0:
        return s
    rt = spec.turning_radius
    lo, hi = 1.4 * rt, max(2.1 * rt, 1.4 * rt + 0.3)
    for i, r in enumerate(grid.radii):
        if r <= lo:
            continue
        w = 1.0 if r >= hi else 0.5 - 0.5 * math.cos(math.pi * (r - lo) / (hi - lo))
        for j, th in enumerate(grid.theta):
            h = semiflat_boundary(spec, r * np.exp(1j * th))
            s[i, j] = w * logm_det1(h[0, 0].real, h[0, 1], h[1, 1].real)
    return s


def _coloring(n_i, n_t):
    """Columns (i, j, k) grouped so no two same-colored unknowns share a
    5-point stencil row; 4x4x3 classes (n_theta divisible by 4)."""
    colors = {}
    for ci in range(4):
        for cj in range(4):
            for k in range(3):
                ii, jj = np.meshgrid(
                    np.arange(ci, n_i, 4), np.arange(cj, n_t, 4), indexing="ij"
                )
                colors[(ci, cj, k)] = (ii.ravel(), jj.ravel(), k)
    return colors


def solve_harmonic(spec, grid, newton=None, mode="cyclic", boundary=None,
                   initial=None, verbose=False):
    """Newton-solve the discretized Hitchin equation with Dirichlet data.

    boundary: (n_theta, 3) S-fields on the outer ring; defaults to the
    decoupled metric. initial: full (n_r, n_theta, 3) warm start.
    """
    if mode == "cyclic":
        check_grid_radius(spec, grid)
    np_ = newton or NewtonParams()
    tmat = higgs_matrix(spec, grid.nodes_z(), mode)
    s = _initial_guess(spec, grid, mode) if initial is None else initial.copy()
    s_bc = boundary_s_fields(spec, grid, mode) if boundary is None else boundary
    s[-1] = s_bc

    n_i = grid.n_r - 1
    n_t = grid.n_theta
    radii = grid.radii

    def unpack(x):
        full = s.copy()
        full[:n_i] = x.reshape(n_i, n_t, 3)
        return full

    def residual(x, frozen_center=None):
        full = unpack(x)
        sc = frozen_center if frozen_center is not None else derived_center(full, radii)
        return _residual_for(full, sc, grid, tmat).ravel()

    x = s[:n_i].reshape(-1).copy()
    res = residual(x)
    hist = [float(np.max(np.abs(res)))]
    if verbose:
        print(f"[hitchin] start sup-res {hist[-1]:.3e}")

    colors = _coloring(n_i, n_t)
    n_unknown = n_i * n_t * 3

    def assemble_jacobian(x0, res0, sc0):
        rows_all = []
        cols_all = []
        vals_all = []
        eps = np_.fd_eps
        shifts = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
        for (ci, cj, k), (ii, jj, kk) in colors.items():
            xp = x0.copy()
            flat_cols = (ii * n_t + jj) * 3 + kk
            xp[flat_cols] += eps
            diff = (residual(xp, frozen_center=sc0) - res0) / eps
            diff3 = diff.reshape(n_i, n_t, 3)
            for di, dj in shifts:
                ri = ii + di
                ok = (ri >= 0) & (ri < n_i)
                rj = (jj + dj) % n_t
                src_i = ri[ok]
                src_j = rj[ok]
                col_sel = flat_cols[ok]
                block = diff3[src_i, src_j, :]  # (n_sel, 3)
                base_rows = (src_i * n_t + src_j) * 3
                for comp in range(3):
                    rows_all.append(base_rows + comp)
                    cols_all.append(col_sel)
                    vals_all.append(block[:, comp])
        rows = np.concatenate(rows_all)
        cols = np.concatenate(cols_all)
        vals = np.concatenate(vals_all)
        keep = vals != 0.0
        jac = coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n_unknown, n_unknown))
        return jac.tocsc()

    for it in range(np_.max_iters):
        if hist[-1] < np_.tol:
            break
        sc0 = derived_center(unpack(x), radii)
        jac = assemble_jacobian(x, residual(x, frozen_center=sc0), sc0)
        try:
            lu = splu(jac)
        except RuntimeError as exc:
            raise SolverError(f"sparse factorization failed: {exc}", hist)
        step = lu.solve(-res)
        alpha = 1.0
        accepted = False
        for _ in range(12):
            x_new = x + alpha * step
            res_new = residual(x_new)
            nrm = float(np.max(np.abs(res_new)))
            if nrm < hist[-1] * (1.0 - 0.25 * alpha) or nrm < np_.tol:
                x, res = x_new, res_new
                hist.append(nrm)
                accepted = True
                break
            alpha *= np_.damping
        if verbose:
            print(f"[hitchin] iter {it + 1} sup-res {hist[-1]:.3e} (alpha={alpha:g})")
        if not accepted:
            raise SolverError(
                f"Newton line search stalled at residual {hist[-1]:.3e}", hist
            )
    else:
        if hist[-1] >= np_.tol:
            raise SolverError(
                f"Newton did not reach tol {np_.tol} in {np_.max_iters} iters "
                f"(residual {hist[-1]:.3e})",
                hist,
            )

    s_final = unpack(x)
    return MetricField(
        spec=spec,
        grid=grid,
        mode=mode,
        s_fields=s_final,
        residual_sup=hist[-1],
        residual_history=hist,
    )


def solve_with_continuation(spec, grid, newton=None, mode="cyclic", levels=2, verbose=False):
    """Coarse-to-fine Newton: solve at n/2^levels, prolong, re-solve."""
    if levels <= 0:
        return solve_harmonic(spec, grid, newton, mode, verbose=verbose)
    ladder = []
    g = grid
    for _ in range(levels):
        nr = max(24, (g.n_r // 2) | 1)
        nt = max(32, (g.n_theta // 2 + 3) // 4 * 4)
        g = PolarGrid(R=grid.R, n_r=nr, n_theta=nt, r_min=grid.r_min)
        ladder.append(g)
    ladder = ladder[::-1] + [grid]
    field = None
    for lev, g in enumerate(ladder):
        init = None if field is None else prolong_s(field, g)
        field = solve_harmonic(spec, g, newton, mode, initial=init, verbose=verbose)
        if verbose:
            print(f"[hitchin] level {lev}: grid {g.n_r}x{g.n_theta} res {field.residual_sup:.2e}")
    return field


def prolong_s(field, new_grid):
    """Interpolate solved S-fields onto a finer grid (spline + center value)."""
    coeffs = build_cell_coeffs(field.grid.u, field.grid.theta, field.s_fields)
    u0 = field.grid.u[0]
    du = field.grid.du
    t0 = 0.0
    dt = field.grid.dtheta
    n_u = field.grid.n_r
    n_t = field.grid.n_theta
    sc = field.center_s()
    r_in = field.grid.radii[0]
    out = np.zeros((new_grid.n_r, new_grid.n_theta, 3))
    f = np.empty(3)
    fu = np.empty(3)
    ft = np.empty(3)
    for i, r in enumerate(new_grid.radii):
        for j, th in enumerate(new_grid.theta):
            if r < r_in:
                w = (r / r_in) ** 2
                spline_eval(coeffs, u0, du, t0, dt, n_u, n_t, math.log(r_in), th, f, fu, ft)
                out[i, j] = w * f + (1.0 - w) * sc
            else:
                spline_eval(coeffs, u0, du, t0, dt, n_u, n_t, math.log(r), th, f, fu, ft)
                out[i, j] = f
    return out


# ---------------------------------------------------------------- hkf io


def write_hkf(path, field):
    """Plain-text field file: HKF1 header, params, then r theta h11 ReH12 ImH12 h22."""
    g = field.grid
    h11, h12, h22 = field.h_matrices()
    with open(path, "w") as fh:
        fh.write("HKF1\n")
        fh.write(
            "%.17g %.17g %.17g %.17g %d %d\n"
            % (field.spec.m.real, field.spec.m.imag, field.spec.m3, g.R, g.n_r, g.n_theta)
        )
        for i, r in enumerate(g.radii):
            for j, th in enumerate(g.theta):
                fh.write(
                    "%.17g %.17g %.17g %.17g %.17g %.17g\n"
                    % (r, th, h11[i, j], h12[i, j].real, h12[i, j].imag, h22[i, j])
                )


def read_hkf(path):
    with open(path) as fh:
        magic = fh.readline().strip()
        if magic != "HKF1":
            raise ValueError(f"{path}: not an HKF1 field file")
        mre, mim, m3, R, n_r, n_theta = fh.readline().split()
        spec = HiggsSpec(m=complex(float(mre), float(mim)), m3=float(m3))
        n_r = int(n_r)
        n_theta = int(n_theta)
        data = np.loadtxt(fh)
    if data.shape != (n_r * n_theta, 6):
        raise ValueError(f"{path}: expected {n_r * n_theta} records")
    r_read = data[:, 0].reshape(n_r, n_theta)
    grid = PolarGrid(R=R, n_r=n_r, n_theta=n_theta, r_min=float(r_read[0, 0]))
    h11 = data[:, 2].reshape(n_r, n_theta)
    h12 = (data[:, 3] + 1j * data[:, 4]).reshape(n_r, n_theta)
    h22 = data[:, 5].reshape(n_r, n_theta)
    s = logm_det1(h11, h12, h22)
    mode = "cyclic" if abs(spec.m) > 0 or spec.m3 != 0 else None
    # mode is not stored; infer from the metric: identity field => diagonal example
    if mode is None:
        mode = "diagonal" if float(np.max(np.abs(s))) < 1e-14 else "cyclic"
    field = MetricField(
        spec=spec, grid=grid, mode=mode, s_fields=s,
        residual_sup=float("nan"), residual_history=[],
    )
    return field


def cache_dir():
    return os.environ.get("HKTWIST_CACHE", os.path.join(os.path.expanduser("~"), ".cache", "hktwist"))


def cache_key(spec, grid):
    return "m%+.6f%+.6fj_m3%+.4f_R%g_%dx%d.hkf" % (
        spec.m.real, spec.m.imag, spec.m3, grid.R, grid.n_r, grid.n_theta
    )


def solve_cached(spec, grid, newton=None, mode="cyclic", verbose=False, levels=2):
    """Solve or load from the HKTWIST_CACHE directory."""
    d = cache_dir()
    os.makedirs(d, exist_ok=True)
    path = os.path.join(d, cache_key(spec, grid))
    if os.path.exists(path):
        return read_hkf(path)
    field = solve_with_continuation(spec, grid, newton, mode, levels=levels, verbose=verbose)
    write_hkf(path, field)
    return field
