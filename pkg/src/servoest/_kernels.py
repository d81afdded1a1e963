"""Compiled inner loops for trajectory simulation and the particle filter.

These kernels are numerically equivalent fused versions of the public
numpy building blocks (``advance_states``, ``pf_weight``,
``resample_multinomial``); the test suite cross-checks the two paths.
All random draws are generated by the caller, so the kernels are pure.

Specimen kind codes: 0 = arctan, 1 = algebraic saturation.
"""
from __future__ import annotations

import numpy as np
from numba import njit

KIND_ARCTAN = 0
KIND_SATURATION = 1


@njit(inline="always")
def _drift4(kind, p, x, x1, x2, x3, uk):
    # p = [m, c, k, k_n, lam, beta1, a1beta1, a2, a3, b]
    m = p[0]
    c = p[1]
    k = p[2]
    kn = p[3]
    lam = p[4]
    beta1 = p[5]
    a2 = p[7]
    a3 = p[8]
    uu = lam * x
    den = 1.0 + uu * uu
    if kind == 0:
        g = np.arctan(uu)
        dg = lam / den
        d2g = -2.0 * lam * lam * uu / (den * den)
    else:
        g = uu / np.sqrt(den)
        dg = lam * den ** -1.5
        d2g = -3.0 * lam * lam * uu * den ** -2.5
    hval = -(c / m) * x1 - (k / m) * x - (kn / m) * g
    hx = -(k / m) - (kn / m) * dg
    hv = -c / m
    hxx = -(kn / m) * d2g
    force = m * x2 - m * hval
    ps = beta1 + a3
    out = (-p[6] / m) * x
    out += (-beta1 * a2 / m + ps * hx) * x1
    out += (ps * hv - a2 / m) * x2
    out += -ps * x3
    out += (-beta1 * a3 / m) * force
    out += hxx * x1 * x1 + hx * x2 + hv * x3
    out += p[9] * uk
    return out


@njit(inline="always")
def _rk5(kind, p, x, x1, x2, x3, uk, h):
    k1_0 = x1
    k1_1 = x2
    k1_2 = x3
    k1_3 = _drift4(kind, p, x, x1, x2, x3, uk)

    s0 = x + h * 0.25 * k1_0
    s1 = x1 + h * 0.25 * k1_1
    s2 = x2 + h * 0.25 * k1_2
    s3 = x3 + h * 0.25 * k1_3
    k2_0 = s1
    k2_1 = s2
    k2_2 = s3
    k2_3 = _drift4(kind, p, s0, s1, s2, s3, uk)

    s0 = x + h * 0.125 * (k1_0 + k2_0)
    s1 = x1 + h * 0.125 * (k1_1 + k2_1)
    s2 = x2 + h * 0.125 * (k1_2 + k2_2)
    s3 = x3 + h * 0.125 * (k1_3 + k2_3)
    k3_0 = s1
    k3_1 = s2
    k3_2 = s3
    k3_3 = _drift4(kind, p, s0, s1, s2, s3, uk)

    s0 = x + h * (-0.5 * k2_0 + k3_0)
    s1 = x1 + h * (-0.5 * k2_1 + k3_1)
    s2 = x2 + h * (-0.5 * k2_2 + k3_2)
    s3 = x3 + h * (-0.5 * k2_3 + k3_3)
    k4_0 = s1
    k4_1 = s2
    k4_2 = s3
    k4_3 = _drift4(kind, p, s0, s1, s2, s3, uk)

    s0 = x + h * (0.1875 * k1_0 + 0.5625 * k4_0)
    s1 = x1 + h * (0.1875 * k1_1 + 0.5625 * k4_1)
    s2 = x2 + h * (0.1875 * k1_2 + 0.5625 * k4_2)
    s3 = x3 + h * (0.1875 * k1_3 + 0.5625 * k4_3)
    k5_0 = s1
    k5_1 = s2
    k5_2 = s3
    k5_3 = _drift4(kind, p, s0, s1, s2, s3, uk)

    c61 = -3.0 / 7.0
    c62 = 2.0 / 7.0
    c63 = 12.0 / 7.0
    c64 = -12.0 / 7.0
    c65 = 8.0 / 7.0
    s0 = x + h * (c61 * k1_0 + c62 * k2_0 + c63 * k3_0 + c64 * k4_0 + c65 * k5_0)
    s1 = x1 + h * (c61 * k1_1 + c62 * k2_1 + c63 * k3_1 + c64 * k4_1 + c65 * k5_1)
    s2 = x2 + h * (c61 * k1_2 + c62 * k2_2 + c63 * k3_2 + c64 * k4_2 + c65 * k5_2)
    s3 = x3 + h * (c61 * k1_3 + c62 * k2_3 + c63 * k3_3 + c64 * k4_3 + c65 * k5_3)
    k6_0 = s1
    k6_1 = s2
    k6_2 = s3
    k6_3 = _drift4(kind, p, s0, s1, s2, s3, uk)

    w1 = 7.0 / 90.0
    w3 = 32.0 / 90.0
    w4 = 12.0 / 90.0
    w5 = 32.0 / 90.0
    w6 = 7.0 / 90.0
    o0 = x + h * (w1 * k1_0 + w3 * k3_0 + w4 * k4_0 + w5 * k5_0 + w6 * k6_0)
    o1 = x1 + h * (w1 * k1_1 + w3 * k3_1 + w4 * k4_1 + w5 * k5_1 + w6 * k6_1)
    o2 = x2 + h * (w1 * k1_2 + w3 * k3_2 + w4 * k4_2 + w5 * k5_2 + w6 * k6_2)
    o3 = x3 + h * (w1 * k1_3 + w3 * k3_3 + w4 * k4_3 + w5 * k5_3 + w6 * k6_3)
    return o0, o1, o2, o3


@njit(cache=True)
def simulate_plant(kind, p, u, dt, substeps, limit, states):
    """Integrate the plant from states[0] under zero-order-held input.

    Fills states[k] for k = 1..n-1.  Returns -1 on success, else the index
    of the first sample where a state went non-finite or beyond ``limit``.
    """
    n = u.shape[0]
    h = dt / substeps
    x = states[0, 0]
    x1 = states[0, 1]
    x2 = states[0, 2]
    x3 = states[0, 3]
    for k in range(n - 1):
        uk = u[k]
        for _ in range(substeps):
            x, x1, x2, x3 = _rk5(kind, p, x, x1, x2, x3, uk, h)
        bad = not (np.isfinite(x) and np.isfinite(x1)
                   and np.isfinite(x2) and np.isfinite(x3))
        if bad or (abs(x) > limit or abs(x1) > limit or abs(x2) > limit
                   or abs(x3) > limit):
            return k + 1
        states[k + 1, 0] = x
        states[k + 1, 1] = x1
        states[k + 1, 2] = x2
        states[k + 1, 3] = x3
    return -1


@njit(cache=True)
def pf_chunk(kind, p, states, ucmd, yd, yf, noise, uniforms, est, degen,
             dt, substeps, sd2, sf2, limit):
    """Run ``L`` particle-filter steps in place.

    states    (N, 4)   ensemble, updated in place
    ucmd      (L,)     command at the step's start (held over the step)
    yd, yf    (L,)     noisy displacement / force measurements at step end
    noise     (L,N,4)  additive process-noise draws
    uniforms  (L,N)    resampling uniforms
    est       (L, 4)   output: post-resampling ensemble means
    degen     (L,)     output: 1 where the likelihood underflowed entirely

    Returns -1 on success, else the local step index of a divergence.
    """
    L = ucmd.shape[0]
    N = states.shape[0]
    m = p[0]
    c = p[1]
    k_ = p[2]
    kn = p[3]
    lam = p[4]
    h = dt / substeps
    logw = np.empty(N)
    cdf = np.empty(N)
    scratch = np.empty((N, 4))
    for t in range(L):
        uk = ucmd[t]
        for i in range(N):
            x = states[i, 0]
            x1 = states[i, 1]
            x2 = states[i, 2]
            x3 = states[i, 3]
            for _ in range(substeps):
                x, x1, x2, x3 = _rk5(kind, p, x, x1, x2, x3, uk, h)
            x += noise[t, i, 0]
            x1 += noise[t, i, 1]
            x2 += noise[t, i, 2]
            x3 += noise[t, i, 3]
            if not (np.isfinite(x) and np.isfinite(x1) and np.isfinite(x2)
                    and np.isfinite(x3)):
                return t
            if (abs(x) > limit or abs(x1) > limit or abs(x2) > limit
                    or abs(x3) > limit):
                return t
            states[i, 0] = x
            states[i, 1] = x1
            states[i, 2] = x2
            states[i, 3] = x3
        # likelihood of (displacement, force) under the nominal observation
        mx = -np.inf
        for i in range(N):
            x = states[i, 0]
            x1 = states[i, 1]
            x2 = states[i, 2]
            uu = lam * x
            g = uu / np.sqrt(1.0 + uu * uu)
            hval = -(c / m) * x1 - (k_ / m) * x - (kn / m) * g
            force = m * x2 - m * hval
            lw = (-(yd[t] - x) ** 2 / (2.0 * sd2)
                  - (yf[t] - force) ** 2 / (2.0 * sf2))
            logw[i] = lw
            if lw > mx:
                mx = lw
        if np.isinf(mx) or np.isnan(mx):
            degen[t] = 1
            for i in range(N):
                cdf[i] = (i + 1.0) / N
        else:
            degen[t] = 0
            tot = 0.0
            for i in range(N):
                w = np.exp(logw[i] - mx)
                logw[i] = w
                tot += w
            acc = 0.0
            for i in range(N):
                acc += logw[i] / tot
                cdf[i] = acc
        cdf[N - 1] = 1.0
        # multinomial resampling: strict-left / inclusive-right CDF inversion
        e0 = 0.0
        e1 = 0.0
        e2 = 0.0
        e3 = 0.0
        for i in range(N):
            ii = np.searchsorted(cdf, uniforms[t, i], side="left")
            if ii > N - 1:
                ii = N - 1
            scratch[i, 0] = states[ii, 0]
            scratch[i, 1] = states[ii, 1]
            scratch[i, 2] = states[ii, 2]
            scratch[i, 3] = states[ii, 3]
            e0 += scratch[i, 0]
            e1 += scratch[i, 1]
            e2 += scratch[i, 2]
            e3 += scratch[i, 3]
        states[:, :] = scratch
        est[t, 0] = e0 / N
        est[t, 1] = e1 / N
        est[t, 2] = e2 / N
        est[t, 3] = e3 / N
    return -1


def params_array(sp, tp) -> np.ndarray:
    """Pack specimen/transfer parameters for the kernels."""
    return np.array([sp.m, sp.c, sp.k, sp.k_n, sp.lam,
                     tp.beta1, tp.a1beta1, tp.a2, tp.a3, tp.b], dtype=float)


def kind_code(kind) -> int:
    from .model import SpecimenKind

    return KIND_ARCTAN if kind is SpecimenKind.ARCTAN else KIND_SATURATION
