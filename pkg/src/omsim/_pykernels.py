"""Pure-Python RK4 loops, used when the compiled extension is unavailable.

Operation order follows ``_ckernels.pyx``; the two backends agree to a few
ulp per step (the C compiler may still reassociate or contract a handful of
operations).  Expect roughly 15-25x (classical) and 150-200x (covariance) lower speed.
"""
from __future__ import annotations

import math

import numpy as np

FOUR_PI = 12.566370614359172

# upper-triangle row-major index of V[i][j]
IU = [[0, 1, 2, 3], [1, 4, 5, 6], [2, 5, 7, 8], [3, 6, 8, 9]]


def _classical(st, co, frozen):
    s, phase0, slope, offset, g, k, d, force = co[:8]
    th = phase0 + FOUR_PI * st[0]
    ct = math.cos(th)
    w1 = math.sin(th) / math.sqrt(1.0 - s * s * ct * ct)
    n2 = st[2] * st[2] + st[3] * st[3]
    delta = slope * math.asin(s * ct) + offset
    if frozen:
        d0 = 0.0
        d1 = 0.0
    else:
        d0 = st[1]
        d1 = -st[0] - g * st[1] - force * w1 * n2
    return [
        d0,
        d1,
        -k * st[2] + delta * st[3],
        -k * st[3] - delta * st[2] - d,
    ]


def _cosim(st, co, coupled):
    s, phase0, slope, offset, g, k, d, force, coupling, curvature, noise = co
    th = phase0 + FOUR_PI * st[0]
    ct = math.cos(th)
    q = 1.0 - s * s * ct * ct
    root = math.sqrt(q)
    w1 = math.sin(th) / root
    w2 = ct / (q * root)
    n2 = st[2] * st[2] + st[3] * st[3]
    delta = slope * math.asin(s * ct) + offset
    out = [0.0] * 14
    out[0] = st[1]
    out[1] = -st[0] - g * st[1] - force * w1 * n2
    out[2] = -k * st[2] + delta * st[3]
    out[3] = -k * st[3] - delta * st[2] - d
    if coupled:
        gx = coupling * w1 * st[2]
        gy = coupling * w1 * st[3]
        om = 1.0 + curvature * w2 * n2
    else:
        gx = gy = 0.0
        om = 1.0
    A = (
        (0.0, 1.0, 0.0, 0.0),
        (-om, -g, -gx, -gy),
        (gy, 0.0, -k, delta),
        (-gx, 0.0, -delta, -k),
    )
    V = [[st[4 + IU[i][j]] for j in range(4)] for i in range(4)]
    M = [[0.0] * 4 for _ in range(4)]
    for i in range(4):
        Ai = A[i]
        for j in range(4):
            acc = 0.0
            for l in range(4):
                acc = acc + Ai[l] * V[l][j]
            M[i][j] = acc
    idx = 4
    for i in range(4):
        for j in range(i, 4):
            out[idx] = M[i][j] + M[j][i]
            idx += 1
    out[8] += noise
    out[11] += k
    out[13] += k
    rate = max(k, abs(delta), math.sqrt(gx * gx + gy * gy), abs(om))
    return out, rate


def _finite(values):
    return all(math.isfinite(v) for v in values)


def integrate_classical(y0, h, n_steps, stride, coef, frozen=False):
    co = [float(c) for c in coef]
    n_samples = n_steps // stride + 1
    samples = np.empty((n_samples, 4))
    st = [float(v) for v in y0]
    samples[0] = st
    rec = 1
    status, fail_step = 0, -1
    hh = 0.5 * h
    h6 = h / 6.0
    for i in range(n_steps):
        k1 = _classical(st, co, frozen)
        k2 = _classical([st[j] + hh * k1[j] for j in range(4)], co, frozen)
        k3 = _classical([st[j] + hh * k2[j] for j in range(4)], co, frozen)
        k4 = _classical([st[j] + h * k3[j] for j in range(4)], co, frozen)
        nxt = [st[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) for j in range(4)]
        if not _finite(nxt):
            status, fail_step = 1, i
            break
        st = nxt
        if (i + 1) % stride == 0:
            samples[rec] = st
            rec += 1
    return samples, rec, status, fail_step, np.array(st)


def integrate_cosim(y0, h, n_steps, stride, coef, rate_guard, coupled=True):
    co = [float(c) for c in coef]
    n_samples = n_steps // stride + 1
    samples = np.empty((n_samples, 14))
    st = [float(v) for v in y0]
    samples[0] = st
    rec = 1
    status, fail_step = 0, -1
    worst = 0.0
    hh = 0.5 * h
    h6 = h / 6.0
    for i in range(n_steps):
        k1, rate = _cosim(st, co, coupled)
        rate = h * rate
        worst = max(worst, rate)
        if rate > rate_guard:
            status, fail_step = 2, i
            break
        k2, _ = _cosim([st[j] + hh * k1[j] for j in range(14)], co, coupled)
        k3, _ = _cosim([st[j] + hh * k2[j] for j in range(14)], co, coupled)
        k4, _ = _cosim([st[j] + h * k3[j] for j in range(14)], co, coupled)
        nxt = [st[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) for j in range(14)]
        if not _finite(nxt):
            status, fail_step = 1, i
            break
        st = nxt
        if (i + 1) % stride == 0:
            samples[rec] = st
            rec += 1
    return samples, rec, status, fail_step, np.array(st), worst
