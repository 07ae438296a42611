# Compiled RK4 loops. Mirrors omsim._pykernels operation-for-operation so the
# two backends agree to rounding; keep them in sync.
#
# State layout (nondimensional): x = (q0 - q_s)/lambda_n, y = p0/(m omega_m lambda_n),
# a = alpha/alpha_ref, time tau = omega_m t. Covariance entries follow in
# upper-triangle row-major order (V00 V01 V02 V03 V11 V12 V13 V22 V23 V33).
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, asin, sqrt, fabs, isfinite

cnp.import_array()

cdef double FOUR_PI = 12.566370614359172

cdef struct Coef:
    double s
    double phase0
    double slope
    double offset
    double g
    double k
    double d
    double force
    double coupling
    double curvature
    double noise

cdef inline Coef _unpack(double[::1] c):
    cdef Coef co
    co.s = c[0]
    co.phase0 = c[1]
    co.slope = c[2]
    co.offset = c[3]
    co.g = c[4]
    co.k = c[5]
    co.d = c[6]
    co.force = c[7]
    co.coupling = c[8]
    co.curvature = c[9]
    co.noise = c[10]
    return co


cdef inline void _classical(const double* st, double* out, Coef* co, bint frozen) nogil:
    cdef double th = co.phase0 + FOUR_PI * st[0]
    cdef double ct = cos(th)
    cdef double w1 = sin(th) / sqrt(1.0 - co.s * co.s * ct * ct)
    cdef double n2 = st[2] * st[2] + st[3] * st[3]
    cdef double delta = co.slope * asin(co.s * ct) + co.offset
    if frozen:
        out[0] = 0.0
        out[1] = 0.0
    else:
        out[0] = st[1]
        out[1] = -st[0] - co.g * st[1] - co.force * w1 * n2
    out[2] = -co.k * st[2] + delta * st[3]
    out[3] = -co.k * st[3] - delta * st[2] - co.d


cdef int IU[4][4]


cdef void _fill_index():
    cdef int i, j, lo, hi
    for i in range(4):
        for j in range(4):
            lo = i if i < j else j
            hi = j if i < j else i
            # row-major upper-triangle position of (lo, hi)
            IU[i][j] = lo * 4 - lo * (lo - 1) // 2 + (hi - lo)


_fill_index()


cdef inline double _cosim(const double* st, double* out, Coef* co, bint coupled) nogil:
    """Fill out[0:14]; return max(kappa, |Delta|, |G|, |Omega|) in omega_m units."""
    cdef double th = co.phase0 + FOUR_PI * st[0]
    cdef double ct = cos(th)
    cdef double q = 1.0 - co.s * co.s * ct * ct
    cdef double root = sqrt(q)
    cdef double w1 = sin(th) / root
    cdef double w2 = ct / (q * root)
    cdef double n2 = st[2] * st[2] + st[3] * st[3]
    cdef double delta = co.slope * asin(co.s * ct) + co.offset
    cdef double gx, gy, om
    cdef double A[4][4]
    cdef double V[4][4]
    cdef double M[4][4]
    cdef int i, j, l, idx
    cdef double acc, rate

    out[0] = st[1]
    out[1] = -st[0] - co.g * st[1] - co.force * w1 * n2
    out[2] = -co.k * st[2] + delta * st[3]
    out[3] = -co.k * st[3] - delta * st[2] - co.d

    if coupled:
        gx = co.coupling * w1 * st[2]
        gy = co.coupling * w1 * st[3]
        om = 1.0 + co.curvature * w2 * n2
    else:
        gx = 0.0
        gy = 0.0
        om = 1.0

    A[0][0] = 0.0; A[0][1] = 1.0; A[0][2] = 0.0; A[0][3] = 0.0
    A[1][0] = -om; A[1][1] = -co.g; A[1][2] = -gx; A[1][3] = -gy
    A[2][0] = gy; A[2][1] = 0.0; A[2][2] = -co.k; A[2][3] = delta
    A[3][0] = -gx; A[3][1] = 0.0; A[3][2] = -delta; A[3][3] = -co.k

    for i in range(4):
        for j in range(4):
            V[i][j] = st[4 + IU[i][j]]
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for l in range(4):
                acc = acc + A[i][l] * V[l][j]
            M[i][j] = acc
    idx = 4
    for i in range(4):
        for j in range(i, 4):
            out[idx] = M[i][j] + M[j][i]
            idx += 1
    out[4 + 4] += co.noise
    out[4 + 7] += co.k
    out[4 + 9] += co.k

    rate = co.k
    if fabs(delta) > rate:
        rate = fabs(delta)
    acc = sqrt(gx * gx + gy * gy)
    if acc > rate:
        rate = acc
    if fabs(om) > rate:
        rate = fabs(om)
    return rate


def integrate_classical(double[::1] y0, double h, long n_steps, long stride,
                        double[::1] coef, bint frozen=False):
    """Fixed-step RK4 on the 4-real classical state.

    Returns (samples, n_recorded, status, fail_step, last_state). samples[0]
    is y0; one row every `stride` steps after that. status 0 = ok,
    1 = non-finite state (last_state is the last finite state).
    """
    cdef Coef co = _unpack(coef)
    cdef long n_samples = n_steps // stride + 1
    samples_np = np.empty((n_samples, 4), dtype=np.float64)
    cdef double[:, ::1] samples = samples_np
    cdef double st[4]
    cdef double tmp[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double nxt[4]
    cdef long i, rec = 1
    cdef int j, status = 0
    cdef long fail_step = -1
    cdef double hh = 0.5 * h
    cdef double h6 = h / 6.0

    for j in range(4):
        st[j] = y0[j]
        samples[0, j] = st[j]
    with nogil:
        for i in range(n_steps):
            _classical(st, k1, &co, frozen)
            for j in range(4):
                tmp[j] = st[j] + hh * k1[j]
            _classical(tmp, k2, &co, frozen)
            for j in range(4):
                tmp[j] = st[j] + hh * k2[j]
            _classical(tmp, k3, &co, frozen)
            for j in range(4):
                tmp[j] = st[j] + h * k3[j]
            _classical(tmp, k4, &co, frozen)
            for j in range(4):
                nxt[j] = st[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if not (isfinite(nxt[0]) and isfinite(nxt[1]) and isfinite(nxt[2]) and isfinite(nxt[3])):
                status = 1
                fail_step = i
                break
            for j in range(4):
                st[j] = nxt[j]
            if (i + 1) % stride == 0:
                for j in range(4):
                    samples[rec, j] = st[j]
                rec += 1
    last = np.array([st[0], st[1], st[2], st[3]])
    return samples_np, rec, status, fail_step, last


def integrate_cosim(double[::1] y0, double h, long n_steps, long stride,
                    double[::1] coef, double rate_guard, bint coupled=True):
    """Joint RK4 over classical state + 10 covariance entries.

    status 0 = ok, 1 = non-finite, 2 = h*max rate exceeded rate_guard at the
    start of step fail_step. Also returns the largest h*rate seen.
    """
    cdef Coef co = _unpack(coef)
    cdef long n_samples = n_steps // stride + 1
    samples_np = np.empty((n_samples, 14), dtype=np.float64)
    cdef double[:, ::1] samples = samples_np
    cdef double st[14]
    cdef double tmp[14]
    cdef double k1[14]
    cdef double k2[14]
    cdef double k3[14]
    cdef double k4[14]
    cdef double nxt[14]
    cdef long i, rec = 1
    cdef int j, status = 0
    cdef bint ok
    cdef long fail_step = -1
    cdef double hh = 0.5 * h
    cdef double h6 = h / 6.0
    cdef double rate, worst = 0.0

    for j in range(14):
        st[j] = y0[j]
        samples[0, j] = st[j]
    with nogil:
        for i in range(n_steps):
            rate = h * _cosim(st, k1, &co, coupled)
            if rate > worst:
                worst = rate
            if rate > rate_guard:
                status = 2
                fail_step = i
                break
            for j in range(14):
                tmp[j] = st[j] + hh * k1[j]
            _cosim(tmp, k2, &co, coupled)
            for j in range(14):
                tmp[j] = st[j] + hh * k2[j]
            _cosim(tmp, k3, &co, coupled)
            for j in range(14):
                tmp[j] = st[j] + h * k3[j]
            _cosim(tmp, k4, &co, coupled)
            ok = True
            for j in range(14):
                nxt[j] = st[j] + h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                if not isfinite(nxt[j]):
                    ok = False
            if not ok:
                status = 1
                fail_step = i
                break
            for j in range(14):
                st[j] = nxt[j]
            if (i + 1) % stride == 0:
                for j in range(14):
                    samples[rec, j] = st[j]
                rec += 1
    last = np.array([st[j] for j in range(14)])
    return samples_np, rec, status, fail_step, last, worst
