# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Pauli application, spline/LCU evaluation and the
Dormand-Prince propagator for i psi' = H(t) psi."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, fmax, fmin, nextafter, INFINITY, cos, sin

from .errors import IntegrationError

cnp.import_array()

ctypedef double complex cplx

cdef double[6] DC = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0]
cdef double[6][5] DA = [
    [0, 0, 0, 0, 0],
    [1.0 / 5, 0, 0, 0, 0],
    [3.0 / 40, 9.0 / 40, 0, 0, 0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656],
]
cdef double[6] DB = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84]
cdef double[7] DE = [-71.0 / 57600, 0.0, 71.0 / 16695, -71.0 / 1920, 17253.0 / 339200,
                     -22.0 / 525, 1.0 / 40]
cdef double[7][4] DP = [
    [1, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799],
    [0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072],
    [0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408, 701980252875.0 / 199316789632],
    [0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844],
    [0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423],
]


cdef inline int _popcount(long long v) noexcept nogil:
    cdef int c = 0
    while v:
        v &= v - 1
        c += 1
    return c


def pauli_apply(long long x_mask, long long z_mask, int phase_exp, psi):
    cdef const cplx[::1] src = np.ascontiguousarray(psi, dtype=np.complex128)
    cdef Py_ssize_t n = src.shape[0], j
    out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] o = out
    cdef int k = (phase_exp + _popcount(x_mask & z_mask)) % 4
    cdef cplx base
    if k == 0:
        base = 1
    elif k == 1:
        base = 1j
    elif k == 2:
        base = -1
    else:
        base = -1j
    cdef long long s
    for j in range(n):
        s = j ^ x_mask
        if _popcount(s & z_mask) & 1:
            o[j] = -base * src[s]
        else:
            o[j] = base * src[s]
    return out


cdef inline Py_ssize_t _segment(const double[::1] x, double t) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = x.shape[0] - 1, mid
    if t <= x[0]:
        return 0
    if t >= x[hi]:
        return hi - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if x[mid] <= t:
            lo = mid
        else:
            hi = mid
    return lo


cdef inline void _spline(const double[::1] x, const double[:, :, ::1] c, double t,
                         double[::1] g) noexcept nogil:
    cdef Py_ssize_t i = _segment(x, t), m
    cdef double d = t - x[i]
    for m in range(c.shape[2]):
        g[m] = ((c[0, i, m] * d + c[1, i, m]) * d + c[2, i, m]) * d + c[3, i, m]


def spline_eval(breaks, coefs, double t):
    cdef const double[::1] x = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef const double[:, :, ::1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    out = np.empty(c.shape[2])
    _spline(x, c, t, out)
    return out


cdef inline void _lcu(const long long[:, ::1] perm, const cplx[:, ::1] fac,
                      const double[::1] g, const cplx[::1] psi, cplx scale,
                      cplx[::1] out) noexcept nogil:
    cdef Py_ssize_t j, m, n = psi.shape[0]
    cdef cplx acc
    for j in range(n):
        acc = 0
        for m in range(perm.shape[0]):
            acc = acc + g[m] * fac[m, j] * psi[perm[m, j]]
        out[j] = scale * acc


def lcu_apply(perm, fac, g, psi):
    cdef const long long[:, ::1] p = np.ascontiguousarray(perm, dtype=np.int64)
    cdef const cplx[:, ::1] f = np.ascontiguousarray(fac, dtype=np.complex128)
    cdef const double[::1] gg = np.ascontiguousarray(g, dtype=np.float64)
    cdef const cplx[::1] y = np.ascontiguousarray(psi, dtype=np.complex128)
    out = np.empty(y.shape[0], dtype=np.complex128)
    _lcu(p, f, gg, y, 1.0, out)
    return out


cdef inline double _abs(cplx z) noexcept nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


def dopri_lcu(breaks, coefs, perm, fac, psi0, t_out, double rtol, double atol):
    """Dormand-Prince 5(4) with quartic dense output for i psi' = H(t) psi."""
    cdef const double[::1] x = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef const double[:, :, ::1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef const long long[:, ::1] p = np.ascontiguousarray(perm, dtype=np.int64)
    cdef const cplx[:, ::1] f = np.ascontiguousarray(fac, dtype=np.complex128)
    cdef const double[::1] to = np.ascontiguousarray(t_out, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[1], nout = to.shape[0], nterm = p.shape[0]
    out_arr = np.empty((nout, n), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr
    cdef cplx[::1] y = np.array(psi0, dtype=np.complex128)
    cdef cplx[::1] ynew = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] ytmp = np.empty(n, dtype=np.complex128)
    cdef cplx[:, ::1] K = np.empty((7, n), dtype=np.complex128)
    cdef double[::1] g = np.empty(nterm)
    cdef cplx mi = -1j
    cdef Py_ssize_t j, s, r, nxt = 1
    cdef long n_acc = 0, n_rej = 0
    cdef double t = to[0], t_end = to[nout - 1], h, t_new, th, errn, sc, d0, d1, d2, h0, h1
    cdef double thp
    cdef cplx acc, e
    for j in range(n):
        out[0, j] = y[j]
    if nout == 1 or t_end == t:
        for s in range(nout):
            for j in range(n):
                out[s, j] = y[j]
        return out_arr, 0, 0

    _spline(x, c, t, g)
    _lcu(p, f, g, y, mi, K[0])
    # initial step (Hairer-Norsett-Wanner heuristic)
    d0 = 0
    d1 = 0
    for j in range(n):
        sc = atol + rtol * _abs(y[j])
        d0 += (_abs(y[j]) / sc) ** 2
        d1 += (_abs(K[0, j]) / sc) ** 2
    d0 = sqrt(d0 / n)
    d1 = sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for j in range(n):
        ytmp[j] = y[j] + h0 * K[0, j]
    _spline(x, c, t + h0, g)
    _lcu(p, f, g, ytmp, mi, K[1])
    d2 = 0
    for j in range(n):
        sc = atol + rtol * _abs(y[j])
        d2 += (_abs(K[1, j] - K[0, j]) / sc) ** 2
    d2 = sqrt(d2 / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = fmax(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / fmax(d1, d2), 0.2)
    h = fmin(100 * h0, h1)

    while t < t_end:
        if h < 10 * (nextafter(fabs(t), INFINITY) - fabs(t)) + 1e-300:
            raise IntegrationError(f"step size underflow at t={t}", t)
        if h > t_end - t:
            h = t_end - t
        for s in range(1, 6):
            for j in range(n):
                acc = 0
                for r in range(s):
                    acc = acc + DA[s][r] * K[r, j]
                ytmp[j] = y[j] + h * acc
            _spline(x, c, t + DC[s] * h, g)
            _lcu(p, f, g, ytmp, mi, K[s])
        for j in range(n):
            acc = 0
            for r in range(6):
                acc = acc + DB[r] * K[r, j]
            ynew[j] = y[j] + h * acc
        t_new = t + h if h < t_end - t else t_end
        _spline(x, c, t_new, g)
        _lcu(p, f, g, ynew, mi, K[6])
        errn = 0
        for j in range(n):
            e = 0
            for r in range(7):
                e = e + DE[r] * K[r, j]
            sc = atol + rtol * fmax(_abs(y[j]), _abs(ynew[j]))
            errn += (h * _abs(e) / sc) ** 2
        errn = sqrt(errn / n)
        if errn <= 1.0:
            while nxt < nout and to[nxt] <= t_new:
                th = (to[nxt] - t) / h
                for j in range(n):
                    acc = 0
                    for r in range(7):
                        thp = th * (DP[r][0] + th * (DP[r][1] + th * (DP[r][2] + th * DP[r][3])))
                        acc = acc + thp * K[r, j]
                    out[nxt, j] = y[j] + h * acc
                nxt += 1
            t = t_new
            for j in range(n):
                y[j] = ynew[j]
                K[0, j] = K[6, j]
            n_acc += 1
            if errn == 0:
                h *= 10.0
            else:
                h *= fmin(10.0, 0.9 * pow(errn, -0.2))
        else:
            n_rej += 1
            h *= fmax(0.2, 0.9 * pow(errn, -0.2))
    while nxt < nout:
        for j in range(n):
            out[nxt, j] = y[j]
        nxt += 1
    return out_arr, n_acc, n_rej


cdef void _jacobi_solve(double[:, ::1] a, double[::1] b, double[::1] x, double[:, ::1] v,
                        Py_ssize_t n, double cutoff) noexcept nogil:
    """x = pinv(a) b for symmetric a via cyclic Jacobi (a is overwritten)."""
    cdef Py_ssize_t i, j, p, q, sweep
    cdef double off, theta, t, c, s, tau, apq, app, aqq, aip, aiq, vip, viq, proj
    for i in range(n):
        for j in range(n):
            v[i, j] = 1.0 if i == j else 0.0
    for sweep in range(100):
        off = 0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off < 1e-300:
            break
        for p in range(n):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) < 1e-300:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for i in range(n):
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - s * aiq
                    a[i, q] = s * aip + c * aiq
                for i in range(n):
                    aip = a[p, i]
                    aiq = a[q, i]
                    a[p, i] = c * aip - s * aiq
                    a[q, i] = s * aip + c * aiq
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s * viq
                    v[i, q] = s * vip + c * viq
    for i in range(n):
        x[i] = 0
    for j in range(n):
        if a[j, j] > cutoff:
            proj = 0
            for i in range(n):
                proj += v[i, j] * b[i]
            proj /= a[j, j]
            for i in range(n):
                x[i] += proj * v[i, j]


cdef inline void _apply_op(const long long[:, ::1] perm, const cplx[:, ::1] fac, Py_ssize_t k,
                           const cplx[::1] src, cplx[::1] dst) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(src.shape[0]):
        dst[j] = fac[k, j] * src[perm[k, j]]


cdef void _ansatz_state(const cplx[::1] phi0, const long long[:, ::1] perm,
                        const cplx[:, ::1] fac, const double[::1] theta, Py_ssize_t nops,
                        cplx[::1] psi, cplx[::1] tmp) noexcept nogil:
    cdef Py_ssize_t k, j
    cdef double c, s
    for j in range(psi.shape[0]):
        psi[j] = phi0[j]
    for k in range(nops):
        _apply_op(perm, fac, k, psi, tmp)
        c = cos(theta[k])
        s = sin(theta[k])
        for j in range(psi.shape[0]):
            psi[j] = c * psi[j] - 1j * s * tmp[j]


def avqds_run(phi0, op_perm, op_fac, theta, breaks, coefs, h_perm, h_fac, long ident,
              double t0, double dt, double t_end, long n_steps, long s_start, double l2_cut,
              bint no_stop_first, emit_t, emit_amps, long emit_pos, l2_log, nth_log,
              double cutoff=1e-12):
    """Euler-step a fixed ansatz until the residual reaches ``l2_cut``.

    Returns ``(s_stop, emit_pos)``; ``s_stop > n_steps`` means the end was
    reached.  ``theta``, ``emit_amps``, ``l2_log`` and ``nth_log`` are
    updated in place.
    """
    cdef const cplx[::1] p0 = np.ascontiguousarray(phi0, dtype=np.complex128)
    cdef const long long[:, ::1] op = np.ascontiguousarray(op_perm, dtype=np.int64)
    cdef const cplx[:, ::1] of = np.ascontiguousarray(op_fac, dtype=np.complex128)
    cdef double[::1] th = theta
    cdef const double[::1] x = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef const double[:, :, ::1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef const long long[:, ::1] hp = np.ascontiguousarray(h_perm, dtype=np.int64)
    cdef const cplx[:, ::1] hf = np.ascontiguousarray(h_fac, dtype=np.complex128)
    cdef const double[::1] et = np.ascontiguousarray(emit_t, dtype=np.float64)
    cdef cplx[:, ::1] ea = emit_amps
    cdef double[::1] l2l = l2_log
    cdef long[::1] nthl = nth_log
    cdef Py_ssize_t dim = p0.shape[0], nops = th.shape[0], nterm = hp.shape[0]
    cdef Py_ssize_t n_emit = et.shape[0]
    cdef Py_ssize_t k, l, j, m, s
    cdef cplx[::1] psi = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] tmp = np.empty(dim, dtype=np.complex128)
    cdef cplx[::1] hpsi = np.empty(dim, dtype=np.complex128)
    cdef cplx[:, ::1] der = np.empty((max(nops, 1), dim), dtype=np.complex128)
    cdef double[::1] g = np.empty(max(nterm, 1))
    cdef double[:, ::1] At = np.empty((max(nops, 1), max(nops, 1)))
    cdef double[:, ::1] V = np.empty((max(nops, 1), max(nops, 1)))
    cdef double[::1] Ct = np.empty(max(nops, 1))
    cdef double[::1] td = np.zeros(max(nops, 1))
    cdef double[::1] gauge = np.empty(max(nops, 1))
    cdef double[::1] thx = np.empty(max(nops, 1))
    cdef double t, t_next, e, hh, var, l2, cs, sn, re, im
    cdef cplx acc, z
    for s in range(s_start, n_steps + 1):
        t = t0 + s * dt if s < n_steps else t_end
        # psi and derivative states
        for j in range(dim):
            psi[j] = p0[j]
        for k in range(nops):
            cs = cos(th[k])
            sn = sin(th[k])
            for l in range(k):
                _apply_op(op, of, k, der[l], tmp)
                for j in range(dim):
                    der[l, j] = cs * der[l, j] - 1j * sn * tmp[j]
            _apply_op(op, of, k, psi, tmp)
            for j in range(dim):
                psi[j] = cs * psi[j] - 1j * sn * tmp[j]
            _apply_op(op, of, k, psi, tmp)
            for j in range(dim):
                der[k, j] = -1j * tmp[j]
        # H' psi with the identity term removed
        _spline(x, c, t, g)
        if ident >= 0:
            g[ident] = 0
        for j in range(dim):
            acc = 0
            for m in range(nterm):
                acc = acc + g[m] * hf[m, j] * psi[hp[m, j]]
            hpsi[j] = acc
        e = 0
        hh = 0
        for j in range(dim):
            z = psi[j].conjugate() * hpsi[j]
            e += z.real
            hh += hpsi[j].real * hpsi[j].real + hpsi[j].imag * hpsi[j].imag
        var = hh - e * e
        for k in range(nops):
            re = 0
            im = 0
            for j in range(dim):
                z = der[k, j].conjugate() * psi[j]
                re += z.imag
                z = der[k, j].conjugate() * hpsi[j]
                im += z.imag
            gauge[k] = re
            Ct[k] = im - re * e
        for k in range(nops):
            for l in range(k, nops):
                re = 0
                for j in range(dim):
                    z = der[k, j].conjugate() * der[l, j]
                    re += z.real
                At[k, l] = re - gauge[k] * gauge[l]
                At[l, k] = At[k, l]
        if nops:
            _jacobi_solve(At, Ct, td, V, nops, cutoff)
        l2 = var
        for k in range(nops):
            l2 -= td[k] * Ct[k]
        if -1e-12 <= l2 < 0:
            l2 = 0
        if l2 >= l2_cut and not (no_stop_first and s == s_start):
            return s, emit_pos
        l2l[s] = l2
        nthl[s] = nops
        if s == n_steps:
            while emit_pos < n_emit:
                _ansatz_state(p0, op, of, th, nops, psi, tmp)
                for j in range(dim):
                    ea[emit_pos, j] = psi[j]
                emit_pos += 1
            break
        t_next = t0 + (s + 1) * dt if s + 1 < n_steps else t_end
        while emit_pos < n_emit and et[emit_pos] < t_next:
            for k in range(nops):
                thx[k] = th[k] + td[k] * (et[emit_pos] - t)
            _ansatz_state(p0, op, of, thx, nops, hpsi, tmp)
            for j in range(dim):
                ea[emit_pos, j] = hpsi[j]
            emit_pos += 1
        for k in range(nops):
            th[k] += td[k] * (t_next - t)
    return n_steps + 1, emit_pos
