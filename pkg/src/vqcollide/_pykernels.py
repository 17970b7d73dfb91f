"""Pure-Python/numpy implementations of the hot kernels.

Signatures mirror ``_kernels.pyx`` exactly; ``vqcollide.kernels`` picks one
at import time.
"""

from __future__ import annotations

import numpy as np

from .errors import IntegrationError

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# quartic continuous extension (Shampine)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


def _parity(v):
    v = np.asarray(v, dtype=np.int64)
    out = np.zeros_like(v)
    while np.any(v):
        out ^= v & 1
        v = v >> 1
    return out


def pauli_apply(x_mask, z_mask, phase_exp, psi):
    """Return U|psi> for the literal Pauli string i^phase * sigma(x, z)."""
    psi = np.asarray(psi, dtype=complex)
    idx = np.arange(psi.size, dtype=np.int64)
    src = idx ^ x_mask
    k = (phase_exp + bin(x_mask & z_mask).count("1")) % 4
    sign = 1 - 2 * _parity(src & z_mask)
    return (1j**k) * sign * psi[src]


def spline_eval(breaks, coefs, t):
    """Evaluate a piecewise cubic (scipy ``PPoly`` layout) at scalar ``t``."""
    i = int(np.searchsorted(breaks, t, side="right")) - 1
    i = min(max(i, 0), breaks.size - 2)
    d = t - breaks[i]
    c = coefs[:, i, :]
    return ((c[0] * d + c[1]) * d + c[2]) * d + c[3]


def lcu_apply(perm, fac, g, psi):
    """sum_gamma g_gamma * (fac[gamma] * psi[perm[gamma]])."""
    return np.einsum("g,gj->j", g, fac * psi[perm])


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = rhs(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def dopri(rhs, y0, t_out, rtol, atol, max_steps=10_000_000):
    """Adaptive Dormand-Prince 5(4) with dense output at ``t_out``.

    Returns ``(states, n_accepted, n_rejected)``; ``states[i]`` approximates
    y(t_out[i]).  ``t_out`` must be increasing.
    """
    t_out = np.asarray(t_out, dtype=float)
    y = np.array(y0, dtype=complex)
    out = np.empty((t_out.size, y.size), dtype=complex)
    out[0] = y
    t, t_end = t_out[0], t_out[-1]
    if t_out.size == 1 or t_end == t:
        out[:] = y
        return out, 0, 0
    K = np.empty((7, y.size), dtype=complex)
    K[0] = rhs(t, y)
    h = _initial_step(rhs, t, y, K[0], 1.0, rtol, atol)
    nxt = 1
    n_acc = n_rej = 0
    while t < t_end:
        if n_acc + n_rej > max_steps:
            raise IntegrationError(f"step budget exhausted at t={t}", t)
        min_step = 10 * np.spacing(abs(t)) + 1e-300
        if h < min_step:
            raise IntegrationError(f"step size underflow at t={t}", t)
        h = min(h, t_end - t)
        for s in range(1, 6):
            dy = np.tensordot(_A[s], K[:s], axes=1)
            K[s] = rhs(t + _C[s] * h, y + h * dy)
        y_new = y + h * np.tensordot(_B, K[:6], axes=1)
        t_new = t + h if h < t_end - t else t_end
        K[6] = rhs(t_new, y_new)
        err = h * np.tensordot(_E, K, axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.sqrt(np.mean(np.abs(err / scale) ** 2))
        if err_norm <= 1.0:
            Q = K.T @ _P
            while nxt < t_out.size and t_out[nxt] <= t_new:
                th = (t_out[nxt] - t) / h
                out[nxt] = y + h * (Q @ (th ** np.arange(1, 5)))
                nxt += 1
            t, y = t_new, y_new
            K[0] = K[6]
            n_acc += 1
            fac = 10.0 if err_norm == 0 else min(10.0, 0.9 * err_norm ** -0.2)
            h *= fac
        else:
            n_rej += 1
            h *= max(0.2, 0.9 * err_norm ** -0.2)
    while nxt < t_out.size:
        out[nxt] = y
        nxt += 1
    return out, n_acc, n_rej


def dopri_lcu(breaks, coefs, perm, fac, psi0, t_out, rtol, atol):
    """Integrate i psi' = H(t) psi with H(t) = sum g(t) P_gamma (spline g)."""

    def rhs(t, y):
        return -1j * lcu_apply(perm, fac, spline_eval(breaks, coefs, t), y)

    return dopri(rhs, psi0, t_out, rtol, atol)


def _pinv_solve(a, b, cutoff):
    if a.size == 0:
        return np.zeros(0)
    w, v = np.linalg.eigh(a)
    keep = w > cutoff
    return v[:, keep] @ ((v[:, keep].T @ b) / w[keep])


def _ansatz_state(phi0, op_perm, op_fac, theta):
    psi = phi0
    for k in range(theta.size):
        psi = np.cos(theta[k]) * psi - 1j * np.sin(theta[k]) * (op_fac[k] * psi[op_perm[k]])
    return psi


def avqds_run(phi0, op_perm, op_fac, theta, breaks, coefs, h_perm, h_fac, ident,
              t0, dt, t_end, n_steps, s_start, l2_cut, no_stop_first, emit_t, emit_amps,
              emit_pos, l2_log, nth_log, cutoff=1e-12):
    """Euler-step a fixed ansatz until the residual reaches ``l2_cut``.

    Returns ``(s_stop, emit_pos)``; ``s_stop > n_steps`` means the end was
    reached.  ``theta``, ``emit_amps``, ``l2_log`` and ``nth_log`` are
    updated in place.
    """
    phi0 = np.asarray(phi0, dtype=complex)
    nops = theta.size
    for s in range(s_start, n_steps + 1):
        t = t0 + s * dt if s < n_steps else t_end
        psi = phi0
        der = []
        for k in range(nops):
            c, sn = np.cos(theta[k]), np.sin(theta[k])
            der = [c * d - 1j * sn * (op_fac[k] * d[op_perm[k]]) for d in der]
            psi = c * psi - 1j * sn * (op_fac[k] * psi[op_perm[k]])
            der.append(-1j * (op_fac[k] * psi[op_perm[k]]))
        g = spline_eval(breaks, coefs, t)
        if ident >= 0:
            g[ident] = 0.0
        hpsi = lcu_apply(h_perm, h_fac, g, psi)
        e = float(np.real(np.vdot(psi, hpsi)))
        var = float(np.real(np.vdot(hpsi, hpsi))) - e * e
        if nops:
            D = np.array(der)
            gauge = np.imag(np.conj(D) @ psi)
            ct = np.imag(np.conj(D) @ hpsi) - gauge * e
            at = np.real(np.conj(D) @ D.T)
            at = 0.5 * (at + at.T) - np.outer(gauge, gauge)
            td = _pinv_solve(at, ct, cutoff)
            l2 = var - float(td @ ct)
        else:
            td = np.zeros(0)
            l2 = var
        if -1e-12 <= l2 < 0:
            l2 = 0.0
        if l2 >= l2_cut and not (no_stop_first and s == s_start):
            return s, emit_pos
        l2_log[s] = l2
        nth_log[s] = nops
        if s == n_steps:
            while emit_pos < emit_t.size:
                emit_amps[emit_pos] = _ansatz_state(phi0, op_perm, op_fac, theta)
                emit_pos += 1
            break
        t_next = t0 + (s + 1) * dt if s + 1 < n_steps else t_end
        while emit_pos < emit_t.size and emit_t[emit_pos] < t_next:
            emit_amps[emit_pos] = _ansatz_state(
                phi0, op_perm, op_fac, theta + td * (emit_t[emit_pos] - t))
            emit_pos += 1
        theta += td * (t_next - t)
    return n_steps + 1, emit_pos
