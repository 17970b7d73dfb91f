"""Closed-form integrals over s-type Gaussians with complex centres.

A plane-wave factor ``exp(i k.r)`` multiplying ``exp(-b|r-B|^2)`` is absorbed
into a Gaussian centred at the complex point ``B + i k / (2b)``; every
standard s-type formula then continues analytically, with the Boys function
evaluated at complex argument.  Dot products of complex vectors are
bilinear (no conjugation).
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from .errors import DomainError

_SERIES_RADIUS = 1e-4


def boys_f0(z):
    """Zeroth-order Boys function F0(z) = int_0^1 exp(-z t^2) dt.

    Accepts scalars or arrays, real or complex.  Small arguments use the
    Taylor series; elsewhere ``0.5 sqrt(pi/z) erf(sqrt z)``, which is even
    in ``sqrt z`` so the branch of the square root is irrelevant.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.real < -50.0):
        raise DomainError("boys_f0: Re(z) < -50 is outside the supported domain")
    out = np.empty_like(z)
    small = np.abs(z) < _SERIES_RADIUS
    zs = z[small]
    out[small] = 1.0 - zs / 3.0 + zs**2 / 10.0 - zs**3 / 42.0
    zl = z[~small]
    rz = np.sqrt(zl)
    out[~small] = 0.5 * np.sqrt(np.pi) * erf(rz) / rz
    if out.ndim == 0:
        return complex(out)
    return out


def _dot(u, v):
    return np.sum(u * v, axis=-1)


def gaussian_pair(a, A, b, B):
    """Product data for exp(-a|r-A|^2) exp(-b|r-B|^2).

    Returns ``(p, P, S)``: combined exponent, (complex) product centre and
    the overlap integral.  Inputs broadcast; centres carry a trailing axis
    of length 3.
    """
    p = a + b
    mu = a * b / p
    d = A - B
    P = (a[..., None] * A + b[..., None] * B) / p[..., None]
    S = (np.pi / p) ** 1.5 * np.exp(-mu * _dot(d, d))
    return p, P, S


def kinetic(a, A, b, B):
    """<g_a| -1/2 nabla^2 |g_b>."""
    p = a + b
    mu = a * b / p
    d = A - B
    r2 = _dot(d, d)
    S = (np.pi / p) ** 1.5 * np.exp(-mu * r2)
    return mu * (3.0 - 2.0 * mu * r2) * S


def nuclear(a, A, b, B, C):
    """<g_a| 1/|r-C| |g_b> for a unit point charge at C (positive value)."""
    p, P, _ = gaussian_pair(a, A, b, B)
    mu = a * b / p
    d = A - B
    pc = P - C
    return 2.0 * np.pi / p * np.exp(-mu * _dot(d, d)) * boys_f0(p * _dot(pc, pc))
