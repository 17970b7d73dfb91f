"""Real-space quadrature of the two-centre orbital integrals.

Space is split between the two centres with Becke's fuzzy cell weights and
each part is integrated on its own spherical product grid (Gauss-Legendre
in r and cos(theta), trapezoid in phi).  Orbital values, the kinetic
Laplacian and the time derivative are evaluated pointwise, independently of
the closed-form Gaussian algebra in the package.
"""

import numpy as np

RADIAL_EDGES = (0.0, 0.5, 1.5, 3.0, 6.0, 13.0)


def _radial(n_per):
    x, w = np.polynomial.legendre.leggauss(n_per)
    rs, ws = [], []
    for a, b in zip(RADIAL_EDGES, RADIAL_EDGES[1:]):
        rs.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(rs), np.concatenate(ws)


def spherical_grid(center, n_r=40, n_theta=64, n_phi=64):
    r, wr = _radial(n_r)
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    ph = np.arange(n_phi) * 2 * np.pi / n_phi
    wp = np.full(n_phi, 2 * np.pi / n_phi)
    R, CT, PH = np.meshgrid(r, ct, ph, indexing="ij")
    W = (wr[:, None, None] * r[:, None, None] ** 2) * wt[None, :, None] * wp[None, None, :]
    st = np.sqrt(1 - CT**2)
    pts = np.stack([R * st * np.cos(PH), R * st * np.sin(PH), R * CT], axis=-1).reshape(-1, 3)
    return pts + np.asarray(center), W.ravel()


def _becke(pts, A, B):
    """Weight of centre A in the two-centre fuzzy partition."""
    ra = np.linalg.norm(pts - A, axis=1)
    rb = np.linalg.norm(pts - B, axis=1)
    mu = (ra - rb) / np.linalg.norm(A - B)
    for _ in range(3):
        mu = 1.5 * mu - 0.5 * mu**3
    return 0.5 * (1 - mu)


def integrate(fn, A, B, **grid):
    """int fn(r) d^3r, fn vectorised over an (n, 3) array of points."""
    A, B = np.asarray(A, float), np.asarray(B, float)
    total = 0.0
    for c, o in ((A, B), (B, A)):
        pts, w = spherical_grid(c, **grid)
        total = total + np.sum(w * _becke(pts, c, o) * fn(pts))
    return total


class Orbitals:
    """Target orbital at the origin and travelling projectile orbital with plane-wave factor."""

    def __init__(self, exponents, coefficients, b, v, etf=True):
        self.a = np.asarray(exponents)
        self.d = np.asarray(coefficients)
        self.b, self.v, self.k = b, v, (v if etf else 0.0)

    def center(self, j, t):
        return np.zeros(3) if j == 0 else np.array([self.b, 0.0, self.v * t])

    def value(self, j, pts, t):
        c = self.center(j, t)
        r2 = np.sum((pts - c) ** 2, axis=1)
        g = np.exp(-np.outer(r2, self.a)) @ self.d
        if j == 0:
            return g.astype(complex)
        return g * np.exp(1j * self.k * pts[:, 2] - 0.5j * self.k**2 * t)

    def laplacian(self, j, pts, t):
        """nabla^2 of orbital j, from the hand-derived primitive formula."""
        c = self.center(j, t)
        d = pts - c
        r2 = np.sum(d**2, axis=1)
        k = 0.0 if j == 0 else self.k
        a = self.a[None, :]
        prim = np.exp(-r2[:, None] * a) * (4 * a**2 * r2[:, None] - 6 * a
                                           - 4j * k * a * d[:, 2:3] - k**2)
        out = prim @ self.d
        if j == 1:
            out = out * np.exp(1j * self.k * pts[:, 2] - 0.5j * self.k**2 * t)
        return out

    def matrices(self, t, eps, dt=1e-5, **grid):
        """S, Hmat and T = <chi_j|(eps + i d/dt)|chi_k> by quadrature."""
        A, B = self.center(0, t), self.center(1, t)
        S = np.zeros((2, 2), complex)
        H = np.zeros((2, 2), complex)
        T = np.zeros((2, 2), complex)
        for j in (0, 1):
            for k in (0, 1):
                def s_fn(p):
                    return np.conj(self.value(j, p, t)) * self.value(k, p, t)

                def h_fn(p):
                    bra = np.conj(self.value(j, p, t))
                    ket = self.value(k, p, t)
                    pot = 1 / np.linalg.norm(p - A, axis=1) + 1 / np.linalg.norm(p - B, axis=1)
                    return bra * (-0.5 * self.laplacian(k, p, t) - pot * ket)

                def t_fn(p):
                    bra = np.conj(self.value(j, p, t))
                    dk = (self.value(k, p, t + dt) - self.value(k, p, t - dt)) / (2 * dt)
                    return bra * (eps * self.value(k, p, t) + 1j * dk)

                S[j, k] = integrate(s_fn, A, B, **grid)
                H[j, k] = integrate(h_fn, A, B, **grid)
                T[j, k] = integrate(t_fn, A, B, **grid)
        return S, H, T
