"""Time-dependent one-body Hamiltonian for H+ + H(1s) along a straight line.

Each spin block is spanned by a target-centred and a projectile-centred
STO-3G 1s orbital.  The projectile orbital carries the plane-wave electron
translation factor exp(i v.r - i v^2 t / 2).

Two couplings are available for turning the orbital matrices into the
one-body coefficients h_pq(t):

``"bare"`` (default)
    h = Herm(Hmat) - eps * I.  The travelling orbitals are used as if they
    were orthonormal and the electronic Hamiltonian is sandwiched directly,
    with the stationary energy phase removed from the diagonal.
``"lowdin"``
    Close coupling in the symmetrically orthogonalised basis:
    h = Herm(S^-1/2 (Hmat - T) S^-1/2) (+ frame-rate commutator).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .constants import HARTREE_EV, PROTON_MASS
from .errors import ContractError, SingularityError
from .fermion import SecondQuantizedHamiltonian, bk_transform_frames
from .integrals import gaussian_pair, kinetic, nuclear

COUPLINGS = ("bare", "lowdin")


def velocity_from_energy(energy_keV):
    """Projectile speed (a.u.) for a proton of lab energy ``energy_keV``."""
    if energy_keV <= 0:
        raise ContractError("collision energy must be positive")
    e_hartree = energy_keV * 1000.0 / HARTREE_EV
    return float(np.sqrt(2.0 * e_hartree / PROTON_MASS))


@dataclass(frozen=True)
class Basis:
    """Normalised contracted s-type orbital: exponents and coefficients.

    ``coefficients`` already include the primitive normalisation, so the
    orbital is ``sum_i c_i exp(-a_i r^2)`` with unit self-overlap.
    """

    exponents: np.ndarray
    coefficients: np.ndarray

    @property
    def energy(self):
        """Isolated-atom expectation <phi| -1/2 nabla^2 - 1/r |phi>."""
        a = self.exponents[:, None]
        b = self.exponents[None, :]
        zero = np.zeros((1, 1, 3))
        cc = self.coefficients[:, None] * self.coefficients[None, :]
        t = kinetic(a, zero, b, zero)
        v = nuclear(a, zero, b, zero, zero)
        return float(np.real(np.sum(cc * (t - v))))


def load_basis(path=None):
    """Read an ``exponent coefficient`` table and normalise the contraction."""
    if path is None:
        text = resources.files("vqcollide").joinpath("data/sto3g_h1s.txt").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(x) for x in line.split()[:2]])
    data = np.array(rows)
    alpha, c = data[:, 0], data[:, 1]
    d = c * (2.0 * alpha / np.pi) ** 0.75
    ss = np.sum(d[:, None] * d[None, :] * (np.pi / (alpha[:, None] + alpha[None, :])) ** 1.5)
    return Basis(alpha, d / np.sqrt(ss))


@lru_cache(maxsize=1)
def default_basis():
    return load_basis()


@dataclass(frozen=True)
class TrajectoryContext:
    """One straight-line collision: R(t) = (b, 0, v t).

    ``epsilon`` is the orbital energy used in the phase factor exp(-i eps t);
    ``None`` selects the basis-set 1s energy so the target diagonal vanishes
    asymptotically.  ``etf=False`` drops the plane-wave translation factor
    (the projectile orbital still moves).  ``velocity`` overrides the speed
    derived from ``energy_keV`` (used for slow-collision checks).
    """

    energy_keV: float
    b: float
    z_span: float = 30.0
    n_steps: int = 2001
    epsilon: float | None = None
    coupling: str = "bare"
    etf: bool = True
    velocity: float | None = None
    basis: Basis = field(default_factory=default_basis, repr=False, compare=False)

    def __post_init__(self):
        if self.energy_keV <= 0:
            raise ContractError("energy_keV must be positive")
        if self.b < 0:
            raise ContractError("impact parameter must be non-negative")
        if self.n_steps < 2 or self.z_span <= 0:
            raise ContractError("need z_span > 0 and n_steps >= 2")
        if self.coupling not in COUPLINGS:
            raise ContractError(f"coupling must be one of {COUPLINGS}")
        if self.velocity is not None and self.velocity < 0:
            raise ContractError("velocity must be non-negative")

    @property
    def v(self):
        if self.velocity is not None:
            return float(self.velocity)
        return velocity_from_energy(self.energy_keV)

    @property
    def t_max(self):
        return 0.5 * self.z_span / self.v

    @property
    def t_grid(self):
        return np.linspace(-self.t_max, self.t_max, self.n_steps)

    @property
    def eps(self):
        return self.basis.energy if self.epsilon is None else float(self.epsilon)

    def position(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (3,))
        out[..., 0] = self.b
        out[..., 2] = self.v * t
        return out

    def separation(self, t):
        return np.sqrt(self.b**2 + (self.v * np.asarray(t)) ** 2)


@dataclass(frozen=True)
class ChannelMatrices:
    """Per-spin 2x2 matrices over (target, projectile); leading axes = time."""

    S: np.ndarray
    Hmat: np.ndarray
    T: np.ndarray
    h_eff: np.ndarray


def _primitive_terms(basis, center, velocity, t, bra):
    """Complex-centre Gaussian expansion of one travelling orbital.

    Returns exponents (1, n), centres (nt, n, 3) and prefactors (nt, n) for
    phi(r - center) exp(i v.r - i v^2 t / 2) (conjugated when ``bra``).
    """
    beta = basis.exponents
    kvec = -velocity if bra else velocity
    v2 = float(velocity @ velocity)
    B = center[:, None, :] + 1j * kvec[None, None, :] / (2.0 * beta[None, :, None])
    phase = 1j * (center @ kvec)[:, None] - v2 / (4.0 * beta[None, :])
    etf = np.exp((0.5j if bra else -0.5j) * v2 * t)[:, None]
    K = basis.coefficients[None, :] * np.exp(phase) * etf
    return beta[None, :], B, K


def _raw_matrices(ctx, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    nt = t.size
    basis = ctx.basis
    R = ctx.position(t)
    origin = np.zeros_like(R)
    vel = np.array([0.0, 0.0, ctx.v])
    zero = np.zeros(3)
    kvec = vel if ctx.etf else zero
    eps = ctx.eps

    orbs = {
        0: (_primitive_terms(basis, origin, zero, t, True),
            _primitive_terms(basis, origin, zero, t, False)),
        1: (_primitive_terms(basis, R, kvec, t, True),
            _primitive_terms(basis, R, kvec, t, False)),
    }
    S = np.zeros((nt, 2, 2), complex)
    H = np.zeros((nt, 2, 2), complex)
    T = np.zeros((nt, 2, 2), complex)
    Rc = R[:, None, None, :]
    for j in (0, 1):
        a, A, Ka = orbs[j][0]
        a, A, Ka = a[:, :, None], A[:, :, None, :], Ka[:, :, None]
        for k in (0, 1):
            b, B, Kb = orbs[k][1]
            b, B, Kb = b[:, None, :], B[:, None, :, :], Kb[:, None, :]
            aa = np.broadcast_to(a, (nt,) + (a.shape[1], b.shape[2]))
            bb = np.broadcast_to(b, aa.shape)
            KK = Ka * Kb
            p, P, s = gaussian_pair(aa, A, bb, B)
            kin = kinetic(aa, A, bb, B)
            v_t = nuclear(aa, A, bb, B, np.zeros(3))
            v_p = nuclear(aa, A, bb, B, Rc)
            S[:, j, k] = np.sum(KK * s, axis=(1, 2))
            H[:, j, k] = np.sum(KK * (kin - v_t - v_p), axis=(1, 2))
            if k == 0:
                T[:, j, k] = eps * S[:, j, k]
            else:
                # d/dt of phi(r - R(t)) gives 2 b v.(r - R) phi for each primitive
                moment = (P - Rc) @ vel
                T[:, j, k] = (eps + 0.5 * float(kvec @ kvec)) * S[:, j, k] + np.sum(
                    KK * 2j * bb * moment * s, axis=(1, 2))
    return t, S, H, T


def _inv_sqrt(S, ctx, t):
    w, V = np.linalg.eigh(S)
    if np.any(w <= 1e-10):
        i = int(np.argmin(np.min(w, axis=-1)))
        raise SingularityError(
            f"overlap matrix not positive definite (E={ctx.energy_keV} keV, "
            f"b={ctx.b}, t={t[i]})", ctx.energy_keV, ctx.b, float(t[i]))
    return w, V


def effective_hamiltonian(S, H, T, ctx=None, t=None, frame_rate=True):
    """Hermitian one-body matrix in the Loewdin-orthogonalised basis.

    With coefficients d = S^{1/2} c the coupled equations i S c' = (H - T) c
    become i d' = h d with
    h = Herm(S^{-1/2} (H - T) S^{-1/2}) + (i/2) [dS^{1/2}/dt, S^{-1/2}].
    ``frame_rate=False`` drops the commutator (rotating-frame) term.
    """
    w, V = _inv_sqrt(S, ctx, t)
    Vh = np.conj(np.swapaxes(V, -1, -2))
    isq = (V / np.sqrt(w)[..., None, :]) @ Vh
    M = H - T
    X = isq @ M @ isq
    h = 0.5 * (X + np.conj(np.swapaxes(X, -1, -2)))
    if frame_rate:
        # dS/dt follows from the anti-Hermitian part of T: T - T^+ = i dS/dt
        sdot = -1j * (T - np.conj(np.swapaxes(T, -1, -2)))
        sd = Vh @ sdot @ V
        rw = np.sqrt(w)
        xdot = V @ (sd / (rw[..., :, None] + rw[..., None, :])) @ Vh
        comm = xdot @ isq - isq @ xdot
        h = h + 0.5j * comm
        h = 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))
    return h


def bare_hamiltonian(H, eps):
    """Herm(Hmat) with the stationary orbital energy removed from the diagonal."""
    h = 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))
    return h - eps * np.eye(H.shape[-1])


def integral_matrices(ctx, t):
    """Raw (S, Hmat, T) at time(s) ``t``; each has shape (nt, 2, 2)."""
    return _raw_matrices(ctx, t)[1:]


def channel_matrices(ctx, t, frame_rate=True):
    """S, Hmat, T and h_eff at time(s) ``t`` (scalar -> 2x2 arrays).

    ``frame_rate`` only affects the ``"lowdin"`` coupling.
    """
    scalar = np.ndim(t) == 0
    tt, S, H, T = _raw_matrices(ctx, t)
    _inv_sqrt(S, ctx, tt)
    if ctx.coupling == "lowdin":
        h = effective_hamiltonian(S, H, T, ctx, tt, frame_rate)
    else:
        h = bare_hamiltonian(H, ctx.eps)
    if scalar:
        return ChannelMatrices(S[0], H[0], T[0], h[0])
    return ChannelMatrices(S, H, T, h)


def embed_spin_blocks(h2):
    """Place per-spin 2x2 blocks on orbitals (0, 1) and (2, 3).

    Orbital order: 0 target up, 1 projectile up, 2 target down,
    3 projectile down.
    """
    h2 = np.asarray(h2)
    out = np.zeros(h2.shape[:-2] + (4, 4), dtype=complex)
    out[..., 0:2, 0:2] = h2
    out[..., 2:4, 2:4] = h2
    return out


def encode_trajectory(ctx):
    """Encoded coefficient table on ``ctx.t_grid`` (an ``EncodedFrames``)."""
    t = ctx.t_grid
    ch = channel_matrices(ctx, t)
    sq = SecondQuantizedHamiltonian.from_matrices(embed_spin_blocks(ch.h_eff), times=t)
    return bk_transform_frames(sq)


def build_frames(ctx):
    """Time-dependent 4-qubit LcuHamiltonian, cubic in t between frames."""
    return encode_trajectory(ctx).to_lcu()


def write_frame_dump(ctx, path):
    """CSV with t, R and every encoded coefficient at each frame."""
    enc = encode_trajectory(ctx)
    t = ctx.t_grid
    R = ctx.separation(t)
    header = ["t", "R"] + [f"g{i}" for i in range(len(enc.terms))]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# terms: " + " ".join(enc.labels) + "\n")
        fh.write(",".join(header) + "\n")
        for i in range(t.size):
            row = [t[i], R[i], *enc.coefficients[i]]
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
    return enc
