"""Second-quantised Hamiltonians and their Bravyi-Kitaev qubit encoding.

The BK transformation matrix is the Fenwick-tree pattern: qubit ``j``
stores the parity of modes ``j - lowbit(j+1) + 1 .. j``.  For any number of
modes this equals the restriction of the power-of-two tree.  Update, parity
and remainder sets are derived from ``beta`` by linear algebra over GF(2),
so they are consistent with it by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ContractError, DimensionError
from .pauli import MAX_QUBITS, LcuHamiltonian, PauliString, pauli_mul

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class BkIndexSets:
    """Per-mode BK index sets plus the binary matrix ``beta`` (q = beta f)."""

    n_orbitals: int
    beta: np.ndarray
    update: tuple
    parity: tuple
    flip: tuple
    remainder: tuple

    def __repr__(self):
        return f"BkIndexSets(n_orbitals={self.n_orbitals}, update={self.update}, parity={self.parity}, remainder={self.remainder})"


def _gf2_inverse(m):
    n = m.shape[0]
    a = np.concatenate([m.astype(np.uint8) % 2, np.eye(n, dtype=np.uint8)], axis=1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r, col]), None)
        if piv is None:
            raise ContractError("matrix is singular over GF(2)")
        a[[col, piv]] = a[[piv, col]]
        for r in range(n):
            if r != col and a[r, col]:
                a[r] ^= a[col]
    return a[:, n:]


def _solve_left(beta_inv, target):
    """Qubit set whose XOR reproduces the mode-parity mask ``target``."""
    x = (target.astype(np.uint8) @ beta_inv) % 2
    return tuple(int(j) for j in np.flatnonzero(x))


@lru_cache(maxsize=None)
def build_bk_sets(n_orbitals: int) -> BkIndexSets:
    if n_orbitals < 1:
        raise ContractError("n_orbitals must be >= 1")
    if n_orbitals > MAX_QUBITS:
        raise ContractError(f"at most {MAX_QUBITS} modes supported")
    n = n_orbitals
    beta = np.zeros((n, n), dtype=np.uint8)
    for j in range(n):
        low = (j + 1) & -(j + 1)
        beta[j, j - low + 1 : j + 1] = 1
    binv = _gf2_inverse(beta)
    update, parity, flip, remainder = [], [], [], []
    for p in range(n):
        update.append(tuple(j for j in range(n) if j != p and beta[j, p]))
        below = np.zeros(n, dtype=np.uint8)
        below[:p] = 1
        par = _solve_left(binv, below)
        own = beta[p].copy()
        own[p] = 0
        fl = _solve_left(binv, own)
        parity.append(par)
        flip.append(fl)
        remainder.append(tuple(sorted(set(par) ^ set(fl))))
    beta.setflags(write=False)
    return BkIndexSets(n, beta, tuple(update), tuple(parity), tuple(flip), tuple(remainder))


@dataclass(frozen=True)
class OccupationState:
    """Fermionic occupation number vector; bit p of ``bits`` is f_p."""

    n_orbitals: int
    bits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.n_orbitals:
            raise DimensionError("occupation bits exceed n_orbitals")

    @classmethod
    def from_string(cls, s):
        """``"0001"``: rightmost character is mode 0."""
        return cls(len(s), int(s, 2))

    @property
    def n_electrons(self):
        return bin(self.bits).count("1")

    @property
    def label(self):
        return format(self.bits, f"0{self.n_orbitals}b")


def occupation_to_index(f: OccupationState, sets: BkIndexSets) -> int:
    """Computational-basis index of q = beta f (mod 2)."""
    if f.n_orbitals != sets.n_orbitals:
        raise DimensionError("occupation length differs from the BK sets")
    fv = np.array([(f.bits >> p) & 1 for p in range(f.n_orbitals)], dtype=np.uint8)
    q = (sets.beta.astype(np.int64) @ fv) % 2
    return int(sum(int(b) << j for j, b in enumerate(q)))


def occupation_to_qubit(f: OccupationState, sets: BkIndexSets) -> str:
    """Qubit bit-string (highest qubit first) encoding occupation ``f``."""
    return format(occupation_to_index(f, sets), f"0{sets.n_orbitals}b")


# ---------------------------------------------------------------------------
# Pauli sums: dict {(x_mask, z_mask): complex} over literal (phase 0) strings


def _string(n, x, z):
    return PauliString(n, x, z, 0)


def _psum_mul(a, b, n):
    out = {}
    for (xa, za), ca in a.items():
        pa = _string(n, xa, za)
        for (xb, zb), cb in b.items():
            r = pauli_mul(pa, _string(n, xb, zb))
            key = (r.x_mask, r.z_mask)
            out[key] = out.get(key, 0) + ca * cb * 1j**r.phase_exp
    return {k: v for k, v in out.items() if abs(v) > 1e-15}


def _mask(qubits):
    m = 0
    for q in qubits:
        m |= 1 << q
    return m


@lru_cache(maxsize=None)
def _ladder(n, p, dagger):
    """a_p^dagger (or a_p) = 1/2 X_U (X_p Z_P -/+ i Y_p Z_R) as a Pauli sum."""
    s = build_bk_sets(n)
    u = _mask(s.update[p])
    bit = 1 << p
    zp = _mask(s.parity[p])
    zr = _mask(s.remainder[p])
    sign = -1 if dagger else 1
    # X_U X_p Z_P and X_U Y_p Z_R as literal strings; Y_p = i X_p Z_p
    return {(u | bit, zp): 0.5, (u | bit, zr | bit): sign * 0.5j}


def ladder_operator(n_orbitals, p, dagger):
    """Encoded creation (``dagger=True``) or annihilation operator as a Pauli sum."""
    if not 0 <= p < n_orbitals:
        raise DimensionError(f"mode {p} outside 0..{n_orbitals - 1}")
    return dict(_ladder(n_orbitals, p, dagger))


@lru_cache(maxsize=None)
def _product(n, ops):
    """Pauli sum of a product of ladder operators ``((p, dagger), ...)``."""
    acc = {(0, 0): 1.0}
    for p, dag in ops:
        acc = _psum_mul(acc, _ladder(n, p, dag), n)
    return acc


def pauli_sum_matrix(psum, n):
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    for (x, z), c in psum.items():
        m += c * _string(n, x, z).to_matrix()
    return m


def _as_frames(v):
    return np.atleast_1d(np.asarray(v, dtype=complex))


@dataclass(frozen=True, eq=False)
class SecondQuantizedHamiltonian:
    """sum h_pq a_p^+ a_q + sum h_pqrs a_p^+ a_q^+ a_r a_s, sampled per frame.

    Coefficient values may be scalars or arrays over frames; all arrays must
    share one frame count.  Missing (q, p) partners count as zero.
    """

    n_orbitals: int
    one_body: dict
    two_body: dict = field(default_factory=dict)
    times: np.ndarray | None = None

    def __post_init__(self):
        if self.n_orbitals < 1 or self.n_orbitals > MAX_QUBITS:
            raise ContractError(f"n_orbitals must be in [1, {MAX_QUBITS}]")
        sizes = set()
        for key, v in list(self.one_body.items()) + list(self.two_body.items()):
            if any(not 0 <= i < self.n_orbitals for i in key):
                raise DimensionError(f"index {key} outside 0..{self.n_orbitals - 1}")
            sizes.add(_as_frames(v).size)
        sizes.discard(1)
        if len(sizes) > 1:
            raise DimensionError("coefficient arrays have different frame counts")
        n_frames = sizes.pop() if sizes else 1
        if self.times is not None and np.size(self.times) != n_frames:
            raise DimensionError("times length differs from frame count")
        object.__setattr__(self, "_n_frames", n_frames)

    @classmethod
    def from_matrices(cls, h, times=None):
        """Build from an (n_frames, M, M) or (M, M) one-body array."""
        h = np.asarray(h, dtype=complex)
        if h.ndim == 2:
            h = h[None]
        m = h.shape[-1]
        one = {(p, q): h[:, p, q].copy() for p in range(m) for q in range(m)
               if np.any(h[:, p, q] != 0)}
        return cls(m, one, {}, times)

    @property
    def n_frames(self):
        return self._n_frames

    def one_body_matrices(self):
        m = self.n_orbitals
        out = np.zeros((self.n_frames, m, m), dtype=complex)
        for (p, q), v in self.one_body.items():
            out[:, p, q] = _as_frames(v)
        return out

    def check_hermitian(self, tol=HERMITIAN_TOL):
        h = self.one_body_matrices()
        dev = np.abs(h - np.conj(np.swapaxes(h, 1, 2)))
        scale = np.maximum(1.0, np.abs(h))
        bad = np.argwhere(dev > tol * scale)
        if bad.size:
            f, p, q = bad[0]
            raise ContractError(
                f"one-body block not Hermitian at frame {f}: h[{p},{q}] vs conj(h[{q},{p}])")


@dataclass(frozen=True)
class EncodedFrames:
    """Canonical Pauli terms and the real coefficient table g[frame, term]."""

    terms: tuple
    coefficients: np.ndarray
    times: np.ndarray | None = None

    @property
    def labels(self):
        return [u.label for u in self.terms]

    def to_lcu(self):
        """Cubic-spline LcuHamiltonian (constant when there is a single frame)."""
        if self.coefficients.shape[0] == 1 or self.times is None:
            return LcuHamiltonian.constant(self.terms, self.coefficients[0])
        return LcuHamiltonian.from_samples(self.terms, self.times, self.coefficients)


def _operator_table(h: SecondQuantizedHamiltonian):
    """Pauli sums and per-frame coefficients for every ladder product present."""
    n = h.n_orbitals
    ops, weights = [], []
    for (p, q), v in h.one_body.items():
        ops.append(_product(n, ((p, True), (q, False))))
        weights.append(_as_frames(v))
    for (p, q, r, s), v in h.two_body.items():
        ops.append(_product(n, ((p, True), (q, True), (r, False), (s, False))))
        weights.append(_as_frames(v))
    return ops, weights


def bk_transform_frames(h: SecondQuantizedHamiltonian, tol=1e-10) -> EncodedFrames:
    """Encode every frame over one time-independent canonical term list.

    A string belongs to the list when it appears in the expansion of a
    ladder product whose coefficient is non-zero in some frame, so the list
    does not depend on accidental numerical cancellations.
    """
    h.check_hermitian()
    n = h.n_orbitals
    ops, weights = _operator_table(h)
    support = set()
    for psum, w in zip(ops, weights):
        if np.any(w != 0):
            support.update(psum)
    keys = sorted(support)
    terms = tuple(_string(n, x, z) for x, z in keys)
    col = {k: i for i, k in enumerate(keys)}
    L = np.zeros((len(ops), len(keys)), dtype=complex)
    for r, psum in enumerate(ops):
        for k, c in psum.items():
            if k in col:
                L[r, col[k]] = c
    nf = h.n_frames
    W = np.zeros((nf, len(ops)), dtype=complex)
    for r, w in enumerate(weights):
        W[:, r] = w
    g = W @ L if keys else np.zeros((nf, 0), dtype=complex)
    scale = max(1.0, float(np.max(np.abs(g)))) if g.size else 1.0
    if g.size and np.max(np.abs(g.imag)) > tol * scale:
        raise ContractError("encoded coefficients are not real; Hamiltonian is not Hermitian")
    times = None if h.times is None else np.asarray(h.times, dtype=float)
    return EncodedFrames(terms, np.ascontiguousarray(g.real), times)


def bk_transform(h: SecondQuantizedHamiltonian, frame: int = 0):
    """Encode a single frame: returns ``(terms, real coefficient vector)``."""
    enc = bk_transform_frames(h)
    if not -h.n_frames <= frame < h.n_frames:
        raise DimensionError(f"frame {frame} outside 0..{h.n_frames - 1}")
    return enc.terms, enc.coefficients[frame].copy()


def fermion_operator_matrix(n_orbitals, ops):
    """Dense oracle for a product of ladder operators in the BK qubit basis.

    Built directly from the occupation-number action (sign = parity of
    occupied lower modes) and permuted through q = beta f.
    """
    sets = build_bk_sets(n_orbitals)
    dim = 1 << n_orbitals
    perm = np.array([occupation_to_index(OccupationState(n_orbitals, f), sets) for f in range(dim)])
    m = np.eye(dim, dtype=complex)
    for p, dag in ops:
        a = np.zeros((dim, dim), dtype=complex)
        for f in range(dim):
            occ = (f >> p) & 1
            if occ == (0 if dag else 1):
                sign = -1 if bin(f & ((1 << p) - 1)).count("1") % 2 else 1
                a[f ^ (1 << p), f] = sign
        m = m @ a
    out = np.zeros_like(m)
    out[np.ix_(perm, perm)] = m
    return out
