"""Bit-mask Pauli strings, dense statevectors and LCU Hamiltonians.

Qubit 0 is the least-significant bit of a basis-state index, so the ket
label ``|q3 q2 q1 q0>`` reads like the binary index (``|1011>`` is 11).

A :class:`PauliString` represents ``i**phase_exp`` times the tensor product
of literal Pauli matrices selected per qubit by ``(x_bit, z_bit)``:
``(0,0)=I, (1,0)=X, (1,1)=Y, (0,1)=Z``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import ContractError, DimensionError

MAX_QUBITS = 12

_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTER.items()}
_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_PHASE_PREFIX = {0: "", 1: "i", 2: "-", 3: "-i"}


def _popcount(v):
    return bin(v).count("1")


@dataclass(frozen=True, slots=True)
class PauliString:
    n_qubits: int
    x_mask: int
    z_mask: int
    phase_exp: int = 0

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ContractError(f"n_qubits must be in [1, {MAX_QUBITS}]")
        full = (1 << self.n_qubits) - 1
        if self.x_mask & ~full or self.z_mask & ~full or self.x_mask < 0 or self.z_mask < 0:
            raise ContractError("Pauli masks exceed n_qubits")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def identity(cls, n_qubits):
        return cls(n_qubits, 0, 0)

    @classmethod
    def from_label(cls, label, n_qubits):
        """Parse ``"Z3X2Z1"``, ``"-iX0"`` or ``"I"`` (indexed form)."""
        m = re.fullmatch(r"\s*([+-]?i?)\s*(.*?)\s*", label)
        prefix, body = m.group(1), m.group(2)
        phase = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}[prefix]
        x = z = 0
        if body not in ("", "I"):
            pos = 0
            for op, q in re.findall(r"([XYZ])(\d+)", body):
                q = int(q)
                if x >> q & 1 or z >> q & 1:
                    raise ContractError(f"qubit {q} repeated in {label!r}")
                xb, zb = _BITS[op]
                x |= xb << q
                z |= zb << q
                pos += len(op) + len(str(q))
            if pos != len(body.replace(" ", "")):
                raise ContractError(f"cannot parse Pauli label {label!r}")
        return cls(n_qubits, x, z, phase)

    @classmethod
    def from_dense(cls, letters):
        """Parse a dense string, leftmost letter = highest qubit (``"ZXZI"``)."""
        n = len(letters)
        x = z = 0
        for q, ch in enumerate(reversed(letters.upper())):
            xb, zb = _BITS[ch]
            x |= xb << q
            z |= zb << q
        return cls(n, x, z)

    def letter(self, q):
        return _LETTER[(self.x_mask >> q & 1, self.z_mask >> q & 1)]

    @property
    def label(self):
        """Indexed label, highest qubit first, identities omitted."""
        body = "".join(
            f"{self.letter(q)}{q}" for q in reversed(range(self.n_qubits)) if self.letter(q) != "I"
        )
        return _PHASE_PREFIX[self.phase_exp] + (body or "I")

    @property
    def dense(self):
        return "".join(self.letter(q) for q in reversed(range(self.n_qubits)))

    @property
    def weight(self):
        return _popcount(self.x_mask | self.z_mask)

    @property
    def is_hermitian(self):
        return self.phase_exp % 2 == 0

    @property
    def sort_key(self):
        return (self.x_mask, self.z_mask)

    def normalized(self):
        """Same string with the global phase dropped (phase_exp = 0)."""
        return PauliString(self.n_qubits, self.x_mask, self.z_mask, 0)

    def commutes_with(self, other):
        s = _popcount(self.x_mask & other.z_mask) + _popcount(other.x_mask & self.z_mask)
        return s % 2 == 0

    def to_matrix(self):
        """Dense 2^n x 2^n matrix (for oracles and small problems)."""
        m = np.array([[1.0 + 0j]])
        for q in reversed(range(self.n_qubits)):
            m = np.kron(m, _MATS[self.letter(q)])
        return (1j**self.phase_exp) * m

    def __mul__(self, other):
        return pauli_mul(self, other)

    def __repr__(self):
        return f"PauliString({self.label!r}, n_qubits={self.n_qubits})"


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    """Exact product ``a @ b`` including the accumulated power of i."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"cannot multiply {a.n_qubits}- and {b.n_qubits}-qubit strings")
    x = a.x_mask ^ b.x_mask
    z = a.z_mask ^ b.z_mask
    # literal sigma(x, z) = i^{x.z} X^x Z^z and Z^z X^x = (-1)^{z.x} X^x Z^z
    k = (
        a.phase_exp
        + b.phase_exp
        + _popcount(a.x_mask & a.z_mask)
        + _popcount(b.x_mask & b.z_mask)
        + 2 * _popcount(a.z_mask & b.x_mask)
        - _popcount(x & z)
    )
    return PauliString(a.n_qubits, x, z, k % 4)


class StateVector:
    """Dense vector of 2^n amplitudes.  Treated as immutable."""

    __slots__ = ("n_qubits", "amps")

    def __init__(self, amps, n_qubits=None):
        amps = np.array(amps, dtype=complex).ravel()
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if amps.size == 0 or 1 << n != amps.size:
            raise DimensionError("amplitude count must be a power of two")
        if n_qubits is not None and n_qubits != n:
            raise DimensionError(f"expected {1 << n_qubits} amplitudes, got {amps.size}")
        if n > MAX_QUBITS:
            raise ContractError(f"at most {MAX_QUBITS} qubits supported")
        amps.setflags(write=False)
        self.n_qubits = n
        self.amps = amps

    @classmethod
    def basis(cls, n_qubits, index):
        a = np.zeros(1 << n_qubits, dtype=complex)
        a[index] = 1.0
        return cls(a)

    @classmethod
    def from_bitstring(cls, bits):
        """``"1011"`` -> |1011> (leftmost character = highest qubit)."""
        return cls.basis(len(bits), int(bits, 2))

    @property
    def dim(self):
        return self.amps.size

    def norm(self):
        return float(np.linalg.norm(self.amps))

    def basis_index(self):
        """Index if this is a computational basis state (up to phase), else None."""
        nz = np.flatnonzero(np.abs(self.amps) > 1e-12)
        if nz.size == 1 and abs(abs(self.amps[nz[0]]) - 1.0) < 1e-12:
            return int(nz[0])
        return None

    def __len__(self):
        return self.amps.size

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits}, norm={self.norm():.12g})"


def _check_dims(u, s):
    if u.n_qubits != s.n_qubits:
        raise DimensionError(f"{u.n_qubits}-qubit operator on {s.n_qubits}-qubit state")


def apply_pauli(u: PauliString, s: StateVector) -> StateVector:
    _check_dims(u, s)
    return StateVector(kernels.pauli_apply(u.x_mask, u.z_mask, u.phase_exp, s.amps))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError("state dimensions differ")
    return complex(np.vdot(a.amps, b.amps))


def expectation(u: PauliString, s: StateVector, shots=None, seed=None) -> float:
    """<s|U|s>, exactly or estimated from ``shots`` projective measurements.

    Shot mode samples the number of +1 outcomes binomially with
    ``numpy.random.default_rng(seed)``, so it is deterministic given a seed.
    """
    _check_dims(u, s)
    if shots is not None:
        if shots < 1:
            raise ContractError("shots must be >= 1")
        if not u.is_hermitian:
            raise ContractError("shot-mode expectation needs a Hermitian string (even phase_exp)")
        lit = u.normalized()
        exact = float(np.real(np.vdot(s.amps, apply_pauli(lit, s).amps)))
        p_plus = min(1.0, max(0.0, 0.5 * (1.0 + exact)))
        k = np.random.default_rng(seed).binomial(int(shots), p_plus)
        est = 2.0 * k / shots - 1.0
        return est if u.phase_exp == 0 else -est
    val = np.vdot(s.amps, apply_pauli(u, s).amps)
    if u.is_hermitian and abs(val.imag) > 1e-12 * max(1.0, abs(val)):
        raise ContractError(f"imaginary part {val.imag:.3e} for a Hermitian string")
    return float(val.real)


def pauli_tables(terms: Sequence[PauliString]):
    """Permutation and phase tables so that (P_g psi)[j] = fac[g, j] * psi[perm[g, j]]."""
    if not terms:
        return np.zeros((0, 1), dtype=np.int64), np.zeros((0, 1), dtype=complex)
    n = terms[0].n_qubits
    dim = 1 << n
    perm = np.empty((len(terms), dim), dtype=np.int64)
    fac = np.empty((len(terms), dim), dtype=complex)
    idx = np.arange(dim, dtype=np.int64)
    ones = np.ones(dim, dtype=complex)
    for g, u in enumerate(terms):
        perm[g] = idx ^ u.x_mask
        fac[g] = kernels.pauli_apply(u.x_mask, u.z_mask, u.phase_exp, ones)
    return perm, fac


@dataclass(frozen=True, eq=False)
class LcuHamiltonian:
    """H(t) = sum_gamma g_gamma(t) H_gamma with fixed Pauli terms.

    ``coeff_fn`` maps a time to the real coefficient vector.  Frames built
    from samples additionally keep ``times``, ``samples`` and the cubic
    spline (``breaks``, ``spline_coefs``) consumed by the compiled kernels.
    """

    terms: tuple
    coeff_fn: Callable[[float], np.ndarray]
    t_span: tuple = (-np.inf, np.inf)
    times: np.ndarray | None = None
    samples: np.ndarray | None = None
    breaks: np.ndarray | None = None
    spline_coefs: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        ns = {u.n_qubits for u in self.terms}
        if len(ns) > 1:
            raise DimensionError("terms act on different qubit counts")
        perm, fac = pauli_tables(self.terms)
        object.__setattr__(self, "_perm", perm)
        object.__setattr__(self, "_fac", fac)

    @classmethod
    def constant(cls, terms, coeffs):
        """Time-independent Hamiltonian (stored as a single constant spline piece)."""
        c = np.asarray(coeffs, dtype=float).copy()
        c.setflags(write=False)
        if c.size != len(terms):
            raise DimensionError("coefficient count differs from term count")
        breaks = np.array([-1e30, 1e30])
        coefs = np.zeros((4, 1, c.size))
        coefs[3, 0] = c
        return cls(tuple(terms), lambda t: c, breaks=breaks, spline_coefs=coefs)

    @classmethod
    def from_samples(cls, terms, times, samples):
        """Cubic-spline interpolation of sampled coefficients."""
        from scipy.interpolate import CubicSpline

        times = np.asarray(times, dtype=float)
        samples = np.asarray(samples, dtype=float).reshape(times.size, len(terms))
        if len(terms) == 0:
            return cls((), lambda t: np.zeros(0), (times[0], times[-1]), times, samples)
        sp = CubicSpline(times, samples, axis=0)
        breaks = np.ascontiguousarray(sp.x)
        coefs = np.ascontiguousarray(sp.c)
        return cls(
            tuple(terms),
            lambda t: kernels.spline_eval(breaks, coefs, float(t)),
            (float(times[0]), float(times[-1])),
            times,
            samples,
            breaks,
            coefs,
        )

    @property
    def n_qubits(self):
        return self.terms[0].n_qubits if self.terms else 0

    @property
    def n_terms(self):
        return len(self.terms)

    @property
    def has_spline(self):
        return self.breaks is not None and self.n_terms > 0

    def coefficients(self, t, extrapolate=False):
        """Coefficient vector at ``t``.

        ``extrapolate`` permits times past the window (the spline's end
        cubics are continued), for integrators that overstep and interpolate
        back.
        """
        lo, hi = self.t_span
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        if not extrapolate and not lo - slack <= t <= hi + slack:
            raise ContractError(f"t={t} outside the Hamiltonian window [{lo}, {hi}]")
        g = np.asarray(self.coeff_fn(t), dtype=float)
        if g.shape != (self.n_terms,):
            raise DimensionError("coefficient vector length differs from term count")
        return g

    def term_index(self, label):
        for i, u in enumerate(self.terms):
            if u.label == label:
                return i
        raise KeyError(label)

    def apply_amps(self, t, amps):
        """H(t) applied to a raw amplitude array."""
        if self.n_terms == 0:
            return np.zeros_like(amps)
        return kernels.lcu_apply(self._perm, self._fac, self.coefficients(t), amps)

    def matrix(self, t):
        """Dense matrix assembled term by term (oracle path)."""
        g = self.coefficients(t)
        dim = 1 << self.n_qubits
        m = np.zeros((dim, dim), dtype=complex)
        for c, u in zip(g, self.terms):
            m += c * u.to_matrix()
        return m


def hamiltonian_matrix_apply(h: LcuHamiltonian, t: float, s: StateVector) -> StateVector:
    """sum_gamma g_gamma(t) H_gamma |s> (not normalised)."""
    if h.n_terms and h.n_qubits != s.n_qubits:
        raise DimensionError("Hamiltonian and state qubit counts differ")
    return StateVector(h.apply_amps(t, s.amps))
