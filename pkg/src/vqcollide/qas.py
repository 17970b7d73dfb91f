"""Quantum-assisted simulation in a fixed span of Pauli-generated states.

The ansatz is |Psi> = sum_i alpha_i U_i |phi0> with U_i drawn from products of
Hamiltonian terms.  All matrix elements are Pauli expectations on |phi0>,
measured once; the complex parameters are then evolved classically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import ode

from .errors import ContractError, DimensionError, IntegrationError
from .observables import (
    SimulationRecord,
    transfer_probabilities,
    variational_fidelity_bound,
)
from .pauli import LcuHamiltonian, PauliString, StateVector, apply_pauli, expectation, pauli_mul

DEFAULT_TOL = 1e-11
EIG_CUTOFF = 1e-12
COND_LIMIT = 1e12


@dataclass(frozen=True)
class MomentBasis:
    generators: tuple
    states: tuple
    K: int
    closed: bool

    @property
    def size(self):
        return len(self.generators)

    @property
    def labels(self):
        return [u.label for u in self.generators]


def build_moment_basis(h: LcuHamiltonian, phi0: StateVector, k_max: int = 8) -> MomentBasis:
    """Breadth-first products of Hamiltonian terms acting on a basis state.

    Two products are projectively equivalent on a computational basis state
    exactly when their X masks agree, so the X mask is the dedup key.  Among
    the strings reaching a new key at the same level the one with the
    smallest Z mask is kept, with its phase dropped.
    """
    if k_max < 1:
        raise ContractError("k_max must be >= 1")
    if phi0.basis_index() is None:
        raise ContractError("the moment basis needs a computational basis initial state")
    n = phi0.n_qubits
    if h.n_terms and h.n_qubits != n:
        raise DimensionError("Hamiltonian and state qubit counts differ")
    terms = [u.normalized() for u in h.terms]
    gens = [PauliString.identity(n)]
    seen = {0}
    frontier = list(gens)
    level = 0
    closed = False
    for k in range(1, k_max + 1):
        found = {}
        for u in frontier:
            for t in terms:
                p = pauli_mul(t, u)
                if p.x_mask in seen:
                    continue
                best = found.get(p.x_mask)
                if best is None or p.z_mask < best.z_mask:
                    found[p.x_mask] = p.normalized()
        if not found:
            closed = True
            break
        new = [found[x] for x in sorted(found)]
        seen.update(found)
        gens.extend(new)
        frontier = new
        level = k
        if len(gens) > 1 << n:
            raise RuntimeError("moment basis exceeds the Hilbert-space dimension")
    else:
        # k_max reached: closed only if one more level would add nothing
        closed = not any(
            pauli_mul(t, u).x_mask not in seen for u in frontier for t in terms)
    states = tuple(apply_pauli(u, phi0) for u in gens)
    return MomentBasis(tuple(gens), states, level, closed)


@dataclass(frozen=True, eq=False)
class QasModel:
    """Measured matrices: overlap A, term matrices D[gamma] and products E[gamma, delta].

    ``E`` holds <phi_i|H_gamma H_delta|phi_j> and is only used to evaluate
    the McLachlan residual along the trajectory.
    """

    basis: MomentBasis
    A: np.ndarray
    D: np.ndarray
    E: np.ndarray
    measurement_count: int
    residual_measurement_count: int
    alpha0: np.ndarray = field(default=None)

    @property
    def size(self):
        return self.A.shape[0]


class _Estimator:
    """Caches <phi0|P|phi0> per literal string; optional shot noise."""

    def __init__(self, phi0, shots=None, seed=None):
        self.phi0 = phi0
        self.shots = shots
        self.seed = seed
        self.cache = {}

    def value(self, p: PauliString) -> complex:
        key = (p.x_mask, p.z_mask)
        if key not in self.cache:
            lit = p.normalized()
            if self.shots is None:
                v = expectation(lit, self.phi0)
            else:
                sub = None if self.seed is None else [self.seed, p.x_mask, p.z_mask]
                v = expectation(lit, self.phi0, shots=self.shots, seed=sub)
            self.cache[key] = v
        return self.cache[key] * 1j**p.phase_exp


def _herm(m):
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def measure_model(basis: MomentBasis, h: LcuHamiltonian, shots=None, seed=None) -> QasModel:
    """Reduce every matrix element to a Pauli expectation on |phi0>."""
    phi0 = basis.states[0]
    n = basis.size
    terms = list(h.terms)
    est = _Estimator(phi0, shots, seed)
    A = np.array([[est.value(pauli_mul(ui, uj)) for uj in basis.generators]
                  for ui in basis.generators])
    D = np.zeros((len(terms), n, n), dtype=complex)
    for g, t in enumerate(terms):
        for i, ui in enumerate(basis.generators):
            left = pauli_mul(ui, t)
            for j, uj in enumerate(basis.generators):
                D[g, i, j] = est.value(pauli_mul(left, uj))
    n_meas = len(est.cache)
    E = np.zeros((len(terms), len(terms), n, n), dtype=complex)
    for g, tg in enumerate(terms):
        for d, td in enumerate(terms):
            tt = pauli_mul(tg, td)
            for i, ui in enumerate(basis.generators):
                left = pauli_mul(ui, tt)
                for j, uj in enumerate(basis.generators):
                    E[g, d, i, j] = est.value(pauli_mul(left, uj))
    alpha0 = np.zeros(n, dtype=complex)
    alpha0[0] = 1.0
    return QasModel(basis, _herm(A), _herm(D), E, n_meas, len(est.cache) - n_meas, alpha0)


def _pinv_hermitian(A):
    w, V = np.linalg.eigh(A)
    cut = EIG_CUTOFF * max(1.0, float(np.max(np.abs(w))))
    inv = np.where(np.abs(w) > cut, 1.0 / np.where(np.abs(w) > cut, w, 1.0), 0.0)
    cond = float(np.max(np.abs(w)) / max(np.min(np.abs(w)), 1e-300))
    return (V * inv) @ np.conj(V.T), cond


def residual_l2(model: QasModel, g, alpha, alpha_dot) -> float:
    """|| (d/dt + i H) Psi ||^2 evaluated inside the span."""
    M = np.tensordot(g, model.D, axes=1)
    H2 = np.tensordot(g, np.tensordot(g, model.E, axes=(0, 1)), axes=(0, 0))
    val = (np.vdot(alpha_dot, model.A @ alpha_dot)
           + 2.0 * np.real(1j * np.vdot(alpha_dot, M @ alpha))
           + np.vdot(alpha, H2 @ alpha))
    return float(val.real)


def evolve_qas(model: QasModel, h: LcuHamiltonian, t_grid, rtol=DEFAULT_TOL, atol=DEFAULT_TOL,
               trajectory=None) -> SimulationRecord:
    """Integrate A alpha' = -i (sum_gamma g_gamma D_gamma) alpha with VODE Adams."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or np.any(np.diff(t_grid) <= 0):
        raise ContractError("t_grid must be strictly increasing")
    if model.D.shape[0] != h.n_terms:
        raise DimensionError("model was measured for a different term list")
    Ainv, cond = _pinv_hermitian(model.A)
    notes = []
    if cond > COND_LIMIT:
        notes.append(f"overlap matrix ill-conditioned (cond={cond:.3g}); regularised solve used")

    def rhs(t, a):
        return -1j * (Ainv @ (np.tensordot(h.coefficients(t, extrapolate=True), model.D, axes=1) @ a))

    n = model.size
    alphas = np.empty((t_grid.size, n), dtype=complex)
    alphas[0] = model.alpha0
    if t_grid.size > 1:
        solver = ode(rhs).set_integrator("zvode", method="adams", rtol=rtol, atol=atol,
                                         nsteps=1_000_000)
        solver.set_initial_value(model.alpha0, t_grid[0])
        for i in range(1, t_grid.size):
            solver.integrate(t_grid[i])
            if not solver.successful():
                raise IntegrationError(f"VODE failed at t={solver.t}", float(solver.t))
            alphas[i] = solver.y
    basis_amps = np.array([s.amps for s in model.basis.states])
    amps = alphas @ basis_amps
    l2 = np.array([
        residual_l2(model, h.coefficients(t), a, rhs(t, a)) for t, a in zip(t_grid, alphas)])
    norms = np.real(np.einsum("ti,ij,tj->t", np.conj(alphas), model.A, alphas))
    if np.max(np.abs(norms - 1.0)) > 1e-6:
        notes.append(f"span norm drift {np.max(np.abs(norms - 1.0)):.3g} exceeds 1e-6")
    l2c = np.maximum(l2, 0.0)
    return SimulationRecord(
        trajectory=trajectory,
        method="qas",
        times=t_grid,
        p_of_t=transfer_probabilities(amps) if amps.shape[1] == 16 else np.full(t_grid.size, np.nan),
        fl_bound=variational_fidelity_bound(l2c, t_grid),
        l2_trace=l2c,
        measurement_count=model.measurement_count,
        amplitudes=amps,
        warnings=notes,
    )
