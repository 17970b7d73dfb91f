"""Adaptive variational dynamics with a product-of-rotations ansatz.

|Psi(theta)> = R_{N-1} ... R_0 |phi0>, R_k = exp(-i theta_k U_k); newly
selected operators are applied last.  The parameter velocity minimises the
McLachlan residual || (d/dt + i H') Psi ||^2 where H' is H with its identity
term removed.  The residual is evaluated modulo a global phase rate, which
the product ansatz cannot represent:

    L^2 = td.(A - a a^T).td - 2 td.(C - a <H'>) + Var(H')

with A_kl = Re<d_k Psi|d_l Psi>, C_k = Im<d_k Psi|H' Psi> and
a_k = Im<d_k Psi|Psi>.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import ContractError, ConvergenceError, DimensionError
from .observables import SimulationRecord, cumulative_error, transfer_probabilities
from .pauli import (
    LcuHamiltonian,
    PauliString,
    StateVector,
    apply_pauli,
    expectation,
    pauli_tables,
)

DEFAULT_DT = 0.005
DEFAULT_L2_CUT = 1e-8
EIG_CUTOFF = 1e-12
MIN_REDUCTION = 1e-14
TIE_RTOL = 1e-9
TIE_ATOL = 1e-15


def full_pool(n_qubits):
    """Every non-identity Pauli string, in canonical (x_mask, z_mask) order."""
    dim = 1 << n_qubits
    return tuple(PauliString(n_qubits, x, z) for x in range(dim) for z in range(dim) if x or z)


@dataclass(frozen=True, eq=False)
class AdaptiveAnsatz:
    phi0: StateVector
    ops: tuple = ()
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pool: tuple = None

    def __post_init__(self):
        if self.pool is None:
            pool = full_pool(self.phi0.n_qubits)
        else:
            # canonical order makes the tie-break independent of how the pool was listed
            uniq = {(u.x_mask, u.z_mask): u.normalized() for u in self.pool}
            pool = tuple(uniq[k] for k in sorted(uniq) if k != (0, 0))
            if any(u.n_qubits != self.phi0.n_qubits for u in pool):
                raise DimensionError("pool and initial state qubit counts differ")
        object.__setattr__(self, "pool", tuple(pool))
        theta = np.array(self.theta, dtype=float).ravel()
        if theta.size != len(self.ops):
            raise DimensionError("one angle per operator required")
        if not np.all(np.isfinite(theta)):
            raise ContractError("angles must be finite")
        keys = [(u.x_mask, u.z_mask) for u in self.ops]
        if len(set(keys)) != len(keys):
            raise ContractError("operator list has duplicates")
        object.__setattr__(self, "theta", theta)

    @property
    def n_theta(self):
        return len(self.ops)

    def with_op(self, u: PauliString):
        """Append ``u`` with angle 0 (the state is unchanged)."""
        return replace(self, ops=self.ops + (u.normalized(),), theta=np.append(self.theta, 0.0))

    def with_theta(self, theta):
        return replace(self, theta=np.asarray(theta, dtype=float))


class _Tables:
    """Permutation/phase tables for fast Pauli application."""

    def __init__(self, ops):
        self.perm, self.fac = pauli_tables(list(ops))

    def apply(self, i, psi):
        return self.fac[i] * psi[self.perm[i]]

    def apply_all(self, psi):
        return self.fac * psi[self.perm]


def _rotate(psi, upsi, theta):
    return np.cos(theta) * psi - 1j * np.sin(theta) * upsi


def _state_and_derivatives(phi0_amps, tables, theta):
    """Psi and the stacked d Psi / d theta_k (product-rule insertion of -iU_k)."""
    n = theta.size
    psi = phi0_amps
    derivs = []
    for k in range(n):
        upsi = tables.apply(k, psi)
        new = _rotate(psi, upsi, theta[k])
        # -iU_k commutes with R_k, so insert it after the rotation
        derivs = [_rotate(d, tables.apply(k, d), theta[k]) for d in derivs]
        derivs.append(-1j * tables.apply(k, new))
        psi = new
    return psi, (np.array(derivs) if derivs else np.zeros((0, psi.size), dtype=complex))


def prepare_ansatz_state(a: AdaptiveAnsatz) -> StateVector:
    psi, _ = _state_and_derivatives(a.phi0.amps, _Tables(a.ops), a.theta)
    return StateVector(psi)


def derivative_states(a: AdaptiveAnsatz) -> np.ndarray:
    return _state_and_derivatives(a.phi0.amps, _Tables(a.ops), a.theta)[1]


@dataclass(frozen=True)
class McLachlanState:
    """Matrices of the McLachlan residual at one time.

    ``A_R`` and ``C_I[gamma, k] = Im<d_k Psi|H_gamma Psi>`` are the raw
    quantities; ``gauge`` (a_k), ``energies`` (<H_gamma>) and ``Q``
    (Re<H_gamma Psi|H_delta Psi>) complete the phase-corrected residual.
    ``theta_dot`` and ``L2`` hold the optimum for ``g``.
    """

    A_R: np.ndarray
    C_I: np.ndarray
    gauge: np.ndarray
    energies: np.ndarray
    Q: np.ndarray
    g: np.ndarray
    var_H: float
    L2: float
    theta_dot: np.ndarray

    @property
    def n_theta(self):
        return self.A_R.shape[0]


def traceless(h: LcuHamiltonian, g):
    """Coefficients with the identity term zeroed."""
    g = np.array(g, dtype=float)
    for i, u in enumerate(h.terms):
        if u.x_mask == 0 and u.z_mask == 0:
            g[i] = 0.0
    return g


def _reduced(m_A, m_C, gauge, energies, Q, g):
    e = float(g @ energies)
    var = float(g @ Q @ g - e * e)
    At = m_A - np.outer(gauge, gauge)
    Ct = m_C.T @ g - gauge * e
    return At, Ct, var


def _pinv_solve(At, Ct):
    if At.size == 0:
        return np.zeros(0)
    w, V = np.linalg.eigh(At)
    keep = w > EIG_CUTOFF
    return V[:, keep] @ ((V[:, keep].T @ Ct) / w[keep])


def mclachlan_distance(m: McLachlanState, theta_dot, gvec) -> float:
    """Phase-corrected L^2 for an arbitrary parameter velocity and coefficients.

    ``gvec`` must already exclude the identity term.
    """
    theta_dot = np.asarray(theta_dot, dtype=float)
    gvec = np.asarray(gvec, dtype=float)
    if theta_dot.size != m.n_theta or gvec.size != m.C_I.shape[0]:
        raise DimensionError("theta_dot or gvec length mismatch")
    At, Ct, var = _reduced(m.A_R, m.C_I, m.gauge, m.energies, m.Q, gvec)
    l2 = float(theta_dot @ At @ theta_dot - 2.0 * theta_dot @ Ct + var)
    return 0.0 if -1e-12 <= l2 < 0 else l2


def _assemble(psi, derivs, hpsi, g):
    A_R = np.real(np.conj(derivs) @ derivs.T)
    A_R = 0.5 * (A_R + A_R.T)
    C_I = np.imag(np.conj(derivs) @ hpsi.T).T  # (n_terms, N)
    gauge = np.imag(np.conj(derivs) @ psi)
    energies = np.real(np.conj(hpsi) @ psi)
    Q = np.real(np.conj(hpsi) @ hpsi.T)
    Q = 0.5 * (Q + Q.T)
    At, Ct, var = _reduced(A_R, C_I, gauge, energies, Q, g)
    td = _pinv_solve(At, Ct)
    l2 = float(var - td @ Ct) if td.size else var
    l2 = max(l2, 0.0) if l2 >= -1e-12 else l2
    return McLachlanState(A_R, C_I, gauge, energies, Q, g, var, l2, td)


def mclachlan_matrices(a: AdaptiveAnsatz, h: LcuHamiltonian, t: float,
                       mode: str = "direct") -> McLachlanState:
    """Residual matrices at time ``t``.

    ``mode="hadamard"`` obtains A_R and C_I from simulated ancilla
    interference circuits on N+1 qubits instead of direct inner products.
    """
    g = traceless(h, h.coefficients(t))
    tables = _Tables(a.ops)
    psi, derivs = _state_and_derivatives(a.phi0.amps, tables, a.theta)
    hpsi = h._fac * psi[h._perm]
    m = _assemble(psi, derivs, hpsi, g)
    if mode == "direct":
        return m
    if mode != "hadamard":
        raise ContractError("mode must be 'direct' or 'hadamard'")
    A_R, C_I = hadamard_test_matrices(a, h)
    gauge = np.array([_ancilla_expectation(a, ("ins", k), ("end", None), "Y") for k in range(a.n_theta)])
    At, Ct, var = _reduced(A_R, C_I, gauge, m.energies, m.Q, g)
    td = _pinv_solve(At, Ct)
    l2 = float(var - td @ Ct) if td.size else var
    return McLachlanState(A_R, C_I, gauge, m.energies, m.Q, g, var, max(l2, 0.0) if l2 >= -1e-12 else l2, td)


# --- ancilla interference circuits -------------------------------------------


def _ancilla_expectation(a: AdaptiveAnsatz, branch0, branch1, basis, tail=None):
    """Ancilla <X> or <Y> of a two-branch interference circuit on N+1 qubits.

    The ancilla (top qubit) starts in |+>.  Each branch is ``("ins", k)``
    (controlled -iU_k after rotation k) or ``("end", None)``; ``tail`` is a
    Pauli string applied to branch 1 after the last rotation.  The result is
    Re (basis "X") or Im (basis "Y") of <branch0|branch1>.
    """
    n = a.phi0.n_qubits
    dim = 1 << n
    big = n + 1
    full = np.concatenate([a.phi0.amps, a.phi0.amps]) / np.sqrt(2.0)

    def controlled(u, on, factor=1.0):
        half = slice(dim, None) if on else slice(None, dim)
        full[half] = factor * apply_pauli(u, StateVector(full[half])).amps

    for k, (u, th) in enumerate(zip(a.ops, a.theta)):
        sys_u = PauliString(big, u.x_mask, u.z_mask)
        full = _rotate(full, apply_pauli(sys_u, StateVector(full)).amps, th)
        for on, br in ((0, branch0), (1, branch1)):
            if br == ("ins", k):
                controlled(u, on, -1j)
    if tail is not None:
        controlled(tail, 1)
    anc = 1 << n
    # x and z bits both set with phase 0 is Y
    obs = PauliString(big, anc, anc) if basis == "Y" else PauliString(big, anc, 0)
    return expectation(obs, StateVector(full))


def hadamard_test_matrices(a: AdaptiveAnsatz, h: LcuHamiltonian):
    """A_R and C_I from simulated ancilla measurements."""
    n = a.n_theta
    A = np.zeros((n, n))
    for k in range(n):
        for l in range(n):
            A[k, l] = _ancilla_expectation(a, ("ins", k), ("ins", l), "X")
    C = np.zeros((h.n_terms, n))
    for gi, u in enumerate(h.terms):
        for k in range(n):
            C[gi, k] = _ancilla_expectation(a, ("ins", k), ("end", None), "Y", tail=u)
    return A, C


# --- adaptive stepping ---------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    t: float
    L2: float
    n_theta: int
    added: tuple
    measurements: int


def _measurement_estimate(n_theta, n_terms, scored):
    """Circuits per step: A_R entries, C entries, energy/variance strings, pool scoring."""
    base = n_theta * (n_theta + 1) // 2 + n_theta * n_terms + n_terms * (n_terms + 1) // 2
    return base + scored * (n_theta + 1 + n_terms)


def _score_candidates(psi, derivs, hpsi, m, pool_tables, g):
    """Optimal phase-corrected L^2 after appending each pool operator at angle 0."""
    upsi = pool_tables.apply_all(psi)  # (P, dim)
    ev = np.real(upsi @ np.conj(psi))  # <U>
    hp = g @ hpsi  # H' Psi
    e = float(g @ m.energies)
    new_deriv = -1j * upsi
    n = derivs.shape[0]
    P = upsi.shape[0]
    At, Ct, var = _reduced(m.A_R, m.C_I, m.gauge, m.energies, m.Q, g)
    big = np.zeros((P, n + 1, n + 1))
    big[:, :n, :n] = At
    if n:
        b = np.real(np.conj(derivs) @ new_deriv.T).T - np.outer(ev, m.gauge)
        big[:, :n, n] = b
        big[:, n, :n] = b
    big[:, n, n] = 1.0 - ev**2
    rhs = np.zeros((P, n + 1))
    rhs[:, :n] = Ct
    rhs[:, n] = np.imag(np.conj(new_deriv) @ hp) - ev * e
    w, V = np.linalg.eigh(big)
    proj = np.einsum("pji,pj->pi", V, rhs)
    gain = np.where(w > EIG_CUTOFF, proj**2 / np.where(w > EIG_CUTOFF, w, 1.0), 0.0)
    return var - gain.sum(axis=1)


def _choose(scores, current, allowed):
    masked = np.where(allowed, scores, np.inf)
    best = float(np.min(masked))
    tol = TIE_ATOL + TIE_RTOL * abs(best)
    idx = int(np.flatnonzero(masked <= best + tol)[0])
    return idx, best


def _context_tuple(trajectory, t):
    """(E, b, t) for error reports; ``trajectory`` is a context, an (E, b) pair or None."""
    if trajectory is None:
        return float("nan"), float("nan"), float(t)
    if isinstance(trajectory, tuple):
        return float(trajectory[0]), float(trajectory[1]), float(t)
    return float(trajectory.energy_keV), float(trajectory.b), float(t)


class _Engine:
    """Cached tables for one Hamiltonian and pool."""

    def __init__(self, h: LcuHamiltonian, pool):
        self.h = h
        self.pool = tuple(pool)
        self.pool_tables = _Tables(self.pool)
        self.pool_index = {(u.x_mask, u.z_mask): i for i, u in enumerate(self.pool)}
        self.n_terms = h.n_terms
        self.op_tables = None
        self.op_keys = None

    def tables_for(self, ops):
        keys = tuple((u.x_mask, u.z_mask) for u in ops)
        if keys != self.op_keys:
            self.op_tables = _Tables(ops)
            self.op_keys = keys
        return self.op_tables

    def step(self, a: AdaptiveAnsatz, t, l2_cut, trajectory=None):
        """Adapt at time ``t``; returns (ansatz, McLachlanState, added labels, scored)."""
        h = self.h
        g = traceless(h, h.coefficients(t))
        psi, derivs = _state_and_derivatives(a.phi0.amps, self.tables_for(a.ops), a.theta)
        hpsi = h._fac * psi[h._perm]
        m = _assemble(psi, derivs, hpsi, g)
        added = []
        scored = 0
        while m.L2 >= l2_cut:
            allowed = np.ones(len(self.pool), dtype=bool)
            for u in a.ops:
                i = self.pool_index.get((u.x_mask, u.z_mask))
                if i is not None:
                    allowed[i] = False
            if not allowed.any():
                raise ConvergenceError(
                    f"operator pool exhausted with L2={m.L2:.3e}", *_context_tuple(trajectory, t))
            scores = _score_candidates(psi, derivs, hpsi, m, self.pool_tables, g)
            scored += int(allowed.sum())
            idx, best = _choose(scores, m.L2, allowed)
            if m.L2 - best <= MIN_REDUCTION:
                raise ConvergenceError(
                    f"no pool operator reduces L2={m.L2:.3e}", *_context_tuple(trajectory, t))
            u = self.pool[idx]
            a = a.with_op(u)
            added.append(u.label)
            derivs = np.vstack([derivs, -1j * self.pool_tables.apply(idx, psi)[None]])
            m = _assemble(psi, derivs, hpsi, g)
        return a, m, tuple(added), scored


def adapt_and_step(a: AdaptiveAnsatz, h: LcuHamiltonian, t: float, dt: float,
                   l2_cut: float = DEFAULT_L2_CUT, trajectory=None):
    """One adaptive Euler step; returns ``(new_ansatz, StepRecord)``."""
    if dt <= 0:
        raise ContractError("dt must be positive")
    _check_cut(l2_cut)
    eng = _Engine(h, a.pool)
    a, m, added, scored = eng.step(a, t, l2_cut, trajectory)
    rec = StepRecord(float(t), m.L2, a.n_theta, added,
                     _measurement_estimate(a.n_theta, h.n_terms, scored))
    return a.with_theta(a.theta + m.theta_dot * dt), rec


def _check_cut(l2_cut):
    if l2_cut <= 0:
        raise ContractError("l2_cut must be positive")
    if not 1e-10 <= l2_cut <= 1e-2:
        warnings.warn(f"l2_cut={l2_cut:g} outside the recommended range [1e-10, 1e-2]",
                      RuntimeWarning, stacklevel=3)


@dataclass(frozen=True)
class StepLog:
    """Per-step residual log of one AVQDS run (arrays indexed by step)."""

    t: np.ndarray
    L2: np.ndarray
    n_theta: np.ndarray
    added: dict
    measurements: np.ndarray

    def __len__(self):
        return self.t.size

    def records(self):
        for s in range(self.t.size):
            yield StepRecord(float(self.t[s]), float(self.L2[s]), int(self.n_theta[s]),
                             self.added.get(s, ()), int(self.measurements[s]))

    @property
    def selected(self):
        """Operator labels in the order they were appended."""
        return [lab for s in sorted(self.added) for lab in self.added[s]]


def _identity_index(h):
    for i, u in enumerate(h.terms):
        if u.x_mask == 0 and u.z_mask == 0:
            return i
    return -1


def evolve_avqds(h: LcuHamiltonian, phi0: StateVector, t_grid, dt=DEFAULT_DT,
                 l2_cut=DEFAULT_L2_CUT, pool=None, trajectory=None):
    """Adaptive Euler evolution; returns ``(SimulationRecord, StepLog)``.

    The solver steps from ``t_grid[0]`` with step ``dt`` (the final step is
    shortened to land on ``t_grid[-1]``).  States at grid times use the
    angles linearly advanced within the step that contains them.  Stepping
    with a fixed operator list runs in the kernel backend; whenever the
    residual reaches ``l2_cut`` control returns here to grow the ansatz.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or np.any(np.diff(t_grid) <= 0):
        raise ContractError("t_grid must be strictly increasing")
    if dt <= 0:
        raise ContractError("dt must be positive")
    if not h.has_spline:
        raise ContractError("AVQDS evolution needs a spline or constant Hamiltonian")
    if h.n_qubits != phi0.n_qubits:
        raise DimensionError("Hamiltonian and state qubit counts differ")
    _check_cut(l2_cut)
    h.coefficients(t_grid[0])
    h.coefficients(t_grid[-1])
    a = AdaptiveAnsatz(phi0, pool=pool)
    eng = _Engine(h, a.pool)
    t0, t_end = float(t_grid[0]), float(t_grid[-1])
    n_steps = max(1, int(np.ceil((t_end - t0) / dt - 1e-9)))
    l2_log = np.zeros(n_steps + 1)
    nth_log = np.zeros(n_steps + 1, dtype=np.int64)
    meas_extra = {}
    added_log = {}
    amps = np.zeros((t_grid.size, phi0.dim), dtype=complex)
    ident = _identity_index(h)
    theta = np.zeros(0)
    s, pos, adapted = 0, 0, False
    while True:
        tables = eng.tables_for(a.ops)
        s, pos = kernels.avqds_run(
            phi0.amps, tables.perm, tables.fac, theta, h.breaks, h.spline_coefs,
            h._perm, h._fac, ident, t0, float(dt), t_end, n_steps, s, float(l2_cut),
            adapted, t_grid, amps, pos, l2_log, nth_log, EIG_CUTOFF)
        if s > n_steps:
            break
        t = t0 + s * dt if s < n_steps else t_end
        a, m, added, scored = eng.step(a.with_theta(theta), t, l2_cut, trajectory)
        added_log[s] = added
        meas_extra[s] = scored
        theta = a.theta.copy()
        adapted = True
    times = t0 + dt * np.arange(n_steps + 1)
    times[-1] = t_end
    meas = np.array([_measurement_estimate(int(n), h.n_terms, meas_extra.get(i, 0))
                     for i, n in enumerate(nth_log)])
    log = StepLog(times, l2_log, nth_log, added_log, meas)
    eps = np.interp(t_grid, times, cumulative_error(l2_log, times))
    record = SimulationRecord(
        trajectory=trajectory,
        method="avqds",
        times=t_grid,
        p_of_t=transfer_probabilities(amps) if phi0.dim == 16 else np.full(t_grid.size, np.nan),
        fl_bound=np.maximum(0.0, 1.0 - 0.5 * eps**2) ** 2,
        l2_trace=np.interp(t_grid, times, l2_log),
        n_theta_trace=np.interp(t_grid, times, nth_log).round().astype(int),
        measurement_count=int(meas.sum()),
        amplitudes=amps,
    )
    return record, log


def write_step_log(log: StepLog, path):
    """Columns t, L2, N_theta, added (space-separated labels), measurements."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "L2", "N_theta", "added", "measurements"])
        for r in log.records():
            w.writerow([format(r.t, ".12e"), format(r.L2, ".12e"), r.n_theta,
                        " ".join(r.added), r.measurements])
