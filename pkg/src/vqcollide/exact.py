"""Reference propagation of i psi' = H(t) psi by adaptive Dormand-Prince 5(4)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractError, DimensionError
from .pauli import LcuHamiltonian, StateVector

DEFAULT_TOL = 1e-11


@dataclass(frozen=True)
class PropagationResult:
    """States on ``times`` plus solver statistics.  Indexable like a list."""

    times: np.ndarray
    amplitudes: np.ndarray
    n_accepted: int
    n_rejected: int

    def __len__(self):
        return self.times.size

    def __getitem__(self, i):
        return StateVector(self.amplitudes[i])

    @property
    def states(self):
        return [StateVector(a) for a in self.amplitudes]

    @property
    def final(self):
        return StateVector(self.amplitudes[-1])

    @property
    def norm_drift(self):
        """max_t | 1 - ||psi(t)|| |."""
        return float(np.max(np.abs(1.0 - np.linalg.norm(self.amplitudes, axis=1))))


def propagate_exact(h: LcuHamiltonian, psi0: StateVector, t_grid, rtol=DEFAULT_TOL,
                    atol=DEFAULT_TOL) -> PropagationResult:
    """Integrate from ``t_grid[0]`` and emit the state at every grid time.

    The state is never renormalised; ``norm_drift`` measures solver quality.
    Spline Hamiltonians use the compiled kernel when it is available.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or np.any(np.diff(t_grid) <= 0):
        raise ContractError("t_grid must be a strictly increasing 1-D sequence")
    for tol in (rtol, atol):
        if not 1e-13 <= tol <= 1e-6:
            raise ContractError("tolerances must lie in [1e-13, 1e-6]")
    if abs(psi0.norm() - 1.0) > 1e-10:
        raise ContractError("initial state must be normalised")
    if h.n_terms and h.n_qubits != psi0.n_qubits:
        raise DimensionError("Hamiltonian and state qubit counts differ")
    if h.n_terms == 0:
        amps = np.broadcast_to(psi0.amps, (t_grid.size, psi0.dim)).copy()
        return PropagationResult(t_grid, amps, 0, 0)
    if h.has_spline:
        h.coefficients(t_grid[0])
        h.coefficients(t_grid[-1])
        amps, na, nr = kernels.dopri_lcu(
            h.breaks, h.spline_coefs, h._perm, h._fac, psi0.amps, t_grid, rtol, atol)
    else:
        amps, na, nr = kernels.dopri(
            lambda t, y: -1j * h.apply_amps(t, y), psi0.amps, t_grid, rtol, atol)
    return PropagationResult(t_grid, np.asarray(amps), int(na), int(nr))
