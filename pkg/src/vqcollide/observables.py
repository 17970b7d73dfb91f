"""Transfer probabilities, fidelities, the McLachlan fidelity bound and cross sections."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import BOHR2_1E16_CM2
from .errors import ContractError, DimensionError, QuadratureResolutionError
from .pauli import StateVector

# BK images of an electron in the projectile 1s orbital (spin up, spin down)
CAPTURE_STATES = (0b1010, 0b1000)
ASYMPTOTIC_WINDOW = 0.05
SPREAD_LIMIT = 0.02
STATUSES = ("converged", "patched", "failed")


def transfer_probability(psi: StateVector) -> float:
    if psi.n_qubits != 4:
        raise DimensionError("transfer probability is defined for 4-qubit states")
    a = psi.amps
    return float(sum(abs(a[i]) ** 2 for i in CAPTURE_STATES))


def transfer_probabilities(amps) -> np.ndarray:
    """Vectorised transfer probability for an (nt, 16) amplitude array."""
    amps = np.asarray(amps)
    return np.sum(np.abs(amps[:, list(CAPTURE_STATES)]) ** 2, axis=1)


def fidelity(psi_var: StateVector, psi_exact: StateVector) -> float:
    if psi_var.n_qubits != psi_exact.n_qubits:
        raise DimensionError("state dimensions differ")
    return float(abs(np.vdot(psi_exact.amps, psi_var.amps)) ** 2)


def fidelities(amps_var, amps_exact) -> np.ndarray:
    amps_var = np.asarray(amps_var)
    amps_exact = np.asarray(amps_exact)
    if amps_var.shape != amps_exact.shape:
        raise DimensionError("state arrays differ in shape")
    return np.abs(np.sum(np.conj(amps_exact) * amps_var, axis=1)) ** 2


def cumulative_error(l2_trace, times) -> np.ndarray:
    """eps(t) = integral of sqrt(L^2) from the first time, trapezoid rule."""
    l2 = np.maximum(np.asarray(l2_trace, dtype=float), 0.0)
    times = np.asarray(times, dtype=float)
    if l2.shape != times.shape:
        raise DimensionError("L2 trace and times differ in length")
    r = np.sqrt(l2)
    eps = np.zeros_like(r)
    if r.size > 1:
        eps[1:] = np.cumsum(0.5 * (r[1:] + r[:-1]) * np.diff(times))
    return eps


def variational_fidelity_bound(l2_trace, times) -> np.ndarray:
    """F_L(t) = max(0, 1 - eps(t)^2 / 2)^2."""
    eps = cumulative_error(l2_trace, times)
    return np.maximum(0.0, 1.0 - 0.5 * eps**2) ** 2


def asymptotic_from_series(p_of_t, window=ASYMPTOTIC_WINDOW):
    """Mean over the trailing ``window`` fraction; returns (value, warning or None)."""
    p = np.asarray(p_of_t, dtype=float)
    if p.size == 0:
        raise ContractError("empty probability series")
    if not 0 < window <= 1:
        raise ContractError("window must be in (0, 1]")
    n = max(1, int(np.ceil(window * p.size)))
    tail = p[-n:]
    mean = float(np.mean(tail))
    spread = float(np.max(tail) - np.min(tail))
    msg = None
    if spread > SPREAD_LIMIT * max(abs(mean), 1e-6):
        msg = f"P(t) not converged: relative spread {spread / max(abs(mean), 1e-6):.3g} over final window"
    return mean, msg


@dataclass
class SimulationRecord:
    """Time-aligned observables of one trajectory."""

    trajectory: object
    method: str
    times: np.ndarray
    p_of_t: np.ndarray
    fl_bound: np.ndarray
    l2_trace: np.ndarray
    fidelity: np.ndarray | None = None
    n_theta_trace: np.ndarray | None = None
    p_asymptotic: float = float("nan")
    measurement_count: int = 0
    status: str = "converged"
    amplitudes: np.ndarray | None = field(default=None, repr=False)
    warnings: list = field(default_factory=list)
    error: str | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ContractError(f"status must be one of {STATUSES}")

    @property
    def final_infidelity(self):
        if self.fidelity is None or len(self.fidelity) == 0:
            return float("nan")
        return float(1.0 - self.fidelity[-1])

    @property
    def final_bound_infidelity(self):
        return float(1.0 - self.fl_bound[-1]) if len(self.fl_bound) else float("nan")

    @property
    def max_n_theta(self):
        if self.n_theta_trace is None or len(self.n_theta_trace) == 0:
            return 0
        return int(np.max(self.n_theta_trace))


def asymptotic_probability(record: SimulationRecord, window=ASYMPTOTIC_WINDOW) -> float:
    """Store and return the tail-averaged P; non-convergence is warned and recorded."""
    value, msg = asymptotic_from_series(record.p_of_t, window)
    if msg:
        record.warnings.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    record.p_asymptotic = value
    return value


def write_record_csv(record: SimulationRecord, path):
    """Columns t, P, F (blank without an oracle), F_L, L2, N_theta."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "P", "F", "F_L", "L2", "N_theta"])
        for i, t in enumerate(record.times):
            f = "" if record.fidelity is None else _fmt(record.fidelity[i])
            nth = "" if record.n_theta_trace is None else str(int(record.n_theta_trace[i]))
            w.writerow([_fmt(t), _fmt(record.p_of_t[i]), f, _fmt(record.fl_bound[i]),
                        _fmt(record.l2_trace[i]), nth])


@dataclass(frozen=True)
class CrossSectionPoint:
    energy_keV: float
    sigma_au: float
    n_impact_points: int
    method: str = ""

    @property
    def sigma_cm2(self):
        """Cross section in units of 1e-16 cm^2."""
        return self.sigma_au * BOHR2_1E16_CM2


def cross_section(pb, b_max=None, energy_keV=float("nan"), method="") -> CrossSectionPoint:
    """2 pi int P(b) b db by trapezoid, plus P(b_min) pi b_min^2 below the grid."""
    arr = np.asarray(pb, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ContractError("expected a sequence of (b, P) pairs")
    if b_max is not None:
        arr = arr[arr[:, 0] <= b_max + 1e-12]
    if arr.shape[0] < 10:
        raise QuadratureResolutionError(f"need at least 10 impact parameters, got {arr.shape[0]}")
    b, p = arr[:, 0], arr[:, 1]
    if np.any(np.diff(b) <= 0):
        raise ContractError("impact parameters must be strictly ascending")
    if b[0] < 0 or np.any(p < -1e-9) or np.any(p > 1 + 1e-9):
        raise ContractError("need b >= 0 and probabilities in [0, 1]")
    sigma = 2.0 * np.pi * np.trapezoid(p * b, b) + p[0] * np.pi * b[0] ** 2
    return CrossSectionPoint(float(energy_keV), float(max(sigma, 0.0)), int(b.size), method)


def write_cross_section_csv(points, path, provenance=None):
    """Columns E_keV, sigma_au, sigma_1e-16_cm2, n_b_points, method (+ provenance)."""
    extra = list(provenance or {})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["E_keV", "sigma_au", "sigma_1e-16_cm2", "n_b_points", "method"] + extra)
        for pt in points:
            w.writerow([_fmt(pt.energy_keV), _fmt(pt.sigma_au), _fmt(pt.sigma_cm2),
                        pt.n_impact_points, pt.method] + [provenance[k] for k in extra])


def _fmt(x):
    return format(float(x), ".12e")
