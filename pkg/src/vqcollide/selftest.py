"""Quick invariant suite behind ``vqcollide selftest``."""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .collision import TrajectoryContext, build_frames, encode_trajectory
from .exact import propagate_exact
from .fermion import OccupationState, build_bk_sets, occupation_to_qubit
from .observables import cross_section
from .pauli import PauliString, pauli_mul
from .qas import build_moment_basis
from .sweep import initial_state

# canonical (x_mask, z_mask) order
EXPECTED_TERMS = ("I", "Z0", "Z1Z0", "Z2", "Z3Z2Z1", "X0", "Y0", "Z1X0", "Z1Y0",
                  "X2", "Y2", "Z3X2Z1", "Z3Y2Z1")


def _pauli_algebra(rng, n_cases=1000):
    for _ in range(n_cases):
        n = int(rng.integers(1, 5))
        a, b = (PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1 << n)),
                            int(rng.integers(4))) for _ in range(2))
        if not np.array_equal(pauli_mul(a, b).to_matrix(), a.to_matrix() @ b.to_matrix()):
            return False, f"{a.label} * {b.label}"
    return True, f"{n_cases} random products match dense matrices"


def _encoding():
    sets = build_bk_sets(4)
    q = occupation_to_qubit(OccupationState.from_string("0001"), sets)
    enc = encode_trajectory(TrajectoryContext(10.0, 1.6, n_steps=51))
    ok = q == "1011" and tuple(enc.labels) == EXPECTED_TERMS
    return ok, f"|0001> -> |{q}>, {len(enc.terms)} terms"


def _moments():
    h = build_frames(TrajectoryContext(10.0, 1.6, n_steps=51))
    basis = build_moment_basis(h, initial_state())
    ok = set(basis.labels) == {"I", "X0", "X2", "X2X0"} and basis.closed
    return ok, f"{basis.labels}, closed={basis.closed}"


def _norm():
    ctx = TrajectoryContext(10.0, 1.6, n_steps=201)
    res = propagate_exact(build_frames(ctx), initial_state(), ctx.t_grid)
    return res.norm_drift <= 1e-9, f"norm drift {res.norm_drift:.2e}"


def _quadrature():
    b = np.linspace(0.0, 20.0, 2001)
    s = cross_section(np.column_stack([b, np.exp(-b)])).sigma_au
    return abs(s - 2 * np.pi) <= 1e-3, f"sigma[e^-b] = {s:.6f} (2 pi = {2 * np.pi:.6f})"


CHECKS = (
    ("pauli algebra", lambda: _pauli_algebra(np.random.default_rng(0))),
    ("bk encoding", _encoding),
    ("moment basis", _moments),
    ("exact norm", _norm),
    ("cross-section quadrature", _quadrature),
)


def run_selftest(echo=print):
    """Run every check; returns True when all pass."""
    echo(f"kernel backend: {kernels.BACKEND}")
    all_ok = True
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # report and continue with the other checks
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name:<26} {detail}  ({time.perf_counter() - t0:.2f} s)")
    return all_ok
