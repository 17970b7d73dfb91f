"""Compare the compiled and pure-Python kernel backends.

Run:  python3 benchmarks/bench_kernels.py [--repeat N]
Each kernel is timed on identical inputs with both backends and the outputs
are checked for agreement.
"""

import argparse
import time

import numpy as np

from vqcollide import kernels
from vqcollide.avqds import AdaptiveAnsatz, _Engine, _identity_index
from vqcollide.collision import TrajectoryContext, build_frames
from vqcollide.pauli import PauliString, StateVector

PHI0 = "1011"


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def case_pauli_apply(mod):
    rng = np.random.default_rng(1)
    psi = rng.normal(size=1 << 10) + 1j * rng.normal(size=1 << 10)
    psi.setflags(write=False)
    return lambda: [mod.pauli_apply(x, z, 1, psi) for x, z in ((5, 3), (1023, 512), (0, 77))]


def case_dopri_lcu(mod, h, ctx):
    phi0 = StateVector.from_bitstring(PHI0).amps
    return lambda: mod.dopri_lcu(h.breaks, h.spline_coefs, h._perm, h._fac, phi0,
                                 ctx.t_grid, 1e-11, 1e-11)[0]


def case_avqds_run(mod, h, ctx):
    """Fixed two-operator ansatz over the full path.

    Y0 then X0 keeps the parameter metric regular at theta = 0, so both
    backends follow the same trajectory to rounding level.
    """
    phi0 = StateVector.from_bitstring(PHI0)
    ops = tuple(PauliString.from_label(s, 4) for s in ("Y0", "X0"))
    a = AdaptiveAnsatz(phi0, ops=ops, theta=np.zeros(2))
    tables = _Engine(h, a.pool).tables_for(a.ops)
    t0, t1, dt = ctx.t_grid[0], ctx.t_grid[-1], 0.005
    n = int(np.ceil((t1 - t0) / dt - 1e-9))

    def run():
        theta = np.zeros(2)
        amps = np.zeros((ctx.t_grid.size, 16), complex)
        mod.avqds_run(phi0.amps, tables.perm, tables.fac, theta, h.breaks, h.spline_coefs,
                      h._perm, h._fac, _identity_index(h), t0, dt, t1, n, 0, 1.0, True,
                      ctx.t_grid, amps, 0, np.zeros(n + 1), np.zeros(n + 1, np.int64), 1e-12)
        return amps
    return run, n


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    try:
        comp = kernels.backend_module("compiled")
    except ImportError:
        raise SystemExit("compiled extension not built: pip install -e . --no-build-isolation")
    py = kernels.backend_module("python")
    ctx = TrajectoryContext(10.0, 1.6, n_steps=1001)
    h = build_frames(ctx)
    rows = []
    for name in ("pauli_apply", "dopri_lcu", "avqds_run"):
        res = {}
        for label, mod in (("compiled", comp), ("python", py)):
            if name == "pauli_apply":
                fn, units = case_pauli_apply(mod), 3
            elif name == "dopri_lcu":
                fn, units = case_dopri_lcu(mod, h, ctx), 1
            else:
                fn, units = case_avqds_run(mod, h, ctx)
            res[label] = best_of(fn, args.repeat if label == "compiled" else 1)
        tc, oc = res["compiled"]
        tp, op = res["python"]
        diff = float(np.max(np.abs(np.asarray(oc) - np.asarray(op))))
        rows.append((name, tc, tp, tp / tc, diff, units))
    print(f"{'kernel':<12} {'compiled s':>11} {'python s':>10} {'speedup':>8} {'max |diff|':>11}  units")
    for name, tc, tp, sp, diff, units in rows:
        print(f"{name:<12} {tc:11.4f} {tp:10.4f} {sp:8.1f} {diff:11.2e}  {units}")


if __name__ == "__main__":
    main()
