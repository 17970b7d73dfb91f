import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vqcollide import kernels
from vqcollide.avqds import AdaptiveAnsatz, _Engine, _identity_index
from vqcollide.pauli import PauliString

py = kernels.backend_module("python")
try:
    comp = kernels.backend_module("compiled")
except ImportError:  # extension not built
    comp = None

needs_compiled = pytest.mark.skipif(comp is None, reason="compiled extension not built")


@given(st.integers(1, 5).flatmap(lambda n: st.tuples(
    st.just(n), st.integers(0, 2**n - 1), st.integers(0, 2**n - 1), st.integers(0, 3))))
def test_python_pauli_apply_matches_dense(args):
    n, x, z, ph = args
    rng = np.random.default_rng(x * 64 + z)
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    u = PauliString(n, x, z, ph)
    assert np.allclose(py.pauli_apply(x, z, ph, psi), u.to_matrix() @ psi, atol=1e-13)


@needs_compiled
@given(st.integers(0, 1023), st.integers(0, 1023), st.integers(0, 3))
def test_compiled_pauli_apply_matches_python(x, z, ph):
    rng = np.random.default_rng(x ^ z)
    psi = rng.normal(size=1024) + 1j * rng.normal(size=1024)
    assert np.array_equal(comp.pauli_apply(x, z, ph, psi), py.pauli_apply(x, z, ph, psi))


@needs_compiled
def test_spline_and_lcu_agree(frames_10_16):
    h = frames_10_16
    rng = np.random.default_rng(2)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    for t in rng.uniform(h.breaks[0], h.breaks[-1], 20):
        gc = comp.spline_eval(h.breaks, h.spline_coefs, t)
        gp = py.spline_eval(h.breaks, h.spline_coefs, t)
        assert np.max(np.abs(np.asarray(gc) - gp)) <= 1e-14
        yc = comp.lcu_apply(h._perm, h._fac, np.asarray(gp), psi)
        yp = py.lcu_apply(h._perm, h._fac, np.asarray(gp), psi)
        assert np.max(np.abs(np.asarray(yc) - yp)) <= 1e-14


@needs_compiled
def test_dopri_lcu_agrees(frames_10_16, ctx_10_16, phi0):
    h = frames_10_16
    args = (h.breaks, h.spline_coefs, h._perm, h._fac, phi0.amps, ctx_10_16.t_grid, 1e-11, 1e-11)
    assert np.max(np.abs(np.asarray(comp.dopri_lcu(*args)[0]) - py.dopri_lcu(*args)[0])) <= 1e-12


@needs_compiled
def test_avqds_run_agrees_on_fixed_ansatz(frames_10_16, ctx_10_16, phi0):
    h = frames_10_16
    ops = tuple(PauliString.from_label(s, 4) for s in ("Y0", "X0"))
    a = AdaptiveAnsatz(phi0, ops=ops, theta=np.zeros(2))
    tables = _Engine(h, a.pool).tables_for(a.ops)
    t_grid = ctx_10_16.t_grid
    dt = 0.005
    n = int(np.ceil((t_grid[-1] - t_grid[0]) / dt - 1e-9))
    outs = []
    for mod in (comp, py):
        amps = np.zeros((t_grid.size, 16), complex)
        l2 = np.zeros(n + 1)
        mod.avqds_run(phi0.amps, tables.perm, tables.fac, np.zeros(2), h.breaks, h.spline_coefs,
                      h._perm, h._fac, _identity_index(h), t_grid[0], dt, t_grid[-1], n, 0, 1.0,
                      True, t_grid, amps, 0, l2, np.zeros(n + 1, np.int64), 1e-12)
        outs.append((amps, l2))
    assert np.max(np.abs(outs[0][0] - outs[1][0])) <= 1e-10
    assert np.max(np.abs(outs[0][1] - outs[1][1])) <= 1e-10


_PROBE = """
import json
from vqcollide import kernels
from vqcollide.config import SweepConfig
from vqcollide.sweep import run_trajectory
cfg = SweepConfig(n_steps=401)
out = {"backend": kernels.BACKEND}
for m in ("exact", "qas", "avqds"):
    out[m] = run_trajectory(cfg, 24.1, 8.0, method=m).p_asymptotic
print(json.dumps(out))
"""


def _probe(pure):
    env = dict(os.environ)
    env.pop("VQCOLLIDE_PURE_PYTHON", None)
    if pure:
        env["VQCOLLIDE_PURE_PYTHON"] = "1"
    res = subprocess.run([sys.executable, "-c", _PROBE], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(res.stdout)


@needs_compiled
def test_pure_python_fallback_matches_compiled():
    pure, fast = _probe(True), _probe(False)
    assert pure["backend"] == "python" and fast["backend"] == "compiled"
    for m in ("exact", "qas", "avqds"):
        assert abs(pure[m] - fast[m]) <= 1e-9 * max(1.0, abs(fast[m])), m


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.backend_module("fortran")
