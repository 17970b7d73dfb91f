import numpy as np
import pytest
from scipy.linalg import expm

from vqcollide.collision import TrajectoryContext, build_frames
from vqcollide.errors import ContractError
from vqcollide.exact import propagate_exact
from vqcollide.observables import transfer_probabilities
from vqcollide.pauli import LcuHamiltonian, PauliString, StateVector

P = PauliString.from_label


def test_rabi_phase():
    omega = 1.7
    h = LcuHamiltonian.constant([P("Z0", 1)], [omega / 2])
    psi0 = StateVector(np.array([1, 1]) / np.sqrt(2))
    t = np.linspace(0, 10, 201)
    res = propagate_exact(h, psi0, t)
    x = np.array([np.real(np.vdot(a, a[::-1])) for a in res.amplitudes])
    assert np.max(np.abs(x - np.cos(omega * t))) < 1e-8


def test_zero_hamiltonian_keeps_state():
    psi0 = StateVector.from_bitstring("1011")
    res = propagate_exact(LcuHamiltonian.constant([], []), psi0, [0.0, 1.0, 2.0])
    assert np.array_equal(res.amplitudes, np.tile(psi0.amps, (3, 1)))


def test_constant_hamiltonian_matches_matrix_exponential():
    rng = np.random.default_rng(2)
    terms = [P(s, 3) for s in ("Z0", "X1Y0", "Z2X1", "Y2", "X2X0")]
    g = rng.normal(size=len(terms))
    h = LcuHamiltonian.constant(terms, g)
    psi0 = StateVector.from_bitstring("010")
    t = np.array([0.0, 0.5, 3.0])
    res = propagate_exact(h, psi0, t)
    for k, tk in enumerate(t):
        assert np.max(np.abs(res.amplitudes[k] - expm(-1j * tk * h.matrix(0.0)) @ psi0.amps)) < 1e-9


@pytest.mark.parametrize("energy,b", [(1.0, 0.02), (10.0, 1.6), (24.1, 3.0), (4.8, 9.0)])
def test_norm_drift(energy, b):
    ctx = TrajectoryContext(energy, b, n_steps=1001)
    res = propagate_exact(build_frames(ctx), StateVector.from_bitstring("1011"), ctx.t_grid)
    assert res.norm_drift <= 1e-9


def test_reference_transfer(exact_10_16):
    assert abs(transfer_probabilities(exact_10_16.amplitudes)[-1] - 0.80) <= 0.05


def test_spline_kernel_matches_generic_integrator(frames_10_16, ctx_10_16, phi0):
    # the constant-coefficient path uses the generic right-hand side
    t = ctx_10_16.t_grid[::100]
    fast = propagate_exact(frames_10_16, phi0, t)
    generic = LcuHamiltonian(frames_10_16.terms, frames_10_16.coeff_fn, frames_10_16.t_span)
    slow = propagate_exact(generic, phi0, t)
    assert np.max(np.abs(fast.amplitudes - slow.amplitudes)) < 1e-8


def test_contract_checks(frames_10_16, phi0):
    with pytest.raises(ContractError):
        propagate_exact(frames_10_16, phi0, [0.0, 0.0])
    with pytest.raises(ContractError):
        propagate_exact(frames_10_16, phi0, [0.0, 1.0], rtol=1e-3)
    with pytest.raises(ContractError):
        propagate_exact(frames_10_16, StateVector(2 * phi0.amps), [0.0, 1.0])
