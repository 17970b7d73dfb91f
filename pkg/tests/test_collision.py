import math

import numpy as np
import pytest
from scipy.integrate import quad

from vqcollide.collision import (
    TrajectoryContext,
    channel_matrices,
    default_basis,
    encode_trajectory,
    integral_matrices,
    velocity_from_energy,
)
from vqcollide.errors import ContractError, DomainError, SingularityError
from vqcollide.integrals import boys_f0

from quadrature_oracle import Orbitals

GRID = dict(n_r=24, n_theta=40, n_phi=40)
MIRROR = {"Z0": "Z2", "Z1Z0": "Z3Z2Z1", "X0": "X2", "Y0": "Y2",
          "Z1X0": "Z3X2Z1", "Z1Y0": "Z3Y2Z1"}


def test_velocity_from_energy():
    assert abs(velocity_from_energy(1.0) - 0.20007) < 1e-5
    assert abs(velocity_from_energy(25.0) - 1.00035) < 1e-5
    assert abs(velocity_from_energy(24.98) - 1.0) < 1e-3
    with pytest.raises(ContractError):
        velocity_from_energy(0.0)


def test_boys_function():
    assert boys_f0(0.0) == 1.0
    ref = quad(lambda t: np.exp(-t * t), 0, 1, epsabs=1e-14)[0]
    assert abs(boys_f0(1.0) - ref) < 1e-12
    assert abs(boys_f0(1.0) - 0.7468241) < 1e-7
    for z in (0.5 + 0.5j, 2.0 - 1.0j, 1e-5 + 2e-5j, 0.8j):
        series = sum((-z) ** n / (math.factorial(n) * (2 * n + 1)) for n in range(64))
        assert abs(boys_f0(z) - series) < 1e-10
    with pytest.raises(DomainError):
        boys_f0(-60.0)


def test_isolated_atom_energy():
    assert abs(default_basis().energy - (-0.46658)) < 5e-6


@pytest.mark.parametrize("energy,b,t", [(10.0, 1.6, 1.3), (1.0, 0.4, -2.0)])
def test_integrals_match_real_space_quadrature(energy, b, t):
    ctx = TrajectoryContext(energy, b)
    basis = ctx.basis
    S, H, T = (m[0] for m in integral_matrices(ctx, t))
    So, Ho, To = Orbitals(basis.exponents, basis.coefficients, b, ctx.v).matrices(t, ctx.eps, **GRID)
    assert np.max(np.abs(S - So)) < 1e-6
    assert np.max(np.abs(H - Ho)) < 1e-6
    assert np.max(np.abs(T - To)) < 1e-6
    ch = channel_matrices(ctx, t)
    h_oracle = 0.5 * (Ho + Ho.conj().T) - ctx.eps * np.eye(2)
    assert np.max(np.abs(ch.h_eff - h_oracle)) < 1e-6


def test_integrals_without_translation_factor():
    ctx = TrajectoryContext(4.8, 1.0, etf=False)
    basis = ctx.basis
    S, H, _ = (m[0] for m in integral_matrices(ctx, 0.7))
    So, Ho, _ = Orbitals(basis.exponents, basis.coefficients, 1.0, ctx.v,
                         etf=False).matrices(0.7, ctx.eps, **GRID)
    assert np.max(np.abs(S - So)) < 1e-6 and np.max(np.abs(H - Ho)) < 1e-6


def test_separated_static_atoms():
    # at large R only the point-charge tail -1/R of the other proton remains
    for R in (40.0, 1e5):
        ctx = TrajectoryContext(1.0, R, velocity=0.0)
        ch = channel_matrices(ctx, 0.0)
        assert np.allclose(ch.S, np.eye(2), atol=1e-12)
        assert abs(ch.Hmat[0, 1]) < 1e-12
        assert np.allclose(np.diag(ch.Hmat).real, ctx.eps - 1.0 / R, atol=1e-10)
        assert np.allclose(ch.h_eff, -np.eye(2) / R, atol=1e-10)


def test_coincident_centres_are_singular():
    ctx = TrajectoryContext(1.0, 0.0, velocity=0.0)
    S = integral_matrices(ctx, 0.0)[0][0]
    assert abs(abs(S[0, 1]) - 1) < 1e-12
    with pytest.raises(SingularityError):
        channel_matrices(ctx, 0.0)


def test_spin_blocks_mirror():
    enc = encode_trajectory(TrajectoryContext(4.8, 1.2, n_steps=41))
    col = {lab: i for i, lab in enumerate(enc.labels)}
    for up, down in MIRROR.items():
        assert np.allclose(enc.coefficients[:, col[up]], enc.coefficients[:, col[down]], atol=1e-14)


def test_coupling_vanishes_at_path_ends():
    for e, b in ((1.0, 0.02), (24.1, 0.02), (10.0, 1.6)):
        ctx = TrajectoryContext(e, b)
        ch = channel_matrices(ctx, np.array([-ctx.t_max, ctx.t_max]))
        assert np.all(np.abs(ch.h_eff[:, 0, 1]) < 1e-6)


def test_hamiltonian_is_hermitian_for_both_couplings():
    t = np.linspace(-5, 5, 11)
    for coupling in ("bare", "lowdin"):
        h = channel_matrices(TrajectoryContext(2.0, 0.8, coupling=coupling), t).h_eff
        assert np.allclose(h, np.conj(np.swapaxes(h, 1, 2)), atol=1e-14)


def test_invalid_context():
    with pytest.raises(ContractError):
        TrajectoryContext(-1.0, 1.0)
    with pytest.raises(ContractError):
        TrajectoryContext(1.0, -1.0)
    with pytest.raises(ContractError):
        TrajectoryContext(1.0, 1.0, coupling="other")
