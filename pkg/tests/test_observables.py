import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vqcollide.config import SweepConfig
from vqcollide.constants import BOHR2_1E16_CM2
from vqcollide.errors import ContractError, DimensionError, QuadratureResolutionError
from vqcollide.observables import (
    SimulationRecord,
    asymptotic_from_series,
    asymptotic_probability,
    cross_section,
    cumulative_error,
    fidelities,
    fidelity,
    transfer_probabilities,
    transfer_probability,
    variational_fidelity_bound,
    write_cross_section_csv,
    write_record_csv,
)
from vqcollide.pauli import StateVector
from vqcollide.sweep import run_trajectory


def _random_state(rng, n=4):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v))


def test_transfer_probability_basis_states():
    assert transfer_probability(StateVector.from_bitstring("1011")) == 0.0
    assert transfer_probability(StateVector.from_bitstring("1010")) == 1.0
    assert transfer_probability(StateVector.from_bitstring("1000")) == 1.0
    v = np.zeros(16, dtype=complex)
    v[0b1011] = v[0b1010] = 1 / np.sqrt(2)
    assert abs(transfer_probability(StateVector(v)) - 0.5) <= 1e-15


def test_transfer_probability_needs_four_qubits():
    with pytest.raises(DimensionError):
        transfer_probability(StateVector.from_bitstring("101"))


def test_vectorised_transfer_probability():
    rng = np.random.default_rng(1)
    states = [_random_state(rng) for _ in range(5)]
    vec = transfer_probabilities(np.array([s.amps for s in states]))
    assert np.allclose(vec, [transfer_probability(s) for s in states], atol=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_fidelity_identities(seed):
    rng = np.random.default_rng(seed)
    a, b = _random_state(rng), _random_state(rng)
    assert abs(fidelity(a, a) - 1.0) <= 1e-12
    assert 0.0 <= fidelity(a, b) <= 1.0 + 1e-12
    assert abs(fidelity(a, b) - fidelity(b, a)) <= 1e-12
    phased = StateVector(np.exp(0.7j) * a.amps)
    assert abs(fidelity(phased, a) - 1.0) <= 1e-12


def test_fidelities_shape_mismatch():
    with pytest.raises(DimensionError):
        fidelities(np.zeros((3, 16)), np.zeros((2, 16)))


def test_bound_is_one_without_residual():
    t = np.linspace(0, 10, 101)
    assert np.array_equal(variational_fidelity_bound(np.zeros(101), t), np.ones(101))


@given(st.floats(1e-8, 1e-2), st.floats(0.1, 10.0))
def test_bound_for_constant_residual(c, T):
    t = np.linspace(0.0, T, 201)
    fl = variational_fidelity_bound(np.full(t.size, c), t)
    assert abs(fl[-1] - max(0.0, 1 - c * T**2 / 2) ** 2) <= 1e-12
    assert np.all(np.diff(fl) <= 1e-15)


def test_cumulative_error_trapezoid():
    t = np.array([0.0, 1.0, 3.0])
    assert np.allclose(cumulative_error([0.0, 1.0, 4.0], t), [0.0, 0.5, 3.5])
    with pytest.raises(DimensionError):
        cumulative_error([0.0, 1.0], t)


def test_asymptotic_tail_mean():
    p = np.concatenate([np.linspace(0, 0.8, 95), np.full(100, 0.8)])
    value, msg = asymptotic_from_series(p)
    assert value == pytest.approx(0.8, abs=1e-15) and msg is None


def test_unconverged_tail_warns():
    p = np.linspace(0.0, 1.0, 200)
    rec = SimulationRecord(None, "exact", np.arange(200.0), p, np.ones(200), np.zeros(200))
    with pytest.warns(RuntimeWarning):
        asymptotic_probability(rec)
    assert rec.warnings and rec.p_asymptotic == pytest.approx(np.mean(p[-10:]))


def test_asymptotic_contract():
    with pytest.raises(ContractError):
        asymptotic_from_series([])
    with pytest.raises(ContractError):
        asymptotic_from_series([0.1, 0.2], window=0.0)


def test_zero_probability_gives_zero_cross_section():
    b = np.linspace(0.02, 10, 500)
    assert cross_section(np.column_stack([b, np.zeros_like(b)])).sigma_au == 0.0


def test_exponential_probability_quadrature():
    b = np.linspace(0.0, 10.0, 500)
    s = cross_section(np.column_stack([b, np.exp(-b)])).sigma_au
    # 2 pi int_0^10 b e^-b db = 2 pi (1 - 11 e^-10)
    assert abs(s - 2 * np.pi * (1 - 11 * np.exp(-10))) <= 1e-3
    assert abs(s - 6.280) <= 1e-3


def test_uniform_probability_includes_inner_disk():
    b = np.linspace(0.5, 3.0, 50)
    s = cross_section(np.column_stack([b, np.ones_like(b)])).sigma_au
    assert abs(s - np.pi * 9.0) <= 1e-12


def test_unit_conversion():
    b = np.linspace(0.0, 1.0, 20)
    pt = cross_section(np.column_stack([b, np.ones_like(b)]), energy_keV=2.0)
    assert pt.sigma_cm2 == pytest.approx(np.pi * BOHR2_1E16_CM2)
    assert BOHR2_1E16_CM2 == pytest.approx(0.280028520, rel=1e-8)


def test_too_few_impact_parameters():
    b = np.linspace(0.1, 5, 9)
    with pytest.raises(QuadratureResolutionError):
        cross_section(np.column_stack([b, np.zeros_like(b)]))
    b = np.linspace(0.1, 5, 20)
    with pytest.raises(QuadratureResolutionError):
        cross_section(np.column_stack([b, np.zeros_like(b)]), b_max=0.5)


def test_cross_section_contract():
    b = np.linspace(0.1, 5, 20)
    with pytest.raises(ContractError):
        cross_section(np.column_stack([b[::-1], np.zeros_like(b)]))
    with pytest.raises(ContractError):
        cross_section(np.column_stack([b, np.full_like(b, 1.5)]))
    with pytest.raises(ContractError):
        cross_section(b)


def test_record_status_validated():
    with pytest.raises(ContractError):
        SimulationRecord(None, "exact", np.zeros(1), np.zeros(1), np.ones(1), np.zeros(1),
                         status="done")


def test_record_csv(tmp_path):
    t = np.array([0.0, 1.0])
    rec = SimulationRecord(None, "qas", t, np.array([0.0, 0.25]), np.ones(2), np.zeros(2),
                           fidelity=np.ones(2))
    path = tmp_path / "rec.csv"
    write_record_csv(rec, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "P", "F", "F_L", "L2", "N_theta"]
    assert float(rows[2][1]) == 0.25 and rows[2][5] == ""


def test_cross_section_csv(tmp_path):
    b = np.linspace(0, 1, 20)
    pt = cross_section(np.column_stack([b, np.ones_like(b)]), energy_keV=4.8, method="qas")
    path = tmp_path / "s.csv"
    write_cross_section_csv([pt], path, {"seed": "none"})
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["E_keV", "sigma_au", "sigma_1e-16_cm2", "n_b_points", "method", "seed"]
    assert rows[1][3] == "20" and rows[1][4] == "qas" and rows[1][5] == "none"


def test_qas_bound_dominates_fidelity():
    rec = run_trajectory(SweepConfig(n_steps=1001), 10.0, 6.0, method="qas", oracle=True)
    assert np.all(rec.fl_bound <= rec.fidelity + 1e-9)
