import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqcollide.collision import TrajectoryContext, encode_trajectory
from vqcollide.errors import ContractError, DimensionError
from vqcollide.fermion import (
    OccupationState,
    SecondQuantizedHamiltonian,
    bk_transform,
    bk_transform_frames,
    build_bk_sets,
    fermion_operator_matrix,
    ladder_operator,
    occupation_to_qubit,
    pauli_sum_matrix,
)

PAPER_TERMS = {"I", "X0", "Y0", "Z0", "X2", "Y2", "Z2", "Z1X0", "Z1Y0", "Z1Z0",
               "Z3X2Z1", "Z3Y2Z1", "Z3Z2Z1"}


def test_single_mode_sets():
    s = build_bk_sets(1)
    assert s.update == ((),) and s.parity == ((),) and s.remainder == ((),)
    assert s.beta.tolist() == [[1]]


def test_four_mode_beta():
    # q0 = f0, q1 = f0+f1, q2 = f2, q3 = f0+f1+f2+f3
    assert build_bk_sets(4).beta.tolist() == [[1, 0, 0, 0], [1, 1, 0, 0], [0, 0, 1, 0], [1, 1, 1, 1]]


def test_eight_mode_sets_match_tabulated_tree():
    # update / parity / remainder sets of the 8-mode Bravyi-Kitaev tree
    s = build_bk_sets(8)
    assert s.update == ((1, 3, 7), (3, 7), (3, 7), (7,), (5, 7), (7,), (7,), ())
    assert s.parity == ((), (0,), (1,), (1, 2), (3,), (3, 4), (3, 5), (3, 5, 6))
    assert s.remainder == ((), (), (1,), (), (3,), (3,), (3, 5), ())


def test_mode_two_acts_on_qubits_three_two_one():
    ops = [ladder_operator(4, 2, True), ladder_operator(4, 2, False)]
    for op in ops:
        support = 0
        for x, z in op:
            support |= x | z
        assert support == 0b1110


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_ladder_operators_match_occupation_oracle(n):
    for p in range(n):
        for dag in (True, False):
            enc = pauli_sum_matrix(ladder_operator(n, p, dag), n)
            assert np.allclose(enc, fermion_operator_matrix(n, [(p, dag)]), atol=1e-14)


@settings(max_examples=60)
@given(st.integers(2, 5).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n - 1),
                                                       st.integers(0, n - 1))))
def test_canonical_anticommutation(case):
    n, p, q = case
    a = pauli_sum_matrix(ladder_operator(n, p, False), n)
    ad = pauli_sum_matrix(ladder_operator(n, q, True), n)
    anti = a @ ad + ad @ a
    assert np.allclose(anti, np.eye(1 << n) * (p == q), atol=1e-14)


def test_occupation_images():
    s = build_bk_sets(4)
    assert occupation_to_qubit(OccupationState.from_string("0001"), s) == "1011"
    assert occupation_to_qubit(OccupationState.from_string("0010"), s) == "1010"
    assert occupation_to_qubit(OccupationState.from_string("0000"), s) == "0000"


def test_number_operator_of_mode_zero():
    eps = -0.37
    terms, g = bk_transform(SecondQuantizedHamiltonian(4, {(0, 0): eps}))
    got = {u.label: c for u, c in zip(terms, g)}
    assert got.keys() == {"I", "Z0"}
    assert np.isclose(got["I"], eps / 2) and np.isclose(got["Z0"], -eps / 2)


def test_zero_hamiltonian():
    terms, g = bk_transform(SecondQuantizedHamiltonian(4, {}))
    assert terms == () and g.size == 0


def test_two_body_terms_match_dense_oracle():
    h = SecondQuantizedHamiltonian(4, {(0, 0): 0.3, (1, 1): -0.2},
                                   {(0, 1, 1, 0): 0.7, (2, 3, 3, 2): 0.4})
    terms, g = bk_transform(h)
    enc = sum(c * u.to_matrix() for u, c in zip(terms, g))
    dense = (0.3 * fermion_operator_matrix(4, [(0, True), (0, False)])
             - 0.2 * fermion_operator_matrix(4, [(1, True), (1, False)])
             + 0.7 * fermion_operator_matrix(4, [(0, True), (1, True), (1, False), (0, False)])
             + 0.4 * fermion_operator_matrix(4, [(2, True), (3, True), (3, False), (2, False)]))
    assert np.allclose(enc, dense, atol=1e-13)


def test_proton_hydrogen_frames_use_thirteen_terms():
    enc = encode_trajectory(TrajectoryContext(10.0, 1.6, n_steps=101))
    assert set(enc.labels) == PAPER_TERMS and len(enc.labels) == 13
    assert enc.coefficients.shape == (101, 13)
    assert [u.sort_key for u in enc.terms] == sorted(u.sort_key for u in enc.terms)


def test_encoded_frame_equals_dense_one_body_operator():
    rng = np.random.default_rng(7)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = m + m.conj().T
    terms, g = bk_transform(SecondQuantizedHamiltonian.from_matrices(m))
    enc = sum(c * u.to_matrix() for u, c in zip(terms, g))
    dense = sum(m[p, q] * fermion_operator_matrix(4, [(p, True), (q, False)])
                for p in range(4) for q in range(4))
    assert np.allclose(enc, dense, atol=1e-13)
    # identity coefficient is the normalised trace
    gi = dict(zip([u.label for u in terms], g))["I"]
    assert np.isclose(gi, np.trace(dense).real / 16)


def test_non_hermitian_input_rejected():
    with pytest.raises(ContractError):
        bk_transform_frames(SecondQuantizedHamiltonian(2, {(0, 1): 1.0}))


def test_bad_indices_and_frames():
    with pytest.raises(DimensionError):
        SecondQuantizedHamiltonian(2, {(0, 2): 1.0})
    with pytest.raises(DimensionError):
        SecondQuantizedHamiltonian(2, {(0, 0): np.ones(3), (1, 1): np.ones(4)})
