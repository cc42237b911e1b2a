"""
tests/test_fock.py
Ladder operators, CAR and creator-string states.
"""

from itertools import product

import numpy as np
import pytest

from app.core.errors import MalformedOperatorString, ModeCountMismatch, TooManyModes
from app.models.domain import Factor, OccupationState, OperatorString, all_occupations
from app.services.fock import (
    anticommutator,
    anticommutator_residuals,
    basis_state,
    bra,
    build_ladder_operators,
    car_residual,
    ket,
    mode_permutation_unitary,
    number_operator,
    operator_string_to_matrix,
)


def _string(*tokens) -> OperatorString:
    factors = []
    for t in tokens:
        if t == "P0":
            factors.append(Factor(kind="vacuum"))
        elif t.endswith("^"):
            factors.append(Factor(kind="creator", mode=int(t[1:-1])))
        else:
            factors.append(Factor(kind="annihilator", mode=int(t[1:])))
    return OperatorString(factors=tuple(factors))


def test_single_mode():
    ops = build_ladder_operators(1)
    b = ops.b(1)
    assert np.count_nonzero(b) == 1 and b[0, 1] == 1, f"b maps |1⟩ → |0⟩, got {b}"
    assert np.array_equal(anticommutator(b, ops.bdag(1)), np.eye(2))


@pytest.mark.parametrize("n_modes", range(1, 9))
def test_car_suite(n_modes):
    ops = build_ladder_operators(n_modes)
    assert car_residual(ops) <= 1e-12, f"CAR broken for n={n_modes}"
    for k in range(1, n_modes + 1):
        assert not np.any(ops.b(k) @ ops.vacuum), f"b_{k} must annihilate the vacuum"


def test_cross_mode_anticommutator_vanishes():
    ops = build_ladder_operators(2)
    assert not np.any(anticommutator(ops.b(1), ops.bdag(2)))


def test_three_modes_have_21_identities():
    residuals = anticommutator_residuals(build_ladder_operators(3))
    assert len(residuals) == 21
    assert all(r == 0 for *_, r in residuals)


@pytest.mark.parametrize("n_modes,error", [(0, ModeCountMismatch), (11, TooManyModes)])
def test_mode_cap(n_modes, error):
    with pytest.raises(error):
        build_ladder_operators(n_modes)


def test_number_operator_counts_particles():
    ops = build_ladder_operators(4)
    n = number_operator(ops)
    expected = np.diag([occ.particle_number for occ in all_occupations(4)])
    assert np.array_equal(n, expected)


def test_basis_states_are_orthonormal_unit_vectors():
    ops = build_ladder_operators(3)
    vectors = np.array([basis_state(occ, ops) for occ in all_occupations(3)])
    assert np.array_equal(vectors, np.eye(8)), "canonical states are the index-ordered unit vectors"


def test_basis_state_antisymmetry():
    ops = build_ladder_operators(2)
    both = basis_state(OccupationState.from_bits("11"), ops)
    assert np.array_equal(both, ket([1, 2], ops))
    assert np.array_equal(both, -ket([2, 1], ops))
    assert np.array_equal(basis_state(OccupationState.from_bits("00"), ops), ops.vacuum)


def test_basis_state_mode_count_mismatch():
    with pytest.raises(ModeCountMismatch):
        basis_state(OccupationState.from_bits("101"), build_ladder_operators(2))


def test_two_particle_overlaps():
    ops = build_ladder_operators(3)
    modes = range(1, 4)
    for m, n, i, j in product(modes, repeat=4):
        got = bra([m, n], ops) @ ket([i, j], ops)
        expected = (n == i) * (m == j) - (n == j) * (m == i)
        assert got == expected, f"⟨1_{m}|⟨1_{n}| |1_{i}⟩|1_{j}⟩ = {got}, expected {expected}"


def test_bra_is_adjoint_of_reversed_ket():
    ops = build_ladder_operators(3)
    for n, m in product(range(1, 4), repeat=2):
        assert np.array_equal(bra([n, m], ops), ket([m, n], ops).conj())


@pytest.mark.parametrize("tokens,expected_index", [
    (("b1^", "P0", "b1"), 2),
    (("b2^", "b1^", "P0", "b1", "b2"), 3),
])
def test_projector_strings(tokens, expected_index):
    m = operator_string_to_matrix(_string(*tokens), build_ladder_operators(2))
    expected = np.zeros((4, 4))
    expected[expected_index, expected_index] = 1
    assert np.array_equal(m, expected), f"{' '.join(tokens)} → {m}"


def test_empty_string_is_identity():
    assert np.array_equal(operator_string_to_matrix(OperatorString(), build_ladder_operators(2)), np.eye(4))


@pytest.mark.parametrize("tokens", [("P0", "b1", "P0"), ("b3^", "P0")])
def test_malformed_strings(tokens):
    with pytest.raises(MalformedOperatorString):
        operator_string_to_matrix(_string(*tokens), build_ladder_operators(2))


@pytest.mark.parametrize("perm", [(2, 1), (2, 3, 1), (3, 1, 2)])
def test_mode_permutation_unitary(perm):
    ops = build_ladder_operators(len(perm))
    u = mode_permutation_unitary(perm, ops)
    assert np.allclose(u @ u.conj().T, np.eye(ops.dim))
    for k, image in enumerate(perm, start=1):
        assert np.array_equal(u @ ops.b(k) @ u.conj().T, ops.b(image)), f"b_{k} ↦ b_{image}"


def test_mode_permutation_rejects_non_permutation():
    with pytest.raises(ModeCountMismatch):
        mode_permutation_unitary((1, 1), build_ladder_operators(2))
