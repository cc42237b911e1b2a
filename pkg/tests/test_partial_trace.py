"""
tests/test_partial_trace.py
Inside-out partial trace against closed forms and the consistency oracle.
"""

from itertools import combinations, permutations

import numpy as np
import pytest
from conftest import bell_vector, random_three_mode, random_two_mode

from app.core.errors import PartitionMismatch, TooManyModes
from app.models.domain import ChargePattern, ModePartition
from app.services.fock import build_ladder_operators
from app.services.partial_trace import (
    consistency_operator_pairs,
    consistency_operators,
    expectation,
    inside_out_partial_trace,
    inside_out_signs,
    naive_partial_trace,
    oracle_partial_trace,
    reduce_matrix,
    sequential_trace,
)
from app.services.states import from_pure, general_three_mode, general_two_mode, random_state


def _keep(n_modes, *kept):
    return ModePartition.keep(n_modes, kept)


# ── Closed forms ─────────────────────────────────────────────────────────────

@pytest.mark.parametrize("seed", range(200))
def test_two_mode_closed_forms(seed):
    c = random_two_mode(seed)
    rho = general_two_mode(c)
    a, b = c.alpha, c.beta

    keep_first = inside_out_partial_trace(rho, _keep(2, 1)).matrix
    expected = np.array([[a[0] + a[1], b[1] + b[4]], [np.conj(b[1] + b[4]), a[2] + a[3]]])
    assert np.allclose(keep_first, expected, atol=1e-12), f"Tr over mode 2, seed {seed}"

    keep_second = inside_out_partial_trace(rho, _keep(2, 2)).matrix
    expected = np.array([[a[0] + a[2], b[0] - b[5]], [np.conj(b[0] - b[5]), a[1] + a[3]]])
    assert np.allclose(keep_second, expected, atol=1e-12), f"Tr over mode 1, seed {seed}"


def test_vacuum_reduces_to_vacuum(vacuum2):
    for kept in (1, 2):
        assert np.allclose(inside_out_partial_trace(vacuum2, _keep(2, kept)).matrix, np.diag([1, 0]))


def test_bell_reduces_to_maximally_mixed(bell):
    for kept in (1, 2):
        assert np.allclose(inside_out_partial_trace(bell, _keep(2, kept)).matrix, np.eye(2) / 2)


@pytest.mark.parametrize("m,n", [(1, 2), (2, 1)])
def test_vacuum_sandwich_rule(m, n):
    ops = build_ladder_operators(2)
    op = ops.bdag(m) @ ops.vacuum_projector @ ops.b(m) @ ops.b(n)
    reduced = reduce_matrix(op, 2, [n])
    assert np.allclose(reduced, [[0, 1], [0, 0]]), f"Tr_{m}(b_{m}† P0 b_{m} b_{n}) = {reduced}"


def test_signs_only_touch_pairs_traced_before_kept():
    assert list(inside_out_signs(2, [1])) == [1, 1, 1, 1]
    assert list(inside_out_signs(2, [2])) == [1, 1, 1, -1]


def test_naive_trace_differs_from_fermionic():
    c = random_two_mode(3)
    rho = general_two_mode(c)
    naive = naive_partial_trace(rho.matrix, 2, [2])
    fermionic = reduce_matrix(rho.matrix, 2, [2])
    assert np.isclose(naive[0, 1], c.beta[0] + c.beta[5])
    assert np.isclose(fermionic[0, 1], c.beta[0] - c.beta[5])
    assert np.allclose(np.diag(naive), np.diag(fermionic))


# ── Expectation values ───────────────────────────────────────────────────────

@pytest.mark.parametrize("seed", range(10))
def test_two_mode_expectations(seed):
    c = random_two_mode(seed)
    rho = general_two_mode(c)
    ops = build_ladder_operators(2)
    assert np.isclose(expectation(ops.b(2), rho), np.conj(c.beta[0] - c.beta[5]))
    assert np.isclose(expectation(ops.b(1), rho), np.conj(c.beta[1] + c.beta[4]))


@pytest.mark.parametrize("seed", range(100))
def test_three_mode_hopping_expectations(seed):
    c = random_three_mode(seed)
    rho = general_three_mode(c)
    ops = build_ladder_operators(3)
    nu = c.nu

    def hop(i, j):
        x = ops.bdag(i) @ ops.b(j)
        return expectation(x + x.conj().T, rho)

    assert abs(hop(1, 2) - 2 * np.real(nu[2] + nu[3])) < 1e-10, f"seed {seed}"
    assert abs(hop(1, 3) - 2 * np.real(nu[1] - nu[4])) < 1e-10, f"seed {seed}"
    assert abs(hop(2, 3) - 2 * np.real(nu[0] + nu[5])) < 1e-10, f"seed {seed}"


# ── Oracle ───────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("k", [1, 2, 3])
def test_consistency_basis_is_complete_and_hermitian(k):
    ops = build_ladder_operators(k)
    basis = consistency_operators(ops, range(1, k + 1))
    assert len(basis) == 4 ** k
    for o in basis:
        assert np.allclose(o, o.conj().T)
    flat = np.array([o.reshape(-1) for o in basis])
    assert np.linalg.matrix_rank(flat) == 4 ** k


def test_consistency_pairs_label_every_ladder_operator():
    ops = build_ladder_operators(2)
    pairs = consistency_operator_pairs(ops, (1, 2))
    assert len(pairs) == (16 - 4) // 2
    for pair in pairs:
        assert pair.lam and min(pair.lam + pair.tau) in pair.lam


@pytest.mark.parametrize("n_modes", [2, 3, 4, 5])
@pytest.mark.parametrize("seed", range(100))
def test_oracle_agrees_with_inside_out(n_modes, seed):
    rho = random_state(n_modes, 1 + seed % 4, seed=1000 * n_modes + seed)
    for size in range(1, n_modes):
        for kept in combinations(range(1, n_modes + 1), size):
            p = _keep(n_modes, *kept)
            fast = inside_out_partial_trace(rho, p).matrix
            slow = oracle_partial_trace(rho, p).matrix
            assert np.max(np.abs(fast - slow)) < 1e-10, f"n={n_modes} seed={seed} kept={kept}"


def test_oracle_reproduces_kept_expectations():
    rho = random_state(3, 4, seed=11)
    p = _keep(3, 1, 3)
    reduced = oracle_partial_trace(rho, p)
    local = consistency_operators(build_ladder_operators(2), (1, 2))
    embedded = consistency_operators(build_ladder_operators(3), p.kept)
    for lo, go in zip(local, embedded):
        assert np.isclose(expectation(lo, reduced), expectation(go, rho))


def test_oracle_mode_cap():
    rho = random_state(7, 1, seed=0)
    with pytest.raises(TooManyModes):
        oracle_partial_trace(rho, _keep(7, 1))


# ── Rules ────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("seed", range(5))
def test_ssr_state_has_diagonal_single_mode_marginals(seed):
    rho = random_state(3, 4, seed=seed, ssr=ChargePattern.uniform(3))
    for kept in (1, 2, 3):
        reduced = inside_out_partial_trace(rho, _keep(3, kept)).matrix
        assert abs(reduced[0, 1]) < 1e-12, f"odd coherence survived on mode {kept}"


def test_diagonal_is_occupation_marginal():
    rho = random_state(3, 5, seed=2)
    reduced = inside_out_partial_trace(rho, _keep(3, 2)).matrix
    diag = np.real(np.diag(rho.matrix))
    occupied = [i for i in range(8) if (i >> 1) & 1]
    assert np.isclose(reduced[1, 1].real, diag[occupied].sum())


@pytest.mark.parametrize("n_modes", [3, 4])
@pytest.mark.parametrize("seed", range(20))
def test_sequential_order_is_irrelevant(n_modes, seed):
    rho = random_state(n_modes, 1 + seed % 3, seed=100 * n_modes + seed)
    for size in range(2, n_modes):
        for traced in combinations(range(1, n_modes + 1), size):
            direct = inside_out_partial_trace(rho, ModePartition.trace_out(n_modes, traced)).matrix
            for order in permutations(traced):
                reduced = sequential_trace(rho, list(order)).matrix
                assert np.max(np.abs(reduced - direct)) < 1e-10, f"seed {seed} order {order}"
    for order in permutations(range(1, n_modes + 1)):
        assert np.isclose(sequential_trace(rho, list(order)).matrix[0, 0], 1), f"full trace in order {order}"


def test_tracing_everything_leaves_unit_trace():
    rho = from_pure(bell_vector())
    full = sequential_trace(rho, [2, 1])
    assert full.n_modes == 0
    assert np.isclose(full.matrix[0, 0], 1)


@pytest.mark.parametrize("order", [[1, 1], [0], [3]])
def test_sequential_rejects_bad_order(order):
    with pytest.raises(PartitionMismatch):
        sequential_trace(from_pure(bell_vector()), order)


def test_partition_must_match_state(bell):
    with pytest.raises(PartitionMismatch):
        inside_out_partial_trace(bell, _keep(3, 1))
    with pytest.raises(PartitionMismatch):
        oracle_partial_trace(bell, _keep(3, 1))


@pytest.mark.parametrize("seed", range(10))
def test_single_mode_quadratures(seed):
    c = random_two_mode(seed)
    rho = general_two_mode(c)
    ops = build_ladder_operators(2)
    x_first = expectation(ops.b(1) + ops.bdag(1), rho)
    p_second = expectation(1j * (ops.b(2) - ops.bdag(2)), rho)
    assert np.isclose(x_first, 2 * np.real(c.beta[1] + c.beta[4]))
    assert np.isclose(p_second, 2 * np.imag(c.beta[0] - c.beta[5]))


def test_five_mode_sequential_pairs():
    rho = random_state(5, 4, seed=21)
    for pair in combinations(range(1, 6), 2):
        direct = inside_out_partial_trace(rho, ModePartition.trace_out(5, pair)).matrix
        for order in (list(pair), list(reversed(pair))):
            assert np.allclose(sequential_trace(rho, order).matrix, direct, atol=1e-10), f"order {order}"
