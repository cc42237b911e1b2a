"""
tests/test_numerics.py
Eigenvalues, entropies and the checked matrix algebra.
"""

import numpy as np
import pytest

from app.core.errors import DimensionMismatch, NonHermitianInput, NotAState
from app.services.numerics import (
    add,
    adjoint,
    hermitian_eigenvalues,
    matrix_product,
    scale,
    trace,
    von_neumann_entropy,
)


def _random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def _random_unitary(rng, dim):
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q


@pytest.mark.parametrize("m,expected", [
    (np.eye(2), (1.0, 1.0)),
    (np.diag([0.3, 0.7]), (0.7, 0.3)),
    (np.full((2, 2), 0.5), (1.0, 0.0)),
])
def test_hermitian_eigenvalues_examples(m, expected):
    spectrum = hermitian_eigenvalues(m)
    assert np.allclose(spectrum.eigenvalues, expected, atol=1e-12), f"{spectrum.eigenvalues} != {expected}"
    assert spectrum.max >= spectrum.min


def test_hermitian_eigenvalues_rejects_bad_input():
    with pytest.raises(NonHermitianInput):
        hermitian_eigenvalues([[0, 1], [0, 0]])
    with pytest.raises(DimensionMismatch):
        hermitian_eigenvalues(np.zeros((2, 3)))


@pytest.mark.parametrize("dim", [2, 8, 64])
def test_trace_powers_match_eigenvalues(dim):
    m = _random_hermitian(np.random.default_rng(dim), dim)
    lam = np.array(hermitian_eigenvalues(m).eigenvalues)
    assert np.all(np.diff(lam) <= 0), "eigenvalues must be descending"
    for k in (1, 2, 3):
        expected = np.trace(np.linalg.matrix_power(m, k)).real
        assert abs(np.sum(lam ** k) - expected) < 1e-9 * max(1.0, abs(expected)), f"k={k}"


@pytest.mark.parametrize("m,expected", [
    (np.diag([1.0, 0.0]), 0.0),
    (np.diag([0.5, 0.5]), 1.0),
    (np.eye(4) / 4, 2.0),
])
def test_von_neumann_entropy_examples(m, expected):
    assert abs(von_neumann_entropy(m) - expected) < 1e-12


@pytest.mark.parametrize("m", [np.diag([0.6, 0.6]), np.diag([1.2, -0.2])])
def test_von_neumann_entropy_rejects_non_states(m):
    with pytest.raises(NotAState):
        von_neumann_entropy(m)


def test_entropy_unitary_invariance():
    rng = np.random.default_rng(7)
    for _ in range(10):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        u = _random_unitary(rng, 4)
        assert abs(von_neumann_entropy(rho) - von_neumann_entropy(u @ rho @ u.conj().T)) < 1e-9


def test_standard_algebra():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))

    assert trace(np.eye(4)) == 4
    assert np.array_equal(adjoint(adjoint(a)), a)
    assert abs(trace(matrix_product(a, b)) - trace(matrix_product(b, a))) < 1e-12
    assert np.allclose(add(a, scale(a, -1)), 0)


@pytest.mark.parametrize("op,args", [
    (matrix_product, (np.zeros((2, 3)), np.zeros((2, 3)))),
    (add, (np.zeros((2, 2)), np.zeros((4, 4)))),
    (trace, (np.zeros((2, 3)),)),
])
def test_dimension_mismatch(op, args):
    with pytest.raises(DimensionMismatch):
        op(*args)
