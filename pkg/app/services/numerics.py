"""
services/numerics.py

Dense complex linear algebra shared by every other service.
Matrices are plain numpy arrays; the helpers here add the dimension and
Hermiticity checks the rest of the package relies on.
Entropies are in bits.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt

from app.core.config import settings
from app.core.errors import DimensionMismatch, NonHermitianInput, NotAState

ComplexMatrix = npt.NDArray[np.complex128]


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: tuple[float, ...]   # descending
    tolerance: float

    @property
    def min(self) -> float:
        return self.eigenvalues[-1]

    @property
    def max(self) -> float:
        return self.eigenvalues[0]


def as_matrix(m) -> ComplexMatrix:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionMismatch(f"expected a nonempty 2-D matrix, got shape {arr.shape}")
    return arr


def _square(m) -> ComplexMatrix:
    arr = as_matrix(m)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {arr.shape}")
    return arr


def hermiticity_error(m) -> float:
    arr = _square(m)
    return float(np.max(np.abs(arr - arr.conj().T)))


# ─────────────────────────────────────────────────────────────────────────────
# Standard algebra
# ─────────────────────────────────────────────────────────────────────────────

def matrix_product(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(m) -> ComplexMatrix:
    return as_matrix(m).conj().T


def trace(m) -> complex:
    return complex(np.trace(_square(m)))


def add(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot add {a.shape} and {b.shape}")
    return a + b


def scale(m, factor: complex) -> ComplexMatrix:
    return complex(factor) * as_matrix(m)


# ─────────────────────────────────────────────────────────────────────────────
# Spectra
# ─────────────────────────────────────────────────────────────────────────────

def hermitian_eigenvalues(m, tol: Optional[float] = None) -> Spectrum:
    """Real eigenvalues of a Hermitian matrix, largest first."""
    tol = settings.EIGEN_TOL if tol is None else tol
    arr = _square(m)
    err = hermiticity_error(arr)
    if err > tol:
        raise NonHermitianInput(f"max |m - m†| = {err:.3e} exceeds {tol:.1e}")
    values = np.linalg.eigvalsh((arr + arr.conj().T) / 2)[::-1]
    return Spectrum(eigenvalues=tuple(float(v) for v in values), tolerance=tol)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def entropy_of_spectrum(eigenvalues, tol: float) -> float:
    lam = np.asarray([v for v in eigenvalues if v > tol], dtype=float)
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def von_neumann_entropy(m, tol: Optional[float] = None) -> float:
    tol = settings.EIGEN_TOL if tol is None else tol
    spectrum = hermitian_eigenvalues(m, tol)
    total = sum(spectrum.eigenvalues)
    if abs(total - 1.0) > max(tol, 10 * settings.EXACT_TOL * len(spectrum.eigenvalues)):
        raise NotAState(f"trace {total:.12g} is not 1")
    if spectrum.min < -tol:
        raise NotAState(f"negative eigenvalue {spectrum.min:.3e}")
    return entropy_of_spectrum(spectrum.eigenvalues, tol)
