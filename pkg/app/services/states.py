"""
services/states.py

Density operators on the Fock space, the general two- and three-mode
families, superselection (SSR) checks and seeded random states.

Matrices are indexed in the occupation order of services/fock.py. For two
modes that is {‖0⟩, ‖1_κ′⟩, ‖1_κ⟩, ‖1_κ⟩‖1_κ′⟩}, i.e. exactly the layout of
the familiar 4×4 array with first row (α1, β1, β2, β3).
"""

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import (
    BadWeights,
    DimensionMismatch,
    ModeCountMismatch,
    NotAState,
    NotNormalized,
    NotPositive,
    SsrViolation,
)
from app.core.logger import get_logger
from app.models.domain import ChargePattern, all_occupations
from app.services.fock import build_ladder_operators, mode_permutation_unitary
from app.services.numerics import (
    ComplexMatrix,
    Spectrum,
    add,
    as_matrix,
    hermitian_eigenvalues,
    hermiticity_error,
    scale,
)

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    n_modes: int
    matrix: ComplexMatrix

    @classmethod
    def from_matrix(
        cls,
        matrix,
        n_modes: Optional[int] = None,
        tol: Optional[float] = None,
        psd_tol: Optional[float] = None,
    ) -> "DensityOperator":
        """Validate and freeze. Symmetrizes (ρ+ρ†)/2 before the trace/PSD checks."""
        tol = settings.EXACT_TOL if tol is None else tol
        psd_tol = settings.PSD_TOL if psd_tol is None else psd_tol

        arr = as_matrix(matrix)
        dim = arr.shape[0]
        if arr.shape[1] != dim or dim & (dim - 1):
            raise DimensionMismatch(f"density matrix must be 2^n square, got {arr.shape}")
        modes = dim.bit_length() - 1
        if n_modes is not None and n_modes != modes:
            raise ModeCountMismatch(f"{dim}x{dim} matrix cannot describe {n_modes} modes")

        err = hermiticity_error(arr)
        if err > tol:
            raise NotAState(f"matrix is not Hermitian (max |ρ-ρ†| = {err:.3e})")
        arr = (arr + arr.conj().T) / 2

        tr = float(np.real(np.trace(arr)))
        if abs(tr - 1.0) > tol:
            raise NotNormalized(f"trace is {tr:.15g}, expected 1")

        lowest = float(np.linalg.eigvalsh(arr)[0])
        if lowest < -psd_tol:
            raise NotPositive(f"smallest eigenvalue {lowest:.3e} below -{psd_tol:.0e}")

        arr.setflags(write=False)
        return cls(n_modes=modes, matrix=arr)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def spectrum(self, tol: Optional[float] = None) -> Spectrum:
        return hermitian_eigenvalues(self.matrix, tol)

    def is_pure(self, tol: Optional[float] = None) -> bool:
        tol = settings.EIGEN_TOL if tol is None else tol
        return abs(self.spectrum().max - 1.0) <= tol


# ─────────────────────────────────────────────────────────────────────────────
# Constructors
# ─────────────────────────────────────────────────────────────────────────────

def from_pure(vector, tol: Optional[float] = None) -> DensityOperator:
    tol = settings.EXACT_TOL if tol is None else tol
    vec = np.asarray(vector, dtype=np.complex128).reshape(-1)
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > tol:
        raise NotNormalized(f"state vector has norm {norm:.15g}")
    return DensityOperator.from_matrix(np.outer(vec, vec.conj()))


def mix(states: Sequence[DensityOperator], weights: Sequence[float]) -> DensityOperator:
    if not states or len(states) != len(weights):
        raise BadWeights(f"{len(states)} states but {len(weights)} weights")
    if any(w < 0 for w in weights):
        raise BadWeights(f"negative weight in {list(weights)}")
    if abs(sum(weights) - 1.0) > settings.EXACT_TOL:
        raise BadWeights(f"weights sum to {sum(weights)!r}, expected 1")
    dims = {s.dim for s in states}
    if len(dims) != 1:
        raise DimensionMismatch(f"cannot mix states of dimensions {sorted(dims)}")

    total = scale(states[0].matrix, weights[0])
    for state, w in zip(states[1:], weights[1:]):
        total = add(total, scale(state.matrix, w))
    return DensityOperator.from_matrix(total)


_TWO_MODE_BETA = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_THREE_MODE_NU = ((1, 2), (1, 4), (2, 4), (3, 5), (3, 6), (5, 6))


def _assemble(diagonal: Sequence[float], positions, values) -> ComplexMatrix:
    m = np.diag(np.asarray(diagonal, dtype=np.complex128))
    for (i, j), v in zip(positions, values):
        m[i, j] = v
        m[j, i] = np.conj(v)
    return m


def _extract(m, positions) -> tuple[complex, ...]:
    return tuple(complex(m[i, j]) for i, j in positions)


@dataclass(frozen=True)
class TwoModeCoefficients:
    """α1…α4 on the diagonal, β1…β6 on the upper triangle (row-major)."""

    alpha: tuple[float, float, float, float]
    beta: tuple[complex, complex, complex, complex, complex, complex] = (0j,) * 6

    def __post_init__(self):
        if len(self.alpha) != 4 or len(self.beta) != 6:
            raise DimensionMismatch("two-mode state needs 4 alpha and 6 beta coefficients")

    @classmethod
    def from_matrix(cls, m) -> "TwoModeCoefficients":
        m = as_matrix(m)
        if m.shape != (4, 4):
            raise DimensionMismatch(f"two-mode matrix must be 4x4, got {m.shape}")
        return cls(
            alpha=tuple(float(np.real(m[i, i])) for i in range(4)),
            beta=_extract(m, _TWO_MODE_BETA),
        )

    def matrix(self) -> ComplexMatrix:
        return _assemble(self.alpha, _TWO_MODE_BETA, self.beta)


@dataclass(frozen=True)
class ThreeModeCoefficients:
    """μ1…μ8 on the diagonal, ν1…ν6 on the equal-charge off-diagonal positions."""

    mu: tuple[float, ...]
    nu: tuple[complex, ...] = (0j,) * 6

    def __post_init__(self):
        if len(self.mu) != 8 or len(self.nu) != 6:
            raise DimensionMismatch("three-mode state needs 8 mu and 6 nu coefficients")

    @classmethod
    def from_matrix(cls, m, tol: Optional[float] = None) -> "ThreeModeCoefficients":
        tol = settings.EXACT_TOL if tol is None else tol
        m = as_matrix(m)
        if m.shape != (8, 8):
            raise DimensionMismatch(f"three-mode matrix must be 8x8, got {m.shape}")
        coeffs = cls(
            mu=tuple(float(np.real(m[i, i])) for i in range(8)),
            nu=_extract(m, _THREE_MODE_NU),
        )
        stray = np.max(np.abs(m - coeffs.matrix()))
        if stray > tol:
            raise SsrViolation(f"entry of size {stray:.3e} outside the equal-charge pattern")
        return coeffs

    def matrix(self) -> ComplexMatrix:
        return _assemble(self.mu, _THREE_MODE_NU, self.nu)


def _normalized_family(diagonal: Sequence[float], m: ComplexMatrix) -> DensityOperator:
    total = float(sum(diagonal))
    if abs(total - 1.0) > settings.EXACT_TOL:
        raise NotNormalized(f"diagonal coefficients sum to {total!r}")
    return DensityOperator.from_matrix(m)


def general_two_mode(c: TwoModeCoefficients) -> DensityOperator:
    return _normalized_family(c.alpha, c.matrix())


def general_three_mode(c: ThreeModeCoefficients) -> DensityOperator:
    return _normalized_family(c.mu, c.matrix())


# ─────────────────────────────────────────────────────────────────────────────
# Superselection
# ─────────────────────────────────────────────────────────────────────────────

def charge_sectors(charges: ChargePattern) -> dict[int, list[int]]:
    """charge → basis indices carrying it, in index order."""
    sectors: dict[int, list[int]] = defaultdict(list)
    for occ in all_occupations(charges.n_modes):
        sectors[charges.charge_of(occ)].append(occ.index)
    return dict(sectors)


def charge_vector(charges: ChargePattern) -> np.ndarray:
    return np.array([charges.charge_of(o) for o in all_occupations(charges.n_modes)])


def check_ssr(rho: DensityOperator, charges: ChargePattern, tol: Optional[float] = None) -> bool:
    """No coherence between occupation states of different total charge."""
    tol = settings.EXACT_TOL if tol is None else tol
    if charges.n_modes != rho.n_modes:
        raise ModeCountMismatch(f"{charges.n_modes} charges for {rho.n_modes} modes")
    q = charge_vector(charges)
    crossing = q[:, None] != q[None, :]
    return bool(np.all(np.abs(rho.matrix[crossing]) <= tol))


# ─────────────────────────────────────────────────────────────────────────────
# Random states and relabeling
# ─────────────────────────────────────────────────────────────────────────────

def random_state(
    n_modes: int,
    rank: int,
    seed: Optional[int] = None,
    ssr: Optional[ChargePattern] = None,
) -> DensityOperator:
    """Ginibre draw of the given rank; with ssr, each column lives in one charge sector."""
    dim = 2 ** n_modes
    if not 1 <= rank <= dim:
        raise DimensionMismatch(f"rank {rank} outside 1..{dim}")
    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))

    if ssr is not None:
        if ssr.n_modes != n_modes:
            raise ModeCountMismatch(f"{ssr.n_modes} charges for {n_modes} modes")
        sectors = list(charge_sectors(ssr).values())
        sizes = np.array([len(s) for s in sectors], dtype=float)
        picks = rng.choice(len(sectors), size=rank, p=sizes / sizes.sum())
        mask = np.zeros((dim, rank), dtype=bool)
        for col, sector in enumerate(picks):
            mask[sectors[sector], col] = True
        g = np.where(mask, g, 0)

    rho = g @ g.conj().T
    return DensityOperator.from_matrix(rho / np.trace(rho).real)


def relabel_modes(rho: DensityOperator, perm: Sequence[int]) -> DensityOperator:
    """State after renaming mode k to perm[k-1]."""
    u = mode_permutation_unitary(perm, build_ladder_operators(rho.n_modes))
    return DensityOperator.from_matrix(u @ rho.matrix @ u.conj().T)
