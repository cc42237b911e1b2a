"""
services/fock.py

n-mode fermionic Fock space in the occupation basis.

Ladder operators are built Jordan-Wigner style on the 2^n space:
    b_k = Z ⊗ … ⊗ Z ⊗ σ⁻ ⊗ 1 ⊗ … ⊗ 1      (k−1 parity factors)
with mode 1 as the leftmost (most significant) factor. All entries are 0/±1,
so the CAR hold exactly. With this choice the canonical state
(b_1†)^{n_1}···(b_n†)^{n_n}|0⟩ is exactly the basis vector at index
int(n_1…n_n, 2) with sign +1.
"""

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import MalformedOperatorString, ModeCountMismatch, TooManyModes
from app.core.logger import get_logger
from app.models.domain import OccupationState, OperatorString, all_occupations
from app.services.numerics import ComplexMatrix

logger = get_logger(__name__)

_SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=np.complex128)   # |1⟩ → |0⟩
_PARITY = np.diag([1, -1]).astype(np.complex128)
_ID2 = np.eye(2, dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class LadderOperatorSet:
    n_modes: int
    annihilators: tuple[ComplexMatrix, ...]
    creators: tuple[ComplexMatrix, ...]

    @property
    def dim(self) -> int:
        return 2 ** self.n_modes

    def _check(self, mode: int) -> int:
        if not 1 <= mode <= self.n_modes:
            raise MalformedOperatorString(f"mode {mode} outside 1..{self.n_modes}")
        return mode - 1

    def b(self, mode: int) -> ComplexMatrix:
        return self.annihilators[self._check(mode)]

    def bdag(self, mode: int) -> ComplexMatrix:
        return self.creators[self._check(mode)]

    def number(self, mode: int) -> ComplexMatrix:
        return self.bdag(mode) @ self.b(mode)

    @property
    def identity(self) -> ComplexMatrix:
        return np.eye(self.dim, dtype=np.complex128)

    @property
    def vacuum(self) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.complex128)
        vec[0] = 1.0
        return vec

    @property
    def vacuum_projector(self) -> ComplexMatrix:
        proj = np.zeros((self.dim, self.dim), dtype=np.complex128)
        proj[0, 0] = 1.0
        return proj


def _jordan_wigner(mode: int, n_modes: int) -> ComplexMatrix:
    factors = [_PARITY] * (mode - 1) + [_SIGMA_MINUS] + [_ID2] * (n_modes - mode)
    return reduce(np.kron, factors)


def _frozen(m: ComplexMatrix) -> ComplexMatrix:
    m.setflags(write=False)
    return m


@lru_cache(maxsize=16)
def build_ladder_operators(n_modes: int) -> LadderOperatorSet:
    if n_modes < 1:
        raise ModeCountMismatch(f"need at least one mode, got {n_modes}")
    if n_modes > settings.MAX_MODES:
        raise TooManyModes(f"{n_modes} modes exceeds the cap of {settings.MAX_MODES}")

    annihilators = tuple(_frozen(_jordan_wigner(k, n_modes)) for k in range(1, n_modes + 1))
    creators = tuple(_frozen(b.conj().T.copy()) for b in annihilators)
    logger.debug(f"Built ladder operators | n_modes={n_modes} dim={2 ** n_modes}")
    return LadderOperatorSet(n_modes=n_modes, annihilators=annihilators, creators=creators)


# ─────────────────────────────────────────────────────────────────────────────
# CAR checks
# ─────────────────────────────────────────────────────────────────────────────

def anticommutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return a @ b + b @ a


def anticommutator_residuals(ops: LadderOperatorSet) -> list[tuple[str, int, int, float]]:
    """Every distinct CAR identity with its max entrywise residual.

    {b_m, b_n†} for all (m, n); {b_m, b_n} and {b_m†, b_n†} for m ≤ n.
    """
    eye = ops.identity
    zero = np.zeros_like(eye)
    modes = range(1, ops.n_modes + 1)
    out: list[tuple[str, int, int, float]] = []
    for m in modes:
        for n in modes:
            target = eye if m == n else zero
            res = np.max(np.abs(anticommutator(ops.b(m), ops.bdag(n)) - target))
            out.append(("b,b†", m, n, float(res)))
    for m in modes:
        for n in modes:
            if n < m:
                continue
            out.append(("b,b", m, n, float(np.max(np.abs(anticommutator(ops.b(m), ops.b(n)))))))
            out.append(("b†,b†", m, n, float(np.max(np.abs(anticommutator(ops.bdag(m), ops.bdag(n)))))))
    return out


def car_residual(ops: LadderOperatorSet) -> float:
    return max(r for *_, r in anticommutator_residuals(ops))


def number_operator(ops: LadderOperatorSet) -> ComplexMatrix:
    return sum((ops.number(k) for k in range(1, ops.n_modes + 1)), np.zeros((ops.dim, ops.dim), dtype=np.complex128))


# ─────────────────────────────────────────────────────────────────────────────
# States built from creator strings
# ─────────────────────────────────────────────────────────────────────────────

def basis_state(occ: OccupationState, ops: LadderOperatorSet) -> np.ndarray:
    if occ.n_modes != ops.n_modes:
        raise ModeCountMismatch(f"occupation has {occ.n_modes} modes, operators {ops.n_modes}")
    return ket([k for k in range(1, occ.n_modes + 1) if occ.occupied(k)], ops)


def ket(modes: Sequence[int], ops: LadderOperatorSet) -> np.ndarray:
    """b†_{m1} b†_{m2} … b†_{mk} |0⟩ in the given order."""
    vec = ops.vacuum
    for m in reversed(modes):
        vec = ops.bdag(m) @ vec
    return vec


def bra(modes: Sequence[int], ops: LadderOperatorSet) -> np.ndarray:
    """⟨0| b_{m1} b_{m2} … b_{mk} as the row's components.

    So bra([n, m]) is ⟨1_n‖⟨1_m‖ = (b_m† b_n† |0⟩)†.
    """
    row = ops.vacuum
    for m in modes:
        row = row @ ops.b(m)
    return row


def operator_string_to_matrix(s: OperatorString, ops: LadderOperatorSet) -> ComplexMatrix:
    projectors = sum(1 for f in s.factors if f.kind == "vacuum")
    if projectors > 1:
        raise MalformedOperatorString(f"{projectors} vacuum projectors in one string")

    result = ops.identity
    for f in s.factors:
        if f.kind == "vacuum":
            result = result @ ops.vacuum_projector
        elif f.kind == "creator":
            result = result @ ops.bdag(f.mode)
        else:
            result = result @ ops.b(f.mode)
    return result


def mode_permutation_unitary(perm: Sequence[int], ops: LadderOperatorSet) -> ComplexMatrix:
    """U with U b_k U† = b_{perm[k-1]}; carries the reordering sign of each basis vector."""
    if sorted(perm) != list(range(1, ops.n_modes + 1)):
        raise ModeCountMismatch(f"{list(perm)} is not a permutation of 1..{ops.n_modes}")
    u = np.zeros((ops.dim, ops.dim), dtype=np.complex128)
    for occ in all_occupations(ops.n_modes):
        images = [perm[k - 1] for k in range(1, ops.n_modes + 1) if occ.occupied(k)]
        u[:, occ.index] = ket(images, ops)
    return u
