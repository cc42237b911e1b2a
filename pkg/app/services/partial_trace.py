"""
services/partial_trace.py

Fermionic partial trace over a set of modes.

inside_out_partial_trace
    Moves every traced creator/annihilator next to the vacuum projector
    before deleting it. For a basis vector that costs one sign per
    (traced occupied mode j, kept occupied mode k) pair with j < k: the
    traced creator has to hop over the kept creators standing to its right
    in (b_1†)^{n_1}···(b_n†)^{n_n}. Equivalently: conjugate ρ with those
    signs, reorder to kept-modes-first and contract the traced factor.

oracle_partial_trace
    The defining property instead of a rule: the reduced state is the
    unique matrix reproducing ⟨O⟩_ρ for a complete Hermitian basis of
    kept-mode operators built from ladder strings. Slow, used to certify
    the fast path.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import PartitionMismatch, SingularSystem, TooManyModes
from app.core.logger import get_logger
from app.models.domain import ModePartition
from app.services.fock import LadderOperatorSet, build_ladder_operators
from app.services.numerics import ComplexMatrix, matrix_product, trace
from app.services.states import DensityOperator

logger = get_logger(__name__)


# ─────────────────────────────────────────────────────────────────────────────
# Index bookkeeping
# ─────────────────────────────────────────────────────────────────────────────

def _bits(n_modes: int) -> np.ndarray:
    """(dim, n_modes) occupation table, column k-1 = mode k."""
    idx = np.arange(2 ** n_modes)
    shifts = np.arange(n_modes - 1, -1, -1)
    return (idx[:, None] >> shifts[None, :]) & 1


def _sub_index(bits: np.ndarray, modes: Sequence[int]) -> np.ndarray:
    out = np.zeros(bits.shape[0], dtype=int)
    for m in modes:
        out = (out << 1) | bits[:, m - 1]
    return out


def inside_out_signs(n_modes: int, kept: Sequence[int]) -> np.ndarray:
    """±1 per global basis vector: parity of the hops needed to bring traced creators to the vacuum."""
    bits = _bits(n_modes)
    traced = [m for m in range(1, n_modes + 1) if m not in kept]
    hops = np.zeros(bits.shape[0], dtype=int)
    for j in traced:
        for k in kept:
            if k > j:
                hops += bits[:, j - 1] * bits[:, k - 1]
    return 1 - 2 * (hops % 2)


def kept_first_order(n_modes: int, kept: Sequence[int]) -> np.ndarray:
    """order[new] = old index, new = (kept bits, traced bits) read as one binary number."""
    bits = _bits(n_modes)
    traced = [m for m in range(1, n_modes + 1) if m not in kept]
    new = (_sub_index(bits, kept) << len(traced)) | _sub_index(bits, traced)
    order = np.empty_like(new)
    order[new] = np.arange(new.size)
    return order


def _contract(matrix: ComplexMatrix, n_modes: int, kept: Sequence[int], signs: Optional[np.ndarray]) -> ComplexMatrix:
    if signs is not None:
        matrix = matrix * np.outer(signs, signs)
    order = kept_first_order(n_modes, kept)
    reordered = matrix[np.ix_(order, order)]
    d_kept = 2 ** len(kept)
    d_traced = 2 ** (n_modes - len(kept))
    return np.einsum("ibjb->ij", reordered.reshape(d_kept, d_traced, d_kept, d_traced))


def reduce_matrix(matrix: ComplexMatrix, n_modes: int, kept: Sequence[int]) -> ComplexMatrix:
    """Fermionic partial trace on a raw matrix; kept may be empty (full trace)."""
    kept = sorted(kept)
    return _contract(matrix, n_modes, kept, inside_out_signs(n_modes, kept))


def naive_partial_trace(matrix: ComplexMatrix, n_modes: int, kept: Sequence[int]) -> ComplexMatrix:
    """Plain tensor-factor contraction, as if every mode were a qubit."""
    return _contract(matrix, n_modes, sorted(kept), None)


def _check(rho: DensityOperator, p: ModePartition) -> None:
    if rho.n_modes != p.n_modes:
        raise PartitionMismatch(f"partition over {p.n_modes} modes, state has {rho.n_modes}")


# ─────────────────────────────────────────────────────────────────────────────
# Fast path
# ─────────────────────────────────────────────────────────────────────────────

def inside_out_partial_trace(rho: DensityOperator, p: ModePartition) -> DensityOperator:
    _check(rho, p)
    reduced = reduce_matrix(rho.matrix, rho.n_modes, p.kept)
    logger.debug(f"Inside-out trace | partition={p.label} dim={reduced.shape[0]}")
    return DensityOperator.from_matrix(reduced)


def sequential_trace(rho: DensityOperator, order: Sequence[int]) -> DensityOperator:
    """Trace the listed modes one at a time; labels refer to the original modes."""
    if len(set(order)) != len(order) or any(not 1 <= m <= rho.n_modes for m in order):
        raise PartitionMismatch(f"invalid trace order {list(order)} for {rho.n_modes} modes")

    remaining = list(range(1, rho.n_modes + 1))
    matrix = rho.matrix
    for mode in order:
        local = remaining.index(mode) + 1
        kept_local = [k for k in range(1, len(remaining) + 1) if k != local]
        matrix = reduce_matrix(matrix, len(remaining), kept_local)
        remaining.remove(mode)
    return DensityOperator.from_matrix(matrix)


# ─────────────────────────────────────────────────────────────────────────────
# Consistency-condition oracle
# ─────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class ConsistencyOperatorPair:
    """O_x = P·X + h.c. and O_p = i(P·X − h.c.) with X = b_λ… b†_τ…, P a spectator projector."""

    lam: tuple[int, ...]
    tau: tuple[int, ...]
    spectators: tuple[tuple[int, int], ...]    # (mode, occupation)
    o_x: ComplexMatrix
    o_p: ComplexMatrix


def _spectator_projector(ops: LadderOperatorSet, spectators) -> ComplexMatrix:
    proj = ops.identity
    for mode, occ in spectators:
        n = ops.number(mode)
        proj = proj @ (n if occ else ops.identity - n)
    return proj


def _ladder_string(ops: LadderOperatorSet, lam, tau) -> ComplexMatrix:
    x = ops.identity
    for m in lam:
        x = x @ ops.b(m)
    for m in tau:
        x = x @ ops.bdag(m)
    return x


_ROLES = ("lam", "tau", "occ", "emp")


def consistency_operators(ops: LadderOperatorSet, modes: Sequence[int]) -> list[ComplexMatrix]:
    """Complete Hermitian basis (4^k operators) on the modes listed, embedded via ops.

    Roles per mode: in λ, in τ, spectator occupied, spectator empty. Only the
    (λ, τ) orientation whose smallest mode lies in λ is kept, since the flipped
    one gives the same pair up to sign. No ladder factors → occupation projector.
    """
    out: list[ComplexMatrix] = []
    for roles in product(_ROLES, repeat=len(modes)):
        lam = tuple(m for m, r in zip(modes, roles) if r == "lam")
        tau = tuple(m for m, r in zip(modes, roles) if r == "tau")
        spectators = tuple((m, 1 if r == "occ" else 0) for m, r in zip(modes, roles) if r in ("occ", "emp"))
        proj = _spectator_projector(ops, spectators)
        if not lam and not tau:
            out.append(proj)
            continue
        if not lam or (tau and min(tau) < min(lam)):
            continue
        px = proj @ _ladder_string(ops, lam, tau)
        out.append(px + px.conj().T)
        out.append(1j * (px - px.conj().T))
    return out


def consistency_operator_pairs(ops: LadderOperatorSet, modes: Sequence[int]) -> list[ConsistencyOperatorPair]:
    """The O_x/O_p pairs of consistency_operators, with their labels."""
    pairs = []
    for roles in product(_ROLES, repeat=len(modes)):
        lam = tuple(m for m, r in zip(modes, roles) if r == "lam")
        tau = tuple(m for m, r in zip(modes, roles) if r == "tau")
        if not lam or (tau and min(tau) < min(lam)):
            continue
        spectators = tuple((m, 1 if r == "occ" else 0) for m, r in zip(modes, roles) if r in ("occ", "emp"))
        px = _spectator_projector(ops, spectators) @ _ladder_string(ops, lam, tau)
        pairs.append(ConsistencyOperatorPair(
            lam=lam, tau=tau, spectators=spectators,
            o_x=px + px.conj().T, o_p=1j * (px - px.conj().T),
        ))
    return pairs


@lru_cache(maxsize=64)
def _oracle_system(n_modes: int, kept: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    local_ops = build_ladder_operators(len(kept))
    global_ops = build_ladder_operators(n_modes)
    reduced_basis = consistency_operators(local_ops, range(1, len(kept) + 1))
    embedded = consistency_operators(global_ops, kept)

    a = np.array([o.T.reshape(-1) for o in reduced_basis])
    expected = 4 ** len(kept)
    rank = np.linalg.matrix_rank(a)
    if a.shape != (expected, expected) or rank != expected:
        logger.error(f"Consistency system lost rank | kept={kept} rank={rank}/{expected}")
        raise SingularSystem(f"consistency operators span {rank} of {expected} directions")
    return a, np.array(embedded)


def expectation(op: ComplexMatrix, rho: DensityOperator) -> complex:
    return trace(matrix_product(op, rho.matrix))


def oracle_partial_trace(rho: DensityOperator, p: ModePartition) -> DensityOperator:
    _check(rho, p)
    if rho.n_modes > settings.ORACLE_MAX_MODES:
        raise TooManyModes(f"oracle trace capped at {settings.ORACLE_MAX_MODES} modes, got {rho.n_modes}")
    a, embedded = _oracle_system(rho.n_modes, tuple(p.kept))
    targets = np.real(np.einsum("kij,ji->k", embedded, rho.matrix))
    try:
        solution = np.linalg.solve(a, targets.astype(np.complex128))
    except np.linalg.LinAlgError as e:
        raise SingularSystem(f"consistency system not solvable: {e}") from e
    d = 2 ** len(p.kept)
    return DensityOperator.from_matrix(solution.reshape(d, d))
