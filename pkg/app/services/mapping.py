"""
services/mapping.py

Sign mappings π between the Fock matrix representation and a qubit
tensor-product representation, and the search for mappings that commute
with partial tracing.

A mapping is a SignAssignment s: π(ρ) = D ρ D with D = diag(s). It is
consistent for a partition when the plain tensor-factor trace of π(ρ)
equals π'(fermionic trace of ρ) for some reduced sign assignment π'.
For a sparsity pattern that question is structural: every global element
(R, C) feeding reduced element (r, c) must satisfy

    s(R)·s(C)·f(R, C) = s'(r)·s'(c)

with f the inside-out sign. Over GF(2) these are linear equations, which
is what the obstruction reports.
"""

from collections import defaultdict
from dataclasses import dataclass
from multiprocessing import Pool
from typing import NamedTuple, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import DimensionMismatch, ModeCountMismatch, NoMappingWitness, SearchTooLarge
from app.core.logger import get_logger
from app.models.domain import ChargePattern, ModePartition, SignAssignment, single_mode_traces
from app.models.response import MappingVerdict, SignEquation
from app.services.numerics import ComplexMatrix
from app.services.partial_trace import inside_out_partial_trace, inside_out_signs, naive_partial_trace
from app.services.states import DensityOperator, charge_vector

logger = get_logger(__name__)


# ─────────────────────────────────────────────────────────────────────────────
# Sparsity patterns
# ─────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SparsityPattern:
    """Off-diagonal entries (row < col) allowed to be nonzero. The diagonal is always allowed."""

    n_modes: int
    entries: frozenset[tuple[int, int]]

    def __post_init__(self):
        dim = 2 ** self.n_modes
        for r, c in self.entries:
            if not 0 <= r < c < dim:
                raise DimensionMismatch(f"entry ({r}, {c}) is not an upper off-diagonal position of a {dim}x{dim} matrix")

    def allows(self, row: int, col: int) -> bool:
        return row == col or (min(row, col), max(row, col)) in self.entries


def full_pattern(n_modes: int) -> SparsityPattern:
    dim = 2 ** n_modes
    return SparsityPattern(n_modes, frozenset((r, c) for r in range(dim) for c in range(r + 1, dim)))


def two_mode_free_pattern() -> SparsityPattern:
    return full_pattern(2)


def ssr_pattern(charges: ChargePattern) -> SparsityPattern:
    """Coherences only between occupations of equal total charge."""
    q = charge_vector(charges)
    dim = q.size
    return SparsityPattern(
        charges.n_modes,
        frozenset((r, c) for r in range(dim) for c in range(r + 1, dim) if q[r] == q[c]),
    )


def pattern_of(rho: DensityOperator, tol: Optional[float] = None) -> SparsityPattern:
    tol = settings.EXACT_TOL if tol is None else tol
    rows, cols = np.nonzero(np.abs(np.triu(rho.matrix, k=1)) > tol)
    return SparsityPattern(rho.n_modes, frozenset(zip(rows.tolist(), cols.tolist())))


# ─────────────────────────────────────────────────────────────────────────────
# Applying a mapping
# ─────────────────────────────────────────────────────────────────────────────

def _sign_vector(s: SignAssignment, dim: int) -> np.ndarray:
    if len(s.signs) != dim:
        raise DimensionMismatch(f"{len(s.signs)} signs for a {dim}-dimensional space")
    return np.asarray(s.signs, dtype=float)


def conjugate_by_signs(m: ComplexMatrix, s: SignAssignment) -> ComplexMatrix:
    d = _sign_vector(s, m.shape[0])
    return m * np.outer(d, d)


def apply_mapping(rho: DensityOperator, s: SignAssignment) -> ComplexMatrix:
    """π(ρ) = D ρ D; unitary, so trace and spectrum survive."""
    return conjugate_by_signs(rho.matrix, s)


# ─────────────────────────────────────────────────────────────────────────────
# Structural contribution table
# ─────────────────────────────────────────────────────────────────────────────

class Contribution(NamedTuple):
    row: int
    col: int
    sign: int


def _reduced_index(index: int, n_modes: int, modes: Sequence[int]) -> int:
    out = 0
    for m in modes:
        out = (out << 1) | ((index >> (n_modes - m)) & 1)
    return out


def coefficient_flow(n_modes: int, p: ModePartition) -> dict[tuple[int, int], list[Contribution]]:
    """Reduced element (r, c) → global elements feeding it with their inside-out sign."""
    if n_modes > settings.SEARCH_MAX_MODES:
        raise SearchTooLarge(f"{n_modes} modes exceeds the structural search cap of {settings.SEARCH_MAX_MODES}")
    if p.n_modes != n_modes:
        raise ModeCountMismatch(f"partition over {p.n_modes} modes, asked for {n_modes}")

    dim = 2 ** n_modes
    signs = inside_out_signs(n_modes, p.kept)
    kept_of = [_reduced_index(i, n_modes, p.kept) for i in range(dim)]
    traced_of = [_reduced_index(i, n_modes, p.traced) for i in range(dim)]

    table: dict[tuple[int, int], list[Contribution]] = defaultdict(list)
    for row in range(dim):
        for col in range(dim):
            if traced_of[row] == traced_of[col]:
                table[(kept_of[row], kept_of[col])].append(
                    Contribution(row, col, int(signs[row] * signs[col]))
                )
    return dict(table)


def sign_equations(
    n_modes: int,
    pattern: SparsityPattern,
    partitions: Optional[Sequence[ModePartition]] = None,
) -> list[SignEquation]:
    """One GF(2) equation per allowed off-diagonal contribution (upper triangle only)."""
    partitions = single_mode_traces(n_modes) if partitions is None else partitions
    equations = []
    for p in partitions:
        for (r, c), contributions in sorted(coefficient_flow(n_modes, p).items()):
            if r >= c:
                continue
            for row, col, sign in contributions:
                if pattern.allows(row, col):
                    equations.append(SignEquation(
                        partition=p.label, row=row, col=col,
                        reduced_row=r, reduced_col=c, parity=0 if sign > 0 else 1,
                    ))
    return equations


def _variables(eq: SignEquation) -> list[tuple]:
    # the vacuum signs are pinned, so they carry no variable
    out = [("x", i) for i in (eq.row, eq.col) if i]
    out += [("y", eq.partition, i) for i in (eq.reduced_row, eq.reduced_col) if i]
    return out


def equations_consistent(equations: Sequence[SignEquation]) -> bool:
    """Gaussian elimination over GF(2) with rows packed into Python ints."""
    index: dict[tuple, int] = {}
    pivots: dict[int, tuple[int, int]] = {}
    for eq in equations:
        mask = 0
        for var in _variables(eq):
            mask ^= 1 << index.setdefault(var, len(index))
        rhs = eq.parity
        while mask:
            top = mask.bit_length() - 1
            if top not in pivots:
                pivots[top] = (mask, rhs)
                break
            pivot_mask, pivot_rhs = pivots[top]
            mask ^= pivot_mask
            rhs ^= pivot_rhs
        else:
            if rhs:
                return False
    return True


def minimal_obstruction(equations: Sequence[SignEquation]) -> list[SignEquation]:
    """Deletion filter: an inconsistent subset from which no equation can be dropped."""
    core = list(equations)
    if equations_consistent(core):
        return []
    i = 0
    while i < len(core):
        trial = core[:i] + core[i + 1:]
        if not equations_consistent(trial):
            core = trial
        else:
            i += 1
    return core


# ─────────────────────────────────────────────────────────────────────────────
# Exhaustive search
# ─────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class _PartitionCheck:
    """Per reduced edge: the global contributions (rows, cols, signs), plus a spanning forest."""

    edges: tuple[tuple[int, int, np.ndarray, np.ndarray, np.ndarray], ...]
    tree: tuple[tuple[int, int, int], ...]        # (child, parent, edge index) in BFS order
    closing: tuple[int, ...]                      # edge indices not in the forest


def _compile(n_modes: int, pattern: SparsityPattern, p: ModePartition) -> _PartitionCheck:
    edges = []
    for (r, c), contributions in sorted(coefficient_flow(n_modes, p).items()):
        if r >= c:
            continue
        allowed = [x for x in contributions if pattern.allows(x.row, x.col)]
        if allowed:
            edges.append((
                r, c,
                np.array([x.row for x in allowed]),
                np.array([x.col for x in allowed]),
                np.array([x.sign for x in allowed]),
            ))

    adjacency: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for k, (r, c, *_) in enumerate(edges):
        adjacency[r].append((c, k))
        adjacency[c].append((r, k))

    seen: set[int] = set()
    tree: list[tuple[int, int, int]] = []
    used: set[int] = set()
    for root in sorted(adjacency):
        if root in seen:
            continue
        seen.add(root)
        queue = [root]
        while queue:
            node = queue.pop(0)
            for nxt, k in adjacency[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    tree.append((nxt, node, k))
                    used.add(k)
                    queue.append(nxt)
    closing = tuple(k for k in range(len(edges)) if k not in used)
    return _PartitionCheck(edges=tuple(edges), tree=tuple(tree), closing=closing)


def _sign_table(codes: np.ndarray, dim: int) -> np.ndarray:
    """(len(codes), dim) array of ±1, column 0 (vacuum) always +1."""
    shifts = np.arange(dim - 1)
    flips = (codes[:, None] >> shifts[None, :]) & 1
    return np.hstack([np.ones((codes.size, 1), dtype=int), 1 - 2 * flips])


def _passes(signs: np.ndarray, check: _PartitionCheck) -> np.ndarray:
    ok = np.ones(signs.shape[0], dtype=bool)
    labels = []
    for _, _, rows, cols, f in check.edges:
        t = signs[:, rows] * signs[:, cols] * f[None, :]
        ok &= np.all(t == t[:, :1], axis=1)
        labels.append(t[:, 0])

    # reduced signs along the forest, then every closing edge must agree
    potential: dict[int, np.ndarray] = {}
    for child, parent, k in check.tree:
        base = potential.get(parent, np.ones(signs.shape[0], dtype=int))
        potential[child] = base * labels[k]
    for k in check.closing:
        r, c = check.edges[k][0], check.edges[k][1]
        pr = potential.get(r, np.ones(signs.shape[0], dtype=int))
        pc = potential.get(c, np.ones(signs.shape[0], dtype=int))
        ok &= pr * pc == labels[k]
    return ok


def _scan(n_modes: int, checks: tuple[_PartitionCheck, ...], start: int, stop: int) -> list[int]:
    codes = np.arange(start, stop)
    signs = _sign_table(codes, 2 ** n_modes)
    ok = np.ones(codes.size, dtype=bool)
    for check in checks:
        ok &= _passes(signs, check)
    return codes[ok].tolist()


def consistent_mapping_search(
    n_modes: int,
    pattern: SparsityPattern,
    partitions: Optional[Sequence[ModePartition]] = None,
    jobs: Optional[int] = None,
) -> MappingVerdict:
    """Every sign assignment whose qubit picture commutes with all listed partial traces."""
    if n_modes > settings.SEARCH_MAX_MODES:
        raise SearchTooLarge(f"{n_modes} modes: 2^{2 ** n_modes - 1} assignments exceeds the cap")
    if pattern.n_modes != n_modes:
        raise ModeCountMismatch(f"pattern over {pattern.n_modes} modes, asked for {n_modes}")
    partitions = single_mode_traces(n_modes) if partitions is None else list(partitions)
    jobs = settings.JOBS if jobs is None else jobs

    checks = tuple(_compile(n_modes, pattern, p) for p in partitions)
    total = 2 ** (2 ** n_modes - 1)
    logger.debug(f"Mapping search | n_modes={n_modes} assignments={total} partitions={len(partitions)} jobs={jobs}")

    if jobs > 1:
        step = -(-total // jobs)
        chunks = [(n_modes, checks, lo, min(lo + step, total)) for lo in range(0, total, step)]
        with Pool(jobs) as pool:
            codes = [c for part in pool.starmap(_scan, chunks) for c in part]
    else:
        codes = _scan(n_modes, checks, 0, total)

    witnesses = [SignAssignment.from_code(c, n_modes) for c in codes]
    obstruction = [] if witnesses else minimal_obstruction(sign_equations(n_modes, pattern, partitions))
    verdict = MappingVerdict(
        n_modes=n_modes,
        exists=bool(witnesses),
        witnesses=witnesses,
        obstruction=obstruction,
        partitions=[p.label for p in partitions],
        support=sorted(pattern.entries),
        assignments_checked=total,
    )
    logger.info(f"Mapping search done | n_modes={n_modes} exists={verdict.exists} witnesses={len(witnesses)} obstruction={len(obstruction)}")
    return verdict


# ─────────────────────────────────────────────────────────────────────────────
# Numeric diagram check
# ─────────────────────────────────────────────────────────────────────────────

def verify_diagram(
    rho: DensityOperator,
    s: SignAssignment,
    p: ModePartition,
    reduced: Optional[SignAssignment] = None,
) -> float:
    """max |Tr_B^naive(π(ρ)) − π'(Tr_B(ρ))|; with reduced=None, the best π' is used."""
    if s.n_modes != rho.n_modes:
        raise DimensionMismatch(f"{s.n_modes}-mode signs for a {rho.n_modes}-mode state")
    qubit_side = naive_partial_trace(apply_mapping(rho, s), rho.n_modes, p.kept)
    fermion_side = inside_out_partial_trace(rho, p).matrix

    k = len(p.kept)
    if reduced is not None:
        return float(np.max(np.abs(qubit_side - conjugate_by_signs(fermion_side, reduced))))
    return min(
        float(np.max(np.abs(qubit_side - conjugate_by_signs(fermion_side, SignAssignment.from_code(code, k)))))
        for code in range(2 ** (2 ** k - 1))
    )


# ─────────────────────────────────────────────────────────────────────────────
# Qubit images
# ─────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class QubitImage:
    """π(ρ) for a witnessed mapping; the only input the qubit measures accept."""

    matrix: ComplexMatrix
    dims: tuple[int, ...]
    witness: SignAssignment


def map_to_qubits(
    rho: DensityOperator,
    verdict: MappingVerdict,
    witness: Optional[SignAssignment] = None,
) -> QubitImage:
    if not verdict.exists:
        raise NoMappingWitness("no sign mapping commutes with the partial traces for this pattern")
    if verdict.n_modes != rho.n_modes:
        raise NoMappingWitness(f"verdict covers {verdict.n_modes} modes, state has {rho.n_modes}")
    support = pattern_of(rho)
    allowed = set(verdict.support)
    stray = sorted(e for e in support.entries if e not in allowed)
    if stray:
        raise NoMappingWitness(f"state has coherences {stray[:4]} outside the searched pattern")

    witness = verdict.witnesses[0] if witness is None else witness
    if witness not in verdict.witnesses:
        raise NoMappingWitness(f"sign assignment {witness.signs} is not among the witnesses")
    return QubitImage(
        matrix=apply_mapping(rho, witness),
        dims=(2,) * rho.n_modes,
        witness=witness,
    )
