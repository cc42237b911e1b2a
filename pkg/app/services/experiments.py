"""
services/experiments.py

The named runs behind both the CLI and the HTTP routes, so every surface
produces the same report for the same input.
"""

import time
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import (
    InputSemanticError,
    ModeCountMismatch,
    OracleMismatch,
    PartitionMismatch,
    TooManyModes,
)
from app.core.logger import get_logger
from app.models.domain import ChargePattern, ModePartition
from app.models.response import (
    CarCheckReport,
    DemoReport,
    EntanglementReport,
    ReducedStateReport,
    complex_rows,
)
from app.services.entanglement import build_report
from app.services.fock import anticommutator_residuals, build_ladder_operators
from app.services.mapping import (
    SparsityPattern,
    consistent_mapping_search,
    ssr_pattern,
    two_mode_free_pattern,
)
from app.services.partial_trace import inside_out_partial_trace, oracle_partial_trace
from app.services.states import DensityOperator
from app.services.textio import StateDocument, assemble, parse_state

logger = get_logger(__name__)

# name → (pattern factory, whether a consistent mapping should exist)
DEMOS: dict[str, tuple] = {
    "two-mode-free": (two_mode_free_pattern, False),
    "two-mode-ssr": (lambda: ssr_pattern(ChargePattern.uniform(2)), True),
    "three-mode-ssr": (lambda: ssr_pattern(ChargePattern.uniform(3)), False),
}


def make_partition(n_modes: int, modes_keep: Optional[Sequence[int]]) -> ModePartition:
    keep = (1,) if not modes_keep else tuple(modes_keep)
    try:
        return ModePartition.keep(n_modes, keep)
    except ValidationError as e:
        raise PartitionMismatch(f"cannot keep modes {list(keep)} of {n_modes}: {e.errors()[0]['msg']}") from e


def load_state(text: str) -> tuple[StateDocument, DensityOperator]:
    doc = parse_state(text)
    return doc, assemble(doc)


# ─────────────────────────────────────────────────────────────────────────────
# Runs
# ─────────────────────────────────────────────────────────────────────────────

def run_car_check(n_modes: int, tol: Optional[float] = None) -> CarCheckReport:
    tol = settings.EXACT_TOL if tol is None else tol
    if n_modes < 1:
        raise ModeCountMismatch(f"need at least one mode, got {n_modes}")
    if n_modes > settings.CAR_CHECK_MAX_MODES:
        raise TooManyModes(f"car-check supports up to {settings.CAR_CHECK_MAX_MODES} modes, got {n_modes}")

    t0 = time.perf_counter()
    residuals = anticommutator_residuals(build_ladder_operators(n_modes))
    worst = max(r for *_, r in residuals)
    report = CarCheckReport(
        n_modes=n_modes,
        identities_checked=len(residuals),
        max_residual=worst,
        tolerance=tol,
        ok=worst <= tol,
    )
    logger.info(f"CAR check | n_modes={n_modes} identities={len(residuals)} residual={worst:.3e} [{int((time.perf_counter() - t0) * 1000)}ms]")
    return report


def run_reduce(text: str, modes_keep: Optional[Sequence[int]], tol: Optional[float] = None) -> ReducedStateReport:
    tol = settings.MATCH_TOL if tol is None else tol
    _, rho = load_state(text)
    p = make_partition(rho.n_modes, modes_keep)
    reduced = inside_out_partial_trace(rho, p)

    notes: list[str] = []
    residual = None
    if rho.n_modes <= settings.ORACLE_MAX_MODES:
        oracle = oracle_partial_trace(rho, p)
        residual = float(np.max(np.abs(oracle.matrix - reduced.matrix)))
        if residual > tol:
            logger.error(f"Oracle disagrees | partition={p.label} residual={residual:.3e}")
            raise OracleMismatch(f"inside-out and oracle traces differ by {residual:.3e} > {tol:.1e}")
    else:
        notes.append(f"oracle check skipped above {settings.ORACLE_MAX_MODES} modes")

    logger.info(f"Reduced state | partition={p.label} oracle_residual={residual}")
    return ReducedStateReport(
        partition=p,
        matrix=complex_rows(reduced.matrix),
        spectrum=list(reduced.spectrum().eigenvalues),
        oracle_residual=residual,
        notes=notes,
    )


def demo_pattern(name: str) -> tuple[SparsityPattern, bool]:
    if name not in DEMOS:
        raise InputSemanticError(f"unknown demo {name!r}; choose from {sorted(DEMOS)}")
    factory, expected = DEMOS[name]
    return factory(), expected


def run_demo(name: str, jobs: Optional[int] = None) -> DemoReport:
    pattern, expected = demo_pattern(name)
    verdict = consistent_mapping_search(pattern.n_modes, pattern, jobs=jobs)
    matches = verdict.exists == expected
    log = logger.info if matches else logger.error
    log(f"Demo {name} | exists={verdict.exists} expected={expected}")
    return DemoReport(name=name, expected_exists=expected, verdict=verdict, matches=matches)


def run_measure(
    text: str,
    modes_keep: Optional[Sequence[int]] = None,
    ssr_eof: bool = False,
    restarts: Optional[int] = None,
    iterations: Optional[int] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
) -> EntanglementReport:
    doc, rho = load_state(text)
    p = make_partition(rho.n_modes, modes_keep)
    return build_report(
        rho, p,
        charges=doc.charges,
        ssr_eof=ssr_eof,
        restarts=restarts,
        iterations=iterations,
        seed=seed,
        jobs=jobs,
    )
