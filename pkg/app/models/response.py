"""
models/response.py
All outgoing report schemas.
The CLI prints these through textio.emit_report; the HTTP routes return them as-is.
Complex entries travel as [re, im] pairs.
"""

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.models.domain import ModePartition, SignAssignment

ComplexPair = tuple[float, float]


def complex_rows(m) -> list[list[ComplexPair]]:
    arr = np.asarray(m, dtype=np.complex128)
    return [[(float(z.real), float(z.imag)) for z in row] for row in arr]


# ── Mapping search ───────────────────────────────────────────────────────────

class SignEquation(BaseModel):
    """x_row ⊕ x_col ⊕ y_reduced_row ⊕ y_reduced_col = parity, over GF(2).

    x are the global basis-vector signs, y the reduced-space signs of one
    partition; parity 1 means the fermionic trace carries a minus sign.
    """

    partition: str
    row: int
    col: int
    reduced_row: int
    reduced_col: int
    parity: Literal[0, 1]


class MappingVerdict(BaseModel):
    n_modes: int
    exists: bool
    witnesses: list[SignAssignment] = Field(default_factory=list)
    obstruction: list[SignEquation] = Field(default_factory=list)
    partitions: list[str] = Field(default_factory=list)
    support: list[tuple[int, int]] = Field(default_factory=list)   # allowed (row < col) entries
    assignments_checked: int = 0

    @model_validator(mode="after")
    def _witness_iff_exists(self) -> "MappingVerdict":
        if self.exists != bool(self.witnesses):
            raise ValueError("exists must be true exactly when witnesses are listed")
        if self.exists and self.obstruction:
            raise ValueError("a satisfiable search has no obstruction")
        return self


# ── Entanglement ─────────────────────────────────────────────────────────────

class EntanglementReport(BaseModel):
    partition: ModePartition
    entropy_of_entanglement: Optional[float] = None     # pure states only
    negativity: Optional[float] = None                  # needs a mapping witness
    concurrence: Optional[float] = None                 # two-qubit images only
    eof_wootters: Optional[float] = None
    eof_ssr_estimate: Optional[float] = None
    eof_ssr_status: Literal["upper_bound"] = "upper_bound"
    bound_chain_ok: bool = True
    witness: Optional[SignAssignment] = None
    notes: list[str] = Field(default_factory=list)


# ── Experiments ──────────────────────────────────────────────────────────────

class CarCheckReport(BaseModel):
    n_modes: int
    identities_checked: int
    max_residual: float
    tolerance: float
    ok: bool


class ReducedStateReport(BaseModel):
    partition: ModePartition
    matrix: list[list[ComplexPair]]
    spectrum: list[float]
    oracle_residual: Optional[float] = None
    notes: list[str] = Field(default_factory=list)


class DemoReport(BaseModel):
    name: str
    expected_exists: bool
    verdict: MappingVerdict
    matches: bool


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
    max_modes: int
