from typing import Literal, Optional
from pydantic import BaseModel, Field

DemoName = Literal["two-mode-free", "two-mode-ssr", "three-mode-ssr"]
Command = Literal["car-check", "reduce", "demo", "measure", "serve"]


class RunConfig(BaseModel):
    """One CLI invocation after argument parsing."""

    command: Command
    input: Optional[str] = Field(None, description="State document path, '-' for stdin")
    text: Optional[str] = Field(None, description="Inline document text, used instead of input")
    n_modes: Optional[int] = Field(None, ge=1, description="car-check: number of modes")
    demo: Optional[DemoName] = None
    modes_keep: Optional[list[int]] = Field(None, description="Kept modes; defaults to mode 1")
    seed: Optional[int] = None
    tol: Optional[float] = Field(None, gt=0)
    jobs: int = Field(1, ge=1)
    ssr_eof: bool = False
    restarts: Optional[int] = Field(None, ge=0)
    iterations: Optional[int] = Field(None, ge=1)
    out: Optional[str] = Field(None, description="Report path; stdout when absent")


class ReduceRequest(BaseModel):
    document: str = Field(..., min_length=1, description="State document text")
    modes_keep: list[int] = Field(..., min_length=1)
    tol: Optional[float] = Field(None, gt=0)


class MeasureRequest(BaseModel):
    document: str = Field(..., min_length=1, description="State document text")
    modes_keep: list[int] = Field(default_factory=lambda: [1], min_length=1)
    ssr_eof: bool = False
    restarts: Optional[int] = Field(None, ge=0, le=256)
    iterations: Optional[int] = Field(None, ge=1, le=5000)
    seed: Optional[int] = None
