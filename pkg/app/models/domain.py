"""
models/domain.py
Small immutable records shared by every service.

Mode labels are 1-based everywhere (κ → 1, κ′ → 2, κ″ → 3).
Basis index of an occupation = its bitstring read as a binary integer,
mode 1 being the most significant bit.
"""

from itertools import product
from typing import Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class OccupationState(BaseModel):
    """(b_1†)^{n_1}(b_2†)^{n_2}···(b_n†)^{n_n}|0⟩, creators applied in increasing mode order."""

    model_config = ConfigDict(frozen=True)

    n_modes: int = Field(..., ge=0)
    occupations: tuple[int, ...]

    @field_validator("occupations")
    @classmethod
    def _bits_only(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if any(bit not in (0, 1) for bit in v):
            raise ValueError(f"occupations must be 0/1, got {v}")
        return v

    @model_validator(mode="after")
    def _length_matches(self) -> "OccupationState":
        if len(self.occupations) != self.n_modes:
            raise ValueError(
                f"{len(self.occupations)} occupations given for {self.n_modes} modes"
            )
        return self

    @classmethod
    def from_bits(cls, bits: str) -> "OccupationState":
        return cls(n_modes=len(bits), occupations=tuple(int(b) for b in bits))

    @classmethod
    def from_index(cls, index: int, n_modes: int) -> "OccupationState":
        return cls.from_bits(format(index, f"0{n_modes}b") if n_modes else "")

    @property
    def bits(self) -> str:
        return "".join(str(b) for b in self.occupations)

    @property
    def index(self) -> int:
        return int(self.bits, 2) if self.n_modes else 0

    @property
    def particle_number(self) -> int:
        return sum(self.occupations)

    def occupied(self, mode: int) -> bool:
        return self.occupations[mode - 1] == 1


def all_occupations(n_modes: int) -> list[OccupationState]:
    """Every basis occupation in index order."""
    return [
        OccupationState(n_modes=n_modes, occupations=bits)
        for bits in product((0, 1), repeat=n_modes)
    ]


class ModePartition(BaseModel):
    """Disjoint split of {1..n} into kept modes A and traced modes B."""

    model_config = ConfigDict(frozen=True)

    n_modes: int = Field(..., ge=2)
    kept: tuple[int, ...]
    traced: tuple[int, ...]

    @model_validator(mode="after")
    def _check_split(self) -> "ModePartition":
        kept, traced = set(self.kept), set(self.traced)
        if not kept or not traced:
            raise ValueError("kept and traced mode sets must both be nonempty")
        if len(kept) != len(self.kept) or len(traced) != len(self.traced):
            raise ValueError("repeated mode label in partition")
        if kept & traced:
            raise ValueError(f"modes {sorted(kept & traced)} are both kept and traced")
        if kept | traced != set(range(1, self.n_modes + 1)):
            raise ValueError(f"partition does not cover modes 1..{self.n_modes}")
        if tuple(sorted(self.kept)) != self.kept or tuple(sorted(self.traced)) != self.traced:
            raise ValueError("mode labels must be listed in increasing order")
        return self

    @classmethod
    def keep(cls, n_modes: int, kept) -> "ModePartition":
        kept = tuple(sorted(kept))
        traced = tuple(m for m in range(1, n_modes + 1) if m not in kept)
        return cls(n_modes=n_modes, kept=kept, traced=traced)

    @classmethod
    def trace_out(cls, n_modes: int, traced) -> "ModePartition":
        traced = tuple(sorted(traced))
        kept = tuple(m for m in range(1, n_modes + 1) if m not in traced)
        return cls(n_modes=n_modes, kept=kept, traced=traced)

    def swapped(self) -> "ModePartition":
        return ModePartition(n_modes=self.n_modes, kept=self.traced, traced=self.kept)

    @property
    def label(self) -> str:
        kept = ",".join(map(str, self.kept))
        traced = ",".join(map(str, self.traced))
        return f"{kept}|{traced}"


def single_mode_traces(n_modes: int) -> list[ModePartition]:
    return [ModePartition.trace_out(n_modes, (m,)) for m in range(1, n_modes + 1)]


class ChargePattern(BaseModel):
    """Charge per mode in units of the elementary charge; modulus=2 gives parity."""

    model_config = ConfigDict(frozen=True)

    charges: tuple[int, ...]
    modulus: Optional[int] = Field(None, ge=2)

    @classmethod
    def uniform(cls, n_modes: int, charge: int = 1) -> "ChargePattern":
        return cls(charges=(charge,) * n_modes)

    @classmethod
    def parity(cls, n_modes: int) -> "ChargePattern":
        return cls(charges=(1,) * n_modes, modulus=2)

    @property
    def n_modes(self) -> int:
        return len(self.charges)

    def charge_of(self, occupation: OccupationState) -> int:
        total = sum(c * n for c, n in zip(self.charges, occupation.occupations))
        return total % self.modulus if self.modulus else total


class SignAssignment(BaseModel):
    """One ±1 per occupation basis vector; the vacuum sign is pinned to +1."""

    model_config = ConfigDict(frozen=True)

    n_modes: int = Field(..., ge=0)
    signs: tuple[int, ...]

    @model_validator(mode="after")
    def _check_signs(self) -> "SignAssignment":
        if len(self.signs) != 2 ** self.n_modes:
            raise ValueError(f"need {2 ** self.n_modes} signs, got {len(self.signs)}")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")
        if self.signs[0] != 1:
            raise ValueError("vacuum sign must be +1")
        return self

    @classmethod
    def identity(cls, n_modes: int) -> "SignAssignment":
        return cls(n_modes=n_modes, signs=(1,) * 2 ** n_modes)

    @classmethod
    def from_code(cls, code: int, n_modes: int) -> "SignAssignment":
        """Bit i-1 of code set ⇔ basis vector i carries −1 (i ≥ 1)."""
        dim = 2 ** n_modes
        return cls(
            n_modes=n_modes,
            signs=(1,) + tuple(-1 if (code >> (i - 1)) & 1 else 1 for i in range(1, dim)),
        )

    @property
    def code(self) -> int:
        return sum(1 << (i - 1) for i, s in enumerate(self.signs) if i and s == -1)


class Factor(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["creator", "annihilator", "vacuum"]
    mode: Optional[int] = None

    @model_validator(mode="after")
    def _mode_presence(self) -> "Factor":
        if (self.kind == "vacuum") != (self.mode is None):
            raise ValueError("ladder factors need a mode, the vacuum projector has none")
        return self


class OperatorString(BaseModel):
    """Left-to-right operator product such as b2† b1† |0⟩⟨0| b1 b2."""

    model_config = ConfigDict(frozen=True)

    factors: tuple[Factor, ...] = ()

    @property
    def includes_vacuum_projector(self) -> bool:
        return any(f.kind == "vacuum" for f in self.factors)

    @property
    def max_mode(self) -> int:
        return max((f.mode for f in self.factors if f.mode is not None), default=0)
