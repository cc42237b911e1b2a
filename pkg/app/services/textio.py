"""
services/textio.py

Text formats: state documents, operator strings and JSON reports.

State document
--------------
    modes 2
    charges 1 1                     # optional
    two_mode { a2=0.5 a3=0.5 b4=0.5 }

or explicit terms, one per line, Hermitian conjugates implied:

    modes 2
    0.5 * |01><01|
    0.5 * |10><10|
    0.5 * |01><10|

Occupation bits are mode-1-first. Coefficients are REAL or REAL±REALi.
Missing family coefficients are zero.

Operator string
---------------
    b2^ b1^ P0 b1 b2        (creator bK^, annihilator bK, vacuum projector P0)
"""

import json
import re
from dataclasses import dataclass, field
from typing import Literal, Optional, Union

import lark
import numpy as np
from pydantic import BaseModel

from app.core.config import settings
from app.core.errors import FermiModesError, InputSemanticError, InputSyntaxError
from app.core.logger import get_logger
from app.models.domain import ChargePattern, Factor, OccupationState, OperatorString
from app.services.states import (
    DensityOperator,
    ThreeModeCoefficients,
    TwoModeCoefficients,
    general_three_mode,
    general_two_mode,
)

logger = get_logger(__name__)


# ─────────────────────────────────────────────────────────────────────────────
# Documents
# ─────────────────────────────────────────────────────────────────────────────

FamilyName = Literal["two_mode", "three_mode"]

_FAMILY_MODES = {"two_mode": 2, "three_mode": 3}
_FAMILY_NAMES = {
    "two_mode": tuple(f"a{i}" for i in range(1, 5)) + tuple(f"b{i}" for i in range(1, 7)),
    "three_mode": tuple(f"m{i}" for i in range(1, 9)) + tuple(f"n{i}" for i in range(1, 7)),
}
_REAL_PREFIX = {"two_mode": "a", "three_mode": "m"}


@dataclass(frozen=True)
class StateTerm:
    coefficient: complex
    ket: str
    bra: str


@dataclass(frozen=True)
class FamilySpec:
    family: FamilyName
    values: dict[str, complex] = field(default_factory=dict)


@dataclass(frozen=True)
class StateDocument:
    n_modes: int
    charges: Optional[ChargePattern] = None
    terms: tuple[StateTerm, ...] = ()
    family: Optional[FamilySpec] = None


# ─────────────────────────────────────────────────────────────────────────────
# Grammars
# ─────────────────────────────────────────────────────────────────────────────

_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(rf"(?P<re>[+-]?{_NUMBER})(?:(?P<im>[+-]{_NUMBER})i)?")

STATE_GRAMMAR = rf"""
start: _NL* header _NL+ (line _NL+)*

header: "modes" INT charges?
charges: "charges" SIGNED_INT+

?line: term
     | family
term: COMPLEX "*" KET BRA
family: FAMILY "{{" _NL* assignment* "}}"
assignment: NAME "=" COMPLEX _NL*

COMPLEX: /[+-]?{_NUMBER}(?:[+-]{_NUMBER}i)?/
KET: /\|[01]+>/
BRA: /<[01]+\|/
NAME: /[a-z]\d+/
FAMILY: "two_mode" | "three_mode"
COMMENT: /#[^\n]*/
_NL: /(\r?\n)+/

%import common.INT
%import common.SIGNED_INT
%import common.WS_INLINE
%ignore WS_INLINE
%ignore COMMENT
"""

OPERATOR_GRAMMAR = r"""
start: factor*
factor: CREATOR      -> creator
      | ANNIHILATOR  -> annihilator
      | "P0"         -> vacuum

CREATOR.2: /b\d+\^/
ANNIHILATOR: /b\d+/

%import common.WS
%ignore WS
"""


class StateDocumentParser(lark.Lark):
    """LALR parser for state documents; produces a lark Tree."""

    def __init__(self):
        super().__init__(STATE_GRAMMAR, parser="lalr", lexer="contextual")


class OperatorStringParser(lark.Lark):
    def __init__(self):
        super().__init__(OPERATOR_GRAMMAR, parser="lalr", lexer="contextual")


_STATE_PARSER = StateDocumentParser()
_OPERATOR_PARSER = OperatorStringParser()


def _syntax_error(e: lark.exceptions.UnexpectedInput, what: str) -> InputSyntaxError:
    line = getattr(e, "line", None)
    column = getattr(e, "column", None)
    if line is None or line < 1:
        line, column = None, None
    if isinstance(e, lark.exceptions.UnexpectedToken):
        detail = f"unexpected {e.token.type} {str(e.token)!r}"
    elif isinstance(e, lark.exceptions.UnexpectedCharacters):
        detail = f"unexpected character {e.char!r}"
    else:
        detail = "unexpected end of input"
    return InputSyntaxError(f"{what}: {detail}", line, column)


def parse_complex(text: str) -> complex:
    match = _COMPLEX_RE.fullmatch(text)
    if match is None:
        raise InputSyntaxError(f"not a complex number: {text!r}")
    return complex(float(match["re"]), float(match["im"] or 0.0))


def format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    sign = "-" if z.imag < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


# ─────────────────────────────────────────────────────────────────────────────
# State documents
# ─────────────────────────────────────────────────────────────────────────────

def _build_document(tree: lark.Tree) -> StateDocument:
    header, *lines = tree.children
    n_modes = int(header.children[0])
    charges = None
    if len(header.children) > 1:
        charges = ChargePattern(charges=tuple(int(t) for t in header.children[1].children))

    terms: list[StateTerm] = []
    families: list[FamilySpec] = []
    for node in lines:
        if node.data == "term":
            coeff, ket, bra = node.children
            terms.append(StateTerm(parse_complex(str(coeff)), str(ket)[1:-1], str(bra)[1:-1]))
            continue
        name_token, *assignments = node.children
        values: dict[str, complex] = {}
        for a in assignments:
            key, value = str(a.children[0]), parse_complex(str(a.children[1]))
            if key in values:
                raise InputSemanticError(f"coefficient {key} assigned twice (line {a.children[0].line})")
            values[key] = value
        families.append(FamilySpec(family=str(name_token), values=values))

    if len(families) > 1 or (families and terms):
        raise InputSemanticError("a document holds either explicit terms or exactly one family")
    return StateDocument(n_modes=n_modes, charges=charges, terms=tuple(terms),
                         family=families[0] if families else None)


def parse_state(text: str) -> StateDocument:
    """Parse and validate; the document is assembled once so bad states fail here."""
    try:
        tree = _STATE_PARSER.parse(text if text.endswith("\n") else text + "\n")
    except lark.exceptions.UnexpectedInput as e:
        raise _syntax_error(e, "state document") from e
    doc = _build_document(tree)
    assemble(doc)
    return doc


def _check_header(doc: StateDocument) -> None:
    if not 1 <= doc.n_modes <= settings.MAX_MODES:
        raise InputSemanticError(f"modes must be within 1..{settings.MAX_MODES}, got {doc.n_modes}")
    if doc.charges is not None and doc.charges.n_modes != doc.n_modes:
        raise InputSemanticError(f"{doc.charges.n_modes} charges listed for {doc.n_modes} modes")


def _family_matrix(doc: StateDocument) -> DensityOperator:
    spec = doc.family
    if _FAMILY_MODES[spec.family] != doc.n_modes:
        raise InputSemanticError(f"{spec.family} needs modes {_FAMILY_MODES[spec.family]}, header says {doc.n_modes}")
    allowed = _FAMILY_NAMES[spec.family]
    unknown = sorted(set(spec.values) - set(allowed))
    if unknown:
        raise InputSemanticError(f"{spec.family} has no coefficients {unknown}")

    real_prefix = _REAL_PREFIX[spec.family]
    values = {name: spec.values.get(name, 0j) for name in allowed}
    for name, v in values.items():
        if name.startswith(real_prefix) and v.imag != 0:
            raise InputSemanticError(f"diagonal coefficient {name} must be real, got {format_complex(v)}")
    diagonal = tuple(values[n].real for n in allowed if n.startswith(real_prefix))
    off = tuple(values[n] for n in allowed if not n.startswith(real_prefix))
    if spec.family == "two_mode":
        return general_two_mode(TwoModeCoefficients(alpha=diagonal, beta=off))
    return general_three_mode(ThreeModeCoefficients(mu=diagonal, nu=off))


def _terms_matrix(doc: StateDocument) -> DensityOperator:
    dim = 2 ** doc.n_modes
    m = np.zeros((dim, dim), dtype=np.complex128)
    seen: set[tuple[int, int]] = set()
    for t in doc.terms:
        if len(t.ket) != doc.n_modes or len(t.bra) != doc.n_modes:
            raise InputSemanticError(f"|{t.ket}><{t.bra}| does not describe {doc.n_modes} modes")
        r = OccupationState.from_bits(t.ket).index
        c = OccupationState.from_bits(t.bra).index
        if (r, c) in seen or (c, r) in seen:
            raise InputSemanticError(f"|{t.ket}><{t.bra}| given twice (conjugates are implied)")
        seen.add((r, c))
        if r == c:
            if t.coefficient.imag != 0:
                raise InputSemanticError(f"diagonal term |{t.ket}><{t.bra}| must be real")
            m[r, r] = t.coefficient
        else:
            m[r, c] = t.coefficient
            m[c, r] = np.conj(t.coefficient)
    return DensityOperator.from_matrix(m)


def assemble(doc: StateDocument) -> DensityOperator:
    """Document → validated density operator; any state failure becomes InputSemanticError."""
    _check_header(doc)
    try:
        if doc.family is not None:
            return _family_matrix(doc)
        if not doc.terms:
            raise InputSemanticError("document has no terms")
        return _terms_matrix(doc)
    except InputSemanticError:
        raise
    except FermiModesError as e:
        raise InputSemanticError(f"not a density operator: {e}") from e


def serialize_state(doc: StateDocument) -> str:
    """Canonical text form: header, then terms or the family on one line."""
    lines = [f"modes {doc.n_modes}"]
    if doc.charges is not None:
        lines[0] += " charges " + " ".join(str(q) for q in doc.charges.charges)
    if doc.family is not None:
        order = _FAMILY_NAMES[doc.family.family]
        body = " ".join(
            f"{name}={format_complex(doc.family.values[name])}" for name in order if name in doc.family.values
        )
        lines.append(f"{doc.family.family} {{ {body} }}")
    for t in doc.terms:
        lines.append(f"{format_complex(t.coefficient)} * |{t.ket}><{t.bra}|")
    return "\n".join(lines) + "\n"


def document_from_state(rho: DensityOperator, tol: Optional[float] = None) -> StateDocument:
    """Upper-triangle terms of a state, skipping entries below tol."""
    tol = settings.EXACT_TOL if tol is None else tol
    terms = []
    for r in range(rho.dim):
        for c in range(r, rho.dim):
            z = complex(rho.matrix[r, c])
            if abs(z) > tol:
                if r == c:
                    z = complex(z.real)
                terms.append(StateTerm(
                    z,
                    OccupationState.from_index(r, rho.n_modes).bits,
                    OccupationState.from_index(c, rho.n_modes).bits,
                ))
    return StateDocument(n_modes=rho.n_modes, terms=tuple(terms))


# ─────────────────────────────────────────────────────────────────────────────
# Operator strings
# ─────────────────────────────────────────────────────────────────────────────

def parse_operator_string(text: str, n_modes: Optional[int] = None) -> OperatorString:
    try:
        tree = _OPERATOR_PARSER.parse(text)
    except lark.exceptions.UnexpectedInput as e:
        raise _syntax_error(e, "operator string") from e

    factors = []
    for node in tree.children:
        if node.data == "vacuum":
            factors.append(Factor(kind="vacuum"))
            continue
        token = node.children[0]
        mode = int(str(token).strip("b^"))
        if mode < 1 or (n_modes is not None and mode > n_modes):
            limit = f"1..{n_modes}" if n_modes is not None else "≥ 1"
            raise InputSemanticError(f"mode {mode} out of range {limit} (column {token.column})")
        factors.append(Factor(kind="creator" if node.data == "creator" else "annihilator", mode=mode))
    return OperatorString(factors=tuple(factors))


def serialize_operator_string(s: OperatorString) -> str:
    tokens = {"creator": "b{}^", "annihilator": "b{}", "vacuum": "P0"}
    return " ".join(tokens[f.kind].format(f.mode) for f in s.factors)


# ─────────────────────────────────────────────────────────────────────────────
# Reports
# ─────────────────────────────────────────────────────────────────────────────

def _round(value, digits: int):
    if isinstance(value, float):
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {k: _round(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v, digits) for v in value]
    return value


def emit_report(report: Union[BaseModel, list[BaseModel]], digits: Optional[int] = None) -> str:
    """Schema-versioned JSON; floats at `digits` significant digits, byte-stable for equal input."""
    digits = settings.REPORT_SIGNIFICANT_DIGITS if digits is None else digits
    items = report if isinstance(report, list) else [report]
    payload = {
        "schema_version": settings.REPORT_SCHEMA_VERSION,
        "kind": type(items[0]).__name__ if items else "empty",
        "reports": [_round(r.model_dump(mode="json"), digits) for r in items],
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
