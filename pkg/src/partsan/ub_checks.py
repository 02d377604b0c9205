"""Checked integer and value-domain primitives.

Each primitive evaluates in unbounded integers first, then asks whether the
exact result is representable in the target width.  Signed overflow is a
violation; unsigned overflow wraps modulo 2**width by default (flagged only
under ``strict``).  Division truncates toward zero.  Shifts use value
semantics: a left shift violates when the shift count leaves the width or
when the exact value a * 2**s does not fit the type.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError
from .violations import GuestAddr, UbViolation


class UbKind(Enum):
    ADD_OVERFLOW = "ADD_OVERFLOW"
    SUB_OVERFLOW = "SUB_OVERFLOW"
    MUL_OVERFLOW = "MUL_OVERFLOW"
    DIV_BY_ZERO = "DIV_BY_ZERO"
    DIV_OVERFLOW = "DIV_OVERFLOW"
    SHIFT_RANGE = "SHIFT_RANGE"
    MISALIGNED = "MISALIGNED"
    NULL_DEREF = "NULL_DEREF"
    BOOL_RANGE = "BOOL_RANGE"
    ENUM_RANGE = "ENUM_RANGE"
    TRUNCATION = "TRUNCATION"


class ArithOp(Enum):
    ADD = "ADD"
    SUB = "SUB"
    MUL = "MUL"


_OVERFLOW_KIND = {
    ArithOp.ADD: UbKind.ADD_OVERFLOW,
    ArithOp.SUB: UbKind.SUB_OVERFLOW,
    ArithOp.MUL: UbKind.MUL_OVERFLOW,
}


@dataclass(frozen=True)
class IntSpec:
    """A fixed-width two's-complement (or unsigned) integer type."""

    width: int
    signed: bool

    def __post_init__(self):
        if self.width not in (8, 16, 32, 64):
            raise ConfigError(f"unsupported integer width {self.width}")

    @property
    def min(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def max(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    @property
    def name(self) -> str:
        return f"{'i' if self.signed else 'u'}{self.width}"

    def contains(self, value: int) -> bool:
        return self.min <= value <= self.max

    def wrap(self, value: int) -> int:
        return value & ((1 << self.width) - 1)


INT_SPECS = {
    spec.name: spec
    for spec in (
        IntSpec(w, s) for w in (8, 16, 32, 64) for s in (True, False)
    )
}


@dataclass(frozen=True)
class EnumSpec:
    """A named enum type with an explicit set of valid underlying values."""

    name: str
    allowed: frozenset[int]

    def __post_init__(self):
        if not self.allowed:
            raise ConfigError(f"enum '{self.name}' has no allowed values")


def int_spec(name: str) -> IntSpec:
    try:
        return INT_SPECS[name]
    except KeyError:
        raise ConfigError(
            f"unknown integer type '{name}', expected one of {sorted(INT_SPECS)}"
        ) from None


def _require_operand(value: int, spec: IntSpec, role: str) -> None:
    if not spec.contains(value):
        raise ConfigError(f"{role} operand {value} not representable in {spec.name}")


def checked_arith(op: ArithOp, a: int, b: int, spec: IntSpec, strict: bool = False):
    """ADD/SUB/MUL with overflow detection.  Returns the result value, or a
    UbViolation when the exact result leaves the type."""
    op = ArithOp(op)
    _require_operand(a, spec, "left")
    _require_operand(b, spec, "right")
    if op is ArithOp.ADD:
        exact = a + b
    elif op is ArithOp.SUB:
        exact = a - b
    else:
        exact = a * b
    if spec.contains(exact):
        return exact
    if not spec.signed and not strict:
        return spec.wrap(exact)
    return UbViolation(
        kind=_OVERFLOW_KIND[op],
        operands=(a, b),
        int_spec=spec.name,
        detail=(
            f"{spec.name} {op.value} of {a} and {b} gives {exact}, outside "
            f"[{spec.min}, {spec.max}]"
        ),
    )


def checked_div(a: int, b: int, spec: IntSpec):
    """Truncating division with zero-divisor and MIN/-1 detection."""
    _require_operand(a, spec, "left")
    _require_operand(b, spec, "right")
    if b == 0:
        return UbViolation(
            kind=UbKind.DIV_BY_ZERO,
            operands=(a, b),
            int_spec=spec.name,
            detail=f"{spec.name} division of {a} by zero",
        )
    if spec.signed and a == spec.min and b == -1:
        return UbViolation(
            kind=UbKind.DIV_OVERFLOW,
            operands=(a, b),
            int_spec=spec.name,
            detail=f"{spec.name} division {a} / -1 overflows to {-a}",
        )
    quotient = abs(a) // abs(b)
    return quotient if (a < 0) == (b < 0) else -quotient


def checked_shift(a: int, s: int, spec: IntSpec, strict: bool = False):
    """Left shift by ``s``.  The count must lie in [0, width); the shifted
    value must fit the type (unsigned wraps unless strict)."""
    _require_operand(a, spec, "left")
    if s < 0 or s >= spec.width:
        return UbViolation(
            kind=UbKind.SHIFT_RANGE,
            operands=(a, s),
            int_spec=spec.name,
            detail=f"shift count {s} outside [0, {spec.width}) for {spec.name}",
        )
    exact = a * (1 << s)
    if spec.contains(exact):
        return exact
    if not spec.signed and not strict:
        return spec.wrap(exact)
    return UbViolation(
        kind=UbKind.SHIFT_RANGE,
        operands=(a, s),
        int_spec=spec.name,
        detail=(
            f"{spec.name} shift {a} << {s} gives {exact}, outside "
            f"[{spec.min}, {spec.max}]"
        ),
    )


def checked_trunc(value: int, from_spec: IntSpec, to_spec: IntSpec):
    """Conversion between integer types: the value must survive unchanged."""
    _require_operand(value, from_spec, "source")
    if to_spec.contains(value):
        return value
    return UbViolation(
        kind=UbKind.TRUNCATION,
        operands=(value,),
        int_spec=to_spec.name,
        detail=(
            f"{from_spec.name} value {value} does not fit {to_spec.name} "
            f"[{to_spec.min}, {to_spec.max}]"
        ),
    )


def check_align(addr: GuestAddr, align: int):
    """Natural-alignment check for an access at ``addr``."""
    if align < 1 or align & (align - 1):
        raise ConfigError(f"alignment must be a power of two, got {align}")
    if addr.offset % align == 0:
        return None
    return UbViolation(
        kind=UbKind.MISALIGNED,
        operands=(addr.offset, align),
        int_spec=None,
        detail=f"offset {addr.offset} not aligned to {align}",
    )


def check_nonnull(addr: GuestAddr):
    """Guest null is offset 0 of any partition (the bottom of every space is
    a permanently blacklisted guard)."""
    if addr.offset != 0:
        return None
    return UbViolation(
        kind=UbKind.NULL_DEREF,
        operands=(addr.offset,),
        int_spec=None,
        detail=f"null dereference in partition {addr.partition_id}",
    )


def check_bool(value: int):
    """A C _Bool must hold exactly 0 or 1."""
    if value in (0, 1):
        return None
    return UbViolation(
        kind=UbKind.BOOL_RANGE,
        operands=(value,),
        int_spec=None,
        detail=f"boolean holds {value}, expected 0 or 1",
    )


def check_enum(value: int, enum_spec: EnumSpec):
    if value in enum_spec.allowed:
        return None
    return UbViolation(
        kind=UbKind.ENUM_RANGE,
        operands=(value,),
        int_spec=None,
        detail=(
            f"value {value} not in enum '{enum_spec.name}' "
            f"{sorted(enum_spec.allowed)}"
        ),
    )


def checked_float_to_int(value: float, to_spec: IntSpec):
    """Float-to-integer cast: truncates toward zero, violates when the
    truncated value leaves the type (or the float is not finite)."""
    if value != value or value in (float("inf"), float("-inf")):
        return UbViolation(
            kind=UbKind.TRUNCATION,
            operands=(value,),
            int_spec=to_spec.name,
            detail=f"cannot convert non-finite {value!r} to {to_spec.name}",
        )
    truncated = int(value)
    if to_spec.contains(truncated):
        return truncated
    return UbViolation(
        kind=UbKind.TRUNCATION,
        operands=(value,),
        int_spec=to_spec.name,
        detail=(
            f"float {value!r} truncates to {truncated}, outside {to_spec.name} "
            f"[{to_spec.min}, {to_spec.max}]"
        ),
    )
