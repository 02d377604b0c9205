"""Addressing primitives and violation records shared by all checkers.

A violation is a finding about the simulated guest, not a failure of the
simulator.  Checkers either return a violation record (pure query APIs) or
raise :class:`ViolationError` around one (mutating entry points, so that the
faulting operation has no side effects).  The harness catches the wrapper,
logs the record and continues the run.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import PartsanError


@dataclass(frozen=True)
class GuestAddr:
    """An offset into one partition's private byte space.

    Offsets are plain integers and may be negative or past the end; such
    addresses are representable (arithmetic never wraps) but any access
    through them is reported as WILD_ADDRESS.
    """

    partition_id: int
    offset: int

    def __add__(self, delta: int) -> "GuestAddr":
        return GuestAddr(self.partition_id, self.offset + delta)


class AccessKind(Enum):
    READ = "R"
    WRITE = "W"


class UseSite(Enum):
    """Where an initialization check happens. Only uses are checked, not copies."""

    SYSCALL_PRE = "SYSCALL_PRE"
    BRANCH = "BRANCH"
    ARITH = "ARITH"
    PORT_SEND = "PORT_SEND"


@dataclass(frozen=True)
class AsanViolation:
    """Access touching non-addressable memory. ``kind`` is a PoisonKind name
    or WILD_ADDRESS; ``addr`` is the first offending byte."""

    kind: str
    addr: GuestAddr
    access: AccessKind
    requested_len: int
    region_label: str | None = None


@dataclass(frozen=True)
class MsanViolation:
    """Use of a byte that was never initialized."""

    addr: GuestAddr
    len_requested: int
    context: UseSite
    origin: str | None = None

    kind: str = "UNINIT_USE"


@dataclass(frozen=True)
class UbViolation:
    """An arithmetic or value-domain trap from a checked primitive."""

    kind: "object"  # UbKind; typed loosely to avoid an import cycle
    operands: tuple
    int_spec: str | None
    detail: str


@dataclass(frozen=True)
class PortViolation:
    """Port-level fault: oversize message or full queue."""

    kind: str  # MESSAGE_TOO_LONG | QUEUE_FULL
    port_name: str
    partition_id: int
    detail: str


@dataclass(frozen=True)
class ContractViolation:
    """A self-checking step observed a result other than the declared one."""

    partition_id: int | None
    detail: str

    kind: str = "API_CONTRACT"


class ViolationError(PartsanError):
    """Wrapper raised by mutating entry points so the operation aborts
    cleanly; carries the underlying violation record."""

    def __init__(self, violation):
        self.violation = violation
        super().__init__(str(violation))
