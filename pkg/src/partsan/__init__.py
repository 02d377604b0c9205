"""Deterministic partition simulator with built-in sanitizer runtimes.

The package models an avionics-style partitioned system: statically
allocated per-partition memory guarded by address-validity shadow maps,
byte-level initialization tracking with origins, checked arithmetic
primitives, cyclic partition scheduling with an instrumented-time model,
sampling/queueing ports, a contract-annotation language for syscall
boundaries, and a fault-injection harness that replays JSON scenarios and
reports findings deterministically.
"""

from .asan_shadow import (
    POISON_FLOOR,
    VALID_GRANULARITIES,
    WILD_ADDRESS,
    PoisonKind,
    ShadowMap,
    decode_granule,
    encode_granule,
    shadow_size_for,
)
from .errors import (
    BindError,
    ConfigError,
    EncodingError,
    OutOfMemory,
    ParseError,
    PartsanError,
    PhaseError,
    UnknownType,
)
from .guest_memory import (
    NULL_GUARD,
    PartitionMemory,
    Phase,
    Region,
    create_partition_memory,
)
from .harness import (
    Event,
    RunReport,
    Simulator,
    ViolationRecord,
    match_expected,
    parse_report_json,
    render_report,
    run_scenario,
)
from .msan_shadow import (
    InitShadow,
    PaddingRegistry,
    ReservedInitConfig,
    copy_propagate,
    unpoison_padding,
)
from .ports import (
    Message,
    PortDirection,
    QueueingChannel,
    QueueingPort,
    SamplingChannel,
    SamplingPort,
    Validity,
)
from .scenario import (
    ExpectPattern,
    Scenario,
    builtin_names,
    load_builtin,
    load_scenario,
    load_scenario_file,
)
from .sched import (
    INVALID_MODE,
    MAIN_CONTEXT,
    MAIN_PROCESS_ID,
    CheckCosts,
    DeadlineMiss,
    MajorFrame,
    Process,
    ProcessState,
    ProcessTable,
    TimeModel,
    TimeoutOverride,
    Window,
    check_deadline,
    get_my_id,
)
from .syscall_annotations import (
    ParamBinding,
    SyscallSpec,
    TypeSizeTable,
    enforce_post,
    enforce_pre,
    parse_template,
    render_template,
    resolve_sizes,
)
from .ub_checks import (
    INT_SPECS,
    ArithOp,
    EnumSpec,
    IntSpec,
    UbKind,
    check_align,
    check_bool,
    check_enum,
    check_nonnull,
    checked_arith,
    checked_div,
    checked_float_to_int,
    checked_shift,
    checked_trunc,
    int_spec,
)
from .violations import (
    AccessKind,
    AsanViolation,
    ContractViolation,
    GuestAddr,
    MsanViolation,
    PortViolation,
    UbViolation,
    UseSite,
    ViolationError,
)

__version__ = "0.1.0"
