"""Fault-injection harness: runs a scenario's workload and reports findings.

Execution is report-and-continue: a guest fault (redzone hit, uninitialized
use, arithmetic trap, port fault, contract mismatch) aborts only the
operation that caused it, gets recorded, and the run proceeds.  Scenario
authoring mistakes (unknown regions, allocation after start, out of
memory) raise instead: they are bugs in the input, not findings.

Runs are deterministic: the same scenario and overrides produce
byte-identical reports, which is what makes expected-violation verdicts and
golden outputs meaningful.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigError
from .guest_memory import PartitionMemory, Phase
from .msan_shadow import PaddingRegistry, copy_propagate, unpoison_padding
from .ports import (
    PortDirection,
    QueueingChannel,
    QueueingPort,
    SamplingChannel,
    SamplingPort,
)
from .scenario import ExpectPattern, Scenario, Step
from .sched import (
    MAIN_CONTEXT,
    MajorFrame,
    Process,
    ProcessTable,
    TimeModel,
    Window,
    check_deadline,
    get_my_id,
)
from .syscall_annotations import (
    ParamBinding,
    TypeSizeTable,
    enforce_post,
    enforce_pre,
    resolve_sizes,
)
from .ub_checks import (
    ArithOp,
    EnumSpec,
    UbViolation,
    check_align,
    check_bool,
    check_enum,
    check_nonnull,
    checked_arith,
    checked_div,
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
    UseSite,
    ViolationError,
)

__all__ = [
    "Event",
    "RunReport",
    "Simulator",
    "ViolationRecord",
    "match_expected",
    "parse_report_json",
    "render_report",
    "run_scenario",
]


@dataclass(frozen=True)
class ViolationRecord:
    """One finding, normalized for reporting."""

    kind: str
    partition: int | None
    offset: int | None
    size: int | None
    access: str | None
    step: int
    detail: str
    context: str | None = None
    origin: str | None = None

    def to_line(self) -> str:
        addr = format(self.offset, "#x") if self.offset is not None else "-"
        return (
            f"VIOLATION kind={self.kind}"
            f" part={self.partition if self.partition is not None else '-'}"
            f" addr={addr}"
            f" size={self.size if self.size is not None else '-'}"
            f" access={self.access if self.access is not None else '-'}"
            f" step={self.step}"
            f' detail="{self.detail}"'
        )


@dataclass(frozen=True)
class Event:
    """Trace entry that is not a fault (dispatches, deadline misses, port
    status, identity queries)."""

    kind: str
    t: int
    info: dict = field(default_factory=dict)

    def to_line(self) -> str:
        parts = [f"EVENT kind={self.kind}", f"t={self.t}"]
        parts.extend(f"{key}={value}" for key, value in self.info.items())
        return " ".join(parts)


@dataclass(frozen=True)
class RunReport:
    scenario_name: str
    seed: int
    raw_ticks: int
    virtual_ticks: int
    violations: tuple
    events: tuple
    verdict: str


def match_expected(records, patterns) -> bool:
    """Multiset match: every record consumed by exactly one pattern.

    Patterns are partial (omitted fields match anything), so this is a
    bipartite perfect-matching problem; sizes are small enough for
    backtracking with a most-constrained-first order.
    """

    def fits(record: ViolationRecord, pattern: ExpectPattern) -> bool:
        if pattern.kind != record.kind:
            return False
        if pattern.partition is not None and pattern.partition != record.partition:
            return False
        if pattern.offset is not None and pattern.offset != record.offset:
            return False
        if pattern.context is not None and pattern.context != record.context:
            return False
        return True

    records = list(records)
    patterns = sorted(
        patterns,
        key=lambda p: -sum(x is not None for x in (p.partition, p.offset, p.context)),
    )
    if len(records) != len(patterns):
        return False
    used = [False] * len(records)

    def place(i: int) -> bool:
        if i == len(patterns):
            return True
        for j, record in enumerate(records):
            if not used[j] and fits(record, patterns[i]):
                used[j] = True
                if place(i + 1):
                    return True
                used[j] = False
        return False

    return place(0)


class _PartitionState:
    def __init__(self, mem: PartitionMemory, table: ProcessTable | None):
        self.mem = mem
        self.table = table
        self.last_dispatched: int | None = None


class Simulator:
    """Builds runtime state from a Scenario and interprets its workload."""

    def __init__(self, scenario: Scenario, seed: int = 0):
        self.scenario = scenario
        self.seed = seed
        self.rng = random.Random(seed)

        self.partitions: dict[int, _PartitionState] = {}
        for pconf in scenario.partitions:
            mem = PartitionMemory(
                pconf.partition_id,
                pconf.memory_size,
                granularity=pconf.granularity,
                redzone=pconf.redzone,
                reserved_init=scenario.reserved_init,
            )
            for region in pconf.regions:
                mem.alloc_region(region.size, region.label)
            table = None
            if pconf.processes:
                table = ProcessTable(
                    Process(
                        process_id=proc.process_id,
                        partition_id=pconf.partition_id,
                        priority=proc.priority,
                        time_capacity=proc.time_capacity,
                        period=proc.period,
                    )
                    for proc in pconf.processes
                )
            if pconf.auto_start:
                mem.start()
            self.partitions[pconf.partition_id] = _PartitionState(mem, table)

        self.model = TimeModel(scenario.time.slowdown_factor, scenario.time.costs)
        self.frame = scenario.time.frame
        if self.frame is None and scenario.partitions:
            # default schedule: one 1000-tick window per partition, id order
            windows, start = [], 0
            for pconf in sorted(scenario.partitions, key=lambda p: p.partition_id):
                windows.append(Window(pconf.partition_id, start, 1000))
                start += 1000
            self.frame = MajorFrame(start, windows)
        self.overrides: dict[int, dict[int, Fraction]] = {}
        for pid, proc, multiplier in scenario.time.overrides:
            self.overrides.setdefault(pid, {})[proc] = multiplier
        self.legacy_get_my_id = scenario.time.legacy_get_my_id

        self.types = TypeSizeTable(scenario.types)
        self.padding = PaddingRegistry()
        for type_name, ranges in scenario.padding.items():
            self.padding.register(type_name, ranges, type_size=scenario.types[type_name])
        self.syscalls = {spec.user_name: spec for spec in scenario.syscalls}

        self.ports: dict[tuple[int, str], object] = {}
        for pconf in scenario.ports:
            if pconf.kind == "sampling":
                channel = SamplingChannel(
                    pconf.name, pconf.max_message_size, pconf.refresh_period
                )
                port_cls = SamplingPort
            else:
                channel = QueueingChannel(
                    pconf.name, pconf.max_message_size, pconf.capacity
                )
                port_cls = QueueingPort
            if pconf.source is not None:
                self.ports[(pconf.source, pconf.name)] = port_cls(
                    pconf.name, pconf.source, PortDirection.SOURCE, channel
                )
            if pconf.destination is not None:
                self.ports[(pconf.destination, pconf.name)] = port_cls(
                    pconf.name, pconf.destination, PortDirection.DESTINATION, channel
                )

        self.violations: list[ViolationRecord] = []
        self.events: list[Event] = []
        self._step_index = 0
        self._ub_checks_this_step = 0

    # -- plumbing ----------------------------------------------------------

    def _state(self, partition_id: int) -> _PartitionState:
        try:
            return self.partitions[partition_id]
        except KeyError:
            raise ConfigError(f"no partition {partition_id}") from None

    def _mem(self, partition_id: int) -> PartitionMemory:
        return self._state(partition_id).mem

    def _addr(self, step: Step, region_key: str, offset_key: str) -> GuestAddr:
        """Region-relative when a region is named, absolute otherwise."""
        mem = self._mem(step["partition"])
        offset = step[offset_key]
        label = step.get(region_key)
        if label is not None:
            offset += mem.region(label).base
        return mem.addr(offset)

    def _port(self, step: Step, want_cls):
        key = (step["partition"], step["port"])
        port = self.ports.get(key)
        if port is None:
            raise ConfigError(
                f"partition {key[0]} has no port '{key[1]}'", path=step.path
            )
        if not isinstance(port, want_cls):
            raise ConfigError(
                f"port '{key[1]}' is {type(port).__name__}, wrong op for it",
                path=step.path,
            )
        return port

    def _shadow_map(self):
        return {pid: state.mem.init_shadow for pid, state in self.partitions.items()}

    def _event(self, kind: str, **info) -> None:
        self.events.append(Event(kind=kind, t=self.model.virtual_now, info=info))

    def _record(self, violation, partition_hint: int | None = None) -> None:
        step = self._step_index
        if isinstance(violation, AsanViolation):
            record = ViolationRecord(
                kind=violation.kind,
                partition=violation.addr.partition_id,
                offset=violation.addr.offset,
                size=violation.requested_len,
                access=violation.access.value,
                step=step,
                detail=self._asan_detail(violation),
            )
        elif isinstance(violation, MsanViolation):
            origin = violation.origin
            detail = f"uninitialized byte used at {violation.context.value}"
            detail += f" (origin {origin})" if origin else " (no origin)"
            record = ViolationRecord(
                kind=violation.kind,
                partition=violation.addr.partition_id,
                offset=violation.addr.offset,
                size=violation.len_requested,
                access="R",
                step=step,
                detail=detail,
                context=violation.context.value,
                origin=origin,
            )
        elif isinstance(violation, UbViolation):
            offset = None
            if violation.kind.value in ("MISALIGNED", "NULL_DEREF"):
                offset = violation.operands[0]
            record = ViolationRecord(
                kind=violation.kind.value,
                partition=partition_hint,
                offset=offset,
                size=None,
                access=None,
                step=step,
                detail=violation.detail,
            )
        elif isinstance(violation, PortViolation):
            record = ViolationRecord(
                kind=violation.kind,
                partition=violation.partition_id,
                offset=None,
                size=None,
                access=None,
                step=step,
                detail=violation.detail,
            )
        elif isinstance(violation, ContractViolation):
            record = ViolationRecord(
                kind=violation.kind,
                partition=violation.partition_id,
                offset=None,
                size=None,
                access=None,
                step=step,
                detail=violation.detail,
            )
        else:
            raise AssertionError(f"unknown violation type {type(violation)!r}")
        self.violations.append(record)

    def _asan_detail(self, violation: AsanViolation) -> str:
        label = violation.region_label
        if violation.kind == "WILD_ADDRESS":
            return "address outside partition memory"
        if violation.kind == "LEFT_REDZONE":
            return f"left redzone of region '{label}'" if label else "left redzone"
        if violation.kind == "RIGHT_REDZONE":
            return f"right redzone of region '{label}'" if label else "right redzone"
        if violation.kind == "PARTITION_RESET":
            return "memory invalidated by partition reset"
        detail = "blacklisted memory"
        if label:
            detail += f" near region '{label}'"
        return detail

    # -- execution ----------------------------------------------------------

    def run(self) -> RunReport:
        for index, step in enumerate(self.scenario.workload):
            self._step_index = index
            self._ub_checks_this_step = 0
            asan_before, msan_before = self._check_counts()
            self._dispatch_for(step)
            try:
                self._execute(step)
            except ConfigError as exc:
                if exc.path is not None:
                    raise
                raise ConfigError(str(exc), path=step.path) from exc
            asan_after, msan_after = self._check_counts()
            if step.op == "IDLE":
                self.model.advance(step["ticks"])
            else:
                self.model.advance(
                    self.model.costs.base_step,
                    asan_checks=asan_after - asan_before,
                    msan_checks=msan_after - msan_before,
                    ub_checks=self._ub_checks_this_step,
                )
            self._watch_deadlines()
        verdict = (
            "MATCH"
            if match_expected(self.violations, self.scenario.expect)
            else "MISMATCH"
        )
        return RunReport(
            scenario_name=self.scenario.name,
            seed=self.seed,
            raw_ticks=self.model.raw_ticks,
            virtual_ticks=self.model.virtual_now,
            violations=tuple(self.violations),
            events=tuple(self.events),
            verdict=verdict,
        )

    def _check_counts(self) -> tuple[int, int]:
        asan = sum(s.mem.shadow.checks_performed for s in self.partitions.values())
        msan = sum(s.mem.init_shadow.checks_performed for s in self.partitions.values())
        return asan, msan

    def _dispatch_for(self, step: Step) -> None:
        if step.op == "IDLE":
            return
        state = self._state(step["partition"])
        if state.table is None or state.mem.phase is not Phase.RUNNING:
            return
        now = self.model.virtual_now
        self._roll_activations(state, now)
        process = state.table.dispatch(now)
        dispatched = process.process_id if process else None
        if dispatched != state.last_dispatched:
            state.last_dispatched = dispatched
            if process is not None:
                self._event(
                    "DISPATCH", part=step["partition"], process=process.process_id
                )

    def _roll_activations(self, state: _PartitionState, now: int) -> None:
        for process in state.table.processes:
            if process.period is None or process.activation_time is None:
                continue
            while process.activation_time + process.period <= now:
                process.activation_time += process.period
                process.deadline_missed = False

    def _watch_deadlines(self) -> None:
        now = self.model.virtual_now
        for pid, state in self.partitions.items():
            if state.table is None:
                continue
            process = state.table.running
            if process is None:
                continue
            miss = check_deadline(process, now, self.overrides.get(pid))
            if miss is not None:
                self._event(
                    "DEADLINE_MISS",
                    part=pid,
                    process=miss.process_id,
                    elapsed=miss.elapsed,
                    budget=str(miss.budget),
                )

    def _execute(self, step: Step) -> None:
        handler = getattr(self, "_op_" + step.op.lower())
        handler(step)

    # -- memory ops -----------------------------------------------------------

    def _op_alloc(self, step: Step) -> None:
        self._mem(step["partition"]).alloc_region(step["size"], step["label"])

    def _op_start_partition(self, step: Step) -> None:
        self._mem(step["partition"]).start()

    def _op_reset_partition(self, step: Step) -> None:
        self._mem(step["partition"]).reset_partition()
        self._event("PARTITION_RESET", part=step["partition"])

    def _op_write(self, step: Step) -> None:
        mem = self._mem(step["partition"])
        addr = self._addr(step, "region", "offset")
        try:
            mem.checked_write(addr, step["data"], origin=f"step:{self._step_index}")
        except ViolationError as exc:
            self._record(exc.violation)

    def _op_read(self, step: Step) -> None:
        mem = self._mem(step["partition"])
        addr = self._addr(step, "region", "offset")
        try:
            mem.checked_read(addr, step["len"])
        except ViolationError as exc:
            self._record(exc.violation)

    def _op_copy(self, step: Step) -> None:
        mem = self._mem(step["partition"])
        src = self._addr(step, "src_region", "src_offset")
        dst = self._addr(step, "dst_region", "dst_offset")
        length = step["len"]
        try:
            data = mem.checked_read(src, length)
            violation = mem.shadow.check_access(dst.offset, length, AccessKind.WRITE)
            if violation is not None:
                raise ViolationError(mem.name_region(violation))
        except ViolationError as exc:
            self._record(exc.violation)
            return
        mem.data[dst.offset : dst.offset + length] = data
        # initialization state travels with the bytes, unchecked
        copy_propagate(mem.init_shadow, src.offset, dst.offset, length)

    def _op_branch_on(self, step: Step) -> None:
        mem = self._mem(step["partition"])
        addr = self._addr(step, "region", "offset")
        length = step["len"]
        violation = mem.shadow.check_access(addr.offset, length, AccessKind.READ)
        if violation is not None:
            self._record(mem.name_region(violation))
            return
        init_violation = mem.init_shadow.check(addr.offset, length, UseSite.BRANCH)
        if init_violation is not None:
            self._record(init_violation)

    def _op_unpoison_padding(self, step: Step) -> None:
        mem = self._mem(step["partition"])
        base = mem.region(step["region"]).base
        unpoison_padding(mem.init_shadow, self.padding, step["type"], base)

    # -- checked arithmetic ops --------------------------------------------------

    def _operand(self, step: Step, operand, default_width: int, default_signed: bool):
        """Immediate value, or a little-endian load with ARITH use checking.

        Returns None when the bytes cannot be read (the fault is recorded
        and the arithmetic step is skipped).
        """
        if isinstance(operand, int):
            return operand
        mem = self._mem(step["partition"])
        width = operand.get("width", default_width)
        signed = operand.get("signed", default_signed)
        offset = operand["offset"]
        label = operand.get("region")
        if label is not None:
            offset += mem.region(label).base
        violation = mem.shadow.check_access(offset, width, AccessKind.READ)
        if violation is not None:
            self._record(mem.name_region(violation))
            return None
        init_violation = mem.init_shadow.check(offset, width, UseSite.ARITH)
        if init_violation is not None:
            self._record(init_violation)
        return int.from_bytes(mem.data[offset : offset + width], "little", signed=signed)

    def _run_ub(self, step: Step, result) -> None:
        self._ub_checks_this_step += 1
        if isinstance(result, UbViolation):
            self._record(result, partition_hint=step["partition"])

    def _op_arith(self, step: Step) -> None:
        spec = int_spec(step["type"])
        a = self._operand(step, step["a"], spec.width // 8, spec.signed)
        b = self._operand(step, step["b"], spec.width // 8, spec.signed)
        if a is None or b is None:
            return
        result = checked_arith(ArithOp(step["arith"]), a, b, spec, strict=step["strict"])
        self._run_ub(step, result)

    def _op_div(self, step: Step) -> None:
        spec = int_spec(step["type"])
        a = self._operand(step, step["a"], spec.width // 8, spec.signed)
        b = self._operand(step, step["b"], spec.width // 8, spec.signed)
        if a is None or b is None:
            return
        self._run_ub(step, checked_div(a, b, spec))

    def _op_shift(self, step: Step) -> None:
        spec = int_spec(step["type"])
        a = self._operand(step, step["a"], spec.width // 8, spec.signed)
        if a is None:
            return
        self._run_ub(step, checked_shift(a, step["s"], spec, strict=step["strict"]))

    def _op_trunc(self, step: Step) -> None:
        from_spec = int_spec(step["from"])
        to_spec = int_spec(step["to"])
        a = self._operand(step, step["a"], from_spec.width // 8, from_spec.signed)
        if a is None:
            return
        self._run_ub(step, checked_trunc(a, from_spec, to_spec))

    def _op_align_check(self, step: Step) -> None:
        addr = self._addr(step, "region", "offset")
        self._run_ub(step, check_align(addr, step["align"]))

    def _op_null_check(self, step: Step) -> None:
        addr = self._addr(step, "region", "offset")
        self._run_ub(step, check_nonnull(addr))

    def _op_bool_check(self, step: Step) -> None:
        value = self._operand(step, step["a"], 1, False)
        if value is None:
            return
        self._run_ub(step, check_bool(value))

    def _op_enum_check(self, step: Step) -> None:
        value = self._operand(step, step["a"], 4, True)
        if value is None:
            return
        spec = EnumSpec(name=step["enum"], allowed=frozenset(step["allowed"]))
        self._run_ub(step, check_enum(value, spec))

    # -- syscalls ------------------------------------------------------------------

    def _op_syscall(self, step: Step) -> None:
        spec = self.syscalls.get(step["name"])
        if spec is None:
            raise ConfigError(f"no syscall template '{step['name']}'", path=step.path)
        mem = self._mem(step["partition"])
        bindings = {}
        for param, raw in step["bindings"].items():
            offset = raw["offset"]
            label = raw.get("region")
            if label is not None:
                offset += mem.region(label).base
            bindings[param] = ParamBinding(
                addr=mem.addr(offset), length=raw.get("len")
            )
        resolved = resolve_sizes(spec, self.types, bindings)
        shadows = self._shadow_map()
        violation = enforce_pre(resolved, shadows)
        if violation is not None:
            self._record(violation)
            self._event("SYSCALL", part=step["partition"], name=spec.user_name,
                        outcome="blocked")
            return
        succeeded = step["succeed"]
        post_violation = enforce_post(resolved, shadows, succeeded)
        if post_violation is not None:
            self._record(post_violation)
        self._event(
            "SYSCALL",
            part=step["partition"],
            name=spec.user_name,
            outcome="ok" if succeeded else "failed",
        )

    # -- ports ----------------------------------------------------------------------

    def _op_send(self, step: Step) -> None:
        port = self._port(step, QueueingPort)
        mem = self._mem(step["partition"])
        addr = self._addr(step, "region", "offset")
        try:
            port.send(mem, addr, step["len"], self.model.virtual_now)
        except ViolationError as exc:
            self._record(exc.violation)

    def _op_receive(self, step: Step) -> None:
        port = self._port(step, QueueingPort)
        mem = self._mem(step["partition"])
        addr = self._addr(step, "region", "offset")
        try:
            result = port.receive(mem, addr, self.model.virtual_now)
        except ViolationError as exc:
            self._record(exc.violation)
            return
        if result is None:
            self._event("PORT_EMPTY", part=step["partition"], port=step["port"])
            if step.get("expect") is not None:
                self._record(
                    ContractViolation(
                        partition_id=step["partition"],
                        detail=f"port '{step['port']}' was empty, payload expected",
                    )
                )
            return
        if step["expect_empty"]:
            self._record(
                ContractViolation(
                    partition_id=step["partition"],
                    detail=(
                        f"port '{step['port']}' expected empty, delivered "
                        f"{len(result.payload)} bytes"
                    ),
                )
            )
        expected = step.get("expect")
        if expected is not None and result.payload != expected:
            self._record(
                ContractViolation(
                    partition_id=step["partition"],
                    detail=(
                        f"port '{step['port']}' delivered 0x{result.payload.hex()}, "
                        f"expected 0x{expected.hex()}"
                    ),
                )
            )

    def _op_sampling_write(self, step: Step) -> None:
        port = self._port(step, SamplingPort)
        mem = self._mem(step["partition"])
        addr = self._addr(step, "region", "offset")
        try:
            port.write(mem, addr, step["len"], self.model.virtual_now)
        except ViolationError as exc:
            self._record(exc.violation)

    def _op_sampling_read(self, step: Step) -> None:
        port = self._port(step, SamplingPort)
        mem = self._mem(step["partition"])
        addr = self._addr(step, "region", "offset")
        try:
            result = port.read(mem, addr, self.model.virtual_now)
        except ViolationError as exc:
            self._record(exc.violation)
            return
        validity = "EMPTY" if result is None else result.validity.value
        info = {"part": step["partition"], "port": step["port"], "validity": validity}
        if result is not None:
            info["age"] = result.age
        self._event("SAMPLING_READ", **info)
        expected_validity = step.get("expect_validity")
        if expected_validity is not None and expected_validity != validity:
            self._record(
                ContractViolation(
                    partition_id=step["partition"],
                    detail=(
                        f"port '{step['port']}' read {validity}, "
                        f"expected {expected_validity}"
                    ),
                )
            )
        expected = step.get("expect")
        if expected is not None and (result is None or result.payload != expected):
            delivered = "nothing" if result is None else f"0x{result.payload.hex()}"
            self._record(
                ContractViolation(
                    partition_id=step["partition"],
                    detail=(
                        f"port '{step['port']}' delivered {delivered}, "
                        f"expected 0x{expected.hex()}"
                    ),
                )
            )

    # -- identity -------------------------------------------------------------------

    def _op_get_my_id(self, step: Step) -> None:
        state = self._state(step["partition"])
        caller = step["caller"]
        if caller == "main":
            context = MAIN_CONTEXT
        else:
            if state.table is None:
                raise ConfigError(
                    f"partition {step['partition']} has no processes", path=step.path
                )
            context = state.table.get(caller)
        result = get_my_id(context, legacy=self.legacy_get_my_id)
        self._event(
            "GET_MY_ID",
            part=step["partition"],
            caller=caller,
            result=result,
        )
        expected = step.get("expect")
        if expected is not None and expected != result:
            self._record(
                ContractViolation(
                    partition_id=step["partition"],
                    detail=f"get_my_id returned {result}, expected {expected}",
                )
            )

    def _op_idle(self, step: Step) -> None:
        pass  # time advances in run(); nothing executes


def run_scenario(scenario: Scenario, seed: int = 0) -> RunReport:
    return Simulator(scenario, seed=seed).run()


# -- report rendering ------------------------------------------------------------


def report_payload(report: RunReport) -> dict:
    """JSON-ready dict form of a report."""
    return {
        "scenario": report.scenario_name,
        "seed": report.seed,
        "raw_ticks": report.raw_ticks,
        "virtual_ticks": report.virtual_ticks,
        "violations": [
            {
                "kind": v.kind,
                "partition": v.partition,
                "offset": v.offset,
                "size": v.size,
                "access": v.access,
                "step": v.step,
                "detail": v.detail,
                "context": v.context,
                "origin": v.origin,
            }
            for v in report.violations
        ],
        "events": [
            {"kind": e.kind, "t": e.t, "info": dict(e.info)} for e in report.events
        ],
        "verdict": report.verdict,
    }


def render_report(report: RunReport, fmt: str = "text") -> str:
    if fmt == "text":
        lines = [
            f"SCENARIO name={report.scenario_name} raw={report.raw_ticks} "
            f"virtual={report.virtual_ticks}"
        ]
        lines.extend(v.to_line() for v in report.violations)
        lines.extend(e.to_line() for e in report.events)
        lines.append(f"VERDICT {report.verdict}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps(report_payload(report), indent=2, sort_keys=True) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}, expected 'text' or 'json'")


def parse_report_json(text: str) -> RunReport:
    """Inverse of render_report(..., 'json'); used for round-trip checks."""
    payload = json.loads(text)
    return RunReport(
        scenario_name=payload["scenario"],
        seed=payload["seed"],
        raw_ticks=payload["raw_ticks"],
        virtual_ticks=payload["virtual_ticks"],
        violations=tuple(
            ViolationRecord(
                kind=v["kind"],
                partition=v["partition"],
                offset=v["offset"],
                size=v["size"],
                access=v["access"],
                step=v["step"],
                detail=v["detail"],
                context=v["context"],
                origin=v["origin"],
            )
            for v in payload["violations"]
        ),
        events=tuple(
            Event(kind=e["kind"], t=e["t"], info=e["info"]) for e in payload["events"]
        ),
        verdict=payload["verdict"],
    )
