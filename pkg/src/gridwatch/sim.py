"""Deterministic cluster simulator: fake data sources plus a fast-clock run.

The simulator fabricates everything the real agents would read from a
machine room — rectifier telemetry files, scheduler node-state output,
login probes, name resolution, meminfo — as pure functions of
``(scenario, tick)``. Running a scenario wires real agents to those fake
sources, stands up real poll listeners on loopback, and drives the real
monitoring server with an injected clock, so days of operation replay in
seconds while exercising the production code paths end to end.

Determinism contract: identical (scenario, tick) yields identical bytes
from every source, and two runs of the same scenario produce identical
store contents.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum

from . import __version__
from .agent import DEFAULT_CEC_ROOT, Agent, AgentConfig, AgentServer, DataSource
from .config import ConfigError, Section, all_named, first, load_config
from .report import ApiServer, ReportConfig
from .server import ClusterServiceConfig, HostConfig, MemorySink, MonitoringServer, Notification
from .tsdb import Store

__all__ = [
    "BadScenario",
    "ClusterShape",
    "Event",
    "EventKind",
    "Scenario",
    "SimClock",
    "SimDataSource",
    "StackConfig",
    "RunResult",
    "RunSummary",
    "SIM_EPOCH",
    "expected_system_power_w",
    "load_scenario",
    "rectifier_power_w",
    "rectifier_voltage_v",
    "report_config",
    "run",
    "scenario_from_sections",
    "scenario_window",
    "sources_at",
]

# 2021-01-01 00:00:00 UTC; divisible by a whole day so every archive
# interval aligns to tick 0.
SIM_EPOCH = 1_609_459_200

DEFAULT_TICK_S = 5
DEFAULT_IDLE_POWER_PER_NODE_W = 200.0
DEFAULT_HPL_POWER_PER_NODE_W = 700.0
NOMINAL_VOLTAGE_V = 54.0
POWER_NOISE_FRACTION = 0.01
VOLTAGE_NOISE_V = 0.5
BASE_MEM_USED_PCT = 30.0
MEM_NOISE_PCT = 2.0
MEM_TOTAL_KB = 536_870_912  # 512 GiB login nodes

LOGIN_PROBE_TARGET = "login-vip"
DNS_CHECK_NAME = "cluster.local"

# Independent noise streams so e.g. voltage noise never shifts power noise.
_STREAM_POWER = 1
_STREAM_VOLT = 2
_STREAM_MEM = 3

_MASK64 = (1 << 64) - 1


class BadScenario(ValueError):
    """A scenario file or object that breaks the scenario rules."""


class EventKind(Enum):
    POWER_DIP = "power_dip"
    NODE_DRAIN = "node_drain"
    LOGIN_OUTAGE = "login_outage"
    DNS_FAIL = "dns_fail"
    MEM_LEAK = "mem_leak"
    HPL_RUN = "hpl_run"


@dataclass(frozen=True)
class ClusterShape:
    """Static machine layout the scenario plays out on."""

    cabinets: int = 4
    rectifiers_per_cabinet: int = 8
    nodes: int = 512
    partitions: tuple[str, ...] = ("standard",)
    login_hosts: int = 4

    def cabinet_ids(self) -> tuple[str, ...]:
        return tuple(f"x{1000 + i}" for i in range(self.cabinets))

    def login_names(self) -> tuple[str, ...]:
        return tuple(f"login{i + 1}" for i in range(self.login_hosts))

    def partition_nodes(self) -> dict[str, int]:
        """Nodes per partition: split evenly, remainder to the first."""
        per = self.nodes // len(self.partitions)
        extra = self.nodes - per * len(self.partitions)
        out = {}
        for i, name in enumerate(self.partitions):
            out[name] = per + (extra if i == 0 else 0)
        return out


@dataclass(frozen=True)
class Event:
    """One scripted fault/load window; ``to_tick`` is exclusive."""

    kind: EventKind
    from_tick: int
    to_tick: int
    depth_fraction: float = 0.5       # POWER_DIP
    cabinets: tuple[str, ...] = ()    # POWER_DIP; empty = all cabinets
    count: int = 0                    # NODE_DRAIN
    partition: str = ""               # NODE_DRAIN; empty = first partition
    hosts: tuple[str, ...] = ()       # LOGIN_OUTAGE; empty = all logins
    rate_pct_per_h: float = 0.0       # MEM_LEAK
    power_per_node_w: float = DEFAULT_HPL_POWER_PER_NODE_W  # HPL_RUN

    def active(self, tick: int) -> bool:
        return self.from_tick <= tick < self.to_tick


@dataclass(frozen=True)
class Scenario:
    name: str = "unnamed"
    seed: int = 0
    tick_s: int = DEFAULT_TICK_S
    duration_ticks: int = 720
    idle_power_per_node_w: float = DEFAULT_IDLE_POWER_PER_NODE_W
    shape: ClusterShape = field(default_factory=ClusterShape)
    events: tuple[Event, ...] = ()


def validate_scenario(sc: Scenario) -> None:
    """Raise BadScenario on anything out of bounds; no-op when valid."""
    if sc.tick_s < 1 or sc.duration_ticks < 1:
        raise BadScenario("tick_s and duration_ticks must be >= 1")
    if sc.seed < 0:
        raise BadScenario("seed must be >= 0")
    if sc.idle_power_per_node_w <= 0:
        raise BadScenario("idle_power_per_node_w must be positive")
    shape = sc.shape
    if min(shape.cabinets, shape.rectifiers_per_cabinet, shape.nodes, shape.login_hosts) < 1:
        raise BadScenario("shape counts must all be >= 1")
    if not shape.partitions:
        raise BadScenario("shape needs at least one partition")
    for event in sc.events:
        _validate_event(event, sc)


def _validate_event(event: Event, sc: Scenario) -> None:
    shape = sc.shape
    if not (0 <= event.from_tick < event.to_tick <= sc.duration_ticks):
        raise BadScenario(
            f"{event.kind.name} window [{event.from_tick}, {event.to_tick}) "
            f"outside scenario duration {sc.duration_ticks}"
        )
    if event.kind is EventKind.POWER_DIP:
        if not (0.0 < event.depth_fraction <= 1.0):
            raise BadScenario(f"POWER_DIP depth_fraction {event.depth_fraction} not in (0, 1]")
        unknown = set(event.cabinets) - set(shape.cabinet_ids())
        if unknown:
            raise BadScenario(f"POWER_DIP names unknown cabinets: {', '.join(sorted(unknown))}")
    elif event.kind is EventKind.NODE_DRAIN:
        partition = event.partition or shape.partitions[0]
        totals = shape.partition_nodes()
        if partition not in totals:
            raise BadScenario(f"NODE_DRAIN names unknown partition {partition!r}")
        if not (1 <= event.count <= totals[partition]):
            raise BadScenario(
                f"NODE_DRAIN count {event.count} not in [1, {totals[partition]}] for {partition!r}"
            )
    elif event.kind is EventKind.LOGIN_OUTAGE:
        unknown = set(event.hosts) - set(shape.login_names())
        if unknown:
            raise BadScenario(f"LOGIN_OUTAGE names unknown hosts: {', '.join(sorted(unknown))}")
    elif event.kind is EventKind.MEM_LEAK:
        if event.rate_pct_per_h <= 0:
            raise BadScenario(f"MEM_LEAK rate {event.rate_pct_per_h} must be positive")
    elif event.kind is EventKind.HPL_RUN:
        if event.power_per_node_w <= 0:
            raise BadScenario(f"HPL_RUN power_per_node_w {event.power_per_node_w} must be positive")


# -- scenario files --------------------------------------------------------


def load_scenario(path) -> Scenario:
    try:
        sections = load_config(path)
    except ConfigError as exc:
        raise BadScenario(str(exc)) from None
    return scenario_from_sections(sections)


def scenario_from_sections(sections: list[Section]) -> Scenario:
    try:
        shape = _shape_from(first(sections, "shape"))
        sc_sec = first(sections, "scenario")
        events = tuple(_event_from(sec, shape) for sec in all_named(sections, "event"))
        scenario = Scenario(
            name=_get(sc_sec, "get", "name", "unnamed"),
            seed=_get(sc_sec, "get_int", "seed", 0),
            tick_s=_get(sc_sec, "get_int", "tick_s", DEFAULT_TICK_S),
            duration_ticks=_get(sc_sec, "get_int", "duration_ticks", 720),
            idle_power_per_node_w=_get(
                sc_sec, "get_float", "idle_power_per_node_w", DEFAULT_IDLE_POWER_PER_NODE_W
            ),
            shape=shape,
            events=events,
        )
    except ConfigError as exc:
        raise BadScenario(str(exc)) from None
    for sec, event in zip(all_named(sections, "event"), scenario.events):
        try:
            _validate_event(event, scenario)
        except BadScenario as exc:
            raise BadScenario(f"line {sec.line}: {exc}") from None
    validate_scenario(scenario)
    return scenario


def _get(sec: Section | None, accessor: str, key: str, default):
    if sec is None:
        return default
    return getattr(sec, accessor)(key, default)


def _shape_from(sec: Section | None) -> ClusterShape:
    if sec is None:
        return ClusterShape()
    return ClusterShape(
        cabinets=sec.get_int("cabinets", 4),
        rectifiers_per_cabinet=sec.get_int("rectifiers_per_cabinet", 8),
        nodes=sec.get_int("nodes", 512),
        partitions=sec.get_list("partitions", ("standard",)) or ("standard",),
        login_hosts=sec.get_int("login_hosts", 4),
    )


def _event_from(sec: Section, shape: ClusterShape) -> Event:
    raw_kind = sec.require("kind")
    try:
        kind = EventKind[raw_kind.upper()]
    except KeyError:
        options = ", ".join(k.name for k in EventKind)
        raise ConfigError(f"unknown event kind {raw_kind!r} (known: {options})", sec.lines["kind"])
    cabinets = sec.get_list("cabinets")
    if cabinets == ("all",):
        cabinets = ()
    hosts = sec.get_list("hosts")
    if hosts == ("all",):
        hosts = ()
    return Event(
        kind=kind,
        from_tick=sec.get_int("from_tick", 0),
        to_tick=sec.get_int("to_tick", 0),
        depth_fraction=sec.get_float("depth_fraction", 0.5),
        cabinets=cabinets,
        count=sec.get_int("count", 0),
        partition=sec.get("partition", ""),
        hosts=hosts,
        rate_pct_per_h=sec.get_float("rate_pct_per_h", 0.0),
        power_per_node_w=sec.get_float("power_per_node_w", DEFAULT_HPL_POWER_PER_NODE_W),
    )


# -- deterministic noise ----------------------------------------------------


def _mix64(z: int) -> int:
    """One splitmix64 step; avalanches every input bit."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _unit_noise(seed: int, *keys: int) -> float:
    """Pure hash of (seed, keys) onto [-1.0, 1.0)."""
    h = _mix64(seed & _MASK64)
    for k in keys:
        h = _mix64(h ^ (k & _MASK64))
    return (h >> 11) / float(1 << 53) * 2.0 - 1.0


# -- generator-side physics ---------------------------------------------------


def _active(scenario: Scenario, tick: int, kind: EventKind):
    return [e for e in scenario.events if e.kind is kind and e.active(tick)]


def _per_node_power_w(scenario: Scenario, tick: int) -> float:
    for event in _active(scenario, tick, EventKind.HPL_RUN):
        return event.power_per_node_w
    return scenario.idle_power_per_node_w


def rectifier_power_w(scenario: Scenario, tick: int, cab_index: int, rect: int) -> float:
    """Scripted power of one rectifier at one tick (the ground truth)."""
    shape = scenario.shape
    base = _per_node_power_w(scenario, tick) * shape.nodes / (
        shape.cabinets * shape.rectifiers_per_cabinet
    )
    factor = 1.0
    cab_id = shape.cabinet_ids()[cab_index]
    for event in _active(scenario, tick, EventKind.POWER_DIP):
        if not event.cabinets or cab_id in event.cabinets:
            factor *= 1.0 - event.depth_fraction
    noise = 1.0 + POWER_NOISE_FRACTION * _unit_noise(
        scenario.seed, _STREAM_POWER, tick, cab_index, rect
    )
    return base * factor * noise


def rectifier_voltage_v(scenario: Scenario, tick: int, cab_index: int, rect: int) -> float:
    return NOMINAL_VOLTAGE_V + VOLTAGE_NOISE_V * _unit_noise(
        scenario.seed, _STREAM_VOLT, tick, cab_index, rect
    )


def expected_system_power_w(scenario: Scenario, tick: int) -> float:
    """Ground-truth system power, summed rectifier-then-cabinet order.

    This is the same fold order the power check uses, so the two agree
    bit for bit, not just within tolerance.
    """
    shape = scenario.shape
    total = 0.0
    for cab_index in range(shape.cabinets):
        cab_w = 0.0
        for rect in range(shape.rectifiers_per_cabinet):
            cab_w += rectifier_power_w(scenario, tick, cab_index, rect)
        total += cab_w
    return total


def _mem_used_pct(scenario: Scenario, tick: int) -> float:
    used = BASE_MEM_USED_PCT + MEM_NOISE_PCT * _unit_noise(scenario.seed, _STREAM_MEM, tick)
    for event in _active(scenario, tick, EventKind.MEM_LEAK):
        hours = (tick - event.from_tick) * scenario.tick_s / 3600.0
        used += event.rate_pct_per_h * hours
    return min(max(used, 1.0), 99.0)


def _drained_nodes(scenario: Scenario, tick: int, partition: str) -> int:
    total = scenario.shape.partition_nodes()[partition]
    drained = 0
    for event in _active(scenario, tick, EventKind.NODE_DRAIN):
        if (event.partition or scenario.shape.partitions[0]) == partition:
            drained += event.count
    return min(drained, total)


def _sinfo_text(scenario: Scenario, tick: int) -> str:
    """Four-column scheduler summary; totals are conserved across events."""
    hpl = bool(_active(scenario, tick, EventKind.HPL_RUN))
    lines = ["PARTITION AVAIL NODES STATE"]
    for i, partition in enumerate(scenario.shape.partitions):
        total = scenario.shape.partition_nodes()[partition]
        drained = _drained_nodes(scenario, tick, partition)
        rest = total - drained
        alloc = rest if hpl else int(rest * 0.9)
        idle = rest - alloc
        label = partition + ("*" if i == 0 else "")
        for count, state in ((alloc, "alloc"), (idle, "idle"), (drained, "drained")):
            if count > 0:
                lines.append(f"{label} up {count} {state}")
    return "\n".join(lines) + "\n"


def _meminfo_text(scenario: Scenario, tick: int) -> str:
    used_pct = _mem_used_pct(scenario, tick)
    avail_kb = round(MEM_TOTAL_KB * (1.0 - used_pct / 100.0))
    free_kb = round(avail_kb * 0.85)
    return (
        f"MemTotal:       {MEM_TOTAL_KB} kB\n"
        f"MemFree:        {free_kb} kB\n"
        f"MemAvailable:   {avail_kb} kB\n"
    )


def _outage_hosts(scenario: Scenario, tick: int) -> set[str]:
    out: set[str] = set()
    for event in _active(scenario, tick, EventKind.LOGIN_OUTAGE):
        out.update(event.hosts or scenario.shape.login_names())
    return out


# -- the fake DataSource -----------------------------------------------------


class SimDataSource(DataSource):
    """Serves every agent input from the scenario at the clock's tick."""

    def __init__(self, scenario: Scenario, tick_fn):
        self.scenario = scenario
        self.tick_fn = tick_fn
        self._rect_re = re.compile(
            rf"^{re.escape(DEFAULT_CEC_ROOT)}/([A-Za-z0-9_-]+)/rectifiers/(\d+)$"
        )
        self._cab_index = {cab: i for i, cab in enumerate(scenario.shape.cabinet_ids())}

    def read_file(self, path: str) -> bytes:
        tick = self.tick_fn()
        m = self._rect_re.match(path)
        if m:
            cab, rect = m.group(1), int(m.group(2))
            if cab not in self._cab_index or rect >= self.scenario.shape.rectifiers_per_cabinet:
                raise FileNotFoundError(path)
            cab_index = self._cab_index[cab]
            power = rectifier_power_w(self.scenario, tick, cab_index, rect)
            volt = rectifier_voltage_v(self.scenario, tick, cab_index, rect)
            return f"power_w {power!r}\nvoltage_v {volt!r}\n".encode("ascii")
        if path == "/proc/meminfo":
            return _meminfo_text(self.scenario, tick).encode("ascii")
        raise FileNotFoundError(path)

    def run_command(self, argv, timeout=None):
        if argv and argv[0].rsplit("/", 1)[-1] == "sinfo":
            return 0, _sinfo_text(self.scenario, self.tick_fn())
        return 127, ""

    def probe_login(self, target, timeout=None):
        # The probe target is a rotating alias over the login hosts, so it
        # answers as long as any of them is alive.
        outage = _outage_hosts(self.scenario, self.tick_fn())
        alive = set(self.scenario.shape.login_names()) - outage
        return 0 if alive else 255

    def resolve_name(self, name):
        if _active(self.scenario, self.tick_fn(), EventKind.DNS_FAIL):
            raise OSError(f"simulated resolver failure for {name}")
        return ["10.20.0.10", "10.20.0.11"]


def sources_at(scenario: Scenario, tick: int) -> SimDataSource:
    """A data source frozen at one tick; handy for tests and spot checks."""
    if not (0 <= tick < scenario.duration_ticks):
        raise ValueError(f"tick {tick} outside [0, {scenario.duration_ticks})")
    return SimDataSource(scenario, lambda: tick)


class SimClock:
    """Injectable clock: epoch seconds driven by the scenario tick."""

    def __init__(self, scenario: Scenario, tick: int = 0):
        self.tick_s = scenario.tick_s
        self.tick = tick

    def set_tick(self, tick: int) -> None:
        self.tick = tick

    def current_tick(self) -> int:
        return self.tick

    def time(self) -> float:
        return float(SIM_EPOCH + self.tick * self.tick_s)


# -- running the whole stack ---------------------------------------------------


@dataclass(frozen=True)
class StackConfig:
    """How the monitoring stack is laid over a scenario."""

    prefix: str = "hpc"
    poll_every_ticks: int = 12
    retention: str = "1m:14d,10m:90d,1h:2y"
    store_root: str | None = None
    api_bind: tuple[str, int] | None = None
    node_threshold: float | None = None  # default: 94% of configured nodes
    staleness_s: float = 600.0
    gaps_as_down: bool = True
    down_warn: int = 10
    down_crit: int = 100


@dataclass
class RunSummary:
    scenario: str
    seed: int
    ticks: int
    tick_s: int
    polls: int
    hosts_down: int
    notifications: int
    series: int
    samples: int
    wall_s: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "scenario": self.scenario,
                "seed": self.seed,
                "ticks": self.ticks,
                "tick_s": self.tick_s,
                "polls": self.polls,
                "hosts_down": self.hosts_down,
                "notifications": self.notifications,
                "series": self.series,
                "samples": self.samples,
                "wall_s": round(self.wall_s, 3),
            },
            sort_keys=True,
            separators=(",", ":"),
        )


@dataclass
class RunResult:
    summary: RunSummary
    store: Store
    notifications: list[Notification]
    report_cfg: ReportConfig
    window: tuple[int, int]


def scenario_window(scenario: Scenario) -> tuple[int, int]:
    return SIM_EPOCH, SIM_EPOCH + scenario.duration_ticks * scenario.tick_s


def report_config(stack: StackConfig, scenario: Scenario) -> ReportConfig:
    partition = scenario.shape.partitions[0]
    threshold = stack.node_threshold
    if threshold is None:
        threshold = round(0.94 * scenario.shape.nodes)
    return ReportConfig(
        node_series=f"{stack.prefix}.node_cluster.node_state.avail_{partition}",
        login_series=f"{stack.prefix}.login_cluster.login.login_up",
        threshold_nodes=threshold,
        staleness_s=stack.staleness_s,
        gaps_as_down=stack.gaps_as_down,
    )


def _agent_configs(scenario: Scenario, stack: StackConfig) -> list[tuple[str, AgentConfig]]:
    shape = scenario.shape
    configs = [
        (
            "admin",
            AgentConfig(
                checks=("power",),
                cabinets=shape.cabinet_ids(),
                concurrent_checks=False,
            ),
        )
    ]
    for name in shape.login_names():
        configs.append(
            (
                name,
                AgentConfig(
                    checks=("node_state", "login", "dns", "memory"),
                    down_warn=stack.down_warn,
                    down_crit=stack.down_crit,
                    login_target=LOGIN_PROBE_TARGET,
                    dns_name=DNS_CHECK_NAME,
                    concurrent_checks=False,
                ),
            )
        )
    return configs


def _gated_payload_fn(scenario: Scenario, clock: SimClock, host: str, agent: Agent):
    """During a LOGIN_OUTAGE covering the host, the whole box is dark: its
    poll port stops answering with data, exactly like a crashed machine."""

    def payload_fn() -> str:
        if host in _outage_hosts(scenario, clock.current_tick()):
            raise ConnectionAbortedError(f"{host} is down at tick {clock.current_tick()}")
        return agent.payload_text()

    return payload_fn


def run(
    scenario: Scenario,
    stack: StackConfig = StackConfig(),
    store: Store | None = None,
    sinks=(),
    on_tick=None,
) -> RunResult:
    """Play the scenario through the full stack; returns the run artifacts.

    ``on_tick(tick, monitor)`` (when given) is called after each poll
    round, letting tests observe mid-run state such as cluster freshness.
    """
    validate_scenario(scenario)
    started = time.monotonic()
    clock = SimClock(scenario)
    if store is None:
        store = Store(stack.store_root, default_retention=stack.retention)
    sources = SimDataSource(scenario, clock.current_tick)
    collector = MemorySink()
    poll_interval_s = stack.poll_every_ticks * scenario.tick_s

    listeners: list[AgentServer] = []
    threads: list[threading.Thread] = []
    hosts: list[HostConfig] = []
    api = None
    try:
        for name, agent_cfg in _agent_configs(scenario, stack):
            agent = Agent(agent_cfg, sources, clock=clock.time, version=f"sim-{__version__}")
            listener = AgentServer(("127.0.0.1", 0), _gated_payload_fn(scenario, clock, name, agent))
            thread = threading.Thread(
                target=listener.serve_forever,
                kwargs={"poll_interval": 0.05},
                name=f"sim-agent-{name}",
                daemon=True,
            )
            thread.start()
            listeners.append(listener)
            threads.append(thread)
            hosts.append(
                HostConfig(
                    name=name,
                    address=f"127.0.0.1:{listener.address[1]}",
                    poll_interval_s=poll_interval_s,
                    connect_timeout_s=5.0,
                )
            )

        login_names = scenario.shape.login_names()
        clusters = (
            ClusterServiceConfig("login_cluster", login_names, "login"),
            ClusterServiceConfig("node_cluster", login_names, "node_state"),
        )
        monitor = MonitoringServer(
            hosts,
            clusters=clusters,
            sinks=(collector, *sinks),
            store=store,
            prefix=stack.prefix,
            clock=clock.time,
        )
        if stack.api_bind is not None:
            api = ApiServer(stack.api_bind, store, report_config(stack, scenario))
            api_thread = threading.Thread(
                target=api.serve_forever, kwargs={"poll_interval": 0.05},
                name="sim-api", daemon=True,
            )
            api_thread.start()
            threads.append(api_thread)

        for tick in range(0, scenario.duration_ticks, stack.poll_every_ticks):
            clock.set_tick(tick)
            for host_cfg in hosts:
                monitor.process_host(host_cfg)
            if on_tick is not None:
                on_tick(tick, monitor)
        monitor.flush_metrics()
    finally:
        for listener in listeners:
            listener.shutdown()
            listener.server_close()
        if api is not None:
            api.shutdown()
            api.server_close()
        for thread in threads:
            thread.join(timeout=5.0)
        store.flush()

    summary = RunSummary(
        scenario=scenario.name,
        seed=scenario.seed,
        ticks=scenario.duration_ticks,
        tick_s=scenario.tick_s,
        polls=sum(monitor.poll_counts.values()),
        hosts_down=sum(monitor.host_down_counts.values()),
        notifications=len(collector.notifications),
        series=len(store.list_series()),
        samples=store.write_count,
        wall_s=time.monotonic() - started,
    )
    return RunResult(
        summary=summary,
        store=store,
        notifications=list(collector.notifications),
        report_cfg=report_config(stack, scenario),
        window=scenario_window(scenario),
    )
