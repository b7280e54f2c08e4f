"""Host agent: built-in checks, external check scripts, TCP poll listener.

Every environment touch (files, subprocesses, ssh probes, name lookups)
goes through a DataSource so the same checks run unmodified against a real
host or against the simulator. The agent holds no state between polls: a
connection triggers a fresh collection and gets one payload back.
"""

from __future__ import annotations

import logging
import os
import re
import socket
import socketserver
import subprocess
import time
from abc import ABC, abstractmethod
from concurrent import futures
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .config import ConfigError, Section, first
from .model import (
    AgentPayload,
    CheckResult,
    CheckState,
    MalformedLine,
    Perfdata,
    parse_check_line,
    serialize_agent_payload,
    worst_state,
)

log = logging.getLogger(__name__)

DEFAULT_AGENT_PORT = 6556
DEFAULT_CEC_ROOT = "/var/volatile/cec"
DEFAULT_CHECK_TIMEOUT_S = 10.0

# Node states that count as unavailable. sinfo reports compound flags
# (e.g. "drained*"); tokens are lowercased and flag suffixes stripped
# before the comparison.
DEFAULT_DOWN_STATES = frozenset(
    {"down", "drained", "draining", "fail", "failing", "maint", "unknown", "inval"}
)
_STATE_FLAGS = "*~#!%$@^+&-"

BUILTIN_CHECKS = ("power", "node_state", "login", "dns", "memory")

_MAX_RECTIFIERS = 1024  # sanity bound when probing numbered rectifier files


class ResolutionError(OSError):
    """Name resolution failed."""


class DataSource(ABC):
    """Everything a check may ask of the host it runs on."""

    @abstractmethod
    def read_file(self, path: str) -> bytes:
        """Return file contents; raises OSError when unreadable."""

    @abstractmethod
    def run_command(self, argv: list[str], timeout: float | None = None) -> tuple[int, str]:
        """Run a command; returns (exit code, stdout). May raise on timeout."""

    @abstractmethod
    def probe_login(self, target: str, timeout: float | None = None) -> int:
        """Attempt an ssh login; returns the exit code (0 = success)."""

    @abstractmethod
    def resolve_name(self, name: str) -> list[str]:
        """Resolve a DNS name to addresses; raises OSError on failure."""


class HostDataSource(DataSource):
    """The real thing: local files, subprocesses, ssh and the resolver."""

    def read_file(self, path: str) -> bytes:
        return Path(path).read_bytes()

    def run_command(self, argv, timeout=None):
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        return proc.returncode, proc.stdout

    def probe_login(self, target, timeout=None):
        wait = timeout if timeout else DEFAULT_CHECK_TIMEOUT_S
        argv = [
            "ssh",
            "-o", "BatchMode=yes",
            "-o", f"ConnectTimeout={max(1, int(wait))}",
            target,
            "exit",
        ]
        try:
            return subprocess.run(argv, capture_output=True, timeout=wait + 5).returncode
        except (subprocess.TimeoutExpired, OSError):
            return 255

    def resolve_name(self, name):
        infos = socket.getaddrinfo(name, None)  # raises socket.gaierror (an OSError)
        return sorted({info[4][0] for info in infos})


@dataclass(frozen=True)
class RectifierReading:
    """One rectifier's instantaneous electrical readings."""

    cabinet: str
    rectifier: int
    power_w: float
    voltage_v: float

    def __post_init__(self):
        if self.power_w < 0 or self.voltage_v < 0:
            raise ValueError(f"negative rectifier reading: {self}")


@dataclass
class PartitionStateCounts:
    """Node counts per normalized scheduler state for one partition."""

    partition: str
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def down(self, down_states) -> int:
        return sum(n for state, n in self.counts.items() if state in down_states)


def normalize_node_state(token: str) -> str:
    state = token.lower().rstrip(_STATE_FLAGS)
    return state or "unknown"


def parse_sinfo(text: str) -> list[PartitionStateCounts]:
    """Parse `PARTITION AVAIL NODES STATE` rows; header and junk rows skipped."""
    order: list[str] = []
    by_name: dict[str, PartitionStateCounts] = {}
    for line in text.splitlines():
        fields = line.split()
        if len(fields) < 4 or fields[0].upper() == "PARTITION":
            continue
        name = fields[0].rstrip("*")
        try:
            n = int(fields[2])
        except ValueError:
            continue
        if not name or n < 0:
            continue
        state = normalize_node_state(fields[3])
        if name not in by_name:
            by_name[name] = PartitionStateCounts(name)
            order.append(name)
        counts = by_name[name].counts
        counts[state] = counts.get(state, 0) + n
    return [by_name[name] for name in order]


def read_rectifiers(sources: DataSource, root: str, cabinet: str) -> list[RectifierReading]:
    """Read `<root>/<cabinet>/rectifiers/<n>` for n = 0, 1, ... until missing.

    Raises OSError when the cabinet controller exposes no rectifier 0 at
    all, i.e. the whole cabinet is unreachable.
    """
    readings = []
    n = 0
    while n < _MAX_RECTIFIERS:
        path = f"{root}/{cabinet}/rectifiers/{n}"
        try:
            raw = sources.read_file(path)
        except OSError:
            if n == 0:
                raise
            break
        readings.append(_parse_rectifier_file(cabinet, n, raw))
        n += 1
    return readings


def _parse_rectifier_file(cabinet: str, n: int, raw: bytes) -> RectifierReading:
    power = voltage = None
    for line in raw.decode("utf-8", errors="replace").splitlines():
        key, _, value = line.partition(" ")
        if key == "power_w":
            power = float(value)
        elif key == "voltage_v":
            voltage = float(value)
    if power is None or voltage is None:
        raise ValueError(f"rectifier file {cabinet}/{n} lacks power_w/voltage_v")
    return RectifierReading(cabinet, n, power, voltage)


def check_power(
    sources: DataSource,
    cabinets,
    *,
    root: str = DEFAULT_CEC_ROOT,
    warn_w: float | None = None,
    crit_w: float | None = None,
) -> CheckResult:
    """Sum rectifier power per cabinet and across the system.

    The system value is the sum of the cabinet values, each of which is the
    sum of its rectifier readings in file order; the identity is exact
    because everything is summed once, in that order. An unreachable
    cabinet raises the state to at least WARN and is named in the summary;
    all cabinets unreachable is CRIT.
    """
    cabinets = list(cabinets)
    reachable: list[tuple[str, list[RectifierReading]]] = []
    unreachable: list[str] = []
    for cab in cabinets:
        try:
            reachable.append((cab, read_rectifiers(sources, root, cab)))
        except (OSError, ValueError) as exc:
            log.debug("cabinet %s unreadable: %s", cab, exc)
            unreachable.append(cab)
    if cabinets and not reachable:
        return CheckResult(
            CheckState.CRIT, "power", [],
            f"all {len(cabinets)} cabinet controllers unreachable",
        )

    perfdata = []
    system_w = 0.0
    cab_perf = []
    volt_perf = []
    for cab, readings in reachable:
        cab_w = 0.0
        for r in readings:
            cab_w += r.power_w
            volt_perf.append(Perfdata(f"volt_{cab}_{r.rectifier}", r.voltage_v))
        cab_perf.append(Perfdata(f"cab_{cab}", cab_w))
        system_w += cab_w
    perfdata.append(Perfdata("system", system_w, warn_w, crit_w))
    perfdata += cab_perf + volt_perf

    states = [CheckState.OK]
    notes = [f"system {system_w:.0f} W from {len(reachable)} cabinets"]
    if unreachable:
        states.append(CheckState.WARN)
        notes.append("unreachable: " + ",".join(unreachable))
    if crit_w is not None and system_w > crit_w:
        states.append(CheckState.CRIT)
        notes.append(f"over {crit_w:.0f} W limit")
    elif warn_w is not None and system_w > warn_w:
        states.append(CheckState.WARN)
        notes.append(f"over {warn_w:.0f} W warning level")
    return CheckResult(worst_state(states), "power", perfdata, "; ".join(notes))


def check_node_state(
    sources: DataSource,
    down_states=DEFAULT_DOWN_STATES,
    *,
    warn_down: int | None = None,
    crit_down: int | None = None,
) -> CheckResult:
    """Count scheduler node states per partition via sinfo."""
    try:
        rc, out = sources.run_command(["sinfo"])
    except Exception as exc:
        return CheckResult(CheckState.UNKNOWN, "node_state", [], f"sinfo failed: {exc}")
    if rc != 0:
        return CheckResult(CheckState.UNKNOWN, "node_state", [], f"sinfo failed (exit {rc})")
    partitions = parse_sinfo(out)
    if not partitions:
        return CheckResult(CheckState.UNKNOWN, "node_state", [], "no parsable sinfo rows")

    perfdata = []
    total_down = 0
    for part in partitions:
        name = _segment(part.partition)
        total = part.total
        down = part.down(down_states)
        for state in sorted(part.counts):
            perfdata.append(Perfdata(f"state_{name}_{_segment(state)}", part.counts[state]))
        perfdata.append(Perfdata(f"down_{name}", down, warn_down, crit_down, 0, total))
        perfdata.append(Perfdata(f"avail_{name}", total - down, None, None, 0, total))
        total_down += down

    state = CheckState.OK
    if crit_down is not None and total_down >= crit_down:
        state = CheckState.CRIT
    elif warn_down is not None and total_down >= warn_down:
        state = CheckState.WARN
    summary = f"{total_down} nodes down across {len(partitions)} partition(s)"
    return CheckResult(state, "node_state", perfdata, summary)


def check_login(sources: DataSource, target: str, *, timeout_s: float = DEFAULT_CHECK_TIMEOUT_S) -> CheckResult:
    """Probe interactive access: exit 0 is OK, anything else is CRIT."""
    try:
        rc = sources.probe_login(target, timeout=timeout_s)
    except Exception as exc:
        log.debug("login probe of %s raised: %s", target, exc)
        rc = 255
    up = 1.0 if rc == 0 else 0.0
    state = CheckState.OK if rc == 0 else CheckState.CRIT
    return CheckResult(state, "login", [Perfdata("login_up", up)], f"ssh probe of {target} exited {rc}")


def check_dns(sources: DataSource, name: str) -> CheckResult:
    """Resolve a name users depend on; failure is CRIT and names the name."""
    try:
        addrs = sources.resolve_name(name)
    except OSError as exc:
        return CheckResult(
            CheckState.CRIT, "dns", [Perfdata("dns_ok", 0.0)],
            f"resolution of {name} failed: {exc}",
        )
    if not addrs:
        return CheckResult(
            CheckState.CRIT, "dns", [Perfdata("dns_ok", 0.0)],
            f"resolution of {name} returned no addresses",
        )
    return CheckResult(
        CheckState.OK, "dns", [Perfdata("dns_ok", 1.0)],
        f"{name} resolves to {len(addrs)} address(es)",
    )


def check_memory(
    sources: DataSource,
    path: str = "/proc/meminfo",
    *,
    warn_pct: float | None = 90.0,
    crit_pct: float | None = 95.0,
) -> CheckResult:
    """Report used memory percentage from a meminfo-format file."""
    try:
        text = sources.read_file(path).decode("utf-8", errors="replace")
    except OSError as exc:
        return CheckResult(CheckState.UNKNOWN, "memory", [], f"cannot read {path}: {exc}")
    fields = {}
    for line in text.splitlines():
        key, _, rest = line.partition(":")
        parts = rest.split()
        if parts:
            try:
                fields[key.strip()] = int(parts[0])
            except ValueError:
                pass
    total = fields.get("MemTotal")
    avail = fields.get("MemAvailable")
    if not total or avail is None:
        return CheckResult(CheckState.UNKNOWN, "memory", [], f"no MemTotal/MemAvailable in {path}")
    used_pct = 100.0 * (1.0 - avail / total)
    state = CheckState.OK
    if crit_pct is not None and used_pct >= crit_pct:
        state = CheckState.CRIT
    elif warn_pct is not None and used_pct >= warn_pct:
        state = CheckState.WARN
    perf = [Perfdata("mem_used_pct", used_pct, warn_pct, crit_pct, 0, 100)]
    return CheckResult(state, "memory", perf, f"{used_pct:.1f}% memory used")


def _segment(text: str) -> str:
    """Sanitize a token for use inside perfdata keys / series paths."""
    return re.sub(r"[^A-Za-z0-9_-]", "_", text) or "x"


def _failed(name: str, reason: str) -> CheckResult:
    return CheckResult(CheckState.UNKNOWN, f"_check_failed_{_segment(name)}", [], reason[:200])


def run_local_checks(
    check_dir: "str | Path | None",
    sources: DataSource,
    *,
    builtins=(),
    timeout_s: float = DEFAULT_CHECK_TIMEOUT_S,
    concurrent: bool = False,
    clock=time.time,
    agent_version: str = __version__,
) -> AgentPayload:
    """Run built-in checks plus executables from check_dir into one payload.

    ``builtins`` is a sequence of (name, thunk) pairs, each thunk returning
    one CheckResult. External executables run through the data source and
    may print several check lines. A check that fails or exceeds the
    timeout is demoted to a single UNKNOWN result named after it; nothing a
    check does can make the collection raise.
    """
    tasks: list[tuple[str, object]] = [(name, thunk) for name, thunk in builtins]
    if check_dir is not None:
        dir_path = Path(check_dir)
        if dir_path.is_dir():
            for script in sorted(dir_path.iterdir()):
                if script.is_file() and os.access(script, os.X_OK):
                    tasks.append((script.name, _script_thunk(sources, script, timeout_s)))
        else:
            log.warning("check_dir %s missing; running built-ins only", check_dir)

    results: list[CheckResult] = []
    if not concurrent:
        for name, thunk in tasks:
            results.extend(_run_one(name, thunk))
    else:
        pool = futures.ThreadPoolExecutor(max_workers=min(8, max(1, len(tasks))))
        pending = [(name, pool.submit(_run_one, name, thunk)) for name, thunk in tasks]
        deadline = time.monotonic() + timeout_s
        for name, fut in pending:
            try:
                results.extend(fut.result(timeout=max(0.0, deadline - time.monotonic())))
            except futures.TimeoutError:
                results.append(_failed(name, f"timed out after {timeout_s:.0f}s"))
            except Exception as exc:  # pragma: no cover - _run_one already catches
                results.append(_failed(name, str(exc)))
        pool.shutdown(wait=False, cancel_futures=True)
    return AgentPayload(agent_version, int(clock()), results)


def _run_one(name: str, thunk) -> list[CheckResult]:
    try:
        out = thunk()
    except subprocess.TimeoutExpired:
        return [_failed(name, "timed out")]
    except Exception as exc:
        return [_failed(name, f"{type(exc).__name__}: {exc}")]
    return out if isinstance(out, list) else [out]


def _script_thunk(sources: DataSource, script: Path, timeout_s: float):
    def run() -> list[CheckResult]:
        rc, out = sources.run_command([str(script)], timeout=timeout_s)
        if rc != 0:
            return [_failed(script.name, f"exited {rc}")]
        results = []
        for line in out.splitlines():
            if not line.strip():
                continue
            try:
                results.append(parse_check_line(line))
            except MalformedLine as exc:
                results.append(
                    CheckResult(
                        CheckState.UNKNOWN,
                        f"_parse_error_{_segment(script.name)}",
                        [],
                        f"bad output line: {str(exc)[:160]}",
                    )
                )
        return results

    return run


@dataclass(frozen=True)
class AgentConfig:
    """Static agent setup, normally read from the [agent] config section."""

    bind: str = "0.0.0.0"
    port: int = DEFAULT_AGENT_PORT
    checks: tuple[str, ...] = ()
    check_dir: str | None = None
    check_timeout_s: float = DEFAULT_CHECK_TIMEOUT_S
    concurrent_checks: bool = True
    cabinets: tuple[str, ...] = ()
    cec_root: str = DEFAULT_CEC_ROOT
    power_warn_w: float | None = None
    power_crit_w: float | None = None
    down_states: frozenset = DEFAULT_DOWN_STATES
    down_warn: int | None = None
    down_crit: int | None = None
    login_target: str = "localhost"
    dns_name: str = "localhost"
    meminfo_path: str = "/proc/meminfo"
    mem_warn_pct: float | None = 90.0
    mem_crit_pct: float | None = 95.0

    def __post_init__(self):
        for name in self.checks:
            if name not in BUILTIN_CHECKS:
                raise ConfigError(f"unknown built-in check {name!r} (have: {', '.join(BUILTIN_CHECKS)})")


def agent_config_from_sections(sections: list[Section]) -> AgentConfig:
    sec = first(sections, "agent")
    if sec is None:
        return AgentConfig()
    cfg = AgentConfig(
        bind=sec.get("bind", "0.0.0.0"),
        port=sec.get_int("port", DEFAULT_AGENT_PORT),
        checks=sec.get_list("checks"),
        check_dir=sec.get("check_dir"),
        check_timeout_s=sec.get_float("check_timeout_s", DEFAULT_CHECK_TIMEOUT_S),
        concurrent_checks=sec.get_bool("concurrent_checks", True),
        cabinets=sec.get_list("cabinets"),
        cec_root=sec.get("cec_root", DEFAULT_CEC_ROOT),
        power_warn_w=sec.get_float("power_warn_w"),
        power_crit_w=sec.get_float("power_crit_w"),
        down_states=frozenset(s.lower() for s in sec.get_list("down_states", tuple(DEFAULT_DOWN_STATES))),
        down_warn=sec.get_int("down_warn"),
        down_crit=sec.get_int("down_crit"),
        login_target=sec.get("login_target", "localhost"),
        dns_name=sec.get("dns_name", "localhost"),
        meminfo_path=sec.get("meminfo_path", "/proc/meminfo"),
        mem_warn_pct=sec.get_float("mem_warn_pct", 90.0),
        mem_crit_pct=sec.get_float("mem_crit_pct", 95.0),
    )
    return cfg


class Agent:
    """Binds a config and a data source into a payload factory."""

    def __init__(self, cfg: AgentConfig, sources: DataSource, *, clock=time.time, version: str = __version__):
        self.cfg = cfg
        self.sources = sources
        self.clock = clock
        self.version = version

    def _builtins(self):
        cfg, src = self.cfg, self.sources
        table = {
            "power": lambda: check_power(
                src, cfg.cabinets, root=cfg.cec_root, warn_w=cfg.power_warn_w, crit_w=cfg.power_crit_w
            ),
            "node_state": lambda: check_node_state(
                src, cfg.down_states, warn_down=cfg.down_warn, crit_down=cfg.down_crit
            ),
            "login": lambda: check_login(src, cfg.login_target, timeout_s=cfg.check_timeout_s),
            "dns": lambda: check_dns(src, cfg.dns_name),
            "memory": lambda: check_memory(
                src, cfg.meminfo_path, warn_pct=cfg.mem_warn_pct, crit_pct=cfg.mem_crit_pct
            ),
        }
        return [(name, table[name]) for name in cfg.checks]

    def build_payload(self) -> AgentPayload:
        return run_local_checks(
            self.cfg.check_dir,
            self.sources,
            builtins=self._builtins(),
            timeout_s=self.cfg.check_timeout_s,
            concurrent=self.cfg.concurrent_checks,
            clock=self.clock,
            agent_version=self.version,
        )

    def payload_text(self) -> str:
        return serialize_agent_payload(self.build_payload())


class _PollHandler(socketserver.BaseRequestHandler):
    def handle(self):
        try:
            text = self.server.payload_fn()
        except Exception as exc:
            log.debug("payload build failed, closing poll connection: %s", exc)
            return
        try:
            self.request.sendall(text.encode("utf-8"))
        except OSError as exc:
            log.debug("poll write failed: %s", exc)


class AgentServer(socketserver.TCPServer):
    """One-shot TCP poll listener: connect, receive payload, close.

    Connections are served one at a time; concurrent pollers queue in the
    listen backlog. Construction fails loudly when the bind is taken.
    """

    allow_reuse_address = True

    def __init__(self, bind: tuple[str, int], payload_fn):
        self.payload_fn = payload_fn
        super().__init__(bind, _PollHandler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address


def serve_poll(bind: tuple[str, int], payload_fn) -> None:
    """Serve polls forever (returns only on shutdown())."""
    with AgentServer(bind, payload_fn) as srv:
        log.info("agent listening on %s:%d", srv.address[0], srv.address[1])
        srv.serve_forever()
