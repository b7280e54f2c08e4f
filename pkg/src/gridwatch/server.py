"""Central poller: polls agents, tracks service state, forwards metrics.

One poll is a TCP connect to the agent, a full read to EOF, a parse, and a
transactional apply: service records updated, every perfdata value queued
for the series store as ``<prefix>.<host>.<service>.<key>``, one
notification per state transition, and cluster services re-evaluated.
Cluster services republish the freshest non-stale member's result under
the cluster name, so a service survives individual host outages.
"""

from __future__ import annotations

import json
import logging
import re
import socket
import threading
import time
import urllib.request
from collections import Counter, deque
from concurrent import futures
from dataclasses import dataclass, field
from pathlib import Path

from .model import (
    AgentPayload,
    CheckResult,
    CheckState,
    EmptyPayload,
    MetricSample,
    parse_agent_payload,
)
from .tsdb import Store, TooOld

log = logging.getLogger(__name__)

DEFAULT_POLL_INTERVAL_S = 60
DEFAULT_PARALLELISM = 8
DEFAULT_STALENESS_FACTOR = 2.0
DEFAULT_BUFFER_CAPACITY = 10_000
DEFAULT_HISTORY_LIMIT = 256
DEFAULT_PREFIX = "hpc"

_SEG_RE = re.compile(r"[^A-Za-z0-9_-]")


def _segment(text: str) -> str:
    return _SEG_RE.sub("_", text) or "x"


@dataclass(frozen=True)
class HostConfig:
    """One polled host."""

    name: str
    address: str  # "host:port"
    poll_interval_s: int = DEFAULT_POLL_INTERVAL_S
    connect_timeout_s: float = 5.0
    services_expected: tuple[str, ...] = ()

    def endpoint(self) -> tuple[str, int]:
        host, sep, port = self.address.rpartition(":")
        if not sep or not host:
            raise ValueError(f"bad address {self.address!r} for host {self.name} (want host:port)")
        return host, int(port)


@dataclass(frozen=True)
class ClusterServiceConfig:
    """A service aggregated across member hosts under a pseudo-host name."""

    name: str
    member_hosts: tuple[str, ...]
    service: str


@dataclass(frozen=True)
class HostDown:
    """Returned by poll_host when the agent cannot be reached or read."""

    host: str
    reason: str


@dataclass
class ServiceRecord:
    """Latest known result for one (host, service) pair."""

    host: str
    service: str
    last_result: CheckResult
    last_seen_t: float
    stale: bool = False
    state_history: deque = field(default_factory=lambda: deque(maxlen=DEFAULT_HISTORY_LIMIT))


@dataclass(frozen=True)
class Notification:
    """Emitted exactly when a service changes state."""

    t: int
    host: str
    service: str
    old_state: CheckState
    new_state: CheckState
    summary: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "host": self.host,
                "service": self.service,
                "old": self.old_state.name,
                "new": self.new_state.name,
                "summary": self.summary,
            },
            sort_keys=True,
            separators=(",", ":"),
        )


class FileSink:
    """Appends one JSON notification per line."""

    def __init__(self, path):
        self.path = Path(path)
        self.name = f"file:{self.path}"

    def deliver(self, notification: Notification) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(notification.to_json() + "\n")


class WebhookSink:
    """POSTs each notification as JSON; any non-2xx response is a failure."""

    def __init__(self, url: str, timeout_s: float = 5.0):
        self.url = url
        self.timeout_s = timeout_s
        self.name = f"webhook:{url}"

    def deliver(self, notification: Notification) -> None:
        req = urllib.request.Request(
            self.url,
            data=notification.to_json().encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
            if not (200 <= resp.status < 300):
                raise OSError(f"webhook answered {resp.status}")


class MemorySink:
    """Collects notifications in a list; test and summary helper."""

    def __init__(self):
        self.notifications: list[Notification] = []
        self.name = "memory"

    def deliver(self, notification: Notification) -> None:
        self.notifications.append(notification)


def dispatch(notification: Notification, sinks, failures: Counter | None = None) -> int:
    """Deliver to every sink; a failing sink never blocks the others.

    Returns the number of sinks that failed; ``failures`` (when given)
    accumulates counts per sink name.
    """
    failed = 0
    for sink in sinks:
        try:
            sink.deliver(notification)
        except Exception as exc:
            failed += 1
            name = getattr(sink, "name", repr(sink))
            if failures is not None:
                failures[name] += 1
            log.warning("notification sink %s failed: %s", name, exc)
    return failed


class MetricBuffer:
    """Bounded FIFO between the poller and the store.

    Overflow drops the oldest sample and counts it; a transient store
    error leaves the remaining samples queued for the next flush, while
    samples the store permanently refuses are dropped and counted.
    """

    def __init__(self, capacity: int = DEFAULT_BUFFER_CAPACITY):
        self.capacity = capacity
        self._q: deque[MetricSample] = deque()
        self._lock = threading.Lock()
        self.dropped = 0
        self.rejected = 0

    def __len__(self):
        return len(self._q)

    def push(self, sample: MetricSample) -> None:
        with self._lock:
            if len(self._q) >= self.capacity:
                self._q.popleft()
                self.dropped += 1
            self._q.append(sample)

    def flush(self, store: Store) -> int:
        written = 0
        with self._lock:
            while self._q:
                sample = self._q[0]
                try:
                    store.write(sample)
                except (TooOld, ValueError) as exc:
                    self.rejected += 1
                    log.warning("store refused %s: %s", sample.series, exc)
                    self._q.popleft()
                    continue
                except Exception as exc:
                    log.warning("store write failed, will retry: %s", exc)
                    break
                self._q.popleft()
                written += 1
        return written


class MonitoringServer:
    """Holds the service-record table and drives polls end to end."""

    def __init__(
        self,
        hosts,
        clusters=(),
        sinks=(),
        store: Store | None = None,
        *,
        prefix: str = DEFAULT_PREFIX,
        clock=time.time,
        parallelism: int = DEFAULT_PARALLELISM,
        staleness_factor: float = DEFAULT_STALENESS_FACTOR,
        history_limit: int = DEFAULT_HISTORY_LIMIT,
        buffer_capacity: int = DEFAULT_BUFFER_CAPACITY,
    ):
        self.hosts = {h.name: h for h in hosts}
        self.clusters = tuple(clusters)
        self.sinks = tuple(sinks)
        self.store = store if store is not None else Store()
        self.prefix = prefix
        self.clock = clock
        self.parallelism = parallelism
        self.staleness_factor = staleness_factor
        self.history_limit = history_limit
        self.buffer = MetricBuffer(buffer_capacity)
        self.sink_failures: Counter = Counter()
        self._records: dict[tuple[str, str], ServiceRecord] = {}
        self._cluster_records: dict[tuple[str, str], ServiceRecord] = {}
        self._lock = threading.RLock()
        self._poll_counts: Counter = Counter()
        self._host_down_counts: Counter = Counter()
        self._reported_drops = 0

    # -- polling ---------------------------------------------------------

    def poll_host(self, cfg: HostConfig) -> "AgentPayload | HostDown":
        """One poll transaction: connect, read to EOF, parse."""
        try:
            endpoint = cfg.endpoint()
        except ValueError as exc:
            return HostDown(cfg.name, str(exc))
        try:
            with socket.create_connection(endpoint, timeout=cfg.connect_timeout_s) as sock:
                sock.settimeout(cfg.connect_timeout_s)
                chunks = []
                while True:
                    block = sock.recv(65536)
                    if not block:
                        break
                    chunks.append(block)
        except OSError as exc:
            return HostDown(cfg.name, str(exc) or type(exc).__name__)
        try:
            return parse_agent_payload(b"".join(chunks))
        except EmptyPayload:
            return HostDown(cfg.name, "empty payload")

    def apply_payload(self, payload: AgentPayload, host: str) -> list[Notification]:
        """Apply one payload: update records, queue metrics, emit transitions."""
        now = self.clock()
        notifications: list[Notification] = []
        with self._lock:
            for result in payload.results:
                notifications.extend(self._apply_result(self._records, host, result, now))
        return notifications

    def _apply_result(self, table, host, result, now) -> list[Notification]:
        key = (host, result.service)
        record = table.get(key)
        old = record.last_result.state if record is not None else None
        if record is None:
            record = ServiceRecord(
                host=host,
                service=result.service,
                last_result=result,
                last_seen_t=now,
                state_history=deque(maxlen=self.history_limit),
            )
            table[key] = record
        record.last_result = result
        record.last_seen_t = now
        record.stale = False
        if not record.state_history or record.state_history[-1][1] != result.state:
            if not record.state_history or now > record.state_history[-1][0]:
                record.state_history.append((now, result.state))
        for perf in result.perfdata:
            series = ".".join(
                (self.prefix, _segment(host), _segment(result.service), _segment(perf.key))
            )
            self.buffer.push(MetricSample(series, int(now), perf.value))
        if old is not None and old != result.state:
            return [Notification(int(now), host, result.service, old, result.state, result.summary)]
        return []

    def mark_host_stale(self, host: str) -> None:
        with self._lock:
            for (h, _), record in self._records.items():
                if h == host:
                    record.stale = True

    def service_stale(self, host: str, service: str, now: float | None = None) -> bool:
        with self._lock:
            record = self._records.get((host, service))
            if record is None:
                return True
            return self._is_stale(record, self.clock() if now is None else now)

    def _is_stale(self, record: ServiceRecord, now: float) -> bool:
        if record.stale:
            return True
        interval = DEFAULT_POLL_INTERVAL_S
        host = self.hosts.get(record.host)
        if host is not None:
            interval = host.poll_interval_s
        return (now - record.last_seen_t) > self.staleness_factor * interval

    # -- clusters --------------------------------------------------------

    def cluster_state(self, cluster: ClusterServiceConfig) -> CheckResult:
        """Freshest non-stale member's result; UNKNOWN when nobody is fresh.

        Ties on freshness go to the lexicographically smallest host so the
        choice is deterministic.
        """
        now = self.clock()
        with self._lock:
            best: ServiceRecord | None = None
            for member in sorted(cluster.member_hosts):
                record = self._records.get((member, cluster.service))
                if record is None or self._is_stale(record, now):
                    continue
                if best is None or record.last_seen_t > best.last_seen_t:
                    best = record
        if best is None:
            return CheckResult(CheckState.UNKNOWN, cluster.service, [], "no fresh member report")
        return best.last_result

    def evaluate_cluster(self, cluster: ClusterServiceConfig) -> list[Notification]:
        """Re-evaluate one cluster service and record it under the cluster name."""
        result = self.cluster_state(cluster)
        now = self.clock()
        with self._lock:
            return self._apply_result(self._cluster_records, cluster.name, result, now)

    # -- the full poll transaction ----------------------------------------

    def process_host(self, cfg: HostConfig) -> list[Notification]:
        got = self.poll_host(cfg)
        with self._lock:
            self._poll_counts[cfg.name] += 1
        if isinstance(got, HostDown):
            with self._lock:
                self._host_down_counts[cfg.name] += 1
            log.debug("host %s down: %s", cfg.name, got.reason)
            self.mark_host_stale(cfg.name)
            notifications = []
        else:
            notifications = self.apply_payload(got, cfg.name)
        for cluster in self.clusters:
            if cfg.name in cluster.member_hosts:
                notifications.extend(self.evaluate_cluster(cluster))
        self.flush_metrics()
        for n in notifications:
            dispatch(n, self.sinks, self.sink_failures)
        return notifications

    def flush_metrics(self) -> int:
        written = self.buffer.flush(self.store)
        if self.buffer.dropped > self._reported_drops:
            self._reported_drops = self.buffer.dropped
            try:
                self.store.write(
                    MetricSample(
                        f"{self.prefix}.monitor.buffer_dropped",
                        int(self.clock()),
                        float(self.buffer.dropped),
                    )
                )
            except Exception as exc:  # the counter metric must never break a poll
                log.debug("could not record drop counter: %s", exc)
        return written

    @property
    def poll_counts(self) -> dict[str, int]:
        with self._lock:
            return dict(self._poll_counts)

    @property
    def host_down_counts(self) -> dict[str, int]:
        with self._lock:
            return dict(self._host_down_counts)

    def records_snapshot(self) -> dict[tuple[str, str], CheckResult]:
        with self._lock:
            merged = {}
            for key, record in self._records.items():
                merged[key] = record.last_result
            for key, record in self._cluster_records.items():
                merged[key] = record.last_result
            return merged

    def state_history(self, host: str, service: str) -> list[tuple[float, CheckState]]:
        with self._lock:
            table = self._cluster_records if (host, service) in self._cluster_records else self._records
            record = table.get((host, service))
            return list(record.state_history) if record else []

    # -- scheduling --------------------------------------------------------

    def run(self, stop: threading.Event, sleep=time.sleep) -> None:
        """Poll every host on its own cadence until ``stop`` is set.

        Polls run on a bounded worker pool; a host whose poll is still in
        flight is skipped, so one stuck host can never stall the others.
        Pending metric writes are flushed before returning.
        """
        if not self.hosts:
            raise ValueError("no hosts configured")
        pool = futures.ThreadPoolExecutor(max_workers=self.parallelism, thread_name_prefix="poll")
        in_flight: set[str] = set()
        guard = threading.Lock()
        next_due = {name: self.clock() for name in self.hosts}
        quantum = max(0.05, min(1.0, min(h.poll_interval_s for h in self.hosts.values()) / 4))

        def work(cfg: HostConfig):
            try:
                self.process_host(cfg)
            except Exception:
                log.exception("poll of %s failed", cfg.name)
            finally:
                with guard:
                    in_flight.discard(cfg.name)

        try:
            while not stop.is_set():
                now = self.clock()
                for name, cfg in self.hosts.items():
                    if now < next_due[name]:
                        continue
                    with guard:
                        if name in in_flight:
                            continue
                        in_flight.add(name)
                    next_due[name] = now + cfg.poll_interval_s
                    pool.submit(work, cfg)
                sleep(quantum)
        finally:
            pool.shutdown(wait=True)
            self.flush_metrics()


def run_scheduler(hosts, clusters, sinks, store, *, stop: threading.Event | None = None, **kwargs) -> MonitoringServer:
    """Convenience wrapper: build a MonitoringServer and run its loop."""
    server = MonitoringServer(hosts, clusters, sinks, store, **kwargs)
    server.run(stop if stop is not None else threading.Event())
    return server
