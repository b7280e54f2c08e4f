"""Fixed-retention time series store with multi-resolution ring archives.

Every series owns the same N archives, finest first, each a ring of
``points`` slots at a fixed ``interval``. A write lands in the finest ring
and immediately re-aggregates the covering slot of every coarser archive
as the arithmetic mean of the finest-resolution points beneath it; a
coarse slot only materializes once at least half of those finest slots
hold data, so a thin trickle of points never fabricates long-term values.

Reads pick the finest archive that still covers the start of the requested
range, so old ranges degrade to coarser resolution instead of vanishing.
Writes older than the finest archive's coverage are refused (TooOld): by
then the finest data needed to re-aggregate the coarser slots is gone.

Persistence is one flat binary file per series (header + fixed-size slot
table, timestamp zero meaning "empty"), loaded wholesale at open and
rewritten on flush/close. With no root directory the store is purely in
memory, which is what the tests and the simulator use.
"""

from __future__ import annotations

import logging
import math
import os
import re
import struct
import threading
from array import array
from dataclasses import dataclass
from pathlib import Path

from .model import MetricSample, valid_series

log = logging.getLogger(__name__)

__all__ = [
    "BadSpec",
    "NonFiniteValue",
    "TooOld",
    "NoSuchSeries",
    "RetentionSpec",
    "parse_retention",
    "Store",
    "DEFAULT_RETENTION",
]

DEFAULT_RETENTION = "10s:2d,1m:30d,1h:1y"

_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400, "y": 365 * 86400}
_TERM_RE = re.compile(r"^(\d+)([smhdy]):(\d+)([smhdy])$")

_MAGIC = b"GWTS"
_VERSION = 1
_HEAD = struct.Struct("<4sHH")
_ARCH = struct.Struct("<II")
_SLOT = struct.Struct("<Qd")

# Hard cap on slots returned by a single read; protects against runaway
# ranges, not a tuning knob.
_MAX_READ_SLOTS = 2_000_000


class BadSpec(ValueError):
    """A retention spec that breaks the archive rules."""


class NonFiniteValue(ValueError):
    """NaN or infinity refused at ingest."""


class TooOld(ValueError):
    """A write older than the finest archive's coverage."""


class NoSuchSeries(KeyError):
    """Read of a series this store has never seen."""


@dataclass(frozen=True)
class RetentionSpec:
    """Archive layout: ``(interval_s, points)`` pairs, finest first."""

    archives: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.archives:
            raise BadSpec("retention needs at least one archive")
        finest_interval = self.archives[0][0]
        prev_interval = 0
        prev_coverage = 0
        for interval, points in self.archives:
            if interval <= 0 or points <= 0:
                raise BadSpec(f"non-positive archive term ({interval}s x {points})")
            if interval <= prev_interval:
                raise BadSpec(f"archive intervals must strictly increase ({interval} after {prev_interval})")
            if interval % finest_interval:
                raise BadSpec(f"{interval} not a multiple of {finest_interval}")
            coverage = interval * points
            if coverage <= prev_coverage:
                raise BadSpec(f"archive coverage must strictly increase ({coverage}s after {prev_coverage}s)")
            prev_interval, prev_coverage = interval, coverage

    def coverage(self, index: int = 0) -> int:
        interval, points = self.archives[index]
        return interval * points


def parse_retention(text: str) -> RetentionSpec:
    """Parse e.g. ``10s:2d,1m:30d,1h:1y`` into a RetentionSpec.

    Each term is ``<slot width>:<total length>``; units s/m/h/d/y with a
    365-day year. Slot counts round down when the length is not an exact
    multiple of the width.
    """
    terms = [t.strip() for t in text.split(",")]
    if not any(terms):
        raise BadSpec("empty retention spec")
    archives = []
    for term in terms:
        m = _TERM_RE.match(term)
        if not m:
            raise BadSpec(f"unparsable retention term {term!r}")
        interval = int(m.group(1)) * _UNITS[m.group(2)]
        duration = int(m.group(3)) * _UNITS[m.group(4)]
        if interval == 0 or duration < interval:
            raise BadSpec(f"retention term {term!r} holds no slots")
        archives.append((interval, duration // interval))
    return RetentionSpec(tuple(archives))


class _Archive:
    """One fixed-size ring. Slot i is valid iff ts[i] equals the aligned
    timestamp being asked about; coarse archives also carry running
    (sum, count) aggregates per slot so downsampling is O(archives) per
    write instead of a rescan of the finest ring."""

    __slots__ = ("interval", "points", "ts", "vals", "agg_t", "agg_sum", "agg_cnt")

    def __init__(self, interval: int, points: int, aggregated: bool):
        self.interval = interval
        self.points = points
        self.ts = array("q", bytes(8 * points))
        self.vals = array("d", bytes(8 * points))
        if aggregated:
            self.agg_t = array("q", bytes(8 * points))
            self.agg_sum = array("d", bytes(8 * points))
            self.agg_cnt = array("q", bytes(8 * points))
        else:
            self.agg_t = self.agg_sum = self.agg_cnt = None

    def align(self, t: int) -> int:
        return t - t % self.interval

    def idx(self, aligned_t: int) -> int:
        return (aligned_t // self.interval) % self.points


class _Series:
    __slots__ = ("name", "retention", "archives", "latest", "dirty")

    def __init__(self, name: str, retention: RetentionSpec):
        self.name = name
        self.retention = retention
        self.archives = [
            _Archive(interval, points, aggregated=(k > 0))
            for k, (interval, points) in enumerate(retention.archives)
        ]
        self.latest = 0  # newest finest-aligned timestamp ever written
        self.dirty = False

    def write(self, t: int, v: float) -> None:
        fin = self.archives[0]
        aligned = fin.align(t)
        if aligned <= 0:
            raise TooOld(f"timestamp {t} is before the epoch")
        if self.latest and self.latest - aligned >= fin.interval * fin.points:
            raise TooOld(
                f"timestamp {t} older than finest coverage "
                f"({fin.interval * fin.points}s behind {self.latest})"
            )
        i = fin.idx(aligned)
        old = fin.vals[i] if fin.ts[i] == aligned else None
        fin.ts[i] = aligned
        fin.vals[i] = v
        if aligned > self.latest:
            self.latest = aligned
        for ar in self.archives[1:]:
            self._aggregate(ar, fin.interval, aligned, v, old)
        self.dirty = True

    @staticmethod
    def _aggregate(ar: _Archive, finest_interval: int, finest_t: int, v: float, old: float | None):
        slot_t = ar.align(finest_t)
        j = ar.idx(slot_t)
        if ar.agg_t[j] != slot_t:
            if slot_t < ar.agg_t[j]:
                # This write belongs to an epoch this ring position has
                # already evicted; its coarse slot is gone for good and must
                # not claw back the newer occupant.
                return
            # The ring position moved on to a new slot; whatever epoch it
            # held before is evicted along with its partial aggregate.
            ar.agg_t[j] = slot_t
            ar.agg_sum[j] = 0.0
            ar.agg_cnt[j] = 0
            ar.ts[j] = 0
        if old is None:
            ar.agg_sum[j] += v
            ar.agg_cnt[j] += 1
        else:
            ar.agg_sum[j] += v - old
        needed = ar.interval // finest_interval
        if ar.agg_cnt[j] * 2 >= needed:
            ar.ts[j] = slot_t
            ar.vals[j] = ar.agg_sum[j] / ar.agg_cnt[j]

    def choose_archive(self, from_t: int) -> _Archive:
        for ar in self.archives:
            if self.latest - ar.interval * ar.points <= from_t:
                return ar
        return self.archives[-1]

    def slot_value(self, ar: _Archive, aligned_t: int) -> float | None:
        i = ar.idx(aligned_t)
        if ar.ts[i] != aligned_t or aligned_t == 0:
            return None
        # A slot can still sit in the ring after the window has slid past
        # it (nothing newer claimed its position yet); treat it as gone.
        if ar.align(self.latest) - aligned_t >= ar.interval * ar.points:
            return None
        return ar.vals[i]

    def rebuild_aggregates(self) -> None:
        """Recompute coarse (sum, count) pairs from the finest ring.

        Used after loading from disk, where only (t, v) slots persist.
        Coarse slots whose finest points already rolled out of the ring
        keep their stored values; they can no longer change anyway because
        writes that old are refused.
        """
        fin = self.archives[0]
        populated = sorted(
            (fin.ts[i], fin.vals[i]) for i in range(fin.points) if fin.ts[i] != 0
        )
        for ar in self.archives[1:]:
            for k in range(ar.points):
                ar.agg_t[k] = 0
                ar.agg_sum[k] = 0.0
                ar.agg_cnt[k] = 0
            needed = ar.interval // fin.interval
            for t, v in populated:
                slot_t = ar.align(t)
                j = ar.idx(slot_t)
                if ar.agg_t[j] != slot_t:
                    ar.agg_t[j] = slot_t
                    ar.agg_sum[j] = 0.0
                    ar.agg_cnt[j] = 0
                ar.agg_sum[j] += v
                ar.agg_cnt[j] += 1


class Store:
    """Series store; in memory by default, file-backed when given a root.

    File-backed mode keeps the working set in memory and rewrites dirty
    series on flush()/close(), so a crash loses at most the samples since
    the last flush. One writer at a time; reads are cheap and locked only
    long enough to copy the requested slots.
    """

    def __init__(self, root: "str | Path | None" = None, default_retention: "str | RetentionSpec" = DEFAULT_RETENTION):
        if isinstance(default_retention, str):
            default_retention = parse_retention(default_retention)
        self._default_retention = default_retention
        self._series: dict[str, _Series] = {}
        self._lock = threading.RLock()
        self._root = Path(root) if root is not None else None
        self.write_count = 0
        if self._root is not None:
            self._root.mkdir(parents=True, exist_ok=True)
            self._load_all()

    # -- writing ---------------------------------------------------------

    def create(self, series: str, retention: "str | RetentionSpec | None" = None) -> None:
        """Create a series explicitly (no-op when it already exists)."""
        with self._lock:
            self._get_or_create(series, retention)

    def write(self, sample: MetricSample) -> None:
        if not valid_series(sample.series):
            raise ValueError(f"bad series path {sample.series!r}")
        v = float(sample.v)
        if not math.isfinite(v):
            raise NonFiniteValue(f"refusing {sample.v!r} for {sample.series}")
        with self._lock:
            s = self._get_or_create(sample.series, None)
            s.write(int(sample.t), v)
            self.write_count += 1

    def _get_or_create(self, series: str, retention) -> _Series:
        s = self._series.get(series)
        if s is None:
            if not valid_series(series):
                raise ValueError(f"bad series path {series!r}")
            if retention is None:
                retention = self._default_retention
            elif isinstance(retention, str):
                retention = parse_retention(retention)
            s = _Series(series, retention)
            self._series[series] = s
        return s

    # -- reading ---------------------------------------------------------

    def read(self, series: str, from_t: int, to_t: int):
        """Return ``(interval, [(slot_t, value_or_None), ...])``.

        Slots are aligned to the chosen archive's interval and cover every
        aligned step from ``from_t`` (rounded down) up to but excluding
        ``to_t``; unpopulated slots read as None.
        """
        if from_t >= to_t:
            raise ValueError(f"empty read range [{from_t}, {to_t})")
        with self._lock:
            s = self._series.get(series)
            if s is None:
                raise NoSuchSeries(series)
            ar = s.choose_archive(from_t)
            start = ar.align(from_t)
            if (to_t - start) // ar.interval > _MAX_READ_SLOTS:
                raise ValueError("read range spans too many slots")
            out = []
            t = start
            while t < to_t:
                out.append((t, s.slot_value(ar, t)))
                t += ar.interval
            return ar.interval, out

    def list_series(self, prefix: str = "") -> list[str]:
        with self._lock:
            return sorted(n for n in self._series if n.startswith(prefix))

    def retention_of(self, series: str) -> RetentionSpec:
        with self._lock:
            s = self._series.get(series)
            if s is None:
                raise NoSuchSeries(series)
            return s.retention

    def dump(self) -> dict:
        """Full snapshot of every ring, for tests and debugging."""
        with self._lock:
            return {
                name: {
                    "retention": s.retention.archives,
                    "latest": s.latest,
                    "archives": [
                        {"interval": ar.interval, "ts": list(ar.ts), "vals": list(ar.vals)}
                        for ar in s.archives
                    ],
                }
                for name, s in self._series.items()
            }

    # -- persistence -----------------------------------------------------

    def flush(self) -> int:
        """Write dirty series to disk; returns how many files were written."""
        if self._root is None:
            return 0
        written = 0
        with self._lock:
            for name, s in self._series.items():
                if s.dirty:
                    self._save(name, s)
                    s.dirty = False
                    written += 1
        return written

    def close(self) -> None:
        self.flush()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _path(self, series: str) -> Path:
        parts = series.split(".")
        return self._root.joinpath(*parts[:-1], parts[-1] + ".dat")

    def _save(self, name: str, s: _Series) -> None:
        path = self._path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = bytearray()
        blob += _HEAD.pack(_MAGIC, _VERSION, len(s.archives))
        for interval, points in s.retention.archives:
            blob += _ARCH.pack(interval, points)
        for ar in s.archives:
            pack = _SLOT.pack
            for i in range(ar.points):
                blob += pack(ar.ts[i], ar.vals[i])
        tmp = path.with_suffix(".dat.tmp")
        tmp.write_bytes(blob)
        os.replace(tmp, path)

    def _load_all(self) -> None:
        for path in sorted(self._root.rglob("*.dat")):
            rel = path.relative_to(self._root)
            name = ".".join(rel.parts[:-1] + (rel.stem,))
            try:
                self._series[name] = self._load(name, path)
            except (OSError, ValueError, struct.error) as exc:
                log.warning("skipping unreadable series file %s: %s", path, exc)

    def _load(self, name: str, path: Path) -> _Series:
        blob = path.read_bytes()
        magic, version, n_archives = _HEAD.unpack_from(blob, 0)
        if magic != _MAGIC or version != _VERSION:
            raise ValueError(f"bad series file header in {path}")
        off = _HEAD.size
        archives = []
        for _ in range(n_archives):
            interval, points = _ARCH.unpack_from(blob, off)
            off += _ARCH.size
            archives.append((interval, points))
        s = _Series(name, RetentionSpec(tuple(archives)))
        for ar in s.archives:
            for i, (t, v) in enumerate(_SLOT.iter_unpack(blob[off : off + _SLOT.size * ar.points])):
                ar.ts[i] = t
                ar.vals[i] = v
            off += _SLOT.size * ar.points
        fin = s.archives[0]
        s.latest = max((t for t in fin.ts), default=0)
        s.rebuild_aggregates()
        return s
