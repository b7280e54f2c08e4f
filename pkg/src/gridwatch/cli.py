"""The ``gridwatch`` command: agent, server, simulator, report and plot.

Exit codes: 0 success, 1 runtime failure (missing data, I/O trouble),
2 unusable configuration or flags. The ``--config`` flag falls back to the
``GRIDWATCH_CONFIG`` environment variable where a config file is needed.
"""

from __future__ import annotations

import argparse
import datetime
import logging
import os
import signal
import sys
import threading

from . import __version__
from .agent import Agent, AgentServer, HostDataSource, agent_config_from_sections
from .config import ConfigError, first, all_named, load_config
from .plot import render_svg, sparkline
from .report import ApiServer, EmptyWindow, ReportConfig, contractual_report
from .server import (
    ClusterServiceConfig,
    FileSink,
    HostConfig,
    MonitoringServer,
    WebhookSink,
)
from .sim import BadScenario, StackConfig, load_scenario
from .sim import run as sim_run
from .tsdb import DEFAULT_RETENTION, NoSuchSeries, Store

log = logging.getLogger(__name__)

ENV_CONFIG = "GRIDWATCH_CONFIG"


def _iso(t: int) -> str:
    return datetime.datetime.fromtimestamp(t, tz=datetime.timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ"
    )


def _parse_bind(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bad bind address {text!r} (want host:port)")
    return host, int(port)


def _need_config(args) -> list:
    path = args.config or os.environ.get(ENV_CONFIG)
    if not path:
        raise ConfigError(f"no config file: pass --config or set {ENV_CONFIG}")
    return load_config(path)


# -- agent -------------------------------------------------------------------


def cmd_agent(args) -> int:
    sections = _need_config(args)
    cfg = agent_config_from_sections(sections)
    bind = args.bind if args.bind is not None else cfg.bind
    port = args.port if args.port is not None else cfg.port
    agent = Agent(cfg, HostDataSource())
    listener = AgentServer((bind, port), agent.payload_text)
    signal.signal(signal.SIGTERM, lambda *_: sys.exit(0))
    log.info("agent listening on %s:%d", *listener.address)
    try:
        listener.serve_forever(poll_interval=0.2)
    finally:
        listener.server_close()
    return 0


# -- server --------------------------------------------------------------------


def _hosts_from(sections) -> list[HostConfig]:
    hosts = []
    for sec in all_named(sections, "host"):
        cfg = HostConfig(
            name=sec.require("name"),
            address=sec.require("address"),
            poll_interval_s=sec.get_int("poll_interval_s", 60),
            connect_timeout_s=sec.get_float("connect_timeout_s", 5.0),
            services_expected=sec.get_list("services_expected"),
        )
        try:
            cfg.endpoint()
        except ValueError as exc:
            raise ConfigError(str(exc), sec.line) from None
        if cfg.poll_interval_s < 1:
            raise ConfigError(f"poll_interval_s must be >= 1 for host {cfg.name}", sec.line)
        hosts.append(cfg)
    if not hosts:
        raise ConfigError("server config needs at least one [host] section")
    return hosts


def _clusters_from(sections, hosts) -> list[ClusterServiceConfig]:
    known = {h.name for h in hosts}
    clusters = []
    for sec in all_named(sections, "cluster"):
        members = sec.get_list("members")
        if not members:
            raise ConfigError(f"[cluster] {sec.get('name')!r} has no members", sec.line)
        missing = set(members) - known
        if missing:
            raise ConfigError(
                f"[cluster] members not in any [host]: {', '.join(sorted(missing))}", sec.line
            )
        clusters.append(
            ClusterServiceConfig(sec.require("name"), tuple(members), sec.require("service"))
        )
    return clusters


def _sinks_from(sections) -> list:
    sinks = []
    for sec in all_named(sections, "sink"):
        kind = sec.require("type")
        if kind == "file":
            sinks.append(FileSink(sec.require("path")))
        elif kind == "webhook":
            sinks.append(WebhookSink(sec.require("url"), sec.get_float("timeout_s", 5.0)))
        else:
            raise ConfigError(f"unknown sink type {kind!r} (known: file, webhook)", sec.line)
    return sinks


def _report_cfg_from(sections) -> ReportConfig | None:
    sec = first(sections, "report")
    if sec is None:
        return None
    return ReportConfig(
        node_series=sec.require("node_series"),
        login_series=sec.require("login_series"),
        threshold_nodes=sec.get_float("threshold_nodes", 0.0),
        staleness_s=sec.get_float("staleness_s", 600.0),
        gaps_as_down=sec.get_bool("gaps_as_down", False),
    )


def cmd_server(args) -> int:
    sections = _need_config(args)
    server_sec = first(sections, "server")
    prefix = "hpc"
    store_root = None
    retention = DEFAULT_RETENTION
    api_bind = None
    parallelism = 8
    staleness_factor = 2.0
    if server_sec is not None:
        prefix = server_sec.get("prefix", prefix)
        store_root = server_sec.get("store_root")
        retention = server_sec.get("retention", retention)
        parallelism = server_sec.get_int("parallelism", parallelism)
        staleness_factor = server_sec.get_float("staleness_factor", staleness_factor)
        raw_bind = server_sec.get("api_bind")
        if raw_bind:
            api_bind = _parse_bind(raw_bind)

    hosts = _hosts_from(sections)
    clusters = _clusters_from(sections, hosts)
    sinks = _sinks_from(sections)
    report_cfg = _report_cfg_from(sections)

    stop = threading.Event()
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    signal.signal(signal.SIGINT, lambda *_: stop.set())

    with Store(store_root, default_retention=retention) as store:
        monitor = MonitoringServer(
            hosts,
            clusters=clusters,
            sinks=sinks,
            store=store,
            prefix=prefix,
            parallelism=parallelism,
            staleness_factor=staleness_factor,
        )
        api = None
        if api_bind is not None:
            api = ApiServer(api_bind, store, report_cfg)
            threading.Thread(
                target=api.serve_forever, kwargs={"poll_interval": 0.2},
                name="api", daemon=True,
            ).start()
            log.info("api listening on %s:%d", *api.address)
        try:
            monitor.run(stop)
        finally:
            if api is not None:
                api.shutdown()
                api.server_close()
    return 0


# -- sim -----------------------------------------------------------------------


def cmd_sim(args) -> int:
    scenario = load_scenario(args.scenario)
    stack = StackConfig(
        prefix=args.prefix,
        poll_every_ticks=args.poll_every_ticks,
        store_root=args.store,
        api_bind=_parse_bind(args.api_bind) if args.api_bind else None,
    )
    result = sim_run(scenario, stack)
    print(result.summary.to_json())
    from_t, to_t = result.window
    log.info(
        "report window: --from %d --to %d (%s .. %s)",
        from_t, to_t, _iso(from_t), _iso(to_t),
    )
    return 0


# -- report ----------------------------------------------------------------------


def cmd_report(args) -> int:
    cfg = ReportConfig(
        node_series=args.node_series,
        login_series=args.login_series,
        threshold_nodes=args.threshold,
        staleness_s=args.staleness_s,
        gaps_as_down=args.gaps_as_down,
    )
    store = Store(args.store)
    report = contractual_report(store, cfg, (args.from_t, args.to_t))
    if args.json:
        print(report.to_json())
    else:
        print(f"window              {_iso(report.from_t)} .. {_iso(report.to_t)}")
        print(f"node series         {report.node_series}")
        print(f"node threshold      {report.threshold_nodes:g} nodes")
        print(f"node availability   {report.node_availability_pct:.3f} %")
        print(f"login availability  {report.login_availability_pct:.3f} %")
        if report.breaches:
            print(f"breaches ({len(report.breaches)}):")
            for b in report.breaches:
                print(f"  {_iso(b.start_t)} .. {_iso(b.end_t)}  {b.kind}")
        else:
            print("breaches            none")
    if args.svg:
        interval, points = store.read(cfg.node_series, args.from_t, args.to_t)
        svg = render_svg(
            {cfg.node_series: points},
            title=f"node availability, threshold {cfg.threshold_nodes:g}",
            threshold=cfg.threshold_nodes,
        )
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(svg)
        print(f"wrote {args.svg}")
    return 0


# -- plot ------------------------------------------------------------------------


def cmd_plot(args) -> int:
    store = Store(args.store)
    series_points = {}
    any_data = False
    for name in args.series:
        _, points = store.read(name, args.from_t, args.to_t)
        series_points[name] = points
        any_data = any_data or any(v is not None for _, v in points)
    if not any_data:
        print("no data in the requested range", file=sys.stderr)
        return 1
    if args.svg:
        svg = render_svg(series_points, title=args.title or ", ".join(args.series))
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(svg)
        print(f"wrote {args.svg}")
    else:
        label_w = max(len(n) for n in series_points)
        for name, points in series_points.items():
            print(f"{name:<{label_w}}  {sparkline(points, args.width)}")
    return 0


# -- wiring ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridwatch",
        description="Desk-scale HPC monitoring stack: agents, poller, metric store, reports.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v info, -vv debug (stderr)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("agent", help="serve local check results to pollers")
    p.add_argument("--config", help=f"agent config file (or ${ENV_CONFIG})")
    p.add_argument("--bind", help="listen address override")
    p.add_argument("--port", type=int, help="listen port override")
    p.set_defaults(func=cmd_agent)

    p = sub.add_parser("server", help="poll agents, evaluate state, store metrics")
    p.add_argument("--config", help=f"server config file (or ${ENV_CONFIG})")
    p.set_defaults(func=cmd_server)

    p = sub.add_parser("sim", help="replay a scripted scenario through the full stack")
    p.add_argument("--scenario", required=True, help="scenario file")
    p.add_argument("--store", help="store directory (omit for in-memory)")
    p.add_argument("--prefix", default="hpc", help="metric series prefix")
    p.add_argument("--poll-every-ticks", type=int, default=12, dest="poll_every_ticks",
                   help="poll cadence in scenario ticks")
    p.add_argument("--api-bind", help="also serve the query API at host:port while running")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("report", help="contractual availability over a window")
    p.add_argument("--store", required=True, help="store directory")
    p.add_argument("--from", dest="from_t", type=int, required=True, help="window start (epoch s)")
    p.add_argument("--to", dest="to_t", type=int, required=True, help="window end (epoch s)")
    p.add_argument("--node-series", default="hpc.node_cluster.node_state.avail_standard",
                   help="series holding available node counts")
    p.add_argument("--login-series", default="hpc.login_cluster.login.login_up",
                   help="series holding the login up/down flag")
    p.add_argument("--threshold", type=float, default=481.0,
                   help="contractual node-count threshold")
    p.add_argument("--staleness-s", dest="staleness_s", type=float, default=600.0,
                   help="gap length that counts as a monitoring outage")
    p.add_argument("--gaps-as-down", dest="gaps_as_down", action="store_true",
                   help="count monitoring gaps as downtime (default: excluded)")
    p.add_argument("--json", action="store_true", help="print canonical JSON instead of text")
    p.add_argument("--svg", help="also render the node series with threshold to this file")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("plot", help="render stored series as sparklines or SVG")
    p.add_argument("--store", required=True, help="store directory")
    p.add_argument("--series", action="append", required=True,
                   help="series name (repeatable)")
    p.add_argument("--from", dest="from_t", type=int, required=True, help="window start (epoch s)")
    p.add_argument("--to", dest="to_t", type=int, required=True, help="window end (epoch s)")
    p.add_argument("--width", type=int, default=72, help="sparkline width in characters")
    p.add_argument("--title", help="SVG title text")
    p.add_argument("--svg", help="write an SVG file instead of text output")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, BadScenario) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NoSuchSeries as exc:
        print(f"error: no such series: {exc.args[0]}", file=sys.stderr)
        return 1
    except EmptyWindow as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
