"""``crsf`` command line: serve, client, solve, experiment, plot.

Exit codes: 0 success, 1 data error, 2 environment error, 64 usage error.
"""
from __future__ import annotations

import argparse
import asyncio
import errno
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

EXIT_OK = 0
EXIT_DATA = 1
EXIT_ENV = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fail(code: int, msg: str) -> int:
    print(f"crsf: {msg}", file=sys.stderr)
    return code


# serve

def cmd_serve(args) -> int:
    from .service import ConfigError, CrsfServer, load_config

    try:
        config = load_config(args.config)
    except ConfigError as exc:
        return _fail(EXIT_ENV if isinstance(exc.__cause__, OSError) else EXIT_DATA, str(exc))
    overrides = {}
    if args.port is not None:
        overrides["port"] = args.port
    if args.tick:
        overrides["tick_mode"] = True
    if args.solver:
        overrides["solver"] = args.solver
    if overrides:
        from dataclasses import replace
        config = replace(config, **overrides)

    async def main():
        server = CrsfServer(config)
        await server.start()
        await server.serve_forever()

    try:
        asyncio.run(main())
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            return _fail(EXIT_ENV, f"cannot listen on {config.host}:{config.port}: address in use")
        return _fail(EXIT_ENV, f"cannot listen on {config.host}:{config.port}: {exc}")
    except KeyboardInterrupt:
        pass
    return EXIT_OK


# client

def _load_script(path: str):
    from .protocol import ProtocolError, decode_message

    msgs = []
    for no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            msgs.append(decode_message(line.encode("utf-8")))
        except ProtocolError as exc:
            raise ValueError(f"{path}:{no}: {exc}") from None
    return msgs


def _wire_json(msg) -> str:
    from .protocol import encode_message
    return encode_message(msg).decode("utf-8")


def cmd_client(args) -> int:
    from .protocol import MessageType
    from .service import CrsfClient

    try:
        host, port = args.address.rsplit(":", 1)
        port = int(port)
    except ValueError:
        raise UsageError(f"address must be HOST:PORT, got {args.address!r}") from None
    try:
        script = _load_script(args.script)
    except OSError as exc:
        return _fail(EXIT_ENV, f"cannot read {args.script}: {exc}")
    except ValueError as exc:
        return _fail(EXIT_DATA, str(exc))

    async def main() -> int:
        client = await CrsfClient.connect(host, port)
        errors = 0
        try:
            for msg in script:
                reply, notices = await client.request(msg, timeout=args.timeout)
                for n in notices:
                    print(_wire_json(n), flush=True)
                print(_wire_json(reply), flush=True)
                errors += reply.type is MessageType.ERROR
            deadline = time.monotonic() + args.linger
            while (left := deadline - time.monotonic()) > 0:
                try:
                    msg = await client.recv(timeout=left)
                except asyncio.TimeoutError:
                    break
                if msg is None:
                    break
                print(_wire_json(msg), flush=True)
        finally:
            await client.close()
        return EXIT_DATA if errors and args.strict else EXIT_OK

    try:
        return asyncio.run(main())
    except (OSError, asyncio.TimeoutError) as exc:
        return _fail(EXIT_ENV, f"connection to {args.address} failed: {exc!r}")


# solve

def cmd_solve(args) -> int:
    from .instance_io import InstanceParseError, load_instance
    from .solver import Budget, brute_force, solve_baseline, solve_exact, solve_greedy

    try:
        parsed = load_instance(args.instance)
    except OSError as exc:
        return _fail(EXIT_ENV, f"cannot read {args.instance}: {exc}")
    except InstanceParseError as exc:
        return _fail(EXIT_DATA, f"{args.instance}: {exc}")
    inst = parsed.instance
    budget = Budget(args.node_budget, args.time_limit)
    if args.solver == "exact":
        a = solve_exact(inst, budget)
    elif args.solver == "greedy":
        a = solve_greedy(inst)
    elif args.solver == "baseline":
        if parsed.priorities is None:
            return _fail(EXIT_DATA, f"{args.instance}: the baseline solver needs a priorities section")
        a = solve_baseline(inst, parsed.priorities, budget)
    else:
        try:
            a = brute_force(inst)
        except ValueError as exc:
            return _fail(EXIT_DATA, str(exc))
    print(f"objective {a.objective!r}")
    print(f"optimal {str(a.optimal).lower()}")
    for r in range(inst.num_requests):
        m = a.assigned.get(r)
        print(f"{r} -> {m if m is not None else 'unassigned'}")
    return EXIT_OK


# experiment

def cmd_experiment(args) -> int:
    from .sim import EXPERIMENTS, SimConfig, run_experiment, write_csv
    from .sim.plots import render_plots

    names = list(EXPERIMENTS) if args.name == "all" else [args.name]
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(EXIT_ENV, f"cannot create {out}: {exc}")
    budgets = {k: v for k, v in (("node_budget", args.node_budget),
                                 ("baseline_node_budget", args.baseline_node_budget)) if v is not None}
    template = SimConfig(0, 0, rounds=args.rounds, seed=args.seed, scoring_mode=args.scoring_mode,
                         solver=args.solver, **budgets)
    kw = {}
    if args.via_service:
        from .sim.via_service import solve_round_via_service
        kw["round_solver"] = solve_round_via_service
    violations = 0
    cache: dict = {}
    for name in names:
        t0 = time.perf_counter()
        result = run_experiment(name, template, workers=args.workers, record_timing=args.timing,
                                cache=cache, **kw)
        violations += result.dominance_violations
        csv_path = write_csv(result.rows, out / f"{name}.csv")
        print(csv_path, flush=True)
        if result.rows:
            for svg in render_plots(csv_path, out):
                print(svg, flush=True)
        skipped = sum(r.non_optimal_rounds for r in result.rows)
        print(f"# {name}: {len(result.rows)} rows, {time.perf_counter() - t0:.1f}s, "
              f"{skipped} budget-limited solves", file=sys.stderr, flush=True)
    if violations:
        return _fail(EXIT_DATA, f"{violations} rounds where the proposed plan fell below the baseline")
    return EXIT_OK


# plot

def cmd_plot(args) -> int:
    from .sim.plots import PlotError, render_plots

    try:
        paths = render_plots(args.csv, args.out)
    except OSError as exc:
        return _fail(EXIT_ENV, str(exc))
    except (PlotError, ValueError, KeyError) as exc:
        return _fail(EXIT_DATA, str(exc))
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .sim.experiments import EXPERIMENTS

    p = _Parser(prog="crsf", description="Central repository and selection function for shared services.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("serve", help="run the CRSF service")
    s.add_argument("config", help="service config (JSON)")
    s.add_argument("--port", type=int, help="override the configured port")
    s.add_argument("--tick", action="store_true", help="close slots on TICK messages only")
    s.add_argument("--solver", choices=("exact", "greedy", "baseline", "brute"))
    s.set_defaults(func=cmd_serve)

    c = sub.add_parser("client", help="send a scripted message sequence and print every reply")
    c.add_argument("address", help="HOST:PORT of a running service")
    c.add_argument("script", help="file with one JSON message per line")
    c.add_argument("--linger", type=float, default=0.0,
                   help="seconds to keep reading notices after the script")
    c.add_argument("--timeout", type=float, default=30.0, help="per-reply timeout in seconds")
    c.add_argument("--strict", action="store_true", help="exit 1 if any reply is an ERROR")
    c.set_defaults(func=cmd_client)

    v = sub.add_parser("solve", help="solve an instance file")
    v.add_argument("instance")
    v.add_argument("--solver", choices=("exact", "greedy", "baseline", "brute"), default="exact")
    v.add_argument("--node-budget", type=int, default=10**7)
    v.add_argument("--time-limit", type=float, default=30.0, help="seconds; 0 disables")
    v.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run experiment sweeps, writing CSV and SVG")
    e.add_argument("name", choices=(*EXPERIMENTS, "all"))
    e.add_argument("--seed", type=int, default=7)
    e.add_argument("--out", default="results")
    e.add_argument("--rounds", type=int, default=100)
    e.add_argument("--scoring-mode", choices=("raw", "normalized"), default="raw")
    e.add_argument("--solver", choices=("exact", "greedy"), default="exact")
    e.add_argument("--node-budget", type=int, default=None,
                   help="node budget per proposed solve (default: harness default)")
    e.add_argument("--baseline-node-budget", type=int, default=None,
                   help="node budget per baseline solve (default: harness default)")
    e.add_argument("--workers", type=int, default=None, help="threads for rounds (default: CPU count)")
    e.add_argument("--timing", action="store_true", help="fill the mean_solver_ms column")
    e.add_argument("--via-service", action="store_true",
                   help="solve every round through a local CRSF over TCP")
    e.set_defaults(func=cmd_experiment)

    pl = sub.add_parser("plot", help="render SVG figures from an experiment CSV")
    pl.add_argument("csv")
    pl.add_argument("--out", default=None, help="output directory (default: next to the CSV)")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))


if __name__ == "__main__":
    sys.exit(main())
