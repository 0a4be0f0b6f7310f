"""Command line entry points: serve the platform, run harness drills."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional

from .app import Platform
from .config import PlatformConfig
from .errors import PlatformError
from .harness import (
    FaultProfile,
    NO_FAULTS,
    Scenario,
    attack_sim,
    render_table1,
    render_table2,
    run_scenario,
    stress,
    table1,
    table2,
)
from .seeds import apply_seed


def _emit(args, payload, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _report_payload(report) -> dict:
    return report.as_dict()


def cmd_serve(args) -> int:
    from .api import ApiService
    from .http import build_server

    config = PlatformConfig.from_env(sandbox=args.sandbox)
    platform = Platform(config)
    if args.seed:
        apply_seed(platform, args.seed)
    api = ApiService(platform)
    server = build_server(api, host=args.host, port=args.port,
                          static_dir=args.static_dir)
    host, port = server.server_address[:2]
    print(f"securemart listening on http://{host}:{port}"
          f" (sandbox={'on' if args.sandbox else 'off'})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        platform.close()
    return 0


def cmd_harness_run(args) -> int:
    scenario = Scenario.from_file(args.scenario)
    config = PlatformConfig.from_env(sandbox=True)
    platform = Platform(config)
    if args.seed_file:
        apply_seed(platform, args.seed_file)
    try:
        result = run_scenario(platform, scenario, seed=args.seed)
    finally:
        platform.close()
    lines = [f"scenario {scenario.name}: {'PASS' if result.passed else 'FAIL'}"]
    for record in result.step_log:
        flag = "ok " if record.ok else "FAIL"
        lines.append(
            f"  [{flag}] step {record.index} {record.action}: "
            f"expected {record.expected}, got {record.outcome} "
            f"({record.wall_ms:.1f} ms) {record.detail}".rstrip()
        )
    lines.append(result.report.as_text())
    _emit(args, {
        "scenario": scenario.name,
        "passed": result.passed,
        "steps": [r.__dict__ for r in result.step_log],
        "report": _report_payload(result.report),
    }, "\n".join(lines))
    return 0 if result.passed else 1


def cmd_harness_table1(args) -> int:
    result = table1(seed=args.seed, n_users=args.n_users)
    _emit(args, {name: _report_payload(rep) for name, rep in result.items()},
          render_table1(result))
    return 0


def cmd_harness_table2(args) -> int:
    result = table2(seed=args.seed, n_attempts=args.n_attempts)
    payload = {
        "monitoring_off": _report_payload(result["monitoring_off"]),
        "monitoring_on": _report_payload(result["monitoring_on"]),
        "breach_ratio": result["breach_ratio"],
        "target_ratio": result["target_ratio"],
    }
    _emit(args, payload, render_table2(result))
    return 0


def cmd_harness_attack(args) -> int:
    report = attack_sim(n_attempts=args.n_attempts,
                        monitoring_enabled=not args.monitoring_off,
                        seed=args.seed)
    _emit(args, _report_payload(report), report.as_text())
    return 0


def cmd_harness_stress(args) -> int:
    fault = FaultProfile.from_file(args.faults) if args.faults else NO_FAULTS
    report = stress(
        {"concurrent_sessions": args.sessions, "duration_s": args.duration},
        fault=fault,
        seed=args.seed,
    )
    _emit(args, _report_payload(report), report.as_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="securemart")
    parser.add_argument("--json", action="store_true",
                        help="emit machine-readable JSON instead of text")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--seed", help="seed fixture JSON to load at startup")
    serve.add_argument("--sandbox", action="store_true",
                       help="enable dev outbox, wallet simulator, fixture issuer")
    serve.add_argument("--static-dir", help="directory served under /app")
    serve.set_defaults(func=cmd_serve)

    harness = sub.add_parser("harness", help="metrics and resilience drills")
    hsub = harness.add_subparsers(dest="harness_command", required=True)

    run = hsub.add_parser("run", help="execute a scripted scenario")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--seed-file", help="seed fixture JSON to load first")
    run.set_defaults(func=cmd_harness_run)

    t1 = hsub.add_parser("table1", help="usability model, both flow profiles")
    t1.add_argument("--seed", type=int, default=7)
    t1.add_argument("--n-users", type=int, default=200)
    t1.set_defaults(func=cmd_harness_table1)

    t2 = hsub.add_parser("table2", help="credential stuffing, monitoring on vs off")
    t2.add_argument("--seed", type=int, default=7)
    t2.add_argument("--n-attempts", type=int, default=1000)
    t2.set_defaults(func=cmd_harness_table2)

    atk = hsub.add_parser("attack", help="one credential-stuffing arm")
    atk.add_argument("--seed", type=int, default=7)
    atk.add_argument("--n-attempts", type=int, default=1000)
    atk.add_argument("--monitoring-off", action="store_true")
    atk.set_defaults(func=cmd_harness_attack)

    st = hsub.add_parser("stress", help="concurrent load with invariant gate")
    st.add_argument("--sessions", type=int, default=100)
    st.add_argument("--duration", type=float, default=30.0)
    st.add_argument("--faults", help="fault profile JSON file")
    st.add_argument("--seed", type=int, default=7)
    st.set_defaults(func=cmd_harness_stress)

    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except PlatformError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
