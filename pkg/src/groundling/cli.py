"""Command-line entry points: evaluation runs, scripted scenarios, serving."""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import harness


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def cmd_run(args) -> int:
    config = _load_config(args.config)
    runs = args.runs if args.runs is not None else config.get("runs", 3)
    report = harness.run_category(args.category, seed=args.seed, runs=runs)
    reports = {args.category: report}
    if args.category == "verbs":
        reports["move_right"] = report["move_right"]
    checks = harness.check_criteria(reports)
    for check in checks:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} - {check['criterion']} | {check['detail']}")
    report["criteria"] = checks
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2, default=float))
        print(f"report written to {args.report}")
    return 0 if all(c["passed"] for c in checks) else 1


def cmd_scenario(args) -> int:
    if args.script in ("store-teaching", "store-pretaught"):
        name = args.script.replace("-", "_") + ".json"
        script = json.loads(
            resources.files("groundling.scenarios").joinpath(name).read_text()
        )
    else:
        script = json.loads(Path(args.script).read_text())
    try:
        result = harness.run_scenario(script)
    except harness.AssertionFailure as exc:
        print(f"FAIL - {exc}")
        return 1
    for line in result["transcript"]:
        say = line["say"] or ""
        print(f"> {say}")
        for reply in line["agent"]:
            print(f"  agent: {reply}")
        for action in line["actions"]:
            print(f"  action: {action}")
    print("PASS - scenario assertions hold")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    ui_dir = args.ui
    if ui_dir is None and Path("frontend/index.html").exists():
        ui_dir = "frontend"
    if ui_dir is not None:
        print(f"serving UI from {ui_dir} at /ui/")
    uvicorn.run(create_app(ui_dir=ui_dir), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="harness",
        description="Interactive grounded word learning: evaluation and serving",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an evaluation category")
    run.add_argument(
        "--category", required=True,
        choices=["nouns", "prepositions", "verbs", "combined"],
    )
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--runs", type=int, default=None)
    run.add_argument("--config", default=None, help="JSON config file")
    run.add_argument("--report", default=None, help="write the JSON report here")
    run.set_defaults(fn=cmd_run)

    scenario = sub.add_parser("scenario", help="replay a scripted scenario")
    scenario.add_argument(
        "script",
        help="path to a scenario JSON, or a bundled name "
        "(store-teaching, store-pretaught)",
    )
    scenario.set_defaults(fn=cmd_scenario)

    serve = sub.add_parser("serve", help="serve the session API (and UI when built)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8756)
    serve.add_argument("--ui", default=None, help="directory with the built web client")
    serve.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
