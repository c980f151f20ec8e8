"""
Operator command line for the S3 slice orchestrator.

Usage examples::

    # create the slice described in a request file (mode picks /nssi or /slices)
    python -m app.cli apply samples/integrated_request.json

    # inventory and per-slice detail
    python -m app.cli list
    python -m app.cli --output json describe embb-video

    # run the demo scenario and export the results
    python -m app.cli scenario samples/demo_scenario.json --csv demo.csv --plot demo.html

Exit codes: 0 success, 1 rejected request (any 4xx) or malformed input file,
2 transport error, server error (5xx) or scenario run failure/timeout.
"""

import argparse
import json
import os
import sys
import time
from typing import Any, List, Optional, Sequence

import requests

from app.models.results import ScenarioResult
from app.services.reporting import format_count, format_mbps, format_ms, report_to_csv, write_utilization_html

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_TRANSPORT = 2

DEFAULT_ENDPOINT = "http://localhost:8000"


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code
        self.message = message


class OrchestratorClient:
    """Thin JSON client over the /api/v1 endpoints"""

    def __init__(self, endpoint: str, tenant: Optional[str] = None, timeout_s: float = 10.0,
                 session: Optional[requests.Session] = None):
        self.base = endpoint.rstrip("/") + "/api/v1"
        self.tenant = tenant
        self.timeout_s = timeout_s
        self.session = session or requests.Session()

    def call(self, method: str, path: str, body: Any = None) -> Any:
        headers = {"X-Tenant": self.tenant} if self.tenant else {}
        try:
            response = self.session.request(method, self.base + path, json=body, headers=headers, timeout=self.timeout_s)
        except requests.RequestException as e:
            raise CliError(EXIT_TRANSPORT, f"cannot reach {self.base}: {e}")

        if response.status_code >= 500:
            raise CliError(EXIT_TRANSPORT, f"server error {response.status_code}: {_reason(response)}")
        if response.status_code == 404:
            raise CliError(EXIT_REJECTED, f"not found: {_reason(response)}")
        if response.status_code >= 400:
            raise CliError(EXIT_REJECTED, f"rejected ({response.status_code}): {_reason(response)}")
        if response.status_code == 204 or not response.content:
            return None
        return response.json()


def _reason(response: requests.Response) -> str:
    try:
        body = response.json()
    except ValueError:
        return response.text
    if isinstance(body, dict) and "code" in body:
        stage = f" [{body['stage']}]" if body.get("stage") else ""
        return f"{body['code']}{stage} {body.get('reason', '')}".strip()
    return json.dumps(body)


def load_json_file(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise CliError(EXIT_REJECTED, f"cannot read {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise CliError(EXIT_REJECTED, f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")


# ============================================================================
# Rendering
# ============================================================================

def render_table(headers: Sequence[str], rows: List[Sequence[Any]]) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _emit(args: argparse.Namespace, data: Any, table: Optional[str] = None) -> None:
    if args.output == "json" or table is None:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(table)


# ============================================================================
# Commands
# ============================================================================

def cmd_apply(client: OrchestratorClient, args: argparse.Namespace) -> int:
    data = load_json_file(args.file)
    mode = (data.get("profile") or {}).get("mode") if isinstance(data, dict) else None
    if mode not in ("Integrated", "Standalone"):
        raise CliError(EXIT_REJECTED, f"{args.file}: profile.mode must be Integrated or Standalone")
    path = "/nssi" if mode == "Integrated" else "/slices"
    result = client.call("POST", path, data)
    _emit(args, result, f"{result['slice_id']}  {result['state']}")
    return EXIT_OK if result["state"] == "Active" else EXIT_REJECTED


def cmd_list(client: OrchestratorClient, args: argparse.Namespace) -> int:
    slices = client.call("GET", "/slices")
    rows = [
        [s["slice_id"], s["mode"], s["service_class"], s["state"],
         format_mbps(s["gbr_mbps"]), format_mbps(s["mbr_mbps"]), ",".join(s["beams"])]
        for s in slices
    ]
    _emit(args, slices, render_table(["SLICE", "MODE", "CLASS", "STATE", "GBR", "MBR", "BEAMS"], rows))
    return EXIT_OK


def cmd_describe(client: OrchestratorClient, args: argparse.Namespace) -> int:
    detail = client.call("GET", f"/slices/{args.slice_id}")
    instance = detail["instance"]
    profile = instance["profile"]
    lines = [
        f"slice:      {profile['slice_id']} ({profile['mode']}, {profile['service_class']})",
        f"state:      {instance['state']}" + (f" ({instance['failure_reason']})" if instance.get("failure_reason") else ""),
        f"qos:        gbr {format_mbps(profile['qos']['gbr_mbps'])}, mbr {format_mbps(profile['qos']['mbr_mbps'])}, "
        f"pdb {format_ms(profile['qos']['pdb_ms'])}",
    ]
    if detail.get("sat_qos"):
        lines.append(f"sat class:  {detail['sat_qos']['class_id']} (weight {detail['sat_qos']['scheduler_weight']})")
    if detail.get("chain"):
        lines.append("chain:      " + " -> ".join(nf["nf_id"] for nf in detail["chain"]["members"]))
    if detail.get("allocation"):
        placement = detail["allocation"]["placement"]
        lines.append("placement:  " + ", ".join(f"{nf}@{host}" for nf, host in sorted(placement.items())))
        lines.append("beams:      " + ", ".join(sorted(detail["allocation"]["beams"])))
    if detail.get("rules"):
        rule_rows = [[r["table"], r["id"], r["priority"], json.dumps(r["match"], sort_keys=True)] for r in detail["rules"]]
        lines.append(render_table(["TABLE", "ID", "PRIO", "MATCH"], rule_rows))
    _emit(args, detail, "\n".join(lines))
    return EXIT_OK


def cmd_delete(client: OrchestratorClient, args: argparse.Namespace) -> int:
    result = client.call("DELETE", f"/slices/{args.slice_id}")
    _emit(args, result, f"{result['slice_id']}  {result['state']}")
    return EXIT_OK


def cmd_modify(client: OrchestratorClient, args: argparse.Namespace) -> int:
    delta = {k: v for k, v in {"gbr_mbps": args.gbr, "mbr_mbps": args.mbr, "pdb_ms": args.pdb}.items() if v is not None}
    if not delta:
        raise CliError(EXIT_REJECTED, "modify needs at least one of --gbr, --mbr, --pdb")
    result = client.call("PATCH", f"/nssi/{args.slice_id}", delta)
    _emit(args, result, f"{result['slice_id']}  {result['state']}")
    return EXIT_OK


def cmd_pool(client: OrchestratorClient, args: argparse.Namespace) -> int:
    view = client.call("GET", "/pool")
    util = {b["beam_id"]: b for b in view["utilization"]["beams"]}
    beam_rows = [
        [b["beam_id"], format_mbps(b["fwd_capacity_mbps"]), format_mbps(b["allocated_gbr_fwd"]),
         f"{util[b['beam_id']]['gbr_fwd']:.0%}", format_mbps(b["rtn_capacity_mbps"]), format_mbps(b["allocated_gbr_rtn"])]
        for b in view["pool"]["beams"]
    ]
    host_rows = [
        [h["host_id"], f"{h['allocated_cpu']}/{h['cpu_units']}", f"{format_count(h['allocated_mem'])}/{format_count(h['mem_mb'])}"]
        for h in view["pool"]["hosts"]
    ]
    table = "\n\n".join([
        render_table(["BEAM", "FWD CAP", "FWD GBR", "FWD USE", "RTN CAP", "RTN GBR"], beam_rows),
        render_table(["HOST", "CPU", "MEM MB"], host_rows),
    ])
    _emit(args, view, table)
    return EXIT_OK


def cmd_scenario(client: OrchestratorClient, args: argparse.Namespace) -> int:
    spec = load_json_file(args.file)
    if not isinstance(spec, dict) or "duration_s" not in spec:
        raise CliError(EXIT_REJECTED, f"{args.file}: a scenario needs duration_s and flows")
    queued = client.call("POST", "/scenario", spec)
    scenario_id = queued["scenario_id"]

    deadline = time.monotonic() + args.timeout
    while True:
        raw = client.call("GET", f"/scenario/{scenario_id}")
        if raw["status"] in ("completed", "failed"):
            break
        if time.monotonic() > deadline:
            raise CliError(EXIT_TRANSPORT, f"scenario {scenario_id} still {raw['status']} after {args.timeout}s")
        time.sleep(args.poll_interval)

    result = ScenarioResult.model_validate(raw)
    if result.status.value == "failed":
        raise CliError(EXIT_TRANSPORT, f"scenario {scenario_id} failed: {result.error}")

    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as f:
            f.write(report_to_csv(result.report, result.verdicts))
    if args.plot:
        write_utilization_html(result.report, args.plot)

    verdicts = {v.slice_id: v for v in result.verdicts}
    rows = []
    for slice_id in sorted(result.report.slices):
        m = result.report.slices[slice_id]
        verdict = verdicts.get(slice_id)
        rows.append([
            slice_id, format_mbps(m.offered_mbps), format_mbps(m.carried_mbps), format_ms(m.mean_delay_ms),
            format_ms(m.p99_delay_ms), f"{m.loss_ratio:.2%}", format_count(m.packets_dropped),
            "-" if verdict is None else ("PASS" if verdict.passed else "FAIL"),
        ])
    table = render_table(["SLICE", "OFFERED", "CARRIED", "MEAN DELAY", "P99 DELAY", "LOSS", "DROPPED", "ISOLATION"], rows)
    _emit(args, result.model_dump(mode="json"), table)
    return EXIT_OK if result.all_passed else EXIT_REJECTED


COMMANDS = {
    "apply": cmd_apply,
    "list": cmd_list,
    "describe": cmd_describe,
    "delete": cmd_delete,
    "modify": cmd_modify,
    "pool": cmd_pool,
    "scenario": cmd_scenario,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="s3ctl", description="S3 slice orchestrator client")
    parser.add_argument("--endpoint", default=os.environ.get("S3_ENDPOINT", DEFAULT_ENDPOINT),
                        help="service base URL (default: $S3_ENDPOINT or %(default)s)")
    parser.add_argument("--tenant", default=os.environ.get("S3_TENANT"), help="tenant name sent as X-Tenant")
    parser.add_argument("--output", choices=["table", "json"], default="table")
    sub = parser.add_subparsers(dest="command", required=True)

    apply = sub.add_parser("apply", help="submit a slice request file")
    apply.add_argument("file")
    sub.add_parser("list", help="list slices")
    describe = sub.add_parser("describe", help="show one slice")
    describe.add_argument("slice_id")
    delete = sub.add_parser("delete", help="deallocate a slice")
    delete.add_argument("slice_id")
    modify = sub.add_parser("modify", help="change the QoS of an Active slice")
    modify.add_argument("slice_id")
    modify.add_argument("--gbr", type=float)
    modify.add_argument("--mbr", type=float)
    modify.add_argument("--pdb", type=float)
    sub.add_parser("pool", help="pool inventory and utilization")
    scenario = sub.add_parser("scenario", help="run an emulation scenario and check isolation")
    scenario.add_argument("file")
    scenario.add_argument("--poll-interval", type=float, default=0.5)
    scenario.add_argument("--timeout", type=float, default=120.0)
    scenario.add_argument("--csv", help="write per-slice metrics as CSV")
    scenario.add_argument("--plot", help="write the beam utilization chart as HTML")
    return parser


def main(argv: Optional[Sequence[str]] = None, session: Optional[requests.Session] = None) -> int:
    args = build_parser().parse_args(argv)
    if not args.endpoint.startswith(("http://", "https://")):
        print(f"error: endpoint must be an http(s) URL, got {args.endpoint!r}", file=sys.stderr)
        return EXIT_REJECTED
    client = OrchestratorClient(args.endpoint, args.tenant, session=session)
    try:
        return COMMANDS[args.command](client, args)
    except CliError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
