"""Command-line front door.

Subcommands: ``check`` one node/incentive, ``analyze`` a whole file,
``witness`` a criterion into a concrete model file, ``fair`` a protected
attribute, and ``optimal-policy`` for the action-value summary.

Exit codes are a stable contract:

* 0   success / incentive absent / fair optimal policy exists
* 10  incentive present / no fair optimal policy
* 11  undecided (enumeration cap exceeded)
* 12  witness refused: graphical criterion not satisfied
* 2   usage or parse errors

Output is plain text, JSON (schema ``incent/1``), or DOT.  Analysis is
fully deterministic: identical inputs and flags produce byte-identical
output.  No color is ever emitted, so ``NO_COLOR`` is honored trivially.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .criteria import IncentiveKind, criterion
from .dsl import ParseFailure, parse_model, serialize_model
from .export import assemble_report, export_dot, export_report_json, _jsonable
from .fairness import exists_fair_optimal_policy, is_counterfactually_fair
from .graph import Cid
from .incentives import semantic_check
from .model import Scim
from .policy import CapExceeded, enumerate_optimal_policies, format_count, \
    optimal_policy_set, q_table
from .witness import WitnessError, build_control_witness, build_response_witness

EXIT_OK = 0
EXIT_PRESENT = 10
EXIT_UNDECIDED = 11
EXIT_NO_WITNESS = 12
EXIT_USAGE = 2


def _load(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None
    try:
        return parse_model(text, filename=path)
    except ParseFailure as exc:
        for err in exc.errors:
            print(str(err), file=sys.stderr)
        return None


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json_block(payload: dict) -> str:
    import json

    return json.dumps(payload, indent=2) + "\n"


def cmd_check(args) -> int:
    parsed = _load(args.input)
    if parsed is None:
        return EXIT_USAGE
    graph = parsed.graph if isinstance(parsed, Scim) else parsed
    if args.node not in graph:
        print(f"error: unknown node {args.node}", file=sys.stderr)
        return EXIT_USAGE
    kind = IncentiveKind(args.incentive)
    payload: dict = {
        "schema": "incent/1",
        "model": parsed.name if isinstance(parsed, Scim) else graph.name,
        "node": args.node,
        "incentive": kind.value,
        "mode": args.mode,
    }

    graphical = None
    if args.mode in ("graphical", "both"):
        verdict = criterion(graph, args.node, kind)
        graphical = verdict.compatible
        payload["graphical"] = verdict.compatible
        if verdict.evidence:
            payload["evidence"] = _jsonable(verdict.evidence)
        if verdict.reason:
            payload["note"] = verdict.reason

    semantic = None
    if args.mode in ("semantic", "both"):
        if not isinstance(parsed, Scim):
            print("error: semantic mode requires a scim", file=sys.stderr)
            return EXIT_USAGE
        sv = semantic_check(
            parsed, args.node, kind, cap=args.cap, soft_cap=args.soft_cap
        )
        semantic = sv.present
        payload["semantic"] = "undecided" if sv.present is None else sv.present
        if sv.present is None:
            payload["reason"] = "cap_exceeded"
        if sv.evidence:
            payload["semantic_evidence"] = _jsonable(sv.evidence)

    decisive = semantic if args.mode in ("semantic", "both") else graphical
    if args.format == "json":
        _emit(_json_block(payload), args.output)
    else:
        lines = [f"{kind.value} incentive on {args.node}:"]
        if graphical is not None:
            word = "compatible" if graphical else "not compatible"
            lines.append(f"  graphical: {word}")
        if semantic is not None or args.mode in ("semantic", "both"):
            word = "undecided" if semantic is None else ("present" if semantic else "absent")
            lines.append(f"  semantic:  {word}")
        _emit("\n".join(lines) + "\n", args.output)
    if decisive is None:
        return EXIT_UNDECIDED
    return EXIT_PRESENT if decisive else EXIT_OK


def _text_report(report: dict) -> str:
    lines = [f"model: {report['model']}", f"decision: {report['decision']}"]
    for entry in report["nodes"]:
        if not entry["incentives"]:
            continue
        lines.append(f"{entry['name']} [{entry['kind']}]")
        for kind, cell in entry["incentives"].items():
            bits = [f"graphical={'yes' if cell['graphical'] else 'no'}"]
            if "semantic" in cell:
                s = cell["semantic"]
                bits.append(f"semantic={s if isinstance(s, str) else ('yes' if s else 'no')}")
            lines.append(f"  {kind:12s} {'  '.join(bits)}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    parsed = _load(args.input)
    if parsed is None:
        return EXIT_USAGE
    if isinstance(parsed, Scim):
        graph, model = parsed.graph, parsed
    else:
        graph, model = parsed, None
    report = assemble_report(graph, model, cap=args.cap, soft_cap=args.soft_cap)
    if args.format == "json":
        _emit(export_report_json(report), args.output)
    elif args.format == "dot":
        _emit(export_dot(graph, report), args.output)
    else:
        _emit(_text_report(report), args.output)
    return EXIT_OK


def cmd_witness(args) -> int:
    parsed = _load(args.input)
    if parsed is None:
        return EXIT_USAGE
    graph = parsed.graph if isinstance(parsed, Scim) else parsed
    if args.node not in graph:
        print(f"error: unknown node {args.node}", file=sys.stderr)
        return EXIT_USAGE
    builder = (
        build_control_witness
        if args.incentive == "control"
        else build_response_witness
    )
    try:
        model = builder(graph, args.node)
    except WitnessError as exc:
        print(f"criterion not satisfied: {exc}", file=sys.stderr)
        return EXIT_NO_WITNESS
    text = serialize_model(model)
    plan = model.metadata.get("plan")
    header = f"# witness model for a {args.incentive} incentive on {args.node}\n"
    if plan is not None:
        header += f"# plan: {plan}\n"
    _emit(header + text, args.output)
    return EXIT_OK


def cmd_fair(args) -> int:
    parsed = _load(args.input)
    if parsed is None:
        return EXIT_USAGE
    if not isinstance(parsed, Scim):
        print("error: fairness analysis requires a scim", file=sys.stderr)
        return EXIT_USAGE
    if args.attribute not in parsed.graph:
        print(f"error: unknown node {args.attribute}", file=sys.stderr)
        return EXIT_USAGE
    verdict = exists_fair_optimal_policy(parsed, args.attribute, cap=args.cap)
    payload: dict = {
        "schema": "incent/1",
        "model": parsed.name,
        "attribute": args.attribute,
    }
    per_policy = []
    try:
        for policy in enumerate_optimal_policies(parsed, cap=args.cap):
            fv = is_counterfactually_fair(parsed, policy, args.attribute)
            per_policy.append(
                {"policy": _jsonable(policy), "fair": fv.fair,
                 "violation": _jsonable(fv.violation) if fv.violation else None}
            )
    except CapExceeded as exc:
        per_policy = f"not enumerated ({format_count(exc.count)} optimal policies)"
    payload["optimal_policies"] = per_policy
    if verdict.exists_fair_optimal is None:
        payload["exists_fair_optimal"] = "undecided"
        payload["reason"] = "cap_exceeded"
    else:
        payload["exists_fair_optimal"] = verdict.exists_fair_optimal
        if verdict.fair_policy is not None:
            payload["fair_policy"] = _jsonable(verdict.fair_policy)
        if verdict.reason:
            payload["note"] = verdict.reason
    if args.format == "json":
        _emit(_json_block(payload), args.output)
    else:
        lines = [f"attribute: {args.attribute}"]
        if isinstance(per_policy, list):
            fair_count = sum(1 for row in per_policy if row["fair"])
            lines.append(
                f"optimal policies: {len(per_policy)} ({fair_count} counterfactually fair)"
            )
        else:
            lines.append(f"optimal policies: {per_policy}")
        if verdict.exists_fair_optimal is None:
            lines.append("fair optimal policy: undecided (cap exceeded)")
        elif verdict.exists_fair_optimal:
            lines.append("fair optimal policy exists")
        else:
            lines.append("no fair optimal policy")
        _emit("\n".join(lines) + "\n", args.output)
    if verdict.exists_fair_optimal is None:
        return EXIT_UNDECIDED
    return EXIT_OK if verdict.exists_fair_optimal else EXIT_PRESENT


def cmd_optimal_policy(args) -> int:
    parsed = _load(args.input)
    if parsed is None:
        return EXIT_USAGE
    if not isinstance(parsed, Scim):
        print("error: optimal-policy requires a scim", file=sys.stderr)
        return EXIT_USAGE
    qt = q_table(parsed)
    ops = optimal_policy_set(parsed)
    contexts = []
    for pa in sorted(qt.contexts, key=lambda t: [parsed.domains[p].index(v) for p, v in zip(qt.parent_order, t)]):
        info = qt.contexts[pa]
        contexts.append(
            {
                "context": dict(zip(qt.parent_order, pa)),
                "probability": str(info["prob"]),
                "q": {str(v): str(info["q"][v]) for v in qt.decision_domain},
                "optimal": list(ops.per_context[pa]),
            }
        )
    payload = {
        "schema": "incent/1",
        "model": parsed.name,
        "decision": parsed.decision,
        "optimal_value": str(qt.max_value),
        "optimal_policy_count": format_count(ops.policy_count()),
        "contexts": contexts,
    }
    if args.format == "json":
        _emit(_json_block(payload), args.output)
    else:
        lines = [
            f"decision: {parsed.decision}",
            f"optimal expected utility: {qt.max_value}",
            f"optimal policies: {format_count(ops.policy_count())}",
        ]
        for row in contexts:
            ctx = ", ".join(f"{k}={v}" for k, v in row["context"].items()) or "(empty)"
            qs = ", ".join(f"{k}: {v}" for k, v in row["q"].items())
            lines.append(f"context {ctx}  Pr={row['probability']}")
            lines.append(f"  Q: {qs}")
            lines.append(f"  optimal: {', '.join(str(v) for v in row['optimal'])}")
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="incent",
        description="Exact incentive analysis for single-decision causal influence diagrams.",
    )
    parser.add_argument(
        "--seed", type=int, default=0,
        help="reserved for generators; analysis output is deterministic",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    kinds = [k.value for k in IncentiveKind]

    p = sub.add_parser("check", help="decide one incentive for one node")
    p.add_argument("input")
    p.add_argument("--node", required=True)
    p.add_argument("--incentive", required=True, choices=kinds)
    p.add_argument("--mode", choices=["graphical", "semantic", "both"], default="graphical")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--cap", type=int, default=4096)
    p.add_argument("--soft-cap", type=int, default=4096)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("analyze", help="full per-node incentive report")
    p.add_argument("input")
    p.add_argument("--format", choices=["text", "json", "dot"], default="text")
    p.add_argument("--cap", type=int, default=4096)
    p.add_argument("--soft-cap", type=int, default=4096)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("witness", help="emit a model exhibiting an incentive")
    p.add_argument("input")
    p.add_argument("--node", required=True)
    p.add_argument("--incentive", required=True, choices=["control", "response"])
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("fair", help="counterfactual fairness audit")
    p.add_argument("input")
    p.add_argument("--attribute", required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--cap", type=int, default=4096)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_fair)

    p = sub.add_parser("optimal-policy", help="action values and optimal decision sets")
    p.add_argument("input")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_optimal_policy)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"undecided: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED


if __name__ == "__main__":
    sys.exit(main())
