"""Command-line front door for batch workflows.

Exit codes: 0 success, 1 domain error (code + message on stderr), 2 usage
error. Machine-readable output (``--json`` where applicable) is canonical
JSON written without a trailing newline, byte-identical to the HTTP
service's payload for the same store and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .chronicle import export_jsonl, import_jsonl
from .config import load_config
from .errors import PfmError
from .jsonio import canonical_bytes
from .model import PersonalFoodModel
from .ops import (
    build_model_payload,
    enrich_user,
    heatmap_csv,
    heatmap_payload,
    recommend_payload,
    verify_payload,
)
from .store import UserStore
from .synth import generate, load_spec


def _parse_window(text: str) -> float:
    """Durations like ``720``, ``720m``, ``12h``, ``2d`` to minutes."""
    text = text.strip().lower()
    try:
        if text.endswith("h"):
            return float(text[:-1]) * 60.0
        if text.endswith("d"):
            return float(text[:-1]) * 1440.0
        if text.endswith("m"):
            return float(text[:-1])
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}") from None


def _emit_json(payload) -> None:
    sys.stdout.flush()
    sys.stdout.buffer.write(canonical_bytes(payload))
    sys.stdout.buffer.flush()


def _pick_user(store: UserStore, user: str | None) -> str:
    if user:
        return user
    users = store.user_ids()
    if len(users) == 1:
        return users[0]
    if not users:
        raise PfmError("no users in store; run `pfm import` first")
    raise PfmError(f"multiple users in store ({', '.join(users)}); pass --user")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pfm",
        description="Personal food model engine: chronicle I/O, mining, "
                    "model building and recommendations.",
    )
    parser.add_argument("--data-dir", default=".", help="store root (default: cwd)")
    parser.add_argument("--config", default=None, help="engine config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override RNG seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="load a chronicle JSONL file into the store")
    p.add_argument("file")

    p = sub.add_parser("export", help="print a user's chronicle as canonical JSONL")
    p.add_argument("--user", default=None)

    p = sub.add_parser("enrich", help="attach fixture nutrition/taste to food events")
    p.add_argument("--user", default=None)

    p = sub.add_parser("heatmap", help="co-occurrence counts between two event axes")
    p.add_argument("--a", required=True, help="axis spec, e.g. food:dish")
    p.add_argument("--b", required=True, help="axis spec, e.g. sleep:sleep_quality")
    p.add_argument("--window", type=_parse_window, default=720.0,
                   help="follow window (minutes, or e.g. 12h)")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--csv", action="store_true", default=True)
    fmt.add_argument("--json", dest="as_json", action="store_true")
    p.add_argument("--user", default=None)

    p = sub.add_parser("verify", help="verify a hypothesis file against the chronicle")
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--json", dest="as_json", action="store_true",
                   help="canonical JSON only (no table)")
    p.add_argument("--user", default=None)

    p = sub.add_parser("model", help="build or inspect the personal food model")
    model_sub = p.add_subparsers(dest="model_command", required=True)
    for name in ("build", "show"):
        mp = model_sub.add_parser(name)
        mp.add_argument("--user", default=None)

    p = sub.add_parser("recommend", help="rank candidates from a request file")
    p.add_argument("--request", required=True)
    p.add_argument("--json", dest="as_json", action="store_true")
    p.add_argument("--user", default=None)

    p = sub.add_parser("synth", help="generate a synthetic chronicle + ground truth")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", required=True)
    return parser


def _run(args: argparse.Namespace) -> None:
    config = load_config(path=args.config, data_dir=args.data_dir, seed=args.seed)
    store = UserStore(args.data_dir)

    if args.command == "import":
        chronicle = import_jsonl(Path(args.file).read_text(encoding="utf-8"))
        if not chronicle.user_id:
            raise PfmError("file contains no events")
        with store.lock_for(chronicle.user_id):
            store.write_chronicle(chronicle.user_id, chronicle)
        print(f"imported {len(chronicle)} events for user {chronicle.user_id}")
        return

    if args.command == "synth":
        spec = load_spec(args.spec)
        chronicle, manifest = generate(spec)
        Path(args.out).write_text(export_jsonl(chronicle), encoding="utf-8")
        Path(args.truth).write_bytes(canonical_bytes(manifest))
        print(f"wrote {len(chronicle)} events to {args.out}; truth to {args.truth}")
        return

    user = _pick_user(store, args.user)

    if args.command == "export":
        sys.stdout.write(export_jsonl(store.load_chronicle(user)))
        return

    if args.command == "enrich":
        report = enrich_user(store, user, args.data_dir, config)
        print(f"enriched {report['enriched']} events "
              f"({report['already']} already had facts, "
              f"{len(report['unresolved'])} unresolved)")
        return

    if args.command == "heatmap":
        chronicle = store.load_chronicle(user)
        if args.as_json:
            _emit_json(heatmap_payload(chronicle, args.a, args.b, args.window))
        else:
            sys.stdout.write(heatmap_csv(chronicle, args.a, args.b, args.window))
        return

    if args.command == "verify":
        chronicle = store.load_chronicle(user)
        hypothesis = json.loads(Path(args.hypothesis).read_text(encoding="utf-8"))
        payload = verify_payload(chronicle, hypothesis, config)
        if args.as_json:
            _emit_json(payload)
            return
        print(f"hypothesis: {payload['hypothesis']['name'] or '(unnamed)'}")
        print(f"overall: direction={payload['overall_direction']} "
              f"effect={payload['overall_effect']} p={payload['overall_p']}")
        header = f"{'context':<40} {'effect':>9} {'p':>8} {'adj p':>8} {'valid':>6} {'nT':>4} {'nC':>4}"
        print(header)
        print("-" * len(header))
        for ctx in payload["contexts"]:
            sig = ", ".join(f"{n}={lab}" for n, lab in ctx["signature"]) or "(all)"
            if ctx["low_power"]:
                sig += " [low-power]"
            eff = "-" if ctx["effect"] is None else f"{ctx['effect']:+.2f}"
            p = "-" if ctx["p_value"] is None else f"{ctx['p_value']:.4f}"
            adj = "-" if ctx["adjusted_p"] is None else f"{ctx['adjusted_p']:.4f}"
            print(f"{sig:<40} {eff:>9} {p:>8} {adj:>8} {ctx['validity']:>6.2f} "
                  f"{ctx['n_treated']:>4} {ctx['n_control']:>4}")
        print()
        _emit_json(payload)
        print()
        return

    if args.command == "model":
        if args.model_command == "build":
            _emit_json(build_model_payload(store, user, args.data_dir, config))
            return
        snapshot = store.load_model(user)
        if snapshot is None:
            raise PfmError(f"no model snapshot for user {user}; run `pfm model build`")
        _emit_json(PersonalFoodModel.from_dict(snapshot).summary())
        return

    if args.command == "recommend":
        request = json.loads(Path(args.request).read_text(encoding="utf-8"))
        payload = recommend_payload(store, user, request, args.data_dir, config)
        if args.as_json:
            _emit_json(payload)
            return
        print(f"{'rank':<5} {'dish':<24} {'total':>7} {'pref':>7} {'health':>7}")
        for rank, item in enumerate(payload["ranked"], start=1):
            print(f"{rank:<5} {item['dish_id']:<24} {item['total']:>7.3f} "
                  f"{item['preference']:>7.3f} {item['health']:>7.3f}")
        for item in payload["blocked"]:
            print(f"-     {item['dish_id']:<24} blocked by: {', '.join(item['blocked_by'])}")
        print()
        _emit_json(payload)
        print()
        return


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _run(args)
    except PfmError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error (not_found): {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
