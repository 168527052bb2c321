"""Analytic external-trainer stub speaking the wire protocol.

Replies loss = sum of the numeric hyperparameter values named by
``--axes`` (all of them by default). Flags can inject protocol
violations for client error-path tests. Exits when stdin closes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--axes", default=None, help="comma list of axes summed into the loss")
    parser.add_argument("--declare", default=None, help="comma list of handshake names")
    parser.add_argument("--nan-on-id", type=int, default=None)
    parser.add_argument("--malformed-on-id", type=int, default=None)
    parser.add_argument("--crash-on-id", type=int, default=None)
    parser.add_argument("--skip-file-check", action="store_true")
    args = parser.parse_args()

    axes = [a for a in (args.axes or "").split(",") if a]
    declared = [a for a in (args.declare or "").split(",") if a] or axes or [
        "a", "b", "c", "d", "max_depth", "step_size", "max_iteration", "subsample",
    ]

    def reply(obj: dict) -> None:
        sys.stdout.write(json.dumps(obj) + "\n")
        sys.stdout.flush()

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        if request.get("cmd") == "hello":
            reply({"protocol": request.get("protocol"), "hyperparameters": declared})
            continue
        request_id = request.get("id")
        if args.crash_on_id is not None and request_id == args.crash_on_id:
            return 13
        if args.malformed_on_id is not None and request_id == args.malformed_on_id:
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
            continue
        if args.nan_on_id is not None and request_id == args.nan_on_id:
            reply({"id": request_id, "loss": float("nan")})
            continue
        hyperparams = request.get("hyperparams", {})
        unknown = sorted(set(hyperparams) - set(declared))
        if unknown:
            reply({"id": request_id, "error": f"unknown hyperparameters: {unknown}"})
            continue
        if not args.skip_file_check:
            missing = [
                p for p in (request.get("train"), request.get("test"))
                if not (isinstance(p, str) and os.path.exists(p))
            ]
            if missing:
                reply({"id": request_id, "error": f"unreadable data file: {missing}"})
                continue
        use = axes or [k for k, v in hyperparams.items() if isinstance(v, (int, float))]
        loss = float(sum(float(hyperparams.get(a, 0.0)) for a in use))
        reply({"id": request_id, "loss": loss})
    return 0


if __name__ == "__main__":
    sys.exit(main())
