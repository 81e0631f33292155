"""Minimal predict server for exercising the external-model protocol.

usage: predict_server.py COEFS;INTERCEPT [--hello N] [--garbage] [--die-after-hello]
"""
import json
import sys


def main():
    spec = sys.argv[1]
    coefs, intercept = spec.split(";")
    coefs = [float(c) for c in coefs.split(",")]
    intercept = float(intercept)
    args = sys.argv[2:]
    n_features = len(coefs)
    if "--hello" in args:
        n_features = int(args[args.index("--hello") + 1])

    out = sys.stdout
    out.write(json.dumps({"type": "hello", "n_features": n_features}) + "\n")
    out.flush()
    if "--die-after-hello" in args:
        sys.exit(3)

    for line in sys.stdin:
        msg = json.loads(line)
        if msg["type"] == "shutdown":
            sys.exit(0)
        if "--garbage" in args:
            out.write("not-a-number\n")
            out.flush()
            continue
        rows = msg["rows"]
        if any(len(r) != len(coefs) for r in rows):
            out.write(json.dumps({"type": "error", "id": msg["id"], "message": "width mismatch"}) + "\n")
        else:
            values = [intercept + sum(a * x for a, x in zip(coefs, r)) for r in rows]
            out.write(json.dumps({"type": "prediction", "id": msg["id"], "values": values}) + "\n")
        out.flush()


if __name__ == "__main__":
    main()
