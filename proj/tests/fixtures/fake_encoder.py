#!/usr/bin/env python3
"""Scriptable stand-in for an external encoder, speaking JSON lines on stdio."""
import argparse
import base64
import hashlib
import json
import select
import sys
import time


def embed(kind, payload, dim):
    digest = hashlib.sha256((kind + ":" + payload).encode()).digest()
    while len(digest) < dim:
        digest += hashlib.sha256(digest).digest()
    # Deliberately not unit length.
    return [3.0 * (b - 127.5) / 127.5 for b in digest[:dim]]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--mode", default="ok",
                    choices=["ok", "bad-dim", "hang", "no-handshake", "garbage", "exit", "unknown-id"])
    ap.add_argument("--error-on", default=None, help="text payload answered with an error")
    ap.add_argument("--log", default=None, help="append the size of every answered batch here")
    args = ap.parse_args()

    if args.mode == "no-handshake":
        time.sleep(30)
        return
    print(json.dumps({"dim": args.dim}), flush=True)

    stdin = sys.stdin
    while True:
        line = stdin.readline()
        if not line:
            return
        batch = [json.loads(line)]
        # Gather whatever else is already queued so replies can go out of order.
        while select.select([stdin], [], [], 0.05)[0]:
            more = stdin.readline()
            if not more:
                break
            batch.append(json.loads(more))
        if args.log:
            with open(args.log, "a") as f:
                f.write(f"{len(batch)}\n")
        if args.mode == "hang":
            time.sleep(30)
            return
        if args.mode == "exit":
            return
        for req in reversed(batch):
            rid = req["id"]
            if args.mode == "garbage":
                print("not json", flush=True)
                continue
            if args.mode == "unknown-id":
                rid += 1000
            if req.get("dim") != args.dim:
                out = {"id": rid, "error": "dimension mismatch"}
            elif req["kind"] == "image":
                png = base64.b64decode(req["payload"])
                if png[:8] != b"\x89PNG\r\n\x1a\n":
                    out = {"id": rid, "error": "payload is not a PNG"}
                else:
                    out = {"id": rid, "embedding": embed("image", req["payload"], args.dim)}
            elif req["kind"] == "text":
                if args.error_on is not None and req["payload"] == args.error_on:
                    out = {"id": rid, "error": "refused"}
                else:
                    out = {"id": rid, "embedding": embed("text", req["payload"], args.dim)}
            else:
                out = {"id": rid, "error": "unknown kind"}
            if args.mode == "bad-dim" and "embedding" in out:
                out["embedding"].append(1.0)
            print(json.dumps(out), flush=True)


if __name__ == "__main__":
    main()
