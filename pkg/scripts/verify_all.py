"""Run every verification subcommand across the four signature configurations."""

import argparse
import io
import json

from varprolong.cli import run

SIGNATURES = [("+", "+"), ("+", "-"), ("-", "+"), ("-", "-")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--mu", type=float, default=0.7)
    args = ap.parse_args()
    failures = 0
    for g11, g22 in SIGNATURES:
        for cmd in ("helmholtz", "constraints", "symmetry", "lagrangians"):
            out = io.StringIO()
            code = run([cmd, "--seed", str(args.seed), "--mu", str(args.mu), "--g11", g11, "--g22", g22], out)
            rep = json.loads(out.getvalue())
            worst = max(c["max_abs"] for c in rep["checks"])
            print(f"g=({g11},{g22}) {cmd:12s} exit {code}  worst residual {worst:.2e}")
            failures += code != 0
    raise SystemExit(1 if failures else 0)


if __name__ == "__main__":
    main()
