"""Fuzz conversion on generated well-typed terms.

    python scripts/conversion_fuzz.py [--seeds N] [--size S] [--start K]

For each seed, both generated terms must re-check, normalize to terms that
re-check, agree with their normal forms, and be convertible to each other
exactly when their normal forms are equal.
"""

from __future__ import annotations

import argparse
import collections
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from crispcheck.conversion import convertible, env_for, evaluate, normalize  # noqa: E402
from crispcheck.typecheck import Rechecker  # noqa: E402
from tests.termgen import base_signature, kernel_context, sample, value  # noqa: E402


def one(sig, seed: int, size: int) -> list[str]:
    s = sample(seed, size)
    ctx = kernel_context(sig, s.ctx)
    types = tuple(e.type for e in ctx.entries)
    d = len(types)
    ty = evaluate(sig, env_for(d), s.type)
    problems = []
    r = Rechecker(sig)
    nfs = []
    for t in (s.term, s.other):
        r.check(ctx, t, ty)
        nf = normalize(sig, types, t, ty)
        r.check(ctx, nf, ty)
        nfs.append(nf)
        if not convertible(sig, types, ty, value(sig, d, t), value(sig, d, nf)):
            problems.append("term not convertible to its normal form")
        if normalize(sig, types, nf, ty) != nf:
            problems.append("normal form not stable")
    a, b = value(sig, d, s.term), value(sig, d, s.other)
    if convertible(sig, types, ty, a, b) != (nfs[0] == nfs[1]):
        problems.append("conversion disagrees with normal forms")
    return problems


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=2000)
    ap.add_argument("--size", type=int, default=8)
    ap.add_argument("--start", type=int, default=0)
    args = ap.parse_args()
    sig = base_signature()
    tally: collections.Counter = collections.Counter()
    start = time.perf_counter()
    for seed in range(args.start, args.start + args.seeds):
        try:
            problems = one(sig, seed, args.size)
        except RecursionError:
            problems = ["recursion limit"]
        for p in problems:
            tally[p] += 1
            print(f"seed {seed}: {p}")
    print(f"{args.seeds} seeds at size {args.size}, {sum(tally.values())} problems, "
          f"{time.perf_counter() - start:.1f}s")
    return 1 if tally else 0


if __name__ == "__main__":
    sys.exit(main())
