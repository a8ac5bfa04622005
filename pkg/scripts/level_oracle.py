"""Exhaustive comparison of level normalization against brute-force evaluation.

    python scripts/level_oracle.py [--depth D]

Depth 4 covers about 1.7 million expressions and takes under a minute.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from tests.oracles import VALUES, VARS, exhaustive_check  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=4)
    args = ap.parse_args()
    start = time.perf_counter()
    count, bad, collisions = exhaustive_check(args.depth)
    print(f"depth <= {args.depth}, variables {', '.join(VARS)}, values "
          f"{VALUES.start}..{VALUES.stop - 1}")
    print(f"{count} expressions, {len(bad)} mismatches, {collisions} duplicate normal forms, "
          f"{time.perf_counter() - start:.1f}s")
    for e in bad[:10]:
        print("  mismatch:", e)
    return 1 if bad or collisions else 0


if __name__ == "__main__":
    sys.exit(main())
