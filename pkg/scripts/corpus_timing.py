"""Time every corpus file, with and without the second checking pass.

    python scripts/corpus_timing.py [--repeat N]
"""

from __future__ import annotations

import argparse
import statistics
from pathlib import Path

from crispcheck.driver import Options, Session

CORPUS = Path(__file__).resolve().parent.parent / "formalization"


def run(double_check: bool) -> dict[str, float]:
    session = Session(Options(double_check=double_check))
    for p in sorted(CORPUS.glob("*.ctt")):
        session.load(p)
    return {m.name: m.seconds for m in session.order}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rows: dict[str, list[list[float]]] = {}
    for _ in range(args.repeat):
        for k, dc in enumerate((False, True)):
            for name, s in run(dc).items():
                rows.setdefault(name, [[], []])[k].append(s)
    print(f"{'module':<14}{'check (s)':>12}{'+recheck (s)':>14}")
    total = [0.0, 0.0]
    for name, (plain, double) in rows.items():
        a, b = statistics.median(plain), statistics.median(double)
        total[0] += a
        total[1] += b
        print(f"{name:<14}{a:>12.3f}{b:>14.3f}")
    print(f"{'total':<14}{total[0]:>12.3f}{total[1]:>14.3f}")


if __name__ == "__main__":
    main()
