#!/usr/bin/env python3
"""Reproduce the four toy operator regimes; one CSV per regime.

    python scripts/run_toy_figures.py --out-dir toy_figures
"""

import argparse
from pathlib import Path

from fplbpg.lang import load_spec_text
from fplbpg.toy import DEFAULT_ALPHA, ToyState, phase_crossing_step, toy_run, write_trace_csv

REGIMES = {
    "conjunction": "f0 &{-1} f1",
    "disjunction": "f0 |{-1} f1",
    "priority_offset": "[f0 @ 0.3] &{-1} f1",
    "linear": "f0 &{1} f1",
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("toy_figures"))
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    parser.add_argument("--steps", type=int, default=2000)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in REGIMES.items():
        rows = toy_run(
            load_spec_text(text),
            ToyState(0.55, 0.45, args.alpha),
            steps=args.steps,
        )
        path = args.out_dir / f"{name}.csv"
        write_trace_csv(rows, path)
        last = rows[-1]
        note = ""
        if name == "priority_offset":
            note = f" phase_crossing_at={phase_crossing_step(rows)}"
        print(f"{name}: f0={last.f0:.3f} f1={last.f1:.3f} -> {path}{note}")


if __name__ == "__main__":
    main()
