"""Pilot run for the directional full-vs-baseline comparison.

Runs the full pipeline and the baseline on the reference synthetic dataset
for five seeds and records the observed metric margins into
tests/fixtures/pilot_margins.json. The acceptance suite replays the same
configuration and checks the direction of the comparison; the fixture keeps
the pilot's numbers on record so they are derived, never hand-written.
"""

import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from subtrack.experiment import compare_full_vs_baseline
from subtrack.storage import dump_json

SEEDS = [1, 2, 3, 4, 5]


def main() -> None:
    rows = []
    t_total = time.perf_counter()
    for seed in SEEDS:
        t0 = time.perf_counter()
        row = compare_full_vs_baseline(seed)
        row["seconds"] = time.perf_counter() - t0
        rows.append(row)
        print(json.dumps(row, indent=None), flush=True)
    wins = sum(
        1
        for r in rows
        if r["margin_map"] > 0 and r["margin_f1"] > 0 and r["margin_incorrect"] > 0
    )
    payload = {
        "seeds": SEEDS,
        "wins": wins,
        "rows": rows,
        "total_seconds": time.perf_counter() - t_total,
    }
    out = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "pilot_margins.json"
    dump_json(payload, out)
    print(f"wins: {wins}/{len(SEEDS)}  total: {payload['total_seconds']:.1f}s -> {out}")


if __name__ == "__main__":
    main()
