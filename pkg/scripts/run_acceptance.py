"""Run the acceptance criteria outside pytest and print one line per criterion.

Usage::

    python scripts/run_acceptance.py              # all criteria
    python scripts/run_acceptance.py 3 5          # selected criteria
    python scripts/run_acceptance.py --write-golden

``--write-golden`` regenerates ``tests/golden/bhh_floor.txt`` from the
current build; criterion 5 then compares fresh runs against that file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import test_acceptance as acc  # noqa: E402
from biconservative import verify  # noqa: E402


def write_golden() -> Path:
    floors = acc.measured_floors()
    lines = [
        "# min over the properness grid of |Delta h - |A|^2 h| per catalog seed",
        f"# floor {verify.BHH_FLOOR:g}; regenerate with: python scripts/run_acceptance.py --write-golden",
    ]
    lines += [f"{spec}: {floors[spec]:.17g}" for spec in sorted(floors)]
    acc.GOLDEN_FLOOR.write_text("\n".join(lines) + "\n")
    return acc.GOLDEN_FLOOR


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("criteria", nargs="*", type=int, help="criterion numbers (default: all)")
    parser.add_argument("--write-golden", action="store_true", help="regenerate the properness floor golden file")
    args = parser.parse_args(argv)
    if args.write_golden:
        print(f"wrote {write_golden()}")
        return 0
    failed = 0
    for k in args.criteria or sorted(acc.CRITERIA):
        ok, detail = acc.CRITERIA[k][1]()
        print(acc.result_line(k, ok, detail), flush=True)
        failed += not ok
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
