"""Run acceptance criteria outside pytest and print one line per criterion.

    python scripts/run_acceptance.py            # all ten
    python scripts/run_acceptance.py --only 4 8 --json results.json
"""

import argparse
import json
import sys

from modspace.scenarios import criterion_names, run_criterion


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", type=int, nargs="*", help="criterion numbers (default: all)")
    ap.add_argument("--json", help="also write the full results here")
    args = ap.parse_args()
    numbers = args.only or sorted(criterion_names())
    results = []
    for n in numbers:
        res = run_criterion(n)
        print(res.line(), flush=True)
        results.append(res)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([r.to_json_dict() for r in results], fh, indent=2, default=float)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed" + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
