"""Run every exact check on every shipped rational model and tabulate the outcome."""

import argparse
import time
from collections import Counter

from corrwalk.models import SHIPPED
from corrwalk.oracle import run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=8)
    args = ap.parse_args()

    for name, model in SHIPPED.items():
        if not model.exact:
            continue
        t0 = time.perf_counter()
        reports = run_suite(model, args.N)
        passed = Counter(r.claim for r in reports if r.passed)
        failed = Counter(r.claim for r in reports if not r.passed)
        status = "ok" if all(r.ok for r in reports) else "UNEXPECTED"
        print(f"{name:<26} {status:<10} pass={dict(passed)} fail={dict(failed)} ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
