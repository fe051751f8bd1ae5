"""Check the replication orderings across many master seeds.

Prints, per seed, the four medians and which of the five ordering checks
(a..e, as in tests/test_acceptance.py) hold, then a tally. Config fields can
be overridden with KEY=VALUE arguments:

    python scripts/seed_sweep.py --seeds 1-60 effect_decay=18 noise_sd=12
"""

import argparse
import sys

sys.path.insert(0, __import__("pathlib").Path(__file__).resolve().parents[1].joinpath("tests").as_posix())

from test_acceptance import ordering_checks  # noqa: E402

from transportability.harness import METHOD_ORDER, config_overrides, run_replications  # noqa: E402


def seed_range(text):
    lo, _, hi = text.partition("-")
    return range(int(lo), int(hi or lo) + 1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=seed_range, default=seed_range("1-10"))
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("overrides", nargs="*", metavar="KEY=VALUE")
    args = ap.parse_args()
    config = config_overrides(dict(o.split("=", 1) for o in args.overrides))

    tally = dict.fromkeys("abcde", 0)
    joint = 0
    for seed in args.seeds:
        s = run_replications(config, args.reps, seed, workers=args.workers)
        checks = ordering_checks(s)
        for k, ok in checks.items():
            tally[k] += ok
        joint += all(checks.values())
        medians = " ".join(f"{s[m].median:7.2f}" for m in METHOD_ORDER)
        flags = "".join(k if ok else "." for k, ok in checks.items())
        print(f"seed {seed:>6}  {medians}  {flags}")
    total = len(args.seeds)
    print("held: " + "  ".join(f"{k} {v}/{total}" for k, v in tally.items()) + f"  all {joint}/{total}")


if __name__ == "__main__":
    main()
