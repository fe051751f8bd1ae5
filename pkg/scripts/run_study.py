"""Run the 50-replication comparison and write JSON, SVG and a text table.

    python scripts/run_study.py --seed 2026 --outdir results/
"""

import argparse
import pathlib
import time

from transportability.harness import METHOD_ORDER, dump_json, load_config, run_replications
from transportability.plot import render_boxplot_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--seed", type=int, default=2026)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    summary = run_replications(load_config(args.config), args.reps, args.seed, workers=args.workers)
    elapsed = time.perf_counter() - t0

    stem = f"study_seed{args.seed}"
    (out / f"{stem}.json").write_text(dump_json(summary.to_json()))
    (out / f"{stem}.svg").write_text(render_boxplot_svg(summary, f"{args.reps} replications, seed {args.seed}"))

    print(f"true ATE {summary.true_tau}   mean trial size {sum(summary.trial_sizes) / len(summary.trial_sizes):.1f}"
          f"   {elapsed:.1f}s")
    print(f"{'method':<16}{'median':>9}{'q25':>9}{'q75':>9}{'IQR':>9}{'bias':>9}{'RMSE':>9}")
    for m in METHOD_ORDER:
        s = summary[m]
        print(f"{m.value:<16}{s.median:9.2f}{s.q25:9.2f}{s.q75:9.2f}{s.iqr:9.2f}{s.bias:9.2f}{s.rmse:9.2f}")
    if summary.retries:
        print(f"{len(summary.retries)} re-drawn replication attempts")


if __name__ == "__main__":
    main()
