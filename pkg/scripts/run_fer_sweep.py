#!/usr/bin/env python3
"""Drive a depolarizing FER sweep on a CPM-lifted code and collect artifacts.

Produces the results CSV, the logical-residual ledger, and the
reference-line sidecar that the plotting component consumes.

Example:
  python3 scripts/run_fer_sweep.py --P 4 --p 0.04 0.06 0.08 \
      --trials 100000 --seed 20240 --threads 2 --out artifacts/fer_p4.csv
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from acqldpc.basecode import build_base, standard_basis
from acqldpc.decoder import CssCode, DecoderConfig
from acqldpc.lift import QcLiftedCode, solve_labels
from acqldpc.sim import (
    DistanceLedger,
    run_point,
    write_reference_sidecar,
    write_results_csv,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--P", type=int, default=4, help="lift factor (default 4)")
    parser.add_argument("--lift-seed", type=int, default=0)
    parser.add_argument("--p", type=float, nargs="+", default=[0.04, 0.06, 0.08])
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--target-failures", type=int, default=None)
    parser.add_argument("--seed", type=int, default=20240)
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--block-size", type=int, default=4096)
    parser.add_argument("--checkpoint", action="store_true")
    parser.add_argument("--out", default="artifacts/fer_sweep.csv")
    args = parser.parse_args()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)

    base = build_base(standard_basis())
    if args.P == 1:
        code = CssCode.from_base(base)
    else:
        code = CssCode.from_lifted(
            QcLiftedCode(base, solve_labels(base, args.P, seed=args.lift_seed))
        )
    print(f"code: P={args.P}, n={code.n}")

    config = DecoderConfig()
    ledger = DistanceLedger(code)
    points = []
    for p in args.p:
        t0 = time.time()
        point = run_point(
            code,
            p,
            args.trials,
            args.seed,
            config=config,
            threads=args.threads,
            target_failures=args.target_failures,
            block_size=args.block_size,
            ledger=ledger,
            checkpoint_path=f"{out}.checkpoint-{p:.6g}.json" if args.checkpoint else None,
        )
        points.append(point)
        print(
            f"p={p}: {point.failures_total}/{point.trials} fer={point.fer:.4e} "
            f"wilson=({point.wilson_lo:.3e},{point.wilson_hi:.3e}) "
            f"[{time.time() - t0:.0f}s]"
        )

    write_results_csv(out, points)
    ledger.save_jsonl(f"{out}.ledger.jsonl", master_seed=args.seed)
    write_reference_sidecar(f"{out}.refs.json")
    bound = ledger.best_bound()
    if bound is not None:
        print(f"distance ledger: best upper bound d <= {bound}")
    print(f"wrote {out}, {out}.ledger.jsonl, {out}.refs.json")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
