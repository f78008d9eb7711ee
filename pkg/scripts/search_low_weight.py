#!/usr/bin/env python3
"""Randomized low-weight logical operator search on the base code or a lift.

Prints any operator found within the weight budget, with its support, and
re-verifies the kernel/row-space conditions before reporting.

Example:
  python3 scripts/search_low_weight.py --side z --budget 8 --effort 200000
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import numpy as np

from acqldpc import gf2
from acqldpc.basecode import build_base, find_low_weight_logical, standard_basis


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--side", choices=["x", "z"], default="z")
    parser.add_argument("--budget", type=int, default=8)
    parser.add_argument("--effort", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    code = build_base(standard_basis())
    t0 = time.time()
    found = find_low_weight_logical(
        code, args.side, args.budget, effort=args.effort, seed=args.seed
    )
    dt = time.time() - t0
    if found is None:
        print(
            f"no weight<={args.budget} {args.side}-logical found in "
            f"{args.effort} iterations ({dt:.1f}s); evidence only, not a proof"
        )
        return 0
    check = code.hx if args.side == "z" else code.hz
    stab = code.hz if args.side == "z" else code.hx
    assert check.mul_vector(found).is_zero()
    assert not gf2.in_row_space(gf2.row_echelon_cache(stab), found)
    support = np.nonzero(found.to_dense())[0]
    print(
        f"found {args.side}-logical of weight {found.weight()} in {dt:.1f}s; "
        f"support {support.tolist()}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
