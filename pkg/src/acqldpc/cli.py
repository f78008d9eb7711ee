"""Command-line surface: generate, verify, lift, simulate, report.

Output is machine-readable JSON by default (--human renders small tables).
Exit codes: 0 success, 1 verification or decoding-property failure,
2 usage or IO errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import alist, gf2
from .basecode import (
    base_dimension,
    build_base,
    eight_cycle_witness,
    find_low_weight_logical,
    random_basis,
    standard_basis,
    verify_regularity_orthogonality,
    verify_spc3_equivalence,
)
from .bundle import BundleError, CodeBundle, load_bundle
from .decoder import CssCode, DecoderConfig
from .lift import (
    QcLiftedCode,
    lifted_dimension,
    load_labels,
    solve_labels,
    verify_expanded_orthogonality,
)
from .sim import (
    DE_REFERENCE_NOTE,
    DE_REFERENCE_P,
    DistanceLedger,
    append_result_csv,
    hashing_bound_p,
    merge_results,
    run_point,
    write_reference_sidecar,
)
from .tanner import TannerGraph, girth, girth_at_least, has_4cycle, has_6cycle

CONFIG_ENV_VAR = "ACQLDPC_DECODER_CONFIG"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _emit(data: dict, human: bool) -> None:
    if human:
        for key, value in data.items():
            print(f"{key}: {value}")
    else:
        json.dump(data, sys.stdout, indent=2, default=str)
        print()


def _load_config(path: str | None) -> DecoderConfig:
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return DecoderConfig.from_json(path)
    return DecoderConfig()


def _alist_paths(out: Path) -> tuple[Path, Path]:
    stem = out.with_suffix("")
    return Path(f"{stem}_hx.alist"), Path(f"{stem}_hz.alist")


def cmd_gen_base(args) -> int:
    basis = standard_basis() if args.basis == "standard" else random_basis(args.seed)
    code = build_base(basis)
    report = verify_regularity_orthogonality(code)
    bundle = CodeBundle(code)
    out = Path(args.out)
    bundle.save(out)
    hx_path, hz_path = _alist_paths(out)
    alist.write_alist(hx_path, code.hx)
    alist.write_alist(hz_path, code.hz)
    _emit(
        {
            "bundle": str(out),
            "alist_hx": str(hx_path),
            "alist_hz": str(hz_path),
            "basis": list(basis.vectors),
            "structure_ok": report.ok,
            "failures": report.failures,
        },
        args.human,
    )
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


def cmd_verify(args) -> int:
    bundle = load_bundle(args.bundle)
    code = bundle.base
    lifted = bundle.lifted()
    checks: dict[str, dict] = {}
    ok = True

    report = verify_regularity_orthogonality(code)
    checks["structure"] = {"pass": report.ok, "failures": report.failures}
    ok &= report.ok

    if lifted is not None:
        hx, hz = lifted.matrices
        orth = verify_expanded_orthogonality(hx, hz)
        regular = bool(
            (hx.row_weights() == 8).all()
            and (hz.row_weights() == 8).all()
            and (hx.column_weights() == 3).all()
            and (hz.column_weights() == 3).all()
        )
        checks["lift"] = {"pass": orth and regular, "P": lifted.P, "orthogonal": orth,
                          "regular": regular}
        ok &= orth and regular

    if args.girth:
        if lifted is None:
            gx = girth(TannerGraph.from_bitmatrix(code.hx))
            gz = girth(TannerGraph.from_bitmatrix(code.hz))
            witness_ok = True
            for side, g_val, mat in (("x", gx, code.hx), ("z", gz, code.hz)):
                chk, qb = eight_cycle_witness(code, side)
                from .tanner import validate_cycle_witness

                witness_ok &= validate_cycle_witness(
                    TannerGraph.from_bitmatrix(mat), chk, qb
                )
            girth_pass = gx == 8 and gz == 8 and witness_ok
            checks["girth"] = {
                "pass": girth_pass,
                "girth_x": gx,
                "girth_z": gz,
                "witness_8cycles": witness_ok,
            }
        else:
            hx, hz = lifted.matrices
            ok_x = girth_at_least(TannerGraph.from_bitmatrix(hx), 8)
            ok_z = girth_at_least(TannerGraph.from_bitmatrix(hz), 8)
            checks["girth"] = {"pass": ok_x and ok_z, "girth_at_least_8": ok_x and ok_z}
        ok &= checks["girth"]["pass"]

    if args.dimension:
        if lifted is None:
            rx, rz, k = base_dimension(code)
            dim_pass = (rx, rz, k) == (169, 169, 174)
            checks["dimension"] = {"pass": dim_pass, "rank_x": rx, "rank_z": rz, "k": k}
        else:
            rx, rz, k = lifted_dimension(lifted)
            dim_pass = k >= 128 * lifted.P
            checks["dimension"] = {
                "pass": dim_pass,
                "rank_x": rx,
                "rank_z": rz,
                "k": k,
                "design_floor": 128 * lifted.P,
            }
        ok &= checks["dimension"]["pass"]

    if args.spc3:
        spc = verify_spc3_equivalence(code.basis)
        checks["spc3"] = {
            "pass": spc.ok,
            "identical_without_permutation": spc.identical_without_permutation,
        }
        ok &= spc.ok

    if args.logical_budget is not None:
        found = find_low_weight_logical(
            code, "z", args.logical_budget, effort=args.logical_effort, seed=args.seed
        )
        checks["logical_search"] = {
            "budget": args.logical_budget,
            "found_weight": None if found is None else found.weight(),
        }

    _emit({"ok": ok, "checks": checks}, args.human)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_lift(args) -> int:
    bundle = load_bundle(args.bundle)
    code = bundle.base
    if args.labels:
        spec = load_labels(code, args.labels)
        if args.P is not None and spec.P != args.P:
            raise BundleError(f"label file P={spec.P} disagrees with --P {args.P}")
    else:
        if args.P is None:
            print("error: --P is required unless --labels is given", file=sys.stderr)
            return EXIT_USAGE
        spec = solve_labels(code, args.P, seed=args.seed)
    lifted = QcLiftedCode(code, spec)
    rx, rz, k = lifted_dimension(lifted)
    out = Path(args.out)
    CodeBundle(code, spec).save(out)
    if args.alist:
        hx, hz = lifted.matrices
        hx_path, hz_path = _alist_paths(out)
        alist.write_alist(hx_path, hx)
        alist.write_alist(hz_path, hz)
    _emit(
        {
            "bundle": str(out),
            "P": spec.P,
            "n": lifted.n,
            "rank_x": rx,
            "rank_z": rz,
            "k": k,
            "design_floor": 128 * spec.P,
        },
        args.human,
    )
    return EXIT_OK if k >= 128 * spec.P else EXIT_CHECK_FAILED


def cmd_sim(args) -> int:
    bundle = load_bundle(args.bundle)
    lifted = bundle.lifted()
    if lifted is not None:
        code = CssCode.from_lifted(lifted)
    else:
        code = CssCode.from_base(bundle.base)
    config = _load_config(args.config)
    if args.trials is None and args.target_failures is None:
        print("error: need --trials or --target-failures", file=sys.stderr)
        return EXIT_USAGE
    trials = args.trials if args.trials is not None else 10**9
    ledger = DistanceLedger(code)
    out = Path(args.out)
    if out.exists():
        out.unlink()
    points = []
    for p in args.p:
        checkpoint = (
            f"{out}.checkpoint-{p:.6g}.json" if args.checkpoint else None
        )
        point = run_point(
            code,
            p,
            trials,
            args.seed,
            config=config,
            threads=args.threads,
            target_failures=args.target_failures,
            block_size=args.block_size,
            ledger=ledger,
            checkpoint_path=checkpoint,
        )
        points.append(point)
        append_result_csv(out, point)  # each point lands as soon as it completes
    ledger.save_jsonl(f"{out}.ledger.jsonl", master_seed=args.seed)
    refs = write_reference_sidecar(f"{out}.refs.json")
    _emit(
        {
            "results": str(out),
            "ledger": f"{out}.ledger.jsonl",
            "references": f"{out}.refs.json",
            "points": [
                {
                    "p": pt.p,
                    "trials": pt.trials,
                    "fer": pt.fer,
                    "wilson": [pt.wilson_lo, pt.wilson_hi],
                    "failures": pt.failures_total,
                }
                for pt in points
            ],
            "distance_bound": ledger.best_bound(),
            "de_reference": refs["de_reference"],
        },
        args.human,
    )
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.csv:
        print("error: no input CSVs", file=sys.stderr)
        return EXIT_USAGE
    merged = merge_results(args.csv)
    refs = {
        "de_reference": DE_REFERENCE_P,
        "de_reference_note": DE_REFERENCE_NOTE,
        "hashing_bound_rate_quarter": hashing_bound_p(0.25),
    }
    data = {
        "points": [
            {
                "p": pt.p,
                "trials": pt.trials,
                "fail_total": pt.failures_total,
                "fail_syndrome": pt.failures_residual_syndrome,
                "fail_logical": pt.failures_logical,
                "fer": pt.fer,
                "wilson_lo": pt.wilson_lo,
                "wilson_hi": pt.wilson_hi,
            }
            for pt in merged
        ],
        "references": refs,
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    _emit(data, args.human)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acqldpc",
        description="Affine-coset quantum LDPC codes: build, verify, lift, simulate.",
    )
    parser.add_argument("--human", action="store_true", help="table-ish output instead of JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-base", help="construct and verify a base pair bundle")
    g.add_argument("--basis", choices=["standard", "random"], default="standard")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_base)

    v = sub.add_parser("verify", help="re-verify a bundle's structural properties")
    v.add_argument("bundle")
    v.add_argument("--girth", action="store_true")
    v.add_argument("--dimension", action="store_true")
    v.add_argument("--spc3", action="store_true")
    v.add_argument("--logical-budget", type=int, default=None)
    v.add_argument("--logical-effort", type=int, default=200_000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    l = sub.add_parser("lift", help="solve shift labels (or import them) and lift")
    l.add_argument("bundle")
    l.add_argument("--P", type=int, default=None)
    l.add_argument("--seed", type=int, default=0)
    l.add_argument("--labels", default=None, help="import labels instead of solving")
    l.add_argument("--alist", action="store_true", help="also export expanded alist files")
    l.add_argument("--out", required=True)
    l.set_defaults(func=cmd_lift)

    s = sub.add_parser("sim", help="depolarizing Monte Carlo FER")
    s.add_argument("bundle")
    s.add_argument("--p", type=float, nargs="+", required=True)
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--target-failures", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", default=None, help=f"decoder config JSON (or ${CONFIG_ENV_VAR})")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--block-size", type=int, default=4096)
    s.add_argument("--checkpoint", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sim)

    r = sub.add_parser("report", help="merge result CSVs and attach reference lines")
    r.add_argument("csv", nargs="*")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    from .lift import CongruenceError, LabelFileError, SupportMismatchError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BundleError, CongruenceError, SupportMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (LabelFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
