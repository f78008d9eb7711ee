"""Depolarizing-channel Monte Carlo harness.

Every trial derives its generator from (master seed, trial index), so
results are independent of worker count and scheduling: counts are
commutative reductions and the logical-residual ledger keeps trial indices.
Trials run in fixed-size blocks; a point stops at the end of the first
block that reaches the target failure count (or at the trial budget),
which keeps early stopping reproducible too.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional

import numpy as np

from . import gf2
from .decoder import (
    STATUS_FAILED_SYNDROME,
    STATUS_LOGICAL,
    BpState,
    CssCode,
    DecoderConfig,
    check_sc,
    decode,
    bp_decode_batch,
)
from .gf2 import BitVector

# Reference BP threshold for random (3,8)-regular ensembles under the
# depolarizing channel.  Fixed external constant, not computed by this
# package; plotted as a reference line only.
DE_REFERENCE_P = 0.1009
DE_REFERENCE_NOTE = (
    "density-evolution threshold for a random (3,8)-regular ensemble under "
    "code-capacity depolarizing noise; external reference constant, not "
    "computed by this toolkit"
)

RESULT_COLUMNS = [
    "p",
    "trials",
    "fail_total",
    "fail_syndrome",
    "fail_logical",
    "fer",
    "wilson_lo",
    "wilson_hi",
]


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Deterministic per-trial generator derived by seed-sequence hashing."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    )


def sample_depolarizing(n: int, p: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample one Pauli error: each qubit I w.p. 1-p, else X/Y/Z uniformly."""
    u = rng.random(n)
    x = (u < 2 * p / 3).astype(np.uint8)
    z = ((u >= p / 3) & (u < p)).astype(np.uint8)
    return x, z


def wilson_interval(failures: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if not 0 <= failures <= trials or trials < 1:
        raise ValueError("need 0 <= failures <= trials and trials >= 1")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = failures / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if failures == 0 else max(0.0, center - half)
    hi = 1.0 if failures == trials else min(1.0, center + half)
    return lo, hi


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def hashing_bound_p(rate: float, tol: float = 1e-9) -> float:
    """Invert 1 - h2(p) - p*log2(3) = rate for p by bisection.

    The left side is strictly decreasing on (0, 3/4), so the root is unique
    for rates in (0, 1); the residual at the returned point is below tol.
    """
    if not 0 < rate < 1:
        raise ValueError("rate must lie in (0, 1)")

    def f(p: float) -> float:
        return 1 - binary_entropy(p) - p * math.log2(3) - rate

    lo, hi = 0.0, 0.75
    for _ in range(200):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16 and abs(f((lo + hi) / 2)) < tol:
            break
    return (lo + hi) / 2


def write_reference_sidecar(path, rate: float = 0.25) -> dict:
    """Reference-line sidecar consumed by the plotting component."""
    data = {
        "de_reference": DE_REFERENCE_P,
        "de_reference_note": DE_REFERENCE_NOTE,
        "hashing_bound_rate_quarter": hashing_bound_p(rate),
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")
    return data


# --- distance ledger ----------------------------------------------------------


class LedgerRejection(ValueError):
    """Submitted residual is not a syndrome-free non-stabilizer operator."""


@dataclass
class LedgerEntry:
    operator: bytes  # packed little-endian words
    side: str
    weight: int
    p: float
    trial: int

    def to_json_dict(self) -> dict:
        return {
            "operator_hex": self.operator.hex(),
            "side": self.side,
            "weight": self.weight,
            "p": self.p,
            "trial": self.trial,
        }


@dataclass
class DistanceLedger:
    """Decoder-derived distance evidence: the bound only ever tightens."""

    code: CssCode
    entries: list[LedgerEntry] = field(default_factory=list)

    def best_bound(self) -> Optional[int]:
        return min((e.weight for e in self.entries), default=None)

    def record_logical(
        self, residual: np.ndarray, side: str, p: float = 0.0, trial: int = -1
    ) -> LedgerEntry:
        """Verify and append a logical residual; returns the new entry.

        side "z" requires hx v = 0 and v outside row(hz) (mirror for "x");
        violations raise LedgerRejection with a diagnostic.
        """
        v = BitVector.from_dense(np.asarray(residual, dtype=np.uint8))
        if side == "z":
            other, cache = self.code.hx, self.code.row_cache_z
        elif side == "x":
            other, cache = self.code.hz, self.code.row_cache_x
        else:
            raise ValueError("side must be 'x' or 'z'")
        if not other.mul_vector(v).is_zero():
            raise LedgerRejection(f"{side} residual has nonzero opposite-side syndrome")
        if gf2.in_row_space(cache, v):
            raise LedgerRejection(f"{side} residual is a stabilizer (in the row space)")
        entry = LedgerEntry(
            operator=v.words.tobytes(), side=side, weight=v.weight(), p=p, trial=trial
        )
        self.entries.append(entry)
        return entry

    def save_jsonl(self, path, master_seed: Optional[int] = None) -> None:
        with open(path, "w") as fh:
            for e in sorted(self.entries, key=lambda e: (e.p, e.trial)):
                record = e.to_json_dict()
                if master_seed is not None:
                    record["seed"] = master_seed
                fh.write(json.dumps(record) + "\n")


# --- FER points -----------------------------------------------------------------


@dataclass
class FerPoint:
    p: float
    trials: int
    failures_total: int
    failures_residual_syndrome: int
    failures_logical: int
    fer: float
    wilson_lo: float
    wilson_hi: float
    min_logical_weight: Optional[int] = None

    @classmethod
    def from_counts(
        cls, p, trials, fail_syndrome, fail_logical, min_logical_weight=None
    ) -> "FerPoint":
        total = fail_syndrome + fail_logical
        lo, hi = wilson_interval(total, trials)
        return cls(
            p, trials, total, fail_syndrome, fail_logical, total / trials, lo, hi,
            min_logical_weight,
        )

    def csv_row(self) -> list[str]:
        return [
            f"{self.p:.12g}",
            str(self.trials),
            str(self.failures_total),
            str(self.failures_residual_syndrome),
            str(self.failures_logical),
            f"{self.fer:.12g}",
            f"{self.wilson_lo:.12g}",
            f"{self.wilson_hi:.12g}",
        ]


@dataclass
class TrialPlan:
    ps: list[float]
    trials: int
    master_seed: int
    config: Optional[DecoderConfig] = None
    target_failures: Optional[int] = None
    block_size: int = 4096

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for p in self.ps:
            if not 0 < p < 1:
                raise ValueError(f"p={p} outside (0, 1)")


def run_plan(
    code: CssCode,
    plan: TrialPlan,
    threads: int = 1,
    ledger: Optional["DistanceLedger"] = None,
    checkpoint_dir: Optional[str] = None,
) -> list["FerPoint"]:
    """Run every point of a plan in order; see ``run_point`` for guarantees."""
    points = []
    for p in plan.ps:
        checkpoint = (
            os.path.join(checkpoint_dir, f"checkpoint-{p:.6g}-{plan.master_seed}.json")
            if checkpoint_dir
            else None
        )
        points.append(
            run_point(
                code,
                p,
                plan.trials,
                plan.master_seed,
                config=plan.config,
                threads=threads,
                target_failures=plan.target_failures,
                block_size=plan.block_size,
                ledger=ledger,
                checkpoint_path=checkpoint,
            )
        )
    return points


# --- trial execution --------------------------------------------------------------

# BP runs in two passes: a wide shallow pass retires the typical trial
# cheaply, and survivors rerun from scratch at full depth (identical
# trajectories, BP being deterministic) pooled into full batches.
_BP_PHASE1_BATCH = 128
_BP_PHASE1_ITERS = 16
_BP_PHASE2_BATCH = 64

_worker_ctx: dict = {}


def _init_worker(code, p, config, master_seed):
    _worker_ctx["code"] = code
    _worker_ctx["p"] = p
    _worker_ctx["config"] = config
    _worker_ctx["master_seed"] = master_seed


def _run_block(bounds: tuple[int, int]) -> dict:
    start, stop = bounds
    code: CssCode = _worker_ctx["code"]
    p: float = _worker_ctx["p"]
    config: DecoderConfig = _worker_ctx["config"]
    master_seed: int = _worker_ctx["master_seed"]
    return run_trials(code, p, master_seed, start, stop, config)


def run_trials(
    code: CssCode,
    p: float,
    master_seed: int,
    start: int,
    stop: int,
    config: Optional[DecoderConfig] = None,
) -> dict:
    """Decode trials [start, stop); returns counts and logical records."""
    from .decoder import DepolarizingPrior

    config = config or DecoderConfig()
    prior = DepolarizingPrior(p)
    n = code.n
    count = stop - start
    fail_syndrome = 0
    fail_logical = 0
    logical_records: list[dict] = []

    xs = np.empty((count, n), dtype=np.uint8)
    zs = np.empty((count, n), dtype=np.uint8)
    for k in range(count):
        xs[k], zs[k] = sample_depolarizing(n, p, trial_rng(master_seed, start + k))
    sx = (zs[:, code.x_chk_q].sum(axis=2) & 1).astype(np.uint8)
    sz = (xs[:, code.z_chk_q].sum(axis=2) & 1).astype(np.uint8)

    est_x = np.empty((count, n), dtype=np.uint8)
    est_z = np.empty((count, n), dtype=np.uint8)
    decided = np.zeros(count, dtype=bool)

    phase1_iters = min(_BP_PHASE1_ITERS, config.max_iter)
    survivors: list[int] = []
    for s0 in range(0, count, _BP_PHASE1_BATCH):
        sl = slice(s0, min(s0 + _BP_PHASE1_BATCH, count))
        bp = bp_decode_batch(code, sx[sl], sz[sl], prior, max_iter=phase1_iters, clip=config.clip)
        idxs = s0 + np.nonzero(bp.converged)[0]
        est_x[idxs] = bp.xh[bp.converged]
        est_z[idxs] = bp.zh[bp.converged]
        decided[idxs] = True
        survivors.extend((s0 + np.nonzero(~bp.converged)[0]).tolist())

    for b0 in range(0, len(survivors), _BP_PHASE2_BATCH):
        batch = survivors[b0 : b0 + _BP_PHASE2_BATCH]
        bp = bp_decode_batch(
            code, sx[batch], sz[batch], prior, max_iter=config.max_iter, clip=config.clip
        )
        for j, k in enumerate(batch):
            if bp.converged[j]:
                est_x[k] = bp.xh[j]
                est_z[k] = bp.zh[j]
                decided[k] = True
                continue
            state = BpState(
                beta=np.empty(0),
                alpha=np.empty(0),
                marginals=np.empty(0),
                cost_x=bp.cost_x[j],
                cost_z=bp.cost_z[j],
                iterations=int(bp.iterations[j]),
                converged=False,
            )
            outcome = decode(
                code,
                (sx[k], sz[k]),
                prior,
                config,
                _bp_result=(state, (bp.xh[j], bp.zh[j])),
            )
            if outcome.status == STATUS_FAILED_SYNDROME:
                fail_syndrome += 1
            else:
                est_x[k] = outcome.estimate_x
                est_z[k] = outcome.estimate_z
                decided[k] = True

    for k in np.nonzero(decided)[0]:
        idx = start + int(k)
        if np.array_equal(est_x[k], xs[k]) and np.array_equal(est_z[k], zs[k]):
            continue
        sc = check_sc(code, (est_x[k], est_z[k]), (xs[k], zs[k]))
        if sc.status == STATUS_LOGICAL:
            fail_logical += 1
            for side, resid in (("x", sc.residual_x), ("z", sc.residual_z)):
                if resid is not None:
                    logical_records.append(
                        {
                            "trial": idx,
                            "side": side,
                            "weight": int(resid.sum()),
                            "residual": resid.copy(),
                        }
                    )
        elif sc.status == STATUS_FAILED_SYNDROME:
            fail_syndrome += 1
    return {
        "trials": count,
        "fail_syndrome": fail_syndrome,
        "fail_logical": fail_logical,
        "logical_records": logical_records,
    }


def run_point(
    code: CssCode,
    p: float,
    trials: int,
    master_seed: int,
    config: Optional[DecoderConfig] = None,
    threads: int = 1,
    target_failures: Optional[int] = None,
    block_size: int = 4096,
    ledger: Optional[DistanceLedger] = None,
    checkpoint_path: Optional[str] = None,
) -> FerPoint:
    """Monte Carlo FER at a single physical error rate.

    Reproducible for fixed (p, trials, master_seed, config) regardless of
    ``threads``: per-trial randomness depends only on the master seed and
    trial index, and early stopping triggers at block boundaries.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    config = config or DecoderConfig()
    # Materialize lazy caches once so worker forks inherit them.
    code.row_cache_x, code.row_cache_z

    blocks = [
        (s, min(s + block_size, trials)) for s in range(0, trials, block_size)
    ]
    done_blocks = 0
    fail_syndrome = 0
    fail_logical = 0
    trials_done = 0
    records: list[dict] = []
    if checkpoint_path and os.path.exists(checkpoint_path):
        with open(checkpoint_path) as fh:
            ck = json.load(fh)
        if (
            ck["p"] == p
            and ck["master_seed"] == master_seed
            and ck["block_size"] == block_size
            and ck["trials"] == trials
        ):
            done_blocks = ck["done_blocks"]
            fail_syndrome = ck["fail_syndrome"]
            fail_logical = ck["fail_logical"]
            trials_done = ck["trials_done"]
            records = [
                {
                    "trial": r["trial"],
                    "side": r["side"],
                    "weight": r["weight"],
                    "residual": np.frombuffer(
                        bytes.fromhex(r["residual_hex"]), dtype=np.uint8
                    ).copy(),
                }
                for r in ck["records"]
            ]

    def checkpoint():
        if not checkpoint_path:
            return
        ck = {
            "p": p,
            "master_seed": master_seed,
            "block_size": block_size,
            "trials": trials,
            "done_blocks": done_blocks,
            "trials_done": trials_done,
            "fail_syndrome": fail_syndrome,
            "fail_logical": fail_logical,
            "records": [
                {
                    "trial": r["trial"],
                    "side": r["side"],
                    "weight": r["weight"],
                    "residual_hex": r["residual"].astype(np.uint8).tobytes().hex(),
                }
                for r in records
            ],
        }
        tmp = f"{checkpoint_path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(ck, fh)
        os.replace(tmp, checkpoint_path)

    def consume(result: dict) -> bool:
        nonlocal fail_syndrome, fail_logical, trials_done, done_blocks
        fail_syndrome += result["fail_syndrome"]
        fail_logical += result["fail_logical"]
        trials_done += result["trials"]
        records.extend(result["logical_records"])
        done_blocks += 1
        checkpoint()
        total = fail_syndrome + fail_logical
        return target_failures is not None and total >= target_failures

    pending = blocks[done_blocks:]
    if pending:
        if threads > 1:
            import multiprocessing as mp

            ctx = mp.get_context("fork")
            with ctx.Pool(
                threads, initializer=_init_worker, initargs=(code, p, config, master_seed)
            ) as pool:
                for result in pool.imap(_run_block, pending):
                    if consume(result):
                        pool.terminate()
                        break
        else:
            _init_worker(code, p, config, master_seed)
            for bounds in pending:
                if consume(_run_block(bounds)):
                    break

    min_weight = None
    if records:
        records.sort(key=lambda r: r["trial"])
        min_weight = min(r["weight"] for r in records)
        if ledger is not None:
            for r in records:
                ledger.record_logical(r["residual"], r["side"], p=p, trial=r["trial"])
    return FerPoint.from_counts(p, trials_done, fail_syndrome, fail_logical, min_weight)


# --- results files ----------------------------------------------------------------


def write_results_csv(path, points: list[FerPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for point in points:
            writer.writerow(point.csv_row())


def append_result_csv(path, point: FerPoint) -> None:
    new = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(RESULT_COLUMNS)
        writer.writerow(point.csv_row())


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != RESULT_COLUMNS:
            raise ValueError(
                f"unexpected results schema {reader.fieldnames}; want {RESULT_COLUMNS}"
            )
        rows = []
        for row in reader:
            rows.append(
                {
                    "p": float(row["p"]),
                    "trials": int(row["trials"]),
                    "fail_total": int(row["fail_total"]),
                    "fail_syndrome": int(row["fail_syndrome"]),
                    "fail_logical": int(row["fail_logical"]),
                    "fer": float(row["fer"]),
                    "wilson_lo": float(row["wilson_lo"]),
                    "wilson_hi": float(row["wilson_hi"]),
                }
            )
        return rows


def merge_results(csv_paths: list[str]) -> list[FerPoint]:
    """Merge partial result files: counts at equal p are summed."""
    if not csv_paths:
        raise ValueError("no result files given")
    acc: dict[float, dict] = {}
    for path in csv_paths:
        for row in read_results_csv(path):
            slot = acc.setdefault(
                row["p"], {"trials": 0, "fail_syndrome": 0, "fail_logical": 0}
            )
            slot["trials"] += row["trials"]
            slot["fail_syndrome"] += row["fail_syndrome"]
            slot["fail_logical"] += row["fail_logical"]
    return [
        FerPoint.from_counts(p, v["trials"], v["fail_syndrome"], v["fail_logical"])
        for p, v in sorted(acc.items())
    ]
