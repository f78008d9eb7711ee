"""Acceptance suite: one test per acceptance criterion, heaviest last.

Each test prints an ``ACCEPTANCE <criterion>: PASS`` line on success (run
with ``-s`` to see them live).  The FER criterion drives the P=4 lift at
three error rates with 10^5 trials per point and two master seeds; trial
count can be overridden via ACQLDPC_ACCEPT_FER_TRIALS (values below 10^5
no longer satisfy the criterion as stated).
"""

import itertools
import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from acqldpc import gf2
from acqldpc.basecode import (
    base_dimension,
    build_base,
    eight_cycle_witness,
    find_low_weight_logical,
    random_basis,
    standard_basis,
    verify_regularity_orthogonality,
    verify_spc3_equivalence,
)
from acqldpc.decoder import (
    STATUS_FAILED_SYNDROME,
    STATUS_LOGICAL,
    STATUS_SUCCESS,
    CssCode,
    DecoderConfig,
    DepolarizingPrior,
    check_sc,
    classify_outcome,
    compute_syndrome,
    decode,
    min_solvable_prefix,
    osd_bisect,
    reliability_order,
)
from acqldpc.gf2 import BitMatrix, BitVector
from acqldpc.lift import (
    QcLiftedCode,
    intersection_pairs,
    lifted_dimension,
    solve_labels,
    verify_expanded_orthogonality,
)
from acqldpc.sim import (
    DE_REFERENCE_P,
    DistanceLedger,
    LedgerRejection,
    binary_entropy,
    hashing_bound_p,
    run_point,
    wilson_interval,
    write_reference_sidecar,
    write_results_csv,
)
from acqldpc.tanner import (
    TannerGraph,
    girth,
    girth_at_least,
    has_4cycle,
    has_6cycle,
    validate_cycle_witness,
)
from tests.test_gf2 import naive_solvable

ARTIFACTS = Path(__file__).parent.parent / "artifacts"
ARTIFACTS.mkdir(exist_ok=True)

FER_TRIALS = int(os.environ.get("ACQLDPC_ACCEPT_FER_TRIALS", "100000"))
FER_PS = (0.04, 0.06, 0.08)


def _ok(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


@pytest.fixture(scope="module")
def base():
    return build_base(standard_basis())


@pytest.fixture(scope="module")
def base_css(base):
    return CssCode.from_base(base)


@pytest.fixture(scope="module")
def p4_css(base):
    return CssCode.from_lifted(QcLiftedCode(base, solve_labels(base, 4, seed=0)))


def test_base_structural_suite(base):
    assert base.hx.rows == 192 and base.hx.cols == 512
    assert base.hz.rows == 192 and base.hz.cols == 512
    report = verify_regularity_orthogonality(base)
    assert report.row_weights_ok and report.column_weights_ok
    assert report.orthogonal and report.cross_intersections_ok, report.failures
    inter = np.zeros((192, 192), dtype=np.int64)
    for i in range(192):
        inter[i] = np.bitwise_count(base.hx.words[i] & base.hz.words).sum(axis=1)
    assert set(np.unique(inter)) <= {0, 2}
    _ok("base-structural")


def test_girth_suite(base):
    for side, mat in (("x", base.hx), ("z", base.hz)):
        g = TannerGraph.from_bitmatrix(mat)
        assert has_4cycle(g) is None
        assert has_6cycle(g) is None
        assert girth(g) == 8
        checks, qubits = eight_cycle_witness(base, side)
        assert validate_cycle_witness(g, checks, qubits)
    _ok("girth")


def test_dimension_suite(base):
    rx, rz, k = base_dimension(base)
    assert (rx, rz, k) == (169, 169, 174)
    _ok("dimension")


def test_spc3_equivalence_suite():
    report = verify_spc3_equivalence(standard_basis())
    assert report.ok and report.identical_without_permutation
    for seed in range(20):
        assert verify_spc3_equivalence(random_basis(seed)).ok, seed
    _ok("spc3-equivalence")


def test_distance_evidence(base):
    found = find_low_weight_logical(base, "z", weight_budget=8, effort=200_000, seed=1)
    assert found is not None and found.weight() == 8
    assert base.hx.mul_vector(found).is_zero()
    assert not gf2.in_row_space(gf2.row_echelon_cache(base.hz), found)
    none_found = find_low_weight_logical(
        base, "z", weight_budget=7, effort=1_000_000, seed=2
    )
    assert none_found is None
    _ok("distance-evidence (d<=8 found; nothing below 8 in 1e6 iterations)")


def test_lift_suite(base):
    zero_spec = solve_labels(base, 2, seed=0)
    zero = type(zero_spec)(
        2,
        {k: 0 for k in zero_spec.x_labels},
        {k: 0 for k in zero_spec.z_labels},
    )
    assert lifted_dimension(QcLiftedCode(base, zero)) == (338, 338, 348)

    p1 = QcLiftedCode(base, solve_labels(base, 1))
    hx1, hz1 = p1.matrices
    assert np.array_equal(hx1.to_dense(), base.hx.to_dense())
    assert np.array_equal(hz1.to_dense(), base.hz.to_dense())

    diagnostics = []
    for P, seed in itertools.product((1, 2, 4, 8, 32), range(5)):
        spec = solve_labels(base, P, seed=seed)
        spec.validate(base)  # every congruence re-checked
        code = QcLiftedCode(base, spec)
        hx, hz = code.matrices
        assert verify_expanded_orthogonality(hx, hz), (P, seed)
        for mat in (hx, hz):
            assert (mat.row_weights() == 8).all()
            assert (mat.column_weights() == 3).all()
        rx, rz, k = lifted_dimension(code)
        assert k >= 128 * P, (P, seed, k)
        assert girth_at_least(TannerGraph.from_bitmatrix(hx), 8), (P, seed)
        assert girth_at_least(TannerGraph.from_bitmatrix(hz), 8), (P, seed)
        if P == 32:
            diagnostics.append((seed, rx, rz, k))
    # The published-label instance reports rank 6121 / k = 4142; with freshly
    # solved labels those values are diagnostics, not assertions.
    for seed, rx, rz, k in diagnostics:
        print(f"  [diagnostic] P=32 seed={seed}: rank_x={rx} rank_z={rz} k={k}")
    _ok("lift (P in {1,2,4,8,32} x 5 seeds)")


def test_decoder_oracle_suite(base, base_css):
    rng = np.random.default_rng(11)
    for trial in range(200):
        rows = int(rng.integers(4, 13))
        cols = int(rng.integers(6, 25))
        dense = (rng.random((rows, cols)) < 0.3).astype(np.uint8)
        if rng.random() < 0.7:
            xt = (rng.random(cols) < 0.3).astype(np.uint8)
            r = (dense @ xt) % 2
        else:
            r = (rng.random(rows) < 0.5).astype(np.uint8)
        order = rng.permutation(cols)
        brute = None if r.any() else 0
        if brute is None:
            for m in range(1, cols + 1):
                if naive_solvable(dense[:, order[:m]], r):
                    brute = m
                    break
        got = min_solvable_prefix(BitMatrix.from_dense(dense), r, order)
        assert got == brute, (trial, got, brute)

    # accepted corrections clear their residual on recomputation
    hz_dense = base_css.hz.to_dense()
    cache = base_css.row_cache_x
    for trial in range(25):
        xt = (rng.random(base_css.n) < 0.01).astype(np.uint8)
        r = ((hz_dense @ xt) % 2).astype(np.uint8)
        costs = rng.random(base_css.n)
        costs[xt.astype(bool)] *= 0.01
        delta = osd_bisect(base_css.hz, r, costs, cache)
        if delta is not None:
            assert not ((hz_dense @ delta) % 2 ^ r).any()

    x = (rng.random(base_css.n) < 0.01).astype(np.uint8)
    z = (rng.random(base_css.n) < 0.01).astype(np.uint8)
    truth = (x, z)
    assert check_sc(base_css, (x, z), truth).status == STATUS_SUCCESS
    stab_x = base_css.hx.to_dense()[7]
    stab_z = base_css.hz.to_dense()[100]
    assert check_sc(base_css, (x ^ stab_x, z ^ stab_z), truth).status == STATUS_SUCCESS
    logical = find_low_weight_logical(base, "z", 8, effort=100_000, seed=3)
    sc = check_sc(base_css, (x, z ^ logical.to_dense()), truth)
    assert sc.status == STATUS_LOGICAL and sc.weight_z == 8
    _ok("decoder-oracle (200 prefix oracles; corrections recompute; SC triple)")


def test_decoder_correction_suite(base_css):
    prior = DepolarizingPrior(0.01)
    cfg = DecoderConfig()

    def run(x, z):
        s = compute_syndrome(base_css, (x, z))
        out = classify_outcome(base_css, decode(base_css, s, prior, cfg), (x, z))
        assert out.status not in (STATUS_FAILED_SYNDROME, STATUS_LOGICAL)

    for q in range(base_css.n):
        for pauli in ("X", "Y", "Z"):
            x = np.zeros(base_css.n, dtype=np.uint8)
            z = np.zeros(base_css.n, dtype=np.uint8)
            if pauli in ("X", "Y"):
                x[q] = 1
            if pauli in ("Y", "Z"):
                z[q] = 1
            run(x, z)

    rng = np.random.default_rng(29)
    for weight in (2, 3):
        for _ in range(10_000):
            qs = rng.choice(base_css.n, size=weight, replace=False)
            x = np.zeros(base_css.n, dtype=np.uint8)
            z = np.zeros(base_css.n, dtype=np.uint8)
            for q in qs:
                pa = rng.integers(3)
                if pa in (0, 1):
                    x[q] = 1
                if pa in (1, 2):
                    z[q] = 1
            run(x, z)
    _ok("decoder-correction (1536 singles; 2x10^4 weight-2/3)")


def test_distance_ledger_behavior(base, base_css):
    ledger = DistanceLedger(base_css)
    logical = find_low_weight_logical(base, "z", 8, effort=100_000, seed=5)
    ledger.record_logical(logical.to_dense(), "z", p=0.01, trial=0)
    assert ledger.best_bound() == 8
    with pytest.raises(LedgerRejection):
        ledger.record_logical(base_css.hz.to_dense()[0], "z")
    _ok("distance-ledger")


def test_hashing_bound_and_de_constant(tmp_path):
    p = hashing_bound_p(0.25)
    residual = 1 - binary_entropy(p) - p * math.log2(3) - 0.25
    assert abs(residual) < 1e-9
    sidecar = write_reference_sidecar(tmp_path / "refs.json")
    on_disk = json.loads((tmp_path / "refs.json").read_text())
    assert on_disk["de_reference"] == 0.1009 == DE_REFERENCE_P
    assert "reference constant" in on_disk["de_reference_note"]
    _ok("hashing-bound (residual < 1e-9; DE constant verbatim)")


def test_desk_scale_fer(p4_css):
    threads_a = max(1, min(4, os.cpu_count() or 1))
    threads_b = 3 if threads_a != 3 else 2
    config = DecoderConfig()

    def sweep(seed: int, threads: int, tag: str) -> tuple[Path, list]:
        points = []
        ledger = DistanceLedger(p4_css)
        for p in FER_PS:
            points.append(
                run_point(
                    p4_css, p, FER_TRIALS, seed,
                    config=config, threads=threads, block_size=4096, ledger=ledger,
                )
            )
        path = ARTIFACTS / f"fer_p4_{tag}.csv"
        write_results_csv(path, points)
        if tag == "seed_a":
            ledger.save_jsonl(ARTIFACTS / "fer_p4_seed_a.ledger.jsonl", master_seed=seed)
        return path, points

    path_a, pts_a = sweep(20240, threads_a, "seed_a")
    path_b, pts_b = sweep(77001, threads_a, "seed_b")
    write_reference_sidecar(ARTIFACTS / "fer_p4_refs.json")

    for pts in (pts_a, pts_b):
        assert pts[0].fer < pts[1].fer < pts[2].fer, [
            (pt.p, pt.fer) for pt in pts
        ]
        for pt in pts:
            assert pt.trials >= min(FER_TRIALS, 100_000)

    for pa, pb in zip(pts_a, pts_b):
        assert pa.wilson_lo <= pb.wilson_hi and pb.wilson_lo <= pa.wilson_hi, (
            "seed intervals must overlap",
            (pa.p, pa.wilson_lo, pa.wilson_hi),
            (pb.p, pb.wilson_lo, pb.wilson_hi),
        )

    path_rerun, _ = sweep(20240, threads_b, "seed_a_rerun")
    assert path_a.read_bytes() == path_rerun.read_bytes()
    for pt in pts_a:
        print(
            f"  [fer] p={pt.p}: {pt.failures_total}/{pt.trials} "
            f"fer={pt.fer:.3e} wilson=({pt.wilson_lo:.3e},{pt.wilson_hi:.3e})"
        )
    _ok(
        "desk-scale-fer (strictly decreasing; seed CIs overlap; "
        f"bitwise-identical at {threads_a} vs {threads_b} threads)"
    )
