"""Plan driver and the optional lifted-girth rejection loop."""

import pytest

from acqldpc.basecode import build_base, standard_basis
from acqldpc.decoder import CssCode
from acqldpc.lift import QcLiftedCode, solve_labels, solve_labels_with_girth_floor
from acqldpc.sim import DistanceLedger, TrialPlan, run_plan, run_point
from acqldpc.tanner import TannerGraph, girth_at_least


@pytest.fixture(scope="module")
def base():
    return build_base(standard_basis())


def test_girth_floor_8_accepts_first_sample(base):
    spec = solve_labels_with_girth_floor(base, 2, seed=5, girth_floor=8)
    assert spec.to_json_dict() == solve_labels(base, 2, seed=5).to_json_dict()
    hx, hz = QcLiftedCode(base, spec).matrices
    assert girth_at_least(TannerGraph.from_bitmatrix(hx), 8)
    assert girth_at_least(TannerGraph.from_bitmatrix(hz), 8)


def test_girth_floor_unreachable_raises(base):
    with pytest.raises(ValueError):
        solve_labels_with_girth_floor(base, 2, seed=0, girth_floor=40, max_attempts=2)


def test_run_plan_matches_run_point(base):
    code = CssCode.from_base(base)
    plan = TrialPlan(ps=[0.03, 0.05], trials=600, master_seed=9, block_size=200)
    points = run_plan(code, plan, threads=1)
    for p, point in zip(plan.ps, points):
        solo = run_point(code, p, 600, 9, block_size=200)
        assert point == solo
