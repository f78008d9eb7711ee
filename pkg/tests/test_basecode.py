"""Base pair construction: regularity, orthogonality, dimension, SPC(3)."""

import numpy as np
import pytest

from acqldpc import gf2
from acqldpc.basecode import (
    BasisChoice,
    DegenerateBasisError,
    base_dimension,
    build_base,
    find_low_weight_logical,
    orthogonality_failures,
    random_basis,
    standard_basis,
    verify_regularity_orthogonality,
    verify_spc3_equivalence,
)
from tests.test_gf2 import naive_rank


@pytest.fixture(scope="module")
def base():
    return build_base(standard_basis())


def test_shapes(base):
    assert base.hx.rows == 192 and base.hx.cols == 512
    assert base.hz.rows == 192 and base.hz.cols == 512
    assert len(base.x_rows) == 192 and len(base.z_rows) == 192


def test_standard_basis_block_pattern(base):
    # Top block: row r supports the consecutive column block [8r, 8r+8).
    for r in range(64):
        assert base.hx.row_support(r).tolist() == list(range(8 * r, 8 * r + 8))


def test_structure_report_passes(base):
    report = verify_regularity_orthogonality(base)
    assert report.ok, report.failures


def test_cross_intersections_in_0_2(base):
    inter = np.zeros((192, 192), dtype=np.int64)
    for i in range(192):
        inter[i] = np.bitwise_count(base.hx.words[i] & base.hz.words).sum(axis=1)
    assert set(np.unique(inter)) <= {0, 2}


def test_same_side_intersections_at_most_one(base):
    for mat in (base.hx, base.hz):
        for i in range(mat.rows):
            counts = np.bitwise_count(mat.words[i] & mat.words).sum(axis=1)
            counts[i] = 0
            assert counts.max() <= 1


def test_perturbed_bit_breaks_orthogonality(base):
    code = build_base(standard_basis())
    # Flip one bit; exactly the z-rows meeting that column with odd parity fail.
    code.hx.set(0, 100, 1 - code.hx.get(0, 100))
    bad = orthogonality_failures(code)
    assert bad, "perturbation must break orthogonality somewhere"
    assert all(i == 0 for i, _ in bad)
    touched = {int(s) for s in range(192) if code.hz.get(s, 100)}
    assert {j for _, j in bad} == touched


def test_dimension(base):
    rx, rz, k = base_dimension(base)
    assert (rx, rz, k) == (169, 169, 174)


def test_rank_against_naive_reference(base):
    assert naive_rank(base.hx.to_dense()) == 169


def test_zero_matrices_give_k_512(base):
    code = build_base(standard_basis())
    code.hx.words[:] = 0
    code.hz.words[:] = 0
    assert base_dimension(code) == (0, 0, 512)


def test_degenerate_basis_rejected():
    with pytest.raises(DegenerateBasisError):
        BasisChoice((1, 2, 3, 8, 16, 32, 64, 128, 256))
    with pytest.raises(DegenerateBasisError):
        BasisChoice((1, 2, 4, 8, 16, 32, 64, 128))


def test_random_bases_pass_structure_checks():
    for seed in range(100):
        code = build_base(random_basis(seed))
        report = verify_regularity_orthogonality(code)
        assert report.ok, (seed, report.failures)


def test_k_is_basis_independent():
    for seed in (3, 11, 42):
        code = build_base(random_basis(seed))
        assert base_dimension(code)[2] == 174


def test_bases_related_by_column_permutation():
    b1, b2 = random_basis(1), random_basis(2)
    c1, c2 = build_base(b1), build_base(b2)
    # Column p of c1 is physical point t1[coords]; in c2 that point sits at
    # column index t2[coords].  Permuting c1's columns accordingly gives c2.
    t1, t2 = b1.point_table(), b2.point_table()
    perm = np.empty(512, dtype=np.int64)
    perm[t1] = t2  # physical point under b1 -> column under b2... both identity maps
    d1 = c1.hx.to_dense()
    d2 = c2.hx.to_dense()
    permuted = np.zeros_like(d1)
    permuted[:, perm[np.arange(512)]] = d1
    assert np.array_equal(permuted, d2)


def test_spc3_standard_identical():
    report = verify_spc3_equivalence(standard_basis())
    assert report.ok and report.identical_without_permutation


def test_spc3_random_bases():
    for seed in (5, 6):
        report = verify_spc3_equivalence(random_basis(seed))
        assert report.ok


def test_spc3_swapped_basis_vectors_still_pass():
    vecs = list(standard_basis().vectors)
    vecs[0], vecs[1] = vecs[1], vecs[0]
    report = verify_spc3_equivalence(BasisChoice(tuple(vecs)))
    assert report.ok


def test_find_weight8_logical(base):
    v = find_low_weight_logical(base, "z", weight_budget=8, effort=50_000, seed=1)
    assert v is not None and v.weight() == 8
    assert base.hx.mul_vector(v).is_zero()
    assert not gf2.in_row_space(gf2.row_echelon_cache(base.hz), v)


def test_find_logical_x_side(base):
    v = find_low_weight_logical(base, "x", weight_budget=8, effort=50_000, seed=2)
    assert v is not None and v.weight() <= 8
    assert base.hz.mul_vector(v).is_zero()
    assert not gf2.in_row_space(gf2.row_echelon_cache(base.hx), v)


def test_find_logical_huge_budget_trivial(base):
    v = find_low_weight_logical(base, "z", weight_budget=512, effort=10, seed=3)
    assert v is not None
    assert base.hx.mul_vector(v).is_zero()


def test_budget7_short_run_finds_nothing(base):
    # Smoke-scale version of the distance-evidence criterion.
    v = find_low_weight_logical(base, "z", weight_budget=7, effort=20_000, seed=4)
    assert v is None
