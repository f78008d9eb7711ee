"""Length-512 CSS base matrix pair built from affine cosets.

Qubits are the 512 points of F_2^9.  A choice of nine independent basis
vectors splits the space into three 3-dimensional blocks A, B, C (and the
three aligned blocks D1, D2, D3 taking one basis vector from each).  Every
check is the incidence vector of an affine coset of one of those six
subspaces: cosets of A, B, C stacked give the X side, cosets of D1, D2, D3
the Z side.  Columns are ordered by the integer value of the physical point;
rows are ordered family-major with coset representatives in integer order of
the fixed coordinates, which for the standard basis reproduces the familiar
block-diagonal picture on the top 64 rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import gf2
from .gf2 import BitMatrix, BitVector

N_QUBITS = 512
ROWS_PER_SIDE = 192
COSETS_PER_FAMILY = 64

X_FAMILIES = ("A", "B", "C")
Z_FAMILIES = ("D1", "D2", "D3")

# Free coordinate positions (indices into the 9-bit basis-coordinate vector,
# a-coordinates lowest) spanned by each subspace family.
FAMILY_FREE_POSITIONS = {
    "A": (0, 1, 2),
    "B": (3, 4, 5),
    "C": (6, 7, 8),
    "D1": (0, 3, 6),
    "D2": (1, 4, 7),
    "D3": (2, 5, 8),
}


class DegenerateBasisError(ValueError):
    """Raised when the nine chosen vectors are linearly dependent."""


@dataclass(frozen=True)
class BasisChoice:
    """Nine ordered basis vectors (a1,a2,a3,b1,b2,b3,c1,c2,c3) of F_2^9.

    Each vector is a 9-bit integer with the a-coordinates least significant.
    """

    vectors: tuple[int, ...]

    def __post_init__(self):
        if len(self.vectors) != 9:
            raise DegenerateBasisError("need exactly nine basis vectors")
        if any(not 0 < v < 512 for v in self.vectors):
            raise DegenerateBasisError("basis vectors must be nonzero 9-bit values")
        mat = BitMatrix.from_dense(
            np.array([[(v >> i) & 1 for i in range(9)] for v in self.vectors], dtype=np.uint8)
        )
        if gf2.rank(mat) != 9:
            raise DegenerateBasisError("basis vectors are linearly dependent over GF(2)")

    def map_point(self, coords: int) -> int:
        """Image of a coordinate tuple (packed as a 9-bit int) under the basis."""
        out = 0
        for i in range(9):
            if (coords >> i) & 1:
                out ^= self.vectors[i]
        return out

    def point_table(self) -> np.ndarray:
        """coords -> physical point, for all 512 coordinate tuples."""
        table = np.zeros(N_QUBITS, dtype=np.int64)
        for i in range(9):
            step = 1 << i
            table[step : 2 * step] = table[:step] ^ self.vectors[i]
        return table


def standard_basis() -> BasisChoice:
    return BasisChoice(tuple(1 << i for i in range(9)))


def random_basis(seed: int) -> BasisChoice:
    """Rejection-sample nine vectors until they are independent."""
    rng = np.random.default_rng(seed)
    while True:
        vectors = tuple(int(v) for v in rng.integers(1, 512, size=9))
        try:
            return BasisChoice(vectors)
        except DegenerateBasisError:
            continue


@dataclass(frozen=True)
class RowInfo:
    family: str
    rep: int


@dataclass
class BaseCode:
    """The 192x512 CSS pair plus per-row family/coset metadata."""

    hx: BitMatrix
    hz: BitMatrix
    basis: BasisChoice
    x_rows: list[RowInfo]
    z_rows: list[RowInfo]

    @property
    def n(self) -> int:
        return self.hx.cols


def _family_supports(family: str, table: np.ndarray) -> list[np.ndarray]:
    """Supports (physical column indices, sorted) of the 64 cosets of a family."""
    free = FAMILY_FREE_POSITIONS[family]
    fixed = [i for i in range(9) if i not in free]
    supports = []
    for rep in range(COSETS_PER_FAMILY):
        origin = 0
        for k, pos in enumerate(fixed):
            if (rep >> k) & 1:
                origin |= 1 << pos
        coords = [origin | sum(((m >> t) & 1) << free[t] for t in range(3)) for m in range(8)]
        supports.append(np.sort(table[coords]))
    return supports


def build_base(basis: BasisChoice) -> BaseCode:
    """Stack the coset incidence matrices of A,B,C (X side) and D1,D2,D3 (Z side)."""
    table = basis.point_table()
    x_rows: list[RowInfo] = []
    z_rows: list[RowInfo] = []
    hx = BitMatrix.zeros(ROWS_PER_SIDE, N_QUBITS)
    hz = BitMatrix.zeros(ROWS_PER_SIDE, N_QUBITS)
    for side, families, mat, rows in (
        ("x", X_FAMILIES, hx, x_rows),
        ("z", Z_FAMILIES, hz, z_rows),
    ):
        r = 0
        for family in families:
            for rep, support in enumerate(_family_supports(family, table)):
                for col in support:
                    mat.set(r, int(col), 1)
                rows.append(RowInfo(family, rep))
                r += 1
    return BaseCode(hx, hz, basis, x_rows, z_rows)


def row_index(family: str, rep: int) -> int:
    """Row index of a coset inside its side's stacked matrix."""
    families = X_FAMILIES if family in X_FAMILIES else Z_FAMILIES
    return families.index(family) * COSETS_PER_FAMILY + rep


def coset_rep_index(basis: BasisChoice, family: str, point: int) -> int:
    """Representative index of the coset of ``family`` containing ``point``."""
    coords = _coords_of_point(basis, point)
    free = FAMILY_FREE_POSITIONS[family]
    fixed = [i for i in range(9) if i not in free]
    rep = 0
    for k, pos in enumerate(fixed):
        if (coords >> pos) & 1:
            rep |= 1 << k
    return rep


def _coords_of_point(basis: BasisChoice, point: int) -> int:
    # Invert the basis map once per call; fine for witness construction.
    table = basis.point_table()
    idx = int(np.nonzero(table == point)[0][0])
    return idx


# --- verification -----------------------------------------------------------


@dataclass
class StructureReport:
    row_weights_ok: bool
    column_weights_ok: bool
    orthogonal: bool
    cross_intersections_ok: bool
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.row_weights_ok
            and self.column_weights_ok
            and self.orthogonal
            and self.cross_intersections_ok
        )


def verify_regularity_orthogonality(code: BaseCode) -> StructureReport:
    """Check (3,8)-regularity, CSS orthogonality and cross intersections in {0,2}."""
    failures: list[str] = []
    rw_ok = True
    cw_ok = True
    for name, mat in (("hx", code.hx), ("hz", code.hz)):
        if not (mat.row_weights() == 8).all():
            rw_ok = False
            failures.append(f"{name}: row weight != 8")
        if not (mat.column_weights() == 3).all():
            cw_ok = False
            failures.append(f"{name}: column weight != 3")
    inter = np.zeros((code.hx.rows, code.hz.rows), dtype=np.int64)
    for i in range(code.hx.rows):
        inter[i] = np.bitwise_count(code.hx.words[i] & code.hz.words).sum(axis=1)
    orth = not (inter % 2).any()
    if not orth:
        bad = np.argwhere(inter % 2)
        failures.append(
            f"orthogonality fails on {len(bad)} row pairs, first {tuple(bad[0])}"
        )
    cross_ok = bool(np.isin(inter, (0, 2)).all())
    if not cross_ok and orth:
        failures.append("cross intersection size outside {0,2}")
    return StructureReport(rw_ok, cw_ok, orth, cross_ok, failures)


def orthogonality_failures(code: BaseCode) -> list[tuple[int, int]]:
    """All (x_row, z_row) pairs with odd support overlap."""
    bad = []
    for i in range(code.hx.rows):
        parities = np.bitwise_count(code.hx.words[i] & code.hz.words).sum(axis=1) & 1
        for j in np.nonzero(parities)[0]:
            bad.append((i, int(j)))
    return bad


def base_dimension(code: BaseCode) -> tuple[int, int, int]:
    """(rank_x, rank_z, k) with k = n - rank_x - rank_z."""
    rx = gf2.rank(code.hx)
    rz = gf2.rank(code.hz)
    return rx, rz, code.n - rx - rz


# --- SPC(3) product-code equivalence ----------------------------------------


def spc3_supports() -> tuple[list[list[set[int]]], list[list[set[int]]]]:
    """Check supports of the 3-fold single-parity-check product code.

    X-check families fix two of the three coordinate blocks and vary the
    remaining block; Z-check families fix everything except one aligned
    coordinate position across the three blocks.  Points are 9-bit integers
    in the standard coordinate packing.
    """
    std = standard_basis()
    table = std.point_table()
    x_fams = [[set(map(int, s)) for s in _family_supports(f, table)] for f in X_FAMILIES]
    z_fams = [[set(map(int, s)) for s in _family_supports(f, table)] for f in Z_FAMILIES]
    return x_fams, z_fams


@dataclass
class Spc3Report:
    x_families_match: bool
    z_families_match: bool
    identical_without_permutation: bool

    @property
    def ok(self) -> bool:
        return self.x_families_match and self.z_families_match


def verify_spc3_equivalence(basis: BasisChoice) -> Spc3Report:
    """Check that the basis map sends SPC(3) check supports onto the coset supports.

    The linear map T sends the i-th standard basis vector to the i-th chosen
    basis vector; as a bijection on points it must carry each SPC(3) check
    family onto the corresponding coset family, as sets of supports.
    """
    code = build_base(basis)
    spc_x, spc_z = spc3_supports()
    identical = True
    fams_ok = []
    for families, mat, spc in (
        (X_FAMILIES, code.hx, spc_x),
        (Z_FAMILIES, code.hz, spc_z),
    ):
        side_ok = True
        for fi, family in enumerate(families):
            rows = range(fi * COSETS_PER_FAMILY, (fi + 1) * COSETS_PER_FAMILY)
            built = [frozenset(map(int, mat.row_support(r))) for r in rows]
            mapped = [frozenset(basis.map_point(p) for p in s) for s in spc[fi]]
            raw = [frozenset(s) for s in spc[fi]]
            if built != raw:
                identical = False
            if set(built) != set(mapped):
                side_ok = False
        fams_ok.append(side_ok)
    return Spc3Report(fams_ok[0], fams_ok[1], identical)


def eight_cycle_witness(code: BaseCode, side: str) -> tuple[list[int], list[int]]:
    """Explicit length-8 cycle through the first two check families.

    X side: with a the first basis vector of A and b the first of B, the
    cycle visits cosets A, B, b+A, a+B through qubits 0, b, a+b, a.  Z side
    mirrors it with u in D1, v in D2.  Returns (check_rows, qubits) with
    qubits[i] joining check i and check i+1 (cyclically), in physical
    column indices and side-local row indices.
    """
    basis = code.basis
    if side == "x":
        fam1, fam2 = "A", "B"
        a = basis.vectors[0]
        b = basis.vectors[3]
    elif side == "z":
        fam1, fam2 = "D1", "D2"
        a = basis.vectors[0]  # in D1
        b = basis.vectors[1]  # in D2
    else:
        raise ValueError("side must be 'x' or 'z'")
    points = [0, b, a ^ b, a]
    checks = [
        row_index(fam1, coset_rep_index(basis, fam1, 0)),
        row_index(fam2, coset_rep_index(basis, fam2, 0)),
        row_index(fam1, coset_rep_index(basis, fam1, b)),
        row_index(fam2, coset_rep_index(basis, fam2, a)),
    ]
    return checks, points


# --- randomized low-weight logical search (information-set style) ----------


def find_low_weight_logical(
    code: BaseCode,
    side: str,
    weight_budget: int,
    effort: int = 100_000,
    seed: int = 0,
    kernel_matrix: Optional[BitMatrix] = None,
    stabilizer_cache: Optional[gf2.RowEchelonCache] = None,
) -> Optional[BitVector]:
    """Randomized search for a low-weight logical operator.

    side="z" looks for v with hx v = 0 and v outside row(hz); side="x" the
    mirror image.  The search keeps a reduced kernel basis and randomly
    drifts the information set one column per iteration, harvesting basis
    rows whose weight fits the budget.  Not finding anything is evidence
    only, never a distance proof.
    """
    if weight_budget < 1:
        raise ValueError("weight_budget must be >= 1")
    if side not in ("x", "z"):
        raise ValueError("side must be 'x' or 'z'")
    check = code.hx if side == "z" else code.hz
    stab = code.hz if side == "z" else code.hx
    kernel = kernel_matrix if kernel_matrix is not None else gf2.nullspace(check)
    if kernel.rows == 0:
        return None
    cache = stabilizer_cache if stabilizer_cache is not None else gf2.row_echelon_cache(stab)

    words = kernel.words.copy()
    pivots = gf2._eliminate(words, kernel.cols, reduced=True)
    pivot_of_row = np.asarray(pivots, dtype=np.int64)
    k = len(pivots)
    words = words[:k]
    n = kernel.cols
    rng = np.random.default_rng(seed)

    def harvest() -> Optional[BitVector]:
        weights = np.bitwise_count(words).sum(axis=1)
        for i in np.argsort(weights, kind="stable"):
            if weights[i] > weight_budget:
                break
            v = BitVector(n, words[i].copy())
            if not gf2.in_row_space(cache, v):
                return v
        return None

    found = harvest()
    if found is not None:
        return found
    for _ in range(effort):
        i = int(rng.integers(k))
        support = gf2._unpack_rows(words[i : i + 1], n)[0].nonzero()[0]
        support = support[support != pivot_of_row[i]]
        if support.size == 0:
            continue
        j = int(support[rng.integers(support.size)])
        col = gf2._column_bits(words, j)
        targets = np.nonzero(col)[0]
        targets = targets[targets != i]
        if targets.size:
            words[targets] ^= words[i]
        pivot_of_row[i] = j
        found = harvest()
        if found is not None:
            return found
    return None
