"""Circulant permutation matrix (CPM) lifts of the base pair.

A P-lift replaces each of the 1536 nonzero entries per side with a P x P
cyclic shift block.  CSS orthogonality survives the lift exactly when, for
every X-row r and Z-row s meeting in the two qubits {v1, v2},

    x(r,v1) - z(s,v1) == x(r,v2) - z(s,v2)   (mod P).

``solve_labels`` treats these as a sparse linear system over Z_P with all
coefficients +-1 and eliminates with unit pivots; free variables are drawn
uniformly from the seeded generator.  The CPM orientation is fixed globally
as row i -> column (i + t) mod P.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Optional

import numpy as np

from . import gf2
from .basecode import BaseCode
from .gf2 import BitMatrix


class LabelFileError(ValueError):
    """Malformed shift-label file."""


class SupportMismatchError(ValueError):
    """Labels do not cover exactly the nonzero entries of the base pair."""


class CongruenceError(ValueError):
    """A lift congruence is violated; carries the offending row pair."""

    def __init__(self, x_row: int, z_row: int):
        self.x_row = x_row
        self.z_row = z_row
        super().__init__(
            f"lift congruence violated for X-row {x_row} and Z-row {z_row}"
        )


def cpm(P: int, t: int) -> BitMatrix:
    """P x P circulant permutation matrix with entry (i, (i+t) mod P) = 1."""
    if not 0 <= t < P:
        raise ValueError(f"shift {t} outside [0, {P})")
    m = BitMatrix.zeros(P, P)
    for i in range(P):
        m.set(i, (i + t) % P, 1)
    return m


def _support_edges(mat: BitMatrix) -> list[tuple[int, int]]:
    """Nonzero positions in (row, column) order."""
    edges = []
    for r in range(mat.rows):
        for v in mat.row_support(r):
            edges.append((r, int(v)))
    return edges


def intersection_pairs(base: BaseCode) -> list[tuple[int, int, int, int]]:
    """All (x_row, z_row, v1, v2) with two-point support intersection, v1 < v2."""
    z_rows_of_qubit: list[list[int]] = [[] for _ in range(base.n)]
    for s in range(base.hz.rows):
        for v in base.hz.row_support(s):
            z_rows_of_qubit[int(v)].append(s)
    pairs = []
    for r in range(base.hx.rows):
        hits: dict[int, list[int]] = {}
        for v in base.hx.row_support(r):
            for s in z_rows_of_qubit[int(v)]:
                hits.setdefault(s, []).append(int(v))
        for s in sorted(hits):
            qubits = hits[s]
            if len(qubits) == 2:
                v1, v2 = sorted(qubits)
                pairs.append((r, s, v1, v2))
            elif len(qubits) > 2:
                raise ValueError(
                    f"base rows ({r},{s}) share {len(qubits)} qubits; expected 0 or 2"
                )
    return pairs


@dataclass
class LiftSpec:
    """Lift factor plus shift labels on the two edge supports."""

    P: int
    x_labels: dict[tuple[int, int], int]
    z_labels: dict[tuple[int, int], int]

    def validate(self, base: BaseCode) -> None:
        """Check domains match the base supports and all congruences hold."""
        if self.P < 1:
            raise ValueError("lift factor must be >= 1")
        for name, labels, mat in (
            ("x_labels", self.x_labels, base.hx),
            ("z_labels", self.z_labels, base.hz),
        ):
            expected = set(_support_edges(mat))
            got = set(labels)
            if got != expected:
                extra = sorted(got - expected)
                missing = sorted(expected - got)
                raise SupportMismatchError(
                    f"{name} domain mismatch: {len(extra)} labels off-support "
                    f"(first {extra[:1]}), {len(missing)} supports unlabeled"
                )
            for key, t in labels.items():
                if not 0 <= t < self.P:
                    raise LabelFileError(f"{name}[{key}] = {t} outside [0, {self.P})")
        for r, s, v1, v2 in intersection_pairs(base):
            lhs = (self.x_labels[(r, v1)] - self.z_labels[(s, v1)]) % self.P
            rhs = (self.x_labels[(r, v2)] - self.z_labels[(s, v2)]) % self.P
            if lhs != rhs:
                raise CongruenceError(r, s)

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "P": self.P,
            "x_labels": [[r, v, t] for (r, v), t in sorted(self.x_labels.items())],
            "z_labels": [[s, v, t] for (s, v), t in sorted(self.z_labels.items())],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")


def load_labels(base: BaseCode, path) -> LiftSpec:
    """Read a shift-label file and verify all invariants on load."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise LabelFileError(f"cannot parse label file: {exc}") from exc
    spec = spec_from_json_dict(data)
    spec.validate(base)
    return spec


def spec_from_json_dict(data: dict) -> LiftSpec:
    try:
        P = int(data["P"])
        x_labels = {(int(r), int(v)): int(t) % P for r, v, t in data["x_labels"]}
        z_labels = {(int(s), int(v)): int(t) % P for s, v, t in data["z_labels"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise LabelFileError(f"malformed label data: {exc}") from exc
    if len(x_labels) != len(data["x_labels"]) or len(z_labels) != len(data["z_labels"]):
        raise LabelFileError("duplicate edge in label data")
    return LiftSpec(P, x_labels, z_labels)


# --- congruence solving ------------------------------------------------------


def _prime_power_factors(P: int) -> list[int]:
    factors = []
    rest = P
    d = 2
    while d * d <= rest:
        if rest % d == 0:
            q = 1
            while rest % d == 0:
                rest //= d
                q *= d
            factors.append(q)
        d += 1
    if rest > 1:
        factors.append(rest)
    return factors


def _solve_mod_prime_power(
    equations: list[dict[int, int]], nvars: int, q: int, rng: np.random.Generator
) -> list[int]:
    """Solve a homogeneous +-1 system modulo a prime power ``q``.

    Eliminates one variable per equation, preferring +-1 pivots.  If an
    equation's coefficients share a common factor with q, the equation is
    divided down and the pivot variable picks up a fresh free variable for
    the lost residue classes, so power-of-two moduli need no Smith form.
    """
    solved: dict[int, tuple[dict[int, int], int]] = {}
    order: list[int] = []
    total_vars = nvars

    for eq in equations:
        coeffs = dict(eq)
        const = 0
        # Substitute already-solved variables until none remain.
        while True:
            present = [v for v in coeffs if v in solved]
            if not present:
                break
            for v in present:
                c = coeffs.pop(v)
                expr, e_const = solved[v]
                const = (const + c * e_const) % q
                for u, cu in expr.items():
                    coeffs[u] = (coeffs.get(u, 0) + c * cu) % q
            coeffs = {v: c % q for v, c in coeffs.items() if c % q}
        coeffs = {v: c % q for v, c in coeffs.items() if c % q}
        if not coeffs:
            if const % q:
                raise ArithmeticError("inconsistent congruence system")
            continue
        modulus = q
        g = 0
        for c in coeffs.values():
            g = gcd(g, c)
        g = gcd(g, modulus)
        scale = 1
        if g > 1:
            if const % g:
                raise ArithmeticError("inconsistent congruence system")
            coeffs = {v: c // g for v, c in coeffs.items()}
            const //= g
            modulus //= g
            scale = g
            coeffs = {v: c % modulus for v, c in coeffs.items() if c % modulus}
            if not coeffs:
                continue
        units = [v for v, c in coeffs.items() if gcd(c, modulus) == 1]
        if not units:
            raise ArithmeticError(
                f"no unit pivot available modulo {modulus}; "
                "prime-power moduli always admit one after scaling"
            )
        plus_minus = [v for v in units if coeffs[v] in (1, modulus - 1)]
        pivot = min(plus_minus) if plus_minus else min(units)
        inv = pow(coeffs[pivot], -1, modulus)
        expr = {
            v: (-inv * c) % q for v, c in coeffs.items() if v != pivot
        }
        e_const = (-inv * -const) % modulus  # inv * const mod modulus
        e_const = (inv * const) % modulus
        if scale > 1:
            # Solution determined modulo q/scale only; add a fresh free
            # variable covering the remaining residue classes.
            expr[total_vars] = modulus % q
            total_vars += 1
        solved[pivot] = (expr, e_const % q)
        order.append(pivot)

    values = [0] * total_vars
    free_vars = [v for v in range(total_vars) if v not in solved]
    for v in free_vars:
        values[v] = int(rng.integers(q))
    for v in reversed(order):
        expr, const = solved[v]
        acc = const
        for u, c in expr.items():
            acc += c * values[u]
        values[v] = acc % q
    return values[:nvars]


def _crt_pair(a1: int, q1: int, a2: int, q2: int) -> int:
    m = pow(q1, -1, q2)
    return (a1 + q1 * ((a2 - a1) * m % q2)) % (q1 * q2)


def solve_labels(base: BaseCode, P: int, seed: int = 0) -> LiftSpec:
    """Deterministically sample a valid shift labeling for a P-lift.

    The congruence system is always consistent (all-zero labels satisfy it);
    the elimination fixes dependent labels and the seeded generator fills the
    free ones uniformly, so identical (base, P, seed) give identical specs.
    """
    if P < 1:
        raise ValueError("lift factor must be >= 1")
    x_edges = _support_edges(base.hx)
    z_edges = _support_edges(base.hz)
    if P == 1:
        return LiftSpec(
            1, {e: 0 for e in x_edges}, {e: 0 for e in z_edges}
        )
    x_index = {e: i for i, e in enumerate(x_edges)}
    z_index = {e: len(x_edges) + i for i, e in enumerate(z_edges)}
    nvars = len(x_edges) + len(z_edges)
    equations = []
    for r, s, v1, v2 in intersection_pairs(base):
        equations.append(
            {
                x_index[(r, v1)]: 1,
                x_index[(r, v2)]: -1,
                z_index[(s, v1)]: -1,
                z_index[(s, v2)]: 1,
            }
        )
    rng = np.random.default_rng(seed)
    values = [0] * nvars
    combined_q = 1
    for q in _prime_power_factors(P):
        eqs_q = [{v: c % q for v, c in eq.items() if c % q} for eq in equations]
        vals_q = _solve_mod_prime_power(eqs_q, nvars, q, rng)
        if combined_q == 1:
            values = list(vals_q)
        else:
            values = [
                _crt_pair(values[i], combined_q, vals_q[i], q) for i in range(nvars)
            ]
        combined_q *= q
    x_labels = {e: values[x_index[e]] % P for e in x_edges}
    z_labels = {e: values[z_index[e]] % P for e in z_edges}
    spec = LiftSpec(P, x_labels, z_labels)
    spec.validate(base)
    return spec


def solve_labels_with_girth_floor(
    base: BaseCode,
    P: int,
    seed: int = 0,
    girth_floor: int = 8,
    max_attempts: int = 32,
) -> LiftSpec:
    """Rejection loop: resample the seed until the lifted girth meets a floor.

    Lifts of the girth-8 base never fall below 8, so floors up to 8 accept
    the first sample; higher floors may exhaust the attempt budget and
    raise.  The labels themselves are never girth-optimized.
    """
    from .tanner import TannerGraph, girth_at_least

    for attempt in range(max_attempts):
        spec = solve_labels(base, P, seed=seed + attempt)
        hx, hz = expand(QcLiftedCode(base, spec))
        if girth_at_least(TannerGraph.from_bitmatrix(hx), girth_floor) and girth_at_least(
            TannerGraph.from_bitmatrix(hz), girth_floor
        ):
            return spec
    raise ValueError(
        f"no lift with girth >= {girth_floor} found in {max_attempts} attempts"
    )


# --- expansion ---------------------------------------------------------------


@dataclass
class QcLiftedCode:
    """Base pair plus a lift spec, expandable to explicit packed matrices."""

    base: BaseCode
    spec: LiftSpec

    @property
    def P(self) -> int:
        return self.spec.P

    @property
    def n(self) -> int:
        return self.base.n * self.P

    @cached_property
    def matrices(self) -> tuple[BitMatrix, BitMatrix]:
        return expand(self)

    def check_supports(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-check sorted qubit lists, shape (192*P, 8), for both sides."""
        out = []
        for labels, mat in (
            (self.spec.x_labels, self.base.hx),
            (self.spec.z_labels, self.base.hz),
        ):
            P = self.P
            adj = np.zeros((mat.rows * P, 8), dtype=np.int64)
            counts = np.zeros(mat.rows, dtype=np.int64)
            shifts = np.arange(P, dtype=np.int64)
            for (r, v), t in sorted(labels.items()):
                slot = counts[r]
                adj[r * P : (r + 1) * P, slot] = v * P + (shifts + t) % P
                counts[r] += 1
            adj.sort(axis=1)
            out.append(adj)
        return out[0], out[1]


def expand(code: QcLiftedCode) -> tuple[BitMatrix, BitMatrix]:
    """Explicit lifted pair: block (r,v) is the CPM of its shift label."""
    P = code.P
    base = code.base
    out = []
    for labels, mat in ((code.spec.x_labels, base.hx), (code.spec.z_labels, base.hz)):
        lifted = BitMatrix.zeros(mat.rows * P, mat.cols * P)
        shifts = np.arange(P, dtype=np.int64)
        for (r, v), t in labels.items():
            rows = r * P + shifts
            cols = v * P + (shifts + t) % P
            lifted.words[rows, cols >> 6] |= np.uint64(1) << (cols & 63).astype(np.uint64)
        out.append(lifted)
    return out[0], out[1]


def lifted_dimension(code: QcLiftedCode) -> tuple[int, int, int]:
    """(rank_x, rank_z, k) of the expanded pair; k is at least 128*P."""
    hx, hz = code.matrices
    rx = gf2.rank(hx)
    rz = gf2.rank(hz)
    return rx, rz, code.n - rx - rz


def verify_expanded_orthogonality(hx: BitMatrix, hz: BitMatrix) -> bool:
    """Full dense check that hx @ hz.T vanishes over GF(2)."""
    for i in range(hx.rows):
        if (np.bitwise_count(hx.words[i] & hz.words).sum(axis=1) & 1).any():
            return False
    return True
