"""Belief propagation over the depolarizing prior plus staged syndrome repair.

The decoder sees only the check matrices, the observed syndromes and the
error rate.  BP runs sum-product in the log domain on the joint graph:
X-checks constrain the Z error component and Z-checks the X component, with
four-state variable nodes coupling the two components through the
depolarizing prior.  When BP leaves a residual syndrome, repair stages run
in order: reliability-ordered prefix OSD with bisection on the prefix size,
a local OSD on the unsatisfied-check neighborhood, a restricted-candidate
fallback (path closures, same-base-row pairs, trapping-set templates), one
short re-BP pass seeded by the updated estimate, and finally a joint repair
of both components on a capped candidate set.

Success is refereed outside the decoder by ``check_sc``: the output must
satisfy both syndromes and differ from the truth by stabilizers only
(x difference in row(hx), z difference in row(hz)).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

import numpy as np

from . import gf2
from .basecode import BaseCode
from .gf2 import BitMatrix, BitVector
from .lift import QcLiftedCode

STATUS_BP_CONVERGED = "bp-converged"
STATUS_REPAIRED_OSD = "repaired-osd"
STATUS_REPAIRED_LOCAL = "repaired-local"
STATUS_REPAIRED_FALLBACK = "repaired-fallback"
STATUS_REPAIRED_JOINT = "repaired-joint"
STATUS_FAILED_SYNDROME = "failed-residual-syndrome"
STATUS_LOGICAL = "logical-error"
STATUS_SUCCESS = "success"

_STAGE_STATUS = {
    1: STATUS_REPAIRED_OSD,
    2: STATUS_REPAIRED_LOCAL,
    3: STATUS_REPAIRED_FALLBACK,
    4: STATUS_REPAIRED_JOINT,
}

# Pauli states ordered (I, X, Y, Z); x/z bit of each state.
_STATE_X = np.array([0, 1, 1, 0], dtype=np.uint8)
_STATE_Z = np.array([0, 0, 1, 1], dtype=np.uint8)
_FLIP_X = np.array([1, 0, 3, 2])
_FLIP_Z = np.array([3, 2, 1, 0])

_REBP_PRIOR_BIAS = 1.0
_COST_CAP = 1e6
# Greedy cost reduction walks the whole nullspace basis; past this size the
# column ordering already biases the particular solution toward cheap flips.
_GREEDY_BASIS_CAP = 64


@dataclass(frozen=True)
class DepolarizingPrior:
    """Per-qubit four-state prior (1-p, p/3, p/3, p/3) for (I, X, Y, Z)."""

    p: float

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise ValueError("physical error rate must lie in [0, 1)")

    def log_weights(self) -> np.ndarray:
        w = np.array([1 - self.p, self.p / 3, self.p / 3, self.p / 3])
        return np.log(np.maximum(w, 1e-300))


@dataclass
class DecoderConfig:
    max_iter: int = 64
    re_bp_iter: int = 16
    clip: float = 30.0
    fallback_threshold: int = 8
    joint_cap: int = 96
    template_library: Optional[str] = None

    @classmethod
    def from_json(cls, path) -> "DecoderConfig":
        with open(path) as fh:
            data = json.load(fh)
        known = {k: data[k] for k in (
            "max_iter", "re_bp_iter", "clip", "fallback_threshold",
            "joint_cap", "template_library") if k in data}
        return cls(**known)

    def to_json_dict(self) -> dict:
        return {
            "max_iter": self.max_iter,
            "re_bp_iter": self.re_bp_iter,
            "clip": self.clip,
            "fallback_threshold": self.fallback_threshold,
            "joint_cap": self.joint_cap,
            "template_library": self.template_library,
        }

    def templates(self) -> list[dict]:
        if not self.template_library:
            return []
        if not hasattr(self, "_templates"):
            with open(self.template_library) as fh:
                data = json.load(fh)
            object.__setattr__(self, "_templates", list(data.get("templates", [])))
        return self._templates


class CssCode:
    """Decoding view of a CSS pair: packed matrices plus fixed-degree adjacency.

    Only (3,8)-regular pairs are accepted; the base pair and every CPM lift
    of it qualify.  When built from a lift the base structure and shift
    labels are retained for the structured fallback stage.
    """

    def __init__(
        self,
        hx: BitMatrix,
        hz: BitMatrix,
        base: Optional[BaseCode] = None,
        lift_factor: int = 1,
        x_labels: Optional[dict] = None,
        z_labels: Optional[dict] = None,
    ):
        if hx.cols != hz.cols:
            raise ValueError("sides disagree on qubit count")
        self.hx = hx
        self.hz = hz
        self.n = hx.cols
        self.base = base
        self.P = lift_factor
        self.x_labels = x_labels
        self.z_labels = z_labels
        self.x_chk_q = self._check_adjacency(hx)
        self.z_chk_q = self._check_adjacency(hz)
        self.x_q_chk, self.x_q_slot = self._var_adjacency(self.x_chk_q, self.n)
        self.z_q_chk, self.z_q_slot = self._var_adjacency(self.z_chk_q, self.n)
        self.x_q_flat = self.x_q_chk * 8 + self.x_q_slot
        self.z_q_flat = self.z_q_chk * 8 + self.z_q_slot

    @staticmethod
    def _check_adjacency(mat: BitMatrix) -> np.ndarray:
        adj = np.zeros((mat.rows, 8), dtype=np.int64)
        for r in range(mat.rows):
            support = mat.row_support(r)
            if support.size != 8:
                raise ValueError("expected row weight 8")
            adj[r] = support
        return adj

    @staticmethod
    def _var_adjacency(chk_q: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
        q_chk = np.zeros((n, 3), dtype=np.int64)
        q_slot = np.zeros((n, 3), dtype=np.int64)
        fill = np.zeros(n, dtype=np.int64)
        for c in range(chk_q.shape[0]):
            for slot in range(8):
                q = chk_q[c, slot]
                q_chk[q, fill[q]] = c
                q_slot[q, fill[q]] = slot
                fill[q] += 1
        if not (fill == 3).all():
            raise ValueError("expected column weight 3")
        return q_chk, q_slot

    @classmethod
    def from_base(cls, code: BaseCode) -> "CssCode":
        return cls(code.hx, code.hz, base=code, lift_factor=1)

    @classmethod
    def from_lifted(cls, code: QcLiftedCode) -> "CssCode":
        hx, hz = code.matrices
        return cls(
            hx,
            hz,
            base=code.base,
            lift_factor=code.P,
            x_labels=dict(code.spec.x_labels),
            z_labels=dict(code.spec.z_labels),
        )

    @cached_property
    def row_cache_x(self) -> gf2.RowEchelonCache:
        return gf2.row_echelon_cache(self.hx)

    @cached_property
    def row_cache_z(self) -> gf2.RowEchelonCache:
        return gf2.row_echelon_cache(self.hz)

    @cached_property
    def hx_columns(self) -> BitMatrix:
        return gf2.transpose(self.hx)

    @cached_property
    def hz_columns(self) -> BitMatrix:
        return gf2.transpose(self.hz)

    def syndromes(self, x: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        sx = z[self.x_chk_q].sum(axis=1, dtype=np.int64) & 1
        sz = x[self.z_chk_q].sum(axis=1, dtype=np.int64) & 1
        return sx.astype(np.uint8), sz.astype(np.uint8)


def compute_syndrome(
    code: CssCode, error: tuple[np.ndarray, np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """(s_X, s_Z) = (hx . z, hz . x) over GF(2)."""
    x, z = error
    if len(x) != code.n or len(z) != code.n:
        raise ValueError("error length mismatch")
    return code.syndromes(np.asarray(x, dtype=np.uint8), np.asarray(z, dtype=np.uint8))


# --- belief propagation -------------------------------------------------------


@dataclass
class BpState:
    beta: np.ndarray  # X-check -> qubit messages about the z component
    alpha: np.ndarray  # Z-check -> qubit messages about the x component
    marginals: np.ndarray  # (n, 4) posterior log-weights over (I, X, Y, Z)
    cost_x: np.ndarray
    cost_z: np.ndarray
    iterations: int
    converged: bool


def _check_update(msgs: np.ndarray, syndrome: np.ndarray, clip: float) -> np.ndarray:
    """Binary check node update (tanh rule) with syndrome signs, any batch shape."""
    t = np.tanh(np.clip(msgs, -clip, clip) / 2.0)
    fwd = np.ones_like(t)
    fwd[..., 1:] = np.cumprod(t[..., :-1], axis=-1)
    bwd = np.ones_like(t)
    bwd[..., :-1] = np.cumprod(t[..., :0:-1], axis=-1)[..., ::-1]
    excl = np.clip(fwd * bwd, -1.0, 1.0)
    sign = (1.0 - 2.0 * syndrome)[..., None]
    # float32 saturation can reach |excl| = 1; arctanh then yields inf and
    # the final clip pins the message at the clip ceiling, which is intended.
    with np.errstate(divide="ignore"):
        return np.clip(sign * 2.0 * np.arctanh(excl), -clip, clip)


def bp_decode(
    code: CssCode,
    syndromes: tuple[np.ndarray, np.ndarray],
    prior: DepolarizingPrior,
    max_iter: int = 64,
    clip: float = 30.0,
    init_estimate: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> tuple[BpState, tuple[np.ndarray, np.ndarray]]:
    """Syndrome-conditioned sum-product; returns state and hard-decision pair.

    ``init_estimate`` shifts the per-qubit channel prior toward a previous
    estimate (used by the re-BP stage); non-convergence is reported in the
    state, never raised.
    """
    sx, sz = syndromes
    n = code.n
    lw = np.tile(prior.log_weights().astype(np.float32), (n, 1))
    if init_estimate is not None:
        ex, ez = init_estimate
        lw = lw + np.float32(_REBP_PRIOR_BIAS) * (
            (_STATE_X[None, :] == ex[:, None]).astype(np.float32)
            + (_STATE_Z[None, :] == ez[:, None]).astype(np.float32)
        )
    beta = np.zeros(code.x_chk_q.shape, dtype=np.float32)
    alpha = np.zeros(code.z_chk_q.shape, dtype=np.float32)
    sx_f = sx.astype(np.float32)
    sz_f = sz.astype(np.float32)
    w = np.exp(lw)  # (n, 4) prior weights, unnormalized

    def totals():
        b_all = beta.ravel()[code.x_q_flat].sum(axis=1)
        a_all = alpha.ravel()[code.z_q_flat].sum(axis=1)
        return a_all, b_all

    def marginals(a_all, b_all):
        marg = lw.copy()
        marg[:, 1] -= a_all
        marg[:, 2] -= a_all + b_all
        marg[:, 3] -= b_all
        return marg

    converged = False
    iterations = max_iter
    xh = np.zeros(n, dtype=np.uint8)
    zh = np.zeros(n, dtype=np.uint8)
    marg = marginals(*totals())
    for it in range(1, max_iter + 1):
        a_all, b_all = totals()
        marg = marginals(a_all, b_all)
        state = np.argmax(marg, axis=1)
        xh = _STATE_X[state]
        zh = _STATE_Z[state]
        got_sx, got_sz = code.syndromes(xh, zh)
        if np.array_equal(got_sx, sx) and np.array_equal(got_sz, sz):
            converged = True
            iterations = it
            break
        # variable -> check (z component toward X-checks, x toward Z-checks)
        ea = np.exp(-np.clip(a_all, -80, 80))
        eb = np.exp(-np.clip(b_all, -80, 80))
        base_z = np.log(w[:, 0] + w[:, 1] * ea) - np.log(w[:, 3] + w[:, 2] * ea)
        base_x = np.log(w[:, 0] + w[:, 3] * eb) - np.log(w[:, 1] + w[:, 2] * eb)
        v_to_x = (base_z + b_all)[code.x_chk_q] - beta
        v_to_z = (base_x + a_all)[code.z_chk_q] - alpha
        beta = _check_update(v_to_x, sx_f, clip)
        alpha = _check_update(v_to_z, sz_f, clip)
    if not converged:
        a_all, b_all = totals()
        marg = marginals(a_all, b_all)
        state = np.argmax(marg, axis=1)
        xh = _STATE_X[state]
        zh = _STATE_Z[state]
    else:
        state = np.argmax(marg, axis=1)
    idx = np.arange(n)
    cost_x = np.clip(marg[idx, state] - marg[idx, _FLIP_X[state]], 0.0, _COST_CAP)
    cost_z = np.clip(marg[idx, state] - marg[idx, _FLIP_Z[state]], 0.0, _COST_CAP)
    bp_state = BpState(beta, alpha, marg, cost_x, cost_z, iterations, converged)
    return bp_state, (xh, zh)


@dataclass
class BpBatchResult:
    converged: np.ndarray  # (B,) bool
    iterations: np.ndarray  # (B,) int
    xh: np.ndarray  # (B, n) uint8, frozen at each trial's convergence
    zh: np.ndarray
    cost_x: Optional[np.ndarray]  # (B, n), only meaningful for non-converged rows
    cost_z: Optional[np.ndarray]


def bp_decode_batch(
    code: CssCode,
    sx_batch: np.ndarray,
    sz_batch: np.ndarray,
    prior: DepolarizingPrior,
    max_iter: int = 64,
    clip: float = 30.0,
) -> BpBatchResult:
    """Run ``bp_decode`` on a batch of syndromes at once.

    Trials are independent; every reduction runs along per-trial axes, so
    each row of the result is bit-identical to a solo ``bp_decode`` call.
    Converged trials freeze their estimate at their own convergence
    iteration and drop out of the active set.
    """
    B = sx_batch.shape[0]
    n = code.n
    lw = prior.log_weights().astype(np.float32)
    w = np.exp(lw)
    xh_out = np.zeros((B, n), dtype=np.uint8)
    zh_out = np.zeros((B, n), dtype=np.uint8)
    iters_out = np.full(B, max_iter, dtype=np.int64)
    conv_out = np.zeros(B, dtype=bool)
    cost_x = np.zeros((B, n), dtype=np.float32)
    cost_z = np.zeros((B, n), dtype=np.float32)

    active = np.arange(B)
    beta = np.zeros((B,) + code.x_chk_q.shape, dtype=np.float32)
    alpha = np.zeros((B,) + code.z_chk_q.shape, dtype=np.float32)
    sx_a = sx_batch.copy()
    sz_a = sz_batch.copy()
    sx_f = sx_a.astype(np.float32)
    sz_f = sz_a.astype(np.float32)

    def batch_marginals(a_all, b_all):
        marg = np.broadcast_to(lw, (len(a_all), n, 4)).copy()
        marg[:, :, 1] -= a_all
        marg[:, :, 2] -= a_all + b_all
        marg[:, :, 3] -= b_all
        return marg

    for it in range(1, max_iter + 1):
        nb = len(active)
        flat_b = beta.reshape(nb, -1)
        flat_a = alpha.reshape(nb, -1)
        b_all = flat_b[:, code.x_q_flat].sum(axis=2)
        a_all = flat_a[:, code.z_q_flat].sum(axis=2)
        marg = batch_marginals(a_all, b_all)
        state = np.argmax(marg, axis=2)
        xh = _STATE_X[state]
        zh = _STATE_Z[state]
        got_sx = (zh[:, code.x_chk_q].sum(axis=2) & 1).astype(np.uint8)
        got_sz = (xh[:, code.z_chk_q].sum(axis=2) & 1).astype(np.uint8)
        done = ((got_sx == sx_a).all(axis=1)) & ((got_sz == sz_a).all(axis=1))
        if done.any():
            idx = active[done]
            xh_out[idx] = xh[done]
            zh_out[idx] = zh[done]
            iters_out[idx] = it
            conv_out[idx] = True
            keep = ~done
            active = active[keep]
            if len(active) == 0:
                break
            beta, alpha = beta[keep], alpha[keep]
            sx_a, sz_a = sx_a[keep], sz_a[keep]
            sx_f, sz_f = sx_f[keep], sz_f[keep]
            a_all, b_all = a_all[keep], b_all[keep]
        nb = len(active)
        ea = np.exp(-np.clip(a_all, -80, 80))
        eb = np.exp(-np.clip(b_all, -80, 80))
        base_z = np.log(w[0] + w[1] * ea) - np.log(w[3] + w[2] * ea)
        base_x = np.log(w[0] + w[3] * eb) - np.log(w[1] + w[2] * eb)
        v_to_x = (base_z + b_all)[:, code.x_chk_q] - beta
        v_to_z = (base_x + a_all)[:, code.z_chk_q] - alpha
        beta = _check_update(v_to_x, sx_f, clip)
        alpha = _check_update(v_to_z, sz_f, clip)

    if len(active):
        nb = len(active)
        b_all = beta.reshape(nb, -1)[:, code.x_q_flat].sum(axis=2)
        a_all = alpha.reshape(nb, -1)[:, code.z_q_flat].sum(axis=2)
        marg = batch_marginals(a_all, b_all)
        state = np.argmax(marg, axis=2)
        xh_out[active] = _STATE_X[state]
        zh_out[active] = _STATE_Z[state]
        rows = np.arange(nb)[:, None]
        cols = np.arange(n)[None, :]
        sel = marg[rows, cols, state]
        cost_x[active] = np.clip(sel - marg[rows, cols, _FLIP_X[state]], 0.0, _COST_CAP)
        cost_z[active] = np.clip(sel - marg[rows, cols, _FLIP_Z[state]], 0.0, _COST_CAP)
    return BpBatchResult(conv_out, iters_out, xh_out, zh_out, cost_x, cost_z)


# --- residuals and OSD stages --------------------------------------------------


def residual_setup(
    code: CssCode,
    syndromes: tuple[np.ndarray, np.ndarray],
    estimate: tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """r_X = s_Z + hz x_hat drives X-component repair; r_Z = s_X + hx z_hat."""
    sx, sz = syndromes
    got_sx, got_sz = code.syndromes(*map(np.asarray, estimate))
    return (sz ^ got_sz), (sx ^ got_sx)


def reliability_order(costs: np.ndarray) -> np.ndarray:
    """Qubits from most to least plausible flip: smallest cost first, ties by index."""
    return np.lexsort((np.arange(len(costs)), costs))


def min_solvable_prefix(H: BitMatrix, r: np.ndarray, order: np.ndarray) -> Optional[int]:
    """Smallest m such that H restricted to the first m ordered columns solves r.

    Solvability is monotone in m (columns are only added), so bisection over
    the prefix size is valid.  An exponential ramp brackets the answer first
    so that most probes run on short prefixes.  Returns None when even the
    full column set cannot solve r.
    """
    r = np.asarray(r, dtype=np.uint8)
    if not r.any():
        return 0
    rhs = BitVector.from_dense(r)
    reordered = gf2.submatrix_columns(H, order)
    n = len(order)

    def probe(m: int) -> bool:
        return gf2.solvable(gf2.truncate_columns(reordered, m), rhs)

    lo, hi = 0, min(32, n)
    while not probe(hi):
        if hi == n:
            return None
        lo, hi = hi + 1, min(hi * 4, n)
    while lo < hi:
        mid = (lo + hi) // 2
        if probe(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _min_solvable_incremental(
    column_rows: np.ndarray, r: np.ndarray
) -> Optional[int]:
    """m_sol by one incremental rank-tracking pass over ordered columns.

    ``column_rows[k]`` is the packed k-th reliability-ordered column of H
    (a row of the transposed matrix).  The prefix system becomes solvable
    exactly when r falls into the span of the inserted columns, tracked by
    keeping r reduced against a growing reduced basis.  Exactly equal to
    the bisection result (solvability is monotone in the prefix), just one
    pass instead of repeated eliminations.
    """
    r = np.asarray(r, dtype=np.uint8)
    if not r.any():
        return 0
    r_red = BitVector.from_dense(r).words
    column_rows = np.ascontiguousarray(column_rows)
    if _msol_kernel is not None:
        m = int(_msol_kernel(column_rows, r_red))
        return None if m < 0 else m
    return _min_solvable_loop(column_rows, r_red)


def _min_solvable_loop(column_rows: np.ndarray, r_red: np.ndarray) -> Optional[int]:
    nwords = column_rows.shape[1]
    cap = min(len(column_rows), nwords * 64)
    basis = np.zeros((cap, nwords), dtype=np.uint64)
    pw = np.zeros(cap, dtype=np.int64)
    pb = np.zeros(cap, dtype=np.uint64)
    rank = 0
    one = np.uint64(1)
    for m in range(1, len(column_rows) + 1):
        t = column_rows[m - 1].copy()
        if rank:
            sel = np.nonzero((t[pw[:rank]] >> pb[:rank]) & one)[0]
            if sel.size:
                t ^= np.bitwise_xor.reduce(basis[sel], axis=0)
        if not t.any():
            continue
        w = int(np.argmax(t != 0))
        word = int(t[w])
        b = (word & -word).bit_length() - 1
        if rank:
            hit = np.nonzero((basis[:rank, w] >> np.uint64(b)) & one)[0]
            if hit.size:
                basis[hit] ^= t
        basis[rank] = t
        pw[rank] = w
        pb[rank] = b
        rank += 1
        if (r_red[w] >> np.uint64(b)) & one:
            r_red = r_red ^ t
            if not r_red.any():
                return m
    return None


if gf2._njit is not None:

    @gf2._njit(cache=True)
    def _msol_kernel(column_rows, r_in):  # pragma: no cover - jitted
        n, nwords = column_rows.shape
        one = np.uint64(1)
        r_red = r_in.copy()
        cap = n if n < nwords * 64 else nwords * 64
        basis = np.zeros((cap, nwords), dtype=np.uint64)
        pivw = np.zeros(cap, dtype=np.int64)
        pivb = np.zeros(cap, dtype=np.uint64)
        rank = 0
        t = np.zeros(nwords, dtype=np.uint64)
        for m in range(1, n + 1):
            for k in range(nwords):
                t[k] = column_rows[m - 1, k]
            for j in range(rank):
                if (t[pivw[j]] >> pivb[j]) & one:
                    for k in range(nwords):
                        t[k] ^= basis[j, k]
            w = -1
            for k in range(nwords):
                if t[k]:
                    w = k
                    break
            if w < 0:
                continue
            b = np.uint64(0)
            while not ((t[w] >> b) & one):
                b += one
            for j in range(rank):
                if (basis[j, w] >> b) & one:
                    for k in range(nwords):
                        basis[j, k] ^= t[k]
            for k in range(nwords):
                basis[rank, k] = t[k]
            pivw[rank] = w
            pivb[rank] = b
            rank += 1
            if (r_red[w] >> b) & one:
                changed = False
                for k in range(nwords):
                    r_red[k] ^= t[k]
                    if r_red[k]:
                        changed = True
                if not changed:
                    return m
        return -1

else:
    _msol_kernel = None


def _greedy_cost_reduce(
    delta: np.ndarray, etas: list[np.ndarray], costs: np.ndarray, max_passes: int = 8
) -> np.ndarray:
    delta = delta.copy()
    for _ in range(max_passes):
        improved = False
        for eta in etas:
            sup = np.nonzero(eta)[0]
            gain = np.where(delta[sup] == 1, -costs[sup], costs[sup]).sum()
            if gain < 0:
                delta[sup] ^= 1
                improved = True
        if not improved:
            break
    return delta


def _solve_embedded(
    sub: BitMatrix,
    support: np.ndarray,
    r: np.ndarray,
    n: int,
    costs: np.ndarray,
    stab_cache: Optional[gf2.RowEchelonCache],
    require_unique_modulo_stabilizers: bool,
) -> Optional[np.ndarray]:
    res = gf2.solve(sub, BitVector.from_dense(np.asarray(r, dtype=np.uint8)), with_nullspace=True)
    if res is None:
        return None
    particular, ns = res
    delta = np.zeros(n, dtype=np.uint8)
    delta[support] = particular.to_dense()
    if ns is not None and ns.rows:
        etas = []
        for i in range(ns.rows):
            eta = np.zeros(n, dtype=np.uint8)
            eta[support] = ns.row(i).to_dense()
            if require_unique_modulo_stabilizers:
                assert stab_cache is not None
                # test as we go: ambiguous solution spaces bail on the first
                # basis vector outside the stabilizer row space
                if not gf2.in_row_space(stab_cache, BitVector.from_dense(eta)):
                    return None
            etas.append(eta)
        if len(etas) <= _GREEDY_BASIS_CAP:
            delta = _greedy_cost_reduce(delta, etas, costs)
    return delta


def _solve_on_support(
    H: BitMatrix,
    r: np.ndarray,
    support: np.ndarray,
    costs: np.ndarray,
    stab_cache: Optional[gf2.RowEchelonCache],
    require_unique_modulo_stabilizers: bool = True,
) -> Optional[np.ndarray]:
    """Solve H[:, support] d = r; embed d by zero outside the support.

    Support columns are processed in ascending-cost order.  With a
    nontrivial solution space the nullspace must sit inside the stabilizer
    row space (when required), and the returned representative greedily
    minimizes the reliability cost.
    """
    if len(support) == 0:
        return None if np.asarray(r).any() else np.zeros(H.cols, dtype=np.uint8)
    support = np.asarray(support, dtype=np.int64)
    support = support[reliability_order(costs[support])]
    sub = gf2.submatrix_columns(H, support)
    return _solve_embedded(
        sub, support, r, H.cols, costs, stab_cache, require_unique_modulo_stabilizers
    )


def osd_bisect(
    H: BitMatrix,
    r: np.ndarray,
    costs: np.ndarray,
    stab_cache: gf2.RowEchelonCache,
    transposed: Optional[BitMatrix] = None,
) -> Optional[np.ndarray]:
    """Reliability-ordered smallest-prefix OSD.

    Locates the smallest solvable prefix size (the incremental rank pass in
    ``_min_solvable_incremental`` returns exactly the value the prefix
    bisection of ``min_solvable_prefix`` would), solves there, and accepts
    the solution only when it is unique modulo the stabilizer row space; an
    ambiguous solution space falls through (returns None) rather than
    guessing a logical class.
    """
    r = np.asarray(r, dtype=np.uint8)
    if not r.any():
        return np.zeros(H.cols, dtype=np.uint8)
    order = reliability_order(costs)
    if transposed is None:
        transposed = gf2.transpose(H)
    m_sol = _min_solvable_incremental(transposed.words[order], r)
    if m_sol is None:
        return None
    support = order[:m_sol]
    sub = gf2.submatrix_columns(H, support)
    return _solve_embedded(
        sub,
        support,
        r,
        H.cols,
        costs,
        stab_cache,
        require_unique_modulo_stabilizers=True,
    )


def _side_tables(code: CssCode, side: str):
    if side == "x":
        return code.hz, code.z_chk_q, code.z_q_chk, code.row_cache_x
    if side == "z":
        return code.hx, code.x_chk_q, code.x_q_chk, code.row_cache_z
    raise ValueError("side must be 'x' or 'z'")


def _side_transpose(code: CssCode, side: str) -> BitMatrix:
    return code.hz_columns if side == "x" else code.hx_columns


def osd_local(
    code: CssCode, side: str, residual: np.ndarray, costs: np.ndarray
) -> Optional[np.ndarray]:
    """OSD restricted to the neighborhood of the unsatisfied checks.

    Tries the qubits adjacent to unsatisfied checks first; if unsolvable,
    expands once by the checks one step farther away and their qubits.
    Any syndrome-clearing correction is accepted (the stabilizer-modulo
    uniqueness test belongs to the prefix-OSD stage).
    """
    H, chk_q, q_chk, stab_cache = _side_tables(code, side)
    unsat = np.nonzero(residual)[0]
    if unsat.size == 0:
        raise ValueError("osd_local requires a nonzero residual")
    cand = np.unique(chk_q[unsat])
    delta = _solve_on_support(
        H, residual, cand, costs, stab_cache, require_unique_modulo_stabilizers=False
    )
    if delta is not None:
        return delta
    second_layer = np.unique(q_chk[cand])
    expanded = np.unique(chk_q[second_layer])
    return _solve_on_support(
        H, residual, expanded, costs, stab_cache, require_unique_modulo_stabilizers=False
    )


def _base_graph_path(base_h: BitMatrix, start_row: int, goal_row: int) -> Optional[list[tuple[str, int]]]:
    """Shortest alternating check/qubit path between two base rows via BFS."""
    from collections import deque

    check_adj = [base_h.row_support(r) for r in range(base_h.rows)]
    var_adj: dict[int, list[int]] = {}
    for r in range(base_h.rows):
        for v in check_adj[r]:
            var_adj.setdefault(int(v), []).append(r)
    parent: dict[tuple[str, int], tuple[str, int]] = {}
    start = ("chk", start_row)
    seen = {start}
    queue = deque([start])
    while queue:
        kind, idx = queue.popleft()
        neighbors = (
            [("var", int(v)) for v in check_adj[idx]]
            if kind == "chk"
            else [("chk", r) for r in var_adj.get(idx, [])]
        )
        for nxt in neighbors:
            if nxt in seen:
                continue
            parent[nxt] = (kind, idx)
            if nxt == ("chk", goal_row):
                path = [nxt]
                while path[-1] != start:
                    path.append(parent[path[-1]])
                return list(reversed(path))
            seen.add(nxt)
            queue.append(nxt)
    return None


def _lift_walk_qubits(
    code: CssCode, side: str, path: list[tuple[str, int]], start_lift_index: int
) -> set[int]:
    """Lifted qubits along a base path, entered at the given lift index."""
    labels = code.z_labels if side == "x" else code.x_labels
    P = code.P
    qubits: set[int] = set()
    lift_idx = start_lift_index
    for k in range(0, len(path) - 1, 2):
        _, row = path[k]
        _, qubit = path[k + 1]
        t_out = labels[(row, qubit)] if labels else 0
        q_lift = (lift_idx + t_out) % P
        qubits.add(qubit * P + q_lift)
        if k + 2 < len(path):
            _, next_row = path[k + 2]
            t_in = labels[(next_row, qubit)] if labels else 0
            lift_idx = (q_lift - t_in) % P
    return qubits


def fallback_repair(
    code: CssCode,
    side: str,
    residual: np.ndarray,
    costs: np.ndarray,
    templates: Optional[list[dict]] = None,
    threshold: int = 8,
) -> Optional[np.ndarray]:
    """Restricted-candidate repair for small residuals.

    Tries, in order: supports closing base-graph shortest paths between
    unsatisfied-check images in the lift; joint supports for check pairs
    sharing a base row or family; trapping-set template supports.  Within
    the first type that clears the residual, the cheapest correction wins.
    Skipped entirely when more than ``threshold`` checks are unsatisfied.
    """
    H, chk_q, _, stab_cache = _side_tables(code, side)
    unsat = np.nonzero(residual)[0]
    if unsat.size == 0 or unsat.size > threshold:
        return None
    base_h = None
    if code.base is not None:
        base_h = code.base.hz if side == "x" else code.base.hx

    candidate_sets: list[list[np.ndarray]] = [[], [], []]
    if base_h is not None:
        P = code.P
        base_rows = unsat // P
        lift_idx = unsat % P
        for i in range(len(unsat)):
            for j in range(i + 1, len(unsat)):
                r1, r2 = int(base_rows[i]), int(base_rows[j])
                if r1 != r2:
                    path = _base_graph_path(base_h, r1, r2)
                    if path is not None:
                        sup = _lift_walk_qubits(code, side, path, int(lift_idx[i]))
                        sup |= _lift_walk_qubits(
                            code, side, list(reversed(path)), int(lift_idx[j])
                        )
                        candidate_sets[0].append(np.fromiter(sorted(sup), dtype=np.int64))
                same_family = (r1 // 64) == (r2 // 64)
                if r1 == r2 or same_family:
                    joint = np.unique(chk_q[[unsat[i], unsat[j]]])
                    candidate_sets[1].append(joint)
    for tpl in templates or []:
        if tpl.get("side", side) == side:
            candidate_sets[2].append(np.asarray(tpl["qubits"], dtype=np.int64))

    for stage_sets in candidate_sets:
        best = None
        best_cost = np.inf
        for support in stage_sets:
            support = support[(0 <= support) & (support < code.n)]
            delta = _solve_on_support(
                H, residual, support, costs, stab_cache,
                require_unique_modulo_stabilizers=False,
            )
            if delta is None:
                continue
            c = costs[delta.astype(bool)].sum()
            if c < best_cost:
                best, best_cost = delta, c
        if best is not None:
            return best
    return None


# --- full pipeline --------------------------------------------------------------


@dataclass
class DecodeOutcome:
    """Decoder estimate plus status classification and residual weights."""

    estimate_x: np.ndarray
    estimate_z: np.ndarray
    status: str
    residual_weight_x: int
    residual_weight_z: int
    iterations: int
    logical_x: Optional[np.ndarray] = None
    logical_z: Optional[np.ndarray] = None
    logical_weight_x: Optional[int] = None
    logical_weight_z: Optional[int] = None


def _apply_verified(
    code: CssCode,
    side: str,
    syndromes,
    estimate: list[np.ndarray],
    delta: np.ndarray,
) -> bool:
    """Apply a candidate correction only if recomputation confirms progress."""
    idx = 0 if side == "x" else 1
    rx_old, rz_old = residual_setup(code, syndromes, (estimate[0], estimate[1]))
    old = (rx_old if side == "x" else rz_old).sum()
    trial = estimate[idx] ^ delta
    pair = (trial, estimate[1]) if side == "x" else (estimate[0], trial)
    rx_new, rz_new = residual_setup(code, syndromes, pair)
    new = (rx_new if side == "x" else rz_new).sum()
    if new == 0 or new < old:
        estimate[idx] = trial
        return True
    return False


def decode(
    code: CssCode,
    syndromes: tuple[np.ndarray, np.ndarray],
    prior: DepolarizingPrior,
    config: Optional[DecoderConfig] = None,
    _bp_result: Optional[tuple[BpState, tuple[np.ndarray, np.ndarray]]] = None,
) -> DecodeOutcome:
    """Run BP and, if a residual syndrome remains, the staged repair pipeline.

    The true error never enters; the final status reflects syndrome
    satisfaction only, with logical classification left to ``check_sc``.
    ``_bp_result`` lets a batched driver hand in the first BP pass.
    """
    config = config or DecoderConfig()
    templates = config.templates()
    if _bp_result is not None:
        state, (xh, zh) = _bp_result
    else:
        state, (xh, zh) = bp_decode(
            code, syndromes, prior, max_iter=config.max_iter, clip=config.clip
        )
    if state.converged:
        return DecodeOutcome(xh, zh, STATUS_BP_CONVERGED, 0, 0, state.iterations)

    estimate = [xh.copy(), zh.copy()]
    deepest = 0

    def stage_pass(costs_x, costs_z) -> int:
        nonlocal deepest
        rx, rz = residual_setup(code, syndromes, tuple(estimate))
        for side, resid, costs in (("x", rx, costs_x), ("z", rz, costs_z)):
            if not resid.any():
                continue
            H, _, _, stab_cache = _side_tables(code, side)
            delta = osd_bisect(H, resid, costs, stab_cache, _side_transpose(code, side))
            stage = 1
            if delta is None:
                delta = osd_local(code, side, resid, costs)
                stage = 2
            if delta is None:
                delta = fallback_repair(
                    code, side, resid, costs, templates, config.fallback_threshold
                )
                stage = 3
            if delta is not None and _apply_verified(
                code, side, syndromes, estimate, delta
            ):
                deepest = max(deepest, stage)
        rx, rz = residual_setup(code, syndromes, tuple(estimate))
        return int(rx.any()) + int(rz.any())

    open_sides = stage_pass(state.cost_x, state.cost_z)

    if open_sides == 1 and config.re_bp_iter > 0:
        rx_before, rz_before = residual_setup(code, syndromes, tuple(estimate))
        weight_before = rx_before.sum() + rz_before.sum()
        re_state, (rxh, rzh) = bp_decode(
            code,
            syndromes,
            prior,
            max_iter=config.re_bp_iter,
            clip=config.clip,
            init_estimate=tuple(estimate),
        )
        rx_after, rz_after = residual_setup(code, syndromes, (rxh, rzh))
        if rx_after.sum() + rz_after.sum() <= weight_before:
            estimate = [rxh.copy(), rzh.copy()]
            if not re_state.converged:
                open_sides = stage_pass(re_state.cost_x, re_state.cost_z)
            else:
                open_sides = 0

    if open_sides == 2:
        rx, rz = residual_setup(code, syndromes, tuple(estimate))
        unsat_zchk = np.nonzero(rx)[0]
        unsat_xchk = np.nonzero(rz)[0]
        cand = np.union1d(
            np.unique(code.z_chk_q[unsat_zchk]), np.unique(code.x_chk_q[unsat_xchk])
        )
        if cand.size > config.joint_cap:
            joint_cost = np.minimum(state.cost_x, state.cost_z)[cand]
            keep = np.lexsort((cand, joint_cost))[: config.joint_cap]
            cand = np.sort(cand[keep])
        dx = _solve_on_support(
            code.hz, rx, cand, state.cost_x, code.row_cache_x,
            require_unique_modulo_stabilizers=False,
        )
        dz = _solve_on_support(
            code.hx, rz, cand, state.cost_z, code.row_cache_z,
            require_unique_modulo_stabilizers=False,
        )
        if dx is not None and dz is not None:
            trial = [estimate[0] ^ dx, estimate[1] ^ dz]
            rx_t, rz_t = residual_setup(code, syndromes, tuple(trial))
            if not rx_t.any() and not rz_t.any():
                estimate = trial
                deepest = 4

    rx, rz = residual_setup(code, syndromes, tuple(estimate))
    if not rx.any() and not rz.any():
        status = _STAGE_STATUS.get(deepest, STATUS_BP_CONVERGED)
        return DecodeOutcome(
            estimate[0], estimate[1], status, 0, 0, state.iterations
        )
    return DecodeOutcome(
        estimate[0],
        estimate[1],
        STATUS_FAILED_SYNDROME,
        int(rx.sum()),
        int(rz.sum()),
        state.iterations,
    )


# --- success-criterion referee ---------------------------------------------------


@dataclass
class ScResult:
    status: str
    residual_x: Optional[np.ndarray] = None
    residual_z: Optional[np.ndarray] = None
    weight_x: Optional[int] = None
    weight_z: Optional[int] = None


def check_sc(
    code: CssCode,
    estimate: tuple[np.ndarray, np.ndarray],
    truth: tuple[np.ndarray, np.ndarray],
    caches: Optional[tuple[gf2.RowEchelonCache, gf2.RowEchelonCache]] = None,
) -> ScResult:
    """Ordered success test: syndromes first, then stabilizer-modulo residuals.

    The estimate must reproduce the syndromes of the true error; the
    differences (x side against row(hx), z side against row(hz)) must then
    be stabilizers.  A syndrome-satisfying non-stabilizer difference is a
    logical error and its residual operator is reported.
    """
    cache_x, cache_z = caches if caches is not None else (code.row_cache_x, code.row_cache_z)
    ex, ez = (np.asarray(v, dtype=np.uint8) for v in estimate)
    tx, tz = (np.asarray(v, dtype=np.uint8) for v in truth)
    sx, sz = code.syndromes(tx, tz)
    got_sx, got_sz = code.syndromes(ex, ez)
    if not (np.array_equal(sx, got_sx) and np.array_equal(sz, got_sz)):
        return ScResult(STATUS_FAILED_SYNDROME)
    dx = ex ^ tx
    dz = ez ^ tz
    x_ok = gf2.in_row_space(cache_x, BitVector.from_dense(dx))
    z_ok = gf2.in_row_space(cache_z, BitVector.from_dense(dz))
    if x_ok and z_ok:
        return ScResult(STATUS_SUCCESS)
    return ScResult(
        STATUS_LOGICAL,
        residual_x=None if x_ok else dx,
        residual_z=None if z_ok else dz,
        weight_x=None if x_ok else int(dx.sum()),
        weight_z=None if z_ok else int(dz.sum()),
    )


def classify_outcome(
    code: CssCode,
    outcome: DecodeOutcome,
    truth: tuple[np.ndarray, np.ndarray],
    caches: Optional[tuple[gf2.RowEchelonCache, gf2.RowEchelonCache]] = None,
) -> DecodeOutcome:
    """Referee a decoder outcome against the sampled truth."""
    if outcome.status == STATUS_FAILED_SYNDROME:
        return outcome
    sc = check_sc(code, (outcome.estimate_x, outcome.estimate_z), truth, caches)
    if sc.status == STATUS_SUCCESS:
        return outcome
    if sc.status == STATUS_FAILED_SYNDROME:
        return replace(outcome, status=STATUS_FAILED_SYNDROME)
    return replace(
        outcome,
        status=STATUS_LOGICAL,
        logical_x=sc.residual_x,
        logical_z=sc.residual_z,
        logical_weight_x=sc.weight_x,
        logical_weight_z=sc.weight_z,
    )
