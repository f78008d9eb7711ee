"""Tanner graph cycle analysis: 4-/6-cycle detection and girth.

Short cycles have combinatorial signatures that avoid any search: a 4-cycle
is two checks sharing two qubits, and a 6-cycle is three checks meeting
pairwise in three distinct qubits.  Girth is computed independently by
truncated BFS from every check vertex, which doubles as a cross-check of the
combinatorial detectors.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .gf2 import BitMatrix


@dataclass
class TannerGraph:
    """Bipartite adjacency: sorted qubit list per check, check list per qubit."""

    check_adj: list[list[int]]
    var_adj: list[list[int]]

    @classmethod
    def from_bitmatrix(cls, m: BitMatrix) -> "TannerGraph":
        check_adj = [sorted(int(v) for v in m.row_support(r)) for r in range(m.rows)]
        return cls.from_check_lists(check_adj, m.cols)

    @classmethod
    def from_check_lists(cls, check_adj, n_vars: int) -> "TannerGraph":
        var_adj: list[list[int]] = [[] for _ in range(n_vars)]
        norm = []
        for c, qubits in enumerate(check_adj):
            qubits = sorted(int(q) for q in qubits)
            norm.append(qubits)
            for q in qubits:
                var_adj[q].append(c)
        return cls(norm, var_adj)

    @property
    def n_checks(self) -> int:
        return len(self.check_adj)

    @property
    def n_vars(self) -> int:
        return len(self.var_adj)


def has_4cycle(g: TannerGraph) -> Optional[tuple[int, int, int, int]]:
    """Witness (check1, check2, qubit1, qubit2) of a 4-cycle, or None.

    None means every pair of distinct checks shares at most one qubit.
    """
    seen: dict[tuple[int, int], int] = {}
    for q, checks in enumerate(g.var_adj):
        for i in range(len(checks)):
            for j in range(i + 1, len(checks)):
                key = (checks[i], checks[j])
                if key in seen:
                    return (key[0], key[1], seen[key], q)
                seen[key] = q
    return None


def has_6cycle(
    g: TannerGraph,
) -> Optional[tuple[int, int, int, int, int, int]]:
    """Witness (c1, c2, c3, q12, q23, q31) of a 6-cycle, or None.

    Assumes no 4-cycles, so each pair of checks meets in at most one qubit;
    a 6-cycle is then a triangle in the check-intersection graph whose three
    intersection qubits are distinct.
    """
    pair_qubit: dict[tuple[int, int], int] = {}
    neighbors: dict[int, dict[int, int]] = {}
    for q, checks in enumerate(g.var_adj):
        for i in range(len(checks)):
            for j in range(i + 1, len(checks)):
                c1, c2 = checks[i], checks[j]
                pair_qubit[(c1, c2)] = q
                neighbors.setdefault(c1, {})[c2] = q
                neighbors.setdefault(c2, {})[c1] = q
    for (c1, c2), q12 in pair_qubit.items():
        n1 = neighbors.get(c1, {})
        n2 = neighbors.get(c2, {})
        if len(n1) > len(n2):
            n1, n2 = n2, n1
        for c3 in n1:
            if c3 == c2:
                continue
            if c3 in n2:
                q31 = neighbors[c3][c1]
                q23 = neighbors[c3][c2]
                if len({q12, q23, q31}) == 3:
                    return (c1, c2, c3, q12, q23, q31)
    return None


def girth(g: TannerGraph, stop_at: Optional[int] = None) -> float:
    """Length of the shortest cycle; ``math.inf`` for a forest.

    BFS from every check vertex, truncated at the depth that could still
    improve the best cycle found so far.  ``stop_at`` returns early once a
    cycle at most that long is found (useful as a pure floor check).
    Vertices are encoded as check index c -> c, qubit q -> n_checks + q.
    """
    nc = g.n_checks
    total = nc + g.n_vars
    adj: list[list[int]] = [[] for _ in range(total)]
    for c, qubits in enumerate(g.check_adj):
        for q in qubits:
            adj[c].append(nc + q)
            adj[nc + q].append(c)
    best = math.inf
    dist = np.full(total, -1, dtype=np.int64)
    parent = np.full(total, -1, dtype=np.int64)
    for src in range(nc):
        if best == 4:
            break
        if stop_at is not None and best <= stop_at:
            break
        dist[:] = -1
        parent[:] = -1
        dist[src] = 0
        queue = deque([src])
        depth_cap = (best - 1) // 2 if best < math.inf else math.inf
        while queue:
            v = queue.popleft()
            dv = dist[v]
            if dv >= depth_cap:
                continue
            for w in adj[v]:
                if w == parent[v]:
                    continue
                if dist[w] < 0:
                    dist[w] = dv + 1
                    parent[w] = v
                    queue.append(w)
                else:
                    cycle = int(dv + 1 + dist[w])
                    if cycle < best:
                        best = cycle
                        depth_cap = (best - 1) // 2
    return best


def girth_at_least(g: TannerGraph, floor: int) -> bool:
    """True iff the graph has no cycle shorter than ``floor``."""
    return girth(g, stop_at=floor - 1) >= floor


def validate_cycle_witness(g: TannerGraph, checks: list[int], qubits: list[int]) -> bool:
    """Replay a closed alternating walk check->qubit->check... of equal lengths.

    ``qubits[i]`` must join ``checks[i]`` and ``checks[(i+1) % len]``; all
    checks distinct, all qubits distinct.
    """
    k = len(checks)
    if len(qubits) != k:
        return False
    if len(set(checks)) != k or len(set(qubits)) != k:
        return False
    for i in range(k):
        c_here, c_next = checks[i], checks[(i + 1) % k]
        q = qubits[i]
        if q not in g.check_adj[c_here] or q not in g.check_adj[c_next]:
            return False
    return True
