"""Reader/writer for the alist sparse parity-check matrix format.

Layout: first line "n m" (columns then rows), then max column/row degrees,
the per-column and per-row degree lists, then one line of 1-based row
indices per column and one line of 1-based column indices per row, each
padded with zeros up to the maximum degree.
"""

from __future__ import annotations

import numpy as np

from .gf2 import BitMatrix


def write_alist(path, m: BitMatrix) -> None:
    dense = m.to_dense()
    col_supports = [np.nonzero(dense[:, j])[0] for j in range(m.cols)]
    row_supports = [np.nonzero(dense[i, :])[0] for i in range(m.rows)]
    col_deg = [len(s) for s in col_supports]
    row_deg = [len(s) for s in row_supports]
    max_col = max(col_deg, default=0)
    max_row = max(row_deg, default=0)
    with open(path, "w") as fh:
        fh.write(f"{m.cols} {m.rows}\n")
        fh.write(f"{max_col} {max_row}\n")
        fh.write(" ".join(map(str, col_deg)) + "\n")
        fh.write(" ".join(map(str, row_deg)) + "\n")
        for supports, peak in ((col_supports, max_col), (row_supports, max_row)):
            for s in supports:
                entries = [str(int(v) + 1) for v in s] + ["0"] * (peak - len(s))
                fh.write(" ".join(entries) + "\n")


def read_alist(path) -> BitMatrix:
    with open(path) as fh:
        tokens = [line.split() for line in fh if line.strip()]
    try:
        n, m = (int(v) for v in tokens[0])
        col_deg = [int(v) for v in tokens[2]]
        if len(col_deg) != n:
            raise ValueError("column degree list length mismatch")
        mat = BitMatrix.zeros(m, n)
        for j in range(n):
            entries = [int(v) for v in tokens[4 + j]]
            live = [v for v in entries if v != 0]
            if len(live) != col_deg[j]:
                raise ValueError(f"column {j} degree mismatch")
            for r in live:
                if not 1 <= r <= m:
                    raise ValueError(f"row index {r} out of range")
                mat.set(r - 1, j, 1)
        return mat
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed alist file {path}: {exc}") from exc
