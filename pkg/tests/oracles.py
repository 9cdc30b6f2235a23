"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import numpy as np


def dtw_unconstrained(x, y) -> float:
    """Full-table DTW with symmetric steps and |x_i - y_j| local cost."""
    n, m = len(x), len(y)
    table = np.full((n, m), np.inf)
    table[0, 0] = abs(x[0] - y[0])
    for i in range(n):
        for j in range(m):
            if i == 0 and j == 0:
                continue
            best = np.inf
            if i > 0:
                best = min(best, table[i - 1, j])
                if j > 0:
                    best = min(best, table[i - 1, j - 1])
            if j > 0:
                best = min(best, table[i, j - 1])
            table[i, j] = abs(x[i] - y[j]) + best
    return float(table[n - 1, m - 1])


def idw_reference(nodes, values, query, k, p) -> float:
    """Direct evaluation of the distance-weighted average at one point."""
    d = np.hypot(nodes[:, 0] - query[0], nodes[:, 1] - query[1])
    order = np.lexsort((np.arange(len(d)), d))[:k]
    dk = d[order]
    if dk[0] < 1e-12:
        return float(values[order[0]])
    w = dk**-p
    return float((w * values[order]).sum() / w.sum())
