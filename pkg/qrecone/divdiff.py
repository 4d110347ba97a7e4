from __future__ import annotations

import numpy as np

DEGENERACY_RTOL = 1e-7


def _close(a: float, b: float) -> bool:
    return abs(a - b) < DEGENERACY_RTOL * (1.0 + max(abs(a), abs(b)))


def first_divided_differences(lam: np.ndarray, f: np.ndarray, df: np.ndarray) -> np.ndarray:
    """Table g[l_i, l_j]; the diagonal and near-degenerate pairs use derivative values."""
    n = lam.shape[0]
    table = np.empty((n, n), dtype=float)
    for i in range(n):
        table[i, i] = df[i]
        for j in range(i + 1, n):
            if _close(lam[i], lam[j]):
                value = 0.5 * (df[i] + df[j])
            else:
                value = (f[i] - f[j]) / (lam[i] - lam[j])
            table[i, j] = value
            table[j, i] = value
    return table


def second_divided_differences(lam: np.ndarray, f: np.ndarray, df: np.ndarray, d2f: np.ndarray) -> np.ndarray:
    """Table g[l_i, l_j, l_k], symmetric in its three indices."""
    n = lam.shape[0]
    first = first_divided_differences(lam, f, df)
    table = np.empty((n, n, n), dtype=float)
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                a, b, c = lam[i], lam[j], lam[k]
                gap_ab, gap_ac, gap_bc = abs(a - b), abs(a - c), abs(b - c)
                widest = max(gap_ab, gap_ac, gap_bc)
                if widest == gap_ab and not _close(a, b):
                    value = (first[i, k] - first[j, k]) / (a - b)
                elif widest == gap_ac and not _close(a, c):
                    value = (first[i, j] - first[k, j]) / (a - c)
                elif widest == gap_bc and not _close(b, c):
                    value = (first[j, i] - first[k, i]) / (b - c)
                else:
                    value = (d2f[i] + d2f[j] + d2f[k]) / 6.0
                for p, q, r in ((i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)):
                    table[p, q, r] = value
    return table
