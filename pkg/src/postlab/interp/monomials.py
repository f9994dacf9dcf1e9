"""Monomial bases of degree-d forms, in a fixed lexicographically descending order."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(total - head, parts - 1):
            yield (head, *tail)


@lru_cache(maxsize=None)
def exponents(nvars: int, d: int) -> np.ndarray:
    """All exponent vectors of degree ``d`` in ``nvars`` variables, shape (N, nvars)."""
    if d < 0:
        return np.zeros((0, nvars), dtype=np.int64)
    arr = np.array(list(_compositions(d, nvars)), dtype=np.int64).reshape(-1, nvars)
    arr.flags.writeable = False
    return arr


@lru_cache(maxsize=None)
def index_of(nvars: int, d: int) -> dict[tuple[int, ...], int]:
    return {tuple(int(x) for x in row): i for i, row in enumerate(exponents(nvars, d))}


def power_table(point: np.ndarray, d: int, p: int) -> np.ndarray:
    """``table[i, k] = point[i] ** k mod p`` for ``k <= d``."""
    pt = np.asarray(point, dtype=np.int64) % p
    table = np.ones((pt.size, d + 1), dtype=np.int64)
    for k in range(1, d + 1):
        table[:, k] = table[:, k - 1] * pt % p
    return table


def eval_monomials(exps: np.ndarray, point: np.ndarray, p: int) -> np.ndarray:
    """Values of the monomials ``exps`` at ``point`` modulo ``p``."""
    exps = np.asarray(exps)
    if exps.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    table = power_table(point, max(int(exps.max()), 0), p)
    out = np.ones(exps.shape[0], dtype=np.int64)
    for i in range(exps.shape[1]):
        out = out * table[i, exps[:, i]] % p
    return out


def falling(n: np.ndarray, k: int) -> np.ndarray:
    """Falling factorial ``n (n-1) ... (n-k+1)``, zero where ``n < k``."""
    out = np.ones_like(n)
    for j in range(k):
        out = out * np.maximum(n - j, 0)
    return out
