"""Condition rows for lines, fat lines, points and embedded points.

Columns are always the degree-d monomials of P^n in the order of
:func:`postlab.interp.monomials.exponents`.  A fat line of multiplicity m in
frame coordinates ``x = N y`` (the line is ``y_2 = ... = y_n = 0``) imposes
that every coefficient of ``F(N y)`` whose monomial has degree ``< m`` in the
transverse variables vanishes; each such coefficient is one row.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb
from typing import TextIO

import numpy as np

from postlab.interp.geometry import ConcreteScheme, LineFrame
from postlab.interp.monomials import eval_monomials, exponents, falling


def line_alphas(n: int, m: int, d: int) -> list[tuple[int, ...]]:
    """Frame monomials of degree ``d`` with transverse degree ``< m``, in row order."""
    out = []
    for j in range(min(m, d + 1)):
        for mu in exponents(n - 1, j):
            for a0 in range(d - j, -1, -1):
                out.append((a0, d - j - a0, *(int(x) for x in mu)))
    return out


def _keys(exps: np.ndarray, base: int) -> np.ndarray:
    """Mixed-radix integer keys; decreasing along the lexicographically descending order."""
    weights = base ** np.arange(exps.shape[1] - 1, -1, -1, dtype=np.int64)
    return exps @ weights


@lru_cache(maxsize=512)
def _pullback_step(nv: int, m: int, e: int):
    """Index bookkeeping for raising the pullback from degree ``e - 1`` to ``e``.

    Returns ``(groups, shifts, width)``: for each variable ``i`` the rows whose
    first nonzero index is ``i`` with their parent rows, and for each ``j`` the
    columns of degree ``e`` frame monomials reached from degree ``e - 1`` ones
    by multiplying with ``y_j``.
    """
    betas = exponents(nv, e)
    parents = exponents(nv, e - 1)
    parent_keys = _keys(parents, e + 1)[::-1]
    first = np.argmax(betas > 0, axis=1)
    groups = []
    for i in range(nv):
        rows = np.nonzero(first == i)[0]
        if rows.size == 0:
            continue
        par = betas[rows].copy()
        par[:, i] -= 1
        pos = np.searchsorted(parent_keys, _keys(par, e + 1))
        groups.append((i, rows, parents.shape[0] - 1 - pos))
    alphas = np.array(line_alphas(nv - 1, m, e), dtype=np.int64).reshape(-1, nv)
    prev = np.array(line_alphas(nv - 1, m, e - 1), dtype=np.int64).reshape(-1, nv)
    prev_index = {tuple(int(x) for x in a): k for k, a in enumerate(prev)}
    shifts = []
    for j in range(nv):
        dst, src = [], []
        for k in np.nonzero(alphas[:, j] > 0)[0]:
            b = alphas[k].copy()
            b[j] -= 1
            s = prev_index.get(tuple(int(x) for x in b))
            if s is not None:
                dst.append(k)
                src.append(s)
        shifts.append((np.array(dst, dtype=np.intp), np.array(src, dtype=np.intp)))
    return groups, shifts, alphas.shape[0]


def _pullback_series(N: np.ndarray, m: int, d: int, p: int):
    """Yield ``(e, T_e)`` for ``e = 0..d``; ``T_e[beta, k]`` is the coefficient of
    ``y^alpha_k`` in ``(N y)^beta`` mod ``p``.

    Built degree by degree: ``(N y)^beta = (N y)^(beta - e_i) * (N y)_i`` with
    ``i`` the first nonzero index of ``beta``.  Only frame monomials of
    transverse degree below ``m`` are tracked, which is closed under the
    recursion because multiplying never lowers transverse degree.
    """
    nv = N.shape[0]
    N = np.asarray(N, dtype=np.int64) % p
    # with p < 2**26 a sum of nv products stays far below 2**63, so one reduction suffices
    small = p < 2**26
    T = np.ones((1, 1), dtype=np.int64)
    yield 0, T
    for e in range(1, d + 1):
        groups, shifts, width = _pullback_step(nv, m, e)
        T_new = np.zeros((comb(e + nv - 1, nv - 1), width), dtype=np.int64)
        for i, rows, pidx in groups:
            Tp = T[pidx]
            block = np.zeros((rows.size, width), dtype=np.int64)
            for j, (dst, src) in enumerate(shifts):
                c = int(N[i, j])
                if c == 0 or dst.size == 0:
                    continue
                if small:
                    block[:, dst] += c * Tp[:, src]
                else:
                    block[:, dst] += c * Tp[:, src] % p
            T_new[rows] = block % p
        T = T_new
        yield e, T


def _pullback(N: np.ndarray, m: int, d: int, p: int) -> np.ndarray:
    for _, T in _pullback_series(N, m, d, p):
        pass
    return T


@dataclass(frozen=True, eq=False)
class FatLineBlock:
    """Rows of a fat line, materialized on first access of ``matrix``."""

    frame: LineFrame
    m: int
    d: int
    n: int
    p: int

    @cached_property
    def alphas(self) -> list[tuple[int, ...]]:
        return line_alphas(self.n, self.m, self.d)

    @property
    def nrows(self) -> int:
        return len(self.alphas)

    @property
    def ncols(self) -> int:
        return comb(self.d + self.n, self.n)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.ascontiguousarray(_pullback(self.frame.inverse, self.m, self.d, self.p).T)


def _check(m: int, d: int, n: int) -> None:
    if m < 1:
        raise ValueError(f"multiplicity must be >= 1, got {m}")
    if m > d:
        raise ValueError(f"multiplicity {m} exceeds degree {d}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")


def fat_line_block(L: LineFrame, m: int, d: int, n: int, p: int) -> FatLineBlock:
    _check(m, d, n)
    return FatLineBlock(L, m, d, n, p)


def fat_line_rows(L: LineFrame, m: int, d: int, n: int, p: int) -> np.ndarray:
    """The ``conditions_fat_line(n, m, d)`` rows of an ``m``-fold line."""
    return fat_line_block(L, m, d, n, p).matrix


def fat_line_series(L: LineFrame, m: int, d_max: int, n: int, p: int):
    """Yield ``(d, fat_line_rows(L, m, d, n, p))`` for ``d = m..d_max`` in one pass.

    The pullback table of degree ``d`` is the block of degree ``d``, so a sweep
    over degrees costs no more than its largest member.
    """
    _check(m, d_max, n)
    for e, T in _pullback_series(L.inverse, m, d_max, p):
        if e >= m:
            yield e, np.ascontiguousarray(T.T)


def derivative_row(P: np.ndarray, gamma: np.ndarray, d: int, n: int, p: int) -> np.ndarray:
    """The functional ``F -> (d^gamma F)(P)``."""
    exps = exponents(n + 1, d)
    shifted = exps - gamma
    ok = (shifted >= 0).all(axis=1)
    coeff = np.ones(exps.shape[0], dtype=np.int64)
    for i, g in enumerate(gamma):
        coeff = coeff * (falling(exps[:, i], int(g)) % p) % p
    vals = np.zeros(exps.shape[0], dtype=np.int64)
    vals[ok] = eval_monomials(shifted[ok], P, p)
    return coeff * vals % p


def derivative_rows_oracle(L: LineFrame, m: int, d: int, n: int, p: int) -> np.ndarray:
    """All derivatives of order ``j < m`` at ``d - j + 1`` distinct points of the line."""
    _check(m, d, n)
    if p <= d:
        raise ValueError(f"prime {p} too small for degree {d}")
    rows = []
    for j in range(m):
        pts = [L.point(1, s, p) for s in range(d - j + 1)]
        for gamma in exponents(n + 1, j):
            for P in pts:
                rows.append(derivative_row(P, gamma, d, n, p))
    return np.array(rows, dtype=np.int64).reshape(-1, comb(d + n, n))


def point_row(P: np.ndarray, d: int, n: int, p: int) -> np.ndarray:
    """Evaluation of the degree-``d`` monomials at ``P``."""
    P = np.asarray(P, dtype=np.int64) % p
    if not P.any():
        raise ValueError("the zero vector is not a projective point")
    return eval_monomials(exponents(n + 1, d), P, p)


def embedded_point_row(P: np.ndarray, v: np.ndarray, d: int, n: int, p: int) -> np.ndarray:
    """Directional derivative along ``v`` at ``P``."""
    out = np.zeros(comb(d + n, n), dtype=np.int64)
    if d == 0:
        return out
    for i, vi in enumerate(np.asarray(v, dtype=np.int64) % p):
        if vi:
            gamma = np.zeros(n + 1, dtype=np.int64)
            gamma[i] = 1
            out = (out + int(vi) * derivative_row(P, gamma, d, n, p)) % p
    return out


def line_rows(L: LineFrame, d: int, n: int, p: int) -> np.ndarray:
    """``d + 1`` rows of a reduced line: evaluation at ``d + 1`` of its points."""
    if p <= d:
        return fat_line_rows(L, 1, d, n, p)
    return np.array([point_row(L.point(1, s, p), d, n, p) for s in range(d + 1)],
                    dtype=np.int64).reshape(d + 1, -1)


def _stack(blocks: list[np.ndarray], ncols: int) -> np.ndarray:
    blocks = [b.reshape(-1, ncols) for b in blocks]
    if not blocks:
        return np.zeros((0, ncols), dtype=np.int64)
    return np.concatenate(blocks, axis=0)


def matrix_blocks(C: ConcreteScheme, d: int) -> list[tuple[str, np.ndarray]]:
    """Named row blocks in build order."""
    n, p = C.n, C.p
    ncols = comb(d + n, n)
    out: list[tuple[str, np.ndarray]] = []
    if C.fat is not None:
        frame, m = C.fat
        out.append(("fat", fat_line_rows(frame, m, d, n, p)))
    out.append(("lines", _stack([line_rows(L, d, n, p) for L in C.lines], ncols)))
    out.append(("crosses", _stack([line_rows(L, d, n, p)
                                   for ch in C.crosses for L in ch.lines], ncols)))
    out.append(("chains", _stack([line_rows(L, d, n, p)
                                  for ch in C.chains for L in ch.lines], ncols)))
    emb = []
    for ch in (*C.crosses, *C.chains):
        if ch.directions is not None:
            emb += [embedded_point_row(P, v, d, n, p) for P, v in zip(ch.nodes, ch.directions)]
    out.append(("embedded", _stack(emb, ncols)))
    out.append(("points", _stack([point_row(P, d, n, p) for P in C.points], ncols)))
    return out


def build_matrix(C: ConcreteScheme, d: int) -> np.ndarray:
    """All condition rows: fat line, simple lines, crosses, chains, embedded rows, points."""
    if C.fat is not None and d < C.fat[1]:
        raise ValueError(f"degree {d} below the fat line multiplicity {C.fat[1]}")
    ncols = comb(d + C.n, C.n)
    return _stack([b for _, b in matrix_blocks(C, d)], ncols)


def dump_matrix(M: np.ndarray, p: int, fh: TextIO) -> None:
    """Header ``rows cols p`` then one space-separated row per line."""
    M = np.asarray(M, dtype=np.int64)
    fh.write(f"{M.shape[0]} {M.shape[1]} {p}\n")
    for row in M:
        fh.write(" ".join(map(str, row.tolist())) + "\n")


def load_matrix(fh: TextIO) -> tuple[np.ndarray, int]:
    rows, cols, p = (int(x) for x in fh.readline().split())
    data = np.array(fh.read().split(), dtype=np.int64)
    if data.size != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, found {data.size}")
    return data.reshape(rows, cols), p
