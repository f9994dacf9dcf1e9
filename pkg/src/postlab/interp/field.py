"""Dense linear algebra over word-size prime fields.

Matrices are ``int64`` arrays with entries in ``[0, p)``.  Products go through
float64 BLAS: for ``p < 2**26`` every partial sum of a chunked inner product is
an integer below ``2**53`` and therefore exact; larger primes (up to ``2**31``)
are split into 16-bit limbs first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_PRIME = 65521
SECOND_PRIME = 2147483647

_EXACT = 2**53
_LIMB = 16


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    p: int = DEFAULT_PRIME

    def __post_init__(self) -> None:
        if not 2 < self.p < 2**31 or not is_prime(self.p):
            raise ValueError(f"need an odd prime below 2**31, got {self.p}")

    def inv(self, x: int) -> int:
        return pow(int(x) % self.p, -1, self.p)

    def array(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.int64) % self.p

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.integers(0, self.p, size=shape, dtype=np.int64)


def _chunked_dot(A: np.ndarray, B: np.ndarray, bound: int, p: int) -> np.ndarray:
    """Exact ``A @ B mod p`` when every entry product is below ``bound``."""
    inner = A.shape[1]
    step = max(1, _EXACT // max(bound, 1))
    Af = A.astype(np.float64)
    Bf = B.astype(np.float64)
    if inner <= step:
        return np.rint(Af @ Bf).astype(np.int64) % p
    out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    for lo in range(0, inner, step):
        part = np.rint(Af[:, lo:lo + step] @ Bf[lo:lo + step]).astype(np.int64) % p
        out += part
        out %= p
    return out


def matmul_mod(A: np.ndarray, B: np.ndarray, p: int) -> np.ndarray:
    """Exact matrix product modulo ``p`` for reduced operands."""
    if A.shape[1] == 0:
        return np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    if p < 2**26:
        return _chunked_dot(A, B, (p - 1) ** 2, p)
    mask = (1 << _LIMB) - 1
    A1, A0 = A >> _LIMB, A & mask
    B1, B0 = B >> _LIMB, B & mask
    bound = 1 << (2 * _LIMB)
    hi = _chunked_dot(A1, B1, bound, p)
    mid = (_chunked_dot(A1, B0, bound, p) + _chunked_dot(A0, B1, bound, p)) % p
    lo = _chunked_dot(A0, B0, bound, p)
    shift1 = (1 << _LIMB) % p
    shift2 = (1 << (2 * _LIMB)) % p
    return (hi * shift2 % p + mid * shift1 % p + lo) % p


def inv_mod(X: np.ndarray, p: int) -> np.ndarray:
    """Inverse of a square matrix over F_p by Gauss-Jordan elimination."""
    k = X.shape[0]
    aug = np.concatenate([X % p, np.eye(k, dtype=np.int64)], axis=1)
    for col in range(k):
        nz = np.nonzero(aug[col:, col])[0]
        if nz.size == 0:
            raise ZeroDivisionError("singular matrix")
        piv = col + nz[0]
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] * pow(int(aug[col, col]), -1, p) % p
        f = aug[:, col].copy()
        f[col] = 0
        rows = np.nonzero(f)[0]
        if rows.size:
            aug[rows] = (aug[rows] - f[rows, None] * aug[col]) % p
    return aug[:, k:]


def _greedy_pivots(P: np.ndarray, p: int) -> tuple[list[int], list[int]]:
    """Row/column pivots of ``P`` found by left-to-right elimination (``P`` is overwritten)."""
    used = np.zeros(P.shape[0], dtype=bool)
    prow: list[int] = []
    pcol: list[int] = []
    for j in range(P.shape[1]):
        cand = np.nonzero(~used & (P[:, j] != 0))[0]
        if cand.size == 0:
            continue
        i = int(cand[0])
        used[i] = True
        prow.append(i)
        pcol.append(j)
        rest = cand[1:]
        if rest.size:
            f = P[rest, j] * pow(int(P[i, j]), -1, p) % p
            P[rest, j:] = (P[rest, j:] - f[:, None] * P[i, j:]) % p
    return prow, pcol


def _panel_pivots(panel: np.ndarray, p: int) -> tuple[list[int], list[int]]:
    # a dense panel usually reaches full column rank within its first rows
    width = panel.shape[1]
    head = min(panel.shape[0], 2 * width)
    if head < panel.shape[0]:
        prow, pcol = _greedy_pivots(panel[:head].copy(), p)
        if len(pcol) == width:
            return prow, pcol
    return _greedy_pivots(panel.copy(), p)


def rank_mod(M, p: int, block: int = 128) -> int:
    """Exact rank over F_p by blocked elimination with Schur complement updates."""
    A = np.asarray(M, dtype=np.int64) % p
    if A.ndim != 2:
        raise ValueError("rank_mod expects a 2-d array")
    if A.shape[0] < A.shape[1]:
        A = np.ascontiguousarray(A.T)
    rank = 0
    while A.shape[0] and A.shape[1]:
        nb = min(block, A.shape[1])
        prow, pcol = _panel_pivots(A[:, :nb], p)
        k = len(prow)
        if k == 0:
            A = A[:, nb:]
            continue
        rank += k
        other = np.setdiff1d(np.arange(A.shape[0]), prow)
        rest = np.setdiff1d(np.arange(A.shape[1]), pcol)
        if other.size == 0 or rest.size == 0:
            break
        X = A[np.ix_(prow, pcol)]
        W = matmul_mod(A[np.ix_(other, pcol)], inv_mod(X, p), p)
        S = A[np.ix_(other, rest)] - matmul_mod(W, A[np.ix_(prow, rest)], p)
        S %= p
        dead = nb - k
        assert not S[:, :dead].any(), "panel pivots do not span the panel"
        A = S[:, dead:]
    return rank
