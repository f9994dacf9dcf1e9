"""Linear systems of bidegree (a, b) on P^1 x P^1 through fat points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from postlab.expected import Bidegree, lenarcik_special, vdim_p1p1
from postlab.interp.field import PrimeField, rank_mod
from postlab.interp.geometry import derive_seed
from postlab.interp.monomials import falling
from postlab.schemes import OmegaSpec


def bidegree_exponents(a: int, b: int) -> np.ndarray:
    """Exponents ``(u, v)`` of ``sigma^u tau^v``, ``u <= a``, ``v <= b``."""
    u, v = np.meshgrid(np.arange(a + 1), np.arange(b + 1), indexing="ij")
    return np.stack([u.ravel(), v.ravel()], axis=1).astype(np.int64)


def _pow(x: int, e: np.ndarray, p: int) -> np.ndarray:
    table = np.ones(int(e.max(initial=0)) + 1, dtype=np.int64)
    for k in range(1, table.size):
        table[k] = table[k - 1] * x % p
    return np.where(e >= 0, table[np.maximum(e, 0)], 0)


def derivative_functional(exps: np.ndarray, point: tuple[int, int], i: int, j: int,
                          p: int) -> np.ndarray:
    """``f -> (d_sigma^i d_tau^j f)(point)`` in the affine chart."""
    s, t = point
    u, v = exps[:, 0], exps[:, 1]
    coeff = falling(u, i) % p * (falling(v, j) % p) % p
    return coeff * _pow(s % p, u - i, p) % p * _pow(t % p, v - j, p) % p


def fat_point_rows(exps: np.ndarray, point: tuple[int, int], mult: int, p: int) -> np.ndarray:
    """``C(mult + 1, 2)`` rows: all derivatives of order ``< mult`` at ``point``."""
    rows = [derivative_functional(exps, point, i, k - i, p)
            for k in range(mult) for i in range(k + 1)]
    return np.array(rows, dtype=np.int64).reshape(-1, exps.shape[0])


def ruling_line_rows(exps: np.ndarray, tau0: int, mult: int, p: int) -> np.ndarray:
    """Conditions for ``(tau - tau0)^mult`` to divide ``f``."""
    a = int(exps[:, 0].max(initial=0))
    u, v = exps[:, 0], exps[:, 1]
    rows = []
    for j in range(mult):
        vals = falling(v, j) % p * _pow(tau0 % p, v - j, p) % p
        for k in range(a + 1):
            rows.append(np.where(u == k, vals, 0))
    return np.array(rows, dtype=np.int64).reshape(-1, exps.shape[0])


def random_points(count: int, field_: PrimeField, rng: np.random.Generator,
                  taken: set[tuple[int, int]]) -> list[tuple[int, int]]:
    """Distinct affine points, none sharing a coordinate with an earlier one."""
    out = []
    while len(out) < count:
        s, t = (int(x) for x in field_.random(rng, 2))
        if any(s == a or t == b for a, b in taken):
            continue
        taken.add((s, t))
        out.append((s, t))
    return out


def p1p1_matrix(bd: Bidegree, om: OmegaSpec, field_: PrimeField, seed: int = 0) -> np.ndarray:
    """Condition matrix of ``om`` realized at random points, columns ``(a+1)(b+1)``."""
    if bd.a < 0 or bd.b < 0:
        raise ValueError(f"negative bidegree {bd}")
    p = field_.p
    if p <= max(bd.a, bd.b):
        raise ValueError(f"prime {p} too small for bidegree {bd}")
    rng = np.random.default_rng(derive_seed("p1p1", bd.a, bd.b, om.p, om.p_d, om.p_m, om.m_pt, p, seed))
    exps = bidegree_exponents(bd.a, bd.b)
    taken: set[tuple[int, int]] = set()
    blocks = []
    for count, mult in ((om.p_m, om.m_pt), (om.p_d, 2), (om.p, 1)):
        for pt in random_points(count, field_, rng, taken):
            if mult:
                blocks.append(fat_point_rows(exps, pt, mult, p))
    if not blocks:
        return np.zeros((0, exps.shape[0]), dtype=np.int64)
    return np.concatenate(blocks, axis=0)


@dataclass(frozen=True)
class P1P1Report:
    a: int
    b: int
    omega: OmegaSpec
    vdim: int
    h0: int
    rank: int
    cols: int
    special_by_rank: bool
    lenarcik: bool | None
    prime: int
    seed: int

    @property
    def agree(self) -> bool:
        return self.lenarcik is None or self.lenarcik == self.special_by_rank

    def to_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, **self.omega.to_dict(),
            "vdim": self.vdim, "h0": self.h0, "rank": self.rank, "cols": self.cols,
            "special_by_rank": self.special_by_rank, "lenarcik": self.lenarcik,
            "agree": self.agree, "prime": self.prime, "seed": self.seed,
        }


def p1p1_h0(bd: Bidegree, om: OmegaSpec, field_: PrimeField, seed: int = 0,
            retries: int = 3) -> tuple[int, int]:
    """``(h0, rank)`` with the best rank over ``retries`` realizations."""
    cols = (bd.a + 1) * (bd.b + 1)
    best = 0
    for trial in range(retries):
        best = max(best, rank_mod(p1p1_matrix(bd, om, field_, derive_seed(seed, trial)), field_.p))
        if best == cols:
            break
    return cols - best, best


def p1p1_report(bd: Bidegree, om: OmegaSpec, field_: PrimeField, seed: int = 0,
                retries: int = 3) -> P1P1Report:
    """Rank-oracle speciality, with the Lenarcik predicate when multiplicities are at most 2."""
    folded = om.folded()
    vdim = vdim_p1p1(bd, folded)
    h0, rank = p1p1_h0(bd, folded, field_, seed, retries)
    special = h0 > max(0, vdim)
    lenarcik = None
    if folded.max_multiplicity() <= 2:
        lenarcik = lenarcik_special(bd, folded.p_d, folded.p)
    return P1P1Report(bd.a, bd.b, om, vdim, h0, rank, (bd.a + 1) * (bd.b + 1),
                      special, lenarcik, field_.p, seed)
