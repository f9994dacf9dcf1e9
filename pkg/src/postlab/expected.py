"""Closed-form condition counts for a fat line, general lines and points in P^3.

Everything here is exact integer arithmetic.  The functions only read the
fields ``m, r, s, q, z`` of a scheme and ``p, p_d, p_m, m_pt`` of a point
scheme on P^1 x P^1, so they accept the value types of :mod:`postlab.schemes`
without importing them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from postlab.schemes import OmegaSpec, SchemeSpec


class DomainError(ValueError):
    """An argument lies outside the range where a closed form is valid."""


class Kind(str, Enum):
    B = "B"
    I = "I"  # noqa: E741


@dataclass(frozen=True)
class SystemLabel:
    """``B(k, eps, m)`` (bijective) or ``I(k, eps, m)`` (injective) in degree 3k+eps."""

    kind: Kind
    k: int
    eps: int
    m: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.eps not in (0, 1, 2):
            raise DomainError(f"eps must be 0, 1 or 2, got {self.eps}")
        if self.k < 0 or self.m < 0:
            raise DomainError(f"k and m must be non-negative: {self}")

    @property
    def degree(self) -> int:
        return 3 * self.k + self.eps

    @classmethod
    def from_degree(cls, kind: Kind | str, d: int, m: int) -> SystemLabel:
        k, eps = divmod(d, 3)
        return cls(Kind(kind), k, eps, m)

    def __str__(self) -> str:
        return f"{self.kind.value}({self.k},{self.eps},{self.m})"


@dataclass(frozen=True)
class Bidegree:
    a: int
    b: int

    def normalized(self) -> Bidegree:
        return self if self.a <= self.b else Bidegree(self.b, self.a)


def _exact_div(num: int, den: int) -> int:
    quo, rem = divmod(num, den)
    assert rem == 0, f"{num} is not divisible by {den}"
    return quo


def conditions_fat_line(n: int, m: int, d: int) -> int:
    """Number of conditions imposed on degree-``d`` forms of P^n by an m-fold line."""
    if n < 2:
        raise DomainError(f"conditions_fat_line needs n >= 2, got n={n}")
    if m < 1:
        raise DomainError(f"conditions_fat_line needs m >= 1, got m={m}")
    if d < m:
        raise DomainError(f"closed form only valid for d >= m (d={d}, m={m})")
    num = m * (n * d + 2 * n + m - m * n - 1) * comb(n + m - 2, m)
    return _exact_div(num, n * (n - 1))


def conditions_fat_line_p3(m: int, d: int) -> int:
    """``c(d, m) = m(m+1)(3d+5-2m)/6``; zero for ``m = 0``."""
    if m < 0:
        raise DomainError(f"multiplicity must be non-negative, got {m}")
    if d < m:
        raise DomainError(f"closed form only valid for d >= m (d={d}, m={m})")
    return _exact_div(m * (m + 1) * (3 * d + 5 - 2 * m), 6)


def hilbert_poly_pn(n: int, d: int) -> int:
    if n < 1 or d < 0:
        raise DomainError(f"need n >= 1 and d >= 0, got n={n}, d={d}")
    return comb(d + n, n)


def d0(m: int) -> int:
    """Degree threshold ``3 * C(m+1, 3)`` of the maximal rank theorem."""
    if m < 0:
        raise DomainError(f"multiplicity must be non-negative, got {m}")
    return 3 * comb(m + 1, 3)


def split_r_q(d: int, m: int) -> tuple[int, int]:
    """Write ``C(d+3,3) - c(d,m)`` as ``r(d+1) + q`` with ``0 <= q <= d``."""
    rest = hilbert_poly_pn(3, d) - conditions_fat_line_p3(m, d)
    if rest < 0:
        raise DomainError(f"fat line oversaturates degree {d} (m={m})")
    return divmod(rest, d + 1)


def r_q_branch(k: int, eps: int, m: int) -> tuple[int, int]:
    """The residue-class formulas for ``r(3k+eps, m)`` and ``q(3k+eps, m)``."""
    if eps not in (0, 1, 2):
        raise DomainError(f"eps must be 0, 1 or 2, got {eps}")
    # doubled numerators keep the k/2 terms integral
    lin = (5, 7, 9)[eps]
    r = _exact_div(3 * k * k + lin * k + 2 * (eps + 1), 2) - comb(m + 1, 2)
    q = 2 * comb(m + 1, 3) + (k + 1 if eps == 2 else 0)
    return r, q


def _zigzag_length(d: int, z: int) -> int:
    if z == 1:
        raise DomainError("zig-zag of length 1 is not canonical; fold it into r")
    return z * (d + 1) - (z - 1) if z >= 2 else 0


def length_pn(n: int, d: int, Z: SchemeSpec) -> int:
    """Sum of the stable-range lengths of the components of ``Z`` in P^n."""
    if d < Z.m:
        raise DomainError(f"degree {d} below the fat line multiplicity {Z.m}")
    fat = conditions_fat_line(n, Z.m, d) if Z.m else 0
    return fat + Z.r * (d + 1) + Z.s * (2 * d + 1) + Z.q + _zigzag_length(d, Z.z)


def length_p3(d: int, Z: SchemeSpec) -> int:
    if d < Z.m:
        raise DomainError(f"degree {d} below the fat line multiplicity {Z.m}")
    return (
        conditions_fat_line_p3(Z.m, d)
        + Z.r * (d + 1)
        + Z.s * (2 * d + 1)
        + Z.q
        + _zigzag_length(d, Z.z)
    )


def expected_h0_p3(d: int, Z: SchemeSpec) -> int:
    """Dimension of degree-d forms through ``Z`` predicted by maximal rank."""
    return max(0, hilbert_poly_pn(3, d) - length_p3(d, Z))


def vdim_p1p1(bd: Bidegree, om: OmegaSpec) -> int:
    """Virtual dimension of bidegree ``bd`` forms on P^1 x P^1 through ``om``."""
    if bd.a < 0 or bd.b < 0:
        raise DomainError(f"negative bidegree {bd}")
    return (bd.a + 1) * (bd.b + 1) - om.p - 3 * om.p_d - om.p_m * comb(om.m_pt + 1, 2)


def lenarcik_special(bd: Bidegree, p_d: int, q_s: int) -> bool:
    """Speciality of bidegree ``bd`` through ``p_d`` general double and ``q_s`` simple points.

    Only two families are special: on ``(0, b)`` a double point costs two
    conditions instead of three, and ``(2, p_d - 1)`` with an odd number of
    double points contains twice the ``(1, (p_d-1)/2)`` curve through them.
    """
    bd = bd.normalized()
    a, b = bd.a, bd.b
    if a == 0:
        return p_d >= 1 and 2 * p_d + q_s <= b
    if a == 2:
        return q_s == 0 and p_d % 2 == 1 and b == p_d - 1
    return False
