"""Maximal-rank certification of random realizations."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from math import comb
from typing import Callable

import numpy as np

from postlab.expected import length_p3, length_pn
from postlab.interp.field import PrimeField, rank_mod
from postlab.interp.geometry import derive_seed, realize
from postlab.interp.rows import build_matrix, matrix_blocks
from postlab.schemes import SchemeSpec, canonicalize


class Verdict(str, Enum):
    CERTIFIED_MAXIMAL = "CERTIFIED_MAXIMAL"
    NOT_CERTIFIED = "NOT_CERTIFIED"


SPECIAL_CHARACTERISTIC_SUSPECT = "SPECIAL_CHARACTERISTIC_SUSPECT"


@dataclass(frozen=True)
class RankReport:
    rows: int
    cols: int
    rank: int
    expected_rank: int
    verdict: Verdict
    prime: int
    seed: int
    retries_used: int

    def __post_init__(self) -> None:
        if self.rank > min(self.rows, self.cols):
            raise ValueError("rank exceeds matrix size")
        if (self.verdict is Verdict.CERTIFIED_MAXIMAL) != (self.rank == self.expected_rank):
            raise ValueError("verdict inconsistent with rank")

    @property
    def defect(self) -> int:
        return self.expected_rank - self.rank

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED_MAXIMAL

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict.value
        return out


def expected_rank(Z: SchemeSpec, d: int, n: int) -> int:
    length = length_p3(d, Z) if n == 3 else length_pn(n, d, Z)
    return min(comb(d + n, n), length)


def incremental_ranks(blocks: list[np.ndarray], p: int) -> list[int]:
    """Rank after each block is appended; raises if it ever drops."""
    ranks: list[int] = []
    acc = None
    for b in blocks:
        acc = b if acc is None else np.vstack([acc, b])
        r = rank_mod(acc, p)
        if ranks and r < ranks[-1]:
            raise AssertionError("rank decreased after adding rows")
        ranks.append(r)
    return ranks


def verify_maximal_rank(Z: SchemeSpec, d: int, n: int, field_: PrimeField,
                        seed: int = 0, retries: int = 3) -> RankReport:
    """Best rank over up to ``retries`` random realizations of ``Z``.

    A full-rank realization certifies maximal rank for general ``Z``;
    a persistent defect is only evidence of speciality.
    """
    if retries < 1:
        raise ValueError("retries must be >= 1")
    Z = canonicalize(Z)
    if d < Z.m:
        raise ValueError(f"degree {d} below the fat line multiplicity {Z.m}")
    want = expected_rank(Z, d, n)
    best = -1
    shape = (0, comb(d + n, n))
    used = 0
    for trial in range(retries):
        used = trial + 1
        C = realize(Z, n, field_, derive_seed(seed, trial))
        M = build_matrix(C, d)
        shape = M.shape
        best = max(best, rank_mod(M, field_.p))
        if best == want:
            break
    verdict = Verdict.CERTIFIED_MAXIMAL if best == want else Verdict.NOT_CERTIFIED
    return RankReport(shape[0], shape[1], best, want, verdict, field_.p, seed, used)


@dataclass(frozen=True)
class RankJob:
    """A rank verification runnable over any prime."""

    Z: SchemeSpec
    d: int
    n: int = 3
    seed: int = 0
    retries: int = 3

    def __call__(self, prime: int, seed: int) -> RankReport:
        return verify_maximal_rank(self.Z, self.d, self.n, PrimeField(prime), seed, self.retries)


@dataclass(frozen=True)
class ConsensusReport:
    reports: dict[int, RankReport]
    agree: bool
    flags: list[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return any(r.certified for r in self.reports.values())

    @property
    def conjectured_special(self) -> bool:
        return self.agree and not self.certified

    def to_dict(self) -> dict:
        return {
            "reports": {str(p): r.to_dict() for p, r in self.reports.items()},
            "agree": self.agree,
            "flags": list(self.flags),
        }


def multi_prime_check(job: Callable[[int, int], RankReport], primes: list[int],
                      seed: int = 0) -> ConsensusReport:
    """Run ``job`` once per prime with independent seeds and compare the ranks."""
    if len(set(primes)) < 2:
        raise ValueError("need at least two distinct primes")
    reports = {p: job(p, derive_seed("prime", seed, p)) for p in primes}
    ranks = {r.rank for r in reports.values()}
    agree = len(ranks) == 1
    flags = [] if agree else [SPECIAL_CHARACTERISTIC_SUSPECT]
    return ConsensusReport(reports, agree, flags)


def block_ranks(Z: SchemeSpec, d: int, n: int, field_: PrimeField, seed: int = 0) -> dict[str, int]:
    """Per-block rank of one realization, for diagnostics."""
    C = realize(canonicalize(Z), n, field_, derive_seed(seed, 0))
    return {name: rank_mod(B, field_.p) for name, B in matrix_blocks(C, d)}
