"""Random realizations of abstract schemes over a prime field."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from postlab.interp.field import PrimeField, inv_mod, rank_mod
from postlab.schemes import SchemeSpec


class DegenerateError(RuntimeError):
    """Rejection sampling ran out of redraws."""


def derive_seed(*parts: object) -> int:
    """Order-independent 63-bit seed from a tuple of labels."""
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@dataclass(frozen=True, eq=False)
class LineFrame:
    """Coordinates adapted to a line.

    ``inverse`` has the line's spanning points as its first two columns;
    ``matrix`` is its inverse, so rows 2..n of ``matrix`` cut out the line.
    """

    matrix: np.ndarray
    inverse: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 1

    def point(self, u: int, v: int, p: int) -> np.ndarray:
        return (u * self.inverse[:, 0] + v * self.inverse[:, 1]) % p

    def span(self) -> np.ndarray:
        return self.inverse[:, :2]


def frame_through(a: np.ndarray, b: np.ndarray, field_: PrimeField,
                  rng: np.random.Generator) -> LineFrame | None:
    """A frame for the line through ``a`` and ``b``; ``None`` if a random completion is singular."""
    p = field_.p
    n1 = a.size
    N = np.empty((n1, n1), dtype=np.int64)
    N[:, 0] = a % p
    N[:, 1] = b % p
    N[:, 2:] = field_.random(rng, (n1, n1 - 2))
    try:
        M = inv_mod(N, p)
    except ZeroDivisionError:
        return None
    return LineFrame(M, N)


@dataclass(eq=False)
class Chain:
    """Lines ``L_1..L_z`` with ``L_i`` meeting ``L_{i+1}`` in ``nodes[i]``.

    ``directions`` holds one embedded tangent vector per node, or is ``None``
    for the reduced structure.
    """

    lines: list[LineFrame]
    nodes: list[np.ndarray]
    directions: list[np.ndarray] | None = None

    @property
    def reduced(self) -> bool:
        return self.directions is None


@dataclass(eq=False)
class ConcreteScheme:
    n: int
    p: int
    fat: tuple[LineFrame, int] | None = None
    lines: list[LineFrame] = field(default_factory=list)
    crosses: list[Chain] = field(default_factory=list)
    chains: list[Chain] = field(default_factory=list)
    points: list[np.ndarray] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        return {
            "fat_multiplicity": self.fat[1] if self.fat else 0,
            "lines": len(self.lines),
            "crosses": len(self.crosses),
            "chains": len(self.chains),
            "chain_lines": sum(len(c.lines) for c in self.chains),
            "nodes": sum(len(c.nodes) for c in self.chains),
            "points": len(self.points),
        }


def span_rank(vectors: list[np.ndarray], p: int) -> int:
    return rank_mod(np.stack(vectors), p)


def chain_is_generic(chain: Chain, p: int) -> bool:
    """Consecutive lines meet exactly in their node, others are disjoint, tangents leave the plane."""
    spans = [ln.span().T for ln in chain.lines]
    z = len(spans)
    for i in range(z):
        if span_rank(list(spans[i]), p) != 2:
            return False
        for j in range(i + 1, z):
            want = 3 if j == i + 1 else 4
            if span_rank([*spans[i], *spans[j]], p) != want:
                return False
    for i, node in enumerate(chain.nodes):
        for ln in (chain.lines[i], chain.lines[i + 1]):
            if span_rank([*ln.span().T, node], p) != 2:
                return False
        if chain.directions is not None:
            plane = [*spans[i], *spans[i + 1]]
            if span_rank([*plane, chain.directions[i]], p) != 4:
                return False
    return True


def _random_point(field_: PrimeField, rng: np.random.Generator, n: int) -> np.ndarray:
    while True:
        v = field_.random(rng, n + 1)
        if v.any():
            return v


def random_line(field_: PrimeField, rng: np.random.Generator, n: int) -> LineFrame | None:
    return frame_through(_random_point(field_, rng, n), _random_point(field_, rng, n), field_, rng)


def random_chain(z: int, field_: PrimeField, rng: np.random.Generator, n: int,
                 embedded: bool, attempts: int = 100) -> Chain:
    """A generic chain of ``z >= 2`` lines through random nodes."""
    for _ in range(attempts):
        nodes = [_random_point(field_, rng, n) for _ in range(z - 1)]
        ends = [_random_point(field_, rng, n), *nodes, _random_point(field_, rng, n)]
        frames = [frame_through(ends[i], ends[i + 1], field_, rng) for i in range(z)]
        if any(f is None for f in frames):
            continue
        dirs = [_random_point(field_, rng, n) for _ in nodes] if embedded else None
        chain = Chain(frames, nodes, dirs)
        if chain_is_generic(chain, field_.p):
            return chain
    raise DegenerateError(f"chain of length {z} degenerate after {attempts} redraws")


def realize(Z: SchemeSpec, n: int, field_: PrimeField, seed: int,
            attempts: int = 100) -> ConcreteScheme:
    """A random configuration of type ``Z`` in P^n, deterministic in (Z, n, p, seed)."""
    if n < 3:
        raise ValueError("realizations need n >= 3")
    if Z.z == 1:
        raise ValueError("non-canonical scheme: zig-zag of length 1")
    rng = np.random.default_rng(derive_seed("realize", Z.m, Z.r, Z.s, Z.q, Z.z, n, field_.p, seed))
    C = ConcreteScheme(n, field_.p)

    def line() -> LineFrame:
        for _ in range(attempts):
            frame = random_line(field_, rng, n)
            if frame is not None:
                return frame
        raise DegenerateError(f"line degenerate after {attempts} redraws")

    if Z.m:
        C.fat = (line(), Z.m)
    C.lines = [line() for _ in range(Z.r)]
    C.crosses = [random_chain(2, field_, rng, n, False, attempts) for _ in range(Z.s)]
    if Z.z >= 2:
        C.chains.append(random_chain(Z.z, field_, rng, n, False, attempts))
    C.points = [_random_point(field_, rng, n) for _ in range(Z.q)]
    return C
