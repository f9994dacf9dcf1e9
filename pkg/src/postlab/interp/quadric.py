"""Concrete specializations onto a smooth quadric and the Castelnuovo inequality.

The quadric is ``Q = x0 x3 - x1 x2`` with parametrization
``phi(sigma, tau) = (1, tau, sigma, sigma tau)``; the lines ``tau = const``
form the ruling that receives the divisor part of a trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from postlab.interp.field import PrimeField, matmul_mod, rank_mod
from postlab.interp.geometry import (
    Chain,
    ConcreteScheme,
    DegenerateError,
    LineFrame,
    chain_is_generic,
    derive_seed,
    frame_through,
    random_chain,
    random_line,
)
from postlab.interp.monomials import eval_monomials, exponents, index_of
from postlab.interp.p1p1 import bidegree_exponents, fat_point_rows, ruling_line_rows
from postlab.interp.rows import build_matrix
from postlab.ledger import residual
from postlab.schemes import SchemeSpec, SpecMove, validate_move

# coefficients of x0 x3 - x1 x2 on the degree-2 monomials
SPLIT_QUADRIC = {(1, 0, 0, 1): 1, (0, 1, 1, 0): -1}


def quadric_value(x: np.ndarray, p: int) -> int:
    x = [int(v) for v in x]
    return (x[0] * x[3] - x[1] * x[2]) % p


def phi(sigma: int, tau: int, p: int) -> np.ndarray:
    return np.array([1, tau, sigma, sigma * tau], dtype=np.int64) % p


def chart(x: np.ndarray, p: int) -> tuple[int, int]:
    """Inverse of ``phi``: ``(x2/x0, x1/x0)``."""
    x0 = int(x[0]) % p
    if x0 == 0:
        raise ZeroDivisionError("point at infinity of chart")
    inv = pow(x0, -1, p)
    return int(x[2]) * inv % p, int(x[1]) * inv % p


def second_intersection(A: np.ndarray, X: np.ndarray, p: int) -> np.ndarray | None:
    """The other point where the line ``A + mu X`` meets ``Q``, given ``A`` on ``Q``."""
    qx = quadric_value(X, p)
    if qx == 0:
        return None
    a, x = [int(v) for v in A], [int(v) for v in X]
    polar = (a[0] * x[3] + a[3] * x[0] - a[1] * x[2] - a[2] * x[1]) % p
    mu = -polar * pow(qx, -1, p) % p
    return (A + mu * X) % p


@dataclass
class Specialization:
    """A concrete ``Z'`` with its residual (degree ``d-2``) and trace on ``Q``."""

    scheme: ConcreteScheme
    residual: ConcreteScheme
    trace_lines: list[tuple[int, int]]
    trace_points: list[tuple[tuple[int, int], int]]


class _Sampler:
    def __init__(self, field_: PrimeField, rng: np.random.Generator, attempts: int):
        self.F = field_
        self.p = field_.p
        self.rng = rng
        self.attempts = attempts
        self.taus: set[int] = set()

    def scalar(self) -> int:
        return int(self.F.random(self.rng, 1)[0])

    def point(self) -> np.ndarray:
        while True:
            v = self.F.random(self.rng, 4)
            if v.any():
                return v

    def off_quadric(self) -> np.ndarray:
        while True:
            v = self.point()
            if quadric_value(v, self.p):
                return v

    def frame(self, a: np.ndarray, b: np.ndarray) -> LineFrame:
        for _ in range(self.attempts):
            f = frame_through(a, b, self.F, self.rng)
            if f is not None:
                return f
        raise DegenerateError("frame completion degenerate")

    def ruling_line(self) -> tuple[LineFrame, int]:
        while True:
            tau = self.scalar()
            if tau not in self.taus:
                self.taus.add(tau)
                return self.frame(phi(0, tau, self.p), phi(1, tau, self.p)), tau

    def quadric_point(self) -> tuple[np.ndarray, tuple[int, int]]:
        while True:
            s, t = self.scalar(), self.scalar()
            if t not in self.taus:
                return phi(s, t, self.p), (s, t)

    def transverse(self, A: np.ndarray) -> tuple[LineFrame, np.ndarray, tuple[int, int]]:
        """A line through ``A`` in ``Q`` and its second point on ``Q``, off the chart's boundary."""
        for _ in range(self.attempts):
            X = self.off_quadric()
            B = second_intersection(A, X, self.p)
            if B is None or not int(B[0]) % self.p:
                continue
            st = chart(B, self.p)
            if st[1] in self.taus or np.array_equal(B, A):
                continue
            return self.frame(A, X), B, st
        raise DegenerateError("no transverse line found")

    def general_line(self) -> tuple[LineFrame, list[tuple[int, int]]]:
        for _ in range(self.attempts):
            L = random_line(self.F, self.rng, 3)
            if L is None:
                continue
            pts = _line_meets_quadric(L, self.p)
            if pts is None or any(t in self.taus for _, t in pts):
                continue
            return L, pts
        raise DegenerateError("no general line found")


def _line_meets_quadric(L: LineFrame, p: int) -> list[tuple[int, int]] | None:
    """The two chart points of ``L`` on ``Q`` when both are rational, distinct and affine."""
    a, b = L.span().T
    qa, qb = quadric_value(a, p), quadric_value(b, p)
    ai, bi = [int(v) for v in a], [int(v) for v in b]
    bil = (ai[0] * bi[3] + ai[3] * bi[0] - ai[1] * bi[2] - ai[2] * bi[1]) % p
    # Q(u a + v b) = qa u^2 + bil u v + qb v^2
    if qa == qb == bil == 0:
        return None
    if qb == 0:
        if bil == 0:
            return None
        roots = [b % p, (a - qa * pow(bil, -1, p) * b) % p]
    else:
        disc = (bil * bil - 4 * qa * qb) % p
        root = _sqrt_mod(disc, p) if disc else None
        if root is None:
            return None
        inv = pow(2 * qb, -1, p)
        roots = [(a + (-bil + sgn * root) * inv % p * b) % p for sgn in (1, -1)]
    if any(not int(P[0]) for P in roots):
        return None
    return [chart(P, p) for P in roots]


def _sqrt_mod(a: int, p: int) -> int | None:
    """Tonelli-Shanks."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def _chain_on_nodes(nodes: list[np.ndarray], S: _Sampler,
                    embedded: bool) -> tuple[Chain, list[tuple[int, int]]]:
    """Lines ``P_{i-1} P_i`` through the given nodes, with random free ends."""
    for _ in range(S.attempts):
        ends = [S.point(), *nodes, S.point()]
        frames = [S.frame(ends[i], ends[i + 1]) for i in range(len(ends) - 1)]
        dirs = [S.point() for _ in nodes] if embedded else None
        ch = Chain(frames, list(nodes), dirs)
        if not chain_is_generic(ch, S.p):
            continue
        # no line of the chain may lie in Q and the free intersections must be affine
        extra = []
        ok = True
        for i, L in enumerate(frames):
            pts = _line_meets_quadric(L, S.p)
            if pts is None:
                ok = False
                break
            if i in (0, len(frames) - 1):
                node = nodes[0] if i == 0 else nodes[-1]
                nst = chart(node, S.p)
                extra += [pt for pt in pts if pt != nst]
        if ok and len(extra) == 2 and all(t not in S.taus for _, t in extra):
            return ch, extra
    raise DegenerateError("zig-zag through quadric points degenerate")


def specialize(Z: SchemeSpec, R: SpecMove, field_: PrimeField, seed: int = 0,
               attempts: int = 100) -> Specialization:
    """Realize the specialization ``R`` of ``Z`` onto ``Q`` with its residual and trace."""
    bad = validate_move(Z, R)
    if bad:
        raise ValueError("invalid move: " + "; ".join(bad))
    p = field_.p
    rng = np.random.default_rng(derive_seed("specialize", str(Z), str(R), p, seed))
    S = _Sampler(field_, rng, attempts)
    Zc = ConcreteScheme(3, p)
    Rc = ConcreteScheme(3, p)
    tr_lines: list[tuple[int, int]] = []
    tr_points: list[tuple[tuple[int, int], int]] = []

    # fat line: a ruling line when delta = 1, otherwise general
    if Z.m:
        if R.delta:
            L, tau = S.ruling_line()
            tr_lines.append((tau, Z.m))
        else:
            L, pts = S.general_line()
            tr_points += [(pt, Z.m) for pt in pts]
        Zc.fat = (L, Z.m)
        if Z.m - R.delta:
            Rc.fat = (L, Z.m - R.delta)

    for _ in range(R.l):
        L, tau = S.ruling_line()
        Zc.lines.append(L)
        tr_lines.append((tau, 1))

    # crosses with one line in the ruling; the other line stays in the residual
    for _ in range(R.l_s):
        L, tau = S.ruling_line()
        node = phi(S.scalar(), tau, p)
        M, _, st = S.transverse(node)
        Zc.crosses.append(Chain([L, M], [node]))
        Rc.lines.append(M)
        tr_lines.append((tau, 1))
        tr_points.append((st, 1))

    for _ in range(Z.s - R.l_s):
        for _ in range(attempts):
            ch = random_chain(2, field_, rng, 3, False, attempts)
            meets = [_line_meets_quadric(L, p) for L in ch.lines]
            if all(m is not None and all(t not in S.taus for _, t in m) for m in meets):
                break
        else:
            raise DegenerateError("no cross with a rational trace found")
        Zc.crosses.append(ch)
        Rc.crosses.append(ch)
        tr_points += [(pt, 1) for m in meets for pt in m]

    # old zig-zag: even lines go into the ruling, odd lines become disjoint lines
    if Z.z:
        even_taus = [S.ruling_line() for _ in range(Z.z // 2)]
        even = {2 * i + 1: fr for i, fr in enumerate(even_taus)}
        frames: list[LineFrame] = []
        nodes: list[np.ndarray] = []
        node_on = {}
        for i, (L, tau) in even.items():
            tr_lines.append((tau, 1))
            node_on[i] = (phi(S.scalar(), tau, p), phi(S.scalar(), tau, p))
        for i in range(Z.z):
            if i in even:
                frames.append(even[i][0])
                continue
            left = node_on[i - 1][1] if i - 1 in even else None
            right = node_on[i + 1][0] if i + 1 in even else None
            if left is not None and right is not None:
                M = S.frame(left, right)
            else:
                M, _, st = S.transverse(left if left is not None else right)
                tr_points.append((st, 1))
            frames.append(M)
            Rc.lines.append(M)
        for i in range(Z.z - 1):
            j = i if i in even else i + 1
            nodes.append(node_on[j][1] if i in even else node_on[j][0])
        Zc.chains.append(Chain(frames, nodes))

    for _ in range(R.t):
        P, st = S.quadric_point()
        Zc.points.append(P)
        tr_points.append((st, 1))
    for _ in range(Z.q - R.t):
        P = S.off_quadric()
        Zc.points.append(P)
        Rc.points.append(P)

    # sundials and the new zig-zag: singular points on Q, embedded directions
    for _ in range(R.t_s):
        P, st = S.quadric_point()
        ch, extra = _chain_on_nodes([P], S, embedded=True)
        Zc.crosses.append(ch)
        Rc.crosses.append(Chain(ch.lines, ch.nodes))
        tr_points += [(st, 2)] + [(pt, 1) for pt in extra]
    # t_z + 1 lines forming a zig-zag with its singular points on Q
    if R.t_z:
        quad = [S.quadric_point() for _ in range(R.t_z)]
        ch, extra = _chain_on_nodes([P for P, _ in quad], S, embedded=True)
        Zc.chains.append(ch)
        Rc.chains.append(Chain(ch.lines, ch.nodes))
        tr_points += [(st, 2) for _, st in quad] + [(pt, 1) for pt in extra]
    else:
        L, pts = S.general_line()
        Zc.lines.append(L)
        Rc.lines.append(L)
        tr_points += [(pt, 1) for pt in pts]

    for _ in range(Z.r - R.l - 2 * R.t_s - (R.t_z + 1)):
        L, pts = S.general_line()
        Zc.lines.append(L)
        Rc.lines.append(L)
        tr_points += [(pt, 1) for pt in pts]

    return Specialization(Zc, Rc, tr_lines, tr_points)


def h0_p3(C: ConcreteScheme, d: int) -> int:
    """``dim H^0(I_C(d))`` for this realization; zero when ``d`` is below the fat line."""
    if d < 0:
        return 0
    if C.fat is not None and d < C.fat[1]:
        return 0
    M = build_matrix(C, d)
    return comb(d + 3, 3) - rank_mod(M, C.p)


def h0_trace(spec: Specialization, d: int, p: int) -> int:
    """Forms of bidegree ``(d, d)`` on ``Q`` vanishing on the trace."""
    exps = bidegree_exponents(d, d)
    blocks = [ruling_line_rows(exps, tau, mult, p) for tau, mult in spec.trace_lines]
    blocks += [fat_point_rows(exps, pt, mult, p) for pt, mult in spec.trace_points]
    blocks = [b for b in blocks if b.size]
    if not blocks:
        return exps.shape[0]
    return exps.shape[0] - rank_mod(np.concatenate(blocks, axis=0), p)


@dataclass(frozen=True)
class CastelnuovoCheck:
    d: int
    h0_scheme: int
    h0_residual: int
    h0_trace: int

    @property
    def holds(self) -> bool:
        return self.h0_scheme <= self.h0_residual + self.h0_trace


def castelnuovo_check(Z: SchemeSpec, R: SpecMove, d: int, field_: PrimeField,
                      seed: int = 0) -> CastelnuovoCheck:
    """Compare ``h0(d; Z')`` with ``h0(d-2; Res) + h0_Q(d; Tr)`` on one realization."""
    residual(Z, R)  # raises on negative components
    spec = specialize(Z, R, field_, seed)
    return CastelnuovoCheck(
        d,
        h0_p3(spec.scheme, d),
        h0_p3(spec.residual, d - 2),
        h0_trace(spec, d, field_.p),
    )


# residual of a zig-zag with respect to a quadric through its singular points

def multiplication_matrix(quad: dict[tuple[int, ...], int], e: int, p: int) -> np.ndarray:
    """Matrix of ``G -> quad * G`` from degree ``e`` to degree ``e + 2`` forms."""
    src = exponents(4, e)
    dst = index_of(4, e + 2)
    M = np.zeros((len(dst), src.shape[0]), dtype=np.int64)
    for k, beta in enumerate(src):
        for mono, c in quad.items():
            tgt = tuple(int(x) + y for x, y in zip(beta, mono))
            M[dst[tgt], k] = (M[dst[tgt], k] + c) % p
    return M


def quadric_through(points: list[np.ndarray], lines: list[LineFrame], field_: PrimeField,
                    rng: np.random.Generator, attempts: int = 100) -> dict[tuple[int, ...], int]:
    """A random rank-4 quadric through ``points`` containing none of ``lines``."""
    p = field_.p
    exps = exponents(4, 2)
    A = np.array([eval_monomials(exps, P, p) for P in points], dtype=np.int64).reshape(-1, 10)
    basis = _kernel(A, p)
    for _ in range(attempts):
        coeffs = matmul_mod(field_.random(rng, (1, basis.shape[0])), basis, p)[0]
        quad = {tuple(int(x) for x in e): int(c) for e, c in zip(exps, coeffs) if c}
        if _gram_rank(quad, p) != 4:
            continue
        contains = False
        for L in lines:
            vals = [int(eval_monomials(exps, L.point(1, s, p), p) @ coeffs % p) for s in range(3)]
            if not any(vals):
                contains = True
        if not contains:
            return quad
    raise DegenerateError("no smooth quadric found")


def _gram_rank(quad: dict[tuple[int, ...], int], p: int) -> int:
    G = np.zeros((4, 4), dtype=np.int64)
    inv2 = pow(2, -1, p)
    for mono, c in quad.items():
        idx = [i for i, e in enumerate(mono) for _ in range(e)]
        i, j = idx
        if i == j:
            G[i, i] = (G[i, i] + c) % p
        else:
            G[i, j] = (G[i, j] + c * inv2) % p
            G[j, i] = (G[j, i] + c * inv2) % p
    return rank_mod(G, p)


def _kernel(A: np.ndarray, p: int) -> np.ndarray:
    """Basis of the right kernel of ``A`` as rows."""
    A = A.copy() % p
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        nz = np.nonzero(A[r:, c])[0] if r < rows else []
        if len(nz) == 0:
            continue
        i = r + nz[0]
        A[[r, i]] = A[[i, r]]
        A[r] = A[r] * pow(int(A[r, c]), -1, p) % p
        for k in range(rows):
            if k != r and A[k, c]:
                A[k] = (A[k] - A[k, c] * A[r]) % p
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    out = np.zeros((len(free), cols), dtype=np.int64)
    for k, f in enumerate(free):
        out[k, f] = 1
        for i, c in enumerate(pivots):
            out[k, c] = -A[i, f] % p
    return out


@dataclass(frozen=True)
class ResidualZigzagCheck:
    z: int
    d: int
    residual_dim: int
    reduced_h0: int
    same_space: bool

    @property
    def holds(self) -> bool:
        return self.same_space and self.residual_dim == self.reduced_h0


def residual_zigzag_check(z: int, d: int, field_: PrimeField, seed: int = 0) -> ResidualZigzagCheck:
    """Forms ``G`` of degree ``d-2`` with ``Q G`` through a zig-zag versus forms through its lines."""
    p = field_.p
    rng = np.random.default_rng(derive_seed("residual-zigzag", z, d, p, seed))
    chain = random_chain(z, field_, rng, 3, embedded=True)
    quad = quadric_through(chain.nodes, chain.lines, field_, rng)
    S = ConcreteScheme(3, p, chains=[chain])
    Sred = ConcreteScheme(3, p, chains=[Chain(chain.lines, chain.nodes)])
    A = build_matrix(S, d)
    mult = multiplication_matrix(quad, d - 2, p)
    comp = matmul_mod(A, mult, p)
    red = build_matrix(Sred, d - 2)
    cols = comb(d + 1, 3)
    r_comp, r_red = rank_mod(comp, p), rank_mod(red, p)
    r_both = rank_mod(np.vstack([comp, red]), p)
    return ResidualZigzagCheck(z, d, cols - r_comp, cols - r_red, r_both == r_comp == r_red)
