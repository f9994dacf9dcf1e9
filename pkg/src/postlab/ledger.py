"""Symbolic degeneration bookkeeping: residuals, traces and the quadric sequences.

Every B/I system of degree ``d = 3k + eps`` is reduced by a fixed recipe of
quadric specializations to a smaller B/I system.  :func:`build_sequence`
replays that recipe, records the trace system cut on the quadric at each step
and attaches the reason the trace system has no sections.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from math import comb
from typing import Callable

from postlab.expected import (
    Bidegree,
    DomainError,
    Kind,
    SystemLabel,
    d0,
    expected_h0_p3,
    lenarcik_special,
    split_r_q,
    vdim_p1p1,
)
from postlab.schemes import (
    OmegaSpec,
    SchemeSpec,
    SpecMove,
    TraceSpec,
    canonicalize,
    label_to_scheme,
    scheme_to_label,
    splits_and_forms_zigzag,
    validate_move,
)


class LedgerError(ValueError):
    pass


class Certificate(str, Enum):
    VDIM_ZERO = "VDIM_ZERO"
    VDIM_NEGATIVE = "VDIM_NEGATIVE"
    LENARCIK_NONSPECIAL = "LENARCIK_NONSPECIAL"
    TWO_FAT_POINTS_LEMMA = "TWO_FAT_POINTS_LEMMA"
    RANK_ORACLE = "RANK_ORACLE"
    UNCERTIFIED = "UNCERTIFIED"


@dataclass
class LedgerStep:
    degree: int
    scheme: SchemeSpec
    move: SpecMove | None = None
    trace: TraceSpec | None = None
    trace_vdim: int | None = None
    trace_certificate: Certificate | None = None

    def to_dict(self) -> dict[str, object]:
        return {
            "degree": self.degree,
            "scheme": self.scheme.to_dict(),
            "move": self.move.to_dict() if self.move else None,
            "trace": self.trace.to_dict() if self.trace else None,
            "trace_vdim": self.trace_vdim,
            "certificate": self.trace_certificate.value if self.trace_certificate else None,
        }


@dataclass
class SequenceReport:
    label: SystemLabel
    steps: list[LedgerStep]
    final_label: SystemLabel | None
    expected_final: SystemLabel
    expected_length: int
    ok: bool = False
    violations: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def length(self) -> int:
        return sum(1 for step in self.steps if step.move is not None)

    def to_dict(self) -> dict[str, object]:
        return {
            "label": str(self.label),
            "degree": self.label.degree,
            "steps": [step.to_dict() for step in self.steps],
            "length": self.length,
            "final_label": str(self.final_label) if self.final_label else None,
            "expected_final": str(self.expected_final),
            "expected_length": self.expected_length,
            "ok": self.ok,
            "violations": list(self.violations),
            "notes": list(self.notes),
        }


def residual(Z: SchemeSpec, R: SpecMove) -> SchemeSpec:
    """Residual of the specialization ``R`` of ``Z`` with respect to the quadric."""
    fields = {
        "m": Z.m - R.delta,
        "r": Z.r - R.l + R.l_s + (Z.z - R.l_z) - 2 * R.t_s - (R.t_z + 1),
        "s": Z.s - R.l_s + R.t_s,
        "q": Z.q - R.t,
    }
    for name, value in fields.items():
        if value < 0:
            raise LedgerError(f"negative component {name}={value} in residual of {Z} by {R}")
    return canonicalize(SchemeSpec(**fields, z=R.t_z + 1))


def trace(Z: SchemeSpec, R: SpecMove, d: int) -> TraceSpec:
    """Trace on the quadric, with the ruling divisor ``D`` already divided out."""
    removed = R.delta * Z.m + R.ruling_lines
    if d < removed:
        raise LedgerError(f"ruling overflow: degree {d} < {removed} ruling lines")
    gamma = 1 if R.l_z > 0 else 0
    p = (
        2 * Z.r - 2 * R.l - 2 * R.l_z - 3 * R.l_s - 2 * R.t_s - 2 * R.t_z
        + R.t + 4 * Z.s + Z.z + gamma
    )
    if p < 0:
        raise LedgerError(f"negative point count {p} in trace of {Z} by {R}")
    omega = OmegaSpec(p, R.t_s + R.t_z, 2 - 2 * R.delta, Z.m)
    if omega.m_pt == 0:
        omega = replace(omega, p_m=0)
    return TraceSpec(Bidegree(d, d - removed), omega, removed)


def _two_fat_points_applies(bd: Bidegree, m_pt: int) -> bool:
    # smallest admissible k is the strongest choice for both inequalities
    k = comb(m_pt + 1, 3)
    bd = bd.normalized()
    return m_pt >= 2 and bd.a >= k - 1 and bd.b >= 3 * k


def certify_trace(tr: TraceSpec, vdim: int) -> Certificate:
    """The strongest lemma-backed reason that the trace system has no sections."""
    if vdim > 0:
        return Certificate.UNCERTIFIED
    om = tr.omega.folded()
    if om.max_multiplicity() <= 1:
        # general simple points always impose independent conditions
        return Certificate.VDIM_ZERO if vdim == 0 else Certificate.VDIM_NEGATIVE
    if om.max_multiplicity() == 2:
        special = lenarcik_special(tr.bidegree, om.p_d + om.p_m, om.p)
        return Certificate.UNCERTIFIED if special else Certificate.LENARCIK_NONSPECIAL
    if om.p_d == 0 and _two_fat_points_applies(tr.bidegree, om.m_pt):
        return Certificate.TWO_FAT_POINTS_LEMMA
    return Certificate.UNCERTIFIED


def _vdim_free_t_z(Z: SchemeSpec, base: SpecMove, d: int) -> int:
    """The ``t_z`` giving a zero-dimensional trace; vdim drops by one per singular point."""
    probe = trace(Z, base, d)
    vdim = vdim_p1p1(probe.bidegree, probe.omega)
    if vdim < 0:
        raise LedgerError(f"no integral t_z solution: vdim already {vdim} with t_z=0")
    return vdim


def printed_t_z(k: int, m: int, p: int) -> int:
    """Printed closed form for the zig-zag size at chain position ``p``."""
    cube = p * (p - 1) * (p + 1) // 3
    if p % 3:
        return k + p * m * (m - p) + cube - 2 * p + 1
    return p * m * (p - m) + cube - 2 * p + 2 * p // 3


def expected_outcome(lab: SystemLabel) -> tuple[int, SystemLabel]:
    """(sequence length, final label) listed in the case table for ``lab``."""
    k, m = lab.k, lab.m
    if lab.kind is Kind.B:
        return {
            0: (1, SystemLabel(Kind.B, k - 1, 1, m - 1)),
            1: (2, SystemLabel(Kind.B, k - 1, 0, m - 1)),
            2: (1, SystemLabel(Kind.B, k, 0, m - 1)),
        }[lab.eps]
    if lab.eps == 0:
        return 2, SystemLabel(Kind.I, k - 2, 2, m - 2)
    if lab.eps == 1:
        return 1, SystemLabel(Kind.I, k - 1, 2, m - 1)
    ell, rem = divmod(m, 3)
    if rem == 0:
        return 3 * ell - 1, SystemLabel(Kind.B, k - 2 * ell + 1, 1, 1)
    if rem == 1:
        return 3 * ell + 1, SystemLabel(Kind.B, k - 2 * ell, 0, 0)
    return 3 * ell + 1, SystemLabel(Kind.B, k - 2 * ell, 0, 1)


class _Builder:
    def __init__(self, lab: SystemLabel) -> None:
        self.lab = lab
        self.d = lab.degree
        self.Z = label_to_scheme(lab)
        self.steps: list[LedgerStep] = []
        self.notes: list[str] = []

    def apply(self, R: SpecMove) -> None:
        bad = validate_move(self.Z, R)
        if bad:
            raise LedgerError(f"move {R} invalid for {self.Z} at degree {self.d}: {bad}")
        if splits_and_forms_zigzag(R):
            self.notes.append(f"step {len(self.steps)}: {R} splits a zig-zag and forms a new one")
        tr = trace(self.Z, R, self.d)
        vdim = vdim_p1p1(tr.bidegree, tr.omega)
        step = LedgerStep(self.d, self.Z, R, tr, vdim, certify_trace(tr, vdim))
        self.steps.append(step)
        self.Z = residual(self.Z, R)
        self.d -= 2

    def zigzag_step(self, lines: int, t_z: int | None) -> int:
        l_z = self.Z.z // 2
        base = SpecMove(1, lines, 0, l_z, 0, 0, 0)
        if t_z is None:
            t_z = _vdim_free_t_z(self.Z, base, self.d)
        self.apply(replace(base, t_z=t_z))
        return t_z

    def finish(self) -> SequenceReport:
        self.steps.append(LedgerStep(self.d, self.Z))
        length, final = expected_outcome(self.lab)
        rep = SequenceReport(
            self.lab,
            self.steps,
            scheme_to_label(self.Z, self.d),
            final,
            length,
            notes=self.notes,
        )
        rep.ok = (
            rep.final_label == final
            and rep.length == length
            and all(
                s.trace_certificate is not Certificate.UNCERTIFIED
                for s in rep.steps
                if s.move is not None
            )
        )
        return rep


def _injective_two(b: _Builder, k: int, m: int) -> None:
    first = k + m * (m - 1) + 1
    if first != printed_t_z(k, m, 1):
        b.notes.append(
            f"first zig-zag uses t_z={first}; the closed form at p=1 gives {printed_t_z(k, m, 1)}"
        )
    b.apply(SpecMove(1, 2 * k + 2 - m, 0, 0, 0, 0, first))
    ell, rem = divmod(m, 3)
    last = m - 1 if rem == 1 else m - 2
    for p in range(2, last + 1):
        lines = 2 * k + 2 - m - (p - 1) // 3 - b.Z.z // 2
        t_z = b.zigzag_step(lines, None)
        printed = printed_t_z(k, m, p)
        if printed != t_z:
            b.notes.append(f"p={p}: vdim-free t_z={t_z}, closed form gives {printed}")
    lines = 2 * k + 2 - m - last // 3 - b.Z.z // 2 + 1
    b.zigzag_step(lines, 0)


def build_sequence(lab: SystemLabel) -> SequenceReport:
    """Replay the specialization recipe for ``lab`` and audit every trace."""
    k, eps, m = lab.k, lab.eps, lab.m
    if m < 1:
        raise DomainError("sequences start from a fat line of multiplicity >= 1")
    if lab.degree < d0(m):
        raise DomainError(f"degree {lab.degree} below d0({m}) = {d0(m)}")
    b = _Builder(lab)
    if lab.kind is Kind.B:
        if eps == 0:
            b.apply(SpecMove(1, 2 * k + 1 - m, 0, 0, m * (m - 1), 0, 0))
        elif eps == 1:
            b.apply(SpecMove(1, 2 * k + 1 - m, 0, 0, m * (m - 1), 2 * k, 0))
            b.apply(SpecMove(0, 1, 2 * k, 0, 0, 0, 0))
        else:
            b.apply(SpecMove(1, 2 * k + 2 - m, 0, 0, k + 1 + m * (m - 1), 0, 0))
    elif eps == 0:
        half = m * (m - 1) // 2 - 1
        b.apply(SpecMove(1, 2 * k + 1 - m, 0, 0, 0, 0, m * (m - 1) - 2))
        b.apply(SpecMove(1, 2 * k + 1 - m - half, 0, half, 0, 0, 0))
    elif eps == 1:
        b.apply(SpecMove(1, 2 * k + 2 - m, 0, 0, 0, 0, 0))
    else:
        _injective_two(b, k, m)
    return b.finish()


def verify_sequence(rep: SequenceReport) -> bool:
    """Check residual chaining, trace certificates and the terminal conditions."""
    bad: list[str] = []
    moves = [s for s in rep.steps if s.move is not None]
    d = rep.label.degree
    if rep.steps[0].scheme != label_to_scheme(rep.label):
        bad.append("first scheme is not the scheme of the label")
    for i, step in enumerate(rep.steps):
        if step.degree != d - 2 * i:
            bad.append(f"step {i}: degree {step.degree} != {d - 2 * i}")
    for i, step in enumerate(moves):
        nxt = rep.steps[i + 1].scheme
        if validate_move(step.scheme, step.move):
            bad.append(f"step {i}: inadmissible move {step.move}")
            continue
        if residual(step.scheme, step.move) != nxt:
            bad.append(f"step {i}: next scheme {nxt} is not the residual")
        tr = trace(step.scheme, step.move, step.degree)
        vdim = vdim_p1p1(tr.bidegree, tr.omega)
        if tr != step.trace or vdim != step.trace_vdim:
            bad.append(f"step {i}: recorded trace does not match")
        if max(vdim, step.trace_vdim) > 0:
            bad.append(f"step {i}: trace has positive virtual dimension {max(vdim, step.trace_vdim)}")
        if step.trace_certificate is Certificate.UNCERTIFIED:
            bad.append(f"step {i}: trace not certified")
    last = rep.steps[-1]
    u = len(moves)
    final = scheme_to_label(last.scheme, last.degree)
    if final is None:
        bad.append(f"final scheme {last.scheme} is not a B/I scheme in degree {last.degree}")
    elif last.degree < d0(final.m):
        bad.append(f"final degree {last.degree} below d0({final.m})")
    m = rep.label.m
    if last.scheme.m not in {m - 1, m - 2, 1, 0}:
        bad.append(f"final multiplicity {last.scheme.m} not in {{m-1, m-2, 1, 0}}")
    if final != rep.expected_final:
        bad.append(f"final label {final} != table entry {rep.expected_final}")
    if u != rep.expected_length:
        bad.append(f"length {u} != table entry {rep.expected_length}")
    rep.violations = bad
    rep.ok = not bad
    return rep.ok


def escalate_to_rank_oracle(rep: SequenceReport, oracle: Callable[[TraceSpec], bool]) -> int:
    """Certify uncertified traces with ``oracle`` (True when h^0 = 0); returns count upgraded."""
    upgraded = 0
    for step in rep.steps:
        if step.trace_certificate is Certificate.UNCERTIFIED and step.trace_vdim <= 0:
            if oracle(step.trace):
                step.trace_certificate = Certificate.RANK_ORACLE
                upgraded += 1
    return upgraded


def closing_identities(lab: SystemLabel) -> dict[str, tuple[int, int]]:
    """Printed r/q identities of the injective cases as (left, right) integer pairs."""
    k, eps, m = lab.k, lab.eps, lab.m

    def r(d: int, mm: int) -> int:
        return split_r_q(d, mm)[0]

    def q(d: int, mm: int) -> int:
        return split_r_q(d, mm)[1]

    if lab.kind is not Kind.I:
        return {}
    if eps == 0:
        return {"r": (r(3 * k, m) + 1 - 2 * (2 * k + 1 - m), r(3 * (k - 2) + 2, m - 2) + 1)}
    if eps == 1:
        return {"r": (r(3 * k + 1, m) + 1 - (2 * k + 2 - m), r(3 * (k - 1) + 2, m - 1) + 1)}
    ell, rem = divmod(m, 3)
    top = r(3 * k + 2, m)
    # doubled to keep the half-integer coefficients exact
    if rem == 0:
        twice = 2 * top + 21 * ell * ell - 23 * ell + 6 - 12 * k * ell + 4 * k
        out = {"r": (twice, 2 * r(3 * (k - 2 * ell + 1) + 1, 1)),
               "q": (q(3 * (k - 2 * ell + 1) + 1, 1), 0)}
    elif rem == 1:
        twice = 2 * top + 21 * ell * ell - ell - 2 - 12 * k * ell - 4 * k
        out = {"r": (twice, 2 * r(3 * (k - 2 * ell), 0)), "q": (q(3 * (k - 2 * ell), 0), 0)}
    else:
        twice = 2 * top + 21 * ell * ell + 5 * ell - 12 * k * ell - 4 * k
        out = {"r": (twice, 2 * r(3 * (k - 2 * ell), 1)), "q": (q(3 * (k - 2 * ell), 1), 0)}
    return out


def castelnuovo_bound(d: int, Z: SchemeSpec, R: SpecMove) -> tuple[int, int]:
    """Expected left and right sides of the Castelnuovo inequality for the move."""
    bad = validate_move(Z, R)
    if bad:
        raise LedgerError(f"move {R} invalid for {Z}: {bad}")
    tr = trace(Z, R, d)
    res = residual(Z, R)
    rhs = expected_h0_p3(d - 2, res) + max(0, vdim_p1p1(tr.bidegree, tr.omega))
    return expected_h0_p3(d, Z), rhs
