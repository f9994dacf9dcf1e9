"""Abstract scheme data: Z(m,r,s,q,z), point schemes on P^1 x P^1 and quadric moves."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from postlab.expected import Bidegree, DomainError, Kind, SystemLabel, split_r_q


@dataclass(frozen=True)
class SchemeSpec:
    """One m-fold line, ``r`` lines, ``s`` crosses, ``q`` points and a reduced zig-zag of length ``z``."""

    m: int = 0
    r: int = 0
    s: int = 0
    q: int = 0
    z: int = 0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if value < 0:
                raise DomainError(f"negative component {name}={value}")

    def to_dict(self) -> dict[str, int]:
        return asdict(self)

    def __str__(self) -> str:
        return f"Z({self.m},{self.r},{self.s},{self.q},{self.z})"


@dataclass(frozen=True)
class OmegaSpec:
    """``p`` simple, ``p_d`` double and ``p_m`` points of multiplicity ``m_pt`` on P^1 x P^1."""

    p: int = 0
    p_d: int = 0
    p_m: int = 0
    m_pt: int = 1

    def __post_init__(self) -> None:
        if min(self.p, self.p_d, self.p_m, self.m_pt) < 0:
            raise DomainError(f"negative field in {self}")
        if self.p_m not in (0, 2):
            raise DomainError(f"p_m must be 0 or 2, got {self.p_m}")

    def multiplicities(self) -> list[int]:
        """Point multiplicities, simple points last."""
        return [self.m_pt] * self.p_m + [2] * self.p_d + [1] * self.p

    def max_multiplicity(self) -> int:
        return max(self.multiplicities(), default=0)

    def folded(self) -> OmegaSpec:
        """Rewrite the ``p_m`` fat points as simple or double points when ``m_pt <= 2``."""
        if self.p_m == 0 or self.m_pt > 2:
            return self
        if self.m_pt == 0:
            return replace(self, p_m=0)
        if self.m_pt == 1:
            return OmegaSpec(self.p + self.p_m, self.p_d, 0, 1)
        return OmegaSpec(self.p, self.p_d + self.p_m, 0, 1)

    def to_dict(self) -> dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class SpecMove:
    """Specialization ``R(delta, l, l_s, l_z, t, t_s, t_z)`` onto a smooth quadric."""

    delta: int = 0
    l: int = 0  # noqa: E741
    l_s: int = 0
    l_z: int = 0
    t: int = 0
    t_s: int = 0
    t_z: int = 0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if value < 0:
                raise DomainError(f"negative move field {name}={value}")

    @property
    def ruling_lines(self) -> int:
        """Reduced lines put into one ruling of the quadric (the fat line excluded)."""
        return self.l + self.l_s + self.l_z

    def to_dict(self) -> dict[str, int]:
        return asdict(self)

    def __str__(self) -> str:
        return "R({},{},{},{},{},{},{})".format(*asdict(self).values())


@dataclass(frozen=True)
class TraceSpec:
    """Trace on the quadric after removing the ruling divisor ``D``."""

    bidegree: Bidegree
    omega: OmegaSpec
    ruling_lines_removed: int

    def to_dict(self) -> dict[str, object]:
        return {
            "a": self.bidegree.a,
            "b": self.bidegree.b,
            **self.omega.to_dict(),
            "ruling_lines_removed": self.ruling_lines_removed,
        }


def canonicalize(Z: SchemeSpec) -> SchemeSpec:
    """Fold a length-1 zig-zag into the simple lines."""
    if Z.z == 1:
        return replace(Z, r=Z.r + 1, z=0)
    return Z


def label_to_scheme(lab: SystemLabel) -> SchemeSpec:
    r, q = split_r_q(lab.degree, lab.m)
    if lab.kind is Kind.B:
        return SchemeSpec(lab.m, r, 0, q, 0)
    return SchemeSpec(lab.m, r + 1, 0, 0, 0)


def scheme_to_label(Z: SchemeSpec, d: int) -> SystemLabel | None:
    """The B or I label whose scheme in degree ``d`` is ``Z``, if any."""
    if Z.s or Z.z or d < 0:
        return None
    for kind in (Kind.B, Kind.I):
        lab = SystemLabel.from_degree(kind, d, Z.m)
        try:
            if label_to_scheme(lab) == Z:
                return lab
        except DomainError:
            return None
    return None


def validate_move(Z: SchemeSpec, R: SpecMove) -> list[str]:
    """Violated move constraints against ``Z``; empty when the move is admissible."""
    bad = []
    if R.delta > 1:
        bad.append("delta > 1")
    if R.delta > Z.m:
        bad.append("delta > m (no fat line to specialize)")
    if R.l > Z.r:
        bad.append("l > r")
    if R.l_s > Z.s:
        bad.append("l_s > s")
    if R.l_z != Z.z // 2:
        bad.append("l_z != floor(z/2)")
    if R.t > Z.q:
        bad.append("t > q")
    if 2 * R.t_s + R.t_z + 1 > Z.r - R.l:
        bad.append("2*t_s + (t_z+1) > r - l")
    return bad


def splits_and_forms_zigzag(R: SpecMove) -> bool:
    """Whether a move both splits an existing zig-zag and forms a new one."""
    return R.l_z > 0 and R.t_z > 0
