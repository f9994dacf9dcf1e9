from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from postlab.expected import Bidegree, DomainError, Kind, SystemLabel, d0, length_p3, split_r_q
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

schemes = st.builds(SchemeSpec, st.integers(0, 6), st.integers(0, 12), st.integers(0, 4),
                    st.integers(0, 10), st.integers(0, 6))


class TestCanonicalize:
    @pytest.mark.parametrize("Z, want", [
        (SchemeSpec(1, 5, 0, 0, 1), SchemeSpec(1, 6, 0, 0, 0)),
        (SchemeSpec(2, 3, 1, 4, 0), SchemeSpec(2, 3, 1, 4, 0)),
        (SchemeSpec(0, 0, 0, 0, 1), SchemeSpec(0, 1, 0, 0, 0)),
    ])
    def test_examples(self, Z, want):
        assert canonicalize(Z) == want

    @given(schemes)
    def test_idempotent(self, Z):
        assert canonicalize(canonicalize(Z)) == canonicalize(Z)

    @given(schemes, st.integers(0, 10))
    def test_length_preserving(self, Z, extra):
        # a length-1 zig-zag is one line: d+1 conditions
        d = Z.m + extra
        C = canonicalize(Z)
        as_line = length_p3(d, SchemeSpec(Z.m, Z.r + 1, Z.s, Z.q, 0)) if Z.z == 1 else length_p3(d, Z)
        assert length_p3(d, C) == as_line


def test_negative_fields_rejected():
    with pytest.raises(DomainError):
        SchemeSpec(0, -1, 0, 0, 0)
    with pytest.raises(DomainError):
        OmegaSpec(0, 0, 1, 2)


class TestLabels:
    def test_examples(self):
        assert label_to_scheme(SystemLabel(Kind.B, 2, 0, 2)) == SchemeSpec(2, 9, 0, 2, 0)
        assert label_to_scheme(SystemLabel(Kind.I, 2, 0, 1)) == SchemeSpec(1, 12, 0, 0, 0)
        assert label_to_scheme(SystemLabel(Kind.B, 0, 0, 0)) == SchemeSpec(0, 1, 0, 0, 0)

    @given(st.integers(0, 6), st.integers(0, 20))
    def test_b_and_i_differ_by_one_line(self, m, extra):
        d = max(d0(m), m) + extra
        B = label_to_scheme(SystemLabel.from_degree("B", d, m))
        I = label_to_scheme(SystemLabel.from_degree("I", d, m))
        assert (I.m, I.r, I.s, I.q, I.z) == (B.m, B.r + 1, B.s, 0, B.z)
        assert B.q == split_r_q(d, m)[1] >= 0

    @given(st.sampled_from("BI"), st.integers(0, 6), st.integers(0, 20))
    def test_round_trip(self, kind, m, extra):
        d = max(d0(m), m) + extra
        lab = SystemLabel.from_degree(kind, d, m)
        back = scheme_to_label(label_to_scheme(lab), d)
        # when q = 0 the B and I schemes can only coincide if r differs, so labels are unique
        assert back is not None and label_to_scheme(back) == label_to_scheme(lab)

    def test_not_a_label(self):
        assert scheme_to_label(SchemeSpec(1, 2, 1, 0, 0), 4) is None


class TestValidateMove:
    def test_admissible(self):
        assert validate_move(SchemeSpec(2, 9, 0, 2, 0), SpecMove(1, 3, 0, 0, 2, 0, 0)) == []

    def test_too_many_points(self):
        assert validate_move(SchemeSpec(2, 9, 0, 2, 0), SpecMove(1, 3, 0, 0, 5, 0, 0)) == ["t > q"]

    def test_zigzag_split(self):
        assert validate_move(SchemeSpec(1, 2, 0, 0, 4), SpecMove(0, 0, 0, 1, 0, 0, 0)) == [
            "l_z != floor(z/2)"
        ]

    def test_line_pool(self):
        bad = validate_move(SchemeSpec(0, 3, 0, 0, 0), SpecMove(0, 1, 0, 0, 0, 1, 0))
        assert bad == ["2*t_s + (t_z+1) > r - l"]

    def test_every_constraint_named(self):
        bad = validate_move(SchemeSpec(0, 0, 0, 0, 0), SpecMove(1, 1, 1, 1, 1, 0, 0))
        assert len(bad) == 6

    def test_delta_range(self):
        assert "delta > 1" in validate_move(SchemeSpec(3, 0, 0, 0, 0), SpecMove(2, 0, 0, 0, 0, 0, 0))
        with pytest.raises(DomainError):
            SpecMove(-1, 0, 0, 0, 0, 0, 0)

    def test_zigzag_flag(self):
        assert splits_and_forms_zigzag(SpecMove(1, 0, 0, 2, 0, 0, 3))
        assert not splits_and_forms_zigzag(SpecMove(1, 0, 0, 0, 0, 0, 3))


def test_json_shapes():
    Z = SchemeSpec(1, 2, 3, 4, 5)
    R = SpecMove(1, 2, 3, 4, 5, 6, 7)
    T = TraceSpec(Bidegree(6, 1), OmegaSpec(14, 0, 0, 2), 5)
    assert list(json.loads(json.dumps(Z.to_dict()))) == ["m", "r", "s", "q", "z"]
    assert list(R.to_dict()) == ["delta", "l", "l_s", "l_z", "t", "t_s", "t_z"]
    assert list(T.to_dict()) == ["a", "b", "p", "p_d", "p_m", "m_pt", "ruling_lines_removed"]
    assert str(Z) == "Z(1,2,3,4,5)" and str(R) == "R(1,2,3,4,5,6,7)"
    assert R.ruling_lines == 2 + 3 + 4


class TestOmega:
    def test_fold(self):
        assert OmegaSpec(1, 2, 2, 1).folded() == OmegaSpec(3, 2, 0, 1)
        assert OmegaSpec(1, 2, 2, 2).folded() == OmegaSpec(1, 4, 0, 1)
        assert OmegaSpec(1, 2, 2, 3).folded() == OmegaSpec(1, 2, 2, 3)
        assert OmegaSpec(1, 2, 2, 0).folded().p_m == 0

    def test_multiplicities(self):
        assert OmegaSpec(2, 1, 2, 3).multiplicities() == [3, 3, 2, 1, 1]
        assert OmegaSpec(0, 0, 0, 1).max_multiplicity() == 0
