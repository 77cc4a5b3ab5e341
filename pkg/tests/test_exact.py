"""Exact rotation-number and angle arithmetic."""

import math
import random
from fractions import Fraction

import pytest

from siegelpuzzle.exact import (
    ExactArithmeticError,
    RhoAngle,
    RotationNumber,
    ccw_distance,
    cyclic_between,
)

GOLDEN = RotationNumber.golden()
PHI = (math.sqrt(5.0) - 1.0) / 2.0


def test_golden_convergents():
    assert GOLDEN.convergent(1) == Fraction(1, 1)
    assert GOLDEN.convergent(2) == Fraction(1, 2)
    assert GOLDEN.convergent(3) == Fraction(2, 3)
    assert GOLDEN.convergent(4) == Fraction(3, 5)
    assert GOLDEN.convergent(7) == Fraction(13, 21)


def test_golden_return_times():
    assert GOLDEN.return_times(10) == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_float_value():
    assert abs(float(GOLDEN) - PHI) < 1e-15


def test_compare_against_fractions():
    assert GOLDEN.compare(Fraction(1, 2)) == 1
    assert GOLDEN.compare(Fraction(2, 3)) == -1
    assert GOLDEN.compare(Fraction(618, 1000)) == 1
    assert GOLDEN.compare(Fraction(619, 1000)) == -1
    # [DERIVED] convergents alternate around the limit, odd-index from above
    for k in range(1, 13):
        assert GOLDEN.compare(GOLDEN.convergent(k)) == (1 if k % 2 == 0 else -1)
    r = random.Random(7)
    for _ in range(200):
        q = Fraction(r.randrange(1, 10**6), r.randrange(1, 10**6))
        q -= q.__floor__()
        got = GOLDEN.compare(q)
        want = (PHI > float(q)) - (PHI < float(q))
        if abs(PHI - float(q)) > 1e-12:
            assert got == want


def test_rational_rotation_number_exact_compare():
    half = RotationNumber(terms=(2,), repeat=0)
    assert half.compare(Fraction(1, 2)) == 0
    assert half.compare(Fraction(1, 3)) == 1
    assert half.compare(Fraction(2, 3)) == -1


def test_eventually_periodic_tail():
    # [DERIVED] [0; 2, 1, 1, 1, ...] = 1/(2 + phi) where phi = golden mean
    x = RotationNumber(terms=(2, 1), repeat=1)
    val = 1.0 / (2.0 + PHI)
    assert abs(float(x) - val) < 1e-12
    assert x.compare(Fraction(38, 100)) == 1
    assert x.compare(Fraction(39, 100)) == -1


def test_as_fraction_accuracy():
    f = GOLDEN.as_fraction()
    assert f.denominator >= 10**9
    assert abs(float(f) - PHI) < 1e-17


def test_rho_angle_canonical_form():
    a = RhoAngle(Fraction(3, 2), Fraction(0), GOLDEN)
    assert a.a == Fraction(1, 2) and a.b == 0
    b = RhoAngle(Fraction(0), Fraction(2), GOLDEN)
    # 2*rho is about 1.236, so the canonical representative is 2*rho - 1
    assert b.a == Fraction(-1) and b.b == 2
    assert abs(b.value() - (2 * PHI - 1)) < 1e-12


def test_rho_angle_equality_and_hash():
    x = RhoAngle(Fraction(0), Fraction(2), GOLDEN)
    y = RhoAngle(Fraction(-1), Fraction(2), GOLDEN)
    assert x == y and hash(x) == hash(y)
    z = RhoAngle(Fraction(1, 3), Fraction(0), GOLDEN)
    assert x != z


def test_rho_angle_cross_rotation_comparison_rejected():
    other = RotationNumber(terms=(3,), repeat=1)
    with pytest.raises(ExactArithmeticError):
        _ = RhoAngle(Fraction(0), Fraction(1), GOLDEN) == RhoAngle(
            Fraction(0), Fraction(1), other
        )


def test_rho_angle_arithmetic_matches_floats():
    r = random.Random(11)
    for _ in range(300):
        a1, b1 = Fraction(r.randrange(-6, 7), r.randrange(1, 5)), Fraction(
            r.randrange(-3, 4)
        )
        a2, b2 = Fraction(r.randrange(-6, 7), r.randrange(1, 5)), Fraction(
            r.randrange(-3, 4)
        )
        x = RhoAngle(a1, b1, GOLDEN)
        y = RhoAngle(a2, b2, GOLDEN)
        s = x + y
        d = x - y
        assert abs(s.value() - math.fmod(x.value() + y.value(), 1.0) % 1.0) < 1e-9
        assert abs(d.value() - math.fmod(x.value() - y.value(), 1.0) % 1.0) < 1e-9
        assert 0.0 <= s.value() < 1.0 + 1e-15


def test_rho_angle_ordering_matches_floats():
    r = random.Random(13)
    angles = [
        RhoAngle(Fraction(r.randrange(0, 12), 12), Fraction(r.randrange(-2, 3)), GOLDEN)
        for _ in range(60)
    ]
    got = sorted(angles)
    vals = [a.value() for a in got]
    assert vals == sorted(vals)


def test_divide_then_scale_roundtrip():
    x = RhoAngle(Fraction(1, 3), Fraction(1), GOLDEN)
    for d in (2, 3, 5):
        for k in range(d):
            y = x.divide(d, k)
            assert y.scale(d) == x
            # branch k lands in the k-th fundamental sector
            assert k / d - 1e-12 <= y.value() < (k + 1) / d + 1e-12


def test_divide_branches_are_distinct_and_ordered():
    x = RhoAngle(Fraction(2, 5), Fraction(0), GOLDEN)
    branches = [x.divide(3, k) for k in range(3)]
    vals = [b.value() for b in branches]
    assert vals == sorted(vals)
    assert len(set(branches)) == 3


def _ang(p, q):
    return RhoAngle(Fraction(p, q), Fraction(0), GOLDEN)


def test_cyclic_between():
    assert cyclic_between(_ang(1, 10), _ang(2, 10), _ang(4, 10))
    assert not cyclic_between(_ang(1, 10), _ang(5, 10), _ang(4, 10))
    # wrap-around arc
    assert cyclic_between(_ang(8, 10), _ang(1, 10), _ang(3, 10))
    assert not cyclic_between(_ang(8, 10), _ang(5, 10), _ang(3, 10))
    # endpoints: closed at lo, open at hi
    assert cyclic_between(_ang(1, 10), _ang(1, 10), _ang(4, 10))
    assert not cyclic_between(_ang(1, 10), _ang(4, 10), _ang(4, 10))


def test_ccw_distance():
    assert ccw_distance(_ang(9, 10), _ang(1, 10)) == _ang(2, 10)
    assert ccw_distance(_ang(1, 10), _ang(9, 10)) == _ang(8, 10)
