"""Exact arithmetic for rotation numbers and boundary angles.

Rotation numbers are given by continued fraction terms, optionally with a
repeating tail, so irrational numbers of bounded type (all terms <= M) are
first-class values.  Boundary angles are affine forms a + b*rho mod 1 with
rational a, b.  Because 1 and an irrational rho are rationally independent,
equality of angles reduces to equality of the coefficient pairs, and circular
order is decided exactly by comparing rho against rationals through its
convergents.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Tuple, Union

_CMP_CAP = 512  # convergent iterations before declaring a comparison stuck


class ExactArithmeticError(ValueError):
    pass


@dataclass(frozen=True)
class RotationNumber:
    """A number in (0, 1) described by continued fraction terms.

    ``terms`` holds the leading partial quotients.  If ``repeat`` is nonzero,
    the final ``repeat`` terms cycle forever and the value is a quadratic
    irrational; otherwise the value is the rational with exactly ``terms``.
    """

    terms: Tuple[int, ...]
    repeat: int = 0

    def __post_init__(self):
        if not self.terms:
            raise ExactArithmeticError("need at least one continued fraction term")
        if any((not isinstance(a, int)) or a < 1 for a in self.terms):
            raise ExactArithmeticError("continued fraction terms must be positive integers")
        if self.repeat < 0 or self.repeat > len(self.terms):
            raise ExactArithmeticError("repeat length out of range")

    @classmethod
    def golden(cls) -> "RotationNumber":
        return cls((1,), repeat=1)

    @classmethod
    def from_terms(cls, terms, repeat: int = 0) -> "RotationNumber":
        return cls(tuple(int(a) for a in terms), repeat)

    @property
    def is_rational(self) -> bool:
        return self.repeat == 0

    @property
    def type_bound(self) -> int:
        return max(self.terms)

    def term_stream(self) -> Iterator[int]:
        yield from self.terms
        if self.repeat:
            cycle = self.terms[len(self.terms) - self.repeat:]
            while True:
                yield from cycle

    def convergents(self) -> Iterator[Fraction]:
        p_prev, q_prev = 1, 0
        p, q = 0, 1
        for a in self.term_stream():
            p, p_prev = a * p + p_prev, p
            q, q_prev = a * q + q_prev, q
            yield Fraction(p, q)

    def convergent(self, k: int) -> Fraction:
        """k-th convergent p_k/q_k (k >= 1); for rationals the sequence ends."""
        for i, c in enumerate(self.convergents(), start=1):
            if i == k:
                return c
        raise ExactArithmeticError(f"rational rotation number has no convergent {k}")

    def return_times(self, count: int) -> list:
        """Distinct convergent denominators q_1 <= q_2 <= ... (duplicates dropped)."""
        out = []
        for c in self.convergents():
            q = c.denominator
            if not out or q > out[-1]:
                out.append(q)
            if len(out) >= count:
                break
        return out

    def compare(self, r: Fraction) -> int:
        """Exact sign of (self - r)."""
        r = Fraction(r)
        if r <= 0:
            return 1
        if r >= 1:
            return -1
        lo, hi = Fraction(0), Fraction(1)
        for i, c in enumerate(self.convergents()):
            if self.is_rational and i == len(self.terms) - 1:
                # exact rational value reached
                return (c > r) - (c < r)
            # convergents alternate around the value: even index above, odd below
            if i % 2 == 0:
                hi = c
            else:
                lo = c
            if r <= lo:
                return 1
            if r >= hi:
                return -1
            if i > _CMP_CAP:
                raise ExactArithmeticError("comparison did not resolve; malformed terms?")
        raise ExactArithmeticError("ran out of terms comparing rational rotation number")

    def as_fraction(self, min_denominator: int = 10**9) -> Fraction:
        """A convergent with denominator >= min_denominator (or the exact rational)."""
        last = Fraction(0)
        for i, c in enumerate(self.convergents()):
            last = c
            if self.is_rational and i == len(self.terms) - 1:
                return c
            if c.denominator >= min_denominator:
                return c
        return last

    def __float__(self) -> float:
        return float(self.as_fraction())


AngleLike = Union["RhoAngle", Fraction, int, str]


@dataclass(frozen=True, eq=False)
class RhoAngle:
    """An angle a + b*rho mod 1 with rational a, b, reduced so the value is in [0, 1).

    ``rho`` may be None only when b == 0 (purely rational angles, used with
    power-map root dynamics).
    """

    a: Fraction
    b: Fraction
    rho: Optional[RotationNumber] = None

    def __post_init__(self):
        a, b = Fraction(self.a), Fraction(self.b)
        if b != 0 and self.rho is None:
            raise ExactArithmeticError("irrational part requires a rotation number")
        if b != 0 and self.rho.is_rational:
            raise ExactArithmeticError("rho must be irrational for exact angle forms")
        if b == 0 and self.rho is not None:
            # drop the carrier so equal angles hash equally
            object.__setattr__(self, "rho", None)
        # reduce mod 1: subtract floor(a + b*rho), found by exact comparison
        shift = _floor_affine(a, b, self.rho)
        object.__setattr__(self, "a", a - shift)
        object.__setattr__(self, "b", b)

    @classmethod
    def rational(cls, a) -> "RhoAngle":
        return cls(Fraction(a), Fraction(0), None)

    @classmethod
    def of_rho(cls, coeff, rho: RotationNumber, offset=0) -> "RhoAngle":
        return cls(Fraction(offset), Fraction(coeff), rho)

    def _key(self):
        return (self.a, self.b, self.rho)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RhoAngle):
            return NotImplemented
        if self.b != 0 and other.b != 0 and self.rho != other.rho:
            raise ExactArithmeticError("angles over different rotation numbers")
        return self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash(self._key())

    def _require_same_rho(self, other: "RhoAngle") -> Optional[RotationNumber]:
        if self.b != 0 and other.b != 0 and self.rho != other.rho:
            raise ExactArithmeticError("angles over different rotation numbers")
        return self.rho if self.b != 0 else other.rho

    def __add__(self, other: "RhoAngle") -> "RhoAngle":
        rho = self._require_same_rho(other)
        return RhoAngle(self.a + other.a, self.b + other.b, rho)

    def __sub__(self, other: "RhoAngle") -> "RhoAngle":
        rho = self._require_same_rho(other)
        return RhoAngle(self.a - other.a, self.b - other.b, rho)

    def scale(self, k: int) -> "RhoAngle":
        return RhoAngle(self.a * k, self.b * k, self.rho)

    def divide(self, d: int, branch: int = 0) -> "RhoAngle":
        """The branch-th preimage under t -> d*t, i.e. (self + branch)/d."""
        if d < 1 or not 0 <= branch < d:
            raise ExactArithmeticError("bad division branch")
        return RhoAngle((self.a + branch) / d, self.b / d, self.rho)

    def compare(self, other: "RhoAngle") -> int:
        """Sign of (self - other) as representatives in [0, 1)."""
        rho = self._require_same_rho(other)
        da, db = self.a - other.a, self.b - other.b
        return _sign_affine(da, db, rho)

    def __lt__(self, other) -> bool:
        return self.compare(other) < 0

    def __le__(self, other) -> bool:
        return self.compare(other) <= 0

    def value(self) -> float:
        if self.b == 0:
            return float(self.a) % 1.0
        v = float(self.a + self.b * self.rho.as_fraction())
        return v % 1.0

    def __str__(self) -> str:
        if self.b == 0:
            return f"{self.a}"
        if self.a == 0:
            return f"{self.b}r"
        return f"{self.a}+{self.b}r"


def _sign_affine(a: Fraction, b: Fraction, rho: Optional[RotationNumber]) -> int:
    """Exact sign of a + b*rho."""
    if b == 0:
        return (a > 0) - (a < 0)
    if rho is None:
        raise ExactArithmeticError("irrational part requires a rotation number")
    # a + b*rho >< 0  <=>  rho >< -a/b (orientation by sign of b)
    cmp = rho.compare(-a / b)
    return cmp if b > 0 else -cmp


def _floor_affine(a: Fraction, b: Fraction, rho: Optional[RotationNumber]) -> int:
    """floor(a + b*rho), exact."""
    if b == 0:
        return a.numerator // a.denominator
    approx = float(a) + float(b) * float(rho)
    n = int(approx) - 2
    while _sign_affine(a - (n + 1), b, rho) >= 0:
        n += 1
    return n


def cyclic_between(lo: RhoAngle, x: RhoAngle, hi: RhoAngle) -> bool:
    """True when x lies in the counterclockwise arc [lo, hi) on the circle."""
    if lo.compare(hi) == 0:
        return True  # degenerate arc spans the whole circle
    if lo.compare(hi) < 0:
        return lo.compare(x) <= 0 and x.compare(hi) < 0
    return lo.compare(x) <= 0 or x.compare(hi) < 0


def ccw_distance(base: RhoAngle, x: RhoAngle) -> RhoAngle:
    """Counterclockwise distance from base to x, as an angle in [0, 1)."""
    return x - base
