"""Polynomial dynamics around a Siegel fixed point.

A ``SiegelPolynomial`` is monic with f(0) = 0 and f'(0) on the unit circle at
an irrational rotation angle.  The invariant disk boundary is sampled through
the critical orbit; external rays, equipotentials, and bubble rays are all
traced with one shared primitive, the continuous pullback of a polyline
through the nearest root of f(w) = target with an ambiguity guard.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exact import RotationNumber


class NumericalError(ArithmeticError):
    """A numerical routine left its certified operating regime."""


@dataclass(frozen=True)
class SiegelPolynomial:
    """Monic polynomial f(z) = a_1 z + ... + a_{d-1} z^{d-1} + z^d with
    a_1 = exp(2 pi i rotation)."""

    rotation: RotationNumber
    coeffs: Tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if len(self.coeffs) < 2:
            raise ValueError("degree must be at least two")
        if abs(self.coeffs[-1] - 1.0) > 1e-12:
            raise ValueError("polynomial must be monic")
        lam = cmath.exp(2j * math.pi * float(self.rotation))
        if abs(self.coeffs[0] - lam) > 1e-9:
            raise ValueError("linear coefficient must match the rotation number")

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def multiplier(self) -> complex:
        return self.coeffs[0]

    def __call__(self, z):
        w = np.asarray(z, dtype=complex)
        out = np.zeros_like(w)
        for c in reversed(self.coeffs):
            out = w * (out + c)
        if np.ndim(z) == 0:
            return complex(out)
        return out

    def deriv(self, z):
        w = np.asarray(z, dtype=complex)
        out = np.zeros_like(w)
        for k in range(self.degree, 0, -1):
            out = out * w + k * self.coeffs[k - 1]
        if np.ndim(z) == 0:
            return complex(out)
        return out

    def iterate(self, z: complex, n: int) -> complex:
        w = complex(z)
        for _ in range(n):
            w = self(w)
        return w

    def critical_points(self) -> List[complex]:
        # roots of f', highest-degree coefficient first for np.roots
        poly = [k * self.coeffs[k - 1] for k in range(self.degree, 0, -1)]
        return [complex(r) for r in np.roots(poly)]

    def preimages(self, target: complex) -> List[complex]:
        poly = list(reversed(self.coeffs)) + [-complex(target)]
        return [complex(r) for r in np.roots(poly)]

    def escape_radius(self) -> float:
        return max(4.0, 2.0 * sum(abs(c) for c in self.coeffs))

    def fixed_points(self) -> List[complex]:
        poly = list(reversed(self.coeffs)) + [0.0]
        poly[-2] -= 1.0
        return [complex(r) for r in np.roots(poly)]


def make_polynomial(
    rotation: RotationNumber, higher_coeffs: Sequence[complex]
) -> SiegelPolynomial:
    """Normalize f(z) = lambda z + c_2 z^2 + ... + c_d z^d to monic form by a
    linear conjugacy fixing the origin, which preserves the multiplier."""
    lam = cmath.exp(2j * math.pi * float(rotation))
    coeffs = [lam] + [complex(c) for c in higher_coeffs]
    if coeffs[-1] == 0:
        raise ValueError("leading coefficient must be nonzero")
    d = len(coeffs)
    s = coeffs[-1] ** (-1.0 / (d - 1))
    normalized = [coeffs[k] * s ** k for k in range(d)]
    normalized[-1] = 1.0
    return SiegelPolynomial(rotation, tuple(normalized))


def golden_quadratic() -> SiegelPolynomial:
    return make_polynomial(RotationNumber.golden(), [1.0])


def orbit(f: SiegelPolynomial, z0: complex, n: int) -> np.ndarray:
    out = np.empty(n + 1, dtype=complex)
    out[0] = z0
    z = complex(z0)
    for k in range(n):
        z = f(z)
        out[k + 1] = z
    return out


# ---------------------------------------------------------------------------
# invariant disk boundary through the critical orbit


@dataclass(frozen=True)
class BoundarySample:
    """Critical orbit data sampled along the invariant disk boundary."""

    rotation: RotationNumber
    points: np.ndarray            # orbit of the boundary critical point
    critical_point: complex
    max_radius: float
    min_radius: float
    return_times: Tuple[int, ...]
    residuals: Tuple[float, ...]  # |rotation - winding/q| per return time

    def angle_order(self) -> np.ndarray:
        """Indices reordering the orbit along the boundary curve.

        Index k sits at conjugacy angle k * rotation mod 1, so sorting those
        angles traverses the boundary once counterclockwise."""
        theta = float(self.rotation)
        keys = np.mod(np.arange(len(self.points)) * theta, 1.0)
        return np.argsort(keys)

    def sorted_by_angle(self) -> np.ndarray:
        return self.points[self.angle_order()]


def empirical_rotation(points: np.ndarray, q: int) -> Fraction:
    """Winding number of the first q orbit steps about the fixed point,
    over q, reduced mod 1: the combinatorial rotation number of the
    sampled motion."""
    steps = points[1 : q + 1] / points[:q]
    total = float(np.sum(np.angle(steps))) / (2.0 * math.pi)
    return Fraction(round(total) % q, q)


def _circle_distance(a: float, b: float) -> float:
    gap = abs(a - b) % 1.0
    return min(gap, 1.0 - gap)


def sample_siegel_boundary(
    f: SiegelPolynomial,
    critical_point: Optional[complex] = None,
    n: int = 10**4,
    n_return_times: int = 10,
) -> BoundarySample:
    """Iterate the boundary critical point and report how consistently the
    sampled motion rotates: at each denominator q of a best rational
    approximation, the empirical rotation number p/q is compared with the
    target angle.  The residuals must shrink along the sequence when the
    orbit really travels along an invariant circle boundary."""
    if critical_point is None:
        critical_point = siegel_critical_point(f)
    pts = orbit(f, critical_point, n)
    radii = np.abs(pts)
    if not np.all(np.isfinite(radii)):
        raise NumericalError("boundary critical orbit escaped")
    qs = [q for q in f.rotation.return_times(n_return_times + 4) if q < n]
    qs = qs[:n_return_times]
    theta = float(f.rotation)
    residuals = tuple(
        _circle_distance(theta, float(empirical_rotation(pts, q))) for q in qs
    )
    return BoundarySample(
        rotation=f.rotation,
        points=pts,
        critical_point=complex(critical_point),
        max_radius=float(radii.max()),
        min_radius=float(radii.min()),
        return_times=tuple(qs),
        residuals=residuals,
    )


def siegel_critical_point(f: SiegelPolynomial, probe: int = 233) -> complex:
    """The critical point traveling along the invariant disk boundary: its
    orbit stays bounded and rotates about the origin at the target angle."""
    theta = float(f.rotation)
    best = None
    best_err = None
    for c in f.critical_points():
        pts = orbit(f, c, probe)
        radii = np.abs(pts)
        if not np.all(np.isfinite(radii)) or radii.max() > f.escape_radius():
            continue
        if radii.min() < 1e-9:
            continue
        q = max(q for q in f.rotation.return_times(12) if q <= probe)
        err = _circle_distance(theta, float(empirical_rotation(pts, q)))
        if best is None or err < best_err:
            best, best_err = c, err
    if best is None or best_err > 0.05:
        raise NumericalError("no critical point follows the rotation boundary")
    return best


# ---------------------------------------------------------------------------
# continuous polyline pullback

GUARD_RATIO = 0.75


def pull_point(
    f: SiegelPolynomial, target: complex, anchor: complex, guard: float = GUARD_RATIO
) -> complex:
    """The preimage of target nearest to anchor.  Rejects the choice when the
    runner-up root is almost as close, which signals that the polyline being
    lifted is too coarse near a critical value."""
    roots = sorted(f.preimages(target), key=lambda r: abs(r - anchor))
    if len(roots) > 1 and guard > 0.0:
        d0 = abs(roots[0] - anchor)
        d1 = abs(roots[1] - anchor)
        if d0 > 1e-14 and d1 - d0 < guard * d0:
            raise NumericalError("ambiguous branch while lifting a polyline")
    return roots[0]


def pull_back_polyline(
    f: SiegelPolynomial,
    targets: Sequence[complex],
    seed: complex,
    max_splits: int = 24,
) -> np.ndarray:
    """Lift a polyline through f, starting from the given preimage of its
    first point and continuing by nearest-root choice.  Ambiguous steps are
    resolved by subdividing the target segment."""
    out = [complex(seed)]
    for k in range(1, len(targets)):
        prev_t = complex(targets[k - 1])
        cur_t = complex(targets[k])
        stack = [(prev_t, cur_t, 0)]
        while stack:
            a, b, depth = stack.pop()
            try:
                nxt = pull_point(f, b, out[-1])
            except NumericalError:
                if depth >= max_splits:
                    raise
                mid = 0.5 * (a + b)
                stack.append((mid, b, depth + 1))
                stack.append((a, mid, depth + 1))
                continue
            out.append(nxt)
    return np.array(out, dtype=complex)


# ---------------------------------------------------------------------------
# escape-region geometry


def green_potential(f: SiegelPolynomial, z: complex, cap: float = 1e100) -> float:
    """Escape-rate potential: zero on bounded orbits, log-rate of escape
    otherwise.  Orbits are run to a fixed modulus threshold so the functional
    equation potential(f(z)) = degree * potential(z) holds to rounding."""
    d = f.degree
    w = complex(z)
    budget = 4096
    for n in range(budget):
        r = abs(w)
        if r > cap:
            return math.log(r) / d ** n
        if not math.isfinite(r):
            raise NumericalError("orbit overflowed before the modulus test")
        w = f(w)
    return 0.0


# Orbits beyond this potential sit so far out that the escape coordinate is
# radial to about 1e-13, which pins the absolute normalization of ray and
# equipotential grids.
SEED_POTENTIAL = 30.0


def ray_grid_offset(f: SiegelPolynomial, samples_per_level: int = 8) -> int:
    """Index of the external-ray vertex sitting exactly on the potential
    log(2) level.  Vertices above it live in the far field where the escape
    coordinate is radial to rounding."""
    d = f.degree
    floor = max(d * math.log(f.escape_radius()), SEED_POTENTIAL)
    m0 = 1
    while math.log(2.0) * d ** m0 < floor:
        m0 += 1
    return m0 * samples_per_level


def external_ray(
    f: SiegelPolynomial,
    angle: Fraction,
    depth: int = 12,
    samples_per_level: int = 8,
) -> np.ndarray:
    """Polyline along the external ray at the given angle, sampled on the
    exact potential grid log(2) * d**(-j/samples_per_level).

    Vertex j is the analytic continuation of vertex j - samples_per_level of
    the ray at angle d*angle, so rays of one angle cycle are consistent index
    by index: f(ray(t)[j]) agrees with ray(d*t)[j - samples_per_level] to
    Newton tolerance everywhere below the radial far field.  The vertex at
    index ray_grid_offset(f) lies on the potential log(2) level, and the ray
    continues depth full levels further down."""
    d = f.degree
    sub = samples_per_level
    if sub < 1:
        raise ValueError("samples_per_level must be positive")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    t = Fraction(angle) % 1

    top = ray_grid_offset(f, sub)
    total = top + depth * sub

    # forward orbit of the angle under multiplication by the degree; rational
    # angles make it eventually periodic, so all rays over the orbit can be
    # grown together one grid row at a time
    angles = [t]
    index = {t: 0}
    while True:
        nxt = (angles[-1] * d) % 1
        if nxt in index:
            break
        index[nxt] = len(angles)
        angles.append(nxt)
    image_of = [index[(a * d) % 1] for a in angles]

    pot = [math.log(2.0) * d ** ((top - j) / sub) for j in range(total + 1)]
    p_cut = d * math.log(f.escape_radius())
    rays = [np.empty(total + 1, dtype=complex) for _ in angles]
    phases = [cmath.exp(2j * math.pi * float(a)) for a in angles]
    for i in range(len(angles)):
        for j in range(sub):
            rays[i][j] = math.exp(pot[j]) * phases[i]
    for j in range(sub, total + 1):
        for i in range(len(angles)):
            target = complex(rays[image_of[i]][j - sub])
            # far out the radial formula is the sharper anchor; once inside
            # the crossover the previous vertex is one dense grid step away
            if pot[j] >= p_cut:
                anchor = math.exp(pot[j]) * phases[i]
            else:
                anchor = complex(rays[i][j - 1])
            rays[i][j] = pull_point(f, target, anchor)
    return rays[0]


def equipotential_loop(
    f: SiegelPolynomial, potential: float, samples: int = 256
) -> np.ndarray:
    """Closed polyline around the filled Julia set at the given potential.

    A circle deep in the escape region approximates the starting level; each
    pullback divides the potential by the degree, and since the map covers
    the lower level d times the circle is traversed d^n times up front so the
    lift closes up."""
    if potential <= 0:
        raise ValueError("potential must be positive")
    d = f.degree
    floor = max(d * math.log(f.escape_radius()), SEED_POTENTIAL)
    n = 0
    while potential * d ** n < floor:
        n += 1
    if d ** n * samples > 500_000:
        raise NumericalError("equipotential level too deep to lift")
    rho = math.exp(potential * d ** n)
    base = np.exp(2j * math.pi * np.linspace(0.0, 1.0, samples, endpoint=False))
    loop = rho * np.tile(base, d ** n)
    loop = np.append(loop, loop[0])
    for _ in range(n):
        guess = loop[0] ** (1.0 / d)  # principal root, right in the far field
        seed = min(f.preimages(loop[0]), key=lambda r: abs(r - guess))
        loop = pull_back_polyline(f, loop, seed)
    if abs(loop[0] - loop[-1]) > 1e-6 * max(1.0, abs(loop[0])):
        raise NumericalError("equipotential lift did not close up")
    loop[-1] = loop[0]
    return loop


def newton_fixed_point(f: SiegelPolynomial, start: complex, steps: int = 60) -> complex:
    z = complex(start)
    for _ in range(steps):
        g = f(z) - z
        gp = f.deriv(z) - 1.0
        if gp == 0:
            raise NumericalError("degenerate Newton step for a fixed point")
        step = g / gp
        z -= step
        if abs(step) < 1e-14:
            return z
    raise NumericalError("Newton iteration for a fixed point did not settle")


# ---------------------------------------------------------------------------
# bubble rays


@dataclass(frozen=True)
class Bubble:
    """One bubble of a bubble ray: a closed boundary polyline based at the
    point attaching it to the previous bubble."""

    attach: complex
    boundary: np.ndarray
    level: int


def _disk_loop(f: SiegelPolynomial, samples: int):
    """Closed polyline along the invariant disk boundary plus the orbit index
    of each open-loop vertex."""
    c = siegel_critical_point(f)
    sample = sample_siegel_boundary(f, c, n=samples - 1, n_return_times=6)
    idx = sample.angle_order()
    pts = sample.points[idx]
    # base the loop at the critical point itself (orbit index 0, angle 0)
    k = int(np.where(idx == 0)[0][0])
    pts = np.roll(pts, -k)
    idx = np.roll(idx, -k)
    return np.append(pts, pts[0]), idx, sample


def siegel_disk_boundary(f: SiegelPolynomial, samples: int = 987) -> np.ndarray:
    """Closed polyline along the invariant disk boundary, based at the
    boundary critical point and ordered by conjugacy angle."""
    loop, _, _ = _disk_loop(f, samples)
    return loop


def grow_bubble_ray(
    f: SiegelPolynomial,
    count: int = 12,
    samples: int = 987,
) -> List[Bubble]:
    """The invariant bubble ray through the boundary critical point: the
    chain of disk preimages hanging off it.

    The first bubble is the lift of the disk boundary through the critical
    point.  Nearest-root continuation is hopeless there because the loop
    runs through the critical value, so each vertex is lifted by exclusion:
    the root closest to the disk samples is the disk-side branch, and among
    the rest the one closest to the previously lifted vertex continues the
    bubble.  Every later bubble is the lift of the previous one seeded at
    the preimage of its attaching point that lies on the previous boundary."""
    c = siegel_critical_point(f)
    loop, idx, sample = _disk_loop(f, samples)
    lifted = np.empty(samples, dtype=complex)
    base = int(np.where(idx == 1)[0][0])
    prev = c
    for s in range(samples):
        p = (base + s) % samples
        if int(idx[p]) == 1:
            lifted[p] = c  # critical value lifts to the critical point
        else:
            roots = sorted(
                f.preimages(loop[p]),
                key=lambda r: float(np.min(np.abs(sample.points - r))),
            )
            lifted[p] = min(roots[1:], key=lambda r: abs(r - prev))
        prev = lifted[p]
    boundary = np.append(np.roll(lifted, -base), [c])
    bubbles = [Bubble(attach=c, boundary=boundary, level=1)]
    for level in range(2, count + 1):
        prev = bubbles[-1]
        cands = f.preimages(prev.attach)
        dists = [np.min(np.abs(prev.boundary - r)) for r in cands]
        attach = cands[int(np.argmin(dists))]
        boundary = pull_back_polyline(f, prev.boundary, attach)
        _close_loop(boundary)
        boundary[0] = boundary[-1] = attach
        bubbles.append(Bubble(attach=attach, boundary=boundary, level=level))
    return bubbles


def _close_loop(boundary: np.ndarray) -> None:
    gap = abs(boundary[0] - boundary[-1])
    if gap > 1e-3 * max(1.0, float(np.max(np.abs(boundary)))):
        raise NumericalError("boundary lift did not close up")
