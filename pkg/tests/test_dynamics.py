"""Siegel polynomial dynamics: boundary sampling, pullbacks, rays, bubbles."""

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from siegelpuzzle.dynamics import (
    NumericalError,
    empirical_rotation,
    equipotential_loop,
    external_ray,
    golden_quadratic,
    green_potential,
    grow_bubble_ray,
    make_polynomial,
    newton_fixed_point,
    orbit,
    pull_back_polyline,
    pull_point,
    ray_grid_offset,
    sample_siegel_boundary,
    siegel_critical_point,
    siegel_disk_boundary,
)
from siegelpuzzle.exact import RotationNumber

F = golden_quadratic()
LAM = F.multiplier
BETA = 1.0 - LAM  # the nonzero fixed point of z -> lam z + z^2


def test_golden_quadratic_basic_data():
    assert F.degree == 2
    assert abs(LAM - cmath.exp(2j * math.pi * float(RotationNumber.golden()))) < 1e-12
    # f' = lam + 2z vanishes at -lam/2
    (c,) = F.critical_points()
    assert abs(c - (-LAM / 2)) < 1e-12
    assert abs(F(c) - (LAM * c + c * c)) < 1e-12
    assert F.escape_radius() == 4.0


def test_make_polynomial_is_a_linear_conjugacy():
    rot = RotationNumber.golden()
    lam = cmath.exp(2j * math.pi * float(rot))
    for coeffs in ([3.0], [2.0, 5.0], [0.3 + 0.1j, -0.2, 2.0]):
        g = make_polynomial(rot, coeffs)
        assert abs(g.coeffs[-1] - 1.0) < 1e-12
        assert abs(g.multiplier - lam) < 1e-12
        d = len(coeffs) + 1
        s = coeffs[-1] ** (-1.0 / (d - 1))

        def raw(z):
            out = lam * z
            for k, c in enumerate(coeffs, start=2):
                out += c * z ** k
            return out

        for z in (0.3 + 0.2j, -0.1 + 0.4j, 0.05j):
            assert abs(g(z) - raw(s * z) / s) < 1e-10


def test_preimages_and_fixed_points():
    for target in (0.7 + 0.2j, -1.0, 3j):
        roots = F.preimages(target)
        assert len(roots) == 2
        for r in roots:
            assert abs(F(r) - target) < 1e-9
    fps = sorted(F.fixed_points(), key=abs)
    assert abs(fps[0]) < 1e-12
    assert abs(fps[1] - BETA) < 1e-12
    assert abs(newton_fixed_point(F, 2.0 + 0.5j) - BETA) < 1e-12


def test_orbit_matches_iterate():
    pts = orbit(F, 0.2 + 0.1j, 20)
    assert abs(pts[7] - F.iterate(0.2 + 0.1j, 7)) < 1e-12
    assert abs(pts[20] - F.iterate(0.2 + 0.1j, 20)) < 1e-12


def test_empirical_rotation_on_synthetic_rotation():
    # [DERIVED] oracle: a rigid rotation by angle a winds round(q a) times in q steps
    for a in (0.30, 0.618, 0.05, 0.93):
        pts = np.exp(2j * math.pi * a * np.arange(200))
        for q in (7, 10, 55, 89):
            got = empirical_rotation(pts, q)
            assert got == Fraction(round(q * a) % q, q)


def test_boundary_critical_point_identification():
    c = siegel_critical_point(F)
    assert abs(c - (-LAM / 2)) < 1e-12


def test_boundary_sample_rotation_residuals_shrink():
    s = sample_siegel_boundary(F, n=10**4)
    assert s.return_times == (1, 2, 3, 5, 8, 13, 21, 34, 55, 89)
    assert 0.2 < s.min_radius <= s.max_radius < 0.6
    for a, b in zip(s.residuals, s.residuals[1:]):
        assert b < a
    assert s.residuals[-1] < 1e-3


def test_boundary_sample_deep_residual():
    s = sample_siegel_boundary(F, n=10**4, n_return_times=19)
    assert s.return_times[-1] == 6765
    assert s.residuals[-1] < 1e-6


def test_sorted_boundary_is_a_simple_loop():
    s = sample_siegel_boundary(F, n=500)
    pts = s.sorted_by_angle()
    # consecutive gaps along the curve stay small once sorted
    gaps = np.abs(np.diff(np.append(pts, pts[0])))
    assert float(gaps.max()) < 0.1
    loop = siegel_disk_boundary(F, samples=500)
    assert abs(loop[0] - siegel_critical_point(F)) < 1e-12
    assert loop[0] == loop[-1]


def test_pull_back_polyline_inverts_forward_images():
    # [DERIVED] oracle: push a segment forward, lift the image back
    seg = np.linspace(2.0 + 0.3j, 3.0 + 1.0j, 40)
    images = F(seg)
    lifted = pull_back_polyline(F, images, seg[0])
    assert len(lifted) >= len(seg)
    # the lift visits every original vertex (splits may add points)
    for z in seg:
        assert float(np.min(np.abs(lifted - z))) < 1e-9


def test_pull_point_guards_ambiguous_branches():
    c = siegel_critical_point(F)
    v = F(c)
    with pytest.raises(NumericalError):
        pull_point(F, v + 1e-9, c)


def test_green_potential_functional_equation():
    for z in (3 + 2j, -5 + 0.1j, 0.2 + 4j):
        g = green_potential(F, z)
        assert g > 0
        assert abs(green_potential(F, F(z)) - 2 * g) < 1e-9
        w = min(F.preimages(z), key=abs)
        assert abs(green_potential(F, w) - g / 2) < 1e-9


def test_green_potential_zero_on_bounded_orbits():
    assert green_potential(F, 0.0) == 0.0
    assert green_potential(F, siegel_critical_point(F)) == 0.0
    assert green_potential(F, 0.1 + 0.05j) == 0.0


def test_green_potential_matches_log_far_out():
    z = 1e40
    assert abs(green_potential(F, z) - math.log(abs(z))) < 0.1


def test_external_ray_zero_lands_at_beta():
    ray = external_ray(F, Fraction(0), depth=12)
    assert abs(ray[-1] - BETA) < 1e-4
    # potentials decrease toward the Julia set
    pots = [green_potential(F, z) for z in ray[:: len(ray) // 8]]
    assert all(b < a + 1e-12 for a, b in zip(pots, pots[1:]))


def test_external_ray_grid_potentials():
    sub = 8
    ray = external_ray(F, Fraction(0), depth=4, samples_per_level=sub)
    top = ray_grid_offset(F, sub)
    # the marked vertex sits on the log 2 level and the grid is exactly
    # geometric in the potential
    assert abs(green_potential(F, ray[top]) - math.log(2.0)) < 1e-9
    for j in (top + sub, top + 4 * sub):
        expected = math.log(2.0) * 2.0 ** ((top - j) / sub)
        assert abs(green_potential(F, ray[j]) - expected) < 1e-9


def test_external_ray_respects_angle_doubling():
    t = Fraction(1, 3)
    sub = 8
    ray = external_ray(F, t, depth=6, samples_per_level=sub)
    other = external_ray(F, (2 * t) % 1, depth=6, samples_per_level=sub)
    # below the far field the grids are aligned vertex by vertex
    for j in range(sub, len(ray)):
        img = F(ray[j])
        tgt = other[j - sub]
        assert abs(img - tgt) < 1e-9 * max(1.0, abs(tgt))


def test_equipotential_loop_level_and_closure():
    loop = equipotential_loop(F, 0.9, samples=128)
    assert loop[0] == loop[-1]
    vals = [green_potential(F, z) for z in loop[:: len(loop) // 16]]
    for v in vals:
        assert abs(v - 0.9) < 0.05
    with pytest.raises(ValueError):
        equipotential_loop(F, -1.0)


def test_bubble_ray_structure_and_landing():
    bubbles = grow_bubble_ray(F, count=12, samples=610)
    assert [b.level for b in bubbles] == list(range(1, 13))
    c = siegel_critical_point(F)
    assert abs(bubbles[0].attach - c) < 1e-12
    radii = [float(np.max(np.abs(b.boundary - b.attach))) for b in bubbles]
    for a, b in zip(radii, radii[1:]):
        assert b < a
    for prev, nxt in zip(bubbles, bubbles[1:]):
        # each attaching point is a preimage of the previous one, on the
        # previous boundary
        assert abs(F(nxt.attach) - prev.attach) < 1e-9
        assert float(np.min(np.abs(prev.boundary - nxt.attach))) < 2e-2
        assert abs(nxt.boundary[0] - nxt.attach) < 1e-12
    assert abs(bubbles[-1].attach - BETA) < 1e-4


def test_bubble_boundaries_map_to_previous_bubble():
    bubbles = grow_bubble_ray(F, count=4, samples=610)
    b2, b3 = bubbles[1], bubbles[2]
    imgs = F(b3.boundary[::17])
    for w in imgs:
        assert float(np.min(np.abs(b2.boundary - w))) < 2e-2
