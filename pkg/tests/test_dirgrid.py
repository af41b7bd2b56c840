import math

import numpy as np
import pytest

from pdgeo.dirgrid import (
    DEFAULT_CELL_CAP,
    angle_distance,
    build_grid,
    compose,
    covering_audit,
    givens_decompose,
    givens_matrix,
    grid_resolution,
    nearest_chart,
    random_rotation,
)
from pdgeo.exceptions import DomainError, ResourceError
from pdgeo.horofn import Flat, Horofunction, busemann


def rot2(phi):
    return givens_matrix(2, 0, 1, phi)


def test_decompose_identity():
    assert all(f.angle == 0.0 for f in givens_decompose(np.eye(3)))


def test_decompose_plane_rotation():
    (f,) = givens_decompose(rot2(0.7))
    assert (f.i, f.j) == (0, 1)
    assert f.angle == pytest.approx(0.7, abs=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_decompose_reconstructs(rng, n):
    for _ in range(20):
        q = random_rotation(n, rng)
        np.testing.assert_allclose(compose(givens_decompose(q), n), q, atol=1e-9)


def test_decompose_rejects_reflection():
    with pytest.raises(DomainError):
        givens_decompose(np.diag([1.0, -1.0, 1.0]))


def test_angle_distance_self(rng):
    q = random_rotation(3, rng)
    assert angle_distance(q, q) == pytest.approx(0.0, abs=1e-12)


def test_angle_distance_plane():
    # effective units: twice the rotation angle, modulo the half turn -I
    assert angle_distance(rot2(0.1), rot2(0.4)) == pytest.approx(0.6, abs=1e-12)
    assert angle_distance(rot2(-1.5), rot2(1.5)) == pytest.approx(2 * (math.pi - 3.0), abs=1e-12)
    assert angle_distance(rot2(0.0), rot2(math.pi)) == pytest.approx(0.0, abs=1e-12)


def test_angle_distance_sign_flips_invisible(rng):
    q = random_rotation(3, rng)
    flipped = q * np.array([-1.0, -1.0, 1.0])
    assert angle_distance(q, flipped) == pytest.approx(0.0, abs=1e-12)


def test_angle_distance_subadditive_within_factor(rng):
    for _ in range(50):
        a, b, c = (random_rotation(3, rng) for _ in range(3))
        assert angle_distance(a, c) <= 3 * (angle_distance(a, b) + angle_distance(b, c)) + 1e-12


def test_resolution_examples():
    want = 0.05 / (2 * math.sqrt(2) * math.sinh(1 / math.sqrt(2)))
    assert grid_resolution(0.1, 1.0, 2) == want
    assert grid_resolution(0.1, 1.0, 3) == pytest.approx(want / 3, rel=1e-15)
    assert grid_resolution(0.1, 0.0, 2) == math.inf
    with pytest.raises(DomainError):
        grid_resolution(0.0, 1.0, 2)


def test_grid_single_flat():
    g = build_grid(3, math.inf)
    assert len(g) == 1 and g.cell_count == 1
    assert len(g.chart_rotations()) == 6


def test_grid_quarter_turn():
    g = build_grid(2, math.pi / 2)
    assert g.cell_count == 4
    angles = [f[0].angle for f in g.provenance]
    # Q-angles 0 and pi/2 are the same flat with axes swapped
    assert angles == [0.0, math.pi / 4]


@pytest.mark.parametrize("delta", [0.5, 0.1, 0.0123, 1e-3])
def test_grid_cell_count(delta):
    assert build_grid(2, delta).cell_count == math.ceil(2 * math.pi / delta)


def test_grid_period_audit(rng):
    # a Q-angle shift of pi leaves every Busemann function unchanged
    h = Horofunction(Flat(rot2(0.3)), np.array([0.8, -0.6]))
    h2 = Horofunction(Flat(rot2(0.3 + math.pi)), np.array([0.8, -0.6]))
    p = np.array([[2.0, 0.3], [0.3, 0.7]])
    assert busemann(h, p) == pytest.approx(busemann(h2, p), abs=1e-14)


def test_grid_cap():
    with pytest.raises(ResourceError, match="cap"):
        build_grid(2, 1e-3, cell_cap=100)
    with pytest.raises(ResourceError):
        build_grid(3, 0.01, cell_cap=DEFAULT_CELL_CAP)


def test_grid_flats_are_rotations():
    g = build_grid(3, 1.5)
    for f in g.flats[:50]:
        assert np.linalg.det(f.rotation) == pytest.approx(1.0)


@pytest.mark.parametrize("n,delta,samples", [(2, 0.3, 10_000), (3, 1.5, 200)])
def test_covering(rng, n, delta, samples):
    g = build_grid(n, delta)
    assert covering_audit(g, samples, rng) <= delta


def test_nearest_chart_recovers_grid_member(rng):
    g = build_grid(2, 0.2)
    charts = g.chart_rotations()
    k, d = nearest_chart(g, charts[5])
    assert d == pytest.approx(0.0, abs=1e-12)
