import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracshape.potentials import (
    Potential,
    coercivity_probe,
    eval_potential,
    lipschitz_bound,
    operator_norm,
    potential_from_dict,
    potential_gradient,
    potential_to_dict,
    rescaled_potential,
)
from fracshape.shapes import RescaleMap

REGISTRY = [
    Potential("power", 2.0),
    Potential("power", 1.0, center=(0.3, 0.0)),
    Potential("power", 3.0, center=(-0.2, 0.5)),
    Potential("quadratic_form", center=(0.1, -0.1), Q=[[2.0, 0.5], [0.5, 1.0]]),
    Potential("shifted_power", 2.0, center=(0.3, 0.0), r_min=0.25),
]

points = st.tuples(st.floats(-3, 3), st.floats(-3, 3))


def test_square_norm():
    assert eval_potential(Potential("power", 2.0), np.array([1.0, 1.0])) == pytest.approx(2.0, rel=1e-15)


def test_shifted_minimizer():
    assert eval_potential(Potential("power", 2.0, center=(0.3, 0.0)), np.array([0.3, 0.0])) == 0.0


def test_rescaled_value():
    g = rescaled_potential(Potential("power", 2.0), RescaleMap(math.pi * 0.25), 0.5)
    assert g(np.array([1.0, 0.0])) == pytest.approx(0.5**2.5, rel=1e-14)


def test_rescaled_small_sigma():
    g = rescaled_potential(Potential("power", 2.0), RescaleMap(math.pi * 0.01), 0.5)
    x = np.array([0.7, -0.2])
    assert g(x) == pytest.approx(10**-2.5 * 0.53, rel=1e-13)


def test_rescaled_identity():
    base = Potential("quadratic_form", Q=[[1.0, 0.2], [0.2, 3.0]])
    g = rescaled_potential(base, RescaleMap(math.pi), 0.4)
    pts = np.random.default_rng(0).uniform(-2, 2, size=(100, 2))
    np.testing.assert_allclose(g(pts), base(pts), rtol=1e-14)


def test_lipschitz_examples():
    assert lipschitz_bound(Potential("power", 2.0), 2.0) == pytest.approx(4.0)
    assert lipschitz_bound(Potential("power", 1.0), 5.0) == 1.0
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    expected = 2 * np.linalg.eigvalsh(Q).max() * 1.5
    assert lipschitz_bound(Potential("quadratic_form", Q=Q), 1.5) == pytest.approx(expected, rel=1e-12)


def test_operator_norm_matches_eigenvalues():
    Q = np.array([[3.0, 1.0], [1.0, 2.0]])
    assert operator_norm(Q) == pytest.approx(np.abs(np.linalg.eigvalsh(Q)).max(), rel=1e-12)


@pytest.mark.parametrize("g", REGISTRY, ids=lambda g: g.kind + str(g.p))
def test_nonnegative_and_attains_zero(g):
    pts = np.random.default_rng(1).uniform(-5, 5, size=(2000, 2))
    assert np.all(g(pts) >= 0)
    assert g(g.center) == 0.0


@pytest.mark.parametrize("g", REGISTRY, ids=lambda g: g.kind + str(g.p))
def test_coercive(g):
    assert coercivity_probe(g)


@pytest.mark.parametrize("g", REGISTRY, ids=lambda g: g.kind + str(g.p))
def test_lipschitz_on_random_pairs(g):
    R = 2.5
    rng = np.random.default_rng(2)
    r = R * np.sqrt(rng.uniform(size=(2, 10000)))
    t = rng.uniform(0, 2 * np.pi, size=(2, 10000))
    x = np.stack([r[0] * np.cos(t[0]), r[0] * np.sin(t[0])], -1)
    y = np.stack([r[1] * np.cos(t[1]), r[1] * np.sin(t[1])], -1)
    L = lipschitz_bound(g, R)
    assert np.all(np.abs(g(x) - g(y)) <= L * np.linalg.norm(x - y, axis=1) * (1 + 1e-12))


@pytest.mark.parametrize("g", REGISTRY, ids=lambda g: g.kind + str(g.p))
@given(points)
def test_gradient_matches_differences(g, p):
    x = np.array(p)
    if g.kind == "shifted_power" and abs(np.linalg.norm(x - g.center) - g.r_min) < 1e-3:
        return
    if np.linalg.norm(x - g.center) < 1e-3:
        return
    h = 1e-6
    fd = np.array([(g(x + h * e) - g(x - h * e)) / (2 * h) for e in np.eye(2)])
    np.testing.assert_allclose(potential_gradient(g, x), fd, rtol=1e-5, atol=1e-6)


@given(points, st.floats(1e-3, 10), st.floats(0.05, 0.95), points)
def test_rescaling_identity(p, m, s, xm):
    base = Potential("power", 2.0, center=(0.3, 0.0))
    rmap = RescaleMap(m, xm)
    g = rescaled_potential(base, rmap, s)
    x = np.array(p)
    expected = rmap.sigma**s * base(rmap.sigma * x + np.array(xm))
    assert g(x) == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_rescaled_sup_decreases_with_m():
    base = Potential("power", 2.0)
    th = np.linspace(0, 2 * np.pi, 64)
    ring = np.stack([np.cos(th), np.sin(th)], -1)
    sups = [rescaled_potential(base, RescaleMap(m), 0.5)(ring).max() for m in (3.0, 1.0, 0.3, 0.1)]
    assert all(b < a for a, b in zip(sups, sups[1:]))


def test_dict_roundtrip():
    for g in REGISTRY:
        h = potential_from_dict({"potential": potential_to_dict(g)})
        pts = np.random.default_rng(3).uniform(-2, 2, size=(50, 2))
        np.testing.assert_array_equal(h(pts), g(pts))


def test_config_fragment():
    g = potential_from_dict({"potential": {"kind": "power", "p": 2, "center": [0.3, 0]}})
    assert g(np.array([0.3, 0.0])) == 0.0


@pytest.mark.parametrize("bad", [
    {"kind": "sine"},
    {"kind": "power", "p": 0.5},
    {"kind": "quadratic_form", "Q": [[1, 0], [0, -1]]},
    {"kind": "power", "shift": 1},
])
def test_rejects_invalid(bad):
    with pytest.raises(ValueError):
        potential_from_dict(bad)


def test_radial_flag():
    assert Potential("power", 2.0).is_radial
    assert not Potential("quadratic_form", Q=[[1, 0], [0, 4]]).is_radial
