import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbar.errors import ValidationError
from dbar.geometry import (
    StarDomain,
    area_exact,
    area_rule,
    boundary_rule,
    contains,
    make_disk,
    make_ellipse,
)


def test_make_disk_unit():
    d = make_disk(0, 1.0)
    assert d.a0 == 1.0
    assert np.allclose(d.radius(np.linspace(0, 2 * np.pi, 17)), 1.0)
    assert d.contains(0)


def test_make_disk_translated():
    d = make_disk(1 + 2j, 0.5)
    assert d.contains(1 + 2j)
    assert d.contains(1.4 + 2j)
    assert not d.contains(1.6 + 2j)


def test_make_disk_rejects_nonpositive_radius():
    with pytest.raises(ValidationError):
        make_disk(0, -1.0)
    with pytest.raises(ValidationError):
        make_disk(0, 0.0)


def test_ellipse_reduces_to_disk():
    e = make_ellipse(0, 1.0, 1.0)
    theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    assert np.max(np.abs(e.radius(theta) - 1.0)) < 1e-10


def test_ellipse_axis_endpoints():
    e = make_ellipse(0, 2.0, 1.0)
    assert abs(float(e.radius(0.0)) - 2.0) < 1e-10
    assert abs(float(e.radius(np.pi / 2)) - 1.0) < 1e-10


def test_ellipse_area_from_rule():
    e = make_ellipse(0, 2.0, 1.0)
    rule = area_rule(e, 64, 128)
    assert abs(rule.weights.sum() - 2 * np.pi) < 1e-8


def test_ellipse_rejects_nonpositive_axes():
    with pytest.raises(ValidationError):
        make_ellipse(0, 2.0, -0.5)


def test_area_rule_unit_disk_exact():
    d = make_disk(0, 1.0)
    rule = area_rule(d, 64, 64)
    assert abs(rule.weights.sum() - np.pi) < 1e-10
    assert (rule.weights > 0).all()
    assert rule.nodes.size == 64 * 64


def test_area_rule_preconditions():
    d = make_disk(0, 1.0)
    with pytest.raises(ValidationError):
        area_rule(d, 1, 64)
    with pytest.raises(ValidationError):
        area_rule(d, 8, 3)


def test_area_convergence_monotone():
    e = make_ellipse(0, 2.0, 1.0)
    exact = 2 * np.pi
    errs = [abs(area_rule(e, n, n).weights.sum() - exact) for n in (8, 16, 32, 64)]
    for a, b in zip(errs, errs[1:]):
        assert b <= a + 1e-12


def test_boundary_rule_closed_curve():
    d = make_disk(0, 1.0)
    rule = boundary_rule(d, 64)
    assert abs(rule.tangents.sum()) < 1e-12


def test_boundary_rule_winding():
    d = make_disk(0, 1.0)
    rule = boundary_rule(d, 64)
    w = (rule.tangents / rule.nodes).sum() / (2j * np.pi)
    assert abs(w - 1.0) < 1e-10


def test_boundary_rule_precondition():
    with pytest.raises(ValidationError):
        boundary_rule(make_disk(0, 1.0), 4)


def test_ellipse_perimeter_against_dense_arclength():
    e = make_ellipse(0, 2.0, 1.0)
    rule = boundary_rule(e, 128)
    got = np.abs(rule.tangents).sum()
    # independent oracle: polygonal arc length of the exact parametrization
    t = np.linspace(0, 2 * np.pi, 2_000_001)
    pts = 2.0 * np.cos(t) + 1j * np.sin(t)
    ref = np.abs(np.diff(pts)).sum()
    assert abs(ref - 9.688448) < 1e-6
    assert abs(got - ref) < 1e-5


def test_winding_for_wiggly_star_domain():
    d = StarDomain(0.1 + 0.2j, 1.0, (0.1, 0.05), (0.0, -0.08))
    rule = boundary_rule(d, 256)
    rng = np.random.default_rng(2)
    hits = 0
    while hits < 10:
        z = complex(rng.uniform(-1.2, 1.4), rng.uniform(-1.0, 1.3))
        if not d.contains(z, 0.1):
            continue
        hits += 1
        w = (rule.tangents / (rule.nodes - z)).sum() / (2j * np.pi)
        assert abs(w - 1.0) < 1e-8


def test_contains_basic():
    d = make_disk(0, 1.0)
    assert contains(d, 0, 0.0)
    assert not contains(d, 2, 0.0)
    assert not contains(d, 0.95, 0.1)


def test_contains_many_matches_scalar():
    d = StarDomain(0.0j, 1.0, (0.2,), (0.1,))
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1.5, 1.5, 64) + 1j * rng.uniform(-1.5, 1.5, 64)
    vec = d.contains_many(pts, 0.05)
    scal = np.array([d.contains(complex(p), 0.05) for p in pts])
    assert (vec == scal).all()


def test_rotation_equivariance_on_grid_aligned_angle():
    d = StarDomain(0.3 - 0.1j, 1.0, (0.15, 0.0, 0.04), (0.02, -0.03, 0.0))
    ntheta = 32
    phi = 2 * np.pi * 5 / ntheta
    rot = d.rotated(phi)
    a = area_rule(d, 8, ntheta)
    b = area_rule(rot, 8, ntheta)
    got = b.nodes.reshape(8, ntheta)
    want = d.center + np.exp(1j * phi) * (a.nodes.reshape(8, ntheta) - d.center)
    assert np.max(np.abs(got - np.roll(want, 5, axis=1))) < 1e-12


def test_star_domain_requires_positive_radius():
    with pytest.raises(ValidationError):
        StarDomain(0.0j, 0.5, (0.6,), (0.0,))


def test_area_exact_matches_rule():
    d = StarDomain(0.0j, 1.1, (0.2, 0.05), (0.0, 0.1))
    rule = area_rule(d, 64, 256)
    assert abs(rule.weights.sum() - area_exact(d)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.3, 3.0),
    st.floats(-0.2, 0.2),
    st.floats(-0.2, 0.2),
)
def test_weight_positivity_property(a0, a1, b1):
    d = StarDomain(0.0j, a0, (a0 * a1,), (a0 * b1,))
    rule = area_rule(d, 8, 16)
    assert (rule.weights > 0).all()
