import math

import numpy as np
import pytest

from confkit.errors import DimensionError, DomainViolation, NotFound
from confkit.linalg import fd_jacobian
from confkit.maps import (
    builtin,
    compose,
    helical_eval_cylindrical,
    hopf_fiber_circle,
    parse_map,
    registry_listing,
)

ALL_SPECS = [
    builtin("ortho_proj", 3, 2),
    builtin("arctan1d"),
    builtin("torus_fold"),
    builtin("holo_product"),
    builtin("hopf_derived"),
    builtin("helical_proj"),
    builtin("punctured_proj"),
    builtin("contact_adapted", 0.1),
]


def sample_in_domain(spec, rng, count, scale=2.0):
    pts = []
    while len(pts) < count:
        x = rng.uniform(-scale, scale, size=spec.m)
        if spec.in_domain(x):
            pts.append(x)
    return pts


def test_ortho_proj_values():
    f = builtin("ortho_proj", 3, 2)
    assert np.allclose(f(np.array([1.0, 2.0, 3.0])), [1.0, 2.0])


def test_torus_fold_value():
    # y = 0 on the axis point (0, 0, 5): ((2+1)cos 0, (2+1)sin 0, sin 0).
    f = builtin("torus_fold")
    assert np.allclose(f(np.array([0.0, 0.0, 5.0])), [3.0, 0.0, 0.0])


def test_holo_product_value():
    # z1 = 1, z2 = i: product is i -> (0, 1).
    f = builtin("holo_product")
    assert np.allclose(f(np.array([1.0, 0.0, 0.0, 1.0])), [0.0, 1.0])


def test_unknown_name():
    with pytest.raises(NotFound):
        builtin("moebius")


def test_parse_map_syntax():
    f = parse_map("ortho_proj:4,2")
    assert (f.m, f.n) == (4, 2)
    g = parse_map("contact_adapted:0.25")
    assert g.params["eps"] == 0.25


def test_compose_projections():
    f = compose(builtin("ortho_proj", 2, 1), builtin("ortho_proj", 3, 2))
    assert np.allclose(f(np.array([1.0, 2.0, 3.0])), [1.0])


def test_compose_arctan_projection():
    f = compose(builtin("arctan1d"), builtin("ortho_proj", 3, 1))
    assert np.allclose(f(np.array([0.0, 5.0, 5.0])), [0.0])


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionError):
        compose(builtin("ortho_proj", 3, 2), builtin("ortho_proj", 3, 2))


def test_compose_chain_rule_against_finite_differences():
    f = compose(builtin("arctan1d"), builtin("ortho_proj", 3, 1))
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = rng.uniform(-3, 3, size=3)
        analytic = f.jacobian(x)
        numeric = fd_jacobian(f.func, x)
        assert np.linalg.norm(analytic - numeric) <= 1e-8 * max(1.0, np.linalg.norm(analytic))


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.name)
def test_analytic_jacobian_matches_finite_differences(spec):
    assert spec.has_analytic_jacobian
    rng = np.random.default_rng(17)
    for x in sample_in_domain(spec, rng, 100):
        analytic = spec.jacobian(x)
        numeric = fd_jacobian(spec.func, x)
        scale = max(np.linalg.norm(analytic), 1e-12)
        assert np.linalg.norm(analytic - numeric) / scale <= 1e-6


def test_torus_fold_image_bounded():
    f = builtin("torus_fold")
    rng = np.random.default_rng(2)
    for _ in range(500):
        x = rng.uniform(-50, 50, size=3)
        assert np.linalg.norm(f(x)) <= f.image_bound + 1e-12


def test_helical_constant_along_helix_cylindrical():
    pitch = 1.0
    rho, theta, z = 1.7, 0.4, -0.3
    base = helical_eval_cylindrical(pitch, rho, theta, z)
    for t in np.linspace(-20.0, 20.0, 41):
        moved = helical_eval_cylindrical(pitch, rho, theta + t, z + pitch * t / (2 * math.pi))
        assert np.allclose(moved, base, atol=1e-9)


def test_helical_cartesian_constant_modulo_pitch():
    # The Cartesian evaluator uses the principal angle branch, so the
    # half-plane coordinate is defined modulo one pitch across the cut.
    pitch = 1.0
    f = builtin("helical_proj", pitch)
    rng = np.random.default_rng(8)
    for _ in range(25):
        rho = rng.uniform(0.2, 5.0)
        theta = rng.uniform(-math.pi, math.pi)
        z = rng.uniform(-2, 2)
        ref = f(np.array([rho * math.cos(theta), rho * math.sin(theta), z]))
        for t in rng.uniform(-10, 10, size=4):
            th = theta + t
            pt = np.array([rho * math.cos(th), rho * math.sin(th), z + pitch * t / (2 * math.pi)])
            val = f(pt)
            assert abs(val[0] - ref[0]) < 1e-9
            frac = (val[1] - ref[1]) / pitch
            assert abs(frac - round(frac)) < 1e-9


def test_hopf_constant_along_fiber_circles():
    f = builtin("hopf_derived")
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 20:
        p = rng.uniform(-2, 2, size=3)
        if not f.in_domain(p):
            continue
        ref = f(p)
        for q in hopf_fiber_circle(p, n_samples=12):
            if f.in_domain(q):
                assert np.allclose(f(q), ref, atol=1e-9)
        checked += 1


def test_hopf_domain_excludes_unit_circle():
    f = builtin("hopf_derived")
    assert not f.in_domain(np.array([1.0, 0.0, 0.0]))
    assert not f.in_domain(np.array([0.0, -1.0, 0.0]))
    assert f.in_domain(np.array([0.0, 0.0, 0.0]))
    with pytest.raises(DomainViolation):
        f(np.array([1.0, 0.0, 0.0]))


def test_punctured_proj_domain():
    f = builtin("punctured_proj")
    assert not f.in_domain(np.array([0.0, 0.0, 3.0]))
    assert np.allclose(f(np.array([1.0, 2.0, 3.0])), [1.0, 2.0])


def test_contact_adapted_kernel_direction():
    # Kernel of the Jacobian is the line spanned by (0, eps*x, 1).
    eps = 0.1
    f = builtin("contact_adapted", eps)
    rng = np.random.default_rng(31)
    for _ in range(20):
        p = rng.uniform(-2, 2, size=3)
        k = np.array([0.0, eps * p[0], 1.0])
        assert np.allclose(f.jacobian(p) @ k, 0.0, atol=1e-12)


def test_registry_listing_shape():
    listing = registry_listing()
    names = {e["name"].split(":")[0] for e in listing}
    assert {"ortho_proj", "arctan1d", "torus_fold", "holo_product",
            "hopf_derived", "helical_proj", "punctured_proj"} <= names
    for entry in listing:
        assert {"name", "m", "n", "domain", "image_bound"} <= set(entry)


def test_mapspec_rejects_wrong_shape():
    f = builtin("ortho_proj", 3, 2)
    with pytest.raises(DimensionError):
        f(np.array([1.0, 2.0]))
