import math

import numpy as np
import pytest

from confkit.distribution import (
    ESCAPED,
    LiftOptions,
    angle_regularity,
    coframe_from_map,
    contact_coframe,
    frame_at,
    frobenius_residual,
    holonomy_defect,
    lift_path,
    lift_vector,
    parse_coframe,
    tangent_plane_deviation,
    vertical_coframe,
)
from confkit.errors import (
    BadStart,
    InvalidInput,
    SingularPoint,
    Unsupported,
)
from confkit.linalg import rk4_step
from confkit.maps import builtin
from confkit.paths import circle, concatenate, rectangle, reverse, segment

PITCH_C = 1.0 / (2.0 * math.pi)  # pitch-1 helices rise this much per radian


def test_frame_projection():
    f = builtin("ortho_proj", 3, 2)
    frame = frame_at(f, np.array([2.0, -1.0, 5.0]))
    # plane spans e1, e2; fiber is e3 with the positive-sign convention
    assert np.allclose(np.abs(frame.plane.T @ np.eye(3)[:, :2]), np.eye(2), atol=1e-12)
    assert np.allclose(frame.fiber[:, 0], [0.0, 0.0, 1.0])


def test_frame_helical_fiber_tangent_to_helix():
    f = builtin("helical_proj")
    rng = np.random.default_rng(4)
    for _ in range(20):
        x, y, z = rng.uniform(-3, 3, size=3)
        if x * x + y * y < 0.04:
            continue
        p = np.array([x, y, z])
        frame = frame_at(f, p)
        helix_tangent = np.array([-y, x, PITCH_C])
        helix_tangent /= np.linalg.norm(helix_tangent)
        assert np.linalg.norm(f.jacobian(p) @ helix_tangent) < 1e-9
        assert abs(abs(frame.fiber[:, 0] @ helix_tangent) - 1.0) < 1e-9


def test_frame_rejects_rank_deficiency():
    with pytest.raises(SingularPoint):
        frame_at(builtin("torus_fold"), np.array([0.1, 0.2, 0.3]))


def integrate_fiber(spec, start, length, steps):
    # Follow the kernel line field with RK4, keeping a consistent orientation.
    x = np.asarray(start, dtype=float)
    prev = None
    h = length / steps
    for _ in range(steps):
        ref = frame_at(spec, x).fiber[:, 0]
        if prev is not None and ref @ prev < 0:
            ref = -ref

        def field(_, y, ref=ref):
            v = frame_at(spec, y).fiber[:, 0]
            return -v if v @ ref < 0 else v

        x = rk4_step(field, 0.0, x, h)
        prev = ref
    return x


def test_hopf_fiber_curves_project_to_points():
    f = builtin("hopf_derived")
    rng = np.random.default_rng(12)
    done = 0
    while done < 5:
        p = rng.uniform(-1.5, 1.5, size=3)
        if not f.in_domain(p):
            continue
        q = integrate_fiber(f, p, length=1.0, steps=200)
        assert np.linalg.norm(f(q) - f(p)) < 1e-5
        done += 1


def test_frobenius_vertical_coframe_integrable():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.uniform(-5, 5, size=3)
        assert frobenius_residual(vertical_coframe(), x) <= 1e-8


def test_frobenius_contact_analytic():
    # Analytic oracle: d(omega) = eps dx^dy before normalization, so the
    # normalized residual is eps / (1 + (eps x)^2).
    eps = 0.1
    cf = contact_coframe(eps)
    assert abs(frobenius_residual(cf, np.zeros(3)) - eps) < 1e-6
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = rng.uniform(-4, 4, size=3)
        expected = eps / (1.0 + (eps * x[0]) ** 2)
        assert abs(frobenius_residual(cf, x) - expected) < 1e-5


def test_frobenius_helical_analytic():
    # Annihilator -y dx + x dy + c dz has omega^d(omega) = 2c dx^dy^dz, so the
    # normalized residual is 2c / (rho^2 + c^2).
    f = builtin("helical_proj")
    cf = coframe_from_map(f)
    rng = np.random.default_rng(6)
    for _ in range(20):
        p = rng.uniform(-3, 3, size=3)
        rho2 = p[0] ** 2 + p[1] ** 2
        if rho2 < 0.25:
            continue
        expected = 2.0 * PITCH_C / (rho2 + PITCH_C ** 2)
        assert abs(frobenius_residual(cf, p) - expected) < 1e-5


def test_frobenius_hopf_nonintegrable():
    f = builtin("hopf_derived")
    rng = np.random.default_rng(7)
    count = 0
    while count < 100:
        p = rng.uniform(-2, 2, size=3)
        if not f.in_domain(p):
            continue
        assert frobenius_residual(f, p) >= 1e-3
        count += 1


def test_frobenius_unsupported_dimensions():
    with pytest.raises(Unsupported):
        frobenius_residual(builtin("holo_product"), np.zeros(4))


def test_parse_coframe():
    assert parse_coframe("dz").name == "dz"
    assert parse_coframe("contact:0.2").name == "contact:0.2"
    with pytest.raises(InvalidInput):
        parse_coframe("weird")


def test_lift_vector_projection():
    f = builtin("ortho_proj", 3, 2)
    v = lift_vector(f, np.array([0.0, 0.0, 7.0]), np.array([1.0, 0.0]))
    assert np.allclose(v, [1.0, 0.0, 0.0])


def test_lift_vector_pushforward_roundtrip():
    rng = np.random.default_rng(9)
    for name in ("helical_proj", "hopf_derived", "contact_adapted"):
        f = builtin(name)
        for _ in range(20):
            x = rng.uniform(-2, 2, size=3)
            if not f.in_domain(x) or (name == "helical_proj" and x[0] ** 2 + x[1] ** 2 < 0.1):
                continue
            v = rng.normal(size=2)
            lifted = lift_vector(f, x, v)
            assert np.linalg.norm(f.jacobian(x) @ lifted - v) <= 1e-10 * max(1.0, np.linalg.norm(v))
            fiber = frame_at(f, x).fiber
            assert np.linalg.norm(fiber.T @ lifted) <= 1e-8 * max(1.0, np.linalg.norm(lifted))


def test_lift_vector_with_contact_coframe():
    # Solving omega(v~) = 0 by hand: lifting (0, 1) at x0 gives dz/dy = -eps*x0.
    eps = 0.1
    cf = contact_coframe(eps)
    for x0 in (-2.0, 0.5, 3.0):
        v = lift_vector(cf.base_map, np.array([x0, 1.0, 2.0]), np.array([0.0, 1.0]), coframe=cf)
        assert np.allclose(v, [0.0, 1.0, -eps * x0], atol=1e-12)


def test_lift_path_projection_straight():
    f = builtin("ortho_proj", 3, 2)
    lifted = lift_path(f, segment([0.0, 0.0], [1.0, 0.0]), np.array([0.0, 0.0, 4.0]))
    assert lifted.completed
    assert np.allclose(lifted.endpoint, [1.0, 0.0, 4.0], atol=1e-12)
    assert lifted.roundtrip_error(f) <= 1e-8
    # every intermediate point keeps the constant fiber coordinate
    assert np.allclose(lifted.points[:, 2], 4.0, atol=1e-12)


def test_lift_path_bad_start():
    f = builtin("ortho_proj", 3, 2)
    with pytest.raises(BadStart):
        lift_path(f, segment([0.0, 0.0], [1.0, 0.0]), np.array([0.5, 0.0, 4.0]))


def test_lift_path_punctured_radial_stays_bounded():
    f = builtin("punctured_proj")
    lifted = lift_path(f, segment([1.0, 0.0], [1e-3, 0.0]), np.array([1.0, 0.0, 0.0]))
    assert lifted.completed
    assert np.allclose(lifted.endpoint, [1e-3, 0.0, 0.0], atol=1e-9)
    assert np.max(np.linalg.norm(lifted.points, axis=1)) <= 1.0 + 1e-9


def test_lift_path_escape_detection():
    f = builtin("ortho_proj", 3, 2)
    lifted = lift_path(f, segment([0.0, 0.0], [20.0, 0.0]), np.array([0.0, 0.0, 4.0]),
                       opts=LiftOptions(r_max=5.0))
    assert lifted.status == ESCAPED
    # ||(20t, 0, 4)|| crosses 5 at t = 0.15
    assert 0.14 <= lifted.t_stop <= 0.17


def test_lift_path_helical_circle_and_holonomy_agree():
    f = builtin("helical_proj")
    loop = circle([5.0, 0.0], 1.0, start_angle=0.0)
    start = np.array([6.0, 0.0, 0.0])
    lifted = lift_path(f, loop, start, n_steps=400)
    assert lifted.completed
    gap = lifted.endpoint - start
    defect = holonomy_defect(f, loop, start, n_steps=400)
    assert np.allclose(gap, defect, atol=1e-12)
    assert np.linalg.norm(defect) > 1e-6  # nonintegrable plane field
    assert lifted.roundtrip_error(f) <= 1e-8
    assert tangent_plane_deviation(f, lifted) < 0.05


def test_holonomy_vertical_zero():
    defect = holonomy_defect(vertical_coframe(), rectangle([0.3, -1.0], 2.0, 1.5),
                             np.array([0.3, -1.0, 0.7]))
    assert np.linalg.norm(defect) <= 1e-8


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.0, 3.0), (0.5, 0.5)])
def test_holonomy_contact_rectangles(a, b):
    # Green's theorem oracle: z-defect = -eps * integral x dy = -eps * a * b.
    eps = 0.1
    cf = contact_coframe(eps)
    defect = holonomy_defect(cf, rectangle([0.0, 0.0], a, b), np.array([0.0, 0.0, 0.0]))
    area = a * b
    assert abs(defect[2] + eps * area) <= 1e-4 * area
    assert np.allclose(defect[:2], 0.0, atol=1e-10)


def test_holonomy_reversal_negates():
    cf = contact_coframe(0.1)
    loop = rectangle([0.2, 0.1], 1.3, 0.8)
    start = np.array([0.2, 0.1, 0.0])
    fwd = holonomy_defect(cf, loop, start)
    bwd = holonomy_defect(cf, reverse(loop), start)
    assert np.allclose(fwd + bwd, 0.0, atol=1e-8)


def test_holonomy_additive_over_concatenation():
    eps = 0.1
    cf = contact_coframe(eps)
    left = rectangle([0.0, 0.0], 1.0, 1.0)
    right = rectangle([1.0, 0.0], 0.7, 1.0)
    big = rectangle([0.0, 0.0], 1.7, 1.0)
    d_left = holonomy_defect(cf, left, np.array([0.0, 0.0, 0.0]))
    d_right = holonomy_defect(cf, right, np.array([1.0, 0.0, 0.0]))
    d_big = holonomy_defect(cf, big, np.array([0.0, 0.0, 0.0]))
    assert abs(d_big[2] - (d_left[2] + d_right[2])) <= 1e-8


def test_holonomy_contact_circle_rk4_order():
    # Smooth loop with an exact answer (-eps * pi * R^2); the fiber component
    # is untouched by the projection correction, so halving the step must
    # shrink the endpoint error at the RK4 rate (>= 4x, typically ~16x).
    eps = 0.1
    cf = contact_coframe(eps)
    loop = circle([1.5, 0.0], 1.0)
    start = np.array([2.5, 0.0, 0.0])
    exact = -eps * math.pi
    errors = []
    for steps in (32, 64, 128):
        defect = holonomy_defect(cf, loop, start, n_steps=steps)
        errors.append(abs(defect[2] - exact))
    assert errors[0] / errors[1] >= 4.0
    assert errors[1] / errors[2] >= 4.0


def test_holonomy_scaling_tracks_integrability_residual():
    # Vanishing residual forces defects to vanish faster than the loop area;
    # a positive residual makes defect/area converge to it (at the anchor).
    sides = (0.4, 0.2, 0.1, 0.05)
    for side in sides:
        defect = holonomy_defect(vertical_coframe(), rectangle([0.0, 0.0], side, side),
                                 np.array([0.0, 0.0, 0.0]))
        assert np.linalg.norm(defect) <= 1e-10 * side * side

    eps = 0.1
    cf = contact_coframe(eps)
    residual_at_origin = frobenius_residual(cf, np.zeros(3))
    ratios = []
    for side in sides:
        defect = holonomy_defect(cf, rectangle([-side / 2, 0.0], side, side),
                                 np.array([-side / 2, 0.0, 0.0]))
        ratios.append(np.linalg.norm(defect) / (side * side))
    for ratio in ratios:
        assert abs(ratio - residual_at_origin) <= 0.05 * residual_at_origin


def test_holonomy_requires_closed_loop():
    cf = contact_coframe(0.1)
    with pytest.raises(InvalidInput):
        holonomy_defect(cf, segment([0.0, 0.0], [1.0, 0.0]), np.array([0.0, 0.0, 0.0]))


def test_concatenate_paths_used_for_loops():
    up = segment([0.0, 0.0], [1.0, 0.0])
    down = segment([1.0, 0.0], [2.0, 0.0])
    joined = concatenate(up, down)
    assert np.allclose(joined.point(1.0), [2.0, 0.0])


def test_angle_regularity_projection_never_deviates():
    f = builtin("ortho_proj", 3, 2)
    table = angle_regularity(f, [1.0, 5.0], probe_count=50, seed=0)
    assert all(math.isinf(delta) for _, delta in table)


def test_angle_regularity_contact_matches_analytic_scale():
    # Normals (0, eps*x, 1): two probes deviate by more than eps_angle only
    # when |atan(eps x1) - atan(eps x2)| > eps_angle, so the closest violating
    # pair distance is at least (2/eps) tan(eps_angle / 2) ~ 1.0008.
    f = builtin("contact_adapted", 0.1)
    d_true = (2.0 / 0.1) * math.tan(0.05)
    table = angle_regularity(f, [2.0, 5.0, 10.0], probe_count=400, eps_angle=0.1, seed=3)
    deltas = [d for _, d in table]
    assert all(deltas[i] >= deltas[i + 1] - 1e-12 for i in range(len(deltas) - 1))
    assert math.isfinite(deltas[-1])
    assert d_true - 1e-9 <= deltas[-1] <= 1.6


def test_angle_regularity_hopf_monotone():
    f = builtin("hopf_derived")
    table = angle_regularity(f, [1.0, 5.0, 10.0], probe_count=200, seed=1)
    deltas = [d for _, d in table]
    assert all(deltas[i] >= deltas[i + 1] - 1e-12 for i in range(len(deltas) - 1))
