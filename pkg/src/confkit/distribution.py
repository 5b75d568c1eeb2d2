"""Induced plane fields, integrability and holonomy tests, horizontal lifting.

A nowhere degenerate map F: R^m -> R^n induces the field of n-planes
orthogonal to the kernel of its tangent map. Vectors and paths in the image
lift uniquely through those planes; lifting a closed loop measures the
holonomy defect, and the normalized annihilating 1-form (m=3, n=2) feeds
the integrability residual |omega ^ d(omega)|.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .analysis import RANK_TOL
from .errors import (
    BadStart,
    DomainViolation,
    InvalidInput,
    LiftIncomplete,
    SingularPoint,
    Unsupported,
)
from .linalg import default_fd_step, svd
from .maps import MapSpec, builtin
from .paths import BasePath

COMPLETED = "completed"
ESCAPED = "escaped"
HIT_SINGULAR = "hit_singular"
STEP_COLLAPSE = "step_collapse"


@dataclass(frozen=True)
class DistributionFrame:
    """Orthonormal plane/fiber split of R^m at a point: plane spans the
    orthogonal complement of ker F', fiber spans ker F' itself."""

    point: np.ndarray
    plane: np.ndarray  # (m, n) columns
    fiber: np.ndarray  # (m, m-n) columns


def frame_at(spec: MapSpec, x) -> DistributionFrame:
    """Plane and fiber frames from the right singular frame of F'(x)."""
    x = np.asarray(x, dtype=float)
    jac = spec.jacobian(x)
    res = svd(jac)
    sigma = res.singular_values
    top = sigma[0] if len(sigma) else 0.0
    if top <= 0 or sigma[min(spec.n, len(sigma)) - 1] <= RANK_TOL * top or len(sigma) < spec.n:
        raise SingularPoint(f"{spec.name}: rank below {spec.n} at {x.tolist()}")
    frame = res.right_frame
    return DistributionFrame(point=x, plane=frame[:, : spec.n].copy(),
                             fiber=frame[:, spec.n:].copy())


@dataclass(frozen=True)
class CoframeField:
    """A 1-form field annihilating a plane distribution in R^3, together with
    the base map whose image coordinates paths are written in."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    base_map: MapSpec
    m: int = 3
    n: int = 2


def vertical_coframe() -> CoframeField:
    """omega = dz: the integrable horizontal-plane field."""
    return CoframeField(
        name="dz",
        value=lambda x: np.array([0.0, 0.0, 1.0]),
        base_map=builtin("ortho_proj", 3, 2),
    )


def contact_coframe(eps: float = 0.1) -> CoframeField:
    """omega = dz + eps * x dy: completely nonintegrable for eps != 0."""
    eps = float(eps)
    return CoframeField(
        name=f"contact:{eps:g}",
        value=lambda x: np.array([0.0, eps * x[0], 1.0]),
        base_map=builtin("ortho_proj", 3, 2),
    )


def coframe_from_map(spec: MapSpec) -> CoframeField:
    """Unit kernel covector of a map R^3 -> R^2 (sign fixed per point by the
    frame convention; callers differentiating it must align signs locally)."""
    if spec.m != 3 or spec.n != 2:
        raise Unsupported("coframe extraction needs m=3, n=2")

    def value(x):
        return frame_at(spec, x).fiber[:, 0]

    return CoframeField(name=f"ker'({spec.name})", value=value, base_map=spec)


def _as_coframe(src) -> CoframeField:
    if isinstance(src, CoframeField):
        return src
    if isinstance(src, MapSpec):
        return coframe_from_map(src)
    raise InvalidInput("expected a MapSpec or a CoframeField")


def parse_coframe(text: str) -> CoframeField:
    """Parse 'dz' or 'contact:0.1' micro-syntax."""
    name, _, rest = text.partition(":")
    name = name.strip()
    if name == "dz":
        return vertical_coframe()
    if name == "contact":
        return contact_coframe(float(rest) if rest else 0.1)
    raise InvalidInput(f"unknown coframe '{text}' (use dz or contact:<eps>)")


def frobenius_residual(src: Union[MapSpec, CoframeField], x, h: Optional[float] = None) -> float:
    """|omega ^ d(omega)| at x for the normalized annihilating 1-form; zero
    (within tolerance) exactly when the plane field is integrable at x.

    Only the m=3, n=2 single-coframe case is supported; derivatives come from
    central differences of the locally sign-aligned normalized coframe.
    """
    om = _as_coframe(src)
    if om.m != 3 or om.n != 2:
        raise Unsupported("integrability residual implemented for m=3, n=2 only")
    x = np.asarray(x, dtype=float)
    w0 = np.asarray(om.value(x), dtype=float)
    norm0 = np.linalg.norm(w0)
    if norm0 <= 0:
        raise SingularPoint("coframe vanished")
    w0 = w0 / norm0

    def aligned(y):
        w = np.asarray(om.value(y), dtype=float)
        w = w / np.linalg.norm(w)
        return -w if w @ w0 < 0 else w

    if h is None:
        h = default_fd_step(x)
    grad = np.zeros((3, 3))  # grad[i, j] = d omega_j / d x_i
    for i in range(3):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (aligned(xp) - aligned(xm)) / (2.0 * h)
    d = grad - grad.T  # d[i, j] = (d omega)(e_i, e_j)
    triple = w0[0] * d[1, 2] - w0[1] * d[0, 2] + w0[2] * d[0, 1]
    return abs(float(triple))


# ---------------------------------------------------------------------------
# Horizontal lifting


def _solve_sym(g, rhs):
    # Small symmetric positive-definite solve; 2x2 gets the closed form.
    if g.shape == (2, 2):
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        if det == 0.0:
            raise SingularPoint("degenerate tangent Gram matrix")
        return np.array([
            (g[1, 1] * rhs[0] - g[0, 1] * rhs[1]) / det,
            (g[0, 0] * rhs[1] - g[1, 0] * rhs[0]) / det,
        ])
    try:
        return np.linalg.solve(g, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularPoint(str(exc)) from exc


def _gram_rank_ok(g):
    # Eigenvalue ratio test of J J^T against the global rank tolerance.
    if g.shape == (2, 2):
        tr = g[0, 0] + g[1, 1]
        disc = math.sqrt(max((g[0, 0] - g[1, 1]) ** 2 + 4.0 * g[0, 1] ** 2, 0.0))
        lam_max = 0.5 * (tr + disc)
        lam_min = 0.5 * (tr - disc)
    else:
        w = np.linalg.eigvalsh(g)
        lam_min, lam_max = w[0], w[-1]
    return lam_max > 0.0 and lam_min > (RANK_TOL ** 2) * lam_max


def lift_vector(spec: MapSpec, x, v, coframe: Optional[CoframeField] = None) -> np.ndarray:
    """The unique horizontal vector at x pushing forward to v.

    Without a coframe the horizontal plane is the orthogonal complement of
    ker F'(x) and the lift is J^T (J J^T)^{-1} v. With a coframe the plane is
    ker(omega) and the square system [J; omega] w = [v; 0] is solved.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    jac = spec.jacobian(x)
    if coframe is None:
        gram = jac @ jac.T
        if not _gram_rank_ok(gram):
            raise SingularPoint(f"{spec.name}: rank below {spec.n} at {x.tolist()}")
        return jac.T @ _solve_sym(gram, v)
    row = np.asarray(coframe.value(x), dtype=float)
    system = np.vstack([jac, row])
    rhs = np.concatenate([v, [0.0]])
    try:
        out = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularPoint(str(exc)) from exc
    if not np.all(np.isfinite(out)):
        raise SingularPoint("non-finite lift")
    return out


@dataclass(frozen=True)
class LiftOptions:
    step: Optional[float] = None  # arc-length step; default 1e-2 of path length
    lift_tol: float = 1e-8
    r_max: float = 1e6
    max_newton: int = 12
    max_halvings: int = 30


@dataclass
class LiftedPath:
    """A polyline covering a base path, with termination bookkeeping."""

    ts: np.ndarray
    points: np.ndarray  # (k, m)
    base: BasePath
    status: str
    t_stop: Optional[float] = None
    message: str = ""

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]

    def roundtrip_error(self, spec: MapSpec) -> float:
        worst = 0.0
        for t, p in zip(self.ts, self.points):
            worst = max(worst, float(np.linalg.norm(spec(p) - self.base.point(t))))
        return worst


class _LiftFailure(Exception):
    def __init__(self, kind, message=""):
        self.kind = kind
        self.message = message


class _Lifter:
    def __init__(self, spec, base, opts, coframe=None):
        self.spec = spec
        self.base = base
        self.opts = opts
        self.coframe = coframe

    def _velocity(self, x, t, left=False):
        return lift_vector(self.spec, x, self.base.vel(t, left=left), self.coframe)

    def _correct(self, x, t):
        # Newton steps within the horizontal plane pin F(x) to base(t).
        target = self.base.point(t)
        for _ in range(self.opts.max_newton):
            err = self.spec(x) - target
            if np.linalg.norm(err) <= 0.5 * self.opts.lift_tol:
                return x
            x = x - lift_vector(self.spec, x, err, self.coframe)
        err = np.linalg.norm(self.spec(x) - target)
        if err <= self.opts.lift_tol:
            return x
        raise _LiftFailure(STEP_COLLAPSE, f"projection correction stalled at t={t:g}")

    def _rk4(self, x, t0, t1):
        # The t1 stage uses the left velocity limit so steps ending on a
        # path knot stay inside their own smooth piece.
        h = t1 - t0
        tm = t0 + 0.5 * h
        k1 = self._velocity(x, t0)
        k2 = self._velocity(x + 0.5 * h * k1, tm)
        k3 = self._velocity(x + 0.5 * h * k2, tm)
        k4 = self._velocity(x + h * k3, t1, left=True)
        return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def advance(self, x, t0, t1, depth=0):
        # One corrected step, recursively halved on any local failure.
        try:
            return self._correct(self._rk4(x, t0, t1), t1)
        except (DomainViolation, SingularPoint) as exc:
            if depth >= self.opts.max_halvings:
                raise _LiftFailure(HIT_SINGULAR, str(exc))
        except _LiftFailure:
            if depth >= self.opts.max_halvings:
                raise
        tm = 0.5 * (t0 + t1)
        if not tm > t0 or not t1 > tm:
            raise _LiftFailure(STEP_COLLAPSE, f"parameter step underflow at t={t0:g}")
        x = self.advance(x, t0, tm, depth + 1)
        return self.advance(x, tm, t1, depth + 1)


def _parameter_grid(base: BasePath, opts: LiftOptions, n_steps: Optional[int]):
    knots = np.asarray(base.knots, dtype=float)
    if n_steps is not None:
        total = int(n_steps)
        length_per = np.diff(knots)
        grid = [0.0]
        for a, b, frac in zip(knots[:-1], knots[1:], length_per / length_per.sum()):
            k = max(1, int(round(total * frac)))
            grid.extend(np.linspace(a, b, k + 1)[1:].tolist())
        return np.asarray(grid)
    length = base.length()
    step = opts.step if opts.step is not None else max(length, 1e-12) * 1e-2
    grid = [0.0]
    for a, b in zip(knots[:-1], knots[1:]):
        pts = np.array([base.point(t) for t in np.linspace(a, b, 9)])
        piece = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
        k = max(1, int(math.ceil(piece / step)))
        grid.extend(np.linspace(a, b, k + 1)[1:].tolist())
    return np.asarray(grid)


def lift_path(
    spec: MapSpec,
    base: BasePath,
    start,
    opts: LiftOptions = LiftOptions(),
    coframe: Optional[CoframeField] = None,
    n_steps: Optional[int] = None,
) -> LiftedPath:
    """Horizontal lift of a base path from a covering start point.

    RK4 on the horizontal velocity field with a per-step Newton correction
    keeping F(x) on the base path to within lift_tol. The lift stops with an
    explicit status when it leaves the ball of radius r_max (escape), loses
    Jacobian rank, or the adaptive step collapses.
    """
    if base.dim != spec.n:
        raise InvalidInput(f"base path lives in R^{base.dim}, map image is R^{spec.n}")
    start = np.asarray(start, dtype=float)
    try:
        gap = float(np.linalg.norm(spec(start) - base.point(0.0)))
    except DomainViolation as exc:
        raise BadStart(str(exc)) from exc
    if gap > max(opts.lift_tol, 1e-9):
        raise BadStart(f"start covers base(0) only to {gap:.3e}")

    grid = _parameter_grid(base, opts, n_steps)
    lifter = _Lifter(spec, base, opts, coframe)
    ts = [0.0]
    points = [start.copy()]
    x = start.copy()
    for t0, t1 in zip(grid[:-1], grid[1:]):
        try:
            x = lifter.advance(x, float(t0), float(t1))
        except _LiftFailure as failure:
            return LiftedPath(np.asarray(ts), np.asarray(points), base,
                              status=failure.kind, t_stop=float(t0), message=failure.message)
        ts.append(float(t1))
        points.append(x.copy())
        if np.linalg.norm(x) > opts.r_max:
            return LiftedPath(np.asarray(ts), np.asarray(points), base,
                              status=ESCAPED, t_stop=float(t1),
                              message=f"left the ball of radius {opts.r_max:g}")
    return LiftedPath(np.asarray(ts), np.asarray(points), base, status=COMPLETED)


def holonomy_defect(
    src: Union[MapSpec, CoframeField],
    loop: BasePath,
    start,
    opts: LiftOptions = LiftOptions(),
    n_steps: Optional[int] = None,
) -> np.ndarray:
    """Endpoint displacement of the horizontal lift of a closed base loop."""
    if isinstance(src, CoframeField):
        spec, coframe = src.base_map, src
    else:
        spec, coframe = src, None
    if np.linalg.norm(loop.point(1.0) - loop.point(0.0)) > 1e-12:
        raise InvalidInput("holonomy needs a closed loop (endpoints within 1e-12)")
    lifted = lift_path(spec, loop, start, opts=opts, coframe=coframe, n_steps=n_steps)
    if not lifted.completed:
        raise LiftIncomplete(f"loop lift ended with status {lifted.status}", status=lifted.status)
    return lifted.endpoint - np.asarray(start, dtype=float)


# ---------------------------------------------------------------------------
# Distribution regularity


def tangent_plane_deviation(spec: MapSpec, lifted: LiftedPath) -> float:
    """Largest angle between lifted segments and the horizontal plane."""
    worst = 0.0
    for p0, p1 in zip(lifted.points[:-1], lifted.points[1:]):
        d = p1 - p0
        norm = np.linalg.norm(d)
        if norm <= 1e-15:
            continue
        mid = 0.5 * (p0 + p1)
        fiber = frame_at(spec, mid).fiber
        off = np.linalg.norm(fiber.T @ d) / norm
        worst = max(worst, math.asin(min(1.0, off)))
    return worst


def angle_regularity(
    spec: MapSpec,
    radii,
    probe_count: int = 300,
    eps_angle: float = 0.1,
    seed: int = 0,
    center=None,
):
    """Empirical regularity scale of the plane field per ball radius.

    For each radius r the estimate is the smallest distance between two
    in-ball probes whose plane normals deviate by more than eps_angle; pairs
    closer than the estimate were never observed to deviate that much. Balls
    are nested (one probe cloud, filtered by radius), so the table is
    monotone nonincreasing; inf marks radii with no deviating pair at all.
    """
    radii = sorted(float(r) for r in np.atleast_1d(radii))
    if not radii or probe_count < 2:
        raise InvalidInput("need at least one radius and two probes")
    center = np.zeros(spec.m) if center is None else np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    r_out = radii[-1]

    probes = []
    normals = []
    attempts = 0
    while len(probes) < probe_count and attempts < 50 * probe_count:
        attempts += 1
        direction = rng.normal(size=spec.m)
        direction /= np.linalg.norm(direction)
        p = center + direction * r_out * rng.uniform() ** (1.0 / spec.m)
        if not spec.in_domain(p):
            continue
        try:
            frame = frame_at(spec, p)
        except SingularPoint:
            continue
        probes.append(p)
        if spec.m - spec.n == 1:
            normals.append(frame.fiber[:, 0])
        else:
            normals.append(frame.plane)
    if len(probes) < 2:
        raise InvalidInput("could not place enough in-domain probes")
    probes = np.asarray(probes)

    if spec.m - spec.n == 1:
        nm = np.asarray(normals)
        cosines = np.abs(nm @ nm.T)
        dev = np.arccos(np.clip(cosines, -1.0, 1.0))
    else:
        k = len(probes)
        dev = np.zeros((k, k))
        for i in range(k):
            for j in range(i + 1, k):
                sig = svd(normals[i].T @ normals[j]).singular_values
                dev[i, j] = dev[j, i] = math.acos(min(1.0, float(sig[-1])))

    dist = np.linalg.norm(probes[:, None, :] - probes[None, :, :], axis=2)
    r_from_center = np.linalg.norm(probes - center, axis=1)

    table = []
    for r in radii:
        inside = r_from_center <= r
        if inside.sum() < 2:
            table.append((r, math.inf))
            continue
        sub_dev = dev[np.ix_(inside, inside)]
        sub_dist = dist[np.ix_(inside, inside)]
        mask = np.triu(sub_dev > eps_angle, k=1)
        table.append((r, float(sub_dist[mask].min()) if mask.any() else math.inf))
    return table
