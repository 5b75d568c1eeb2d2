"""Staircase surface sweeps and their intrinsic growth measurements.

Starting from a base segment in the image plane and one lifted preimage of
its left endpoint, repeatedly lift the segment, then lift short vertical ray
pieces from each of its sample points. Each sweep yields a quad patch; the
patches stack like the steps of a staircase, connected through the lift of
the ray over the left endpoint (the railing). Step heights are chosen
adaptively so the restriction of the map to the swept patch stays within a
configured eccentricity factor of the map's own sampled eccentricity.

Growth of the finished surface is measured intrinsically: multi-source
Dijkstra distances on the welded quad mesh give geodesic disk areas A(r) and
circle lengths L(r), with growth exponents from a log-log fit.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra as sparse_dijkstra
from scipy.spatial import cKDTree

from .analysis import eccentricity_at
from .distribution import COMPLETED, LiftOptions, frame_at, lift_path
from .errors import (
    BadStart,
    InvalidInput,
    InvalidSurface,
    OutOfExtent,
    SingularPoint,
    StepCollapse,
)
from .linalg import svd
from .maps import MapSpec, parse_map
from .paths import segment
from .util import parallel_map

REACHED_MAX_HEIGHT = "reached_max_height"
HALTED_SINGULAR = "halted_singular"
HALTED_STEP_COLLAPSE = "halted_step_collapse"


@dataclass(frozen=True)
class StaircaseConfig:
    base_segment: tuple  # ((x0, y0), (x1, y1)) in image coordinates
    start_lift: tuple  # preimage of the first endpoint
    max_height: float = 1.0
    k_factor: float = 2.0
    angle_tol: float = 0.1
    n_along: int = 16  # quad columns per step
    n_up: int = 8  # quad rows per step
    ray_direction: tuple = (0.0, 1.0)
    h_init: Optional[float] = None  # first step height; default max_height / 4
    lift_tol: float = 1e-8
    r_max: float = 1e6
    check_samples: int = 64  # eccentricity probes per candidate patch
    max_steps: int = 64
    min_h_factor: float = 2.0 ** -20  # below h_init * this => step collapse
    threads: int = 1
    allow_doubling: bool = True  # try one doubling after an untouched success

    def to_dict(self) -> dict:
        return {
            "base_segment": [list(map(float, p)) for p in self.base_segment],
            "start_lift": list(map(float, self.start_lift)),
            "max_height": self.max_height,
            "k_factor": self.k_factor,
            "angle_tol": self.angle_tol,
            "n_along": self.n_along,
            "n_up": self.n_up,
            "ray_direction": list(map(float, self.ray_direction)),
            "h_init": self.h_init,
            "lift_tol": self.lift_tol,
            "r_max": self.r_max,
        }


@dataclass
class StepPatch:
    """One swept step: vertex grid (rows x cols x m) with image coordinates.

    Row 0 is the lifted base segment of the step; the last row is the top of
    the ray lifts. col_params maps columns to parameters of the original
    base segment.
    """

    vertices: np.ndarray
    image: np.ndarray
    h_lo: float
    h_hi: float
    col_params: np.ndarray
    k_map_max: float = math.nan
    k_restriction_max: float = math.nan

    @property
    def n_rows(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def n_cols(self) -> int:
        return self.vertices.shape[1] - 1


@dataclass
class StaircaseSurface:
    map_name: str
    config: StaircaseConfig
    steps: list
    railing: list  # one (rows, m) array per step: the leftmost ray lift
    initial_lift: np.ndarray  # (n_along + 1, m)
    initial_image: np.ndarray  # (n_along + 1, 2)
    heights: list
    singular_front: list  # dicts: image, step, status
    status: str
    halt_location: Optional[list] = None
    _mesh: Optional["SurfaceMesh"] = field(default=None, repr=False)

    def mesh(self) -> "SurfaceMesh":
        if self._mesh is None:
            self._mesh = _assemble_mesh(self)
        return self._mesh

    def column_polylines(self) -> dict:
        """Per original column index: the stacked ray polyline over all steps
        the column stayed active in (the step curves of the swept rays)."""
        chains = {}
        for patch in self.steps:
            for c, t in enumerate(patch.col_params):
                key = round(float(t), 12)
                chains.setdefault(key, []).append(patch.vertices[:, c, :])
        return {k: np.vstack(v) for k, v in chains.items()}

    def audit_roundtrip(self, spec: MapSpec) -> float:
        worst = 0.0
        for patch in self.steps:
            rows, cols = patch.vertices.shape[:2]
            for r in range(rows):
                for c in range(cols):
                    img = spec(patch.vertices[r, c])
                    worst = max(worst, float(np.linalg.norm(img - patch.image[r, c])))
        return worst

    def to_dict(self) -> dict:
        return {
            "map": self.map_name,
            "status": self.status,
            "heights": [float(h) for h in self.heights],
            "config": self.config.to_dict(),
            "initial_lift": self.initial_lift,
            "initial_image": self.initial_image,
            "patches": [
                {
                    "h_lo": p.h_lo,
                    "h_hi": p.h_hi,
                    "col_params": p.col_params,
                    "k_map_max": p.k_map_max,
                    "k_restriction_max": p.k_restriction_max,
                    "vertices": p.vertices,
                    "image": p.image,
                }
                for p in self.steps
            ],
            "railing": [seg for seg in self.railing],
            "singular_front": self.singular_front,
            "halt_location": self.halt_location,
        }


def surface_from_dict(data: dict) -> StaircaseSurface:
    cfg_raw = data["config"]
    cfg = StaircaseConfig(
        base_segment=tuple(tuple(p) for p in cfg_raw["base_segment"]),
        start_lift=tuple(cfg_raw["start_lift"]),
        max_height=cfg_raw["max_height"],
        k_factor=cfg_raw["k_factor"],
        angle_tol=cfg_raw["angle_tol"],
        n_along=cfg_raw["n_along"],
        n_up=cfg_raw["n_up"],
        ray_direction=tuple(cfg_raw["ray_direction"]),
        h_init=cfg_raw["h_init"],
        lift_tol=cfg_raw["lift_tol"],
        r_max=cfg_raw["r_max"],
    )
    steps = [
        StepPatch(
            vertices=np.asarray(p["vertices"], dtype=float),
            image=np.asarray(p["image"], dtype=float),
            h_lo=p["h_lo"],
            h_hi=p["h_hi"],
            col_params=np.asarray(p["col_params"], dtype=float),
            k_map_max=_num(p.get("k_map_max")),
            k_restriction_max=_num(p.get("k_restriction_max")),
        )
        for p in data["patches"]
    ]
    return StaircaseSurface(
        map_name=data["map"],
        config=cfg,
        steps=steps,
        railing=[np.asarray(r, dtype=float) for r in data["railing"]],
        initial_lift=np.asarray(data["initial_lift"], dtype=float),
        initial_image=np.asarray(data["initial_image"], dtype=float),
        heights=list(data["heights"]),
        singular_front=list(data["singular_front"]),
        status=data["status"],
        halt_location=data.get("halt_location"),
    )


def _num(value):
    if value is None:
        return math.nan
    if isinstance(value, str):
        return {"inf": math.inf, "-inf": -math.inf}.get(value, math.nan)
    return float(value)


def surface_map(surface: StaircaseSurface) -> MapSpec:
    return parse_map(surface.map_name)


# ---------------------------------------------------------------------------
# Construction


def _quad_tangent_stats(spec, v00, v10, v01, v11):
    # Discrete tangent plane of one quad and the eccentricity of the induced
    # 2x2 linear map tangent plane -> image plane at the quad center.
    center = 0.25 * (v00 + v10 + v01 + v11)
    t1 = 0.5 * ((v10 + v11) - (v00 + v01))
    t2 = 0.5 * ((v01 + v11) - (v00 + v10))
    n1 = np.linalg.norm(t1)
    if n1 <= 1e-14:
        return None
    e1 = t1 / n1
    t2p = t2 - (e1 @ t2) * e1
    n2 = np.linalg.norm(t2p)
    if n2 <= 1e-14 * max(1.0, np.linalg.norm(t2)):
        return None
    e2 = t2p / n2
    jac = spec.jacobian(center)
    mat = np.column_stack([jac @ e1, jac @ e2])
    sig = svd(mat).singular_values
    if sig[-1] <= 0:
        return None
    k_restr = float(sig[0] / sig[-1])
    # angle between the discrete tangent plane and the horizontal plane
    try:
        fiber = frame_at(spec, center).fiber
    except SingularPoint:
        return None
    basis = np.column_stack([e1, e2])
    off = float(np.linalg.norm(fiber.T @ basis, ord=2))
    angle = math.asin(min(1.0, off))
    return k_restr, angle, center


def _stride_indices(total, cap):
    if total <= cap:
        return list(range(total))
    stride = max(1, total // cap)
    return list(range(0, total, stride))


def _patch_checks(spec, vertices, cfg):
    """Sampled map eccentricity, restriction eccentricity and tangent-plane
    angle over a candidate patch grid. Returns (ok, k_map, k_restr)."""
    rows, cols = vertices.shape[:2]
    k_map = 0.0
    for r in _stride_indices(rows, max(2, int(math.sqrt(cfg.check_samples)))):
        for c in _stride_indices(cols, max(2, int(math.sqrt(cfg.check_samples)))):
            spectrum = eccentricity_at(spec, vertices[r, c])
            if not spectrum.finite:
                return False, math.inf, math.inf
            k_map = max(k_map, spectrum.eccentricity)
    k_restr = 0.0
    angle_max = 0.0
    for r in _stride_indices(rows - 1, 8):
        for c in _stride_indices(cols - 1, 8):
            stats = _quad_tangent_stats(
                spec, vertices[r, c], vertices[r, c + 1],
                vertices[r + 1, c], vertices[r + 1, c + 1],
            )
            if stats is None:
                continue
            k_restr = max(k_restr, stats[0])
            angle_max = max(angle_max, stats[1])
    ok = k_restr <= cfg.k_factor * k_map * (1.0 + 1e-9) and angle_max < cfg.angle_tol
    return ok, k_map, k_restr


@dataclass
class _Sweep:
    columns: np.ndarray  # (cols, n_up + 1, m) for survivors, None entries for dead
    alive: np.ndarray  # bool per column
    failures: list  # (col_index_in_run, image_point, status)


def _sweep_rays(spec, base_row, base_images, h, cfg, opts):
    n_cols = base_row.shape[0]
    direction = np.asarray(cfg.ray_direction, dtype=float)
    direction = direction / np.linalg.norm(direction)

    def lift_one(j):
        img0 = base_images[j]
        ray = segment(img0, img0 + h * direction)
        try:
            lifted = lift_path(spec, ray, base_row[j], opts=opts, n_steps=cfg.n_up)
        except BadStart as exc:
            return None, (j, img0.tolist(), f"bad_start: {exc}")
        if lifted.status != COMPLETED:
            where = ray.point(lifted.t_stop if lifted.t_stop is not None else 0.0)
            return None, (j, where.tolist(), lifted.status)
        return lifted.points, None

    results = parallel_map(lift_one, range(n_cols), cfg.threads)
    columns = np.empty(n_cols, dtype=object)
    alive = np.zeros(n_cols, dtype=bool)
    failures = []
    for j, (points, failure) in enumerate(results):
        if failure is not None:
            failures.append(failure)
        else:
            columns[j] = points
            alive[j] = True
    return _Sweep(columns=columns, alive=alive, failures=failures)


def _largest_run(alive):
    best_lo, best_len = 0, 0
    lo = None
    for i, flag in enumerate(list(alive) + [False]):
        if flag and lo is None:
            lo = i
        elif not flag and lo is not None:
            if i - lo > best_len:
                best_lo, best_len = lo, i - lo
            lo = None
    return best_lo, best_len


def build_staircase(spec: MapSpec, cfg: StaircaseConfig) -> StaircaseSurface:
    """Sweep the staircase surface for a map (see module docstring).

    Raises BadStart when the initial segment cannot be lifted and StepCollapse
    when no admissible first step height exists; later failures halt the
    construction with a recorded status and singular front instead.
    """
    p0 = np.asarray(cfg.base_segment[0], dtype=float)
    p1 = np.asarray(cfg.base_segment[1], dtype=float)
    start = np.asarray(cfg.start_lift, dtype=float)
    if cfg.n_along < 2 or cfg.n_up < 2:
        raise InvalidInput("grid counts must be at least 2")
    if cfg.k_factor <= 1.0:
        raise InvalidInput("k_factor must exceed 1")
    opts = LiftOptions(lift_tol=cfg.lift_tol, r_max=cfg.r_max)

    base_lift = lift_path(spec, segment(p0, p1), start, opts=opts, n_steps=cfg.n_along)
    if base_lift.status != COMPLETED:
        raise BadStart(f"initial segment lift ended with status {base_lift.status}")
    col_params = np.linspace(0.0, 1.0, cfg.n_along + 1)
    base_row = base_lift.points.copy()
    base_images = np.array([p0 + t * (p1 - p0) for t in col_params])
    return _run_sweeps(spec, cfg, base_row, base_images, col_params)


def _run_sweeps(spec: MapSpec, cfg: StaircaseConfig, base_row, base_images,
                col_params) -> StaircaseSurface:
    opts = LiftOptions(lift_tol=cfg.lift_tol, r_max=cfg.r_max)
    direction = np.asarray(cfg.ray_direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    initial_lift = base_row.copy()
    initial_image = base_images.copy()

    steps = []
    railing = []
    heights = [0.0]
    singular_front = []
    status = None
    halt_location = None
    tau = 0.0
    h = cfg.h_init if cfg.h_init is not None else cfg.max_height / 4.0
    h = min(h, cfg.max_height)
    h_floor = h * cfg.min_h_factor

    for _ in range(cfg.max_steps):
        if tau >= cfg.max_height - 1e-12:
            status = REACHED_MAX_HEIGHT
            break
        h = min(h, cfg.max_height - tau)

        # Halve until the sampled restriction eccentricity fits the budget.
        halved = False
        sweep = None
        while True:
            sweep = _sweep_rays(spec, base_row, base_images, h, cfg, opts)
            if sweep.alive.sum() < 2:
                break  # singular handling below, independent of h
            lo, ln = _largest_run(sweep.alive)
            if ln < 2:
                break
            block = np.stack([sweep.columns[j] for j in range(lo, lo + ln)], axis=1)
            ok, k_map, k_restr = _patch_checks(spec, block, cfg)
            if ok:
                break
            h *= 0.5
            halved = True
            if h < h_floor:
                if not steps:
                    raise StepCollapse(
                        f"no admissible step height above {h_floor:g}",
                        location=[float(v) for v in base_images[0]],
                    )
                status = HALTED_STEP_COLLAPSE
                halt_location = [float(v) for v in base_images[0]]
                break
        if status is not None:
            break

        lo, ln = _largest_run(sweep.alive)
        if ln < 2:
            for j, img, why in sweep.failures:
                singular_front.append({"image": img, "step": len(steps), "status": why})
            status = HALTED_SINGULAR
            break

        # One doubling attempt when the first candidate passed untouched.
        if cfg.allow_doubling and not halved and sweep.alive.all() \
                and 2.0 * h <= cfg.max_height - tau:
            trial = _sweep_rays(spec, base_row, base_images, 2.0 * h, cfg, opts)
            if trial.alive.all():
                block = np.stack(list(trial.columns), axis=1)
                ok, _, _ = _patch_checks(spec, block, cfg)
                if ok:
                    sweep = trial
                    h *= 2.0

        # Narrow to the largest contiguous run of surviving columns.
        lo, ln = _largest_run(sweep.alive)
        for j, img, why in sweep.failures:
            singular_front.append({"image": img, "step": len(steps), "status": why})
        run = slice(lo, lo + ln)
        block = np.stack([sweep.columns[j] for j in range(lo, lo + ln)], axis=1)
        run_params = col_params[run]
        run_images = base_images[run]

        img_grid = np.empty((cfg.n_up + 1, ln, 2))
        for r in range(cfg.n_up + 1):
            img_grid[r] = run_images + (r / cfg.n_up) * h * direction
        _, k_map, k_restr = _patch_checks(spec, block, cfg)
        patch = StepPatch(
            vertices=block,
            image=img_grid,
            h_lo=tau,
            h_hi=tau + h,
            col_params=run_params.copy(),
            k_map_max=k_map,
            k_restriction_max=k_restr,
        )
        steps.append(patch)
        railing.append(block[:, 0, :].copy())
        tau += h
        heights.append(tau)

        # Next base: lift the shifted segment from the railing top.
        col_params = run_params
        top_images = run_images + h * direction
        seg_top = segment(top_images[0], top_images[-1])
        try:
            next_lift = lift_path(spec, seg_top, block[-1, 0, :], opts=opts, n_steps=ln - 1)
        except BadStart as exc:
            status = HALTED_SINGULAR
            singular_front.append({"image": top_images[0].tolist(),
                                   "step": len(steps), "status": f"bad_start: {exc}"})
            break
        if next_lift.status != COMPLETED:
            # Keep the columns the partial lift reached; drop the rest.
            reached = len(next_lift.points)
            singular_front.append({
                "image": seg_top.point(next_lift.t_stop or 0.0).tolist(),
                "step": len(steps),
                "status": next_lift.status,
            })
            if reached < 2:
                status = HALTED_SINGULAR
                break
            col_params = col_params[:reached]
            base_row = next_lift.points.copy()
            base_images = top_images[:reached]
        else:
            base_row = next_lift.points.copy()
            base_images = top_images
    else:
        status = status or REACHED_MAX_HEIGHT

    if status is None:
        status = REACHED_MAX_HEIGHT
    return StaircaseSurface(
        map_name=spec.name,
        config=cfg,
        steps=steps,
        railing=railing,
        initial_lift=initial_lift,
        initial_image=initial_image,
        heights=heights,
        singular_front=singular_front,
        status=status,
        halt_location=halt_location,
    )


def extend_from_columns(spec: MapSpec, surface: StaircaseSurface, col_lo: int, col_hi: int,
                        extra_height: float) -> StaircaseSurface:
    """Continue a finished staircase upward over a column subrange.

    The recorded top-row vertices between the given columns become the base
    data of the continuation (no re-lift), so single-step continuations over
    overlapping subranges agree exactly on the overlap.
    """
    if not surface.steps:
        raise InvalidInput("nothing to continue from")
    last = surface.steps[-1]
    if not 0 <= col_lo < col_hi <= last.n_cols:
        raise InvalidInput("column range out of bounds")
    top_rows = last.vertices[-1, col_lo:col_hi + 1, :].copy()
    top_imgs = last.image[-1, col_lo:col_hi + 1, :].copy()
    sub_cfg = replace(
        surface.config,
        base_segment=(tuple(top_imgs[0]), tuple(top_imgs[-1])),
        start_lift=tuple(top_rows[0]),
        max_height=extra_height,
        n_along=col_hi - col_lo,
        h_init=surface.config.h_init,
    )
    col_params = last.col_params[col_lo:col_hi + 1].copy()
    return _run_sweeps(spec, sub_cfg, top_rows, top_imgs, col_params)


# ---------------------------------------------------------------------------
# Restriction eccentricity


def restriction_eccentricity(spec: MapSpec, surface: StaircaseSurface,
                             max_quads_per_patch: int = 400) -> list:
    """Per-patch eccentricities of the map restricted to the swept surface.

    Returns one dict per patch: {"values", "max", "degenerate"} where values
    are sampled quad eccentricities; degenerate quads are excluded from max.
    """
    out = []
    for patch in surface.steps:
        rows, cols = patch.n_rows, patch.n_cols
        per_axis = max(2, int(math.sqrt(max_quads_per_patch)))
        values = []
        degenerate = 0
        for r in _stride_indices(rows, per_axis):
            for c in _stride_indices(cols, per_axis):
                stats = _quad_tangent_stats(
                    spec,
                    patch.vertices[r, c], patch.vertices[r, c + 1],
                    patch.vertices[r + 1, c], patch.vertices[r + 1, c + 1],
                )
                if stats is None:
                    degenerate += 1
                    continue
                values.append(stats[0])
        out.append({
            "values": np.asarray(values),
            "max": float(max(values)) if values else math.nan,
            "degenerate": degenerate,
        })
    return out


# ---------------------------------------------------------------------------
# Mesh assembly and intrinsic growth


@dataclass
class SurfaceMesh:
    vertices: np.ndarray  # (V, m) welded
    quads: np.ndarray  # (Q, 4) vertex ids, (v00, v10, v11, v01) order
    image: np.ndarray  # (V, 2)
    seed_ids: np.ndarray  # default growth seed: the initial lifted segment
    face_areas: np.ndarray
    face_image_centers: np.ndarray
    extra_edges: Optional[np.ndarray] = None  # long-range (knight) edges

    def triangles(self):
        q = self.quads
        return np.vstack([q[:, [0, 1, 2]], q[:, [0, 2, 3]]])


def _union_find_weld(points, tol):
    parent = np.arange(len(points))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tree = cKDTree(points)
    for i, j in tree.query_pairs(tol):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(points))])
    unique, remap = np.unique(roots, return_inverse=True)
    return unique, remap


def _triangle_area3(a, b, c):
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=-1)


def _knight_edges(ids):
    # Long-range grid moves shrink the worst-case graph-metric inflation of
    # geodesic distances from ~8% (edges + diagonals) to ~2.8%.
    moves = ((1, 2), (2, 1), (1, -2), (2, -1))
    rows, cols = ids.shape
    out = []
    for dr, dc in moves:
        r_lo, r_hi = max(0, -dr), rows - max(0, dr)
        c_lo, c_hi = max(0, -dc), cols - max(0, dc)
        if r_hi <= r_lo or c_hi <= c_lo:
            continue
        src = ids[r_lo:r_hi, c_lo:c_hi].ravel()
        dst = ids[r_lo + dr:r_hi + dr, c_lo + dc:c_hi + dc].ravel()
        out.append(np.column_stack([src, dst]))
    return np.vstack(out) if out else np.zeros((0, 2), dtype=int)


def _assemble_mesh(surface: StaircaseSurface) -> SurfaceMesh:
    raw_pts = []
    raw_img = []
    quads = []
    extra = []
    offset = 0
    for patch in surface.steps:
        rows, cols = patch.vertices.shape[:2]
        ids = offset + np.arange(rows * cols).reshape(rows, cols)
        raw_pts.append(patch.vertices.reshape(-1, patch.vertices.shape[2]))
        raw_img.append(patch.image.reshape(-1, 2))
        v00 = ids[:-1, :-1].ravel()
        v10 = ids[:-1, 1:].ravel()
        v11 = ids[1:, 1:].ravel()
        v01 = ids[1:, :-1].ravel()
        quads.append(np.column_stack([v00, v10, v11, v01]))
        extra.append(_knight_edges(ids))
        offset += rows * cols
    if not raw_pts:
        raise InvalidSurface("surface has no patches")
    pts = np.vstack(raw_pts)
    imgs = np.vstack(raw_img)
    quads = np.vstack(quads)
    extra = np.vstack(extra)

    scale = float(np.max(np.linalg.norm(pts - pts[0], axis=1))) or 1.0
    unique, remap = _union_find_weld(pts, tol=1e-9 * scale + 1e-12)
    vertices = pts[unique]
    image = imgs[unique]
    quads = remap[quads]
    extra = remap[extra] if len(extra) else None

    seed_pts = surface.initial_lift
    tree = cKDTree(vertices)
    dist, idx = tree.query(seed_pts)
    seed_ids = np.unique(idx[dist <= 1e-7 * scale + 1e-9])

    a, b, c, d = (vertices[quads[:, i]] for i in range(4))
    areas = _triangle_area3(a, b, c) + _triangle_area3(a, c, d)
    face_img = 0.25 * (image[quads[:, 0]] + image[quads[:, 1]] + image[quads[:, 2]] + image[quads[:, 3]])
    return SurfaceMesh(vertices=vertices, quads=quads, image=image,
                       seed_ids=seed_ids, face_areas=areas, face_image_centers=face_img,
                       extra_edges=extra)


def mesh_distances(mesh: SurfaceMesh, seed_ids) -> np.ndarray:
    """Multi-source Dijkstra over quad edges, diagonals and knight moves."""
    q = mesh.quads
    stack = [
        q[:, [0, 1]], q[:, [1, 2]], q[:, [2, 3]], q[:, [3, 0]],
        q[:, [0, 2]], q[:, [1, 3]],
    ]
    if mesh.extra_edges is not None and len(mesh.extra_edges):
        stack.append(mesh.extra_edges)
    pairs = np.vstack(stack)
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    weights = np.linalg.norm(mesh.vertices[pairs[:, 0]] - mesh.vertices[pairs[:, 1]], axis=1)
    n = len(mesh.vertices)
    graph = coo_matrix(
        (np.concatenate([weights, weights]),
         (np.concatenate([pairs[:, 0], pairs[:, 1]]),
          np.concatenate([pairs[:, 1], pairs[:, 0]]))),
        shape=(n, n),
    ).tocsr()
    seed_ids = np.asarray(seed_ids, dtype=int)
    if len(seed_ids) == 0:
        raise InvalidSurface("empty growth seed")
    return sparse_dijkstra(graph, directed=False, indices=seed_ids, min_only=True)


def seed_ids_near_segment(mesh: SurfaceMesh, seg_pts, snap: float = 1e-6) -> np.ndarray:
    """Vertex ids whose image coordinates lie on a given image segment."""
    a = np.asarray(seg_pts[0], dtype=float)
    b = np.asarray(seg_pts[1], dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    rel = mesh.image - a
    t = np.clip((rel @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(rel))
    close = np.linalg.norm(rel - t[:, None] * ab, axis=1) <= snap
    ids = np.nonzero(close)[0]
    if len(ids) == 0:
        raise InvalidInput("no mesh vertices on the requested seed segment")
    return ids


@dataclass
class GrowthProfile:
    radii: np.ndarray
    lengths: np.ndarray  # geodesic circle lengths L(r)
    areas: np.ndarray  # geodesic disk areas A(r)
    areas_trapz: np.ndarray  # cross-check: A(r0) + integral of L dr
    area_exponent: float
    length_exponent: float

    def to_rows(self):
        return list(zip(self.radii, self.lengths, self.areas))

    def to_dict(self) -> dict:
        return {
            "radii": self.radii,
            "lengths": self.lengths,
            "areas": self.areas,
            "areas_trapz": self.areas_trapz,
            "area_exponent": self.area_exponent,
            "length_exponent": self.length_exponent,
        }


def _fit_exponent(radii, values):
    k = len(radii)
    lo = k // 2  # fit over the top half of the radii
    r = np.log(radii[lo:])
    v = np.log(np.maximum(values[lo:], 1e-300))
    if len(r) < 2:
        return math.nan
    slope = np.polyfit(r, v, 1)[0]
    return float(slope)


def _sublevel_areas(dist, tris, verts, areas3, radii):
    d = np.sort(dist[tris], axis=1)
    d0, d1, d2 = d[:, 0], d[:, 1], d[:, 2]
    out = np.empty(len(radii))
    span02 = np.maximum(d2 - d0, 1e-300)
    span01 = np.maximum(d1 - d0, 1e-300)
    span12 = np.maximum(d2 - d1, 1e-300)
    for i, r in enumerate(radii):
        frac = np.zeros(len(tris))
        below = r >= d2
        frac[below] = 1.0
        mid = (r >= d1) & ~below
        frac[mid] = 1.0 - (d2[mid] - r) ** 2 / (span12[mid] * span02[mid])
        low = (r > d0) & (r < d1)
        frac[low] = (r - d0[low]) ** 2 / (span01[low] * span02[low])
        out[i] = float(np.sum(frac * areas3))
    return out


def _level_lengths(dist, tris, verts, radii):
    p = verts[tris]  # (T, 3, m)
    d = dist[tris]  # (T, 3)
    edges = [(0, 1), (1, 2), (2, 0)]
    out = np.empty(len(radii))
    for i, r in enumerate(radii):
        crossings = []
        masks = []
        for a, b in edges:
            da, db = d[:, a], d[:, b]
            # strict-below parity: a vertex exactly on the level counts as
            # above, so level edges belong to exactly one adjacent triangle
            mask = (da < r) != (db < r)
            t = np.zeros(len(d))
            denom = db - da
            safe = np.abs(denom) > 1e-300
            t[safe & mask] = (r - da)[safe & mask] / denom[safe & mask]
            pt = p[:, a, :] + t[:, None] * (p[:, b, :] - p[:, a, :])
            crossings.append(pt)
            masks.append(mask)
        masks = np.column_stack(masks)  # (T, 3)
        counts = masks.sum(axis=1)
        generic = counts == 2
        if not np.any(generic):
            out[i] = 0.0
            continue
        # order the two crossing points per generic triangle
        idx_sorted = np.argsort(~masks[generic], axis=1, kind="stable")[:, :2]
        rows = np.nonzero(generic)[0]
        pts = np.stack(crossings, axis=1)  # (T, 3, m)
        first = pts[rows, idx_sorted[:, 0]]
        second = pts[rows, idx_sorted[:, 1]]
        out[i] = float(np.sum(np.linalg.norm(first - second, axis=1)))
    return out


def growth_profile(surface: StaircaseSurface, radii, seed_segment=None,
                   seed_vertices=None) -> GrowthProfile:
    """Geodesic circle lengths and disk areas on the surface mesh.

    Distances are multi-source Dijkstra from the initial lifted segment (or
    an explicit seed); level-set lengths and sublevel areas come from linear
    interpolation on the triangulated quads. Exponents are log-log least
    squares over the top half of the radii.
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    if len(radii) < 2:
        raise InvalidInput("need at least two radii")
    mesh = surface.mesh()
    if seed_vertices is not None:
        seeds = np.asarray(seed_vertices, dtype=int)
    elif seed_segment is not None:
        seeds = seed_ids_near_segment(mesh, seed_segment)
    else:
        seeds = mesh.seed_ids
    dist = mesh_distances(mesh, seeds)
    if not np.all(np.isfinite(dist)):
        raise InvalidSurface("mesh is disconnected from the growth seed")
    extent = float(dist.max())
    if radii[-1] > extent:
        raise OutOfExtent(f"radius {radii[-1]:g} exceeds meshed extent {extent:g}")

    tris = mesh.triangles()
    verts = mesh.vertices
    q = mesh.quads
    a, b, c, d = (verts[q[:, i]] for i in range(4))
    tri_areas = np.concatenate([_triangle_area3(a, b, c), _triangle_area3(a, c, d)])

    areas = _sublevel_areas(dist, tris, verts, tri_areas, radii)
    lengths = _level_lengths(dist, tris, verts, radii)
    areas_trapz = areas[0] + np.concatenate(
        [[0.0], np.cumsum(0.5 * (lengths[1:] + lengths[:-1]) * np.diff(radii))]
    )
    return GrowthProfile(
        radii=radii,
        lengths=lengths,
        areas=areas,
        areas_trapz=areas_trapz,
        area_exponent=_fit_exponent(radii, areas),
        length_exponent=_fit_exponent(radii, lengths),
    )
