"""Discrete conformal p-modulus of curve families on cell complexes.

A curve family is a finite set of cell-transversal polylines with per-cell
traversal lengths; a density is one nonnegative number per cell. The
p-modulus program min sum(rho^p * area) subject to rho-length >= 1 on every
curve is solved by projected subgradient descent with Polyak-style steps.
The returned density is rescaled to exact admissibility, so the reported
value is always a certified upper bound.

Also hosts the curve-family generators (rectangle crossings, annulus
crossings, lifted rays on staircase surfaces) and the parabolicity
indicator driven by the density alpha / (r ln r).
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix

from .errors import InvalidComplex, InvalidFamily, InvalidInput, OutOfExtent
from .staircase import StaircaseSurface, mesh_distances

R0_DEFAULT = math.e


# ---------------------------------------------------------------------------
# Complexes


@dataclass
class CellComplex:
    """Cells with positive areas; geometry beyond that lives in meta."""

    areas: np.ndarray
    kind: str = "generic"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.areas = np.asarray(self.areas, dtype=float)
        if len(self.areas) == 0 or not np.all(np.isfinite(self.areas)) or np.any(self.areas <= 0):
            raise InvalidComplex("cell areas must be finite and positive")

    @property
    def n_cells(self) -> int:
        return len(self.areas)


def grid_complex(width: float, height: float, nx: int, ny: int) -> CellComplex:
    """Rectangle [0, width] x [0, height] split into nx * ny equal cells,
    row-major (cell = iy * nx + ix)."""
    if nx < 2 or ny < 2:
        raise InvalidInput("grid must be at least 2x2")
    area = (width / nx) * (height / ny)
    return CellComplex(
        areas=np.full(nx * ny, area),
        kind="grid",
        meta={"width": width, "height": height, "nx": nx, "ny": ny,
              "dx": width / nx, "dy": height / ny},
    )


def annulus_complex(r_in: float, r_out: float, n_r: int, n_theta: int) -> CellComplex:
    """Annulus r_in < |x| < r_out as log-spaced rings times equal sectors,
    cell = i_ring * n_theta + j_sector."""
    if not 0 < r_in < r_out:
        raise InvalidInput("need 0 < r_in < r_out")
    radii = np.exp(np.linspace(math.log(r_in), math.log(r_out), n_r + 1))
    dtheta = 2.0 * math.pi / n_theta
    ring_areas = 0.5 * dtheta * (radii[1:] ** 2 - radii[:-1] ** 2)
    areas = np.repeat(ring_areas, n_theta)
    return CellComplex(
        areas=areas,
        kind="annulus",
        meta={"radii": radii, "n_r": n_r, "n_theta": n_theta, "dtheta": dtheta},
    )


def radial_complex(r_out: float, n_r: int, n_theta: int, metric: str = "flat",
                   r_in: float = 1.0) -> CellComplex:
    """Rotationally symmetric complex for parabolicity runs: log-spaced rings
    with areas from the flat (2 pi r dr) or hyperbolic (2 pi sinh r dr) metric."""
    if metric not in ("flat", "hyperbolic"):
        raise InvalidInput("metric must be flat or hyperbolic")
    radii = np.exp(np.linspace(math.log(r_in), math.log(r_out), n_r + 1))
    dtheta = 2.0 * math.pi / n_theta
    if metric == "flat":
        ring_areas = 0.5 * dtheta * (radii[1:] ** 2 - radii[:-1] ** 2)
    else:
        # cosh(r2) - cosh(r1) = 2 sinh(mid) sinh(half); overflow past r ~ 710
        # is clamped to a huge finite area so downstream sums stay defined.
        mid = 0.5 * (radii[1:] + radii[:-1])
        half = 0.5 * np.diff(radii)
        with np.errstate(over="ignore"):
            ring_areas = dtheta * 2.0 * np.sinh(mid) * np.sinh(half)
        ring_areas = np.nan_to_num(ring_areas, posinf=1e300)
    return CellComplex(
        areas=np.repeat(ring_areas, n_theta),
        kind=f"radial-{metric}",
        meta={"radii": radii, "n_r": n_r, "n_theta": n_theta, "metric": metric},
    )


def surface_complex(surface: StaircaseSurface) -> CellComplex:
    mesh = surface.mesh()
    return CellComplex(areas=mesh.face_areas, kind="surface", meta={"surface": surface})


# ---------------------------------------------------------------------------
# Curve families


@dataclass
class Curve:
    cells: np.ndarray
    ds: np.ndarray
    tag: str = ""

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=int)
        self.ds = np.asarray(self.ds, dtype=float)
        if len(self.cells) == 0 or len(self.cells) != len(self.ds) or np.any(self.ds <= 0):
            raise InvalidFamily(f"curve '{self.tag}' must traverse cells with positive lengths")

    @property
    def euclidean_length(self) -> float:
        return float(self.ds.sum())


@dataclass
class CurveFamily:
    complex: CellComplex
    curves: list
    description: str = ""

    def __post_init__(self):
        if not self.curves:
            raise InvalidFamily("empty curve family")
        for curve in self.curves:
            if np.any(curve.cells >= self.complex.n_cells) or np.any(curve.cells < 0):
                raise InvalidFamily("curve references cells outside the complex")

    def matrix(self) -> csr_matrix:
        rows, cols, vals = [], [], []
        for i, curve in enumerate(self.curves):
            rows.extend([i] * len(curve.cells))
            cols.extend(curve.cells.tolist())
            vals.extend(curve.ds.tolist())
        return csr_matrix((vals, (rows, cols)),
                          shape=(len(self.curves), self.complex.n_cells))

    def subfamily(self, indices) -> "CurveFamily":
        return CurveFamily(self.complex, [self.curves[i] for i in indices],
                           self.description + " (subfamily)")


def _merge_consecutive(cells, ds):
    out_c, out_d = [cells[0]], [ds[0]]
    for c, d in zip(cells[1:], ds[1:]):
        if c == out_c[-1]:
            out_d[-1] += d
        else:
            out_c.append(c)
            out_d.append(d)
    return np.asarray(out_c), np.asarray(out_d)


def family_rectangle(grid: CellComplex, side: str = "lr", k: int = 4,
                     seed: int = 0) -> CurveFamily:
    """Crossing curves of a grid rectangle: one straight curve per row (or
    column) plus k random monotone staircase perturbations each.

    side "lr" joins the vertical sides (curves run along rows); side "tb"
    joins the horizontal sides.
    """
    if grid.kind != "grid":
        raise InvalidInput("family_rectangle needs a grid complex")
    nx, ny = grid.meta["nx"], grid.meta["ny"]
    dx, dy = grid.meta["dx"], grid.meta["dy"]
    if side not in ("lr", "tb"):
        raise InvalidInput("side must be lr or tb")
    # Work in transposed coordinates for tb so one code path serves both.
    n_along, n_across = (nx, ny) if side == "lr" else (ny, nx)
    d_along, d_across = (dx, dy) if side == "lr" else (dy, dx)

    def cell_id(i_across, j_along):
        if side == "lr":
            return i_across * nx + j_along
        return j_along * nx + i_across

    rng = np.random.default_rng(seed)
    curves = []
    for i in range(n_across):
        cells = [cell_id(i, j) for j in range(n_along)]
        curves.append(Curve(np.array(cells), np.full(n_along, d_along),
                            tag=f"straight-{side}-{i}"))
        for variant in range(k):
            row = i
            cells = [cell_id(row, 0)]
            ds = [0.5 * d_along]
            for j in range(1, n_along):
                row = int(np.clip(row + rng.integers(-1, 2), 0, n_across - 1))
                hop = math.hypot(d_along, abs(row - _row_of(cells[-1], side, nx)) * d_across)
                ds[-1] += 0.5 * hop
                cells.append(cell_id(row, j))
                ds.append(0.5 * hop)
            ds[-1] += 0.5 * d_along
            c, d = _merge_consecutive(np.array(cells), np.array(ds))
            curves.append(Curve(c, d, tag=f"staircase-{side}-{i}-{variant}"))
    return CurveFamily(grid, curves, description=f"rectangle crossings ({side}, k={k})")


def _row_of(cell, side, nx):
    return cell // nx if side == "lr" else cell % nx


def family_annulus(annulus: CellComplex) -> CurveFamily:
    """One radial crossing curve per sector of an annulus complex."""
    if annulus.kind != "annulus":
        raise InvalidInput("family_annulus needs an annulus complex")
    radii = annulus.meta["radii"]
    n_r, n_theta = annulus.meta["n_r"], annulus.meta["n_theta"]
    dr = np.diff(radii)
    curves = []
    for j in range(n_theta):
        cells = np.arange(n_r) * n_theta + j
        curves.append(Curve(cells, dr.copy(), tag=f"radial-{j}"))
    return CurveFamily(annulus, curves, description="annulus radial crossings")


def family_lifted_rays(surface: StaircaseSurface, base_rays=None,
                       truncate_radius: Optional[float] = None,
                       complex_: Optional[CellComplex] = None) -> CurveFamily:
    """The swept ray lifts of a staircase as curves over its face complex.

    Each original column contributes its stacked step curve (vertical mesh
    edges plus the tiny inter-step jumps) with 3D Euclidean lengths.
    base_rays selects rays by their parameter along the base segment
    (default: all recorded columns); parameters without a recorded lift are
    an error. The optional truncation keeps only faces within a geodesic
    radius of the initial lifted segment.
    """
    if not surface.steps:
        raise InvalidFamily("surface has no recorded rays")
    if base_rays is not None and len(list(base_rays)) == 0:
        raise InvalidFamily("empty base ray selection")
    comp = complex_ if complex_ is not None else surface_complex(surface)
    mesh = surface.mesh()
    face_radii = None
    if truncate_radius is not None:
        dist = mesh_distances(mesh, mesh.seed_ids)
        face_radii = dist[mesh.quads].mean(axis=1)

    face_offsets = []
    total = 0
    for patch in surface.steps:
        face_offsets.append(total)
        total += patch.n_rows * patch.n_cols

    chains = {}
    for p_idx, patch in enumerate(surface.steps):
        rows, cols = patch.n_rows, patch.n_cols
        for c in range(cols + 1):
            key = round(float(patch.col_params[c]), 12)
            fc = min(c, cols - 1)
            entry = chains.setdefault(key, {"cells": [], "ds": [], "last_top": None})
            if entry["last_top"] is not None:
                jump = float(np.linalg.norm(patch.vertices[0, c] - entry["last_top"]))
                if jump > 1e-12:
                    entry["cells"].append(face_offsets[p_idx] + 0 * cols + fc)
                    entry["ds"].append(jump)
            for r in range(rows):
                face = face_offsets[p_idx] + r * cols + fc
                length = float(np.linalg.norm(patch.vertices[r + 1, c] - patch.vertices[r, c]))
                if length <= 1e-15:
                    continue
                entry["cells"].append(face)
                entry["ds"].append(length)
            entry["last_top"] = patch.vertices[rows, c].copy()

    if base_rays is None:
        selected = sorted(chains)
    else:
        selected = []
        for t in base_rays:
            key = round(float(t), 12)
            if key not in chains:
                raise InvalidFamily(f"no lifted ray recorded at parameter {t:g}")
            selected.append(key)

    curves = []
    for key in selected:
        cells = np.asarray(chains[key]["cells"], dtype=int)
        ds = np.asarray(chains[key]["ds"], dtype=float)
        if len(cells) == 0:
            continue
        if face_radii is not None:
            keep = face_radii[cells] <= truncate_radius
            stop = len(cells) if keep.all() else int(np.argmin(keep))
            cells, ds = cells[:stop], ds[:stop]
            if len(cells) == 0:
                continue
        c, d = _merge_consecutive(cells, ds)
        curves.append(Curve(c, d, tag=f"ray-{key}"))
    if not curves:
        raise InvalidFamily("no ray curves survive the truncation")
    label = "lifted rays" if truncate_radius is None else f"lifted rays (r <= {truncate_radius:g})"
    return CurveFamily(comp, curves, description=label)


# ---------------------------------------------------------------------------
# Modulus solver


@dataclass
class DensityField:
    rho: np.ndarray
    cell_areas: np.ndarray

    def weighted_length(self, curve: Curve) -> float:
        return float(np.sum(self.rho[curve.cells] * curve.ds))

    def min_length(self, family: CurveFamily) -> float:
        return min(self.weighted_length(c) for c in family.curves)

    def energy(self, p: float) -> float:
        return float(np.sum(self.cell_areas * self.rho ** p))


@dataclass
class ModulusEstimate:
    value: float
    p: float
    bound: str  # "UpperBound" (certified by the returned admissible density)
    iterations: int
    final_constraint_violation: float
    density: DensityField
    converged: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "p": self.p,
            "bound": self.bound,
            "iterations": self.iterations,
            "final_constraint_violation": self.final_constraint_violation,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 4000
    theta: float = 1.0  # Polyak step scale
    target_margin: float = 0.05  # aim below the best admissible value
    feas_tol: float = 1e-12
    convergence_window: int = 50
    convergence_rel: float = 1e-5


def modulus(family: CurveFamily, p: float = 2.0,
            opts: SolverOptions = SolverOptions()) -> ModulusEstimate:
    """Certified upper bound for the p-modulus of a finite curve family.

    Projected subgradient descent: infeasible iterates are projected onto the
    violated admissibility halfspaces (simultaneously, which is exact when
    curve supports are disjoint), feasible ones take a Polyak-style objective
    step aimed slightly below the best admissible value seen. The
    deterministic start is the constant density 1 / mean curve length.
    """
    if p < 1.0:
        raise InvalidInput("p must be at least 1")
    mat = family.matrix()
    mat_t = mat.T.tocsr()
    areas = family.complex.areas
    row_sq = np.asarray(mat.multiply(mat).sum(axis=1)).ravel()  # ||ds_gamma||^2
    # Damping for overlapping curve supports: how many curves share a cell.
    overlap = np.asarray((mat != 0).sum(axis=0)).ravel()
    damping = 1.0 / max(1.0, float(np.percentile(overlap[overlap > 0], 90)))
    mean_len = float(np.mean([c.euclidean_length for c in family.curves]))
    rho = np.full(family.complex.n_cells, 1.0 / mean_len)

    def admissible_value(r):
        lengths = mat @ r
        lmin = float(lengths.min())
        if lmin <= 0:
            return math.inf, None
        scaled = r / lmin
        return float(np.sum(areas * scaled ** p)), scaled

    best_val, best_rho = admissible_value(rho)
    history = [best_val]
    iterations = 0
    converged = False
    for it in range(opts.max_iter):
        iterations = it + 1
        lengths = mat @ rho
        lmin = float(lengths.min())
        if lmin < 1.0 - opts.feas_tol:
            violation = np.maximum(1.0 - lengths, 0.0)
            coeffs = damping * violation / row_sq
            rho += mat_t @ coeffs
            np.maximum(rho, 0.0, out=rho)
        else:
            val, scaled = admissible_value(rho)
            if val < best_val:
                best_val, best_rho = val, scaled
            grad = p * areas * rho ** (p - 1.0)
            denom = float(grad @ grad)
            if denom <= 0:
                break
            fval = float(np.sum(areas * rho ** p))
            target = (1.0 - opts.target_margin) * best_val
            step = opts.theta * max(fval - target, 0.0) / denom
            if step <= 0:
                break
            rho -= step * grad
            np.maximum(rho, 0.0, out=rho)
        if (it + 1) % opts.convergence_window == 0:
            history.append(best_val)
            if len(history) >= 3:
                prev, cur = history[-2], history[-1]
                if prev < math.inf and abs(prev - cur) <= opts.convergence_rel * cur:
                    converged = True
                    break

    # Final certification: exact admissibility by rescaling.
    density = DensityField(rho=best_rho, cell_areas=areas)
    lmin = density.min_length(family)
    violation = max(0.0, 1.0 - lmin)
    density = DensityField(rho=best_rho / lmin, cell_areas=areas)
    value = density.energy(p)
    return ModulusEstimate(
        value=value,
        p=p,
        bound="UpperBound",
        iterations=iterations,
        final_constraint_violation=violation,
        density=density,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Parabolicity indicator


def alpha_min(cutoff: float, r0: float = R0_DEFAULT) -> float:
    """Smallest alpha making alpha/(r ln r) admissible for radial curves from
    r0 out to the cutoff (continuum integral: alpha * ln(ln R / ln r0) = 1)."""
    if cutoff <= r0 or r0 <= 1.0:
        raise InvalidInput("need cutoff > r0 > 1")
    return 1.0 / math.log(math.log(cutoff) / math.log(r0))


def _log_density(radii, alpha, r0):
    r_cap = max(r0, math.e)
    r_eff = np.maximum(radii, r_cap)
    return alpha / (r_eff * np.log(r_eff))


@dataclass
class ParabolicityRow:
    alpha: float
    cutoff: float
    admissible: bool
    m_upper: float


@dataclass
class ParabolicityReport:
    rows: list
    verdict: str
    threshold: float
    r0: float

    def min_admissible(self, cutoff: float) -> float:
        vals = [r.m_upper for r in self.rows if r.admissible and r.cutoff == cutoff]
        return min(vals) if vals else math.inf

    def to_rows(self):
        return [(r.alpha, r.cutoff, int(r.admissible), r.m_upper) for r in self.rows]


def parabolicity_bound(source, alphas, cutoffs, r0: float = R0_DEFAULT,
                       threshold: float = 0.1, n_rays: int = 16) -> ParabolicityReport:
    """Admissibility table for rho = alpha / (r ln r) and the resulting
    modulus upper bounds, per cutoff radius.

    source is a radial CellComplex or a StaircaseSurface (geodesic radii from
    the initial lifted segment). For every cutoff R the table also includes
    the threshold value alpha_min(R); the verdict is parabolic-indicated when
    the per-cutoff minimum admissible bound decreases below the threshold.
    """
    cutoffs = sorted(float(c) for c in np.atleast_1d(cutoffs))
    alphas = [float(a) for a in np.atleast_1d(alphas)]
    if isinstance(source, StaircaseSurface):
        radii_cells, areas, curve_data = _surface_radial_data(source, n_rays)
    else:
        radii_cells, areas, curve_data = _radial_complex_data(source)
    max_r = float(radii_cells.max())
    rows = []
    for cutoff in cutoffs:
        if cutoff > max_r:
            raise OutOfExtent(f"cutoff {cutoff:g} exceeds meshed extent {max_r:g}")
        in_cut = radii_cells <= cutoff
        for alpha in sorted(set(alphas) | {alpha_min(cutoff, r0)}):
            if alpha <= 0:
                rows.append(ParabolicityRow(alpha, cutoff, False, math.inf))
                continue
            rho = _log_density(radii_cells, alpha, r0)
            admissible = True
            for cells, ds, cell_r in curve_data:
                keep = cell_r <= cutoff
                length = float(np.sum(rho[cells[keep]] * ds[keep]))
                if length < 1.0 - 1e-9:
                    admissible = False
                    break
            with np.errstate(over="ignore"):
                m_upper = float(np.sum(areas[in_cut] * rho[in_cut] ** 2))
            rows.append(ParabolicityRow(alpha, cutoff, admissible, m_upper))

    mins = []
    for cutoff in cutoffs:
        vals = [r.m_upper for r in rows if r.cutoff == cutoff and r.admissible]
        mins.append(min(vals) if vals else math.inf)
    decreasing = all(a > b for a, b in zip(mins[:-1], mins[1:]))
    if decreasing and mins[-1] < threshold:
        verdict = "parabolic-indicated"
    elif all(v >= threshold for v in mins):
        verdict = "hyperbolic-indicated"
    else:
        verdict = "inconclusive"
    return ParabolicityReport(rows=rows, verdict=verdict, threshold=threshold, r0=r0)


def _radial_complex_data(comp: CellComplex):
    if not comp.kind.startswith("radial") and comp.kind != "annulus":
        raise InvalidInput("parabolicity needs a radial complex or a surface")
    radii = comp.meta["radii"]
    n_r, n_theta = comp.meta["n_r"], comp.meta["n_theta"]
    mid = 0.5 * (radii[1:] + radii[:-1])
    cell_r = np.repeat(mid, n_theta)
    dr = np.diff(radii)
    curve_data = []
    for j in range(n_theta):
        cells = np.arange(n_r) * n_theta + j
        curve_data.append((cells, dr.copy(), mid.copy()))
    return cell_r, comp.areas, curve_data


def _surface_radial_data(surface: StaircaseSurface, n_rays: int):
    mesh = surface.mesh()
    dist = mesh_distances(mesh, mesh.seed_ids)
    if not np.all(np.isfinite(dist)):
        raise InvalidInput("surface mesh is disconnected from the seed")
    face_r = dist[mesh.quads].mean(axis=1)

    # Geodesic-radial curves: walk Dijkstra predecessors from far vertices.
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra as sparse_dijkstra

    q = mesh.quads
    stack = [q[:, [0, 1]], q[:, [1, 2]], q[:, [2, 3]], q[:, [3, 0]],
             q[:, [0, 2]], q[:, [1, 3]]]
    if mesh.extra_edges is not None and len(mesh.extra_edges):
        stack.append(mesh.extra_edges)
    pairs = np.unique(np.sort(np.vstack(stack), axis=1), axis=0)
    w = np.linalg.norm(mesh.vertices[pairs[:, 0]] - mesh.vertices[pairs[:, 1]], axis=1)
    n = len(mesh.vertices)
    graph = coo_matrix((np.concatenate([w, w]),
                        (np.concatenate([pairs[:, 0], pairs[:, 1]]),
                         np.concatenate([pairs[:, 1], pairs[:, 0]]))), shape=(n, n)).tocsr()
    dist2, pred = sparse_dijkstra(graph, directed=False, indices=mesh.seed_ids,
                                  min_only=True, return_predecessors=True)[:2]

    # edge -> one incident face
    edge_face = {}
    for f_idx, quad in enumerate(mesh.quads):
        for a, b in ((0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)):
            key = (min(quad[a], quad[b]), max(quad[a], quad[b]))
            edge_face.setdefault(key, f_idx)

    order = np.argsort(dist2)[::-1]
    targets = [int(v) for v in order[:: max(1, len(order) // (4 * n_rays))][:4 * n_rays]]
    curve_data = []
    for target in targets[:n_rays]:
        cells, ds, cell_r = [], [], []
        v = target
        while pred[v] >= 0:
            u = int(pred[v])
            key = (min(u, v), max(u, v))
            face = edge_face.get(key)
            if face is not None:
                cells.append(face)
                ds.append(float(np.linalg.norm(mesh.vertices[u] - mesh.vertices[v])))
                cell_r.append(float(face_r[face]))
            v = u
        if cells:
            curve_data.append((np.asarray(cells[::-1], dtype=int),
                               np.asarray(ds[::-1]), np.asarray(cell_r[::-1])))
    if not curve_data:
        raise InvalidInput("no radial curves found on the surface")
    return face_r, mesh.face_areas, curve_data
