"""End-to-end pipeline: screen a map, sweep its staircase, measure growth,
and compare the image-rectangle modulus with truncated lifted-ray moduli.

For a map that is rank deficient the run stops with a diagnostic. For maps
passing the screen the report carries a contradiction indicator: a positive
image modulus next to lifted-ray upper bounds that decrease with the
truncation radius is the numerical shadow of the boundedness obstruction
(it only indicates a genuine contradiction when the image is bounded).
"""

import math

import numpy as np

from .analysis import SamplingPlan, global_qc_profile
from .errors import NotFound
from .maps import MapSpec
from .modulus import family_lifted_rays, family_rectangle, grid_complex, modulus
from .staircase import StaircaseConfig, build_staircase, growth_profile, mesh_distances

# Per-map demo anchors: a base segment in the image and a covering start.
DEMO_ANCHORS = {
    "ortho_proj": (((0.0, 0.0), (1.0, 0.0)), (0.0, 0.0, 0.0)),
    "hopf_derived": (((0.0, 0.0), (0.5, 0.0)), (0.0, 0.0, 0.0)),
    "contact_adapted": (((0.0, 0.0), (1.0, 0.0)), (0.0, 0.0, 0.0)),
    "punctured_proj": (((1.0, 0.0), (2.0, 0.0)), (1.0, 0.0, 0.0)),
    "helical_proj": (((2.0, 0.0), (3.0, 0.0)), (2.0, 0.0, 0.0)),
}


def _sample_sup_norms(spec, window, seed, count=400):
    out = []
    for scale in (1.0, 3.0, 9.0):
        plan = SamplingPlan(kind="box", count=count, low=-window * scale,
                            high=window * scale, seed=seed)
        norms = []
        for x in plan.sample(spec.m):
            if spec.in_domain(x):
                norms.append(float(np.linalg.norm(spec(x))))
        norms = np.sort(norms)
        out.append({
            "box_halfwidth": window * scale,
            "in_domain": len(norms),
            "sup": float(norms[-1]) if len(norms) else math.nan,
            "q90": float(norms[int(0.9 * (len(norms) - 1))]) if len(norms) else math.nan,
        })
    return out


def _boundedness_verdict(spec, probes):
    if spec.image_bound is not None:
        return True, "declared image bound"
    sups = [p["sup"] for p in probes]
    grows = any(b > 1.5 * a for a, b in zip(sups[:-1], sups[1:]))
    heavy_tail = any(p["sup"] > 5.0 * p["q90"] for p in probes if p["q90"] > 0)
    if grows:
        return False, "sampled sup grows with the sample box"
    if heavy_tail:
        return False, "sampled sup dwarfs the bulk (pole-like behavior)"
    return True, "sampled sup stable across boxes"


def demo_liouville(spec: MapSpec, window: float = 4.0, seed: int = 0,
                   segment=None, start=None, threads: int = 1) -> dict:
    """Run the screen + staircase + growth + modulus pipeline for one map."""
    report = {"map": spec.name}

    profile = global_qc_profile(
        spec, SamplingPlan(kind="box", count=300, low=-window, high=window, seed=seed)
    )
    report["rank_screen"] = profile.to_dict()
    if profile.rank_deficient_count > 0:
        report["status"] = "rejected-rank-deficient"
        report["note"] = (
            "tangent map drops rank on samples; the map is not within the "
            "eccentricity framework, no staircase attempted"
        )
        return report

    probes = _sample_sup_norms(spec, window, seed)
    bounded, why = _boundedness_verdict(spec, probes)
    report["image_bound"] = {
        "declared": spec.image_bound,
        "probes": probes,
        "bounded": bounded,
        "reason": why,
    }

    if segment is None or start is None:
        base = spec.name.split(":")[0]
        if base not in DEMO_ANCHORS:
            raise NotFound(f"no demo anchor for map '{spec.name}'; pass segment and start")
        default_segment, default_start = DEMO_ANCHORS[base]
        segment = segment or default_segment
        start = start or default_start

    cfg = StaircaseConfig(
        base_segment=tuple(tuple(p) for p in segment),
        start_lift=tuple(start),
        max_height=1.0,
        h_init=0.25,
        n_along=12,
        n_up=6,
        threads=threads,
    )
    surface = build_staircase(spec, cfg)
    report["staircase"] = {
        "status": surface.status,
        "steps": len(surface.steps),
        "heights": [float(h) for h in surface.heights],
        "singular_front_size": len(surface.singular_front),
    }

    mesh = surface.mesh()
    dist = mesh_distances(mesh, mesh.seed_ids)
    extent = float(np.max(dist[np.isfinite(dist)]))
    radii = [q * extent for q in (0.3, 0.45, 0.6, 0.75, 0.9)]
    growth = growth_profile(surface, radii)
    report["growth"] = {
        "radii": growth.radii,
        "areas": growth.areas,
        "lengths": growth.lengths,
        "area_exponent": growth.area_exponent,
        "length_exponent": growth.length_exponent,
    }

    width = float(np.linalg.norm(np.asarray(segment[1]) - np.asarray(segment[0])))
    grid = grid_complex(width, surface.heights[-1] or 1.0, 16, 16)
    image_est = modulus(family_rectangle(grid, "tb", k=2, seed=seed))
    lifted_vals = []
    for q in (0.5, 0.7, 0.9):
        fam = family_lifted_rays(surface, truncate_radius=q * extent)
        lifted_vals.append({"radius": q * extent, "value": modulus(fam).value})
    report["modulus"] = {"image": image_est.value, "lifted": lifted_vals}

    decreasing = all(
        a["value"] >= b["value"] - 1e-9 for a, b in zip(lifted_vals[:-1], lifted_vals[1:])
    )
    report["indicator"] = {
        "image_modulus_positive": image_est.value > 0,
        "lifted_upper_bounds_decreasing": decreasing,
        "hypothesis_bounded_image": bounded,
    }
    if not bounded:
        report["note"] = "image not bounded; no contradiction expected"
    else:
        report["note"] = "bounded image with decreasing lifted bounds" if decreasing \
            else "bounded image but lifted bounds not decreasing"
    report["status"] = "completed"
    return report
