"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(run with -s to see them live).

Criterion 10's final bound (< 0.1 at the 1e4 cutoff) is asserted exactly as
stated even though the measured value on the flat complex is ~1.7: with
alpha_min(R) = 1/ln(ln R / ln r0) the bound decays like 1/ln(ln R)^2, which
reaches 0.1 only for astronomically large R (see notes/decisions.md). The
assertion is kept faithful rather than loosened; every other criterion and
every other clause of criterion 10 passes.
"""

import math
import subprocess
import sys
from contextlib import contextmanager

import numpy as np
import pytest

from confkit.analysis import TripleSampler, eccentricity_at, h_condition_test
from confkit.distribution import (
    contact_coframe,
    frobenius_residual,
    holonomy_defect,
    lift_path,
    vertical_coframe,
)
from confkit.maps import MapSpec, builtin
from confkit.modulus import (
    annulus_complex,
    family_annulus,
    family_rectangle,
    grid_complex,
    modulus,
    parabolicity_bound,
    radial_complex,
)
from confkit.paths import circle, rectangle, segment
from confkit.staircase import (
    StaircaseConfig,
    build_staircase,
    growth_profile,
    restriction_eccentricity,
)

TWO_PI = 2.0 * math.pi


@contextmanager
def criterion(num, label):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {num:>2}: FAIL - {label}")
        raise
    print(f"ACCEPTANCE {num:>2}: PASS - {label}")


def in_domain_samples(spec, rng, count, low=-2.0, high=2.0, accept=None):
    out = []
    while len(out) < count:
        x = rng.uniform(low, high, size=spec.m)
        if spec.in_domain(x) and (accept is None or accept(x)):
            out.append(x)
    return out


def test_criterion_1_holomorphic_product_is_round():
    with criterion(1, "holo_product eccentricity 1 within 1e-5 on 1000 points"):
        f = builtin("holo_product")
        rng = np.random.default_rng(101)
        pts = in_domain_samples(
            f, rng, 1000, accept=lambda x: np.linalg.norm(f.jacobian(x)) > 1e-3
        )
        for x in pts:
            assert abs(eccentricity_at(f, x).eccentricity - 1.0) <= 1e-5


def test_criterion_2_projection_and_staircase_restriction():
    with criterion(2, "projection K=1 within 1e-9; staircase restriction K=1 within 1e-6"):
        f = builtin("ortho_proj", 3, 2)
        rng = np.random.default_rng(102)
        for _ in range(1000):
            x = rng.uniform(-10, 10, size=3)
            assert abs(eccentricity_at(f, x).eccentricity - 1.0) <= 1e-9
        cfg = StaircaseConfig(
            base_segment=((0.0, 0.0), (1.0, 0.0)),
            start_lift=(0.0, 0.0, 0.5),
            max_height=1.0,
            h_init=0.25,
            n_along=12,
            n_up=6,
        )
        surface = build_staircase(f, cfg)
        for item in restriction_eccentricity(f, surface):
            assert abs(item["max"] - 1.0) <= 1e-6


def test_criterion_3_rank_deficiency_classifier():
    with criterion(3, "torus_fold flagged rank deficient at all 1000 points"):
        f = builtin("torus_fold")
        rng = np.random.default_rng(103)
        flagged = 0
        for _ in range(1000):
            spectrum = eccentricity_at(f, rng.uniform(-5, 5, size=3))
            if spectrum.rank == 2 and not spectrum.finite:
                flagged += 1
        assert flagged == 1000  # zero false negatives


def test_criterion_4_h_condition():
    with criterion(4, "identity h=1 exactly; arctan triple ratio > 1e3 and flagged"):
        ident = MapSpec(name="id", m=1, n=1, func=lambda x: x.copy())
        report = h_condition_test(ident, TripleSampler(count=200, seed=104))
        assert report.h_estimate == 1.0
        t = 1e3
        arctan = h_condition_test(
            builtin("arctan1d"), TripleSampler(triples=np.array([[0.0, t, 2.0 * t]]))
        )
        assert arctan.h_estimate > 1e3
        assert arctan.unbounded_flag is True


def test_criterion_5_frobenius_residuals():
    with criterion(5, "integrability residuals: dz ~ 0, contact and Hopf >= 1e-3"):
        rng = np.random.default_rng(105)
        dz = vertical_coframe()
        for _ in range(100):
            assert frobenius_residual(dz, rng.uniform(-5, 5, size=3)) <= 1e-8
        contact = contact_coframe(0.1)
        for _ in range(100):
            assert frobenius_residual(contact, rng.uniform(-4, 4, size=3)) >= 1e-3
        hopf = builtin("hopf_derived")
        for x in in_domain_samples(hopf, rng, 100):
            assert frobenius_residual(hopf, x) >= 1e-3


def test_criterion_6_holonomy_oracle():
    with criterion(6, "contact rectangle defects -eps*area to 1e-3 rel; dz defect <= 1e-8"):
        eps = 0.1
        cf = contact_coframe(eps)
        for width, height in ((1.0, 1.0), (2.0, 3.0), (0.5, 0.5)):
            area = width * height
            defect = holonomy_defect(cf, rectangle([0.0, 0.0], width, height),
                                     np.array([0.0, 0.0, 0.0]))
            assert abs(defect[2] - (-eps * area)) <= 1e-3 * (eps * area)
        flat = holonomy_defect(vertical_coframe(), rectangle([0.2, -0.3], 1.5, 0.7),
                               np.array([0.2, -0.3, 1.0]))
        assert np.linalg.norm(flat) <= 1e-8


def test_criterion_7_lift_roundtrip_and_order():
    with criterion(7, "completed lifts roundtrip <= 1e-8; halving the step gains >= 4x"):
        cases = [
            (builtin("ortho_proj", 3, 2), segment([0.0, 0.0], [1.0, 0.0]), [0.0, 0.0, 4.0]),
            (builtin("punctured_proj"), segment([1.0, 0.0], [0.01, 0.0]), [1.0, 0.0, 0.0]),
            (builtin("helical_proj"), circle([5.0, 0.0], 1.0), [6.0, 0.0, 0.0]),
            (builtin("contact_adapted", 0.1), segment([0.0, 0.0], [1.0, 0.5]), [0.0, 0.0, 0.0]),
            (builtin("hopf_derived"), segment([0.0, 0.0], [0.4, 0.2]), [0.0, 0.0, 0.0]),
        ]
        for spec, base, start in cases:
            lifted = lift_path(spec, base, np.asarray(start))
            assert lifted.completed
            assert lifted.roundtrip_error(spec) <= 1e-8

        # exact fiber displacement of a smooth loop: -eps * pi R^2
        eps = 0.1
        cf = contact_coframe(eps)
        loop = circle([1.5, 0.0], 1.0)
        start = np.array([2.5, 0.0, 0.0])
        errors = [
            abs(holonomy_defect(cf, loop, start, n_steps=n)[2] + eps * math.pi)
            for n in (32, 64, 128)
        ]
        assert errors[0] / errors[1] >= 4.0
        assert errors[1] / errors[2] >= 4.0


def test_criterion_8_staircase_growth_exponents():
    with criterion(8, "flat staircase growth exponents: area ~ 2, length ~ 1 over r in [10,100]"):
        half_width = 110.0
        n_along, n_up = 315, 316  # ~1e5 mesh vertices
        f = builtin("ortho_proj", 3, 2)
        cfg = StaircaseConfig(
            base_segment=((-half_width, 0.0), (half_width, 0.0)),
            start_lift=(-half_width, 0.0, 0.5),
            max_height=2.0 * half_width,
            h_init=2.0 * half_width,
            n_along=n_along,
            n_up=n_up,
        )
        surface = build_staircase(f, cfg)
        vertex_count = (n_along + 1) * (n_up + 1)
        assert vertex_count == pytest.approx(1e5, rel=0.01)
        profile = growth_profile(
            surface,
            np.linspace(10.0, 100.0, 10),
            seed_segment=((-0.5, half_width), (0.5, half_width)),
        )
        assert 1.9 <= profile.area_exponent <= 2.1
        assert 0.95 <= profile.length_exponent <= 1.05


def test_criterion_9_modulus_benchmarks():
    with criterion(9, "modulus: square 1 +-2%, 2x1 rect 0.5 +-3%, annulus 2pi +-5%, certified"):
        grid = grid_complex(1.0, 1.0, 64, 64)
        fam = family_rectangle(grid, "lr", k=4, seed=109)
        est = modulus(fam)
        assert abs(est.value - 1.0) <= 0.02
        assert abs(est.density.min_length(fam) - 1.0) <= 1e-9

        grid2 = grid_complex(2.0, 1.0, 128, 64)
        fam2 = family_rectangle(grid2, "lr", k=4, seed=109)
        est2 = modulus(fam2)
        assert abs(est2.value - 0.5) <= 0.03 * 0.5
        assert abs(est2.density.min_length(fam2) - 1.0) <= 1e-9

        ann = annulus_complex(1.0, math.e, 32, 64)
        fam3 = family_annulus(ann)
        est3 = modulus(fam3)
        assert abs(est3.value - TWO_PI) <= 0.05 * TWO_PI
        assert abs(est3.density.min_length(fam3) - 1.0) <= 1e-9


def test_criterion_10_parabolicity_indicator():
    with criterion(10, "parabolicity: flat bounds strictly decreasing and < 0.1 at 1e4; "
                       "hyperbolic bounded below by 0.2"):
        cutoffs = [1e2, 1e3, 1e4]
        flat = parabolicity_bound(radial_complex(1.2e4, 600, 8, metric="flat"),
                                  alphas=[], cutoffs=cutoffs)
        flat_mins = [flat.min_admissible(c) for c in cutoffs]
        assert flat_mins[0] > flat_mins[1] > flat_mins[2]

        hyp = parabolicity_bound(radial_complex(1.2e4, 600, 8, metric="hyperbolic"),
                                 alphas=[], cutoffs=cutoffs)
        for c in cutoffs:
            assert hyp.min_admissible(c) >= 0.2

        # Faithful final clause: M_upper(alpha_min(1e4), 1e4) < 0.1. The
        # density alpha/(r ln r) with admissible alpha_min(R) = 1/ln(ln R)
        # gives ~ 2 pi alpha^2 (1 - 1/ln R) + cap terms ~ 1.7 at R = 1e4;
        # 0.1 needs R beyond e^9000. Kept as stated; see notes/decisions.md.
        assert flat_mins[-1] < 0.1, (
            f"M_upper(alpha_min(1e4), 1e4) = {flat_mins[-1]:.4f}; the 1/ln(ln R)^2 "
            "decay cannot reach 0.1 at R = 1e4 (spec-level contradiction)"
        )


def test_criterion_11_determinism():
    with criterion(11, "fixed seed + one thread give byte-identical JSON"):
        import tempfile
        from pathlib import Path

        with tempfile.TemporaryDirectory() as tmp:
            for cmd in (
                ["analyze-map", "--map", "hopf_derived", "--samples", "200",
                 "--box=-2,2", "--seed", "11"],
                ["estimate-modulus", "--complex", "grid", "--family", "rect",
                 "--rect", "1,1", "--grid", "24,24", "--seed", "11"],
            ):
                payloads = []
                for tag in ("a", "b"):
                    out = Path(tmp) / f"{cmd[0]}-{tag}.json"
                    proc = subprocess.run(
                        [sys.executable, "-m", "confkit", *cmd, "--threads", "1",
                         "--out", str(out)],
                        capture_output=True, text=True,
                    )
                    assert proc.returncode == 0, proc.stderr
                    payloads.append(out.read_bytes())
                assert payloads[0] == payloads[1]
