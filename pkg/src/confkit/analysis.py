"""Pointwise and sampled eccentricity analysis of registry maps.

The eccentricity of a map at a point is the ratio of the largest to the
smallest singular value of its tangent map restricted to the orthogonal
complement of the kernel; infinitesimal balls go to ellipsoids with these
semi-axes. Rank deficiency is reported as an explicit infinity marker.
Also hosts the one-dimensional equal-spacing distortion (h) test.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptySample, InvalidInput
from .linalg import svd
from .maps import MapSpec

RANK_TOL = 1e-9  # relative to the top singular value

# Quantile levels reported by global profiles.
PROFILE_QUANTILES = (0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0)


@dataclass(frozen=True)
class EccentricitySpectrum:
    """Restricted singular spectrum of the tangent map at one point."""

    point: np.ndarray
    rank: int
    restricted_singular_values: np.ndarray  # top-n values, descending
    eccentricity: float  # math.inf when rank < n

    @property
    def finite(self) -> bool:
        return math.isfinite(self.eccentricity)


def eccentricity_at(spec: MapSpec, x) -> EccentricitySpectrum:
    """Eccentricity spectrum of spec at x; rank-deficient points get inf."""
    x = np.asarray(x, dtype=float)
    jac = spec.jacobian(x)  # raises DomainViolation outside the domain
    res = svd(jac)
    sigma = res.singular_values
    top = sigma[0] if len(sigma) else 0.0
    rank = int(np.sum(sigma > RANK_TOL * top)) if top > 0 else 0
    restricted = sigma[: spec.n].copy()
    if rank >= spec.n and restricted[-1] > 0:
        ecc = float(restricted[0] / restricted[-1])
    else:
        ecc = math.inf
    return EccentricitySpectrum(
        point=x, rank=rank, restricted_singular_values=restricted, eccentricity=ecc
    )


@dataclass(frozen=True)
class SamplingPlan:
    """Where to probe a map: a uniform box, spherical shells, or given points."""

    kind: str = "box"  # box | shell | points
    count: int = 1000
    low: float = -10.0
    high: float = 10.0
    shells: tuple = ()
    center: Optional[tuple] = None
    points: Optional[np.ndarray] = None
    seed: int = 0

    def sample(self, m: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        if self.kind == "points":
            if self.points is None:
                raise InvalidInput("points plan without points")
            pts = np.atleast_2d(np.asarray(self.points, dtype=float))
            if pts.shape[1] != m:
                raise InvalidInput(f"points have dimension {pts.shape[1]}, map wants {m}")
            return pts
        if self.kind == "box":
            return rng.uniform(self.low, self.high, size=(self.count, m))
        if self.kind == "shell":
            if not self.shells:
                raise InvalidInput("shell plan without radii")
            center = np.zeros(m) if self.center is None else np.asarray(self.center, dtype=float)
            per = max(1, self.count // len(self.shells))
            chunks = []
            for r in self.shells:
                dirs = rng.normal(size=(per, m))
                dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
                chunks.append(center + r * dirs)
            return np.vstack(chunks)
        raise InvalidInput(f"unknown sampling kind '{self.kind}'")


@dataclass
class QcProfile:
    """Sampled eccentricity summary; k_max is a lower bound for the true
    quasiconformality coefficient (inf once any sample is rank deficient)."""

    map_name: str
    samples_total: int
    samples_in_domain: int
    rank_deficient_count: int
    k_max: float
    quantiles: list  # (level, value) pairs over finite eccentricities
    spectra: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "map": self.map_name,
            "samples": self.samples_total,
            "in_domain": self.samples_in_domain,
            "rank_deficient_count": self.rank_deficient_count,
            "K_max": self.k_max,
            "quantiles": [{"q": q, "K": v} for q, v in self.quantiles],
        }


def global_qc_profile(spec: MapSpec, plan: SamplingPlan, keep_spectra=False) -> QcProfile:
    """Aggregate eccentricity_at over a sampling plan (order-independent
    reductions, so the result is deterministic for a fixed seed)."""
    pts = plan.sample(spec.m)
    finite_k = []
    rank_deficient = 0
    in_domain = 0
    spectra = []
    for x in pts:
        if not spec.in_domain(x):
            continue
        in_domain += 1
        spectrum = eccentricity_at(spec, x)
        if keep_spectra:
            spectra.append(spectrum)
        if spectrum.finite:
            finite_k.append(spectrum.eccentricity)
        else:
            rank_deficient += 1
    if in_domain == 0:
        raise EmptySample(f"no in-domain samples for {spec.name}")
    if rank_deficient > 0 or not finite_k:
        k_max = math.inf
    else:
        k_max = float(max(finite_k))
    if finite_k:
        arr = np.sort(np.asarray(finite_k))
        quantiles = [(q, float(np.quantile(arr, q))) for q in PROFILE_QUANTILES]
    else:
        quantiles = []
    return QcProfile(
        map_name=spec.name,
        samples_total=len(pts),
        samples_in_domain=in_domain,
        rank_deficient_count=rank_deficient,
        k_max=k_max,
        quantiles=quantiles,
        spectra=spectra,
    )


# ---------------------------------------------------------------------------
# 1-D equal-spacing distortion test


@dataclass(frozen=True)
class TripleSampler:
    """Equally spaced triples (a, a+d, a+2d) for the distortion test."""

    triples: Optional[np.ndarray] = None  # explicit (k, 3) rows win if given
    low: float = -10.0
    high: float = 10.0
    spacing_low: float = 0.1
    spacing_high: float = 10.0
    count: int = 200
    seed: int = 0

    def generate(self) -> np.ndarray:
        if self.triples is not None:
            arr = np.atleast_2d(np.asarray(self.triples, dtype=float))
            if arr.shape[1] != 3:
                raise InvalidInput("explicit triples must have three columns")
            return arr
        rng = np.random.default_rng(self.seed)
        # Quantize to a dyadic grid so a, a+d, a+2d are exactly equally
        # spaced in floating point (|a-b| = |b-c| holds without roundoff).
        grid = 2.0 ** 20
        a = np.round(rng.uniform(self.low, self.high, size=self.count) * grid) / grid
        d = np.round(rng.uniform(self.spacing_low, self.spacing_high, size=self.count) * grid) / grid
        d = np.maximum(d, 2.0 / grid)
        return np.column_stack([a, a + d, a + 2.0 * d])


@dataclass
class HConditionReport:
    h_estimate: float
    worst_triple: tuple
    unbounded_flag: bool
    cap: float

    def to_dict(self) -> dict:
        return {
            "h_estimate": self.h_estimate,
            "worst_triple": list(self.worst_triple),
            "unbounded_flag": self.unbounded_flag,
            "cap": self.cap,
        }


def h_condition_test(spec: MapSpec, sampler: TripleSampler, cap: float = 1e3) -> HConditionReport:
    """Sup over sampled equally spaced triples of max(ratio, 1/ratio) where
    ratio = |f(a)-f(b)| / |f(b)-f(c)|; flags unbounded past the cap."""
    if spec.m != 1 or spec.n != 1:
        raise InvalidInput("h-condition test needs a map R^1 -> R^1")
    triples = sampler.generate()
    if not np.all(triples[:, 0] < triples[:, 1]) or not np.all(triples[:, 1] < triples[:, 2]):
        raise InvalidInput("triples must satisfy a < b < c")

    xs = np.unique(triples.ravel())
    vals = np.array([float(spec(np.array([t]))[0]) for t in xs])
    diffs = np.diff(vals)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise InvalidInput(f"{spec.name} is not strictly monotone on the sampled range")
    lookup = dict(zip(xs.tolist(), vals.tolist()))

    h_est = 1.0
    worst = tuple(triples[0])
    unbounded = False
    for a, b, c in triples:
        fa, fb, fc = lookup[a], lookup[b], lookup[c]
        num = abs(fa - fb)
        den = abs(fb - fc)
        if den == 0.0 or num == 0.0:
            return HConditionReport(math.inf, (a, b, c), True, cap)
        ratio = num / den
        local = max(ratio, 1.0 / ratio)
        if local > h_est:
            h_est = local
            worst = (float(a), float(b), float(c))
    if h_est > cap:
        unbounded = True
    return HConditionReport(float(h_est), worst, unbounded, cap)
