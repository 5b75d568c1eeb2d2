"""Catalog of example mappings R^m -> R^n plus a composition mechanism.

Each entry carries an evaluator, an analytic Jacobian where one is known
(finite differences otherwise), a domain predicate with a human-readable
exclusion description, and an optional image bound. MapSpec instances are
immutable and safe to share between workers.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainViolation, NotFound
from .linalg import fd_jacobian

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MapSpec:
    """A smooth map R^m -> R^n with evaluator, Jacobian and domain predicate."""

    name: str
    m: int
    n: int
    func: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Callable[[np.ndarray], bool] = lambda x: True
    domain_description: str = "all of source space"
    image_bound: Optional[float] = None
    params: dict = field(default_factory=dict)

    def in_domain(self, x) -> bool:
        return bool(self.domain(np.asarray(x, dtype=float)))

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.m,):
            raise DimensionError(f"{self.name}: expected point in R^{self.m}, got shape {x.shape}")
        if not self.domain(x):
            raise DomainViolation(f"{self.name}: point outside domain ({self.domain_description})")
        return np.atleast_1d(np.asarray(self.func(x), dtype=float))

    def jacobian(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not self.domain(x):
            raise DomainViolation(f"{self.name}: point outside domain ({self.domain_description})")
        if self.jac is not None:
            return np.asarray(self.jac(x), dtype=float)
        return fd_jacobian(self.func, x)

    @property
    def has_analytic_jacobian(self) -> bool:
        return self.jac is not None

    def describe(self) -> dict:
        return {
            "name": self.name,
            "m": self.m,
            "n": self.n,
            "domain": self.domain_description,
            "image_bound": self.image_bound,
            "analytic_jacobian": self.has_analytic_jacobian,
            "params": dict(self.params),
        }


def compose(outer: MapSpec, inner: MapSpec) -> MapSpec:
    """outer after inner, with chain-rule Jacobian and intersected domain."""
    if inner.n != outer.m:
        raise DimensionError(
            f"cannot compose {outer.name} (m={outer.m}) after {inner.name} (n={inner.n})"
        )

    def func(x):
        return outer.func(np.asarray(inner.func(x), dtype=float))

    def domain(x):
        if not inner.domain(x):
            return False
        return bool(outer.domain(np.atleast_1d(np.asarray(inner.func(x), dtype=float))))

    jac = None
    if inner.jac is not None and outer.jac is not None:
        def jac(x):
            y = np.atleast_1d(np.asarray(inner.func(x), dtype=float))
            return np.asarray(outer.jac(y)) @ np.asarray(inner.jac(x))

    return MapSpec(
        name=f"{outer.name}*{inner.name}",
        m=inner.m,
        n=outer.n,
        func=func,
        jac=jac,
        domain=domain,
        domain_description=f"{inner.domain_description}; preimage of ({outer.domain_description})",
        image_bound=outer.image_bound,
    )


def linear_map(a, name="linear") -> MapSpec:
    """The linear map x -> A x (useful for isometry/scaling tests)."""
    a = np.asarray(a, dtype=float)
    return MapSpec(name=name, m=a.shape[1], n=a.shape[0], func=lambda x: a @ x, jac=lambda x: a)


# ---------------------------------------------------------------------------
# Builtin constructors


def _ortho_proj(m=3, k=2):
    m, k = int(m), int(k)
    if not 1 <= k <= m:
        raise DimensionError("ortho_proj needs 1 <= k <= m")
    jac_mat = np.zeros((k, m))
    jac_mat[np.arange(k), np.arange(k)] = 1.0
    return MapSpec(
        name=f"ortho_proj:{m},{k}",
        m=m,
        n=k,
        func=lambda x: x[:k].copy(),
        jac=lambda x: jac_mat.copy(),
        params={"m": m, "k": k},
    )


def _arctan1d():
    return MapSpec(
        name="arctan1d",
        m=1,
        n=1,
        func=lambda x: np.array([math.atan(x[0])]),
        jac=lambda x: np.array([[1.0 / (1.0 + x[0] ** 2)]]),
    )


def _torus_fold(big_radius=2.0, small_radius=1.0):
    big_radius, small_radius = float(big_radius), float(small_radius)
    if not big_radius > small_radius > 0:
        raise DimensionError("torus_fold needs R0 > r0 > 0")

    def func(p):
        x, y, _ = p
        w = big_radius + small_radius * math.cos(y)
        return np.array([w * math.cos(x), w * math.sin(x), small_radius * math.sin(y)])

    def jac(p):
        x, y, _ = p
        w = big_radius + small_radius * math.cos(y)
        return np.array([
            [-w * math.sin(x), -small_radius * math.sin(y) * math.cos(x), 0.0],
            [w * math.cos(x), -small_radius * math.sin(y) * math.sin(x), 0.0],
            [0.0, small_radius * math.cos(y), 0.0],
        ])

    return MapSpec(
        name=f"torus_fold:{big_radius:g},{small_radius:g}",
        m=3,
        n=3,
        func=func,
        jac=jac,
        image_bound=big_radius + small_radius,
        params={"R0": big_radius, "r0": small_radius},
    )


def _holo_product():
    # (z1, z2) -> z1 * z2 on C^2 read as R^4 -> R^2, coordinates (x1, y1, x2, y2).
    def func(p):
        x1, y1, x2, y2 = p
        return np.array([x1 * x2 - y1 * y2, x1 * y2 + y1 * x2])

    def jac(p):
        x1, y1, x2, y2 = p
        return np.array([[x2, -y2, x1, -y1], [y2, x2, y1, x1]])

    return MapSpec(name="holo_product", m=4, n=2, func=func, jac=jac)


# --- Hopf-derived map: (inverse stereographic R^3 -> S^3) then the Hopf map
# S^3 -> S^2, then stereographic S^2 -> R^2, all from the respective north
# poles. Excluded set: the preimage of the S^2 north pole, i.e. the unit
# circle in the x1 x2 plane (z2 = 0), thickened by a small numerical margin.

_HOPF_MARGIN = 1e-8  # lower bound on |z2|^2 for domain membership


def _hopf_z(p):
    x1, x2, x3 = p
    s = x1 * x1 + x2 * x2 + x3 * x3
    d = s + 1.0
    z1 = np.array([2.0 * x1 / d, 2.0 * x2 / d])
    z2 = np.array([2.0 * x3 / d, (s - 1.0) / d])
    return z1, z2


def _inv_stereo3():
    # R^3 -> S^3 in R^4 from the north pole (0,0,0,1).
    def func(p):
        s = float(p @ p)
        d = s + 1.0
        return np.array([2.0 * p[0] / d, 2.0 * p[1] / d, 2.0 * p[2] / d, (s - 1.0) / d])

    def jac(p):
        s = float(p @ p)
        d = s + 1.0
        out = np.zeros((4, 3))
        for j in range(3):
            for i in range(3):
                out[i, j] = (2.0 * (1.0 if i == j else 0.0)) / d - 4.0 * p[i] * p[j] / d ** 2
            out[3, j] = 4.0 * p[j] / d ** 2
        return out

    return MapSpec(name="inv_stereo3", m=3, n=4, func=func, jac=jac)


def _hopf4to3():
    # (a + ib, c + id) -> (2 z1 conj(z2), |z1|^2 - |z2|^2) in R^3.
    def func(q):
        a, b, c, d = q
        return np.array([2.0 * (a * c + b * d), 2.0 * (b * c - a * d), a * a + b * b - c * c - d * d])

    def jac(q):
        a, b, c, d = q
        return np.array([
            [2 * c, 2 * d, 2 * a, 2 * b],
            [-2 * d, 2 * c, 2 * b, -2 * a],
            [2 * a, 2 * b, -2 * c, -2 * d],
        ], dtype=float)

    return MapSpec(name="hopf4to3", m=4, n=3, func=func, jac=jac)


def _stereo2():
    # S^2 in R^3 -> R^2 from the north pole (0,0,1).
    def func(q):
        u, v, w = q
        return np.array([u / (1.0 - w), v / (1.0 - w)])

    def jac(q):
        u, v, w = q
        g = 1.0 - w
        return np.array([[1.0 / g, 0.0, u / g ** 2], [0.0, 1.0 / g, v / g ** 2]])

    return MapSpec(
        name="stereo2", m=3, n=2, func=func, jac=jac,
        domain=lambda q: q[2] < 1.0 - 1e-12, domain_description="north pole removed",
    )


def _hopf_derived():
    chain = compose(_stereo2(), compose(_hopf4to3(), _inv_stereo3()))

    def domain(p):
        _, z2 = _hopf_z(p)
        return float(z2 @ z2) > _HOPF_MARGIN

    return MapSpec(
        name="hopf_derived",
        m=3,
        n=2,
        func=chain.func,
        jac=chain.jac,
        domain=domain,
        domain_description="unit circle in the x1 x2 plane removed (numerical tube)",
    )


def hopf_fiber_circle(p, n_samples=16):
    """Points of the fiber circle through p: phase-rotate (z1, z2) on S^3 and
    map back down to R^3. Evaluating a Hopf-derived map along these points
    must give a constant."""
    p = np.asarray(p, dtype=float)
    z1, z2 = _hopf_z(p)
    out = []
    for theta in np.linspace(0.0, TWO_PI, n_samples, endpoint=False):
        c, s = math.cos(theta), math.sin(theta)
        w1 = np.array([c * z1[0] - s * z1[1], s * z1[0] + c * z1[1]])
        w2 = np.array([c * z2[0] - s * z2[1], s * z2[0] + c * z2[1]])
        x4 = np.array([w1[0], w1[1], w2[0], w2[1]])
        out.append(x4[:3] / (1.0 - x4[3]))
    return np.array(out)


def _helical_proj(pitch=1.0):
    pitch = float(pitch)
    c = pitch / TWO_PI

    def func(p):
        x, y, z = p
        rho = math.hypot(x, y)
        return np.array([rho, z - c * math.atan2(y, x)])

    def jac(p):
        x, y, z = p
        rho2 = x * x + y * y
        rho = math.sqrt(rho2)
        return np.array([
            [x / rho, y / rho, 0.0],
            [c * y / rho2, -c * x / rho2, 1.0],
        ])

    return MapSpec(
        name=f"helical_proj:{pitch:g}",
        m=3,
        n=2,
        func=func,
        jac=jac,
        domain=lambda p: p[0] * p[0] + p[1] * p[1] > 1e-24,
        domain_description="Z axis removed",
        params={"pitch": pitch},
    )


def helical_eval_cylindrical(pitch, rho, theta, z):
    """Helical projection in cylindrical coordinates with an unreduced angle.

    Exactly constant along (rho, theta + t, z + pitch*t/(2 pi)); the Cartesian
    evaluator agrees with this modulo one pitch across the angle branch cut.
    """
    return np.array([rho, z - (pitch / TWO_PI) * theta])


def _punctured_proj():
    return MapSpec(
        name="punctured_proj",
        m=3,
        n=2,
        func=lambda p: p[:2].copy(),
        jac=lambda p: np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        domain=lambda p: p[0] * p[0] + p[1] * p[1] > 1e-24,
        domain_description="Z axis removed (image: punctured plane)",
    )


def _contact_adapted(eps=0.1):
    # F(x, y, z) = (x, y - eps*x*z): its kernel field is (0, eps*x, 1), so the
    # induced plane field is exactly the kernel of dz + eps*x dy.
    eps = float(eps)

    def func(p):
        x, y, z = p
        return np.array([x, y - eps * x * z])

    def jac(p):
        x, y, z = p
        return np.array([[1.0, 0.0, 0.0], [-eps * z, 1.0, -eps * x]])

    return MapSpec(
        name=f"contact_adapted:{eps:g}",
        m=3,
        n=2,
        func=func,
        jac=jac,
        params={"eps": eps},
    )


_BUILTINS = {
    "ortho_proj": (_ortho_proj, "orthogonal projection R^m -> R^k"),
    "arctan1d": (_arctan1d, "x -> arctan x"),
    "torus_fold": (_torus_fold, "plane -> cylinder -> torus folding, bounded image"),
    "holo_product": (_holo_product, "(z1, z2) -> z1 z2 as R^4 -> R^2"),
    "hopf_derived": (_hopf_derived, "Hopf bundle conjugated by stereographic charts"),
    "helical_proj": (_helical_proj, "projection along helices of fixed pitch onto a half-plane"),
    "punctured_proj": (_punctured_proj, "projection of R^3 minus a line onto the punctured plane"),
    "contact_adapted": (_contact_adapted, "plane projection whose plane field is ker(dz + eps*x dy)"),
}


def builtin(name: str, *params) -> MapSpec:
    """Construct a registry map by name, e.g. builtin('ortho_proj', 3, 2)."""
    if name not in _BUILTINS:
        raise NotFound(f"no registry map named '{name}' (have: {', '.join(sorted(_BUILTINS))})")
    ctor, _ = _BUILTINS[name]
    return ctor(*params)


def parse_map(text: str) -> MapSpec:
    """Parse the 'name:p1,p2' micro-syntax, e.g. 'ortho_proj:3,2'."""
    name, _, rest = text.partition(":")
    params = [float(tok) for tok in rest.split(",") if tok.strip()] if rest else []
    return builtin(name.strip(), *params)


def registry_listing() -> list:
    """JSON-ready description of every registry entry at default parameters."""
    out = []
    for name in sorted(_BUILTINS):
        ctor, blurb = _BUILTINS[name]
        spec = ctor()
        entry = spec.describe()
        entry["summary"] = blurb
        out.append(entry)
    return out
