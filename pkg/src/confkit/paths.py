"""Parametric base paths in the image space (piecewise C^1 over [0, 1])."""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class BasePath:
    """A path t -> point(t) with velocity and the knot parameters where the
    velocity may jump; integrators must not step across knots.

    velocity is right-continuous at knots; velocity_left (when given) is the
    left-continuous variant integrators need at piece-end stage times.
    """

    dim: int
    point: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    knots: tuple = (0.0, 1.0)
    description: str = "path"
    velocity_left: Optional[Callable[[float], np.ndarray]] = None

    def vel(self, t: float, left: bool = False) -> np.ndarray:
        if left and self.velocity_left is not None:
            return self.velocity_left(t)
        return self.velocity(t)

    @property
    def closed(self) -> bool:
        return bool(np.linalg.norm(self.point(1.0) - self.point(0.0)) <= 1e-12)

    def length(self, samples_per_piece: int = 32) -> float:
        total = 0.0
        for a, b in zip(self.knots[:-1], self.knots[1:]):
            ts = np.linspace(a, b, samples_per_piece + 1)
            pts = np.array([self.point(t) for t in ts])
            total += float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
        return total


def segment(a, b) -> BasePath:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidInput("segment endpoints must have equal dimension")
    delta = b - a
    return BasePath(
        dim=len(a),
        point=lambda t: a + t * delta,
        velocity=lambda t: delta.copy(),
        description=f"segment {a.tolist()} -> {b.tolist()}",
    )


def ray(origin, direction, length) -> BasePath:
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(direction)
    if norm <= 0 or length <= 0:
        raise InvalidInput("ray needs a nonzero direction and positive length")
    return segment(origin, origin + (length / norm) * direction)


def circle(center, radius, turns: float = 1.0, start_angle: float = 0.0) -> BasePath:
    center = np.asarray(center, dtype=float)
    if radius <= 0:
        raise InvalidInput("circle needs a positive radius")
    omega = 2.0 * math.pi * turns

    def point(t):
        ang = start_angle + omega * t
        return center + radius * np.array([math.cos(ang), math.sin(ang)])

    def velocity(t):
        ang = start_angle + omega * t
        return radius * omega * np.array([-math.sin(ang), math.cos(ang)])

    return BasePath(dim=2, point=point, velocity=velocity,
                    description=f"circle r={radius:g} around {center.tolist()}")


def polyline(points: Sequence) -> BasePath:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 2:
        raise InvalidInput("polyline needs at least two points")
    k = pts.shape[0] - 1
    knots = tuple(np.linspace(0.0, 1.0, k + 1))

    def locate(t):
        idx = min(k - 1, max(0, int(math.floor(t * k))))
        return idx, t * k - idx

    def point(t):
        idx, frac = locate(t)
        return pts[idx] + frac * (pts[idx + 1] - pts[idx])

    def velocity(t):
        idx, _ = locate(t)
        return (pts[idx + 1] - pts[idx]) * k

    def velocity_left(t):
        idx = min(k - 1, max(0, int(math.ceil(t * k)) - 1))
        return (pts[idx + 1] - pts[idx]) * k

    return BasePath(dim=pts.shape[1], point=point, velocity=velocity, knots=knots,
                    description=f"polyline through {pts.shape[0]} points",
                    velocity_left=velocity_left)


def rectangle(corner, width, height) -> BasePath:
    """Closed counterclockwise rectangle loop from corner, sides width x height."""
    x0, y0 = np.asarray(corner, dtype=float)
    if width <= 0 or height <= 0:
        raise InvalidInput("rectangle needs positive sides")
    return polyline([
        [x0, y0],
        [x0 + width, y0],
        [x0 + width, y0 + height],
        [x0, y0 + height],
        [x0, y0],
    ])


def reverse(path: BasePath) -> BasePath:
    # Left and right velocity limits swap under time reversal.
    return BasePath(
        dim=path.dim,
        point=lambda t: path.point(1.0 - t),
        velocity=lambda t: -path.vel(1.0 - t, left=True),
        knots=tuple(sorted(1.0 - np.asarray(path.knots))),
        description=f"reversed {path.description}",
        velocity_left=lambda t: -path.vel(1.0 - t),
    )


def concatenate(first: BasePath, second: BasePath) -> BasePath:
    """Join two paths end-to-start into one (parameter split at 1/2)."""
    if np.linalg.norm(first.point(1.0) - second.point(0.0)) > 1e-9:
        raise InvalidInput("paths do not meet end-to-start")

    def point(t):
        return first.point(2.0 * t) if t <= 0.5 else second.point(2.0 * t - 1.0)

    def velocity(t):
        if t < 0.5:
            return 2.0 * first.velocity(2.0 * t)
        return 2.0 * second.velocity(2.0 * t - 1.0)

    def velocity_left(t):
        if t <= 0.5:
            return 2.0 * first.vel(2.0 * t, left=True)
        return 2.0 * second.vel(2.0 * t - 1.0, left=True)

    knots = sorted(set([0.5 * k for k in first.knots] + [0.5 + 0.5 * k for k in second.knots]))
    return BasePath(dim=first.dim, point=point, velocity=velocity, knots=tuple(knots),
                    description=f"{first.description} + {second.description}",
                    velocity_left=velocity_left)
