"""Dimension-generic Euclidean primitives used by the planner and simulator.

Points are plain tuples of floats. The hot loops (tree construction, hot-node
search, pruning) call these functions millions of times per batch, so they stay
in scalar Python instead of allocating small numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Point = tuple


def as_point(p: Iterable[float]) -> Point:
    return tuple(float(c) for c in p)


@dataclass(frozen=True)
class Sphere:
    """Closed ball (a disk in 2D)."""

    center: Point
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius >= 0.0:
            raise ValueError(f"sphere radius must be >= 0, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, p: Sequence[float]) -> bool:
        return math.dist(p, self.center) <= self.radius


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned workspace box ``[low, high]``."""

    low: Point
    high: Point

    def __post_init__(self):
        object.__setattr__(self, "low", as_point(self.low))
        object.__setattr__(self, "high", as_point(self.high))
        if len(self.low) != len(self.high):
            raise ValueError("bounds corners differ in dimension")
        if any(lo > hi for lo, hi in zip(self.low, self.high)):
            raise ValueError(f"bounds min {self.low} exceeds max {self.high}")

    @property
    def dim(self) -> int:
        return len(self.low)

    def contains(self, p: Sequence[float], tol: float = 0.0) -> bool:
        return all(lo - tol <= c <= hi + tol for c, lo, hi in zip(p, self.low, self.high))

    def clamp(self, p: Sequence[float]) -> Point:
        return tuple(min(max(c, lo), hi) for c, lo, hi in zip(p, self.low, self.high))

    @property
    def diagonal(self) -> float:
        return math.dist(self.low, self.high)


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    if len(p) != len(q):
        raise ValueError(f"dimension mismatch: {len(p)} vs {len(q)}")
    return math.dist(p, q)


def _segment_dist2(a, b, c) -> float:
    # squared distance from c to the closest point of segment ab; endpoints are
    # put in a canonical order so the result is exactly symmetric in (a, b)
    if len(a) == 2:
        if (b[0], b[1]) < (a[0], a[1]):
            a, b = b, a
        dx, dy = b[0] - a[0], b[1] - a[1]
        fx, fy = c[0] - a[0], c[1] - a[1]
        dd = dx * dx + dy * dy
        t = 0.0
        if dd > 0.0:
            t = (fx * dx + fy * dy) / dd
            t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        ex, ey = fx - t * dx, fy - t * dy
        return ex * ex + ey * ey
    if len(a) == 3:
        if (b[0], b[1], b[2]) < (a[0], a[1], a[2]):
            a, b = b, a
        dx, dy, dz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
        fx, fy, fz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
        dd = dx * dx + dy * dy + dz * dz
        t = 0.0
        if dd > 0.0:
            t = (fx * dx + fy * dy + fz * dz) / dd
            t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        ex, ey, ez = fx - t * dx, fy - t * dy, fz - t * dz
        return ex * ex + ey * ey + ez * ez
    if tuple(b) < tuple(a):
        a, b = b, a
    d = [bi - ai for ai, bi in zip(a, b)]
    f = [ci - ai for ai, ci in zip(a, c)]
    dd = sum(x * x for x in d)
    t = 0.0
    if dd > 0.0:
        t = min(1.0, max(0.0, sum(x * y for x, y in zip(d, f)) / dd))
    return sum((fi - t * di) ** 2 for fi, di in zip(f, d))


def segment_distance(a: Sequence[float], b: Sequence[float], c: Sequence[float]) -> float:
    """Distance from point ``c`` to the closed segment ``ab``."""
    return math.sqrt(_segment_dist2(a, b, c))


def segment_intersects_sphere(a: Sequence[float], b: Sequence[float], s: Sphere) -> bool:
    """True iff the closed segment ``ab`` touches the closed ball ``s``.

    Contact at exactly the radius counts as an intersection.
    """
    if not (len(a) == len(b) == len(s.center)):
        raise ValueError("dimension mismatch between segment and sphere")
    return _segment_dist2(a, b, s.center) <= s.radius * s.radius


def segment_clear(a, b, spheres: Iterable[Sphere]) -> bool:
    """True iff segment ``ab`` misses every sphere in ``spheres``."""
    for s in spheres:
        if _segment_dist2(a, b, s.center) <= s.radius * s.radius:
            return False
    return True


def clip_segment_to_sphere(a, b, s: Sphere):
    """Return the sub-segment of ``ab`` lying inside ``s``, or None.

    Solves ``|a + t (b - a) - c|^2 = r^2`` for ``t`` and intersects the root
    interval with ``[0, 1]``.
    """
    d = [bi - ai for ai, bi in zip(a, b)]
    f = [ai - ci for ai, ci in zip(a, s.center)]
    A = sum(x * x for x in d)
    B = 2.0 * sum(x * y for x, y in zip(d, f))
    C = sum(x * x for x in f) - s.radius * s.radius
    if A == 0.0:
        return (tuple(a), tuple(a)) if C <= 0.0 else None
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t0 = max(0.0, (-B - sq) / (2.0 * A))
    t1 = min(1.0, (-B + sq) / (2.0 * A))
    if t0 > t1:
        return None
    p0 = tuple(ai + t0 * di for ai, di in zip(a, d))
    p1 = tuple(ai + t1 * di for ai, di in zip(a, d))
    return p0, p1


def sample_uniform(bounds: Bounds, rng: np.random.Generator) -> Point:
    """Draw a point uniformly from ``bounds`` using ``rng``."""
    return tuple(float(v) for v in rng.uniform(bounds.low, bounds.high))


def sample_ball(center: Sequence[float], radius: float, rng: np.random.Generator) -> Point:
    """Draw a point uniformly from the closed ball around ``center``."""
    d = len(center)
    v = rng.standard_normal(d)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return tuple(float(c) for c in center)
    k = radius * float(rng.uniform()) ** (1.0 / d) / norm
    return tuple(float(c + k * x) for c, x in zip(center, v))


def steer(start: Sequence[float], target: Sequence[float], step: float) -> Point:
    """Move from ``start`` toward ``target`` by at most ``step``."""
    if step <= 0.0:
        raise ValueError("steering range must be positive")
    d = math.dist(start, target)
    if d <= step:
        return tuple(target)
    k = step / d
    return tuple(s + k * (t - s) for s, t in zip(start, target))
