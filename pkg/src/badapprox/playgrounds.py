"""Metric playgrounds: the Minkowski space, the unit interval, and the
middle-thirds Cantor set.

A playground bundles the metric, membership in the closed play set Y, and
sampling of Y-points inside closed balls; games and diffuseness checks are
generic over this interface.  Closed sets handed to ``set_distance`` are
singletons (``PointSet``), anchored subspaces, or the empty deletion
(distance infinity, the dummy move).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Iterable

import mpmath as mp

from .numberfield import AnchoredSubspace, NumberFieldSpec, SNumber, subspace_distance


@dataclass(frozen=True)
class PointSet:
    """The singleton closed set {point}."""

    point: Any


class Playground:
    name = "abstract"

    def dist(self, a, b):
        raise NotImplementedError

    def contains(self, point) -> bool:
        raise NotImplementedError

    def sample_in_ball(self, center, radius, rng: random.Random):
        """A point of Y within the closed ball; None when sampling fails."""
        raise NotImplementedError

    def set_distance(self, point, closed_set):
        if closed_set is None:
            return mp.inf
        if isinstance(closed_set, PointSet):
            return self.dist(point, closed_set.point)
        raise TypeError(f"{self.name} playground cannot measure {type(closed_set).__name__}")

    def sets_distance(self, point, closed_sets: Iterable):
        """Distance to a finite union; infinity for the empty union."""
        distances = [self.set_distance(point, s) for s in closed_sets]
        return min(distances) if distances else mp.inf


class KSpace(Playground):
    """The full Minkowski space of a number field with the sup metric."""

    def __init__(self, field: NumberFieldSpec):
        self.field = field
        self.name = f"K_S({field.name})"

    def dist(self, a: SNumber, b: SNumber):
        return a.dist(b)

    def contains(self, point) -> bool:
        return isinstance(point, SNumber) and point.field is self.field

    def sample_in_ball(self, center: SNumber, radius, rng: random.Random):
        deltas = []
        radius = mp.mpf(radius)
        for place in self.field.places:
            if place.kind == "R":
                deltas.append(radius * (2 * rng.random() - 1))
            else:
                while True:
                    re, im = 2 * rng.random() - 1, 2 * rng.random() - 1
                    if re * re + im * im <= 1:
                        break
                deltas.append(radius * mp.mpc(re, im))
        return center.shift(deltas)

    def set_distance(self, point, closed_set):
        if isinstance(closed_set, AnchoredSubspace):
            return subspace_distance(point, closed_set)
        if isinstance(closed_set, PointSet) and isinstance(closed_set.point, SNumber):
            return point.dist(closed_set.point)
        return super().set_distance(point, closed_set)


class UnitInterval(Playground):
    """[0, 1] with the usual metric; points are floats or mpf."""

    name = "unit-interval"

    def dist(self, a, b):
        return abs(mp.mpf(a) - mp.mpf(b))

    def contains(self, point) -> bool:
        return 0 <= point <= 1

    def sample_in_ball(self, center, radius, rng: random.Random):
        lo = max(0.0, float(center) - float(radius))
        hi = min(1.0, float(center) + float(radius))
        if lo > hi:
            return None
        return lo + (hi - lo) * rng.random()


class CantorSet(Playground):
    """The middle-thirds Cantor set, represented at a fixed ternary depth.

    Points are floats of the form sum(d_j 3^-j) with digits in {0, 2}; the
    digit expansion is recovered exactly from the float via one integer
    rounding, so the depth is capped where that stays exact.
    """

    name = "cantor"

    def __init__(self, depth: int = 24):
        if depth > 26:
            raise ValueError("depth beyond 26 is not exactly representable in floats")
        self.depth = depth
        self._scale = 3**depth

    def digits(self, x) -> list[int]:
        n = round(float(x) * self._scale)
        out = []
        for _ in range(self.depth):
            n, d = divmod(n, 3)
            out.append(d)
        out.reverse()
        return out

    def value(self, digits: Iterable[int]) -> float:
        n = 0
        count = 0
        for d in digits:
            n = 3 * n + d
            count += 1
        return n * 3.0 ** (-count)

    def contains(self, point) -> bool:
        if not 0 <= point <= 1:
            return False
        # scaled values are integers spaced 1 apart; allow a few float ulp
        if abs(round(float(point) * self._scale) - float(point) * self._scale) > 1e-3:
            return False
        return all(d != 1 for d in self.digits(point))

    def dist(self, a, b):
        return abs(mp.mpf(a) - mp.mpf(b))

    def sample_point(self, rng: random.Random) -> float:
        return self.value(rng.choice((0, 2)) for _ in range(self.depth))

    def sample_in_ball(self, center, radius, rng: random.Random):
        radius = float(radius)
        if radius >= 1.0:
            return self.sample_point(rng)
        k = min(self.depth, max(0, math.ceil(-math.log(radius, 3))))
        if 3.0 ** (-k) > radius:
            k = min(self.depth, k + 1)
        prefix = self.digits(center)[:k]
        tail = [rng.choice((0, 2)) for _ in range(self.depth - k)]
        return self.value(prefix + tail)
