"""Numerical diffuseness checkers for game playgrounds.

Covers three certificates: sampled curves with derivative bounded away from
a family of linear directions, supports of Ahlfors-regular measures, and
the escape-point selection that keeps the shrinking player unstuck on a
diffuse set.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class EscapeFailure(RuntimeError):
    """No escape point found; the requested ratio or scale is too large."""


class NondegeneracyError(ValueError):
    """The curve has a (numerically) vanishing derivative at a node."""


@dataclass(frozen=True)
class CurveNode:
    t: float
    point: np.ndarray
    deriv: np.ndarray


@dataclass(frozen=True)
class SampledCurve:
    """A curve given by nodes with finite-difference derivatives.

    Central differences at interior nodes, one-sided at the endpoints."""

    nodes: tuple[CurveNode, ...]
    ambient_dim: int

    @classmethod
    def from_samples(cls, ts: Sequence[float], points: Sequence[Sequence[float]]) -> "SampledCurve":
        ts = [float(t) for t in ts]
        pts = [np.asarray(p, dtype=float) for p in points]
        if len(ts) != len(pts) or len(ts) < 2:
            raise ValueError("need at least two (t, point) samples")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("parameters must be strictly increasing")
        nodes = []
        for i in range(len(ts)):
            if i == 0:
                d = (pts[1] - pts[0]) / (ts[1] - ts[0])
            elif i == len(ts) - 1:
                d = (pts[-1] - pts[-2]) / (ts[-1] - ts[-2])
            else:
                d = (pts[i + 1] - pts[i - 1]) / (ts[i + 1] - ts[i - 1])
            nodes.append(CurveNode(ts[i], pts[i], d))
        return cls(tuple(nodes), len(pts[0]))

    @classmethod
    def from_function(cls, fn, n_nodes: int = 101) -> "SampledCurve":
        ts = [i / (n_nodes - 1) for i in range(n_nodes)]
        return cls.from_samples(ts, [fn(t) for t in ts])


@dataclass(frozen=True)
class DiffuseReport:
    """Curve non-tangency constants and the implied diffuseness ratio bound.

    beta_bound = a c / (4 b sqrt(n)); positive exactly when the curve is
    nowhere tangent to the direction family at the sampled nodes."""

    a: float
    b: float
    c: float
    beta_bound: float
    tangent: bool
    rho_estimates: Optional[tuple[float, ...]] = None


def _orthonormal_basis(direction: np.ndarray) -> np.ndarray:
    mat = np.atleast_2d(np.asarray(direction, dtype=float))
    q, r = np.linalg.qr(mat.T)
    keep = np.abs(np.diag(r)) > 1e-12
    return q[:, keep]


def curve_diffuse_params(curve: SampledCurve, directions: Sequence, tol: float = 1e-9,
                         estimate_rho: bool = False, seed: int = 0) -> DiffuseReport:
    """Non-tangency constants of a curve against linear direction subspaces.

    a is the worst normalized derivative component orthogonal to a family
    direction; b and c bound the derivative norm above and below."""
    if not directions:
        raise ValueError("at least one direction subspace is required")
    bases = [_orthonormal_basis(d) for d in directions]
    n = curve.ambient_dim

    speeds = []
    a_val = math.inf
    for node in curve.nodes:
        speed = float(np.linalg.norm(node.deriv))
        if speed <= tol:
            raise NondegeneracyError(f"vanishing derivative at parameter {node.t}")
        speeds.append(speed)
        for basis in bases:
            ortho = node.deriv - basis @ (basis.T @ node.deriv)
            a_val = min(a_val, float(np.linalg.norm(ortho)) / speed)
    b_val, c_val = max(speeds), min(speeds)
    beta_bound = a_val * c_val / (4 * b_val * math.sqrt(n))
    tangent = a_val <= tol

    rho_estimates = None
    if estimate_rho:
        rho_estimates = tuple(
            _estimate_rho_at_node(curve, i, bases, beta_bound, seed) for i in range(len(curve.nodes))
        )
    return DiffuseReport(a_val, b_val, c_val, beta_bound, tangent, rho_estimates)


def _curve_points_within(curve: SampledCurve, center: np.ndarray, radius: float):
    return [n.point for n in curve.nodes if np.linalg.norm(n.point - center) <= radius]


def _estimate_rho_at_node(curve, index, bases, beta, seed) -> float:
    """Largest sampled scale at which escapes keep succeeding at this node."""
    if beta <= 0:
        return 0.0
    rng = random.Random(seed + index)
    node = curve.nodes[index]
    span = float(np.linalg.norm(curve.nodes[-1].point - curve.nodes[0].point)) or 1.0
    best = 0.0
    for k in range(1, 9):
        rho = span * 2.0 ** (-k)
        ok = True
        for _ in range(8):
            direction = bases[rng.randrange(len(bases))]
            anchor = node.point + rho * 0.1 * np.array([rng.uniform(-1, 1) for _ in range(curve.ambient_dim)])
            nearby = _curve_points_within(curve, node.point, (1 - beta) * rho)
            if not any(
                float(np.linalg.norm((p - anchor) - direction @ (direction.T @ (p - anchor)))) > 2 * beta * rho
                for p in nearby
            ):
                ok = False
                break
        if ok:
            best = rho
            break
    return best


def ahlfors_beta(a_reg: float, b_reg: float, delta: float) -> float:
    """Diffuseness threshold (a/b)^(1/delta) for an Ahlfors-regular support;
    any ratio strictly below it certifies the singleton family."""
    if not 0 < a_reg <= b_reg:
        raise ValueError("regularity constants must satisfy 0 < a <= b")
    if delta <= 0:
        raise ValueError("dimension delta must be positive")
    return float((a_reg / b_reg) ** (1.0 / delta))


def diffuse_escape(y, rho, closed_sets, beta_prime: float, playground,
                   rng: Optional[random.Random] = None, samples: int = 2000):
    """A playground point z within (1 - beta') rho of y and strictly farther
    than 2 beta' rho from the closed set(s): the escape move of a diffuse set.

    ``closed_sets`` is a single set or a finite union (tuple).  Sampling
    keeps the farthest candidate; exhaustion raises EscapeFailure."""
    if rng is None:
        rng = random.Random(0)
    if not isinstance(closed_sets, (tuple, list)):
        closed_sets = (closed_sets,)
    import mpmath as mp

    rho = mp.mpf(rho)
    threshold = 2 * mp.mpf(beta_prime) * rho
    if playground.sets_distance(y, closed_sets) > threshold:
        return y
    sample_radius = (1 - mp.mpf(beta_prime)) * rho
    best = None
    for _ in range(samples):
        z = playground.sample_in_ball(y, sample_radius, rng)
        if z is None:
            continue
        gap = playground.sets_distance(z, closed_sets)
        if best is None or gap > best[0]:
            best = (gap, z)
        if gap > threshold:
            return z
    raise EscapeFailure(
        f"no escape at scale {float(rho)} with ratio {beta_prime}"
        + (f"; best distance {float(best[0])}" if best else "")
    )


# ---------------------------------------------------------------------------
# file formats


def load_curve_csv(path) -> SampledCurve:
    """Curve input: CSV rows (t, coordinate...)."""
    ts, pts = [], []
    with open(path, newline="") as fp:
        for row in csv.reader(fp):
            if not row or row[0].lstrip().startswith("#") or row[0] == "t":
                continue
            ts.append(float(row[0]))
            pts.append([float(v) for v in row[1:]])
    return SampledCurve.from_samples(ts, pts)


def load_directions_json(path) -> list[np.ndarray]:
    """Direction family input: JSON list of subspaces, each a list of basis vectors."""
    with open(path) as fp:
        data = json.load(fp)
    return [np.asarray(d, dtype=float) for d in data]
