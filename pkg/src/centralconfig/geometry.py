"""Hull classification and the geometric obstructions to centrality."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .core import (
    COLLINEAR_RTOL,
    CentralConfiguration,
    ConfigurationError,
    PlanarConfiguration,
)

# snap-to-boundary band for quadrant and sector membership, relative to scale
BOUNDARY_RTOL = 1e-10


class NormalizationRequiredError(ValueError):
    pass


class HullTag(str, enum.Enum):
    COLLINEAR = "collinear"
    TRIANGULAR = "triangular"
    QUADRILATERAL = "quadrilateral"
    STRICTLY_CONVEX = "strictly_convex"


@dataclass(frozen=True)
class HullClass:
    """Hull shape plus the canonical numbering.

    ``relabeling[k]`` is the body index that plays the role of body k + 1 in
    the classical numbered statements; ``boundary`` lists the extreme points
    counterclockwise.
    """

    tag: HullTag
    relabeling: tuple
    boundary: tuple


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_indices(points, tol=None):
    """Extreme points counterclockwise (monotone chain).

    Points within ``tol`` (default COLLINEAR_RTOL * scale**2 in cross-product
    units) of a hull edge are not extreme.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if tol is None:
        d = pts[None] - pts[:, None]
        scale = np.hypot(d[..., 0], d[..., 1]).max()
        tol = COLLINEAR_RTOL * scale**2
    order = sorted(range(n), key=lambda k: (pts[k, 0], pts[k, 1]))

    def chain(idx):
        out = []
        for k in idx:
            while len(out) >= 2 and _cross(pts[out[-2]], pts[out[-1]], pts[k]) <= tol:
                out.pop()
            out.append(k)
        return out

    lower = chain(order)
    upper = chain(order[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return tuple(hull)
    # start from the smallest index, keep counterclockwise order
    s = hull.index(min(hull))
    return tuple(hull[s:] + hull[:s])


def _ccw_convex(pts, quad, tol):
    """Smallest turn of the closed polygon; positive for strictly convex ccw."""
    turns = [_cross(pts[quad[k]], pts[quad[(k + 1) % 4]], pts[quad[(k + 2) % 4]]) for k in range(4)]
    return min(turns)


def classify_hull(config: PlanarConfiguration) -> HullClass:
    pts = config.points
    n = config.n
    tol = COLLINEAR_RTOL * config.scale**2
    hull = convex_hull_indices(pts, tol)
    if len(hull) < 3:
        return HullClass(HullTag.COLLINEAR, tuple(range(n)), tuple(hull))
    if len(hull) == n:
        return HullClass(HullTag.STRICTLY_CONVEX, hull, hull)
    inner = [k for k in range(n) if k not in hull]
    if len(hull) == 4:
        return HullClass(HullTag.QUADRILATERAL, hull + tuple(inner), hull)
    if len(hull) == 3 and n == 4:
        return HullClass(HullTag.TRIANGULAR, hull + tuple(inner), hull)
    if len(hull) == 3 and n == 5:
        best = []
        for rot in range(3):
            q1, q2, q3 = (hull[(rot + k) % 3] for k in range(3))
            for q4, q5 in (inner, inner[::-1]):
                turn = _ccw_convex(pts, (q1, q2, q5, q4), tol)
                best.append((turn, (q1, q2, q3, q4, q5)))
        strict = [lab for t, lab in best if t > tol]
        weak = [lab for t, lab in best if t >= -tol]
        pick = min(strict) if strict else (min(weak) if weak else max(best)[1])
        return HullClass(HullTag.TRIANGULAR, pick, hull)
    raise ConfigurationError(f"no canonical class for {len(hull)} extreme points among {n}")


# --- perpendicular bisector theorem ----------------------------------------


@dataclass(frozen=True)
class QuadrantReport:
    """Quadrant membership of every other body for the pair (p, q).

    ``members[k]`` is (quadrant, interior) with quadrant in 1..4 and
    interior False for bodies within the boundary band of an axis.
    """

    pair: tuple
    members: dict
    verdict: bool

    def interior_count(self, quadrants) -> int:
        return sum(1 for quad, inside in self.members.values() if inside and quad in quadrants)


def perpendicular_bisector_check(config: PlanarConfiguration, masses=None, p: int = 0, q: int = 1) -> QuadrantReport:
    """Quadrant census for the axes (line pq, perpendicular bisector of pq).

    ``verdict`` is False when exactly one of the open double quadrants
    I u III and II u IV holds bodies, which no central configuration allows
    whatever the masses. ``masses`` is accepted for symmetry with the other
    checks and unused.
    """
    if p == q:
        raise ValueError("p and q must differ")
    pts = config.points
    mid = 0.5 * (pts[p] + pts[q])
    ex = pts[q] - pts[p]
    ex = ex / np.hypot(*ex)
    ey = np.array([-ex[1], ex[0]])
    band = BOUNDARY_RTOL * config.scale
    members = {}
    for k in range(config.n):
        if k in (p, q):
            continue
        u, v = (pts[k] - mid) @ ex, (pts[k] - mid) @ ey
        if u >= 0:
            quad = 1 if v >= 0 else 4
        else:
            quad = 2 if v >= 0 else 3
        members[k] = (quad, abs(u) > band and abs(v) > band)
    rep = QuadrantReport((p, q), members, True)
    odd = rep.interior_count((1, 3))
    even = rep.interior_count((2, 4))
    return QuadrantReport((p, q), members, (odd == 0) == (even == 0))


def pbt_all_pairs(config: PlanarConfiguration) -> bool:
    return all(
        perpendicular_bisector_check(config, None, p, q).verdict
        for p, q in itertools.combinations(range(config.n), 2)
    )


# --- disk sector theorem ---------------------------------------------------


def _require_normalized(cc):
    if not cc.normalized or abs(cc.lam - cc.masses.total) > 1e-12 * cc.masses.total:
        raise NormalizationRequiredError("the disk sector test needs lambda = M")


def disk_sector_check(cc: CentralConfiguration, body: int, direction: float) -> bool:
    """Paired-domain test around ``body`` for the line at angle ``direction``.

    With n the unit normal of the line, domain A is the open half disk
    (r < 1) on the +n side together with the open region r > 1 on the -n
    side; domain B is the mirror pair. Every body in A contributes a
    positive term to the normal component of the equilibrium equation and
    every body in B a negative one, so exactly one empty domain is a
    violation (returns False).
    """
    _require_normalized(cc)
    pts = cc.points
    nrm = np.array([-np.sin(direction), np.cos(direction)])
    band = BOUNDARY_RTOL * cc.configuration.scale
    in_a = in_b = 0
    for k in range(cc.n):
        if k == body:
            continue
        d = pts[k] - pts[body]
        side = d @ nrm
        radial = np.hypot(*d) - 1.0
        if abs(side) <= band or abs(radial) <= band:
            continue
        if (side > 0) == (radial < 0):
            in_a += 1
        else:
            in_b += 1
    return (in_a == 0) == (in_b == 0)


def dst_directions(config: PlanarConfiguration, body: int, samples: int = 16):
    """Sampled angles plus the directions towards every other body."""
    pts = config.points
    angles = [2 * np.pi * k / samples for k in range(samples)]
    for k in range(config.n):
        if k != body:
            d = pts[k] - pts[body]
            angles.append(float(np.arctan2(d[1], d[0])))
    return angles


def dst_all(cc: CentralConfiguration, samples: int = 16) -> bool:
    return all(
        disk_sector_check(cc, b, a)
        for b in range(cc.n)
        for a in dst_directions(cc.configuration, b, samples)
    )


# --- exterior point ---------------------------------------------------------


def strictly_exterior(point, tri) -> bool:
    """True when ``point`` lies outside the closed triangle ``tri``."""
    a, b, c = (np.asarray(v, dtype=float) for v in tri)
    p = np.asarray(point, dtype=float)
    area = _cross(a, b, c)
    if area == 0:
        raise ValueError("degenerate triangle")
    w = np.array([_cross(b, c, p), _cross(c, a, p), _cross(a, b, p)]) / area
    return bool(np.any(w < 0))


def exterior_test(config: PlanarConfiguration, h: int, i: int, j: int, k: int) -> bool:
    """Distance hypothesis r_hi <= r_hk and r_hj <= r_hk.

    When it holds, q_k must be strictly exterior to the triangle q_h q_i q_j;
    that implication is checked by barycentric signs and a failure raises
    AssertionError.
    """
    if len({h, i, j, k}) != 4:
        raise ValueError("indices must be distinct")
    r = config.distances.r
    hyp = bool(r[h, i] <= r[h, k] and r[h, j] <= r[h, k])
    if hyp:
        pts = config.points
        if _cross(pts[h], pts[i], pts[j]) != 0:
            ext = strictly_exterior(pts[k], (pts[h], pts[i], pts[j]))
            if not ext:
                raise AssertionError("distance hypothesis holds but the point is not exterior")
    return hyp
