"""Williams' identities for five bodies, the number nu, inequality chains and
the graph of the sixty fractions.

For a normalized planar central configuration of five bodies, every 2x2
minor of the shifted distance table satisfies

    S_ik S_jl - S_il S_jk = nu * m_h * Delta_ijh * Delta_klh

(S meaning 1/r**3 - 1, h the index missing from i, j, k, l), with one
number nu = nu1 * nu2 / ||U ^ X ^ Y||**2 shared by all fifteen identities.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .bwc import SpectralReport, full_spectrum
from .core import (
    COLLINEAR_RTOL,
    CentralConfiguration,
    DegenerateError,
    DimensionError,
    IntegrityError,
    areas,
    permutation_parity,
    wedge_norm_squared,
)
from .geometry import HullClass, HullTag

IDENTITY_RTOL = 1e-8
EPS = 1e-30

EVEN_PERMUTATIONS = tuple(p for p in itertools.permutations(range(5)) if permutation_parity(p) == 0)


class UnsupportedClassError(ValueError):
    pass


def identities():
    """The fifteen identities as (h, (i, j), (k, l)), 0-based, i < j, k < l."""
    out = []
    for h in range(5):
        a, b, c, d = (k for k in range(5) if k != h)
        for (i, j), (k, l) in (((a, b), (c, d)), ((a, c), (b, d)), ((a, d), (b, c))):
            out.append((h, (i, j), (k, l)))
    return out


def _require_five(cc):
    if cc.n != 5:
        raise DimensionError("Williams identities are for five bodies")


def identity_sides(cc: CentralConfiguration):
    """(lhs, area_products, degenerate) arrays over ``identities()``.

    ``area_products`` is m_h Delta_ijh Delta_klh; ``degenerate`` flags
    identities with a collinear triangle on the right-hand side.
    """
    _require_five(cc)
    sh = cc.configuration.distances.s_shifted
    at = areas(cc.configuration)
    m = cc.masses.values
    lhs, rhs, deg = [], [], []
    for h, (i, j), (k, l) in identities():
        lhs.append(sh[i, k] * sh[j, l] - sh[i, l] * sh[j, k])
        rhs.append(m[h] * at(i, j, h) * at(k, l, h))
        deg.append(at.is_collinear(i, j, h) or at.is_collinear(k, l, h))
    return np.array(lhs), np.array(rhs), np.array(deg)


def nu_spectral(cc: CentralConfiguration, report: SpectralReport | None = None) -> float:
    report = report or full_spectrum(cc)
    w2 = wedge_norm_squared(cc.configuration, cc.masses)
    if w2 <= COLLINEAR_RTOL * cc.masses.total**3 * cc.configuration.scale**4:
        raise DegenerateError("collinear configuration")
    return report.nu1 * report.nu2 / w2


def nu_ratio(cc: CentralConfiguration) -> float:
    """Least-squares nu over the identities with non-degenerate areas:
    sum(lhs * p) / sum(p * p), p the area products."""
    lhs, rhs, deg = identity_sides(cc)
    keep = ~deg
    if not np.any(keep):
        raise DegenerateError("every identity has a collinear triangle")
    return float(np.sum(lhs[keep] * rhs[keep]) / np.sum(rhs[keep] ** 2))


def williams_nu(cc: CentralConfiguration, report: SpectralReport | None = None):
    """nu computed twice: from the spectrum and from the identities."""
    return nu_spectral(cc, report), nu_ratio(cc)


def identity_residuals(cc: CentralConfiguration, nu: float) -> np.ndarray:
    """One residual per identity.

    Regular identities use |lhs - nu p| / (|lhs| + |nu p| + 1e-30). When a
    triangle on the right is collinear both sides should vanish, and the
    residual is |lhs| relative to the square of the largest |S_ij - 1|.
    """
    lhs, rhs, deg = identity_sides(cc)
    rel = np.abs(lhs - nu * rhs) / (np.abs(lhs) + np.abs(nu * rhs) + EPS)
    sh = cc.configuration.distances.s_shifted
    zero = np.abs(lhs) / max(np.max(np.abs(sh)) ** 2, 1.0)
    return np.where(deg, zero, rel)


def sign_correspondence(cc: CentralConfiguration) -> bool:
    """Minors and area products are both positive, both negative or both zero."""
    lhs, rhs, deg = identity_sides(cc)
    sh = cc.configuration.distances.s_shifted
    zero_lhs = np.abs(lhs) <= IDENTITY_RTOL * max(np.max(np.abs(sh)) ** 2, 1.0)
    ok = np.where(deg, zero_lhs, np.sign(lhs) == np.sign(rhs))
    return bool(np.all(ok))


def _pair_sums(cc, coef_fn):
    n = cc.n
    at = areas(cc.configuration)
    m = cc.masses.values
    worst = 0.0
    for a, b in itertools.permutations(range(n), 2):
        terms = np.array([m[j] * coef_fn(a, b, j) * at(a, b, j) for j in range(n) if j not in (a, b)])
        worst = max(worst, abs(terms.sum()) / (np.abs(terms).sum() + EPS))
    return worst


def first_kind_residual(cc: CentralConfiguration) -> float:
    """Worst relative value of sum_j m_j S_aj Delta_abj (and the b-version)."""
    sh = cc.configuration.distances.s_shifted
    return max(_pair_sums(cc, lambda a, b, j: sh[a, j]), _pair_sums(cc, lambda a, b, j: sh[b, j]))


def kla_residual(cc: CentralConfiguration) -> float:
    """Worst relative value of sum_j m_j (S_aj - S_bj) Delta_abj."""
    s = cc.configuration.distances.s
    return _pair_sums(cc, lambda a, b, j: s[a, j] - s[b, j])


# --- inequality chains -------------------------------------------------------


@dataclass(frozen=True)
class Inequality:
    """Signed margin of one numbered statement; positive when it holds."""

    label: str
    margin: float
    size: float
    kind: str = "chain"  # chain, distance or sign

    @property
    def holds(self) -> bool:
        return self.margin >= -1e-9 * self.size

    @property
    def strict(self) -> bool:
        return self.margin > IDENTITY_RTOL * self.size


class _Numbered:
    """Access to S and r with the classical 1-based numbering."""

    def __init__(self, cc, relabeling):
        self.sh = cc.configuration.distances.s_shifted
        self.r = cc.configuration.distances.r
        self.lab = relabeling

    def S(self, i, j):
        return self.sh[self.lab[i - 1], self.lab[j - 1]]

    def R(self, i, j):
        return self.r[self.lab[i - 1], self.lab[j - 1]]

    def P(self, a, b):
        """Product S_a S_b for two-digit codes such as 12, 34."""
        return self.S(*divmod(a, 10)) * self.S(*divmod(b, 10))


def _less(label, small, big, kind="chain"):
    return Inequality(label, big - small, max(abs(small), abs(big)), kind)


def _product_chain(num, chain):
    """chain: ((a, b), rel, (c, d), rel, (e, f)) with rel in '<=', '>='."""
    (a, b), r1, (c, d), r2, (e, f) = chain
    x, y, z = num.P(a, b), num.P(c, d), num.P(e, f)
    out = []
    for (u, cu), rel, (v, cv) in (((x, (a, b)), r1, (y, (c, d))), ((y, (c, d)), r2, (z, (e, f)))):
        label = f"S{cu[0]}S{cu[1]} {rel} S{cv[0]}S{cv[1]}"
        out.append(_less(label, u, v) if rel == "<=" else _less(label, v, u))
    return out


TRIANGULAR_CHAINS = (
    ((23, 45), "<=", (24, 35), "<=", (25, 34)),
    ((13, 45), "<=", (15, 34), "<=", (14, 35)),
    ((12, 45), "<=", (15, 24), "<=", (25, 14)),
    ((13, 25), "<=", (12, 35), "<=", (15, 23)),
    ((23, 14), "<=", (12, 34), "<=", (13, 24)),
)

QUADRILATERAL_CHAINS = (
    ((23, 45), ">=", (35, 24), "<=", (25, 34)),
    ((15, 34), ">=", (13, 45), "<=", (14, 35)),
    ((14, 25), ">=", (15, 24), "<=", (12, 45)),
    ((12, 35), ">=", (13, 25), "<=", (15, 23)),
    ((12, 34), "<=", (13, 24), ">=", (14, 23)),
)


def _dist_greater(num, big, small):
    a, b = divmod(big, 10)
    c, d = divmod(small, 10)
    return _less(f"r{big} > r{small}", num.R(c, d), num.R(a, b), "distance")


def _strictly_convex(cc, hull):
    out = []
    lab = hull.relabeling
    for k in range(5):
        num = _Numbered(cc, lab[k:] + lab[:k])
        a, b, c = num.P(12, 34), num.P(13, 24), num.P(14, 23)
        tag = f"[start {k + 1}] "
        out.append(_less(tag + "S12S34 > S13S24", b, a))
        out.append(_less(tag + "S13S24 > S14S23", c, b))
    num = _Numbered(cc, lab)
    for big, s1, s2 in ((13, 12, 23), (24, 23, 34), (35, 34, 45), (14, 45, 15), (25, 15, 12)):
        out.append(_dist_greater(num, big, s1))
        out.append(_dist_greater(num, big, s2))
    for (p1, p2), (c1, c2) in (
        ((12, 23), (14, 34)),
        ((23, 34), (25, 45)),
        ((34, 45), (13, 15)),
        ((45, 15), (24, 12)),
        ((15, 12), (35, 23)),
    ):
        premise = _dist_greater(num, p1, p2)
        concl = _dist_greater(num, c1, c2)
        # "not P or Q" as a signed margin
        margin = max(-premise.margin, concl.margin)
        out.append(Inequality(f"r{p1} > r{p2} => r{c1} > r{c2}", margin, max(premise.size, concl.size), "distance"))
    return out


def _triangular(cc, hull):
    num = _Numbered(cc, hull.relabeling)
    out = []
    for chain in TRIANGULAR_CHAINS:
        out += _product_chain(num, chain)
    for big, small in ((15, 45), (24, 45), (15, 14), (24, 25), (13, 14), (23, 25)):
        out.append(_dist_greater(num, big, small))
    neg = sorted([-num.S(1, 2), -num.S(2, 3), -num.S(1, 3)])
    out.append(Inequality("two of S12, S23, S13 negative", neg[1], max(abs(v) for v in neg), "sign"))
    return out


def _quadrilateral(cc, hull):
    num = _Numbered(cc, hull.relabeling)
    out = []
    for chain in QUADRILATERAL_CHAINS:
        out += _product_chain(num, chain)
    lab = hull.relabeling
    for k in range(4):
        rot = _Numbered(cc, lab[k:4] + lab[:k] + lab[4:])
        out.append(_dist_greater(rot, 13, 15))
        a = _dist_greater(rot, 13, 12)
        b = _dist_greater(rot, 13, 14)
        out.append(
            Inequality(f"[rot {k}] r13 > r12 or r13 > r14", max(a.margin, b.margin), max(a.size, b.size), "distance")
        )
    out.append(Inequality("S13 < 0", -num.S(1, 3), abs(num.S(1, 3)), "sign"))
    out.append(Inequality("S24 < 0", -num.S(2, 4), abs(num.S(2, 4)), "sign"))
    return out


def check_chain(cc: CentralConfiguration, hull: HullClass):
    """Signed margins of every numbered inequality that applies to the hull class."""
    _require_five(cc)
    if hull.tag == HullTag.STRICTLY_CONVEX:
        return _strictly_convex(cc, hull)
    if hull.tag == HullTag.TRIANGULAR:
        return _triangular(cc, hull)
    if hull.tag == HullTag.QUADRILATERAL:
        return _quadrilateral(cc, hull)
    raise UnsupportedClassError(f"no inequality chains for hull class {hull.tag.value}")


# --- the sixty fractions -----------------------------------------------------


def fraction_parts(cc: CentralConfiguration, perm):
    """(numerator, denominator) of the fraction labelled by (i, j, h, k, l)."""
    i, j, h, k, l = perm
    sh = cc.configuration.distances.s_shifted
    at = areas(cc.configuration)
    num = sh[i, k] * sh[j, l] - sh[i, l] * sh[j, k]
    den = cc.masses.values[h] * at(i, j, h) * at(k, l, h)
    return num, den


def fraction_values(cc: CentralConfiguration):
    """Map from each even permutation (0-based) to its fraction, None when a
    triangle in the denominator is collinear at threshold."""
    _require_five(cc)
    at = areas(cc.configuration)
    out = {}
    for perm in EVEN_PERMUTATIONS:
        i, j, h, k, l = perm
        if at.is_collinear(i, j, h) or at.is_collinear(k, l, h):
            out[perm] = None
        else:
            num, den = fraction_parts(cc, perm)
            out[perm] = num / den
    return out


def rot_last(p):
    """(i, j, h, k, l) -> (i, j, l, h, k)."""
    i, j, h, k, l = p
    return (i, j, l, h, k)


def rot_first(p):
    """(i, j, h, k, l) -> (h, i, j, k, l)."""
    i, j, h, k, l = p
    return (h, i, j, k, l)


def rot_first_inv(p):
    i, j, h, k, l = p
    return (j, h, i, k, l)


def swap_pairs(p):
    """(i, j, h, k, l) -> (k, l, h, i, j): same numerator and denominator."""
    i, j, h, k, l = p
    return (k, l, h, i, j)


def flip_pairs(p):
    """(i, j, h, k, l) -> (j, i, h, l, k): numerator unchanged, both area factors change sign."""
    i, j, h, k, l = p
    return (j, i, h, l, k)


def _label(p):
    return "".join(str(k + 1) for k in p)


@dataclass
class FractionGraph:
    """Quotient of the sixty labels by (i,j,h,k,l) ~ (k,l,h,i,j); edges join
    classes related by a circular shift of the last three indices."""

    class_map: dict
    vertices: list
    edges: list
    triangles: list = field(default_factory=list)
    pentagons: list = field(default_factory=list)

    def neighbors(self, v):
        return sorted({b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v})

    def degree(self, v):
        return len(self.neighbors(v))

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(len(self.vertices)))
        g.add_edges_from(self.edges)
        return g

    def to_dot(self) -> str:
        lines = ["graph fractions {"]
        for v, rep in enumerate(self.vertices):
            lines.append(f'  v{v} [label="{_label(rep)}"];')
        for a, b in self.edges:
            lines.append(f"  v{a} -- v{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def walk(self, start, moves):
        """Apply label moves from ``start``; returns the list of labels visited."""
        seq = [tuple(start)]
        for mv in moves:
            seq.append(mv(seq[-1]))
        return seq

    def class_of(self, perm) -> int:
        return self.class_map[tuple(perm)]


def build_fraction_graph() -> FractionGraph:
    reps = sorted({min(p, swap_pairs(p)) for p in EVEN_PERMUTATIONS})
    index = {r: v for v, r in enumerate(reps)}
    class_map = {p: index[min(p, swap_pairs(p))] for p in EVEN_PERMUTATIONS}
    edges = set()
    for p in EVEN_PERMUTATIONS:
        a, b = class_map[p], class_map[rot_last(p)]
        if a != b:
            edges.add((min(a, b), max(a, b)))
    triangles = set()
    for p in EVEN_PERMUTATIONS:
        tri = frozenset(class_map[q] for q in (p, rot_last(p), rot_last(rot_last(p))))
        triangles.add(tri)
    pentagons = set()
    for p in EVEN_PERMUTATIONS:
        seq = [p]
        for mv in (rot_last, rot_first, rot_last, rot_first, rot_last):
            seq.append(mv(seq[-1]))
        cyc = [class_map[q] for q in seq]
        if cyc[-1] == cyc[0] and len(set(cyc[:-1])) == 5:
            pentagons.add(frozenset(cyc[:-1]))
    return FractionGraph(
        class_map=class_map,
        vertices=reps,
        edges=sorted(edges),
        triangles=sorted(sorted(t) for t in triangles),
        pentagons=sorted(sorted(t) for t in pentagons),
    )


# --- certificate ---------------------------------------------------------------


@dataclass
class WilliamsCertificate:
    nu_spectral: float
    nu_ratio: float
    identity_residuals: np.ndarray
    chain_margins: list
    sign_checks: dict
    verdict: bool
    collinear_threshold: float = COLLINEAR_RTOL
    hull: HullClass | None = None
    report: SpectralReport | None = None

    @property
    def nu(self) -> float:
        return self.nu_spectral

    @property
    def max_identity_residual(self) -> float:
        return float(np.max(self.identity_residuals))

    @property
    def min_chain_margin(self) -> float:
        """Smallest margin relative to the size of its sides."""
        if not self.chain_margins:
            return float("nan")
        return float(min(q.margin / max(q.size, EPS) for q in self.chain_margins))


def verify_identities(cc: CentralConfiguration, nu: float | None = None):
    """Residuals of the fifteen identities; nu defaults to the least-squares value."""
    if nu is None:
        nu = nu_ratio(cc)
    return identity_residuals(cc, nu)


def certify(cc: CentralConfiguration, hull: HullClass | None = None) -> WilliamsCertificate:
    """Run the identity, nu and chain checks on a normalized five-body configuration."""
    from .geometry import classify_hull

    _require_five(cc)
    hull = hull or classify_hull(cc.configuration)
    try:
        report = full_spectrum(cc)
        nu_s = nu_spectral(cc, report)
    except (IntegrityError, DegenerateError):
        report, nu_s = None, float("nan")
    try:
        nu_r = nu_ratio(cc)
    except DegenerateError:
        nu_r = float("nan")
    nu_used = nu_s if np.isfinite(nu_s) else nu_r
    residuals = identity_residuals(cc, nu_used) if np.isfinite(nu_used) else np.full(15, np.inf)
    try:
        chains = check_chain(cc, hull)
    except UnsupportedClassError:
        chains = []
    sign_checks = {q.label: q.holds for q in chains if q.kind == "sign"}
    sign_checks["sign correspondence"] = sign_correspondence(cc)
    verdict = bool(
        np.isfinite(nu_s)
        and np.isfinite(nu_r)
        and nu_s > 0
        and np.max(residuals) < IDENTITY_RTOL
        and abs(nu_s - nu_r) < IDENTITY_RTOL * abs(nu_s)
        and all(q.holds for q in chains)
        and hull.tag != HullTag.COLLINEAR
    )
    return WilliamsCertificate(nu_s, nu_r, residuals, chains, sign_checks, verdict, COLLINEAR_RTOL, hull, report)
