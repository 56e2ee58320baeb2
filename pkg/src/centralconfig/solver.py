"""Central configurations as equilibria of the amended Newtonian potential.

In the lambda = M normalization a central configuration is a critical point
of

    U_amended = sum_{i<j} m_i m_j (1/r_ij + r_ij**2 / 2),

whose gradient on body i is m_i sum_j m_j (1/r_ij**3 - 1) (q_j - q_i).
Planar solutions are found with a Levenberg-Marquardt iteration on that
gradient, restricted to the mass-orthogonal complement of translations and
rotations; collinear (Moulton) solutions by Newton on the convex 1-D problem.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CentralConfiguration,
    ConfigurationError,
    DimensionError,
    MassVector,
    PlanarConfiguration,
    SingularDistanceError,
    gradient_residual,
    multiplier,
    normalize,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    tolerance: float = 1e-12
    max_iterations: int = 200
    damping: float = 1e-3
    min_separation: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigurationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be at least 1")
        if not self.damping > 0:
            raise ConfigurationError("damping must be positive")
        if self.min_separation < 0:
            raise ConfigurationError("min_separation must be nonnegative")


@dataclass(frozen=True, eq=False)
class SolveResult:
    cc: CentralConfiguration
    iterations: int
    converged: bool
    hull: object = field(default=None)  # geometry.HullClass


def _check(masses, config):
    if masses.n != config.n:
        raise DimensionError("masses and configuration sizes differ")


def amended_potential(masses: MassVector, config: PlanarConfiguration) -> float:
    _check(masses, config)
    r = config.distances.r
    m = masses.values
    iu = np.triu_indices(config.n, 1)
    rr = r[iu]
    return float(np.sum(m[iu[0]] * m[iu[1]] * (1.0 / rr + 0.5 * rr * rr)))


def _pair_data(points):
    d = points[None, :, :] - points[:, None, :]  # d[i, j] = q_j - q_i
    r = np.hypot(d[..., 0], d[..., 1])
    np.fill_diagonal(r, 1.0)
    if np.any(r == 0.0):
        raise SingularDistanceError("coincident points")
    sh = 1.0 / r**3 - 1.0
    np.fill_diagonal(sh, 0.0)
    return d, r, sh


def _gradient(m, points):
    d, _, sh = _pair_data(points)
    return m[:, None] * np.einsum("j,ij,ijk->ik", m, sh, d)


def amended_gradient(masses: MassVector, config: PlanarConfiguration) -> np.ndarray:
    """Gradient of the amended potential, shape (n, 2).

    Row i is m_i sum_{j != i} m_j S_shifted_ij (q_j - q_i); it vanishes
    exactly at normalized central configurations.
    """
    _check(masses, config)
    return _gradient(masses.values, config.points)


def _hessian(m, points):
    """Hessian of the amended potential as a (2n, 2n) array, body-major."""
    n = len(m)
    d, r, sh = _pair_data(points)
    h = np.zeros((n, 2, n, 2))
    eye = np.eye(2)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dij = d[i, j]
            k = m[i] * m[j] * (sh[i, j] * eye - 3.0 / r[i, j] ** 5 * np.outer(dij, dij))
            h[i, :, j, :] = k
            h[i, :, i, :] -= k
    return h.reshape(2 * n, 2 * n)


def amended_hessian(masses: MassVector, config: PlanarConfiguration) -> np.ndarray:
    _check(masses, config)
    return _hessian(masses.values, config.points)


def _gauge_basis(m, points):
    """Euclidean-orthonormal basis of displacements mass-orthogonal to the
    two translations and the infinitesimal rotation."""
    n = len(m)
    c = points - m @ points / m.sum()
    gens = np.zeros((2 * n, 3))
    gens[0::2, 0] = 1.0
    gens[1::2, 1] = 1.0
    gens[0::2, 2] = -c[:, 1]
    gens[1::2, 2] = c[:, 0]
    w = np.repeat(m, 2)
    q, _ = np.linalg.qr(np.hstack([(w[:, None] * gens), np.eye(2 * n)]))
    # first three columns span W G; the rest complete an orthonormal basis
    return q[:, 3:]


def _force_scale(m, points):
    _, r, sh = _pair_data(points)
    iu = np.triu_indices(len(m), 1)
    return float(np.sum(m[iu[0]] * m[iu[1]] * (sh[iu] + 2.0) * r[iu]))


def _residual(m, points):
    return float(np.max(np.abs(_gradient(m, points))) / _force_scale(m, points))


def _min_separation(points):
    d = points[None] - points[:, None]
    r = np.hypot(d[..., 0], d[..., 1])
    np.fill_diagonal(r, np.inf)
    return float(r.min())


def _levenberg_marquardt(m, points, options, polish=3):
    """Returns (points, iterations, residual)."""
    mu = options.damping
    x = np.array(points, dtype=float)
    res = _residual(m, x)
    it = 0
    while it < options.max_iterations and res > options.tolerance:
        it += 1
        try:
            g = _gradient(m, x).ravel()
            b = _gauge_basis(m, x)
            jac = _hessian(m, x) @ b
        except SingularDistanceError:
            break
        jtj = jac.T @ jac
        jtg = jac.T @ g
        level = np.trace(jtj) / jtj.shape[0]
        accepted = False
        while mu <= 1e6:
            try:
                z = np.linalg.solve(jtj + mu * level * np.eye(jtj.shape[0]), -jtg)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            trial = x + (b @ z).reshape(-1, 2)
            if _min_separation(trial) > 0:
                try:
                    tres = _residual(m, trial)
                except SingularDistanceError:
                    tres = np.inf
                if tres < res:
                    x, res = trial, tres
                    mu = max(mu / 10.0, 1e-12)
                    accepted = True
                    break
            mu *= 10.0
        if not accepted:
            break
    if res <= options.tolerance:
        # a few undamped Newton steps push the residual down to roundoff
        for _ in range(polish):
            g = _gradient(m, x).ravel()
            b = _gauge_basis(m, x)
            jac = _hessian(m, x) @ b
            z, *_ = np.linalg.lstsq(jac, -g, rcond=None)
            trial = x + (b @ z).reshape(-1, 2)
            tres = _residual(m, trial)
            if tres >= res:
                break
            x, res = trial, tres
    return x, it, res


def seed_configuration(rng, n, shape="disk", min_separation=0.05, max_tries=10000):
    """Random starting positions.

    ``disk``: uniform in the unit disk. ``triangle`` (n = 5): three bodies
    near the vertices of a large triangle and two inside it.
    ``quadrilateral`` (n = 5): four bodies around a convex quadrilateral and
    one inside. ``pentagon`` (n = 5): a perturbed convex pentagon.
    """
    for _ in range(max_tries):
        if shape == "disk":
            rad = np.sqrt(rng.uniform(0, 1, n))
            ang = rng.uniform(0, 2 * np.pi, n)
            pts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        elif shape == "triangle" and n == 5:
            ang = np.pi / 2 + np.arange(3) * 2 * np.pi / 3 + rng.normal(0, 0.25, 3)
            rad = rng.uniform(0.9, 1.4, 3)
            outer = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
            inner = []
            while len(inner) < 2:
                w = rng.dirichlet([2.0, 2.0, 2.0])
                inner.append(w @ outer)
            pts = np.vstack([outer, inner])
        elif shape == "pentagon" and n == 5:
            ang = np.arange(5) * 2 * np.pi / 5 + rng.normal(0, 0.15, 5)
            rad = rng.uniform(0.8, 1.2, 5)
            pts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        elif shape == "quadrilateral" and n == 5:
            ang = np.pi / 4 + np.arange(4) * np.pi / 2 + rng.normal(0, 0.2, 4)
            rad = rng.uniform(0.7, 1.2, 4)
            outer = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
            inner = rng.normal(0, 0.2, 2)
            pts = np.vstack([outer, inner])
        else:
            raise ConfigurationError(f"unknown seed shape {shape!r} for n = {n}")
        pts = pts[rng.permutation(n)]
        if _min_separation(pts) >= min_separation:
            return pts
    raise ConfigurationError("could not draw a seed with the requested separation")


def _finish(masses, points, iterations, tolerance):
    from .geometry import classify_hull

    config = PlanarConfiguration(points)
    # at an equilibrium of the amended potential lambda equals M exactly
    cc = normalize(CentralConfiguration(masses, config, masses.total))
    converged = cc.gradient_residual <= tolerance
    return SolveResult(cc=cc, iterations=iterations, converged=converged, hull=classify_hull(cc.configuration))


def find_cc(masses: MassVector, options: SolveOptions | None = None, initial=None, shape="disk") -> SolveResult:
    """One damped-Newton solve from ``initial`` or from a seeded random start.

    Non-convergence is reported through ``SolveResult.converged``.
    """
    options = options or SolveOptions()
    if masses.n < 3:
        raise ConfigurationError("planar solves need at least three bodies")
    if initial is None:
        rng = np.random.default_rng(options.seed)
        start = seed_configuration(rng, masses.n, shape, options.min_separation)
    else:
        start = np.asarray(getattr(initial, "points", initial), dtype=float)
        if start.shape != (masses.n, 2):
            raise DimensionError("initial positions have the wrong shape")
    pts, it, _ = _levenberg_marquardt(masses.values, start, options)
    try:
        return _finish(masses, pts, it, options.tolerance)
    except (SingularDistanceError, ValueError) as exc:
        log.debug("solve ended on a degenerate configuration: %s", exc)
        cc = CentralConfiguration(masses, PlanarConfiguration(start), masses.total, float("inf"), False)
        return SolveResult(cc=cc, iterations=it, converged=False, hull=None)


def find_cc_collinear_triple(masses: MassVector, triple, free_mass: int, initial, options: SolveOptions | None = None):
    """Central configuration with three prescribed bodies on a line.

    Collinear triples are not generic for fixed masses, so one mass is freed
    and the area of the triple is appended as an extra equation. Returns a
    SolveResult whose masses include the adjusted value.
    """
    options = options or SolveOptions()
    a, b, c = triple
    n = masses.n
    m = masses.values.copy()
    x = np.array(getattr(initial, "points", initial), dtype=float)

    def system(x, m):
        g = _gradient(m, x).ravel()
        pa, pb, pc = x[a], x[b], x[c]
        area = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
        return np.append(g, area * m.sum())

    def jacobian(x, m):
        base = _gauge_basis(m, x)
        jq = np.zeros((2 * n + 1, 2 * n))
        jq[:-1] = _hessian(m, x)
        pa, pb, pc = x[a], x[b], x[c]
        s = m.sum()
        jq[-1, 2 * a : 2 * a + 2] = s * np.array([pb[1] - pc[1], pc[0] - pb[0]])
        jq[-1, 2 * b : 2 * b + 2] = s * np.array([pc[1] - pa[1], pa[0] - pc[0]])
        jq[-1, 2 * c : 2 * c + 2] = s * np.array([pa[1] - pb[1], pb[0] - pa[0]])
        d, _, sh = _pair_data(x)
        dm = np.zeros((n, 2))
        dm[free_mass] = np.einsum("j,j,jk->k", m, sh[free_mass], d[free_mass])
        for i in range(n):
            if i != free_mass:
                dm[i] = m[i] * sh[i, free_mass] * d[i, free_mass]
        area = system(x, m)[-1] / s
        col = np.append(dm.ravel(), area)
        return np.hstack([jq @ base, col[:, None]]), base

    mu = options.damping
    res = np.linalg.norm(system(x, m)) / _force_scale(m, x)
    it = 0
    while it < options.max_iterations and res > options.tolerance * 1e-2:
        it += 1
        f = system(x, m)
        jac, base = jacobian(x, m)
        jtj = jac.T @ jac
        level = np.trace(jtj) / jtj.shape[0]
        accepted = False
        while mu <= 1e6:
            z = np.linalg.solve(jtj + mu * level * np.eye(jtj.shape[0]), -jac.T @ f)
            tx = x + (base @ z[:-1]).reshape(-1, 2)
            tm = m.copy()
            tm[free_mass] += z[-1]
            if tm[free_mass] > 0 and _min_separation(tx) > 0:
                tres = np.linalg.norm(system(tx, tm)) / _force_scale(tm, tx)
                if tres < res:
                    x, m, res = tx, tm, tres
                    mu = max(mu / 10.0, 1e-12)
                    accepted = True
                    break
            mu *= 10.0
        if not accepted:
            break
    out = _finish(MassVector(m), x, it, options.tolerance)
    # a freed mass that collapses towards zero is a degenerate limit, not a solution
    if m[free_mass] < 1e-6 * m.sum():
        return SolveResult(cc=out.cc, iterations=it, converged=False, hull=out.hull)
    return out


def moulton_collinear(masses: MassVector, ordering, options: SolveOptions | None = None) -> SolveResult:
    """Collinear central configuration with bodies placed left to right in
    ``ordering`` (body indices).

    Restricted to ordered points of a line the amended potential is strictly
    convex up to translation, so Newton with backtracking on the potential
    reaches its unique minimum.
    """
    options = options or SolveOptions()
    n = masses.n
    order = [int(k) for k in ordering]
    if sorted(order) != list(range(n)):
        raise ConfigurationError("ordering must be a permutation of the body indices")
    m = masses.values[order]

    def pot(x):
        d = x[None, :] - x[:, None]
        iu = np.triu_indices(n, 1)
        r = d[iu]
        if np.any(r <= 0):
            return np.inf
        return np.sum(m[iu[0]] * m[iu[1]] * (1.0 / r + 0.5 * r * r))

    def grad_hess(x):
        d = x[None, :] - x[:, None]  # x_j - x_i
        r = np.abs(d)
        np.fill_diagonal(r, 1.0)
        sh = 1.0 / r**3 - 1.0
        np.fill_diagonal(sh, 0.0)
        g = m * ((sh * d) @ m)
        # d/dx_j of m_i m_j sh(r) (x_j - x_i) = m_i m_j (1 + 2/r^3)
        k = np.outer(m, m) * (1.0 + 2.0 / r**3)
        np.fill_diagonal(k, 0.0)
        h = k.copy()
        np.fill_diagonal(h, -k.sum(axis=1))
        return g, -h

    x = np.arange(n, dtype=float)
    it = 0
    for it in range(1, options.max_iterations + 1):
        g, h = grad_hess(x)
        # body 0 stays put: the reduced Hessian is a positive definite Laplacian minor
        step = np.zeros(n)
        step[1:] = -np.linalg.solve(h[1:, 1:], g[1:])
        full = x + step
        if pot(full) < np.inf and np.linalg.norm(grad_hess(full)[0]) < np.linalg.norm(g):
            # near the minimum the potential is flat to roundoff; judge by the gradient
            x = full
            continue
        f0 = pot(x)
        t = 0.5
        while pot(x + t * step) > f0 + 1e-4 * t * (g @ step) and t > 1e-12:
            t *= 0.5
        new = x + t * step
        if np.max(np.abs(new - x)) <= 4 * np.finfo(float).eps * np.ptp(x):
            break
        x = new
    pts = np.zeros((n, 2))
    pts[order, 0] = x
    config = PlanarConfiguration(pts)
    lam = multiplier(config, masses)
    cc = normalize(CentralConfiguration(masses, config, lam))
    from .geometry import classify_hull

    return SolveResult(cc=cc, iterations=it, converged=cc.gradient_residual <= options.tolerance, hull=classify_hull(cc.configuration))


def known_configuration(name: str, m0: float = 1.0) -> CentralConfiguration:
    """Exact normalized anchors: ``equilateral``, ``pentagon``, ``square_center``.

    ``square_center`` puts four unit masses on a square and ``m0`` at its
    center (body index 4).
    """
    if name == "equilateral":
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
        masses = MassVector(np.ones(3))
    elif name == "pentagon":
        ang = 2 * np.pi * np.arange(5) / 5
        pts = np.column_stack([np.cos(ang), np.sin(ang)])
        masses = MassVector(np.ones(5))
    elif name == "square_center":
        if not m0 > 0:
            raise ConfigurationError("center mass must be positive")
        ang = np.pi / 4 + np.pi / 2 * np.arange(4)
        pts = np.vstack([np.column_stack([np.cos(ang), np.sin(ang)]), [[0.0, 0.0]]])
        masses = MassVector([1.0, 1.0, 1.0, 1.0, m0])
    else:
        raise ConfigurationError(f"unknown configuration {name!r}")
    config = PlanarConfiguration(pts)
    return normalize(CentralConfiguration(masses, config, multiplier(config, masses)))


def _signature(result):
    cc = result.cc
    m = cc.masses.values
    r = cc.configuration.distances.r
    iu = np.triu_indices(cc.n, 1)
    rows = sorted(zip(np.minimum(m[iu[0]], m[iu[1]]), np.maximum(m[iu[0]], m[iu[1]]), r[iu]))
    return np.array(rows)


def dedup(results, rtol=1e-8):
    """Merge results with the same (mass pair, distance) multiset, keeping the
    representative with the smallest residual. Order of first appearance is kept."""
    results = list(results)
    if not results:
        return []
    ref = results[0].cc.masses.values
    for res in results[1:]:
        if res.cc.masses.n != ref.size or not np.array_equal(res.cc.masses.values, ref):
            raise ConfigurationError("dedup needs results sharing one mass vector")
    kept, sigs = [], []
    for res in results:
        sig = _signature(res)
        for k, other in enumerate(sigs):
            if np.allclose(sig, other, rtol=rtol, atol=0.0):
                if res.cc.gradient_residual < kept[k].cc.gradient_residual:
                    kept[k] = res
                break
        else:
            kept.append(res)
            sigs.append(sig)
    return kept
