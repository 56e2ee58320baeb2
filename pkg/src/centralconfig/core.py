"""Masses, planar configurations and the tables derived from them.

Indices are 0-based everywhere in the API. Helpers that reproduce the
classical 1-based statements (``S12*S34`` and friends) live in
:mod:`centralconfig.williams`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# |Delta_hij| <= COLLINEAR_RTOL * (max r)**2 counts as a collinear triple
COLLINEAR_RTOL = 1e-10
MAX_BODIES = 12


class ConfigurationError(ValueError):
    """Invalid input data or options."""


class DimensionError(ValueError):
    pass


class SingularDistanceError(ValueError):
    """Two bodies coincide."""


class InvalidMultiplierError(ValueError):
    pass


class DegenerateError(ValueError):
    """The configuration is collinear where a planar one is required."""


class IntegrityError(RuntimeError):
    """A structural invariant was violated upstream."""


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MassVector:
    """Positive point masses m_1..m_n."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values).ravel()
        if not 2 <= v.size <= MAX_BODIES:
            raise ConfigurationError(f"need between 2 and {MAX_BODIES} masses, got {v.size}")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ConfigurationError("masses must be finite and strictly positive")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.values.tolist())

    def scaled(self, c: float) -> "MassVector":
        return MassVector(self.values * c)

    def permuted(self, perm) -> "MassVector":
        return MassVector(self.values[list(perm)])

    def __repr__(self):
        return f"MassVector({self.values.tolist()})"


@dataclass(frozen=True, eq=False)
class DistanceTable:
    r: np.ndarray
    s: np.ndarray
    s_shifted: np.ndarray

    @property
    def scale(self) -> float:
        return float(self.r.max())


@dataclass(frozen=True, eq=False)
class AreaTable:
    """Twice the oriented triangle areas.

    ``delta[h, i, j]`` is (q_i - q_h) ^ (q_j - q_h). For five bodies
    ``delta_pair[k, l]`` holds the complementary notation Delta^{kl}, equal to
    ``delta[h, i, j]`` whenever (h, i, j, k, l) is an even permutation of
    (0, 1, 2, 3, 4); it is antisymmetric and zero on the diagonal.
    """

    delta: np.ndarray
    delta_pair: np.ndarray | None
    scale: float

    def __call__(self, h, i, j) -> float:
        return float(self.delta[h, i, j])

    def is_collinear(self, h, i, j) -> bool:
        return abs(self.delta[h, i, j]) <= COLLINEAR_RTOL * self.scale**2

    def collinear_triples(self):
        n = self.delta.shape[0]
        return [t for t in itertools.combinations(range(n), 3) if self.is_collinear(*t)]


@dataclass(frozen=True, eq=False)
class PlanarConfiguration:
    """n points of the plane, stored as an (n, 2) array."""

    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 2:
            raise ConfigurationError("points must be an (n, 2) array with n >= 2")
        if not np.all(np.isfinite(p)):
            raise ConfigurationError("points must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)
        r = self.distances.r
        off = ~np.eye(self.n, dtype=bool)
        if np.any(r[off] <= 0.0):
            raise SingularDistanceError("coincident points in configuration")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    @cached_property
    def distances(self) -> DistanceTable:
        d = self.points[None, :, :] - self.points[:, None, :]
        r = np.hypot(d[..., 0], d[..., 1])
        with np.errstate(divide="ignore"):
            s = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0) ** 3, np.inf)
        np.fill_diagonal(s, 0.0)
        s_shifted = s - 1.0
        np.fill_diagonal(s_shifted, 0.0)
        return DistanceTable(_frozen(r), _frozen(s), _frozen(s_shifted))

    @property
    def scale(self) -> float:
        """Largest mutual distance."""
        return self.distances.scale

    def center_of_mass(self, masses: MassVector) -> np.ndarray:
        _check_n(masses, self)
        return masses.values @ self.points / masses.total

    def translated(self, offset) -> "PlanarConfiguration":
        return PlanarConfiguration(self.points + np.asarray(offset, dtype=float))

    def scaled(self, s: float) -> "PlanarConfiguration":
        return PlanarConfiguration(self.points * s)

    def rotated(self, theta: float) -> "PlanarConfiguration":
        c, s = np.cos(theta), np.sin(theta)
        return PlanarConfiguration(self.points @ np.array([[c, s], [-s, c]]))

    def reflected(self) -> "PlanarConfiguration":
        return PlanarConfiguration(self.points * np.array([1.0, -1.0]))

    def permuted(self, perm) -> "PlanarConfiguration":
        return PlanarConfiguration(self.points[list(perm)])

    def __repr__(self):
        return f"PlanarConfiguration({self.points.tolist()})"


@dataclass(frozen=True, eq=False)
class CentralConfiguration:
    """A configuration with masses and multiplier lambda.

    ``normalized`` means lambda = M, center of mass at the origin and the
    frame along the principal axes of inertia.
    """

    masses: MassVector
    configuration: PlanarConfiguration
    lam: float
    gradient_residual: float = field(default=float("nan"))
    normalized: bool = False

    def __post_init__(self):
        _check_n(self.masses, self.configuration)

    @property
    def n(self) -> int:
        return self.masses.n

    @property
    def omega(self) -> float:
        """Angular velocity of the associated relative equilibrium."""
        return float(np.sqrt(self.lam))

    @property
    def points(self) -> np.ndarray:
        return self.configuration.points


def _check_n(masses, config):
    if masses.n != config.n:
        raise DimensionError(f"{masses.n} masses for {config.n} points")


def mass_inner_product(phi, psi, masses: MassVector) -> float:
    """Bracket of two covectors under the mass metric, sum phi_i psi_i / m_i."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if phi.shape != (masses.n,) or psi.shape != (masses.n,):
        raise DimensionError("covector length does not match the number of bodies")
    return float(np.sum(phi * psi / masses.values))


def permutation_parity(perm) -> int:
    """0 for even permutations, 1 for odd."""
    perm = list(perm)
    inv = sum(1 for a, b in itertools.combinations(range(len(perm)), 2) if perm[a] > perm[b])
    return inv % 2


def areas(config: PlanarConfiguration) -> AreaTable:
    p = config.points
    d = p[None, :, :] - p[:, None, :]  # d[h, i] = q_i - q_h
    delta = d[:, :, None, 0] * d[:, None, :, 1] - d[:, :, None, 1] * d[:, None, :, 0]
    pair = None
    if config.n == 5:
        pair = np.zeros((5, 5))
        for perm in itertools.permutations(range(5)):
            if permutation_parity(perm) == 0:
                h, i, j, k, l = perm
                pair[k, l] = delta[h, i, j]
        pair = _frozen(pair)
    return AreaTable(_frozen(delta), pair, config.scale)


def gram_matrix(config: PlanarConfiguration, masses: MassVector) -> np.ndarray:
    """Gram matrix of (U, X, Y) under <u, v> = sum m_i u_i v_i."""
    _check_n(masses, config)
    basis = np.vstack([np.ones(config.n), config.x, config.y])
    return (basis * masses.values) @ basis.T


def wedge_norm_squared(config: PlanarConfiguration, masses: MassVector) -> float:
    """||U ^ X ^ Y||^2 for the mass inner product.

    The Gram determinant is unchanged when X and Y are recentred (column
    operations with U), so it is evaluated on centred coordinates as
    M * det(inertia tensor).
    """
    _check_n(masses, config)
    m = masses.values
    c = config.points - m @ config.points / m.sum()
    ixx = np.sum(m * c[:, 0] ** 2)
    iyy = np.sum(m * c[:, 1] ** 2)
    ixy = np.sum(m * c[:, 0] * c[:, 1])
    return float(max(m.sum() * (ixx * iyy - ixy * ixy), 0.0))


def moment_of_inertia(config: PlanarConfiguration, masses: MassVector) -> float:
    """Polar moment about the center of mass."""
    m = masses.values
    c = config.points - m @ config.points / m.sum()
    return float(np.sum(m * np.sum(c * c, axis=1)))


def newton_potential(config: PlanarConfiguration, masses: MassVector) -> float:
    _check_n(masses, config)
    r = config.distances.r
    m = masses.values
    iu = np.triu_indices(config.n, 1)
    return float(np.sum(m[iu[0]] * m[iu[1]] / r[iu]))


def multiplier(config: PlanarConfiguration, masses: MassVector) -> float:
    """Least-squares lambda of a configuration: U / I.

    Exact for a central configuration, where X Z = lambda X and Y Z = lambda Y.
    """
    return newton_potential(config, masses) / moment_of_inertia(config, masses)


def gradient_residual(config: PlanarConfiguration, masses: MassVector) -> float:
    """Dimensionless size of the amended force.

    Max-norm of the amended gradient divided by the force scale
    sum_{i<j} m_i m_j (S_ij + 1) r_ij, so it is insensitive to mass and
    length units and bottoms out at roundoff.
    """
    # local import: solver depends on core
    from .solver import amended_gradient

    g = amended_gradient(masses, config)
    t = config.distances
    m = masses.values
    iu = np.triu_indices(config.n, 1)
    scale = np.sum(m[iu[0]] * m[iu[1]] * (t.s[iu] + 1.0) * t.r[iu])
    return float(np.max(np.abs(g)) / scale)


def _principal_angle(c, m):
    ixx = np.sum(m * c[:, 0] ** 2)
    iyy = np.sum(m * c[:, 1] ** 2)
    ixy = np.sum(m * c[:, 0] * c[:, 1])
    if abs(ixx - iyy) <= 1e-12 * (ixx + iyy) and abs(ixy) <= 1e-12 * (ixx + iyy):
        return 0.0  # isotropic inertia: every frame is principal
    return 0.5 * np.arctan2(2.0 * ixy, ixx - iyy)


def orientation_triple(config: PlanarConfiguration):
    """First triple (lexicographic) whose area is above the collinearity threshold."""
    at = areas(config)
    for t in itertools.combinations(range(config.n), 3):
        if not at.is_collinear(*t):
            return t
    return None


def gauge_fix(config: PlanarConfiguration, masses: MassVector) -> PlanarConfiguration:
    """Center of mass to the origin, major principal axis along x, first
    non-degenerate triple counterclockwise."""
    m = masses.values
    c = config.points - m @ config.points / m.sum()
    theta = _principal_angle(c, m)
    if theta != 0.0:
        cs, sn = np.cos(theta), np.sin(theta)
        # rotate the frame by theta: new x along the major axis
        c = c @ np.array([[cs, -sn], [sn, cs]])
    out = PlanarConfiguration(c)
    t = orientation_triple(out)
    if t is not None and areas(out)(*t) < 0:
        out = out.reflected()
    return out


def normalize(cc: CentralConfiguration) -> CentralConfiguration:
    """Rescale to lambda = M and fix the Euclidean gauge.

    Scaling positions by s multiplies lambda by s**-3, so
    s = (lambda / M)**(1/3) brings the multiplier to M.
    """
    if not cc.lam > 0:
        raise InvalidMultiplierError(f"multiplier must be positive, got {cc.lam}")
    M = cc.masses.total
    s = (cc.lam / M) ** (1.0 / 3.0)
    config = gauge_fix(cc.configuration.scaled(s), cc.masses)
    return CentralConfiguration(
        masses=cc.masses,
        configuration=config,
        lam=M,
        gradient_residual=gradient_residual(config, cc.masses),
        normalized=True,
    )
