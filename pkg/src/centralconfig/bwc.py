"""The Brehm-Wintner-Conley matrix, its shifted form and their spectra."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    COLLINEAR_RTOL,
    CentralConfiguration,
    DegenerateError,
    DimensionError,
    IntegrityError,
    MassVector,
    PlanarConfiguration,
    areas,
    wedge_norm_squared,
)

PLAIN = "plain"
SHIFTED = "shifted"


@dataclass(frozen=True, eq=False)
class BwcMatrix:
    """Dense n x n matrix with zero column sums; entries[i, j] = -m_i S_ij off the diagonal."""

    entries: np.ndarray
    kind: str = PLAIN

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))


@dataclass(frozen=True)
class TranslationMatrix:
    """I = Id - m^T (x) U / M, kept implicit through the masses."""

    masses: MassVector

    def dense(self) -> np.ndarray:
        m = self.masses.values
        return np.eye(m.size) - np.outer(m, np.ones(m.size)) / m.sum()

    def apply(self, row) -> np.ndarray:
        """Row vector times I: subtracts the mass-weighted mean."""
        row = np.asarray(row, dtype=float)
        m = self.masses.values
        return row - (m @ row) / m.sum()


@dataclass(frozen=True, eq=False)
class SpectralReport:
    eigenvalues: np.ndarray
    nu1: float | None = None
    nu2: float | None = None
    phi: np.ndarray | None = None
    psi: np.ndarray | None = None


def _assemble(masses, coef, kind):
    m = masses.values
    z = -m[:, None] * coef
    np.fill_diagonal(z, 0.0)
    # column sums vanish: Z[j, j] = sum_{i != j} m_i coef_ij
    np.fill_diagonal(z, -z.sum(axis=0))
    z.setflags(write=False)
    return BwcMatrix(z, kind)


def build_bwc(masses: MassVector, config: PlanarConfiguration) -> BwcMatrix:
    if masses.n != config.n:
        raise DimensionError("masses and configuration sizes differ")
    return _assemble(masses, config.distances.s, PLAIN)


def build_shifted_bwc(masses: MassVector, config: PlanarConfiguration) -> BwcMatrix:
    """Shifted matrix in the lambda = M normalization, built from S_ij - 1 directly."""
    if masses.n != config.n:
        raise DimensionError("masses and configuration sizes differ")
    return _assemble(masses, config.distances.s_shifted, SHIFTED)


def jacobi_eigh(a, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns (w, v) with ascending eigenvalues w and orthonormal columns v.
    Stops once the off-diagonal Frobenius norm is below tol times the
    Frobenius norm of the input.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    target = tol * max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise IntegrityError("Jacobi iteration did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def symmetrized(masses: MassVector, bwc: BwcMatrix) -> np.ndarray:
    """mu^{-1/2} Z mu^{1/2}, similar to Z and symmetric because Z mu is."""
    root = np.sqrt(masses.values)
    a = bwc.entries * root[None, :] / root[:, None]
    asym = np.linalg.norm(a - a.T)
    if asym > 1e-12 * max(np.linalg.norm(a), 1e-300):
        raise IntegrityError(f"Z mu is not symmetric (defect {asym:.3e})")
    return 0.5 * (a + a.T)


def spectrum(masses: MassVector, bwc: BwcMatrix) -> SpectralReport:
    """Eigenvalues of the given matrix; for a shifted 5-body matrix also the
    rank-2 decomposition  Z_shifted mu = nu1 Phi (x) Phi + nu2 Psi (x) Psi."""
    if masses.n != bwc.n:
        raise DimensionError("masses and matrix sizes differ")
    a = symmetrized(masses, bwc)
    w, v = jacobi_eigh(a)
    if bwc.kind != SHIFTED or bwc.n != 5:
        return SpectralReport(eigenvalues=w)
    order = np.argsort(np.abs(w), kind="stable")
    kernel, top = order[:3], order[3:]
    if np.max(np.abs(w[kernel])) >= 1e-8 * max(bwc.norm(), 1e-300):
        raise IntegrityError(
            "shifted matrix does not have a three-dimensional kernel; "
            "the configuration is not a normalized central configuration"
        )
    top = top[np.argsort(w[top], kind="stable")]
    root = np.sqrt(masses.values)
    phi = v[:, top[0]] * root
    psi = v[:, top[1]] * root
    return SpectralReport(eigenvalues=w, nu1=float(w[top[0]]), nu2=float(w[top[1]]), phi=phi, psi=psi)


def full_spectrum(cc: CentralConfiguration) -> SpectralReport:
    """Eigenvalues of Z together with (nu1, nu2, Phi, Psi) from the shifted matrix."""
    plain = spectrum(cc.masses, build_bwc(cc.masses, cc.configuration))
    if cc.n != 5:
        return plain
    shifted = spectrum(cc.masses, build_shifted_bwc(cc.masses, cc.configuration))
    return SpectralReport(plain.eigenvalues, shifted.nu1, shifted.nu2, shifted.phi, shifted.psi)


def lemma1_factor(cc: CentralConfiguration) -> float:
    """|a| with a^2 = ||U^X^Y||^2 / (m_1 m_2 m_3 m_4 m_5)."""
    w2 = wedge_norm_squared(cc.configuration, cc.masses)
    return float(np.sqrt(w2 / np.prod(cc.masses.values)))


def lemma1_check(cc: CentralConfiguration, report: SpectralReport):
    """Compare Delta^{kl} with a (Phi_k Psi_l - Phi_l Psi_k).

    Returns ``(residual, a)``: the max over the ten pairs of the absolute
    difference divided by scale**2, and the fitted signed factor.
    """
    if cc.n != 5:
        raise DimensionError("the area/covector identity is stated for five bodies")
    if report.phi is None:
        raise ValueError("report carries no covectors")
    at = areas(cc.configuration)
    if np.all(np.abs(at.delta_pair) <= COLLINEAR_RTOL * at.scale**2):
        raise DegenerateError("collinear configuration")
    a_abs = lemma1_factor(cc)
    wedge = np.outer(report.phi, report.psi) - np.outer(report.psi, report.phi)
    iu = np.triu_indices(5, 1)
    k = np.argmax(np.abs(at.delta_pair[iu]))
    sign = np.sign(at.delta_pair[iu][k] * wedge[iu][k]) or 1.0
    a = sign * a_abs
    res = np.max(np.abs(at.delta_pair[iu] - a * wedge[iu])) / at.scale**2
    return float(res), float(a)


def conley_margin(eigenvalues, lam) -> float:
    """Gap between the smallest non-trivial eigenvalue and lambda for a
    collinear central configuration (eigenvalues 0, lambda, then the rest)."""
    w = np.sort(np.asarray(eigenvalues))
    return float(w[2] - lam)


def pacella_moeckel_margin(eigenvalues, lam, zero_tol=1e-10) -> float:
    """Mean of the non-zero eigenvalues minus lambda."""
    w = np.sort(np.asarray(eigenvalues))
    nz = w[np.abs(w) > zero_tol * max(np.abs(w).max(), 1e-300)]
    return float(nz.mean() - lam)
