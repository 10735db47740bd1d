"""
Conventional weak measurement with a Gaussian pointer, used as an
independent cross-check of the probe-free estimators.

The pointer starts in phi(x) = pi^(-1/4) sigma^(-1/2) exp(-x^2 / 2 sigma^2)
and couples through exp(-i theta A x p). Expanding A spectrally, the
post-selected pointer wavefunction is the finite sum
sum_a <f|a><a|i> phi(x - theta a), so the exact pointer density needs no
small-theta truncation; only 1-D quadrature remains.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import qcore
from .errors import OrthogonalSelection, RegimeError
from .weakval import OVERLAP_CUTOFF, Selection, weak_value

EDGE_MASS_TOL = 1e-6
EXPANSION_LIMIT = 0.1


@dataclass(frozen=True)
class GaussianProbe:
    sigma: float = 1.0
    num_points: int = 4096
    half_width: float = 10.0
    """Grid extends half_width * sigma beyond the extreme pointer shifts."""

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.num_points < 2048:
            raise ValueError("num_points must be >= 2048")
        if self.half_width < 8:
            raise ValueError("grid must span at least +-8 sigma")

    def wavefunction(self, x):
        s = self.sigma
        return np.exp(-(x**2) / (2 * s * s)) / (np.pi**0.25 * np.sqrt(s))

    def grid(self, shifts=(0.0,)):
        lo = min(shifts) - self.half_width * self.sigma
        hi = max(shifts) + self.half_width * self.sigma
        return np.linspace(lo, hi, self.num_points)


@dataclass(frozen=True)
class PointerDistribution:
    x: np.ndarray
    density: np.ndarray
    normalization: float
    clipped_mass: float = 0.0
    edge_mass: Optional[float] = None

    @property
    def total(self):
        return float(np.trapezoid(self.density, self.x))


def _check(i, f, A):
    if not qcore.is_hermitian(A):
        raise ValueError("observable must be Hermitian")
    if abs(qcore.inner(f, i)) <= OVERLAP_CUTOFF:
        raise OrthogonalSelection("post-selection never fires for orthogonal i, f")


def _spectral_weights(i, f, A):
    lam, V = np.linalg.eigh(np.asarray(A))
    c = (np.asarray(f).conj() @ V) * (V.conj().T @ np.asarray(i))
    return lam, c


def _exact_norm(lam, c, theta, sigma):
    # overlap of phi(x - s_a) and phi(x - s_b) is exp(-(s_a - s_b)^2 / 4 sigma^2)
    ds = theta * (lam[:, None] - lam[None, :])
    return float((np.conj(c)[:, None] * c[None, :] * np.exp(-(ds**2) / (4 * sigma**2))).sum().real)


def pointer_distribution_exact(i, f, A, theta, probe=GaussianProbe()):
    """Post-selected pointer density, exact in theta, normalized on the grid."""
    _check(i, f, A)
    lam, c = _spectral_weights(i, f, A)
    x = probe.grid(theta * lam)
    psi = sum(ca * probe.wavefunction(x - theta * a) for a, ca in zip(lam, c))
    raw = np.abs(psi) ** 2
    on_grid = float(np.trapezoid(raw, x))
    norm = _exact_norm(lam, c, theta, probe.sigma)
    edge = 1.0 - on_grid / norm
    if edge > EDGE_MASS_TOL:
        raise RegimeError(f"grid too narrow: {edge:.3g} of the pointer mass lies outside")
    return PointerDistribution(x, raw / on_grid, on_grid, edge_mass=edge)


def exact_pointer_mean(i, f, A, theta, sigma=1.0):
    """Closed-form mean of the exact pointer density (no quadrature)."""
    _check(i, f, A)
    lam, c = _spectral_weights(i, f, A)
    s = theta * lam
    g = np.exp(-((s[:, None] - s[None, :]) ** 2) / (4 * sigma**2))
    cc = np.conj(c)[:, None] * c[None, :]
    mean = (cc * g * (s[:, None] + s[None, :]) / 2).sum().real
    return float(mean / _exact_norm(lam, c, theta, sigma))


def _expansion_params(i, f, A, theta, probe):
    _check(i, f, A)
    A = np.asarray(A)
    radius = np.abs(np.linalg.eigvalsh(A)).max()
    if abs(theta) * radius > EXPANSION_LIMIT * probe.sigma:
        raise RegimeError(f"theta*||A|| = {abs(theta) * radius:.3g} exceeds sigma/10")
    sel = Selection(i, f)
    w = weak_value(A, sel).value
    w2 = weak_value(A @ A, sel).value
    return w, w2, radius


def _expanded(x, w_re, w_abs2, w2_re, theta, probe):
    s = probe.sigma
    base = probe.wavefunction(x) ** 2
    second = (w_abs2 + w2_re) / s**2 * (x**2 / s**2 - 0.5)
    return base * (1 + 2 * w_re * x * theta / s**2 + second * theta**2)


def pointer_distribution_expanded(i, f, A, theta, probe=GaussianProbe()):
    """
    Second-order small-theta pointer density

        |phi|^2 [1 + 2 Re<A>w x theta / sigma^2
                 + (|<A>w|^2 + Re<A^2>w) / sigma^2 (x^2/sigma^2 - 1/2) theta^2]

    clipped at zero where the truncation goes negative.
    """
    w, w2, radius = _expansion_params(i, f, A, theta, probe)
    x = probe.grid((-theta * radius, theta * radius))
    raw = _expanded(x, w.real, abs(w) ** 2, w2.real, theta, probe)
    clipped = float(np.trapezoid(np.where(raw < 0, -raw, 0.0), x))
    dens = np.clip(raw, 0.0, None)
    return PointerDistribution(x, dens, float(np.trapezoid(dens, x)), clipped_mass=clipped)


def mean_pointer_shift(dist):
    return float(np.trapezoid(dist.x * dist.density, dist.x))


@dataclass(frozen=True)
class GaussianFisher:
    J: float
    conditional_J: float
    leading_order: float


def fisher_gaussian(i, f, A, theta, probe=GaussianProbe()):
    """
    Fisher information about Re<A>_w of the pointer readout, per trial.

    conditional_J integrates (dP/dRe<A>w)^2 / P over the expanded density of
    the post-selected pointer; J multiplies it by the post-selection
    probability |<f|i>|^2 so it counts every trial, as the probe-free F
    does. leading_order is 2 |<f|i>|^2 (theta/sigma)^2.
    """
    w, w2, radius = _expansion_params(i, f, A, theta, probe)
    s = probe.sigma
    x = probe.grid((-theta * radius, theta * radius))
    P = _expanded(x, w.real, abs(w) ** 2, w2.real, theta, probe)
    dP = probe.wavefunction(x) ** 2 * (2 * x * theta / s**2 + 2 * w.real / s**2 * (x**2 / s**2 - 0.5) * theta**2)
    mask = P > 0
    cond = float(np.trapezoid(np.where(mask, dP**2 / np.where(mask, P, 1.0), 0.0), x))
    p0 = abs(qcore.inner(f, i)) ** 2
    return GaussianFisher(p0 * cond, cond, 2 * p0 * (theta / s) ** 2)
