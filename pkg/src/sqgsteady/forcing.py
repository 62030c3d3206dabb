"""Time-independent forces whose spectrum vanishes inside a disk.

Forces are complex Gaussian white noise on the annulus rho0 <= |k| <= rho1.
Each independent mode draws from a Philox stream keyed on the seed with the
lattice index as counter, so the realization does not depend on loop order
or on the grid resolution (as long as the annulus fits under the cutoff).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolation
from .spectral import (Field, Grid, LambdaPower, PhysicalField, SpectralField,
                       apply_multiplier, as_spectral, check_dissipation,
                       inverse_transform, norm, x_norm)

_U64 = (1 << 64) - 1
_SHELL_RTOL = 1e-9


@dataclass(frozen=True)
class ForceSpec:
    rho0: float
    rho1: float
    amplitude: float = 1.0
    seed: int = 0
    target_x_norm: float | None = None

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if self.rho1 < self.rho0:
            raise ValueError(f"rho1 ({self.rho1}) must be >= rho0 ({self.rho0})")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if not 0 <= self.seed <= _U64:
            raise ValueError(f"seed must fit in u64, got {self.seed}")
        if self.target_x_norm is not None and not self.target_x_norm > 0:
            raise ValueError(f"target_x_norm must be positive, got {self.target_x_norm}")


def mode_normal(seed: int, j1: int, j2: int) -> complex:
    """Standard complex Gaussian for lattice index (j1, j2) under ``seed``."""
    counter = np.array([j1 & _U64, j2 & _U64, 0, 0], dtype=np.uint64)
    bitgen = np.random.Philox(key=seed, counter=counter)
    a, b = np.random.Generator(bitgen).standard_normal(2)
    return complex(a, b) / math.sqrt(2.0)


def _independent(grid: Grid) -> np.ndarray:
    """One representative of each +-k pair (upper half plane)."""
    return (grid.j1 > 0) | ((grid.j1 == 0) & (grid.j2 > 0))


def shell_radii(grid: Grid, lo: float, hi: float) -> np.ndarray:
    r = np.unique(np.round(grid.kmag[grid.mask & (grid.kmag > 0)], 12))
    return r[(r >= lo) & (r <= hi)]


def annulus_mask(grid: Grid, rho0: float, rho1: float) -> np.ndarray:
    k = grid.kmag
    return (k >= rho0 * (1 - _SHELL_RTOL)) & (k <= rho1 * (1 + _SHELL_RTOL))


def random_annulus_coeffs(grid: Grid, rho0: float, rho1: float, seed: int) -> np.ndarray:
    """Hermitian-symmetric Gaussian coefficients on the annulus, zero elsewhere."""
    sel = annulus_mask(grid, rho0, rho1) & grid.mask
    if not sel.any():
        radii = np.unique(np.round(grid.kmag[grid.mask & (grid.kmag > 0)], 12))
        below = radii[radii < rho0]
        above = radii[radii > rho1]
        near = []
        if below.size:
            near.append(f"{below.max():.6g}")
        if above.size:
            near.append(f"{above.min():.6g}")
        raise ValueError(
            f"annulus [{rho0}, {rho1}] contains no lattice wavenumber on this grid; "
            f"nearest shells: {', '.join(near) or 'none'}")
    coeffs = np.zeros((grid.n, grid.n), dtype=complex)
    n = grid.n
    for a, b in zip(*np.nonzero(sel & _independent(grid))):
        j1, j2 = int(grid.j1[a, b]), int(grid.j2[a, b])
        c = mode_normal(seed, j1, j2)
        coeffs[a, b] = c
        coeffs[(-a) % n, (-b) % n] = np.conj(c)
    return coeffs


def make_annulus_force(spec: ForceSpec, grid: Grid, alpha: float = 1.0) -> PhysicalField:
    """Random force supported on rho0 <= |k| <= rho1.

    With ``target_x_norm`` set, the force is rescaled so its X-norm (for the
    given alpha) equals the target.
    """
    if spec.rho0 < grid.k0 * (1 - _SHELL_RTOL):
        raise ValueError(f"rho0={spec.rho0} is below the lattice spacing {grid.k0:.6g}")
    if spec.rho1 > grid.k_max * (1 + _SHELL_RTOL):
        raise ValueError(f"rho1={spec.rho1} exceeds the dealias cutoff {grid.k_max:.6g}")
    coeffs = spec.amplitude * random_annulus_coeffs(grid, spec.rho0, spec.rho1, spec.seed)
    f = SpectralField(coeffs, grid)
    if spec.target_x_norm is not None:
        f = f * (spec.target_x_norm / x_norm(f, alpha))
    return inverse_transform(f)


@dataclass
class AssumptionReport:
    holds: bool
    rho0: float
    max_low: float
    offenders: list = field(default_factory=list)  # (j1, j2, |k|, |coeff|)


def verify_assumption_a(f: Field, rho0: float) -> AssumptionReport:
    """Check that no coefficient with |k| < rho0 exceeds 1e-14 of the total."""
    fs = as_spectral(f)
    g = fs.grid
    total = math.sqrt(float(np.sum(np.abs(fs.coeffs) ** 2)))
    low = g.kmag < rho0 * (1 - _SHELL_RTOL)
    mags = np.abs(fs.coeffs)
    bad = low & (mags > 1e-14 * total)
    offenders = [(int(g.j1[a, b]), int(g.j2[a, b]), float(g.kmag[a, b]), float(mags[a, b]))
                 for a, b in zip(*np.nonzero(bad))]
    max_low = float(mags[low].max()) if low.any() else 0.0
    return AssumptionReport(not offenders, rho0, max_low, offenders)


@dataclass
class EnvelopeSeries:
    times: np.ndarray
    values: np.ndarray
    bounds: np.ndarray
    ratios: np.ndarray

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else 0.0

    def holds(self, rtol: float = 1e-10) -> bool:
        return self.max_ratio <= 1 + rtol


def semigroup_decay_envelope(f: Field, kappa: float, alpha: float, rho0: float,
                             nu: float, p: float, times) -> EnvelopeSeries:
    """||Lambda^nu e^{-kappa t Lambda^alpha} f||_p against exp(-kappa rho0^alpha t)||Lambda^nu f||_p.

    Ratios of 0/0 (zero force) are reported as 0.
    """
    check_dissipation(kappa, alpha)
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    fs = as_spectral(f)
    rep = verify_assumption_a(fs, rho0)
    if not rep.holds:
        raise AssumptionViolation(
            f"force has content below rho0={rho0}: {len(rep.offenders)} modes, "
            f"e.g. {rep.offenders[:3]}")
    g = fs.grid
    base = apply_multiplier(fs, LambdaPower(nu)) if nu > 0 else fs

    def pnorm(h: SpectralField) -> float:
        return norm(h, "l2") if p == 2 else norm(h, "lp", p=p)

    f_norm = pnorm(base)
    lam = g.power(alpha)
    times = np.asarray(list(times), dtype=float)
    values, bounds = [], []
    for t in times:
        values.append(pnorm(SpectralField(base.coeffs * np.exp(-kappa * t * lam), g)))
        bounds.append(math.exp(-kappa * rho0 ** alpha * t) * f_norm)
    values = np.array(values)
    bounds = np.array(bounds)
    ratios = np.divide(values, bounds, out=np.zeros_like(values), where=bounds > 0)
    return EnvelopeSeries(times, values, bounds, ratios)
