"""Periodic-box spectral representation and Fourier multipliers.

The whole plane is replaced by a doubly periodic box ``[0, L)^2`` sampled on
an ``n x n`` grid.  Spectral coefficients are the Fourier-series coefficients

    c_k = (1/L^2) * integral f(x) exp(-i k.x) dx  ~  fft2(values) / n^2,

so a pure mode ``cos(k.x)`` has coefficient 1/2 at ``+k`` and ``-k`` and
Parseval reads ``||f||_2^2 = L^2 * sum_k |c_k|^2``.  The coefficient array
uses the full lattice in FFT order (axis 0 is ``x1``, axis 1 is ``x2``).

Odd multipliers (derivatives, Riesz transforms) vanish on the Nyquist row and
column so that real fields stay real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.fft

_FFT_WORKERS = 1


def set_fft_workers(workers: int) -> None:
    """Set the thread count used by every transform (results are
    deterministic for a fixed count)."""
    global _FFT_WORKERS
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    _FFT_WORKERS = int(workers)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid with its wavenumber lattice and dealias mask."""

    n: int
    box_length: float = 2 * math.pi
    dealias_fraction: float = 2.0 / 3.0
    j1: np.ndarray = field(init=False, repr=False)
    j2: np.ndarray = field(init=False, repr=False)
    k1: np.ndarray = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)
    kmag: np.ndarray = field(init=False, repr=False)
    dk1: np.ndarray = field(init=False, repr=False)
    dk2: np.ndarray = field(init=False, repr=False)
    mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n % 2 != 0:
            raise ValueError(f"n must be an even integer, got {self.n}")
        if self.n < 8:
            raise ValueError(f"n must be >= 8, got {self.n}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")
        n = int(self.n)
        j = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        j1, j2 = np.meshgrid(j, j, indexing="ij")
        k0 = 2 * math.pi / self.box_length
        k1 = k0 * j1
        k2 = k0 * j2
        nyq = -(n // 2)
        set_ = object.__setattr__
        set_(self, "n", n)
        set_(self, "j1", j1)
        set_(self, "j2", j2)
        set_(self, "k1", k1)
        set_(self, "k2", k2)
        set_(self, "kmag", np.hypot(k1, k2))
        set_(self, "dk1", np.where(j1 == nyq, 0.0, k1))
        set_(self, "dk2", np.where(j2 == nyq, 0.0, k2))
        set_(self, "mask", np.maximum(np.abs(j1), np.abs(j2)) <= self.cutoff_index)
        for name in ("j1", "j2", "k1", "k2", "kmag", "dk1", "dk2", "mask"):
            getattr(self, name).setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.n, self.box_length, self.dealias_fraction) == (
            other.n, other.box_length, other.dealias_fraction)

    def __hash__(self):
        return hash((self.n, self.box_length, self.dealias_fraction))

    @property
    def k0(self) -> float:
        """Lattice spacing 2*pi/L."""
        return 2 * math.pi / self.box_length

    @property
    def cutoff_index(self) -> int:
        # tiny offset keeps e.g. fraction=1 from losing n/2 to rounding
        return int(math.floor(self.dealias_fraction * self.n / 2 + 1e-9))

    @property
    def k_max(self) -> float:
        """Largest single-component wavenumber kept by the dealias mask."""
        return self.k0 * self.cutoff_index

    @property
    def area(self) -> float:
        return self.box_length ** 2

    @property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n) * (self.box_length / self.n)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def fft(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.fft2(values, workers=_FFT_WORKERS) / self.n ** 2

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return scipy.fft.ifft2(coeffs * self.n ** 2, workers=_FFT_WORKERS).real

    def power(self, s: float) -> np.ndarray:
        """|k|^s with the zero mode mapped to 0 for every s."""
        out = np.zeros_like(self.kmag)
        nz = self.kmag > 0
        out[nz] = self.kmag[nz] ** s
        return out


def make_grid(n: int, box_length: float = 2 * math.pi,
              dealias_fraction: float = 2.0 / 3.0) -> Grid:
    return Grid(n, float(box_length), float(dealias_fraction))


@dataclass(frozen=True, eq=False)
class PhysicalField:
    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"shape {self.values.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("physical field has non-finite entries")

    def to_spectral(self) -> SpectralField:
        return forward_transform(self)


@dataclass(frozen=True, eq=False)
class SpectralField:
    coeffs: np.ndarray
    grid: Grid

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"shape {self.coeffs.shape} does not match grid n={self.grid.n}")

    def to_physical(self) -> PhysicalField:
        return inverse_transform(self)

    def _check(self, other):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField(self.coeffs + other.coeffs, self.grid)

    def __sub__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField(self.coeffs - other.coeffs, self.grid)

    def __mul__(self, c: float) -> SpectralField:
        return SpectralField(self.coeffs * c, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> SpectralField:
        return SpectralField(-self.coeffs, self.grid)

    @classmethod
    def zeros(cls, grid: Grid) -> SpectralField:
        return cls(np.zeros((grid.n, grid.n), dtype=complex), grid)


Field = Union[PhysicalField, SpectralField]
Velocity = tuple  # (u1, u2), each a SpectralField


def forward_transform(f: PhysicalField) -> SpectralField:
    values = np.asarray(f.values, dtype=float)
    return SpectralField(f.grid.fft(values), f.grid)


def inverse_transform(f: SpectralField) -> PhysicalField:
    return PhysicalField(f.grid.ifft(f.coeffs), f.grid)


def as_spectral(f: Field) -> SpectralField:
    return f if isinstance(f, SpectralField) else forward_transform(f)


def as_physical(f: Field) -> PhysicalField:
    return f if isinstance(f, PhysicalField) else inverse_transform(f)


def hermitian_defect(coeffs: np.ndarray) -> float:
    """max |c(-k) - conj(c(k))| relative to max |c|; 0 for a real field."""
    flipped = np.roll(np.flip(coeffs, axis=(0, 1)), 1, axis=(0, 1))
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(flipped - np.conj(coeffs))) / scale)


# -- multipliers -------------------------------------------------------------

@dataclass(frozen=True)
class LambdaPower:
    """Lambda^s, symbol |k|^s (zero at k = 0)."""
    s: float

    def symbol(self, grid: Grid) -> np.ndarray:
        return grid.power(self.s)


@dataclass(frozen=True)
class RieszPerp:
    """Component i of R-perp = Lambda^{-1}(-d2, d1)."""
    i: int

    def __post_init__(self):
        if self.i not in (1, 2):
            raise ValueError(f"component must be 1 or 2, got {self.i}")

    def symbol(self, grid: Grid) -> np.ndarray:
        inv = grid.power(-1.0)
        if self.i == 1:
            return -1j * grid.dk2 * inv
        return 1j * grid.dk1 * inv


@dataclass(frozen=True)
class Semigroup:
    """exp(-kappa t Lambda^alpha)."""
    t: float
    kappa: float
    alpha: float

    def __post_init__(self):
        check_dissipation(self.kappa, self.alpha)
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")

    def symbol(self, grid: Grid) -> np.ndarray:
        return np.exp(-self.kappa * self.t * grid.power(self.alpha))


@dataclass(frozen=True)
class LowWeight:
    """phi(k) = exp(-|k|^2)."""

    def symbol(self, grid: Grid) -> np.ndarray:
        return np.exp(-grid.kmag ** 2)


@dataclass(frozen=True)
class HighWeight:
    """psi(k) = 1 - exp(-|k|^2)."""

    def symbol(self, grid: Grid) -> np.ndarray:
        return -np.expm1(-grid.kmag ** 2)


MultiplierSpec = Union[LambdaPower, RieszPerp, Semigroup, LowWeight, HighWeight]


def check_dissipation(kappa: float, alpha: float) -> None:
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if not 1 <= alpha < 2:
        raise ValueError(f"alpha must lie in [1, 2), got {alpha}")


def apply_multiplier(f: SpectralField, m: MultiplierSpec) -> SpectralField:
    return SpectralField(f.coeffs * m.symbol(f.grid), f.grid)


def riesz_perp(theta: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Velocity u = R-perp theta; k . u_hat(k) = 0 on every mode."""
    g = theta.grid
    inv = g.power(-1.0)
    c = theta.coeffs * inv
    return (SpectralField(-1j * g.dk2 * c, g), SpectralField(1j * g.dk1 * c, g))


def divergence(u: tuple[SpectralField, SpectralField]) -> SpectralField:
    g = u[0].grid
    return SpectralField(1j * (g.dk1 * u[0].coeffs + g.dk2 * u[1].coeffs), g)


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(np.where(f.grid.mask, f.coeffs, 0), f.grid)


def low_high_split(w: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Split into phi*w and psi*w; the two parts sum to w."""
    phi = LowWeight().symbol(w.grid)
    low = w.coeffs * phi
    return SpectralField(low, w.grid), SpectralField(w.coeffs - low, w.grid)


# -- norms -------------------------------------------------------------------

def _vector_values(f) -> np.ndarray:
    """Pointwise modulus of a scalar or vector field on the grid."""
    if isinstance(f, tuple):
        comps = [as_physical(c).values for c in f]
        return np.sqrt(sum(c ** 2 for c in comps))
    return np.abs(as_physical(f).values)


def norm(f, kind: str = "l2", *, s: float | None = None,
         p: float | None = None) -> float:
    """Norm of a scalar field or a (u1, u2) pair.

    kind is one of ``l2`` (Parseval), ``hs`` (||Lambda^s f||_2),
    ``lp`` (rectangle rule, needs ``p >= 1``; ``p=inf`` allowed) or ``linf``.
    """
    if isinstance(f, tuple):
        if kind in ("l2", "hs"):
            return math.sqrt(sum(norm(c, kind, s=s) ** 2 for c in f))
        grid = f[0].grid
    else:
        grid = f.grid
    if kind == "l2":
        c = as_spectral(f).coeffs
        return math.sqrt(grid.area * float(np.sum(np.abs(c) ** 2)))
    if kind == "hs":
        if s is None:
            raise ValueError("hs norm needs s")
        c = as_spectral(f).coeffs * grid.power(s)
        return math.sqrt(grid.area * float(np.sum(np.abs(c) ** 2)))
    if kind == "linf":
        return float(np.max(_vector_values(f)))
    if kind == "lp":
        if p is None:
            raise ValueError("lp norm needs p")
        if p < 1:
            raise ValueError(f"p must be >= 1, got {p}")
        a = _vector_values(f)
        if math.isinf(p):
            return float(np.max(a))
        scale = np.max(a)
        if scale == 0:
            return 0.0
        dx2 = (grid.box_length / grid.n) ** 2
        return float(scale * (dx2 * np.sum((a / scale) ** p)) ** (1.0 / p))
    raise ValueError(f"unknown norm kind {kind!r}")


def x_norm(f: Field, alpha: float) -> float:
    """Force norm: ||f||_4 + ||Lambda^{1-alpha/2} f||_4 + ||f||_q.

    q is infinity at alpha = 1 and 4/(alpha-1) above it.
    """
    if not 1 <= alpha < 2:
        raise ValueError(f"alpha must lie in [1, 2), got {alpha}")
    fs = as_spectral(f)
    frac = apply_multiplier(fs, LambdaPower(1 - alpha / 2))
    q = math.inf if alpha == 1 else 4.0 / (alpha - 1)
    return norm(fs, "lp", p=4) + norm(frac, "lp", p=4) + norm(fs, "lp", p=q)


def inner(f: SpectralField, g: SpectralField) -> float:
    """L^2 inner product of two real fields."""
    return float(f.grid.area * np.real(np.vdot(g.coeffs, f.coeffs)))
