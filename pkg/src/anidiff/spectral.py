"""Fields on the periodic box and their Fourier-side operators.

A scalar field is stored as the full cube of complex Fourier coefficients,
normalized so that coefficient c(xi) is the amplitude of exp(i*kappa.x) with
kappa = (2*pi/L)*xi and xi the integer mode vector.  Real fields are kept
Hermitian-symmetric; nonlinear products are truncated by the per-axis
fraction rule after every evaluation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

__all__ = [
    "Grid",
    "SpectralField",
    "VectorField",
    "NumericError",
    "fft_workers",
    "to_physical",
    "from_physical",
    "lambda_dir",
    "lambda_full",
    "derivative",
    "gradient_norm_sq",
    "dealias",
    "hermitian_symmetrize",
    "is_hermitian",
    "leray_project",
    "nonlinear_advection",
    "l2_norm",
    "inner",
    "solenoidal_defect",
    "random_field",
]


class NumericError(ArithmeticError):
    """Nonfinite values encountered where finite data is required."""


def fft_workers() -> int:
    """Worker cap for internal FFT parallelism (ANIDIFF_THREADS, default 1)."""
    try:
        return max(1, int(os.environ.get("ANIDIFF_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    """Cubic periodic box discretization.

    n1, n2, n3 are the modes per dimension (even, at least 4); box_length the
    physical period along every axis; dealias_fraction the retained-mode
    fraction per axis for nonlinear products.
    """

    n1: int
    n2: int
    n3: int
    box_length: float = 2.0 * np.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        for n in (self.n1, self.n2, self.n3):
            if n < 4 or n % 2 != 0:
                raise ValueError(f"grid size must be even and >= 4, got {n}")
        if not self.box_length > 0:
            raise ValueError("box_length must be positive")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must be in (0, 1]")

    @classmethod
    def cube(cls, n: int, **kw) -> "Grid":
        return cls(n, n, n, **kw)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    @property
    def size(self) -> int:
        return self.n1 * self.n2 * self.n3

    @property
    def cell_volume(self) -> float:
        return self.box_length**3 / self.size

    @property
    def volume(self) -> float:
        return self.box_length**3

    def modes(self, axis: int) -> np.ndarray:
        """Integer mode labels along a 1-based axis, FFT ordering."""
        n = self.shape[_axis_index(axis)]
        return np.fft.fftfreq(n, d=1.0 / n)

    def kappa(self, axis: int) -> np.ndarray:
        """Physical wavenumbers (2*pi/L scaling) along a 1-based axis."""
        return self.modes(axis) * (2.0 * np.pi / self.box_length)


def _axis_index(axis: int) -> int:
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be in {{1,2,3}}, got {axis}")
    return axis - 1


@lru_cache(maxsize=32)
def _kappa_grids(grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Broadcastable physical wavenumber arrays per axis."""
    k1 = grid.kappa(1)[:, None, None]
    k2 = grid.kappa(2)[None, :, None]
    k3 = grid.kappa(3)[None, None, :]
    return k1, k2, k3


@lru_cache(maxsize=32)
def _keep_mask(grid: Grid) -> np.ndarray:
    """Boolean mask of modes retained by the per-axis fraction rule.

    The boundary tolerance keeps |xi| landing exactly on fraction*n/2 despite
    floating-point rounding of the cutoff.
    """
    keep = np.ones(grid.shape, dtype=bool)
    for axis in (1, 2, 3):
        n = grid.shape[axis - 1]
        kmax = np.floor(grid.dealias_fraction * n / 2.0 + 1e-9)
        m = np.abs(grid.modes(axis)) <= kmax
        shape = [1, 1, 1]
        shape[axis - 1] = n
        keep = keep & m.reshape(shape)
    return keep


@lru_cache(maxsize=32)
def _kappa_sq(grid: Grid) -> np.ndarray:
    k1, k2, k3 = _kappa_grids(grid)
    return k1**2 + k2**2 + k3**2


@dataclass(frozen=True)
class SpectralField:
    """One real scalar field as complex Fourier coefficients on a Grid."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField:
    """Three scalar fields sharing one grid."""

    c1: SpectralField
    c2: SpectralField
    c3: SpectralField
    solenoidal: bool = False

    def __post_init__(self):
        if not (self.c1.grid == self.c2.grid == self.c3.grid):
            raise ValueError("vector components must share a grid")

    @property
    def grid(self) -> Grid:
        return self.c1.grid

    @property
    def components(self) -> tuple[SpectralField, SpectralField, SpectralField]:
        return (self.c1, self.c2, self.c3)

    def component(self, k: int) -> SpectralField:
        return self.components[_axis_index(k)]

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(*(SpectralField.zeros(grid) for _ in range(3)))

    @classmethod
    def from_stacked(cls, grid: Grid, arr: np.ndarray, solenoidal=False) -> "VectorField":
        return cls(
            SpectralField(grid, arr[0]),
            SpectralField(grid, arr[1]),
            SpectralField(grid, arr[2]),
            solenoidal=solenoidal,
        )

    def stacked(self) -> np.ndarray:
        return np.stack([c.coeffs for c in self.components])

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(*[a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(*[a - b for a, b in zip(self.components, other.components)])

    def __mul__(self, scalar) -> "VectorField":
        return VectorField(*[c * scalar for c in self.components])

    __rmul__ = __mul__


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def to_physical(f: SpectralField) -> np.ndarray:
    """Real grid samples of the field (imaginary roundoff discarded)."""
    return _fft.ifftn(f.coeffs * f.grid.size, workers=fft_workers()).real


def from_physical(grid: Grid, values: np.ndarray) -> SpectralField:
    """Coefficients of real grid samples."""
    c = _fft.fftn(values, workers=fft_workers()) / grid.size
    return SpectralField(grid, c)


def phys_batch(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Inverse-transform a (m, n1, n2, n3) coefficient batch to real samples."""
    return _fft.ifftn(coeffs * grid.size, axes=(-3, -2, -1), workers=fft_workers()).real


def spec_batch(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Forward-transform a (m, n1, n2, n3) real-sample batch to coefficients."""
    return _fft.fftn(values, axes=(-3, -2, -1), workers=fft_workers()) / grid.size


# ---------------------------------------------------------------------------
# multiplier operators
# ---------------------------------------------------------------------------

def dir_multiplier(grid: Grid, axis: int, gamma: float) -> np.ndarray:
    """|kappa_axis|^gamma as a broadcastable array; 0^0 = 1 so gamma=0 is identity."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    k = np.abs(_kappa_grids(grid)[_axis_index(axis)])
    if gamma == 0:
        return np.ones_like(k)
    return k**gamma


def lambda_dir(f: SpectralField, axis: int, gamma: float) -> SpectralField:
    """Directional fractional operator: multiply by |kappa_axis|^gamma."""
    return SpectralField(f.grid, f.coeffs * dir_multiplier(f.grid, axis, gamma))


def lambda_full(f: SpectralField, s: float) -> SpectralField:
    """Isotropic fractional operator: multiply by |kappa|^s (|0|^0 = 1)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0:
        return f.copy()
    ksq = _kappa_sq(f.grid)
    if s == 2.0:
        mult = ksq
    else:
        mult = ksq ** (s / 2.0)
    return SpectralField(f.grid, f.coeffs * mult)


def derivative(f: SpectralField, axis: int) -> SpectralField:
    """Spectral partial derivative along a 1-based axis."""
    k = _kappa_grids(f.grid)[_axis_index(axis)]
    return SpectralField(f.grid, f.coeffs * (1j * k))


def gradient_norm_sq(f: SpectralField) -> float:
    """Squared L2 norm of the gradient, |kappa|^2-weighted coefficient sum."""
    return float(
        f.grid.volume * np.sum(_kappa_sq(f.grid) * (f.coeffs.real**2 + f.coeffs.imag**2))
    )


def dealias(f: SpectralField) -> SpectralField:
    """Zero all modes beyond the retained fraction per axis."""
    return SpectralField(f.grid, f.coeffs * _keep_mask(f.grid))


def hermitian_symmetrize(f: SpectralField) -> SpectralField:
    """Project onto Hermitian-symmetric coefficients (real physical field)."""
    c = f.coeffs
    conj_flip = np.conj(np.roll(np.flip(c, axis=(0, 1, 2)), shift=(1, 1, 1), axis=(0, 1, 2)))
    return SpectralField(f.grid, 0.5 * (c + conj_flip))


def is_hermitian(f: SpectralField, rtol: float = 1e-12) -> bool:
    c = f.coeffs
    conj_flip = np.conj(np.roll(np.flip(c, axis=(0, 1, 2)), shift=(1, 1, 1), axis=(0, 1, 2)))
    scale = np.max(np.abs(c))
    if scale == 0:
        return True
    return float(np.max(np.abs(c - conj_flip))) <= rtol * scale


# ---------------------------------------------------------------------------
# vector operations
# ---------------------------------------------------------------------------

def leray_project(v: VectorField) -> VectorField:
    """Remove the gradient part: c <- c - kappa (kappa.c)/|kappa|^2, mean kept."""
    grid = v.grid
    out = project_stacked(grid, v.stacked())
    return VectorField.from_stacked(grid, out, solenoidal=True)


def project_stacked(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Array-level Leray projection of a stacked (3, n1, n2, n3) field."""
    k1, k2, k3 = _kappa_grids(grid)
    ksq = _kappa_sq(grid).copy()
    ksq[0, 0, 0] = 1.0  # zero mode untouched: kappa = 0 there
    kdotu = (k1 * u[0] + k2 * u[1] + k3 * u[2]) / ksq
    return np.stack([u[0] - k1 * kdotu, u[1] - k2 * kdotu, u[2] - k3 * kdotu])


def divergence_coeffs(v: VectorField) -> np.ndarray:
    k1, k2, k3 = _kappa_grids(v.grid)
    u = v.components
    return 1j * (k1 * u[0].coeffs + k2 * u[1].coeffs + k3 * u[2].coeffs)


def solenoidal_defect(v: VectorField) -> float:
    """max |kappa.c| over modes, relative to the largest coefficient magnitude."""
    scale = max(float(np.max(np.abs(c.coeffs))) for c in v.components)
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(divergence_coeffs(v)))) / scale


def advect_stacked(grid: Grid, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(v.grad)w for stacked coefficient arrays, dealiased output.

    Transforms v and the nine partials of w to grid samples, multiplies, and
    transforms back.  Inputs are assumed already truncated; the output is
    truncated, which makes the quadratic product exact under the 2/3 rule.
    """
    k1, k2, k3 = _kappa_grids(grid)
    batch = np.empty((12,) + grid.shape, dtype=complex)
    batch[0:3] = v
    for i in range(3):
        batch[3 + 3 * i] = 1j * k1 * w[i]
        batch[4 + 3 * i] = 1j * k2 * w[i]
        batch[5 + 3 * i] = 1j * k3 * w[i]
    phys = phys_batch(grid, batch)
    vp, dw = phys[0:3], phys[3:12]
    prod = np.empty((3,) + grid.shape)
    for i in range(3):
        prod[i] = vp[0] * dw[3 * i] + vp[1] * dw[3 * i + 1] + vp[2] * dw[3 * i + 2]
    return spec_batch(grid, prod) * _keep_mask(grid)


def nonlinear_advection(v: VectorField, w: VectorField) -> VectorField:
    """Pseudo-spectral (v.grad)w with dealiased output."""
    _check_same_grid(v, w)
    out = advect_stacked(v.grid, v.stacked(), w.stacked())
    return VectorField.from_stacked(v.grid, out)


# ---------------------------------------------------------------------------
# norms, inner products, sampling
# ---------------------------------------------------------------------------

def l2_norm(f: SpectralField | VectorField) -> float:
    """L2 norm over the box (coefficient side, exact for band-limited fields)."""
    if isinstance(f, VectorField):
        s = sum(np.sum(c.coeffs.real**2 + c.coeffs.imag**2) for c in f.components)
        return float(np.sqrt(f.grid.volume * s))
    s = np.sum(f.coeffs.real**2 + f.coeffs.imag**2)
    return float(np.sqrt(f.grid.volume * s))


def inner(a: SpectralField, b: SpectralField) -> float:
    """L2 inner product of two real fields."""
    _check_same_grid(a, b)
    return float(a.grid.volume * np.sum(np.conj(a.coeffs) * b.coeffs).real)


def vector_inner(a: VectorField, b: VectorField) -> float:
    return sum(inner(x, y) for x, y in zip(a.components, b.components))


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    sigma: float | None = None,
    mean_free: bool = True,
) -> SpectralField:
    """Seeded band-limited random field.

    Spectral amplitude proportional to exp(-|xi|^2 / (2 sigma^2)) with
    sigma = n/8 by default, uniform random phases, Hermitian-symmetrized and
    truncated to the retained modes.
    """
    if sigma is None:
        sigma = min(grid.shape) / 8.0
    m1 = grid.modes(1)[:, None, None]
    m2 = grid.modes(2)[None, :, None]
    m3 = grid.modes(3)[None, None, :]
    xi_sq = m1**2 + m2**2 + m3**2
    envelope = np.exp(-xi_sq / (2.0 * sigma**2))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=grid.shape)
    c = envelope * np.exp(1j * phases)
    f = hermitian_symmetrize(dealias(SpectralField(grid, c)))
    if mean_free:
        f.coeffs[0, 0, 0] = 0.0
    return f
