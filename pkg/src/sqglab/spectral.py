"""Periodic-box fields and the Fourier-multiplier operators driving SQG.

The plane is approximated by a periodic box with padding factor >= 4
(box side >= 4x the diameter of the field support).  The velocity is
defined through its Fourier symbols

    v1_hat = -i xi_2 / |xi| theta_hat,     v2_hat = +i xi_1 / |xi| theta_hat,

i.e. v = (-d/dx2, d/dx1) applied to the inverse half-Laplacian of theta.
The equivalent physical-space kernel is -(1/2pi) (x-y)^perp / |x-y|^3 with
(a,b)^perp = (-b, a); the quadrature module uses the same normalization so
velocities are directly comparable across the two routes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

# grid points per shortest oscillation wavelength required of constructed data
MIN_POINTS_PER_WAVELENGTH = 8.0
# minimum box side over support diameter
MIN_PADDING_FACTOR = 4.0

_FFT_WORKERS = int(os.environ.get("SQGLAB_FFT_WORKERS", "-1"))


def set_fft_workers(n):
    global _FFT_WORKERS
    _FFT_WORKERS = int(n)


def _rfft2(a):
    return sfft.rfft2(a, workers=_FFT_WORKERS)


def _irfft2(a, shape):
    return sfft.irfft2(a, s=shape, workers=_FFT_WORKERS)


class GridError(ValueError):
    pass


class ResolutionError(GridError):
    """Constructed data would be under-resolved on this grid."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform n x n periodic grid of physical side ``box_length``.

    ``origin_offset`` is the (row, col) grid coordinate of the point x = 0;
    by default the box center, so fields built around the origin are
    maximally padded.
    """

    n: int
    box_length: float
    origin_offset: tuple = None

    def __post_init__(self):
        if self.n < 64 or self.n % 2:
            raise GridError(f"n must be even and >= 64, got {self.n}")
        if self.box_length <= 0:
            raise GridError("box_length must be positive")
        if self.origin_offset is None:
            object.__setattr__(self, "origin_offset", (self.n // 2, self.n // 2))

    @property
    def dx(self):
        return self.box_length / self.n

    def axes(self):
        """Physical coordinates along each axis (x1 varies with axis 0)."""
        i = np.arange(self.n)
        x1 = (i - self.origin_offset[0]) * self.dx
        x2 = (i - self.origin_offset[1]) * self.dx
        return x1, x2

    def meshgrid(self):
        x1, x2 = self.axes()
        return np.meshgrid(x1, x2, indexing="ij")

    def polar(self):
        x1, x2 = self.meshgrid()
        return np.hypot(x1, x2), np.arctan2(x2, x1)

    def wavenumbers(self):
        """(xi1, xi2) on the rfft2 half-spectrum layout."""
        k1 = 2.0 * np.pi * sfft.fftfreq(self.n, d=self.dx)
        k2 = 2.0 * np.pi * sfft.rfftfreq(self.n, d=self.dx)
        return np.meshgrid(k1, k2, indexing="ij")

    def check_support(self, support_radius):
        if 2.0 * support_radius * MIN_PADDING_FACTOR > self.box_length * (1 + 1e-12):
            raise GridError(
                f"box {self.box_length} < {MIN_PADDING_FACTOR} x support diameter "
                f"{2 * support_radius}")

    def check_resolution(self, min_wavelength):
        if min_wavelength < MIN_POINTS_PER_WAVELENGTH * self.dx * (1 - 1e-12):
            raise ResolutionError(
                f"wavelength {min_wavelength:.4g} has "
                f"{min_wavelength / self.dx:.2f} points/wavelength on dx={self.dx:.4g} "
                f"(need >= {MIN_POINTS_PER_WAVELENGTH}); "
                f"smallest resolvable n = "
                f"{int(np.ceil(MIN_POINTS_PER_WAVELENGTH * self.box_length / min_wavelength))}")


@dataclass
class ScalarField:
    """Real samples of a compactly supported scalar on a Grid2D.

    ``support_radius`` is the declared bound on the continuum support;
    ``min_wavelength`` the shortest oscillation the constructor placed on
    the grid (None = broadband / unknown, norm routines then fall back to a
    spectral-tail diagnostic).
    """

    grid: Grid2D
    values: np.ndarray
    support_radius: float
    min_wavelength: float = None
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise GridError("values shape does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise GridError("non-finite field values")
        self.grid.check_support(self.support_radius)
        if self.min_wavelength is not None:
            self.grid.check_resolution(self.min_wavelength)

    def check_support_mass(self, tol=1e-10):
        """L1 mass outside the declared support disk, relative to total."""
        r, _ = self.grid.polar()
        a = np.abs(self.values)
        total = a.sum()
        if total == 0.0:
            return 0.0
        out = a[r > self.support_radius].sum() / total
        if out > tol:
            raise GridError(f"support leakage {out:.2e} exceeds {tol:.0e}")
        return out

    def l2(self):
        return float(np.sqrt(np.sum(self.values**2)) * self.grid.dx)

    def linf(self):
        return float(np.max(np.abs(self.values)))

    def mean(self):
        return float(self.values.mean())

    def copy(self, values=None, time=None):
        return ScalarField(self.grid, self.values.copy() if values is None else values,
                           self.support_radius, self.min_wavelength,
                           self.time if time is None else time)


@dataclass
class SpectralField:
    grid: Grid2D
    coefficients: np.ndarray  # rfft2 half-spectrum

    def to_scalar(self, support_radius, min_wavelength=None, time=0.0):
        vals = _irfft2(self.coefficients, (self.grid.n, self.grid.n))
        return ScalarField(self.grid, vals, support_radius, min_wavelength, time)


@dataclass
class VelocityField:
    grid: Grid2D
    v1: np.ndarray
    v2: np.ndarray

    def max_speed(self):
        return float(np.sqrt(self.v1**2 + self.v2**2).max())

    def at_points(self, p1, p2, order=3):
        """Bicubic interpolation at physical points (periodic wrap)."""
        from scipy.ndimage import map_coordinates
        o1, o2 = self.grid.origin_offset
        c1 = np.asarray(p1) / self.grid.dx + o1
        c2 = np.asarray(p2) / self.grid.dx + o2
        coords = np.vstack([np.atleast_1d(c1), np.atleast_1d(c2)])
        u = map_coordinates(self.v1, coords, order=order, mode="grid-wrap")
        v = map_coordinates(self.v2, coords, order=order, mode="grid-wrap")
        return u, v


def to_spectral(theta):
    return SpectralField(theta.grid, _rfft2(theta.values))


def riesz_multipliers(grid):
    """(m1, m2) with v_i_hat = m_i * theta_hat; zero mode set to 0."""
    k1, k2 = grid.wavenumbers()
    mag = np.hypot(k1, k2)
    mag[0, 0] = 1.0
    m1 = -1j * k2 / mag
    m2 = 1j * k1 / mag
    m1[0, 0] = 0.0
    m2[0, 0] = 0.0
    return m1, m2


def riesz_velocity_hat(grid, theta_hat):
    m1, m2 = riesz_multipliers(grid)
    return m1 * theta_hat, m2 * theta_hat


def riesz_velocity(theta):
    """Velocity field of a scalar; the zero mode (box mean) is dropped."""
    if not np.all(np.isfinite(theta.values)):
        raise GridError("non-finite input")
    th = to_spectral(theta)
    v1h, v2h = riesz_velocity_hat(theta.grid, th.coefficients)
    n = theta.grid.n
    return VelocityField(theta.grid, _irfft2(v1h, (n, n)), _irfft2(v2h, (n, n)))


def fractional_laplacian(theta, s):
    """|xi|^s multiplier; the zero mode is dropped for s < 0, kept for s >= 0."""
    if not -2.0 <= s <= 4.0:
        raise ValueError(f"s={s} outside [-2, 4]")
    th = to_spectral(theta)
    k1, k2 = theta.grid.wavenumbers()
    mag = np.hypot(k1, k2)
    if s < 0:
        mag[0, 0] = 1.0
        mult = mag**s
        mult[0, 0] = 0.0
    elif s == 0:
        mult = np.ones_like(mag)
    else:
        mult = mag**s
    out = th.coefficients * mult
    n = theta.grid.n
    return theta.copy(values=_irfft2(out, (n, n)))


def partial_derivative(theta, order_x1, order_x2):
    """Spectral derivative; accuracy contract void beyond total order 5."""
    if order_x1 < 0 or order_x2 < 0 or order_x1 + order_x2 > 5:
        raise ValueError("derivative order must be >= 0 with total <= 5")
    th = to_spectral(theta)
    k1, k2 = theta.grid.wavenumbers()
    mult = (1j * k1) ** order_x1 * (1j * k2) ** order_x2
    n = theta.grid.n
    return theta.copy(values=_irfft2(th.coefficients * mult, (n, n)))


def dealias_mask(grid):
    k1, k2 = grid.wavenumbers()
    kmax = np.pi / grid.dx
    cut = (2.0 / 3.0) * kmax
    return (np.abs(k1) <= cut) & (np.abs(k2) <= cut)


def dealias(theta_hat):
    mask = dealias_mask(theta_hat.grid)
    return SpectralField(theta_hat.grid, theta_hat.coefficients * mask)


def spectral_divergence(v):
    """Relative size of the spectral divergence of a velocity field."""
    k1, k2 = v.grid.wavenumbers()
    d = 1j * k1 * _rfft2(v.v1) + 1j * k2 * _rfft2(v.v2)
    g = np.sqrt(np.abs(1j * k1 * _rfft2(v.v1))**2 + np.abs(1j * k2 * _rfft2(v.v2))**2)
    denom = np.sqrt((g**2).sum())
    return float(np.sqrt((np.abs(d)**2).sum()) / denom) if denom > 0 else 0.0


def spectral_l2(theta):
    """L2 norm evaluated in Fourier space (Parseval check path)."""
    c = to_spectral(theta).coefficients
    n = theta.grid.n
    w = np.full(c.shape, 2.0)
    w[:, 0] = 1.0
    if n % 2 == 0:
        w[:, -1] = 1.0
    s = np.sum(w * np.abs(c)**2) / n**2
    return float(np.sqrt(s) * theta.grid.dx)


def tail_energy_fraction(theta):
    """Energy fraction above the 2/3 dealias cutoff (resolution diagnostic)."""
    c = to_spectral(theta).coefficients
    mask = dealias_mask(theta.grid)
    tot = np.sum(np.abs(c)**2)
    if tot == 0.0:
        return 0.0
    return float(np.sum(np.abs(c[~mask])**2) / tot)


def save_snapshot(theta, path):
    """Raw little-endian float64 row-major + JSON sidecar."""
    theta.values.astype("<f8").tofile(path)
    side = {
        "n": theta.grid.n,
        "box_length": theta.grid.box_length,
        "origin_offset": list(theta.grid.origin_offset),
        "support_radius": theta.support_radius,
        "time": theta.time,
    }
    if theta.min_wavelength is not None:
        side["min_wavelength"] = theta.min_wavelength
    with open(str(path) + ".json", "w") as fh:
        json.dump(side, fh, indent=1)


def load_snapshot(path):
    with open(str(path) + ".json") as fh:
        side = json.load(fh)
    vals = np.fromfile(path, dtype="<f8").reshape(side["n"], side["n"])
    grid = Grid2D(side["n"], side["box_length"], tuple(side["origin_offset"]))
    return ScalarField(grid, vals, side["support_radius"],
                       side.get("min_wavelength"), side.get("time", 0.0))
