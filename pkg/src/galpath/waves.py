"""Uniform configuration grids, gridded and closed-form wave functions.

A grid with ``D = 2`` is the configuration space of two particles on a
line, so a grid point is ``(x_1, x_2)``.  Points are flattened in C order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

MARGIN = 0.15


class GridMismatchError(ValueError):
    pass


class WindowError(ValueError):
    """A comparison window ended up empty."""


@dataclass(frozen=True)
class SpatialGrid:
    xmin: float
    xmax: float
    npoints: int
    D: int = 1

    def __post_init__(self):
        if self.npoints < 8:
            raise ValueError("npoints must be >= 8")
        if self.D not in (1, 2):
            raise ValueError("D must be 1 or 2")
        if not self.xmax > self.xmin:
            raise ValueError("xmax must exceed xmin")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / (self.npoints - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.npoints)

    @property
    def shape(self) -> tuple:
        return (self.npoints,) * self.D

    @property
    def size(self) -> int:
        return self.npoints ** self.D

    @property
    def weight(self) -> float:
        """Quadrature weight ``dx^D``."""
        return self.dx ** self.D

    def points(self) -> np.ndarray:
        """All grid points, shape ``(size, D)``."""
        mesh = np.meshgrid(*([self.axis] * self.D), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.axis] * self.D), indexing="ij")

    def interior(self, margin: float = MARGIN) -> np.ndarray:
        """Boolean mask of shape ``self.shape`` excluding ``margin`` of the box on each side."""
        x = self.axis
        L = self.xmax - self.xmin
        m1 = (x >= self.xmin + margin * L - 1e-12) & (x <= self.xmax - margin * L + 1e-12)
        mask = m1
        for _ in range(self.D - 1):
            mask = np.multiply.outer(mask, m1)
        return mask

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        tol = 1e-9 * self.dx
        return np.all((pts >= self.xmin - tol) & (pts <= self.xmax + tol), axis=-1)


def interpolate(grid: SpatialGrid, values: np.ndarray, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear (multilinear for D = 2) interpolation at ``pts`` of shape ``(..., D)``.

    Returns ``(values, inside)``; outside the box the value is 0.
    """
    pts = np.asarray(pts, dtype=float)
    inside = grid.contains(pts)
    if grid.D == 1:
        x = pts[..., 0]
        out = np.interp(x, grid.axis, values.real, left=0.0, right=0.0).astype(complex)
        if np.iscomplexobj(values):
            out += 1j * np.interp(x, grid.axis, values.imag, left=0.0, right=0.0)
        return out, inside
    rgi = RegularGridInterpolator([grid.axis] * grid.D, values, bounds_error=False, fill_value=0.0)
    flat = pts.reshape(-1, grid.D)
    clipped = np.clip(flat, grid.xmin, grid.xmax)
    out = rgi(clipped).reshape(pts.shape[:-1])
    return np.where(inside, out, 0.0), inside


@dataclass
class WaveFunction:
    grid: SpatialGrid
    amplitudes: np.ndarray
    t: float
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != self.grid.shape:
            a = a.reshape(self.grid.shape)
        if not np.all(np.isfinite(a)):
            raise ValueError("wave function amplitudes must be finite")
        self.amplitudes = a
        if self.valid is None:
            self.valid = np.ones(self.grid.shape, dtype=bool)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.weight))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm() - 1) < 1e-12

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes / self.norm(), self.t, self.valid.copy())

    def at(self, pts) -> tuple[np.ndarray, np.ndarray]:
        return interpolate(self.grid, self.amplitudes, pts)

    def copy(self, **changes) -> "WaveFunction":
        kw = dict(grid=self.grid, amplitudes=self.amplitudes.copy(), t=self.t, valid=self.valid.copy())
        kw.update(changes)
        return WaveFunction(**kw)


@dataclass
class AnalyticWave:
    """Closed-form wave function ``psi(x)`` at time ``t``.

    ``fn`` maps points ``(..., D)`` to complex values.  Operators compose
    callables, so no interpolation error enters.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    t: float
    D: int = 1

    def __call__(self, pts) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(pts, dtype=float)), dtype=complex)

    def sample(self, grid: SpatialGrid) -> WaveFunction:
        if grid.D != self.D:
            raise GridMismatchError(f"wave has D={self.D}, grid has D={grid.D}")
        return WaveFunction(grid, self(grid.points()).reshape(grid.shape), self.t)


def gaussian_packet(x0, k0, sigma, t: float = 0.0, hbar: float = 1.0) -> AnalyticWave:
    """Normalized product of Gaussians ``exp(-(x-x0)^2/(4 sigma^2) + i k0 x)`` (one per axis)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    k0 = np.broadcast_to(np.asarray(k0, dtype=float), x0.shape)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), x0.shape)
    norm = np.prod((2 * np.pi * sigma ** 2) ** -0.25)

    def fn(x):
        return norm * np.exp(np.sum(-(x - x0) ** 2 / (4 * sigma ** 2) + 1j * k0 * x, axis=-1))

    return AnalyticWave(fn, t, len(x0))


def free_gaussian(x0, k0, sigma, m, t: float, t0: float = 0.0, hbar: float = 1.0) -> AnalyticWave:
    """Free evolution of :func:`gaussian_packet` from ``t0`` to ``t`` in closed form.

    One factor per axis with mass ``m[axis]``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    k0 = np.broadcast_to(np.asarray(k0, dtype=float), x0.shape)
    s0 = np.broadcast_to(np.asarray(sigma, dtype=float), x0.shape)
    m = np.broadcast_to(np.asarray(m, dtype=float), x0.shape)
    T = t - t0
    st = s0 * (1 + 1j * hbar * T / (2 * m * s0 ** 2))
    norm = np.prod((2 * np.pi * s0 ** 2) ** -0.25 * np.sqrt(s0 / st))
    v = hbar * k0 / m

    def fn(x):
        y = x - x0 - v * T
        ph = k0 * (x - x0) - hbar * k0 ** 2 * T / (2 * m) + k0 * x0
        return norm * np.exp(np.sum(-y ** 2 / (4 * s0 * st) + 1j * ph, axis=-1))

    return AnalyticWave(fn, t, len(x0))


def l2_distance(a: WaveFunction, b: WaveFunction, window: Optional[np.ndarray] = None) -> float:
    if a.grid != b.grid:
        raise GridMismatchError("wave functions live on different grids")
    mask = np.ones(a.grid.shape, bool) if window is None else window
    mask = mask & a.valid & b.valid
    if not mask.any():
        raise WindowError("comparison window is empty")
    d = np.abs(a.amplitudes - b.amplitudes)[mask]
    return float(np.sqrt(np.sum(d ** 2) * a.grid.weight))


def write_wave_csv(psi: WaveFunction, dest) -> None:
    pts = psi.grid.points()
    amp = psi.amplitudes.ravel()
    cols = ["x"] if psi.grid.D == 1 else [f"x_{i + 1}" for i in range(psi.grid.D)]
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols + ["re", "im"])
        for p, a in zip(pts, amp):
            w.writerow([repr(float(x)) for x in p] + [repr(float(a.real)), repr(float(a.imag))])


def read_wave_csv(src, t: float = 0.0) -> WaveFunction:
    """Read an ``x,re,im`` file (1D, uniform ``x``)."""
    data = np.loadtxt(src, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 3:
        raise ValueError(f"{src}: expected columns x,re,im")
    x = data[:, 0]
    grid = SpatialGrid(float(x[0]), float(x[-1]), len(x), 1)
    if not np.allclose(x, grid.axis, rtol=0, atol=1e-9 * grid.dx):
        raise ValueError(f"{src}: x column is not a uniform grid")
    return WaveFunction(grid, data[:, 1] + 1j * data[:, 2], t)
