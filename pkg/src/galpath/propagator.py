"""Propagators ``K(x'', x'; t2, t1)`` on a grid, built three ways.

* ``sliced``: product of N + 1 one-step Gaussian kernels (the time-sliced
  path integral), spatial integrals as ``dx^D``-weighted sums.
* ``spectral``: exponential of the finite-difference Hamiltonian (eigen-
  decomposition for ``H``; time-ordered Crank-Nicolson product for ``H~``).
* ``analytic``: closed-form free and Mehler kernels.

Matrices are indexed ``K[i_out, i_in]`` over flattened grid points, so that
``psi2 = K @ psi1 * dx^D``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator

from .lagrangian import (ParticleSystem, SingularTimeError, boost_divergence_beta, equivalence_F,
                         slice_action, space_shift_sigma, time_shift_tau)
from .waves import GridMismatchError, SpatialGrid, WaveFunction, WindowError

MIN_SUBSTEPS = 64


class AliasingWarning(UserWarning):
    """The grid is too coarse for the Fresnel phase of a one-step kernel."""


class CausticError(ValueError):
    pass


class DiscretizationError(RuntimeError):
    pass


def _config(sys: ParticleSystem, grid: SpatialGrid, pts: np.ndarray) -> np.ndarray:
    """Grid points ``(..., D)`` as particle configurations ``(..., n, 1)``."""
    if sys.spatial_dim != 1 or sys.n != grid.D:
        raise GridMismatchError(f"grid D={grid.D} needs {grid.D} particle(s) on a line, "
                                f"system has n={sys.n}, d={sys.spatial_dim}")
    return np.asarray(pts, dtype=float)[..., None]


@dataclass
class PropagatorMatrix:
    grid: SpatialGrid
    t1: float
    t2: float
    K: np.ndarray
    method: str
    closed_form: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.K.shape != (self.grid.size, self.grid.size):
            raise GridMismatchError(f"kernel shape {self.K.shape} does not match grid size {self.grid.size}")
        if not np.all(np.isfinite(self.K)):
            raise DiscretizationError(f"{self.method} kernel has non-finite entries")

    def evaluate(self, x_out, x_in, exact: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """``K(x_out, x_in)`` at arbitrary points ``(..., D)``.

        Closed-form kernels are evaluated exactly unless ``exact=False``;
        otherwise multilinear interpolation in the 2D-dimensional node
        table, which is exact at grid nodes.  Returns ``(values, inside)``.
        """
        x_out = np.asarray(x_out, dtype=float)
        x_in = np.asarray(x_in, dtype=float)
        inside = self.grid.contains(x_out) & self.grid.contains(x_in)
        if self.closed_form is not None and exact:
            return self.closed_form(x_out, x_in), inside
        D = self.grid.D
        table = self.K.reshape(self.grid.shape * 2)
        rgi = RegularGridInterpolator([self.grid.axis] * (2 * D), table, bounds_error=False, fill_value=0.0)
        pts = np.concatenate(np.broadcast_arrays(x_out, x_in), axis=-1)
        flat = np.clip(pts.reshape(-1, 2 * D), self.grid.xmin, self.grid.xmax)
        vals = rgi(flat).reshape(pts.shape[:-1])
        return np.where(inside, vals, 0.0), inside

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return (self.K @ np.ravel(psi)) * self.grid.weight

    def column(self, x_in_index: int) -> np.ndarray:
        return self.K[:, x_in_index].reshape(self.grid.shape)


# --- closed forms ---------------------------------------------------------------

def free_kernel_1d(m: float, hbar: float, T: float, x_out, x_in):
    """``sqrt(m / (2 pi i hbar T)) exp(i m (x'' - x')^2 / (2 hbar T))``."""
    if T <= 0:
        raise ValueError("free kernel needs T > 0")
    amp = np.sqrt(m / (2 * np.pi * hbar * T)) * np.exp(-0.25j * np.pi)
    return amp * np.exp(1j * m * (np.asarray(x_out) - np.asarray(x_in)) ** 2 / (2 * hbar * T))


def mehler_kernel_1d(m: float, omega: float, hbar: float, T: float, x_out, x_in):
    """Harmonic-oscillator kernel, Maslov phase included past each caustic."""
    if T <= 0:
        raise ValueError("Mehler kernel needs T > 0")
    if omega == 0:
        return free_kernel_1d(m, hbar, T, x_out, x_in)
    s = np.sin(omega * T)
    if abs(s) < 1e-12:
        raise CausticError(f"omega*T = {omega * T} is a multiple of pi (caustic)")
    nmaslov = np.floor(omega * T / np.pi)
    amp = np.sqrt(m * omega / (2 * np.pi * hbar * abs(s))) * np.exp(-0.25j * np.pi - 0.5j * np.pi * nmaslov)
    xo, xi = np.asarray(x_out), np.asarray(x_in)
    phase = m * omega * ((xo ** 2 + xi ** 2) * np.cos(omega * T) - 2 * xo * xi) / (2 * hbar * s)
    return amp * np.exp(1j * phase)


def _noether_phase(sys: ParticleSystem, x, t):
    """``exp{(i/hbar) F(x, t)}`` with ``F = -sum m x^2 / (2t)``."""
    return np.exp(1j * equivalence_F(sys, np.asarray(x)[..., None], t) / sys.hbar)


def closed_form_kernel(kind: str, sys: ParticleSystem, t1: float, t2: float, picture: str = "L") -> Callable:
    """Callable ``(x_out, x_in) -> K`` for points of shape ``(..., n)``.

    ``picture='Ltilde'`` conjugates with the ``exp{(i/hbar)F}`` factors relating
    the two pictures.
    """
    T = t2 - t1
    if kind == "free":
        def one(j, xo, xi):
            return free_kernel_1d(sys.masses[j], sys.hbar, T, xo, xi)
    elif kind == "harmonic":
        w = np.broadcast_to(np.asarray(getattr(sys.potential, "omega", None), dtype=float), (sys.n,))
        for wj in w:
            if abs(np.sin(wj * T)) < 1e-12 and wj != 0:
                raise CausticError(f"omega*T = {wj * T} is a multiple of pi (caustic)")

        def one(j, xo, xi):
            return mehler_kernel_1d(sys.masses[j], w[j], sys.hbar, T, xo, xi)
    else:
        raise ValueError(f"kind must be 'free' or 'harmonic', got {kind!r}")
    if picture == "Ltilde" and t1 <= 0 <= t2:
        raise SingularTimeError("interval contains t = 0")

    def K(x_out, x_in):
        x_out, x_in = np.broadcast_arrays(np.asarray(x_out, float), np.asarray(x_in, float))
        val = np.ones(x_out.shape[:-1], dtype=complex)
        for j in range(sys.n):
            val = val * one(j, x_out[..., j], x_in[..., j])
        if picture == "Ltilde":
            val = val * _noether_phase(sys, x_out, t2) / _noether_phase(sys, x_in, t1)
        return val

    return K


def analytic_kernel(kind: str, sys: ParticleSystem, grid: SpatialGrid, t1: float, t2: float,
                    picture: str = "L") -> PropagatorMatrix:
    _config(sys, grid, np.zeros(grid.D))
    f = closed_form_kernel(kind, sys, t1, t2, picture)
    pts = grid.points()
    K = f(pts[:, None, :], pts[None, :, :])
    tag = f"analytic-{kind}" + ("-tilde" if picture == "Ltilde" else "")
    return PropagatorMatrix(grid, t1, t2, K, tag, closed_form=f)


# --- time slicing -------------------------------------------------------------

def aliasing_ratio(sys: ParticleSystem, grid: SpatialGrid, eps: float) -> float:
    """``max_j m_j dx^2 / (2 hbar eps)``; the sliced kernel needs this <= pi."""
    return float(np.max(sys.masses) * grid.dx ** 2 / (2 * sys.hbar * eps))


def one_step_kernel(sys: ParticleSystem, grid: SpatialGrid, t0: float, t1: float, which: str = "L",
                    rule: str = "left") -> np.ndarray:
    """``k(x_{k+1}, x_k) = prod_j (m_j / (2 pi i hbar eps))^{1/2} exp{(i/hbar) S_slice}``."""
    eps = t1 - t0
    pts = _config(sys, grid, grid.points())
    S = slice_action(sys, pts[None, :], pts[:, None], t0, t1, which, rule)
    pref = np.prod(np.sqrt(sys.masses / (2 * np.pi * sys.hbar * eps))) * np.exp(-0.25j * np.pi * sys.n)
    return pref * np.exp(1j * S / sys.hbar)


def build_sliced(sys: ParticleSystem, grid: SpatialGrid, t1: float, t2: float, N: int, which: str = "L",
                 rule: str = "left") -> PropagatorMatrix:
    """Time-sliced path integral with N intermediate slices (N + 1 steps).

    N = 0 gives the single-step kernel.  The aliasing guard warns when
    ``m dx^2 / (2 hbar eps) > pi``.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    if t2 <= t1:
        raise ValueError("need t2 > t1")
    if which == "Ltilde" and t1 <= 0 <= t2:
        raise SingularTimeError("interval contains t = 0; L~ is singular there")
    times = np.linspace(t1, t2, N + 2)
    eps = times[1] - times[0]
    ratio = aliasing_ratio(sys, grid, eps)
    if ratio > np.pi:
        warnings.warn(f"aliasing guard: m dx^2/(2 hbar eps) = {ratio:.3g} > pi; refine the grid or use fewer slices",
                      AliasingWarning, stacklevel=2)
    w = grid.weight
    K = None
    for k in range(N + 1):
        step = one_step_kernel(sys, grid, times[k], times[k + 1], which, rule)
        K = step if K is None else (step @ K) * w
    return PropagatorMatrix(grid, t1, t2, K, f"sliced({N})")


# --- finite-difference Hamiltonians -------------------------------------------

def _axis_ops(n: int, dx: float):
    lap = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / dx ** 2
    der = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1]) / (2 * dx)
    return lap.tocsr(), der.tocsr()


def _embed(op, axis: int, D: int, n: int):
    eye = sp.identity(n, format="csr")
    mats = [op if a == axis else eye for a in range(D)]
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out


def hamiltonian_matrix(sys: ParticleSystem, grid: SpatialGrid, which: str = "H", t: float = 0.0):
    """Sparse Hermitian FD Hamiltonian with Dirichlet walls just outside the box.

    ``H~`` adds ``sum_j (x_j p_j + p_j x_j) / (2t)`` with the central-
    difference momentum, which keeps the matrix Hermitian.
    """
    pts = _config(sys, grid, grid.points())
    n, D, hbar = grid.npoints, grid.D, sys.hbar
    lap, der = _axis_ops(n, grid.dx)
    H = sp.diags(sys.U(pts).astype(complex))
    for j in range(D):
        H = H - (hbar ** 2 / (2 * sys.masses[j])) * _embed(lap, j, D, n)
    if which == "Htilde":
        if t == 0:
            raise SingularTimeError("H~ is not defined at t = 0")
        for j in range(D):
            X = sp.diags(pts[:, j, 0])
            P = -1j * hbar * _embed(der, j, D, n)
            H = H + (X @ P + P @ X) / (2 * t)
    elif which != "H":
        raise ValueError(f"which must be 'H' or 'Htilde', got {which!r}")
    H = sp.csr_matrix(H)
    asym = abs(H - H.conj().T).max() if H.nnz else 0.0
    if asym > 1e-12 * max(1.0, abs(H).max()):
        raise DiscretizationError(f"discretized Hamiltonian is not Hermitian (asymmetry {asym:.3e})")
    return H


def _cn_factors(H, dt: float, hbar: float):
    A = sp.identity(H.shape[0], format="csc") + (0.5j * dt / hbar) * H.tocsc()
    B = sp.identity(H.shape[0], format="csr") - (0.5j * dt / hbar) * H
    return spla.splu(A.tocsc()), B


def cn_evolve(sys: ParticleSystem, grid: SpatialGrid, psi: np.ndarray, t1: float, t2: float,
              which: str = "Htilde", substeps: int = 256) -> np.ndarray:
    """Time-ordered Crank-Nicolson product with the Hamiltonian frozen at each substep midpoint.

    ``psi`` may be a vector or a matrix of column vectors.
    """
    if substeps < MIN_SUBSTEPS:
        raise ValueError(f"need at least {MIN_SUBSTEPS} substeps, got {substeps}")
    if which == "Htilde" and min(t1, t2) <= 0 <= max(t1, t2):
        raise SingularTimeError("interval contains t = 0")
    out = np.array(psi, dtype=complex, copy=True).reshape(grid.size, -1)
    times = np.linspace(t1, t2, substeps + 1)
    dt = times[1] - times[0]
    Hfixed = None if which == "Htilde" else hamiltonian_matrix(sys, grid, which)
    if Hfixed is not None:
        lu, B = _cn_factors(Hfixed, dt, sys.hbar)
    for k in range(substeps):
        if Hfixed is None:
            tm = 0.5 * (times[k] + times[k + 1])
            lu, B = _cn_factors(hamiltonian_matrix(sys, grid, which, tm), dt, sys.hbar)
        out = lu.solve(B @ out)
    return out.reshape(np.shape(psi))


def build_spectral(sys: ParticleSystem, grid: SpatialGrid, t1: float, t2: float, which: str = "H",
                   substeps: int = 256) -> PropagatorMatrix:
    """``exp(-i (t2 - t1) H / hbar) / dx^D`` by eigendecomposition (``H``), or a
    time-ordered Crank-Nicolson product over ``substeps`` steps (``H~``)."""
    w = grid.weight
    if t2 == t1:
        if which == "Htilde" and t1 == 0:
            raise SingularTimeError("H~ is not defined at t = 0")
        return PropagatorMatrix(grid, t1, t2, np.eye(grid.size, dtype=complex) / w, "spectral")
    if which == "H":
        lam, V = _eigh(sys, grid)
        K = (V * np.exp(-1j * lam * (t2 - t1) / sys.hbar)) @ V.conj().T / w
        return PropagatorMatrix(grid, t1, t2, K, "spectral")
    U = cn_evolve(sys, grid, np.eye(grid.size, dtype=complex), t1, t2, which, substeps)
    return PropagatorMatrix(grid, t1, t2, U / w, "spectral")


_EIG_CACHE: dict = {}


def _eigh(sys: ParticleSystem, grid: SpatialGrid):
    key = (tuple(sys.masses), sys.hbar, sys.potential.describe(), grid)
    if key not in _EIG_CACHE:
        H = hamiltonian_matrix(sys, grid, "H").toarray()
        if np.allclose(H.imag, 0):
            H = H.real
        _EIG_CACHE.clear()
        _EIG_CACHE[key] = scipy.linalg.eigh(H)
    return _EIG_CACHE[key]


def spectral_evolve(sys: ParticleSystem, grid: SpatialGrid, psi: np.ndarray, T: float) -> np.ndarray:
    """``exp(-i T H / hbar) psi`` through the cached eigenbasis."""
    lam, V = _eigh(sys, grid)
    flat = np.ravel(psi)
    return (V @ (np.exp(-1j * lam * T / sys.hbar) * (V.conj().T @ flat))).reshape(np.shape(psi))


def unitarity_defect(K: PropagatorMatrix) -> float:
    """``max |U^dagger U - I|`` for ``U = dx^D K``."""
    U = K.K * K.grid.weight
    return float(np.max(np.abs(U.conj().T @ U - np.eye(len(U)))))


# --- evolution and residuals ----------------------------------------------------

def evolve(K: PropagatorMatrix, psi1: WaveFunction) -> WaveFunction:
    if psi1.grid != K.grid:
        raise GridMismatchError("wave function and kernel grids differ")
    if not np.isclose(psi1.t, K.t1, rtol=0, atol=1e-12):
        raise ValueError(f"wave function time {psi1.t} differs from kernel t1 {K.t1}")
    return WaveFunction(K.grid, K.apply(psi1.amplitudes).reshape(K.grid.shape), K.t2)


def _laplacian_nd(a: np.ndarray, dx: float, masses: Sequence[float], hbar: float) -> np.ndarray:
    """``sum_j -hbar^2/(2 m_j) d_j^2 a`` on interior points (borders left 0)."""
    out = np.zeros_like(a)
    core = tuple(slice(1, -1) for _ in range(a.ndim))
    for j in range(a.ndim):
        lo = list(core)
        hi = list(core)
        lo[j] = slice(0, -2)
        hi[j] = slice(2, None)
        out[core] += -hbar ** 2 / (2 * masses[j]) * (a[tuple(hi)] - 2 * a[core] + a[tuple(lo)]) / dx ** 2
    return out


def _xp_sym(a: np.ndarray, grid: SpatialGrid, hbar: float, t: float) -> np.ndarray:
    """``sum_j (x_j p_j + p_j x_j) a / (2t)`` on interior points."""
    out = np.zeros_like(a)
    core = tuple(slice(1, -1) for _ in range(a.ndim))
    mesh = grid.mesh()
    for j in range(a.ndim):
        lo = list(core)
        hi = list(core)
        lo[j] = slice(0, -2)
        hi[j] = slice(2, None)
        x = mesh[j]
        d_a = (a[tuple(hi)] - a[tuple(lo)]) / (2 * grid.dx)
        d_xa = (x[tuple(hi)] * a[tuple(hi)] - x[tuple(lo)] * a[tuple(lo)]) / (2 * grid.dx)
        out[core] += -1j * hbar * (x[core] * d_a + d_xa) / (2 * t)
    return out


def schrodinger_residual(sys: ParticleSystem, psi_series: Sequence[WaveFunction], which: str = "H",
                         margin: int = 3) -> np.ndarray:
    """``|H psi - i hbar d_t psi|`` at interior samples, central differences in t and x.

    Returns the residual field of shape ``(len(series) - 2,) + grid.shape``
    with a ``margin``-point border set to zero.
    """
    if len(psi_series) < 3:
        raise ValueError("need at least three time samples")
    grid = psi_series[0].grid
    times = np.array([p.t for p in psi_series])
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0) or dt[0] <= 0:
        raise ValueError("time samples must be uniform and increasing")
    if which == "Htilde" and np.any(times == 0):
        raise SingularTimeError("H~ residual needs times away from 0")
    dt = dt[0]
    A = np.array([p.amplitudes for p in psi_series])
    pts = _config(sys, grid, grid.points())
    Uvals = sys.U(pts).reshape(grid.shape)
    out = np.zeros((len(A) - 2,) + grid.shape, dtype=complex)
    for k in range(1, len(A) - 1):
        a = A[k]
        Ha = _laplacian_nd(a, grid.dx, sys.masses, sys.hbar) + Uvals * a
        if which == "Htilde":
            Ha = Ha + _xp_sym(a, grid, sys.hbar, times[k])
        out[k - 1] = Ha - 1j * sys.hbar * (A[k + 1] - A[k - 1]) / (2 * dt)
    mask = np.zeros(grid.shape, bool)
    mask[tuple(slice(margin, -margin) for _ in range(grid.D))] = True
    out[:, ~mask] = 0
    return np.abs(out)


def noether_map(sys: ParticleSystem, psi: WaveFunction, inverse: bool = False) -> WaveFunction:
    """``psi~ = exp{-(i/hbar) sum_j m_j x_j^2 / (2t)} psi``; unimodular pointwise."""
    ph = _noether_phase(sys, psi.grid.points(), psi.t).reshape(psi.grid.shape)
    return psi.copy(amplitudes=psi.amplitudes * (ph.conj() if inverse else ph))


# --- transformation identities --------------------------------------------------

Builder = Callable[[float, float], PropagatorMatrix]


def _window_pairs(grid: SpatialGrid, shift_out: np.ndarray, shift_in: np.ndarray, margin: float):
    """Interior node pairs whose shifted partners stay inside the box."""
    pts = grid.points()
    inner = grid.interior(margin).ravel()
    ok_out = inner & grid.contains(pts + shift_out)
    ok_in = inner & grid.contains(pts + shift_in)
    io = np.flatnonzero(ok_out)
    ii = np.flatnonzero(ok_in)
    if io.size == 0 or ii.size == 0:
        raise WindowError("no interior points remain after shifting; enlarge the grid or reduce the shift")
    return pts, io, ii


def relative_discrepancy(lhs: np.ndarray, rhs: np.ndarray) -> float:
    scale = np.max(np.abs(rhs))
    if scale == 0:
        return float(np.max(np.abs(lhs)))
    return float(np.max(np.abs(lhs - rhs)) / scale)


def check_boost_identity(K_builder: Builder, sys: ParticleSystem, grid: SpatialGrid, t1: float, t2: float,
                         u: float, margin: float = 0.15, exact: bool = True) -> float:
    """Compare ``K(x'' - t2 u, x' - t1 u)`` with
    ``exp{(i/hbar) beta(t2; x'')} K(x'', x') exp{-(i/hbar) beta(t1; x')}``.

    ``u`` is the common velocity of all particles.  Returns the max relative
    discrepancy over the window.
    """
    K = K_builder(t1, t2)
    if u == 0:
        return 0.0
    pts, io, ii = _window_pairs(grid, -t2 * u, -t1 * u, margin)
    xo = pts[io][:, None, :]
    xi = pts[ii][None, :, :]
    lhs, _ = K.evaluate(xo - t2 * u, xi - t1 * u, exact=exact)
    Knode = K.K[np.ix_(io, ii)]
    uvec = np.array([u], float)
    b2 = boost_divergence_beta(sys, pts[io][:, :, None], t2, uvec)
    b1 = boost_divergence_beta(sys, pts[ii][:, :, None], t1, uvec)
    rhs = np.exp(1j * b2 / sys.hbar)[:, None] * Knode * np.exp(-1j * b1 / sys.hbar)[None, :]
    return relative_discrepancy(lhs, rhs)


def check_translation_identities_Ltilde(K_builder: Builder, sys: ParticleSystem, grid: SpatialGrid,
                                        t1: float, t2: float, b: Optional[float] = None,
                                        a: Optional[float] = None, margin: float = 0.15,
                                        exact: bool = True) -> float:
    """Space shift: ``K~(x'' - b, x' - b) = e^{(i/hbar)[sigma(t2; x'') - sigma(t1; x')]} K~(x'', x')``.
    Time shift: ``K~(x'', x'; t2 - a, t1 - a) = e^{(i/hbar)[tau(t2; x'') - tau(t1; x')]} K~(x'', x'; t2, t1)``.
    """
    if (b is None) == (a is None):
        raise ValueError("give exactly one of b (space shift) or a (time shift)")
    hb = sys.hbar
    if b is not None:
        if t1 <= 0 <= t2:
            raise SingularTimeError("interval contains t = 0")
        K = K_builder(t1, t2)
        if b == 0:
            return 0.0
        pts, io, ii = _window_pairs(grid, -b, -b, margin)
        lhs, _ = K.evaluate(pts[io][:, None, :] - b, pts[ii][None, :, :] - b, exact=exact)
        bvec = np.array([b], float)
        s2 = space_shift_sigma(sys, pts[io][:, :, None], t2, bvec)
        s1 = space_shift_sigma(sys, pts[ii][:, :, None], t1, bvec)
        rhs = np.exp(1j * s2 / hb)[:, None] * K.K[np.ix_(io, ii)] * np.exp(-1j * s1 / hb)[None, :]
        return relative_discrepancy(lhs, rhs)
    if min(t1 - a, t1) <= 0 <= max(t2, t2 - a):
        raise SingularTimeError("0 lies in [t1 - a, t2]; the time-shift identity is singular")
    K = K_builder(t1, t2)
    if a == 0:
        return 0.0
    Ks = K_builder(t1 - a, t2 - a)
    pts = grid.points()
    inner = np.flatnonzero(grid.interior(margin).ravel())
    if inner.size == 0:
        raise WindowError("interior window is empty")
    lhs = Ks.K[np.ix_(inner, inner)]
    tau2 = time_shift_tau(sys, pts[inner][:, :, None], t2, a)
    tau1 = time_shift_tau(sys, pts[inner][:, :, None], t1, a)
    rhs = np.exp(1j * tau2 / hb)[:, None] * K.K[np.ix_(inner, inner)] * np.exp(-1j * tau1 / hb)[None, :]
    return relative_discrepancy(lhs, rhs)


def builder(method: str, sys: ParticleSystem, grid: SpatialGrid, N: int = 64, picture: str = "L",
            substeps: int = 256) -> Builder:
    """``(t1, t2) -> PropagatorMatrix`` for ``method`` in
    {``sliced``, ``spectral``, ``analytic-free``, ``analytic-harmonic``}."""
    if method == "sliced":
        return lambda t1, t2: build_sliced(sys, grid, t1, t2, N, "Ltilde" if picture == "Ltilde" else "L")
    if method == "spectral":
        return lambda t1, t2: build_spectral(sys, grid, t1, t2, "Htilde" if picture == "Ltilde" else "H", substeps)
    if method.startswith("analytic-"):
        kind = method.split("-", 1)[1]
        return lambda t1, t2: analytic_kernel(kind, sys, grid, t1, t2, picture)
    raise ValueError(f"unknown propagator method {method!r}")


def interior_max_relative_error(K: PropagatorMatrix, ref: PropagatorMatrix, margin: float = 0.15) -> float:
    inner = np.flatnonzero(K.grid.interior(margin).ravel())
    return relative_discrepancy(K.K[np.ix_(inner, inner)], ref.K[np.ix_(inner, inner)])


# --- CSV -------------------------------------------------------------------------

def write_kernel_csv(K: PropagatorMatrix, dest) -> None:
    if K.grid.D != 1:
        raise ValueError("kernel CSV export supports D = 1 only")
    x = K.grid.axis
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_out", "x_in", "re", "im"])
        for i, xo in enumerate(x):
            for j, xi in enumerate(x):
                v = K.K[i, j]
                w.writerow([repr(float(xo)), repr(float(xi)), repr(float(v.real)), repr(float(v.imag))])


def read_kernel_csv(src, t1: float, t2: float, method: str = "file") -> PropagatorMatrix:
    data = np.loadtxt(src, delimiter=",", skiprows=1, ndmin=2)
    x = np.unique(data[:, 0])
    n = len(x)
    if len(data) != n * n:
        raise ValueError(f"{src}: expected {n * n} rows for a {n}-point grid")
    grid = SpatialGrid(float(x[0]), float(x[-1]), n, 1)
    order = np.lexsort((data[:, 1], data[:, 0]))
    K = (data[order, 2] + 1j * data[order, 3]).reshape(n, n)
    return PropagatorMatrix(grid, t1, t2, K, method)
