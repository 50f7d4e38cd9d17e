"""Lagrangians ``L`` and ``L~`` of n particles, discrete actions, Euler-Lagrange
residuals and the divergence identities relating transformed Lagrangians to
boundary terms.

Array conventions: a configuration is ``(n, d)`` (particles by spatial
dimension), a sampled path is ``(K, n, d)``.  Leading batch axes are allowed
wherever a single configuration is accepted.

    L  = sum_j m_j v_j^2 / 2 - U
    L~ = sum_j m_j (v_j - r_j / t)^2 / 2 - U
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import simpson


class SingularTimeError(ValueError):
    """``L~`` and ``H~`` are undefined at t = 0."""


class PotentialDomainError(ValueError):
    pass


class PathError(ValueError):
    pass


# --- potentials --------------------------------------------------------------

class Potential:
    name = "potential"
    translation_invariant = True

    def energy(self, r: np.ndarray, masses: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, r: np.ndarray, masses: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class Free(Potential):
    name = "free"

    def energy(self, r, masses):
        return np.zeros(np.shape(r)[:-2])

    def gradient(self, r, masses):
        return np.zeros(np.shape(r))


@dataclass
class Harmonic(Potential):
    """``U = sum_j m_j w_j^2 r_j^2 / 2`` about the fixed origin."""

    omega: Union[float, Sequence[float]] = 1.0
    translation_invariant = False

    def _w2m(self, masses):
        w = np.broadcast_to(np.asarray(self.omega, dtype=float), np.shape(masses))
        return (w ** 2 * masses)[:, None]

    def energy(self, r, masses):
        return 0.5 * np.sum(self._w2m(masses) * np.asarray(r) ** 2, axis=(-2, -1))

    def gradient(self, r, masses):
        return self._w2m(masses) * np.asarray(r)

    def describe(self):
        w = np.atleast_1d(self.omega)
        return "harmonic:omega=" + ",".join(f"{x:g}" for x in w)

    @property
    def name(self):
        return self.describe()


@dataclass
class Pairwise(Potential):
    """``U = sum_{i<j} f(|r_i - r_j|)``; ``g(s) = f'(s) / s`` gives the force."""

    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    label: str = "pairwise"

    @property
    def name(self):
        return self.label

    def describe(self):
        return self.label

    def _pairs(self, r):
        r = np.asarray(r, dtype=float)
        n = r.shape[-2]
        for i in range(n):
            for j in range(i + 1, n):
                diff = r[..., i, :] - r[..., j, :]
                yield i, j, diff, np.sqrt(np.sum(diff ** 2, axis=-1))

    def energy(self, r, masses):
        total = np.zeros(np.shape(r)[:-2])
        for _, _, _, dist in self._pairs(r):
            with np.errstate(divide="ignore", invalid="ignore"):
                val = self.f(dist)
            if not np.all(np.isfinite(val)):
                raise PotentialDomainError(f"{self.label}: potential undefined at particle separation 0")
            total = total + val
        return total

    def gradient(self, r, masses):
        g = np.zeros(np.shape(r))
        for i, j, diff, dist in self._pairs(r):
            with np.errstate(divide="ignore", invalid="ignore"):
                coef = np.broadcast_to(self.g(dist), dist.shape)
            if not np.all(np.isfinite(coef)):
                raise PotentialDomainError(f"{self.label}: force undefined at particle separation 0")
            g[..., i, :] += coef[..., None] * diff
            g[..., j, :] -= coef[..., None] * diff
        return g


def hooke(k: float) -> Pairwise:
    return Pairwise(lambda s: 0.5 * k * s ** 2, lambda s: np.full_like(s, k), f"pairwise:hooke:k={k:g}")


def inverse_distance(k: float) -> Pairwise:
    return Pairwise(lambda s: k / s, lambda s: -k / s ** 3, f"pairwise:inverse:k={k:g}")


def parse_potential(text: str) -> Potential:
    """``free`` | ``harmonic:omega=<v>[,<v>...]`` | ``pairwise:hooke:k=<v>`` |
    ``pairwise:inverse:k=<v>``."""
    text = text.strip()
    if text == "free":
        return Free()
    m = re.fullmatch(r"harmonic:omega=([^:]+)", text)
    if m:
        w = [float(x) for x in m.group(1).split(",")]
        return Harmonic(w[0] if len(w) == 1 else w)
    m = re.fullmatch(r"pairwise:(hooke|inverse):k=([^:]+)", text)
    if m:
        k = float(m.group(2))
        return hooke(k) if m.group(1) == "hooke" else inverse_distance(k)
    raise ValueError(f"unknown potential descriptor {text!r}")


# --- system ------------------------------------------------------------------

@dataclass
class ParticleSystem:
    masses: np.ndarray
    hbar: float = 1.0
    spatial_dim: int = 1
    potential: Potential = field(default_factory=Free)

    def __post_init__(self):
        self.masses = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if np.any(self.masses <= 0):
            raise ValueError("masses must be positive")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.spatial_dim not in (1, 2, 3):
            raise ValueError("spatial_dim must be 1, 2 or 3")
        if isinstance(self.potential, str):
            self.potential = parse_potential(self.potential)

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def U(self, r) -> np.ndarray:
        return self.potential.energy(self._shape(r), self.masses)

    def grad_U(self, r) -> np.ndarray:
        return self.potential.gradient(self._shape(r), self.masses)

    def center_of_mass(self, r) -> np.ndarray:
        r = self._shape(r)
        return np.tensordot(r, self.masses, axes=([-2], [0])) / self.total_mass

    def momentum(self, v) -> np.ndarray:
        return np.tensordot(self._shape(v), self.masses, axes=([-2], [0]))

    def _shape(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if r.ndim == 0 or r.shape[-1] != self.spatial_dim:
            # bare per-particle scalars in 1D
            if self.spatial_dim == 1 and (r.ndim == 0 or r.shape[-1] == self.n):
                r = r[..., None]
            else:
                raise ValueError(f"configuration shape {r.shape} incompatible with n={self.n}, d={self.spatial_dim}")
        if r.ndim == 1:
            r = r[None, :] if self.n == 1 else r
        if r.shape[-2] != self.n:
            raise ValueError(f"configuration shape {r.shape} incompatible with n={self.n}, d={self.spatial_dim}")
        return r


def _check_time(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t == 0):
        raise SingularTimeError("L~ / H~ are not defined at t = 0")
    return t


def _kinetic(sys: ParticleSystem, w) -> np.ndarray:
    return 0.5 * np.sum(sys.masses[:, None] * w ** 2, axis=(-2, -1))


def eval_L(sys: ParticleSystem, r, v, t=0.0):
    r, v = sys._shape(r), sys._shape(v)
    return _kinetic(sys, v) - sys.U(r)


def eval_Ltilde(sys: ParticleSystem, r, v, t):
    t = _check_time(t)
    r, v = sys._shape(r), sys._shape(v)
    return _kinetic(sys, v - r / t[..., None, None]) - sys.U(r)


def lagrangian(which: str) -> Callable:
    if which == "L":
        return eval_L
    if which == "Ltilde":
        return eval_Ltilde
    raise ValueError(f"which must be 'L' or 'Ltilde', got {which!r}")


def conjugate_momentum(sys: ParticleSystem, r, v, t=0.0, which: str = "L"):
    r, v = sys._shape(r), sys._shape(v)
    m = sys.masses[:, None]
    if which == "L":
        return m * v
    t = _check_time(t)
    return m * (v - r / t[..., None, None])


def hamiltonian(sys: ParticleSystem, r, p, which: str = "H", t=0.0):
    r, p = sys._shape(r), sys._shape(p)
    H = 0.5 * np.sum(p ** 2 / sys.masses[:, None], axis=(-2, -1)) + sys.U(r)
    if which == "H":
        return H
    if which != "Htilde":
        raise ValueError(f"which must be 'H' or 'Htilde', got {which!r}")
    t = _check_time(t)
    return H + np.sum(r * p, axis=(-2, -1)) / t


def boost_divergence_beta(sys: ParticleSystem, positions, t, u):
    """``beta(t) = M u . (t u / 2 - R)``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    R = sys.center_of_mass(positions)
    t = np.asarray(t, dtype=float)
    return sys.total_mass * np.sum(u * (t[..., None] * u / 2 - R), axis=-1)


def space_shift_sigma(sys: ParticleSystem, positions, t, b):
    """``sigma(t) = (M / t) b . (R - b / 2)``: boundary term of ``L~`` under r -> r + b."""
    t = _check_time(t)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    R = sys.center_of_mass(positions)
    return sys.total_mass / t * np.sum(b * (R - b / 2), axis=-1)


def time_shift_tau(sys: ParticleSystem, positions, t, a: float):
    """``tau(t) = -a / (2 t (t - a)) sum_j m_j r_j^2``: boundary term of ``L~`` under t -> t + a."""
    t = _check_time(t)
    _check_time(t - a)
    r = sys._shape(positions)
    return -a / (2 * t * (t - a)) * np.sum(sys.masses[:, None] * r ** 2, axis=(-2, -1))


def equivalence_F(sys: ParticleSystem, positions, t):
    """``F = -sum_j m_j r_j^2 / (2 t)`` with ``L~ - L = dF/dt``."""
    t = _check_time(t)
    r = sys._shape(positions)
    return -np.sum(sys.masses[:, None] * r ** 2, axis=(-2, -1)) / (2 * t)


# --- paths -------------------------------------------------------------------

@dataclass
class Path:
    """Positions ``(K, n, d)`` at uniform times ``t_0 < ... < t_{K-1}``.

    With K = N + 2 the path has N interior slice points.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None, None]
        elif pos.ndim == 2:
            pos = pos[:, None, :]
        self.positions = pos
        if self.velocities is not None:
            self.velocities = np.asarray(self.velocities, dtype=float).reshape(pos.shape)
        K = len(self.times)
        if K < 2 or pos.shape[0] != K:
            raise PathError(f"need >= 2 time samples matching positions, got {K} and {pos.shape[0]}")
        dt = np.diff(self.times)
        if np.any(dt <= 0):
            raise PathError("times must be strictly increasing")
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise PathError("times must be uniformly spaced")

    @property
    def eps(self) -> float:
        return (self.times[-1] - self.times[0]) / (len(self.times) - 1)

    @property
    def N(self) -> int:
        return len(self.times) - 2

    @classmethod
    def from_function(cls, pos: Callable, t1: float, t2: float, N: int, vel: Optional[Callable] = None) -> "Path":
        times = np.linspace(t1, t2, N + 2)
        P = np.array([pos(t) for t in times])
        V = None if vel is None else np.array([vel(t) for t in times])
        return cls(times, P, V)


@dataclass
class SmoothPath:
    """Closed-form trajectory with analytic velocity."""

    pos: Callable[[float], np.ndarray]
    vel: Callable[[float], np.ndarray]

    def sample(self, t1: float, t2: float, N: int) -> Path:
        return Path.from_function(self.pos, t1, t2, N, self.vel)


def random_smooth_path(rng: np.random.Generator, n: int = 1, d: int = 1, degree: int = 3) -> SmoothPath:
    """Cubic polynomial plus a sinusoid per coordinate, O(1) coefficients."""
    c = rng.uniform(-1, 1, size=(degree + 1, n, d))
    A = rng.uniform(-0.5, 0.5, size=(n, d))
    w = rng.uniform(1, 3, size=(n, d))
    ph = rng.uniform(0, 2 * np.pi, size=(n, d))
    powers = np.arange(degree + 1)

    def pos(t):
        return np.tensordot(t ** powers, c, axes=1) + A * np.sin(w * t + ph)

    def vel(t):
        dp = powers[1:] * t ** (powers[1:] - 1)
        return np.tensordot(dp, c[1:], axes=1) + A * w * np.cos(w * t + ph)

    return SmoothPath(pos, vel)


def write_path_csv(path: Path, dest) -> None:
    K, n, d = path.positions.shape
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x_{i + 1}" for i in range(n * d)])
        for t, row in zip(path.times, path.positions.reshape(K, n * d)):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in row])


def read_path_csv(src, n_particles: int = 1) -> Path:
    src = FsPath(src)
    with open(src, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows or rows[0][0].strip() != "t":
        raise PathError(f"{src}: header must start with 't'")
    header = [h.strip() for h in rows[0]]
    if header[1:] != [f"x_{i + 1}" for i in range(len(header) - 1)]:
        raise PathError(f"{src}: header must read t,x_1,...,x_k")
    ncols = len(header) - 1
    if ncols == 0 or ncols % n_particles:
        raise PathError(f"{src}: {ncols} coordinate columns do not split over {n_particles} particles")
    data = []
    for lineno, r in enumerate(rows[1:], 2):
        if len(r) != len(header):
            raise PathError(f"{src}:{lineno}: expected {len(header)} fields, got {len(r)}")
        try:
            data.append([float(x) for x in r])
        except ValueError:
            raise PathError(f"{src}:{lineno}: non-numeric field") from None
    arr = np.array(data)
    return Path(arr[:, 0], arr[:, 1:].reshape(len(arr), n_particles, ncols // n_particles))


# --- discrete actions --------------------------------------------------------

def slice_action(sys: ParticleSystem, r0, r1, t0: float, t1: float, which: str = "L", rule: str = "left"):
    """Action of one straight slice from ``(t0, r0)`` to ``(t1, r1)``.

    ``L``: ``eps [sum m dr^2 / (2 eps^2) - U]``.  ``L~`` adds the cross term
    ``-sum m rbar.dr / tbar`` with the midpoint ``rbar`` and ``1/tbar`` the mean
    of ``1/t0, 1/t1``, and the centrifugal term ``sum m (r0^2 + r1^2) eps / (4 t0 t1)``.
    These choices make the discrete ``S~ - S`` telescope exactly to
    ``F(t2) - F(t1)`` with ``F = -sum m r^2 / (2t)``.

    ``r0``, ``r1`` may carry leading batch axes.
    """
    r0, r1 = sys._shape(r0), sys._shape(r1)
    eps = t1 - t0
    m = sys.masses[:, None]
    dr = r1 - r0
    if rule == "left":
        U = sys.U(r0)
    elif rule == "trapezoid":
        U = 0.5 * (sys.U(r0) + sys.U(r1))
    else:
        raise ValueError(f"rule must be 'left' or 'trapezoid', got {rule!r}")
    S = np.sum(m * dr ** 2, axis=(-2, -1)) / (2 * eps) - eps * U
    if which == "L":
        return S
    if which != "Ltilde":
        raise ValueError(f"which must be 'L' or 'Ltilde', got {which!r}")
    if t0 <= 0 <= t1:
        raise SingularTimeError(f"slice [{t0}, {t1}] contains t = 0")
    inv_t = 0.5 * (1 / t0 + 1 / t1)
    cross = -np.sum(m * 0.5 * (r0 + r1) * dr, axis=(-2, -1)) * inv_t
    centrifugal = np.sum(m * (r0 ** 2 + r1 ** 2), axis=(-2, -1)) * eps / (4 * t0 * t1)
    return S + cross + centrifugal


def action(sys: ParticleSystem, path: Path, which: str = "L", rule: str = "left") -> float:
    """Sum of :func:`slice_action` over all N + 1 slices."""
    t = path.times
    if which == "Ltilde" and t[0] <= 0 <= t[-1]:
        raise SingularTimeError("time interval contains t = 0")
    P = path.positions
    total = 0.0
    for k in range(len(t) - 1):
        total += float(slice_action(sys, P[k], P[k + 1], t[k], t[k + 1], which, rule))
    return total


def el_residual(sys: ParticleSystem, path: Path, which: str = "L") -> np.ndarray:
    """``dL/dr - d/dt dL/dv`` at interior samples, central differences throughout.

    Returns an array ``(K - 4, n, d)``.
    """
    K = len(path.times)
    if K < 5:
        raise PathError("el_residual needs N >= 3 interior points")
    eps = path.eps
    r, t = path.positions, path.times
    if which == "Ltilde":
        _check_time(t)
    v = (r[2:] - r[:-2]) / (2 * eps)
    rc, tc = r[1:-1], t[1:-1]
    p = conjugate_momentum(sys, rc, v, tc, which)
    dpdt = (p[2:] - p[:-2]) / (2 * eps)
    force = -sys.grad_U(rc[1:-1])
    if which == "Ltilde":
        force = force - p[1:-1] / tc[1:-1, None, None]
    return force - dpdt


# --- divergence identities -----------------------------------------------------

KINDS = ("boost", "space", "time", "equivalence")


def _vec(sys, value):
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.shape != (sys.spatial_dim,):
        raise ValueError(f"parameter {value!r} must have {sys.spatial_dim} components")
    return v


def transformed_lagrangian(sys: ParticleSystem, kind: str, value, which: str) -> Callable:
    """Lagrangian evaluated at transformed arguments, as a function of ``(r, v, t)``.

    boost u: ``L(r - t u, v - u, t)``; space b: ``L(r - b, v, t)``; time a:
    ``L(r, v, t - a)``; equivalence: ``L~`` itself (compared with ``L``).
    """
    base = lagrangian(which)
    if kind == "boost":
        u = _vec(sys, value)
        return lambda r, v, t: base(sys, r - np.asarray(t)[..., None, None] * u, v - u, t)
    if kind == "space":
        b = _vec(sys, value)
        return lambda r, v, t: base(sys, r - b, v, t)
    if kind == "time":
        a = float(value)
        return lambda r, v, t: base(sys, r, v, np.asarray(t) - a)
    if kind == "equivalence":
        return lambda r, v, t: eval_Ltilde(sys, r, v, t)
    raise ValueError(f"transform must be one of {KINDS}, got {kind!r}")


def boundary_function(sys: ParticleSystem, kind: str, value, which: str) -> Callable:
    """``F(r, t)`` with ``L' - L = dF/dt`` along any path; zero where L is invariant."""
    zero = lambda r, t: np.zeros(np.shape(t))  # noqa: E731
    if kind == "equivalence":
        return lambda r, t: equivalence_F(sys, r, t)
    if kind == "boost":
        return (lambda r, t: boost_divergence_beta(sys, r, t, value)) if which == "L" else zero
    if kind == "space":
        return (lambda r, t: space_shift_sigma(sys, r, t, value)) if which == "Ltilde" else zero
    if kind == "time":
        return (lambda r, t: time_shift_tau(sys, r, t, float(value))) if which == "Ltilde" else zero
    raise ValueError(f"transform must be one of {KINDS}, got {kind!r}")


def _sampled(path, t1, t2, N) -> Path:
    if isinstance(path, SmoothPath):
        return path.sample(t1, t2, N)
    return path


def check_divergence_identity(sys: ParticleSystem, path: Union[Path, SmoothPath], kind: str, value=None,
                              which: str = "L", t1: float = 1.0, t2: float = 2.0, N: int = 4096) -> float:
    """``|int (L' - L) dt - [F(t2) - F(t1)]|``.

    The integral is composite Simpson over the path samples.  Velocities are
    the analytic ones when available and second-order finite differences
    otherwise.  A :class:`SmoothPath` is sampled with ``N`` interior points on
    ``[t1, t2]``; a :class:`Path` is used as given.
    """
    p = _sampled(path, t1, t2, N)
    t, r = p.times, p.positions
    base_which = "L" if kind == "equivalence" else which
    if base_which == "Ltilde" or kind == "equivalence":
        if t[0] <= 0 <= t[-1]:
            raise SingularTimeError("time interval contains t = 0")
    if kind == "time" and which == "Ltilde":
        a = float(value)
        if t[0] - a <= 0 <= t[-1] - a:
            raise SingularTimeError("shifted interval [t1 - a, t2 - a] contains t = 0")
    v = p.velocities if p.velocities is not None else np.gradient(r, p.eps, axis=0, edge_order=2)
    Lp = transformed_lagrangian(sys, kind, value, which)
    L0 = lagrangian(base_which)
    integrand = Lp(r, v, t) - L0(sys, r, v, t)
    lhs = simpson(integrand, x=t)
    F = boundary_function(sys, kind, value, which)
    rhs = F(r[-1], t[-1]) - F(r[0], t[0])
    return float(abs(lhs - rhs))
