"""Galilei transformations of wave functions in two pictures.

``standard``: wave functions of ``H``.  Translations and rotations act as
scalars, boosts carry the phase ``exp{-(i/hbar) M u (t u / 2 - R)}``.

``noether``: wave functions ``psi~`` of ``H~``.  Boosts act as scalars,
space shifts carry ``exp{-(i/hbar) (M/t) b (R - b/2)}`` and time shifts
``exp{(i/hbar) a sum m x^2 / (2 t (t + a))}``.

Every operator acts on a snapshot ``psi(., t)``.  Time shifts return the
snapshot of the transformed solution at ``t + a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .lagrangian import ParticleSystem, SingularTimeError
from .propagator import cn_evolve, spectral_evolve
from .waves import AnalyticWave, SpatialGrid, WaveFunction, WindowError, interpolate, l2_distance

Wave = Union[WaveFunction, AnalyticWave]
KINDS = ("boost", "space", "time", "rotation", "identity")
PICTURES = ("standard", "noether")
EPS_FLOOR = 1e-9


class ProjectivePhaseError(RuntimeError):
    """Ratio of the two compositions is not constant."""


@dataclass(frozen=True)
class WaveOperator:
    kind: str
    param: float = 0.0
    picture: str = "standard"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.picture not in PICTURES:
            raise ValueError(f"picture must be one of {PICTURES}, got {self.picture!r}")
        if self.kind == "rotation" and self.param not in (1, -1):
            raise ValueError("on a line the orthogonal group is {+1, -1}")

    @classmethod
    def parse(cls, text: str) -> "WaveOperator":
        """``boost:u=0.5;picture=standard`` and likewise ``space:b=``, ``time:a=``, ``rotation:O=``."""
        head, *opts = [s.strip() for s in text.split(";")]
        kind, _, assign = head.partition(":")
        kw = dict(o.split("=", 1) for o in opts if o)
        picture = kw.pop("picture", "standard")
        if kw:
            raise ValueError(f"unknown operator options {sorted(kw)}")
        if kind == "identity":
            return cls("identity", 0.0, picture)
        name, _, val = assign.partition("=")
        expected = {"boost": "u", "space": "b", "time": "a", "rotation": "O"}.get(kind)
        if expected is None or name != expected:
            raise ValueError(f"bad operator descriptor {text!r}")
        return cls(kind, float(val), picture)

    def describe(self) -> str:
        name = {"boost": "u", "space": "b", "time": "a", "rotation": "O"}.get(self.kind)
        head = self.kind if name is None else f"{self.kind}:{name}={self.param:g}"
        return f"{head};picture={self.picture}"

    def scaled(self, value: float) -> "WaveOperator":
        return WaveOperator(self.kind, value, self.picture)


def _masses_axes(sys: ParticleSystem, D: int) -> np.ndarray:
    if sys.spatial_dim != 1 or sys.n != D:
        raise ValueError(f"wave function with D={D} needs {D} particle(s) on a line; "
                         f"system has n={sys.n}, d={sys.spatial_dim}")
    return sys.masses


def _plan(op: WaveOperator, sys: ParticleSystem, D: int, t: float):
    """``(shift, phase(x), new_t, flip)`` with psi'(x) = phase(x) psi(flip * x - shift)."""
    m = _masses_axes(sys, D)
    M, hb, p = sys.total_mass, sys.hbar, op.param
    R = lambda x: np.tensordot(x, m, axes=([-1], [0])) / M  # noqa: E731
    one = lambda x: np.ones(x.shape[:-1], complex)  # noqa: E731
    if op.kind == "identity" or (op.kind != "rotation" and p == 0):
        return 0.0, one, t, 1
    if op.kind == "rotation":
        return 0.0, one, t, int(p)
    if op.kind == "boost":
        if op.picture == "noether":
            return t * p, one, t, 1
        return t * p, lambda x: np.exp(-1j * M * p * (t * p / 2 - R(x)) / hb), t, 1
    if op.kind == "space":
        if op.picture == "standard":
            return p, one, t, 1
        if t == 0:
            raise SingularTimeError("noether-picture space shift needs t != 0")
        return p, lambda x: np.exp(-1j * (M / t) * p * (R(x) - p / 2) / hb), t, 1
    # time
    if op.picture == "standard":
        return 0.0, one, t + p, 1
    if t == 0 or t + p == 0:
        raise SingularTimeError("noether-picture time shift needs t != 0 and t + a != 0")
    return 0.0, lambda x: np.exp(1j * p * np.sum(m * x ** 2, axis=-1) / (2 * t * (t + p) * hb)), t + p, 1


def apply(op: WaveOperator, psi: Wave, sys: ParticleSystem) -> Wave:
    """Transformed snapshot.  Off-grid arguments of a :class:`WaveFunction` are
    linearly interpolated; points whose preimage leaves the box are marked
    invalid (value 0)."""
    shift, phase, new_t, flip = _plan(op, sys, psi.D if isinstance(psi, AnalyticWave) else psi.grid.D, psi.t)
    if isinstance(psi, AnalyticWave):
        f = psi.fn
        return AnalyticWave(lambda x: phase(x) * f(flip * x - shift), new_t, psi.D)
    pts = psi.grid.points()
    if shift == 0 and flip == 1:
        vals, inside = psi.amplitudes.ravel(), np.ones(len(pts), bool)
    else:
        vals, inside = interpolate(psi.grid, psi.amplitudes, flip * pts - shift)
        # carry invalidity of the source along
        if not psi.valid.all():
            src_ok, _ = interpolate(psi.grid, psi.valid.astype(float), flip * pts - shift)
            inside &= src_ok > 1 - 1e-12
    amp = (phase(pts) * vals).reshape(psi.grid.shape)
    valid = inside.reshape(psi.grid.shape) & (psi.valid if shift == 0 and flip == 1 else True)
    return WaveFunction(psi.grid, np.where(valid, amp, 0), new_t, valid)


def compose_apply(ops: Sequence[WaveOperator], psi: Wave, sys: ParticleSystem) -> Wave:
    """Apply ``ops[0]`` first."""
    for op in ops:
        psi = apply(op, psi, sys)
    return psi


def sample(psi: Wave, grid: SpatialGrid) -> WaveFunction:
    return psi.sample(grid) if isinstance(psi, AnalyticWave) else psi


# --- solution maps ---------------------------------------------------------------

Oracle = Callable[[WaveFunction, float], WaveFunction]


def spectral_oracle(sys: ParticleSystem, grid: SpatialGrid, picture: str = "standard",
                    substeps: int = 256) -> Oracle:
    """Evolution ``(psi, t_to) -> psi(t_to)``: eigenbasis of ``H`` (standard) or
    time-ordered Crank-Nicolson in ``H~`` (noether)."""
    def evolve_to(psi: WaveFunction, t_to: float) -> WaveFunction:
        if picture == "standard":
            amp = spectral_evolve(sys, grid, psi.amplitudes, t_to - psi.t)
        else:
            amp = cn_evolve(sys, grid, psi.amplitudes, psi.t, t_to, "Htilde", substeps)
        return WaveFunction(grid, amp, t_to, psi.valid.copy())
    return evolve_to


def check_solution_map(op: WaveOperator, sys: ParticleSystem, oracle: Oracle, psi1: Wave, t2: float,
                       grid: SpatialGrid, margin: float = 0.15) -> float:
    """L2 distance (interior window) between transform-after-evolve and evolve-after-transform.

    ``psi1`` is the initial snapshot at ``t1 = psi1.t``; the comparison is at
    ``t2`` (shifted by ``a`` for time translations).
    """
    psi1 = sample(psi1, grid)
    late = apply(op, oracle(psi1, t2), sys)
    early = apply(op, psi1, sys)
    # evolution sees the transformed snapshot as a full initial state
    moved = oracle(early.copy(valid=np.ones(grid.shape, bool)), late.t)
    return l2_distance(late, moved, grid.interior(margin) & late.valid)


# --- projective phase ---------------------------------------------------------------

@dataclass
class PhaseRatio:
    ratio: complex
    max_deviation: float
    expected: complex
    phase_error: float
    npoints: int


def phase_ratio(a: np.ndarray, b: np.ndarray, support: np.ndarray) -> tuple[complex, float, int]:
    """Mean of ``a / b`` over ``support`` and the max deviation from it."""
    r = a[support] / b[support]
    mean = complex(np.mean(r))
    return mean, float(np.max(np.abs(r - mean))), int(support.sum())


def projective_phase(sys: ParticleSystem, u: float, b: float, psi: Wave, picture: str = "standard",
                     grid: Optional[SpatialGrid] = None, rel_floor: float = 1e-6,
                     tol: Optional[float] = None) -> PhaseRatio:
    """Ratio of ``S(b) L(u) psi`` to ``L(u) S(b) psi``; expected ``exp{-(i/hbar) M b u}``.

    Closed-form waves are evaluated on ``grid`` after composition (no
    interpolation); gridded waves are composed on their own grid.  Raises
    :class:`ProjectivePhaseError` if the ratio varies by more than ``tol``.
    """
    S = WaveOperator("space", b, picture)
    L = WaveOperator("boost", u, picture)
    a1 = compose_apply([L, S], psi, sys)
    a2 = compose_apply([S, L], psi, sys)
    if isinstance(psi, AnalyticWave):
        if grid is None:
            raise ValueError("closed-form waves need a grid to sample the ratio on")
        s1, s2 = a1.sample(grid), a2.sample(grid)
        ref = psi.sample(grid)
    else:
        s1, s2, ref = a1, a2, psi
    valid = s1.valid & s2.valid
    mag = np.abs(s2.amplitudes)
    support = valid & (mag > rel_floor * np.max(np.abs(ref.amplitudes)))
    if not support.any():
        raise WindowError("no grid points with non-negligible amplitude after composition")
    mean, dev, npts = phase_ratio(s1.amplitudes, s2.amplitudes, support)
    expected = np.exp(-1j * sys.total_mass * b * u / sys.hbar)
    if tol is not None and dev > tol:
        raise ProjectivePhaseError(f"ratio varies by {dev:.3e} > {tol:g} across the grid")
    err = float(abs(np.angle(mean / expected)))
    return PhaseRatio(mean, dev, expected, err, npts)


def boost_rep_property(sys: ParticleSystem, u1: float, u2: float, psi: WaveFunction,
                       picture: str = "standard", margin: float = 0.15) -> float:
    """L2 distance between ``L(u2) L(u1) psi`` and ``L(u1 + u2) psi`` on the interior window."""
    two = compose_apply([WaveOperator("boost", u1, picture), WaveOperator("boost", u2, picture)], psi, sys)
    one = apply(WaveOperator("boost", u1 + u2, picture), psi, sys)
    return l2_distance(two, one, psi.grid.interior(margin))


# --- infinitesimal generators ---------------------------------------------------------

def infinitesimal_generator(kind: str, sys: ParticleSystem, psi: Wave, epsilon: float,
                            picture: str = "standard", scheme: str = "forward") -> WaveFunction:
    """Difference quotient of ``apply(op(epsilon))``.

    ``forward``: ``(T(eps) psi - psi) / eps``.  ``central``:
    ``(T(eps) psi - T(-eps) psi) / (2 eps)``; on a linearly interpolated grid
    with ``t eps < dx`` this is the central difference of the transport term.
    Time shifts are excluded (they change the time stamp).
    """
    if not epsilon > EPS_FLOOR:
        raise ValueError(f"epsilon must exceed {EPS_FLOOR:g} (floating-point noise floor)")
    if kind not in ("boost", "space"):
        raise ValueError("generators are provided for 'boost' and 'space'")
    op = WaveOperator(kind, epsilon, picture)
    grid = psi.grid if isinstance(psi, WaveFunction) else None
    plus = apply(op, psi, sys)
    if scheme == "forward":
        minus, h = psi, epsilon
    elif scheme == "central":
        minus, h = apply(op.scaled(-epsilon), psi, sys), 2 * epsilon
    else:
        raise ValueError("scheme must be 'forward' or 'central'")
    if grid is None:
        raise ValueError("generators act on gridded wave functions")
    amp = (plus.amplitudes - minus.amplitudes) / h
    return WaveFunction(grid, amp, psi.t, plus.valid & minus.valid)


def analytic_boost_generator(sys: ParticleSystem, psi: WaveFunction, dpsi: np.ndarray) -> np.ndarray:
    """``A = -t sum_j d_j psi + (i/hbar) M R psi`` given the gradient ``dpsi`` of shape ``(D,) + grid``."""
    m = _masses_axes(sys, psi.grid.D)
    R = np.tensordot(psi.grid.points(), m, axes=([-1], [0])).reshape(psi.grid.shape)
    return -psi.t * np.sum(dpsi, axis=0) + 1j * R * psi.amplitudes / sys.hbar


def bracket(delta_a: Callable[[WaveFunction], WaveFunction], delta_b: Callable[[WaveFunction], WaveFunction],
            psi: WaveFunction) -> WaveFunction:
    """Lie bracket ``[delta_a, delta_b] psi = delta_b(delta_a psi) - delta_a(delta_b psi)``.

    Generators defined by moving the argument of the wave function compose
    in reverse order relative to the transformations they come from, so this
    ordering is the one under which the brackets reproduce the structure
    constants ``C`` with a plus sign.
    """
    ab = delta_b(delta_a(psi))
    ba = delta_a(delta_b(psi))
    return WaveFunction(psi.grid, ab.amplitudes - ba.amplitudes, psi.t, ab.valid & ba.valid)


def central_term(sys: ParticleSystem, psi: WaveFunction, epsilon: float, picture: str = "standard",
                 scheme: str = "central") -> WaveFunction:
    """``[delta_space, delta_boost] psi`` on the grid; expected ``(i/hbar) M psi``."""
    ds = lambda p: infinitesimal_generator("space", sys, p, epsilon, picture, scheme)  # noqa: E731
    db = lambda p: infinitesimal_generator("boost", sys, p, epsilon, picture, scheme)  # noqa: E731
    return bracket(ds, db, psi)


def central_term_error(sys: ParticleSystem, psi: WaveFunction, epsilon: float, picture: str = "standard",
                       scheme: str = "central", margin: float = 0.15) -> float:
    """``|| [delta_space, delta_boost] psi - (i/hbar) M psi ||`` (L2, interior window)."""
    c = central_term(sys, psi, epsilon, picture, scheme)
    target = psi.copy(amplitudes=1j * sys.total_mass / sys.hbar * psi.amplitudes)
    return l2_distance(c, target, psi.grid.interior(margin))
