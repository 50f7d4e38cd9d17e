"""Galilei group elements acting on events and paths.

An element ``g = (a, b, O, u)`` acts actively on an event by

    (t, r) -> (t + a, O r + u t + b)

i.e. rotate, then boost, then translate in space and time.  The passive
reading (relabelling coordinates of the same event) is the inverse element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-12


class DimensionError(ValueError):
    pass


class NotOrthogonalError(ValueError):
    pass


def is_signed_permutation(O: np.ndarray) -> bool:
    O = np.asarray(O)
    if O.ndim != 2 or O.shape[0] != O.shape[1]:
        return False
    nz = O != 0
    return (np.all(np.isin(O, (-1, 0, 1)))
            and np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1))


def check_orthogonal(O: np.ndarray, tol: float = ORTHO_TOL) -> None:
    O = np.asarray(O, dtype=float)
    if O.ndim != 2 or O.shape[0] != O.shape[1]:
        raise NotOrthogonalError(f"O must be square, got shape {O.shape}")
    if is_signed_permutation(O):
        return
    err = np.max(np.abs(O.T @ O - np.eye(len(O))))
    if err > tol:
        raise NotOrthogonalError(f"O^T O deviates from identity by {err:.3e} > {tol:g}")


@dataclass(frozen=True)
class Event:
    t: float
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.atleast_1d(np.asarray(self.r, dtype=float)))


@dataclass(frozen=True, eq=False)
class GalileiElement:
    a: float
    b: np.ndarray
    O: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        O = np.atleast_2d(np.asarray(self.O, dtype=float))
        if not (1 <= len(b) <= 3) or b.shape != u.shape or O.shape != (len(b), len(b)):
            raise DimensionError(f"inconsistent dims: b {b.shape}, O {O.shape}, u {u.shape}")
        check_orthogonal(O)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "O", O)

    @property
    def dim(self) -> int:
        return len(self.b)

    @classmethod
    def identity(cls, dim: int = 3) -> "GalileiElement":
        return cls(0.0, np.zeros(dim), np.eye(dim), np.zeros(dim))

    @classmethod
    def boost(cls, u) -> "GalileiElement":
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return cls(0.0, np.zeros_like(u), np.eye(len(u)), u)

    @classmethod
    def translation(cls, b=None, a: float = 0.0, dim: int | None = None) -> "GalileiElement":
        if b is None:
            b = np.zeros(dim or 3)
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return cls(a, b, np.eye(len(b)), np.zeros_like(b))

    @classmethod
    def rotation(cls, O) -> "GalileiElement":
        O = np.atleast_2d(np.asarray(O, dtype=float))
        return cls(0.0, np.zeros(len(O)), O, np.zeros(len(O)))

    def allclose(self, other: "GalileiElement", tol: float = 1e-12) -> bool:
        return (self.dim == other.dim and abs(self.a - other.a) <= tol
                and np.allclose(self.b, other.b, rtol=0, atol=tol)
                and np.allclose(self.O, other.O, rtol=0, atol=tol)
                and np.allclose(self.u, other.u, rtol=0, atol=tol))

    def serialize(self) -> str:
        def j(v):
            return ",".join(repr(float(x)) for x in np.ravel(v))
        return f"{float(self.a)!r};{j(self.b)};{j(self.O)};{j(self.u)}"

    @classmethod
    def parse(cls, text: str) -> "GalileiElement":
        """Inverse of :meth:`serialize`: ``a;b1,b2,b3;O row-major;u1,u2,u3``."""
        parts = text.strip().split(";")
        if len(parts) != 4:
            raise ValueError(f"expected 4 ';'-separated fields, got {len(parts)}: {text!r}")
        try:
            a = float(parts[0])
            b, O, u = ([float(x) for x in p.split(",")] for p in parts[1:])
        except ValueError as exc:
            raise ValueError(f"bad group element {text!r}: {exc}") from None
        n = len(b)
        if len(O) != n * n:
            raise DimensionError(f"O needs {n * n} entries for dim {n}, got {len(O)}")
        return cls(a, b, np.reshape(O, (n, n)), u)


def _same_dim(*dims):
    if len(set(dims)) != 1:
        raise DimensionError(f"dimension mismatch: {dims}")


def act(g: GalileiElement, e: Event) -> Event:
    _same_dim(g.dim, len(e.r))
    return Event(e.t + g.a, g.O @ e.r + g.u * e.t + g.b)


def compose(g2: GalileiElement, g1: GalileiElement) -> GalileiElement:
    """The element acting as ``g2`` after ``g1``."""
    _same_dim(g2.dim, g1.dim)
    return GalileiElement(
        g1.a + g2.a,
        g2.O @ g1.b + g2.u * g1.a + g2.b,
        g2.O @ g1.O,
        g2.O @ g1.u + g2.u,
    )


def inverse(g: GalileiElement) -> GalileiElement:
    Ot = g.O.T
    return GalileiElement(-g.a, Ot @ (g.u * g.a - g.b), Ot, -(Ot @ g.u))


def act_on_path(g: GalileiElement, times: np.ndarray, positions: np.ndarray):
    """Image of a sampled trajectory of ``n`` particles.

    ``positions`` has shape ``(K, n, d)`` (or ``(K, d)`` for one particle);
    every particle is moved by the same element.  Returns new times and
    positions.
    """
    times = np.asarray(times, dtype=float)
    pos = np.asarray(positions, dtype=float)
    single = pos.ndim == 2
    if single:
        pos = pos[:, None, :]
    _same_dim(g.dim, pos.shape[-1])
    new = pos @ g.O.T + g.u * times[:, None, None] + g.b
    return times + g.a, (new[:, 0, :] if single else new)
