"""Second cohomology of finite-dimensional real Lie algebras, exactly.

Structure constants ``C^g_{ab}`` (``[X_a, X_b] = sum_g C^g_{ab} X_g``), 2-forms
``d_{ab}`` and 1-forms ``e_g`` hold ``Fraction`` values only.  The module
answers four questions about a 2-form on an algebra: does the algebra satisfy
Jacobi, is the 2-form closed, is it exact (and if so, with which 1-form), and
how large is H^2.

Text format (one record per line, ``#`` starts a comment)::

    dim 10
    C <alpha> <beta> <gamma> <p>/<q>
    D <alpha> <beta> <p>/<q>
    E <gamma> <p>/<q>
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from . import exact


class MalformedSpecError(ValueError):
    """Structure constants or form entries violate index/antisymmetry rules."""


class DimensionMismatchError(ValueError):
    pass


class NotClosedError(ValueError):
    """An exactness question was asked about a 2-form that is not closed."""


class JacobiError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, lineno: Optional[int] = None, source: str = "<text>"):
        self.lineno = lineno
        self.source = source
        where = f"{source}:{lineno}: " if lineno is not None else f"{source}: "
        super().__init__(where + message)


Rational = Union[Fraction, int, str]


def _pairs(dim: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(dim), 2))


@dataclass(frozen=True)
class LieAlgebraSpec:
    """Structure constants stored for ``alpha < beta`` only.

    Build instances with :meth:`from_constants`, which canonicalizes
    ``C^g_{ba} = -C^g_{ab}`` and rejects inconsistent input.
    """

    dim: int
    constants: tuple[tuple[int, int, int, Fraction], ...]
    _table: dict = field(default=None, repr=False, compare=False, hash=False)

    @classmethod
    def from_constants(cls, dim: int, entries: Iterable[tuple[int, int, int, Rational]]) -> "LieAlgebraSpec":
        if dim < 1:
            raise MalformedSpecError(f"dimension must be positive, got {dim}")
        table: dict[tuple[int, int, int], Fraction] = {}
        for a, b, g, v in entries:
            v = Fraction(v)
            for idx in (a, b, g):
                if not 0 <= idx < dim:
                    raise MalformedSpecError(f"index {idx} out of range for dim {dim}")
            if a == b:
                if v != 0:
                    raise MalformedSpecError(f"C^{g}_{{{a}{a}}} must vanish, got {v}")
                continue
            if a > b:
                a, b, v = b, a, -v
            key = (a, b, g)
            if key in table and table[key] != v:
                raise MalformedSpecError(f"conflicting values for C^{g}_{{{a}{b}}}: {table[key]} and {v}")
            table[key] = v
        constants = tuple(sorted((a, b, g, v) for (a, b, g), v in table.items() if v != 0))
        obj = cls(dim, constants)
        object.__setattr__(obj, "_table", {(a, b, g): v for a, b, g, v in constants})
        return obj

    def c(self, a: int, b: int, g: int) -> Fraction:
        if a == b:
            return Fraction(0)
        if a < b:
            return self._lookup().get((a, b, g), Fraction(0))
        return -self._lookup().get((b, a, g), Fraction(0))

    def _lookup(self) -> dict:
        if self._table is None:
            object.__setattr__(self, "_table", {(a, b, g): v for a, b, g, v in self.constants})
        return self._table

    def bracket_coefficients(self, a: int, b: int) -> dict[int, Fraction]:
        """Nonzero ``g -> C^g_{ab}``."""
        out = {}
        for g in range(self.dim):
            v = self.c(a, b, g)
            if v:
                out[g] = v
        return out

    def relabel(self, perm: Sequence[int]) -> "LieAlgebraSpec":
        """Same algebra with basis element ``i`` renamed ``perm[i]``."""
        return LieAlgebraSpec.from_constants(
            self.dim, [(perm[a], perm[b], perm[g], v) for a, b, g, v in self.constants])

    def validate(self) -> None:
        for a, b, g, _ in self.constants:
            if not (0 <= a < b < self.dim and 0 <= g < self.dim):
                raise MalformedSpecError(f"bad constant index ({a}, {b}, {g}) for dim {self.dim}")


@dataclass(frozen=True)
class TwoForm:
    """Antisymmetric ``d_{ab}``; only ``a < b`` entries are stored.

    ``unit`` names a symbolic scalar multiplying every entry (for example
    ``"i*M/hbar"``).  Closedness and exactness are linear, so the unit is
    carried along and never enters the arithmetic.
    """

    dim: int
    entries: tuple[tuple[int, int, Fraction], ...]
    unit: str = ""

    @classmethod
    def from_entries(cls, dim: int, entries: Iterable[tuple[int, int, Rational]], unit: str = "") -> "TwoForm":
        table: dict[tuple[int, int], Fraction] = {}
        for a, b, v in entries:
            v = Fraction(v)
            if not (0 <= a < dim and 0 <= b < dim):
                raise MalformedSpecError(f"2-form index ({a}, {b}) out of range for dim {dim}")
            if a == b:
                if v != 0:
                    raise MalformedSpecError(f"diagonal 2-form entry d_{{{a}{a}}} = {v}")
                continue
            if a > b:
                a, b, v = b, a, -v
            if (a, b) in table and table[(a, b)] != v:
                raise MalformedSpecError(f"conflicting values for d_{{{a}{b}}}")
            table[(a, b)] = v
        return cls(dim, tuple(sorted((a, b, v) for (a, b), v in table.items() if v != 0)), unit)

    @classmethod
    def from_vector(cls, dim: int, vec: Sequence[Rational], unit: str = "") -> "TwoForm":
        return cls.from_entries(dim, [(a, b, v) for (a, b), v in zip(_pairs(dim), vec)], unit)

    @classmethod
    def zero(cls, dim: int) -> "TwoForm":
        return cls(dim, ())

    def d(self, a: int, b: int) -> Fraction:
        if a == b:
            return Fraction(0)
        sign = 1
        if a > b:
            a, b, sign = b, a, -1
        for x, y, v in self.entries:
            if (x, y) == (a, b):
                return sign * v
        return Fraction(0)

    def vector(self) -> list[Fraction]:
        lookup = {(a, b): v for a, b, v in self.entries}
        return [lookup.get(p, Fraction(0)) for p in _pairs(self.dim)]

    def is_zero(self) -> bool:
        return not self.entries

    def scaled(self, factor: Rational) -> "TwoForm":
        return TwoForm.from_entries(self.dim, [(a, b, v * Fraction(factor)) for a, b, v in self.entries], self.unit)

    def __add__(self, other: "TwoForm") -> "TwoForm":
        _same_dim(self.dim, other.dim)
        return TwoForm.from_vector(self.dim, [x + y for x, y in zip(self.vector(), other.vector())], self.unit)

    def __sub__(self, other: "TwoForm") -> "TwoForm":
        return self + other.scaled(-1)


@dataclass(frozen=True)
class OneForm:
    dim: int
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.entries) != self.dim:
            raise MalformedSpecError(f"1-form needs {self.dim} entries, got {len(self.entries)}")

    @classmethod
    def from_values(cls, values: Sequence[Rational]) -> "OneForm":
        return cls(len(values), tuple(Fraction(v) for v in values))

    @classmethod
    def basis(cls, dim: int, g: int, value: Rational = 1) -> "OneForm":
        return cls.from_values([value if i == g else 0 for i in range(dim)])


@dataclass(frozen=True)
class CohomologyReport:
    jacobi_ok: bool
    closed_space_dim: int
    exact_space_dim: int
    h2_dim: int
    representative: Optional[TwoForm] = None
    exactness_witness: Optional[OneForm] = None

    def __post_init__(self):
        assert self.h2_dim == self.closed_space_dim - self.exact_space_dim >= 0


def _same_dim(*dims: int) -> None:
    if len(set(dims)) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {dims}")


def jacobi_sum(alg: LieAlgebraSpec, a: int, b: int, g: int) -> list[Fraction]:
    """Components of ``[[X_a, X_b], X_g] + cyclic``."""
    n = alg.dim
    out = []
    for eps in range(n):
        s = Fraction(0)
        for dl in range(n):
            s += (alg.c(a, b, dl) * alg.c(dl, g, eps)
                  + alg.c(b, g, dl) * alg.c(dl, a, eps)
                  + alg.c(g, a, dl) * alg.c(dl, b, eps))
        out.append(s)
    return out


def check_jacobi(alg: LieAlgebraSpec) -> tuple[bool, list[tuple[int, int, int]]]:
    """Exact Jacobi test; returns ``(ok, violating sorted triples)``."""
    alg.validate()
    violations = [t for t in itertools.combinations(range(alg.dim), 3) if any(jacobi_sum(alg, *t))]
    return not violations, violations


def closedness_matrix(alg: LieAlgebraSpec) -> list[list[Fraction]]:
    """Rows: triples ``a<b<g``; columns: pairs ``p<q`` of the 2-form."""
    n = alg.dim
    col = {p: i for i, p in enumerate(_pairs(n))}
    rows = []
    for a, b, g in itertools.combinations(range(n), 3):
        row = [Fraction(0)] * len(col)
        for x, y, z in ((a, b, g), (b, g, a), (g, a, b)):
            # C^dl_{xy} d_{z dl}
            for dl, c in alg.bracket_coefficients(x, y).items():
                if dl == z:
                    continue
                if z < dl:
                    row[col[(z, dl)]] += c
                else:
                    row[col[(dl, z)]] -= c
        rows.append(row)
    return rows


def coboundary_matrix(alg: LieAlgebraSpec) -> list[list[Fraction]]:
    """Rows: pairs ``a<b``; columns: ``g``; entry ``C^g_{ab}``."""
    return [[alg.c(a, b, g) for g in range(alg.dim)] for a, b in _pairs(alg.dim)]


def closedness_defects(alg: LieAlgebraSpec, d: TwoForm) -> dict[tuple[int, int, int], Fraction]:
    _same_dim(alg.dim, d.dim)
    vec = d.vector()
    out = {}
    for t, row in zip(itertools.combinations(range(alg.dim), 3), closedness_matrix(alg)):
        s = sum((x * y for x, y in zip(row, vec)), Fraction(0))
        if s:
            out[t] = s
    return out


def is_closed(alg: LieAlgebraSpec, d: TwoForm) -> bool:
    return not closedness_defects(alg, d)


def coboundary_of(alg: LieAlgebraSpec, e: OneForm) -> TwoForm:
    """``Z_{ab} = sum_g C^g_{ab} e_g``."""
    _same_dim(alg.dim, e.dim)
    return TwoForm.from_vector(alg.dim, exact.matvec(coboundary_matrix(alg), e.entries))


def solve_exactness(alg: LieAlgebraSpec, d: TwoForm) -> Optional[OneForm]:
    """A 1-form ``e`` with ``coboundary_of(alg, e) == d``, or None if d is not exact.

    Raises NotClosedError when ``d`` fails the closedness test; callers are
    expected to check closedness first.
    """
    _same_dim(alg.dim, d.dim)
    if not is_closed(alg, d):
        raise NotClosedError("2-form is not closed; exactness is undefined")
    sol = exact.solve(coboundary_matrix(alg), d.vector())
    if sol is None:
        return None
    return OneForm.from_values(sol)


def attempt_extension_removal(alg: LieAlgebraSpec, B: TwoForm) -> Optional[OneForm]:
    """Shifts ``Gamma`` of the generators by multiples of the identity that
    cancel the central term ``B``; None means the extension is irremovable."""
    return solve_exactness(alg, B)


def _primitive(vec: list[Fraction]) -> list[Fraction]:
    lead = next(v for v in vec if v)
    return [v / lead for v in vec]


def h2_dimension(alg: LieAlgebraSpec) -> CohomologyReport:
    ok, bad = check_jacobi(alg)
    if not ok:
        raise JacobiError(f"Jacobi identity fails on triples {bad[:5]}")
    npairs = alg.dim * (alg.dim - 1) // 2
    closed_rows = closedness_matrix(alg)
    closed_dim = npairs - exact.rank(closed_rows, npairs)
    cob = coboundary_matrix(alg)
    exact_dim = exact.rank(cob, alg.dim)
    rep = None
    if closed_dim > exact_dim:
        # closed forms orthogonal (coordinatewise) to every coboundary: a
        # complement of the exact subspace inside the closed one
        images = [list(col) for col in zip(*cob)]
        basis = exact.nullspace(closed_rows + images, npairs)
        rep = TwoForm.from_vector(alg.dim, _primitive(basis[0]))
    return CohomologyReport(True, closed_dim, exact_dim, closed_dim - exact_dim, rep)


def decompose(alg: LieAlgebraSpec, d: TwoForm, classes: Sequence[TwoForm]) -> Optional[tuple[list[Fraction], OneForm]]:
    """Write ``d = sum_i c_i classes[i] + coboundary_of(e)``; None if impossible."""
    cob = coboundary_matrix(alg)
    cols = [c.vector() for c in classes]
    rows = [[col[r] for col in cols] + cob[r] for r in range(len(cob))]
    sol = exact.solve(rows, d.vector())
    if sol is None:
        return None
    k = len(classes)
    return sol[:k], OneForm.from_values(sol[k:])


# --- standard algebras -----------------------------------------------------

# indices: 0 time translation, 1-3 space translations, 4-6 rotations, 7-9 boosts
_GALILEI_CONSTANTS = [
    (0, 7, 1, 1), (0, 8, 2, 1), (0, 9, 3, 1),
    (1, 5, 3, 1), (1, 6, 2, -1), (2, 4, 3, -1), (2, 6, 1, 1),
    (3, 4, 2, 1), (3, 5, 1, -1),
    (4, 5, 6, 1), (4, 6, 5, -1), (4, 8, 9, 1), (4, 9, 8, -1),
    (5, 6, 4, 1), (5, 7, 9, -1), (5, 9, 7, 1),
    (6, 7, 8, 1), (6, 8, 7, -1),
]


def galilei_algebra() -> LieAlgebraSpec:
    return LieAlgebraSpec.from_constants(10, _GALILEI_CONSTANTS)


def galilei_mass_form(mass: Rational = 1, unit: str = "") -> TwoForm:
    """``d_{17} = d_{28} = d_{39} = M``."""
    return TwoForm.from_entries(10, [(1, 7, mass), (2, 8, mass), (3, 9, mass)], unit)


def abelian_algebra(dim: int) -> LieAlgebraSpec:
    return LieAlgebraSpec.from_constants(dim, [])


def heisenberg_algebra() -> LieAlgebraSpec:
    return LieAlgebraSpec.from_constants(3, [(0, 1, 2, 1)])


# --- text format -----------------------------------------------------------

def _fraction(tok: str, lineno: int, source: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad rational {tok!r}", lineno, source) from None


def _index(tok: str, lineno: int, source: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"bad index {tok!r}", lineno, source) from None


def parse_records(text: str, source: str = "<text>") -> dict:
    """Parse the line format into ``{"dim", "C", "D", "E"}`` record lists."""
    out = {"dim": None, "C": [], "D": [], "E": []}
    arity = {"C": 4, "D": 3, "E": 2}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        if tag == "dim":
            if len(rest) != 1:
                raise ParseError("header must be 'dim <n>'", lineno, source)
            if out["dim"] is not None:
                raise ParseError("duplicate dim header", lineno, source)
            out["dim"] = _index(rest[0], lineno, source)
            if out["dim"] < 1:
                raise ParseError("dim must be positive", lineno, source)
            continue
        if tag not in arity:
            raise ParseError(f"unknown record type {tag!r}", lineno, source)
        if len(rest) != arity[tag]:
            raise ParseError(f"{tag} record needs {arity[tag]} fields, got {len(rest)}", lineno, source)
        if out["dim"] is None:
            raise ParseError("record before 'dim' header", lineno, source)
        idx = [_index(t, lineno, source) for t in rest[:-1]]
        if any(not 0 <= i < out["dim"] for i in idx):
            raise ParseError(f"index out of range in {line!r}", lineno, source)
        out[tag].append((*idx, _fraction(rest[-1], lineno, source)))
    if out["dim"] is None:
        raise ParseError("missing 'dim <n>' header", None, source)
    return out


def _read(path: Union[str, Path]) -> dict:
    path = Path(path)
    return parse_records(path.read_text(), str(path))


def read_algebra(path: Union[str, Path]) -> LieAlgebraSpec:
    rec = _read(path)
    return LieAlgebraSpec.from_constants(rec["dim"], rec["C"])


def read_two_form(path: Union[str, Path]) -> TwoForm:
    rec = _read(path)
    return TwoForm.from_entries(rec["dim"], rec["D"])


def read_one_form(path: Union[str, Path]) -> OneForm:
    rec = _read(path)
    values = [Fraction(0)] * rec["dim"]
    for g, v in rec["E"]:
        values[g] = v
    return OneForm.from_values(values)


def _fmt(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def format_algebra(alg: LieAlgebraSpec, comment: str = "") -> str:
    lines = [f"# {c}" for c in comment.splitlines()] + [f"dim {alg.dim}"]
    lines += [f"C {a} {b} {g} {_fmt(v)}" for a, b, g, v in alg.constants]
    return "\n".join(lines) + "\n"


def format_two_form(d: TwoForm, comment: str = "") -> str:
    lines = [f"# {c}" for c in comment.splitlines()] + [f"dim {d.dim}"]
    lines += [f"D {a} {b} {_fmt(v)}" for a, b, v in d.entries]
    return "\n".join(lines) + "\n"


def format_one_form(e: OneForm, comment: str = "") -> str:
    lines = [f"# {c}" for c in comment.splitlines()] + [f"dim {e.dim}"]
    lines += [f"E {g} {_fmt(v)}" for g, v in enumerate(e.entries) if v]
    return "\n".join(lines) + "\n"
