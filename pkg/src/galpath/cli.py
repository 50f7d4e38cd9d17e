"""Command-line front end.

    galpath cohomology ALGEBRA [TWOFORM]
    galpath verify {boost-kernel,translate-kernel,projective,solution-map,divergence,el-residual} [options]
    galpath propagate [options]
    galpath fixtures [--out DIR]

Options may also come from a flat ``key=value`` file (``--config``); command
line values win.  Exit status: 0 all checks pass, 1 a check failed, 2 usage
or parse error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path as FsPath
from typing import Optional

import numpy as np

from . import algebra as alg
from .convergence import observed_order
from .lagrangian import (ParticleSystem, Path, PathError, PotentialDomainError, SingularTimeError,
                         check_divergence_identity, el_residual, random_smooth_path, read_path_csv,
                         write_path_csv)
from .propagator import (AliasingWarning, CausticError, analytic_kernel, build_sliced, build_spectral, builder,
                         check_boost_identity, check_translation_identities_Ltilde, cn_evolve, evolve,
                         noether_map, schrodinger_residual, spectral_evolve, write_kernel_csv)
from .symmetry import WaveOperator, check_solution_map, projective_phase, spectral_oracle
from .waves import (SpatialGrid, WaveFunction, WindowError, gaussian_packet, l2_distance, read_wave_csv,
                    write_wave_csv)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "m": "1", "hbar": "1", "potential": "free", "npoints": "512", "xmin": "-10", "xmax": "10",
    "t1": "", "t2": "", "u": "0.7", "b": "", "a": "", "N": "64", "tol": "", "picture": "standard",
    "op": "boost:u=0.5;picture=standard", "method": "", "transform": "boost", "which": "L",
    "npaths": "20", "seed": "12345", "x0": "0", "k0": "0", "sigma": "1", "substeps": "256",
    "nsnap": "5", "psi": "", "path": "", "dump_kernel": "false",
}


class UsageError(ValueError):
    pass


def fixtures_dir() -> FsPath:
    return FsPath(str(resources.files("galpath") / "fixtures"))


def resolve_input(name: str) -> FsPath:
    """A path as given, or else a bundled fixture of that name."""
    p = FsPath(name)
    if p.exists():
        return p
    q = fixtures_dir() / name
    if q.exists():
        return q
    raise UsageError(f"input file not found: {name}")


def sha256_file(path: FsPath) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --- configuration ---------------------------------------------------------------

def read_config_file(path: str) -> dict:
    out = {}
    for lineno, raw in enumerate(FsPath(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {k!r}")
        out[k] = v
    return out


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    out: Optional[FsPath] = None

    def get(self, key: str) -> str:
        return self.values.get(key, DEFAULTS.get(key, ""))

    def has(self, key: str) -> bool:
        return self.get(key) != ""

    def float(self, key: str, default: Optional[float] = None) -> float:
        v = self.get(key)
        if v == "":
            if default is None:
                raise UsageError(f"missing value for {key}")
            return default
        try:
            return float(v)
        except ValueError:
            raise UsageError(f"{key} must be a number, got {v!r}") from None

    def int(self, key: str, default: Optional[int] = None) -> int:
        return int(self.float(key, default))

    def floats(self, key: str) -> list[float]:
        try:
            return [float(x) for x in self.get(key).split(",")]
        except ValueError:
            raise UsageError(f"{key} must be a comma-separated list of numbers") from None

    def tolerance(self, default: float) -> float:
        tol = self.float("tol", default)
        if tol <= 0:
            raise UsageError("tolerances must be positive")
        return tol

    def system(self) -> ParticleSystem:
        try:
            return ParticleSystem(self.floats("m"), self.float("hbar"), 1, self.get("potential"))
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def grid(self, npoints: Optional[int] = None, D: int = 1) -> SpatialGrid:
        return SpatialGrid(self.float("xmin"), self.float("xmax"), npoints or self.int("npoints"), D)

    def canonical(self) -> str:
        items = {k: self.get(k) for k in sorted(DEFAULTS)}
        lines = [f"command={self.command}"] + [f"input={i}" for i in self.inputs]
        lines += [f"{k}={v}" for k, v in items.items()]
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


# --- report ---------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


@dataclass
class Check:
    name: str
    value: object
    tol: object
    passed: bool
    note: str = ""


@dataclass
class Report:
    command: str
    checks: list = field(default_factory=list)
    tables: list = field(default_factory=list)
    info: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def check(self, name, value, tol, passed, note="") -> Check:
        c = Check(name, value, tol, bool(passed), note)
        self.checks.append(c)
        return c

    def table(self, name: str, h, err, order=None):
        self.tables.append((name, list(h), list(err), order))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        lines = [f"command={self.command}"]
        for key, val in self.info:
            lines.append(f"{key}={_fmt(val)}")
        for name, h, err, order in self.tables:
            for hi, ei in zip(h, err):
                lines.append(f"table={name} res={_fmt(hi)} err={_fmt(ei)}")
            lines.append(f"table={name} order={'n/a' if order is None else _fmt(order)}")
        for c in self.checks:
            line = f"check={c.name} value={_fmt(c.value)} tol={_fmt(c.tol)} pass={_fmt(c.passed)}"
            if c.note:
                line += f" note={c.note}"
            lines.append(line)
        npass = sum(c.passed for c in self.checks)
        lines.append(f"# summary: {npass}/{len(self.checks)} checks passed"
                     + ("" if self.ok else "; FAIL: " + ", ".join(c.name for c in self.checks if not c.passed)))
        for k, v in self.provenance.items():
            lines.append(f"provenance.{k}={v}")
        return "\n".join(lines) + "\n"


# --- cohomology -------------------------------------------------------------------

def cmd_cohomology(cfg: RunConfig) -> Report:
    rep = Report(cfg.command)
    alg_path = resolve_input(cfg.inputs[0])
    rep.provenance["fixture." + alg_path.name] = sha256_file(alg_path)
    A = alg.read_algebra(alg_path)
    ok, bad = alg.check_jacobi(A)
    rep.check("jacobi", ok, "exact", ok, "" if ok else "violations=" + ";".join(map(str, bad[:5])))
    if not ok:
        rep.info.append(("aborted", "jacobi failure; downstream checks skipped"))
        return rep
    h2 = alg.h2_dimension(A)
    rep.info += [("closed_space_dim", h2.closed_space_dim), ("exact_space_dim", h2.exact_space_dim),
                 ("h2_dim", h2.h2_dim)]
    if h2.representative is not None:
        rep.info.append(("representative", _two_form_text(h2.representative)))
    rep.check("h2_consistent", h2.h2_dim, "exact", h2.h2_dim == h2.closed_space_dim - h2.exact_space_dim)
    if len(cfg.inputs) > 1:
        d_path = resolve_input(cfg.inputs[1])
        rep.provenance["fixture." + d_path.name] = sha256_file(d_path)
        d = alg.read_two_form(d_path)
        if d.dim != A.dim:
            raise UsageError(f"2-form dim {d.dim} does not match algebra dim {A.dim}")
        closed = alg.is_closed(A, d)
        rep.info.append(("closed", closed))
        rep.check("closed_conclusive", closed, "exact", True)
        if closed:
            w = alg.solve_exactness(A, d)
            rep.info.append(("exact", w is not None))
            if w is not None:
                rep.info.append(("witness", " ".join(f"e{g}={v}" for g, v in enumerate(w.entries) if v) or "0"))
                rep.check("witness_reproduces", True, "exact", alg.coboundary_of(A, w) == d)
            rep.check("exact_conclusive", w is not None, "exact", True)
        else:
            defects = alg.closedness_defects(A, d)
            rep.info.append(("closedness_defects", ";".join(f"{k}:{v}" for k, v in list(defects.items())[:5])))
    return rep


def _two_form_text(d: alg.TwoForm) -> str:
    return " ".join(f"d{a},{b}={v}" for a, b, v in d.entries)


# --- verify -------------------------------------------------------------------------

def _npoints_sweep(final: int, levels: int = 3) -> list[int]:
    out = [final]
    for _ in range(levels - 1):
        out.insert(0, (out[0] + 1) // 2)
    return out


def verify_projective(cfg: RunConfig, rep: Report):
    sys_ = cfg.system()
    u, b = cfg.float("u"), cfg.float("b", 0.5)
    tol_phase, tol_dev = cfg.tolerance(1e-10), 1e-8
    D = sys_.n
    t = cfg.float("t1", 1.0)
    packets = [gaussian_packet([0.3] * D, [0.7] * D, [1.0] * D, t),
               gaussian_packet([-0.5] * D, [-0.4] * D, [0.6] * D, t),
               gaussian_packet([1.0] * D, [1.5] * D, [1.4] * D, t)]
    expected = -sys_.total_mass * b * u / sys_.hbar
    rep.info.append(("expected_phase_rad", expected))
    npts = cfg.int("npoints") if D == 1 else min(cfg.int("npoints"), 64)
    for picture in ("standard", "noether"):
        devs, phases = [], []
        for n in _npoints_sweep(npts):
            g = cfg.grid(n, D)
            res = [projective_phase(sys_, u, b, p, picture, g) for p in packets]
            devs.append(max(r.max_deviation for r in res))
            phases.append([float(np.angle(r.ratio)) for r in res])
        rep.table(f"projective.{picture}.deviation", _npoints_sweep(npts), devs, None)
        measured = phases[-1]
        err = max(abs(np.angle(np.exp(1j * (p - expected)))) for p in measured)
        spread = max(measured) - min(measured)
        rep.check(f"projective.{picture}.phase", measured[0], tol_phase, err <= tol_phase,
                  f"expected={_fmt(expected)} packets={len(packets)} packet_spread={_fmt(spread)}")
        rep.check(f"projective.{picture}.deviation", devs[-1], tol_dev, devs[-1] <= tol_dev)


def _kernel_method(cfg: RunConfig, sys_: ParticleSystem) -> str:
    if cfg.has("method"):
        return cfg.get("method")
    kind = "free" if sys_.potential.describe() == "free" else "harmonic"
    return f"analytic-{kind}"


def verify_boost_kernel(cfg: RunConfig, rep: Report):
    sys_ = cfg.system()
    D = sys_.n
    tol = cfg.tolerance(1e-5)
    t1, t2, u = cfg.float("t1", 0.0), cfg.float("t2", 1.0), cfg.float("u")
    method = _kernel_method(cfg, sys_)
    final = cfg.int("npoints") if D == 1 else min(cfg.int("npoints"), 32)
    sizes = _npoints_sweep(final)
    errs = []
    for n in sizes:
        g = cfg.grid(n, D)
        errs.append(check_boost_identity(builder(method, sys_, g, cfg.int("N")), sys_, g, t1, t2, u))
    rep.table("boost-kernel", sizes, errs, None)
    negative = not sys_.potential.translation_invariant
    rep.check("boost-kernel", errs[-1], tol, errs[-1] <= tol,
              f"method={method} M={_fmt(sys_.total_mass)}" + (" expected-negative-control" if negative else ""))


def verify_translate_kernel(cfg: RunConfig, rep: Report):
    sys_ = cfg.system()
    D = sys_.n
    tol = cfg.tolerance(1e-5)
    t1, t2 = cfg.float("t1", 1.0), cfg.float("t2", 2.0)
    if cfg.has("a") == cfg.has("b"):
        raise UsageError("translate-kernel needs exactly one of --b (space) or --a (time)")
    method = cfg.get("method") or "analytic-free"
    final = cfg.int("npoints") if D == 1 else min(cfg.int("npoints"), 32)
    sizes = _npoints_sweep(final)
    errs = []
    for n in sizes:
        g = cfg.grid(n, D)
        bld = builder(method, sys_, g, cfg.int("N"), picture="Ltilde", substeps=cfg.int("substeps"))
        kw = {"b": cfg.float("b")} if cfg.has("b") else {"a": cfg.float("a")}
        errs.append(check_translation_identities_Ltilde(bld, sys_, g, t1, t2, **kw))
    name = "translate-kernel." + ("space" if cfg.has("b") else "time")
    rep.table(name, sizes, errs, None)
    rep.check(name, errs[-1], tol, errs[-1] <= tol, f"method={method}")


def verify_solution_map(cfg: RunConfig, rep: Report):
    sys_ = cfg.system()
    op = WaveOperator.parse(cfg.get("op"))
    tol = cfg.tolerance(1e-4)
    noether = op.picture == "noether"
    t1 = cfg.float("t1", 1.0 if noether else 0.0)
    t2 = cfg.float("t2", t1 + 1.0)
    sizes = _npoints_sweep(cfg.int("npoints"))
    errs, hs = [], []
    for n in sizes:
        g = cfg.grid(n)
        psi = gaussian_packet(cfg.float("x0"), cfg.float("k0"), cfg.float("sigma"), t1).sample(g)
        oracle = spectral_oracle(sys_, g, op.picture, cfg.int("substeps"))
        errs.append(check_solution_map(op, sys_, oracle, psi, t2, g))
        hs.append(g.dx)
    order = observed_order(hs, errs)
    rep.table(f"solution-map.{op.kind}.{op.picture}", hs, errs, order)
    rep.check(f"solution-map.{op.kind}.{op.picture}", errs[-1], tol, errs[-1] <= tol,
              f"order={'n/a' if order is None else _fmt(order)}")


def verify_divergence(cfg: RunConfig, rep: Report):
    sys_ = ParticleSystem(cfg.floats("m"), cfg.float("hbar"), 1, cfg.get("potential"))
    kind, which = cfg.get("transform"), cfg.get("which")
    tol = cfg.tolerance(1e-8)
    t1, t2 = cfg.float("t1", 1.0), cfg.float("t2", 2.0)
    value = {"boost": cfg.get("u"), "space": cfg.get("b") or "0.4", "time": cfg.get("a") or "0.3"}.get(kind)
    if kind in ("boost", "space"):
        value = [float(value)]
    elif kind == "time":
        value = float(value)
    rng = np.random.default_rng(cfg.int("seed"))
    paths = [random_smooth_path(rng, sys_.n, 1) for _ in range(cfg.int("npaths"))]
    sweep = [16, 32, 64, 128]
    final = cfg.int("N") if "N" in cfg.values else 4096
    worst = np.zeros(len(sweep))
    final_err, orders = 0.0, []
    for p in paths:
        e = [check_divergence_identity(sys_, p, kind, value, which, t1, t2, N) for N in sweep]
        worst = np.maximum(worst, e)
        o = observed_order([(t2 - t1) / (N + 1) for N in sweep], e)
        if o is not None:
            orders.append(o)
        final_err = max(final_err, check_divergence_identity(sys_, p, kind, value, which, t1, t2, final))
    hs = [(t2 - t1) / (N + 1) for N in sweep]
    min_order = min(orders) if orders else None
    rep.table(f"divergence.{kind}.{which}", hs, worst, min_order)
    rep.check(f"divergence.{kind}.{which}", final_err, tol, final_err <= tol,
              f"N={final} paths={len(paths)}")
    if min_order is not None:
        rep.check(f"divergence.{kind}.{which}.order", min_order, 1.9, min_order >= 1.9)


def verify_el_residual(cfg: RunConfig, rep: Report):
    sys_ = ParticleSystem(cfg.floats("m"), cfg.float("hbar"), 1, cfg.get("potential"))
    which = cfg.get("which")
    if cfg.has("path"):
        src = resolve_input(cfg.get("path"))
        rep.provenance["fixture." + src.name] = sha256_file(src)
        path = read_path_csv(src, sys_.n)
        r = float(np.max(np.abs(el_residual(sys_, path, which))))
        tol = cfg.tolerance(1e-10)
        rep.table("el-residual", [path.eps], [r], None)
        rep.check("el-residual", r, tol, r <= tol, "order=n/a")
        return
    # classical oscillator path x = cos(omega t) on its own potential
    w = float(getattr(sys_.potential, "omega", 1.0))
    t1, t2 = cfg.float("t1", 1.0), cfg.float("t2", 2.0)
    sweep = [16, 32, 64, 128]
    errs, hs = [], []
    for N in sweep:
        p = Path.from_function(lambda t: np.cos(w * t), t1, t2, N)
        errs.append(float(np.max(np.abs(el_residual(sys_, p, which)))))
        hs.append(p.eps)
    order = observed_order(hs, errs)
    rep.table("el-residual", hs, errs, order)
    tol = cfg.tolerance(1e-3)
    rep.check("el-residual", errs[-1], tol, errs[-1] <= tol, f"order={'n/a' if order is None else _fmt(order)}")


VERIFY = {
    "boost-kernel": verify_boost_kernel,
    "translate-kernel": verify_translate_kernel,
    "projective": verify_projective,
    "solution-map": verify_solution_map,
    "divergence": verify_divergence,
    "el-residual": verify_el_residual,
}


def cmd_verify(cfg: RunConfig, kind: str) -> Report:
    rep = Report(f"{cfg.command} {kind}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AliasingWarning)
        VERIFY[kind](cfg, rep)
    for w in caught:
        if issubclass(w.category, AliasingWarning):
            rep.info.append(("warning", str(w.message).replace(" ", "_")))
    return rep


# --- propagate ----------------------------------------------------------------------

def cmd_propagate(cfg: RunConfig) -> Report:
    rep = Report(cfg.command)
    sys_ = cfg.system()
    if sys_.n != 1:
        raise UsageError("propagate handles a single particle on a line")
    picture = cfg.get("picture")
    noether = picture == "noether"
    t1 = cfg.float("t1", 1.0 if noether else 0.0)
    t2 = cfg.float("t2", t1 + 1.0)
    if noether and t1 <= 0 <= t2:
        raise SingularTimeError("the noether picture needs an interval that excludes t = 0")
    method = cfg.get("method") or "spectral"
    if cfg.has("psi"):
        src = resolve_input(cfg.get("psi"))
        rep.provenance["fixture." + src.name] = sha256_file(src)
        psi = read_wave_csv(src, t1)
        g = psi.grid
    else:
        g = cfg.grid()
        psi = gaussian_packet(cfg.float("x0"), cfg.float("k0"), cfg.float("sigma"), t1).sample(g)
        if noether:
            psi = noether_map(sys_, psi)
    which = "Htilde" if noether else "H"
    nsnap = max(cfg.int("nsnap"), 2)
    times = np.linspace(t1, t2, nsnap)
    substeps = cfg.int("substeps")

    def reference(t):
        if noether:
            return cn_evolve(sys_, g, psi.amplitudes, t1, t, "Htilde", substeps) if t != t1 else psi.amplitudes
        return spectral_evolve(sys_, g, psi.amplitudes, t - t1)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AliasingWarning)
        if method == "spectral":
            snaps = [WaveFunction(g, reference(t), t) for t in times]
        elif method == "sliced":
            N = cfg.int("N")
            snaps = [psi]
            for t in times[1:]:
                K = build_sliced(sys_, g, t1, t, N, "Ltilde" if noether else "L")
                snaps.append(evolve(K, psi))
        else:
            raise UsageError(f"propagate method must be spectral or sliced, got {method!r}")
    for w in caught:
        rep.info.append(("warning", str(w.message).replace(" ", "_")))
    norms = [s.norm() for s in snaps]
    drift = max(abs(n - norms[0]) for n in norms)
    if cfg.out is not None:
        for k, s in enumerate(snaps):
            write_wave_csv(s, cfg.out / f"psi_{k:03d}.csv")
        if cfg.get("dump_kernel").lower() == "true":
            write_kernel_csv(build_spectral(sys_, g, t1, t2, which, substeps) if method == "spectral"
                             else build_sliced(sys_, g, t1, t2, cfg.int("N"), "Ltilde" if noether else "L"),
                             cfg.out / "kernel.csv")
        rep.info.append(("snapshots", f"{len(snaps)} files psi_000..psi_{len(snaps) - 1:03d}.csv"))
    rep.check("norm_drift", drift, 1e-10, drift <= 1e-10, f"method={method}")
    if method == "sliced":
        ref = WaveFunction(g, reference(t2), t2)
        dev = l2_distance(snaps[-1], ref, g.interior())
        rep.check("deviation_from_spectral", dev, 1e-3, dev <= 1e-3, f"N={cfg.int('N')}")
    # residual sweep: three consecutive samples around t2 at shrinking dt and dx
    hs, res = [], []
    base_dt = (t2 - t1) / 64
    for level in range(3):
        n = (g.npoints - 1) // 2 ** (2 - level) + 1
        gl = SpatialGrid(g.xmin, g.xmax, n, 1)
        p0 = np.interp(gl.axis, g.axis, snaps[-1].amplitudes.real) + 1j * np.interp(gl.axis, g.axis, snaps[-1].amplitudes.imag)
        dt = base_dt / 2 ** level
        if noether:
            series = [p0]
            for k in range(2):
                series.append(cn_evolve(sys_, gl, series[-1], t2 + k * dt, t2 + (k + 1) * dt, "Htilde", 64))
            # 64 substeps per step; the step itself sets the time scale
        else:
            series = [spectral_evolve(sys_, gl, p0, k * dt) for k in range(3)]
        wf = [WaveFunction(gl, a, t2 + k * dt) for k, a in enumerate(series)]
        res.append(float(np.max(schrodinger_residual(sys_, wf, which))))
        hs.append(dt)
    order = observed_order(hs, res)
    rep.table("schrodinger_residual", hs, res, order)
    rep.info.append(("residual_order", "n/a" if order is None else _fmt(order)))
    return rep


# --- fixtures ---------------------------------------------------------------------

def write_fixtures(dest: FsPath) -> list[FsPath]:
    dest.mkdir(parents=True, exist_ok=True)
    G = alg.galilei_algebra()
    files = {
        "galilei.alg": alg.format_algebra(
            G, "Galilei algebra: 0 time translation, 1-3 space translations, 4-6 rotations, 7-9 boosts"),
        "galilei_mass.2form": alg.format_two_form(alg.galilei_mass_form(1), "mass 2-form, M = 1"),
        "abelian4.alg": alg.format_algebra(alg.abelian_algebra(4), "abelian algebra of dimension 4"),
        "heisenberg.alg": alg.format_algebra(alg.heisenberg_algebra(), "Heisenberg algebra [X0, X1] = X2"),
    }
    e = alg.OneForm.from_values([Fraction(3, 2), 1, -2, Fraction(1, 3), 0, 0, 0, 5, 0, Fraction(-7, 4)])
    files["coboundary_fixture.2form"] = alg.format_two_form(
        alg.coboundary_of(G, e), "coboundary of e = " + " ".join(f"e{g}={v}" for g, v in enumerate(e.entries) if v))
    written = []
    for name, text in files.items():
        (dest / name).write_text(text)
        written.append(dest / name)
    t = np.linspace(0.0, 1.0, 9)
    write_path_csv(Path(t, 2.0 * t + 1.0), dest / "straightline.csv")
    written.append(dest / "straightline.csv")
    return written


def cmd_fixtures(cfg: RunConfig) -> Report:
    rep = Report(cfg.command)
    dest = cfg.out or fixtures_dir()
    for p in write_fixtures(dest):
        rep.provenance["fixture." + p.name] = sha256_file(p)
    rep.info.append(("written_to", str(dest)))
    return rep


# --- argument parsing ----------------------------------------------------------------

def _add_physics(p: argparse.ArgumentParser):
    g = p.add_argument_group("run configuration (key=value file keys)")
    for key in DEFAULTS:
        g.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}", default=None, metavar="V")
    g.add_argument("--config", help="flat key=value file; command-line options override it")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any key")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="galpath", description=__doc__.split("\n\n")[0])
    p.add_argument("--out", type=FsPath, help="directory for report.txt and CSV artifacts")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("cohomology", help="Jacobi, closedness, exactness and H^2 of an algebra file")
    c.add_argument("algebra")
    c.add_argument("twoform", nargs="?")
    v = sub.add_parser("verify", help="run one verification suite")
    v.add_argument("kind", choices=sorted(VERIFY))
    _add_physics(v)
    pr = sub.add_parser("propagate", help="evolve a wave function and write CSV snapshots")
    _add_physics(pr)
    sub.add_parser("fixtures", help="regenerate bundled fixtures (into --out if given)")
    for sp_ in (c, v, pr, sub.choices["fixtures"]):
        sp_.add_argument("--out", type=FsPath, dest="sub_out", help=argparse.SUPPRESS)
    return p


def config_from_args(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for item in getattr(args, "set", []) or []:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, val = item.split("=", 1)
        if k not in DEFAULTS:
            raise UsageError(f"unknown key {k!r}")
        values[k] = val
    for key in DEFAULTS:
        val = getattr(args, f"cfg_{key}", None)
        if val is not None:
            values[key] = val
    inputs = [x for x in (getattr(args, "algebra", None), getattr(args, "twoform", None)) if x]
    out = args.sub_out or args.out
    return RunConfig(args.command, values, inputs, out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if cfg.out is not None:
            cfg.out.mkdir(parents=True, exist_ok=True)
        if args.command == "cohomology":
            rep = cmd_cohomology(cfg)
        elif args.command == "verify":
            cfg.command = "verify"
            rep = cmd_verify(cfg, args.kind)
        elif args.command == "propagate":
            rep = cmd_propagate(cfg)
        else:
            rep = cmd_fixtures(cfg)
    except (UsageError, alg.ParseError, PathError, alg.MalformedSpecError, alg.DimensionMismatchError) as exc:
        print(f"galpath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularTimeError, WindowError, CausticError, PotentialDomainError) as exc:
        hint = {SingularTimeError: "choose times that exclude t = 0",
                WindowError: "enlarge xmin/xmax or reduce the shift",
                CausticError: "avoid omega*(t2 - t1) at multiples of pi",
                PotentialDomainError: "move particles apart"}[type(exc)]
        print(f"galpath: error: {exc} (remediation: {hint})", file=sys.stderr)
        return EXIT_FAIL
    rep.provenance["config_sha256"] = cfg.digest()
    text = rep.render()
    sys.stdout.write(text)
    if cfg.out is not None:
        (cfg.out / "report.txt").write_text(text)
    return EXIT_OK if rep.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
