import numpy as np
import pytest

from galpath import symmetry as S
from galpath.convergence import observed_order
from galpath.lagrangian import ParticleSystem, SingularTimeError
from galpath.propagator import noether_map
from galpath.waves import SpatialGrid, WaveFunction, free_gaussian, gaussian_packet, l2_distance

free1 = ParticleSystem([1.0])


def test_operator_descriptors():
    op = S.WaveOperator.parse("boost:u=0.5;picture=noether")
    assert op == S.WaveOperator("boost", 0.5, "noether")
    assert S.WaveOperator.parse(op.describe()) == op
    assert S.WaveOperator.parse("identity").kind == "identity"
    for bad in ("boost:b=1", "warp:u=1", "space:b=1;colour=red"):
        with pytest.raises(ValueError):
            S.WaveOperator.parse(bad)
    with pytest.raises(ValueError):
        S.WaveOperator("rotation", 0.5)


def test_zero_parameters_are_identities():
    g = SpatialGrid(-6, 6, 121)
    psi = gaussian_packet(0.2, 1.0, 1.0, t=1.3).sample(g)
    for kind in ("boost", "space", "time"):
        for pic in S.PICTURES:
            out = S.apply(S.WaveOperator(kind, 0.0, pic), psi, free1)
            assert np.array_equal(out.amplitudes, psi.amplitudes) and out.t == psi.t


def test_boosted_packet_moves_to_x0_plus_tu():
    g = SpatialGrid(-10, 10, 2001)
    t, u, x0 = 1.5, 0.8, -0.5
    psi = gaussian_packet(x0, 0.0, 0.7, t=t).sample(g)
    out = S.apply(S.WaveOperator("boost", u), psi, free1)
    assert g.axis[np.argmax(np.abs(out.amplitudes))] == pytest.approx(x0 + t * u, abs=g.dx)


def test_boost_carries_momentum_kick():
    # the boosted snapshot of a packet at rest has mean momentum m u
    g = SpatialGrid(-10, 10, 2001)
    psi = gaussian_packet(0.0, 0.0, 1.0, t=0.0).sample(g)
    out = S.apply(S.WaveOperator("boost", 0.6), psi, ParticleSystem([2.0]))
    a = out.amplitudes
    p = np.sum(np.conj(a) * -1j * np.gradient(a, g.dx)).real * g.dx
    assert p == pytest.approx(1.2, rel=1e-4)


@pytest.mark.parametrize("kind,param,pic", [
    ("boost", 0.7, "standard"), ("boost", 0.7, "noether"),
    ("space", 0.4, "standard"), ("space", 0.4, "noether"),
    ("time", 0.3, "standard"), ("time", 0.3, "noether"),
])
def test_operators_are_unimodular(kind, param, pic):
    w = gaussian_packet(0.3, 1.1, 0.9, t=1.2)
    out = S.apply(S.WaveOperator(kind, param, pic), w, free1)
    x = np.linspace(-4, 4, 50)[:, None]
    shift = {"boost": 1.2 * param, "space": param, "time": 0.0}[kind]
    assert np.allclose(np.abs(out(x)), np.abs(w(x - shift)), rtol=1e-14, atol=0)


def test_rotation_reflects_the_line():
    w = gaussian_packet(1.0, 0.5, 1.0)
    out = S.apply(S.WaveOperator("rotation", -1), w, free1)
    x = np.array([[0.3], [-1.7]])
    assert np.allclose(out(x), w(-x))


def test_noether_operators_reject_zero_time():
    w = gaussian_packet(0, 0, 1, t=0.0)
    with pytest.raises(SingularTimeError):
        S.apply(S.WaveOperator("space", 0.2, "noether"), w, free1)
    with pytest.raises(SingularTimeError):
        S.apply(S.WaveOperator("time", -1.0, "noether"), gaussian_packet(0, 0, 1, t=1.0), free1)


def test_noether_operators_are_conjugates_of_standard_ones():
    # psi~ = e^{iF/hbar} psi intertwines the two pictures on closed-form waves
    sys = ParticleSystem([1.7])
    w = free_gaussian(0.2, 0.8, 0.9, 1.7, t=1.3)
    to_tilde = lambda v: S.AnalyticWave(  # noqa: E731
        lambda x: np.exp(-1j * 1.7 * x[..., 0] ** 2 / (2 * v.t)) * v.fn(x), v.t)
    x = np.linspace(-3, 3, 41)[:, None]
    for kind, p in (("boost", 0.6), ("space", 0.35), ("time", 0.25)):
        lhs = to_tilde(S.apply(S.WaveOperator(kind, p, "standard"), w, sys))
        rhs = S.apply(S.WaveOperator(kind, p, "noether"), to_tilde(w), sys)
        assert lhs.t == rhs.t
        assert np.allclose(lhs(x), rhs(x), rtol=0, atol=1e-14)


def test_space_shifts_compose_without_phase_in_noether_picture():
    # the b b' cross terms of the two sigma phases cancel: S(b') S(b) = S(b + b')
    sys, t, b1, b2 = ParticleSystem([1.3]), 1.4, 0.3, -0.7
    w = gaussian_packet(0.1, 0.4, 1.0, t=t)
    two = S.compose_apply([S.WaveOperator("space", b1, "noether"), S.WaveOperator("space", b2, "noether")], w, sys)
    one = S.apply(S.WaveOperator("space", b1 + b2, "noether"), w, sys)
    x = np.linspace(-3, 3, 25)[:, None]
    assert np.allclose(two(x), one(x), rtol=0, atol=1e-14)


def test_gridded_apply_marks_points_outside_box():
    g = SpatialGrid(-2, 2, 41)
    psi = gaussian_packet(0, 0, 0.5).sample(g)
    out = S.apply(S.WaveOperator("space", 1.0), psi, free1)
    assert not out.valid[:10].any() and out.valid[10:].all()
    again = S.apply(S.WaveOperator("space", 1.0), out, free1)
    assert not again.valid[:20].any()


# --- solution maps -------------------------------------------------------------------

def test_identity_solution_map_is_exact():
    g = SpatialGrid(-8, 8, 256)
    psi = gaussian_packet(0, 1, 1).sample(g)
    oracle = S.spectral_oracle(free1, g)
    assert S.check_solution_map(S.WaveOperator("identity"), free1, oracle, psi, 1.0, g) == 0


def test_solution_map_fails_for_wrong_phase():
    # dropping the boost phase gives a non-solution: a meaningful negative control
    g = SpatialGrid(-9.826923076923077, 9.826923076923077, 512)
    psi = gaussian_packet(0, 0, 1).sample(g)
    oracle = S.spectral_oracle(free1, g)
    good = S.check_solution_map(S.WaveOperator("boost", 0.5), free1, oracle, psi, 1.0, g)
    bad = S.check_solution_map(S.WaveOperator("boost", 0.5, "noether"), free1, oracle, psi, 1.0, g)
    assert good <= 1e-4 and bad > 0.1


def test_standard_space_and_time_are_scalars():
    g = SpatialGrid(-9.826923076923077, 9.826923076923077, 512)
    psi = gaussian_packet(0, 0.5, 1).sample(g)
    oracle = S.spectral_oracle(free1, g)
    assert S.check_solution_map(S.WaveOperator("space", 0.5), free1, oracle, psi, 1.0, g) <= 1e-10
    assert S.check_solution_map(S.WaveOperator("time", 0.2), free1, oracle, psi, 1.0, g) <= 1e-10


# --- projective phase ------------------------------------------------------------------

def test_projective_phase_examples():
    g = SpatialGrid(-10, 10, 401)
    w = gaussian_packet(0.0, 0.3, 1.0, t=1.0)
    for u, b in ((0.0, 0.5), (2.0, 0.0)):
        r = S.projective_phase(free1, u, b, w, grid=g)
        assert abs(r.ratio - 1) < 1e-12
    r = S.projective_phase(free1, 2.0, 0.5, w, grid=g)
    assert np.angle(r.ratio) == pytest.approx(-1.0, abs=1e-12)
    two = ParticleSystem([1.0, 2.0])
    g2 = SpatialGrid(-6, 6, 61, 2)
    r = S.projective_phase(two, 0.5, 0.3, gaussian_packet([0, 0.5], [0.2, -0.1], [1, 1], t=1.0), grid=g2)
    assert np.angle(r.ratio) == pytest.approx(-0.45, abs=1e-12)


def test_projective_phase_on_gridded_waves():
    # grid-aligned shifts keep the composition free of interpolation error
    g = SpatialGrid(-10, 10, 801)
    psi = gaussian_packet(0.0, 0.3, 1.0, t=1.0).sample(g)
    for pic in S.PICTURES:
        r = S.projective_phase(free1, 0.5, 0.25, psi, pic, tol=1e-8)
        assert r.phase_error < 1e-10


def test_projective_phase_requires_grid_for_closed_forms():
    with pytest.raises(ValueError):
        S.projective_phase(free1, 1, 1, gaussian_packet(0, 0, 1))


# --- boost representation ----------------------------------------------------------------

@pytest.mark.parametrize("n,tol", [(2047, 1e-12), (2048, 1e-5)])
def test_inverse_boost_recovers_psi(n, tol):
    # n = 2047 puts t u on a node (dx = 0.01); n = 2048 exercises interpolation
    g = SpatialGrid(-10.23, 10.23, n)
    psi = gaussian_packet(0.0, 0.5, 1.0, t=1.0).sample(g)
    for pic in S.PICTURES:
        back = S.compose_apply([S.WaveOperator("boost", 0.3, pic), S.WaveOperator("boost", -0.3, pic)], psi, free1)
        assert l2_distance(back, psi, g.interior()) <= tol


def test_boost_rep_property_closed_form():
    w = gaussian_packet(0.0, 0.5, 1.0, t=1.0)
    two = S.compose_apply([S.WaveOperator("boost", 0.3), S.WaveOperator("boost", 0.4)], w, free1)
    one = S.apply(S.WaveOperator("boost", 0.7), w, free1)
    x = np.linspace(-5, 5, 101)[:, None]
    assert np.allclose(two(x), one(x), rtol=0, atol=1e-15)


# --- generators ---------------------------------------------------------------------------

def _gauss(n=1024, L=10.0, t=1.0):
    g = SpatialGrid(-L, L, n)
    return gaussian_packet(0.2, 0.7, 1.0, t=t).sample(g)


def test_space_generator_is_minus_derivative():
    psi = _gauss()
    x = psi.grid.axis
    exact = -np.gradient(psi.amplitudes, psi.grid.dx)  # central difference
    d = S.infinitesimal_generator("space", free1, psi, 1e-4, scheme="central")
    inner = psi.grid.interior()
    assert np.max(np.abs(d.amplitudes - exact)[inner]) < 1e-10
    # and the continuum derivative of the packet
    cont = -(-(x - 0.2) / 2 + 0.7j) * psi.amplitudes
    assert np.max(np.abs(d.amplitudes - cont)[inner]) < 1e-4


def test_boost_generator_matches_analytic_form():
    errs = []
    for n in (512, 1024, 2048):
        psi = _gauss(n)
        x = psi.grid.axis
        dpsi = ((-(x - 0.2) / 2 + 0.7j) * psi.amplitudes)[None]
        A = S.analytic_boost_generator(free1, psi, dpsi)
        d = S.infinitesimal_generator("boost", free1, psi, 1e-4, scheme="central")
        errs.append(np.max(np.abs(d.amplitudes - A)[psi.grid.interior()]))
    dx = [20 / (n - 1) for n in (512, 1024, 2048)]
    assert observed_order(dx, errs) == pytest.approx(2.0, abs=0.2)
    # forward quotients see a one-sided difference, first order in dx
    fwd = S.infinitesimal_generator("boost", free1, psi, 1e-4)
    assert np.max(np.abs(fwd.amplitudes - A)[psi.grid.interior()]) > 10 * errs[-1]


def test_generator_epsilon_floor():
    with pytest.raises(ValueError):
        S.infinitesimal_generator("space", free1, _gauss(64), 1e-10)
    with pytest.raises(ValueError):
        S.infinitesimal_generator("time", free1, _gauss(64), 1e-3)


@pytest.mark.parametrize("picture", S.PICTURES)
def test_central_term_converges(picture):
    errs = [S.central_term_error(free1, _gauss(n), eps, picture) for eps, n in ((1e-2, 256), (1e-3, 512), (1e-4, 1024))]
    assert errs[0] > errs[1] > errs[2] and errs[2] <= 1e-3


def test_central_term_scales_with_total_mass():
    sys = ParticleSystem([2.5])
    c = S.central_term(sys, _gauss(), 1e-4)
    inner = c.grid.interior()
    ratio = c.amplitudes[inner] / _gauss().amplitudes[inner]
    assert np.allclose(ratio, 2.5j, atol=1e-2)


def test_central_term_in_both_pictures():
    # the bracket is picture independent: same mass term for psi and psi~
    psi = _gauss()
    t_psi = noether_map(free1, psi)
    a = S.central_term_error(free1, psi, 1e-4, "standard")
    b = S.central_term_error(free1, WaveFunction(psi.grid, t_psi.amplitudes, psi.t), 1e-4, "noether")
    assert a <= 1e-3 and b <= 1e-3
