import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from galpath import propagator as P
from galpath.lagrangian import Harmonic, ParticleSystem, SingularTimeError
from galpath.waves import GridMismatchError, SpatialGrid, WaveFunction, free_gaussian, gaussian_packet, l2_distance

free1 = ParticleSystem([1.0])


def contour_compose(K2, K1, x3, x1, A, ystar):
    """``int K2(x3, y) K1(y, x1) dy`` along the steepest-descent line through ``ystar``.

    The integrand is entire in y with phase ``A (y - ystar)^2`` near the saddle,
    so rotating the real line by ``sign(A) pi/4`` turns it into a Gaussian.
    """
    rot = np.exp(0.25j * np.pi * np.sign(A))
    f = lambda s: K2(x3, ystar + rot * s) * K1(ystar + rot * s, x1) * rot  # noqa: E731
    L = 12 / np.sqrt(abs(A))
    re = quad(lambda s: f(s).real, -L, L, limit=200, epsabs=1e-13)[0]
    im = quad(lambda s: f(s).imag, -L, L, limit=200, epsabs=1e-13)[0]
    return re + 1j * im


# --- analytic kernels ---------------------------------------------------------------

def test_free_kernel_diagonal_value():
    K = P.free_kernel_1d(1, 1, 1, 0.3, 0.3)
    assert abs(K) == pytest.approx(0.3989422804014327, rel=1e-15)
    assert np.angle(K) == pytest.approx(-np.pi / 4)


@pytest.mark.parametrize("m,T1,T2,x3,x1", [(1, 0.4, 0.7, 0.9, -0.3), (2.5, 1.0, 0.3, -1.2, 0.8)])
def test_free_kernel_semigroup(m, T1, T2, x3, x1):
    K1 = lambda a, b: P.free_kernel_1d(m, 1, T1, a, b)  # noqa: E731
    K2 = lambda a, b: P.free_kernel_1d(m, 1, T2, a, b)  # noqa: E731
    A = 0.5 * m * (1 / T1 + 1 / T2)
    ystar = (x3 * T1 + x1 * T2) / (T1 + T2)
    got = contour_compose(K2, K1, x3, x1, A, ystar)
    assert abs(got - P.free_kernel_1d(m, 1, T1 + T2, x3, x1)) <= 1e-6


@pytest.mark.parametrize("T1,T2", [(0.5, 0.9), (1.2, 2.3)])
def test_mehler_semigroup_including_caustic_crossing(T1, T2):
    m, w, x3, x1 = 1.0, 1.0, 0.7, -0.4
    K1 = lambda a, b: P.mehler_kernel_1d(m, w, 1, T1, a, b)  # noqa: E731
    K2 = lambda a, b: P.mehler_kernel_1d(m, w, 1, T2, a, b)  # noqa: E731
    c1, c2 = 1 / np.tan(w * T1), 1 / np.tan(w * T2)
    A = 0.5 * m * w * (c1 + c2)
    ystar = (x3 / np.sin(w * T2) + x1 / np.sin(w * T1)) / (c1 + c2)
    got = contour_compose(K2, K1, x3, x1, A, ystar)
    assert abs(got - P.mehler_kernel_1d(m, w, 1, T1 + T2, x3, x1)) <= 1e-6


def test_mehler_small_omega_limit():
    x = np.linspace(-2, 2, 9)
    Kf = P.free_kernel_1d(1, 1, 1, x[:, None], x[None, :])
    Km = P.mehler_kernel_1d(1, 1e-4, 1, 1, x[:, None], x[None, :])
    assert np.max(np.abs(Km - Kf) / np.abs(Kf)) <= 1e-6


def test_mehler_caustic():
    with pytest.raises(P.CausticError):
        P.mehler_kernel_1d(1, 1, 1, np.pi, 0.0, 0.0)
    sys = ParticleSystem([1.0], potential=Harmonic(1.0))
    with pytest.raises(P.CausticError):
        P.analytic_kernel("harmonic", sys, SpatialGrid(-1, 1, 9), 0, np.pi)


def test_grid_system_mismatch():
    with pytest.raises(GridMismatchError):
        P.analytic_kernel("free", ParticleSystem([1.0, 1.0]), SpatialGrid(-1, 1, 9), 0, 1)


# --- sliced -------------------------------------------------------------------------

def test_single_step_sliced_equals_free_kernel():
    g = SpatialGrid(-4, 4, 129)
    Ks = P.build_sliced(free1, g, 0.0, 1.0, 0)
    Ka = P.analytic_kernel("free", free1, g, 0.0, 1.0)
    assert np.max(np.abs(Ks.K - Ka.K)) < 1e-13


def test_single_step_sliced_Ltilde_equals_conjugated_kernel():
    g = SpatialGrid(-4, 4, 129)
    Ks = P.build_sliced(free1, g, 1.0, 2.0, 0, "Ltilde")
    Ka = P.analytic_kernel("free", free1, g, 1.0, 2.0, "Ltilde")
    assert np.max(np.abs(Ks.K - Ka.K)) < 1e-13


def test_aliasing_guard_warns():
    g = SpatialGrid(-20, 20, 64)
    assert P.aliasing_ratio(free1, g, 1 / 64) > np.pi
    with pytest.warns(P.AliasingWarning):
        P.build_sliced(free1, g, 0, 1, 63)


def test_sliced_rejects_singular_interval():
    with pytest.raises(SingularTimeError):
        P.build_sliced(free1, SpatialGrid(-1, 1, 9), -1, 1, 2, "Ltilde")


# --- spectral -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def box():
    return SpatialGrid(-8, 8, 256)


def test_spectral_delta_property(box):
    psi = np.random.default_rng(0).normal(size=256) + 0j
    for which, t in (("H", 0.0), ("Htilde", 1.0)):
        K = P.build_spectral(free1, box, t, t, which)
        assert np.allclose(K.apply(psi), psi, rtol=0, atol=1e-14)


def test_spectral_unitarity(box):
    assert P.unitarity_defect(P.build_spectral(free1, box, 0, 1.3)) <= 1e-10
    sysh = ParticleSystem([1.0], potential=Harmonic(1.0))
    assert P.unitarity_defect(P.build_spectral(sysh, box, 0, 0.7)) <= 1e-10
    # Crank-Nicolson factors are Cayley transforms, unitary for each substep
    assert P.unitarity_defect(P.build_spectral(free1, SpatialGrid(-8, 8, 96), 1, 1.5, "Htilde", 64)) <= 1e-10


def test_spectral_semigroup(box):
    sysh = ParticleSystem([1.0], potential=Harmonic(0.8))
    for s in (free1, sysh):
        K31 = P.build_spectral(s, box, 0.2, 1.1)
        K32 = P.build_spectral(s, box, 0.6, 1.1)
        K21 = P.build_spectral(s, box, 0.2, 0.6)
        comp = K32.K @ K21.K * box.weight
        assert np.max(np.abs(comp - K31.K)) * box.weight <= 1e-8


def test_spectral_Htilde_semigroup():
    g = SpatialGrid(-6, 6, 96)
    K31 = P.build_spectral(free1, g, 1.0, 2.0, "Htilde", 128)
    K32 = P.build_spectral(free1, g, 1.5, 2.0, "Htilde", 64)
    K21 = P.build_spectral(free1, g, 1.0, 1.5, "Htilde", 64)
    assert np.max(np.abs(K32.K @ K21.K * g.weight - K31.K)) * g.weight <= 1e-8


def test_spectral_gaussian_matches_closed_form():
    g = SpatialGrid(-12, 12, 2048)
    psi0 = gaussian_packet(0.0, 0.0, 1.5).sample(g)
    out = WaveFunction(g, P.spectral_evolve(free1, g, psi0.amplitudes, 1.0), 1.0)
    ref = free_gaussian(0.0, 0.0, 1.5, 1.0, t=1.0).sample(g)
    assert l2_distance(out, ref, g.interior()) <= 1e-6


def test_evolve_preserves_norm_and_checks_inputs(box):
    psi = gaussian_packet(0.5, 1.0, 1.0).sample(box)
    K = P.build_spectral(free1, box, 0.0, 1.0)
    out = P.evolve(K, psi)
    assert out.t == 1.0
    assert abs(out.norm() - psi.norm()) <= 1e-10
    with pytest.raises(ValueError):
        P.evolve(K, psi.copy(t=0.5))
    with pytest.raises(GridMismatchError):
        P.evolve(K, gaussian_packet(0, 0, 1).sample(SpatialGrid(-8, 8, 128)))


def test_hamiltonian_matrix_is_hermitian():
    g = SpatialGrid(-3, 3, 12, 2)
    H = P.hamiltonian_matrix(ParticleSystem([1.0, 2.0]), g, "Htilde", 1.3)
    assert abs(H - H.conj().T).max() < 1e-12
    with pytest.raises(SingularTimeError):
        P.hamiltonian_matrix(free1, SpatialGrid(-1, 1, 9), "Htilde", 0.0)


# --- Schrodinger residual ---------------------------------------------------------------

def _series(sys, g, psi0, t0, dt, n=5):
    return [WaveFunction(g, P.spectral_evolve(sys, g, psi0, k * dt), t0 + k * dt) for k in range(n)]


def test_residual_noether_picture_order_two():
    errs = []
    for n, dt in ((129, 0.02), (257, 0.01), (513, 0.005)):
        g = SpatialGrid(-10, 10, n)
        psi0 = gaussian_packet(0.0, 0.5, 1.0).sample(g).amplitudes
        series = [P.noether_map(free1, w) for w in _series(free1, g, psi0, 1.0, dt)]
        res = P.schrodinger_residual(free1, series, "Htilde")
        errs.append(res[:, g.interior().ravel()].max())
    order = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
    assert all(1.7 <= o <= 2.3 for o in order)


def test_residual_negative_control():
    g = SpatialGrid(-5, 5, 129)
    rng = np.random.default_rng(1)
    series = [WaveFunction(g, rng.normal(size=129) + 1j * rng.normal(size=129), k * 0.01) for k in range(4)]
    assert P.schrodinger_residual(free1, series).max() > 10


def test_columns_of_spectral_kernel_solve_the_equation():
    # a column is the evolved grid delta; smooth it by applying to a packet instead
    g = SpatialGrid(-10, 10, 257)
    psi0 = gaussian_packet(-1.0, 1.0, 0.8).sample(g).amplitudes
    series = [WaveFunction(g, P.build_spectral(free1, g, 0.0, k * 0.01).apply(psi0), k * 0.01) for k in range(4)]
    ref = [WaveFunction(g, np.random.default_rng(2).normal(size=257), k * 0.01) for k in range(4)]
    assert P.schrodinger_residual(free1, series).max() < 1e-2 * P.schrodinger_residual(free1, ref).max()


def test_noether_map_is_unimodular():
    g = SpatialGrid(-5, 5, 101)
    psi = gaussian_packet(0.3, 1.0, 1.0, t=1.7).sample(g)
    out = P.noether_map(ParticleSystem([2.0]), psi)
    assert np.allclose(np.abs(out.amplitudes), np.abs(psi.amplitudes), rtol=1e-15, atol=0)
    back = P.noether_map(ParticleSystem([2.0]), out, inverse=True)
    assert np.allclose(back.amplitudes, psi.amplitudes, atol=1e-15)


# --- transformation identities --------------------------------------------------------------

def test_boost_identity_trivial_and_exact():
    g = SpatialGrid(-8, 8, 256)
    b = P.builder("analytic-free", free1, g)
    assert P.check_boost_identity(b, free1, g, 0.3, 1.3, 0.0) == 0
    assert P.check_boost_identity(b, free1, g, 0.3, 1.3, 0.7) <= 1e-10


def test_boost_identity_on_sliced_kernel():
    # the discrete slice action obeys the boost law exactly; grid-aligned shifts avoid interpolation
    g = SpatialGrid(-6, 6, 241)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", P.AliasingWarning)
        b = P.builder("sliced", free1, g, N=0)
        assert P.check_boost_identity(b, free1, g, 0.5, 1.0, 0.4, exact=False) <= 1e-10


def test_boost_identity_harmonic_negative_control():
    sysh = ParticleSystem([1.0], potential=Harmonic(1.0))
    g = SpatialGrid(-8, 8, 256)
    assert P.check_boost_identity(P.builder("analytic-harmonic", sysh, g), sysh, g, 0.3, 1.3, 0.7) > 0.1


def test_translation_identities_Ltilde():
    g = SpatialGrid(-6, 6, 241)  # b = 0.4 is eight grid steps
    for method in ("analytic-free", "sliced"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", P.AliasingWarning)
            b = P.builder(method, free1, g, N=0, picture="Ltilde")
            assert P.check_translation_identities_Ltilde(b, free1, g, 1, 2, b=0.0) == 0
            assert P.check_translation_identities_Ltilde(b, free1, g, 1, 2, a=0.0) == 0
            assert P.check_translation_identities_Ltilde(b, free1, g, 1, 2, b=0.4, exact=False) <= 1e-5
            assert P.check_translation_identities_Ltilde(b, free1, g, 1, 2, a=0.3) <= 1e-5


@pytest.mark.parametrize("N", [1, 4])
def test_time_identity_holds_for_multislice_kernels(N):
    g = SpatialGrid(-6, 6, 241)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", P.AliasingWarning)
        b = P.builder("sliced", free1, g, N=N, picture="Ltilde")
        assert P.check_translation_identities_Ltilde(b, free1, g, 1, 2, a=0.3) <= 1e-5


@pytest.mark.xfail(reason="truncated grid sums over intermediate slices are not translation covariant", strict=True)
def test_space_identity_for_multislice_kernels():
    g = SpatialGrid(-6, 6, 241)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", P.AliasingWarning)
        b = P.builder("sliced", free1, g, N=2, picture="Ltilde")
        assert P.check_translation_identities_Ltilde(b, free1, g, 1, 2, b=0.4, exact=False) <= 1e-5


def test_translation_identity_argument_errors():
    g = SpatialGrid(-6, 6, 65)
    b = P.builder("analytic-free", free1, g, picture="Ltilde")
    with pytest.raises(ValueError):
        P.check_translation_identities_Ltilde(b, free1, g, 1, 2)
    with pytest.raises(SingularTimeError):
        P.check_translation_identities_Ltilde(b, free1, g, 1, 2, a=1.5)


def test_window_error():
    g = SpatialGrid(-1, 1, 21)
    with pytest.raises(P.WindowError):
        P.check_boost_identity(P.builder("analytic-free", free1, g), free1, g, 1, 2, 5.0)


def test_kernel_csv_round_trip(tmp_path):
    g = SpatialGrid(-2, 2, 9)
    K = P.analytic_kernel("free", free1, g, 0, 1)
    f = tmp_path / "k.csv"
    P.write_kernel_csv(K, f)
    back = P.read_kernel_csv(f, 0, 1)
    assert np.array_equal(back.K, K.K)
