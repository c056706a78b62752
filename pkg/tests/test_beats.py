import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

import oracles
from sgo_resonance import beats
from sgo_resonance.beats import (
    OscillatorSystem,
    averaged_energy_estimate,
    energy_series,
    measure_beat_period,
    optimal_window,
    perturbed_spectrum,
    secular_function,
    small_oscillator_excitation,
    solve_cauchy,
    transfer_coefficient,
    two_osc_approx_spectrum,
    two_osc_eigenvectors,
    two_osc_exact_spectrum,
    windowed_average,
    xi_analytic,
    xi_characteristic,
)
from sgo_resonance.errors import PoleError

TUNED = OscillatorSystem(1.0, 1.0, [1.0], [1.0], [0.02])


def random_system(seed: int, mu: int) -> OscillatorSystem:
    rng = np.random.default_rng(seed)
    m, v = rng.uniform(0.5, 2.0, 2)
    M = rng.uniform(0.5, 2.0, mu)
    V = rng.uniform(0.5, 2.0, mu)
    b = rng.uniform(-1, 1, mu) * 0.5 * np.sqrt(v * V / mu)
    return OscillatorSystem(m, v, M, V, b)


def oracle_eigenvalues(sys: OscillatorSystem) -> np.ndarray:
    masses = np.concatenate([[sys.m], sys.M])
    return oracles.generalized_eigenvalues(sys.stiffness_matrix(), masses)


# --- two-oscillator closed forms -----------------------------------------------------


def test_exact_spectrum_examples():
    assert two_osc_exact_spectrum(1, 1, 0) == (1, 1)
    plus, minus = two_osc_exact_spectrum(2, 1, 0.1)
    ref = oracles.jacobi_eigenvalues(np.array([[2.0, 0.1], [0.1, 1.0]]))
    assert plus == pytest.approx(ref[1], rel=1e-14) and minus == pytest.approx(ref[0], rel=1e-14)
    assert plus == pytest.approx(2.009902, abs=5e-7)
    assert minus == pytest.approx(0.990098, abs=5e-7)
    with pytest.raises(ValueError):
        two_osc_exact_spectrum(-1, 1, 0.1)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3), e=st.floats(0, 10))
def test_exact_spectrum_trace_and_order(a, b, e):
    plus, minus = two_osc_exact_spectrum(a, b, e)
    assert plus >= minus
    assert plus + minus == pytest.approx(a + b, rel=1e-13)
    assert plus * minus == pytest.approx(a * b - e * e, rel=1e-9, abs=1e-9 * (a * b + e * e))


def test_approx_spectrum_examples():
    ap = two_osc_approx_spectrum(2, 1, 0.1)
    assert ap.plus == pytest.approx(2.01, rel=1e-15)
    assert ap.error <= ap.bound == pytest.approx(2 * 0.1**4 / 0.5**3)
    assert ap.valid
    zero = two_osc_approx_spectrum(2, 1, 0.0)
    assert (zero.plus, zero.minus, zero.error) == (2, 1, 0.0)
    assert not two_osc_approx_spectrum(2, 1, 0.2).valid


def test_approx_error_is_fourth_order():
    eps = np.geomspace(1e-3, 0.5 / 3, 12)
    errs = np.array([two_osc_approx_spectrum(2, 1, e).error for e in eps])
    slope = np.polyfit(np.log(eps), np.log(errs), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.1)


def test_eigenvector_examples():
    pair = two_osc_eigenvectors(2, 1, 0.1)
    np.testing.assert_allclose(pair.perturbative[0], [1, 0.1])
    np.testing.assert_allclose(pair.perturbative[1], [-0.1, 1])
    zero = two_osc_eigenvectors(2, 1, 0.0)
    np.testing.assert_allclose(zero.exact[0], [1, 0], atol=1e-15)
    np.testing.assert_allclose(zero.exact[1], [0, 1], atol=1e-15)
    assert two_osc_eigenvectors(1, 1, 0.1).perturbative is None


def test_eigenvector_angle_error_second_order():
    for e in (0.01, 0.03, 0.1, 0.15):
        pair = two_osc_eigenvectors(2, 1, e)
        r = e / 0.5
        assert pair.angle_error <= r**2
        A = np.array([[2.0, e], [e, 1.0]])
        for vec in pair.exact:
            lam = vec @ A @ vec
            np.testing.assert_allclose(A @ vec, lam * vec, atol=1e-14)


# --- secular function and spectrum -------------------------------------------------


def test_secular_function_basics():
    sys = OscillatorSystem(1.0, 2.0, [1.0], [1.0], [0.0])
    assert secular_function(sys, 2.0) == 0.0
    coupled = OscillatorSystem(1.0, 2.0, [1.0], [1.0], [0.1])
    with pytest.raises(PoleError):
        secular_function(coupled, 1.0)
    for lam in two_osc_exact_spectrum(2, 1, 0.1):
        assert abs(secular_function(coupled, lam)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_secular_roots_match_two_oscillator_identification(seed):
    rng = np.random.default_rng(seed)
    m, v, M, V, b = rng.uniform(0.5, 2.0, 5) * np.array([1, 1, 1, 1, 0.2])
    sys = OscillatorSystem(m, v, [M], [V], [b])
    exact = sorted(two_osc_exact_spectrum(v / m, V / M, b / math.sqrt(m * M)))
    np.testing.assert_allclose(perturbed_spectrum(sys).eigenvalues, exact, rtol=1e-12)


def test_spectrum_examples():
    spec = perturbed_spectrum(OscillatorSystem(1.0, 2.0, [1.0], [1.0], [0.1]))
    np.testing.assert_allclose(spec.eigenvalues, sorted(two_osc_exact_spectrum(2, 1, 0.1)), rtol=1e-14)
    free = perturbed_spectrum(OscillatorSystem(2.0, 3.0, [1.0, 2.0], [4.0, 1.0], [0.0, 0.0]))
    np.testing.assert_allclose(free.eigenvalues, [0.5, 1.5, 4.0], rtol=1e-15)


def test_starlet_splits_triple_eigenvalue():
    sys = OscillatorSystem(1.0, 1.0, [1.0, 1.0], [1.0, 1.0], [0.03, 0.04])
    spec = perturbed_spectrum(sys)
    np.testing.assert_allclose(spec.eigenvalues, oracle_eigenvalues(sys), rtol=1e-12)
    assert np.all(np.diff(spec.eigenvalues) > 1e-3)
    np.testing.assert_allclose(spec.eigenvalues, [0.95, 1.0, 1.05], rtol=1e-12)
    assert spec.orthonormality_error <= 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_mu4_against_jacobi(seed):
    sys = random_system(seed, 4)
    np.testing.assert_allclose(perturbed_spectrum(sys).eigenvalues, oracle_eigenvalues(sys), rtol=1e-8)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), mu=st.integers(1, 6))
def test_spectrum_invariants(seed, mu):
    sys = random_system(seed, mu)
    spec = perturbed_spectrum(sys)
    lam = spec.eigenvalues
    np.testing.assert_allclose(lam, oracle_eigenvalues(sys), rtol=1e-8)
    assert spec.orthonormality_error <= 1e-10
    poles = np.sort(sys.Lambda0)
    assert lam[0] < poles[0] and lam[-1] > poles[-1]
    for s in range(mu - 1):
        assert np.count_nonzero((lam > poles[s]) & (lam < poles[s + 1])) == 1


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), mu=st.integers(1, 6))
def test_printed_normalization_for_unit_small_mass(seed, mu):
    base = random_system(seed, mu)
    sys = OscillatorSystem(1.0, base.v, base.M, base.V, base.b)
    spec = perturbed_spectrum(sys)
    for s, lam in enumerate(spec.eigenvalues):
        a = spec.vectors[0, s]
        X = sys.b / (sys.V - sys.M * lam)
        assert a * a * (1 + np.sum(sys.M * X * X)) == pytest.approx(1.0, rel=1e-10)


def test_system_validation():
    with pytest.raises(ValueError):
        OscillatorSystem(-1.0, 1.0, [1.0], [1.0], [0.1])
    with pytest.raises(ValueError):
        OscillatorSystem(1.0, 1.0, [1.0], [1.0, 2.0], [0.1])
    with pytest.raises(ValueError):
        perturbed_spectrum(OscillatorSystem(1.0, 1.0, [1.0], [1.0], [2.0]))
    sys = OscillatorSystem.from_epsilon(2.0, 1.0, [3.0], [1.0], [0.1])
    assert sys.b[0] == pytest.approx(0.1 * math.sqrt(6.0))


# --- Cauchy problem ---------------------------------------------------------------


@pytest.mark.parametrize("seed", range(6))
def test_cauchy_reconstructs_initial_data(seed):
    sys = random_system(seed, 1 + seed % 4)
    rng = np.random.default_rng(100 + seed)
    x0, v0 = rng.normal(size=(2, sys.mu + 1))
    sol = solve_cauchy(perturbed_spectrum(sys), x0, v0)
    pos, vel = sol.state(0.0)
    np.testing.assert_allclose(pos[:, 0], x0, atol=1e-10)
    np.testing.assert_allclose(vel[:, 0], v0, atol=1e-10)
    assert np.all(sol.amplitudes >= 0)
    assert np.all((sol.phases >= 0) & (sol.phases < 2 * math.pi))


def test_eigenvector_initial_data_is_single_mode():
    sys = random_system(7, 3)
    spec = perturbed_spectrum(sys)
    sol = solve_cauchy(spec, spec.vectors[:, 2], np.zeros(4))
    expected = np.zeros(4)
    expected[2] = 1.0
    np.testing.assert_allclose(sol.amplitudes, expected, atol=1e-12)
    e = energy_series(sol, np.linspace(0, 50, 500))
    np.testing.assert_allclose(e.e_total, e.e_total[0], rtol=1e-12)


def test_normal_mode_excitation_from_first_order_vector():
    eps, delta = 0.1, 0.5
    spec = perturbed_spectrum(OscillatorSystem(1.0, 2.0, [1.0], [1.0], [eps]))
    sol = solve_cauchy(spec, [1.0, eps / (2 * delta)], [0.0, 0.0])
    # mode index 1 is the upper ("+") branch
    assert sol.amplitudes[0] <= (eps / delta) ** 2
    assert sol.amplitudes[1] > 0.99


@pytest.mark.parametrize("seed", range(3))
def test_modal_solution_matches_rk4(seed):
    sys = random_system(seed, 2)
    spec = perturbed_spectrum(sys)
    rng = np.random.default_rng(seed)
    x0, v0 = rng.normal(size=(2, 3))
    sol = solve_cauchy(spec, x0, v0)
    fast = 2 * math.pi / spec.frequencies.max()
    t_end = float(rng.uniform(1, 5)) * fast
    xr, vr = oracles.rk4(np.concatenate([[sys.m], sys.M]), sys.stiffness_matrix(), x0, v0, t_end, fast / 200)
    pos, vel = sol.state(t_end)
    scale = np.max(np.abs(np.concatenate([xr, vr])))
    np.testing.assert_allclose(pos[:, 0], xr, atol=1e-6 * scale)
    np.testing.assert_allclose(vel[:, 0], vr, atol=1e-6 * scale)


def test_full_exchange_at_exact_tuning_against_rk4():
    spec = perturbed_spectrum(TUNED)
    sol = small_oscillator_excitation(spec)
    half_beat = 0.5 * beats.beat_period(spec, sol)
    # a half beat is ~50 fast periods, so the oracle step is refined to keep its own error small
    xr, vr = oracles.rk4(np.ones(2), TUNED.stiffness_matrix(), [1.0, 0.0], [0.0, 0.0], half_beat, 2 * math.pi / 800)
    pos, vel = sol.state(half_beat)
    np.testing.assert_allclose(pos[:, 0], xr, atol=1e-6)
    assert 0.5 * (vr[0] ** 2 + xr[0] ** 2) < 1e-3


def test_non_orthonormal_spectrum_rejected():
    spec = perturbed_spectrum(TUNED)
    bad = beats.PerturbedSpectrum(TUNED, spec.eigenvalues, 2 * spec.vectors, spec.deflated)
    with pytest.raises(ValueError):
        solve_cauchy(bad, [1, 0], [0, 0])


# --- energies and xi -----------------------------------------------------------------


def test_energy_conservation_over_ten_beats():
    sys = random_system(3, 1)
    spec = perturbed_spectrum(sys)
    sol = small_oscillator_excitation(spec)
    t = np.linspace(0, 10 * beats.beat_period(spec, sol), 200_001)
    e = energy_series(sol, t, workers=4, chunk=30_000)
    assert np.max(np.abs(e.e_total / e.e_total[0] - 1)) <= 1e-10
    assert np.all(e.e_small >= 0) and np.all(e.e_large >= 0)
    ref = energy_series(sol, t)
    np.testing.assert_array_equal(e.e_total, ref.e_total)


def test_free_oscillator_xi_modulus():
    w0 = 1.7
    sys = OscillatorSystem(1.0, w0**2, [1.0], [3.0], [0.0])
    sol = small_oscillator_excitation(perturbed_spectrum(sys))
    xi, _ = xi_characteristic(sol, np.linspace(0, 20, 300))
    np.testing.assert_allclose(np.abs(xi) ** 2, w0**2, rtol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_xi_energy_identity(seed):
    sys = random_system(seed, 2)
    rng = np.random.default_rng(seed)
    sol = solve_cauchy(perturbed_spectrum(sys), *rng.normal(size=(2, 3)))
    t = np.linspace(0, 200, 2000)
    xi, e_small = xi_characteristic(sol, t)
    pos, vel = sol.state(t)
    direct = 0.5 * (sys.m * vel[0] ** 2 + sys.v * pos[0] ** 2)
    np.testing.assert_allclose(e_small, direct, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("sys", [TUNED, OscillatorSystem(2.0, 1.5, [1.0], [0.8], [0.05]), OscillatorSystem(1.0, 1.0, [1.0, 2.0], [1.05, 1.9], [0.03, -0.02])])
def test_xi_analytic_matches_modal(sys):
    spec = perturbed_spectrum(sys)
    sol = small_oscillator_excitation(spec)
    t = np.linspace(0, beats.beat_period(spec, sol), 5000)
    xi_m, _ = xi_characteristic(sol, t)
    xi_a = xi_analytic(sol, t)
    assert np.max(np.abs(xi_a - xi_m)) <= 1e-8 * np.max(np.abs(xi_m))
    assert xi_a[0] == pytest.approx(xi_m[0], abs=1e-12)


def test_xi_analytic_vanishing_drive_and_mu_limit():
    sys = OscillatorSystem(1.0, 1.0, [1.0], [1.0], [0.0])
    sol = small_oscillator_excitation(perturbed_spectrum(sys))
    t = np.linspace(0, 30, 100)
    np.testing.assert_allclose(xi_analytic(sol, t), np.exp(1j * t) * 1j, atol=1e-14)
    big = random_system(1, 3)
    with pytest.raises(ValueError):
        xi_analytic(small_oscillator_excitation(perturbed_spectrum(big)), t)


def test_xi_analytic_mid_beat_against_quadrature():
    sys = OscillatorSystem(1.0, 1.0, [1.0], [1.1], [0.01])
    spec = perturbed_spectrum(sys)
    sol = small_oscillator_excitation(spec)
    w0 = 1.0
    drive = spec.modal_couplings() * sol.amplitudes
    s = int(np.argmin(np.abs(spec.frequencies - math.sqrt(1.1))))
    t_mid = math.pi / abs(spec.frequencies[s] - w0)

    def force(x):
        return float(np.sum(drive * np.cos(spec.frequencies * x + sol.phases)))

    re = quad(lambda x: math.cos(w0 * x) * force(x), 0, t_mid, limit=400, epsabs=1e-13)[0]
    im = quad(lambda x: -math.sin(w0 * x) * force(x), 0, t_mid, limit=400, epsabs=1e-13)[0]
    xi0 = 1j
    ref = np.exp(1j * w0 * t_mid) * (xi0 - (re + 1j * im))
    got = xi_analytic(sol, [t_mid])[0]
    assert abs(got - ref) <= 1e-8
    # resonant kernels dominate: dropping the anti-resonant ones changes little
    dif = spec.frequencies - w0
    resonant = np.sum(drive * np.exp(1j * sol.phases) * np.exp(0.5j * dif * t_mid) * np.sin(0.5 * dif * t_mid) / dif)
    approx = np.exp(1j * w0 * t_mid) * (xi0 - resonant)
    assert abs(got - approx) <= 0.1 * abs(resonant)
    assert abs(resonant) >= abs(drive[s]) / abs(dif[s])


# --- windowed averages -------------------------------------------------------------


def test_windowed_average_examples():
    t = np.linspace(0, 10, 1001)
    assert windowed_average(t, np.full_like(t, 3.5), 5.0, 2.0) == pytest.approx(3.5, rel=1e-14)
    nu = 2.0
    period = 2 * math.pi / nu
    t = np.linspace(0, 3 * period, 3 * 1024 + 1)
    assert windowed_average(t, np.cos(nu * t) ** 2, 1.5 * period, period) == pytest.approx(0.5, abs=1e-6)
    with pytest.raises(ValueError):
        windowed_average(t, t, 1.0, 0.0)
    with pytest.raises(ValueError):
        windowed_average(t, t, 0.1, 1.0)
    with pytest.raises(ValueError):
        windowed_average(t, t, 5.0, 10 * (t[1] - t[0]))


def test_optimal_window_balance_and_scaling():
    sys = OscillatorSystem(1.0, 1.0, [1.0], [1.1], [0.004])
    opt = optimal_window(sys)
    assert opt.drift == pytest.approx(opt.leakage, rel=1e-15)
    # width scales as 1/b: quadrupling b^2 halves it, quadrupling b quarters it
    b2x4 = optimal_window(OscillatorSystem(1.0, 1.0, [1.0], [1.1], [0.008]))
    assert b2x4.width == pytest.approx(opt.width / 2, rel=1e-14)
    bx4 = optimal_window(OscillatorSystem(1.0, 1.0, [1.0], [1.1], [0.016]))
    assert bx4.width == pytest.approx(opt.width / 4, rel=1e-14)
    with pytest.raises(ValueError):
        optimal_window(OscillatorSystem(1.0, 1.0, [1.0], [1.1], [0.0]))
    with pytest.raises(ValueError):
        optimal_window(random_system(0, 2))


def test_averaged_estimate_examples():
    sys = OscillatorSystem(1.0, 1.0, [1.0], [1.1], [0.004])
    est = averaged_energy_estimate(sys, [0.0, 1.0])
    assert est.values[0] == est.offset
    lam1, dlam, w1 = 1.0, 0.05, 1.0
    assert est.envelope_period == pytest.approx(4 * math.pi * dlam * w1 / 0.004**2, rel=1e-14)
    assert est.valid
    assert not averaged_energy_estimate(OscillatorSystem(1.0, 1.0, [1.0], [1.1], [0.02]), [0.0]).valid
    del lam1


@pytest.mark.xfail(strict=True, reason="the leading-order averaged estimate does not track the exact modal dynamics; see notes")
def test_averaged_estimate_envelope_matches_simulation():
    sys = OscillatorSystem(1.0, 1.0, [1.0], [1.1], [0.004])
    opt = optimal_window(sys)
    spec = perturbed_spectrum(sys)
    sol = small_oscillator_excitation(spec)
    est = averaged_energy_estimate(sys, [0.0], sol)
    horizon = est.envelope_period + opt.width
    t = np.linspace(0, horizon, int(horizon / (2 * math.pi) * 64))
    xi, _ = xi_characteristic(sol, t)
    centers = np.linspace(0.5 * opt.width, horizon - 0.5 * opt.width, 2000)
    avg = beats.windowed_series(t, np.abs(xi) ** 2, opt.width, centers)
    simulated = 0.5 * (avg.max() - avg.min())
    assert simulated == pytest.approx(est.envelope_amplitude, rel=0.2)


# --- beats and transfer ---------------------------------------------------------------


@pytest.mark.parametrize("sys", [TUNED, OscillatorSystem(1.0, 1.0, [1.0], [1.02], [0.01]), OscillatorSystem(2.0, 1.0, [1.0], [0.6], [0.03])])
def test_measured_beat_period(sys):
    spec = perturbed_spectrum(sys)
    sol = small_oscillator_excitation(spec)
    period = 2 * math.pi / abs(spec.frequencies[1] - spec.frequencies[0])
    t = np.linspace(0, 6 * period, 200_000)
    e = energy_series(sol, t)
    fast = 2 * math.pi / spec.frequencies.max()
    assert measure_beat_period(t, e.e_small, smooth=fast) == pytest.approx(period, rel=0.01)


def test_transfer_examples():
    res = transfer_coefficient(TUNED)
    assert res.k >= 0.99
    assert res.horizon == pytest.approx(3 * res.beat_period)
    assert transfer_coefficient(OscillatorSystem(1.0, 1.0, [1.0], [1.2], [0.0])).k == 0.0
    with pytest.raises(ValueError, match="beat period"):
        transfer_coefficient(TUNED, horizon=0.5 * res.beat_period)


def test_transfer_decreases_with_detuning():
    sweep = beats.transfer_sweep(TUNED, np.linspace(0, 0.045, 10), workers=4)
    ks = [k for _, k in sweep]
    assert all(b < a for a, b in zip(ks[:-1], ks[1:]))
    assert sweep == beats.transfer_sweep(TUNED, np.linspace(0, 0.045, 10))


def test_phase_opposition_at_exact_tuning():
    spec = perturbed_spectrum(TUNED)
    sol = small_oscillator_excitation(spec)
    t = np.linspace(0, beats.beat_period(spec, sol), 20_000)
    e = energy_series(sol, t)
    assert np.corrcoef(e.e_small, e.e_large)[0, 1] <= -0.95


def test_detuned_copy():
    d = beats.detuned(TUNED, 0.01)
    assert math.sqrt(d.Lambda0[0]) == pytest.approx(1.01, rel=1e-15)
    assert d.b[0] == TUNED.b[0]
