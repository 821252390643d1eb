import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad_vec
from scipy.linalg import expm

from micromodel.bath import CorrelationFunction, correlation_closed_form
from micromodel.core import ValidationError, apply_superop
from micromodel.lindblad import gksl_generator, solve_lindblad
from micromodel.model import (SIGMA_MINUS, SIGMA_X, SIGMA_Z, BathSpec, Constant, Sinusoidal, simple_model)
from micromodel.redfield import (choose_path, compare_to_lindblad, interaction_picture_coupling,
                                 memory_coefficient, memory_history, redfield_rhs, solve_redfield,
                                 system_propagator, trajectory_distances)

from conftest import amplitude_damping, random_density, random_hermitian

PLUS = np.full((2, 2), 0.5, dtype=complex)


def rotating_model(lam=50.0, omega=3.0, horizon=2.0, **kw):
    # H = omega sigma_z / 2 makes J~ rotate; sinusoidal rate adds explicit time dependence
    return simple_model(2, [(SIGMA_MINUS, Sinusoidal(0.6, 0.4, 2.0))], BathSpec(lam=lam, omega0=100 * lam),
                        horizon=horizon, hamiltonian=[(SIGMA_Z, Constant(omega / 2)), (SIGMA_X, Sinusoidal(0, 0.5, 1.3))],
                        **kw)


# ---------------------------------------------------------------------------
# free propagator and couplings
# ---------------------------------------------------------------------------


def test_propagator_without_hamiltonian_is_identity():
    spec = amplitude_damping()
    assert np.array_equal(system_propagator(spec, 2.0), np.eye(2))


def test_constant_hamiltonian_matches_expm(rng):
    h = random_hermitian(rng, 3)
    spec = simple_model(3, [(np.eye(3), Constant(0.0))], hamiltonian=[(h, Constant(1.0))])
    assert np.max(np.abs(system_propagator(spec, 2.5) - expm(-2.5j * h))) <= 1e-9


def test_sinusoidal_hamiltonian_stays_unitary():
    spec = rotating_model()
    for t in (0.3, 1.0, 2.0):
        v = system_propagator(spec, t)
        assert np.max(np.abs(v.conj().T @ v - np.eye(2))) <= 1e-9


def test_coupling_without_hamiltonian():
    spec = amplitude_damping(rate=Constant(0.25))
    # sqrt(0.25) sigma_-
    assert np.allclose(interaction_picture_coupling(spec, 0, 1.0), 0.5 * SIGMA_MINUS, atol=0)


def test_coupling_under_pauli_rotation():
    w = 4.0
    spec = simple_model(2, [(SIGMA_MINUS, Constant(1.0))], hamiltonian=[(SIGMA_Z, Constant(w / 2))])
    for t in (0.1, 0.7, 2.0):
        jt = interaction_picture_coupling(spec, 0, t)
        assert abs(abs(jt[0, 1]) - 1) < 1e-10
        assert np.allclose(jt, np.exp(1j * w * t) * SIGMA_MINUS, atol=1e-9)


def test_coupling_norm_is_unitarily_invariant(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    spec = simple_model(3, [(a, Constant(1.0))], hamiltonian=[(random_hermitian(rng, 3), Sinusoidal(1, 1, 2))])
    for t in (0.5, 3.0):
        jt = interaction_picture_coupling(spec, 0, t)
        assert np.linalg.norm(jt, 2) == pytest.approx(np.linalg.norm(a, 2), rel=1e-9)
        assert np.allclose(np.linalg.eigvalsh(jt.conj().T @ jt), np.linalg.eigvalsh(a.conj().T @ a), atol=1e-8)


# ---------------------------------------------------------------------------
# memory coefficients
# ---------------------------------------------------------------------------


def test_memory_for_constant_coupling():
    spec = amplitude_damping(lam=20.0)
    for t in (0.01, 0.1, 1.0):
        s = memory_coefficient(spec, 0, t)
        assert np.allclose(s, 0.5 * (1 - np.exp(-20.0 * t)) * SIGMA_MINUS, atol=1e-10)
    assert not np.any(memory_coefficient(spec, 0, 0.0))


@pytest.mark.parametrize("t", [0.05, 0.5, 1.9])
def test_memory_paths_agree(t):
    spec = rotating_model()
    ode = memory_coefficient(spec, 0, t, "auxiliary_ode")
    hist = memory_coefficient(spec, 0, t, "history_quadrature")
    assert np.max(np.abs(ode - hist)) <= 1e-6 * spec.bath.gamma0


def test_memory_against_direct_quadrature():
    spec = rotating_model()
    c = CorrelationFunction(spec.bath, "closed")
    t = 0.8
    direct, _ = quad_vec(lambda tau: c(tau) * interaction_picture_coupling(spec, 0, t - tau), 0, t,
                         epsabs=1e-12, epsrel=1e-10, points=[0.1])
    assert np.max(np.abs(memory_coefficient(spec, 0, t) - direct)) <= 1e-8


def test_memory_norm_bound():
    spec = rotating_model()
    hist = memory_history(spec, CorrelationFunction(spec.bath, "closed"))
    lam, g0 = spec.bath.lam, spec.bath.gamma0
    jmax = max(np.linalg.norm(interaction_picture_coupling(spec, 0, t), 2) for t in np.linspace(0, 2, 41))
    for t in np.linspace(0, 2, 9):
        bound = 0.5 * g0 * (1 - math.exp(-lam * t)) * jmax
        assert np.linalg.norm(hist(0, t), 2) <= bound * (1 + 1e-6) + 1e-12


def test_history_buffer_underflow():
    spec = rotating_model()
    hist = memory_history(spec, CorrelationFunction(spec.bath, "closed"), t_end=1.0)
    with pytest.raises(ValidationError, match="does not cover"):
        hist(0, 1.5)


def test_path_mismatches():
    spec = rotating_model()
    with pytest.raises(ValidationError):
        memory_coefficient(spec, 0, 0.5, "auxiliary_ode", CorrelationFunction(spec.bath, "numeric"))
    with pytest.raises(ValidationError):
        memory_coefficient(spec.with_bath(family="gaussian"), 0, 0.5, "auxiliary_ode")
    with pytest.raises(ValidationError):
        memory_coefficient(spec, 0, 0.5, "delta")
    with pytest.raises(ValidationError):
        memory_coefficient(spec, 0, 0.5, "spectral")
    assert choose_path(spec, CorrelationFunction(spec.bath, "closed")) == "auxiliary_ode"
    assert choose_path(spec, CorrelationFunction(spec.bath, "numeric")) == "history_quadrature"
    assert choose_path(spec, CorrelationFunction(spec.bath, "delta")) == "delta"


# ---------------------------------------------------------------------------
# right-hand side structure
# ---------------------------------------------------------------------------


def _random_ops(rng, n, count):
    return [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(count)]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4), nch=st.integers(1, 3))
def test_rhs_is_traceless_and_hermitian_for_any_memory(seed, n, nch):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, n)
    out = redfield_rhs(rho, _random_ops(rng, n, nch), _random_ops(rng, n, nch))
    assert abs(np.trace(out)) <= 1e-12
    assert np.max(np.abs(out - out.conj().T)) <= 1e-12


def test_regrouping_equals_four_term_kernel(rng):
    # complex correlation: closed form minus the remainder at a modest omega0
    spec = rotating_model(lam=10.0).with_bath(omega0=40.0)
    corr = CorrelationFunction(spec.bath, "closed-minus-remainder")
    t = 0.6
    rho = random_density(rng, 2)
    jt = interaction_picture_coupling(spec, 0, t)
    jd = jt.conj().T

    def literal(tau):
        c = corr(tau)
        js = interaction_picture_coupling(spec, 0, t - tau)
        jsd = js.conj().T
        return (c * (js @ rho @ jd - jd @ js @ rho)
                + np.conj(c) * (jt @ rho @ jsd - rho @ jsd @ jt))

    direct, _ = quad_vec(literal, 0, t, epsabs=1e-11, epsrel=1e-10, points=[0.1, 0.3])
    s, _ = quad_vec(lambda tau: corr(tau) * interaction_picture_coupling(spec, 0, t - tau), 0, t,
                    epsabs=1e-11, epsrel=1e-10, points=[0.1, 0.3])
    assert np.max(np.abs(redfield_rhs(rho, [jt], [s]) - direct)) <= 1e-7


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.0, 2.0))
def test_delta_path_is_interaction_picture_gksl(seed, t):
    rng = np.random.default_rng(seed)
    n = 3
    ops = _random_ops(rng, n, 2)
    spec = simple_model(n, [(ops[0], Sinusoidal(1.0, 0.5, 1.0)), (ops[1], Constant(0.3))],
                        BathSpec(gamma0=1.7), horizon=2.0,
                        hamiltonian=[(random_hermitian(rng, n), Sinusoidal(0.5, 1.0, 2.0))])
    v = system_propagator(spec, t)
    rho_i = random_density(rng, n)
    # target generator with rates g_k(t) and rotated operators V^+ A_k V, no Hamiltonian
    rotated = simple_model(n, [(v.conj().T @ ops[k] @ v, Constant(float(spec.channels[k].rate(t))))
                               for k in range(2)], spec.bath)
    expect = apply_superop(gksl_generator(rotated, t), rho_i)
    jts = [interaction_picture_coupling(spec, k, t) for k in range(2)]
    got = redfield_rhs(rho_i, jts, [0.5 * spec.bath.gamma0 * j for j in jts])
    assert np.max(np.abs(got - expect)) <= 1e-12 * max(1.0, np.max(np.abs(expect)))


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


def test_amplitude_damping_closed_form():
    lam = 30.0
    spec = amplitude_damping(lam=lam)
    grid = np.linspace(0, 5, 201)
    traj = solve_redfield(spec, grid)
    exact = np.exp(-grid + (1 - np.exp(-lam * grid)) / lam)
    assert np.max(np.abs(traj.population(1) - exact)) <= 1e-8
    assert traj.trace_error.max() <= 1e-8 and traj.hermiticity_error.max() <= 1e-8


def test_history_path_trajectory_matches_closed_form():
    lam = 30.0
    spec = amplitude_damping(lam=lam, horizon=2.0)
    grid = np.linspace(0, 2, 41)
    traj = solve_redfield(spec, grid, path="history_quadrature")
    exact = np.exp(-grid + (1 - np.exp(-lam * grid)) / lam)
    assert np.max(np.abs(traj.population(1) - exact)) <= 1e-6


def test_zero_rate_is_unitary_evolution():
    spec = simple_model(2, [(SIGMA_MINUS, Constant(0.0))], hamiltonian=[(SIGMA_X, Sinusoidal(0.3, 1, 2))],
                        initial_state=PLUS)
    grid = np.linspace(0, 5, 51)
    red = solve_redfield(spec, grid)
    lind = solve_lindblad(spec, grid)
    assert trajectory_distances(red, lind).max() <= 1e-8


def test_delta_path_matches_lindblad():
    spec = rotating_model(horizon=3.0)
    grid = np.linspace(0, 3, 61)
    cmp = compare_to_lindblad(spec, grid, mode="delta")
    assert cmp.sup <= 1e-8


def test_lambda_sweep_error_ratios():
    grid = np.linspace(0, 5, 251)
    sups = [compare_to_lindblad(amplitude_damping(lam=lam), grid).sup for lam in (10.0, 100.0, 1000.0)]
    assert sups[0] > sups[1] > sups[2]
    for a, b in zip(sups, sups[1:]):
        assert 3 <= a / b <= 30


def test_time_dependent_rate_error():
    spec = amplitude_damping(lam=1000.0, rate=Sinusoidal(0.5, 0.5, 0.5))
    assert compare_to_lindblad(spec, np.linspace(0, 5, 251)).sup <= 5e-3


def test_positivity_violation_is_recorded_not_corrected():
    # narrow band, strong coupling, coherent start: second order leaves the positive cone
    spec = simple_model(2, [(SIGMA_MINUS, Constant(1.0))], BathSpec(lam=0.5, omega0=50.0),
                        hamiltonian=[(SIGMA_X, Constant(2.0))], initial_state=np.diag([0.0, 1.0]))
    traj = solve_redfield(spec, np.linspace(0, 5, 101))
    if traj.min_eigenvalue.min() < -1e-8:
        assert any("positivity" in f for f in traj.flags)
    assert traj.trace_error.max() <= 1e-8


def test_remainder_shift_shrinks_with_omega0():
    shifts = []
    for w in (100.0, 200.0):
        spec = simple_model(2, [(SIGMA_MINUS, Constant(1.0))], BathSpec(lam=10.0, omega0=w), horizon=1.0,
                            initial_state=PLUS)
        grid = np.linspace(0, 1, 21)
        kw = dict(path="history_quadrature", history_step_override=0.1 / w)
        a = solve_redfield(spec, grid, mode="closed", **kw)
        b = solve_redfield(spec, grid, mode="closed-minus-remainder", **kw)
        shifts.append(trajectory_distances(a, b).max())
    assert shifts[0] >= 2 * shifts[1]


def test_no_lamb_shift_with_real_correlation():
    spec = simple_model(2, [(SIGMA_MINUS, Constant(1.0))], BathSpec(lam=10.0, omega0=100.0), horizon=1.0,
                        initial_state=PLUS)
    grid = np.linspace(0, 1, 21)
    closed = solve_redfield(spec, grid)
    phase = np.angle(closed.samples[:, 1, 0])
    assert np.max(np.abs(phase - phase[0])) <= 1e-10
    shifted = solve_redfield(spec, grid, mode="closed-minus-remainder", history_step_override=1e-3)
    phase = np.angle(shifted.samples[:, 1, 0])
    assert np.max(np.abs(phase - phase[0])) >= 1e-6
