import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from micromodel.core import ValidationError, apply_superop, choi_of, is_trace_preserving, vec
from micromodel.lindblad import (check_cp_divisibility, gksl_generator, lindblad_rhs, propagator,
                                 solve_lindblad)
from micromodel.model import (SIGMA_MINUS, SIGMA_X, SIGMA_Y, SIGMA_Z, Constant, Sinusoidal, Tabulated,
                              simple_model)

from conftest import random_density, random_hermitian

EXCITED = np.diag([0.0, 1.0]).astype(complex)
GROUND = np.diag([1.0, 0.0]).astype(complex)


def dephasing_with_negative_window():
    # gamma = 1 outside [1, 2] and -1 inside; steep PCHIP ramps just outside the window
    rate = Tabulated((0.0, 0.999, 1.0, 2.0, 2.001, 3.0), (1.0, 1.0, -1.0, -1.0, 1.0, 1.0))
    plus = np.full((2, 2), 0.5, dtype=complex)
    return simple_model(2, [(SIGMA_Z, rate)], horizon=3.0, initial_state=plus, allow_negative_rates=True)


def full_rank_qubit(rates=(1.0, 0.4, 0.25)):
    ops = (SIGMA_MINUS, SIGMA_MINUS.T, SIGMA_Z)
    return simple_model(2, [(a, Constant(r)) for a, r in zip(ops, rates)],
                        hamiltonian=[(SIGMA_X, Constant(0.3))])


def test_commutator_example():
    spec = simple_model(2, [(SIGMA_MINUS, Constant(0.0))], hamiltonian=[(SIGMA_Z, Constant(0.5))])
    out = apply_superop(gksl_generator(spec, 0.0), SIGMA_X)
    assert np.allclose(out, SIGMA_Y, atol=1e-15)


def test_amplitude_damping_generator_example():
    spec = simple_model(2, [(SIGMA_MINUS, Constant(1.0))])
    assert np.allclose(apply_superop(gksl_generator(spec, 0.0), EXCITED), GROUND - EXCITED, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0, 5))
def test_generator_is_trace_and_hermiticity_preserving(seed, t):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    ops = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(2)]
    spec = simple_model(n, [(a, Sinusoidal(1.0, 0.5, 2.0)) for a in ops],
                        hamiltonian=[(random_hermitian(rng, n), Sinusoidal(0.0, 1.0, 1.0))])
    gen = gksl_generator(spec, t)
    # a trace-preserving generator annihilates the stacked trace row
    assert np.max(np.abs(vec(np.eye(n)) @ gen)) < 1e-12
    rho = random_density(rng, n)
    out = apply_superop(gen, rho)
    assert abs(np.trace(out)) < 1e-12
    assert np.max(np.abs(out - out.conj().T)) < 1e-12
    # two code paths agree
    assert np.max(np.abs(out - lindblad_rhs(spec, t, rho))) < 1e-10


def test_exponential_decay_closed_form():
    spec = simple_model(2, [(SIGMA_MINUS, Constant(1.0))])
    grid = np.linspace(0, 5, 201)
    traj = solve_lindblad(spec, grid)
    assert np.max(np.abs(traj.population(1) - np.exp(-grid))) <= 1e-8
    assert not traj.flags


def test_sin_squared_rate_closed_form():
    # sin^2(t) written as 1/2 + sin(2t - pi/2)/2
    spec = simple_model(2, [(SIGMA_MINUS, Sinusoidal(0.5, 0.5, 2.0, -math.pi / 2))])
    grid = np.linspace(0, 5, 201)
    traj = solve_lindblad(spec, grid)
    exact = np.exp(-(grid / 2 - np.sin(2 * grid) / 4))
    assert np.max(np.abs(traj.population(1) - exact)) <= 1e-8


def test_unitary_limit_conserves_purity(rng):
    h = random_hermitian(rng, 3)
    spec = simple_model(3, [(np.eye(3), Constant(0.0))], hamiltonian=[(h, Constant(1.0))],
                        initial_state=random_density(rng, 3, rank=1))
    traj = solve_lindblad(spec, np.linspace(0, 5, 51))
    purity = np.einsum("tij,tji->t", traj.samples, traj.samples).real
    assert np.max(np.abs(purity - 1)) <= 1e-9


def test_trajectory_invariants_on_driven_qutrit():
    from pathlib import Path
    from micromodel.model import parse_model
    spec = parse_model((Path(__file__).resolve().parents[1] / "configs" / "driven_qutrit.json").read_text())
    traj = solve_lindblad(spec, np.linspace(0, spec.horizon, 101))
    assert traj.trace_error.max() <= 1e-9 and traj.hermiticity_error.max() <= 1e-9
    assert traj.min_eigenvalue.min() >= -1e-8 and not traj.flags


def test_grid_outside_horizon_rejected():
    spec = simple_model(2, [(SIGMA_MINUS, Constant(1.0))], horizon=1.0)
    with pytest.raises(ValidationError):
        solve_lindblad(spec, [0.0, 2.0])
    with pytest.raises(ValidationError):
        solve_lindblad(spec, [0.5, 1.0])


def test_propagator_identity_and_channel():
    spec = simple_model(2, [(SIGMA_MINUS, Constant(1.0))])
    assert np.array_equal(propagator(spec, 1.5, 1.5), np.eye(4))
    t = 1.7
    out = apply_superop(propagator(spec, 0.0, t), EXCITED)
    assert np.allclose(out, np.diag([1 - np.exp(-t), np.exp(-t)]), atol=1e-9)


def test_propagator_composition():
    spec = full_rank_qubit()
    spec = spec.replace(hamiltonian=simple_model(2, [(SIGMA_Z, Constant(1.0))],
                                                 hamiltonian=[(SIGMA_X, Sinusoidal(0, 1, 3))]).hamiltonian)
    lhs = propagator(spec, 0.0, 2.0)
    rhs = propagator(spec, 1.0, 2.0) @ propagator(spec, 0.0, 1.0)
    assert np.max(np.abs(lhs - rhs)) <= 1e-7
    assert is_trace_preserving(lhs, 1e-9)


@settings(max_examples=15, deadline=None)
@given(s=st.floats(0, 1.5), frac=st.floats(0, 1), length=st.floats(0.1, 3.0))
def test_propagator_composition_random_subdivisions(s, frac, length):
    spec = full_rank_qubit()
    t = min(s + length, spec.horizon)
    u = s + frac * (t - s)
    lhs = propagator(spec, s, t)
    rhs = propagator(spec, u, t) @ propagator(spec, s, u)
    assert np.max(np.abs(lhs - rhs)) <= 10 * spec.tolerances.rtol * 10


def test_positive_rates_are_cp_divisible():
    report = check_cp_divisibility(full_rank_qubit(), delta=0.05)
    assert report.cp_divisible and report.verdict == "CP-divisible"
    assert report.min_eigenvalues.min() >= -1e-8
    assert report.delta == 0.05


def test_negative_window_is_detected_inside_it():
    spec = dephasing_with_negative_window()
    report = check_cp_divisibility(spec, delta=0.01)
    assert report.verdict == "NOT CP-divisible"
    neg = report.times[report.min_eigenvalues < -1e-8]
    assert neg.size > 0
    assert neg.min() >= 1.0 - 0.01 and neg.max() + 0.01 <= 2.0 + 0.01
    inside = (report.times > 1.01) & (report.times + 0.01 < 1.99)
    assert np.all(report.min_eigenvalues[inside] < -1e-8)
    # dephasing Choi eigenvalue (1 - e^{2 g d}) / 2 * 2 with g = -1
    assert report.min_eigenvalues[inside].min() == pytest.approx(1 - np.exp(2 * 0.01), rel=1e-5)


def test_brute_force_choi_of_first_order_step():
    spec = dephasing_with_negative_window()
    gen = gksl_generator(spec, 1.5)
    eig = np.linalg.eigvalsh(choi_of(np.eye(4) + 0.01 * gen))
    assert eig.min() == pytest.approx(-0.02, abs=1e-12)


def test_min_eigenvalue_scales_linearly_in_delta():
    spec = full_rank_qubit()
    slopes = []
    for delta in (0.1, 0.01, 0.001):
        report = check_cp_divisibility(spec, grid=[0.5], delta=delta)
        slopes.append(report.min_eigenvalues[0] / delta)
    assert all(s > 0 for s in slopes)
    assert slopes[1] == pytest.approx(slopes[2], rel=0.02)
    assert slopes[0] == pytest.approx(slopes[2], rel=0.2)


def test_threaded_scan_preserves_order():
    spec = dephasing_with_negative_window()
    grid = np.linspace(0, 2.9, 30)
    a = check_cp_divisibility(spec, grid=grid, delta=0.05)
    b = check_cp_divisibility(spec, grid=grid, delta=0.05, workers=4)
    assert np.array_equal(a.times, b.times)
    assert np.allclose(a.min_eigenvalues, b.min_eigenvalues, atol=1e-14)


def test_divisibility_input_errors():
    spec = full_rank_qubit()
    with pytest.raises(ValidationError):
        check_cp_divisibility(spec, delta=0.0)
    with pytest.raises(ValidationError):
        check_cp_divisibility(spec, grid=[4.99], delta=0.1)


def test_generator_matches_rhs_on_identity_stack():
    spec = full_rank_qubit()
    gen = gksl_generator(spec, 0.7)
    for j in range(4):
        e = np.zeros(4, dtype=complex)
        e[j] = 1
        x = e.reshape(2, 2, order="F")
        assert np.max(np.abs(gen[:, j] - vec(lindblad_rhs(spec, 0.7, x)))) <= 1e-12
