"""Target time-local master equation: generator, trajectories, propagators, CP-divisibility scan."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (Trajectory, ValidationError, choi_of, is_completely_positive, propagate_ode,
                   spost, spre, sprepost, unvec, vec)
from .model import ModelSpec

DEFAULT_DELTA = 0.01


def _rates_and_ops(spec: ModelSpec, t: float):
    for ch in spec.channels:
        yield float(ch.rate(t)), ch.lindblad(t)


def gksl_generator(spec: ModelSpec, t: float) -> np.ndarray:
    """Column-stacked superoperator of L(t) rho = -i[H, rho] + sum_k g_k (A rho A^+ - {A^+A, rho}/2)."""
    n = spec.dim
    h = spec.hamiltonian(t)
    gen = -1j * (spre(h) - spost(h))
    for rate, a in _rates_and_ops(spec, t):
        if rate == 0.0:
            continue
        ada = a.conj().T @ a
        gen += rate * (sprepost(a, a.conj().T) - 0.5 * spre(ada) - 0.5 * spost(ada))
    return gen.reshape(n * n, n * n)


def lindblad_rhs(spec: ModelSpec, t: float, rho: np.ndarray) -> np.ndarray:
    h = spec.hamiltonian(t)
    drho = -1j * (h @ rho - rho @ h)
    for rate, a in _rates_and_ops(spec, t):
        if rate == 0.0:
            continue
        ad = a.conj().T
        ada = ad @ a
        drho += rate * (a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada))
    return drho


def solve_lindblad(spec: ModelSpec, grid: Sequence[float], rho0: np.ndarray | None = None,
                   rtol: float | None = None, atol: float | None = None,
                   fixed_step: float | None = None) -> Trajectory:
    """Integrate the master equation; invariant violations are flagged, not raised."""
    grid = _grid_in_horizon(spec, grid)
    n = spec.dim
    rho0 = spec.rho0() if rho0 is None else np.asarray(rho0, dtype=complex)
    tol = spec.tolerances

    def rhs(t, y):
        return vec(lindblad_rhs(spec, t, unvec(y, n)))

    ys = propagate_ode(rhs, vec(rho0), grid, *tol.step_control(rtol, atol), fixed_step)
    states = np.array([unvec(y, n) for y in ys])
    return Trajectory.of_states(grid, states, tol)


def _grid_in_horizon(spec: ModelSpec, grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or grid[0] != 0.0:
        raise ValidationError("time grid must start at 0")
    if grid[-1] > spec.horizon * (1 + 1e-12):
        raise ValidationError(f"time grid ends at {grid[-1]} beyond the horizon {spec.horizon}")
    return grid


def propagator(spec: ModelSpec, s: float, t: float, rtol: float | None = None,
               atol: float | None = None) -> np.ndarray:
    """Phi(t, s) from dPhi/dt = L(t) Phi, Phi(s, s) = identity."""
    if not 0 <= s <= t <= spec.horizon * (1 + 1e-12):
        raise ValidationError(f"propagator needs 0 <= s <= t <= horizon, got s={s}, t={t}")
    n2 = spec.dim ** 2
    if t == s:
        return np.eye(n2, dtype=complex)
    tol = spec.tolerances

    def rhs(tt, y):
        return (gksl_generator(spec, tt) @ y.reshape(n2, n2)).ravel()

    ys = propagate_ode(rhs, np.eye(n2, dtype=complex).ravel(), [s, t], *tol.step_control(rtol, atol))
    return ys[-1].reshape(n2, n2)


@dataclass
class DivisibilityReport:
    delta: float
    times: np.ndarray
    min_eigenvalues: np.ndarray
    tol: float
    negative_intervals: list[tuple[float, float]] = field(default_factory=list)

    @property
    def cp_divisible(self) -> bool:
        return bool(np.all(self.min_eigenvalues >= -self.tol))

    @property
    def verdict(self) -> str:
        return "CP-divisible" if self.cp_divisible else "NOT CP-divisible"


def check_cp_divisibility(spec: ModelSpec, grid: Sequence[float] | None = None,
                          delta: float = DEFAULT_DELTA, tol: float | None = None,
                          workers: int = 1) -> DivisibilityReport:
    """Minimum Choi eigenvalue of Phi(t + delta, t) for every grid point t."""
    if not delta > 0:
        raise ValidationError("divisibility interval delta must be positive")
    tol = spec.tolerances.positivity if tol is None else tol
    if grid is None:
        grid = np.arange(0.0, spec.horizon - delta * (1 - 1e-9), delta)
    grid = np.asarray(grid, dtype=float)
    if grid.size and (grid[0] < 0 or grid[-1] + delta > spec.horizon * (1 + 1e-12)):
        raise ValidationError("divisibility intervals must lie within [0, horizon]")

    def min_eig(t):
        return is_completely_positive(choi_of(propagator(spec, t, t + delta)), tol).min_eigenvalue

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            eigs = np.array(list(pool.map(min_eig, grid)))
    else:
        eigs = np.array([min_eig(t) for t in grid])
    report = DivisibilityReport(delta, grid, eigs, tol)
    report.negative_intervals = [(float(t), float(t + delta)) for t, e in zip(grid, eigs) if e < -tol]
    return report
