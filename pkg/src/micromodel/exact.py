"""Exact single-excitation dynamics of a qubit coupled to a discretized zero-temperature bath.

Only lowering-type couplings J(t) = f(t) sigma_- are handled: the interaction
then conserves the excitation number and |e, vac> evolves inside the span of
|e, vac> and |g, 1_mu>.  Bath energies are measured from omega0, so omega0
enters only through the requirement that all modes sit at positive frequency.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bath import spectral_density
from .core import NumericalError, ValidationError, propagate_ode, trace_distance
from .lindblad import solve_lindblad
from .model import BathSpec, ModelSpec
from .redfield import solve_redfield, trajectory_distances

NORM_DRIFT_TOL = 1e-6
IMAGE_CLEARANCE = 10.0  # correlation times kept clear of the first bath revival


@dataclass(frozen=True)
class DiscretizedBath:
    omegas: np.ndarray
    couplings: np.ndarray
    omega0: float
    half_window: float
    lam: float

    @property
    def n_modes(self) -> int:
        return self.omegas.size

    @property
    def detunings(self) -> np.ndarray:
        return self.omegas - self.omega0

    @property
    def spacing(self) -> float:
        return 2 * self.half_window / self.n_modes

    @property
    def recurrence_time(self) -> float:
        return 2 * np.pi / self.spacing

    @property
    def valid_until(self) -> float:
        """Latest time before the periodic image of the bath correlation matters."""
        return self.recurrence_time - IMAGE_CLEARANCE / self.lam

    def correlation(self, tau) -> np.ndarray:
        """sum_mu |g_mu|^2 exp(-i (w_mu - w0) tau)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        return (np.abs(self.couplings) ** 2) @ np.exp(-1j * np.outer(self.detunings, tau))


def discretize(bath: BathSpec, n_modes: int, half_window: float) -> DiscretizedBath:
    """Midpoint grid of N modes on [w0 - W, w0 + W] with g_mu = sqrt(I(w_mu) dw)."""
    if n_modes < 2:
        raise ValidationError("need at least 2 bath modes")
    if not half_window > 0:
        raise ValidationError("half-window W must be positive")
    if half_window >= bath.omega0:
        raise ValidationError(f"half-window W = {half_window} >= omega0 = {bath.omega0} "
                              "would put modes at nonphysical frequencies")
    dw = 2 * half_window / n_modes
    if dw > bath.lam / 10:
        warnings.warn(f"mode spacing {dw:.3g} does not resolve lambda = {bath.lam:.3g}", stacklevel=2)
    omegas = bath.omega0 - half_window + (np.arange(n_modes) + 0.5) * dw
    return DiscretizedBath(omegas, np.sqrt(spectral_density(bath, omegas) * dw),
                           bath.omega0, half_window, bath.lam)


def _lowering_amplitude(spec: ModelSpec):
    """f(t) with J(t) = f(t) sigma_-, or raise if the model is outside the sector method."""
    if spec.dim != 2 or len(spec.channels) != 1:
        raise ValidationError("single-excitation solver needs a qubit with exactly one channel")
    if not spec.hamiltonian.is_zero:
        raise ValidationError("single-excitation solver works in the rotating frame: H_S must vanish")
    ch = spec.channels[0]
    for m, _ in ch.lindblad.terms:
        mask = np.ones((2, 2), dtype=bool)
        mask[0, 1] = False
        if np.any(m[mask] != 0):
            raise ValidationError("channel is not lowering-type (A must be proportional to sigma_-)")
    g0 = spec.bath.gamma0

    def f(t):
        rate = float(ch.rate(t))
        if rate < 0:
            raise ValidationError(f"negative rate at t = {t}")
        return math.sqrt(rate / g0) * ch.lindblad(t)[0, 1]

    return f


@dataclass
class SectorResult:
    grid: np.ndarray
    excited_amplitude: np.ndarray
    norm: np.ndarray

    @property
    def excited_population(self) -> np.ndarray:
        return np.abs(self.excited_amplitude) ** 2

    def states(self) -> np.ndarray:
        p = self.excited_population
        out = np.zeros((self.grid.size, 2, 2), dtype=complex)
        out[:, 0, 0] = 1 - p
        out[:, 1, 1] = p
        return out


def solve_single_excitation(spec: ModelSpec, bath: DiscretizedBath, grid: Sequence[float],
                            rtol: float = 1e-10, atol: float = 1e-12) -> SectorResult:
    """Schroedinger equation in the sector spanned by |e, vac> and |g, 1_mu>, from |e, vac>.

        i dc_e/dt  = f*(t) sum_mu g_mu c_mu
        i dc_mu/dt = (w_mu - w0) c_mu + f(t) g_mu* c_e
    """
    f = _lowering_amplitude(spec)
    grid = np.asarray(grid, dtype=float)
    if grid[-1] > bath.valid_until:
        raise ValidationError(f"grid ends at {grid[-1]:.4g} beyond the revival-free window "
                              f"{bath.valid_until:.4g} of the discretized bath")
    g = bath.couplings.astype(complex)
    det = bath.detunings

    def rhs(t, y):
        ft = f(t)
        out = np.empty_like(y)
        out[0] = -1j * np.conj(ft) * (g @ y[1:])
        out[1:] = -1j * (det * y[1:] + ft * g.conj() * y[0])
        return out

    y0 = np.zeros(bath.n_modes + 1, dtype=complex)
    y0[0] = 1.0
    ys = propagate_ode(rhs, y0, grid, rtol, atol)
    norm = np.sum(np.abs(ys) ** 2, axis=1)
    drift = float(np.max(np.abs(norm - 1)))
    if drift > NORM_DRIFT_TOL:
        raise NumericalError(f"sector norm drifted by {drift:.3e}")
    return SectorResult(grid, ys[:, 0], norm)


def jaynes_cummings_oracle(gamma0: float, lam: float, t):
    """|G(t)|^2 for dG/dt = -int_0^t (g0 lam/2) exp(-lam tau) G(t - tau) dtau, G(0) = 1."""
    t = np.asarray(t, dtype=float)
    disc = lam * lam - 2 * gamma0 * lam
    env = np.exp(-lam * t / 2)
    if disc > 0:
        # written as two decaying exponentials so large lam t does not overflow
        d = math.sqrt(disc)
        slow = 2 * gamma0 * lam / (lam + d)  # lam - d without cancellation
        g = 0.5 * (1 + lam / d) * np.exp(-slow * t / 2) + 0.5 * (1 - lam / d) * np.exp(-(lam + d) * t / 2)
    elif disc < 0:
        d = math.sqrt(-disc)
        g = env * (np.cos(d * t / 2) + lam / d * np.sin(d * t / 2))
    else:
        g = env * (1 + lam * t / 2)
    return (g * g)[()]


@dataclass
class ExactComparison:
    grid: np.ndarray
    exact_lindblad: np.ndarray
    exact_redfield: np.ndarray
    redfield_lindblad: np.ndarray
    exact: SectorResult

    @property
    def sups(self) -> dict[str, float]:
        return {"exact_lindblad": float(self.exact_lindblad.max()),
                "exact_redfield": float(self.exact_redfield.max()),
                "redfield_lindblad": float(self.redfield_lindblad.max())}


def compare_exact_vs_master(spec: ModelSpec, bath: DiscretizedBath, grid: Sequence[float]) -> ExactComparison:
    """Sup trace distances between the exact sector run, the target equation and Redfield."""
    grid = np.asarray(grid, dtype=float)
    exact = solve_single_excitation(spec, bath, grid)
    ex_states = exact.states()
    lind = solve_lindblad(spec, grid)
    red = solve_redfield(spec, grid, mode="closed")
    el = np.array([trace_distance(a, b, tol=1e-6) for a, b in zip(ex_states, lind.samples)])
    er = np.array([trace_distance(a, b, tol=1e-6) for a, b in zip(ex_states, red.samples)])
    rl = trajectory_distances(red, lind)
    cmp = ExactComparison(grid, el, er, rl, exact)
    s = cmp.sups
    if s["exact_redfield"] > s["exact_lindblad"] + s["redfield_lindblad"] + 1e-12:
        raise NumericalError("triangle inequality violated between exact, Redfield and Lindblad runs")
    return cmp
