"""Second-order (Redfield / TCL2) reduced dynamics of the bosonic-bath model.

In the interaction picture the kernel integral is regrouped through the
memory coefficients

    S_k(t) = int_0^t dtau c(tau) J~_k(t - tau),

giving

    d rho~/dt = sum_k  S rho J~^+ + J~ rho S^+ - J~^+ S rho - rho S^+ J~.

For the Lorentzian closed-form correlation c(tau) = (g0 lam/2) exp(-lam tau)
the coefficients obey dS/dt = (g0 lam/2) J~ - lam S and are integrated
jointly with the state.  Any other correlation is convolved on a uniform
history grid.  In the delta limit S = (g0/2) J~, which reproduces the target
generator exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from .bath import CorrelationFunction, default_mode
from .core import Trajectory, ValidationError, propagate_ode, trace_distance
from .lindblad import _grid_in_horizon, solve_lindblad
from .model import ModelSpec, dressed_coupling

PATHS = ("auxiliary_ode", "history_quadrature", "delta")


# ---------------------------------------------------------------------------
# free evolution and interaction-picture couplings
# ---------------------------------------------------------------------------


def _unitary_rhs(spec: ModelSpec):
    n = spec.dim

    def rhs(t, y):
        return (-1j * spec.hamiltonian(t) @ y.reshape(n, n)).ravel()

    return rhs


def system_propagators(spec: ModelSpec, grid: Sequence[float]) -> np.ndarray:
    """V_S(t) on a grid starting at 0, from dV/dt = -i H_S(t) V."""
    n = spec.dim
    grid = np.asarray(grid, dtype=float)
    if spec.hamiltonian.is_zero:
        return np.broadcast_to(np.eye(n, dtype=complex), (grid.size, n, n)).copy()
    if grid[0] != 0.0:
        grid = np.concatenate([[0.0], grid])
        return system_propagators(spec, grid)[1:]
    tol = spec.tolerances
    ys = propagate_ode(_unitary_rhs(spec), np.eye(n, dtype=complex).ravel(), grid,
                       min(tol.rtol, 1e-11), min(tol.atol, 1e-13))
    return ys.reshape(-1, n, n)


def system_propagator(spec: ModelSpec, t: float) -> np.ndarray:
    """Time-ordered exponential of -i int_0^t H_S."""
    if not 0 <= t <= spec.horizon * (1 + 1e-12):
        raise ValidationError(f"t = {t} outside [0, horizon]")
    if t == 0:
        return np.eye(spec.dim, dtype=complex)
    return system_propagators(spec, [0.0, t])[-1]


def _rotate_in(v: np.ndarray, op: np.ndarray) -> np.ndarray:
    return v.conj().T @ op @ v


def interaction_picture_coupling(spec: ModelSpec, k: int, t: float) -> np.ndarray:
    """J~_k(t) = V_S^+(t) J_k(t) V_S(t)."""
    return _rotate_in(system_propagator(spec, t), dressed_coupling(spec, k, t))


def interaction_couplings_on_grid(spec: ModelSpec, grid: Sequence[float]) -> list[np.ndarray]:
    """One array of shape (len(grid), n, n) per channel."""
    grid = np.asarray(grid, dtype=float)
    vs = system_propagators(spec, grid)
    out = []
    for k in range(len(spec.channels)):
        js = np.array([dressed_coupling(spec, k, t) for t in grid])
        out.append(np.einsum("tji,tjk,tkl->til", vs.conj(), js, vs))
    return out


# ---------------------------------------------------------------------------
# memory coefficients
# ---------------------------------------------------------------------------


def _gregory_weights(m: int) -> np.ndarray:
    """Endpoint-corrected trapezoid weights on m+1 equispaced nodes (fourth order for m >= 5)."""
    w = np.ones(m + 1)
    if m >= 5:
        ends = np.array([3 / 8, 7 / 6, 23 / 24])
        w[:3] = ends
        w[-3:] = ends[::-1]
    else:
        w[0] = w[-1] = 0.5
    return w


def history_step(spec: ModelSpec, correlation: CorrelationFunction) -> float:
    """Uniform history spacing: 20 points per bath correlation time, 100 per unit time.

    With the remainder included the grid must also resolve exp(i omega0 tau).
    """
    bath = spec.bath
    h = min(0.05 / bath.lam, 0.01 / bath.gamma0)
    if correlation.includes_remainder:
        h = min(h, 0.1 / bath.omega0)
    return h


@dataclass
class MemoryHistory:
    """S_k sampled on a uniform grid and splined for evaluation between nodes."""

    grid: np.ndarray
    values: list[np.ndarray]

    def __post_init__(self):
        self._splines = [CubicSpline(self.grid, v, axis=0) for v in self.values]

    def __call__(self, k: int, t: float) -> np.ndarray:
        if t > self.grid[-1] * (1 + 1e-12) or t < 0:
            raise ValidationError(f"history buffer does not cover t = {t}")
        return self._splines[k](t)


def _convolve_history(c: np.ndarray, jt: np.ndarray, h: float) -> np.ndarray:
    """S_m = h sum_j w_j^(m) c_j J_{m-j} for every m, with Gregory end corrections."""
    npts = c.size
    flat = jt.reshape(npts, -1)
    full = fftconvolve(c[:, None], flat, axes=0)[:npts]
    out = np.empty_like(flat)
    out[0] = 0.0
    for m in range(1, npts):
        if m < 5:
            w = _gregory_weights(m)
            out[m] = h * np.einsum("j,j,jx->x", w, c[: m + 1], flat[m::-1])
            continue
        corr = np.array([3 / 8, 7 / 6, 23 / 24]) - 1.0
        s = full[m].copy()
        s += corr[0] * c[0] * flat[m] + corr[1] * c[1] * flat[m - 1] + corr[2] * c[2] * flat[m - 2]
        s += corr[0] * c[m] * flat[0] + corr[1] * c[m - 1] * flat[1] + corr[2] * c[m - 2] * flat[2]
        out[m] = h * s
    return out.reshape(jt.shape)


def memory_history(spec: ModelSpec, correlation: CorrelationFunction, t_end: float | None = None,
                   step: float | None = None) -> MemoryHistory:
    """S_k on the uniform history grid by convolution with any pointwise correlation."""
    t_end = spec.horizon if t_end is None else t_end
    h = step or history_step(spec, correlation)
    m = max(8, int(math.ceil(t_end / h)))
    grid = np.linspace(0.0, t_end, m + 1)
    h = grid[1] - grid[0]
    c = np.asarray(correlation(grid), dtype=complex)
    jts = interaction_couplings_on_grid(spec, grid)
    return MemoryHistory(grid, [_convolve_history(c, jt, h) for jt in jts])


def _check_path(spec: ModelSpec, correlation: CorrelationFunction, path: str) -> None:
    if path not in PATHS:
        raise ValidationError(f"unknown memory path {path!r}; choose from {PATHS}")
    if path == "auxiliary_ode" and not (
            spec.bath.family == "lorentzian" and correlation.mode == "closed"):
        raise ValidationError("auxiliary_ode path needs the lorentzian closed-form correlation")
    if path == "delta" and correlation.mode != "delta":
        raise ValidationError("delta path needs the delta correlation mode")
    if path == "history_quadrature" and correlation.mode == "delta":
        raise ValidationError("delta correlation has no history representation")


def choose_path(spec: ModelSpec, correlation: CorrelationFunction) -> str:
    if correlation.mode == "delta":
        return "delta"
    if correlation.mode == "closed" and spec.bath.family == "lorentzian":
        return "auxiliary_ode"
    return "history_quadrature"


def memory_coefficient(spec: ModelSpec, k: int, t: float, path: str = "auxiliary_ode",
                       correlation: CorrelationFunction | None = None) -> np.ndarray:
    """S_k(t) = int_0^t c(tau) J~_k(t - tau) dtau along one of the two computational paths."""
    correlation = correlation or CorrelationFunction(spec.bath, "closed")
    _check_path(spec, correlation, path)
    if not 0 <= t <= spec.horizon * (1 + 1e-12):
        raise ValidationError(f"t = {t} outside [0, horizon]")
    if not 0 <= k < len(spec.channels):
        raise ValidationError(f"channel index {k} out of range")
    if t == 0:
        return np.zeros((spec.dim, spec.dim), dtype=complex)
    if path == "delta":
        return 0.5 * spec.bath.gamma0 * interaction_picture_coupling(spec, k, t)
    if path == "history_quadrature":
        return memory_history(spec, correlation, t_end=t)(k, t)
    n = spec.dim
    g0, lam = spec.bath.gamma0, spec.bath.lam
    urhs = _unitary_rhs(spec)

    def rhs(tt, y):
        v = y[: n * n].reshape(n, n)
        s = y[n * n:].reshape(n, n)
        jt = _rotate_in(v, dressed_coupling(spec, k, tt))
        return np.concatenate([urhs(tt, y[: n * n]), (0.5 * g0 * lam * jt - lam * s).ravel()])

    y0 = np.concatenate([np.eye(n, dtype=complex).ravel(), np.zeros(n * n, dtype=complex)])
    tol = spec.tolerances
    ys = propagate_ode(rhs, y0, [0.0, t], *tol.step_control())
    return ys[-1, n * n:].reshape(n, n)


# ---------------------------------------------------------------------------
# Redfield integration
# ---------------------------------------------------------------------------


def redfield_rhs(rho: np.ndarray, couplings: Sequence[np.ndarray], memories: Sequence[np.ndarray]) -> np.ndarray:
    """Regrouped second-order generator for given J~_k(t) and S_k(t)."""
    out = np.zeros_like(rho)
    for jt, s in zip(couplings, memories):
        jd = jt.conj().T
        sd = s.conj().T
        out += s @ rho @ jd + jt @ rho @ sd - jd @ s @ rho - rho @ sd @ jt
    return out


def solve_redfield(spec: ModelSpec, grid: Sequence[float], mode: str | None = None,
                   rho0: np.ndarray | None = None, path: str | None = None,
                   rtol: float | None = None, atol: float | None = None,
                   fixed_step: float | None = None, history_step_override: float | None = None) -> Trajectory:
    """Integrate the second-order equation and return Schroedinger-picture states.

    Positivity is not enforced; the minimum eigenvalue of every sample is recorded.
    """
    grid = _grid_in_horizon(spec, grid)
    correlation = CorrelationFunction(spec.bath, mode or default_mode(spec.bath))
    path = path or choose_path(spec, correlation)
    _check_path(spec, correlation, path)
    n, nn, nch = spec.dim, spec.dim ** 2, len(spec.channels)
    g0, lam = spec.bath.gamma0, spec.bath.lam
    rho0 = spec.rho0() if rho0 is None else np.asarray(rho0, dtype=complex)
    tol = spec.tolerances
    urhs = _unitary_rhs(spec)
    history = None
    if path == "history_quadrature":
        history = memory_history(spec, correlation, t_end=grid[-1], step=history_step_override)

    def rhs(t, y):
        v = y[:nn].reshape(n, n)
        rho = y[nn: 2 * nn].reshape(n, n)
        jts = [_rotate_in(v, dressed_coupling(spec, k, t)) for k in range(nch)]
        parts = [urhs(t, y[:nn])]
        if path == "auxiliary_ode":
            ss = [y[(2 + k) * nn: (3 + k) * nn].reshape(n, n) for k in range(nch)]
        elif path == "history_quadrature":
            ss = [history(k, t) for k in range(nch)]
        else:
            ss = [0.5 * g0 * jt for jt in jts]
        parts.append(redfield_rhs(rho, jts, ss).ravel())
        if path == "auxiliary_ode":
            parts += [(0.5 * g0 * lam * jt - lam * s).ravel() for jt, s in zip(jts, ss)]
        return np.concatenate(parts)

    blocks = [np.eye(n, dtype=complex).ravel(), rho0.ravel()]
    if path == "auxiliary_ode":
        blocks += [np.zeros(nn, dtype=complex)] * nch
    ys = propagate_ode(rhs, np.concatenate(blocks), grid, *tol.step_control(rtol, atol), fixed_step)
    vs = ys[:, :nn].reshape(-1, n, n)
    rhos = ys[:, nn: 2 * nn].reshape(-1, n, n)
    states = np.einsum("tij,tjk,tlk->til", vs, rhos, vs.conj())
    # second-order dynamics may leave the positive cone; record, never correct
    loose = replace(tol, hermiticity=max(tol.hermiticity, 1e-8), trace=max(tol.trace, 1e-8), positivity=np.inf)
    traj = Trajectory.of_states(grid, states, loose)
    neg = traj.min_eigenvalue.min()
    if neg < -tol.positivity:
        traj.flags.append(f"positivity violated (min eigenvalue {neg:.3e}); second-order truncation")
    return traj


@dataclass
class Comparison:
    grid: np.ndarray
    distances: np.ndarray
    reference: Trajectory
    candidate: Trajectory

    @property
    def sup(self) -> float:
        return float(self.distances.max())


def trajectory_distances(a: Trajectory, b: Trajectory) -> np.ndarray:
    return np.array([trace_distance(x, y, tol=1e-6) for x, y in zip(a.samples, b.samples)])


def compare_to_lindblad(spec: ModelSpec, grid: Sequence[float], mode: str | None = None,
                        **kwargs) -> Comparison:
    """Pointwise and sup trace distance between Redfield and target Lindblad trajectories."""
    lind = solve_lindblad(spec, grid)
    red = solve_redfield(spec, grid, mode=mode, **kwargs)
    return Comparison(np.asarray(grid, dtype=float), trajectory_distances(lind, red), lind, red)
