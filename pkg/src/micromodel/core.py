"""Dense linear algebra for states, operators and superoperators, plus the ODE propagator.

All superoperators act on column-stacked operators: entry (i, j) of an n x n
operand maps to flat index ``j*n + i``.  With that convention

    vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

RTOL = 1e-9
ATOL = 1e-12
HERMITICITY_TOL = 1e-9
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-8
# solvers run the step control this much tighter than the configured rtol,
# since local error accumulates over a trajectory
STEP_MARGIN = 0.1


class NumericalError(RuntimeError):
    """Integrator or quadrature failure (step underflow, non-finite values, budget exhausted)."""


class ValidationError(ValueError):
    """Input that violates a structural contract (dimensions, Hermiticity, sign of rates)."""

    def __init__(self, message: str, diagnostics: Sequence[str] | None = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics) if diagnostics else [message]


@dataclass(frozen=True)
class Tolerances:
    rtol: float = RTOL
    atol: float = ATOL
    hermiticity: float = HERMITICITY_TOL
    trace: float = TRACE_TOL
    positivity: float = POSITIVITY_TOL

    def step_control(self, rtol: float | None = None, atol: float | None = None) -> tuple[float, float]:
        """(rtol, atol) for the integrator; explicit values are used as given."""
        return (self.rtol * STEP_MARGIN if rtol is None else rtol, self.atol if atol is None else atol)


# ---------------------------------------------------------------------------
# vectorization
# ---------------------------------------------------------------------------


def vec(matrix: np.ndarray) -> np.ndarray:
    """Column-stack an n x n matrix into a length n^2 vector."""
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector: np.ndarray, n: int | None = None) -> np.ndarray:
    vector = np.asarray(vector)
    if n is None:
        n = int(round(np.sqrt(vector.size)))
        if n * n != vector.size:
            raise ValidationError(f"cannot unstack a vector of length {vector.size} into a square matrix")
    return vector.reshape((n, n), order="F")


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator of X -> A X."""
    return np.kron(np.eye(a.shape[0]), a)


def spost(b: np.ndarray) -> np.ndarray:
    """Superoperator of X -> X B."""
    return np.kron(b.T, np.eye(b.shape[0]))


def sprepost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of X -> A X B."""
    return np.kron(b.T, a)


def apply_superop(superop: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    return unvec(superop @ vec(x), n)


def superop_dim(superop: np.ndarray) -> int:
    superop = np.asarray(superop)
    if superop.ndim != 2 or superop.shape[0] != superop.shape[1]:
        raise ValidationError(f"superoperator must be square, got shape {superop.shape}")
    n = int(round(np.sqrt(superop.shape[0])))
    if n * n != superop.shape[0]:
        raise ValidationError(f"superoperator size {superop.shape[0]} is not a perfect square")
    return n


def is_trace_preserving(superop: np.ndarray, tol: float = TRACE_TOL) -> bool:
    n = superop_dim(superop)
    trace_row = vec(np.eye(n)).conj()
    return bool(np.max(np.abs(trace_row @ superop - trace_row)) <= tol)


# ---------------------------------------------------------------------------
# Hermitian spectra and state checks
# ---------------------------------------------------------------------------


def hermiticity_error(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T)))


def _check_finite(*arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError("non-finite matrix entries")


def hermitian_eigvals(m: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Eigenvalues of a matrix that must be Hermitian within ``tol``.

    The matrix is symmetrized before diagonalization; a larger anti-Hermitian
    part is an error rather than something to be silently discarded.
    """
    m = np.asarray(m, dtype=complex)
    _check_finite(m)
    err = hermiticity_error(m)
    if err > tol:
        raise ValidationError(f"matrix is not Hermitian (max |M - M^dag| = {err:.3e} > {tol:.1e})")
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def state_diagnostics(rho: np.ndarray) -> tuple[float, float, float]:
    """(trace error, Hermiticity error, minimum eigenvalue) without raising."""
    rho = np.asarray(rho)
    trace_err = float(abs(np.trace(rho) - 1.0))
    herm_err = hermiticity_error(rho)
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    return trace_err, herm_err, min_eig


def check_density_matrix(rho: np.ndarray, tol: Tolerances = Tolerances()) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 2:
        raise ValidationError(f"density matrix must be square with dim >= 2, got shape {rho.shape}")
    _check_finite(rho)
    trace_err, herm_err, min_eig = state_diagnostics(rho)
    if trace_err > tol.trace:
        raise ValidationError(f"density matrix trace deviates from 1 by {trace_err:.3e}")
    if herm_err > tol.hermiticity:
        raise ValidationError(f"density matrix is not Hermitian (error {herm_err:.3e})")
    if min_eig < -tol.positivity:
        raise ValidationError(f"density matrix has negative eigenvalue {min_eig:.3e}")
    return rho


def trace_distance(a: np.ndarray, b: np.ndarray, tol: float = HERMITICITY_TOL) -> float:
    """Half the trace norm of ``a - b``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    _check_finite(a, b)
    return float(0.5 * np.sum(np.abs(hermitian_eigvals(a - b, tol))))


# ---------------------------------------------------------------------------
# Choi representation
# ---------------------------------------------------------------------------


def choi_of(superop: np.ndarray) -> np.ndarray:
    """Choi matrix C = sum_ij E_ij kron Phi(E_ij); Tr C = n for trace-preserving maps."""
    superop = np.asarray(superop, dtype=complex)
    n = superop_dim(superop)
    choi = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            e_ij = np.zeros((n, n), dtype=complex)
            e_ij[i, j] = 1.0
            # column j*n+i of the superoperator is Phi(E_ij), already stacked
            choi += np.kron(e_ij, unvec(superop[:, j * n + i], n))
    return choi


@dataclass(frozen=True)
class CPReport:
    completely_positive: bool
    min_eigenvalue: float

    def __bool__(self) -> bool:
        return self.completely_positive


def is_completely_positive(choi: np.ndarray, tol: float = POSITIVITY_TOL,
                           hermiticity_tol: float = HERMITICITY_TOL) -> CPReport:
    min_eig = float(hermitian_eigvals(choi, hermiticity_tol)[0])
    return CPReport(min_eig >= -tol, min_eig)


# ---------------------------------------------------------------------------
# ODE propagation
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Time grid plus samples, with per-sample state diagnostics when samples are states."""

    grid: np.ndarray
    samples: np.ndarray
    trace_error: np.ndarray = field(default_factory=lambda: np.empty(0))
    hermiticity_error: np.ndarray = field(default_factory=lambda: np.empty(0))
    min_eigenvalue: np.ndarray = field(default_factory=lambda: np.empty(0))
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.size and self.grid[0] != 0.0:
            raise ValidationError("trajectory grid must start at t = 0")
        if len(self.samples) != len(self.grid):
            raise ValidationError("samples length must equal grid length")

    @classmethod
    def of_states(cls, grid: np.ndarray, states: np.ndarray, tol: Tolerances = Tolerances()) -> "Trajectory":
        diag = np.array([state_diagnostics(r) for r in states]).reshape(-1, 3)
        traj = cls(grid, np.asarray(states), diag[:, 0], diag[:, 1], diag[:, 2])
        if np.any(traj.trace_error > tol.trace):
            traj.flags.append(f"trace error up to {traj.trace_error.max():.3e}")
        if np.any(traj.hermiticity_error > tol.hermiticity):
            traj.flags.append(f"Hermiticity error up to {traj.hermiticity_error.max():.3e}")
        if np.any(traj.min_eigenvalue < -tol.positivity):
            traj.flags.append(f"negative eigenvalue down to {traj.min_eigenvalue.min():.3e}")
        return traj

    def population(self, index: int) -> np.ndarray:
        return self.samples[:, index, index].real


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValidationError("time grid must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(grid)):
        raise ValidationError("time grid contains non-finite values")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("time grid must be strictly increasing")
    return grid


def _rk4_fixed(f, grid, y0, step):
    out = np.empty((grid.size, y0.size), dtype=complex)
    y = y0.copy()
    out[0] = y
    for i in range(grid.size - 1):
        t0, t1 = grid[i], grid[i + 1]
        m = max(1, int(np.ceil((t1 - t0) / step - 1e-12)))
        h = (t1 - t0) / m
        for s in range(m):
            t = t0 + s * h
            k1 = f(t, y)
            k2 = f(t + h / 2, y + h / 2 * k1)
            k3 = f(t + h / 2, y + h / 2 * k2)
            k4 = f(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return out


def propagate_ode(rhs: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray,
                  grid: Sequence[float], rtol: float = RTOL, atol: float = ATOL,
                  fixed_step: float | None = None) -> np.ndarray:
    """Integrate dy/dt = rhs(t, y) from grid[0] and return y at every grid point.

    Adaptive Dormand-Prince 5(4) with dense output by default.  ``fixed_step``
    switches to classical RK4 with at most that step size, landing exactly on
    each grid point.  Returns an array of shape (len(grid), len(y0)).
    """
    grid = _check_grid(grid)
    y0 = np.asarray(y0, dtype=complex).ravel()

    def f(t, y):
        dy = rhs(t, y)
        if not np.all(np.isfinite(dy)):
            raise NumericalError(f"non-finite right-hand side at t = {t:.6g}")
        return dy

    if grid.size == 1:
        return y0[None, :].copy()
    if fixed_step is not None:
        if fixed_step <= 0:
            raise ValidationError("fixed step must be positive")
        return _rk4_fixed(f, grid, y0, fixed_step)

    sol = solve_ivp(f, (grid[0], grid[-1]), y0, method="RK45", t_eval=grid,
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        raise NumericalError(f"integration failed: {sol.message}")
    return sol.y.T
