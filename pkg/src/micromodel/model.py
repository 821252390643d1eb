"""Model description: schedules, channels, bath parameters, JSON parsing and scale checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .core import Tolerances, ValidationError, check_density_matrix, hermiticity_error

RATE_SAMPLES = 4096
TAU_J_SAMPLES = 2048
SCALE_SEPARATION = 10.0

FAMILIES = ("lorentzian", "gaussian", "sinc_squared")


# ---------------------------------------------------------------------------
# scalar schedules
# ---------------------------------------------------------------------------


class ScalarSchedule:
    """Real function of time.  Subclasses are frozen dataclasses."""

    type: str = ""

    def __call__(self, t):
        raise NotImplementedError

    def critical_times(self, horizon: float) -> np.ndarray:
        """Points in [0, horizon] where extrema can sit, beyond the endpoints."""
        return np.empty(0)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def minimum(self, horizon: float) -> tuple[float, float]:
        """Sampled minimum on [0, horizon] as (value, time)."""
        ts = np.concatenate([np.linspace(0.0, horizon, RATE_SAMPLES), self.critical_times(horizon)])
        vals = np.asarray(self(ts), dtype=float)
        i = int(np.argmin(vals))
        return float(vals[i]), float(ts[i])

    def maximum(self, horizon: float) -> float:
        ts = np.concatenate([np.linspace(0.0, horizon, RATE_SAMPLES), self.critical_times(horizon)])
        return float(np.max(self(ts)))


@dataclass(frozen=True)
class Constant(ScalarSchedule):
    value: float
    type = "constant"

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)[()]

    def to_dict(self):
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class Sinusoidal(ScalarSchedule):
    """offset + amplitude * sin(frequency * t + phase)"""

    offset: float
    amplitude: float
    frequency: float
    phase: float = 0.0
    type = "sinusoidal"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return (self.offset + self.amplitude * np.sin(self.frequency * t + self.phase))[()]

    def critical_times(self, horizon):
        if self.frequency == 0.0:
            return np.empty(0)
        nu = abs(self.frequency)
        period = 2 * math.pi / nu
        out = []
        for target in (math.pi / 2, -math.pi / 2):
            # solve frequency*t + phase = target + 2 pi m
            base = (target - self.phase) / self.frequency
            m_lo = math.floor((0.0 - base) / period) - 1
            m_hi = math.ceil((horizon - base) / period) + 1
            for m in range(m_lo, m_hi + 1):
                tc = base + m * period
                if 0.0 <= tc <= horizon:
                    out.append(tc)
        return np.array(out)

    def to_dict(self):
        return {"type": "sinusoidal", "offset": self.offset, "amplitude": self.amplitude,
                "frequency": self.frequency, "phase": self.phase}


@dataclass(frozen=True)
class Exponential(ScalarSchedule):
    """amplitude * exp(-decay * t) + offset"""

    amplitude: float
    decay: float
    offset: float = 0.0
    type = "exponential"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return (self.amplitude * np.exp(-self.decay * t) + self.offset)[()]

    def to_dict(self):
        return {"type": "exponential", "amplitude": self.amplitude, "decay": self.decay,
                "offset": self.offset}


@dataclass(frozen=True)
class Polynomial(ScalarSchedule):
    """Ascending coefficients: c0 + c1 t + c2 t^2 + ..."""

    coefficients: tuple[float, ...]
    type = "polynomial"

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), self.coefficients)[()]

    def critical_times(self, horizon):
        if len(self.coefficients) < 3:
            return np.empty(0)
        roots = np.polynomial.polynomial.polyroots(np.polynomial.polynomial.polyder(self.coefficients))
        real = roots[np.abs(roots.imag) < 1e-12].real
        return real[(real >= 0.0) & (real <= horizon)]

    def to_dict(self):
        return {"type": "polynomial", "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class Tabulated(ScalarSchedule):
    """Monotone cubic (PCHIP) interpolation through (times, values)."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    type = "tabulated"

    def __post_init__(self):
        if len(self.times) != len(self.values) or len(self.times) < 2:
            raise ValidationError("tabulated schedule needs >= 2 knots and equal-length times/values")
        if np.any(np.diff(self.times) <= 0):
            raise ValidationError("tabulated schedule times must be strictly increasing")

    @cached_property
    def _interp(self):
        return PchipInterpolator(np.array(self.times), np.array(self.values), extrapolate=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise ValidationError(f"tabulated schedule evaluated outside [{self.times[0]}, {self.times[-1]}]")
        return self._interp(t)[()]

    def critical_times(self, horizon):
        # PCHIP is monotone between knots, so extrema sit on knots
        knots = np.array(self.times)
        return knots[(knots >= 0.0) & (knots <= horizon)]

    def to_dict(self):
        return {"type": "tabulated", "times": list(self.times), "values": list(self.values)}


_SCHEDULE_FIELDS = {
    "constant": (Constant, {"value"}, set()),
    "sinusoidal": (Sinusoidal, {"offset", "amplitude", "frequency"}, {"phase"}),
    "exponential": (Exponential, {"amplitude", "decay"}, {"offset"}),
    "polynomial": (Polynomial, {"coefficients"}, set()),
    "tabulated": (Tabulated, {"times", "values"}, set()),
}


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{where}: non-finite number")
    return float(value)


def schedule_from_dict(doc: Any, where: str = "schedule") -> ScalarSchedule:
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: schedule must be an object")
    kind = doc.get("type")
    if kind not in _SCHEDULE_FIELDS:
        raise ValidationError(f"{where}: unknown schedule type {kind!r}")
    cls, required, optional = _SCHEDULE_FIELDS[kind]
    keys = set(doc) - {"type"}
    if missing := required - keys:
        raise ValidationError(f"{where}: missing {sorted(missing)} for {kind} schedule")
    if unknown := keys - required - optional:
        raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key in keys:
        if key in ("coefficients", "times", "values"):
            if not isinstance(doc[key], list) or not doc[key]:
                raise ValidationError(f"{where}.{key}: expected a non-empty list")
            kwargs[key] = tuple(_number(v, f"{where}.{key}") for v in doc[key])
        else:
            kwargs[key] = _number(doc[key], f"{where}.{key}")
    return cls(**kwargs)


# ---------------------------------------------------------------------------
# operator schedules, channels, bath
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OperatorSchedule:
    """sum_i schedule_i(t) * matrix_i"""

    terms: tuple[tuple[np.ndarray, ScalarSchedule], ...]
    dim: int

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for matrix, sched in self.terms:
            out += float(sched(t)) * matrix
        return out

    @property
    def is_zero(self) -> bool:
        return all(not np.any(m) for m, _ in self.terms)

    def __eq__(self, other):
        if not isinstance(other, OperatorSchedule) or self.dim != other.dim:
            return NotImplemented if not isinstance(other, OperatorSchedule) else False
        return len(self.terms) == len(other.terms) and all(
            np.array_equal(m1, m2) and s1 == s2 for (m1, s1), (m2, s2) in zip(self.terms, other.terms))

    @classmethod
    def constant(cls, matrix: np.ndarray) -> "OperatorSchedule":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(((matrix, Constant(1.0)),), matrix.shape[0])


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    lindblad: OperatorSchedule
    rate: ScalarSchedule

    def __eq__(self, other):
        if not isinstance(other, ChannelSpec):
            return NotImplemented
        return self.lindblad == other.lindblad and self.rate == other.rate


@dataclass(frozen=True)
class BathSpec:
    """Spectral density family and its scales.

    ``lam`` is the spectral width and ``omega0`` the resonance.  For
    ``family == "linear_combination"`` the components are (family, weight)
    pairs sharing gamma0, lam and omega0.
    """

    family: str = "lorentzian"
    gamma0: float = 1.0
    lam: float = 100.0
    omega0: float = 1e4
    include_remainder: bool = False
    components: tuple[tuple[str, float], ...] = ()
    unnormalized_gaussian: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES + ("linear_combination",):
            raise ValidationError(f"unknown spectral family {self.family!r}")
        for name in ("gamma0", "lam", "omega0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"bath parameter {name} must be positive, got {v}")
        if self.family == "linear_combination":
            if not self.components:
                raise ValidationError("linear_combination bath needs at least one component")
            for fam, w in self.components:
                if fam not in FAMILIES:
                    raise ValidationError(f"unknown component family {fam!r}")
                if not w > 0:
                    raise ValidationError("linear-combination weights must be positive")
        elif self.components:
            raise ValidationError("components are only allowed for linear_combination baths")

    def terms(self) -> tuple[tuple[str, float], ...]:
        if self.family == "linear_combination":
            return self.components
        return ((self.family, 1.0),)

    def replace(self, **changes) -> "BathSpec":
        from dataclasses import replace
        return replace(self, **changes)

    def to_dict(self) -> dict:
        doc = {"family": self.family, "gamma0": self.gamma0, "lambda": self.lam,
               "omega0": self.omega0, "include_remainder": self.include_remainder}
        if self.components:
            doc["components"] = [{"family": f, "weight": w} for f, w in self.components]
        if self.unnormalized_gaussian:
            doc["unnormalized_gaussian"] = True
        return doc


@dataclass(frozen=True, eq=False)
class ModelSpec:
    dim: int
    hamiltonian: OperatorSchedule
    channels: tuple[ChannelSpec, ...]
    bath: BathSpec
    horizon: float
    tolerances: Tolerances = field(default_factory=Tolerances)
    initial_state: np.ndarray | None = None
    allow_negative_rates: bool = False

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return serialize_model(self) == serialize_model(other)

    def rho0(self) -> np.ndarray:
        """Configured initial state, or the projector on the largest basis index."""
        if self.initial_state is not None:
            return np.array(self.initial_state, dtype=complex)
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        rho[-1, -1] = 1.0
        return rho

    def replace(self, **changes) -> "ModelSpec":
        from dataclasses import replace
        return replace(self, **changes)

    def with_bath(self, **changes) -> "ModelSpec":
        return self.replace(bath=self.bath.replace(**changes))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_model(spec: ModelSpec) -> ModelSpec:
    """Check ModelSpec invariants; raises ValidationError listing every problem found."""
    problems: list[str] = []
    n = spec.dim
    tol = spec.tolerances
    if not isinstance(n, int) or n < 2:
        raise ValidationError(f"dim must be an integer >= 2, got {n!r}")
    if not (math.isfinite(spec.horizon) and spec.horizon > 0):
        problems.append(f"horizon must be positive, got {spec.horizon}")
    if len(spec.channels) > n * n - 1:
        problems.append(f"channel count {len(spec.channels)} exceeds n^2 - 1 = {n * n - 1}")

    for i, (m, _) in enumerate(spec.hamiltonian.terms):
        if m.shape != (n, n):
            problems.append(f"hamiltonian term {i}: dimension mismatch, matrix is {m.shape[0]}x{m.shape[1]}, dim is {n}")
        elif hermiticity_error(m) > tol.hermiticity:
            problems.append(f"hamiltonian term {i}: matrix is not Hermitian")
    if spec.horizon > 0:
        for i, (_, sched) in enumerate(spec.hamiltonian.terms):
            try:
                lo, _ = sched.minimum(spec.horizon)
                hi = sched.maximum(spec.horizon)
            except ValidationError as exc:
                problems.append(f"hamiltonian term {i}: {exc}")
                continue
            if not (math.isfinite(lo) and math.isfinite(hi)):
                problems.append(f"hamiltonian term {i}: schedule is not finite on [0, horizon]")
    for k, ch in enumerate(spec.channels):
        for i, (m, _) in enumerate(ch.lindblad.terms):
            if m.shape != (n, n):
                problems.append(f"channel {k} lindblad term {i}: dimension mismatch, matrix is {m.shape[0]}x{m.shape[1]}, dim is {n}")
        if spec.horizon > 0:
            try:
                for _, sched in ch.lindblad.terms:
                    sched(np.linspace(0.0, spec.horizon, 3))
                vmin, tmin = ch.rate.minimum(spec.horizon)
            except ValidationError as exc:
                problems.append(f"channel {k}: {exc}")
                continue
            if vmin < 0 and not spec.allow_negative_rates:
                problems.append(f"channel {k}: rates must be nonnegative (rate {vmin:.6g} at t = {tmin:.6g})")
    if spec.initial_state is not None:
        try:
            if np.shape(spec.initial_state) != (n, n):
                raise ValidationError(f"initial_state has shape {np.shape(spec.initial_state)}, dim is {n}")
            check_density_matrix(spec.initial_state, tol)
        except ValidationError as exc:
            problems.append(f"initial_state: {exc}")
    if problems:
        raise ValidationError("; ".join(problems), problems)
    return spec


# ---------------------------------------------------------------------------
# JSON (de)serialization
# ---------------------------------------------------------------------------

_TOP_KEYS = {"dim", "hamiltonian", "channels", "bath", "horizon", "tolerances", "initial_state"}
_BATH_KEYS = {"family", "gamma0", "lambda", "omega0", "include_remainder", "components",
              "unnormalized_gaussian"}
_TOL_KEYS = {"rtol", "atol", "hermiticity", "trace", "positivity"}


def matrix_from_json(doc: Any, where: str) -> np.ndarray:
    if not isinstance(doc, list) or not doc or not all(isinstance(r, list) for r in doc):
        raise ValidationError(f"{where}: matrix must be a nested list of rows")
    ncol = len(doc[0])
    if any(len(r) != ncol for r in doc) or ncol != len(doc):
        raise ValidationError(f"{where}: matrix must be square")
    out = np.zeros((len(doc), ncol), dtype=complex)
    for i, row in enumerate(doc):
        for j, entry in enumerate(row):
            if isinstance(entry, list) and len(entry) == 2:
                out[i, j] = complex(_number(entry[0], where), _number(entry[1], where))
            else:
                raise ValidationError(f"{where}[{i}][{j}]: entries must be [re, im] pairs")
    return out


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _operator_schedule_from_json(terms: Any, where: str) -> OperatorSchedule:
    if isinstance(terms, dict) and "terms" in terms:
        if set(terms) != {"terms"}:
            raise ValidationError(f"{where}: unknown keys {sorted(set(terms) - {'terms'})}")
        terms = terms["terms"]
    elif isinstance(terms, dict):
        terms = [terms]
    if not isinstance(terms, list):
        raise ValidationError(f"{where}: expected a list of terms")
    parsed = []
    for i, term in enumerate(terms):
        w = f"{where}[{i}]"
        if not isinstance(term, dict) or "matrix" not in term:
            raise ValidationError(f"{w}: term must be an object with a 'matrix'")
        if unknown := set(term) - {"matrix", "schedule"}:
            raise ValidationError(f"{w}: unknown keys {sorted(unknown)}")
        m = matrix_from_json(term["matrix"], f"{w}.matrix")
        sched = schedule_from_dict(term["schedule"], f"{w}.schedule") if "schedule" in term else Constant(1.0)
        parsed.append((m, sched))
    dim = parsed[0][0].shape[0] if parsed else 0
    return OperatorSchedule(tuple(parsed), dim)


def _operator_schedule_to_json(op: OperatorSchedule) -> list:
    return [{"matrix": matrix_to_json(m), "schedule": s.to_dict()} for m, s in op.terms]


def _bath_from_json(doc: Any) -> BathSpec:
    if not isinstance(doc, dict):
        raise ValidationError("bath: expected an object")
    if unknown := set(doc) - _BATH_KEYS:
        raise ValidationError(f"bath: unknown keys {sorted(unknown)}")
    if missing := {"family", "gamma0", "lambda", "omega0"} - set(doc):
        raise ValidationError(f"bath: missing {sorted(missing)}")
    comps = []
    for i, c in enumerate(doc.get("components", [])):
        if not isinstance(c, dict) or set(c) != {"family", "weight"}:
            raise ValidationError(f"bath.components[{i}]: expected {{'family', 'weight'}}")
        comps.append((c["family"], _number(c["weight"], f"bath.components[{i}].weight")))
    for flag in ("include_remainder", "unnormalized_gaussian"):
        if flag in doc and not isinstance(doc[flag], bool):
            raise ValidationError(f"bath.{flag}: expected a boolean")
    return BathSpec(
        family=doc["family"],
        gamma0=_number(doc["gamma0"], "bath.gamma0"),
        lam=_number(doc["lambda"], "bath.lambda"),
        omega0=_number(doc["omega0"], "bath.omega0"),
        include_remainder=doc.get("include_remainder", False),
        components=tuple(comps),
        unnormalized_gaussian=doc.get("unnormalized_gaussian", False),
    )


def model_from_dict(doc: Any, allow_negative_rates: bool = False) -> ModelSpec:
    if not isinstance(doc, dict):
        raise ValidationError("model document must be a JSON object")
    if unknown := set(doc) - _TOP_KEYS:
        raise ValidationError(f"unknown top-level keys {sorted(unknown)}")
    if missing := {"dim", "channels", "bath", "horizon"} - set(doc):
        raise ValidationError(f"missing top-level keys {sorted(missing)}")
    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 2:
        raise ValidationError(f"dim must be an integer >= 2, got {dim!r}")
    ham_doc = doc.get("hamiltonian", [])
    hamiltonian = _operator_schedule_from_json(ham_doc, "hamiltonian")
    hamiltonian = OperatorSchedule(hamiltonian.terms, dim)
    if not isinstance(doc["channels"], list):
        raise ValidationError("channels: expected a list")
    channels = []
    for k, ch in enumerate(doc["channels"]):
        if not isinstance(ch, dict) or set(ch) != {"lindblad", "rate"}:
            raise ValidationError(f"channels[{k}]: expected exactly the keys 'lindblad' and 'rate'")
        op = _operator_schedule_from_json(ch["lindblad"], f"channels[{k}].lindblad")
        channels.append(ChannelSpec(OperatorSchedule(op.terms, dim),
                                    schedule_from_dict(ch["rate"], f"channels[{k}].rate")))
    tol_doc = doc.get("tolerances", {})
    if not isinstance(tol_doc, dict) or set(tol_doc) - _TOL_KEYS:
        raise ValidationError(f"tolerances: allowed keys are {sorted(_TOL_KEYS)}")
    tolerances = Tolerances(**{k: _number(v, f"tolerances.{k}") for k, v in tol_doc.items()})
    initial = None
    if "initial_state" in doc:
        initial = matrix_from_json(doc["initial_state"], "initial_state")
    spec = ModelSpec(dim=dim, hamiltonian=hamiltonian, channels=tuple(channels),
                     bath=_bath_from_json(doc["bath"]), horizon=_number(doc["horizon"], "horizon"),
                     tolerances=tolerances, initial_state=initial,
                     allow_negative_rates=allow_negative_rates)
    return validate_model(spec)


def parse_model(text: str, allow_negative_rates: bool = False) -> ModelSpec:
    """Parse and validate a JSON model document.

    Every failure surfaces as ValidationError; syntax errors carry line and column.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"unreadable document: {exc}") from None
    try:
        return model_from_dict(doc, allow_negative_rates)
    except ValidationError:
        raise
    except (TypeError, ValueError, KeyError, IndexError, AttributeError) as exc:
        raise ValidationError(f"malformed model document: {exc}") from None


def model_to_dict(spec: ModelSpec) -> dict:
    tol = spec.tolerances
    doc = {
        "dim": spec.dim,
        "hamiltonian": _operator_schedule_to_json(spec.hamiltonian),
        "channels": [{"lindblad": {"terms": _operator_schedule_to_json(ch.lindblad)},
                      "rate": ch.rate.to_dict()} for ch in spec.channels],
        "bath": spec.bath.to_dict(),
        "horizon": spec.horizon,
        "tolerances": {"rtol": tol.rtol, "atol": tol.atol, "hermiticity": tol.hermiticity,
                       "trace": tol.trace, "positivity": tol.positivity},
    }
    if spec.initial_state is not None:
        doc["initial_state"] = matrix_to_json(spec.initial_state)
    return doc


def serialize_model(spec: ModelSpec) -> str:
    return json.dumps(model_to_dict(spec), indent=2)


# ---------------------------------------------------------------------------
# couplings and scales
# ---------------------------------------------------------------------------


def dressed_coupling(spec: ModelSpec, k: int, t: float) -> np.ndarray:
    """J_k(t) = sqrt(gamma_k(t) / gamma0) A_k(t)."""
    if not 0 <= k < len(spec.channels):
        raise ValidationError(f"channel index {k} out of range")
    ch = spec.channels[k]
    rate = float(ch.rate(t))
    if rate < 0:
        raise ValidationError(f"channel {k}: negative rate {rate:.6g} at t = {t:.6g}; "
                              "the dressed coupling needs nonnegative rates")
    if rate == 0:
        return np.zeros((spec.dim, spec.dim), dtype=complex)
    return math.sqrt(rate / spec.bath.gamma0) * ch.lindblad(t)


@dataclass
class ScaleReport:
    max_rate_ratio: list[float]
    lindblad_norm: list[float]
    lambda_over_gamma0: float
    omega0_over_lambda: float
    tau_j: float
    lambda_tau_j: float
    warnings: dict[str, str] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)

    LAMBDA_WARNINGS = ("lambda_over_gamma0", "lambda_tau_j")

    def lines(self) -> list[str]:
        out = [f"lambda/gamma0 = {self.lambda_over_gamma0:.6g}",
               f"omega0/lambda = {self.omega0_over_lambda:.6g}",
               f"tau_J = {self.tau_j:.6g}   lambda*tau_J = {self.lambda_tau_j:.6g}"]
        for k, (r, a) in enumerate(zip(self.max_rate_ratio, self.lindblad_norm)):
            out.append(f"channel {k}: max gamma/gamma0 = {r:.6g}, max ||A||_2 = {a:.6g}")
        out += [f"WARN {code}: {msg}" for code, msg in self.warnings.items()]
        out += [f"ERROR {msg}" for msg in self.errors]
        return out

    def to_dict(self) -> dict:
        return {"max_rate_ratio": self.max_rate_ratio, "lindblad_norm": self.lindblad_norm,
                "lambda_over_gamma0": self.lambda_over_gamma0,
                "omega0_over_lambda": self.omega0_over_lambda, "tau_j": self.tau_j,
                "lambda_tau_j": self.lambda_tau_j, "warnings": self.warnings, "errors": self.errors}


def estimate_tau_j(spec: ModelSpec, samples: int = TAU_J_SAMPLES) -> float:
    """Time scale on which the interaction-picture couplings change.

    1/tau_J is the largest ratio of the central-difference derivative norm of
    J~_k(t) to its maximum norm, over a uniform grid on [0, horizon].
    """
    from .redfield import interaction_couplings_on_grid

    grid = np.linspace(0.0, spec.horizon, samples)
    inv = 0.0
    for jt in interaction_couplings_on_grid(spec, grid):
        norms = np.linalg.norm(jt, ord=2, axis=(1, 2))
        peak = norms.max()
        if peak == 0.0:
            continue
        deriv = np.gradient(jt, grid[1] - grid[0], axis=0)
        inv = max(inv, float(np.linalg.norm(deriv, ord=2, axis=(1, 2)).max() / peak))
    # rounding noise of a constant coupling is not a time scale
    return math.inf if inv * spec.horizon < 1e-10 else 1.0 / inv


def validate_scales(spec: ModelSpec) -> ScaleReport:
    """Report the scale ratios the second-order model needs; warnings never block a run."""
    bath = spec.bath
    grid = np.linspace(0.0, spec.horizon, RATE_SAMPLES)
    rate_ratio, a_norm = [], []
    for ch in spec.channels:
        rate_ratio.append(ch.rate.maximum(spec.horizon) / bath.gamma0)
        a_norm.append(max(float(np.linalg.norm(ch.lindblad(t), 2)) for t in grid[:: RATE_SAMPLES // 64]))
    tau_j = estimate_tau_j(spec)
    report = ScaleReport(
        max_rate_ratio=rate_ratio, lindblad_norm=a_norm,
        lambda_over_gamma0=bath.lam / bath.gamma0, omega0_over_lambda=bath.omega0 / bath.lam,
        tau_j=tau_j, lambda_tau_j=bath.lam * tau_j)
    for name in ("gamma0", "lam", "omega0"):
        if not getattr(bath, name) > 0:
            report.errors.append(f"{name} must be positive")
    if report.lambda_over_gamma0 < SCALE_SEPARATION:
        report.warnings["lambda_over_gamma0"] = (
            f"lambda/gamma0 = {report.lambda_over_gamma0:.3g} < {SCALE_SEPARATION:g}: Born approximation not justified")
    if report.omega0_over_lambda < SCALE_SEPARATION:
        report.warnings["omega0_over_lambda"] = (
            f"omega0/lambda = {report.omega0_over_lambda:.3g} < {SCALE_SEPARATION:g}: negative-frequency remainder not negligible")
    if report.lambda_tau_j < SCALE_SEPARATION:
        report.warnings["lambda_tau_j"] = (
            f"lambda*tau_J = {report.lambda_tau_j:.3g} < {SCALE_SEPARATION:g}: couplings vary on the bath correlation time")
    return report


# ---------------------------------------------------------------------------
# common operators
# ---------------------------------------------------------------------------

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# index 0 = ground, index 1 = excited
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


def simple_model(dim: int, channels: Sequence[tuple[np.ndarray, ScalarSchedule]],
                 bath: BathSpec | None = None, horizon: float = 5.0,
                 hamiltonian: Sequence[tuple[np.ndarray, ScalarSchedule]] = (),
                 initial_state: np.ndarray | None = None, allow_negative_rates: bool = False,
                 tolerances: Tolerances | None = None) -> ModelSpec:
    """Build and validate a ModelSpec with constant-matrix Lindblad operators."""
    ham = OperatorSchedule(tuple((np.asarray(m, dtype=complex), s) for m, s in hamiltonian), dim)
    chans = tuple(ChannelSpec(OperatorSchedule.constant(a), rate) for a, rate in channels)
    spec = ModelSpec(dim=dim, hamiltonian=ham, channels=chans, bath=bath or BathSpec(),
                     horizon=horizon, tolerances=tolerances or Tolerances(),
                     initial_state=None if initial_state is None else np.asarray(initial_state, dtype=complex),
                     allow_negative_rates=allow_negative_rates)
    return validate_model(spec)
