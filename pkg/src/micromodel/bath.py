"""Spectral densities and zero-temperature bath correlation functions.

Frequencies are handled as detunings x = omega - omega0, so that

    c(tau) = int_{-omega0}^{inf} dx I(omega0 + x) exp(-i x tau)      (positive frequencies)
    R(tau) = int_{-inf}^{-omega0} dx I(omega0 + x) exp(-i x tau)     (negative-frequency remainder)

and the full-line transform is c + R.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .core import NumericalError, ValidationError
from .model import BathSpec

CORE_HALF_WIDTH = 50.0  # in units of lambda
GL_ORDER = 16
QUAD_RTOL = 1e-11
PANEL_BUDGET = 1 << 17
SUPPORT_LEVEL = 1e-8

MODES = ("closed", "numeric", "closed-minus-remainder", "delta")

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


# ---------------------------------------------------------------------------
# spectral densities and closed forms
# ---------------------------------------------------------------------------


def _density(family: str, x, bath: BathSpec):
    g0, lam = bath.gamma0, bath.lam
    if family == "lorentzian":
        return g0 * lam ** 2 / (2 * np.pi * (x ** 2 + lam ** 2))
    if family == "gaussian":
        peak = g0 * lam / math.sqrt(2) if bath.unnormalized_gaussian else g0 / (2 * np.pi)
        return peak * np.exp(-x ** 2 / (2 * lam ** 2))
    if family == "sinc_squared":
        return g0 / (2 * np.pi) * np.sinc(x / (np.pi * lam)) ** 2
    raise ValidationError(f"unknown spectral family {family!r}")


def spectral_density(bath: BathSpec, omega):
    """I(omega); any real omega, including negative frequencies."""
    x = np.asarray(omega, dtype=float) - bath.omega0
    return sum(w * _density(fam, x, bath) for fam, w in bath.terms())[()]


def _closed(family: str, tau, bath: BathSpec):
    g0, lam = bath.gamma0, bath.lam
    a = np.abs(tau)
    if family == "lorentzian":
        return g0 * lam / 2 * np.exp(-lam * a)
    if family == "gaussian":
        peak = g0 * lam ** 2 * math.sqrt(np.pi) if bath.unnormalized_gaussian else g0 * lam / math.sqrt(2 * np.pi)
        return peak * np.exp(-(lam * a) ** 2 / 2)
    if family == "sinc_squared":
        return g0 * lam / 2 * np.clip(1.0 - lam * a / 2, 0.0, None)
    raise ValidationError(f"unknown spectral family {family!r}")


def correlation_closed_form(bath: BathSpec, tau):
    """Full-line Fourier transform of I (negative frequencies included); purely real."""
    tau = np.asarray(tau, dtype=float)
    return (sum(w * _closed(fam, tau, bath) for fam, w in bath.terms()) + 0j)[()]


# ---------------------------------------------------------------------------
# oscillatory quadrature
# ---------------------------------------------------------------------------


def _gl_panels(f: Callable, a: float, b: float, npanel: int, tau: float) -> complex:
    edges = np.linspace(a, b, npanel + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return complex(np.sum(w * f(x) * np.exp(-1j * x * tau)))


def _core_integral(f: Callable, a: float, b: float, tau: float, scale: float, lam: float,
                   rtol: float, panel_budget: int) -> tuple[complex, float]:
    """int_a^b f(x) exp(-i x tau) dx on Gauss-Legendre panels, refined until two levels agree.

    Panel width starts at min(lam/4, pi/(4|tau|)) so every panel sees less
    than an eighth of an oscillation.
    """
    width = lam / 4
    if tau != 0.0:
        width = min(width, np.pi / (4 * abs(tau)))
    npanel = max(1, int(math.ceil((b - a) / width)))
    coarse = _gl_panels(f, a, b, npanel, tau)
    while True:
        npanel *= 2
        if npanel > panel_budget:
            raise NumericalError(f"quadrature did not converge within {panel_budget} panels")
        fine = _gl_panels(f, a, b, npanel, tau)
        err = abs(fine - coarse)
        if err <= max(rtol * abs(fine), 1e-16 * scale):
            return fine, err
        coarse = fine


def _quad(amp, a, b, weight=None, wvar=None, epsabs=0.0):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if weight is None:
                return integrate.quad(amp, a, b, epsabs=epsabs, epsrel=1e-12, limit=500)
            return integrate.quad(amp, a, b, weight=weight, wvar=wvar, epsabs=epsabs,
                                  epsrel=1e-12, limit=2000, maxp1=200, limlst=200)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"oscillatory quadrature failed: {exc}") from None


def _oscillatory(amp: Callable, q: float, a: float, b: float, epsabs: float) -> tuple[complex, float]:
    """int_a^b amp(x) exp(-i q x) dx for a non-oscillating amplitude; one bound may be infinite.

    Callers keep |q| times the distance from the origin at least 1 on infinite ranges.
    """
    if a == -np.inf:
        # mirror x -> -x onto [-b, inf)
        val, err = _oscillatory(lambda y: amp(-y), -q, -b, np.inf, epsabs)
        return val, err
    sgn = 1.0 if q >= 0 else -1.0
    w = abs(q)
    if w == 0.0:
        v, e = _quad(amp, a, b, epsabs=epsabs)
        return complex(v), e
    # QAWF (b infinite) or QAWO (b finite); QAWF honours only epsabs
    c, ec = _quad(amp, a, b, "cos", w, epsabs=epsabs)
    s, es = _quad(amp, a, b, "sin", w, epsabs=epsabs)
    return complex(c, -sgn * s), ec + es


def _inverse_square(c: float, q: float, a: float, b: float) -> complex:
    """int_a^b c exp(-i q x) / x^2 dx for 0 < a < b <= inf, via sine and cosine integrals."""

    def upper(x):
        # int_x^inf exp(-i q u) / u^2 du
        if x == np.inf:
            return 0j
        w = abs(q)
        if w == 0.0:
            return complex(1.0 / x)
        z = w * x
        if z < 1e-8:
            # leading terms of the series; log z taken apart since z itself may underflow
            log_z = math.log(w) + math.log(x)
            return complex(1.0 / x - w * np.pi / 2 + w * z / 2,
                           -math.copysign(1.0, q) * w * (1 - np.euler_gamma - log_z))
        si, ci = special.sici(z)
        cos_part = w * (math.cos(z) / z - (np.pi / 2 - si))
        sin_part = w * (math.sin(z) / z - ci)
        return complex(cos_part, -math.copysign(1.0, q) * sin_part)

    return c * (upper(a) - upper(b))


def _slow_phase(amp: Callable, q: float, a: float, b: float, epsabs: float) -> tuple[complex, float]:
    """int_a^b amp(x) exp(-i q x) dx for a fast-decaying amp while the phase q x is still small.

    Plain quadrature decade by decade until the decades stop contributing or
    the phase reaches one radian; Fourier quadrature from there on.
    """
    val, err = 0j, 0.0
    lo = a
    while lo < b:
        if q != 0.0 and abs(q) * lo >= 1.0:
            v, e = _oscillatory(amp, q, lo, b, epsabs)
            return val + v, err + e
        hi = min(b, 10.0 * lo)
        c, ec = _quad(lambda x: amp(x) * math.cos(q * x), lo, hi, epsabs=epsabs)
        s, es = _quad(lambda x: -amp(x) * math.sin(q * x), lo, hi, epsabs=epsabs)
        val, err = val + complex(c, s), err + ec + es
        if abs(complex(c, s)) <= 1e-3 * epsabs:
            # x^-4 decay: later decades add at most a thousandth of this one
            break
        lo = hi
    return val, err


def _tail_terms(bath: BathSpec, tau: float) -> list[tuple[Callable, float, float, Callable | None]]:
    """Decompose I(omega0 + x) exp(-i x tau), away from x = 0, into oscillating pieces.

    Each piece is (amp, q, c, rest): amp(x) exp(-i q x) with amp(x) = c / x^2 + rest(x)
    and rest = O(x^-4); c = 0 marks amplitudes without an inverse-square tail.
    """
    out = []
    g0, lam = bath.gamma0, bath.lam
    for fam, wt in bath.terms():
        if fam == "sinc_squared":
            # sin^2(u) / u^2 = (1 - cos 2u) / (2 u^2)
            c = wt * g0 * lam ** 2 / (4 * np.pi)
            zero = lambda x: 0.0
            out.append((lambda x, c=c: c / x ** 2, tau, c, zero))
            out.append((lambda x, c=c: -0.5 * c / x ** 2, tau - 2 / lam, -0.5 * c, zero))
            out.append((lambda x, c=c: -0.5 * c / x ** 2, tau + 2 / lam, -0.5 * c, zero))
        elif fam == "lorentzian":
            c = wt * g0 * lam ** 2 / (2 * np.pi)
            out.append((lambda x, c=c: c / (x * x + lam * lam), tau, c,
                        lambda x, c=c: -c * lam * lam / (x * x * (x * x + lam * lam))))
        else:
            # Gaussian: exp(-x^2 / 2 lam^2) underflows long before the tails start
            out.append((lambda x, fam=fam, wt=wt: wt * _density(fam, min(abs(x), 1e150), bath), tau, 0.0, None))
    return out


def _tail_piece(amp, q, c, rest, a, b, epsabs) -> tuple[complex, float]:
    if b <= 0:
        # all amplitudes are even in x: mirror onto the positive axis
        mirror = None if rest is None else (lambda y: rest(-y))
        return _tail_piece(lambda y: amp(-y), -q, c, mirror, -b, -a, epsabs)
    if abs(q) * a >= 1.0:
        return _oscillatory(amp, q, a, b, epsabs)
    # the cycle length exceeds the distance to the peak: QAWF is unreliable here,
    # and for subnormal q it crashes outright
    if c == 0.0:
        return _slow_phase(amp, q, a, b, epsabs)
    v, e = _slow_phase(rest, q, a, b, epsabs)
    return _inverse_square(c, q, a, b) + v, e


def _tail_integral(bath: BathSpec, tau: float, a: float, b: float, scale: float) -> tuple[complex, float]:
    val, err = 0j, 0.0
    for amp, q, c, rest in _tail_terms(bath, tau):
        v, e = _tail_piece(amp, q, c, rest, a, b, epsabs=1e-15 * scale)
        val += v
        err += e
    return val, err


def _scale(bath: BathSpec) -> float:
    return bath.gamma0 * bath.lam * sum(w for _, w in bath.terms())


def _density_x(bath: BathSpec):
    return lambda x: sum(w * _density(fam, x, bath) for fam, w in bath.terms())


def correlation_numeric(bath: BathSpec, tau: float, rtol: float = QUAD_RTOL,
                        panel_budget: int = PANEL_BUDGET, return_error: bool = False):
    """Positive-frequency correlation int_0^inf I(w) exp(-i (w - w0) tau) dw by quadrature.

    Gauss-Legendre panels on |x| <= 50 lam around the peak; QUADPACK Fourier
    quadrature (QAWO/QAWF) on the smooth tails.
    """
    tau = float(tau)
    lam, w0 = bath.lam, bath.omega0
    L = CORE_HALF_WIDTH * lam
    scale = _scale(bath)
    lo = max(-w0, -L)
    val, err = _core_integral(_density_x(bath), lo, L, tau, scale, lam, rtol, panel_budget)
    v, e = _tail_integral(bath, tau, L, np.inf, scale)
    val, err = val + v, err + e
    if w0 > L:
        v, e = _tail_integral(bath, tau, -w0, -L, scale)
        val, err = val + v, err + e
    return (val, err) if return_error else val


def remainder_numeric(bath: BathSpec, tau: float, rtol: float = QUAD_RTOL,
                      panel_budget: int = PANEL_BUDGET, return_error: bool = False):
    """Negative-frequency part R(tau) = int_{-inf}^0 I(w) exp(-i (w - w0) tau) dw."""
    tau = float(tau)
    lam, w0 = bath.lam, bath.omega0
    L = CORE_HALF_WIDTH * lam
    scale = _scale(bath)
    if w0 >= L:
        val, err = _tail_integral(bath, tau, -np.inf, -w0, scale)
    else:
        val, err = _core_integral(_density_x(bath), -L, -w0, tau, scale, lam, rtol, panel_budget)
        v, e = _tail_integral(bath, tau, -np.inf, -L, scale)
        val, err = val + v, err + e
    return (val, err) if return_error else val


def khalfin_asymptotic(bath: BathSpec, tau: float) -> complex:
    """Large-tau asymptote of the Lorentzian remainder: (i/2pi)(g0/tau) lam^2/(w0^2+lam^2) e^{i w0 tau}."""
    if bath.family != "lorentzian":
        raise ValidationError("the Khalfin asymptote is only available for the lorentzian family")
    if tau == 0:
        raise ValidationError("the Khalfin asymptote is singular at tau = 0")
    g0, lam, w0 = bath.gamma0, bath.lam, bath.omega0
    if abs(tau) * math.hypot(w0, lam) < 10:
        warnings.warn("tau * sqrt(omega0^2 + lambda^2) < 10: asymptotic formula is unreliable",
                      stacklevel=2)
    return 1j / (2 * np.pi) * g0 / tau * lam ** 2 / (w0 ** 2 + lam ** 2) * np.exp(1j * w0 * tau)


# ---------------------------------------------------------------------------
# correlation function object
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationFunction:
    """c(tau) = <B(t) B^+(t - tau)> under one of the evaluation modes.

    closed                  full-line transform (remainder dropped)
    numeric                 positive-frequency quadrature
    closed-minus-remainder  closed form minus the numeric remainder
    delta                   the infinite-bandwidth limit g0 * delta(tau); not pointwise evaluable
    """

    bath: BathSpec
    mode: str = "closed"
    rtol: float = QUAD_RTOL
    panel_budget: int = PANEL_BUDGET

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown correlation mode {self.mode!r}; choose from {MODES}")

    def __call__(self, tau):
        if self.mode == "delta":
            raise ValidationError("the delta correlation has no pointwise values")
        if self.mode == "closed":
            return correlation_closed_form(self.bath, tau)
        scalar = np.ndim(tau) == 0
        taus = np.atleast_1d(np.asarray(tau, dtype=float))
        if self.mode == "numeric":
            out = np.array([correlation_numeric(self.bath, t, self.rtol, self.panel_budget) for t in taus])
        else:
            out = np.asarray(correlation_closed_form(self.bath, taus)) - np.array(
                [remainder_numeric(self.bath, t, self.rtol, self.panel_budget) for t in taus])
        return complex(out[0]) if scalar else out

    @property
    def includes_remainder(self) -> bool:
        return self.mode in ("numeric", "closed-minus-remainder")


def default_mode(bath: BathSpec) -> str:
    return "closed-minus-remainder" if bath.include_remainder else "closed"


# ---------------------------------------------------------------------------
# delta-limit diagnostics
# ---------------------------------------------------------------------------

_FIRST_MOMENT = {"lorentzian": 1.0, "gaussian": math.sqrt(2 / math.pi), "sinc_squared": 2.0 / 3.0}
_SUPPORT = {
    "lorentzian": math.log(1 / SUPPORT_LEVEL),
    "gaussian": math.sqrt(2 * math.log(1 / SUPPORT_LEVEL)),
    "sinc_squared": 2.0,
}


@dataclass(frozen=True)
class DeltaDiagnostics:
    weight: float
    correlation_time: float
    sup_width: float
    inverse_width: float  # 1/lambda, the nominal environmental correlation time


def _weight(family: str, bath: BathSpec) -> float:
    # full-line integral of the closed-form correlation = 2 pi I(omega0)
    return 2 * np.pi * float(_density(family, 0.0, bath))


def delta_diagnostics(bath: BathSpec) -> DeltaDiagnostics:
    """Weight of c(tau) on the full line, first moment of |c| on tau >= 0, and support width.

    The support width is where |c| falls below 1e-8 of c(0); it is exact for sinc_squared.
    """
    lam = bath.lam
    weights = [(fam, w * _weight(fam, bath)) for fam, w in bath.terms()]
    total = sum(w for _, w in weights)
    moment = sum(w * _FIRST_MOMENT[fam] for fam, w in weights) / total / lam
    support = max(_SUPPORT[fam] for fam, _ in weights) / lam
    return DeltaDiagnostics(weight=total, correlation_time=moment, sup_width=support,
                            inverse_width=1.0 / lam)


def one_sided_pairing(bath: BathSpec, phi: Callable[[float], float]) -> float:
    """int_0^inf c(tau) phi(tau) dtau with the closed-form correlation."""
    lam = bath.lam
    f = lambda t: float(np.real(correlation_closed_form(bath, t))) * phi(t)
    edges = [0.0, 2.0 / lam, 40.0 / lam, np.inf]
    return float(sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
                     for a, b in zip(edges[:-1], edges[1:])))


def delta_limit_error(bath: BathSpec, phi: Callable[[float], float]) -> float:
    """Relative deviation of the one-sided pairing from half the weight times phi(0)."""
    target = 0.5 * delta_diagnostics(bath).weight * phi(0.0)
    return abs(one_sided_pairing(bath, phi) - target) / abs(target)
