"""Verdicts on runs: decay fits, bound checks, dissipation, and scalar ODE oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .errors import FitError
from .geometry import AdmissibilityReport, compute_a
from .spectral import ModeGrid, SpectralField, directional_gradlap_sq, sobolev_norms, symbol_array

__all__ = [
    "TimeSeriesRecord",
    "DecayFit",
    "BoundVerdict",
    "TrapVerdict",
    "GronwallVerdict",
    "InequalityReport",
    "fit_exponential",
    "fit_decay",
    "check_decay_bound",
    "dissipation_integral",
    "dissipation_tail_fraction",
    "is_monotone_nonincreasing",
    "ode_trap_oracle",
    "gronwall_oracle",
    "inequality_residuals",
    "verify_inequality_suite",
]


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    h2_sq_per_j: tuple[float, ...]
    h2_sq_total: float
    bilap_sq_total: float
    curl_residual: float
    bound_envelope: float


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    window: tuple[float, float]


@dataclass(frozen=True)
class BoundVerdict:
    applicable: bool
    holds: Optional[bool]
    worst_margin: Optional[float] = None
    worst_t: Optional[float] = None


@dataclass(frozen=True)
class TrapVerdict:
    hypothesis_ok: bool
    conclusion_ok: bool
    min_gap: float
    f_final: float


@dataclass(frozen=True)
class GronwallVerdict:
    bound_holds: bool
    max_violation: float
    max_relative_gap: float


@dataclass
class InequalityReport:
    samples: int
    norm_bounds_applicable: bool
    passes: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)
    lowest_mode: dict = field(default_factory=dict)
    tolerance: float = 1e-10

    @property
    def all_pass(self) -> bool:
        return all(count == self.samples for count in self.passes.values())


def fit_exponential(t, y) -> tuple[float, float]:
    """Least-squares fit of ``log y = c - rate * t``; returns ``(rate, r_squared)``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 3:
        raise FitError(f"need at least 3 points, got {t.size}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0.0):
        raise FitError("values must be finite and strictly positive")
    logy = np.log(y)
    slope, intercept = np.polyfit(t, logy, 1)
    resid = logy - (slope * t + intercept)
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    # a constant series is fitted perfectly
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    rate = -float(slope)
    if ss_tot <= 1e-300:
        rate = 0.0
    return rate, min(1.0, max(0.0, r2))


def _default_window(series: Sequence[TimeSeriesRecord], drop_fraction: float):
    start = min(int(math.ceil(drop_fraction * len(series))), max(len(series) - 3, 0))
    return (series[start].t, series[-1].t)


def fit_decay(
    series: Sequence[TimeSeriesRecord],
    window: Optional[tuple[float, float]] = None,
    drop_fraction: float = 0.1,
) -> DecayFit:
    """Fit ``h2_sq_total ~ A exp(-rate t)`` on ``window``.

    Without an explicit window the first ``drop_fraction`` of the records is
    skipped to keep the initial transient out of the slope.
    """
    if not series:
        raise FitError("empty series")
    if window is None:
        window = _default_window(series, drop_fraction)
    t0, t1 = window
    picked = [r for r in series if t0 <= r.t <= t1]
    rate, r2 = fit_exponential([r.t for r in picked], [r.h2_sq_total for r in picked])
    return DecayFit(rate=rate, r_squared=r2, window=(float(t0), float(t1)))


def check_decay_bound(
    series: Sequence[TimeSeriesRecord],
    report: AdmissibilityReport,
    tol: float = 1e-6,
) -> BoundVerdict:
    """Check ``h2(t) <= h2(0) exp(-a**2 theta t / 2) (1 + tol)`` at every record."""
    if not series:
        raise ValueError("empty series")
    if not report.geometric_ok or report.decay_rate is None:
        return BoundVerdict(applicable=False, holds=None)
    t = np.array([r.t for r in series])
    h2 = np.array([r.h2_sq_total for r in series])
    envelope = series[0].h2_sq_total * np.exp(-report.decay_rate * (t - t[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(envelope > 0.0, h2 / envelope, np.where(h2 > 0.0, np.inf, 1.0))
    margins = ratio - 1.0
    worst = int(np.argmax(margins))
    holds = bool(np.all(h2 <= envelope * (1.0 + tol)))
    return BoundVerdict(True, holds, float(margins[worst]), float(t[worst]))


def is_monotone_nonincreasing(values, rtol: float = 0.0) -> bool:
    values = np.asarray(values, dtype=float)
    return bool(np.all(values[1:] <= values[:-1] * (1.0 + rtol)))


def dissipation_integral(series: Sequence[TimeSeriesRecord]) -> float:
    """Trapezoidal integral of ``sum_j ||Laplace**2 u_j||**2`` over the recorded times."""
    if len(series) < 2:
        raise ValueError("need at least two records")
    t = np.array([r.t for r in series])
    y = np.array([r.bilap_sq_total for r in series])
    return float(np.trapezoid(y, t))


def dissipation_tail_fraction(series: Sequence[TimeSeriesRecord], tail: float = 0.25) -> float:
    """Share of the dissipation integral accumulated in the final ``tail`` of the run."""
    t = np.array([r.t for r in series])
    y = np.array([r.bilap_sq_total for r in series])
    # accumulate from the end so a tiny tail is not lost to cancellation
    from_end = cumulative_trapezoid(y[::-1], -t[::-1], initial=0.0)[::-1]
    total = from_end[0]
    if total <= 0.0:
        return 0.0
    t_cut = t[-1] - tail * (t[-1] - t[0])
    return float(np.interp(t_cut, t, from_end) / total)


def ode_trap_oracle(
    alpha: float,
    k: float,
    n_exp: int,
    f0: float,
    t_end: float,
    dt: float,
) -> TrapVerdict:
    """Integrate the extremal case ``f' = -(alpha - k f**n) f`` with classical RK4.

    ``hypothesis_ok`` is the initial condition ``alpha - k f0**n > 0``;
    ``conclusion_ok`` is ``f(t) < f0`` at every step ``t > 0``.
    """
    if not f0 > 0.0 or not dt > 0.0:
        raise ValueError("f0 and dt must be positive")
    hypothesis_ok = alpha - k * f0**n_exp > 0.0

    def rhs(f):
        return -(alpha - k * f**n_exp) * f

    steps = int(math.ceil(t_end / dt - 1e-12))
    f = f0
    min_gap = math.inf
    conclusion_ok = True
    for _ in range(steps):
        try:
            k1 = rhs(f)
            k2 = rhs(f + 0.5 * dt * k1)
            k3 = rhs(f + 0.5 * dt * k2)
            k4 = rhs(f + dt * k3)
            f = f + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except OverflowError:
            f = math.inf
        if not math.isfinite(f) or abs(f) > 1e100:
            conclusion_ok = False
            min_gap = -math.inf
            break
        gap = f0 - f
        min_gap = min(min_gap, gap)
        if gap <= 0.0:
            conclusion_ok = False
    return TrapVerdict(bool(hypothesis_ok), conclusion_ok, float(min_gap), float(f))


FunctionLike = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float]


def _as_callable(fn: FunctionLike, t_grid: np.ndarray) -> Callable:
    if callable(fn):
        return lambda t: np.broadcast_to(np.asarray(fn(t), dtype=float), np.shape(t)) * 1.0
    arr = np.asarray(fn, dtype=float)
    if arr.ndim == 0:
        return lambda t: np.full(np.shape(t), float(arr))
    if arr.shape != t_grid.shape:
        raise ValueError(f"sampled function has {arr.size} values, grid has {t_grid.size}")
    return CubicSpline(t_grid, arr)


def gronwall_oracle(
    a_fn: FunctionLike,
    b_fn: FunctionLike,
    u0: float,
    t_end: float,
    dt: float,
) -> GronwallVerdict:
    """Compare the equality case ``u' = a u + b`` with the integrated-factor bound.

    The ODE is integrated with RK4; the bound
    ``exp(A(t)) * (u0 + int_0^t exp(-A(s)) b(s) ds)`` with ``A(t) = int_0^t a``
    is built by cumulative Simpson quadrature, so the two routes share
    nothing but the sampling grid.  ``a_fn``/``b_fn`` may be callables,
    constants, or arrays sampled on ``t = 0, dt, ..., t_end``.
    """
    steps = int(round(t_end / dt))
    t = np.linspace(0.0, steps * dt, steps + 1)
    a = _as_callable(a_fn, t)
    b = _as_callable(b_fn, t)

    u = np.empty_like(t)
    u[0] = u0
    for i in range(steps):
        ti, ui = t[i], u[i]
        h = t[i + 1] - ti
        k1 = a(ti) * ui + b(ti)
        k2 = a(ti + h / 2) * (ui + h / 2 * k1) + b(ti + h / 2)
        k3 = a(ti + h / 2) * (ui + h / 2 * k2) + b(ti + h / 2)
        k4 = a(ti + h) * (ui + h * k3) + b(ti + h)
        u[i + 1] = ui + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    A = cumulative_simpson(a(t), x=t, initial=0.0)
    inner = cumulative_simpson(np.exp(-A) * b(t), x=t, initial=0.0)
    bound = np.exp(A) * (u0 + inner)

    violation = u - bound
    holds = bool(np.all(u <= bound + 1e-8 * np.abs(bound)))
    scale = np.maximum(np.abs(bound), 1e-300)
    return GronwallVerdict(holds, float(np.max(violation)), float(np.max(np.abs(violation) / scale)))


INEQUALITY_NAMES = (
    "steklov_grad",  # a ||f||^2 <= ||grad f||^2
    "l2_vs_lap",  # a^2 ||f||^2 <= ||Lap f||^2
    "grad_vs_lap",  # a ||grad f||^2 <= ||Lap f||^2
    "lap_vs_bilap",  # a^2 ||Lap f||^2 <= ||Lap^2 f||^2
    "zk_vs_bilap",  # a ||(Lap f)_x1||^2 <= ||Lap^2 f||^2
    "h2_bound",  # ||f||_H2^2 <= 3 ||Lap f||^2, needs a > 1
    "h4_bound",  # ||f||_H4^2 <= 5 ||Lap^2 f||^2, needs a > 1
)


def inequality_residuals(spec: SpectralField, a: Optional[float] = None) -> dict:
    """Relative residuals ``(rhs - lhs) / rhs`` of the seven norm inequalities.

    Non-negative residuals mean the inequality holds.
    """
    if a is None:
        a = compute_a(spec.grid.domain)
    s = sobolev_norms(spec)
    zk = directional_gradlap_sq(spec, axis=0)
    pairs = {
        "steklov_grad": (a * s.l2_sq, s.grad_sq),
        "l2_vs_lap": (a * a * s.l2_sq, s.lap_sq),
        "grad_vs_lap": (a * s.grad_sq, s.lap_sq),
        "lap_vs_bilap": (a * a * s.lap_sq, s.bilap_sq),
        "zk_vs_bilap": (a * zk, s.bilap_sq),
        "h2_bound": (s.h2_sq, 3.0 * s.lap_sq),
        "h4_bound": (s.h4_sq, 5.0 * s.bilap_sq),
    }
    out = {}
    for name, (lhs, rhs) in pairs.items():
        out[name] = (rhs - lhs) / rhs if rhs > 0.0 else 0.0
    return out


def verify_inequality_suite(grid: ModeGrid, samples: int, seed: int, tol: float = 1e-10) -> InequalityReport:
    """Evaluate the norm inequalities on random fields.

    Fields have coefficients ``g_k mu_k**(-s)`` with a random spectral slope
    ``s`` in ``[0, 4]`` so that both rough and nearly-lowest-mode fields are
    covered.  The two H2/H4 bounds are only checked when ``a > 1``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    a = compute_a(grid.domain)
    norm_bounds = a > 1.0
    names = [nm for nm in INEQUALITY_NAMES if norm_bounds or nm not in ("h2_bound", "h4_bound")]
    report = InequalityReport(samples=samples, norm_bounds_applicable=norm_bounds, tolerance=tol)
    report.passes = {nm: 0 for nm in names}
    report.worst = {nm: math.inf for nm in names}

    mu = symbol_array(grid)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        slope = rng.uniform(0.0, 4.0)
        coeffs = rng.standard_normal(grid.modes) * mu ** (-slope)
        res = inequality_residuals(SpectralField(grid, coeffs), a)
        for nm in names:
            report.worst[nm] = min(report.worst[nm], res[nm])
            if res[nm] >= -tol:
                report.passes[nm] += 1

    lowest = inequality_residuals(SpectralField.unit(grid, (1,) * grid.n), a)
    report.lowest_mode = {nm: lowest[nm] for nm in ("steklov_grad", "l2_vs_lap", "grad_vs_lap", "lap_vs_bilap")}
    return report
