"""Property suites behind ``kszk verify``.

Each suite returns a :class:`SuiteResult`; they are independent and cheap
(a few seconds in total on a laptop).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .config import RunConfig
from .diagnostics import fit_decay, gronwall_oracle, ode_trap_oracle, verify_inequality_suite
from .geometry import embedding_ratio
from .solver import InitialData, SolverConfig, run
from .spectral import (
    ModeGrid,
    SpectralField,
    derivative_coupling_1d,
    mode_symbol,
    sobolev_norms,
    synthesize,
)

__all__ = ["SuiteResult", "SUITES", "run_suites"]


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str


def _tol(value: float, broken: bool) -> float:
    # the test hook makes every tolerance unattainable
    return -1.0 if broken else value


def suite_inequalities(config: RunConfig, seed: int, broken: bool) -> SuiteResult:
    modes = tuple(min(N, 16) for N in config.modes)
    grid = ModeGrid.create(config.domain(), modes)
    report = verify_inequality_suite(grid, 1000, seed, tol=_tol(1e-10, broken))
    worst = min(report.worst.values())
    skipped = "" if report.norm_bounds_applicable else "; H2/H4 bounds skipped (a <= 1)"
    return SuiteResult("inequalities", report.all_pass, f"worst relative residual {worst:.3e}{skipped}")


def suite_lowest_mode(config: RunConfig, seed: int, broken: bool) -> SuiteResult:
    grid = ModeGrid.create(config.domain(), tuple(min(N, 16) for N in config.modes))
    report = verify_inequality_suite(grid, 1, seed)
    worst = max(abs(v) for v in report.lowest_mode.values())
    return SuiteResult("lowest_mode_equality", worst <= _tol(1e-12, broken), f"max |residual| {worst:.3e}")


def suite_parseval(config: RunConfig, seed: int, broken: bool) -> SuiteResult:
    modes = tuple(min(N, 16) for N in config.modes)
    grid = ModeGrid.create(config.domain(), modes, tuple(N + 1 for N in modes))
    rng = np.random.default_rng(seed)
    field = SpectralField(grid, rng.standard_normal(modes))
    values = synthesize(field).values
    # trapezoid on the DST-I nodes (the boundary samples are zero)
    cell = np.prod([L / (M + 1) for L, M in zip(grid.lengths, grid.grid_points)])
    quad = float(np.sum(values**2) * cell)
    exact = sobolev_norms(field).l2_sq
    err = abs(quad - exact) / exact
    return SuiteResult("parseval", err <= _tol(1e-10, broken), f"relative error {err:.3e}")


def coupling_quadrature(N: int, L: float, nodes: int = 200) -> np.ndarray:
    """Gauss-Legendre evaluation of ``int sin(k pi x/L) d/dx sin(m pi x/L) dx``."""
    xg, wg = leggauss(nodes)
    x = 0.5 * L * (xg + 1.0)
    w = 0.5 * L * wg
    k = np.arange(1, N + 1) * math.pi / L
    s = np.sin(np.outer(x, k))
    ds = np.cos(np.outer(x, k)) * k
    return (s * w[:, None]).T @ ds


def suite_skew(config: RunConfig, seed: int, broken: bool) -> SuiteResult:
    worst_skew = 0.0
    worst_quad = 0.0
    for N in (1, 2, 7, 16, 33, 64):
        L = config.lengths[0]
        mat = derivative_coupling_1d(N, L)
        worst_skew = max(worst_skew, float(np.max(np.abs(mat + mat.T))))
        worst_quad = max(worst_quad, float(np.max(np.abs(mat - coupling_quadrature(N, L)))))
    ok = worst_skew <= _tol(1e-14, broken) and worst_quad <= _tol(1e-10, broken)
    return SuiteResult("zk_coupling", ok, f"skew {worst_skew:.1e}, quadrature {worst_quad:.1e}")


def suite_steklov_1d(config: RunConfig, seed: int, broken: bool) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = math.inf
    for L in config.lengths:
        k = np.arange(1, 33)
        for _ in range(200):
            c = rng.standard_normal(32) / k ** rng.uniform(0.0, 3.0)
            l2 = np.sum(c**2) * L / 2
            d1 = np.sum((k * math.pi / L) ** 2 * c**2) * L / 2
            worst = min(worst, (d1 - math.pi**2 / L**2 * l2) / d1)
    return SuiteResult("steklov_1d", worst >= -_tol(1e-12, broken), f"worst relative residual {worst:.3e}")


def suite_ode_trap(config: RunConfig, seed: int, broken: bool) -> SuiteResult:
    rng = np.random.default_rng(seed)
    failures = 0
    required_gap = math.inf if broken else 0.0
    for _ in range(100):
        n_exp = int(rng.integers(1, 6))
        alpha = float(rng.uniform(0.1, 5.0))
        f0 = float(rng.uniform(0.1, 2.0))
        k = float(rng.uniform(0.0, 0.99)) * alpha / f0**n_exp
        verdict = ode_trap_oracle(alpha, k, n_exp, f0, 10.0, 0.01)
        if not (verdict.hypothesis_ok and verdict.conclusion_ok and verdict.min_gap > required_gap):
            failures += 1
    flagged = not ode_trap_oracle(1.0, 2.0, 1, 1.0, 1.0, 0.01).hypothesis_ok
    return SuiteResult("ode_trap", failures == 0 and flagged, f"{100 - failures}/100 tuples trapped")


def suite_gronwall(config: RunConfig, seed: int, broken: bool) -> SuiteResult:
    cases = [
        (0.0, 1.0, 0.0),
        (-1.0, 0.0, 1.0),
        (np.sin, 1.0, 2.0),
    ]
    worst = 0.0
    ok = True
    for a_fn, b_fn, u0 in cases:
        verdict = gronwall_oracle(a_fn, b_fn, u0, 5.0, 1e-3)
        ok &= verdict.bound_holds
        worst = max(worst, verdict.max_relative_gap)
    return SuiteResult("gronwall", ok and worst <= _tol(1e-8, broken), f"max relative gap {worst:.3e}")


def suite_embedding(config: RunConfig, seed: int, broken: bool) -> SuiteResult:
    domain = config.domain()
    grid = ModeGrid.create(domain, 1, 5)
    mu = mode_symbol((1,) * domain.n, domain)
    expected = 1.0 / (mu**2 * math.sqrt(grid.weight))
    ratio = embedding_ratio(SpectralField.unit(grid, (1,) * domain.n))
    err = abs(ratio - expected) / expected
    return SuiteResult("embedding_single_mode", err <= _tol(1e-12, broken), f"relative error {err:.3e}")


def suite_linear_decay(config: RunConfig, seed: int, broken: bool) -> SuiteResult:
    domain = config.domain()
    mu = mode_symbol((1,) * domain.n, domain)
    rate = mu * mu - mu
    grid = ModeGrid.create(domain, 2)
    if rate <= 0.0:
        return SuiteResult("linear_decay", not broken, "lowest mode unstable; decay check not applicable")
    dt = 1e-3 / rate
    cfg = SolverConfig(dt=dt, t_end=2000 * dt, scheme="cnab2", zk_enabled=False,
                       nonlinear_enabled=False, record_every=20)
    _, series = run(grid, InitialData("single_mode", 1.0, (1,) * domain.n), cfg)
    fitted = fit_decay(series).rate
    err = abs(fitted - 2 * rate) / (2 * rate)
    return SuiteResult("linear_decay", err <= _tol(1e-3, broken), f"fitted {fitted:.6g} vs {2 * rate:.6g}")


SUITES: dict[str, Callable[[RunConfig, int, bool], SuiteResult]] = {
    "inequalities": suite_inequalities,
    "lowest_mode_equality": suite_lowest_mode,
    "parseval": suite_parseval,
    "zk_coupling": suite_skew,
    "steklov_1d": suite_steklov_1d,
    "ode_trap": suite_ode_trap,
    "gronwall": suite_gronwall,
    "embedding_single_mode": suite_embedding,
    "linear_decay": suite_linear_decay,
}


def run_suites(config: RunConfig, seed: Optional[int] = None, broken: bool = False) -> list[SuiteResult]:
    seed = config.seed if seed is None else seed
    return [fn(config, seed, broken) for fn in SUITES.values()]
