r"""Galerkin time integration of the gradient KS-ZK system on a box.

Each component ``u_j`` of ``grad phi`` is evolved in the sine basis:

.. math::

    \dot c_k = -(\mu_k^2 - \mu_k) c_k + [P\,\partial_{x_1}\Delta u]_k
               - [P\,\tfrac12 \partial_{x_j} \textstyle\sum_i u_i^2]_k

The diagonal part and the Zakharov-Kuznetsov coupling are treated implicitly,
the quadratic term explicitly.  The ZK term couples only modes along ``x_1``,
so for each transverse multi-index the implicit operator is a dense
``N_1 x N_1`` block which is inverted once per time step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .diagnostics import TimeSeriesRecord
from .errors import BlowUpError, ConfigurationError, ShapeError, SolverError
from .geometry import compute_a, compute_theta
from .spectral import (
    ModeGrid,
    SpectralField,
    apply_along_axis,
    cosine_coefficients,
    derivative_coupling_1d,
    interior_nodes,
    sine_analyze,
    sine_cosine_overlap,
    sine_synthesize,
    sobolev_norms,
    symbol_array,
    wavenumbers,
)

__all__ = [
    "SCHEMES",
    "IC_KINDS",
    "BLOWUP_THRESHOLD",
    "SolverConfig",
    "InitialData",
    "VectorState",
    "LinearPart",
    "Integrator",
    "initial_from_potential",
    "nonlinearity",
    "step",
    "run",
    "curl_residual",
    "record_state",
    "perturbation_contraction",
]

SCHEMES = ("imex1", "cnab2")
IC_KINDS = ("potential_bump", "single_mode", "random_curl_free")
BLOWUP_THRESHOLD = 1e12


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    scheme: str = "cnab2"
    zk_enabled: bool = True
    nonlinear_enabled: bool = True
    dealias: bool = True
    record_every: int = 1

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise ConfigurationError(f"t_end must be positive, got {self.t_end}")
        if self.dt > self.t_end * (1.0 + 1e-12):
            raise ConfigurationError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if int(self.record_every) < 1:
            raise ConfigurationError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.t_end / self.dt - 1e-9)))


@dataclass(frozen=True)
class InitialData:
    kind: str = "potential_bump"
    amplitude: float = 0.1
    mode: Optional[tuple[int, ...]] = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in IC_KINDS:
            raise ConfigurationError(f"unknown initial data kind {self.kind!r}; expected one of {IC_KINDS}")
        if not math.isfinite(self.amplitude):
            raise ConfigurationError("amplitude must be finite")
        if self.mode is not None:
            mode = tuple(int(k) for k in self.mode)
            if any(k < 1 for k in mode):
                raise ConfigurationError(f"mode indices start at 1, got {mode}")
            object.__setattr__(self, "mode", mode)


@dataclass(frozen=True, eq=False)
class VectorState:
    """Coefficients of ``(u_1, ..., u_n)``, stacked as shape ``(n, N_1, ..., N_n)``."""

    grid: ModeGrid
    components: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        expected = (self.grid.n,) + self.grid.modes
        if comps.shape != expected:
            raise ShapeError(f"state shape {comps.shape} != {expected}")
        object.__setattr__(self, "components", comps)

    def field(self, j: int) -> SpectralField:
        return SpectralField(self.grid, self.components[j])

    def h2_sq_per_j(self) -> np.ndarray:
        mu = symbol_array(self.grid)
        axes = tuple(range(1, self.grid.n + 1))
        return np.sum(mu**2 * self.components**2, axis=axes) * self.grid.weight


# ---------------------------------------------------------------------------
# initial data


def _bump_factor(q: int, x: np.ndarray, L: float):
    """``sin(pi x/L)**2 cos(q pi x/L)`` and its derivative."""
    w = math.pi / L
    s2 = np.sin(w * x) ** 2
    cq = np.cos(q * w * x)
    ds2 = w * np.sin(2.0 * w * x)
    return s2 * cq, ds2 * cq - q * w * s2 * np.sin(q * w * x)


def _potential_terms(data: InitialData, n: int) -> list[tuple[float, tuple[int, ...]]]:
    terms = [(1.0, (0,) * n)]
    if data.kind == "random_curl_free":
        rng = np.random.default_rng(data.seed)
        for _ in range(4):
            q = tuple(int(v) for v in rng.integers(0, 4, size=n))
            terms.append((float(0.5 * rng.standard_normal()), q))
    return terms


def _projection_points(grid: ModeGrid) -> tuple[int, ...]:
    fine = tuple(2 * M + 1 for M in grid.grid_points)
    if np.prod(fine, dtype=float) <= 2**22:
        return fine
    return grid.grid_points


def initial_from_potential(grid: ModeGrid, data: InitialData) -> VectorState:
    """Initial state ``u_j = d phi0 / dx_j`` projected onto the sine basis.

    ``potential_bump`` uses ``phi0 = A prod_i sin(pi x_i/L_i)**2``, whose
    gradient vanishes on the whole boundary; ``random_curl_free`` multiplies
    that bump by a seeded random cosine polynomial.  ``single_mode`` is the
    diagnostic field ``u_j = A (k_j pi / L_j) w_k``, a single basis function
    per component which is *not* a gradient.
    """
    n = grid.n
    comps = np.zeros((n,) + grid.modes)
    if data.amplitude == 0.0:
        return VectorState(grid, comps, 0.0)

    if data.kind == "single_mode":
        k = data.mode if data.mode is not None else (1,) * n
        if len(k) != n:
            raise ConfigurationError(f"mode {k} has wrong length for n={n}")
        if any(ki > Ni for ki, Ni in zip(k, grid.modes)):
            raise ConfigurationError(f"mode {k} is outside the truncation {grid.modes}")
        idx = tuple(ki - 1 for ki in k)
        for j in range(n):
            comps[(j,) + idx] = data.amplitude * k[j] * math.pi / grid.lengths[j]
        return VectorState(grid, comps, 0.0)

    points = _projection_points(grid)
    nodes = [interior_nodes(M, L) for M, L in zip(points, grid.lengths)]
    for coef, qs in _potential_terms(data, n):
        factors = [_bump_factor(q, x, L) for q, x, L in zip(qs, nodes, grid.lengths)]
        for j in range(n):
            values = np.array(coef * data.amplitude)
            for i in range(n):
                values = np.multiply.outer(values, factors[i][1] if i == j else factors[i][0])
            comps[j] += sine_analyze(values, grid.modes)
    return VectorState(grid, comps, 0.0)


# ---------------------------------------------------------------------------
# nonlinear term


def nonlinearity(state: VectorState, dealias: bool = True) -> np.ndarray:
    """Galerkin projection of ``1/2 d/dx_j sum_i u_i**2`` for every ``j``.

    ``s = sum_i u_i**2`` is sampled on the collocation grid (``grid_points``
    per axis when ``dealias``, otherwise ``modes``).  Because every ``u_i``
    vanishes on the boundary, ``s`` is a cosine polynomial that the DCT-I
    through the interior samples and the zero boundary recovers exactly once
    ``M_i + 1 >= 2 N_i``.  Along ``x_j`` the derivative maps ``cos`` to
    ``sin`` term by term; along the other axes the cosine coefficients are
    projected onto the sines with the closed-form overlap integrals.
    """
    grid = state.grid
    n = grid.n
    points = grid.grid_points if dealias else grid.modes
    s = None
    for c in state.components:
        u = sine_synthesize(c, points)
        s = u * u if s is None else s + u * u
    chat = cosine_coefficients(s)

    ks = wavenumbers(grid)
    projectors = [
        (2.0 / math.pi) * sine_cosine_overlap(N, P + 1) for N, P in zip(grid.modes, points)
    ]
    out = np.empty((n,) + grid.modes)
    for j in range(n):
        arr = chat
        for axis in range(n):
            if axis == j:
                shape = [1] * n
                shape[axis] = grid.modes[axis]
                arr = np.take(arr, np.arange(1, grid.modes[axis] + 1), axis=axis)
                arr = arr * (-ks[axis]).reshape(shape)
            else:
                arr = apply_along_axis(projectors[axis], arr, axis)
        out[j] = 0.5 * arr
    return out


# ---------------------------------------------------------------------------
# linear part


class LinearPart:
    """``A = D - Z``: ``D = diag(mu**2 - mu)`` and the ZK coupling ``Z`` along ``x_1``.

    ``Z[k, m] = (2 / L_1) I[k1, m1] mu_m`` within each transverse line, with
    ``I`` from :func:`derivative_coupling_1d`.
    """

    def __init__(self, grid: ModeGrid, zk_enabled: bool):
        self.grid = grid
        self.zk_enabled = bool(zk_enabled)
        mu = symbol_array(grid)
        self.diag = mu**2 - mu
        if self.zk_enabled:
            N1 = grid.modes[0]
            self._line_mu = np.moveaxis(mu, 0, -1).reshape(-1, N1)
            coupling = derivative_coupling_1d(N1, grid.lengths[0]) * (2.0 / grid.lengths[0])
            lines = coupling[None, :, :] * self._line_mu[:, None, :]
            idx = np.arange(N1)
            lines = -lines
            lines[:, idx, idx] += self._line_mu**2 - self._line_mu
            self.lines = lines

    # coefficients (n, N1, ...) <-> lines (n, T, N1)
    def _to_lines(self, c: np.ndarray) -> np.ndarray:
        moved = np.moveaxis(c, 1, -1)
        return moved.reshape(c.shape[0], -1, self.grid.modes[0])

    def _from_lines(self, lines: np.ndarray) -> np.ndarray:
        shape = (lines.shape[0],) + self.grid.modes[1:] + (self.grid.modes[0],)
        return np.moveaxis(lines.reshape(shape), -1, 1)

    def apply(self, c: np.ndarray) -> np.ndarray:
        if not self.zk_enabled:
            return self.diag * c
        out = np.einsum("tij,ntj->nti", self.lines, self._to_lines(c))
        return self._from_lines(out)

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of ``A`` (growth rates are ``-Re`` of these)."""
        if not self.zk_enabled:
            return self.diag.ravel().astype(complex)
        return np.linalg.eigvals(self.lines).ravel()

    def shifted_solver(self, h: float) -> Callable[[np.ndarray], np.ndarray]:
        """Return ``rhs -> (I + h A)^{-1} rhs`` after checking invertibility."""
        if not self.zk_enabled:
            denom = 1.0 + h * self.diag
            if np.any(np.abs(denom) < 1e-12):
                k = np.unravel_index(int(np.argmin(np.abs(denom))), denom.shape)
                raise SolverError(
                    f"implicit operator singular at mode {tuple(int(v) + 1 for v in k)} for step {h}"
                )
            return lambda rhs: rhs / denom
        N1 = self.grid.modes[0]
        mats = np.eye(N1)[None, :, :] + h * self.lines
        cond = np.linalg.cond(mats)
        if not np.all(np.isfinite(cond)) or np.max(cond) > 1e13:
            worst = int(np.argmax(np.where(np.isfinite(cond), cond, np.inf)))
            raise SolverError(
                f"implicit ZK block {worst} is (nearly) singular for step {h}: cond={cond[worst]:.3g}"
            )
        inverse = np.linalg.inv(mats)

        def solve(rhs):
            out = np.einsum("tij,ntj->nti", inverse, self._to_lines(rhs))
            return self._from_lines(out)

        return solve


class Integrator:
    """IMEX stepper holding the factorized implicit operators and the AB2 history."""

    def __init__(self, grid: ModeGrid, config: SolverConfig):
        if config.dealias and config.nonlinear_enabled and not grid.dealias_ok():
            raise ConfigurationError(
                f"dealiasing needs grid_points >= ceil(3 N / 2); got {grid.grid_points} for modes {grid.modes}"
            )
        self.grid = grid
        self.config = config
        self.linear = LinearPart(grid, config.zk_enabled)
        dt = config.dt
        self._implicit_euler = self.linear.shifted_solver(dt)
        if config.scheme == "cnab2":
            self._cn_solve = self.linear.shifted_solver(0.5 * dt)
        self._previous = None

    def reset(self):
        self._previous = None

    def nonlinear_term(self, state: VectorState) -> np.ndarray:
        if not self.config.nonlinear_enabled:
            return np.zeros_like(state.components)
        return nonlinearity(state, self.config.dealias)

    def step(self, state: VectorState, time: Optional[float] = None) -> VectorState:
        dt = self.config.dt
        c = state.components
        nl = self.nonlinear_term(state)
        if self.config.scheme == "imex1" or self._previous is None:
            new = self._implicit_euler(c - dt * nl)
        else:
            rhs = c - 0.5 * dt * self.linear.apply(c) - dt * (1.5 * nl - 0.5 * self._previous)
            new = self._cn_solve(rhs)
        self._previous = nl
        return VectorState(self.grid, new, state.time + dt if time is None else time)


def step(state: VectorState, config: SolverConfig) -> VectorState:
    """Advance one step from rest (a multistep scheme starts with its IMEX Euler step)."""
    return Integrator(state.grid, config).step(state)


# ---------------------------------------------------------------------------
# curl constraint


def curl_residual(state: VectorState) -> float:
    """Largest ``||d_j u_i - d_i u_j||`` over pairs, relative to ``max(1, sum_i ||grad u_i||)``.

    The derivative fields mix sine and cosine factors, so the squared
    difference is integrated with Gauss-Legendre quadrature in the two
    directions involved; the remaining directions are orthogonal sines and
    are summed by Parseval.
    """
    grid = state.grid
    n = grid.n
    ks = wavenumbers(grid)
    scale = max(1.0, sum(math.sqrt(sobolev_norms(state.field(i)).grad_sq) for i in range(n)))
    if not np.any(state.components):
        return 0.0

    quad = []
    for N, L, k in zip(grid.modes, grid.lengths, ks):
        xg, wg = leggauss(3 * N + 10)
        x = 0.5 * L * (xg + 1.0)
        quad.append((np.sin(np.outer(x, k)), np.cos(np.outer(x, k)), 0.5 * L * wg))

    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            others = [ax for ax in range(n) if ax not in (i, j)]
            transverse = float(np.prod([grid.lengths[ax] / 2.0 for ax in others]))
            shape_j = [1] * n
            shape_j[j] = grid.modes[j]
            shape_i = [1] * n
            shape_i[i] = grid.modes[i]
            # d_j u_i: cos along j;  d_i u_j: cos along i
            alpha = state.components[i] * ks[j].reshape(shape_j)
            beta = state.components[j] * ks[i].reshape(shape_i)
            a_grid = apply_along_axis(quad[j][1], apply_along_axis(quad[i][0], alpha, i), j)
            b_grid = apply_along_axis(quad[j][0], apply_along_axis(quad[i][1], beta, i), j)
            diff = np.moveaxis(a_grid - b_grid, (i, j), (0, 1))
            weights = np.multiply.outer(quad[i][2], quad[j][2])
            total = float(np.einsum("ab,ab...->", weights, diff * diff)) * transverse
            worst = max(worst, math.sqrt(max(total, 0.0)))
    return worst / scale


# ---------------------------------------------------------------------------
# driver


def record_state(state: VectorState, h2_initial: float, decay_rate: float) -> TimeSeriesRecord:
    mu = symbol_array(state.grid)
    axes = tuple(range(1, state.grid.n + 1))
    c2 = state.components**2 * state.grid.weight
    per_j = np.sum(mu**2 * c2, axis=axes)
    bilap = float(np.sum(mu**4 * c2))
    return TimeSeriesRecord(
        t=float(state.time),
        h2_sq_per_j=tuple(float(v) for v in per_j),
        h2_sq_total=float(np.sum(per_j)),
        bilap_sq_total=bilap,
        curl_residual=curl_residual(state),
        bound_envelope=float(h2_initial * math.exp(-decay_rate * state.time)),
    )


def run(
    grid: ModeGrid,
    data: InitialData,
    config: SolverConfig,
    initial: Optional[VectorState] = None,
    on_record: Optional[Callable[[TimeSeriesRecord], None]] = None,
) -> tuple[VectorState, list[TimeSeriesRecord]]:
    """Integrate to ``t_end`` and record norms every ``record_every`` steps.

    The series always contains ``t = 0`` and the final time.  The envelope
    column uses ``exp(-a**2 theta t / 2)`` with the box constants, whatever
    the sign of ``theta``.

    Raises
    ------
    BlowUpError
        If the H2 energy becomes non-finite or exceeds ``BLOWUP_THRESHOLD``;
        the partial series is attached to the exception.
    """
    state = initial if initial is not None else initial_from_potential(grid, data)
    if state.grid != grid:
        raise ConfigurationError("initial state lives on a different grid")
    a = compute_a(grid.domain)
    decay_rate = a * a * compute_theta(a) / 2.0
    integrator = Integrator(grid, config)
    mu2w = symbol_array(grid) ** 2 * grid.weight

    h2_0 = float(np.sum(mu2w * state.components**2))
    series = [record_state(state, h2_0, decay_rate)]
    if on_record is not None:
        on_record(series[-1])

    n_steps = config.n_steps
    for i in range(1, n_steps + 1):
        state = integrator.step(state, time=i * config.dt)
        with np.errstate(over="ignore", invalid="ignore"):
            energy = float(np.sum(mu2w * state.components**2))
        if not math.isfinite(energy) or energy > BLOWUP_THRESHOLD:
            raise BlowUpError(state.time, series, state)
        if i % config.record_every == 0 or i == n_steps:
            series.append(record_state(state, h2_0, decay_rate))
            if on_record is not None:
                on_record(series[-1])
    return state, series


def perturbation_contraction(
    grid: ModeGrid,
    data: InitialData,
    config: SolverConfig,
    epsilon: float = 1e-6,
    seed: int = 0,
) -> tuple[float, float]:
    """L2 distance between a run and a perturbed run, at ``t = 0`` and ``t_end``.

    The perturbation is a random smooth field of relative size ``epsilon``.
    """
    base = initial_from_potential(grid, data)
    rng = np.random.default_rng(seed)
    mu = symbol_array(grid)
    delta = rng.standard_normal(base.components.shape) / (1.0 + mu) ** 3
    delta *= epsilon * (np.linalg.norm(base.components) or 1.0) / np.linalg.norm(delta)
    perturbed = VectorState(grid, base.components + delta, 0.0)
    final_a, _ = run(grid, data, replace(config, record_every=config.n_steps), initial=base)
    final_b, _ = run(grid, data, replace(config, record_every=config.n_steps), initial=perturbed)
    w0 = float(np.sum(delta**2) * grid.weight)
    w1 = float(np.sum((final_a.components - final_b.components) ** 2) * grid.weight)
    return math.sqrt(w0), math.sqrt(w1)
