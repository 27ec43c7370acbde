r"""Sine-product basis on a box and the transforms around it.

A scalar field is stored as coefficients of

.. math::

    w_k(x) = \prod_{i=1}^n \sin(k_i \pi x_i / L_i), \qquad k_i = 1, \dots, N_i,

which are the eigenfunctions of the bilaplacian with ``w = Laplace w = 0`` on
the boundary: ``-Laplace w_k = mu_k w_k`` with ``mu_k = sum_i (k_i pi / L_i)**2``.
The basis is not normalized, ``int w_k**2 = prod_i L_i / 2``.

Physical values live on the interior nodes ``x_m = m L / (M + 1)``,
``m = 1..M`` of the type-I discrete sine transform, so ``analyze`` and
``synthesize`` are an exact inverse pair whenever ``M >= N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
import scipy.fft

from .errors import ConfigurationError, ShapeError
from .geometry import DomainSpec

__all__ = [
    "ModeGrid",
    "SpectralField",
    "PhysicalField",
    "SobolevNorms",
    "mode_symbol",
    "symbol_array",
    "wavenumbers",
    "interior_nodes",
    "sine_synthesize",
    "sine_analyze",
    "cosine_coefficients",
    "analyze",
    "synthesize",
    "evaluate",
    "sine_cosine_overlap",
    "derivative_coupling_1d",
    "sobolev_norms",
    "directional_gradlap_sq",
    "apply_along_axis",
]


@dataclass(frozen=True)
class ModeGrid:
    """Truncation ``N_i`` and collocation size ``M_i`` per dimension."""

    domain: DomainSpec
    modes: tuple[int, ...]
    grid_points: tuple[int, ...]

    def __post_init__(self):
        modes = tuple(int(v) for v in self.modes)
        points = tuple(int(v) for v in self.grid_points)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "grid_points", points)
        n = self.domain.n
        if len(modes) != n or len(points) != n:
            raise ConfigurationError(
                f"modes and grid_points need {n} entries, got {len(modes)} and {len(points)}"
            )
        for N, M in zip(modes, points):
            if N < 1:
                raise ConfigurationError(f"mode counts must be >= 1, got {N}")
            if M < N:
                raise ConfigurationError(f"grid_points {M} smaller than modes {N}")

    @classmethod
    def create(cls, domain: DomainSpec, modes, grid_points=None) -> "ModeGrid":
        """Build a grid; ``grid_points`` defaults to ``2 N_i`` (alias-free products)."""
        if isinstance(modes, (int, np.integer)):
            modes = (int(modes),) * domain.n
        if grid_points is None:
            grid_points = tuple(2 * int(N) for N in modes)
        elif isinstance(grid_points, (int, np.integer)):
            grid_points = (int(grid_points),) * domain.n
        return cls(domain, tuple(modes), tuple(grid_points))

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def lengths(self) -> tuple[float, ...]:
        return self.domain.lengths

    @property
    def weight(self) -> float:
        """``int w_k**2 dx`` for every basis function."""
        return float(np.prod([L / 2.0 for L in self.domain.lengths]))

    def dealias_ok(self) -> bool:
        return all(M >= math.ceil(1.5 * N) for N, M in zip(self.modes, self.grid_points))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: ModeGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != self.grid.modes:
            raise ShapeError(f"coefficient shape {coeffs.shape} != modes {self.grid.modes}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("spectral coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, grid: ModeGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.modes))

    @classmethod
    def unit(cls, grid: ModeGrid, k: Sequence[int]) -> "SpectralField":
        coeffs = np.zeros(grid.modes)
        coeffs[tuple(int(ki) - 1 for ki in k)] = 1.0
        return cls(grid, coeffs)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: ModeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.grid_points:
            raise ShapeError(f"value shape {values.shape} != grid {self.grid.grid_points}")
        if not np.all(np.isfinite(values)):
            raise ValueError("physical values must be finite")
        object.__setattr__(self, "values", values)


class SobolevNorms(NamedTuple):
    l2_sq: float
    grad_sq: float
    lap_sq: float
    gradlap_sq: float
    bilap_sq: float

    @property
    def h2_sq(self) -> float:
        return self.l2_sq + self.grad_sq + self.lap_sq

    @property
    def h4_sq(self) -> float:
        return self.l2_sq + self.grad_sq + self.lap_sq + self.gradlap_sq + self.bilap_sq


def mode_symbol(k: Sequence[int], domain: DomainSpec) -> float:
    """Symbol ``mu_k`` of ``-Laplace`` on ``w_k``; the bilaplacian symbol is ``mu_k**2``."""
    if len(k) != domain.n:
        raise IndexError(f"multi-index {tuple(k)} has wrong length for n={domain.n}")
    if any(int(ki) < 1 for ki in k):
        raise IndexError(f"mode indices start at 1, got {tuple(k)}")
    return float(sum((int(ki) * math.pi / L) ** 2 for ki, L in zip(k, domain.lengths)))


def wavenumbers(grid: ModeGrid) -> list[np.ndarray]:
    """Per-dimension arrays ``k pi / L_i`` for ``k = 1..N_i``."""
    return [np.arange(1, N + 1) * (math.pi / L) for N, L in zip(grid.modes, grid.lengths)]


def symbol_array(grid: ModeGrid) -> np.ndarray:
    return _symbol_array(grid.modes, grid.lengths)


@lru_cache(maxsize=64)
def _symbol_array(modes, lengths) -> np.ndarray:
    mu = np.zeros(modes)
    for axis, (N, L) in enumerate(zip(modes, lengths)):
        shape = [1] * len(modes)
        shape[axis] = N
        mu = mu + ((np.arange(1, N + 1) * (math.pi / L)) ** 2).reshape(shape)
    mu.setflags(write=False)
    return mu


def interior_nodes(M: int, L: float) -> np.ndarray:
    return np.arange(1, M + 1) * (L / (M + 1))


def apply_along_axis(matrix: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    """Contract ``matrix[i, j]`` with ``arr`` along ``axis`` (index ``j``)."""
    out = np.tensordot(matrix, arr, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def sine_synthesize(coeffs: np.ndarray, points: Sequence[int]) -> np.ndarray:
    """Evaluate a sine series on interior DST-I nodes with ``points[i]`` nodes per axis."""
    out = np.asarray(coeffs, dtype=float)
    for axis, M in enumerate(points):
        N = out.shape[axis]
        if M < N:
            raise ShapeError(f"cannot synthesize {N} modes on {M} nodes")
        if M > N:
            pad = [(0, 0)] * out.ndim
            pad[axis] = (0, M - N)
            out = np.pad(out, pad)
        out = 0.5 * scipy.fft.dst(out, type=1, axis=axis)
    return out


def sine_analyze(values: np.ndarray, modes: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`sine_synthesize`, truncated to ``modes``."""
    out = np.asarray(values, dtype=float)
    for axis, N in enumerate(modes):
        M = out.shape[axis]
        if M < N:
            raise ShapeError(f"cannot analyze {N} modes from {M} nodes")
        out = scipy.fft.dst(out, type=1, axis=axis) / (M + 1)
        out = np.take(out, np.arange(N), axis=axis)
    return out


def cosine_coefficients(interior: np.ndarray) -> np.ndarray:
    """Cosine coefficients of a field that vanishes on the whole box boundary.

    ``interior`` holds values on the DST-I nodes (``M_i`` per axis).  The
    result has ``M_i + 2`` entries per axis: the coefficients ``c_p`` of
    ``cos(p pi x / L)``, ``p = 0..M_i+1``, of the DCT-I interpolant through
    those values and the zero boundary.  Exact for cosine polynomials of
    degree ``<= M_i + 1``.
    """
    out = np.pad(np.asarray(interior, dtype=float), 1)
    for axis in range(out.ndim):
        P1 = out.shape[axis] - 1
        out = scipy.fft.dct(out, type=1, axis=axis) / P1
        ends = [slice(None)] * out.ndim
        ends[axis] = [0, P1]
        out[tuple(ends)] *= 0.5
    return out


def analyze(phys: PhysicalField) -> SpectralField:
    return SpectralField(phys.grid, sine_analyze(phys.values, phys.grid.modes))


def synthesize(spec: SpectralField) -> PhysicalField:
    return PhysicalField(spec.grid, sine_synthesize(spec.coeffs, spec.grid.grid_points))


def evaluate(field: SpectralField, points: np.ndarray) -> np.ndarray:
    """Evaluate the sine series at arbitrary points of shape ``(..., n)``."""
    points = np.asarray(points, dtype=float)
    if points.shape[-1] != field.grid.n:
        raise ShapeError(f"points need trailing dimension {field.grid.n}")
    flat = points.reshape(-1, field.grid.n)
    out = np.empty(flat.shape[0])
    ks = wavenumbers(field.grid)
    for idx, x in enumerate(flat):
        acc = field.coeffs
        for axis in range(field.grid.n - 1, -1, -1):
            acc = acc @ np.sin(ks[axis] * x[axis])
        out[idx] = acc
    return out.reshape(points.shape[:-1])


@lru_cache(maxsize=128)
def _overlap(kmax: int, pmax: int) -> np.ndarray:
    k = np.arange(1, kmax + 1)[:, None].astype(float)
    p = np.arange(0, pmax + 1)[None, :].astype(float)
    odd = (np.arange(1, kmax + 1)[:, None] + np.arange(0, pmax + 1)[None, :]) % 2 == 1
    denom = np.where(odd, k * k - p * p, 1.0)
    out = np.where(odd, 2.0 * k / denom, 0.0)
    out.setflags(write=False)
    return out


def sine_cosine_overlap(kmax: int, pmax: int) -> np.ndarray:
    """``S[k-1, p] = int_0^pi sin(k t) cos(p t) dt`` for ``k = 1..kmax``, ``p = 0..pmax``.

    Closed form ``k (1 - (-1)**(k+p)) / (k**2 - p**2)``; zero when ``k + p`` is
    even (in particular on the diagonal).
    """
    return _overlap(int(kmax), int(pmax))


def derivative_coupling_1d(N: int, L: float) -> np.ndarray:
    """Raw inner products ``I[k-1, m-1] = int_0^L sin(k pi x/L) d/dx sin(m pi x/L) dx``.

    Equal to ``k m (1 - (-1)**(k+m)) / (k**2 - m**2)`` off the diagonal and 0 on
    it; independent of ``L`` and skew-symmetric.  Divide by ``L / 2`` to get
    the Galerkin matrix of ``d/dx``.
    """
    if N < 1:
        raise ConfigurationError("N must be >= 1")
    if not L > 0.0:
        raise ConfigurationError("L must be positive")
    k = np.arange(1, N + 1, dtype=float)[:, None]
    m = k.T
    odd = (k + m) % 2 == 1
    # one rounding per entry keeps the matrix exactly skew
    return np.where(odd, 2.0 * k * m / np.where(odd, k * k - m * m, 1.0), 0.0)


def sobolev_norms(spec: SpectralField) -> SobolevNorms:
    """Squared norms of ``f, grad f, Laplace f, grad Laplace f, Laplace**2 f`` by Parseval."""
    mu = symbol_array(spec.grid)
    c2 = spec.coeffs**2 * spec.grid.weight
    return SobolevNorms(
        l2_sq=float(np.sum(c2)),
        grad_sq=float(np.sum(mu * c2)),
        lap_sq=float(np.sum(mu**2 * c2)),
        gradlap_sq=float(np.sum(mu**3 * c2)),
        bilap_sq=float(np.sum(mu**4 * c2)),
    )


def directional_gradlap_sq(spec: SpectralField, axis: int = 0) -> float:
    """``||d/dx_axis Laplace f||**2``."""
    mu = symbol_array(spec.grid)
    shape = [1] * spec.grid.n
    shape[axis] = spec.grid.modes[axis]
    kk = wavenumbers(spec.grid)[axis].reshape(shape) ** 2
    return float(np.sum(kk * mu**2 * spec.coeffs**2) * spec.grid.weight)
