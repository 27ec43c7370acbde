"""Box geometry, the Poincare constant ``a`` and the admissibility conditions.

Everything here depends only on the box ``(0, L_1) x ... x (0, L_n)``.  The
functions are pure and cheap; ``estimate_embedding_constant`` is the only one
that touches the spectral machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "DomainSpec",
    "AdmissibilityReport",
    "GEOMETRIC_THRESHOLD",
    "compute_a",
    "compute_theta",
    "analyze_domain",
    "embedding_ratio",
    "estimate_embedding_constant",
]

MIN_DIM = 2
MAX_DIM = 7

# 2a must exceed this for theta = 1 - 1/a - 1/sqrt(a) to be positive
GEOMETRIC_THRESHOLD = 3.0 + math.sqrt(5.0)


@dataclass(frozen=True)
class DomainSpec:
    """Rectangular box ``prod_i (0, L_i)`` in ``n`` dimensions."""

    n: int
    lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ConfigurationError(f"dimension must be an integer, got {self.n!r}")
        if not MIN_DIM <= self.n <= MAX_DIM:
            raise ConfigurationError(
                f"dimension n={self.n} outside the supported range [{MIN_DIM}, {MAX_DIM}]"
            )
        if len(lengths) != self.n:
            raise ConfigurationError(
                f"expected {self.n} side lengths, got {len(lengths)}"
            )
        for length in lengths:
            if not math.isfinite(length) or length <= 0.0:
                raise ConfigurationError(f"side lengths must be positive and finite, got {length}")

    @classmethod
    def box(cls, *lengths: float) -> "DomainSpec":
        return cls(len(lengths), tuple(lengths))

    def scaled(self, factor: float) -> "DomainSpec":
        return DomainSpec(self.n, tuple(factor * v for v in self.lengths))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


@dataclass(frozen=True)
class AdmissibilityReport:
    """Constants and margins deciding whether the exponential decay bound applies to a run.

    ``smallness_margin`` uses the dimension actually in play (``n**3``);
    ``smallness_margin_worst_case`` uses the ``7**3`` constant valid for every
    supported dimension.  Both are ``None`` when no initial data were given or
    when ``theta <= 0`` (``smallness_applicable`` tells the two apart).
    """

    n: int
    a: float
    theta: float
    geometric_ok: bool
    geometric_margin: float
    c_s_used: float
    initial_h2_total: Optional[float] = None
    smallness_applicable: bool = False
    smallness_margin: Optional[float] = None
    smallness_margin_worst_case: Optional[float] = None
    decay_rate: Optional[float] = None

    @property
    def a_exceeds_one(self) -> bool:
        """Whether the ``a > 1`` hypothesis of the H2/H4 norm bounds holds."""
        return self.a > 1.0

    @property
    def smallness_ok(self) -> Optional[bool]:
        if self.smallness_margin is None:
            return None
        return self.smallness_margin > 0.0

    @property
    def admissible(self) -> bool:
        """Geometric condition holds and, if data were supplied, smallness too."""
        if not self.geometric_ok:
            return False
        if self.initial_h2_total is None:
            return True
        return bool(self.smallness_ok)


def compute_a(domain: DomainSpec) -> float:
    """Return ``sum_i pi**2 / L_i**2``, the lowest Dirichlet eigenvalue of -Laplace."""
    if not isinstance(domain, DomainSpec):
        raise ConfigurationError("compute_a expects a DomainSpec")
    return float(sum(math.pi**2 / length**2 for length in domain.lengths))


def compute_theta(a: float) -> float:
    """Return ``1 - 1/a - 1/sqrt(a)``; may be non-positive."""
    if not a > 0.0 or not math.isfinite(a):
        raise ValueError(f"a must be positive and finite, got {a}")
    return 1.0 - 1.0 / a - 1.0 / math.sqrt(a)


def analyze_domain(
    domain: DomainSpec,
    initial_h2_norms: Optional[Sequence[float]] = None,
    c_s: float = 1.0,
) -> AdmissibilityReport:
    """Evaluate the geometric and smallness conditions for ``domain``.

    Parameters
    ----------
    domain : DomainSpec
    initial_h2_norms : sequence of float, optional
        ``||Laplace u_j0||**2`` for each of the ``n`` components.
    c_s : float
        Constant of the bound ``sup|f| <= c_s ||Laplace**2 f||``.
    """
    if not c_s > 0.0 or not math.isfinite(c_s):
        raise ConfigurationError(f"c_s must be positive and finite, got {c_s}")
    a = compute_a(domain)
    theta = compute_theta(a)
    margin = 2.0 * a - GEOMETRIC_THRESHOLD
    # margin > 0 and theta > 0 are the same condition; evaluate it once so
    # rounding at the threshold cannot make them disagree
    geometric_ok = bool(theta > 0.0)

    fields = dict(
        n=domain.n,
        a=a,
        theta=theta,
        geometric_ok=geometric_ok,
        geometric_margin=margin,
        c_s_used=float(c_s),
        decay_rate=a * a * theta / 2.0 if geometric_ok else None,
    )
    if initial_h2_norms is not None:
        norms = np.asarray(initial_h2_norms, dtype=float)
        if norms.shape != (domain.n,):
            raise ConfigurationError(
                f"expected {domain.n} initial norms, got shape {norms.shape}"
            )
        if np.any(norms < 0.0) or not np.all(np.isfinite(norms)):
            raise ConfigurationError("initial norms must be finite and non-negative")
        total = float(norms.sum())
        fields["initial_h2_total"] = total
        if geometric_ok:
            fields["smallness_applicable"] = True
            fields["smallness_margin"] = theta - 2.0 * c_s**2 * domain.n**3 / (a * theta) * total
            fields["smallness_margin_worst_case"] = theta - 2.0 * c_s**2 * 7**3 / (a * theta) * total
    return AdmissibilityReport(**fields)


def embedding_ratio(field) -> float:
    """``max|f|`` over the field's collocation nodes divided by ``||Laplace**2 f||``."""
    from .spectral import sobolev_norms, synthesize

    bilap = math.sqrt(sobolev_norms(field).bilap_sq)
    if bilap == 0.0:
        return 0.0
    return float(np.max(np.abs(synthesize(field).values)) / bilap)


def estimate_embedding_constant(
    domain: DomainSpec,
    modes_per_dim: int,
    samples: int,
    seed: int,
    oversample: int = 4,
) -> float:
    """Discrete estimate of ``C_s`` in ``sup|f| <= C_s ||Laplace**2 f||``.

    Random truncated sine fields with coefficients ``g_k / mu_k**4`` (``g_k``
    standard normal) are normalized to ``||Laplace**2 f|| = 1`` and their
    maximum modulus on an odd collocation grid (which contains the box centre)
    is recorded.  The running maximum is returned, so the estimate never
    decreases as ``samples`` grows for a fixed seed.
    """
    from .spectral import ModeGrid, SpectralField, sobolev_norms, symbol_array, synthesize

    if modes_per_dim < 1:
        raise ConfigurationError("modes_per_dim must be at least 1")
    if samples < 1:
        raise ConfigurationError("samples must be at least 1")
    modes = (int(modes_per_dim),) * domain.n
    points = (oversample * int(modes_per_dim) + 1,) * domain.n
    grid = ModeGrid(domain, modes, points)
    mu = symbol_array(grid)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        coeffs = rng.standard_normal(modes) / mu**4
        field = SpectralField(grid, coeffs)
        coeffs = coeffs / math.sqrt(sobolev_norms(field).bilap_sq)
        peak = float(np.max(np.abs(synthesize(SpectralField(grid, coeffs)).values)))
        best = max(best, peak)
    return best
