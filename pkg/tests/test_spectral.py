import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss

from kszk.errors import ConfigurationError, ShapeError
from kszk.geometry import DomainSpec
from kszk.spectral import (
    ModeGrid,
    PhysicalField,
    SpectralField,
    analyze,
    cosine_coefficients,
    derivative_coupling_1d,
    directional_gradlap_sq,
    evaluate,
    interior_nodes,
    mode_symbol,
    sine_analyze,
    sine_cosine_overlap,
    sine_synthesize,
    sobolev_norms,
    symbol_array,
    synthesize,
)


def gl(nodes, L):
    x, w = leggauss(nodes)
    return 0.5 * L * (x + 1), 0.5 * L * w


def test_grid_defaults_and_weight():
    grid = ModeGrid.create(DomainSpec(3, (1.0, 2.0, 3.0)), (4, 5, 6))
    assert grid.grid_points == (8, 10, 12)
    assert grid.weight == pytest.approx(0.5 * 1.0 * 1.5)
    assert grid.dealias_ok()
    assert not ModeGrid.create(DomainSpec(2, (1.0, 1.0)), 8, 10).dealias_ok()


def test_grid_rejects_bad_shapes():
    dom = DomainSpec(2, (1.0, 1.0))
    with pytest.raises((ConfigurationError, ShapeError)):
        ModeGrid.create(dom, (4,))
    with pytest.raises((ConfigurationError, ShapeError)):
        ModeGrid.create(dom, (4, 0))
    with pytest.raises((ConfigurationError, ShapeError)):
        ModeGrid.create(dom, (4, 4), (3, 4))


def test_field_shape_checked():
    grid = ModeGrid.create(DomainSpec(2, (1.0, 1.0)), (4, 4))
    with pytest.raises(ShapeError):
        SpectralField(grid, np.zeros((4, 5)))
    with pytest.raises(ShapeError):
        PhysicalField(grid, np.zeros((4, 4)))


def test_mode_symbol():
    dom = DomainSpec(2, (1.0, 2.0))
    assert mode_symbol((2, 3), dom) == pytest.approx(math.pi**2 * (4 + 9 / 4))
    with pytest.raises(IndexError):
        mode_symbol((0, 1), dom)
    with pytest.raises(IndexError):
        mode_symbol((1,), dom)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(1, 9), min_size=2, max_size=3),
    st.integers(0, 2**32 - 1),
)
def test_transform_round_trip(modes, seed):
    dom = DomainSpec(len(modes), (1.0, 0.7, 2.3)[: len(modes)])
    grid = ModeGrid.create(dom, tuple(modes))
    coeffs = np.random.default_rng(seed).standard_normal(tuple(modes))
    back = analyze(synthesize(SpectralField(grid, coeffs))).coeffs
    assert np.max(np.abs(back - coeffs)) < 1e-13 * max(1.0, np.max(np.abs(coeffs)))


def test_synthesize_matches_direct_sum():
    rng = np.random.default_rng(1)
    grid = ModeGrid.create(DomainSpec(2, (1.3, 0.6)), (5, 7), (9, 11))
    field = SpectralField(grid, rng.standard_normal(grid.modes))
    x = interior_nodes(9, 1.3)
    y = interior_nodes(11, 0.6)
    pts = np.stack(np.meshgrid(x, y, indexing="ij"), axis=-1)
    assert np.allclose(synthesize(field).values, evaluate(field, pts), atol=1e-13)


def test_evaluate_vanishes_on_boundary():
    rng = np.random.default_rng(2)
    grid = ModeGrid.create(DomainSpec(2, (1.0, 2.0)), (6, 6))
    field = SpectralField(grid, rng.standard_normal(grid.modes))
    t = rng.uniform(0, 1, 20)
    edges = np.concatenate(
        [np.c_[np.zeros(20), 2 * t], np.c_[np.ones(20), 2 * t], np.c_[t, np.zeros(20)], np.c_[t, 2 * np.ones(20)]]
    )
    assert np.max(np.abs(evaluate(field, edges))) < 1e-12


def test_synthesize_needs_enough_nodes():
    with pytest.raises(ShapeError):
        sine_synthesize(np.ones((5, 5)), (4, 5))
    with pytest.raises(ShapeError):
        sine_analyze(np.ones((4, 5)), (5, 5))


def test_cosine_coefficients_exact_for_products():
    # the square of a sine series is a cosine polynomial that vanishes on the boundary
    rng = np.random.default_rng(3)
    L = (1.0, 1.7)
    grid = ModeGrid.create(DomainSpec(2, L), (6, 5))
    field = SpectralField(grid, rng.standard_normal(grid.modes))
    u = synthesize(field).values
    chat = cosine_coefficients(u * u)
    pts = rng.uniform(0, 1, (30, 2)) * np.array(L)
    p0 = np.arange(chat.shape[0]) * math.pi / L[0]
    p1 = np.arange(chat.shape[1]) * math.pi / L[1]
    recon = np.array([np.cos(p0 * x) @ chat @ np.cos(p1 * y) for x, y in pts])
    assert np.allclose(recon, evaluate(field, pts) ** 2, atol=1e-12)


def test_overlap_matches_quadrature():
    t, w = gl(200, math.pi)
    S = sine_cosine_overlap(12, 20)
    ref = (np.sin(np.outer(t, np.arange(1, 13))) * w[:, None]).T @ np.cos(np.outer(t, np.arange(21)))
    assert np.max(np.abs(S - ref)) < 1e-12


@pytest.mark.parametrize("N", [1, 2, 5, 16, 33])
@pytest.mark.parametrize("L", [0.3, 1.0, 7.0])
def test_coupling_skew_and_quadrature(N, L):
    mat = derivative_coupling_1d(N, L)
    assert np.array_equal(mat, -mat.T)
    x, w = gl(150, L)
    k = np.arange(1, N + 1) * math.pi / L
    ref = (np.sin(np.outer(x, k)) * w[:, None]).T @ (np.cos(np.outer(x, k)) * k)
    assert np.max(np.abs(mat - ref)) < 1e-10


def test_coupling_parity_pattern():
    mat = derivative_coupling_1d(8, 1.0)
    k = np.arange(1, 9)
    even = (k[:, None] + k[None, :]) % 2 == 0
    assert np.all(mat[even] == 0)
    assert np.all(mat[~even] != 0)


def test_coupling_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        derivative_coupling_1d(0, 1.0)
    with pytest.raises(ConfigurationError):
        derivative_coupling_1d(3, 0.0)


def test_sobolev_norms_against_quadrature():
    rng = np.random.default_rng(4)
    L = (1.0, 0.8)
    grid = ModeGrid.create(DomainSpec(2, L), (4, 5))
    coeffs = rng.standard_normal(grid.modes)
    field = SpectralField(grid, coeffs)
    norms = sobolev_norms(field)
    (x, wx), (y, wy) = gl(40, L[0]), gl(40, L[1])
    kx = np.arange(1, 5) * math.pi / L[0]
    ky = np.arange(1, 6) * math.pi / L[1]
    sx, cx = np.sin(np.outer(x, kx)), np.cos(np.outer(x, kx))
    sy, cy = np.sin(np.outer(y, ky)), np.cos(np.outer(y, ky))
    W = np.outer(wx, wy)
    f = sx @ coeffs @ sy.T
    fx = (cx * kx) @ coeffs @ sy.T
    fy = sx @ coeffs @ (cy * ky).T
    lap = -(sx @ (coeffs * symbol_array(grid)) @ sy.T)
    assert norms.l2_sq == pytest.approx(np.sum(W * f**2), rel=1e-12)
    assert norms.grad_sq == pytest.approx(np.sum(W * (fx**2 + fy**2)), rel=1e-12)
    assert norms.lap_sq == pytest.approx(np.sum(W * lap**2), rel=1e-12)
    # x-derivative of the Laplacian
    lapx = -((cx * kx) @ (coeffs * symbol_array(grid)) @ sy.T)
    assert directional_gradlap_sq(field, 0) == pytest.approx(np.sum(W * lapx**2), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_norm_chain_is_log_convex(seed):
    # Cauchy-Schwarz in the spectral weights: ||grad f||^4 <= ||f||^2 ||Lap f||^2
    grid = ModeGrid.create(DomainSpec(2, (1.0, 1.5)), (6, 6))
    s = sobolev_norms(SpectralField(grid, np.random.default_rng(seed).standard_normal(grid.modes)))
    assert s.grad_sq**2 <= s.l2_sq * s.lap_sq * (1 + 1e-12)
    assert s.lap_sq**2 <= s.grad_sq * s.gradlap_sq * (1 + 1e-12)
