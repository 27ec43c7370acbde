import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kszk.errors import ConfigurationError
from kszk.geometry import (
    GEOMETRIC_THRESHOLD,
    DomainSpec,
    analyze_domain,
    compute_a,
    compute_theta,
    embedding_ratio,
    estimate_embedding_constant,
)
from kszk.spectral import ModeGrid, SpectralField

# unit square, mpmath at 40 digits
A_UNIT = 19.739208802178716
THETA_UNIT = 0.7242603291395546
RATE_UNIT = 141.09908066694288

lengths_st = st.floats(min_value=0.05, max_value=20.0, allow_nan=False)


def test_unit_square_constants():
    rep = analyze_domain(DomainSpec(2, (1.0, 1.0)))
    assert rep.a == pytest.approx(A_UNIT, rel=1e-15)
    assert rep.theta == pytest.approx(THETA_UNIT, rel=1e-14)
    assert rep.decay_rate == pytest.approx(RATE_UNIT, rel=1e-14)
    assert rep.geometric_margin == pytest.approx(2 * A_UNIT - 3 - math.sqrt(5), rel=1e-14)
    assert rep.geometric_ok and rep.a_exceeds_one


def test_published_rounded_values_within_tolerance():
    rep = analyze_domain(DomainSpec(2, (1.0, 1.0)))
    assert abs(rep.a - 19.7392088) / 19.7392088 < 1e-6
    assert abs(rep.theta - 0.7242597) / 0.7242597 < 1e-6
    # the quoted 141.10 carries only five digits
    assert rep.decay_rate == pytest.approx(141.10, abs=5e-3)


def test_theta_vanishes_at_threshold():
    assert abs(compute_theta(GEOMETRIC_THRESHOLD / 2)) < 1e-12


def test_threshold_is_golden_ratio_squared():
    phi = (1 + math.sqrt(5)) / 2
    assert GEOMETRIC_THRESHOLD / 2 == pytest.approx(phi**2, rel=1e-15)


def test_compute_theta_rejects_nonpositive():
    with pytest.raises(ValueError):
        compute_theta(0.0)
    with pytest.raises(ValueError):
        compute_theta(-1.0)


@pytest.mark.parametrize(
    "n, lengths",
    [(1, (1.0,)), (8, (1.0,) * 8), (2, (1.0,)), (2, (1.0, -1.0)), (2, (1.0, float("inf"))), (2, (0.0, 1.0))],
)
def test_domain_validation(n, lengths):
    with pytest.raises(ConfigurationError):
        DomainSpec(n, lengths)


def test_inadmissible_box_reports_no_rate():
    rep = analyze_domain(DomainSpec(2, (10.0, 10.0)), [1.0, 1.0], c_s=1.0)
    assert not rep.geometric_ok
    assert rep.theta < 0
    assert rep.decay_rate is None
    assert rep.smallness_margin is None
    assert not rep.smallness_applicable
    assert not rep.admissible


def test_smallness_margin_closed_form():
    dom = DomainSpec(3, (0.5, 1.0, 2.0))
    norms = [0.1, 0.2, 0.3]
    rep = analyze_domain(dom, norms, c_s=0.05)
    a = compute_a(dom)
    th = compute_theta(a)
    assert rep.smallness_margin == pytest.approx(th - 2 * 0.05**2 * 27 / (a * th) * 0.6, rel=1e-14)
    assert rep.smallness_margin_worst_case == pytest.approx(th - 2 * 0.05**2 * 343 / (a * th) * 0.6, rel=1e-14)
    assert rep.initial_h2_total == pytest.approx(0.6)


def test_bad_norms_rejected():
    dom = DomainSpec(2, (1.0, 1.0))
    with pytest.raises(ConfigurationError):
        analyze_domain(dom, [1.0])
    with pytest.raises(ConfigurationError):
        analyze_domain(dom, [1.0, -1.0])
    with pytest.raises(ConfigurationError):
        analyze_domain(dom, [1.0, 1.0], c_s=0.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 7).flatmap(lambda n: st.lists(lengths_st, min_size=n, max_size=n)))
def test_geometric_condition_matches_theta_sign(lengths):
    rep = analyze_domain(DomainSpec(len(lengths), tuple(lengths)))
    assert rep.geometric_ok == (rep.theta > 0)
    if abs(rep.geometric_margin) > 1e-9 * rep.a:
        assert rep.geometric_ok == (rep.geometric_margin > 0)
    assert rep.theta < 1


@settings(max_examples=100, deadline=None)
@given(st.lists(lengths_st, min_size=2, max_size=5), st.floats(0.1, 10.0))
def test_a_scales_inverse_square(lengths, c):
    dom = DomainSpec(len(lengths), tuple(lengths))
    assert compute_a(dom.scaled(c)) == pytest.approx(compute_a(dom) / c**2, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 1e4), st.floats(1e-6, 1e3))
def test_theta_increasing_in_a(a, delta):
    assert compute_theta(a + delta) > compute_theta(a)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 7), st.lists(st.floats(0.0, 10.0), min_size=7, max_size=7), st.floats(1e-4, 1.0))
def test_worst_case_margin_never_exceeds_dimensional(n, norms, c_s):
    rep = analyze_domain(DomainSpec(n, (0.3,) * n), norms[:n], c_s=c_s)
    assert rep.smallness_margin_worst_case <= rep.smallness_margin


def test_single_mode_embedding_ratio():
    dom = DomainSpec(2, (1.0, 2.0))
    grid = ModeGrid.create(dom, 3, 5)
    mu = math.pi**2 * (1 + 0.25)
    # the unnormalized mode peaks at 1 in the box centre, a grid node here
    expected = 1.0 / (mu**2 * math.sqrt(grid.weight))
    assert embedding_ratio(SpectralField.unit(grid, (1, 1))) == pytest.approx(expected, rel=1e-12)


def test_embedding_estimate_is_running_max():
    dom = DomainSpec(2, (1.0, 1.0))
    small = estimate_embedding_constant(dom, 6, 4, seed=3)
    large = estimate_embedding_constant(dom, 6, 32, seed=3)
    assert 0 < small <= large
    # random fields with coefficients mu**-4 are dominated by the lowest mode
    single = 1.0 / (2 * math.pi**2) ** 2 / math.sqrt(0.25)
    assert 0.5 * single < large < 2 * single


def test_embedding_estimate_deterministic():
    dom = DomainSpec(3, (1.0, 1.0, 0.5))
    assert estimate_embedding_constant(dom, 4, 8, seed=1) == estimate_embedding_constant(dom, 4, 8, seed=1)
