import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PENTAGON_LINES
from fairshare import oracle
from fairshare.bankruptcy import (
    CEA,
    CEL,
    ClaimsProblem,
    aumann_bargaining_single,
    aumann_search,
    cg_rule,
    talmud_rule,
)
from fairshare.bargaining import BargainingSet, halfspaces_from_lines
from fairshare.errors import InputError


def test_contested_garment():
    assert cg_rule(0.5, 1.0, 1.0) == pytest.approx((0.25, 0.75))
    assert cg_rule(3.0, 3.0, 3.0) == pytest.approx((1.5, 1.5))
    estate = 70 + 160 - 2 * (70 - 270 / 7)
    x1, x2 = cg_rule(70.0, 160.0, estate)
    assert x1 == pytest.approx(270 / 7, abs=1e-9)
    assert x2 == pytest.approx(900 / 7, abs=1e-9)


def test_contested_garment_domain():
    with pytest.raises(InputError):
        cg_rule(1.0, 1.0, 2.5)
    with pytest.raises(InputError):
        cg_rule(-1.0, 1.0, 0.5)


@pytest.mark.parametrize(
    "estate, expected",
    [(100, (100 / 3, 100 / 3, 100 / 3)), (200, (50, 75, 75)), (300, (50, 100, 150)), (600, (100, 200, 300))],
)
def test_talmud_rulings(estate, expected):
    award = talmud_rule(ClaimsProblem([100, 200, 300], estate))
    np.testing.assert_allclose(award.amounts, expected, atol=1e-9)


def test_talmud_branches():
    assert talmud_rule(ClaimsProblem([100, 200, 300], 200)).rule == CEA
    assert talmud_rule(ClaimsProblem([100, 200, 300], 400)).rule == CEL


def test_claims_problem_validation():
    with pytest.raises(InputError):
        ClaimsProblem([1.0, 2.0], 4.0)
    with pytest.raises(InputError):
        ClaimsProblem([1.0, np.nan], 1.0)
    with pytest.raises(InputError):
        ClaimsProblem([], 0.0)


def test_unsorted_claims_match_sorted():
    a = talmud_rule(ClaimsProblem([300, 100, 200], 200)).amounts
    np.testing.assert_allclose(a, [75, 50, 75], atol=1e-9)


def test_self_dual_at_half_estate():
    rng = np.random.default_rng(4)
    for _ in range(50):
        c = rng.uniform(0, 100, size=rng.integers(1, 7))
        award = talmud_rule(ClaimsProblem(c, c.sum() / 2))
        np.testing.assert_allclose(award.amounts, c / 2, atol=1e-9)


def test_equal_claims_equal_awards():
    award = talmud_rule(ClaimsProblem([10, 40, 40, 70], 95)).amounts
    assert award[1] == award[2]


claims_strategy = st.lists(st.floats(0.0, 1000.0), min_size=1, max_size=6)


@settings(max_examples=500, deadline=None)
@given(claims=claims_strategy, share=st.floats(0.0, 1.0))
def test_talmud_pairwise_consistent(claims, share):
    c = np.array(claims)
    estate = share * c.sum()
    x = talmud_rule(ClaimsProblem(c, estate)).amounts
    assert x.sum() == pytest.approx(estate, abs=1e-9 * max(1.0, c.sum()))
    assert np.all(x >= -1e-12) and np.all(x <= c + 1e-9)
    for i, j in itertools.combinations(range(c.size), 2):
        xi, xj = cg_rule(c[i], c[j], x[i] + x[j])
        assert xi == pytest.approx(x[i], abs=1e-6)
        assert xj == pytest.approx(x[j], abs=1e-6)
        if c[i] <= c[j]:
            assert x[i] <= x[j] + 1e-9
    assert oracle.cg_consistency_check(c, np.zeros_like(c), x).overall


@settings(max_examples=100, deadline=None)
@given(claims=claims_strategy)
def test_talmud_monotone_in_estate(claims):
    c = np.array(claims)
    previous = np.zeros_like(c)
    for estate in np.linspace(0, c.sum(), 21):
        x = talmud_rule(ClaimsProblem(c, estate)).amounts
        assert np.all(x >= previous - 1e-9)
        previous = x


def _scan(c, estate, resolution=1e-7):
    """Water level by scanning a grid of step ``resolution``."""
    half = c / 2
    awards = estate <= c.sum() / 2
    target = estate if awards else c.sum() - estate
    grid = np.arange(0.0, half.max() + resolution, resolution)
    totals = np.minimum(half[None, :], grid[:, None]).sum(axis=1)
    x = np.minimum(half, grid[np.searchsorted(totals, target - 1e-12)])
    return x if awards else c - x


def test_matches_water_level_scan():
    rng = np.random.default_rng(17)
    for _ in range(10):
        c = rng.uniform(0, 1, size=rng.integers(2, 6))
        estate = rng.uniform(0, c.sum())
        np.testing.assert_allclose(
            talmud_rule(ClaimsProblem(c, estate)).amounts, _scan(c, estate), atol=c.size * 1e-7
        )


def test_aumann_two_player_pentagon():
    bset = BargainingSet(*halfspaces_from_lines(PENTAGON_LINES))
    point = aumann_bargaining_single(bset, [0, 0])
    np.testing.assert_allclose(point, [270 / 7, 900 / 7], atol=1e-6)
    losses = np.array([70.0, 160.0]) - point
    assert losses[0] == pytest.approx(losses[1], abs=1e-6)


def test_aumann_symmetric():
    bset = BargainingSet([[1.0, 1.0]], [2.0])
    np.testing.assert_allclose(aumann_bargaining_single(bset, [0, 0]), [1.0, 1.0], atol=1e-9)


def test_aumann_search_on_claims_set_is_talmud():
    # the set {x >= 0, sum x <= E} with claims c reproduces the Talmud rule
    c = np.array([100.0, 200.0, 300.0])
    for estate in (100.0, 200.0, 300.0, 450.0):
        def inside(x, estate=estate):
            return bool(np.all(x >= -1e-12) and np.all(x <= c + 1e-9) and x.sum() <= estate + 1e-9)

        out = aumann_search(c, np.zeros(3), inside)
        expected = talmud_rule(ClaimsProblem(c, estate))
        np.testing.assert_allclose(out.point, expected.amounts, atol=1e-6)
        if estate != c.sum() / 2:  # both branches coincide at half the claims
            assert out.branch == expected.rule


@st.composite
def two_player_sets(draw):
    rows = draw(st.integers(1, 4))
    normals = draw(
        st.lists(st.tuples(st.floats(0.1, 5.0), st.floats(0.1, 5.0)), min_size=rows, max_size=rows)
    )
    offsets = draw(st.lists(st.floats(1.0, 20.0), min_size=rows, max_size=rows))
    return BargainingSet(normals, offsets)


@settings(max_examples=60, deadline=None)
@given(bset=two_player_sets())
def test_two_player_always_equal_losses(bset):
    # with two players half the claims are always reachable by convexity
    ideal = bset.upper_corner
    claims = ideal.copy()
    out = aumann_search(claims, np.zeros(2), bset.contains)
    assert out.branch == CEL
    assert oracle.cg_consistency_check(claims, np.zeros(2), out.point, tol=1e-6).overall
    assert bset.contains(out.point, tol=1e-7)
    assert not bset.contains(out.point + 1e-6)
