import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PENTAGON_LINES
from fairshare import oracle
from fairshare.bargaining import (
    BargainingSet,
    frontier_residual,
    halfspaces_from_lines,
    ideal_point,
    midpoint,
    raiffa_solve,
)
from fairshare.errors import InputError, NonConvergenceError


@pytest.fixture(scope="module")
def pentagon():
    return BargainingSet(*halfspaces_from_lines(PENTAGON_LINES))


def simplex_set(n=2, total=2.0):
    return BargainingSet(np.ones((1, n)), [total])


def test_upper_corner(pentagon):
    np.testing.assert_allclose(pentagon.upper_corner, [70.0, 160.0], atol=1e-9)


def test_empty_or_unbounded_rejected():
    with pytest.raises(InputError):
        BargainingSet([[1.0, 1.0]], [-1.0])
    with pytest.raises(InputError):
        BargainingSet([[1.0, -1.0]], [1.0])


def test_ideal_points(pentagon):
    np.testing.assert_allclose(ideal_point(pentagon, [0, 0]), [70.0, 160.0], atol=1e-9)
    np.testing.assert_allclose(ideal_point(pentagon, [35, 80]), [54.0, 137.5], atol=1e-9)
    frontier = [45.5, 111.25]
    np.testing.assert_allclose(ideal_point(pentagon, frontier), frontier, atol=1e-9)


def test_ideal_point_outside_set(pentagon):
    with pytest.raises(InputError):
        ideal_point(pentagon, [80.0, 0.0])


def test_midpoint():
    np.testing.assert_array_equal(midpoint([70, 160], [0, 0], 2), [35.0, 80.0])
    np.testing.assert_array_equal(midpoint([54, 137.5], [35, 80], 2), [44.5, 108.75])
    np.testing.assert_array_equal(midpoint([3, 4, 5], [3, 4, 5]), [3.0, 4.0, 5.0])


def test_frontier_residual(pentagon):
    assert frontier_residual(pentagon, [35, 80], [54, 137.5]) == pytest.approx(57.5)
    assert frontier_residual(pentagon, [45.5, 111.25], [45.5, 111.25]) == 0.0


def test_raiffa_trajectory(pentagon):
    m, trace = raiffa_solve(pentagon, [0, 0], epsilon=1e-4)
    expected = [(0, 0), (35, 80), (44.5, 108.75), (45.5, 111.25)]
    assert len(trace) == len(expected)
    for step, point in zip(trace, expected):
        np.testing.assert_allclose(step.midpoint, point, atol=1e-9)
    np.testing.assert_allclose(m, [45.5, 111.25], atol=1e-9)
    assert trace[-1].residual <= 1e-9


def test_raiffa_on_frontier_returns_immediately(pentagon):
    m, trace = raiffa_solve(pentagon, [45.5, 111.25])
    np.testing.assert_allclose(m, [45.5, 111.25])
    assert len(trace) == 1


def test_raiffa_symmetric_set():
    m, _ = raiffa_solve(simplex_set(), [0, 0])
    np.testing.assert_allclose(m, [1.0, 1.0], atol=1e-9)


def test_raiffa_step_cap_carries_trace():
    # a round disc-like set converges only geometrically
    angles = np.linspace(0.05, np.pi / 2 - 0.05, 25)
    bset = BargainingSet(np.stack([np.cos(angles), np.sin(angles)], axis=1), np.ones(25))
    with pytest.raises(NonConvergenceError) as info:
        raiffa_solve(bset, [0, 0], epsilon=1e-12, max_steps=2)
    assert len(info.value.trace) == 3


def test_affine_covariance(pentagon):
    scale, shift = np.array([2.0, 0.5]), np.array([1.0, -3.0])
    moved = pentagon.transformed(scale, shift)
    m, _ = raiffa_solve(moved, shift)
    np.testing.assert_allclose(m, scale * np.array([45.5, 111.25]) + shift, atol=1e-9)


def test_grid_certificate(pentagon):
    m, _ = raiffa_solve(pentagon, [0, 0], epsilon=1e-4)
    assert oracle.grid_set_pareto_check(pentagon, m, 1e-4).overall
    assert not oracle.grid_set_pareto_check(pentagon, [40.0, 100.0], 1e-4).overall


@st.composite
def comprehensive_sets(draw):
    """Convex comprehensive sets: positive normals intersected with x >= 0."""
    n = draw(st.integers(2, 3))
    rows = draw(st.integers(1, 4))
    normals = draw(
        st.lists(
            st.lists(st.floats(0.1, 5.0), min_size=n, max_size=n), min_size=rows, max_size=rows
        )
    )
    offsets = draw(st.lists(st.floats(1.0, 20.0), min_size=rows, max_size=rows))
    return BargainingSet(normals, offsets)


@settings(max_examples=40, deadline=None)
@given(bset=comprehensive_sets())
def test_raiffa_trace_properties(bset):
    n = bset.dimension
    m, trace = raiffa_solve(bset, np.zeros(n), epsilon=1e-6)
    for prev, cur in zip(trace, trace[1:]):
        assert bset.contains(cur.midpoint, tol=1e-7)
        assert np.all(cur.midpoint >= prev.midpoint - 1e-12)
        slack_prev = np.max(prev.ideal - prev.midpoint)
        slack_cur = np.max(cur.ideal - cur.midpoint)
        assert slack_cur <= (1 - 1 / n) * slack_prev + 1e-9
    assert trace[-1].residual <= 1e-6 or np.allclose(trace[-1].midpoint, trace[-2].midpoint)
    if n <= 2:
        assert oracle.grid_set_pareto_check(bset, m, 1e-4, resolution=200).overall
