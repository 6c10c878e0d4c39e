import itertools
import math

import numpy as np
import pytest

from mpmc.discrepancy import (
    BACKEND,
    ProjectionSpec,
    _reference,
    all_subsets,
    evaluate_star_at,
    hickernell_from_subsets,
    hickernell_p2,
    local_discrepancy_field,
    resolve_subsets,
    star_discrepancy,
    warnock_l2_squared,
    warnock_l2_squared_grad,
)
from mpmc.errors import ComplexityBudgetExceeded, InvalidConfig, UnsupportedDimension
from mpmc.generators import fibonacci_set, halton, sobol, uniform_random
from mpmc.points import PointSet


# --- independent oracles ---

def l2_squared_by_piecewise_integration(x: np.ndarray) -> float:
    """Exact integral of (count([0,t))/N - vol)^2 cell by cell (d <= 2).

    The counting function is constant on each cell of the grid induced by
    the point coordinates, so the integral is a finite sum of polynomial
    integrals. Independent of the closed-form pair formula.
    """
    n, d = x.shape
    if d == 1:
        edges = np.unique(np.concatenate([[0.0], x[:, 0], [1.0]]))
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            c = np.sum(x[:, 0] <= a) / n
            # integral of (c - t)^2 over [a, b]
            total += ((c - a) ** 3 - (c - b) ** 3) / 3.0
        return total
    ex = np.unique(np.concatenate([[0.0], x[:, 0], [1.0]]))
    ey = np.unique(np.concatenate([[0.0], x[:, 1], [1.0]]))
    total = 0.0
    for a, b in zip(ex[:-1], ex[1:]):
        inx = x[:, 0] <= a
        for c, e in zip(ey[:-1], ey[1:]):
            cnt = np.sum(inx & (x[:, 1] <= c)) / n
            i1 = (b - a) * (e - c)
            i2 = (b * b - a * a) / 2.0 * (e * e - c * c) / 2.0
            i3 = (b**3 - a**3) / 3.0 * (e**3 - c**3) / 3.0
            total += cnt * cnt * i1 - 2.0 * cnt * i2 + i3
    return total


def star_by_overcomplete_boxes(x: np.ndarray) -> float:
    """Both supremum candidates over an over-complete corner family."""
    n, d = x.shape
    corners = []
    for k in range(d):
        vals = np.unique(x[:, k])
        mids = (vals[:-1] + vals[1:]) / 2.0 if len(vals) > 1 else np.empty(0)
        corners.append(np.unique(np.concatenate([vals, mids, [0.5 * vals[0], 1.0]])))
    best = 0.0
    for corner in itertools.product(*corners):
        corner = np.asarray(corner)
        closed = np.sum(np.all(x <= corner, axis=1)) / n
        opened = np.sum(np.all(x < corner, axis=1)) / n
        vol = float(np.prod(corner))
        best = max(best, closed - vol, vol - opened)
    return best


def hickernell_exhaustive_closed_form(x: np.ndarray) -> float:
    """Sum over all projections via the product identity; independent route."""
    n, d = x.shape
    t1 = (4.0 / 3.0) ** d - 1.0
    t2 = -(2.0 / n) * float((np.prod((3.0 - x * x) / 2.0, axis=1) - 1.0).sum())
    m = np.maximum(x[:, None, :], x[None, :, :])
    t3 = float((np.prod(2.0 - m, axis=2) - 1.0).sum()) / n**2
    return math.sqrt(t1 + t2 + t3)


# --- warnock ---

class TestWarnock:
    def test_single_point_half(self):
        assert warnock_l2_squared(PointSet(np.array([[0.5]]))) == pytest.approx(1 / 12, abs=1e-12)

    def test_single_point_origin(self):
        assert warnock_l2_squared(PointSet(np.array([[0.0]]))) == pytest.approx(1 / 3, abs=1e-12)

    def test_two_points(self):
        pts = PointSet(np.array([[0.25], [0.75]]))
        assert warnock_l2_squared(pts) == pytest.approx(1 / 48, abs=1e-12)

    def test_matches_piecewise_integration_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            d = int(rng.integers(1, 3))
            x = rng.random((n, d))
            got = warnock_l2_squared(x)
            want = l2_squared_by_piecewise_integration(x)
            assert got == pytest.approx(want, rel=1e-9)

    def test_non_negative(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            assert warnock_l2_squared(rng.random((6, 3))) >= 0.0

    def test_backends_agree(self):
        rng = np.random.default_rng(5)
        x = rng.random((40, 3))
        assert warnock_l2_squared(x) == pytest.approx(_reference.warnock_value(x), rel=1e-12)

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(6)
        h = 1e-6
        for _ in range(5):
            x = rng.uniform(0.05, 0.95, (6, 2))
            _, grad = warnock_l2_squared_grad(x)
            for i in range(6):
                for k in range(2):
                    xp = x.copy(); xp[i, k] += h
                    xm = x.copy(); xm[i, k] -= h
                    num = (warnock_l2_squared(xp) - warnock_l2_squared(xm)) / (2 * h)
                    assert grad[i, k] == pytest.approx(num, rel=1e-4, abs=1e-9)


# --- star ---

class TestStar:
    def test_single_point_1d(self):
        rep = star_discrepancy(PointSet(np.array([[0.5]])))
        assert rep.value == pytest.approx(0.5, abs=1e-15)

    def test_single_centered_point_2d(self):
        rep = star_discrepancy(PointSet(np.array([[0.5, 0.5]])))
        assert rep.value == pytest.approx(0.75, abs=1e-15)

    def test_matches_overcomplete_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            d = int(rng.integers(1, 3))
            x = rng.random((n, d))
            assert star_discrepancy(x).value == star_by_overcomplete_boxes(x)

    def test_3d_matches_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            x = rng.random((5, 3))
            assert star_discrepancy(x).value == pytest.approx(star_by_overcomplete_boxes(x), abs=1e-15)

    def test_witness_reproduces_value(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            x = rng.random((8, 2))
            rep = star_discrepancy(x)
            assert evaluate_star_at(x, rep.witness) == pytest.approx(rep.value, abs=1e-15)

    def test_invariant_under_coordinate_permutation(self):
        rng = np.random.default_rng(10)
        x = rng.random((12, 3))
        v = star_discrepancy(x).value
        for perm in itertools.permutations(range(3)):
            assert star_discrepancy(x[:, perm]).value == pytest.approx(v, abs=1e-14)

    def test_duplicate_point_changes_value_by_at_most_1_over_n(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            x = rng.random((n, 2))
            dup = np.vstack([x, x[int(rng.integers(0, n))]])
            v0 = star_discrepancy(x).value
            v1 = star_discrepancy(dup).value
            assert abs(v1 - v0) <= 1.0 / n + 1e-12

    def test_value_bounds(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            v = star_discrepancy(rng.random((6, 2))).value
            assert 0.0 <= v <= 1.0

    def test_budget_guard_high_dim(self):
        x = uniform_random(40, 6, seed=0)
        with pytest.raises(ComplexityBudgetExceeded):
            star_discrepancy(x, cell_budget=10_000)

    def test_fibonacci_reference_values(self):
        assert star_discrepancy(fibonacci_set(5)).value == pytest.approx(0.3528, abs=5e-4)
        assert star_discrepancy(fibonacci_set(20)).value == pytest.approx(0.11885, abs=1e-4)


# --- local field ---

class TestLocalField:
    def test_full_box_is_zero(self):
        rng = np.random.default_rng(14)
        field = local_discrepancy_field(rng.random((9, 2)), resolution=8)
        assert field.shape == (8, 8)
        assert field[-1, -1] == 0.0

    def test_values_vanish_toward_origin(self):
        pts = PointSet(np.array([[0.9, 0.9]]))
        field = local_discrepancy_field(pts, resolution=50)
        assert abs(field[0, 0]) <= (1 / 50) ** 2 + 1e-15

    def test_grid_max_below_star(self):
        rng = np.random.default_rng(15)
        x = rng.random((7, 2))
        field = local_discrepancy_field(x, resolution=64)
        assert np.abs(field).max() <= star_discrepancy(x).value + 1e-12

    def test_rejects_other_dims(self):
        with pytest.raises(UnsupportedDimension):
            local_discrepancy_field(uniform_random(5, 3, seed=0), resolution=4)

    def test_half_open_counting(self):
        # a point exactly on a grid line is not inside the half-open box
        pts = PointSet(np.array([[0.5, 0.5]]))
        field = local_discrepancy_field(pts, resolution=2)
        assert field[0, 0] == pytest.approx(-0.25)  # count 0, volume 1/4


# --- hickernell ---

class TestHickernell:
    def test_d1_reduces_to_plain_l2(self):
        rng = np.random.default_rng(16)
        x = rng.random((9, 1))
        got = hickernell_p2(x, ProjectionSpec(mode="exhaustive"))
        assert got == pytest.approx(math.sqrt(warnock_l2_squared(x)), rel=1e-12)

    def test_exhaustive_matches_explicit_enumeration(self):
        rng = np.random.default_rng(17)
        for d in (2, 3):
            x = rng.random((6, d))
            ex = hickernell_p2(x, ProjectionSpec(mode="exhaustive"))
            subsets = all_subsets(d)
            assert len(subsets) == 2**d - 1
            explicit = hickernell_p2(x, ProjectionSpec(mode="explicit", explicit_sets=subsets))
            assert ex == pytest.approx(explicit, rel=1e-12)

    def test_exhaustive_matches_closed_form_identity(self):
        rng = np.random.default_rng(18)
        for d in (2, 3, 4):
            x = rng.random((7, d))
            got = hickernell_p2(x, ProjectionSpec(mode="exhaustive"))
            assert got == pytest.approx(hickernell_exhaustive_closed_form(x), rel=1e-11)

    def test_random_mode_deterministic_by_seed(self):
        x = uniform_random(8, 5, seed=0)
        spec = ProjectionSpec(mode="random", k_samples=6, seed=9)
        assert hickernell_p2(x, spec) == hickernell_p2(x, spec)
        assert resolve_subsets(spec, 5) == resolve_subsets(spec, 5)

    def test_random_covering_all_subsets_equals_exhaustive(self):
        x = uniform_random(6, 2, seed=1)
        explicit = hickernell_p2(
            x, ProjectionSpec(mode="explicit", explicit_sets=[(0,), (1,), (0, 1)])
        )
        assert explicit == pytest.approx(hickernell_p2(x, ProjectionSpec(mode="exhaustive")), rel=1e-12)

    def test_monotone_in_added_subsets(self):
        x = uniform_random(6, 3, seed=2)
        small = hickernell_from_subsets(x, [(0,), (1,)])
        large = hickernell_from_subsets(x, [(0,), (1,), (0, 2)])
        assert small <= large

    def test_exhaustive_guard(self):
        x = uniform_random(4, 25, seed=3)
        with pytest.raises(ComplexityBudgetExceeded):
            hickernell_p2(x, ProjectionSpec(mode="exhaustive"))

    def test_order_weights_validation(self):
        spec = ProjectionSpec(mode="random", k_samples=2, order_weights=[0.5, 0.6])
        with pytest.raises(InvalidConfig):
            spec.validate(2)

    def test_order_weights_restrict_orders(self):
        spec = ProjectionSpec(mode="random", k_samples=32, order_weights=[1.0, 0.0, 0.0], seed=4)
        for s in resolve_subsets(spec, 3):
            assert len(s) == 1


class TestBackends:
    def test_backend_reported(self):
        assert BACKEND in ("compiled", "fallback")

    def test_star_backends_identical(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            x = rng.random((10, 2))
            v, _ = _reference.star_2d(x)
            assert star_discrepancy(x).value == pytest.approx(v, abs=1e-15)
        for _ in range(5):
            x = rng.random((6, 3))
            v, _ = _reference.star_nd(x)
            assert star_discrepancy(x).value == pytest.approx(v, abs=1e-15)

    def test_warnock_grad_backends_identical(self):
        rng = np.random.default_rng(20)
        x = rng.random((25, 4))
        v1, g1 = warnock_l2_squared_grad(x)
        v2, g2 = _reference.warnock_value_grad(x)
        assert v1 == pytest.approx(v2, rel=1e-12)
        assert np.allclose(g1, g2, rtol=1e-12, atol=1e-15)
