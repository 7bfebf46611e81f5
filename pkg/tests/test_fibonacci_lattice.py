import pytest

from cplab.fibonacci_lattice import (
    AreaBoundConstants,
    BoundCheck,
    LatticeSpec,
    Rect,
    check_all_lattice_rectangles,
    check_area_bounds,
    count_in_rectangle,
    dominance_incidence,
    fibonacci,
    is_fibonacci,
    largest_fibonacci_at_most,
    scaled_lattice,
    unscaled_lattice,
)
from cplab.rng import substream


class TestFibonacci:
    def test_base_case(self):
        assert fibonacci(1) == 1
        assert fibonacci(2) == 1

    def test_recurrence_values(self):
        assert fibonacci(5) == 5
        assert fibonacci(10) == 55

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            fibonacci(0)

    def test_is_fibonacci(self):
        assert [m for m in range(1, 60) if is_fibonacci(m)] == [1, 2, 3, 5, 8, 13, 21, 34, 55]

    def test_largest_at_most(self):
        assert largest_fibonacci_at_most(1) == 1
        assert largest_fibonacci_at_most(25) == 21
        assert largest_fibonacci_at_most(410) == 377
        with pytest.raises(ValueError):
            largest_fibonacci_at_most(0)


class TestScaledLattice:
    def test_single_point(self):
        assert list(scaled_lattice(LatticeSpec.create(1, 8))) == [(0, 0)]

    def test_five_points_scaled(self):
        points = list(scaled_lattice(LatticeSpec.create(5, 25)))
        assert points == [(0, 0), (5, 15), (10, 5), (15, 20), (20, 10)]

    def test_eight_points_unit_scale(self):
        points = list(scaled_lattice(LatticeSpec.create(8, 8)))
        assert points == [(0, 0), (1, 5), (2, 2), (3, 7), (4, 4), (5, 1), (6, 6), (7, 3)]

    def test_non_fibonacci_size_rejected(self):
        with pytest.raises(ValueError):
            LatticeSpec.create(6, 12)

    @pytest.mark.parametrize("m", [2, 3, 5, 8, 13, 21])
    def test_unscaled_second_coordinates_are_a_permutation(self, m):
        ys = [y for _, y in unscaled_lattice(m)]
        assert sorted(ys) == list(range(m))

    @pytest.mark.parametrize("m,n", [(5, 25), (8, 8), (13, 100), (21, 21 * 8)])
    def test_one_distinct_point_per_column(self, m, n):
        points = list(scaled_lattice(LatticeSpec.create(m, n)))
        assert len(points) == m
        assert len(set(points)) == m
        assert [x for x, _ in points] == [j * n // m for j in range(m)]


class TestCountInRectangle:
    def test_rectangle_beyond_extent(self):
        points = scaled_lattice(LatticeSpec.create(8, 8))
        assert count_in_rectangle(points, Rect(100, 200, 100, 200)) == 0

    def test_unscaled_f8(self):
        points = scaled_lattice(LatticeSpec.create(8, 8))
        assert count_in_rectangle(points, Rect(0, 3, 0, 3)) == 2

    def test_scaled_f5(self):
        points = scaled_lattice(LatticeSpec.create(5, 25))
        assert count_in_rectangle(points, Rect(0, 20, 0, 20)) == 5


class TestAreaBounds:
    def test_constants_ordering_enforced(self):
        from fractions import Fraction

        defaults = AreaBoundConstants()
        assert float(defaults.a1) == 1.9 and float(defaults.a2) == 0.45
        with pytest.raises(ValueError):
            AreaBoundConstants(a1=Fraction(1, 10), a2=Fraction(9, 20))

    def test_example_rectangle(self):
        check = check_area_bounds(LatticeSpec.create(5, 25), Rect(0, 20, 0, 20))
        assert check == BoundCheck(alpha=3.2, lower=1, upper=8, actual=5, passed=True)

    def test_zero_area_rectangle(self):
        check = check_area_bounds(LatticeSpec.create(5, 25), Rect(10, 10, 5, 5))
        assert check.lower == 0
        assert check.actual >= 0
        assert check.passed

    def test_domain_violation(self):
        with pytest.raises(ValueError):
            check_area_bounds(LatticeSpec.create(5, 25), Rect(0, 21, 0, 20))

    def test_random_rectangles_m55_unit_scale(self):
        # 10^4 random rectangles inside the bound's domain all pass
        spec = LatticeSpec.create(55, 55)
        points = scaled_lattice(spec)
        rng = substream(55, "lattice-random-rects")
        limit = 55 - 1  # n - n/m
        for _ in range(10_000):
            x0, x1 = sorted((rng.randint(0, limit), rng.randint(0, limit)))
            y0, y1 = sorted((rng.randint(0, limit), rng.randint(0, limit)))
            check = check_area_bounds(spec, Rect(x0, x1, y0, y1), points=points)
            assert check.passed, (x0, x1, y0, y1, check)


class TestRectangleSweep:
    @pytest.mark.parametrize("m", [13, 21])
    def test_exhaustive_sweep_passes(self, m):
        sweep = check_all_lattice_rectangles(m, 8 * m)
        per_axis = m * (m + 1) // 2
        assert sweep.rectangles == per_axis * per_axis
        assert sweep.violations == 0

    def test_sweep_counting_agrees_with_brute_force(self):
        # the sweep counts via an index-space prefix sum; check it
        # against the brute-force scan on random lattice rectangles
        m, n = 13, 104
        spec = LatticeSpec.create(m, n)
        points = scaled_lattice(spec)
        coords = [j * n // m for j in range(m)]
        perm = [(j * spec.multiplier) % m for j in range(m)]
        rng = substream(9, "sweep-cross-check")
        for _ in range(300):
            a, b = sorted((rng.randrange(m), rng.randrange(m)))
            c, d = sorted((rng.randrange(m), rng.randrange(m)))
            rect = Rect(coords[a], coords[b], coords[c], coords[d])
            brute = count_in_rectangle(points, rect)
            prefix = sum(1 for j in range(a, b + 1) if c <= perm[j] <= d)
            assert brute == prefix
            assert check_area_bounds(spec, rect, points=points).passed


class TestDominanceIncidence:
    def test_masks(self):
        points = scaled_lattice(LatticeSpec.create(5, 25))
        assert dominance_incidence(points, (24, 24)) == (1, 1, 1, 1, 1)
        assert dominance_incidence(points, (12, 16)) == (1, 1, 1, 0, 0)
        assert dominance_incidence(points, (0, 0)) == (1, 0, 0, 0, 0)
