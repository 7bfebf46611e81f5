"""Fibonacci lattices, their scaling to an [n] x [n] grid, and the
rectangle point-count bounds that make them useful hard inputs.

The two-sided bound relating a rectangle's normalised area to the
number of lattice points it contains is tested with rational constants
a1 = 19/10 and a2 = 9/20 plus one point of slack; the constants are
only known approximately, and floor-scaling to grids the lattice size
does not divide shifts counts by at most one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np


@dataclass(frozen=True)
class AreaBoundConstants:
    """The two divisors of the rectangle bound; known only approximately
    upstream, so stored as exact decimals and tested with slack."""

    a1: Fraction = Fraction(19, 10)
    a2: Fraction = Fraction(9, 20)

    def __post_init__(self) -> None:
        if not self.a1 > self.a2 > 0:
            raise ValueError("need a1 > a2 > 0")


AREA_BOUNDS = AreaBoundConstants()
A1 = AREA_BOUNDS.a1
A2 = AREA_BOUNDS.a2


def fibonacci(k: int) -> int:
    """k'th Fibonacci number with f_1 = f_2 = 1."""
    if k < 1:
        raise ValueError("fibonacci index must be >= 1")
    a, b = 1, 1
    for _ in range(k - 2):
        a, b = b, a + b
    return b if k > 1 else a


def fibonacci_pair_for(m: int) -> tuple[int, int]:
    """Return (k, f_{k-1}) with f_k = m; m = 1 resolves to k = 2."""
    if m < 1:
        raise ValueError("lattice size must be >= 1")
    prev, cur, k = 1, 1, 2
    while cur < m:
        prev, cur = cur, prev + cur
        k += 1
    if cur != m:
        raise ValueError(f"{m} is not a Fibonacci number")
    return k, prev


def is_fibonacci(m: int) -> bool:
    try:
        fibonacci_pair_for(m)
        return True
    except ValueError:
        return False


def largest_fibonacci_at_most(x: int) -> int:
    if x < 1:
        raise ValueError("no Fibonacci number <= 0")
    prev, cur = 1, 1
    while cur <= x:
        prev, cur = cur, prev + cur
    return prev


@dataclass(frozen=True)
class LatticeSpec:
    """Parameters of a Fibonacci lattice scaled onto [0, n)^2."""

    m: int
    multiplier: int
    n: int

    @classmethod
    def create(cls, m: int, n: int) -> "LatticeSpec":
        if not 1 <= m <= n:
            raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
        _, multiplier = fibonacci_pair_for(m)
        return cls(m=m, multiplier=multiplier, n=n)

    @property
    def scale(self) -> Fraction:
        return Fraction(self.n, self.m)


@dataclass(frozen=True)
class PointSet:
    """Integer points in insertion order (order = update order)."""

    points: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.points)

    def __getitem__(self, idx: int) -> tuple[int, int]:
        return self.points[idx]


def unscaled_lattice(m: int) -> PointSet:
    _, mult = fibonacci_pair_for(m)
    return PointSet(tuple((j, (j * mult) % m) for j in range(m)))


def scaled_lattice(spec: LatticeSpec) -> PointSet:
    """The m lattice points floor-scaled by n/m, one per column j*n//m."""
    m, mult, n = spec.m, spec.multiplier, spec.n
    return PointSet(
        tuple((j * n // m, ((j * mult) % m) * n // m) for j in range(m))
    )


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle [x0, x1] x [y0, y1]."""

    x0: int
    x1: int
    y0: int
    y1: int

    def __post_init__(self) -> None:
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError("rectangle sides must be ordered")

    @property
    def area(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


def count_in_rectangle(points: Iterable[tuple[int, int]], rect: Rect) -> int:
    """Brute-force closed-rectangle membership count."""
    return sum(
        1
        for (x, y) in points
        if rect.x0 <= x <= rect.x1 and rect.y0 <= y <= rect.y1
    )


@dataclass(frozen=True)
class BoundCheck:
    alpha: float
    lower: int
    upper: int
    actual: int
    passed: bool


def check_area_bounds(
    spec: LatticeSpec,
    rect: Rect,
    slack: int = 1,
    points: PointSet | None = None,
) -> BoundCheck:
    """Test floor(alpha/a1) - slack <= count <= ceil(alpha/a2) + slack.

    alpha is the rectangle area in units of n^2/m. The rectangle must
    lie inside [0, n - n/m]^2, the domain on which the bound holds.
    Bounds are computed with exact rational arithmetic.
    """
    m, n = spec.m, spec.n
    # domain test m*x1 <= m*n - n avoids forming the rational n/m
    if rect.x0 < 0 or rect.y0 < 0 or m * rect.x1 > m * n - n or m * rect.y1 > m * n - n:
        raise ValueError(f"rectangle {rect} outside the bound's domain [0, n - n/m]^2")
    alpha = Fraction(rect.area * m, n * n)
    lower = math.floor(alpha / A1)
    upper = math.ceil(alpha / A2)
    if points is None:
        points = scaled_lattice(spec)
    actual = count_in_rectangle(points, rect)
    passed = lower - slack <= actual <= upper + slack
    return BoundCheck(alpha=float(alpha), lower=lower, upper=upper, actual=actual, passed=passed)


def dominance_incidence(
    points: Iterable[tuple[int, int]], q: tuple[int, int]
) -> tuple[int, ...]:
    """0/1 mask, in point order, of the points dominated by q."""
    qx, qy = q
    return tuple(1 if (x <= qx and y <= qy) else 0 for (x, y) in points)


@dataclass(frozen=True)
class RectangleSweep:
    rectangles: int
    violations: int


def check_all_lattice_rectangles(m: int, n: int, slack: int = 1) -> RectangleSweep:
    """Exhaustive bound check over every rectangle with corners on
    lattice coordinates inside [0, n - n/m]^2.

    Vectorised sweep: per x-range, a prefix sum over the column->row
    permutation answers all y-ranges at once. Counts agree with
    count_in_rectangle by construction (cross-checked in tests).
    """
    spec = LatticeSpec.create(m, n)
    xs = np.array([j * n // m for j in range(m)], dtype=np.int64)
    ys = xs.copy()  # row values are the same floor-scaled multiples
    perm = np.array([(j * spec.multiplier) % m for j in range(m)], dtype=np.int64)
    limit = m * n - n  # times m: lattice coords c with m*c <= m*n - n
    if np.any(m * xs > limit):
        raise ValueError("lattice coordinates leave the bound's domain")

    n2 = n * n
    rectangles = 0
    violations = 0
    hy = ys[None, :] - ys[:, None]  # hy[c, d] = ys[d] - ys[c]
    upper_tri = np.triu(np.ones((m, m), dtype=bool))
    for a in range(m):
        indicator = np.zeros(m + 1, dtype=np.int64)
        for b in range(a, m):
            indicator[perm[b] + 1] += 1
            cums = np.cumsum(indicator)
            counts = cums[None, 1:] - cums[:-1, None]  # counts[c, d]
            area = (xs[b] - xs[a]) * hy * m
            lower = (10 * area) // (19 * n2)
            upper = -((-20 * area) // (9 * n2))
            bad = (counts < lower - slack) | (counts > upper + slack)
            violations += int(np.count_nonzero(bad & upper_tri))
            rectangles += int(np.count_nonzero(upper_tri))
    return RectangleSweep(rectangles=rectangles, violations=violations)
