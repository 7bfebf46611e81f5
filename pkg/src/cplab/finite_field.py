"""Exact linear algebra over the prime field Z_p.

Everything here is integer arithmetic; no floating point enters any
code path. Vectors and matrices are immutable values, operations are
pure functions, so results can move freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class SingularMatrixError(ValueError):
    """A square solve hit a rank-deficient matrix."""


def is_prime(value: int) -> bool:
    """Deterministic trial-division primality test."""
    if value < 2:
        return False
    if value < 4:
        return True
    if value % 2 == 0:
        return False
    f = 3
    while f * f <= value:
        if value % f == 0:
            return False
        f += 2
    return True


def _primes_upto(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [i for i in range(2, n + 1) if sieve[i]]


@dataclass(frozen=True)
class PrimeModulus:
    """A prime modulus; construction checks primality."""

    value: int

    def __post_init__(self) -> None:
        if not is_prime(self.value):
            raise ValueError(f"{self.value} is not prime")


def largest_prime_below(limit: int) -> PrimeModulus:
    """Largest prime strictly below `limit`, by a (segmented) sieve.

    The segment walk keeps the search exact and deterministic even for
    limits far beyond what a single in-memory sieve could hold.
    """
    if limit < 3:
        raise ValueError(f"no prime below {limit}")
    base = _primes_upto(math.isqrt(limit - 1))
    segment = 1 << 16
    top = limit
    while top > 2:
        lo = max(2, top - segment)
        marks = bytearray([1]) * (top - lo)
        for p in base:
            start = max(p * p, ((lo + p - 1) // p) * p)
            if start >= top:
                continue
            marks[start - lo :: p] = bytearray(len(range(start, top, p)))
        for value in range(top - 1, lo - 1, -1):
            if value >= 2 and marks[value - lo] and is_prime(value):
                return PrimeModulus(value)
        top = lo
    raise ValueError(f"no prime below {limit}")


@dataclass(frozen=True)
class FieldVector:
    """A vector over Z_p; coordinates are normalised into [0, p)."""

    modulus: PrimeModulus
    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        p = self.modulus.value
        coords = tuple(c % p for c in self.coords)
        if not coords:
            raise ValueError("vectors must have positive dimension")
        object.__setattr__(self, "coords", coords)

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def last(self, k: int) -> "FieldVector":
        """Restriction onto the last k coordinates."""
        if not 1 <= k <= self.dimension:
            raise ValueError(f"cannot restrict dimension {self.dimension} to last {k}")
        return FieldVector(self.modulus, self.coords[-k:])

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)


@dataclass(frozen=True)
class FieldMatrix:
    """A rectangular matrix over Z_p, stored as a tuple of row vectors."""

    modulus: PrimeModulus
    rows: tuple[FieldVector, ...]

    def __post_init__(self) -> None:
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise ValueError("matrices must have at least one row")
        dim = rows[0].dimension
        for r in rows:
            if r.modulus != self.modulus:
                raise ValueError("row modulus mismatch")
            if r.dimension != dim:
                raise ValueError("ragged rows")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), self.rows[0].dimension)


def matrix_from_lists(modulus: PrimeModulus, rows: Iterable[Sequence[int]]) -> FieldMatrix:
    return FieldMatrix(modulus, tuple(FieldVector(modulus, tuple(r)) for r in rows))


def identity_matrix(dim: int, modulus: PrimeModulus) -> FieldMatrix:
    rows = []
    for i in range(dim):
        coords = [0] * dim
        coords[i] = 1
        rows.append(FieldVector(modulus, tuple(coords)))
    return FieldMatrix(modulus, tuple(rows))


def unit_vector(index: int, dim: int, modulus: PrimeModulus) -> FieldVector:
    coords = [0] * dim
    coords[index] = 1
    return FieldVector(modulus, tuple(coords))


def ff_dot(a: FieldVector, b: FieldVector) -> int:
    """Inner product mod p."""
    if a.modulus != b.modulus or a.dimension != b.dimension:
        raise ValueError("dimension or modulus mismatch")
    p = a.modulus.value
    return sum(x * y for x, y in zip(a.coords, b.coords)) % p


def mat_vec(A: FieldMatrix, y: FieldVector) -> FieldVector:
    """Matrix-vector product mod p."""
    if y.dimension != A.shape[1]:
        raise ValueError("dimension mismatch")
    return FieldVector(A.modulus, tuple(ff_dot(row, y) for row in A.rows))


class _Echelon:
    """Incremental row-echelon form keyed by pivot column.

    Stored rows have pivot coefficient 1 and are reduced against all
    earlier pivots, which makes membership and rank queries cheap.
    """

    def __init__(self, p: int, dim: int):
        self.p = p
        self.dim = dim
        self.pivots: dict[int, list[int]] = {}

    def reduce(self, coords: Sequence[int]) -> list[int]:
        p = self.p
        row = [c % p for c in coords]
        for col in range(self.dim):
            c = row[col]
            if c == 0:
                continue
            pivot_row = self.pivots.get(col)
            if pivot_row is None:
                continue
            for j in range(col, self.dim):
                row[j] = (row[j] - c * pivot_row[j]) % p
        return row

    def insert(self, coords: Sequence[int]) -> bool:
        """Add a row; returns False when it is already in the span."""
        row = self.reduce(coords)
        for col in range(self.dim):
            if row[col]:
                inv = pow(row[col], -1, self.p)
                self.pivots[col] = [(inv * v) % self.p for v in row]
                return True
        return False

    @property
    def rank(self) -> int:
        return len(self.pivots)


def ff_rank(A: FieldMatrix) -> int:
    """Dimension of the row span over Z_p."""
    ech = _Echelon(A.modulus.value, A.shape[1])
    for row in A.rows:
        ech.insert(row.coords)
    return ech.rank


def in_span(X: Iterable[FieldVector], x: FieldVector) -> bool:
    """True iff x is a Z_p-linear combination of X; empty X spans only 0."""
    vectors = list(X)
    ech = _Echelon(x.modulus.value, x.dimension)
    for v in vectors:
        if v.modulus != x.modulus or v.dimension != x.dimension:
            raise ValueError("dimension or modulus mismatch")
        ech.insert(v.coords)
    return not any(ech.reduce(x.coords))


def independent_row_indices(rows: Sequence[FieldVector]) -> list[int]:
    """Greedy scan keeping each row that enlarges the span.

    The scan order is the input order, so any two parties holding the
    same row sequence select the same subset.
    """
    if not rows:
        return []
    ech = _Echelon(rows[0].modulus.value, rows[0].dimension)
    kept = []
    for idx, row in enumerate(rows):
        if ech.insert(row.coords):
            kept.append(idx)
    return kept


def complete_basis(
    X: Sequence[FieldVector], dim: int, modulus: PrimeModulus | None = None
) -> list[FieldVector]:
    """Extend an independent set X to a basis of Z_p^dim with unit vectors.

    Unit vectors are scanned in increasing coordinate order and skipped
    when already spanned. The scan is deterministic, so two parties
    that share X produce the same completion without communicating.
    Returns only the added vectors, in scan order. `modulus` is needed
    only when X is empty.
    """
    X = list(X)
    if dim < 1:
        raise ValueError("dimension must be positive")
    if len(X) > dim:
        raise ValueError("more vectors than the target dimension")
    if X:
        modulus = X[0].modulus
    elif modulus is None:
        raise ValueError("cannot complete an empty set without a modulus")
    ech = _Echelon(modulus.value, dim)
    for v in X:
        if v.dimension != dim or v.modulus != modulus:
            raise ValueError("vector dimension or modulus differs from target")
        if not ech.insert(v.coords):
            raise ValueError("input vectors are linearly dependent")
    added: list[FieldVector] = []
    for idx in range(dim):
        if ech.rank == dim:
            break
        e = unit_vector(idx, dim, modulus)
        if ech.insert(e.coords):
            added.append(e)
    return added


def ff_solve(A: FieldMatrix, z: FieldVector) -> FieldVector:
    """Unique y with A y = z (mod p) for square full-rank A.

    Gaussian elimination with pivoting on the first nonzero entry;
    magnitude pivoting is pointless over a field.
    """
    m, ncols = A.shape
    if m != ncols:
        raise ValueError("matrix must be square")
    if z.dimension != m or z.modulus != A.modulus:
        raise ValueError("dimension or modulus mismatch")
    p = A.modulus.value
    aug = [list(row.coords) + [zc] for row, zc in zip(A.rows, z.coords)]
    for col in range(ncols):
        pivot = None
        for r in range(col, m):
            if aug[r][col] % p != 0:
                pivot = r
                break
        if pivot is None:
            raise SingularMatrixError(f"matrix is singular at column {col}")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = pow(aug[col][col], -1, p)
        aug[col] = [(inv * v) % p for v in aug[col]]
        for r in range(m):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [(a - f * b) % p for a, b in zip(aug[r], aug[col])]
    return FieldVector(A.modulus, tuple(aug[r][ncols] for r in range(m)))
