"""Reference dynamic structures, driven entirely through the simulated
memory, plus the brute-force ground-truth oracles they are checked
against.

Values wider than one cell (weights, prefix counters) are split across
consecutive w-bit cells, little-endian. Query answers are full
integers; nothing here reduces mod anything, the encoding layer does
that at recovery time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cell_probe_sim import SimulatedMemory
from .finite_field import PrimeModulus
from .hard_queries import QueryFamily


def _read_limbs(mem: SimulatedMemory, base: int, count: int, w: int) -> int:
    value = 0
    for limb in range(count):
        value |= mem.read(base + limb) << (w * limb)
    return value


def _write_limbs(mem: SimulatedMemory, base: int, count: int, w: int, value: int) -> None:
    if value >> (w * count):
        raise OverflowError(f"value {value} exceeds {count} limbs of {w} bits")
    for limb in range(count):
        mem.write(base + limb, (value >> (w * limb)) & ((1 << w) - 1))


class DynamicStructure:
    """Base contract: all state lives in the simulated memory, and every
    operation stays within the declared worst-case probe counts."""

    declared_update_probes: int
    declared_query_probes: int

    def update(self, *args) -> None:
        raise NotImplementedError

    def query(self, *args) -> int:
        raise NotImplementedError


class NaiveArtificialStructure(DynamicStructure):
    """One weight per position, stored directly: update writes the
    weight's limbs, a query reads the limbs of every position whose
    query-vector coordinate is 1.

    With weights fitting a single cell this probes exactly one cell per
    update, and its per-epoch query probe profile is exactly the number
    of 1-coordinates last updated in that epoch, which is what makes it
    the exact test vehicle for probe accounting.
    """

    def __init__(self, family: QueryFamily, delta: PrimeModulus, memory: SimulatedMemory):
        self.family = family
        self.delta = delta
        self.memory = memory
        self.n = family.params.n
        w = memory.config.w
        self.cells_per_weight = -(-max(1, (delta.value - 1).bit_length()) // w)
        if self.n * self.cells_per_weight > 1 << w:
            raise ValueError("address space too small; increase w")
        self.declared_update_probes = self.cells_per_weight
        self.declared_query_probes = self.n * self.cells_per_weight

    def update(self, index: int, weight: int) -> None:
        if not 0 <= index < self.n:
            raise ValueError(f"index {index} out of range [0, {self.n})")
        if not 0 <= weight < self.delta.value:
            raise ValueError(f"weight {weight} out of range [0, {self.delta.value})")
        _write_limbs(
            self.memory, index * self.cells_per_weight, self.cells_per_weight,
            self.memory.config.w, weight,
        )

    def query(self, j: int) -> int:
        if not 0 <= j < len(self.family.vectors):
            raise ValueError(f"query index {j} out of range")
        return self.query_vector(self.family.vectors[j].coords)

    def query_vector(self, coords: Sequence[int]) -> int:
        total = 0
        w = self.memory.config.w
        for i, bit in enumerate(coords):
            if bit:
                total += _read_limbs(
                    self.memory, i * self.cells_per_weight, self.cells_per_weight, w
                )
        return total


class PrefixSumRangeStructure(DynamicStructure):
    """Two-level prefix-sum counter tree over [n] x [n]: an outer
    binary-indexed tree on x whose nodes are inner trees on y.

    Inserts and dominance queries touch at most (floor(lg n) + 1)^2
    counters; each counter occupies `cells_per_counter` consecutive
    cells sized for `capacity` inserts of weights below delta.
    """

    def __init__(
        self,
        n: int,
        delta: PrimeModulus,
        memory: SimulatedMemory,
        capacity: int | None = None,
    ):
        self.n = n
        self.delta = delta
        self.memory = memory
        self.capacity = capacity if capacity is not None else n
        w = memory.config.w
        counter_bits = max(1, (self.capacity * (delta.value - 1)).bit_length())
        self.cells_per_counter = -(-counter_bits // w)
        if n * n * self.cells_per_counter > 1 << w:
            raise ValueError("address space too small; increase w")
        chain = n.bit_length()  # floor(lg n) + 1
        self.declared_update_probes = 2 * self.cells_per_counter * chain * chain
        self.declared_query_probes = self.cells_per_counter * chain * chain
        self._inserted = 0

    def _counter_base(self, xi: int, yi: int) -> int:
        return ((xi - 1) * self.n + (yi - 1)) * self.cells_per_counter

    def update(self, x: int, y: int, weight: int) -> None:
        self.insert(x, y, weight)

    def insert(self, x: int, y: int, weight: int) -> None:
        if not (0 <= x < self.n and 0 <= y < self.n):
            raise ValueError(f"point ({x}, {y}) outside [0, {self.n})^2")
        if not 0 <= weight < self.delta.value:
            raise ValueError(f"weight {weight} out of range [0, {self.delta.value})")
        if self._inserted >= self.capacity:
            raise OverflowError(f"capacity {self.capacity} exceeded")
        self._inserted += 1
        w = self.memory.config.w
        cpc = self.cells_per_counter
        xi = x + 1
        while xi <= self.n:
            yi = y + 1
            while yi <= self.n:
                base = self._counter_base(xi, yi)
                value = _read_limbs(self.memory, base, cpc, w)
                _write_limbs(self.memory, base, cpc, w, value + weight)
                yi += yi & (-yi)
            xi += xi & (-xi)

    def query(self, x: int, y: int) -> int:
        if not (0 <= x < self.n and 0 <= y < self.n):
            raise ValueError(f"query ({x}, {y}) outside [0, {self.n})^2")
        w = self.memory.config.w
        cpc = self.cells_per_counter
        total = 0
        xi = x + 1
        while xi > 0:
            yi = y + 1
            while yi > 0:
                total += _read_limbs(self.memory, self._counter_base(xi, yi), cpc, w)
                yi -= yi & (-yi)
            xi -= xi & (-xi)
        return total


@dataclass
class ArtificialInstance:
    """Reference model of the index-weight problem: a plain weight array."""

    n: int
    weights: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.weights:
            self.weights = [0] * self.n  # all weights start at 0

    def update(self, index: int, weight: int) -> None:
        self.weights[index] = weight

    def answer(self, coords: Sequence[int]) -> int:
        return sum(w for bit, w in zip(coords, self.weights) if bit)


@dataclass
class OrcInstance:
    """Reference model of weighted dominance counting: a point multiset."""

    n: int
    points: list[tuple[int, int, int]] = field(default_factory=list)

    def insert(self, x: int, y: int, weight: int) -> None:
        self.points.append((x, y, weight))

    def answer(self, q: tuple[int, int]) -> int:
        qx, qy = q
        return sum(w for (x, y, w) in self.points if x <= qx and y <= qy)


def brute_force_oracle(updates: Iterable[tuple], query: tuple) -> int:
    """Recompute a query answer by a linear scan of the update log.

    Updates are ("aupd", i, delta) or ("oins", x, y, delta); the query
    is ("aqry", coords) with the resolved 0/1 vector, or ("oqry", x, y).
    """
    updates = list(updates)
    if query[0] == "aqry":
        n = max((u[1] for u in updates if u[0] == "aupd"), default=-1) + 1
        inst = ArtificialInstance(n=max(n, len(query[1])))
        for u in updates:
            if u[0] == "aupd":
                inst.update(u[1], u[2])
        return inst.answer(query[1])
    if query[0] == "oqry":
        orc = OrcInstance(n=0)
        for u in updates:
            if u[0] == "oins":
                orc.insert(u[1], u[2], u[3])
        return orc.answer((query[1], query[2]))
    raise ValueError(f"unknown query kind {query[0]!r}")


WORKLOAD_OPS = {"aupd": 2, "aqry": 1, "oins": 3, "oqry": 2}


def write_workload(path: str, ops: Iterable[tuple]) -> None:
    """Workload CSV: op,arg1,arg2,arg3 with unused args left empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["op", "arg1", "arg2", "arg3"])
        for op in ops:
            name, args = op[0], list(op[1:])
            if name not in WORKLOAD_OPS or len(args) != WORKLOAD_OPS[name]:
                raise ValueError(f"malformed workload op {op!r}")
            writer.writerow([name] + args + [""] * (3 - len(args)))


def read_workload(path: str) -> list[tuple]:
    ops: list[tuple] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:1] != ["op"]:
            raise ValueError("workload file missing header")
        for row in reader:
            if not row:
                continue
            name = row[0]
            if name not in WORKLOAD_OPS:
                raise ValueError(f"unknown workload op {name!r}")
            arity = WORKLOAD_OPS[name]
            ops.append((name, *(int(v) for v in row[1 : 1 + arity])))
    return ops
