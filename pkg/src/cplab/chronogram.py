"""Epoch schedules, hard-distribution runs, and per-epoch probe
accounting.

Epochs are numbered largest-first in time: epoch `count` performs the
first block of updates, epoch 1 the last. For the dominance problem
each epoch size is snapped to the largest Fibonacci number not above
it so the epoch can insert a scaled lattice; the snapped schedule is
recorded next to the ideal one. The final query of the distribution is
generalised to a seeded query sample so per-epoch averages come out of
a single run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

from .cell_probe_sim import (
    MemoryConfig,
    SimulatedMemory,
    assert_epoch_partition,
    ceil_lg,
    probe_counts_by_epoch,
)
from .fibonacci_lattice import (
    LatticeSpec,
    PointSet,
    dominance_incidence,
    largest_fibonacci_at_most,
    scaled_lattice,
)
from .finite_field import FieldVector, PrimeModulus, largest_prime_below
from .hard_queries import QueryFamily, QueryFamilyParams, build_query_family
from .rng import substream, substream_seed
from .structures import (
    DynamicStructure,
    NaiveArtificialStructure,
    PrefixSumRangeStructure,
)

KINDS = ("artificial", "orc")
STRUCTURE_FOR_KIND = {"artificial": "naive", "orc": "orc2d"}


@dataclass(frozen=True)
class EpochSchedule:
    """Epoch sizes in time order: epoch `count` first, epoch 1 last."""

    n: int
    beta: float
    sizes: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.sizes)

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def epoch_ids(self) -> range:
        """Epoch ids in time order (descending)."""
        return range(self.count, 0, -1)

    def size_of(self, epoch: int) -> int:
        if not 1 <= epoch <= self.count:
            raise ValueError(f"epoch {epoch} outside [1, {self.count}]")
        return self.sizes[self.count - epoch]

    def offset_of(self, epoch: int) -> int:
        """Update-sequence position at which the epoch starts."""
        return sum(self.size_of(i) for i in range(self.count, epoch, -1))

    def suffix_length(self, epoch: int) -> int:
        """Number of updates in epochs `epoch`..1 (the time suffix)."""
        return sum(self.size_of(i) for i in range(epoch, 0, -1))

    def snap_to_fibonacci(self) -> "EpochSchedule":
        return EpochSchedule(
            n=self.n,
            beta=self.beta,
            sizes=tuple(largest_fibonacci_at_most(s) for s in self.sizes),
        )


def epoch_schedule(n: int, beta: float) -> EpochSchedule:
    """Sizes beta^i for epochs i < count, with the first-in-time epoch
    absorbing the remaining n - sum(beta^i) updates."""
    if beta < 2 or beta > n / 2:
        raise ValueError(f"beta={beta} outside [2, n/2] for n={n}")
    if float(beta).is_integer():
        beta = int(beta)
    count = 1
    power = beta
    while power * beta <= n:
        power *= beta
        count += 1
    smaller = [int(beta**i) for i in range(1, count)]
    top = n - sum(smaller)
    sizes = tuple([top] + smaller[::-1])
    if any(s < 1 for s in sizes):
        raise ValueError(f"degenerate epoch sizes {sizes} for n={n}, beta={beta}")
    return EpochSchedule(n=n, beta=float(beta), sizes=sizes)


@dataclass(frozen=True)
class EpochUpdates:
    """One epoch's updates: targets are positions (artificial) or
    points (dominance), weights line up with targets."""

    epoch: int
    targets: tuple
    weights: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.targets) != len(self.weights):
            raise ValueError("targets/weights length mismatch")


@dataclass(frozen=True)
class UpdateSequence:
    kind: str
    epochs: tuple[EpochUpdates, ...]  # time order, largest epoch first

    def epoch(self, epoch_id: int) -> EpochUpdates:
        for e in self.epochs:
            if e.epoch == epoch_id:
                return e
        raise KeyError(epoch_id)

    def u(self, epoch_id: int) -> tuple[int, ...]:
        """The epoch's weight vector (targets are fixed, weights vary)."""
        return self.epoch(epoch_id).weights

    def prefix_above(self, istar: int) -> "UpdateSequence":
        """Updates of the epochs preceding istar in time (ids > istar)."""
        return UpdateSequence(
            kind=self.kind, epochs=tuple(e for e in self.epochs if e.epoch > istar)
        )

    @property
    def total_updates(self) -> int:
        return sum(len(e.weights) for e in self.epochs)


@dataclass
class RunRecord:
    kind: str
    n: int
    beta: float
    seed: int
    w: int
    delta: PrimeModulus
    schedule: EpochSchedule  # ideal beta^i schedule
    run_schedule: EpochSchedule  # executed sizes (snapped for dominance runs)
    updates: UpdateSequence
    memory: SimulatedMemory
    structure: DynamicStructure
    structure_id: str
    structure_factory: Callable[[SimulatedMemory], DynamicStructure]
    family: QueryFamily | None
    epoch_points: dict[int, PointSet] | None

    def cells_of_epoch(self, epoch_id: int) -> set[tuple[int, int]]:
        return self.memory.cells_of_epoch(epoch_id)

    def epoch_of_position(self, position: int) -> int:
        """Epoch id owning the update at the given sequence position."""
        sched = self.run_schedule
        offset = 0
        for epoch_id in sched.epoch_ids():
            offset += sched.size_of(epoch_id)
            if position < offset:
                return epoch_id
        raise ValueError(f"position {position} beyond {sched.total} updates")


def default_run_cell_width(kind: str, n: int, delta: PrimeModulus, capacity: int) -> int:
    """Smallest multiple of 8 wide enough for addresses and for whole
    weights/counters in a single cell, so probe profiles stay exact."""
    weight_bits = (delta.value - 1).bit_length()
    if kind == "artificial":
        need = max(ceil_lg(n), weight_bits)
    else:
        counter_bits = max(1, (capacity * (delta.value - 1)).bit_length())
        need = max(ceil_lg(n), ceil_lg(n * n), counter_bits)
    return -(-need // 8) * 8


def structure_factory(
    kind: str,
    n: int,
    delta: PrimeModulus,
    family: QueryFamily | None = None,
    capacity: int | None = None,
) -> Callable[[SimulatedMemory], DynamicStructure]:
    if kind == "artificial":
        if family is None:
            raise ValueError("artificial structures need a query family")
        return lambda memory: NaiveArtificialStructure(family, delta, memory)
    if kind == "orc":
        return lambda memory: PrefixSumRangeStructure(n, delta, memory, capacity=capacity)
    raise ValueError(f"unknown kind {kind!r}")


def execute_epochs(
    structure: DynamicStructure,
    memory: SimulatedMemory,
    updates: UpdateSequence,
) -> None:
    """Apply epochs largest-first, enforcing the declared update bound."""
    for epoch in updates.epochs:
        memory.begin_epoch(epoch.epoch)
        for j, (target, weight) in enumerate(zip(epoch.targets, epoch.weights)):
            memory.begin_operation(("upd", epoch.epoch, j))
            before = len(memory.trace)
            if updates.kind == "artificial":
                structure.update(target, weight)
            else:
                structure.update(target[0], target[1], weight)
            used = len(memory.trace) - before
            if used > structure.declared_update_probes:
                raise AssertionError(
                    f"update ({epoch.epoch}, {j}) probed {used} cells, declared "
                    f"bound is {structure.declared_update_probes}"
                )


def run_hard_distribution(
    kind: str,
    n: int,
    beta: float,
    seed: int,
    structure: str | None = None,
    w: int | None = None,
    family_constant: float = 22.0,
) -> RunRecord:
    """Execute the full hard distribution for one seed.

    Deterministic given the seed: weights, the query family (artificial
    runs) and the epoch point sets are all reproduced exactly.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    structure_id = structure or STRUCTURE_FOR_KIND[kind]
    delta = largest_prime_below(n**4)
    schedule = epoch_schedule(n, beta)
    run_sched = schedule.snap_to_fibonacci() if kind == "orc" else schedule

    family = None
    epoch_points: dict[int, PointSet] | None = None
    if kind == "artificial":
        family = build_query_family(
            QueryFamilyParams(
                n=n,
                modulus=delta,
                independence_constant=family_constant,
                seed=substream_seed(seed, "family"),
            )
        )
    else:
        epoch_points = {
            i: scaled_lattice(LatticeSpec.create(run_sched.size_of(i), n))
            for i in run_sched.epoch_ids()
        }

    weights_rng = substream(seed, "weights")
    epochs = []
    position = 0
    for epoch_id in run_sched.epoch_ids():
        size = run_sched.size_of(epoch_id)
        if kind == "artificial":
            targets: tuple = tuple(range(position, position + size))
            position += size
        else:
            targets = epoch_points[epoch_id].points
        weights = tuple(weights_rng.randrange(delta.value) for _ in range(size))
        epochs.append(EpochUpdates(epoch=epoch_id, targets=targets, weights=weights))
    updates = UpdateSequence(kind=kind, epochs=tuple(epochs))

    if w is None:
        w = default_run_cell_width(kind, n, delta, run_sched.total)
    memory = SimulatedMemory(MemoryConfig(w=w))
    factory = structure_factory(
        kind, n, delta, family=family, capacity=run_sched.total if kind == "orc" else None
    )
    instance = factory(memory)
    execute_epochs(instance, memory, updates)

    assert_epoch_partition(memory)
    for epoch_id in run_sched.epoch_ids():
        cells = memory.cells_of_epoch(epoch_id)
        bound = run_sched.size_of(epoch_id) * instance.declared_update_probes
        if len(cells) > bound:
            raise AssertionError(
                f"|S_{epoch_id}| = {len(cells)} exceeds size * t_u = {bound}"
            )

    return RunRecord(
        kind=kind,
        n=n,
        beta=beta,
        seed=seed,
        w=w,
        delta=delta,
        schedule=schedule,
        run_schedule=run_sched,
        updates=updates,
        memory=memory,
        structure=instance,
        structure_id=structure_id,
        structure_factory=factory,
        family=family,
        epoch_points=epoch_points,
    )


@dataclass
class ProbeProfile:
    """Per-query, per-epoch distinct-cell probe counts for one run."""

    epochs: tuple[int, ...]  # descending epoch ids
    queries: tuple
    counts: tuple[dict[int, int], ...]
    totals: tuple[int, ...]

    def t(self, query_index: int, epoch: int) -> int:
        return self.counts[query_index].get(epoch, 0)

    def mean_t(self, epoch: int) -> float:
        if not self.queries:
            return 0.0
        return sum(c.get(epoch, 0) for c in self.counts) / len(self.queries)

    def max_t(self, epoch: int) -> int:
        return max((c.get(epoch, 0) for c in self.counts), default=0)

    def total_mean(self) -> float:
        """Estimate of the total query cost: sum of per-epoch means."""
        return sum(self.mean_t(i) for i in self.epochs)

    def export_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "queries_sampled", "mean_t_i", "max_t_i"])
            for epoch in self.epochs:
                writer.writerow(
                    [epoch, len(self.queries), self.mean_t(epoch), self.max_t(epoch)]
                )


def run_query(run: RunRecord, query) -> int:
    if run.kind == "artificial":
        return run.structure.query(query)
    return run.structure.query(query[0], query[1])


def epoch_probe_profile(run: RunRecord, queries: Sequence) -> ProbeProfile:
    """Execute the sample read-only after all updates and count, per
    query, the distinct cells probed from each epoch's cell set."""
    counts = []
    totals = []
    for idx, q in enumerate(queries):
        op = ("qry", idx)
        run.memory.begin_operation(op)
        run_query(run, q)
        segment = run.memory.trace.segment(op)
        by_epoch = probe_counts_by_epoch(segment, run.memory)
        counts.append(by_epoch)
        totals.append(sum(by_epoch.values()))
    return ProbeProfile(
        epochs=tuple(run.run_schedule.epoch_ids()),
        queries=tuple(queries),
        counts=tuple(counts),
        totals=tuple(totals),
    )


def incidence_vector(run: RunRecord, epoch: int, q: tuple[int, int]) -> FieldVector:
    """0/1 vector over the epoch's inserted points, marking dominance by q."""
    if run.kind != "orc" or run.epoch_points is None:
        raise ValueError("incidence vectors are defined for dominance runs")
    return FieldVector(run.delta, dominance_incidence(run.epoch_points[epoch], q))


def analytic_epoch_counts(run: RunRecord, j: int) -> dict[int, int]:
    """Exact probe profile of the naive structure for query j: per
    epoch, the number of 1-coordinates whose position that epoch owns,
    times the cells per weight."""
    if run.kind != "artificial" or run.family is None:
        raise ValueError("the analytic profile is for artificial runs")
    cpw = run.structure.cells_per_weight
    coords = run.family.vectors[j].coords
    result = {i: 0 for i in run.run_schedule.epoch_ids()}
    for position, bit in enumerate(coords):
        if bit:
            result[run.epoch_of_position(position)] += cpw
    return result
