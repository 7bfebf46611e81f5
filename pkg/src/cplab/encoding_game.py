"""The encoder/decoder game over one epoch.

The encoder finds a small cell subset C of the target epoch's cells and
a set of queries resolved by C (their probes into that epoch all land
in C), then emits a message from which a decoder that knows only the
updates of the preceding epochs recovers the target epoch's weights
exactly. Message sections are bit-exact and individually labelled so
their lengths can be audited against the epoch's entropy.

Weight tuples are packed radix-Delta into one big integer, which costs
exactly ceil(count * lg Delta) bits. Query identities use fixed-width
indices of ceil(lg n^2) bits; the information-theoretic
lg C(n^2, |Q|) alternative is reported alongside for comparison.

Exhaustively searching for the best (C, Q) pair is infeasible, so C is
sampled uniformly with a retry budget, mirroring the probabilistic
existence argument; when no non-empty Q emerges the caller falls back
to the flag-1 raw encoding, which is always available.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .cell_probe_sim import MemoryConfig, ProbeTrace, SimulatedMemory
from .chronogram import (
    EpochSchedule,
    RunRecord,
    UpdateSequence,
    epoch_schedule,
    execute_epochs,
    incidence_vector,
    run_query,
)
from .fibonacci_lattice import LatticeSpec, dominance_incidence, scaled_lattice
from .finite_field import (
    FieldMatrix,
    FieldVector,
    PrimeModulus,
    SingularMatrixError,
    complete_basis,
    ff_dot,
    ff_solve,
    independent_row_indices,
)
from .grid_analysis import build_grid_family, cell_representatives, cross_out_extract
from .rng import substream


class ResolvedSetNotFound(RuntimeError):
    """No sampled cell subset resolved any query within the budget."""


class DecodingIntegrityError(RuntimeError):
    """The decode replay broke an invariant it relies on."""


# ---------------------------------------------------------------------------
# bit-exact payload packing


def ceil_bits_for_weights(delta: PrimeModulus, count: int) -> int:
    """ceil(count * lg Delta), computed exactly in integer arithmetic."""
    if count <= 0:
        return 0
    return (delta.value**count - 1).bit_length()


def pack_weights(weights: Sequence[int], delta: PrimeModulus) -> int:
    """Radix-Delta packing: the tuple becomes one integer in [Delta^count]."""
    value = 0
    for w in reversed(weights):
        if not 0 <= w < delta.value:
            raise ValueError(f"weight {w} outside [0, {delta.value})")
        value = value * delta.value + w
    return value


def unpack_weights(value: int, delta: PrimeModulus, count: int) -> tuple[int, ...]:
    weights = []
    for _ in range(count):
        value, w = divmod(value, delta.value)
        weights.append(w)
    if value:
        raise ValueError("packed weight payload has trailing data")
    return tuple(weights)


class _FieldWriter:
    """Accumulates fixed-width bit fields into one integer, LSB first."""

    def __init__(self) -> None:
        self.value = 0
        self.bits = 0

    def put(self, value: int, width: int) -> None:
        if not 0 <= value < 1 << width:
            raise ValueError(f"{value} does not fit in {width} bits")
        self.value |= value << self.bits
        self.bits += width


class _FieldReader:
    def __init__(self, value: int, bits: int):
        self.value = value
        self.remaining = bits

    def take(self, width: int) -> int:
        if width > self.remaining:
            raise ValueError("section payload exhausted")
        out = self.value & ((1 << width) - 1)
        self.value >>= width
        self.remaining -= width
        return out


@dataclass(frozen=True)
class Section:
    label: str
    bit_length: int
    payload: int

    def __post_init__(self) -> None:
        if self.bit_length < 0 or self.payload < 0:
            raise ValueError("section lengths and payloads are non-negative")
        if self.payload >> self.bit_length if self.bit_length else self.payload:
            raise ValueError("payload exceeds the declared bit length")


@dataclass
class EncodingMessage:
    """Bit-exact encoder output with a per-section length breakdown."""

    kind: str
    n: int
    beta: float
    istar: int
    delta: int
    seed: int
    w: int
    flag: int
    sections: tuple[Section, ...]
    query_count: int | None = None
    version: int = 1

    @property
    def total_bits(self) -> int:
        """Flag bit plus every declared section length."""
        return 1 + sum(s.bit_length for s in self.sections)

    @property
    def padding_bits(self) -> int:
        """Byte-alignment padding in the serialized form (not counted)."""
        return sum(-s.bit_length % 8 for s in self.sections)

    def section(self, label: str) -> Section:
        for s in self.sections:
            if s.label == label:
                return s
        raise KeyError(label)

    def has_section(self, label: str) -> bool:
        return any(s.label == label for s in self.sections)

    def query_choose_bits(self) -> float | None:
        """lg C(n^2, |Q|): the binomial-coefficient cost of the query set."""
        if self.query_count is None:
            return None
        return math.log2(math.comb(self.n * self.n, self.query_count))

    def to_bytes(self) -> bytes:
        header = {
            "version": self.version,
            "kind": self.kind,
            "n": self.n,
            "beta": self.beta,
            "istar": self.istar,
            "delta": self.delta,
            "seed": self.seed,
            "w": self.w,
            "flag": self.flag,
            "query_count": self.query_count,
        }
        out = bytearray(json.dumps(header, sort_keys=True).encode() + b"\n")
        for s in self.sections:
            label = s.label.encode()
            out.append(len(label))
            out += label
            out += s.bit_length.to_bytes(8, "big")
            nbytes = -(-s.bit_length // 8)
            out += nbytes.to_bytes(8, "big")
            out += s.payload.to_bytes(nbytes, "big") if nbytes else b""
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncodingMessage":
        newline = data.index(b"\n")
        header = json.loads(data[:newline])
        pos = newline + 1
        sections = []
        while pos < len(data):
            label_len = data[pos]
            pos += 1
            label = data[pos : pos + label_len].decode()
            pos += label_len
            bit_length = int.from_bytes(data[pos : pos + 8], "big")
            pos += 8
            nbytes = int.from_bytes(data[pos : pos + 8], "big")
            pos += 8
            payload = int.from_bytes(data[pos : pos + nbytes], "big") if nbytes else 0
            pos += nbytes
            sections.append(Section(label=label, bit_length=bit_length, payload=payload))
        return cls(
            kind=header["kind"],
            n=header["n"],
            beta=header["beta"],
            istar=header["istar"],
            delta=header["delta"],
            seed=header["seed"],
            w=header["w"],
            flag=header["flag"],
            sections=tuple(sections),
            query_count=header.get("query_count"),
            version=header["version"],
        )


@dataclass(frozen=True)
class ResolvedSet:
    """A cell subset C of the target epoch and the sampled queries whose
    probes into that epoch all land inside C (verified by replay)."""

    istar: int
    cell_addresses: tuple[int, ...]
    queries: tuple
    probe_threshold: float
    sample_mean_t: float
    sample_size: int
    tries_used: int


def _query_probe_sets(
    run: RunRecord, istar: int, pool: Sequence, op_tag: str
) -> list[set[int]]:
    """Per pooled query, the distinct epoch-istar cells it probes."""
    probe_sets = []
    for idx, q in enumerate(pool):
        op = (op_tag, idx)
        run.memory.begin_operation(op)
        run_query(run, q)
        seen: set[int] = set()
        for e in run.memory.trace.segment(op):
            if e.address not in seen and run.memory.epoch_of(e.address) == istar:
                seen.add(e.address)
        probe_sets.append(seen)
    return probe_sets


def default_cell_budget(run: RunRecord, istar: int) -> int:
    """About beta^(istar-1) cells, with a factor w for dominance runs."""
    base = max(1, int(run.run_schedule.size_of(istar) / run.beta))
    if run.kind == "orc":
        base *= run.w
    return base


def find_resolved_set(
    run: RunRecord,
    istar: int,
    cell_budget: int | None = None,
    probe_threshold: float | None = None,
    max_tries: int = 16,
    seed: int = 0,
    query_sample: int | None = None,
) -> ResolvedSet:
    """Sample uniform cell subsets of the target epoch until one
    resolves a non-empty set of low-cost queries; keep the best try.

    Queries qualify when their distinct epoch-istar probe count is at
    most the threshold (default lg_beta(n)/4) and every such probe lands
    in the sampled subset. Raises ResolvedSetNotFound when every try
    comes up empty; the flag-1 raw encoding remains available then.
    """
    cells = {addr: contents for addr, contents in run.cells_of_epoch(istar)}
    if not cells:
        raise ResolvedSetNotFound(f"epoch {istar} owns no cells")
    if cell_budget is None:
        cell_budget = default_cell_budget(run, istar)
    cell_budget = min(cell_budget, len(cells))
    if probe_threshold is None:
        probe_threshold = math.log(run.n, run.beta) / 4

    if run.kind == "artificial":
        pool: list = (
            list(range(len(run.family.vectors)))
            if query_sample is None
            else substream(seed, "query-sample").sample(
                range(len(run.family.vectors)), query_sample
            )
        )
    else:
        size = query_sample if query_sample is not None else 400
        qrng = substream(seed, "query-sample")
        seen_q = set()
        pool = []
        while len(pool) < size:
            q = (qrng.randrange(run.n), qrng.randrange(run.n))
            if q not in seen_q:
                seen_q.add(q)
                pool.append(q)

    probe_sets = _query_probe_sets(run, istar, pool, "resolve")
    mean_t = sum(len(s) for s in probe_sets) / len(pool)
    eligible = [
        (q, probes)
        for q, probes in zip(pool, probe_sets)
        if len(probes) <= probe_threshold
    ]

    crng = substream(seed, "cell-sample")
    population = sorted(cells)
    best: list | None = None
    best_cells: tuple[int, ...] = ()
    tries_used = 0
    for attempt in range(max_tries):
        tries_used = attempt + 1
        chosen = set(crng.sample(population, cell_budget))
        resolved = [q for q, probes in eligible if probes <= chosen]
        if best is None or len(resolved) > len(best):
            best = resolved
            best_cells = tuple(sorted(chosen))
    if not best:
        raise ResolvedSetNotFound(
            f"no queries resolved after {max_tries} tries "
            f"(budget {cell_budget}, threshold {probe_threshold})"
        )

    # replay each kept query and re-check the containment directly
    chosen_set = set(best_cells)
    verify_sets = _query_probe_sets(run, istar, best, "resolve-verify")
    for q, probes in zip(best, verify_sets):
        if not probes <= chosen_set:
            raise AssertionError(f"replay of {q} probed epoch {istar} outside C")

    return ResolvedSet(
        istar=istar,
        cell_addresses=best_cells,
        queries=tuple(sorted(best)),
        probe_threshold=probe_threshold,
        sample_mean_t=mean_t,
        sample_size=len(pool),
        tries_used=tries_used,
    )


# ---------------------------------------------------------------------------
# encoding


def _cells_section(label: str, cells: Sequence[tuple[int, int]], w: int) -> Section:
    writer = _FieldWriter()
    writer.put(len(cells), 2 * w)
    for addr, contents in cells:
        writer.put(addr, w)
        writer.put(contents, w)
    return Section(label=label, bit_length=writer.bits, payload=writer.value)


def _parse_cells_section(section: Section, w: int) -> dict[int, int]:
    reader = _FieldReader(section.payload, section.bit_length)
    count = reader.take(2 * w)
    return {reader.take(w): reader.take(w) for _ in range(count)}


def _query_id_bits(n: int) -> int:
    return (n * n - 1).bit_length()


def _suffix_weight_vector(run: RunRecord, istar: int) -> tuple[int, ...]:
    """Weights of the last suffix_length(istar) updates, in time order."""
    weights: list[int] = []
    for epoch_id in range(istar, 0, -1):
        weights.extend(run.updates.u(epoch_id))
    return tuple(weights)


def _extract_independent_queries(run: RunRecord, istar: int, queries: Sequence) -> list:
    """For dominance runs, thin the resolved queries with the grid
    crossing-out procedure so the surviving incidence vectors are
    independent by construction. When the epoch is too small to carry
    any grid (2i-2 < 2), fall back to the greedy rank filter alone."""
    m = run.run_schedule.size_of(istar)
    i_eff = 1
    while run.beta ** (i_eff + 1) <= m:
        i_eff += 1
    if i_eff < 2:
        return list(queries)
    family = build_grid_family(run.n, run.beta, i_eff, epoch_size=m)
    best: tuple[int, list] | None = None
    for j in family.indices():
        grid = family.grids[j]
        reps = cell_representatives(queries, grid)
        survivors = list(cross_out_extract(reps, grid).survivors)
        if best is None or len(survivors) > best[0]:
            best = (len(survivors), survivors)
    if best is None or best[0] == 0:
        return list(queries)
    return best[1]


def encode_epoch(
    run: RunRecord,
    istar: int,
    resolved: ResolvedSet | None,
    expected_t: float | None = None,
) -> EncodingMessage:
    """Emit the message that lets a prefix-informed decoder recover the
    target epoch's weights.

    Falls back to the flag-1 raw weight dump when no resolved set is
    available or when the run's measured average epoch cost exceeds
    twice the supplied expectation.
    """
    sched = run.run_schedule
    m = sched.size_of(istar)
    delta = run.delta
    u_istar = run.updates.u(istar)

    flag1 = resolved is None or (
        expected_t is not None and resolved.sample_mean_t > 2 * expected_t
    )
    if flag1:
        section = Section(
            label="raw_weights",
            bit_length=ceil_bits_for_weights(delta, m),
            payload=pack_weights(u_istar, delta),
        )
        return EncodingMessage(
            kind=run.kind,
            n=run.n,
            beta=run.beta,
            istar=istar,
            delta=delta.value,
            seed=run.seed,
            w=run.w,
            flag=1,
            sections=(section,),
        )

    w = run.w
    sections: list[Section] = []
    cell_pairs = sorted(
        (addr, run.memory.contents_of(addr)) for addr in resolved.cell_addresses
    )
    sections.append(_cells_section("resolved_cells", cell_pairs, w))

    if run.kind == "orc":
        queries = _extract_independent_queries(run, istar, resolved.queries)
        rows = [incidence_vector(run, istar, q) for q in queries]
        dim = m
        u_key = FieldVector(delta, u_istar)
    else:
        queries = list(resolved.queries)
        k_len = sched.suffix_length(istar)
        rows = [run.family.vectors[j].last(k_len) for j in queries]
        dim = k_len
        u_key = FieldVector(delta, _suffix_weight_vector(run, istar))

    qbits = _query_id_bits(run.n)
    writer = _FieldWriter()
    writer.put(len(queries), 2 * w)
    for q in queries:
        qid = q if run.kind == "artificial" else q[0] * run.n + q[1]
        writer.put(qid, qbits)
    sections.append(
        Section(label="resolved_queries", bit_length=writer.bits, payload=writer.value)
    )

    # both parties keep rows that enlarge the span, scanning in the
    # transmitted query order, so the completion below is shared
    kept = independent_row_indices(rows)
    completion = complete_basis([rows[i] for i in kept], dim, modulus=delta)
    products = [ff_dot(x, u_key) for x in completion]
    sections.append(
        Section(
            label="completion_products",
            bit_length=ceil_bits_for_weights(delta, len(products)),
            payload=pack_weights(products, delta),
        )
    )

    for epoch_id in range(istar - 1, 0, -1):
        pairs = sorted(run.cells_of_epoch(epoch_id))
        sections.append(_cells_section(f"cells_epoch_{epoch_id}", pairs, w))
    if run.kind == "orc":
        for epoch_id in range(istar - 1, 0, -1):
            u_j = run.updates.u(epoch_id)
            sections.append(
                Section(
                    label=f"weights_epoch_{epoch_id}",
                    bit_length=ceil_bits_for_weights(delta, len(u_j)),
                    payload=pack_weights(u_j, delta),
                )
            )

    return EncodingMessage(
        kind=run.kind,
        n=run.n,
        beta=run.beta,
        istar=istar,
        delta=delta.value,
        seed=run.seed,
        w=run.w,
        flag=0,
        sections=tuple(sections),
        query_count=len(queries),
    )


# ---------------------------------------------------------------------------
# decoding


class _ResolvingMemory:
    """Read-only memory view answering probes by the three-way rule:
    smaller-epoch cell sets, then the resolved subset C, then the
    decoder's own prefix re-execution (blank cells read as zero)."""

    def __init__(
        self,
        config: MemoryConfig,
        small_cells: dict[int, int],
        c_cells: dict[int, int],
        prefix_memory: SimulatedMemory,
        verify_run: RunRecord | None,
        istar: int,
    ):
        self.config = config
        self.trace = ProbeTrace()
        self.small_cells = small_cells
        self.c_cells = c_cells
        self.prefix_memory = prefix_memory
        self.verify_run = verify_run
        self.istar = istar

    def begin_operation(self, op_id) -> None:
        self.trace.begin(op_id)

    def read(self, address: int) -> int:
        if self.verify_run is not None:
            true_tag = self.verify_run.memory.epoch_of(address)
            if true_tag == self.istar and address not in self.c_cells:
                raise DecodingIntegrityError(
                    f"replay probed epoch-{self.istar} cell {address} outside C"
                )
        if address in self.small_cells:
            return self.small_cells[address]
        if address in self.c_cells:
            return self.c_cells[address]
        return self.prefix_memory.contents_of(address)

    def write(self, address: int, value: int) -> None:
        raise DecodingIntegrityError("query replay attempted a write")


@dataclass
class DecodeResult:
    u_istar: tuple[int, ...]
    flag: int
    queries_replayed: int = 0
    independent_rows: int = 0
    suffix_weights: tuple[int, ...] | None = None  # index-weight game only


def decode_epoch(
    message: EncodingMessage,
    prefix_updates: UpdateSequence,
    structure_factory: Callable[..., object],
    verify_run: RunRecord | None = None,
) -> DecodeResult:
    """Recover the target epoch's weight vector from the message and the
    updates of the preceding epochs.

    The flag-0 path re-executes the prefix on a fresh structure, replays
    every transmitted query against the three-way cell resolution,
    subtracts the contributions of all known epochs, and solves the
    resulting full-rank linear system. With `verify_run` supplied, every
    replayed probe is checked against the true run: touching an
    epoch-istar cell outside C is an integrity error.
    """
    delta = PrimeModulus(message.delta)
    istar = message.istar
    n = message.n
    sched = epoch_schedule(n, message.beta)
    run_sched = sched.snap_to_fibonacci() if message.kind == "orc" else sched
    m = run_sched.size_of(istar)

    if message.flag == 1:
        section = message.section("raw_weights")
        weights = unpack_weights(section.payload, delta, m)
        return DecodeResult(u_istar=weights, flag=1)

    if any(e.epoch <= istar for e in prefix_updates.epochs):
        raise ValueError("prefix updates must cover only epochs above istar")

    w = message.w
    c_cells = _parse_cells_section(message.section("resolved_cells"), w)
    small_cells: dict[int, int] = {}
    for epoch_id in range(istar - 1, 0, -1):
        small_cells.update(
            _parse_cells_section(message.section(f"cells_epoch_{epoch_id}"), w)
        )
    small_weights: dict[int, tuple[int, ...]] = {}
    if message.kind == "orc":
        for epoch_id in range(istar - 1, 0, -1):
            section = message.section(f"weights_epoch_{epoch_id}")
            small_weights[epoch_id] = unpack_weights(
                section.payload, delta, run_sched.size_of(epoch_id)
            )

    qsection = message.section("resolved_queries")
    reader = _FieldReader(qsection.payload, qsection.bit_length)
    count = reader.take(2 * w)
    qbits = _query_id_bits(n)
    qids = [reader.take(qbits) for _ in range(count)]

    # re-execute the preceding epochs on a fresh structure
    prefix_memory = SimulatedMemory(MemoryConfig(w=w))
    prefix_structure = structure_factory(prefix_memory)
    execute_epochs(prefix_structure, prefix_memory, prefix_updates)

    resolving = _ResolvingMemory(
        MemoryConfig(w=w), small_cells, c_cells, prefix_memory, verify_run, istar
    )
    replay_structure = structure_factory(resolving)

    if message.kind == "orc":
        epoch_points = {
            i: scaled_lattice(LatticeSpec.create(run_sched.size_of(i), n))
            for i in run_sched.epoch_ids()
        }
        prefix_points = [
            (target, weight)
            for e in prefix_updates.epochs
            for target, weight in zip(e.targets, e.weights)
        ]
        rows: list[FieldVector] = []
        z_values: list[int] = []
        for idx, qid in enumerate(qids):
            q = divmod(qid, n)
            resolving.begin_operation(("replay", idx))
            answer = replay_structure.query(q[0], q[1])
            known = sum(wt for (pt, wt) in prefix_points if pt[0] <= q[0] and pt[1] <= q[1])
            for epoch_id, weights in small_weights.items():
                inc = dominance_incidence(epoch_points[epoch_id], q)
                known += sum(wt for bit, wt in zip(inc, weights) if bit)
            rows.append(FieldVector(delta, dominance_incidence(epoch_points[istar], q)))
            z_values.append((answer - known) % delta.value)
        dim = m
    else:
        family = getattr(replay_structure, "family")
        k_len = run_sched.suffix_length(istar)
        prefix_weight_at = {
            target: weight
            for e in prefix_updates.epochs
            for target, weight in zip(e.targets, e.weights)
        }
        rows = []
        z_values = []
        for idx, qid in enumerate(qids):
            resolving.begin_operation(("replay", idx))
            answer = replay_structure.query(qid)
            coords = family.vectors[qid].coords
            known = sum(
                prefix_weight_at[pos]
                for pos in range(n - k_len)
                if coords[pos]
            )
            rows.append(family.vectors[qid].last(k_len))
            z_values.append((answer - known) % delta.value)
        dim = k_len

    kept = independent_row_indices(rows)
    kept_rows = [rows[i] for i in kept]
    kept_z = [z_values[i] for i in kept]
    completion = complete_basis(kept_rows, dim, modulus=delta)

    psection = message.section("completion_products")
    products = unpack_weights(psection.payload, delta, len(completion))

    matrix = FieldMatrix(delta, tuple(kept_rows + completion))
    z_vec = FieldVector(delta, tuple(kept_z + list(products)))
    try:
        solution = ff_solve(matrix, z_vec)
    except SingularMatrixError as exc:
        raise DecodingIntegrityError(f"assembled system is singular: {exc}") from exc

    if message.kind == "orc":
        u_istar = solution.coords
        suffix = None
    else:
        suffix = solution.coords
        u_istar = suffix[:m]
    return DecodeResult(
        u_istar=tuple(u_istar),
        flag=0,
        queries_replayed=len(qids),
        independent_rows=len(kept),
        suffix_weights=suffix,
    )


# ---------------------------------------------------------------------------
# entropy accounting


@dataclass(frozen=True)
class EntropyAccount:
    h_bits: float  # epoch entropy: size(istar) * lg Delta
    message_bits: int
    slack: float

    @property
    def ratio(self) -> float:
        return self.message_bits / self.h_bits if self.h_bits else math.inf


def entropy_account(
    schedule: EpochSchedule, istar: int, delta: PrimeModulus, message: EncodingMessage
) -> EntropyAccount:
    """Compare the message length to the entropy of the epoch's weights.

    The entropy uses the epoch's executed size (equal to beta^istar for
    every epoch except the first-in-time one, which absorbs the
    schedule remainder).
    """
    h_bits = schedule.size_of(istar) * math.log2(delta.value)
    return EntropyAccount(
        h_bits=h_bits,
        message_bits=message.total_bits,
        slack=message.total_bits - h_bits,
    )
