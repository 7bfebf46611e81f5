"""Simulated memory of addressable w-bit cells with a full probe log.

Every read or write of a cell is a probe and lands in the trace. Each
written cell carries the id of the last epoch that wrote it, which is
what per-epoch probe accounting is built on. Cells that were never
written read as zero: a decoder re-executing a prefix of the updates
must see exactly the same blanks the original execution saw.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Hashable, Iterable


def ceil_lg(n: int) -> int:
    if n < 1:
        raise ValueError("ceil_lg needs a positive argument")
    return (n - 1).bit_length()


def default_cell_width(n: int, multiple: int = 8) -> int:
    """Smallest multiple of `multiple` covering ceil(lg n)."""
    return max(multiple, -(-ceil_lg(n) // multiple) * multiple)


@dataclass(frozen=True)
class MemoryConfig:
    w: int

    def __post_init__(self) -> None:
        if self.w < 1:
            raise ValueError("cell width must be positive")

    @classmethod
    def for_points(cls, n: int, w: int | None = None, multiple: int = 8) -> "MemoryConfig":
        if w is None:
            w = default_cell_width(n, multiple)
        if w < ceil_lg(n):
            raise ValueError(f"w={w} below ceil(lg n)={ceil_lg(n)}")
        return cls(w=w)


@dataclass(frozen=True)
class ProbeEntry:
    op_id: Hashable
    kind: str  # "read" | "write"
    address: int
    epoch_tag: int | None  # tag on the cell at probe time; None if unwritten


class ProbeTrace:
    """Append-only probe log, segmented by operation id."""

    def __init__(self) -> None:
        self.entries: list[ProbeEntry] = []
        self._spans: dict[Hashable, tuple[int, int]] = {}
        self._open: Hashable | None = None
        self._open_start = 0

    def begin(self, op_id: Hashable) -> None:
        self._close()
        self._open = op_id
        self._open_start = len(self.entries)

    def _close(self) -> None:
        if self._open is not None:
            self._spans[self._open] = (self._open_start, len(self.entries))
            self._open = None

    def append(self, entry: ProbeEntry) -> None:
        self.entries.append(entry)

    def segment(self, op_id: Hashable) -> list[ProbeEntry]:
        if op_id == self._open:
            return self.entries[self._open_start :]
        start, end = self._spans[op_id]
        return self.entries[start:end]

    def __len__(self) -> int:
        return len(self.entries)

    def export_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["op_id", "kind", "address", "epoch_tag"])
            for e in self.entries:
                tag = "" if e.epoch_tag is None else e.epoch_tag
                writer.writerow([e.op_id, e.kind, e.address, tag])


class SimulatedMemory:
    """w-bit cells addressed by integers below 2^w.

    A single instance is single-threaded mutable state; run independent
    instances for parallel trials. Epoch ids must strictly decrease
    over a run (epochs are numbered largest-first in time); writes
    outside any declared epoch are tagged 0.
    """

    def __init__(self, config: MemoryConfig):
        self.config = config
        self.cells: dict[int, tuple[int, int]] = {}  # address -> (contents, tag)
        self.current_epoch: int | None = None
        self.trace = ProbeTrace()
        self._current_op: Hashable | None = None

    def begin_epoch(self, epoch_id: int) -> None:
        if epoch_id < 1:
            raise ValueError("epoch ids start at 1")
        if self.current_epoch is not None and epoch_id >= self.current_epoch:
            raise ValueError(
                f"epoch ids must strictly decrease: {epoch_id} after {self.current_epoch}"
            )
        self.current_epoch = epoch_id

    def begin_operation(self, op_id: Hashable) -> None:
        self._current_op = op_id
        self.trace.begin(op_id)

    def _check_address(self, address: int) -> None:
        if not 0 <= address < 1 << self.config.w:
            raise ValueError(f"address {address} does not fit in {self.config.w} bits")

    def read(self, address: int) -> int:
        self._check_address(address)
        contents, tag = self.cells.get(address, (0, None))
        self.trace.append(ProbeEntry(self._current_op, "read", address, tag))
        return contents

    def write(self, address: int, value: int) -> None:
        self._check_address(address)
        if not 0 <= value < 1 << self.config.w:
            raise OverflowError(f"value {value} does not fit in {self.config.w} bits")
        tag = self.current_epoch if self.current_epoch is not None else 0
        self.cells[address] = (value, tag)
        self.trace.append(ProbeEntry(self._current_op, "write", address, tag))

    def epoch_of(self, address: int) -> int | None:
        cell = self.cells.get(address)
        return None if cell is None else cell[1]

    def contents_of(self, address: int) -> int:
        """Contents without probing (bookkeeping access, not in the trace)."""
        cell = self.cells.get(address)
        return 0 if cell is None else cell[0]

    def written_addresses(self) -> set[int]:
        return set(self.cells)

    def cells_of_epoch(self, epoch_id: int) -> set[tuple[int, int]]:
        """(address, contents) pairs whose last write was in the epoch."""
        return {
            (addr, contents)
            for addr, (contents, tag) in self.cells.items()
            if tag == epoch_id
        }

    def epoch_partition(self) -> dict[int, set[int]]:
        partition: dict[int, set[int]] = {}
        for addr, (_, tag) in self.cells.items():
            partition.setdefault(tag, set()).add(addr)
        return partition


def probe_read(mem: SimulatedMemory, address: int) -> int:
    return mem.read(address)


def probe_write(mem: SimulatedMemory, address: int, value: int) -> None:
    mem.write(address, value)


def probe_counts_by_epoch(
    entries: Iterable[ProbeEntry], mem: SimulatedMemory
) -> dict[int, int]:
    """Distinct cells probed, keyed by the cell's final epoch tag.

    A cell probed twice within the segment counts once; cells that were
    never written belong to no epoch and are skipped. Raw probe counts
    stay available in the trace itself.
    """
    seen: set[int] = set()
    counts: dict[int, int] = {}
    for e in entries:
        if e.address in seen:
            continue
        seen.add(e.address)
        tag = mem.epoch_of(e.address)
        if tag is None:
            continue
        counts[tag] = counts.get(tag, 0) + 1
    return counts


def assert_epoch_partition(mem: SimulatedMemory) -> None:
    """Epoch cell sets must partition the written cells."""
    partition = mem.epoch_partition()
    union: set[int] = set()
    total = 0
    for addrs in partition.values():
        union |= addrs
        total += len(addrs)
    written = mem.written_addresses()
    if union != written or total != len(written):
        raise AssertionError("epoch cell sets do not partition the written cells")
