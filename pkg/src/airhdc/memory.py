"""Associative memory over labeled prototype hypervectors.

Retrieval ranks entries by similarity = d - hamming(query, entry), computed
over the bit-packed matrix with vectorized popcounts. The memory is immutable
after construction; queries are read-only and safe to run concurrently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DimensionError
from .hdc import Codebook, Hypervector, cyclic_permute

__all__ = ["AssociativeMemory", "MemoryEntry", "SearchHit", "SearchResult"]


@dataclass(frozen=True)
class MemoryEntry:
    label: int
    tx_slot: Optional[int]
    vector: Hypervector


@dataclass(frozen=True)
class SearchHit:
    label: int
    tx_slot: Optional[int]
    similarity: int


@dataclass(frozen=True)
class SearchResult:
    """Hits sorted by descending similarity; ties broken by ascending entry index."""

    ranked: tuple[SearchHit, ...]

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(hit.label for hit in self.ranked)

    @property
    def pairs(self) -> tuple[tuple[int, Optional[int]], ...]:
        return tuple((hit.label, hit.tx_slot) for hit in self.ranked)


class AssociativeMemory:
    """Immutable store of (label, tx_slot, vector) entries with top-k retrieval."""

    def __init__(self, entries: Iterable[MemoryEntry]):
        entries = tuple(entries)
        if not entries:
            raise ValueError("associative memory must hold at least one entry")
        d = entries[0].vector.dim
        seen = set()
        for e in entries:
            if e.vector.dim != d:
                raise DimensionError(f"entry dimension {e.vector.dim} != {d}")
            key = (e.label, e.tx_slot)
            if key in seen:
                raise ValueError(f"duplicate entry (label={e.label}, tx_slot={e.tx_slot})")
            seen.add(key)
        self._entries = entries
        self._dim = d
        self._packed = np.stack([e.vector.packed for e in entries])
        self._packed.setflags(write=False)

    @classmethod
    def from_codebook(cls, codebook: Codebook) -> "AssociativeMemory":
        """One entry per class, tx_slot unset."""
        return cls(
            MemoryEntry(label, None, v) for label, v in enumerate(codebook.vectors)
        )

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def entries(self) -> tuple[MemoryEntry, ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def expand_permuted(self, n_tx: int) -> "AssociativeMemory":
        """Replace each entry with its cyclically permuted versions for slots 1..n_tx.

        Entry (label, m) holds the stored vector rotated by m, the signature of
        the transmitter that applies its 1-bit permutation m times in slot m.
        """
        if n_tx < 1:
            raise ValueError(f"transmitter count must be >= 1, got {n_tx}")
        expanded = [
            MemoryEntry(e.label, m, cyclic_permute(e.vector, m))
            for e in self._entries
            for m in range(1, n_tx + 1)
        ]
        return AssociativeMemory(expanded)

    def similarities(self, query: Hypervector) -> np.ndarray:
        """Similarity d - hamming(query, entry) for every entry, as int64."""
        if query.dim != self._dim:
            raise DimensionError(f"query dimension {query.dim} != {self._dim}")
        dists = np.bitwise_count(self._packed ^ query.packed).sum(axis=1, dtype=np.int64)
        return self._dim - dists

    def top_k(self, query: Hypervector, k: int) -> SearchResult:
        """The k most similar entries, deterministic under similarity ties."""
        if not 1 <= k <= len(self._entries):
            raise ValueError(f"k must be in [1, {len(self._entries)}], got {k}")
        sims = self.similarities(query)
        # stable sort on -sims keeps ascending entry index within ties
        order = np.argsort(-sims, kind="stable")[:k]
        hits = tuple(
            SearchHit(self._entries[i].label, self._entries[i].tx_slot, int(sims[i]))
            for i in order
        )
        return SearchResult(hits)

    # -- persistence ---------------------------------------------------------

    def save_csv(self, path) -> None:
        """Write entries as rows label,tx_slot,bits_hex; bit-exact round trip."""
        with open(path, "w", newline="") as fh:
            fh.write(f"# d: {self._dim}\n")
            writer = csv.writer(fh)
            writer.writerow(["label", "tx_slot", "bits_hex"])
            for e in self._entries:
                slot = "" if e.tx_slot is None else str(e.tx_slot)
                writer.writerow([e.label, slot, e.vector.packed.tobytes().hex()])

    @classmethod
    def load_csv(cls, path) -> "AssociativeMemory":
        with open(path, newline="") as fh:
            first = fh.readline()
            if not first.startswith("# d:"):
                raise ValueError(f"{path}: missing '# d:' dimension header")
            d = int(first.split(":", 1)[1])
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["label", "tx_slot", "bits_hex"]:
                raise ValueError(f"{path}: unexpected header {header}")
            entries = []
            for row in reader:
                label, slot, hexbits = row
                packed = np.frombuffer(bytes.fromhex(hexbits), dtype=np.uint8).copy()
                vec = Hypervector._from_packed(packed, d)
                entries.append(
                    MemoryEntry(int(label), int(slot) if slot else None, vec)
                )
        return cls(entries)
