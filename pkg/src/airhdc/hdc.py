"""Binary hypervector algebra.

Hypervectors are dense binary vectors of dimension ``d`` stored bit-packed
(8 bits per byte) so that Hamming distances reduce to XOR + popcount.
Provided operations:

    random_hypervector(d, rng)   i.i.d. Bernoulli(0.5) generation
    majority(vs)                 bit-wise majority bundling (odd count only)
    cyclic_permute(v, k)         circular shift, out[(j+k) % d] = in[j]
    flip_noise(v, p, rng)        independent bit flips with probability p
    hamming_distance(a, b)       number of differing positions

All operations are pure: inputs are never mutated and every random choice
comes from the explicitly passed ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError

__all__ = [
    "Codebook",
    "Hypervector",
    "cyclic_permute",
    "flip_noise",
    "hamming_distance",
    "majority",
    "normalized_hamming",
    "random_hypervector",
]


class Hypervector:
    """Immutable binary vector of dimension ``dim``, bit-packed internally."""

    __slots__ = ("_packed", "_dim")

    def __init__(self, bits: Sequence[int] | np.ndarray):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionError("hypervector needs a nonempty 1-d bit sequence")
        if np.any(arr > 1):
            raise ValueError("hypervector bits must be 0 or 1")
        self._dim = int(arr.size)
        packed = np.packbits(arr, bitorder="little")
        packed.setflags(write=False)
        self._packed = packed

    @classmethod
    def _from_packed(cls, packed: np.ndarray, dim: int) -> "Hypervector":
        hv = object.__new__(cls)
        packed.setflags(write=False)
        hv._packed = packed
        hv._dim = dim
        return hv

    @classmethod
    def _from_bits_unchecked(cls, bits: np.ndarray) -> "Hypervector":
        return cls._from_packed(np.packbits(bits, bitorder="little"), int(bits.size))

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def bits(self) -> np.ndarray:
        """Unpacked copy of the bits as a uint8 array of length ``dim``."""
        return np.unpackbits(self._packed, count=self._dim, bitorder="little")

    @property
    def packed(self) -> np.ndarray:
        """Read-only packed representation (``ceil(dim / 8)`` bytes)."""
        return self._packed

    def __len__(self) -> int:
        return self._dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return self._dim == other._dim and bool(
            np.array_equal(self._packed, other._packed)
        )

    def __hash__(self) -> int:
        return hash((self._dim, self._packed.tobytes()))

    def __repr__(self) -> str:
        head = "".join(str(b) for b in self.bits[:16])
        tail = "..." if self._dim > 16 else ""
        return f"Hypervector(d={self._dim}, bits={head}{tail})"


def random_hypervector(d: int, rng: np.random.Generator) -> Hypervector:
    """Draw a hypervector with i.i.d. fair-coin bits. Deterministic per rng state."""
    if d < 1:
        raise DimensionError(f"dimension must be >= 1, got {d}")
    return Hypervector._from_bits_unchecked(rng.integers(0, 2, size=d, dtype=np.uint8))


def _check_same_dim(a: Hypervector, b: Hypervector) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} != {b.dim}")


def majority(inputs: Sequence[Hypervector]) -> Hypervector:
    """Bit-wise majority of an odd number of equal-dimension hypervectors.

    Even counts are rejected: a tie-break rule would silently change the
    bundling semantics, so callers must bundle odd counts.
    """
    if len(inputs) == 0:
        raise ValueError("majority of an empty list is undefined")
    if len(inputs) % 2 == 0:
        raise ValueError(f"majority requires an odd input count, got {len(inputs)}")
    d = inputs[0].dim
    for v in inputs[1:]:
        if v.dim != d:
            raise DimensionError(f"dimension mismatch: {v.dim} != {d}")
    rows = np.stack([v.bits for v in inputs])
    return Hypervector._from_bits_unchecked(_majority_rows(rows))


def _majority_rows(rows: np.ndarray) -> np.ndarray:
    """Majority along axis 0 of a (n, d) 0/1 array, n odd."""
    n = rows.shape[0]
    if n == 1:
        return rows[0].copy()
    counts = rows.sum(axis=0, dtype=np.int64)
    return (2 * counts > n).astype(np.uint8)


def cyclic_permute(v: Hypervector, k: int) -> Hypervector:
    """Rotate ``v`` so that output bit (j + k) mod d equals input bit j."""
    k = k % v.dim
    if k == 0:
        return v
    return Hypervector._from_bits_unchecked(np.roll(v.bits, k))


def flip_noise(v: Hypervector, p: float, rng: np.random.Generator) -> Hypervector:
    """Complement each bit independently with probability ``p``.

    ``p = 0`` consumes no randomness, so a zero-noise stage is transparent to
    the rng stream of the stages that follow it.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flip probability must be in [0, 1], got {p}")
    if p == 0.0:
        return v
    mask = (rng.random(v.dim) < p).astype(np.uint8)
    return Hypervector._from_bits_unchecked(v.bits ^ mask)


def hamming_distance(a: Hypervector, b: Hypervector) -> int:
    """Number of positions where ``a`` and ``b`` differ."""
    _check_same_dim(a, b)
    return int(np.bitwise_count(a.packed ^ b.packed).sum())


def normalized_hamming(a: Hypervector, b: Hypervector) -> float:
    """Hamming distance divided by the dimension; 0.5 for independent vectors."""
    return hamming_distance(a, b) / a.dim


@dataclass(frozen=True)
class Codebook:
    """Shared set of prototype hypervectors; label c is the index of vector c."""

    vectors: tuple[Hypervector, ...]

    def __post_init__(self):
        if len(self.vectors) == 0:
            raise ValueError("codebook must contain at least one vector")
        d = self.vectors[0].dim
        for v in self.vectors[1:]:
            if v.dim != d:
                raise DimensionError(f"codebook mixes dimensions {d} and {v.dim}")

    @classmethod
    def random(cls, n_classes: int, d: int, rng: np.random.Generator) -> "Codebook":
        """Codebook of ``n_classes`` independent random hypervectors."""
        return cls(tuple(random_hypervector(d, rng) for _ in range(n_classes)))

    @property
    def dim(self) -> int:
        return self.vectors[0].dim

    def __len__(self) -> int:
        return len(self.vectors)

    def __getitem__(self, label: int) -> Hypervector:
        return self.vectors[label]
