"""Joint search over per-TX phase pairs minimizing BER across receivers.

One assignment fixes the constellation of every receiver at once, so the
search optimizes a global objective (mean per-RX analytic BER by default,
max behind a flag). Exhaustive enumeration covers the reduced space for
small TX counts; coordinate-descent with restarts covers the rest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix
from .ota import PhaseAlphabet, PhaseAssignment, ber_matrix

__all__ = [
    "BerProfile",
    "SearchReport",
    "evaluate",
    "reduced_space_size",
    "search_exhaustive",
    "search_greedy",
]

EXHAUSTIVE_MAX_TX = 5
_IMPROVE_EPS = 1e-12


@dataclass(frozen=True)
class BerProfile:
    """Per-receiver analytic BER vector with aggregate statistics."""

    per_rx: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.per_rx, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "per_rx", arr)

    @property
    def mean(self) -> float:
        return float(self.per_rx.mean())

    @property
    def max(self) -> float:
        return float(self.per_rx.max())


@dataclass(frozen=True)
class SearchReport:
    best: PhaseAssignment
    profile: BerProfile
    explored: int
    method: str
    objective: str = "mean"

    @property
    def objective_value(self) -> float:
        return self.profile.mean if self.objective == "mean" else self.profile.max


def evaluate(ch: ChannelMatrix, pa: PhaseAssignment, n0: float | None = None) -> BerProfile:
    """Per-RX analytic BER of one assignment; infeasible receivers count as 0.5."""
    return BerProfile(ber_matrix(ch, pa.pairs_rad()[None], n0)[0])


def _objective(bers: np.ndarray, objective: str) -> np.ndarray:
    if objective == "mean":
        return bers.mean(axis=1)
    if objective == "max":
        return bers.max(axis=1)
    raise ValueError(f"unknown objective {objective!r}")


def _ordered_pairs(alphabet: PhaseAlphabet) -> list[tuple[float, float]]:
    ph = alphabet.phases_deg
    return [(a, b) for a in ph for b in ph if a != b]


def _first_tx_pairs(alphabet: PhaseAlphabet) -> list[tuple[float, float]]:
    """Canonical pair choices for TX 0 under the applicable symmetry reduction.

    Uniform-grid alphabets rotate onto themselves, so TX 0's bit-0 phase can be
    fixed to the first phase and its bit-1 phase limited to offsets <= 180 deg
    (global bit complement maps offset x to 360 - x). Other alphabets only get
    the complement reduction: unordered pairs for TX 0.
    """
    ph = alphabet.phases_deg
    if alphabet.is_uniform_grid:
        base = ph[0]
        out = []
        for p in ph:
            delta = (p - base) % 360.0
            if 0.0 < delta <= 180.0:
                out.append((base, p))
        return out
    return [(a, b) for i, a in enumerate(ph) for b in ph[i + 1 :]]


def reduced_space_size(alphabet: PhaseAlphabet, n_tx: int) -> int:
    """Closed-form number of assignments search_exhaustive enumerates."""
    k = len(alphabet) * (len(alphabet) - 1)
    return len(_first_tx_pairs(alphabet)) * k ** (n_tx - 1)


def _iter_candidate_chunks(alphabet: PhaseAlphabet, n_tx: int, chunk: int):
    """Lexicographic enumeration of reduced assignments, yielded in chunks.

    Each chunk is (pairs_deg list, pairs_rad array (b, M, 2)).
    """
    first = _first_tx_pairs(alphabet)
    rest = _ordered_pairs(alphabet)
    pools = [first] + [rest] * (n_tx - 1)
    buf: list[tuple[tuple[float, float], ...]] = []
    for combo in itertools.product(*pools):
        buf.append(combo)
        if len(buf) == chunk:
            yield buf, np.deg2rad(np.asarray(buf, dtype=np.float64))
            buf = []
    if buf:
        yield buf, np.deg2rad(np.asarray(buf, dtype=np.float64))


def search_exhaustive(
    ch: ChannelMatrix,
    alphabet: PhaseAlphabet = PhaseAlphabet(),
    objective: str = "mean",
    n0: float | None = None,
    chunk: int = 2048,
) -> SearchReport:
    """Enumerate the symmetry-reduced assignment space and keep the global optimum.

    Ties are broken toward the first candidate in canonical enumeration order.
    Guarded to n_tx <= 5; beyond that the space grows as 56^M, use search_greedy.
    """
    m = ch.n_tx
    if m % 2 == 0:
        raise ValueError("transmitter count must be odd")
    if m > EXHAUSTIVE_MAX_TX:
        raise ValueError(
            f"exhaustive search over {m} TXs is intractable; use search_greedy"
        )
    best_obj = math.inf
    best_pairs: tuple[tuple[float, float], ...] | None = None
    explored = 0
    for pairs_deg, pairs_rad in _iter_candidate_chunks(alphabet, m, chunk):
        objs = _objective(ber_matrix(ch, pairs_rad, n0), objective)
        i = int(objs.argmin())
        if objs[i] < best_obj:
            best_obj = float(objs[i])
            best_pairs = pairs_deg[i]
        explored += len(pairs_deg)
    assert best_pairs is not None
    pa = PhaseAssignment(best_pairs)
    return SearchReport(pa, evaluate(ch, pa, n0), explored, "exhaustive", objective)


def search_greedy(
    ch: ChannelMatrix,
    alphabet: PhaseAlphabet = PhaseAlphabet(),
    restarts: int = 8,
    rng: np.random.Generator | None = None,
    init: PhaseAssignment | None = None,
    objective: str = "mean",
    n0: float | None = None,
) -> SearchReport:
    """Coordinate descent: re-optimize one TX's pair at a time until stable.

    Runs from ``restarts`` random starts (the first replaced by ``init`` when
    given) and keeps the best local optimum. Deterministic given the rng.
    """
    m = ch.n_tx
    if m % 2 == 0:
        raise ValueError("transmitter count must be odd")
    if rng is None:
        rng = np.random.default_rng(0)
    pairs = _ordered_pairs(alphabet)
    k = len(pairs)
    pair_arr = np.asarray(pairs, dtype=np.float64)

    starts: list[np.ndarray] = []
    for r in range(restarts):
        if r == 0 and init is not None:
            if init.n_tx != m:
                raise ValueError(f"init has {init.n_tx} TXs, channel has {m}")
            starts.append(np.asarray(init.pairs_deg, dtype=np.float64))
        else:
            starts.append(pair_arr[rng.integers(0, k, size=m)])

    best_obj = math.inf
    best: np.ndarray | None = None
    explored = 0
    for start in starts:
        current = start.copy()
        cur_obj = float(
            _objective(ber_matrix(ch, np.deg2rad(current)[None], n0), objective)[0]
        )
        explored += 1
        improved = True
        while improved:
            improved = False
            for tx in range(m):
                cands = np.repeat(current[None], k, axis=0)
                cands[:, tx, :] = pair_arr
                objs = _objective(ber_matrix(ch, np.deg2rad(cands), n0), objective)
                explored += k
                i = int(objs.argmin())
                if cur_obj - objs[i] > _IMPROVE_EPS:
                    cur_obj = float(objs[i])
                    current = cands[i]
                    improved = True
        if cur_obj < best_obj:
            best_obj = cur_obj
            best = current
    assert best is not None
    pa = PhaseAssignment(tuple((float(a), float(b)) for a, b in best))
    return SearchReport(pa, evaluate(ch, pa, n0), explored, "greedy", objective)
