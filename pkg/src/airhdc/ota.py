"""Over-the-air majority machinery.

Each transmitter keys one bit onto one of two phases; a receiver observes the
complex superposition of all transmitters, so its constellation has one point
per TX bit combination. Decoding maps a received sample to the majority bit of
the nearest of two centroids. A phase assignment is *feasible* at a receiver
when balanced 2-means clustering of the noiseless constellation reproduces the
majority-0 / majority-1 partition exactly; the analytic bit error rate then
follows the BPSK expression 0.5 * erfc(0.5 * d_c / sqrt(N0)) with d_c the
distance between the two cluster centroids.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import erfc

from .channel import ChannelMatrix
from .errors import ChannelFileError, InfeasibleError

__all__ = [
    "Constellation",
    "DecisionRule",
    "PhaseAlphabet",
    "PhaseAssignment",
    "ber_analytic",
    "ber_montecarlo",
    "decision_regions",
    "decode",
    "received_constellation",
]

KMEANS_RESTARTS = 10
_KMEANS_MAX_ITER = 64
_RESTART_SEED = 0x0A17


@dataclass(frozen=True)
class PhaseAlphabet:
    """Discrete phases (degrees) a transmitter may use; default is 45-degree steps."""

    phases_deg: tuple[float, ...] = tuple(45.0 * i for i in range(8))

    def __post_init__(self):
        if len(self.phases_deg) < 2:
            raise ValueError("alphabet needs at least two phases")
        if len(set(self.phases_deg)) != len(self.phases_deg):
            raise ValueError("alphabet phases must be distinct")
        for p in self.phases_deg:
            if not 0.0 <= p < 360.0:
                raise ValueError(f"phase {p} outside [0, 360)")

    @classmethod
    def uniform(cls, count: int) -> "PhaseAlphabet":
        return cls(tuple(360.0 * i / count for i in range(count)))

    def __len__(self) -> int:
        return len(self.phases_deg)

    @property
    def is_uniform_grid(self) -> bool:
        """True when the phases are exactly {k * 360/P}, enabling rotation symmetry."""
        p = len(self.phases_deg)
        return sorted(self.phases_deg) == [360.0 * i / p for i in range(p)]


@dataclass(frozen=True)
class PhaseAssignment:
    """Per TX, the ordered (bit-0 phase, bit-1 phase) pair in degrees."""

    pairs_deg: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.pairs_deg:
            raise ValueError("assignment needs at least one TX")
        for m, (p0, p1) in enumerate(self.pairs_deg):
            if p0 == p1:
                raise ValueError(f"TX {m}: bit phases must differ, both are {p0}")

    @property
    def n_tx(self) -> int:
        return len(self.pairs_deg)

    def pairs_rad(self) -> np.ndarray:
        """(M, 2) array of phases in radians."""
        return np.deg2rad(np.asarray(self.pairs_deg, dtype=np.float64))

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tx", "phase0_deg", "phase1_deg"])
            for m, (p0, p1) in enumerate(self.pairs_deg):
                writer.writerow([m, repr(p0), repr(p1)])

    @classmethod
    def load_csv(cls, path) -> "PhaseAssignment":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["tx", "phase0_deg", "phase1_deg"]:
                raise ChannelFileError(f"{path}: unexpected header {header}")
            by_tx = {}
            for lineno, row in enumerate(reader, start=2):
                try:
                    m, p0, p1 = int(row[0]), float(row[1]), float(row[2])
                except (ValueError, IndexError) as exc:
                    raise ChannelFileError(f"{path}:{lineno}: {exc}") from None
                if m in by_tx:
                    raise ChannelFileError(f"{path}:{lineno}: duplicate tx {m}")
                by_tx[m] = (p0, p1)
        if sorted(by_tx) != list(range(len(by_tx))):
            raise ChannelFileError(f"{path}: tx ids must be contiguous from 0")
        return cls(tuple(by_tx[m] for m in range(len(by_tx))))


@dataclass(frozen=True)
class Constellation:
    """All 2^M noiseless receive points at one RX; combo k sets TX m to bit (k>>m)&1."""

    rx: int
    points: np.ndarray  # (2^M,) complex
    majority_bits: np.ndarray  # (2^M,) uint8

    def __post_init__(self):
        self.points.setflags(write=False)
        self.majority_bits.setflags(write=False)

    @property
    def n_tx(self) -> int:
        return int(np.log2(len(self.points)))


@dataclass(frozen=True)
class DecisionRule:
    """Two-centroid nearest-neighbor decoder aligned with the majority labels."""

    centroid_0: complex
    centroid_1: complex

    @property
    def d_c(self) -> float:
        return abs(self.centroid_1 - self.centroid_0)


# -- combinatorial helpers -----------------------------------------------------


@lru_cache(maxsize=None)
def _bit_combos(m: int) -> np.ndarray:
    """(2^m, m) matrix; row k, column j = bit j of k."""
    k = np.arange(1 << m, dtype=np.uint32)
    return ((k[:, None] >> np.arange(m)) & 1).astype(np.uint8)

@lru_cache(maxsize=None)
def _majority_labels(m: int) -> np.ndarray:
    """Majority bit per combo row; m must be odd so no ties arise."""
    ones = _bit_combos(m).sum(axis=1)
    return (2 * ones > m).astype(np.uint8)


def _require_odd(m: int) -> None:
    if m % 2 == 0:
        raise ValueError(f"majority over {m} transmitters is undefined; use an odd count")


def constellation_points(gains_col: np.ndarray, pairs_rad: np.ndarray) -> np.ndarray:
    """Points y(b) = sum_m h_m exp(i phi_m(b_m)) for a batch of assignments.

    gains_col: (M,) or (M, N) complex; pairs_rad: (B, M, 2). Returns
    (B, 2^M) or (B, 2^M, N).
    """
    m = pairs_rad.shape[1]
    combos = _bit_combos(m)  # (P, M)
    ph = np.where(
        combos[None, :, :] == 0, pairs_rad[:, None, :, 0], pairs_rad[:, None, :, 1]
    )  # (B, P, M)
    tones = np.exp(1j * ph)
    return tones @ gains_col


def received_constellation(
    ch: ChannelMatrix, pa: PhaseAssignment, rx: int
) -> Constellation:
    """Noiseless constellation seen by receiver ``rx`` under assignment ``pa``."""
    if pa.n_tx != ch.n_tx:
        raise ValueError(f"assignment has {pa.n_tx} TXs, channel has {ch.n_tx}")
    _require_odd(ch.n_tx)
    if not 0 <= rx < ch.n_rx:
        raise ValueError(f"rx {rx} out of range [0, {ch.n_rx})")
    points = constellation_points(ch.gains[:, rx], pa.pairs_rad()[None])[0]
    return Constellation(rx, points, _majority_labels(ch.n_tx).copy())


# -- balanced 2-means ----------------------------------------------------------


@lru_cache(maxsize=None)
def _restart_seeds(n_points: int, restarts: int) -> np.ndarray:
    """(restarts - 1, 2) fixed initial centroid index pairs, i != j."""
    rng = np.random.default_rng(_RESTART_SEED)
    pairs = np.empty((restarts - 1, 2), dtype=np.int64)
    for r in range(restarts - 1):
        i = int(rng.integers(n_points))
        j = int(rng.integers(n_points - 1))
        pairs[r] = (i, j + (j >= i))
    return pairs


def _balanced_assign(delta: np.ndarray) -> np.ndarray:
    """Split each problem's points half/half by ascending d0 - d1 (stable)."""
    p = delta.shape[-1]
    order = np.argsort(delta, axis=-1, kind="stable")
    assign = np.empty_like(order, dtype=np.uint8)
    np.put_along_axis(assign, order, (np.arange(p) >= p // 2).astype(np.uint8), axis=-1)
    return assign


def _balanced_two_means(
    points: np.ndarray, maj: np.ndarray, restarts: int = KMEANS_RESTARTS
) -> tuple[np.ndarray, np.ndarray]:
    """Best balanced 2-clustering per problem row and its majority alignment.

    points: (Q, P) complex, P even; maj: (P,) binary labels. Returns
    (feasible (Q,) bool, d_c (Q,) float) where d_c is the distance between
    the majority-group centroids regardless of feasibility. Restart 0 starts
    from the majority centroids so that a stable majority partition always
    competes; remaining restarts use fixed point pairs, making the outcome
    deterministic.
    """
    q, p = points.shape
    maj_mask = maj.astype(bool)
    cm0 = points[:, ~maj_mask].mean(axis=1)
    cm1 = points[:, maj_mask].mean(axis=1)
    d_c = np.abs(cm1 - cm0)

    xr = np.ascontiguousarray(points.real)
    xi = np.ascontiguousarray(points.imag)
    seeds = _restart_seeds(p, restarts)
    c0 = np.concatenate([cm0[:, None], points[:, seeds[:, 0]]], axis=1)  # (Q, R)
    c1 = np.concatenate([cm1[:, None], points[:, seeds[:, 1]]], axis=1)

    half = p // 2
    assign = None
    for _ in range(_KMEANS_MAX_ITER):
        # |x - c0|^2 - |x - c1|^2 = -2 Re(x conj(c0 - c1)) + |c0|^2 - |c1|^2
        dr = (c0 - c1).real
        di = (c0 - c1).imag
        bias = (c0.real**2 + c0.imag**2 - c1.real**2 - c1.imag**2)[:, :, None]
        delta = -2.0 * (xr[:, None, :] * dr[:, :, None] + xi[:, None, :] * di[:, :, None]) + bias
        new_assign = _balanced_assign(delta)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        in1 = assign.astype(np.float64)
        c1 = (in1 @ points[:, :, None])[:, :, 0] / half  # (Q, R)
        c0 = (cm0 + cm1)[:, None] - c1  # cluster sums are complementary

    # k-means objective of each restart's final partition
    in1 = assign.astype(np.float64)
    c1 = (in1 @ points[:, :, None])[:, :, 0] / half
    c0 = (points.sum(axis=1) / half)[:, None] - c1
    d0 = (xr[:, None, :] - c0.real[:, :, None]) ** 2 + (xi[:, None, :] - c0.imag[:, :, None]) ** 2
    d1 = (xr[:, None, :] - c1.real[:, :, None]) ** 2 + (xi[:, None, :] - c1.imag[:, :, None]) ** 2
    cost = np.where(assign == 0, d0, d1).sum(axis=-1)  # (Q, R)
    best = cost.argmin(axis=1)  # ties -> lowest index, i.e. the majority start
    best_assign = np.take_along_axis(assign, best[:, None, None], axis=1)[:, 0, :]

    matches = (best_assign == maj[None, :]).all(axis=1)
    matches |= (best_assign == (1 - maj)[None, :]).all(axis=1)
    return matches, d_c


def decision_regions(c: Constellation, restarts: int = KMEANS_RESTARTS) -> Optional[DecisionRule]:
    """Majority-aligned decision rule for a constellation, or None if infeasible.

    Feasible means the best balanced 2-means clustering of the points equals
    the majority-label partition exactly; the rule's centroids are then the
    means of the majority-0 and majority-1 groups.
    """
    feasible, _ = _balanced_two_means(c.points[None, :], c.majority_bits, restarts)
    if not feasible[0]:
        return None
    maj = c.majority_bits.astype(bool)
    return DecisionRule(
        complex(c.points[~maj].mean()), complex(c.points[maj].mean())
    )


# -- error rates ---------------------------------------------------------------


def ber_analytic(rule: DecisionRule, n0: float) -> float:
    """BPSK-style error rate 0.5 * erfc(0.5 * d_c / sqrt(N0))."""
    if not n0 > 0:
        raise ValueError(f"N0 must be positive, got {n0}")
    return float(0.5 * erfc(0.5 * rule.d_c / math.sqrt(n0)))


def ber_from_dc(d_c: np.ndarray, n0: float) -> np.ndarray:
    if not n0 > 0:
        raise ValueError(f"N0 must be positive, got {n0}")
    return 0.5 * erfc(0.5 * d_c / math.sqrt(n0))


def decode(y: complex, rule: DecisionRule) -> int:
    """Nearest-centroid bit decision; exact ties decode to 0."""
    return 0 if abs(y - rule.centroid_0) <= abs(y - rule.centroid_1) else 1


def ber_montecarlo(
    ch: ChannelMatrix,
    pa: PhaseAssignment,
    rx: int,
    n0: float,
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Empirical majority-bit error rate under complex Gaussian noise.

    Noise has total variance N0 (N0/2 per quadrature), the calibration under
    which the analytic expression is exact for two-point constellations.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not n0 > 0:
        raise ValueError(f"N0 must be positive, got {n0}")
    cons = received_constellation(ch, pa, rx)
    rule = decision_regions(cons)
    if rule is None:
        raise InfeasibleError(
            f"rx {rx}: constellation is not majority-separable; no decision rule"
        )
    maj = cons.majority_bits
    sigma = math.sqrt(n0 / 2.0)
    errors = 0
    remaining = trials
    while remaining > 0:
        chunk = min(remaining, 1 << 19)
        idx = rng.integers(0, len(cons.points), size=chunk)
        noise = rng.normal(0.0, sigma, size=chunk) + 1j * rng.normal(0.0, sigma, size=chunk)
        y = cons.points[idx] + noise
        bit = (
            np.abs(y - rule.centroid_0) > np.abs(y - rule.centroid_1)
        ).astype(np.uint8)
        errors += int((bit != maj[idx]).sum())
        remaining -= chunk
    return errors / trials


def ber_matrix(
    ch: ChannelMatrix,
    pairs_rad: np.ndarray,
    n0: float | None = None,
    restarts: int = KMEANS_RESTARTS,
    chunk: int = 256,
) -> np.ndarray:
    """Analytic BER for a batch of assignments over every receiver.

    pairs_rad: (B, M, 2) radians. Returns (B, N) with 0.5 where the
    constellation is not majority-separable. Evaluation is chunked to bound
    memory; results are independent of the chunk size.
    """
    m = ch.n_tx
    _require_odd(m)
    if n0 is None:
        n0 = ch.n0
    maj = _majority_labels(m)
    b_total = pairs_rad.shape[0]
    n = ch.n_rx
    out = np.empty((b_total, n), dtype=np.float64)
    for lo in range(0, b_total, chunk):
        batch = pairs_rad[lo : lo + chunk]
        pts = constellation_points(ch.gains, batch)  # (b, P, N)
        flat = np.ascontiguousarray(pts.transpose(0, 2, 1)).reshape(-1, 1 << m)
        feasible, d_c = _balanced_two_means(flat, maj, restarts)
        ber = np.where(feasible, ber_from_dc(d_c, n0), 0.5)
        out[lo : lo + len(batch)] = ber.reshape(len(batch), n)
    return out
