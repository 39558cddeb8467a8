"""End-to-end experiments: bundled classification, noise calibration, pipelines.

Classification trials model the scale-out loop: each of M transmitters draws a
query from the shared codebook (independently, so two TXs can pick the same
class), the queries are bundled over the air by bit-wise majority, the channel
flips composite bits with some probability, and an associative memory answers
with the top-M entries.

Scoring follows the transmitter-identification task the two bundling modes
support:

* baseline has no transmitter signatures, so a trial counts as correct only
  when the full set of transmitted classes is recovered; a class collision is
  unrecoverable (two slots cannot be told apart) and fails the trial.
* permuted bundling rotates each query by its slot index and expands the
  memory with the rotated prototypes, so every (class, slot) pair is an
  individually recoverable entry; accuracy is the fraction of recovered pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .channel import (
    ChannelMatrix,
    LayoutConfig,
    PathLossModel,
    generate_layout,
    synth_channel,
)
from .errors import CalibrationError
from .optimizer import BerProfile, SearchReport, evaluate, search_exhaustive, search_greedy
from .ota import (
    PhaseAlphabet,
    PhaseAssignment,
    _balanced_two_means,
    _majority_labels,
    ber_from_dc,
    constellation_points,
)

__all__ = [
    "AccuracyCell",
    "AccuracyReport",
    "ExperimentConfig",
    "PipelineConfig",
    "PipelineReport",
    "RxOutcome",
    "ScalabilityPoint",
    "ScalabilityReport",
    "SimilarityHistogram",
    "SweepPoint",
    "calibrate_n0",
    "run_ber_sweep",
    "run_classification",
    "run_ota_pipeline",
    "run_scalability",
]

_MODES = ("baseline", "permuted")
_CHANNELS = ("ideal", "flip")
_TRIAL_CHUNK = 256


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs of a classification experiment; defaults match the studied setup."""

    dim: int = 512
    classes: int = 100
    bundle_sizes: tuple[int, ...] = (1, 3, 5, 7, 9, 11)
    mode: str = "baseline"  # baseline | permuted | both
    channel: str = "ideal"  # ideal | flip
    flip_p: float = 0.0
    trials: int = 1000
    seed: int = 0
    distinct_classes: bool = False

    def __post_init__(self):
        if self.dim < 1 or self.classes < 1 or self.trials < 1:
            raise ValueError("dim, classes and trials must be positive")
        for m in self.bundle_sizes:
            if m % 2 == 0 or m < 1:
                raise ValueError(f"bundle sizes must be odd and positive, got {m}")
        if self.mode not in _MODES + ("both",):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.channel not in _CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if not 0.0 <= self.flip_p <= 1.0:
            raise ValueError(f"flip probability must be in [0, 1], got {self.flip_p}")
        if self.distinct_classes and max(self.bundle_sizes) > self.classes:
            raise ValueError("cannot sample more distinct classes than exist")

    @property
    def modes(self) -> tuple[str, ...]:
        return _MODES if self.mode == "both" else (self.mode,)


@dataclass(frozen=True)
class AccuracyCell:
    m: int
    mode: str
    channel: str
    flip_p: float
    trials: int
    accuracy: float
    ci_halfwidth: float
    scoring: str  # trial (all-or-nothing) | pair (per transmitter slot)


@dataclass(frozen=True)
class SimilarityHistogram:
    """Counts of retrieval similarities for true entries vs. all other entries."""

    m: int
    mode: str
    channel: str
    flip_p: float
    matched: np.ndarray
    unmatched: np.ndarray


@dataclass(frozen=True)
class AccuracyReport:
    config: ExperimentConfig
    cells: tuple[AccuracyCell, ...]
    histograms: tuple[SimilarityHistogram, ...]

    def cell(self, m: int, mode: str) -> AccuracyCell:
        for c in self.cells:
            if c.m == m and c.mode == mode:
                return c
        raise KeyError(f"no cell for m={m}, mode={mode}")


def _cell_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _sample_classes(
    rng: np.random.Generator, batch: int, n_classes: int, m: int, distinct: bool
) -> np.ndarray:
    if not distinct:
        return rng.integers(0, n_classes, size=(batch, m))
    # vectorized sampling without replacement: first m of a random permutation
    keys = rng.random((batch, n_classes))
    return np.argsort(keys, axis=1)[:, :m]


def _run_cell(
    m: int,
    mode: str,
    flip_p: float,
    cfg: ExperimentConfig,
    rng: np.random.Generator,
) -> tuple[AccuracyCell, SimilarityHistogram]:
    """One (bundle size, mode, channel) cell, trials vectorized in chunks."""
    d, n_classes, trials = cfg.dim, cfg.classes, cfg.trials
    protos = rng.integers(0, 2, size=(n_classes, d), dtype=np.uint8)

    if mode == "permuted":
        # entry index c * m + (slot - 1) holds prototype c rotated by slot
        rolled = np.stack([np.roll(protos, s, axis=1) for s in range(1, m + 1)], axis=1)
        mem_bits = rolled.reshape(n_classes * m, d)
    else:
        rolled = None
        mem_bits = protos
    mem_packed = np.packbits(mem_bits, axis=1, bitorder="little")

    score_sum = 0.0
    hist_len = d + 1
    matched_hist = np.zeros(hist_len, dtype=np.int64)
    total_hist = np.zeros(hist_len, dtype=np.int64)
    done = 0
    while done < trials:
        b = min(_TRIAL_CHUNK, trials - done)
        cls = _sample_classes(rng, b, n_classes, m, cfg.distinct_classes)
        if mode == "permuted":
            rows = rolled[cls, np.arange(m)[None, :]]  # (b, m, d)
        else:
            rows = protos[cls]
        if m == 1:
            queries = rows[:, 0, :].copy()
        else:
            queries = (2 * rows.sum(axis=1, dtype=np.int64) > m).astype(np.uint8)
        if flip_p > 0.0:
            queries ^= (rng.random((b, d)) < flip_p).astype(np.uint8)
        q_packed = np.packbits(queries, axis=1, bitorder="little")
        dists = np.bitwise_count(mem_packed[None, :, :] ^ q_packed[:, None, :]).sum(
            axis=2, dtype=np.int64
        )
        sims = d - dists  # (b, E)
        top = np.argsort(-sims, axis=1, kind="stable")[:, :m]

        if mode == "permuted":
            want = cls * m + np.arange(m)[None, :]
            matched = (want[:, :, None] == top[:, None, :]).any(axis=2)
            score_sum += matched.mean(axis=1).sum()
        else:
            want = cls  # entry index equals label
            sorted_cls = np.sort(cls, axis=1)
            distinct_ok = (
                np.ones(b, dtype=bool)
                if m == 1
                else (np.diff(sorted_cls, axis=1) > 0).all(axis=1)
            )
            matched = (want[:, :, None] == top[:, None, :]).any(axis=2)
            score_sum += (distinct_ok & matched.all(axis=1)).sum()

        true_sims = np.take_along_axis(sims, want, axis=1)
        matched_hist += np.bincount(true_sims.ravel(), minlength=hist_len)
        total_hist += np.bincount(sims.ravel(), minlength=hist_len)
        done += b

    accuracy = score_sum / trials
    if mode == "permuted":
        scoring = "pair"
        units = trials * m  # pairs within a trial are correlated; width is nominal
    else:
        scoring = "trial"
        units = trials
    ci = 1.96 * float(np.sqrt(max(accuracy * (1 - accuracy), 0.0) / units))
    cell = AccuracyCell(m, mode, cfg.channel, flip_p, trials, float(accuracy), ci, scoring)
    hist = SimilarityHistogram(
        m, mode, cfg.channel, flip_p, matched_hist, total_hist - matched_hist
    )
    return cell, hist


def run_classification(cfg: ExperimentConfig) -> AccuracyReport:
    """Accuracy per (bundle size, mode) under the configured channel.

    Each cell draws its own rng stream keyed by (mode, channel, m), so results
    do not depend on which other cells run alongside.
    """
    flip_p = cfg.flip_p if cfg.channel == "flip" else 0.0
    cells = []
    hists = []
    for mode in cfg.modes:
        for m in cfg.bundle_sizes:
            rng = _cell_rng(
                cfg.seed, _MODES.index(mode), _CHANNELS.index(cfg.channel), m
            )
            cell, hist = _run_cell(m, mode, flip_p, cfg, rng)
            cells.append(cell)
            hists.append(hist)
    return AccuracyReport(cfg, tuple(cells), tuple(hists))


# -- robustness sweep ----------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    flip_p: float
    accuracy: float
    ci_halfwidth: float


def run_ber_sweep(cfg: ExperimentConfig, grid: Sequence[float]) -> tuple[SweepPoint, ...]:
    """Single-query (M=1) classification accuracy at each flip probability."""
    points = []
    for i, p in enumerate(grid):
        if not 0.0 <= p <= 0.5:
            raise ValueError(f"sweep flip probabilities must be in [0, 0.5], got {p}")
        rng = _cell_rng(cfg.seed, 9, i)
        cell, _ = _run_cell(1, "baseline", p, cfg, rng)
        points.append(SweepPoint(p, cell.accuracy, cell.ci_halfwidth))
    return tuple(points)


# -- noise calibration -----------------------------------------------------------


def _rule_geometry(ch: ChannelMatrix, pa: PhaseAssignment) -> tuple[np.ndarray, np.ndarray]:
    """Per-RX majority feasibility and centroid distance (independent of N0)."""
    pts = constellation_points(ch.gains, pa.pairs_rad()[None])[0]  # (P, N)
    return _balanced_two_means(
        np.ascontiguousarray(pts.T), _majority_labels(ch.n_tx)
    )


def calibrate_n0(
    ch: ChannelMatrix,
    pa: PhaseAssignment,
    target_mean_ber: float,
    tol: float = 1e-4,
) -> float:
    """N0 at which the assignment's mean analytic BER equals the target.

    Feasibility and centroid geometry do not depend on N0, so the mean BER is
    continuous and strictly increasing in N0 wherever a receiver is feasible;
    bisection on log N0 converges to float precision.
    """
    if not 0.0 < target_mean_ber < 0.5:
        raise CalibrationError(f"target mean BER must be in (0, 0.5), got {target_mean_ber}")
    feasible, d_c = _rule_geometry(ch, pa)
    if not feasible.any():
        raise CalibrationError("assignment is infeasible on every receiver")
    floor = 0.5 * float((~feasible).sum()) / ch.n_rx
    if target_mean_ber <= floor:
        raise CalibrationError(
            f"target {target_mean_ber} unreachable: {int((~feasible).sum())} infeasible "
            f"receivers pin the mean BER above {floor}"
        )

    def mean_ber(log_n0: float) -> float:
        ber = np.where(feasible, ber_from_dc(d_c, 10.0**log_n0), 0.5)
        return float(ber.mean())

    lo, hi = -60.0, 60.0
    if mean_ber(lo) > target_mean_ber or mean_ber(hi) < target_mean_ber:
        raise CalibrationError(f"target {target_mean_ber} outside the bracketable range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean_ber(mid) < target_mean_ber:
            lo = mid
        else:
            hi = mid
    n0 = 10.0 ** (0.5 * (lo + hi))
    achieved = evaluate(ch, pa, n0).mean
    if abs(achieved - target_mean_ber) > tol:
        raise CalibrationError(
            f"calibration post-check failed: mean {achieved} vs target {target_mean_ber}"
        )
    return n0


# -- full pipeline ---------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    layout: LayoutConfig
    model: PathLossModel = PathLossModel()
    alphabet: PhaseAlphabet = field(default_factory=PhaseAlphabet)
    method: str = "auto"  # auto | exhaustive | greedy
    objective: str = "mean"
    greedy_restarts: int = 8
    target_mean_ber: Optional[float] = 0.01
    hdc: ExperimentConfig = field(default_factory=lambda: ExperimentConfig(trials=500))
    seed: int = 0


@dataclass(frozen=True)
class RxOutcome:
    rx: int
    ber: float
    accuracy: float
    ci_halfwidth: float


@dataclass(frozen=True)
class PipelineReport:
    config: PipelineConfig
    search: SearchReport
    n0: float
    profile: BerProfile
    per_rx: tuple[RxOutcome, ...]

    @property
    def assignment(self) -> PhaseAssignment:
        return self.search.best


def _run_search(
    ch: ChannelMatrix,
    alphabet: PhaseAlphabet,
    method: str,
    objective: str,
    restarts: int,
    rng: np.random.Generator,
) -> SearchReport:
    if method == "auto":
        method = "exhaustive" if ch.n_tx <= 5 else "greedy"
    if method == "exhaustive":
        return search_exhaustive(ch, alphabet, objective)
    if method == "greedy":
        return search_greedy(ch, alphabet, restarts=restarts, rng=rng, objective=objective)
    raise ValueError(f"unknown search method {method!r}")


def run_ota_pipeline(
    cfg: PipelineConfig, ch: ChannelMatrix | None = None
) -> PipelineReport:
    """Channel -> phase search -> N0 calibration -> per-RX BER and accuracy.

    Each receiver's classification is run with its own analytic BER as the
    composite-query flip probability. Deterministic per seed.
    """
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(17,))
    ch_rng, search_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    if ch is None:
        layout = generate_layout(cfg.layout)
        ch = synth_channel(layout, cfg.model, rng=ch_rng)
    report = _run_search(
        ch, cfg.alphabet, cfg.method, cfg.objective, cfg.greedy_restarts, search_rng
    )
    if cfg.target_mean_ber is not None:
        n0 = calibrate_n0(ch, report.best, cfg.target_mean_ber)
    else:
        n0 = ch.n0
    profile = evaluate(ch, report.best, n0)

    m = ch.n_tx
    hdc_cfg = replace(cfg.hdc, bundle_sizes=(m,))
    outcomes = []
    for rx in range(ch.n_rx):
        p = min(float(profile.per_rx[rx]), 1.0)
        rng = _cell_rng(cfg.seed, 23, rx)
        cell, _ = _run_cell(m, hdc_cfg.mode if hdc_cfg.mode != "both" else "baseline",
                            p, hdc_cfg, rng)
        outcomes.append(RxOutcome(rx, p, cell.accuracy, cell.ci_halfwidth))
    return PipelineReport(cfg, report, n0, profile, tuple(outcomes))


# -- receiver scalability ---------------------------------------------------------


@dataclass(frozen=True)
class ScalabilityPoint:
    n_rx: int
    mean_ber: float
    max_ber: float
    explored: int
    assignment: PhaseAssignment


@dataclass(frozen=True)
class ScalabilityReport:
    points: tuple[ScalabilityPoint, ...]
    subset_invariant_ok: Optional[bool]  # None when the search is not exhaustive


def run_scalability(
    layout_cfg: LayoutConfig,
    rx_counts: Sequence[int],
    model: PathLossModel = PathLossModel(),
    alphabet: PhaseAlphabet = PhaseAlphabet(),
    method: str = "exhaustive",
    objective: str = "mean",
    greedy_restarts: int = 8,
    seed: int = 0,
    n0: float | None = None,
) -> ScalabilityReport:
    """Re-optimize over nested RX prefixes of one layout and report mean BER.

    For the exhaustive search the report also verifies that the optimum over a
    subset never exceeds the subset-restricted BER of a superset's optimum.
    """
    counts = list(rx_counts)
    if counts != sorted(counts) or len(set(counts)) != len(counts):
        raise ValueError("rx_counts must be strictly ascending")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(31,))
    ch_rng, search_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    full_cfg = LayoutConfig(
        n_tx=layout_cfg.n_tx,
        n_rx=max(counts),
        package_l1=layout_cfg.package_l1,
        package_l2=layout_cfg.package_l2,
        rx_pitch=layout_cfg.rx_pitch,
        tx_offset=layout_cfg.tx_offset,
        carrier_ghz=layout_cfg.carrier_ghz,
    )
    ch_full = synth_channel(generate_layout(full_cfg), model, rng=ch_rng)
    if n0 is not None:
        ch_full = ch_full.with_n0(n0)

    points = []
    reports = []
    for n in counts:
        ch_n = ch_full.rx_subset(n)
        rep = _run_search(ch_n, alphabet, method, objective, greedy_restarts, search_rng)
        reports.append((n, rep))
        points.append(
            ScalabilityPoint(n, rep.profile.mean, rep.profile.max, rep.explored, rep.best)
        )

    invariant: Optional[bool] = None
    if (method == "exhaustive") or (method == "auto" and layout_cfg.n_tx <= 5):
        invariant = True
        for (n_small, rep_small), (_, rep_big) in zip(reports, reports[1:]):
            cross = evaluate(ch_full.rx_subset(n_small), rep_big.best).mean
            if rep_small.profile.mean > cross:
                invariant = False
    return ScalabilityReport(tuple(points), invariant)
