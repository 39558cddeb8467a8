"""Matplotlib renderings of report data, written next to the CSV artifacts."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import AccuracyReport, PipelineReport, ScalabilityReport, SweepPoint
from .ota import Constellation, DecisionRule

__all__ = [
    "save_accuracy_figure",
    "save_ber_profile_figure",
    "save_constellation_figure",
    "save_scalability_figure",
    "save_sweep_figure",
]

_BIT0_COLOR = "tab:blue"
_BIT1_COLOR = "tab:green"


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_ber_profile_figure(per_rx: Sequence[float], path) -> None:
    """Per-receiver BER bars with the average as a dashed line."""
    per_rx = np.asarray(per_rx, dtype=float)
    floor = 1e-12  # zero BERs (erfc underflow) still get a visible bar
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.bar(np.arange(len(per_rx)), np.maximum(per_rx, floor), width=0.8)
    ax.axhline(max(per_rx.mean(), floor), linestyle="--", color="k",
               label=f"average = {per_rx.mean():.2e}")
    ax.set_yscale("log")
    ax.set_xlabel("receiver")
    ax.set_ylabel("BER")
    ax.legend(loc="upper right")
    _finish(fig, path)


def save_scalability_figure(report: ScalabilityReport, path) -> None:
    ns = [p.n_rx for p in report.points]
    means = [max(p.mean_ber, 1e-12) for p in report.points]
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot(ns, means, marker="o")
    ax.set_yscale("log")
    ax.set_xlabel("number of receivers optimized for")
    ax.set_ylabel("mean BER")
    _finish(fig, path)


def save_sweep_figure(points: Sequence[SweepPoint], path) -> None:
    ps = [pt.flip_p for pt in points]
    acc = [pt.accuracy for pt in points]
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot(ps, acc, marker="o")
    ax.set_xlabel("bit flip probability")
    ax.set_ylabel("classification accuracy")
    ax.set_ylim(0, 1.05)
    _finish(fig, path)


def save_accuracy_figure(report: AccuracyReport, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3))
    for mode in report.config.modes:
        cells = [c for c in report.cells if c.mode == mode]
        ax.errorbar(
            [c.m for c in cells],
            [c.accuracy for c in cells],
            yerr=[c.ci_halfwidth for c in cells],
            marker="o",
            label=mode,
        )
    ax.set_xlabel("bundled hypervectors")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.05)
    ax.legend()
    _finish(fig, path)


def save_pipeline_figure(report: PipelineReport, path) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    per_rx = np.asarray(report.profile.per_rx)
    ax1.bar(np.arange(len(per_rx)), np.maximum(per_rx, 1e-12), width=0.8)
    ax1.axhline(max(per_rx.mean(), 1e-12), linestyle="--", color="k",
                label=f"average = {per_rx.mean():.2e}")
    ax1.set_yscale("log")
    ax1.set_ylabel("BER")
    ax1.legend(loc="upper right")
    ax2.plot([o.rx for o in report.per_rx], [o.accuracy for o in report.per_rx],
             marker=".", linestyle="none")
    ax2.set_ylim(0, 1.05)
    ax2.set_xlabel("receiver")
    ax2.set_ylabel("accuracy")
    _finish(fig, path)


def save_constellation_figure(
    cons: Constellation, rule: DecisionRule | None, path
) -> None:
    """Received points colored by majority bit, with decision centroids if any."""
    pts = cons.points
    maj = cons.majority_bits.astype(bool)
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.scatter(pts[~maj].real, pts[~maj].imag, color=_BIT0_COLOR, label="majority 0")
    ax.scatter(pts[maj].real, pts[maj].imag, color=_BIT1_COLOR, label="majority 1")
    if rule is not None:
        for c, color in ((rule.centroid_0, _BIT0_COLOR), (rule.centroid_1, _BIT1_COLOR)):
            ax.scatter([c.real], [c.imag], marker="x", s=80, color=color)
    ax.axhline(0, color="0.8", linewidth=0.5)
    ax.axvline(0, color="0.8", linewidth=0.5)
    ax.set_xlabel("I")
    ax.set_ylabel("Q")
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    _finish(fig, path)
