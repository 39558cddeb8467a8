"""In-package wireless channel: geometry, synthetic gains, file import/export.

The synthetic model is a log-distance path loss with uniform phase jitter; it
stands in for full-wave electromagnetic data, which can be imported instead
via load_channel (CSV, one row per TX-RX link).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChannelFileError, GeometryError

__all__ = [
    "ChannelMatrix",
    "LayoutConfig",
    "Layout",
    "PathLossModel",
    "generate_layout",
    "load_channel",
    "save_channel",
    "synth_channel",
]

SPEED_OF_LIGHT_MM_GHZ = 299.792458  # wavelength in mm = this / f_GHz
DEFAULT_N0 = 1e-7


@dataclass(frozen=True)
class LayoutConfig:
    """Package geometry: RX grid pitch and TX edge placement, lengths in mm."""

    n_tx: int
    n_rx: int
    package_l1: float = 33.0
    package_l2: float = 30.0
    rx_pitch: float = 3.75
    tx_offset: float = 7.5
    carrier_ghz: float = 60.0

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise GeometryError("need at least one TX and one RX")
        for name in ("package_l1", "package_l2", "rx_pitch", "tx_offset", "carrier_ghz"):
            if getattr(self, name) <= 0:
                raise GeometryError(f"{name} must be positive")


@dataclass(frozen=True)
class Layout:
    config: LayoutConfig
    tx_xy: np.ndarray  # (M, 2)
    rx_xy: np.ndarray  # (N, 2)


def generate_layout(cfg: LayoutConfig) -> Layout:
    """Place N RXs on a near-square centered grid and M TXs along one edge.

    RXs are ordered row-major; scalability sweeps rely on this order when they
    take nested prefixes of one layout.
    """
    n = cfg.n_rx
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    width = (cols - 1) * cfg.rx_pitch
    height = (rows - 1) * cfg.rx_pitch
    if width > cfg.package_l1 or height > cfg.package_l2:
        raise GeometryError(
            f"{rows}x{cols} RX grid at pitch {cfg.rx_pitch} mm exceeds "
            f"{cfg.package_l1} x {cfg.package_l2} mm package"
        )
    x0 = (cfg.package_l1 - width) / 2.0
    y0 = (cfg.package_l2 - height) / 2.0
    rx = np.array(
        [(x0 + (i % cols) * cfg.rx_pitch, y0 + (i // cols) * cfg.rx_pitch) for i in range(n)]
    )
    if cfg.tx_offset > cfg.package_l2:
        raise GeometryError("TX edge offset outside the package")
    m = cfg.n_tx
    tx = np.array(
        [(cfg.package_l1 * (j + 1) / (m + 1), cfg.tx_offset) for j in range(m)]
    )
    return Layout(cfg, tx, rx)


@dataclass(frozen=True)
class PathLossModel:
    """Surrogate for the enclosed-package channel.

    Magnitude follows a log-distance law, loss_db(d) = ref_loss_db +
    10 * exponent * log10(d / 1 mm), optionally perturbed by a log-normal
    ripple. The default exponent is well below free space because the
    metallic-lid package reverberates, which flattens the received power
    across the die.

    ``rx_fade_db`` adds a per-receiver log-normal fade shared by all of that
    receiver's links: standing waves put some locations in field nulls, which
    scales the whole constellation there without affecting its geometry.

    Two phase structures are available:

    * "separable" (default): phase = per-TX offset + per-RX propagation phase
      + jitter. A reverberant cavity is dominated by a few modes, so link
      phases are strongly structured; the separable form captures the part a
      single 8-phase assignment can compensate jointly for all receivers,
      with the jitter controlling how far reality departs from that.
    * "geometric": phase = 2 pi d / lambda + jitter per link. Line-of-sight
      phases; at tens of wavelengths these are effectively independent across
      receivers, and no joint assignment can align them (most receivers end
      up majority-infeasible). Kept for experimentation.
    """

    exponent: float = 0.6
    ref_loss_db: float = 40.0
    phase_jitter_deg: float = 30.0
    rx_fade_db: float = 4.0
    ripple_db: float = 0.0
    phase_model: str = "separable"

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("path-loss exponent must be positive")
        if self.phase_jitter_deg < 0 or self.ripple_db < 0 or self.rx_fade_db < 0:
            raise ValueError("phase jitter, fade and ripple must be non-negative")
        if self.phase_model not in ("separable", "geometric"):
            raise ValueError(f"unknown phase model {self.phase_model!r}")


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex link gains h[m][n] for M TXs x N RXs plus the noise density N0."""

    gains: np.ndarray
    n0: float = DEFAULT_N0

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=np.complex128)
        if g.ndim != 2:
            raise ValueError("gains must be a 2-d (M, N) array")
        if np.any(g == 0):
            raise ValueError("zero gain means a disconnected link; rejected")
        if not self.n0 > 0:
            raise ValueError(f"N0 must be positive, got {self.n0}")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @property
    def n_tx(self) -> int:
        return self.gains.shape[0]

    @property
    def n_rx(self) -> int:
        return self.gains.shape[1]

    def with_n0(self, n0: float) -> "ChannelMatrix":
        return ChannelMatrix(self.gains, n0)

    def rx_subset(self, n_rx: int) -> "ChannelMatrix":
        """First n_rx receiver columns, keeping N0."""
        if not 1 <= n_rx <= self.n_rx:
            raise ValueError(f"subset size must be in [1, {self.n_rx}]")
        return ChannelMatrix(self.gains[:, :n_rx], self.n0)


def synth_channel(
    layout: Layout,
    model: PathLossModel = PathLossModel(),
    *,
    n0: float = DEFAULT_N0,
    rng: np.random.Generator | None = None,
) -> ChannelMatrix:
    """Synthesize link gains from the layout per the path-loss model.

    |h|^2 = 10^(-(ref + 10 n log10(d))/10), with phases per
    ``model.phase_model``. Deterministic given the rng state; the rng is
    consumed in a fixed order (TX offsets, ripple, jitter).
    """
    diff = layout.tx_xy[:, None, :] - layout.rx_xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(dist == 0):
        m, n = np.argwhere(dist == 0)[0]
        raise GeometryError(f"TX {m} and RX {n} are coincident")
    needs_rng = (
        model.phase_model == "separable"
        or model.phase_jitter_deg > 0
        or model.ripple_db > 0
        or model.rx_fade_db > 0
    )
    if needs_rng and rng is None:
        raise ValueError("this path-loss model draws random values; pass an rng")

    wavelength = SPEED_OF_LIGHT_MM_GHZ / layout.config.carrier_ghz
    if model.phase_model == "separable":
        tx_offset = rng.uniform(0.0, 2.0 * np.pi, size=layout.tx_xy.shape[0])
        center = layout.tx_xy.mean(axis=0)
        rx_dist = np.hypot(*(layout.rx_xy - center).T)
        phase = tx_offset[:, None] + (2.0 * np.pi * rx_dist / wavelength)[None, :]
    else:
        phase = 2.0 * np.pi * dist / wavelength

    loss_db = model.ref_loss_db + 10.0 * model.exponent * np.log10(dist)
    if model.rx_fade_db > 0:
        loss_db = loss_db + rng.normal(0.0, model.rx_fade_db, size=dist.shape[1])[None, :]
    if model.ripple_db > 0:
        loss_db = loss_db + rng.normal(0.0, model.ripple_db, size=dist.shape)
    mag = 10.0 ** (-loss_db / 20.0)

    if model.phase_jitter_deg > 0:
        sigma = math.radians(model.phase_jitter_deg)
        phase = phase + rng.uniform(-sigma, sigma, size=dist.shape)
    return ChannelMatrix(mag * np.exp(1j * phase), n0)


# -- file format --------------------------------------------------------------
#
# CSV with '# key: value' header lines, then one row per link. Two accepted
# column sets: tx,rx,re,im (canonical, written by save_channel) and
# tx,rx,mag_db,phase_deg (for data exported from EM tools).


def save_channel(ch: ChannelMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# airhdc channel v1\n")
        fh.write(f"# m: {ch.n_tx}\n")
        fh.write(f"# n: {ch.n_rx}\n")
        fh.write(f"# n0: {ch.n0!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["tx", "rx", "re", "im"])
        for m in range(ch.n_tx):
            for n in range(ch.n_rx):
                h = ch.gains[m, n]
                writer.writerow([m, n, repr(h.real), repr(h.imag)])


def load_channel(path, *, n0: float | None = None) -> ChannelMatrix:
    """Parse a channel CSV; the file's '# n0:' header is used unless overridden."""
    header_meta: dict[str, str] = {}
    rows: list[tuple[int, list[str]]] = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if ":" in body:
                    key, val = body.split(":", 1)
                    header_meta[key.strip()] = val.strip()
                continue
            rows.append((lineno, next(csv.reader([line]))))
    if not rows:
        raise ChannelFileError(f"{path}: no data rows")
    columns = [c.strip().lower() for c in rows[0][1]]
    if columns == ["tx", "rx", "re", "im"]:
        cartesian = True
    elif columns == ["tx", "rx", "mag_db", "phase_deg"]:
        cartesian = False
    else:
        raise ChannelFileError(f"{path}: unsupported column header {columns}")

    links: dict[tuple[int, int], complex] = {}
    for lineno, row in rows[1:]:
        if len(row) != 4:
            raise ChannelFileError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
        try:
            m, n = int(row[0]), int(row[1])
            a, b = float(row[2]), float(row[3])
        except ValueError as exc:
            raise ChannelFileError(f"{path}:{lineno}: {exc}") from None
        if (m, n) in links:
            raise ChannelFileError(f"{path}:{lineno}: duplicate link tx={m} rx={n}")
        if cartesian:
            links[(m, n)] = complex(a, b)
        else:
            mag = 10.0 ** (a / 20.0)
            links[(m, n)] = mag * complex(math.cos(math.radians(b)), math.sin(math.radians(b)))

    n_tx = max(m for m, _ in links) + 1
    n_rx = max(n for _, n in links) + 1
    if "m" in header_meta and int(header_meta["m"]) != n_tx:
        raise ChannelFileError(f"{path}: header m={header_meta['m']} but data has {n_tx} TXs")
    if "n" in header_meta and int(header_meta["n"]) != n_rx:
        raise ChannelFileError(f"{path}: header n={header_meta['n']} but data has {n_rx} RXs")
    gains = np.zeros((n_tx, n_rx), dtype=np.complex128)
    for m in range(n_tx):
        for n in range(n_rx):
            if (m, n) not in links:
                raise ChannelFileError(f"{path}: missing link tx={m} rx={n}")
            gains[m, n] = links[(m, n)]
    if np.any(gains == 0):
        m, n = [(m, n) for (m, n), h in links.items() if h == 0][0]
        raise ChannelFileError(f"{path}: zero gain on link tx={m} rx={n}")
    if n0 is None:
        if "n0" not in header_meta:
            raise ChannelFileError(f"{path}: no '# n0:' header and no n0 override given")
        n0 = float(header_meta["n0"])
    return ChannelMatrix(gains, n0)
