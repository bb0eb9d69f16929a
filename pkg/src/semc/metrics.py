"""Evaluation helpers: histograms, 1-D optimal transport, diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .core import TemperatureLadder


@dataclass(frozen=True)
class Histogram:
    """Normalized histogram on [lo, hi): equal bins, final bin closed."""

    lo: float
    hi: float
    bin_width: float
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=np.float64)
        object.__setattr__(self, "masses", m)

    @property
    def n_bins(self) -> int:
        return int(self.masses.shape[0])

    @property
    def bin_lefts(self) -> np.ndarray:
        return self.lo + self.bin_width * np.arange(self.n_bins)

    def same_binning(self, other: "Histogram") -> bool:
        return (self.lo == other.lo and self.hi == other.hi
                and self.bin_width == other.bin_width
                and self.n_bins == other.n_bins)


def build_histogram(values, lo: float, hi: float, bin_width: float) -> Histogram:
    """Bin values into [lo, hi); out-of-range values are an error, not
    clipped; masses sum to one."""
    if not hi > lo or not bin_width > 0:
        raise ValueError("need hi > lo and a positive bin width")
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot normalize an empty histogram")
    if np.any(v < lo) or np.any(v > hi):
        raise ValueError("value outside [lo, hi]")
    n_bins = int(np.ceil((hi - lo) / bin_width - 1e-9))
    idx = np.minimum(((v - lo) / bin_width).astype(np.int64), n_bins - 1)
    masses = np.bincount(idx, minlength=n_bins) / v.size
    return Histogram(lo=float(lo), hi=float(hi), bin_width=float(bin_width), masses=masses)


def wasserstein1(h1: Histogram, h2: Histogram) -> float:
    """Exact 1-D optimal transport distance at bin resolution:
    bin_width * sum |CDF1 - CDF2|."""
    if not h1.same_binning(h2):
        raise ValueError("histogram binnings differ")
    c1 = np.cumsum(h1.masses)
    c2 = np.cumsum(h2.masses)
    return float(h1.bin_width * np.sum(np.abs(c1 - c2)))


def step_size_scaling_slope(ladder: TemperatureLadder, beta_min: float) -> float:
    """Least-squares slope of log eps against log beta over rungs with
    beta >= beta_min, averaged over coordinates."""
    if ladder.step_sizes is None:
        raise ValueError("ladder carries no step sizes")
    betas = ladder.betas[1:]
    mask = betas >= beta_min
    if int(mask.sum()) < 3:
        raise ValueError("need at least three rungs above beta_min")
    x = np.log(betas[mask])
    slopes = [np.polyfit(x, np.log(ladder.step_sizes[mask, j]), 1)[0]
              for j in range(ladder.step_sizes.shape[1])]
    return float(np.mean(slopes))


def sorted_mu_histograms(coords: np.ndarray, k_peaks: int,
                         bin_width: float = 0.005) -> List[Histogram]:
    """Peak-center histograms with label switching resolved: the center
    block of each sample is sorted ascending, then slot k is pooled
    across samples into its own histogram on [0, 1]."""
    mu = np.sort(np.asarray(coords)[:, k_peaks:2 * k_peaks], axis=1)
    return [build_histogram(mu[:, k], 0.0, 1.0, bin_width) for k in range(k_peaks)]


def mean_slot_wasserstein(a: Sequence[Histogram], b: Sequence[Histogram]) -> float:
    """Mean of per-slot transport distances between two histogram sets."""
    if len(a) != len(b) or not a:
        raise ValueError("need equally many histograms on both sides")
    return float(np.mean([wasserstein1(x, y) for x, y in zip(a, b)]))


def save_histogram(path, hist: Histogram) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"# lo={hist.lo!r} hi={hist.hi!r} bin_width={hist.bin_width!r}\n")
        fh.write("bin_left,mass\n")
        for left, m in zip(hist.bin_lefts, hist.masses):
            fh.write(f"{left!r},{m!r}\n")


def load_histogram(path) -> Histogram:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
    parts = dict(p.split("=") for p in header.lstrip("# ").split())
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    return Histogram(lo=float(parts["lo"]), hi=float(parts["hi"]),
                     bin_width=float(parts["bin_width"]), masses=data[:, 1])
