"""Batch-mean error bars for ratio estimators, and log-amplitude histograms."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_BATCHES = 32


@dataclass(frozen=True)
class BatchSpec:
    batch_count: int = DEFAULT_BATCHES

    def __post_init__(self):
        if self.batch_count < 2:
            raise ValueError("batch_count must be at least 2")

    def effective(self, n):
        """Batch count actually usable for ``n`` samples."""
        return min(self.batch_count, n)


def batch_sums(values, batches):
    """Sums over ``batches`` contiguous index ranges (sizes differ by at most one)."""
    n = len(values)
    starts = np.array([len(b) for b in np.array_split(np.empty(n), batches)])
    starts = np.concatenate(([0], np.cumsum(starts)[:-1]))
    return np.add.reduceat(values, starts)


def ratio_stderr(numerators, denominators, spec=BatchSpec()):
    """Standard error of ``sum(num) / sum(den)`` from contiguous batch means.

    The ratio is formed inside each batch; the returned pair is the standard
    error of the mean of those batch ratios, real and imaginary parts taken
    separately.  Batches whose denominator is negligible are dropped with a
    warning.  Fewer than two usable batches gives ``nan``.
    """
    num = np.asarray(numerators, dtype=complex)
    den = np.asarray(denominators, dtype=float)
    if num.shape != den.shape:
        raise ValueError("numerators and denominators must be aligned")
    b = spec.effective(len(num))
    if b < 2:
        return math.nan, math.nan
    nb = batch_sums(num, b)
    db = batch_sums(den, b)
    scale = np.mean(np.abs(db))
    ok = np.abs(db) > 1e-12 * scale if scale > 0 else np.zeros(b, dtype=bool)
    flagged = int(b - ok.sum())
    if flagged:
        warnings.warn(f"{flagged} batch(es) with near-zero denominator skipped", RuntimeWarning)
    if ok.sum() < 2:
        return math.nan, math.nan
    r = nb[ok] / db[ok]
    k = len(r)
    return (
        float(np.std(r.real, ddof=1) / math.sqrt(k)),
        float(np.std(r.imag, ddof=1) / math.sqrt(k)),
    )


@dataclass
class Histogram:
    """Counts of log10|alpha*Omega| in bins of fixed width.

    ``bin_edges`` has one more entry than ``counts``.  Samples at -inf land in
    ``underflow``; diverged points, +inf and nan land in ``overflow``.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    underflow: int = 0
    overflow: int = 0

    @property
    def total(self):
        return int(self.counts.sum()) + self.underflow + self.overflow

    def occupied(self):
        """Indices of non-empty bins."""
        return np.flatnonzero(self.counts)

    def span(self):
        """Width in decades between the outer edges of the occupied bins."""
        occ = self.occupied()
        if len(occ) == 0:
            return 0.0
        return float(self.bin_edges[occ[-1] + 1] - self.bin_edges[occ[0]])

    def rows(self):
        return [
            (float(lo), float(hi), int(c))
            for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts)
        ]


def log_amplitude_values(ensemble):
    """log10|alpha*Omega| per trajectory (diverged points give nan)."""
    v = (ensemble.log_alpha.real + ensemble.log_omega.real) / math.log(10.0)
    return np.where(ensemble.diverged, np.nan, v)


def histogram_values(values, bin_width=0.1, lo=None, hi=None):
    """Bin ``values`` on edges that are integer multiples of ``bin_width``.

    Without an explicit range the edges just cover the finite samples.  With
    ``lo``/``hi`` given (rounded outwards to the grid) samples outside the
    range count as under/overflow.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    v = np.asarray(values, dtype=float)
    under_mask = v == -np.inf
    over_mask = np.isnan(v) | (v == np.inf)
    finite = v[~(under_mask | over_mask)]
    idx = np.floor(finite / bin_width).astype(np.int64)
    if lo is None:
        i_lo = int(idx.min()) if len(idx) else 0
    else:
        i_lo = math.floor(lo / bin_width)
    if hi is None:
        i_hi = int(idx.max()) + 1 if len(idx) else 1
    else:
        i_hi = math.ceil(hi / bin_width)
    i_hi = max(i_hi, i_lo + 1)
    under = int(under_mask.sum() + (idx < i_lo).sum())
    over = int(over_mask.sum() + (idx >= i_hi).sum())
    inside = idx[(idx >= i_lo) & (idx < i_hi)] - i_lo
    counts = np.bincount(inside, minlength=i_hi - i_lo)
    edges = np.arange(i_lo, i_hi + 1) * bin_width
    return Histogram(edges, counts, under, over)


def log_weight_histogram(ensemble, bin_width=0.1, lo=None, hi=None):
    """Histogram of log10|alpha*Omega| over the trajectories of an ensemble."""
    return histogram_values(log_amplitude_values(ensemble), bin_width, lo, hi)
