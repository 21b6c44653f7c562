"""Distributional distances and mode-coverage statistics.

These are the desk-scale acceptance currency: exact 1D Wasserstein on
sorted samples, sliced Wasserstein for 2D+, RBF MMD^2, and coverage of
known mixture modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .autodiff import Rng


@dataclass(frozen=True)
class MetricReport:
    w1_1d: Optional[float]
    swd: Optional[float]
    mmd2: float
    mode_coverage: Optional[float]
    high_quality_fraction: Optional[float]


def wasserstein1_1d(a, b) -> float:
    """Exact W1 between equal-size empirical measures: mean |sorted a - sorted b|."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"sample counts differ: {a.size} vs {b.size}")
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


def sliced_w1(a, b, k: int = 128, rng: Optional[Rng] = None, directions: Optional[np.ndarray] = None) -> float:
    """Mean 1D Wasserstein distance over k random unit projections.

    Pass ``directions`` (rows normalized internally) to pin the projections,
    e.g. for directed tests; otherwise they are drawn from ``rng``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"sample shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 2 or a.shape[1] < 2:
        raise ValueError("sliced_w1 needs 2D samples of dimension >= 2")
    if directions is None:
        if rng is None:
            raise ValueError("provide rng or explicit directions")
        directions = rng.normal((k, a.shape[1]))
    dirs = np.asarray(directions, dtype=np.float64)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    pa = np.sort(a @ dirs.T, axis=0)
    pb = np.sort(b @ dirs.T, axis=0)
    return float(np.mean(np.abs(pa - pb)))


def median_bandwidth(a, b) -> float:
    """Median pairwise distance over the pooled samples; falls back to 1.0."""
    x = np.vstack([np.atleast_2d(np.asarray(a, dtype=np.float64).T).T,
                   np.atleast_2d(np.asarray(b, dtype=np.float64).T).T])
    d2 = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
    med = float(np.median(np.sqrt(d2[np.triu_indices(x.shape[0], k=1)])))
    return med if med > 0.0 else 1.0


def mmd2_rbf(a, b, bandwidth: Optional[float] = None) -> float:
    """Biased MMD^2 with Gaussian kernel exp(-||x-y||^2 / (2*bandwidth^2))."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64).T).T
    b = np.atleast_2d(np.asarray(b, dtype=np.float64).T).T
    if a.size == 0 or b.size == 0:
        raise ValueError("sample sets must be nonempty")
    if bandwidth is None:
        bandwidth = median_bandwidth(a, b)
    s = 2.0 * bandwidth * bandwidth

    def kmean(x, y):
        d2 = np.sum((x[:, None, :] - y[None, :, :]) ** 2, axis=-1)
        return float(np.mean(np.exp(-d2 / s)))

    return kmean(a, a) + kmean(b, b) - 2.0 * kmean(a, b)


def mode_coverage(fake, modes, std: float) -> tuple[float, float]:
    """(covered fraction of modes, fraction of samples within 3*std of any mode).

    A mode counts as covered when at least max(1, 0.1 * n/len(modes)) samples
    fall within 3*std of its center.
    """
    fake = np.atleast_2d(np.asarray(fake, dtype=np.float64).T).T
    modes = np.atleast_2d(np.asarray(modes, dtype=np.float64).T).T
    if modes.shape[0] < 1:
        raise ValueError("need at least one mode")
    n = fake.shape[0]
    dists = np.linalg.norm(fake[:, None, :] - modes[None, :, :], axis=-1)
    close = dists <= 3.0 * std
    need = max(1, int(0.1 * n / modes.shape[0]))
    covered = int(np.sum(close.sum(axis=0) >= need))
    hq = float(np.mean(close.any(axis=1))) if n else 0.0
    return covered / modes.shape[0], hq
