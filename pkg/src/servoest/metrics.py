"""Normalized RMS error, interval decomposition, and ensemble statistics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import TimeSeries

__all__ = ["IntervalSpec", "EnsembleStats", "nrmse", "interval_nrmse",
           "ensemble_stats"]


@dataclass(frozen=True)
class IntervalSpec:
    """Strictly increasing time boundaries; default thirds of a 30 s run."""

    boundaries: tuple[float, ...] = (0.0, 10.0, 20.0, 30.0)

    def __post_init__(self):
        b = tuple(float(x) for x in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if len(b) < 2 or any(b[i + 1] <= b[i] for i in range(len(b) - 1)):
            raise ValueError("boundaries must be strictly increasing")

    @property
    def intervals(self) -> list[tuple[float, float]]:
        b = self.boundaries
        return [(b[i], b[i + 1]) for i in range(len(b) - 1)]


@dataclass(frozen=True)
class EnsembleStats:
    mean: float
    std: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.std < 0:
            raise ValueError("std must be >= 0")


def nrmse(estimate: TimeSeries, truth: TimeSeries) -> float:
    """100 * sqrt(sum((est - truth)^2) / sum(truth^2)), in percent."""
    if len(estimate) != len(truth):
        raise ValueError("estimate and truth must have equal lengths")
    e = estimate.values
    x = truth.values
    denom = float(np.sum(x * x))
    if denom == 0.0:
        raise ValueError("truth signal has zero energy")
    return 100.0 * float(np.sqrt(np.sum(np.square(e - x)) / denom))


def interval_nrmse(estimate: TimeSeries, truth: TimeSeries,
                   spec: IntervalSpec = IntervalSpec()) -> list[float]:
    """NRMSE restricted to each half-open interval [t_i, t_{i+1})."""
    if len(estimate) != len(truth):
        raise ValueError("estimate and truth must have equal lengths")
    t = truth.times
    if spec.boundaries[0] < t[0] - 1e-12 or spec.boundaries[-1] > t[-1] + truth.dt:
        raise ValueError("series does not cover the interval boundaries")
    out = []
    for a, b in spec.intervals:
        mask = (t >= a) & (t < b)
        if not np.any(mask):
            raise ValueError(f"no samples in interval [{a}, {b})")
        out.append(nrmse(estimate.with_values(estimate.values[mask]),
                         truth.with_values(truth.values[mask])))
    return out


def ensemble_stats(values) -> EnsembleStats:
    """Mean and sample (n-1) standard deviation over realizations."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) < 1:
        raise ValueError("values must be a non-empty 1-d sequence")
    mean = float(np.mean(v))
    std = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
    return EnsembleStats(mean=mean, std=std, n=len(v))
