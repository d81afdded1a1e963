"""Excitation signals and reproducible, splittable noise streams."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["TimeSeries", "RngStream", "chirp", "sinusoid", "gaussian_noise"]

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    """One round of the SplitMix64 mixer, used to derive child stream ids."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible random stream.

    (base_seed, stream_id) fully determine the output sequence.  Streams are
    backed by the counter-based Philox generator, so a stream can hand out
    disjoint sub-sequences addressed by a block counter (used for
    order-insensitive per-step draws) and derive statistically independent
    child streams by id mixing.
    """

    base_seed: int
    stream_id: int = 0

    def child(self, *ids: int) -> "RngStream":
        """Derive an independent child stream keyed by the given ids."""
        sid = self.stream_id
        for i in ids:
            sid = _splitmix64(sid ^ _splitmix64(int(i) & _MASK64))
        return RngStream(self.base_seed, sid)

    def generator(self, block: int = 0) -> np.random.Generator:
        """A fresh generator positioned at the given 2^128-draw block."""
        key = np.array([self.base_seed & _MASK64, self.stream_id & _MASK64],
                       dtype=np.uint64)
        counter = np.array([0, 0, int(block) & _MASK64, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled scalar signal."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values",
                           np.asarray(self.values, dtype=float))
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.values.ndim != 1 or len(self.values) < 1:
            raise ValueError("values must be a non-empty 1-d array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def duration(self) -> float:
        """Time span from the first to the last sample."""
        return (len(self.values) - 1) * self.dt

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self.t0, self.dt, values)


def chirp(f0: float, f1: float, amplitude: float, duration: float,
          fs: float) -> TimeSeries:
    """Linear-sweep chirp u(t) = A sin(2*pi*(f0*t + (f1-f0)*t^2/(2T))).

    The instantaneous frequency sweeps linearly from f0 at t=0 to f1 at t=T.
    Returns round(T*fs)+1 samples.
    """
    if f0 < 0:
        raise ValueError(f"f0 must be >= 0, got {f0}")
    if not f1 > f0:
        raise ValueError(f"f1 must exceed f0, got f0={f0}, f1={f1}")
    if not amplitude > 0:
        raise ValueError(f"amplitude must be > 0, got {amplitude}")
    if not duration > 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if not fs > 2 * f1:
        raise ValueError(f"fs must exceed 2*f1 = {2 * f1}, got {fs}")
    n = int(round(duration * fs)) + 1
    t = np.arange(n) / fs
    phase = f0 * t + (f1 - f0) * t * t / (2.0 * duration)
    return TimeSeries(0.0, 1.0 / fs, amplitude * np.sin(2.0 * np.pi * phase))


def sinusoid(f: float, amplitude: float, duration: float,
             fs: float) -> TimeSeries:
    """Pure sine u(t) = A sin(2*pi*f*t)."""
    if not f > 0:
        raise ValueError(f"f must be > 0, got {f}")
    if not amplitude > 0:
        raise ValueError(f"amplitude must be > 0, got {amplitude}")
    if not duration > 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if not fs > 2 * f:
        raise ValueError(f"fs must exceed 2*f = {2 * f}, got {fs}")
    n = int(round(duration * fs)) + 1
    t = np.arange(n) / fs
    return TimeSeries(0.0, 1.0 / fs, amplitude * np.sin(2.0 * np.pi * f * t))


def gaussian_noise(std: float, n: int, stream: RngStream, dt: float = 1.0,
                   t0: float = 0.0) -> TimeSeries:
    """n i.i.d. zero-mean normal samples with the given standard deviation."""
    if std < 0:
        raise ValueError(f"std must be >= 0, got {std}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    values = stream.generator().normal(0.0, 1.0, size=n) * std
    return TimeSeries(t0, dt, values)
