"""Uniformly sampled time series, the common currency between modules."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from boltscope.errors import ParameterError


@dataclass
class TimeSeries:
    """A uniformly sampled signal.

    Parameters
    ----------
    samples : np.ndarray
        1-D array of sample values. The physical unit (m/s^2, Pa, N, ...)
        is carried as a label only, never converted.
    sample_rate : float
        Sampling rate in Hz, > 0.
    channel : str
        Channel label, e.g. "accel-z", "mic", "force".
    start_time : float
        Time of the first sample in seconds.
    unit : str
        Unit label for the sample values.
    """

    samples: np.ndarray
    sample_rate: float
    channel: str = "signal"
    start_time: float = 0.0
    unit: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ParameterError("samples must be a 1-D array")
        if not np.isfinite(self.sample_rate) or self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be > 0, got {self.sample_rate}")

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        """Signal length in seconds (n_samples / sample_rate)."""
        return self.samples.size / self.sample_rate

    def times(self) -> np.ndarray:
        """Sample instants in seconds."""
        return self.start_time + np.arange(self.samples.size) / self.sample_rate

    def require_nonempty(self, what: str = "operation") -> None:
        if self.samples.size == 0:
            raise ParameterError(f"{what} requires a non-empty time series")

    def with_samples(self, samples: np.ndarray) -> "TimeSeries":
        return replace(self, samples=np.asarray(samples, dtype=np.float64))
