"""Welch PSD estimation and spectral peak detection.

Peak criteria follow the analysis convention used throughout the toolkit:
prominence is evaluated on the dB curve (height above the higher of the two
bounding valleys) and peaks closer together than a minimum spacing are
thinned greedily from the highest level downward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from boltscope.errors import GridMismatchError, ParameterError
from boltscope.signals import TimeSeries

WINDOWS = {"hann": "hann", "rectangular": "boxcar"}

# dB floor relative to the spectrum maximum; keeps log10 finite on zero bins
# without breaking scale invariance of prominences.
_REL_FLOOR = 1e-30

DEFAULT_MIN_PROMINENCE_DB = 3.0
DEFAULT_MIN_SPACING_HZ = 80.0


@dataclass(frozen=True)
class EstimatorInfo:
    """Provenance of a PSD estimate."""

    window_name: str
    segment_length: int
    overlap_fraction: float
    n_segments: int


@dataclass
class Psd:
    """One-sided power spectral density on a uniform grid from 0 to Nyquist."""

    freqs: np.ndarray
    density: np.ndarray
    resolution_hz: float
    estimator: EstimatorInfo
    channel: str = ""

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=np.float64)
        self.density = np.asarray(self.density, dtype=np.float64)
        if self.freqs.shape != self.density.shape or self.freqs.ndim != 1:
            raise ParameterError("freqs and density must be 1-D arrays of equal length")
        if np.any(self.density < 0):
            raise ParameterError("PSD density must be non-negative")
        if self.freqs.size >= 2 and np.any(np.diff(self.freqs) <= 0):
            raise ParameterError("PSD frequency grid must be strictly increasing")

    @property
    def nyquist(self) -> float:
        return float(self.freqs[-1])

    def level_db(self) -> np.ndarray:
        """Density in dB re 1 unit^2/Hz, floored relative to the spectrum max."""
        peak = float(self.density.max(initial=0.0))
        floor = peak * _REL_FLOOR if peak > 0 else np.finfo(float).tiny
        return 10.0 * np.log10(np.maximum(self.density, floor))

    def same_grid(self, other: "Psd") -> bool:
        return self.freqs.shape == other.freqs.shape and np.array_equal(self.freqs, other.freqs)

    def to_csv(self, path) -> None:
        """Write freq_hz, density, level_db columns; estimator params as header comments."""
        est = self.estimator
        header = (
            f"# window={est.window_name} segment_length={est.segment_length} "
            f"overlap={est.overlap_fraction} n_segments={est.n_segments} "
            f"resolution_hz={self.resolution_hz} channel={self.channel}\n"
            "freq_hz,density,level_db"
        )
        data = np.column_stack([self.freqs, self.density, self.level_db()])
        np.savetxt(path, data, delimiter=",", header=header, comments="")


@dataclass(frozen=True)
class SpectralPeak:
    """A detected spectral local maximum."""

    freq: float
    level_db: float
    prominence_db: float

    def __post_init__(self):
        if self.prominence_db < 0:
            raise ParameterError("prominence_db must be >= 0")


def welch_psd(
    ts: TimeSeries,
    segment_length: int,
    overlap: float = 0.5,
    window: str = "hann",
) -> Psd:
    """Averaged modified periodogram (Welch) of a time series.

    One-sided, window-power normalized so that the integral of the density
    over [0, Nyquist] matches the time-series variance for stationary input.

    Parameters
    ----------
    ts : TimeSeries
    segment_length : int
        Samples per segment; sets resolution_hz = sample_rate / segment_length.
    overlap : float
        Fractional segment overlap in [0, 1).
    window : str
        "hann" or "rectangular".
    """
    ts.require_nonempty("welch_psd")
    if segment_length < 8:
        raise ParameterError(f"segment_length must be >= 8, got {segment_length}")
    if segment_length > ts.n_samples:
        raise ParameterError(
            f"segment_length {segment_length} exceeds signal length {ts.n_samples}"
        )
    if not 0 <= overlap < 1:
        raise ParameterError(f"overlap must be in [0, 1), got {overlap}")
    if window not in WINDOWS:
        raise ParameterError(f"window must be one of {sorted(WINDOWS)}, got {window!r}")

    noverlap = int(round(segment_length * overlap))
    freqs, density = scipy.signal.welch(
        ts.samples,
        fs=ts.sample_rate,
        window=WINDOWS[window],
        nperseg=segment_length,
        noverlap=noverlap,
        detrend="constant",
        scaling="density",
        return_onesided=True,
    )
    n_segments = 1 + (ts.n_samples - segment_length) // (segment_length - noverlap)
    info = EstimatorInfo(
        window_name=window,
        segment_length=int(segment_length),
        overlap_fraction=float(overlap),
        n_segments=int(n_segments),
    )
    return Psd(
        freqs=freqs,
        density=density,
        resolution_hz=ts.sample_rate / segment_length,
        estimator=info,
        channel=ts.channel,
    )


def band_power(psd: Psd, f_lo: float, f_hi: float) -> float:
    """Trapezoidal integral of the density over [f_lo, f_hi].

    Band edges falling between grid points are handled by integrating the
    linear interpolant of the density, so partial bins contribute their
    fractional overlap.
    """
    if not f_lo < f_hi:
        raise ParameterError(f"band requires f_lo < f_hi, got [{f_lo}, {f_hi}]")
    if f_lo < psd.freqs[0] or f_hi > psd.nyquist:
        raise ParameterError(
            f"band [{f_lo}, {f_hi}] Hz outside PSD grid [{psd.freqs[0]}, {psd.nyquist}] Hz"
        )
    inside = psd.freqs[(psd.freqs > f_lo) & (psd.freqs < f_hi)]
    grid = np.concatenate([[f_lo], inside, [f_hi]])
    dens = np.interp(grid, psd.freqs, psd.density)
    return float(np.trapezoid(dens, grid))


def find_peaks(
    psd: Psd,
    min_prominence_db: float = DEFAULT_MIN_PROMINENCE_DB,
    min_spacing_hz: float = DEFAULT_MIN_SPACING_HZ,
) -> list[SpectralPeak]:
    """Detect local maxima of the dB spectrum.

    A candidate must have prominence >= min_prominence_db on the dB curve.
    Candidates closer than min_spacing_hz are thinned greedily from the
    highest level down (ties break toward lower frequency). The surviving
    peaks are returned sorted by frequency.
    """
    if psd.freqs.size < 3:
        raise ParameterError("peak detection needs a PSD with at least 3 bins")
    level = psd.level_db()
    idx, props = scipy.signal.find_peaks(level, prominence=min_prominence_db)
    if idx.size == 0:
        return []
    order = sorted(range(idx.size), key=lambda i: (-level[idx[i]], psd.freqs[idx[i]]))
    kept: list[int] = []
    for i in order:
        f = psd.freqs[idx[i]]
        if all(abs(f - psd.freqs[idx[j]]) >= min_spacing_hz for j in kept):
            kept.append(i)
    kept.sort(key=lambda i: psd.freqs[idx[i]])
    return [
        SpectralPeak(
            freq=float(psd.freqs[idx[i]]),
            level_db=float(level[idx[i]]),
            prominence_db=float(props["prominences"][i]),
        )
        for i in kept
    ]


def require_same_grid(a: Psd, b: Psd) -> None:
    if not a.same_grid(b):
        raise GridMismatchError(
            f"PSD grids differ ({a.freqs.size} bins at {a.resolution_hz} Hz vs "
            f"{b.freqs.size} bins at {b.resolution_hz} Hz)"
        )
