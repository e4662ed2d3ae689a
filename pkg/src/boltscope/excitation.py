"""Stimulus generators: single tone, FM, linear sweep, and band-limited noise.

All generators are pure functions of an ExcitationSpec and a sample rate.
Seeded noise uses a local Generator, never global RNG state, so concurrent
rendering is safe and reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from boltscope.errors import ParameterError
from boltscope.signals import TimeSeries

KINDS = ("tone", "fm", "sweep", "bandnoise")

DEFAULT_SAMPLE_RATE = 25600.0


@dataclass(frozen=True)
class ExcitationSpec:
    """Parametric description of a stimulus.

    Only the fields relevant to ``kind`` are used:

    - tone:      freq
    - fm:        carrier_freq, mod_freq, deviation
    - sweep:     f_start, f_end
    - bandnoise: f_lo, f_hi, seed
    """

    kind: str
    amplitude: float = 1.0
    duration: float = 1.0
    freq: float | None = None
    carrier_freq: float | None = None
    mod_freq: float | None = None
    deviation: float | None = None
    f_start: float | None = None
    f_end: float | None = None
    f_lo: float | None = None
    f_hi: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown excitation kind {self.kind!r}, expected one of {KINDS}")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ParameterError(f"duration must be > 0, got {self.duration}")
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise ParameterError(f"amplitude must be finite and >= 0, got {self.amplitude}")
        if self.kind == "tone":
            self._require_positive(freq=self.freq)
        elif self.kind == "fm":
            self._require_positive(carrier_freq=self.carrier_freq, mod_freq=self.mod_freq)
            if self.deviation is None or self.deviation < 0 or not math.isfinite(self.deviation):
                raise ParameterError(f"fm deviation must be >= 0, got {self.deviation}")
        elif self.kind == "sweep":
            self._require_positive(f_start=self.f_start, f_end=self.f_end)
            if self.f_start > self.f_end:
                raise ParameterError(f"sweep needs f_start <= f_end, got {self.f_start} > {self.f_end}")
        elif self.kind == "bandnoise":
            self._require_positive(f_lo=self.f_lo, f_hi=self.f_hi)
            if not self.f_lo < self.f_hi:
                raise ParameterError(f"bandnoise needs f_lo < f_hi, got [{self.f_lo}, {self.f_hi}]")

    @staticmethod
    def _require_positive(**fields):
        for name, value in fields.items():
            if value is None or not math.isfinite(value) or value <= 0:
                raise ParameterError(f"{name} must be a positive frequency, got {value}")

    # -- convenience constructors ------------------------------------------

    @classmethod
    def tone(cls, freq: float, amplitude: float = 1.0, duration: float = 1.0) -> "ExcitationSpec":
        return cls(kind="tone", amplitude=amplitude, duration=duration, freq=freq)

    @classmethod
    def fm(
        cls,
        carrier_freq: float,
        mod_freq: float,
        deviation: float,
        amplitude: float = 1.0,
        duration: float = 1.0,
    ) -> "ExcitationSpec":
        return cls(
            kind="fm",
            amplitude=amplitude,
            duration=duration,
            carrier_freq=carrier_freq,
            mod_freq=mod_freq,
            deviation=deviation,
        )

    @classmethod
    def sweep(cls, f_start: float, f_end: float, amplitude: float = 1.0, duration: float = 1.0) -> "ExcitationSpec":
        return cls(kind="sweep", amplitude=amplitude, duration=duration, f_start=f_start, f_end=f_end)

    @classmethod
    def band_noise(
        cls, f_lo: float, f_hi: float, amplitude: float = 1.0, duration: float = 1.0, seed: int = 0
    ) -> "ExcitationSpec":
        return cls(kind="bandnoise", amplitude=amplitude, duration=duration, f_lo=f_lo, f_hi=f_hi, seed=seed)

    # -- derived quantities -------------------------------------------------

    @property
    def modulation_index(self) -> float:
        """FM phase-deviation parameter: peak deviation / modulation frequency."""
        if self.kind != "fm":
            raise ParameterError("modulation_index is defined for fm specs only")
        return self.deviation / self.mod_freq

    @property
    def max_frequency(self) -> float:
        """Highest instantaneous frequency the stimulus contains."""
        if self.kind == "tone":
            return self.freq
        if self.kind == "fm":
            return self.carrier_freq + self.deviation
        if self.kind == "sweep":
            return self.f_end
        return self.f_hi

    def derived(self) -> dict:
        """Derived quantities worth reporting alongside a render."""
        out = {"max_frequency_hz": self.max_frequency}
        if self.kind == "fm":
            out["modulation_index"] = self.modulation_index
        if self.kind == "sweep":
            out["sweep_rate_hz_per_s"] = (self.f_end - self.f_start) / self.duration
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "ExcitationSpec":
        return cls(**d)


def _check_nyquist(f: float, sample_rate: float, label: str) -> None:
    if f >= sample_rate / 2:
        raise ParameterError(
            f"{label} = {f} Hz is at or above Nyquist ({sample_rate / 2} Hz); "
            f"raise the sample rate or lower the frequency"
        )


def _n_samples(duration: float, sample_rate: float) -> int:
    n = int(round(duration * sample_rate))
    if n < 1:
        raise ParameterError(f"duration {duration} s is shorter than one sample at {sample_rate} Hz")
    return n


def gen_tone(spec: ExcitationSpec, sample_rate: float = DEFAULT_SAMPLE_RATE) -> TimeSeries:
    """Render a single sinusoid: A sin(2 pi f t)."""
    if spec.kind != "tone":
        raise ParameterError(f"gen_tone needs a tone spec, got {spec.kind!r}")
    _check_nyquist(spec.freq, sample_rate, "tone frequency")
    n = _n_samples(spec.duration, sample_rate)
    t = np.arange(n) / sample_rate
    samples = spec.amplitude * np.sin(2 * np.pi * spec.freq * t)
    return TimeSeries(samples, sample_rate, channel="force", unit="signal")


def gen_fm(spec: ExcitationSpec, sample_rate: float = DEFAULT_SAMPLE_RATE) -> TimeSeries:
    """Render a sinusoidally frequency-modulated carrier.

    x[n] = A sin(2 pi f_c t + beta sin(2 pi f_m t)) with beta derived as
    deviation / mod_freq, so the instantaneous frequency sweeps
    [f_c - deviation, f_c + deviation].
    """
    if spec.kind != "fm":
        raise ParameterError(f"gen_fm needs an fm spec, got {spec.kind!r}")
    _check_nyquist(spec.carrier_freq + spec.deviation, sample_rate, "carrier + deviation")
    beta = spec.modulation_index
    n = _n_samples(spec.duration, sample_rate)
    t = np.arange(n) / sample_rate
    phase = 2 * np.pi * spec.carrier_freq * t + beta * np.sin(2 * np.pi * spec.mod_freq * t)
    samples = spec.amplitude * np.sin(phase)
    return TimeSeries(samples, sample_rate, channel="force", unit="signal")


def sweep_instantaneous_freq(spec: ExcitationSpec, t: float | np.ndarray):
    """Instantaneous frequency of the linear sweep at time t."""
    if spec.kind != "sweep":
        raise ParameterError("instantaneous frequency law is defined for sweep specs")
    return spec.f_start + (spec.f_end - spec.f_start) * np.asarray(t) / spec.duration


def gen_sweep(spec: ExcitationSpec, sample_rate: float = DEFAULT_SAMPLE_RATE) -> TimeSeries:
    """Render a phase-continuous linear sweep from f_start to f_end.

    The phase is the integral of the linear instantaneous-frequency law:
    phi(t) = 2 pi (f_start t + (f_end - f_start) t^2 / (2 T)).
    """
    if spec.kind != "sweep":
        raise ParameterError(f"gen_sweep needs a sweep spec, got {spec.kind!r}")
    _check_nyquist(spec.f_end, sample_rate, "sweep end frequency")
    n = _n_samples(spec.duration, sample_rate)
    t = np.arange(n) / sample_rate
    rate = (spec.f_end - spec.f_start) / spec.duration
    # grouped so a zero-rate sweep reduces to gen_tone bit-for-bit
    phase = 2 * np.pi * spec.f_start * t + np.pi * rate * t * t
    samples = spec.amplitude * np.sin(phase)
    return TimeSeries(samples, sample_rate, channel="force", unit="signal")


def gen_bandnoise(spec: ExcitationSpec, sample_rate: float = DEFAULT_SAMPLE_RATE) -> TimeSeries:
    """Render zero-mean Gaussian noise band-limited to [f_lo, f_hi].

    Synthesis is done in the frequency domain: a white complex-Gaussian
    spectrum is zeroed outside the band and inverse-transformed, which gives
    a flat in-band PSD and a sharp out-of-band rolloff. Samples are scaled
    so max|x| equals the spec amplitude. Deterministic for a fixed seed.
    """
    if spec.kind != "bandnoise":
        raise ParameterError(f"gen_bandnoise needs a bandnoise spec, got {spec.kind!r}")
    _check_nyquist(spec.f_hi, sample_rate, "bandnoise upper edge")
    n = _n_samples(spec.duration, sample_rate)
    rng = np.random.default_rng(spec.seed)
    n_bins = n // 2 + 1
    spectrum = rng.standard_normal(n_bins) + 1j * rng.standard_normal(n_bins)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    spectrum[(freqs < spec.f_lo) | (freqs > spec.f_hi)] = 0.0
    samples = np.fft.irfft(spectrum, n=n)
    peak = np.max(np.abs(samples))
    if peak == 0.0:
        raise ParameterError(
            f"band [{spec.f_lo}, {spec.f_hi}] Hz contains no spectral bins at "
            f"sample rate {sample_rate} Hz and duration {spec.duration} s"
        )
    samples *= spec.amplitude / peak
    return TimeSeries(samples, sample_rate, channel="force", unit="signal")


_GENERATORS = {
    "tone": gen_tone,
    "fm": gen_fm,
    "sweep": gen_sweep,
    "bandnoise": gen_bandnoise,
}


def render(spec: ExcitationSpec, sample_rate: float = DEFAULT_SAMPLE_RATE) -> TimeSeries:
    """Render any ExcitationSpec at the given sample rate."""
    return _GENERATORS[spec.kind](spec, sample_rate)
