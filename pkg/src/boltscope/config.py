"""Analysis configuration with defaults matching the published protocol:
carrier band 125-135 Hz, harmonic orders {2, 6}, Hann window at 0.5 Hz
resolution with 50% overlap, peak criteria 3 dB prominence / 80 Hz spacing,
accelerometer z-axis channel.
"""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass, field

from boltscope.errors import ParameterError
from boltscope.features import BandRule

DEFAULT_CONFIG_RESOURCE = "default_config.json"


@dataclass(frozen=True)
class PsdParams:
    window: str = "hann"
    resolution_hz: float = 0.5
    overlap: float = 0.5

    def __post_init__(self):
        if self.resolution_hz <= 0:
            raise ParameterError("resolution_hz must be > 0")
        if not 0 <= self.overlap < 1:
            raise ParameterError("overlap must be in [0, 1)")

    def segment_length(self, sample_rate: float) -> int:
        return int(round(sample_rate / self.resolution_hz))


@dataclass(frozen=True)
class PeakParams:
    min_prominence_db: float = 3.0
    min_spacing_hz: float = 80.0


@dataclass(frozen=True)
class AnalysisConfig:
    band_rule: BandRule = field(default_factory=BandRule)
    harmonics: tuple[int, ...] = (2, 6)
    psd: PsdParams = field(default_factory=PsdParams)
    peaks: PeakParams = field(default_factory=PeakParams)
    channel: str = "accel-z"
    resonance_lo: float = 100.0
    resonance_hi: float = 350.0
    new_peak_tolerance_hz: float = 10.0
    reference_table_path: str | None = None

    def __post_init__(self):
        if not self.harmonics:
            raise ParameterError("at least one harmonic order is required")
        if any(l < 2 for l in self.harmonics):
            raise ParameterError(f"harmonic orders must be >= 2, got {self.harmonics}")
        if not self.resonance_lo < self.resonance_hi:
            raise ParameterError("resonance search band must have lo < hi")

    def to_dict(self) -> dict:
        return {
            "band_rule": self.band_rule.to_dict(),
            "harmonics": list(self.harmonics),
            "psd": {
                "window": self.psd.window,
                "resolution_hz": self.psd.resolution_hz,
                "overlap": self.psd.overlap,
            },
            "peaks": {
                "min_prominence_db": self.peaks.min_prominence_db,
                "min_spacing_hz": self.peaks.min_spacing_hz,
            },
            "channel": self.channel,
            "resonance_lo": self.resonance_lo,
            "resonance_hi": self.resonance_hi,
            "new_peak_tolerance_hz": self.new_peak_tolerance_hz,
            "reference_table_path": self.reference_table_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        known = {
            "band_rule",
            "harmonics",
            "psd",
            "peaks",
            "channel",
            "resonance_lo",
            "resonance_hi",
            "new_peak_tolerance_hz",
            "reference_table_path",
        }
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        if "band_rule" in d:
            kwargs["band_rule"] = BandRule(**d["band_rule"])
        if "harmonics" in d:
            kwargs["harmonics"] = tuple(int(l) for l in d["harmonics"])
        if "psd" in d:
            kwargs["psd"] = PsdParams(**d["psd"])
        if "peaks" in d:
            kwargs["peaks"] = PeakParams(**d["peaks"])
        for key in ("channel", "resonance_lo", "resonance_hi", "new_peak_tolerance_hz", "reference_table_path"):
            if key in d:
                kwargs[key] = d[key]
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "AnalysisConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def load_default_config() -> AnalysisConfig:
    """The bundled default configuration (identical to AnalysisConfig())."""
    text = (
        importlib.resources.files("boltscope")
        .joinpath("reference", DEFAULT_CONFIG_RESOURCE)
        .read_text(encoding="utf-8")
    )
    return AnalysisConfig.from_dict(json.loads(text))
