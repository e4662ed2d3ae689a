"""Analysis pipeline and deterministic report emission.

Reports serialize to canonical JSON: sorted keys, two-space indent, floats
at six significant digits. The same input and configuration always produce
byte-identical output, so the config snapshot embedded in a report suffices
to reproduce it.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import boltscope
from boltscope.classify import Classification, classify
from boltscope.config import AnalysisConfig
from boltscope.errors import ParameterError
from boltscope.features import RatioTable, harmonic_ratio, identify_resonance, new_peaks
from boltscope.signals import TimeSeries
from boltscope.spectral import Psd, SpectralPeak, find_peaks, welch_psd


def _round_floats(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.6g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def canonical_json(payload: dict) -> str:
    """Deterministic JSON: sorted keys, fixed float precision, newline-terminated."""
    return json.dumps(_round_floats(payload), indent=2, sort_keys=True) + "\n"


def input_metadata(ts: TimeSeries, path=None) -> dict:
    meta = {
        "channel": ts.channel,
        "sample_rate_hz": ts.sample_rate,
        "n_samples": ts.n_samples,
        "duration_s": ts.duration,
    }
    if path is not None:
        path = Path(path)
        meta["path"] = str(path)
        if path.exists():
            meta["sha256"] = hashlib.sha256(path.read_bytes()).hexdigest()
    return meta


def _peak_dict(peak: SpectralPeak) -> dict:
    return {
        "freq_hz": peak.freq,
        "level_db": peak.level_db,
        "prominence_db": peak.prominence_db,
    }


@dataclass
class Report:
    """Everything cmd_analyze / cmd_compare emit for one input."""

    input: dict
    config: AnalysisConfig
    resonance_hz: float
    peaks: list[SpectralPeak]
    ratios: list
    new_peaks: list[SpectralPeak] | None = None
    reference_input: dict | None = None
    classification: Classification | None = None

    def to_dict(self) -> dict:
        payload = {
            "input": self.input,
            "config": self.config.to_dict(),
            "resonance_hz": self.resonance_hz,
            "peaks": [_peak_dict(p) for p in self.peaks],
            "ratios": [
                {"l": r.l, "value_db": r.value_db, "channel": r.channel} for r in self.ratios
            ],
            "new_peaks": None
            if self.new_peaks is None
            else [_peak_dict(p) for p in self.new_peaks],
            "reference_input": self.reference_input,
            "classification": None
            if self.classification is None
            else self.classification.to_dict(),
            "tool": {"name": "boltscope", "version": boltscope.__version__},
        }
        return payload

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def compute_psd(ts: TimeSeries, config: AnalysisConfig) -> Psd:
    nperseg = config.psd.segment_length(ts.sample_rate)
    if nperseg > ts.n_samples:
        raise ParameterError(
            f"input too short for {config.psd.resolution_hz} Hz resolution: need at "
            f"least {nperseg} samples ({nperseg / ts.sample_rate:.2f} s), got {ts.n_samples}; "
            f"record longer or relax psd.resolution_hz"
        )
    return welch_psd(ts, segment_length=nperseg, overlap=config.psd.overlap, window=config.psd.window)


def analyze_series(
    ts: TimeSeries,
    config: AnalysisConfig,
    reference: TimeSeries | None = None,
    table: RatioTable | None = None,
    input_meta: dict | None = None,
    reference_meta: dict | None = None,
) -> Report:
    """Run the full feature pipeline on one time series.

    With a reference series, peaks absent from the reference are reported as
    new. With a ratio table, the harmonic ratios are classified.
    """
    psd = compute_psd(ts, config)
    resonance = identify_resonance(psd, config.resonance_lo, config.resonance_hi)
    peaks = find_peaks(psd, config.peaks.min_prominence_db, config.peaks.min_spacing_hz)
    ratios = [harmonic_ratio(psd, config.band_rule, l) for l in config.harmonics]

    fresh = None
    ref_meta = None
    if reference is not None:
        ref_psd = compute_psd(reference, config)
        fresh = new_peaks(
            psd,
            ref_psd,
            match_tolerance_hz=config.new_peak_tolerance_hz,
            min_prominence_db=config.peaks.min_prominence_db,
            min_spacing_hz=config.peaks.min_spacing_hz,
        )
        ref_meta = reference_meta if reference_meta is not None else input_metadata(reference)

    result = None
    if table is not None:
        result = classify(ratios, table)

    return Report(
        input=input_meta if input_meta is not None else input_metadata(ts),
        config=config,
        resonance_hz=resonance,
        peaks=peaks,
        ratios=ratios,
        new_peaks=fresh,
        reference_input=ref_meta,
        classification=result,
    )
