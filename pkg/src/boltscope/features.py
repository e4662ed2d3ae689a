"""Discriminative features: harmonic band power ratios, resonance, new peaks.

The central feature is the harmonic band power ratio

    R_l = 10 log10(P_harmonic(l) / P_carrier)

computed from band powers around the carrier and around the l-th harmonic
band. Tighter joints generate weaker harmonics, so R_l is more negative for
higher preload and rises toward zero as the joint loosens.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from boltscope.errors import ParameterError
from boltscope.spectral import (
    DEFAULT_MIN_PROMINENCE_DB,
    DEFAULT_MIN_SPACING_HZ,
    Psd,
    SpectralPeak,
    band_power,
    find_peaks,
    require_same_grid,
)


class PreloadState(enum.Enum):
    """Discrete preload states of the monitored bolt with tightening torques."""

    LOOSE = "loose"
    P20 = "p20"
    P40 = "p40"
    P80 = "p80"

    @property
    def torque_nm(self) -> float:
        return _TORQUE_NM[self]

    @property
    def preload_fraction(self) -> float:
        return _FRACTION[self]

    @classmethod
    def from_fraction(cls, p: float) -> "PreloadState":
        for state, frac in _FRACTION.items():
            if abs(p - frac) < 1e-9:
                return state
        raise ParameterError(f"no named preload state for fraction {p}")

    @classmethod
    def tightness_order(cls) -> list["PreloadState"]:
        """States from loosest to tightest."""
        return [cls.LOOSE, cls.P20, cls.P40, cls.P80]


_TORQUE_NM = {
    PreloadState.LOOSE: 0.0,
    PreloadState.P20: 12.5,
    PreloadState.P40: 25.0,
    PreloadState.P80: 50.0,
}

_FRACTION = {
    PreloadState.LOOSE: 0.0,
    PreloadState.P20: 0.2,
    PreloadState.P40: 0.4,
    PreloadState.P80: 0.8,
}


@dataclass(frozen=True)
class BandRule:
    """Carrier band and the rule deriving harmonic bands from it.

    The l-th harmonic band is [l * carrier_lo, l * carrier_hi], generalizing
    the worked bands [250, 270] (l=2) and [750, 810] (l=6) obtained from the
    default carrier band [125, 135].
    """

    carrier_lo: float = 125.0
    carrier_hi: float = 135.0

    def __post_init__(self):
        if not 0 < self.carrier_lo < self.carrier_hi:
            raise ParameterError(
                f"carrier band must satisfy 0 < lo < hi, got [{self.carrier_lo}, {self.carrier_hi}]"
            )

    @property
    def carrier_band(self) -> tuple[float, float]:
        return (self.carrier_lo, self.carrier_hi)

    def harmonic_band(self, l: int) -> tuple[float, float]:
        if l < 1:
            raise ParameterError(f"harmonic order must be >= 1, got {l}")
        return (l * self.carrier_lo, l * self.carrier_hi)

    def to_dict(self) -> dict:
        return {"carrier_lo": self.carrier_lo, "carrier_hi": self.carrier_hi}


@dataclass(frozen=True)
class HarmonicRatio:
    """Harmonic band power relative to carrier band power, in dB."""

    l: int
    value_db: float
    channel: str = ""

    def __post_init__(self):
        if self.l < 2:
            raise ParameterError(f"harmonic ratio order must be >= 2, got {self.l}")


def harmonic_ratio(psd: Psd, rule: BandRule, l: int) -> HarmonicRatio:
    """Compute R_l = 10 log10(P(harmonic band l) / P(carrier band))."""
    if l < 2:
        raise ParameterError(f"harmonic ratio order must be >= 2, got {l}")
    h_lo, h_hi = rule.harmonic_band(l)
    if h_hi > psd.nyquist:
        required_fs = 2.0 * h_hi
        raise ParameterError(
            f"harmonic band l={l} reaches {h_hi} Hz, beyond Nyquist {psd.nyquist} Hz; "
            f"a sample rate of at least {required_fs} Hz is required"
        )
    p_carrier = band_power(psd, rule.carrier_lo, rule.carrier_hi)
    if p_carrier <= 0.0:
        raise ParameterError(
            f"carrier band [{rule.carrier_lo}, {rule.carrier_hi}] Hz has zero power"
        )
    p_harm = band_power(psd, h_lo, h_hi)
    if p_harm <= 0.0:
        value = -np.inf
    else:
        value = 10.0 * np.log10(p_harm / p_carrier)
    return HarmonicRatio(l=l, value_db=float(value), channel=psd.channel)


def ratio_with_errorband(psds: list[Psd], rule: BandRule, l: int) -> tuple[float, float]:
    """Mean and half-range of R_l over repeated measurements.

    Returns (mean_db, halfband_db), both rounded to 0.1 dB for reporting.
    The half-band is the maximum absolute deviation from the mean.
    """
    if len(psds) < 2:
        raise ParameterError(f"error bands need at least 2 repeats, got {len(psds)}")
    for other in psds[1:]:
        require_same_grid(psds[0], other)
    values = np.array([harmonic_ratio(p, rule, l).value_db for p in psds])
    mean = float(np.mean(values))
    halfband = float(np.max(np.abs(values - mean)))
    return (round(mean, 1), round(halfband, 1))


def identify_resonance(psd: Psd, search_lo: float, search_hi: float) -> float:
    """Frequency of the dominant resonance inside [search_lo, search_hi].

    Uses the highest-prominence detected peak in the band; if no peak passes
    the default prominence criterion, falls back to the argmax of the density.
    """
    if not search_lo < search_hi:
        raise ParameterError(f"search band requires lo < hi, got [{search_lo}, {search_hi}]")
    mask = (psd.freqs >= search_lo) & (psd.freqs <= search_hi)
    if not np.any(mask):
        raise ParameterError(
            f"search band [{search_lo}, {search_hi}] Hz contains no PSD bins"
        )
    peaks = [p for p in find_peaks(psd) if search_lo <= p.freq <= search_hi]
    if peaks:
        best = max(peaks, key=lambda p: (p.prominence_db, -p.freq))
        return best.freq
    band_freqs = psd.freqs[mask]
    band_dens = psd.density[mask]
    return float(band_freqs[np.argmax(band_dens)])


def new_peaks(
    test: Psd,
    reference: Psd,
    match_tolerance_hz: float = 10.0,
    min_prominence_db: float = DEFAULT_MIN_PROMINENCE_DB,
    min_spacing_hz: float = DEFAULT_MIN_SPACING_HZ,
) -> list[SpectralPeak]:
    """Peaks present in `test` with no `reference` peak within the tolerance.

    Both PSDs must share the same frequency grid. Result is sorted by
    frequency.
    """
    require_same_grid(test, reference)
    test_peaks = find_peaks(test, min_prominence_db, min_spacing_hz)
    ref_peaks = find_peaks(reference, min_prominence_db, min_spacing_hz)
    ref_freqs = np.array([p.freq for p in ref_peaks])
    fresh = []
    for peak in test_peaks:
        if ref_freqs.size == 0 or np.min(np.abs(ref_freqs - peak.freq)) > match_tolerance_hz:
            fresh.append(peak)
    return fresh


@dataclass
class RatioTable:
    """Per-state harmonic ratio means with error half-bands.

    rows[state][l] = (mean_db, halfband_db). All states must share the same
    set of harmonic orders. The source channel is recorded explicitly.
    """

    rows: dict[PreloadState, dict[int, tuple[float, float]]]
    n_repeats: int
    band_rule: BandRule = field(default_factory=BandRule)
    channel: str = ""
    table_id: str = ""

    def __post_init__(self):
        if not self.rows:
            raise ParameterError("RatioTable needs at least one state row")
        l_sets = {frozenset(r.keys()) for r in self.rows.values()}
        if len(l_sets) != 1:
            raise ParameterError("all states in a RatioTable must share the same harmonic orders")
        for state, row in self.rows.items():
            for l, (mean_db, halfband_db) in row.items():
                if halfband_db < 0:
                    raise ParameterError(
                        f"halfband must be >= 0, got {halfband_db} for {state} l={l}"
                    )

    @property
    def harmonics(self) -> list[int]:
        return sorted(next(iter(self.rows.values())).keys())

    @property
    def states(self) -> list[PreloadState]:
        return [s for s in PreloadState.tightness_order() if s in self.rows]

    def mean_db(self, state: PreloadState, l: int) -> float:
        try:
            return self.rows[state][l][0]
        except KeyError:
            raise ParameterError(f"table has no entry for state {state.value}, l={l}") from None

    def halfband_db(self, state: PreloadState, l: int) -> float:
        try:
            return self.rows[state][l][1]
        except KeyError:
            raise ParameterError(f"table has no entry for state {state.value}, l={l}") from None

    def to_dict(self) -> dict:
        return {
            "states": {
                state.value: {
                    str(l): {"mean_db": mean, "halfband_db": half}
                    for l, (mean, half) in sorted(row.items())
                }
                for state, row in self.rows.items()
            },
            "n_repeats": self.n_repeats,
            "band_rule": self.band_rule.to_dict(),
            "channel": self.channel,
            "table_id": self.table_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RatioTable":
        rows = {
            PreloadState(state): {
                int(l): (float(entry["mean_db"]), float(entry["halfband_db"]))
                for l, entry in row.items()
            }
            for state, row in d["states"].items()
        }
        rule = BandRule(**d.get("band_rule", {}))
        return cls(
            rows=rows,
            n_repeats=int(d.get("n_repeats", 0)),
            band_rule=rule,
            channel=d.get("channel", ""),
            table_id=d.get("table_id", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RatioTable":
        return cls.from_dict(json.loads(text))
