"""Config defaults, report structure, and byte-level determinism."""

import json

import numpy as np
import pytest

from boltscope.classify import load_reference_table
from boltscope.config import AnalysisConfig, load_default_config
from boltscope.errors import ParameterError
from boltscope.excitation import ExcitationSpec, render
from boltscope.jointsim import JointModel, SimConfig, preload_to_params, simulate_response
from boltscope.report import analyze_series, canonical_json, input_metadata
from boltscope.sigio import write_wav, ingest, select_channel

FS = 25600.0


@pytest.fixture(scope="module")
def loose_response():
    exc = render(ExcitationSpec.tone(130.0, amplitude=200.0, duration=4.0), FS)
    model = preload_to_params(0.0, JointModel())
    return simulate_response(model, exc, SimConfig(), seed=42)


class TestConfigDefaults:
    def test_bundled_config_equals_code_defaults(self):
        assert load_default_config() == AnalysisConfig()

    def test_defaults_match_published_protocol(self):
        cfg = load_default_config()
        assert cfg.band_rule.carrier_band == (125.0, 135.0)
        assert cfg.band_rule.harmonic_band(2) == (250.0, 270.0)
        assert cfg.band_rule.harmonic_band(6) == (750.0, 810.0)
        assert tuple(cfg.harmonics) == (2, 6)
        assert cfg.peaks.min_prominence_db == 3.0
        assert cfg.peaks.min_spacing_hz == 80.0
        assert cfg.psd.window == "hann"
        assert cfg.psd.resolution_hz == 0.5
        assert cfg.psd.overlap == 0.5
        assert cfg.channel == "accel-z"

    def test_resolution_resolves_fm_sidebands(self):
        # the key feature uses 2 Hz modulation; bins must be finer than that
        cfg = AnalysisConfig()
        assert cfg.psd.resolution_hz <= 2.0 / 2

    def test_unknown_keys_rejected(self):
        with pytest.raises(ParameterError, match="unknown"):
            AnalysisConfig.from_dict({"bogus": 1})

    def test_round_trip(self):
        cfg = AnalysisConfig()
        assert AnalysisConfig.from_dict(cfg.to_dict()) == cfg

    def test_invalid_harmonics_rejected(self):
        with pytest.raises(ParameterError):
            AnalysisConfig(harmonics=(1,))
        with pytest.raises(ParameterError):
            AnalysisConfig(harmonics=())


class TestCanonicalJson:
    def test_sorted_keys_and_rounding(self):
        text = canonical_json({"b": 1.23456789, "a": {"z": 2, "y": [0.1000000001]}})
        assert text.index('"a"') < text.index('"b"')
        assert "1.23457" in text
        assert "0.1\n" in text or "0.1]" in text.replace("\n", "")

    def test_non_finite_becomes_null(self):
        payload = json.loads(canonical_json({"x": float("-inf"), "y": float("nan")}))
        assert payload == {"x": None, "y": None}

    def test_trailing_newline(self):
        assert canonical_json({}).endswith("\n")


class TestAnalyzeSeries:
    def test_report_fields(self, loose_response):
        report = analyze_series(loose_response, AnalysisConfig())
        payload = json.loads(report.to_json())
        assert payload["resonance_hz"] == pytest.approx(130.0, abs=2.0)
        assert {r["l"] for r in payload["ratios"]} == {2, 6}
        assert payload["classification"] is None
        assert payload["new_peaks"] is None
        assert payload["tool"]["name"] == "boltscope"
        assert payload["config"]["band_rule"]["carrier_lo"] == 125.0
        assert payload["input"]["sample_rate_hz"] == FS

    def test_classification_included_with_table(self, loose_response):
        table = load_reference_table()
        report = analyze_series(loose_response, AnalysisConfig(), table=table)
        assert report.classification is not None

    def test_byte_identical_reports(self, loose_response, tmp_path):
        path = tmp_path / "resp.wav"
        write_wav(path, loose_response)
        runs = []
        for _ in range(2):
            ts = select_channel(ingest(path), "accel-z")
            report = analyze_series(
                ts, AnalysisConfig(), input_meta=input_metadata(ts, path=path)
            )
            runs.append(report.to_json().encode())
        assert runs[0] == runs[1]

    def test_short_input_diagnostic(self):
        from boltscope.signals import TimeSeries

        ts = TimeSeries(np.zeros(1000), FS)
        with pytest.raises(ParameterError, match="resolution"):
            analyze_series(ts, AnalysisConfig())

    def test_compare_path_reports_new_peaks(self):
        # loose-state response gains drive harmonics that a spectrally clean
        # (linear-limit) reference lacks
        exc = render(ExcitationSpec.tone(130.0, amplitude=200.0, duration=4.0), FS)
        cfg = SimConfig()
        linear = JointModel(clearance_at_zero_preload=0.0, slip_force_at_full_preload=np.inf)
        tight = simulate_response(linear, exc, cfg, seed=7)
        loose = simulate_response(preload_to_params(0.0, JointModel()), exc, cfg, seed=7)
        report = analyze_series(loose, AnalysisConfig(), reference=tight)
        assert report.new_peaks is not None
        new_freqs = [p.freq for p in report.new_peaks]
        assert any(250.0 <= f <= 270.0 for f in new_freqs)  # 2nd harmonic band
        assert any(380.0 <= f <= 400.0 for f in new_freqs)  # 3rd harmonic
        assert all(abs(f - 130.0) > 10.0 for f in new_freqs)  # carrier is not new
        assert report.reference_input is not None

    def test_input_metadata_hash_stable(self, loose_response, tmp_path):
        path = tmp_path / "resp.wav"
        write_wav(path, loose_response)
        ts = select_channel(ingest(path), None)
        a = input_metadata(ts, path=path)
        b = input_metadata(ts, path=path)
        assert a == b
        assert len(a["sha256"]) == 64
