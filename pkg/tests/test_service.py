"""HTTP service tests: every endpoint through the in-process test client."""

import base64
import io
import json
import zipfile

import numpy as np
import pytest
from fastapi.testclient import TestClient

from boltscope.excitation import ExcitationSpec, render
from boltscope.jointsim import JointModel, SimConfig, preload_to_params, simulate_response
from boltscope.service import create_app
from boltscope.sigio import wav_bytes


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def loose_wav():
    exc = render(ExcitationSpec.tone(130.0, amplitude=200.0, duration=4.0), 25600.0)
    resp = simulate_response(preload_to_params(0.0, JointModel()), exc, SimConfig(), seed=42)
    return wav_bytes(resp)


class TestMeta:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_reference_table(self, client):
        r = client.get("/v1/reference-table")
        assert r.status_code == 200
        table = r.json()
        assert table["states"]["loose"]["2"]["mean_db"] == -43.8
        assert table["n_repeats"] == 3

    def test_default_config(self, client):
        r = client.get("/v1/default-config")
        assert r.json()["band_rule"] == {"carrier_lo": 125.0, "carrier_hi": 135.0}


class TestGenerate:
    def test_fm_returns_wav_and_derived(self, client):
        req = {
            "spec": {
                "kind": "fm",
                "carrier_freq": 130.0,
                "mod_freq": 2.0,
                "deviation": 5.0,
                "duration": 1.0,
            },
            "sample_rate": 25600.0,
            "format": "wav",
        }
        r = client.post("/v1/generate", json=req)
        assert r.status_code == 200
        body = r.json()
        assert body["derived"]["modulation_index"] == pytest.approx(2.5)
        assert body["n_samples"] == 25600
        content = base64.b64decode(body["content_base64"])
        assert content[:4] == b"RIFF"

    def test_csv_format(self, client):
        req = {"spec": {"kind": "tone", "freq": 130.0, "duration": 0.01}, "format": "csv"}
        r = client.post("/v1/generate", json=req)
        text = base64.b64decode(r.json()["content_base64"]).decode()
        assert text.splitlines()[0] == "time_s,value"

    def test_invalid_spec_rejected(self, client):
        req = {"spec": {"kind": "tone", "duration": 1.0}}  # missing freq
        r = client.post("/v1/generate", json=req)
        assert r.status_code == 422

    def test_nyquist_violation_is_client_error(self, client):
        req = {"spec": {"kind": "tone", "freq": 20000.0}, "sample_rate": 25600.0}
        r = client.post("/v1/generate", json=req)
        assert r.status_code == 400
        assert "Nyquist" in r.json()["detail"]


class TestSimulate:
    def test_zip_dataset(self, client):
        req = {
            "preload_fractions": [0.0, 0.8],
            "seeds": [1],
            "protocol": [{"kind": "tone", "freq": 130.0, "amplitude": 200.0, "duration": 0.5}],
        }
        r = client.post("/v1/simulate", json=req)
        assert r.status_code == 200
        assert r.headers["content-type"] == "application/zip"
        zf = zipfile.ZipFile(io.BytesIO(r.content))
        names = zf.namelist()
        assert "manifest.json" in names
        manifest = json.loads(zf.read("manifest.json"))
        assert len(manifest["records"]) == 2
        assert {e["preload_fraction"] for e in manifest["records"]} == {0.0, 0.8}
        wav_names = [n for n in names if n.endswith(".wav")]
        assert len(wav_names) == 2

    def test_coarse_step_rejected(self, client):
        req = {
            "preload_fractions": [0.0],
            "seeds": [1],
            "protocol": [{"kind": "sweep", "f_start": 1.0, "f_end": 5000.0, "duration": 0.5}],
        }
        r = client.post("/v1/simulate", json=req)
        assert r.status_code == 400
        assert "integrator_step" in r.json()["detail"]


class TestAnalyze:
    def test_report_returned(self, client, loose_wav):
        r = client.post("/v1/analyze", files={"file": ("loose.wav", loose_wav, "audio/wav")})
        assert r.status_code == 200
        report = json.loads(r.content)
        assert report["resonance_hz"] == pytest.approx(130.0, abs=2.0)
        assert report["input"]["path"] == "loose.wav"
        assert report["classification"] is None

    def test_byte_identical_reports(self, client, loose_wav):
        a = client.post("/v1/analyze", files={"file": ("x.wav", loose_wav, "audio/wav")})
        b = client.post("/v1/analyze", files={"file": ("x.wav", loose_wav, "audio/wav")})
        assert a.content == b.content

    def test_classify_flag(self, client, loose_wav):
        r = client.post(
            "/v1/analyze",
            files={"file": ("loose.wav", loose_wav, "audio/wav")},
            data={"classify": "true"},
        )
        report = json.loads(r.content)
        assert report["classification"] is not None
        assert report["classification"]["state"] in {"loose", "p20", "p40", "p80"}

    def test_config_override(self, client, loose_wav):
        cfg = {"psd": {"window": "hann", "resolution_hz": 1.0, "overlap": 0.5}}
        r = client.post(
            "/v1/analyze",
            files={"file": ("loose.wav", loose_wav, "audio/wav")},
            data={"config": json.dumps(cfg)},
        )
        report = json.loads(r.content)
        assert report["config"]["psd"]["resolution_hz"] == 1.0

    def test_garbage_upload_rejected(self, client):
        r = client.post("/v1/analyze", files={"file": ("x.wav", b"garbage", "audio/wav")})
        assert r.status_code == 400


class TestCompare:
    def test_new_peaks_in_report(self, client, loose_wav):
        exc = render(ExcitationSpec.tone(130.0, amplitude=200.0, duration=4.0), 25600.0)
        linear = JointModel(clearance_at_zero_preload=0.0, slip_force_at_full_preload=np.inf)
        tight = wav_bytes(simulate_response(linear, exc, SimConfig(), seed=7))
        r = client.post(
            "/v1/compare",
            files={
                "file": ("loose.wav", loose_wav, "audio/wav"),
                "reference": ("tight.wav", tight, "audio/wav"),
            },
        )
        assert r.status_code == 200
        report = json.loads(r.content)
        assert report["new_peaks"] is not None
        assert len(report["new_peaks"]) > 0
        assert report["reference_input"]["path"] == "tight.wav"


class TestClassify:
    def test_loose_row_alarms(self, client):
        req = {
            "ratios": [{"l": 2, "value_db": -43.8}, {"l": 6, "value_db": -21.5}],
            "threshold_db": 6.0,
        }
        r = client.post("/v1/classify", json=req)
        assert r.status_code == 200
        body = r.json()
        assert body["classification"]["state"] == "loose"
        assert body["alarm"] is True
        assert body["verdict"] == "alarm"

    def test_tight_row_quiet(self, client):
        req = {"ratios": [{"l": 2, "value_db": -61.3}, {"l": 6, "value_db": -58.0}]}
        r = client.post("/v1/classify", json=req)
        body = r.json()
        assert body["classification"]["state"] == "p80"
        assert body["verdict"] == "tight"

    def test_inline_table(self, client):
        table = {
            "states": {
                "loose": {"2": {"mean_db": -10.0, "halfband_db": 0.1}},
                "p80": {"2": {"mean_db": -50.0, "halfband_db": 0.1}},
            },
            "n_repeats": 2,
            "table_id": "inline-test",
        }
        req = {"ratios": [{"l": 2, "value_db": -11.0}], "table": table}
        r = client.post("/v1/classify", json=req)
        body = r.json()
        assert body["classification"]["state"] == "loose"
        assert body["table_id"] == "inline-test"

    def test_missing_order_rejected(self, client):
        req = {"ratios": [{"l": 4, "value_db": -30.0}]}
        r = client.post("/v1/classify", json=req)
        assert r.status_code == 400

    def test_classify_signal_upload(self, client, loose_wav):
        r = client.post(
            "/v1/classify-signal",
            files={"file": ("loose.wav", loose_wav, "audio/wav")},
            data={"threshold_db": "6.0"},
        )
        assert r.status_code == 200
        body = r.json()
        assert body["alarm"] is True  # simulated loose joint far above tight reference


class TestCrossSurface:
    def test_service_report_matches_cli_bytes(self, client, loose_wav, tmp_path, monkeypatch):
        # the CLI and the service run the same pipeline; given the same
        # nominal filename and bytes they must emit identical report bytes
        from boltscope.cli import main as cli_main

        monkeypatch.chdir(tmp_path)
        (tmp_path / "loose.wav").write_bytes(loose_wav)
        assert cli_main(["analyze", "loose.wav", "--out", "cli_report.json"]) == 0
        cli_bytes = (tmp_path / "cli_report.json").read_bytes()
        r = client.post("/v1/analyze", files={"file": ("loose.wav", loose_wav, "audio/wav")})
        assert r.content == cli_bytes
