"""Signal file I/O: WAV and CSV ingestion, rendering, and dataset persistence.

All writers go through an atomic temp-then-rename step so consumers never
see partial files.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from boltscope.errors import IngestError, ParameterError
from boltscope.signals import TimeSeries

# relative timestamp jitter tolerated before CSV ingestion refuses
CSV_JITTER_PPM = 1.0

_PCM_SCALE = {np.dtype(np.int16): 2.0**15, np.dtype(np.int32): 2.0**31}


def atomic_write_bytes(path, data: bytes) -> None:
    """Write bytes to path via a temp file in the same directory + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def wav_bytes(ts: TimeSeries) -> bytes:
    """Encode a TimeSeries as a mono 32-bit float WAV."""
    rate = int(round(ts.sample_rate))
    if abs(rate - ts.sample_rate) > 1e-9:
        raise ParameterError(
            f"WAV headers need an integer sample rate, got {ts.sample_rate}; use CSV instead"
        )
    import io

    buf = io.BytesIO()
    wavfile.write(buf, rate, ts.samples.astype(np.float32))
    return buf.getvalue()


def csv_bytes(ts: TimeSeries) -> bytes:
    """Encode a TimeSeries as two-column CSV: time_s, value."""
    t = ts.times()
    # time needs full precision or re-ingestion would see spurious jitter
    lines = ["time_s,value"]
    lines.extend(f"{ti:.15g},{vi:.9g}" for ti, vi in zip(t, ts.samples))
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_wav(path, ts: TimeSeries) -> None:
    atomic_write_bytes(path, wav_bytes(ts))


def write_csv(path, ts: TimeSeries) -> None:
    atomic_write_bytes(path, csv_bytes(ts))


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".wav":
        return "wav"
    if suffix == ".csv":
        return "csv"
    raise IngestError(f"cannot infer format from {path!r}; expected a .wav or .csv file")


def ingest(path, fmt: str | None = None, channel_map: dict[str, str] | None = None) -> list[TimeSeries]:
    """Read a WAV or CSV file into one TimeSeries per selected channel.

    channel_map maps source channel names (WAV: "ch0", "ch1", ...; CSV:
    header column names) to output channel labels. With no map, every
    channel is ingested under its source name.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"no such file: {path}")
    if path.stat().st_size == 0:
        raise IngestError(f"empty file: {path}")
    fmt = fmt or detect_format(path)
    if fmt == "wav":
        return _ingest_wav(path, channel_map)
    if fmt == "csv":
        return _ingest_csv(path, channel_map)
    raise IngestError(f"unsupported format {fmt!r}; expected 'wav' or 'csv'")


def ingest_bytes(data: bytes, filename: str, channel_map: dict[str, str] | None = None) -> list[TimeSeries]:
    """Ingest in-memory file content (e.g. an HTTP upload) by nominal filename."""
    if not data:
        raise IngestError(f"empty file: {filename}")
    suffix = Path(filename).suffix.lower() or ".wav"
    with tempfile.NamedTemporaryFile(suffix=suffix, delete=False) as tmp:
        tmp.write(data)
        tmp_path = Path(tmp.name)
    try:
        return ingest(tmp_path, fmt=detect_format(Path(filename)), channel_map=channel_map)
    finally:
        tmp_path.unlink(missing_ok=True)


def select_channel(series: list[TimeSeries], wanted: str | None) -> TimeSeries:
    """Pick one channel from an ingested file.

    A single-channel file is used directly (relabeled when a name is given);
    multi-channel files require the wanted source channel name.
    """
    if len(series) == 1:
        ts = series[0]
        if wanted and wanted != ts.channel:
            from dataclasses import replace

            ts = replace(ts, channel=wanted)
        return ts
    names = [s.channel for s in series]
    if not wanted:
        raise IngestError(
            f"file has {len(series)} channels {names}; select one with a channel name"
        )
    for ts in series:
        if ts.channel == wanted:
            return ts
    raise IngestError(f"channel {wanted!r} not found; file has {names}")


def _ingest_wav(path: Path, channel_map: dict[str, str] | None) -> list[TimeSeries]:
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise IngestError(f"{path}: not a readable WAV file ({exc})") from exc
    if data.dtype == np.float64 or data.dtype == np.float32:
        samples = np.asarray(data, dtype=np.float64)
    elif data.dtype in _PCM_SCALE:
        samples = data.astype(np.float64) / _PCM_SCALE[data.dtype]
    else:
        raise IngestError(
            f"{path}: unsupported WAV encoding {data.dtype}; expected PCM16, PCM24/32, or float32"
        )
    if samples.size == 0:
        raise IngestError(f"{path}: WAV file contains no frames")
    if samples.ndim == 1:
        samples = samples[:, None]
    names = [f"ch{i}" for i in range(samples.shape[1])]
    return _select_channels(samples, names, float(rate), channel_map, path)


def _ingest_csv(path: Path, channel_map: dict[str, str] | None) -> list[TimeSeries]:
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline().strip()
        if not header_line:
            raise IngestError(f"{path}: empty file")
        names = [c.strip() for c in header_line.split(",")]
        if len(names) < 2:
            raise IngestError(f"{path}: CSV needs a time column and at least one value column")
        if names[0] != "time_s":
            raise IngestError(f"{path}: first CSV column must be 'time_s', got {names[0]!r}")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise IngestError(f"{path}: malformed CSV data ({exc})") from exc
    if data.size == 0:
        raise IngestError(f"{path}: CSV has a header but no rows")
    if data.shape[1] != len(names):
        raise IngestError(
            f"{path}: header names {len(names)} columns but rows have {data.shape[1]}"
        )
    t = data[:, 0]
    if t.size < 2:
        raise IngestError(f"{path}: need at least 2 rows to establish a sample rate")
    dt = np.diff(t)
    dt_nominal = (t[-1] - t[0]) / (t.size - 1)
    if dt_nominal <= 0:
        raise IngestError(f"{path}: timestamps are not increasing")
    jitter = np.abs(dt - dt_nominal) / dt_nominal
    worst = int(np.argmax(jitter))
    if jitter[worst] > CSV_JITTER_PPM * 1e-6:
        raise IngestError(
            f"{path}: non-uniform timestamps at row {worst + 2} "
            f"(dt={dt[worst]:.9g} s vs nominal {dt_nominal:.9g} s, "
            f"{jitter[worst] * 1e6:.1f} ppm exceeds {CSV_JITTER_PPM} ppm)"
        )
    sample_rate = 1.0 / dt_nominal
    return _select_channels(
        data[:, 1:], names[1:], sample_rate, channel_map, path, start_time=float(t[0])
    )


def _select_channels(samples, names, sample_rate, channel_map, path, start_time=0.0):
    if channel_map:
        missing = [c for c in channel_map if c not in names]
        if missing:
            raise IngestError(f"{path}: channels {missing} not found; file has {names}")
        selected = [(names.index(src), label) for src, label in channel_map.items()]
    else:
        selected = [(i, name) for i, name in enumerate(names)]
    return [
        TimeSeries(samples[:, i], sample_rate, channel=label, start_time=start_time)
        for i, label in selected
    ]


def dataset_filename(index: int, rec) -> str:
    p_pct = int(round(rec.preload_fraction * 100))
    return f"rec{index:03d}_p{p_pct:03d}_{rec.spec.kind}_s{rec.seed}.wav"


def dataset_manifest(records, model_info: dict, sim_info: dict) -> dict:
    """Manifest payload for a simulated dataset (one entry per record)."""
    entries = []
    for i, rec in enumerate(records):
        entries.append(
            {
                "file": dataset_filename(i, rec),
                "preload_fraction": rec.preload_fraction,
                "seed": rec.seed,
                "spec": rec.spec.to_dict(),
                "sample_rate": rec.response.sample_rate,
                "channel": rec.response.channel,
            }
        )
    return {
        "records": entries,
        "model": model_info,
        "sim": sim_info,
        "notes": {
            "preload_scaling": (
                "slip force scales with p, clearance with (1-p), joint stiffness "
                "interpolates linearly in p; heuristic stand-ins, not calibrated "
                "to any hardware"
            )
        },
    }


def write_dataset(out_dir, records, model_info: dict, sim_info: dict) -> Path:
    """Write simulator output as WAV files plus a JSON manifest.

    records: iterable of objects with .spec, .response, .preload_fraction,
    .seed attributes (see jointsim.ProtocolRecord).
    """
    records = list(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, rec in enumerate(records):
        write_wav(out_dir / dataset_filename(i, rec), rec.response)
    manifest = dataset_manifest(records, model_info, sim_info)
    atomic_write_text(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out_dir / "manifest.json"
