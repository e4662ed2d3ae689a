"""Command line interface.

Subcommands: generate | simulate | analyze | compare | classify | serve.
Exit codes: 0 success (classify: joint tight), 2 classify alarm, 1 any error.
All file outputs are written atomically. BOLTSCOPE_SEED overrides default
seeds for reproducible CI runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from boltscope.classify import alarm as alarm_check
from boltscope.classify import classify as classify_features
from boltscope.classify import load_reference_table, load_table
from boltscope.config import AnalysisConfig
from boltscope.errors import BoltscopeError, ParameterError
from boltscope.excitation import DEFAULT_SAMPLE_RATE, ExcitationSpec, render
from boltscope.features import HarmonicRatio
from boltscope.jointsim import (
    JointModel,
    SimConfig,
    default_protocol,
    preload_to_params,
    run_protocol,
)
from boltscope.report import analyze_series, canonical_json, compute_psd, input_metadata
from boltscope.sigio import (
    atomic_write_bytes,
    atomic_write_text,
    csv_bytes,
    ingest,
    select_channel,
    wav_bytes,
    write_dataset,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ALARM = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors, which collides with the
    # alarm exit code; surface usage problems as ordinary errors instead
    def error(self, message):
        raise ParameterError(message)


def env_seed(default: int = 0) -> int:
    raw = os.environ.get("BOLTSCOPE_SEED")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"BOLTSCOPE_SEED must be an integer, got {raw!r}") from None


def _load_config(args) -> AnalysisConfig:
    if getattr(args, "config", None):
        return AnalysisConfig.from_file(args.config)
    return AnalysisConfig()


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        atomic_write_text(out_path, text)
    else:
        sys.stdout.write(text)


def _spec_from_args(args) -> ExcitationSpec:
    seed = args.seed if args.seed is not None else env_seed(0)
    common = dict(amplitude=args.amplitude, duration=args.duration)
    if args.kind == "tone":
        if args.freq is None:
            raise ParameterError("tone needs --freq")
        return ExcitationSpec.tone(args.freq, **common)
    if args.kind == "fm":
        if None in (args.carrier, args.mod_freq, args.deviation):
            raise ParameterError("fm needs --carrier, --mod-freq, and --deviation")
        return ExcitationSpec.fm(args.carrier, args.mod_freq, args.deviation, **common)
    if args.kind == "sweep":
        if None in (args.f_start, args.f_end):
            raise ParameterError("sweep needs --f-start and --f-end")
        return ExcitationSpec.sweep(args.f_start, args.f_end, **common)
    if None in (args.f_lo, args.f_hi):
        raise ParameterError("bandnoise needs --f-lo and --f-hi")
    return ExcitationSpec.band_noise(args.f_lo, args.f_hi, seed=seed, **common)


def cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    ts = render(spec, args.sample_rate)
    data = wav_bytes(ts) if args.format == "wav" else csv_bytes(ts)
    atomic_write_bytes(args.out, data)
    for name, value in sorted(spec.derived().items()):
        print(f"{name} = {value:g}")
    print(f"wrote {ts.n_samples} samples at {ts.sample_rate:g} Hz to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    seeds = args.seeds if args.seeds else [env_seed(0)]
    base = JointModel(
        modal_damping_ratio=args.damping_ratio,
        slip_force_at_full_preload=args.slip_force,
        clearance_at_zero_preload=args.clearance,
    )
    cfg = SimConfig(noise_floor_rms=args.noise_floor)
    if args.protocol_file:
        with open(args.protocol_file, "r", encoding="utf-8") as fh:
            protocol = [ExcitationSpec.from_dict(d) for d in json.load(fh)]
    else:
        protocol = default_protocol(amplitude=args.amplitude, duration=args.duration)
    records = []
    for p in args.preload:
        model = preload_to_params(p, base)
        for seed in seeds:
            records.extend(run_protocol(model, protocol, cfg, args.sample_rate, seed=seed))
    manifest_path = write_dataset(
        args.out,
        records,
        model_info={
            "modal_mass": base.modal_mass,
            "modal_stiffness": base.modal_stiffness,
            "modal_damping_ratio": base.modal_damping_ratio,
            "slip_force_at_full_preload": base.slip_force_at_full_preload,
            "clearance_at_zero_preload": base.clearance_at_zero_preload,
            "contact_stiffness_ratio": base.contact_stiffness_ratio,
        },
        sim_info={
            "integrator_step": cfg.integrator_step,
            "output_sample_rate": cfg.output_sample_rate,
            "noise_floor_rms": cfg.noise_floor_rms,
            "excitation_sample_rate": args.sample_rate,
            "seeds": seeds,
            "preload_fractions": args.preload,
        },
    )
    print(f"wrote {len(records)} records to {args.out} (manifest: {manifest_path})")
    return EXIT_OK


def _ingest_one(path, channel):
    series = ingest(path)
    return select_channel(series, channel)


def cmd_analyze(args) -> int:
    config = _load_config(args)
    channel = args.channel or None
    ts = _ingest_one(args.input, channel)
    table = load_table(config.reference_table_path) if config.reference_table_path else None
    report = analyze_series(
        ts, config, table=table, input_meta=input_metadata(ts, path=args.input)
    )
    _emit(report.to_json(), args.out)
    if args.psd_csv:
        psd = compute_psd(ts, config)
        psd.to_csv(args.psd_csv)
    if args.peaks_csv:
        lines = ["freq_hz,level_db,prominence_db"]
        lines += [f"{p.freq:.6g},{p.level_db:.6g},{p.prominence_db:.6g}" for p in report.peaks]
        atomic_write_text(args.peaks_csv, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load_config(args)
    channel = args.channel or None
    ts = _ingest_one(args.input, channel)
    ref = _ingest_one(args.reference, channel)
    report = analyze_series(
        ts,
        config,
        reference=ref,
        input_meta=input_metadata(ts, path=args.input),
        reference_meta=input_metadata(ref, path=args.reference),
    )
    _emit(report.to_json(), args.out)
    return EXIT_OK


def _ratios_from_report(path) -> list[HarmonicRatio]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        entries = payload["ratios"]
    except (KeyError, TypeError):
        raise ParameterError(f"{path} is not an analysis report (no 'ratios' field)") from None
    return [HarmonicRatio(int(e["l"]), float(e["value_db"]), e.get("channel", "")) for e in entries]


def cmd_classify(args) -> int:
    table = load_table(args.table) if args.table else load_reference_table()
    if str(args.input).endswith(".json"):
        ratios = _ratios_from_report(args.input)
    else:
        config = _load_config(args)
        ts = _ingest_one(args.input, args.channel or None)
        report = analyze_series(ts, config, input_meta=input_metadata(ts, path=args.input))
        ratios = report.ratios
    result = classify_features(ratios, table)
    alarmed = alarm_check(ratios, table, args.threshold)
    payload = {
        "classification": result.to_dict(),
        "alarm": alarmed,
        "threshold_db": args.threshold,
        "table_id": table.table_id,
        "channel": ratios[0].channel if ratios else "",
        "ratios": [{"l": r.l, "value_db": r.value_db, "channel": r.channel} for r in ratios],
    }
    _emit(canonical_json(payload), args.out)
    return EXIT_ALARM if alarmed else EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from boltscope.service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boltscope", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="render an excitation to WAV or CSV")
    g.add_argument("--kind", required=True, choices=["tone", "fm", "sweep", "bandnoise"])
    g.add_argument("--amplitude", type=float, default=1.0)
    g.add_argument("--duration", type=float, default=1.0, help="seconds")
    g.add_argument("--sample-rate", type=float, default=DEFAULT_SAMPLE_RATE)
    g.add_argument("--freq", type=float, help="tone frequency [Hz]")
    g.add_argument("--carrier", type=float, help="FM carrier frequency [Hz]")
    g.add_argument("--mod-freq", type=float, help="FM modulation frequency [Hz]")
    g.add_argument("--deviation", type=float, help="FM peak frequency deviation [Hz]")
    g.add_argument("--f-start", type=float, help="sweep start frequency [Hz]")
    g.add_argument("--f-end", type=float, help="sweep end frequency [Hz]")
    g.add_argument("--f-lo", type=float, help="noise band lower edge [Hz]")
    g.add_argument("--f-hi", type=float, help="noise band upper edge [Hz]")
    g.add_argument("--seed", type=int, default=None, help="noise seed (default: BOLTSCOPE_SEED or 0)")
    g.add_argument("--format", choices=["wav", "csv"], default="wav")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="synthesize a joint-response dataset")
    s.add_argument("--preload", type=float, nargs="+", default=[0.0, 0.2, 0.4, 0.8])
    s.add_argument("--seeds", type=int, nargs="+", default=None)
    s.add_argument("--amplitude", type=float, default=200.0, help="protocol drive amplitude")
    s.add_argument("--duration", type=float, default=8.0, help="seconds per record")
    s.add_argument("--sample-rate", type=float, default=DEFAULT_SAMPLE_RATE)
    s.add_argument("--noise-floor", type=float, default=1e-4, help="sensor noise rms")
    s.add_argument("--damping-ratio", type=float, default=0.02)
    s.add_argument("--slip-force", type=float, default=120.0)
    s.add_argument("--clearance", type=float, default=2e-4)
    s.add_argument("--protocol-file", help="JSON array of excitation specs")
    s.add_argument("--out", required=True, help="dataset directory")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="PSD, peaks, resonance, and harmonic ratios")
    a.add_argument("input", help="WAV or CSV recording")
    a.add_argument("--config", help="analysis config JSON")
    a.add_argument("--channel", help="channel to analyze (required for multi-channel files)")
    a.add_argument("--out", help="report path (default: stdout)")
    a.add_argument("--psd-csv", help="also export the PSD as CSV")
    a.add_argument("--peaks-csv", help="also export detected peaks as CSV")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("compare", help="analyze against a reference recording")
    c.add_argument("input")
    c.add_argument("reference")
    c.add_argument("--config")
    c.add_argument("--channel")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("classify", help="map harmonic ratios to a preload state")
    k.add_argument("input", help="analysis report JSON, or a WAV/CSV recording")
    k.add_argument("--table", help="reference table JSON (default: bundled)")
    k.add_argument("--threshold", type=float, default=6.0, help="alarm threshold [dB]")
    k.add_argument("--config", help="analysis config JSON (signal input only)")
    k.add_argument("--channel")
    k.add_argument("--out")
    k.set_defaults(func=cmd_classify)

    v = sub.add_parser("serve", help="run the HTTP analysis service")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8000)
    v.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except BoltscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON input ({exc})", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
