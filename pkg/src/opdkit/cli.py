"""Command-line interface.

Subcommands: ``decompose`` (one utterance), ``dsa`` and ``oa`` (parameter
sweeps over a corpus manifest), ``mix`` (SNR-controlled mixture synthesis),
``enhance`` (baseline enhancement over a corpus).  ``opdkit --self-test``
runs the randomized invariant suite.

Exit codes: 0 success, 1 validation/I-O error, 2 numerical failure.
"""

import argparse
import glob
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .analysis import DsaPoint, OaPoint, dsa_sweep, oa_sweep
from .decomposition import Decomposer, export_components
from .enhance import ENHANCE_METHODS, EnhanceConfig, enhance
from .metrics import compute_metrics
from .projection import DEFAULT_MAX_DELAY
from .reporting import (AGGREGATION_MODE, RunManifest, UtteranceTriplet,
                        load_corpus_manifest, load_triplet, summarize_rows,
                        write_corpus_manifest, write_run_manifest,
                        write_summary_csv, write_sweep_csv)
from .selftest import run_property_suite
from .signals import MixtureSpec, Waveform, add, mix_at_snr
from .svgplot import Series, line_plot, write_plot
from .wavio import read_wav, write_wav

DEFAULT_DSA_GRID = "0:1.5:0.25"
DEFAULT_OA_GRID = "0:1.5:0.1"


def parse_grid(text: str) -> list[float]:
    """Parse 'start:stop:step' (inclusive) or a comma-separated value list."""
    if ":" in text:
        fields = text.split(":")
        if len(fields) != 3:
            raise ValueError(f"bad grid {text!r}: expected start:stop:step")
        start, stop, step = (float(v) for v in fields)
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid {text!r}: need step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(v) for v in text.split(",")]


def _method_config(args) -> dict | None:
    if not getattr(args, "method", None):
        return None
    return {
        "method": args.method,
        "frame_len": args.frame_len,
        "hop": args.hop,
        "oversubtraction": args.oversubtraction,
        "mask_threshold_db": args.mask_threshold_db,
    }


def _prepare_utterance(triplet: UtteranceTriplet, method_cfg: dict | None):
    """Load one triplet and return (s, n, y, s_hat), enhancing on the fly
    with the configured stub when the triplet has no enhanced file."""
    s, n, s_hat = load_triplet(triplet)
    y = add(s, n)
    if s_hat is None:
        if method_cfg is None:
            raise ValueError(f"{triplet.utterance_id}: no enhanced_path in manifest "
                             "and no --method given")
        s_hat = enhance(y, s, n, EnhanceConfig(**method_cfg))
    return s, n, y, s_hat


def _oa_task(payload) -> dict:
    triplet, max_delay, grid, method_cfg = payload
    try:
        s, n, y, s_hat = _prepare_utterance(triplet, method_cfg)
        dec = Decomposer(s, n, max_delay)
        result = oa_sweep(s_hat, y, s, n, max_delay, [OaPoint(v) for v in grid],
                          utterance_id=triplet.utterance_id, decomposer=dec)
        return {"utterance_id": triplet.utterance_id, "rows": result.rows,
                "events": list(dec.regularization_events), "error": None}
    except Exception as exc:  # noqa: BLE001 - tagged into the report
        return {"utterance_id": triplet.utterance_id, "rows": (),
                "events": [], "error": f"{type(exc).__name__}: {exc}"}


def _dsa_task(payload) -> dict:
    triplet, max_delay, grid, method_cfg = payload
    try:
        s, n, _, s_hat = _prepare_utterance(triplet, method_cfg)
        dec = Decomposer(s, n, max_delay)
        points = [DsaPoint(wn, wa) for wn in grid for wa in grid]
        result = dsa_sweep(dec.decompose(s_hat), points,
                           utterance_id=triplet.utterance_id)
        return {"utterance_id": triplet.utterance_id, "rows": result.rows,
                "events": list(dec.regularization_events), "error": None}
    except Exception as exc:  # noqa: BLE001
        return {"utterance_id": triplet.utterance_id, "rows": (),
                "events": [], "error": f"{type(exc).__name__}: {exc}"}


def _run_corpus(task, payloads, workers: int) -> list[dict]:
    if workers <= 1:
        return [task(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, payloads, chunksize=1))


def _collect(results):
    rows, events, errors = [], [], []
    for result in results:
        rows.extend(result["rows"])
        events.extend(result["events"])
        if result["error"]:
            errors.append({"utterance_id": result["utterance_id"],
                           "error": result["error"]})
    if not rows:
        messages = "; ".join(e["error"] for e in errors)
        raise ValueError(f"every utterance failed: {messages}")
    return rows, events, errors


def _metric_series(rows, summary, x_field: str, metric: str) -> list[Series]:
    series = []
    by_utterance: dict[str, list] = {}
    for row in rows:
        by_utterance.setdefault(row.utterance_id, []).append(row)
    for utt_rows in by_utterance.values():
        utt_rows = sorted(utt_rows, key=lambda r: getattr(r, x_field))
        series.append(Series("", [getattr(r, x_field) for r in utt_rows],
                             [getattr(r.metrics, metric) for r in utt_rows],
                             color="#bbbbbb", width=1.0, opacity=0.7))
    series.append(Series("corpus mean", [rec[x_field] for rec in summary],
                         [rec[metric] for rec in summary], color="#d62728",
                         width=2.5))
    return series


def cmd_decompose(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    utterance_id = args.id or os.path.splitext(os.path.basename(args.speech))[0]
    triplet = UtteranceTriplet(utterance_id=utterance_id, speech_path=args.speech,
                               noise_path=args.noise, enhanced_path=args.enhanced)
    s, n, _, s_hat = _prepare_utterance(triplet, _method_config(args))
    dec = Decomposer(s, n, args.max_delay)
    d = dec.decompose(s_hat)
    report = compute_metrics(d)
    export_components(d, args.out, utterance_id)
    with open(os.path.join(args.out, f"{utterance_id}.metrics.json"), "w",
              encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_run_manifest(args.out, RunManifest(
        command="decompose",
        parameters={"speech": args.speech, "noise": args.noise,
                    "enhanced": args.enhanced, "method": args.method,
                    "utterance_id": utterance_id},
        max_delay=args.max_delay,
        aggregation="per-utterance",
        regularization_events=list(dec.regularization_events),
    ))
    print(f"{utterance_id}: SDR {report.sdr_db:.2f} dB, SNR {report.snr_db:.2f} dB, "
          f"SAR {report.sar_db:.2f} dB -> {args.out}")
    return 0


def _cmd_sweep(args, task, grid_text_default: str, name: str) -> int:
    os.makedirs(args.out, exist_ok=True)
    grid = parse_grid(args.grid or grid_text_default)
    triplets = load_corpus_manifest(args.corpus)
    method_cfg = _method_config(args)
    payloads = [(t, args.max_delay, grid, method_cfg) for t in triplets]
    rows, events, errors = _collect(_run_corpus(task, payloads, args.workers))
    summary = summarize_rows(rows)

    write_sweep_csv(os.path.join(args.out, f"{name}.csv"), rows, errors)
    write_summary_csv(os.path.join(args.out, f"{name}_summary.csv"), summary)

    if name == "oa":
        for metric in ("sdr_db", "snr_db", "sar_db"):
            label = metric[:3].upper()
            svg = line_plot(f"{label} vs observation-adding amount", "omega_obs",
                            f"{label} [dB]",
                            _metric_series(rows, summary, "omega_obs", metric))
            write_plot(os.path.join(args.out, f"oa_{metric[:3]}.svg"), svg)
    else:
        for axis, fixed in (("omega_noise", "omega_artif"),
                            ("omega_artif", "omega_noise")):
            slice_rows = [r for r in rows if getattr(r, fixed) == 1.0]
            if not slice_rows:
                continue
            slice_summary = summarize_rows(slice_rows)
            for metric in ("sdr_db", "snr_db", "sar_db"):
                label = metric[:3].upper()
                svg = line_plot(f"{label} vs {axis} ({fixed}=1.0)", axis,
                                f"{label} [dB]",
                                _metric_series(slice_rows, slice_summary, axis, metric))
                write_plot(os.path.join(args.out, f"dsa_{metric[:3]}_vs_{axis}.svg"), svg)

    write_run_manifest(args.out, RunManifest(
        command=name,
        parameters={"corpus": args.corpus, "grid": grid,
                    "method": getattr(args, "method", None),
                    "workers": args.workers},
        max_delay=args.max_delay,
        aggregation=AGGREGATION_MODE,
        regularization_events=events,
        errors=errors,
    ))
    done = len(triplets) - len(errors)
    print(f"{name}: {done}/{len(triplets)} utterances, {len(rows)} rows -> {args.out}")
    if errors:
        for err in errors:
            print(f"  failed {err['utterance_id']}: {err['error']}", file=sys.stderr)
    return 0


def cmd_dsa(args) -> int:
    return _cmd_sweep(args, _dsa_task, DEFAULT_DSA_GRID, "dsa")


def cmd_oa(args) -> int:
    return _cmd_sweep(args, _oa_task, DEFAULT_OA_GRID, "oa")


def _fit_length(w: Waveform, length: int, rng: np.random.Generator) -> Waveform:
    samples = w.samples
    if len(samples) < length:
        samples = np.tile(samples, -(-length // len(samples)))
    offset = int(rng.integers(0, len(samples) - length + 1))
    return Waveform(samples[offset:offset + length], w.sample_rate)


def _list_wavs(directory: str) -> list[str]:
    files = sorted(glob.glob(os.path.join(directory, "*.wav")))
    if not files:
        raise ValueError(f"no WAV files found in {directory!r}")
    return files


def cmd_mix(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    speech_files = _list_wavs(args.speech_dir)
    noise_files = _list_wavs(args.noise_dir)
    rng = np.random.default_rng(args.seed)
    spec = MixtureSpec(target_snr_db=args.snr)
    triplets = []
    for speech_path in speech_files:
        utterance_id = os.path.splitext(os.path.basename(speech_path))[0]
        s = read_wav(speech_path)
        noise_path = noise_files[int(rng.integers(len(noise_files)))]
        n_raw = read_wav(noise_path)
        if n_raw.sample_rate != s.sample_rate:
            raise ValueError(f"{utterance_id}: noise rate {n_raw.sample_rate} "
                             f"!= speech rate {s.sample_rate}")
        n = _fit_length(n_raw, len(s), rng)
        y, n_scaled = mix_at_snr(s, n, spec)
        names = {"speech": f"{utterance_id}.speech.wav",
                 "noise": f"{utterance_id}.noise.wav",
                 "mix": f"{utterance_id}.mix.wav"}
        write_wav(os.path.join(args.out, names["speech"]), s)
        write_wav(os.path.join(args.out, names["noise"]), n_scaled)
        write_wav(os.path.join(args.out, names["mix"]), y)
        triplets.append(UtteranceTriplet(utterance_id=utterance_id,
                                         speech_path=names["speech"],
                                         noise_path=names["noise"]))
    write_corpus_manifest(os.path.join(args.out, "corpus.jsonl"), triplets)
    write_run_manifest(args.out, RunManifest(
        command="mix",
        parameters={"speech_dir": args.speech_dir, "noise_dir": args.noise_dir,
                    "snr_db": args.snr, "seed": args.seed},
        max_delay=None,
        aggregation="per-utterance",
    ))
    print(f"mix: {len(triplets)} mixtures at {args.snr} dB -> {args.out}")
    return 0


def cmd_enhance(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    triplets = load_corpus_manifest(args.corpus)
    cfg = EnhanceConfig(**_method_config(args))
    out_triplets = []
    for triplet in triplets:
        s, n, _ = load_triplet(triplet)
        s_hat = enhance(add(s, n), s, n, cfg)
        enhanced_name = f"{triplet.utterance_id}.enhanced.wav"
        write_wav(os.path.join(args.out, enhanced_name), s_hat)
        out_triplets.append(UtteranceTriplet(
            utterance_id=triplet.utterance_id,
            speech_path=os.path.relpath(triplet.speech_path, args.out),
            noise_path=os.path.relpath(triplet.noise_path, args.out),
            enhanced_path=enhanced_name,
        ))
    write_corpus_manifest(os.path.join(args.out, "corpus.jsonl"), out_triplets)
    write_run_manifest(args.out, RunManifest(
        command="enhance",
        parameters={"corpus": args.corpus, **_method_config(args)},
        max_delay=None,
        aggregation="per-utterance",
    ))
    print(f"enhance[{args.method}]: {len(out_triplets)} utterances -> {args.out}")
    return 0


def _add_method_options(parser, required: bool = False) -> None:
    parser.add_argument("--method", choices=ENHANCE_METHODS, required=required,
                        default=None,
                        help="enhancement stub to run when no enhanced file exists")
    parser.add_argument("--frame-len", type=int, default=512)
    parser.add_argument("--hop", type=int, default=256)
    parser.add_argument("--oversubtraction", type=float, default=2.0)
    parser.add_argument("--mask-threshold-db", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opdkit",
        description="Decompose enhanced speech into target/noise/artifact parts, "
                    "compute SDR/SNR/SAR, and run error-scaling or "
                    "observation-adding sweeps.")
    parser.add_argument("--version", action="version", version=f"opdkit {__version__}")
    parser.add_argument("--self-test", action="store_true",
                        help="run the randomized invariant suite and exit")
    parser.add_argument("--self-test-cases", type=int, default=200)
    parser.add_argument("--self-test-seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("decompose", help="decompose one utterance and report metrics")
    p.add_argument("--speech", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--enhanced", default=None)
    p.add_argument("--id", default=None)
    p.add_argument("--max-delay", "-L", type=int, default=DEFAULT_MAX_DELAY)
    p.add_argument("--out", required=True)
    _add_method_options(p)
    p.set_defaults(func=cmd_decompose)

    for name, help_text, default_grid in (
            ("dsa", "sweep error-component scalings over a corpus", DEFAULT_DSA_GRID),
            ("oa", "sweep observation-adding amounts over a corpus", DEFAULT_OA_GRID)):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--corpus", required=True, help="corpus manifest (JSON lines)")
        p.add_argument("--grid", default=None,
                       help=f"start:stop:step or comma list (default {default_grid})")
        p.add_argument("--max-delay", "-L", type=int, default=DEFAULT_MAX_DELAY)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", required=True)
        _add_method_options(p)
        p.set_defaults(func=cmd_dsa if name == "dsa" else cmd_oa)

    p = sub.add_parser("mix", help="synthesize SNR-controlled mixtures")
    p.add_argument("--speech-dir", required=True)
    p.add_argument("--noise-dir", required=True)
    p.add_argument("--snr", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("enhance", help="run a baseline enhancer over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_method_options(p, required=True)
    p.set_defaults(func=cmd_enhance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.self_test:
        report = run_property_suite(args.self_test_cases, args.self_test_seed)
        for line in report.lines():
            print(line)
        return 0 if report.passed else 2
    if not getattr(args, "func", None):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
