"""Command-line interface: ``pideg {render,sweep,audio,analyze}``.

Exit status is 0 on success, 2 for invalid flags or unreadable inputs and
1 for runtime failures such as numeric blow-up. Output files are written
through a temporary file, so a failed run never leaves a partial file.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as pio
from .analysis import MIN_FINITE_TAIL, analyze_trace, is_finite_envelope
from .engine import NumericBlowUp, PidegParams, TakeoverConfig, run_envelope
from .gate import GateSpecError, gate_from_spec
from .lc import Adsr, External, InverseExp, Trapezoid
from .presets import FIGURES

FIGURE_CHOICES = [str(k) for k in sorted(FIGURES)]


def _nonneg(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v >= 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a non-negative finite number, got {text}")
    return v


def _positive(text):
    v = _nonneg(text)
    if v == 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _count(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _takeover(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected <min_samples>,<threshold>,<length>")
    try:
        return TakeoverConfig(int(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _window(text):
    parts = text.split(",")
    try:
        start, end = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("expected <start_s>,<end_s>") from None
    if not end > start >= 0:
        raise argparse.ArgumentTypeError("window needs 0 <= start < end")
    return start, end


def _add_render_flags(p, out_required):
    p.add_argument("--kp", type=_nonneg, default=0.0)
    p.add_argument("--ki", type=_nonneg, default=0.0)
    p.add_argument("--kd", type=_nonneg, default=0.0)
    p.add_argument("--kr", type=_positive, default=100.0)
    p.add_argument("--kf", type=_positive, default=100.0)
    p.add_argument("--lc", default="invexp",
                   help="invexp, trap, adsr or file:<path> (single-column CSV)")
    p.add_argument("--attack", type=_nonneg, default=0.1, help="ADSR attack (s)")
    p.add_argument("--decay", type=_nonneg, default=0.1, help="ADSR decay (s)")
    p.add_argument("--sustain", type=_nonneg, default=0.7, help="ADSR sustain level")
    p.add_argument("--release", type=_nonneg, default=0.2, help="ADSR release (s)")
    p.add_argument("--gate", default="on:1,off:1", help="e.g. on:1,off:0.5")
    p.add_argument("--fs", type=_positive, default=1000.0)
    p.add_argument("--windup", choices=("on", "off"), default="off")
    p.add_argument("--d-off", type=_count, default=None, dest="d_off")
    p.add_argument("--i-off", type=_count, default=None, dest="i_off")
    p.add_argument("--takeover", type=_takeover, default=None,
                   help="<min_keyoff_samples>,<eo_threshold>,<length>")
    p.add_argument("--gain-ceiling", type=_nonneg, default=None, dest="gain_ceiling")
    p.add_argument("--gain-rate", type=_positive, default=None, dest="gain_rate",
                   help="rate that scales ki and kd (default: --fs; 1 = per-sample gains)")
    p.add_argument("--out", required=out_required, default=None, help="trace CSV path")


def build_parser():
    parser = argparse.ArgumentParser(prog="pideg", description="PID envelope generator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render an envelope trace to CSV")
    _add_render_flags(p, out_required=True)

    p = sub.add_parser("sweep", help="regenerate a figure's parameter sweep")
    p.add_argument("--figure", required=True, choices=FIGURE_CHOICES)
    p.add_argument("--outdir", default=".")

    p = sub.add_parser("audio", help="render an envelope-modulated tone to WAV")
    _add_render_flags(p, out_required=False)
    p.add_argument("--tone", type=_positive, default=440.0)
    p.add_argument("--audio-fs", type=_count, default=44100, dest="audio_fs")
    p.add_argument("--amplitude", type=_positive, default=1.0)
    p.add_argument("--wav", required=True)

    p = sub.add_parser("analyze", help="print metrics for a trace CSV")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--window", type=_window, default=None)
    p.add_argument("--target", type=float, default=1.0)
    p.add_argument("--tol", type=_positive, default=0.01)
    p.add_argument("--eps", type=_positive, default=1e-3)
    p.add_argument("--json", action="store_true")
    return parser


def _resolve_run(parser, args):
    try:
        gate = gate_from_spec(args.gate, args.fs)
    except (GateSpecError, ValueError) as exc:
        parser.error(f"--gate: {exc}")
    try:
        if args.lc == "invexp":
            lc = InverseExp(args.kr, args.kf)
        elif args.lc == "trap":
            lc = Trapezoid(args.kr, args.kf)
        elif args.lc == "adsr":
            lc = Adsr(args.attack, args.decay, args.sustain, args.release)
        elif args.lc.startswith("file:"):
            lc = pio.load_lc_csv(args.lc[len("file:"):])
        else:
            parser.error(f"--lc: unknown source {args.lc!r}")
        if isinstance(lc, External) and len(lc) < gate.total_samples:
            parser.error(f"--lc: buffer has {len(lc)} samples, gate needs {gate.total_samples}")
        params = PidegParams(
            kp=args.kp, ki=args.ki, kd=args.kd, windup=args.windup == "on",
            gain_ceiling=args.gain_ceiling, i_disable_after_keyoff=args.i_off,
            d_disable_after_keyoff=args.d_off, takeover=args.takeover,
            gain_rate=args.gain_rate,
        )
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    return gate, lc, params


def _summary(trace):
    off = trace.keyoff_start()
    if off is None or len(trace) - off < MIN_FINITE_TAIL:
        tail = "n/a"
    else:
        tail = "finite" if is_finite_envelope(trace.eo, off) else "never-settling"
    return f"samples={len(trace)} peak_eo={pio.format_real(trace.eo.max())} tail={tail}"


def _fail(message):
    print(f"pideg: error: {message}", file=sys.stderr)
    return 1


def cmd_render(parser, args):
    gate, lc, params = _resolve_run(parser, args)
    try:
        trace = run_envelope(gate, lc, params, args.fs)
        pio.write_trace_csv(trace, args.out)
    except (NumericBlowUp, OSError) as exc:
        return _fail(exc)
    print(f"{args.out}: {_summary(trace)}")
    return 0


def cmd_audio(parser, args):
    gate, lc, params = _resolve_run(parser, args)
    try:
        cfg = pio.RenderConfig(fs=args.fs, audio_fs=args.audio_fs, tone_hz=args.tone,
                               amplitude=args.amplitude)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        trace = run_envelope(gate, lc, params, args.fs)
        if args.out:
            pio.write_trace_csv(trace, args.out)
        pio.render_wav(trace, cfg, args.wav)
    except (NumericBlowUp, OSError) as exc:
        return _fail(exc)
    print(f"{args.wav}: {_summary(trace)}")
    return 0


def cmd_sweep(parser, args):
    from .presets import figure_presets

    outdir = Path(args.outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        parser.error(f"--outdir: {exc}")
    for preset in figure_presets(int(args.figure)):
        try:
            trace = run_envelope(preset.gate_signal(), preset.lc, preset.params, preset.fs)
            pio.write_trace_csv(trace, outdir / f"{preset.name}.csv")
        except (NumericBlowUp, OSError) as exc:
            return _fail(f"{preset.name}: {exc}")
        report = analyze_trace(trace)
        print(f"{preset.name} {json.dumps(report, sort_keys=True)}")
    return 0


def cmd_analyze(parser, args):
    try:
        trace = pio.read_trace_csv(args.infile)
        report = analyze_trace(trace, window=args.window, target=args.target,
                               tol=args.tol, eps=args.eps)
    except (OSError, ValueError) as exc:
        parser.error(f"--in: {exc}")
    if args.json:
        print(json.dumps(report, sort_keys=True))
    else:
        for key in sorted(report):
            print(f"{key}: {report[key]}")
    return 0


COMMANDS = {"render": cmd_render, "sweep": cmd_sweep, "audio": cmd_audio, "analyze": cmd_analyze}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return COMMANDS[args.command](parser, args)


if __name__ == "__main__":
    sys.exit(main())
