"""Command-line front end: ``opplod {synth,run,tuning,rmo}``.

Exit status is 0 on success, 1 on usage errors and 2 on data, format or
I/O errors.  Every error goes to stderr as ``ERROR <code>: <message>``.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from . import io_cli
from .errors import InvalidInput, OppLoDError, UsageError
from .pipeline import DLGMD, OppLoD
from .rmo import DEFAULT_TOLERANCE, rmo_batch
from .stimuli import render, tuning_sweep

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="opplod", description="Looming detection on grayscale frame sequences.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", help="render a synthetic stimulus to PGM frames")
    p.add_argument("--spec", required=True, help="stimulus config file")
    p.add_argument("--out", required=True, help="output directory (or .raw file)")

    p = sub.add_parser("run", help="run a model over a frame sequence, write a response CSV")
    p.add_argument("--config", help="model config file")
    p.add_argument("--in", dest="input", help="frame directory or .raw file")
    p.add_argument("--model", choices=io_cli.MODELS)
    p.add_argument("--out", help="output CSV")
    p.add_argument("--normalize", action="store_true", help="divide each response column by its max")

    p = sub.add_parser("tuning", help="peak responses of a bar sweep over expansion angles")
    p.add_argument("--spec", required=True, help="stimulus config file")
    p.add_argument("--angles", required=True, help="comma-separated angles in radians")
    p.add_argument("--config", help="model config file")
    p.add_argument("--out", required=True, help="output CSV")

    p = sub.add_parser("rmo", help="radial motion opponency of vector pairs")
    p.add_argument("--pairs", required=True, help="one pair per line: x1 y1 deg1 mag1 x2 y2 deg2 mag2")
    p.add_argument("--tolerance-deg", type=float, default=math.degrees(DEFAULT_TOLERANCE))
    p.add_argument("--out", required=True, help="output CSV")
    return ap


def run_models(seq, cfg: io_cli.RunConfig):
    grid = cfg.grid(seq.height, seq.width)
    models = []
    if cfg.model in ("opplod", "both"):
        models.append(OppLoD(seq.height, seq.width, cfg.dpc, cfg.mde, cfg.omj, cfg.enh, grid))
    if cfg.model in ("dlgmd", "both"):
        models.append(DLGMD(seq.height, seq.width, cfg.dpc))
    records = []
    for frame in seq:
        records.extend(m.step(frame) for m in models)
    return records


def cmd_synth(args):
    spec = io_cli.load_stimulus(args.spec)
    io_cli.save_sequence(render(spec), args.out)


def cmd_run(args):
    cfg = io_cli.RunConfig.load(args.config) if args.config else io_cli.RunConfig()
    overrides = {k: v for k, v in (("input", args.input), ("model", args.model), ("output", args.out)) if v}
    cfg = replace(cfg, **overrides)
    if cfg.input is None or cfg.output is None:
        raise UsageError("run needs an input (--in) and an output (--out)")
    seq = io_cli.load_sequence(cfg.input)
    if len(seq) < 2:
        raise InvalidInput("need at least 2 frames")
    io_cli.save_csv(run_models(seq, cfg), cfg.output, normalize=args.normalize)


def parse_angles(text):
    try:
        angles = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad angle list {text!r}") from None
    if not angles:
        raise UsageError("angle list is empty")
    return angles


def cmd_tuning(args):
    angles = sorted(parse_angles(args.angles))
    spec = io_cli.load_stimulus(args.spec)
    cfg = io_cli.RunConfig.load(args.config) if args.config else io_cli.RunConfig()
    cfg = replace(cfg, model="opplod")
    lines = ["angle,peak_response,peak_frame"]
    for angle, seq in zip(angles, tuning_sweep(spec, angles)):
        recs = [r for r in run_models(seq, cfg) if not r.warm_up]
        resp = np.array([r.response for r in recs]) if recs else np.zeros(1)
        k = int(np.argmax(resp))
        lines.append(f"{io_cli.fmt_num(angle)},{io_cli.fmt_num(resp[k])},{recs[k].t if recs else ''}")
    io_cli.write_text(args.out, lines)


def cmd_rmo(args):
    tol = math.radians(args.tolerance_deg)
    if not 0 < tol < math.pi / 2:
        raise UsageError("--tolerance-deg must lie in (0, 90)")
    ok, vals = rmo_batch(io_cli.load_pairs(args.pairs), tol)
    lines = ["pair_index,qualifies,rmo"]
    lines.extend(f"{i},{int(q)},{io_cli.fmt_num(v)}" for i, (q, v) in enumerate(zip(ok, vals)))
    io_cli.write_text(args.out, lines)


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "tuning": cmd_tuning, "rmo": cmd_rmo}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OppLoDError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
