"""Command-line entry point: ``polardet <subcommand> ...``.

Exit codes: 0 success, 1 data violation (bad file, failed conversion,
invalid manifest), 2 usage error.
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .dataset import DatasetManifest, stats, subsample, validate
from .encoding import NORM_MODES, ChannelCombo, PolarImage, encode_combo, write_encoded
from .evaluation import EvalConfig, evaluate, load_detections
from .exceptions import PolarDetError, SchemaError
from .io import read_raw, write_pgm, write_png16
from .mosaic import DEFAULT_LAYOUT, MosaicLayout, split
from .synth import SceneSpec, quantize, render_raw, truth_manifest

log = logging.getLogger("polardet")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


@dataclass
class PipelineConfig:
    layout: MosaicLayout = DEFAULT_LAYOUT
    combos: tuple = (ChannelCombo.STOKES,)
    norm: str = "fixed"
    out_dir: Path = Path(".")
    bit_depth: int = None  # None: take it from each file's sample range
    channels: tuple = None

    def __post_init__(self):
        self.layout = MosaicLayout.parse(self.layout)
        self.combos = tuple(ChannelCombo.parse(c) for c in self.combos)
        if self.norm not in NORM_MODES:
            raise PolarDetError(f"norm must be one of {NORM_MODES}, got {self.norm!r}")
        self.out_dir = Path(self.out_dir)


@dataclass
class BatchResult:
    written: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def to_dict(self):
        return {
            "written": [str(p) for p in self.written],
            "failures": [{"input": str(i), "error": e} for i, e in self.failures],
        }


def _run_batch(inputs, worker, jobs=1):
    """Apply ``worker`` to every input, collecting failures instead of stopping."""

    def guarded(path):
        try:
            return worker(Path(path)), None
        except (PolarDetError, OSError) as e:
            return [], f"{type(e).__name__}: {e}"

    result = BatchResult()
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        outcomes = list(pool.map(guarded, inputs))
    for path, (written, error) in zip(inputs, outcomes):
        if error is None:
            result.written.extend(written)
        else:
            log.warning("%s: %s", path, error)
            result.failures.append((path, error))
    return result


def run_convert(inputs, config, jobs=1):
    """Raw frames -> one PNG plus JSON sidecar per input and combo."""
    config.out_dir.mkdir(parents=True, exist_ok=True)

    def convert_one(path):
        raw = read_raw(path)
        quad = split(raw.data, config.layout)
        bit_depth = config.bit_depth or raw.bit_depth
        image = PolarImage.from_quad(quad)
        written = []
        for combo in config.combos:
            channels = config.channels if config.channels and sorted(config.channels) == sorted(combo.channels) else None
            enc = encode_combo(image, combo, bit_depth=bit_depth, norm=config.norm, channels=channels)
            png = config.out_dir / f"{path.stem}_{combo.value}.png"
            written.extend(write_encoded(enc, png, source=path))
        return written

    return _run_batch(list(inputs), convert_one, jobs)


def run_demosaic(inputs, out_dir, layout=DEFAULT_LAYOUT, jobs=1):
    """Raw frames -> four 16-bit PNG planes per input (``<stem>_i0.png`` ...)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def demosaic_one(path):
        quad = split(read_raw(path).data, layout)
        written = []
        for name, plane in zip(PolarImage.INTENSITY_PLANES, quad):
            target = out_dir / f"{path.stem}_{name}.png"
            write_png16(target, plane)
            written.append(target)
        return written

    return _run_batch(list(inputs), demosaic_one, jobs)


def run_synth(spec_path, out_dir, layout=DEFAULT_LAYOUT, seed=None):
    """Render a scene spec to ``<name>_raw.pgm`` (and a truth manifest if labelled)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = SceneSpec.load(spec_path)
    if seed is not None:
        spec.seed = seed
    raw = quantize(render_raw(spec, layout), spec.bit_depth)
    raw_path = out_dir / f"{spec.name}_raw.pgm"
    write_pgm(raw_path, raw, maxval=2 ** spec.bit_depth - 1)
    result = BatchResult(written=[raw_path])
    if any(r.class_label for r in spec.regions):
        manifest_path = out_dir / f"{spec.name}_manifest.json"
        truth_manifest(spec, image_path=raw_path.name).save(manifest_path)
        result.written.append(manifest_path)
    return result


def run_eval(gt, dets, baseline=None, iou=0.5, ap_mode="allpoint", data_format=None):
    manifest = DatasetManifest.load(gt)
    config = EvalConfig(iou_thresh=iou, ap_mode=ap_mode, data_format=data_format)
    return evaluate(manifest, load_detections(dets), config, baseline)


def run_stats(paths, min_count=30):
    return stats(*(DatasetManifest.load(p) for p in paths), min_count=min_count)


def run_validate(path):
    return validate(DatasetManifest.load(path))


def run_subsample(frame_ids, stride):
    return subsample(frame_ids, stride)


# -- argument parsing --------------------------------------------------------


def _layout(text):
    try:
        return MosaicLayout.parse(text)
    except PolarDetError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _add_global_flags(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--layout", type=_layout, default=default(str(DEFAULT_LAYOUT)),
                        help="superpixel angles, row-major (default 0,45,135,90)")
    parser.add_argument("--combo", action="append", default=default(None),
                        help="intensity | stokes | physics | all; repeatable")
    parser.add_argument("--norm", choices=NORM_MODES, default=default("fixed"))
    parser.add_argument("--json", action="store_true", default=default(False),
                        help="machine-readable JSON on stdout")
    parser.add_argument("--seed", type=int, default=default(None), help="override the scene seed (synth)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polardet",
        description="Polarimetric DoFP frame encoding, dataset curation and detection evaluation.",
        epilog="exit codes: 0 success, 1 data violation, 2 usage error",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, suppress=True)

    p = sub.add_parser("demosaic", parents=[common], help="split raw frames into four angle planes")
    p.add_argument("inputs", nargs="*", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("convert", parents=[common], help="encode raw frames as 8-bit channel combinations")
    p.add_argument("inputs", nargs="*", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--bit-depth", type=int, default=None, help="sensor bit depth (default: from file)")
    p.add_argument("--channels", default=None, help="reorder a combo's channels, e.g. s0,dop,aop")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("subsample", parents=[common], help="keep one frame out of N")
    p.add_argument("frames", nargs="?", type=Path, help="file with one frame id per line (default stdin)")
    p.add_argument("--stride", type=int, default=25)

    p = sub.add_parser("validate", parents=[common], help="check a dataset manifest")
    p.add_argument("manifest", type=Path)

    p = sub.add_parser("stats", parents=[common], help="count annotations per split and class")
    p.add_argument("manifests", nargs="+", type=Path)
    p.add_argument("--min-count", type=int, default=30)

    p = sub.add_parser("eval", parents=[common], help="evaluate detections against ground truth")
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--dets", type=Path, required=True)
    p.add_argument("--baseline", type=Path, default=None)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--ap-mode", choices=("allpoint", "11point"), default="allpoint")
    p.add_argument("--format", dest="data_format", default=None, help="data-format tag stored in the report")
    p.add_argument("--out", type=Path, default=None, help="write the JSON report here")
    p.add_argument("--csv", type=Path, default=None, help="write a CSV summary here")

    p = sub.add_parser("synth", parents=[common], help="render a synthetic scene to a raw frame")
    p.add_argument("--spec", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _combos(values):
    if not values:
        return (ChannelCombo.STOKES,)
    if any(v.lower() == "all" for v in values):
        return tuple(ChannelCombo)
    return tuple(ChannelCombo.parse(v) for v in values)


def _emit(args, payload, text):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    elif text:
        print(text)


def _batch_text(result):
    lines = [f"wrote {p}" for p in result.written]
    lines += [f"FAILED {i}: {e}" for i, e in result.failures]
    return "\n".join(lines)


def _dispatch(args):
    cmd = args.command
    if cmd in ("convert", "demosaic") and args.jobs < 1:
        raise _UsageError("--jobs must be at least 1")
    if cmd == "convert":
        channels = tuple(c.strip() for c in args.channels.split(",")) if args.channels else None
        config = PipelineConfig(args.layout, _combos(args.combo), args.norm, args.out, args.bit_depth, channels)
        result = run_convert(args.inputs, config, args.jobs)
        _emit(args, result.to_dict(), _batch_text(result))
        return EXIT_OK if result.ok else EXIT_DATA
    if cmd == "demosaic":
        result = run_demosaic(args.inputs, args.out, MosaicLayout.parse(args.layout), args.jobs)
        _emit(args, result.to_dict(), _batch_text(result))
        return EXIT_OK if result.ok else EXIT_DATA
    if cmd == "synth":
        result = run_synth(args.spec, args.out, MosaicLayout.parse(args.layout), args.seed)
        _emit(args, result.to_dict(), _batch_text(result))
        return EXIT_OK
    if cmd == "subsample":
        if args.stride < 1:
            raise _UsageError("--stride must be a positive integer")
        text = args.frames.read_text() if args.frames else sys.stdin.read()
        frames = [line.strip() for line in text.splitlines() if line.strip()]
        kept = run_subsample(frames, args.stride)
        _emit(args, {"stride": args.stride, "n_input": len(frames), "kept": kept}, "\n".join(kept))
        return EXIT_OK
    if cmd == "validate":
        violations = run_validate(args.manifest)
        payload = {"valid": not violations, "violations": [v.to_dict() for v in violations]}
        _emit(args, payload, "\n".join(map(str, violations)) or "manifest is valid")
        return EXIT_OK if not violations else EXIT_DATA
    if cmd == "stats":
        result = run_stats(args.manifests, args.min_count)
        _emit(args, result.to_dict(), _stats_text(result))
        return EXIT_OK
    if cmd == "eval":
        report = run_eval(args.gt, args.dets, args.baseline, args.iou, args.ap_mode, args.data_format)
        if args.out:
            args.out.write_text(report.to_json())
        if args.csv:
            args.csv.write_text(report.to_csv())
        if args.json:
            sys.stdout.write(report.to_json())
        else:
            print(report.to_csv(), end="")
        return EXIT_OK
    raise _UsageError(f"unknown command {cmd!r}")


def _stats_text(result):
    splits = sorted(result.counts)
    classes = list(result.totals)
    rows = [["class", *splits]] + [[c, *(str(result.counts[s].get(c, 0)) for s in splits)] for c in classes]
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    if result.insufficient:
        lines.append(f"insufficient (< {result.min_count}): {', '.join(result.insufficient)}")
    return "\n".join(lines)


class _UsageError(Exception):
    pass


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except _UsageError as e:
        parser.error(str(e))
    except SchemaError as e:
        for problem in e.problems:
            log.error("%s", problem)
        log.error("%s", e)
        return EXIT_DATA
    except (PolarDetError, OSError) as e:
        log.error("%s: %s", type(e).__name__, e)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
