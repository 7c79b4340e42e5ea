"""Command-line entry point: ``cellmix <command> ...``.

Exit codes: 0 ok, 2 usage or config, 3 file format, 4 domain error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import tbf
from .baselines import apply_to_batch
from .config import RunConfig
from .curriculum import current, make_state
from .errors import ConfigError, DomainError, FormatError
from .rng import Rng
from .shuffle import Provenance, ShuffleMode, augment_batch, fixed_count, soft_labels
from .sim import AugConfig, LossTrace, SyntheticLearner, corrupt_labels, run_controller, simulate_training
from .synthetic import generate_batch
from .tbf import Kind
from .tensor import ImageBatch, LabelBatch

log = logging.getLogger("cellmix")

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_DOMAIN = 0, 2, 3, 4


def _write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text)
    tmp.replace(path)
    log.debug("wrote %s", path)


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {}
    for name in ("policy", "threshold", "trigger_prob", "mode", "seed", "batch_size", "image_side", "loss_ema"):
        overrides[name] = getattr(args, name, None)
    if getattr(args, "patch_sizes", None):
        overrides["patch_sizes"] = args.patch_sizes
    if getattr(args, "fix_ratios", None):
        overrides["fix_ratios"] = args.fix_ratios
    cfg = cfg.override(**overrides)
    log.debug("run config: %s", cfg.to_dict())
    return cfg


def _read_labels(path, classes: int | None) -> LabelBatch:
    raw = tbf.read_kind(path, Kind.LABELS).astype(np.int64)
    cls = classes if classes is not None else max(2, int(raw.max()) + 1)
    return LabelBatch(raw, cls)


def _prefix_path(prefix: str, suffix: str) -> Path:
    path = Path(f"{prefix}.{suffix}")
    log.debug("output %s", path)
    return path


def read_loss_csv(path) -> LossTrace:
    """Losses from a CSV: one ``loss`` column, ``step,loss`` rows, or any header naming ``loss``."""
    column = None
    losses = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [cell.strip() for cell in row]
            if not row or all(not cell for cell in row) or row[0].startswith("#"):
                continue
            if column is None and not losses and "loss" in row:
                column = row.index("loss")
                continue
            if column is not None:
                if column >= len(row):
                    raise FormatError(f"{path}:{lineno}: missing loss column")
                cell = row[column]
            elif len(row) in (1, 2):
                cell = row[-1]
            else:
                raise FormatError(f"{path}:{lineno}: expected 'loss' or 'step,loss', got {len(row)} fields")
            try:
                value = float(cell)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: cannot parse loss {cell!r}") from None
            if not math.isfinite(value) or value < 0:
                raise FormatError(f"{path}:{lineno}: loss must be finite and non-negative, got {cell!r}")
            losses.append(value)
    if not losses:
        raise FormatError(f"{path}: no loss values")
    return LossTrace(tuple(losses))


def cmd_gen(args) -> int:
    rng = Rng(args.seed)
    images, labels = generate_batch(args.batch_size, args.channels, args.side, args.classes, rng)
    tbf.write_tbf(_prefix_path(args.out, "images.tbf"), Kind.IMAGES, images.data)
    tbf.write_tbf(_prefix_path(args.out, "labels.tbf"), Kind.LABELS, labels.labels.astype(np.uint32))
    return EXIT_OK


def cmd_augment(args) -> int:
    cfg = _load_config(args)
    images = ImageBatch(tbf.read_kind(args.images, Kind.IMAGES))
    labels = _read_labels(args.labels, args.classes)
    state = make_state(cfg.policy, cfg.threshold, cfg.patch_sizes, cfg.fix_ratios, Rng(args.seed))
    if args.k is not None:
        if not 0 <= args.k <= state.k_max:
            raise DomainError(f"lesson index {args.k} outside [0, {state.k_max}]")
        state = dataclasses.replace(state, k=args.k)
    p, f = current(state)
    p = args.patch_size if args.patch_size is not None else p
    beta = args.beta if args.beta is not None else f
    out = augment_batch(images, labels, beta, p, ShuffleMode.parse(cfg.mode), cfg.trigger_prob, Rng(args.seed))
    tbf.write_tbf(_prefix_path(args.out, "images.tbf"), Kind.IMAGES, out.images.data)
    tbf.write_tbf(_prefix_path(args.out, "soft.tbf"), Kind.SOFT_LABELS, out.soft_labels.weights)
    tbf.write_tbf(_prefix_path(args.out, "provenance.tbf"), Kind.PROVENANCE, out.provenance.source.astype(np.uint32))
    if args.plot:
        from .plotting import plot_augmented

        plot_augmented(images.data, out.images.data, out.provenance.source, p, args.plot)
    summary = {
        "triggered": out.triggered,
        "patch_size": p,
        "beta": beta,
        "mode": cfg.mode,
        "n": out.provenance.n,
        "m": out.mask.m if out.mask is not None else None,
        "realized_f": out.mask.realized_f if out.mask is not None else None,
    }
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_baseline(args) -> int:
    images = ImageBatch(tbf.read_kind(args.images, Kind.IMAGES))
    labels = _read_labels(args.labels, args.classes)
    if labels.B != images.B:
        raise DomainError(f"{images.B} images but {labels.B} labels")
    out, soft, partners = apply_to_batch(args.method, images.data, labels.one_hot(), Rng(args.seed), args.fill)
    tbf.write_tbf(_prefix_path(args.out, "images.tbf"), Kind.IMAGES, out)
    tbf.write_tbf(_prefix_path(args.out, "soft.tbf"), Kind.SOFT_LABELS, soft)
    print(json.dumps({"method": args.method, "partners": [int(d) for d in partners]}))
    return EXIT_OK


def _emit_report(report, args) -> None:
    text = report.to_csv()
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    if getattr(args, "summary", None):
        _write_text(args.summary, report.to_json())
    if args.plot:
        from .plotting import plot_run_report

        plot_run_report(report, args.plot)


def cmd_trace(args) -> int:
    cfg = _load_config(args)
    if (args.losses is None) == (args.a is None):
        raise ConfigError("trace needs exactly one loss source: --losses CSV or --a/--tau/--sigma")
    if args.losses is not None:
        report = run_controller(
            read_loss_csv(args.losses), cfg.policy, cfg.threshold, cfg.patch_sizes, cfg.fix_ratios,
            seed=cfg.seed or 0, ema=cfg.loss_ema,
        )
    else:
        learner = SyntheticLearner(args.a, args.tau, args.sigma)
        report = simulate_training(
            learner, cfg.policy, cfg.threshold, args.steps, None, cfg.seed or 0,
            cfg.patch_sizes, cfg.fix_ratios, cfg.loss_ema,
        )
    _emit_report(report, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    aug = None
    if not args.no_augment:
        cfg.check_side()
        aug = AugConfig(cfg.batch_size, args.channels, cfg.image_side, args.classes, cfg.mode, cfg.trigger_prob)
    report = simulate_training(
        SyntheticLearner(args.a, args.tau, args.sigma), cfg.policy, cfg.threshold, args.steps, aug,
        args.seed, cfg.patch_sizes, cfg.fix_ratios, cfg.loss_ema,
    )
    _emit_report(report, args)
    return EXIT_OK


def describe(path) -> dict:
    tf = tbf.read_tbf(path)
    info = {"path": str(path), "kind": tf.kind.name.lower(), "dims": list(tf.dims)}
    data = tf.data
    if tf.kind in (Kind.IMAGES, Kind.SOFT_LABELS):
        info.update(min=float(data.min()), max=float(data.max()), mean=float(data.mean(dtype=np.float64)))
    if tf.kind == Kind.SOFT_LABELS:
        info["max_row_sum_error"] = float(np.abs(data.sum(axis=1, dtype=np.float64) - 1.0).max())
    if tf.kind == Kind.LABELS:
        values, counts = np.unique(data, return_counts=True)
        info["histogram"] = {str(int(v)): int(c) for v, c in zip(values, counts)}
    if tf.kind == Kind.PROVENANCE:
        own = data == np.arange(data.shape[0])[:, None]
        info["self_fraction"] = float(own.mean())
        info["identity"] = bool(own.all())
    return info


def cmd_inspect(args) -> int:
    for path in args.paths:
        print(json.dumps(describe(path), sort_keys=True))
    return EXIT_OK


def cmd_corrupt(args) -> int:
    labels = _read_labels(args.labels, args.classes)
    out = corrupt_labels(labels, args.ratio, Rng(args.seed))
    tbf.write_tbf(args.out, Kind.LABELS, out.labels.astype(np.uint32))
    print(json.dumps({"changed": int((out.labels != labels.labels).sum()), "selected": fixed_count(labels.B, args.ratio)}))
    return EXIT_OK


def cmd_verify(args) -> int:
    """Recount soft labels from a provenance file and compare with the soft-label file."""
    labels = _read_labels(args.labels, args.classes)
    prov = Provenance(tbf.read_kind(args.provenance, Kind.PROVENANCE).astype(np.int64))
    soft = tbf.read_kind(args.soft, Kind.SOFT_LABELS)
    expected = soft_labels(prov, labels).weights
    err = float(np.abs(expected - soft).max()) if soft.shape == expected.shape else math.inf
    print(json.dumps({"max_abs_error": err, "ok": err <= 1e-6}))
    return EXIT_OK if err <= 1e-6 else EXIT_DOMAIN


def cmd_export_png(args) -> int:
    from PIL import Image

    images = ImageBatch(tbf.read_kind(args.images, Kind.IMAGES))
    if images.C not in (1, 3):
        raise DomainError(f"PNG export needs 1 or 3 channels, got {images.C}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pixels = images.to_uint8()
    for s in range(images.B):
        arr = pixels[s, 0] if images.C == 1 else np.moveaxis(pixels[s], 0, -1)
        Image.fromarray(arr).save(out_dir / f"{s:04d}.png")
    return EXIT_OK


def cmd_import_png(args) -> int:
    from PIL import Image

    arrays = []
    for path in args.pngs:
        arr = np.asarray(Image.open(path))
        arr = arr[None] if arr.ndim == 2 else np.moveaxis(arr[..., :3], -1, 0)
        arrays.append(arr)
    if len({a.shape for a in arrays}) != 1:
        raise DomainError("all PNGs must share one shape")
    tbf.write_tbf(args.out, Kind.IMAGES, ImageBatch.from_uint8(np.stack(arrays)).data)
    return EXIT_OK


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON run config; flags override it")
    p.add_argument("--policy", help="hold, back, linear, reverse, random, loop, linear-decay, fixed-patch:P, fixed-ratio:F")
    p.add_argument("--threshold", type=float, help="loss threshold T (default 4.0)")
    p.add_argument("--patch-sizes", type=_ints, help="comma-separated descending patch sizes")
    p.add_argument("--fix-ratios", type=_floats, help="comma-separated descending fix ratios")
    p.add_argument("--mode", choices=[m.value for m in ShuffleMode])
    p.add_argument("--trigger-prob", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--image-side", type=int)
    p.add_argument("--loss-ema", type=float, help="EMA coefficient for the loss (default off)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellmix", description="In-place patch shuffle augmentation with a loss-driven curriculum.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic image/label batch")
    p.add_argument("--batch-size", "-B", type=int, default=8)
    p.add_argument("--channels", "-C", type=int, default=3)
    p.add_argument("--side", type=int, default=384)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.images.tbf and PREFIX.labels.tbf")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("augment", help="apply the in-place shuffle to a batch")
    _add_run_flags(p)
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--classes", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--beta", type=float, help="fix ratio; default is the schedule value at --k")
    p.add_argument("--patch-size", type=int, help="default is the schedule value at --k")
    p.add_argument("--k", type=int, help="lesson index used for schedule defaults (default 0)")
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--plot", help="write a before/after PNG figure here")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("baseline", help="apply Mixup, Cutout or CutMix")
    p.add_argument("--method", choices=["mixup", "cutout", "cutmix"], required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--classes", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fill", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("trace", help="replay losses through the curriculum controller")
    _add_run_flags(p)
    p.add_argument("--losses", help="CSV of losses")
    p.add_argument("--a", type=float, help="synthetic learner initial loss")
    p.add_argument("--tau", type=float, default=math.inf)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="trace CSV path (default stdout)")
    p.add_argument("--plot", help="write a trace figure here")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("simulate", help="synthetic training loop with augmentation at each step")
    _add_run_flags(p)
    p.add_argument("--a", type=float, default=8.0)
    p.add_argument("--tau", type=float, default=10.0)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--no-augment", action="store_true", help="controller only")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="trace CSV path (default stdout)")
    p.add_argument("--summary", help="JSON summary path")
    p.add_argument("--plot", help="write a trace figure here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("inspect", help="print TBF headers and statistics")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("corrupt", help="resample a fraction of labels uniformly")
    p.add_argument("--labels", required=True)
    p.add_argument("--classes", type=int)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("verify", help="recount soft labels from provenance")
    p.add_argument("--labels", required=True)
    p.add_argument("--classes", type=int)
    p.add_argument("--provenance", required=True)
    p.add_argument("--soft", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-png", help="write each image of a TBF batch as an 8-bit PNG")
    p.add_argument("--images", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_export_png)

    p = sub.add_parser("import-png", help="stack 8-bit PNGs into a TBF image batch (u -> u/255)")
    p.add_argument("pngs", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import_png)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"cellmix: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"cellmix: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"cellmix: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except DomainError as exc:
        print(f"cellmix: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
