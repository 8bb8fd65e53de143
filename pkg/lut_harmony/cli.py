"""
Command-line interface for LUT Harmony.

Every command resolves its configuration as preset -> TOML file -> flags (flags win)
and writes the resolved configuration next to its outputs.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from lut_harmony.augment import gen_dataset
from lut_harmony.dataset import load_bank, load_benchmark, load_corpus, save_bank, save_benchmark
from lut_harmony.exceptions import (
    ConfigError,
    CubeParseError,
    HarmonyError,
    LutValidationError,
    UnsupportedFormatError,
)
from lut_harmony.harmonizer import (
    HarmonizerModel,
    load_checkpoint,
    save_checkpoint,
    train,
    write_history_csv,
)
from lut_harmony.imagecore import composite, decode_mask, read_image, write_image
from lut_harmony.lut import apply_lut_image, generate_bank, lut_id, read_cube, write_cube
from lut_harmony.metrics import write_report_csv, write_report_json
from lut_harmony.models.enums import AppearanceMode, CropMode, MaskStyle
from lut_harmony.models.image import Rect
from lut_harmony.models.settings import RunConfig
from lut_harmony.pipeline import (
    AblationCell,
    ablation_csv,
    default_cells,
    harmonize_composite,
    harmonize_highres,
    run_ablation_matrix,
    run_benchmark,
    select_reference,
    synth_benchmark,
    write_ablation_csv,
)
from lut_harmony.utils import write_bytes

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2

ECHO_NAME = "resolved_config.toml"
VALIDATION_ERRORS = (
    CubeParseError, LutValidationError, ConfigError, UnsupportedFormatError, ValidationError
)

# Flags whose argparse dest is a dotted RunConfig key are collected as overrides.
_TOP_LEVEL_KEYS = ("seed", "workers")

Handler = Callable[[argparse.Namespace, RunConfig], int]


def print_error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        key: value for key, value in vars(args).items()
        if value is not None and ("." in key or key in _TOP_LEVEL_KEYS)
    }


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.preset(args.preset)
    if args.config:
        cfg = RunConfig.from_toml(args.config, base=cfg)
    return cfg.with_overrides(_collect_overrides(args))


# ---------------------------------------------------------------------------
# lut
# ---------------------------------------------------------------------------

def cmd_lut_apply(args: argparse.Namespace, cfg: RunConfig) -> int:
    lut = read_cube(args.lut)
    write_image(args.output, apply_lut_image(lut, read_image(args.input)))
    cfg.write_echo(Path(args.output).parent, ECHO_NAME)
    logger.info("Applied %s to %s -> %s", lut_id(lut), args.input, args.output)
    return EXIT_OK


def cmd_lut_validate(args: argparse.Namespace, cfg: RunConfig) -> int:
    lut = read_cube(args.cube)
    if args.canonical:
        write_bytes(args.canonical, write_cube(lut).encode("utf-8"))
        cfg.write_echo(Path(args.canonical).parent, ECHO_NAME)
    print(f"ok: {args.cube} size={lut.size} id={lut_id(lut)}")
    return EXIT_OK


def cmd_lut_gen(args: argparse.Namespace, cfg: RunConfig) -> int:
    out = Path(args.out)
    bank = generate_bank(args.count, cfg.seed, args.strength, args.size, prefix=args.prefix)
    save_bank(out, bank)
    cfg.write_echo(out, ECHO_NAME)
    return EXIT_OK


# ---------------------------------------------------------------------------
# augment / train
# ---------------------------------------------------------------------------

def cmd_augment_triplets(args: argparse.Namespace, cfg: RunConfig) -> int:
    corpus = load_corpus(args.corpus)
    bank = load_bank(args.bank)
    manifest = gen_dataset(corpus, bank, args.count, cfg.seed, cfg.augment, args.out, cfg.workers)
    cfg.write_echo(args.out, ECHO_NAME)
    print(f"manifest sha256 {manifest.digest()}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace, cfg: RunConfig) -> int:
    out = Path(args.out)
    corpus = load_corpus(args.corpus)
    bank = load_bank(args.bank)
    model, history = train(corpus, bank, cfg.train, cfg.augment, cfg.loss, cfg.workers)
    save_checkpoint(out / "model.json", model, cfg.train)
    write_history_csv(out / "history.csv", history)
    cfg.write_echo(out, ECHO_NAME)
    return EXIT_OK


# ---------------------------------------------------------------------------
# harmonize / evaluate / bench
# ---------------------------------------------------------------------------

def _load_model(path: Optional[str]) -> HarmonizerModel:
    if path is None:
        logger.warning("No checkpoint given; using an untrained (identity) model")
        return HarmonizerModel.initialize(0)
    model, _ = load_checkpoint(path)
    return model


def cmd_harmonize(args: argparse.Namespace, cfg: RunConfig) -> int:
    model = _load_model(args.model)
    fg = read_image(args.fg)
    bg = read_image(args.bg)
    mask = decode_mask(Path(args.mask).read_bytes())
    placement = Rect(x=args.x, y=args.y, w=fg.width, h=fg.height)

    if args.highres:
        reference = select_reference(bg, placement, cfg.benchmark)
        output = composite(harmonize_highres(model, fg, reference), bg, mask, placement)
    else:
        output = harmonize_composite(model, fg, bg, mask, placement, cfg.benchmark)
    write_image(args.out, output)
    cfg.write_echo(Path(args.out).parent, ECHO_NAME)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, cfg: RunConfig) -> int:
    out = Path(args.out)
    opts = cfg.benchmark
    if args.benchmark:
        cases = load_benchmark(args.benchmark)
    else:
        if not args.images or not args.heldout:
            raise ConfigError("evaluate needs --benchmark, or both --images and --heldout")
        cases = synth_benchmark(
            load_corpus(args.images), load_bank(args.heldout), opts.count, opts.seed, opts.mask_style
        )
        save_benchmark(out / "benchmark", cases, opts.seed, opts.mask_style)

    result = run_benchmark(_load_model(args.model), cases, opts, cfg.workers)
    write_report_json(out / "report.json", result)
    write_report_csv(out / "report.csv", result)
    cfg.write_echo(out, ECHO_NAME)
    print(
        f"median mse {result.method.median.mse:.3f} (direct composite "
        f"{result.baseline.median.mse:.3f}), win rate {result.win_rate:.2f}"
    )
    return EXIT_OK


def _requested_cell(args: argparse.Namespace, cfg: RunConfig) -> Optional[AblationCell]:
    picked = [vars(args).get(k) for k in ("augment.mode", "augment.appearance")]
    if not any(picked) and not args.no_recon and not args.no_dis:
        return None
    parts = [cfg.augment.mode.value, cfg.augment.appearance.value]
    if args.no_recon:
        parts.append("no_recon")
    if args.no_dis:
        parts.append("no_dis")
    return AblationCell(
        name="+".join(parts),
        mode=cfg.augment.mode,
        appearance=cfg.augment.appearance,
        drop_recon=args.no_recon,
        drop_dis=args.no_dis,
    )


def cmd_bench(args: argparse.Namespace, cfg: RunConfig) -> int:
    out = Path(args.out)
    corpus = load_corpus(args.corpus)
    bank = load_bank(args.bank)
    heldout = load_bank(args.heldout)
    overlap = {lut_id(lut) for lut in bank} & {lut_id(lut) for lut in heldout}
    if overlap:
        raise ConfigError(f"held-out LUTs overlap the training bank: {sorted(overlap)}")

    opts = cfg.benchmark
    cases = synth_benchmark(corpus, heldout, opts.count, opts.seed, opts.mask_style)
    cell = _requested_cell(args, cfg)
    cells: List[AblationCell] = [cell] if cell else default_cells()
    rows = run_ablation_matrix(corpus, bank, cases, cfg, cells)
    write_ablation_csv(out / "ablation.csv", rows)
    cfg.write_echo(out, ECHO_NAME)
    sys.stdout.write(ablation_csv(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--preset", choices=["full", "desk"], default="full",
                        help="Built-in defaults the config file and flags refine")
    common.add_argument("--workers", type=int, help="Worker threads (outputs do not depend on it)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    return common


def _add_augment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", dest="augment.mode", choices=[m.value for m in CropMode])
    parser.add_argument("--appearance", dest="augment.appearance",
                        choices=[a.value for a in AppearanceMode])
    parser.add_argument("--crop-size", dest="augment.crop_size", type=int)
    parser.add_argument("--jitter-min", dest="augment.jitter_min", type=int)
    parser.add_argument("--jitter-max", dest="augment.jitter_max", type=int)


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", dest="train.seed", type=int, help="Training seed")
    parser.add_argument("--lr", dest="train.learning_rate", type=float)
    parser.add_argument("--epochs-const", dest="train.epochs_const", type=int)
    parser.add_argument("--epochs-decay", dest="train.epochs_decay", type=int)
    parser.add_argument("--batch-size", dest="train.batch_size", type=int)
    parser.add_argument("--steps-per-epoch", dest="train.steps_per_epoch", type=int)
    parser.add_argument("--w1", dest="loss.w1", type=float, help="Reconstruction loss weight")
    parser.add_argument("--w2", dest="loss.w2", type=float, help="Disentanglement loss weight")
    _add_augment_flags(parser)


def _add_benchmark_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--count", dest="benchmark.count", type=int, help="Benchmark cases")
    parser.add_argument("--bench-seed", dest="benchmark.seed", type=int)
    parser.add_argument("--mask-style", dest="benchmark.mask_style",
                        choices=[s.value for s in MaskStyle])
    _add_locality_flags(parser)


def _add_locality_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--locality", dest="benchmark.locality", action="store_const", const=True,
                        help="Use a crop around the placement as reference")
    parser.add_argument("--no-locality", dest="benchmark.locality", action="store_const",
                        const=False, help="Use the whole background as reference")
    parser.add_argument("--expand", dest="benchmark.expand", type=float,
                        help="Locality crop scale about the placement center")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="lut-harmony",
        description="Self-supervised image harmonization with 3D LUT augmentation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  lut-harmony lut gen --count 16 --seed 7 --out luts/
  lut-harmony augment gen-triplets --corpus images/ --bank luts/ --count 64 --out data/
  lut-harmony train --preset desk --corpus images/ --bank luts/ --out run/
  lut-harmony evaluate --model run/model.json --images images/ --heldout heldout/ --out eval/
        """,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    lut = commands.add_parser("lut", help="Apply, validate or generate .cube LUTs")
    lut_commands = lut.add_subparsers(dest="lut_command", required=True)

    apply = lut_commands.add_parser("apply", parents=[common], help="Apply a LUT to an image")
    apply.add_argument("--lut", required=True, help=".cube file")
    apply.add_argument("input")
    apply.add_argument("output")
    apply.set_defaults(handler=cmd_lut_apply)

    validate = lut_commands.add_parser("validate", parents=[common], help="Validate a .cube file")
    validate.add_argument("cube")
    validate.add_argument("--canonical", help="Also write the canonical form here")
    validate.set_defaults(handler=cmd_lut_validate)

    gen = lut_commands.add_parser("gen", parents=[common], help="Generate a synthetic LUT bank")
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--strength", type=float, default=0.5)
    gen.add_argument("--size", type=int)
    gen.add_argument("--prefix", default="lut")
    gen.add_argument("--out", default="luts")
    gen.set_defaults(handler=cmd_lut_gen)

    augment = commands.add_parser("augment", help="Triplet dataset generation")
    augment_commands = augment.add_subparsers(dest="augment_command", required=True)
    triplets = augment_commands.add_parser("gen-triplets", parents=[common],
                                           help="Generate a triplet dataset")
    triplets.add_argument("--corpus", required=True, help="Directory of .png/.ppm images")
    triplets.add_argument("--bank", required=True, help="Directory of .cube LUTs")
    triplets.add_argument("--count", type=int, required=True)
    triplets.add_argument("--seed", type=int)
    triplets.add_argument("--out", required=True)
    _add_augment_flags(triplets)
    triplets.set_defaults(handler=cmd_augment_triplets)

    train_cmd = commands.add_parser("train", parents=[common], help="Train a harmonizer")
    train_cmd.add_argument("--corpus", required=True)
    train_cmd.add_argument("--bank", required=True)
    train_cmd.add_argument("--out", required=True)
    _add_train_flags(train_cmd)
    train_cmd.add_argument("--no-recon-loss", dest="loss.w1", action="store_const", const=0.0)
    train_cmd.add_argument("--no-dis-loss", dest="loss.w2", action="store_const", const=0.0)
    train_cmd.set_defaults(handler=cmd_train)

    harmonize_cmd = commands.add_parser("harmonize", parents=[common],
                                        help="Harmonize one foreground into a background")
    harmonize_cmd.add_argument("--model", help="Checkpoint (omit for the identity model)")
    harmonize_cmd.add_argument("--fg", required=True)
    harmonize_cmd.add_argument("--bg", required=True)
    harmonize_cmd.add_argument("--mask", required=True, help="Gray PNG sized like fg")
    harmonize_cmd.add_argument("--x", type=int, required=True, help="Placement left edge")
    harmonize_cmd.add_argument("--y", type=int, required=True, help="Placement top edge")
    harmonize_cmd.add_argument("--highres", action="store_true",
                               help="Harmonize at low resolution and transfer with a color map")
    harmonize_cmd.add_argument("--out", required=True)
    _add_locality_flags(harmonize_cmd)
    harmonize_cmd.set_defaults(handler=cmd_harmonize)

    evaluate = commands.add_parser("evaluate", parents=[common],
                                   help="Score a model on a synthetic held-out benchmark")
    evaluate.add_argument("--model")
    evaluate.add_argument("--benchmark", help="Existing benchmark directory")
    evaluate.add_argument("--images", help="Images for a new benchmark")
    evaluate.add_argument("--heldout", help="Held-out .cube directory for a new benchmark")
    evaluate.add_argument("--out", required=True)
    _add_benchmark_flags(evaluate)
    evaluate.set_defaults(handler=cmd_evaluate)

    bench = commands.add_parser("bench", parents=[common], help="Run the ablation matrix")
    bench.add_argument("--corpus", required=True)
    bench.add_argument("--bank", required=True)
    bench.add_argument("--heldout", required=True)
    bench.add_argument("--out", required=True)
    _add_train_flags(bench)
    _add_benchmark_flags(bench)
    bench.add_argument("--no-recon-loss", dest="no_recon", action="store_true")
    bench.add_argument("--no-dis-loss", dest="no_dis", action="store_true")
    bench.set_defaults(handler=cmd_bench)

    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns 0 on success, 1 on runtime errors, 2 on validation errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_VALIDATION
    _configure_logging(args)

    handler: Handler = args.handler
    try:
        cfg = resolve_config(args)
        return handler(args, cfg)
    except VALIDATION_ERRORS as e:
        print_error(str(e))
        return EXIT_VALIDATION
    except (HarmonyError, OSError) as e:
        print_error(str(e))
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        print_error("interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
