"""denoise: learn filters on a clean region and restore a noisy one."""

import argparse
import logging

from himax.cli.deps import StageTimer, train_config, write_manifest
from himax.cli.schemas import DenoiseOptions
from himax.errors import GeometryError
from himax.models.analysis import DenoiseReport
from himax.models.manifest import RunManifest
from himax.models.training import Algorithm
from himax.repositories import JsonRepository
from himax.services.denoise import apply_dictionary, denoise_report, learn_dictionary
from himax.services.ingest import load_pgm, write_pgm

logger = logging.getLogger(__name__)

NAME = "denoise"
OPTIONS = DenoiseOptions

report_repo = JsonRepository[DenoiseReport](DenoiseReport)


def add_parser(subparsers, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        NAME, parents=parents, help="denoise an image region",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--clean", help="clean training region (PGM)")
    parser.add_argument("--noisy", help="noisy region to restore (PGM)")
    parser.add_argument("--output", help="denoised image (PGM)")
    parser.add_argument("--original", help="noise-free reference for an error report")
    parser.add_argument("--patch-width", type=int, help="patch side w (default 7)")
    parser.add_argument("--epsilon", type=float, help="energy threshold (default 0.975)")
    parser.add_argument("--k1", type=int, help="number of outputs (default K0)")
    parser.add_argument("--patch-count", type=int, help="training patches (default 20000)")
    parser.add_argument("--epochs", type=int, help="t_max (default 300)")
    parser.add_argument("--t0", type=int, help="orthonormal phase length (default 50)")
    parser.add_argument("--v1", type=float, help="initial rate factor (default 0.4)")
    parser.add_argument("--tau", type=float, help="backtracking factor (default 0.8)")
    parser.add_argument("--alg", choices=[a.value for a in Algorithm], help="default auto")
    parser.add_argument("--seed", type=int, help="sampling and initialization seed")
    parser.add_argument("--train-bias", action="store_true", help="also learn the bias b")
    parser.add_argument("--batch-size", type=int, help="mini-batch size (default full batch)")
    parser.add_argument("--max-backtracks", type=int, help="step reductions per epoch")


def run(options: DenoiseOptions) -> RunManifest:
    timer = StageTimer()
    cfg = train_config(options)
    w = options.patch_width

    with timer.stage("load"):
        clean = load_pgm(options.clean)
        noisy = load_pgm(options.noisy)
        original = load_pgm(options.original) if options.original else None
    if clean.height < w or clean.width < w:
        raise GeometryError(f"clean region {clean.width}x{clean.height} is smaller than {w}x{w}")

    with timer.stage("train"):
        model, dictionary = learn_dictionary(
            clean, w, options.epsilon, cfg, patch_count=options.patch_count, k1=options.k1
        )
    with timer.stage("denoise"):
        denoised = apply_dictionary(noisy, model, dictionary, w)

    inputs = [options.clean, options.noisy]
    with timer.stage("write"):
        outputs = [write_pgm(denoised, options.output)]
        if original is not None:
            report = denoise_report(original, noisy, denoised, w, options.epsilon,
                                    dictionary, model)
            logger.info("Error %.4f -> %.4f (%.1f%% reduction)", report.noisy_error,
                        report.denoised_error, 100 * report.reduction)
            outputs.append(report_repo.save(
                report, options.output.with_name(options.output.name + ".report.json")))
            inputs.append(options.original)

    return write_manifest(
        NAME, options, inputs, outputs, timer,
        options.output.with_name(options.output.name + ".manifest.json"), seed=options.seed,
    )
