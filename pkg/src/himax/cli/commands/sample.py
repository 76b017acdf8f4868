"""sample: images to a patch matrix file."""

import argparse
import logging

from himax.cli.deps import StageTimer, write_manifest
from himax.cli.schemas import SampleOptions
from himax.models.images import SamplerConfig
from himax.models.manifest import RunManifest
from himax.repositories import PatchMatrixRepository
from himax.services.ingest import load_images, sample_patches

logger = logging.getLogger(__name__)

NAME = "sample"
OPTIONS = SampleOptions

patch_repo = PatchMatrixRepository()


def add_parser(subparsers, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        NAME, parents=parents, help="sample random patches",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--images", nargs="+", help="PGM files or IDX archives")
    parser.add_argument("--output", help="patch matrix file (mat1)")
    parser.add_argument("--patch-width", type=int, help="patch side w (default 12)")
    parser.add_argument("--count", type=int, help="number of patches M (default 100000)")
    parser.add_argument("--seed", type=int, help="generator seed (default 0)")


def run(options: SampleOptions) -> RunManifest:
    timer = StageTimer()
    with timer.stage("load"):
        images = load_images(options.images)
    with timer.stage("sample"):
        cfg = SamplerConfig(patch_width=options.patch_width, count=options.count,
                            seed=options.seed)
        patches = sample_patches(images, cfg)
    with timer.stage("write"):
        patch_repo.save(patches, options.output)
    logger.info("Wrote %dx%d patch matrix to %s", patches.dimension, patches.sample_count,
                options.output)

    return write_manifest(
        NAME, options, options.images, [options.output], timer,
        options.output.with_name(options.output.name + ".manifest.json"), seed=options.seed,
    )
