"""export: checkpoint to filter/basis grids, raw matrices and whitening filters."""

import argparse
import math

from himax.cli.deps import StageTimer, sibling, write_manifest
from himax.cli.schemas import ExportOptions
from himax.errors import ShapeError
from himax.models.manifest import RunManifest
from himax.repositories import CheckpointRepository, MatrixRepository, WhiteningRepository
from himax.services.bases import extract_bases, render_filter_grid
from himax.services.ingest import write_pgm
from himax.services.whiten import whitening_filters

NAME = "export"
OPTIONS = ExportOptions

checkpoint_repo = CheckpointRepository()
whitening_repo = WhiteningRepository()
matrix_repo = MatrixRepository()


def add_parser(subparsers, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        NAME, parents=parents, help="write bases and filters",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--checkpoint", help="checkpoint written by train")
    parser.add_argument("--whitening", help="whitening bundle (default: next to checkpoint)")
    parser.add_argument("--out-dir", help="output directory (default ./export)")


def run(options: ExportOptions) -> RunManifest:
    timer = StageTimer()
    whitening_path = options.whitening or sibling(options.checkpoint, "whitening.piwm")
    with timer.stage("load"):
        checkpoint = checkpoint_repo.load(options.checkpoint)
        model = whitening_repo.load(whitening_path)

    width = math.isqrt(model.dimension)
    if width * width != model.dimension:
        raise ShapeError(f"dimension {model.dimension} is not a square patch size")

    with timer.stage("bases"):
        dictionary = extract_bases(model, checkpoint.filters, checkpoint.params)
        pca, zca = whitening_filters(model)

    out = options.out_dir
    with timer.stage("write"):
        outputs = [
            write_pgm(render_filter_grid(dictionary.Cv, width), out / "filters.pgm"),
            write_pgm(render_filter_grid(dictionary.B, width), out / "bases.pgm"),
            matrix_repo.save(dictionary.W, out / "W.mat1"),
            matrix_repo.save(dictionary.B, out / "B.mat1"),
            matrix_repo.save(dictionary.Cv, out / "Cv.mat1"),
            matrix_repo.save(pca, out / "pca.mat1"),
            matrix_repo.save(zca, out / "zca.mat1"),
        ]
    return write_manifest(NAME, options, [options.checkpoint, whitening_path], outputs, timer,
                          out / "manifest.json")
