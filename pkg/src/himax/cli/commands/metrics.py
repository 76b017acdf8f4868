"""metrics: checkpoint and patches to CFE/CDE."""

import argparse
import logging

from himax.cli.deps import StageTimer, sibling, write_manifest
from himax.cli.schemas import MetricsOptions
from himax.models.analysis import MetricsReport
from himax.models.manifest import RunManifest
from himax.models.training import EvaluationOptions
from himax.models.whitening import WhiteningMode
from himax.repositories import (
    CheckpointRepository,
    CsvRepository,
    PatchMatrixRepository,
    WhiteningRepository,
)
from himax.services.bases import extract_bases
from himax.services.metrics import measure
from himax.services.whiten import transform

logger = logging.getLogger(__name__)

NAME = "metrics"
OPTIONS = MetricsOptions

patch_repo = PatchMatrixRepository()
checkpoint_repo = CheckpointRepository()
whitening_repo = WhiteningRepository()
report_repo = CsvRepository[MetricsReport](MetricsReport)


def add_parser(subparsers, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        NAME, parents=parents, help="coefficient/conditional entropy",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--checkpoint", help="checkpoint written by train")
    parser.add_argument("--patches", help="patch matrix to evaluate on")
    parser.add_argument("--whitening", help="whitening bundle (default: next to checkpoint)")
    parser.add_argument("--output", help="CSV report (default metrics.csv)")
    parser.add_argument("--n", type=float, help="population size N (default 1e6)")
    parser.add_argument("--samples", type=int, help="evaluate on the first S patches only")
    parser.add_argument("--reflect", action="store_true",
                        help="reflect the entropy estimator at the sample range")


def run(options: MetricsOptions) -> RunManifest:
    timer = StageTimer()
    whitening_path = options.whitening or sibling(options.checkpoint, "whitening.piwm")
    with timer.stage("load"):
        checkpoint = checkpoint_repo.load(options.checkpoint)
        model = whitening_repo.load(whitening_path)
        patches = patch_repo.load(options.patches)

    with timer.stage("measure"):
        data = patches.data if options.samples is None else patches.data[:, : options.samples]
        X_white = transform(model, data, WhiteningMode.WHITEN)
        dictionary = extract_bases(model, checkpoint.filters, checkpoint.params)
        report = measure(
            dictionary, checkpoint.filters, X_white, model.u0 @ X_white, checkpoint.params,
            epoch=checkpoint.epoch, population_n=options.n, reflect=options.reflect,
            options=EvaluationOptions(n_jobs=options.threads),
        )
    print(f"epoch={report.epoch} cfe_bits={report.cfe_bits:.6f} cde_nats={report.cde_nats:.6f}")

    with timer.stage("write"):
        report_repo.save([report], options.output)
    inputs = [options.checkpoint, whitening_path, options.patches]
    return write_manifest(
        NAME, options, inputs, [options.output], timer,
        options.output.with_name(options.output.name + ".manifest.json"),
    )
