"""train: patch matrix to checkpoint, history, filter grid and metrics."""

import argparse
import logging

import numpy as np

from himax.cli.deps import StageTimer, train_config, write_manifest
from himax.cli.schemas import TrainOptions
from himax.config import settings
from himax.errors import UsageError
from himax.models.analysis import MetricsReport
from himax.models.manifest import RunManifest
from himax.models.training import Algorithm, Checkpoint, HistoryEntry, TrainState
from himax.models.tuning import TuningParams
from himax.models.whitening import WhiteningMode
from himax.repositories import (
    CheckpointRepository,
    CsvRepository,
    PatchMatrixRepository,
    WhiteningRepository,
)
from himax.services.bases import extract_bases, render_filter_grid
from himax.services.ingest import center, write_pgm
from himax.services.metrics import measure
from himax.services.train import initial_filters, run_training
from himax.services.tuning import beta_at_epoch, init_tuning
from himax.services.whiten import fit_whitening, transform

logger = logging.getLogger(__name__)

NAME = "train"
OPTIONS = TrainOptions

patch_repo = PatchMatrixRepository()
checkpoint_repo = CheckpointRepository()
whitening_repo = WhiteningRepository()
history_repo = CsvRepository[HistoryEntry](
    HistoryEntry,
    ["epoch", "phase", "objective", "step", "backtracks", "status", "beta", "bias",
     "wall_seconds"],
)
metrics_repo = CsvRepository[MetricsReport](
    MetricsReport,
    ["epoch", "cfe_bits", "cde_nats", "population_n", "samples", "bandwidth_rule",
     "wall_seconds"],
)


def add_parser(subparsers, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        NAME, parents=parents, help="whiten patches and learn C",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--patches", help="patch matrix file (mat1)")
    parser.add_argument("--out-dir", help="directory for all artifacts (default ./run)")
    parser.add_argument("--k1", type=int, help="number of outputs K1 (default 144)")
    parser.add_argument("--epsilon", type=float, help="energy threshold (default 1.0)")
    parser.add_argument("--k0", type=int, help="retained rank K0 (overrides --epsilon)")
    parser.add_argument("--epochs", type=int, help="t_max (default 300)")
    parser.add_argument("--t0", type=int, help="orthonormal phase length (default 50)")
    parser.add_argument("--v1", type=float, help="initial rate factor (default 0.4)")
    parser.add_argument("--tau", type=float, help="backtracking factor (default 0.8)")
    parser.add_argument("--alg", choices=[a.value for a in Algorithm], help="default auto")
    parser.add_argument("--seed", type=int, help="initialization seed (default 0)")
    parser.add_argument("--train-bias", action="store_true", help="also learn the bias b")
    parser.add_argument("--batch-size", type=int, help="mini-batch size (default full batch)")
    parser.add_argument("--max-backtracks", type=int, help="step reductions per epoch")
    parser.add_argument("--metrics-every", type=int, help="metric cadence in epochs, 0 = off")
    parser.add_argument("--metrics-samples", type=int, help="columns used for tracked metrics")
    parser.add_argument("--n", type=float, help="population size N for CDE (default 1e6)")


class MetricsTracker:
    """Computes CFE/CDE on a fixed column subset every few epochs."""

    def __init__(self, model, X_white: np.ndarray, options: TrainOptions, evaluation):
        columns = min(options.metrics_samples, X_white.shape[1])
        self.model = model
        self.X_white = X_white[:, :columns]
        self.X_zca = model.u0 @ self.X_white
        self.every = options.metrics_every
        self.population_n = options.n
        self.evaluation = evaluation
        self.reports: list[MetricsReport] = []

    def record(self, epoch: int, C: np.ndarray, params: TuningParams) -> None:
        dictionary = extract_bases(self.model, C, params)
        self.reports.append(measure(
            dictionary, C, self.X_white, self.X_zca, params, epoch=epoch,
            population_n=self.population_n, options=self.evaluation,
        ))

    def __call__(self, epoch: int, C: np.ndarray, params: TuningParams,
                 state: TrainState) -> None:
        if self.every and epoch % self.every == 0:
            self.record(epoch, C, params)


def run(options: TrainOptions) -> RunManifest:
    timer = StageTimer()
    out = options.out_dir
    cfg = train_config(options)

    with timer.stage("load"):
        patches = patch_repo.load(options.patches)
    with timer.stage("whiten"):
        centered, mean = center(patches)
        model = fit_whitening(centered, options.epsilon, mean=mean)
        if options.k0 is not None:
            if options.k0 > model.dimension:
                raise UsageError(f"K0={options.k0} exceeds the patch dimension {model.dimension}")
            model = model.with_rank(options.k0)
        X = transform(model, patches, WhiteningMode.WHITEN)
    k0, m = model.retained_rank, patches.sample_count
    logger.info("Reported K0=%d for epsilon=%g", k0, options.epsilon)

    algorithm = cfg.algorithm.resolve(k0, options.k1)
    if algorithm is Algorithm.EXACT and options.k1 * m > settings.exact_limit:
        raise UsageError(
            f"alg=exact refuses K1*M = {options.k1 * m} above {settings.exact_limit}"
        )
    params = init_tuning(k0, options.k1, t0=cfg.t0)

    tracker = MetricsTracker(model, X, options, cfg.evaluation)
    with timer.stage("train"):
        if options.metrics_every:
            start = params.model_copy(update={"beta": beta_at_epoch(params, 1)})
            tracker.record(0, initial_filters(k0, options.k1, cfg.seed), start)
        filters, state = run_training(X, cfg, params, on_epoch=tracker)
    if state.stalled_phases:
        logger.warning("Line search stalled in phase %s; later epochs of that phase were held",
                       ", ".join(map(str, state.stalled_phases)))

    with timer.stage("write"):
        final_params = state.params or params
        checkpoint = Checkpoint(
            filters=filters, params=final_params, epoch=state.epoch,
            rate_factor=state.rate_factor, algorithm=algorithm,
        )
        outputs = [
            checkpoint_repo.save(checkpoint, out / "checkpoint.pick"),
            whitening_repo.save(model, out / "whitening.piwm"),
            history_repo.save(state.history, out / "history.csv"),
        ]
        display = extract_bases(model, filters, final_params).Cv
        outputs.append(write_pgm(render_filter_grid(display, patches.patch_width),
                                 out / "filters.pgm"))
        if tracker.reports:
            outputs.append(metrics_repo.save(tracker.reports, out / "metrics.csv"))

    return write_manifest(NAME, options, [options.patches], outputs, timer,
                          out / "manifest.json", seed=options.seed)
