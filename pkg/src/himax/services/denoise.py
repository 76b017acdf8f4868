"""Patch-based denoising through learned analysis filters and bases."""

import logging

import numpy as np
from sklearn.feature_extraction.image import extract_patches_2d, reconstruct_from_patches_2d

from himax.errors import GeometryError
from himax.models.analysis import DenoiseReport, Dictionary
from himax.models.images import ImageGray, SamplerConfig
from himax.models.training import TrainConfig
from himax.models.whitening import WhiteningModel
from himax.services.bases import extract_bases
from himax.services.ingest import center, sample_patches
from himax.services.train import run_training
from himax.services.tuning import init_tuning
from himax.services.whiten import fit_whitening, transform

logger = logging.getLogger(__name__)


def learn_dictionary(
    clean_region: ImageGray,
    w: int,
    threshold: float,
    cfg: TrainConfig,
    *,
    patch_count: int = 20_000,
    k1: int | None = None,
) -> tuple[WhiteningModel, Dictionary]:
    """Sample, center, whiten and train on the clean region.

    K1 defaults to the retained rank K0.
    """
    patches = sample_patches([clean_region], SamplerConfig(
        patch_width=w, count=patch_count, seed=cfg.seed))
    centered, mean = center(patches)
    model = fit_whitening(centered, threshold, mean=mean)
    k0 = model.retained_rank
    params = init_tuning(k0, k1 or k0, t0=cfg.t0)
    filters, state = run_training(transform(model, patches), cfg, params)
    logger.info("Denoising dictionary: w=%d K0=%d K1=%d", w, k0, filters.k1)
    return model, extract_bases(model, filters, state.params or params)


def apply_dictionary(noisy_region: ImageGray, model: WhiteningModel,
                     dictionary: Dictionary, w: int) -> ImageGray:
    """Reconstruct every stride-1 patch as B W^T (x - mean) + mean and average overlaps."""
    if noisy_region.height < w or noisy_region.width < w:
        raise GeometryError(
            f"noisy region {noisy_region.width}x{noisy_region.height} is smaller than {w}x{w}"
        )
    patches = extract_patches_2d(noisy_region.pixels, (w, w))
    X = patches.reshape(len(patches), w * w).T
    mean = model.mean[:, None]
    restored = dictionary.B @ (dictionary.W.T @ (X - mean)) + mean
    image = reconstruct_from_patches_2d(restored.T.reshape(-1, w, w), noisy_region.pixels.shape)
    return ImageGray(pixels=np.clip(image, 0.0, 1.0))


def denoise_image(
    clean_region: ImageGray,
    noisy_region: ImageGray,
    w: int,
    threshold: float,
    cfg: TrainConfig,
    *,
    patch_count: int = 20_000,
    k1: int | None = None,
) -> ImageGray:
    """Learn filters on the clean region, then denoise the noisy region.

    Raises:
        GeometryError: Patch width below 2 or a region smaller than w x w.
    """
    if w < 2:
        raise GeometryError(f"patch width must be at least 2, got {w}")
    model, dictionary = learn_dictionary(
        clean_region, w, threshold, cfg, patch_count=patch_count, k1=k1
    )
    return apply_dictionary(noisy_region, model, dictionary, w)


def denoise_report(original: ImageGray, noisy: ImageGray, denoised: ImageGray,
                   w: int, threshold: float, dictionary: Dictionary,
                   model: WhiteningModel) -> DenoiseReport:
    """Frobenius error norms of the noisy and denoised images against the original."""
    if not original.pixels.shape == noisy.pixels.shape == denoised.pixels.shape:
        raise GeometryError("original, noisy and denoised images differ in size")
    return DenoiseReport(
        noisy_error=float(np.linalg.norm(noisy.pixels - original.pixels)),
        denoised_error=float(np.linalg.norm(denoised.pixels - original.pixels)),
        patch_width=w,
        threshold=threshold,
        k0=model.retained_rank,
        k1=dictionary.B.shape[1],
    )
