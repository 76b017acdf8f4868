"""Service layer: ingest, whitening, training, metrics and denoising."""
