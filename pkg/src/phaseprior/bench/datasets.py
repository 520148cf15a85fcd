"""Digit image ingestion and the complex-valued training set."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..errors import DatasetError, ParseError

logger = logging.getLogger(__name__)

DIGIT_PIXELS = 64
IMAGINARY_WEIGHT = 0.5


def load_digits(path: Path | str, num_pixels: int = DIGIT_PIXELS) -> list[NDArray[np.float64]]:
    """Read CSV rows of ``num_pixels`` values (an optional trailing label is ignored).

    Pixels are rescaled globally to [0, 1]. Blank lines and ``#`` comments are skipped.
    """
    source = Path(path)
    rows: list[list[float]] = []
    with source.open(newline="", encoding="utf-8") as handle:
        for line_no, record in enumerate(csv.reader(handle), start=1):
            if not record or not "".join(record).strip() or record[0].lstrip().startswith("#"):
                continue
            if len(record) not in (num_pixels, num_pixels + 1):
                raise ParseError(
                    f"expected {num_pixels} pixel values (plus optional label), found {len(record)}",
                    path=source,
                    row=line_no,
                )
            try:
                pixels = [float(value) for value in record[:num_pixels]]
            except ValueError as exc:
                raise ParseError(f"non-numeric pixel value: {exc}", path=source, row=line_no) from exc
            if not all(np.isfinite(pixels)):
                raise ParseError("non-finite pixel value", path=source, row=line_no)
            rows.append(pixels)
    if len(rows) < 2:
        raise DatasetError(f"{source}: need at least 2 images, found {len(rows)}")

    data = np.asarray(rows, dtype=np.float64)
    low, high = float(data.min()), float(data.max())
    if high > low:
        data = (data - low) / (high - low)
    else:
        data = np.zeros_like(data)
    logger.info("Loaded %d images of %d pixels from %s", data.shape[0], num_pixels, source)
    return list(data)


def complexify(dataset: Sequence[ArrayLike], seed: int) -> list[NDArray[np.complex128]]:
    """Sample j becomes sample_j + 0.5i * sample_p for a seeded partner p != j."""
    samples = [np.asarray(sample, dtype=np.float64) for sample in dataset]
    count = len(samples)
    if count < 2:
        raise DatasetError(f"complexify needs at least 2 samples, got {count}")
    rng = np.random.default_rng(seed)
    partners = rng.integers(0, count - 1, size=count)
    partners = partners + (partners >= np.arange(count))
    return [samples[j] + 1j * IMAGINARY_WEIGHT * samples[int(p)] for j, p in enumerate(partners)]


def split_holdout(
    dataset: Sequence[ArrayLike],
    seed: int,
    holdout_fraction: float = 0.2,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Seeded shuffle into (training, held-out) parts, both non-empty."""
    if not 0 < holdout_fraction < 1:
        raise DatasetError(f"holdout_fraction must lie in (0, 1), got {holdout_fraction}")
    samples = [np.asarray(sample) for sample in dataset]
    count = len(samples)
    num_holdout = int(round(holdout_fraction * count))
    if num_holdout < 1 or num_holdout >= count:
        raise DatasetError(f"cannot split {count} samples with holdout_fraction={holdout_fraction}")
    order = np.random.default_rng(seed).permutation(count)
    holdout = [samples[i] for i in order[:num_holdout]]
    train = [samples[i] for i in order[num_holdout:]]
    return train, holdout


def write_digits(images: Sequence[ArrayLike], path: Path | str) -> Path:
    """Write real images as CSV rows, the format :func:`load_digits` reads."""
    target = Path(path)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        for image in images:
            writer.writerow([f"{float(v):.17g}" for v in np.asarray(image, dtype=np.float64)])
    return target
