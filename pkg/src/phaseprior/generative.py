"""Affine generative model G(z) = Gz + b trained by principal component analysis."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DatasetError, DimensionError, ParameterError, ParseError
from .numerics import (
    ComplexMatrix,
    ComplexVector,
    as_complex_matrix,
    as_complex_vector,
    complex_normal,
    require_length,
)

logger = logging.getLogger(__name__)

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GenerativeModel:
    """PCA model with orthonormal columns in ``basis`` and the training mean in ``offset``.

    ``spectrum`` holds the top-k singular values of the centred training matrix in
    descending order; trailing zeros mark directions added to complete a
    rank-deficient basis (``rank_deficient`` is then True).
    """

    basis: ComplexMatrix
    offset: ComplexVector
    spectrum: NDArray[np.float64]
    num_train: int = 2
    rank_deficient: bool = False

    def __post_init__(self) -> None:
        basis = as_complex_matrix(self.basis, "basis")
        offset = as_complex_vector(self.offset, "offset")
        spectrum = np.asarray(self.spectrum, dtype=np.float64)
        n, k = basis.shape
        require_length(offset, n, "offset")
        if spectrum.shape != (k,):
            raise DimensionError(f"spectrum must have length {k}, got shape {spectrum.shape}")
        if k >= n:
            raise ParameterError(f"latent dimension k={k} must be smaller than n={n}")
        if np.any(spectrum < 0) or np.any(np.diff(spectrum) > 0):
            raise ParameterError("spectrum must be non-negative and sorted in descending order")
        gram = basis.conj().T @ basis
        if not np.allclose(gram, np.eye(k), rtol=0.0, atol=ORTHONORMALITY_TOL):
            raise ParameterError("basis columns are not orthonormal")
        if self.num_train < 2:
            raise ParameterError("num_train must be at least 2")
        for arr in (basis, offset, spectrum):
            arr.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "spectrum", spectrum)

    @property
    def n(self) -> int:
        return int(self.basis.shape[0])

    @property
    def k(self) -> int:
        return int(self.basis.shape[1])

    def generate(self, z: ArrayLike) -> ComplexVector:
        latent = as_complex_vector(z, "latent")
        require_length(latent, self.k, "latent")
        return self.basis @ latent + self.offset

    def project(self, f: ArrayLike) -> ComplexVector:
        """Closed-form minimiser of ||Gz + b - f||: z0 = G^H (f - b)."""
        signal = as_complex_vector(f, "signal")
        require_length(signal, self.n, "signal")
        return self.basis.conj().T @ (signal - self.offset)

    def bias_of(self, f: ArrayLike) -> float:
        """Distance from ``f`` to the range of the model."""
        signal = as_complex_vector(f, "signal")
        return float(np.linalg.norm(self.generate(self.project(signal)) - signal))

    def pullback(self, gradient: ArrayLike) -> ComplexVector:
        """Chain rule through the linear part: G^H g."""
        return self.basis.conj().T @ np.asarray(gradient, dtype=np.complex128)

    def latent_scale(self, num_train: int | None = None) -> NDArray[np.float64]:
        count = self.num_train if num_train is None else num_train
        if count < 2:
            raise ParameterError("num_train must be at least 2")
        return self.spectrum / np.sqrt(count)

    def sample_latent(self, seed: int | np.random.Generator, num_train: int | None = None) -> ComplexVector:
        """Latent draw matching the empirical scale of the PCA coefficients.

        Component i has real and imaginary parts with standard deviation
        ``spectrum[i] / sqrt(num_train)``.
        """
        rng = np.random.default_rng(seed)
        return complex_normal(rng, self.k, self.latent_scale(num_train))


def train_pca(dataset: Sequence[ArrayLike] | ArrayLike, k: int) -> GenerativeModel:
    """Fit the affine model to ``N`` samples of length ``n`` (one sample per row)."""
    data = np.asarray([np.asarray(sample, dtype=np.complex128) for sample in dataset])
    if data.ndim != 2:
        raise DimensionError("dataset samples must all have the same length")
    num_samples, n = data.shape
    if num_samples < 2:
        raise DatasetError(f"PCA needs at least 2 samples, got {num_samples}")
    if not 1 <= k < min(n, num_samples):
        raise ParameterError(f"k must satisfy 1 <= k < min(n, N) = {min(n, num_samples)}, got {k}")
    if not np.all(np.isfinite(data)):
        raise ParameterError("dataset contains non-finite entries")

    matrix = data.T
    offset = matrix.mean(axis=1)
    centered = matrix - offset[:, None]
    left, singular, _ = np.linalg.svd(centered, full_matrices=False)

    scale = max(float(np.abs(matrix).max()), 1.0)
    tol = max(matrix.shape) * np.finfo(np.float64).eps * max(float(singular[0]), scale)
    rank = int(np.count_nonzero(singular > tol))

    if rank >= k:
        basis = left[:, :k]
        spectrum = singular[:k].copy()
        deficient = False
    else:
        # orthonormal completion of the numerical range
        completion, _ = np.linalg.qr(np.hstack([left[:, :rank], np.eye(n, dtype=np.complex128)]))
        basis = np.hstack([left[:, :rank], completion[:, rank:k]])
        spectrum = np.concatenate([singular[:rank], np.zeros(k - rank)])
        deficient = True
        logger.warning("Training data has rank %d < k=%d; padded basis with %d zero-variance directions", rank, k, k - rank)

    logger.info("Trained PCA model n=%d k=%d on %d samples", n, k, num_samples)
    return GenerativeModel(
        basis=basis,
        offset=offset,
        spectrum=spectrum,
        num_train=num_samples,
        rank_deficient=deficient,
    )


def generate(model: GenerativeModel, z: ArrayLike) -> ComplexVector:
    return model.generate(z)


def project(model: GenerativeModel, f: ArrayLike) -> ComplexVector:
    return model.project(f)


def bias_of(model: GenerativeModel, f: ArrayLike) -> float:
    return model.bias_of(f)


def sample_latent(model: GenerativeModel, seed: int | np.random.Generator, num_train: int | None = None) -> ComplexVector:
    return model.sample_latent(seed, num_train)


def save_model(model: GenerativeModel, path: Path | str) -> Path:
    """Text format: ``n k N_train`` header, b, G row-major, spectrum."""
    target = Path(path)
    fmt = "{:.17g} {:.17g}"
    lines = [f"{model.n} {model.k} {model.num_train}"]
    lines.extend(fmt.format(v.real, v.imag) for v in model.offset)
    lines.extend(fmt.format(v.real, v.imag) for v in model.basis.reshape(-1))
    lines.extend(f"{s:.17g}" for s in model.spectrum)
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote generative model (n=%d, k=%d) to %s", model.n, model.k, target)
    return target


def load_model(path: Path | str) -> GenerativeModel:
    source = Path(path)
    lines = source.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError("empty model file", path=source, row=1)
    header = lines[0].split()
    if len(header) not in (2, 3):
        raise ParseError("header must read 'n k' or 'n k N_train'", path=source, row=1)
    try:
        n, k = int(header[0]), int(header[1])
        num_train = int(header[2]) if len(header) == 3 else max(2, k + 1)
    except ValueError as exc:
        raise ParseError(f"non-integer header: {lines[0]!r}", path=source, row=1) from exc
    expected = 1 + n + n * k + k
    if len(lines) < expected:
        raise ParseError(f"expected {expected} lines, found {len(lines)}", path=source, row=len(lines))

    def _complex(row: int) -> complex:
        parts = lines[row].split()
        if len(parts) != 2:
            raise ParseError("expected 're im'", path=source, row=row + 1)
        try:
            return complex(float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise ParseError(f"invalid number in {lines[row]!r}", path=source, row=row + 1) from exc

    offset = np.array([_complex(1 + i) for i in range(n)])
    basis = np.array([_complex(1 + n + i) for i in range(n * k)]).reshape(n, k)
    spectrum = []
    for row in range(1 + n + n * k, expected):
        try:
            spectrum.append(float(lines[row]))
        except ValueError as exc:
            raise ParseError(f"invalid spectrum value {lines[row]!r}", path=source, row=row + 1) from exc
    spectrum_arr = np.asarray(spectrum)
    try:
        return GenerativeModel(
            basis=basis,
            offset=offset,
            spectrum=spectrum_arr,
            num_train=num_train,
            rank_deficient=bool(np.any(spectrum_arr == 0.0)),
        )
    except (ParameterError, DimensionError) as exc:
        raise ParseError(str(exc), path=source) from exc
