"""Complex vector helpers, the unitary DFT and the real-stacking bijection."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, ParameterError

ComplexVector = NDArray[np.complex128]
ComplexMatrix = NDArray[np.complex128]
RealVector = NDArray[np.float64]


def as_complex_vector(value: ArrayLike, name: str = "vector") -> ComplexVector:
    """Coerce ``value`` into a finite, non-empty 1-D complex128 array."""
    arr = np.asarray(value, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def as_real_vector(value: ArrayLike, name: str = "vector") -> RealVector:
    arr = np.asarray(value)
    if np.iscomplexobj(arr):
        raise ParameterError(f"{name} must be real-valued")
    arr = arr.astype(np.float64, copy=False)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def as_complex_matrix(value: ArrayLike, name: str = "matrix") -> ComplexMatrix:
    arr = np.asarray(value, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def require_length(vector: np.ndarray, length: int, name: str = "vector") -> None:
    if vector.shape != (length,):
        raise DimensionError(f"{name} must have length {length}, got shape {vector.shape}")


def dft(v: ArrayLike) -> ComplexVector:
    """Unitary DFT: entry j is (1/sqrt(n)) * sum_t v[t] exp(-2 pi i j t / n)."""
    return np.fft.fft(as_complex_vector(v, "dft input"), norm="ortho")


def idft(v: ArrayLike) -> ComplexVector:
    """Inverse (and adjoint) of :func:`dft`."""
    return np.fft.ifft(as_complex_vector(v, "idft input"), norm="ortho")


def dft_matrix(n: int) -> ComplexMatrix:
    """Dense unitary DFT matrix, built by direct summation."""
    if n < 1:
        raise DimensionError("DFT size must be positive")
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


def real_stack(v: ArrayLike) -> RealVector:
    """Map C^d to R^{2d}: real parts first, imaginary parts last."""
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionError(f"real_stack expects a 1-D array, got shape {arr.shape}")
    return np.concatenate([arr.real, arr.imag])


def real_unstack(r: ArrayLike) -> ComplexVector:
    """Inverse of :func:`real_stack`."""
    arr = np.asarray(r, dtype=np.float64)
    if arr.ndim != 1 or arr.size % 2:
        raise DimensionError(f"real_unstack expects an even-length 1-D array, got shape {arr.shape}")
    d = arr.size // 2
    out = np.empty(d, dtype=np.complex128)
    out.real = arr[:d]
    out.imag = arr[d:]
    return out


def inner(u: ArrayLike, v: ArrayLike) -> complex:
    """Hermitian inner product sum(conj(u) * v)."""
    a = np.asarray(u, dtype=np.complex128)
    b = np.asarray(v, dtype=np.complex128)
    if a.ndim != 1 or a.shape != b.shape:
        raise DimensionError(f"inner product needs equal-length vectors, got {a.shape} and {b.shape}")
    return complex(np.vdot(a, b))


def derive_seed(*keys: int) -> int:
    """Deterministic 63-bit seed derived from a tuple of non-negative integers."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def complex_normal(rng: np.random.Generator, size: int, scale: float | NDArray[np.float64] = 1.0) -> ComplexVector:
    """Circular complex Gaussian draws whose real and imaginary parts each have std ``scale``."""
    draws = rng.standard_normal((2, size))
    return np.asarray(scale) * (draws[0] + 1j * draws[1])


def align_phase(estimate: ArrayLike, reference: ArrayLike) -> ComplexVector:
    """Rotate ``estimate`` by the global phase that brings it closest to ``reference``."""
    est = np.asarray(estimate, dtype=np.complex128)
    ref = np.asarray(reference, dtype=np.complex128)
    if est.ndim != 1 or est.shape != ref.shape:
        raise DimensionError(f"cannot align vectors of shapes {est.shape} and {ref.shape}")
    overlap = np.vdot(est, ref)
    if overlap == 0:
        return est.copy()
    return est * (overlap / abs(overlap))
