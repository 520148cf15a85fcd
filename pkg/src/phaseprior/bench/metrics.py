"""Noise synthesis and reconstruction quality metrics."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike

from ..errors import ParameterError
from ..measurement import MeasurementOperator
from ..numerics import RealVector, align_phase, as_complex_vector, as_real_vector


def add_noise(y: ArrayLike, sigma: float, seed: int | np.random.Generator) -> tuple[RealVector, float]:
    """Add i.i.d. N(0, sigma^2) noise; returns the noisy data and the realized noise norm."""
    if not sigma >= 0:
        raise ParameterError(f"sigma must be non-negative, got {sigma}")
    data = as_real_vector(y, "intensities")
    if sigma == 0:
        return data.copy(), 0.0
    noise = sigma * np.random.default_rng(seed).standard_normal(data.size)
    return data + noise, float(np.linalg.norm(noise))


def relative_error(estimate: ArrayLike, truth: ArrayLike) -> float:
    """min over phi of ||e^{i phi} estimate - truth|| / ||truth||."""
    ref = as_complex_vector(truth, "ground truth")
    est = as_complex_vector(estimate, "estimate")
    norm = float(np.linalg.norm(ref))
    if norm == 0:
        raise ParameterError("relative error is undefined for a zero ground truth")
    return float(np.linalg.norm(align_phase(est, ref) - ref)) / norm


def snr_db(op: MeasurementOperator, truth: ArrayLike, sigma: float) -> float:
    """10 log10(||A(f0)||^2 / (m sigma^2)); +inf for noiseless data."""
    if sigma < 0:
        raise ParameterError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return math.inf
    power = float(np.sum(op.forward(truth) ** 2))
    return 10.0 * math.log10(power / (op.m * sigma**2))
