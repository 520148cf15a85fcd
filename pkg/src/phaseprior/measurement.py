"""Masked Fourier measurements: probes, the operator A and the intensity map |Af|^2."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, ParameterError, ParseError
from .numerics import (
    ComplexMatrix,
    ComplexVector,
    RealVector,
    as_complex_vector,
    as_real_vector,
    dft_matrix,
    real_stack,
    require_length,
)

logger = logging.getLogger(__name__)


class ProbeAlphabet(str, enum.Enum):
    BINARY = "binary"  # {0, 1}
    SIGNED = "signed"  # {-1, +1}


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """``num_probes`` masks of length ``n`` stored row-wise."""

    probes: NDArray[np.float64]
    seed: int
    alphabet: ProbeAlphabet = ProbeAlphabet.BINARY

    def __post_init__(self) -> None:
        probes = np.asarray(self.probes, dtype=np.float64)
        if probes.ndim != 2 or probes.shape[0] < 1 or probes.shape[1] < 1:
            raise DimensionError(f"probe array must be 2-D and non-empty, got shape {probes.shape}")
        allowed = (0.0, 1.0) if self.alphabet is ProbeAlphabet.BINARY else (-1.0, 1.0)
        if not np.all(np.isin(probes, allowed)):
            raise ParameterError(f"probe entries must lie in {allowed}")
        if not np.all(np.any(probes != 0, axis=1)):
            raise ParameterError("every probe needs at least one nonzero entry")
        probes.setflags(write=False)
        object.__setattr__(self, "probes", probes)

    @property
    def num_probes(self) -> int:
        return int(self.probes.shape[0])

    @property
    def n(self) -> int:
        return int(self.probes.shape[1])


def make_probes(
    num_probes: int,
    n: int,
    seed: int,
    alphabet: ProbeAlphabet | str = ProbeAlphabet.BINARY,
) -> ProbeSet:
    """Draw i.i.d. Bernoulli(1/2) probes; all-zero probes are redrawn."""
    if num_probes <= 0 or n <= 0:
        raise ParameterError(f"probe count and dimension must be positive, got {num_probes} and {n}")
    alphabet = ProbeAlphabet(alphabet)
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(num_probes, n))
    for row in range(num_probes):
        while not bits[row].any():
            bits[row] = rng.integers(0, 2, size=n)
    values = bits.astype(np.float64)
    if alphabet is ProbeAlphabet.SIGNED:
        values = 2.0 * values - 1.0
    return ProbeSet(probes=values, seed=seed, alphabet=alphabet)


def save_probes(probe_set: ProbeSet, path: Path | str) -> Path:
    """Write ``n num_probes seed`` followed by one line of digits per probe."""
    target = Path(path)
    lines = [f"{probe_set.n} {probe_set.num_probes} {probe_set.seed}"]
    for row in probe_set.probes:
        lines.append(" ".join(str(int(v)) for v in row))
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote %d probes to %s", probe_set.num_probes, target)
    return target


def load_probes(path: Path | str) -> ProbeSet:
    source = Path(path)
    lines = [line for line in source.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise ParseError("empty probe file", path=source, row=1)
    header = lines[0].split()
    if len(header) != 3:
        raise ParseError("header must read 'n num_probes seed'", path=source, row=1)
    try:
        n, num_probes, seed = (int(tok) for tok in header)
    except ValueError as exc:
        raise ParseError(f"non-integer header: {lines[0]!r}", path=source, row=1) from exc
    if len(lines) - 1 != num_probes:
        raise ParseError(f"expected {num_probes} probe lines, found {len(lines) - 1}", path=source, row=len(lines))
    rows = []
    for index, line in enumerate(lines[1:], start=2):
        try:
            values = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise ParseError(f"non-integer probe entry in {line!r}", path=source, row=index) from exc
        if len(values) != n:
            raise ParseError(f"expected {n} entries, found {len(values)}", path=source, row=index)
        rows.append(values)
    probes = np.asarray(rows, dtype=np.float64)
    alphabet = ProbeAlphabet.SIGNED if np.any(probes < 0) else ProbeAlphabet.BINARY
    try:
        return ProbeSet(probes=probes, seed=seed, alphabet=alphabet)
    except (ParameterError, DimensionError) as exc:
        raise ParseError(str(exc), path=source) from exc


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    """The stacked operator A = (F diag(a_1); ...; F diag(a_l)) and A(f) = |Af|^2.

    Block ``i`` of a measurement vector occupies entries ``i*n:(i+1)*n``.
    """

    probe_set: ProbeSet

    @classmethod
    def from_probes(cls, probes: ArrayLike, seed: int = 0) -> "MeasurementOperator":
        arr = np.asarray(probes, dtype=np.float64)
        alphabet = ProbeAlphabet.SIGNED if np.any(arr < 0) else ProbeAlphabet.BINARY
        return cls(ProbeSet(probes=arr, seed=seed, alphabet=alphabet))

    @property
    def _masks(self) -> NDArray[np.float64]:
        return self.probe_set.probes

    @property
    def n(self) -> int:
        return self.probe_set.n

    @property
    def num_probes(self) -> int:
        return self.probe_set.num_probes

    @property
    def m(self) -> int:
        return self.n * self.num_probes

    def apply(self, f: ArrayLike) -> ComplexVector:
        """Af: block i is dft(a_i * f)."""
        vec = as_complex_vector(f, "signal")
        require_length(vec, self.n, "signal")
        return np.fft.fft(self._masks * vec[None, :], axis=1, norm="ortho").reshape(self.m)

    def adjoint(self, g: ArrayLike) -> ComplexVector:
        """A^H g = sum_i conj(a_i) * idft(g_i)."""
        vec = as_complex_vector(g, "measurement")
        require_length(vec, self.m, "measurement")
        blocks = np.fft.ifft(vec.reshape(self.num_probes, self.n), axis=1, norm="ortho")
        return np.sum(np.conj(self._masks) * blocks, axis=0)

    def forward(self, f: ArrayLike) -> RealVector:
        """Intensities |Af|^2."""
        return np.abs(self.apply(f)) ** 2

    def datafit_gradient(self, f: ArrayLike, y: ArrayLike) -> RealVector:
        """Real-stacked gradient of ||A(f) - y||^2, i.e. real_stack(4 A^H((|Af|^2 - y) * Af))."""
        return real_stack(self.datafit_gradient_complex(f, y))

    def datafit_gradient_complex(self, f: ArrayLike, y: ArrayLike) -> ComplexVector:
        data = as_real_vector(y, "intensities")
        require_length(data, self.m, "intensities")
        u = self.apply(f)
        residual = np.abs(u) ** 2 - data
        return 4.0 * self.adjoint(residual * u)

    def datafit(self, f: ArrayLike, y: ArrayLike) -> float:
        data = as_real_vector(y, "intensities")
        require_length(data, self.m, "intensities")
        diff = self.forward(f) - data
        return float(np.dot(diff, diff))

    def dense(self) -> ComplexMatrix:
        """Explicit m x n matrix, for small problems and as a test oracle."""
        fourier = dft_matrix(self.n)
        return np.vstack([fourier * mask[None, :] for mask in self._masks])


def apply_A(op: MeasurementOperator, f: ArrayLike) -> ComplexVector:
    return op.apply(f)


def apply_A_adjoint(op: MeasurementOperator, g: ArrayLike) -> ComplexVector:
    return op.adjoint(g)


def forward(op: MeasurementOperator, f: ArrayLike) -> RealVector:
    return op.forward(f)


def datafit_gradient(op: MeasurementOperator, f: ArrayLike, y: ArrayLike) -> RealVector:
    return op.datafit_gradient(f, y)
