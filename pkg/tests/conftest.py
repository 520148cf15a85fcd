"""Pytest configuration for timeout logging, diagnostics and shared fixtures.

Test Timestamp: 2026-10-17T10:00:00+08:00
Coverage Scope: Global timeout monitoring and traceback dumping for slow tests;
seeded operators, generative models and synthetic digit-like datasets.
"""

from __future__ import annotations

import faulthandler
import logging
import os
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

_DEFAULT_TIMEOUT_SECONDS = float(os.getenv("PYTEST_TEST_TIMEOUT", "60"))
_LOGGER = logging.getLogger("tests.timeout")

_ROOT_DIR = Path(__file__).resolve().parents[1]
_SRC_DIR = _ROOT_DIR / "src"
if str(_SRC_DIR) not in sys.path:
    sys.path.insert(0, str(_SRC_DIR))

from phaseprior.bench.datasets import complexify, write_digits  # noqa: E402
from phaseprior.generative import GenerativeModel, train_pca  # noqa: E402
from phaseprior.measurement import MeasurementOperator, make_probes  # noqa: E402


def pytest_addoption(parser):
    parser.addoption(
        "--test-timeout",
        action="store",
        default=str(_DEFAULT_TIMEOUT_SECONDS),
        help=(
            "Per-test timeout threshold in seconds. "
            "If a test exceeds this duration, a stack trace is dumped to stderr."
        ),
    )


@dataclass
class _TimeoutGuard:
    nodeid: str
    timeout: float
    start: float | None = None
    _timer: threading.Timer | None = None

    def start_timer(self) -> None:
        if self.timeout <= 0:
            return
        self.start = time.perf_counter()
        self._timer = threading.Timer(self.timeout, self._on_timeout)
        self._timer.daemon = True
        self._timer.start()

    def cancel(self) -> None:
        if self._timer:
            self._timer.cancel()
            self._timer = None
        if self.start is not None:
            duration = time.perf_counter() - self.start
            _LOGGER.debug("Test %s completed in %.3fs", self.nodeid, duration)

    def _on_timeout(self) -> None:
        elapsed = None if self.start is None else time.perf_counter() - self.start
        _LOGGER.error(
            "Test %s exceeded timeout %.1fs (elapsed %.3fs). Dumping stack...",
            self.nodeid,
            self.timeout,
            0.0 if elapsed is None else elapsed,
        )
        faulthandler.dump_traceback(file=sys.stderr)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    timeout_value = float(item.config.getoption("--test-timeout"))
    guard = _TimeoutGuard(nodeid=item.nodeid, timeout=timeout_value)
    guard.start_timer()
    try:
        yield
    finally:
        guard.cancel()


def synthetic_digits(count: int, num_pixels: int = 64, seed: int = 0) -> np.ndarray:
    """Non-negative images mixed from a few smooth templates, shaped like 0..16 digit scans."""
    rng = np.random.default_rng(seed)
    side = int(np.sqrt(num_pixels))
    grid = np.linspace(-1.0, 1.0, side)
    xx, yy = np.meshgrid(grid, grid)
    centres = ((-0.5, -0.5), (0.5, -0.5), (0.0, 0.0), (-0.5, 0.5), (0.5, 0.5), (0.0, 0.7))
    basis = np.stack([np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / 0.3).ravel() for cx, cy in centres])
    weights = rng.uniform(0.0, 1.0, size=(count, basis.shape[0]))
    images = weights @ basis + 0.05 * rng.standard_normal((count, num_pixels))
    return np.clip(16.0 * images / images.max(), 0.0, 16.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_operator() -> MeasurementOperator:
    return MeasurementOperator(make_probes(4, 8, seed=11))


@pytest.fixture
def small_model() -> GenerativeModel:
    data = np.random.default_rng(5).standard_normal((40, 8)) + 1j * np.random.default_rng(6).standard_normal((40, 8))
    return train_pca(list(data), 3)


@pytest.fixture
def digit_images() -> list[np.ndarray]:
    return list(synthetic_digits(150, seed=3))


@pytest.fixture
def complex_digits(digit_images: list[np.ndarray]) -> list[np.ndarray]:
    return complexify([image / 16.0 for image in digit_images], seed=0)


@pytest.fixture
def digits_csv(tmp_path: Path, digit_images: list[np.ndarray]) -> Path:
    return write_digits(digit_images, tmp_path / "digits.csv")
