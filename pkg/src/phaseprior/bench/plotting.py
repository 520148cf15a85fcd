"""SVG figures: the error-versus-SNR sweep plot and the signal gallery.

Figures are built on :class:`matplotlib.figure.Figure` directly (no pyplot state),
so they can be drawn from worker threads and never need a display.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from numpy.typing import ArrayLike

from ..errors import ParameterError
from .sweep import SweepResult

logger = logging.getLogger(__name__)

ERROR_FLOOR = 1e-16
PANEL_SIZE = (5.0, 4.0)

# fixed hash salt and no timestamp give byte-identical files for identical input
_SVG_RC = {"svg.hashsalt": "phaseprior", "path.simplify": False, "svg.fonttype": "none"}
_SVG_METADATA = {"Date": None}


def line_gid(scenario: str, method: str) -> str:
    """Element id of one curve in the emitted SVG."""
    return f"{scenario}:{method}"


def _save_svg(figure: Figure, path: Path | str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(_SVG_RC):
        figure.savefig(target, format="svg", metadata=_SVG_METADATA)
    logger.info("Wrote figure to %s", target)
    return target


def emit_plot(result: SweepResult, path: Path | str) -> Path:
    """Mean relative error against SNR, one panel per scenario and one curve per method."""
    if not result.records:
        raise ParameterError("cannot plot an empty sweep result")
    scenarios = result.scenarios()
    methods = result.methods()
    sigmas = result.sigmas()

    with matplotlib.rc_context(_SVG_RC):
        figure = Figure(figsize=(PANEL_SIZE[0] * len(scenarios), PANEL_SIZE[1]))
        axes = figure.subplots(1, len(scenarios), squeeze=False)[0]
        for ax, scenario in zip(axes, scenarios):
            for method in methods:
                points = []
                for sigma in sigmas:
                    snr = result.mean_snr_db(sigma, scenario)
                    error = result.mean_error(sigma, method, scenario)
                    if math.isfinite(snr) and not math.isnan(error):
                        points.append((snr, max(error, ERROR_FLOOR)))
                points.sort()
                xs = [p[0] for p in points]
                ys = [p[1] for p in points]
                (line,) = ax.plot(xs, ys, label=method.value, linewidth=1.5)
                line.set_gid(line_gid(scenario.value, method.value))
            ax.set_yscale("log")
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel("mean relative error")
            ax.set_title(scenario.value.replace("_", " "))
            ax.grid(True, which="both", alpha=0.3)
            ax.legend()
        figure.tight_layout()
    return _save_svg(figure, path)


def _tile_shape(n: int) -> tuple[int, int]:
    side = math.isqrt(n)
    return (side, side) if side * side == n else (1, n)


def emit_gallery(signals: Sequence[ArrayLike], path: Path | str, columns: int | None = None) -> Path:
    """Real parts in the top row, imaginary parts in the bottom row."""
    images = [np.asarray(signal, dtype=np.complex128) for signal in signals]
    if not images:
        raise ParameterError("gallery needs at least one signal")
    n = images[0].size
    if any(image.size != n for image in images):
        raise ParameterError("gallery signals must share one length")
    count = len(images) if columns is None else min(columns, len(images))
    if count < 1:
        raise ParameterError("columns must be positive")
    shape = _tile_shape(n)

    with matplotlib.rc_context(_SVG_RC):
        figure = Figure(figsize=(1.2 * count, 2.6))
        axes = figure.subplots(2, count, squeeze=False)
        for col, image in enumerate(images[:count]):
            for row, part in enumerate((image.real, image.imag)):
                ax = axes[row][col]
                ax.imshow(part.reshape(shape), cmap="gray", vmin=0.0, vmax=1.0, interpolation="nearest")
                ax.set_axis_off()
        figure.subplots_adjust(wspace=0.05, hspace=0.05)
    return _save_svg(figure, path)
