"""Parameter sweeps, cusp detection and finite-size entropy scaling."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

TAU_CUSP = 10.0
DEFAULT_GRID_POINTS = 121


@dataclass(frozen=True)
class SweepResult:
    """One record per grid point; failed points carry an 'error' entry
    instead of aborting the sweep."""

    axis: str
    grid: np.ndarray
    records: tuple

    def series(self, key):
        """Extract one record field as a float array (NaN where missing)."""
        out = np.full(len(self.records), np.nan)
        for i, rec in enumerate(self.records):
            value = rec.get(key)
            if value is not None:
                out[i] = float(value)
        return out


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit of S against ln L: S = (c/3) ln L + b."""

    lengths: np.ndarray
    entropies: np.ndarray
    slope: float
    intercept: float
    residual: float

    @property
    def central_charge(self) -> float:
        return 3.0 * self.slope


def sweep(point_fn, axis, grid, workers=1) -> SweepResult:
    """Evaluate ``point_fn`` over a strictly increasing grid.

    Results are keyed by grid index, so worker count never changes the
    assembled output.  Exceptions at isolated points become flagged records.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size and np.any(np.diff(grid) <= 0):
        raise ConfigError("sweep grid must be strictly increasing")

    def run(value):
        try:
            rec = point_fn(float(value))
            if not isinstance(rec, dict):
                raise ConfigError("sweep point function must return a dict")
            return rec
        except Exception as exc:  # noqa: BLE001 - flagged, not fatal
            return {"error": f"{type(exc).__name__}: {exc}"}

    if workers > 1 and grid.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, grid))
    else:
        records = [run(v) for v in grid]
    return SweepResult(axis=axis, grid=grid, records=tuple(records))


def detect_cusps(series, grid, tau=TAU_CUSP):
    """Grid points where the second difference of a series spikes.

    A point is a cusp candidate when |second difference| exceeds ``tau``
    times the median absolute second difference.  Advisory only; needs at
    least 5 points.
    """
    series = np.asarray(series, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if series.size != grid.size:
        raise ConfigError("series and grid lengths differ")
    if series.size < 5:
        raise ConfigError("cusp detection needs at least 5 grid points")
    d2 = np.abs(series[2:] - 2 * series[1:-1] + series[:-2])
    med = np.median(d2)
    hits = np.flatnonzero(d2 > tau * med)
    return grid[hits + 1]


def fit_central_charge(lengths, entropies) -> ScalingFit:
    """Fit S = (c/3) ln L + b over at least four lattice sizes."""
    lengths = np.asarray(lengths, dtype=float)
    entropies = np.asarray(entropies, dtype=float)
    if lengths.size != entropies.size:
        raise ConfigError("lengths and entropies must have equal length")
    if lengths.size < 4:
        raise ConfigError("central-charge fit needs at least 4 lattice sizes")
    x = np.log(lengths)
    slope, intercept = np.polyfit(x, entropies, 1)
    fitted = slope * x + intercept
    residual = float(np.sqrt(np.mean((fitted - entropies) ** 2)))
    return ScalingFit(
        lengths=lengths,
        entropies=entropies,
        slope=float(slope),
        intercept=float(intercept),
        residual=residual,
    )
