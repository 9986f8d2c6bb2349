"""Grid-map ingestion, synthetic ground truth, and the batch measurement oracle.

Grid CSV format: header ``x_mm,y_mm,value``, one row per lattice point. Rows
must form a complete rectangular lattice with uniform spacing per axis.
Values are written with ``repr`` so a write/load round-trip is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (IncompleteLattice, InvalidConfig, NonUniformSpacing,
                     OffGridIndex, ParseError)
from .grid import GridDomain

CSV_HEADER = "x_mm,y_mm,value"


@dataclass(frozen=True)
class GridMap:
    """Ground-truth (or measured) values for every lattice point."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", values)
        if values.shape[0] != self.domain.n_points:
            raise InvalidConfig(
                f"expected {self.domain.n_points} values, got {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidConfig("grid values must be finite")

    def truth_positive(self, theta: float) -> np.ndarray:
        """Boolean positive-class labels: f(x) >= theta (boundary counts positive)."""
        return self.values >= theta

    def value_range(self) -> float:
        return float(self.values.max() - self.values.min())


def _axis_coords(raw: np.ndarray, axis_name: str) -> np.ndarray:
    coords = np.unique(raw)
    if coords.size > 1:
        steps = np.diff(coords)
        ref = steps[0]
        if np.any(np.abs(steps - ref) > 1e-6 * max(abs(ref), 1e-300)):
            raise NonUniformSpacing(
                f"{axis_name} coordinates are not uniformly spaced: steps "
                f"range {steps.min():g}..{steps.max():g}"
            )
    return coords


def load_grid_csv(path) -> GridMap:
    """Load a complete rectangular lattice from CSV."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ParseError(f"{path}: expected header '{CSV_HEADER}', got '{header}'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: no data rows")

    arr = np.asarray(rows)
    xs = _axis_coords(arr[:, 0], "x")
    ys = _axis_coords(arr[:, 1], "y")
    nx, ny = xs.size, ys.size

    cells = {}
    for x, y, v in rows:
        key = (x, y)
        if key in cells:
            raise ParseError(f"{path}: duplicate coordinate ({x:g}, {y:g})")
        cells[key] = v
    if len(cells) != nx * ny:
        for y in ys:
            for x in xs:
                if (x, y) not in cells:
                    raise IncompleteLattice(
                        f"{path}: missing lattice cell at ({x:g}, {y:g})"
                    )

    spacing_x = float(xs[1] - xs[0]) if nx > 1 else 1.0
    spacing_y = float(ys[1] - ys[0]) if ny > 1 else 1.0
    domain = GridDomain(origin=(float(xs[0]), float(ys[0])),
                        spacing=(spacing_x, spacing_y), counts=(nx, ny))
    values = np.empty(nx * ny)
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            values[iy * nx + ix] = cells[(x, y)]
    return GridMap(domain=domain, values=values)


def write_grid_csv(grid_map: GridMap, path) -> None:
    """Write the lattice in index order (round-trips exactly through load)."""
    points = grid_map.domain.all_points()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for (x, y), v in zip(points, grid_map.values):
            fh.write(f"{float(x)!r},{float(y)!r},{float(v)!r}\n")


SYNTH_KINDS = ("sinusoid_ridge", "gp_draw", "edge_band")


def synth_map(kind: str, domain: GridDomain, params: dict | None = None,
              seed: int = 0) -> GridMap:
    """Deterministic synthetic ground-truth surface.

    ``edge_band`` emulates the contaminated-periphery geometry: values drop to
    ``low`` within ``band_mm`` of the lattice boundary and sit at ``high``
    inside. ``gp_draw`` samples a smooth random surface; ``sinusoid_ridge`` is
    a fixed analytic ridge pattern.
    """
    params = dict(params or {})
    points = domain.all_points()
    x, y = points[:, 0], points[:, 1]

    def take(name, default):
        return float(params.pop(name, default))

    if kind == "edge_band":
        high = take("high", 5.0)
        low = take("low", 1.0)
        band = take("band_mm", 10.0)
        if band < 0:
            raise InvalidConfig("band_mm must be >= 0")
        nx, ny = domain.counts
        xmin, ymin = domain.origin
        xmax = xmin + (nx - 1) * domain.spacing[0]
        ymax = ymin + (ny - 1) * domain.spacing[1]
        dist_edge = np.minimum.reduce([x - xmin, xmax - x, y - ymin, ymax - y])
        values = np.where(dist_edge < band, low, high)
    elif kind == "sinusoid_ridge":
        nx, ny = domain.counts
        width = max((nx - 1) * domain.spacing[0], domain.spacing[0])
        height = max((ny - 1) * domain.spacing[1], domain.spacing[1])
        offset = take("offset", 3.0)
        amplitude = take("amplitude", 2.0)
        period_x = take("period_x", width)
        period_y = take("period_y", height)
        values = offset + amplitude * np.sin(2 * np.pi * (x - domain.origin[0]) / period_x) \
            * np.cos(2 * np.pi * (y - domain.origin[1]) / period_y)
    elif kind == "gp_draw":
        amplitude = take("amplitude", 1.0)
        length_scale = take("length_scale", 0.1 * max(domain.diagonal(), 1.0))
        mean = take("mean", 0.0)
        from . import backend
        gram = backend.rbf_gram(points, amplitude, length_scale,
                                np.full(domain.n_points, 1e-9 * amplitude))
        chol = np.linalg.cholesky(gram)
        rng = np.random.default_rng(seed)
        values = mean + chol @ rng.standard_normal(domain.n_points)
    else:
        raise InvalidConfig(f"unknown synthetic kind {kind!r}; expected one of {SYNTH_KINDS}")

    if params:
        raise InvalidConfig(f"unknown synth params for {kind!r}: {sorted(params)}")
    return GridMap(domain=domain, values=values)


@dataclass
class NoisyOracle:
    """Measurement oracle: ground-truth value plus fresh Gaussian noise.

    Queries consume a seeded RNG stream, so repeated queries at one index
    draw independent noise while identical seeds replay identical streams.
    """

    map: GridMap
    noise_sd: float = 0.0
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.noise_sd < 0:
            raise InvalidConfig("noise_sd must be >= 0")
        self._rng = np.random.default_rng(self.seed)

    def query(self, index: int) -> float:
        if not (0 <= index < self.map.domain.n_points):
            raise OffGridIndex(f"index {index} outside grid")
        value = float(self.map.values[index])
        if self.noise_sd > 0:
            value += self._rng.normal(0.0, self.noise_sd)
        return value

    def __call__(self, index: int) -> float:
        return self.query(index)


def oracle_query(oracle: NoisyOracle, index: int) -> float:
    """Draw one noisy measurement at a grid index."""
    return oracle.query(index)
