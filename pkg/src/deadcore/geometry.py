"""Dead core, free boundary, positive density and box-counting dimension."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .grid import BallRegion, CartesianGrid, ScalarField, ball_mask
from .model import ExponentTriple, beta_exponent

# volume of the unit ball
OMEGA = {1: 2.0, 2: math.pi}


def default_zero_threshold(grid: CartesianGrid, exponents: ExponentTriple, tol_residual: float,
                           lambda0_sup: float = 1.0) -> float:
    """``max(10 (tol / max(1, sup lambda0))^(1/(p+1-mu)), h^beta)``.

    The first term converts a residual tolerance into a value scale through
    the absorption balance ``lambda0 u^mu ~ |grad u|^p D^2 u`` near the free
    boundary; the second is the growth bound at one cell.
    """
    e = exponents
    beta = beta_exponent(e).beta
    scale = tol_residual / max(1.0, lambda0_sup)
    return max(10.0 * scale ** (1.0 / (e.p + 1 - e.mu)), grid.h ** beta)


def _nodes_csv(nodes: np.ndarray, header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in nodes:
        w.writerow([int(v) for v in row])
    return buf.getvalue()


@dataclass(frozen=True, eq=False)
class DeadCoreSet:
    grid: CartesianGrid
    mask: np.ndarray
    zero_threshold: float

    @property
    def positive_mask(self) -> np.ndarray:
        return ~self.mask

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def interior_count(self) -> int:
        """Dead nodes off the outermost layer of the grid."""
        return int((self.mask & ~self.grid.edge_mask()).sum())

    def to_csv(self) -> str:
        d = self.grid.dim
        return _nodes_csv(np.argwhere(self.mask), [f"i{k}" for k in range(d)])


def extract_dead_core(field: ScalarField, threshold: float) -> DeadCoreSet:
    """Nodes where the field is at most ``threshold``."""
    if not threshold > 0:
        raise ValueError("zero threshold must be positive")
    return DeadCoreSet(field.grid, field.values <= threshold, float(threshold))


@dataclass(frozen=True, eq=False)
class FreeBoundarySet:
    """Nodes on either side of the indicator change, as index arrays (k, dim)."""

    grid: CartesianGrid
    positive_side: np.ndarray
    dead_side: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        both = np.concatenate([self.positive_side, self.dead_side])
        return both[np.lexsort(both.T[::-1])] if len(both) else both

    def __len__(self) -> int:
        return len(self.positive_side) + len(self.dead_side)

    def contains(self, node) -> bool:
        node = np.atleast_1d(np.asarray(node, dtype=int))
        return bool(np.any(np.all(self.nodes == node, axis=1)))

    def to_csv(self) -> str:
        d = self.grid.dim
        rows = [list(n) + [1] for n in self.positive_side] + [list(n) + [0] for n in self.dead_side]
        rows.sort()
        return _nodes_csv(np.array(rows, dtype=int).reshape(-1, d + 1),
                          [f"i{k}" for k in range(d)] + ["positive"])


def free_boundary(dead: DeadCoreSet) -> FreeBoundarySet:
    """Nodes with a lattice neighbour across the dead/positive indicator change."""
    m = dead.mask
    pos = ~m
    touch_dead = np.zeros_like(m)
    touch_pos = np.zeros_like(m)
    for axis in range(m.ndim):
        for shift in (1, -1):
            nb_dead = np.zeros_like(m)
            nb_pos = np.zeros_like(m)
            src = [slice(None)] * m.ndim
            dst = [slice(None)] * m.ndim
            if shift == 1:
                src[axis], dst[axis] = slice(1, None), slice(None, -1)
            else:
                src[axis], dst[axis] = slice(None, -1), slice(1, None)
            nb_dead[tuple(dst)] = m[tuple(src)]
            nb_pos[tuple(dst)] = pos[tuple(src)]
            touch_dead |= nb_dead
            touch_pos |= nb_pos
    return FreeBoundarySet(dead.grid, np.argwhere(pos & touch_dead), np.argwhere(m & touch_pos))


# ---------------------------------------------------------------------------
# density


def _ball_inside(grid: CartesianGrid, center: np.ndarray, r: float) -> bool:
    lo = np.array(grid.lo)
    return bool(np.all(center - r >= lo - 1e-12) and np.all(center + r <= grid.hi + 1e-12))


def density_ratio(dead: DeadCoreSet, x0, r: float) -> float:
    """``#(positive nodes in B_r(x0)) h^n / r^n``.

    ``x0`` is a node index.  Balls leaving the grid box are rejected because
    the estimate is interior only.
    """
    grid = dead.grid
    if r < 3 * grid.h * (1 - 1e-12):
        raise ValueError(f"radius {r} below 3h = {3 * grid.h}")
    c = grid.node_coord(x0)
    if not _ball_inside(grid, c, r):
        raise ValueError("ball leaves the domain")
    inside = ball_mask(grid, BallRegion(tuple(c), r))
    return float((inside & dead.positive_mask).sum()) * grid.cell_volume / r ** grid.dim


@dataclass
class DensityReport:
    x0: tuple
    radii: list
    ratios: list
    omega_n: float

    @property
    def min_ratio(self) -> float:
        return float(min(self.ratios))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "ratio", "ratio_over_omega"])
        for r, q in zip(self.radii, self.ratios):
            w.writerow([repr(float(r)), repr(float(q)), repr(float(q / self.omega_n))])
        return buf.getvalue()


def density_report(dead: DeadCoreSet, x0, radii) -> DensityReport:
    ratios = [density_ratio(dead, x0, r) for r in radii]
    return DensityReport(tuple(int(i) for i in np.atleast_1d(x0)), [float(r) for r in radii],
                         ratios, OMEGA[dead.grid.dim])


# ---------------------------------------------------------------------------
# box counting


@dataclass
class DimensionReport:
    box_sizes: list
    counts: list
    slope: float
    intercept: float
    fit_residual: float

    def to_dict(self) -> dict:
        return {
            "box_sizes": [float(s) for s in self.box_sizes],
            "counts": [int(c) for c in self.counts],
            "slope": float(self.slope),
            "intercept": float(self.intercept),
            "fit_residual": float(self.fit_residual),
        }


def default_box_sizes(grid: CartesianGrid, levels: int = 5) -> list[float]:
    return [grid.h * 2 ** k for k in range(levels)]


def box_dimension(fb: FreeBoundarySet, box_sizes=None) -> DimensionReport:
    """Least-squares slope of log(box count) against log(1/size).

    Boxes are aligned with the grid origin and their sides must be integer
    multiples of h, so counting is done in index arithmetic.
    """
    grid = fb.grid
    sizes = default_box_sizes(grid) if box_sizes is None else [float(s) for s in box_sizes]
    if len(sizes) < 4:
        raise ValueError("need at least four box sizes")
    nodes = fb.nodes
    counts = []
    for s in sizes:
        k = s / grid.h
        if k < 1 - 1e-9 or abs(k - round(k)) > 1e-9:
            raise ValueError(f"box size {s} is not a multiple of h >= h")
        k = int(round(k))
        counts.append(len({tuple(row) for row in (nodes // k).tolist()}) if len(nodes) else 0)
    occupied = [(s, c) for s, c in zip(sizes, counts) if c > 0]
    if len(occupied) < 2:
        raise ValueError("fewer than two occupied scales")
    x = np.log([1.0 / s for s, _ in occupied])
    y = np.log([c for _, c in occupied])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DimensionReport(sizes, counts, float(slope), float(intercept), resid)


def spread_points(nodes: np.ndarray, count: int) -> np.ndarray:
    """``count`` nodes spaced evenly by angle about the centroid of ``nodes``.

    In 1-D the nodes are taken in index order.  Fewer nodes than ``count``
    returns them all.
    """
    nodes = np.asarray(nodes)
    if len(nodes) <= count:
        return nodes
    if nodes.shape[1] == 1:
        order = np.argsort(nodes[:, 0], kind="stable")
    else:
        c = nodes - nodes.mean(axis=0)
        order = np.lexsort((nodes[:, 1], nodes[:, 0], np.arctan2(c[:, 1], c[:, 0])))
    idx = np.linspace(0, len(nodes), count, endpoint=False).astype(int)
    return nodes[order[idx]]
