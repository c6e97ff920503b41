"""Uniform Cartesian grids, grid functions and finite-difference calculus."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import Domain


@dataclass(frozen=True)
class CartesianGrid:
    """Isotropic uniform grid with nodes ``lo + index * h``."""

    lo: tuple
    h: float
    shape: tuple

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if len(self.lo) != len(self.shape) or len(self.shape) not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        if min(self.shape) < 2:
            raise ValueError("need at least two nodes per axis")

    @classmethod
    def over_box(cls, lo, hi, n_cells: int) -> "CartesianGrid":
        """Grid with ``n_cells`` cells along the first axis of the box [lo, hi]."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        h = (hi[0] - lo[0]) / n_cells
        cells = (hi - lo) / h
        if np.any(np.abs(cells - np.round(cells)) > 1e-9):
            raise ValueError("box sides are not integer multiples of the spacing")
        return cls(tuple(lo), float(h), tuple(int(round(c)) + 1 for c in cells))

    @classmethod
    def for_domain(cls, domain: Domain, n_cells: int) -> "CartesianGrid":
        lo, hi = domain.bounding_box
        return cls.over_box(lo, hi, n_cells)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.lo) + self.h * (np.array(self.shape) - 1)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def axes(self) -> list[np.ndarray]:
        return [self.lo[k] + self.h * np.arange(self.shape[k]) for k in range(self.dim)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def node_coord(self, node) -> np.ndarray:
        return np.array(self.lo) + self.h * np.asarray(node, dtype=float)

    def nearest_node(self, x) -> tuple:
        idx = np.rint((np.asarray(x, dtype=float) - np.array(self.lo)) / self.h).astype(int)
        return tuple(int(i) for i in np.clip(idx, 0, np.array(self.shape) - 1))

    def edge_mask(self) -> np.ndarray:
        """True on the outermost layer of nodes."""
        m = np.zeros(self.shape, dtype=bool)
        for k in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[k] = 0
            m[tuple(sl)] = True
            sl[k] = -1
            m[tuple(sl)] = True
        return m

    def coarsen(self) -> "CartesianGrid":
        if any((s - 1) % 2 for s in self.shape):
            raise ValueError("grid cannot be coarsened dyadically")
        return CartesianGrid(self.lo, 2 * self.h, tuple((s - 1) // 2 + 1 for s in self.shape))


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: CartesianGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"value shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite entries")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: CartesianGrid, fn) -> "ScalarField":
        return cls(grid, np.broadcast_to(fn(grid.coords()), grid.shape))

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, c * self.values)

    __rmul__ = __mul__

    def restrict(self) -> "ScalarField":
        """Nearest-node restriction to the dyadically coarser grid."""
        coarse = self.grid.coarsen()
        return ScalarField(coarse, self.values[tuple(slice(None, None, 2) for _ in self.grid.shape)])

    # -- CSV -----------------------------------------------------------------
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.grid.dim
        w.writerow([f"i{k}" for k in range(d)] + [f"x{k + 1}" for k in range(d)] + ["value"])
        coords = self.grid.coords()
        for idx in np.ndindex(*self.grid.shape):
            w.writerow(list(idx) + [repr(float(c)) for c in coords[idx]] + [repr(float(self.values[idx]))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source, h: float | None = None) -> "ScalarField":
        text = str(source) if str(source).lstrip().startswith("i0") else Path(source).read_text()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        d = sum(1 for c in header if c.startswith("i"))
        idx = np.array([[int(r[k]) for k in range(d)] for r in body])
        xs = np.array([[float(r[d + k]) for k in range(d)] for r in body])
        vals = np.array([float(r[2 * d]) for r in body])
        shape = tuple(idx.max(axis=0) + 1)
        origin = np.flatnonzero(np.all(idx == 0, axis=1))[0]
        lo = xs[origin]
        if h is None:
            far = np.argmax(idx[:, 0])
            h = float((xs[far, 0] - lo[0]) / idx[far, 0])
        grid = CartesianGrid(tuple(lo), h, shape)
        values = np.empty(shape)
        values[tuple(idx.T)] = vals
        return cls(grid, values)


def rows_to_csv(header, rows) -> str:
    """CSV text with a header row; floats written with ``repr`` so they round-trip."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


@dataclass(frozen=True)
class BallRegion:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))


def ball_mask(grid: CartesianGrid, ball: BallRegion) -> np.ndarray:
    d2 = np.sum((grid.coords() - np.array(ball.center)) ** 2, axis=-1)
    return d2 <= ball.radius ** 2 * (1 + 1e-12)


def sup_over_ball(field: ScalarField, ball: BallRegion) -> float:
    mask = ball_mask(field.grid, ball)
    if not mask.any():
        raise ValueError("ball contains no grid nodes")
    return float(field.values[mask].max())


# ---------------------------------------------------------------------------
# derivatives


def gradient_array(values: np.ndarray, h: float) -> np.ndarray:
    """Gradient at every node, shape ``values.shape + (dim,)``.

    Second-order central differences in the interior, first-order one-sided on
    the outer layer.
    """
    g = np.gradient(values, h, edge_order=1)
    if values.ndim == 1:
        g = [g]
    return np.stack(g, axis=-1)


def gradient(field: ScalarField, node) -> np.ndarray:
    node = tuple(int(i) for i in np.atleast_1d(node))
    g = np.empty(field.grid.dim)
    v, h = field.values, field.grid.h
    for k in range(field.grid.dim):
        i = node[k]
        n = field.grid.shape[k]
        up = list(node)
        dn = list(node)
        if 0 < i < n - 1:
            up[k] += 1
            dn[k] -= 1
            g[k] = (v[tuple(up)] - v[tuple(dn)]) / (2 * h)
        elif i == 0:
            up[k] += 1
            g[k] = (v[tuple(up)] - v[node]) / h
        else:
            dn[k] -= 1
            g[k] = (v[node] - v[tuple(dn)]) / h
    return g


def interior_derivatives(values: np.ndarray, h: float) -> dict[str, np.ndarray]:
    """Central first and second differences on nodes one layer in from the edge.

    Keys ``g1, g2`` (gradient) and ``h11, h22, h12`` (Hessian); 1-D arrays
    only get ``g1`` and ``h11``.
    """
    u = values
    if u.ndim == 1:
        c = u[1:-1]
        return {
            "g1": (u[2:] - u[:-2]) / (2 * h),
            "h11": (u[2:] - 2 * c + u[:-2]) / (h * h),
        }
    c = u[1:-1, 1:-1]
    return {
        "g1": (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * h),
        "g2": (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * h),
        "h11": (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / (h * h),
        "h22": (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / (h * h),
        "h12": (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * h * h),
    }


def one_sided_moduli(values: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Squared upwind gradient moduli on the interior block.

    ``up = sum_k max(u(x+h e_k) - u(x), u(x-h e_k) - u(x), 0)^2 / h^2`` grows
    with the neighbours and ``down`` (the same with signs flipped) shrinks
    with them.  Both are first-order consistent with ``|grad u|^2`` and,
    unlike the central gradient, neither vanishes at a strict discrete
    minimum (``up``) or maximum (``down``).
    """
    u = values
    inner = tuple(slice(1, -1) for _ in range(u.ndim))
    c = u[inner]
    up = np.zeros(c.shape)
    down = np.zeros(c.shape)
    for k in range(u.ndim):
        plus = [slice(1, -1)] * u.ndim
        minus = [slice(1, -1)] * u.ndim
        plus[k], minus[k] = slice(2, None), slice(None, -2)
        dp = u[tuple(plus)] - c
        dm = u[tuple(minus)] - c
        up += np.maximum(np.maximum(dp, dm), 0.0) ** 2
        down += np.maximum(np.maximum(-dp, -dm), 0.0) ** 2
    return up / (h * h), down / (h * h)


def hessian(field: ScalarField, node) -> np.ndarray:
    node = tuple(int(i) for i in np.atleast_1d(node))
    shape = field.grid.shape
    if any(i < 1 or i > n - 2 for i, n in zip(node, shape)):
        raise ValueError(f"node {node} lies on the boundary layer")
    sl = tuple(slice(i - 1, i + 2) for i in node)
    d = interior_derivatives(field.values[sl], field.grid.h)
    if field.grid.dim == 1:
        return np.array([[d["h11"][0]]])
    return np.array([[d["h11"][0, 0], d["h12"][0, 0]], [d["h12"][0, 0], d["h22"][0, 0]]])


# ---------------------------------------------------------------------------
# seminorms

_PAIR_OFFSETS = {
    1: [(1,), (2,)],
    2: [(1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (1, -1)],
}


def lipschitz_seminorm(field: ScalarField, region: np.ndarray | BallRegion | None = None) -> float:
    """Largest difference quotient over node pairs at lattice distance 1 or 2.

    Both nodes of a pair must lie in ``region`` (a boolean mask or a ball).
    This is a lower bound for the all-pairs discrete seminorm and is tight for
    smooth fields.
    """
    grid = field.grid
    if region is None:
        mask = np.ones(grid.shape, dtype=bool)
    elif isinstance(region, BallRegion):
        mask = ball_mask(grid, region)
    else:
        mask = np.asarray(region, dtype=bool)
    if mask.sum() < 2:
        raise ValueError("region must contain at least two nodes")
    v = field.values
    best = 0.0
    for off in _PAIR_OFFSETS[grid.dim]:
        src, dst = [], []
        for o, n in zip(off, grid.shape):
            if o >= 0:
                src.append(slice(0, n - o))
                dst.append(slice(o, n))
            else:
                src.append(slice(-o, n))
                dst.append(slice(0, n + o))
        src, dst = tuple(src), tuple(dst)
        both = mask[src] & mask[dst]
        if not both.any():
            continue
        dist = grid.h * float(np.sqrt(sum(o * o for o in off)))
        best = max(best, float(np.max(np.abs(v[dst] - v[src])[both])) / dist)
    return best
