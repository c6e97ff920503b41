"""Growth-rate, non-degeneracy, dyadic-decay and flatness measurements.

Points ``x0`` are node indices of the field's grid.  Ball suprema are taken
over nodes, so radii are snapped to integer multiples of h where noted.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import FreeBoundarySet, default_zero_threshold, extract_dead_core
from .grid import CartesianGrid, ScalarField, rows_to_csv
from .model import (
    DerivedExponents,
    ProblemSpec,
    ScalingMap,
    beta_exponent,
    growth_scaling_map,
    sup_norm,
)


def _node(x0) -> tuple:
    return tuple(int(i) for i in np.atleast_1d(x0))


class _BallSups:
    """Ball suprema around one node, sharing the distance array."""

    def __init__(self, field: ScalarField, x0):
        grid = field.grid
        self.grid = grid
        self.x0 = _node(x0)
        self.center = grid.node_coord(self.x0)
        self.dist = np.sqrt(np.sum((grid.coords() - self.center) ** 2, axis=-1))
        self.values = field.values

    def inside(self, r: float) -> bool:
        lo = np.array(self.grid.lo)
        return bool(np.all(self.center - r >= lo - 1e-12) and np.all(self.center + r <= self.grid.hi + 1e-12))

    def __call__(self, r: float) -> float:
        mask = self.dist <= r * (1 + 1e-12)
        return float(self.values[mask].max())


def _box_distance(grid: CartesianGrid, x0) -> float:
    c = grid.node_coord(_node(x0))
    return float(min(np.min(c - np.array(grid.lo)), np.min(grid.hi - c)))


def snapped_radii(grid: CartesianGrid, r_min: float, r_max: float, count: int = 8) -> list[float]:
    """Geometric radii in [r_min, r_max] rounded to distinct multiples of h."""
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    raw = np.geomspace(r_min, r_max, count) / grid.h
    k = np.unique(np.clip(np.rint(raw), np.ceil(r_min / grid.h - 1e-9), np.floor(r_max / grid.h + 1e-9)))
    return [float(grid.h * v) for v in k]


def dyadic_radii(r_top: float, r_floor: float) -> list[float]:
    """``r_top 2^-k`` for k = 0, 1, ... while at least ``r_floor``."""
    out = []
    r = r_top
    while r >= r_floor * (1 - 1e-12):
        out.append(r)
        r /= 2
    return out


# ---------------------------------------------------------------------------
# growth fit


@dataclass
class RateFit:
    fitted_exponent: float
    fitted_constant: float
    r_min: float
    r_max: float
    residual: float
    radii: list = field(default_factory=list)
    sups: list = field(default_factory=list)
    used: list = field(default_factory=list)
    x0: tuple = ()

    def to_csv(self) -> str:
        rows = [(r, s, s / r ** self.fitted_exponent, int(u)) for r, s, u in zip(self.radii, self.sups, self.used)]
        return rows_to_csv(["r", "sup", "ratio", "used"], rows)


def default_window(grid: CartesianGrid, x0, gamma: float = 1.0, q_exp: float | None = None,
                   p_exp: float | None = None) -> tuple[float, float]:
    """``[4h, rho/4]`` with ``rho = min{dist/2, gamma^(1/(p+2-q))}``."""
    rho = _box_distance(grid, x0) / 2
    if q_exp is not None and p_exp is not None:
        rho = min(rho, gamma ** (1.0 / (p_exp + 2 - q_exp)))
    return 4 * grid.h, rho / 4


def growth_fit(field: ScalarField, x0, radii=None, zero_threshold: float = 0.0,
               free_boundary: FreeBoundarySet | None = None) -> RateFit:
    """Least squares of ``log sup_{B_r(x0)} u`` against ``log r``.

    Radii whose supremum is at most ``zero_threshold`` are skipped.  With
    ``radii=None`` eight snapped radii span the window ``[4h, rho/4]``.
    """
    grid = field.grid
    x0 = _node(x0)
    if free_boundary is not None and not free_boundary.contains(x0):
        raise ValueError(f"{x0} is not a free boundary node")
    if radii is None:
        radii = snapped_radii(grid, *default_window(grid, x0))
    radii = [float(r) for r in radii]
    if len(radii) < 5:
        raise ValueError("need at least five radii")
    if min(radii) < 3 * grid.h * (1 - 1e-12):
        raise ValueError("radii must be at least 3h")
    sups_at = _BallSups(field, x0)
    if not all(sups_at.inside(r) for r in radii):
        raise ValueError("ball leaves the grid")
    sups = [sups_at(r) for r in radii]
    used = [s > zero_threshold for s in sups]
    if sum(used) < 2:
        raise ValueError("all radii are degenerate")
    lr = np.log([r for r, k in zip(radii, used) if k])
    ls = np.log([s for s, k in zip(sups, used) if k])
    slope, icpt = np.polyfit(lr, ls, 1)
    resid = float(np.sqrt(np.mean((ls - (slope * lr + icpt)) ** 2)))
    return RateFit(float(slope), float(np.exp(icpt)), min(radii), max(radii), resid,
                   radii, sups, used, x0)


@dataclass
class GrowthVerdict:
    passed: bool
    fitted_exponent: float
    beta: float
    tol: float
    constant: float


def check_upper_growth(fit: RateFit, derived: DerivedExponents, tol: float) -> GrowthVerdict:
    """``sup_{B_r} u <= C r^beta`` over the window, read as ``fitted >= beta (1 - tol)``."""
    ok = fit.fitted_exponent >= derived.beta * (1 - tol)
    return GrowthVerdict(bool(ok), fit.fitted_exponent, derived.beta, tol,
                         fit.fitted_constant * (1 + tol))


# ---------------------------------------------------------------------------
# non-degeneracy


@dataclass
class NondegeneracyReport:
    radii: list
    sups: list
    ratios: list
    min_ratio: float
    median_ratio: float
    log_slope: float
    monotone_decay: bool
    verdict: str
    theorem_applies: bool

    def to_csv(self) -> str:
        return rows_to_csv(["r", "sup", "ratio"], zip(self.radii, self.sups, self.ratios))

    def to_dict(self) -> dict:
        return {
            "min_ratio": self.min_ratio,
            "median_ratio": self.median_ratio,
            "log_slope": self.log_slope,
            "monotone_decay": self.monotone_decay,
            "verdict": self.verdict,
            "theorem_applies": self.theorem_applies,
        }


def nondegeneracy_from_sups(radii, sups, derived: DerivedExponents,
                            decay_tol: float = 0.01) -> NondegeneracyReport:
    """Ratios ``sup / r^beta_A`` and the decay verdict.

    The verdict is "degenerate" when the ratios fall strictly as r shrinks
    over at least four radii and either drop below 10% of their median or
    decay geometrically: every step ratio ``log(ratio_k / ratio_k+1)`` within
    25% of the others and a fitted power ``r^s`` with ``s > decay_tol``.
    The geometric branch is what a finite dyadic range can see of a ratio
    sequence tending to zero.
    """
    order = np.argsort(radii)[::-1]
    radii = [float(radii[i]) for i in order]
    sups = [float(sups[i]) for i in order]
    ba = derived.beta_absorption
    ratios = [s / r ** ba for r, s in zip(radii, sups)]
    arr = np.array(ratios)
    med = float(np.median(arr))
    mono = bool(len(arr) >= 4 and np.all(np.diff(arr) < 0))
    positive = bool(np.all(arr > 0))
    if positive and len(arr) > 1:
        slope = float(np.polyfit(np.log(radii), np.log(arr), 1)[0])
    else:
        slope = float("inf") if not positive else 0.0
    degenerate = False
    if mono:
        if float(arr.min()) < 0.1 * med:
            degenerate = True
        elif positive:
            steps = -np.diff(np.log(arr))
            degenerate = bool(steps.max() <= 1.25 * steps.min() and slope > decay_tol)
    return NondegeneracyReport(radii, sups, ratios, float(arr.min()), med, slope, mono,
                               "degenerate" if degenerate else "non-degenerate",
                               bool(derived.nondegenerate))


def check_nondegeneracy(field: ScalarField, x0, radii, derived: DerivedExponents,
                        decay_tol: float = 0.01) -> NondegeneracyReport:
    sups_at = _BallSups(field, x0)
    if not all(sups_at.inside(r) for r in radii):
        raise ValueError("ball leaves the grid")
    return nondegeneracy_from_sups(list(radii), [sups_at(r) for r in radii], derived, decay_tol)


# ---------------------------------------------------------------------------
# dyadic decay


@dataclass
class DyadicDecayReport:
    tau: float
    rho: float
    beta: float
    rows: list     # (k, radius, sup, bound, slack, passed)

    @property
    def passed(self) -> bool:
        return all(r[5] for r in self.rows)

    def to_csv(self) -> str:
        return rows_to_csv(["k", "r", "sup", "bound", "slack", "passed"],
                    [(k, r, s, b, sl, int(ok)) for k, r, s, b, sl, ok in self.rows])


def dyadic_decay_check(field: ScalarField, x0, spec: ProblemSpec, k_max: int = 4,
                       gamma: float = 1.0, smap: ScalingMap | None = None) -> DyadicDecayReport:
    """Rows ``sup_{B_{rho 2^-k}(x0)} u <= tau 2^(-k beta)`` for k = 1..k_max.

    ``tau`` and ``rho`` follow the normalization of the growth argument with
    ``dist = dist(x0, boundary)`` unless ``smap`` is given.
    """
    grid = field.grid
    x0 = _node(x0)
    beta = beta_exponent(spec.exponents).beta
    if smap is None:
        c = grid.node_coord(x0)
        dist = float(spec.domain.distance_to_boundary(c))
        smap = growth_scaling_map(spec, float(field.values.max()), tuple(c), dist, gamma,
                                  points=grid.coords().reshape(-1, grid.dim))
    if 2.0 ** -k_max < 3 * grid.h / smap.rho * (1 - 1e-12):
        raise ValueError(
            f"2^-{k_max} < 3h/rho = {3 * grid.h / smap.rho:.4g}; the smallest ball is under-resolved"
        )
    sups_at = _BallSups(field, x0)
    rows = []
    for k in range(1, k_max + 1):
        r = smap.rho * 2.0 ** -k
        s = sups_at(r)
        bound = smap.tau * 2.0 ** (-k * beta)
        rows.append((k, r, s, bound, bound - s, bool(s <= bound)))
    return DyadicDecayReport(smap.tau, smap.rho, beta, rows)


# ---------------------------------------------------------------------------
# flatness and dichotomy


def flatness_probe(field: ScalarField, spec: ProblemSpec, gamma: float,
                   zero_threshold: float | None = None) -> float:
    """``sup_{B_1/2} u`` for a normalized field.

    Requires ``0 <= u <= 1``, the origin a dead node and
    ``||a|| + ||lambda0|| <= gamma`` on the grid nodes.
    """
    grid = field.grid
    v = field.values
    if v.min() < -1e-12 or v.max() > 1 + 1e-12:
        raise ValueError("field is not normalized to [0, 1]")
    pts = grid.coords().reshape(-1, grid.dim)
    norms = sup_norm(spec.a, pts) + sup_norm(spec.lambda0, pts)
    if norms > gamma * (1 + 1e-12):
        raise ValueError(f"||a|| + ||lambda0|| = {norms:.4g} exceeds gamma = {gamma}")
    origin = grid.nearest_node(np.zeros(grid.dim))
    if np.linalg.norm(grid.node_coord(origin)) > 1e-12:
        raise ValueError("origin is not a grid node")
    thr = grid.h ** 2 if zero_threshold is None else zero_threshold
    if v[origin] > thr:
        raise ValueError("origin is not a dead-core node")
    sups_at = _BallSups(field, origin)
    if not sups_at.inside(0.5):
        raise ValueError("B_1/2 leaves the grid")
    return sups_at(0.5)


@dataclass
class DichotomyReport:
    classification: str
    in_corollary_regime: bool
    flagged: bool
    dead_nodes: int
    positive_nodes: int
    interior_min: float
    interior_max: float
    zero_threshold: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def dichotomy_check(field: ScalarField, spec: ProblemSpec, zero_threshold: float | None = None,
                    tol_residual: float = 1e-8, near_critical: float = 1e-3) -> DichotomyReport:
    """Classify the interior as strictly positive, identically zero or mixed.

    The strong-maximum-principle regime is ``mu >= p + 1 - near_critical``,
    ``a >= 0`` and ``max{0, p} < q < p + 1``; a mixed field there is flagged.
    """
    grid = field.grid
    e = spec.exponents
    pts = grid.coords().reshape(-1, grid.dim)
    if zero_threshold is None:
        zero_threshold = default_zero_threshold(grid, e, tol_residual, sup_norm(spec.lambda0, pts))
    inner = ~grid.edge_mask() & spec.domain.contains(grid.coords())
    dead = extract_dead_core(field, zero_threshold).mask & inner
    pos = ~dead & inner
    nd, npos = int(dead.sum()), int(pos.sum())
    if nd == 0:
        cls = "strictly positive"
    elif npos == 0:
        cls = "identically zero"
    else:
        cls = "mixed"
    regime = bool(
        e.mu >= e.p + 1 - near_critical
        and float(spec.a(pts).min()) >= 0
        and max(0.0, e.p) < e.q < e.p + 1
    )
    vals = field.values[inner]
    return DichotomyReport(cls, regime, regime and cls == "mixed", nd, npos,
                           float(vals.min()) if vals.size else 0.0,
                           float(vals.max()) if vals.size else 0.0, float(zero_threshold))
