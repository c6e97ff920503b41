"""Discrete Dirichlet solver and discrete viscosity checks.

The scheme is damped explicit pseudo-time marching with Jacobi updates::

    u <- max(0, u + dt * (v - u) + m * (u - u_prev))

where ``v`` solves the node equation with the diffusion and Hamiltonian parts
linearized through their exact derivative in the centre value (the stencil
diagonal plus the slope of the upwind moduli) and the absorption term kept
exact.  To first order ``v - u`` is ``s(x) R[u](x)`` with
``s`` the usual stiffness normalizer.  The heavy-ball term ``m (u - u_prev)``
turns the first-order march into a damped second-order one with the same
fixed points.  All reads come from previous iterates, so results do not
depend on evaluation order.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import (
    CartesianGrid,
    ScalarField,
    interior_derivatives,
    lipschitz_seminorm,
    one_sided_moduli,
)
from ._kernels import sweep1d, sweep2d
from .model import OPERATOR_TAGS, ProblemSpec, SingularEvaluationError


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    """Sweep budget exhausted; ``report`` and ``field`` hold the last state."""

    def __init__(self, message, report, field):
        super().__init__(message)
        self.report = report
        self.field = field


class InstabilityError(SolverError):
    def __init__(self, message, node):
        super().__init__(message)
        self.node = node


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    """Iteration controls.

    ``eps_schedule=None`` means ``(h, h**1.5, h**2)``.  Every stage runs until
    the projected residual drops below ``tol_residual``; ``max_sweeps`` is the
    total budget over all stages.
    """

    eps_schedule: tuple | None = None
    pseudo_dt: float | str = "auto"
    tol_residual: float = 1e-8
    max_sweeps: int = 400_000
    damping: float = 1.0
    momentum: float | str = "auto"
    check_every: int = 20

    def __post_init__(self):
        if self.eps_schedule is not None:
            eps = tuple(float(e) for e in self.eps_schedule)
            if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
                raise ValueError("eps_schedule must be strictly decreasing and positive")
            object.__setattr__(self, "eps_schedule", eps)
        if not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.momentum != "auto" and not 0 <= float(self.momentum) < 1:
            raise ValueError("momentum must lie in [0, 1) or be 'auto'")
        if self.pseudo_dt != "auto" and not float(self.pseudo_dt) > 0:
            raise ValueError("pseudo_dt must be positive or 'auto'")

    def schedule(self, grid: CartesianGrid) -> tuple:
        if self.eps_schedule is not None:
            return self.eps_schedule
        h = grid.h
        return (h, h ** 1.5, h * h)

    def momentum_for(self, grid: CartesianGrid) -> float:
        """Heavy-ball weight; "auto" is ``1 - 12 h / L`` clipped to [0, 0.97], L the
        shortest side of the grid box."""
        if self.momentum != "auto":
            return float(self.momentum)
        side = float(np.min(grid.hi - np.array(grid.lo)))
        return float(np.clip(1.0 - 12.0 * grid.h / side, 0.0, 0.97))

    @property
    def dt(self) -> float:
        return 0.4 if self.pseudo_dt == "auto" else float(self.pseudo_dt)

    @classmethod
    def from_dict(cls, d: dict) -> "SolveConfig":
        d = dict(d)
        if d.get("eps_schedule") is not None:
            d["eps_schedule"] = tuple(d["eps_schedule"])
        return cls(**d)


@dataclass
class SolveReport:
    status: str
    eps_stages: list
    sweeps_per_stage: list
    final_residual: float
    raw_residual: float
    u_min: float
    u_max: float
    residual_monotone: bool
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("trace")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sweep", "max_residual"])
        for s, r in self.trace:
            w.writerow([s, repr(float(r))])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# vectorized operator


def _F_interior(spec: ProblemSpec, d: dict) -> np.ndarray:
    tag = spec.operator.tag
    lam, Lam = spec.ellipticity.lam, spec.ellipticity.Lam
    if spec.dim == 1:
        m = d["h11"]
        if tag == "trace":
            return m.copy()
        if tag == "pucci_plus":
            return np.where(m > 0, Lam * m, lam * m)
        if tag == "pucci_minus":
            return np.where(m > 0, lam * m, Lam * m)
        A1, A2 = spec.operator.weight_arrays()
        return np.minimum(A1[0, 0] * m, A2[0, 0] * m)
    h11, h22, h12 = d["h11"], d["h22"], d["h12"]
    if tag == "trace":
        return h11 + h22
    if tag in ("pucci_plus", "pucci_minus"):
        mean = 0.5 * (h11 + h22)
        rad = np.sqrt((0.5 * (h11 - h22)) ** 2 + h12 * h12)
        e1, e2 = mean + rad, mean - rad
        hi, lo = (Lam, lam) if tag == "pucci_plus" else (lam, Lam)
        return (np.where(e1 > 0, hi, lo) * e1) + (np.where(e2 > 0, hi, lo) * e2)
    vals = [A[0, 0] * h11 + 2 * A[0, 1] * h12 + A[1, 1] * h22 for A in spec.operator.weight_arrays()]
    return np.minimum(vals[0], vals[1])


@dataclass
class _Context:
    spec: ProblemSpec
    grid: CartesianGrid
    unknown: np.ndarray       # mask over interior block
    a: np.ndarray
    lam0: np.ndarray
    g: np.ndarray             # boundary datum at every node


def _context(spec: ProblemSpec, grid: CartesianGrid) -> _Context:
    if grid.dim != spec.dim:
        raise ValueError("grid and spec dimensions differ")
    X = grid.coords()
    inner = tuple(slice(1, -1) for _ in range(grid.dim))
    Xi = X[inner]
    unknown = spec.domain.contains(Xi)
    a = np.broadcast_to(np.asarray(spec.a(Xi), dtype=float), unknown.shape).copy()
    lam0 = np.broadcast_to(np.asarray(spec.lambda0(Xi), dtype=float), unknown.shape).copy()
    g = np.broadcast_to(np.asarray(spec.g(X), dtype=float), grid.shape).copy()
    return _Context(spec, grid, unknown, a, lam0, g)


def _moduli(u: np.ndarray, ctx: _Context, Fv: np.ndarray, eps: float):
    """Regularized gradient moduli for the diffusion and Hamiltonian terms.

    The diffusion coefficient uses the upwind modulus that keeps ``m^p F``
    non-decreasing in the neighbours: ``up`` where ``F >= 0`` and ``down``
    where ``F < 0`` (swapped for p < 0).  The Hamiltonian uses ``up`` where
    ``a >= 0`` and ``down`` elsewhere.  Only the diffusion modulus is
    regularized; ``|grad u|^q`` is finite at zero gradient, and smoothing it
    would lift zero data by ``(a eps^q / lambda0)^(1/mu)``.
    """
    up, down = one_sided_moduli(u, ctx.grid.h)
    rising = Fv >= 0 if ctx.spec.exponents.p >= 0 else Fv < 0
    mF = np.sqrt(np.where(rising, up, down) + eps * eps)
    mH = np.sqrt(np.where(ctx.a >= 0, up, down))
    return mF, mH


def _residual_parts(u: np.ndarray, ctx: _Context, eps: float, allow_singular: bool = False):
    """Residual on the interior block plus the diffusion modulus and its power.

    With ``allow_singular`` a vanishing modulus for p < 0 yields NaN at that
    node instead of raising.
    """
    e = ctx.spec.exponents
    d = interior_derivatives(u, ctx.grid.h)
    Fv = _F_interior(ctx.spec, d)
    m, mH = _moduli(u, ctx, Fv, eps)
    if e.p < 0 and eps == 0 and not allow_singular and np.any((m == 0) & ctx.unknown):
        idx = np.argwhere((m == 0) & ctx.unknown)[0] + 1
        raise SingularEvaluationError(f"grad = 0 with p < 0 at node {tuple(idx)}")
    with np.errstate(divide="ignore", invalid="ignore"):
        mp = np.where(m > 0, m ** e.p, 0.0 if e.p > 0 else (1.0 if e.p == 0 else np.nan))
        mq = mH ** e.q
    inner = tuple(slice(1, -1) for _ in range(ctx.grid.dim))
    uc = u[inner]
    R = mp * Fv + ctx.a * mq - ctx.lam0 * np.maximum(uc, 0.0) ** e.mu
    return R, m, mp


def discrete_residual(field: ScalarField, spec: ProblemSpec, eps_reg: float = 0.0) -> ScalarField:
    """Node-wise operator residual; Dirichlet nodes carry ``g(x) - u(x)``.

    Second differences are central; gradient moduli are the monotone upwind
    ones of :func:`_moduli`, so the residual is non-decreasing in the
    neighbour values for the trace operator.
    """
    ctx = _context(spec, field.grid)
    R, _, _ = _residual_parts(np.asarray(field.values), ctx, eps_reg)
    out = ctx.g - field.values
    inner = tuple(slice(1, -1) for _ in range(field.grid.dim))
    block = out[inner]
    block[ctx.unknown] = R[ctx.unknown]
    out[inner] = block
    return ScalarField(field.grid, out)


def _projected(R: np.ndarray, uc: np.ndarray, unknown: np.ndarray) -> np.ndarray:
    # fixed points of the truncated update: R = 0, or u = 0 with R <= 0
    r = np.where((uc > 0) | (R > 0), R, 0.0)
    return np.where(unknown, r, 0.0)


def solve_dirichlet(
    spec: ProblemSpec,
    grid: CartesianGrid,
    config: SolveConfig | None = None,
    initial: np.ndarray | None = None,
    strict: bool = True,
) -> tuple[ScalarField, SolveReport]:
    """Discrete solution of the Dirichlet problem on ``grid``.

    Returns the field and a report.  With ``strict`` a budget overrun raises
    :class:`ConvergenceError` (carrying the report); otherwise the report has
    ``status == "max_sweeps"``.
    """
    config = config or SolveConfig()
    ctx = _context(spec, grid)
    e = spec.exponents
    n, h = grid.dim, grid.h
    Lam = spec.ellipticity.Lam
    inner = tuple(slice(1, -1) for _ in range(n))

    u = ctx.g.copy()
    if initial is not None:
        u = np.array(initial, dtype=float)
    block = u[inner]
    block[ctx.unknown] = np.maximum(block[ctx.unknown] if initial is not None else 0.0, 0.0)
    u[inner] = block
    dirichlet = np.ones(grid.shape, dtype=bool)
    dirichlet[inner] = ~ctx.unknown
    u[dirichlet] = ctx.g[dirichlet]

    schedule = config.schedule(grid)
    step = config.dt * config.damping
    trace: list = []
    sweeps_per_stage: list = []
    total = 0
    res = np.inf
    kernel = sweep2d if n == 2 else sweep1d
    op_code = OPERATOR_TAGS.index(spec.operator.tag)
    W = (np.array(spec.operator.weight_arrays()) if spec.operator.weights is not None
         else np.zeros((2, n, n)))
    unknown = np.ascontiguousarray(ctx.unknown)
    args = (unknown, ctx.a, ctx.lam0, float(e.p), float(e.q), float(e.mu),
            float(spec.ellipticity.lam), float(Lam), op_code, W, float(h))
    mom = config.momentum_for(grid)
    out = u.copy()
    prev = u.copy()
    for eps in schedule:
        sweeps = 0
        prev[...] = u
        while True:
            res = kernel(u, prev, out, *args, float(eps), step, mom)
            if sweeps % config.check_every == 0:
                trace.append((total, res))
            if not np.isfinite(res):
                R, _, _ = _residual_parts(u, ctx, eps)
                bad = np.argwhere(~np.isfinite(R) & ctx.unknown)
                node = tuple(int(i) + 1 for i in bad[0]) if len(bad) else None
                raise InstabilityError(f"non-finite residual at node {node}", node)
            if res <= config.tol_residual or total >= config.max_sweeps:
                break
            prev, u, out = u, out, prev
            sweeps += 1
            total += 1
        sweeps_per_stage.append(sweeps)
        if total >= config.max_sweeps and res > config.tol_residual:
            break

    field_out = ScalarField(grid, u)
    R_final, _, _ = _residual_parts(u, ctx, schedule[-1])
    raw = float(np.max(np.abs(np.where(ctx.unknown, R_final, 0.0)), initial=0.0))
    res = float(np.max(np.abs(_projected(R_final, u[inner], ctx.unknown)), initial=0.0))
    values = [r for _, r in trace]
    report = SolveReport(
        status="converged" if res <= config.tol_residual else "max_sweeps",
        eps_stages=list(schedule),
        sweeps_per_stage=sweeps_per_stage,
        final_residual=res,
        raw_residual=raw,
        u_min=float(u.min()),
        u_max=float(u.max()),
        residual_monotone=bool(all(b <= a for a, b in zip(values, values[1:]))),
        trace=trace,
    )
    if strict and report.status != "converged":
        raise ConvergenceError(
            f"residual {res:.3e} above tolerance after {total} sweeps", report, field_out
        )
    return field_out, report


# ---------------------------------------------------------------------------
# discrete viscosity checks


@dataclass
class ViscosityReport:
    labels: np.ndarray          # per node: "solution", "subsolution", "supersolution", "boundary"
    residual: np.ndarray
    constant_mask: np.ndarray
    constant_sub_ok: np.ndarray
    constant_super_ok: np.ndarray

    def counts(self) -> dict:
        keys, cnt = np.unique(self.labels, return_counts=True)
        return {str(k): int(c) for k, c in zip(keys, cnt)}

    @property
    def is_solution(self) -> bool:
        inner = self.labels != "boundary"
        return bool(np.all(self.labels[inner] == "solution"))

    @property
    def is_subsolution(self) -> bool:
        inner = self.labels != "boundary"
        ok = np.isin(self.labels[inner], ("solution", "subsolution"))
        return bool(np.all(ok))

    @property
    def is_supersolution(self) -> bool:
        inner = self.labels != "boundary"
        ok = np.isin(self.labels[inner], ("solution", "supersolution"))
        return bool(np.all(ok))


def verify_viscosity_inequalities(
    field: ScalarField, spec: ProblemSpec, tol: float, eps_reg: float = 0.0,
    zero_floor: float = 0.0,
) -> ViscosityReport:
    """Classify interior nodes by the sign of the discrete residual.

    A node whose whole stencil is constant (value K) is judged by the
    constancy alternative instead: supersolution iff ``lambda0 K_+^mu >= 0``,
    subsolution iff ``lambda0 K_+^mu <= 0``.  Plateaus with ``K <= zero_floor``
    are treated as ``K = 0``, where both hold.
    """
    grid = field.grid
    ctx = _context(spec, grid)
    u = np.asarray(field.values)
    inner = tuple(slice(1, -1) for _ in range(grid.dim))
    const = np.ones(ctx.unknown.shape, dtype=bool)
    c = u[inner]
    for off in np.ndindex(*([3] * grid.dim)):
        sl = tuple(slice(o, o + s) for o, s in zip(off, c.shape))
        const &= u[sl] == c
    const &= ctx.unknown
    R, _, _ = _residual_parts(u, ctx, eps_reg, allow_singular=True)
    K = np.where(c <= zero_floor, 0.0, c)
    f_K = ctx.lam0 * np.maximum(K, 0.0) ** spec.exponents.mu
    sub_ok = f_K <= 0
    super_ok = f_K >= 0
    lab = np.full(ctx.unknown.shape, "solution", dtype=object)
    lab[R > tol] = "subsolution"
    lab[R < -tol] = "supersolution"
    lab[np.isnan(R)] = "singular"
    lab[const & sub_ok & super_ok] = "solution"
    lab[const & super_ok & ~sub_ok] = "supersolution"
    lab[const & sub_ok & ~super_ok] = "subsolution"
    labels = np.full(grid.shape, "boundary", dtype=object)
    blk = labels[inner]
    blk[ctx.unknown] = lab[ctx.unknown]
    labels[inner] = blk
    resid = np.zeros(grid.shape)
    resid[inner] = np.where(ctx.unknown, R, 0.0)
    full_const = np.zeros(grid.shape, dtype=bool)
    full_const[inner] = const
    sub_full = np.zeros(grid.shape, dtype=bool)
    sub_full[inner] = const & sub_ok
    sup_full = np.zeros(grid.shape, dtype=bool)
    sup_full[inner] = const & super_ok
    return ViscosityReport(labels.astype(str), resid, full_const, sub_full, sup_full)


@dataclass
class ComparisonReport:
    max_difference: float
    argmax_node: tuple
    passed: bool
    hypothesis: str
    lipschitz_u: float
    lipschitz_v: float
    tolerance: float


def comparison_check(
    u: ScalarField,
    v: ScalarField,
    spec: ProblemSpec,
    h1=None,
    h2=None,
    tol: float = 1e-6,
    lipschitz_bound: float | None = None,
) -> ComparisonReport:
    """Check ``u <= v`` on interior nodes given ``u <= v`` on Dirichlet nodes.

    ``h1``/``h2`` are the right-hand sides the two fields are sub/super
    solutions for (default 0); the hypothesis variant used is recorded.
    """
    if u.grid != v.grid:
        raise PreconditionError("fields live on different grids")
    ctx = _context(spec, u.grid)
    inner = tuple(slice(1, -1) for _ in range(u.grid.dim))
    interior = np.zeros(u.grid.shape, dtype=bool)
    interior[inner] = ctx.unknown
    bd = ~interior
    diff = u.values - v.values
    if np.any(diff[bd] > 1e-12):
        raise PreconditionError(
            f"boundary ordering violated by {float(diff[bd].max()):.3e}"
        )
    h1 = np.zeros(u.grid.shape) if h1 is None else np.broadcast_to(np.asarray(h1, float), u.grid.shape)
    h2 = np.zeros(u.grid.shape) if h2 is None else np.broadcast_to(np.asarray(h2, float), u.grid.shape)
    inf_lam = float(ctx.lam0[ctx.unknown].min()) if ctx.unknown.any() else 0.0
    if np.all(h1 > h2) and inf_lam >= 0:
        hyp = "(i) h1 > h2, inf lambda0 >= 0"
    elif np.all(h1 >= h2) and inf_lam > 0:
        hyp = "(ii) h1 >= h2, inf lambda0 > 0"
    else:
        raise PreconditionError("neither comparison hypothesis holds")
    Lu = lipschitz_seminorm(u)
    Lv = lipschitz_seminorm(v)
    if lipschitz_bound is not None and min(Lu, Lv) > lipschitz_bound:
        raise PreconditionError("neither field passes the discrete Lipschitz bound")
    if interior.any():
        masked = np.where(interior, diff, -np.inf)
        k = int(np.argmax(masked))
        node = tuple(int(i) for i in np.unravel_index(k, u.grid.shape))
        mx = float(masked.flat[k])
    else:
        node, mx = (), -np.inf
    return ComparisonReport(mx, node, mx <= tol, hyp, Lu, Lv, tol)
