"""Config-driven experiment runner.

One JSON config describes one experiment and writes one output directory::

    {
      "spec": {... ProblemSpec.to_dict() ...},
      "grid": {"n_cells": 128},
      "solve": {"tol_residual": 1e-6},
      "analyses": ["rates", "density"],
      "params": {"rates": {"points": 8}},
      "output": "runs/deadcore",
      "seed": 0
    }

Subcommands pick the analyses they own from the configured list:
``oracle`` runs closed-form checks, ``verify`` the viscosity and comparison
checks, ``rates`` the free-boundary measurements, ``solve`` none.  ``run``
executes every configured analysis.  Each writes per-analysis CSVs,
``summary.json`` and, last, ``manifest.json``; a run with nothing to do
writes the manifest alone.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic
from .geometry import (
    OMEGA,
    box_dimension,
    default_zero_threshold,
    density_ratio,
    extract_dead_core,
    free_boundary,
    spread_points,
)
from .grid import CartesianGrid, rows_to_csv
from .model import (
    EllipticityPair,
    ExponentTriple,
    ProblemSpec,
    SpecError,
    beta_exponent,
    exponent_violations,
    full_operator,
    sup_norm,
)
from .expr import ExpressionError
from .rates import (
    check_nondegeneracy,
    check_upper_growth,
    default_window,
    dyadic_decay_check,
    dyadic_radii,
    flatness_probe,
    growth_fit,
    nondegeneracy_from_sups,
)
from .solver import (
    ConvergenceError,
    InstabilityError,
    SolveConfig,
    comparison_check,
    solve_dirichlet,
    verify_viscosity_inequalities,
)

ANALYSES = (
    "oracle-residual", "rates", "nondegeneracy", "dyadic", "density", "dimension",
    "comparison", "barrier", "counterexample", "flatness",
)
GROUPS = {
    "oracle": ("oracle-residual", "counterexample", "barrier"),
    "verify": ("comparison",),
    "rates": ("rates", "nondegeneracy", "dyadic", "density", "dimension", "flatness"),
    "solve": (),
}

PARAMS = {
    "oracle-residual": {"lambda0", "n_points", "r_min", "r_max", "tol"},
    "counterexample": {"n", "p", "mu", "eps", "gamma", "n_points", "r_min", "r_max", "k_max", "tol"},
    "barrier": {"p", "lam", "Lam", "sup_lambda0", "d0", "eta", "n_samples", "tol"},
    "comparison": {"g_shift", "tol"},
    "rates": {"points", "tol", "lo", "hi"},
    "nondegeneracy": {"points", "min_fraction"},
    "dyadic": {"points", "k_max", "gamma"},
    "density": {"radii_h", "min_fraction"},
    "dimension": {"levels", "max_dimension"},
    "flatness": {"gamma", "target"},
}
TOP_KEYS = {"spec", "grid", "solve", "analyses", "params", "output", "seed"}

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_SOLVER, EXIT_UNREADABLE = 0, 1, 2, 3, 4


class ConfigReadError(Exception):
    """Config file missing or not parseable."""


class ConfigInvalid(Exception):
    def __init__(self, violations):
        super().__init__(violations[0])
        self.violations = violations


def read_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigReadError(f"cannot read {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigReadError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigReadError(f"{path} must hold a JSON object")
    return cfg


def apply_overrides(cfg: dict, out=None, seed=None, grid=None) -> dict:
    cfg = copy.deepcopy(cfg)
    if out is not None:
        cfg["output"] = str(out)
    if seed is not None:
        cfg["seed"] = int(seed)
    if grid is not None:
        cfg.setdefault("grid", {})["n_cells"] = int(grid)
    return cfg


def validate(cfg: dict) -> list[str]:
    """Every invariant violation of the config; nothing is executed."""
    out = [f"config: unknown key '{k}'" for k in sorted(set(cfg) - TOP_KEYS)]
    analyses = cfg.get("analyses", [])
    if not isinstance(analyses, list):
        out.append("analyses: must be a list")
        analyses = []
    for a in analyses:
        if a not in ANALYSES:
            out.append(f"analyses: unknown analysis '{a}'")
    params = cfg.get("params", {})
    for name, ps in params.items():
        if name not in ANALYSES:
            out.append(f"params: unknown analysis '{name}'")
            continue
        for k in sorted(set(ps) - PARAMS[name]):
            out.append(f"params.{name}: unknown parameter '{k}'")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        out.append("seed: must be a non-negative integer")

    d = cfg.get("spec")
    if not isinstance(d, dict):
        out.append("spec: missing")
        return out
    try:
        e = d["exponents"]
        out += exponent_violations(float(e["p"]), float(e["q"]), float(e["mu"]))
        el = d.get("ellipticity", {"lambda": 1.0, "Lambda": 1.0})
        if not 0 < float(el["lambda"]) <= float(el["Lambda"]):
            out.append("ellipticity: need 0 < lambda <= Lambda")
    except (KeyError, TypeError, ValueError) as exc:
        out.append(f"spec: malformed exponents or ellipticity ({exc})")
        return out
    if out and any(v.startswith(("exponent", "ellipticity")) for v in out):
        return out
    try:
        spec = ProblemSpec.from_dict(d)
    except (KeyError, TypeError, ValueError, SpecError, ExpressionError) as exc:
        out.append(f"spec: {exc}")
        return out
    out += spec.invariant_violations()

    n_cells = cfg.get("grid", {}).get("n_cells")
    if not isinstance(n_cells, int) or n_cells < 4:
        out.append("grid: n_cells must be an integer >= 4")
    else:
        try:
            CartesianGrid.for_domain(spec.domain, n_cells)
        except ValueError as exc:
            out.append(f"grid: {exc}")
    try:
        SolveConfig.from_dict(cfg.get("solve", {}))
    except (TypeError, ValueError) as exc:
        out.append(f"solve: {exc}")
    if "flatness" in analyses and not np.all(spec.domain.contains(np.zeros((1, spec.dim)))):
        out.append("params.flatness: the origin must lie in the domain")
    return out


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# run state


@dataclass
class Run:
    cfg: dict
    spec: ProblemSpec
    grid: CartesianGrid
    solve_config: SolveConfig
    rng: np.random.Generator
    out: Path
    files: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    _solution: tuple | None = None
    _dead: tuple | None = None

    def params(self, name: str) -> dict:
        return self.cfg.get("params", {}).get(name, {})

    def write(self, name: str, text: str) -> None:
        path = self.out / name
        path.write_text(text, encoding="utf-8", newline="\n")
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def solution(self):
        if self._solution is None:
            t = time.perf_counter()
            u, rep = solve_dirichlet(self.spec, self.grid, self.solve_config)
            self.timings["solve"] = time.perf_counter() - t
            self.write("field.csv", u.to_csv())
            self.write("solve_report.json", rep.to_json() + "\n")
            self.write("residual_trace.csv", rep.trace_csv())
            self._solution = (u, rep)
        return self._solution

    @property
    def points(self):
        return self.grid.coords().reshape(-1, self.grid.dim)

    def dead_core(self):
        if self._dead is None:
            u, _ = self.solution()
            thr = default_zero_threshold(self.grid, self.spec.exponents, self.solve_config.tol_residual,
                                         sup_norm(self.spec.lambda0, self.points))
            dead = extract_dead_core(u, thr)
            self._dead = (u, dead, free_boundary(dead))
        return self._dead


def _fb_candidates(run: Run, fb, min_dist: float = 0.0) -> np.ndarray:
    """Dead-side free boundary nodes whose distance to the boundary exceeds min_dist."""
    nodes = fb.dead_side
    if len(nodes) == 0:
        return nodes
    d = np.array([float(run.spec.domain.distance_to_boundary(run.grid.node_coord(n))) for n in nodes])
    return nodes[d > min_dist]


# ---------------------------------------------------------------------------
# analyses; each returns a summary dict with a boolean "passed"


def _oracle_residual(run: Run) -> dict:
    ps = run.params("oracle-residual")
    e = run.spec.exponents
    n = run.spec.dim
    lam0 = float(ps.get("lambda0", 1.0))
    prof = analytic.radial_exact(n, e.p, e.mu, lam0)
    spec = analytic.radial_exact_spec(prof, e.p, e.mu, lam0, run.spec.domain)
    x = _annulus_points(run.rng, n, int(ps.get("n_points", 100)), ps.get("r_min", 0.05), ps.get("r_max", 1.0))
    grads, hess = prof.gradient(x), prof.hessian(x)
    res = np.array([full_operator(xi, gi, Hi, prof.value(xi), spec) for xi, gi, Hi in zip(x, grads, hess)])
    tol = float(ps.get("tol", 1e-9))
    rows = [tuple(xi) + (float(r),) for xi, r in zip(x, res)]
    run.write("oracle_residual.csv", rows_to_csv([f"x{k + 1}" for k in range(n)] + ["residual"], rows))
    m = float(np.max(np.abs(res)))
    return {"passed": m <= tol, "max_abs_residual": m, "tol": tol, "c": prof.c, "beta": prof.beta}


def _annulus_points(rng, n, count, r_min, r_max):
    r = rng.uniform(r_min, r_max, count)
    if n == 1:
        return (r * rng.choice([-1.0, 1.0], count))[:, None]
    th = rng.uniform(0, 2 * np.pi, count)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


def _counterexample(run: Run) -> dict:
    ps = run.params("counterexample")
    params = analytic.CounterexampleParams(int(ps.get("n", 2)), float(ps.get("p", 0.0)),
                                           float(ps.get("mu", 0.5)), float(ps.get("eps", 0.1)),
                                           float(ps.get("gamma", 1.0)))
    ce = analytic.counterexample(params)
    x = _annulus_points(run.rng, params.n, int(ps.get("n_points", 100)), ps.get("r_min", 0.05), ps.get("r_max", 1.0))
    res = ce.residual(x)
    run.write("counterexample_residual.csv",
              rows_to_csv([f"x{k + 1}" for k in range(params.n)] + ["residual"],
                   [tuple(xi) + (float(r),) for xi, r in zip(x, res)]))
    k_max = int(ps.get("k_max", 6))
    radii = [2.0 ** -k for k in range(1, k_max + 1)]
    sups = [ce.sup_over_ball(r) for r in radii]
    der = beta_exponent(ExponentTriple(params.p, params.q, params.mu))
    nd = nondegeneracy_from_sups(radii, sups, der)
    run.write("counterexample_growth.csv", nd.to_csv())
    steps = np.array(nd.ratios[1:]) / np.array(nd.ratios[:-1])
    step_err = float(np.max(np.abs(steps - 2.0 ** -params.eps)))
    tol = float(ps.get("tol", 1e-10))
    m = float(np.max(np.abs(res)))
    return {
        "passed": bool(m <= tol and step_err <= 1e-6 and nd.verdict == "degenerate"),
        "max_abs_residual": m, "tol": tol, "c_bar": params.c_bar, "c_0": params.c_0,
        "ratio_step_error": step_err, "verdict": nd.verdict,
        "theorem_applies": nd.theorem_applies,
    }


def _barrier(run: Run) -> dict:
    ps = run.params("barrier")
    ell = run.spec.ellipticity
    p = float(ps.get("p", run.spec.exponents.p))
    lam, Lam = float(ps.get("lam", ell.lam)), float(ps.get("Lam", ell.Lam))
    sup_l = float(ps.get("sup_lambda0", sup_norm(run.spec.lambda0, run.points)))
    d0 = float(ps.get("d0", 1.0))
    s = analytic.barrier_admissible(p, lam, Lam, sup_l, d0)
    bp = analytic.BarrierParams(float(ps.get("eta", 1.0)), s, d0, (0.0, 0.0))
    x = _annulus_points(run.rng, 2, int(ps.get("n_samples", 10_000)), d0 / 2, d0)
    L = analytic.barrier_operator(x, bp, p, EllipticityPair(lam, Lam), lambda0=sup_l)
    val, grad, _ = analytic.barrier_theta(x, bp)
    gmin = float(np.min(np.linalg.norm(grad, axis=-1)))
    run.write("barrier_samples.csv", rows_to_csv(["x1", "x2", "theta", "L"],
                                          [(a, b, t, l) for (a, b), t, l in zip(x, val, L)]))
    tol = float(ps.get("tol", 1e-8))
    return {
        "passed": bool(L.min() >= -tol and gmin >= bp.sigma_lower),
        "s_star": s, "min_L": float(L.min()), "tol": tol,
        "min_grad": gmin, "grad_min_exact": bp.gradient_min(), "sigma_lower": bp.sigma_lower,
    }


def _comparison(run: Run) -> dict:
    ps = run.params("comparison")
    shift = float(ps.get("g_shift", 0.1))
    u, _ = run.solution()
    spec2 = run.spec.with_(g=f"({run.spec.g.text}) + {shift!r}")
    v, _ = solve_dirichlet(spec2, run.grid, run.solve_config)
    tol = float(ps.get("tol", 10 * run.solve_config.tol_residual))
    rep = comparison_check(u, v, run.spec, tol=tol)
    _, dead, _ = run.dead_core()
    visc = verify_viscosity_inequalities(u, run.spec, tol=10 * run.solve_config.tol_residual,
                                         eps_reg=run.solve_config.schedule(run.grid)[-1],
                                         zero_floor=dead.zero_threshold)
    counts = visc.counts()
    run.write("comparison.csv", rows_to_csv(["quantity", "value"], [
        ("max_difference", rep.max_difference), ("tolerance", rep.tolerance),
        ("lipschitz_u", rep.lipschitz_u), ("lipschitz_v", rep.lipschitz_v),
    ] + [(f"nodes_{k}", v) for k, v in sorted(counts.items())]))
    return {"passed": bool(rep.passed), "max_difference": rep.max_difference, "tol": tol,
            "hypothesis": rep.hypothesis, "viscosity_labels": counts}


def _rates(run: Run) -> dict:
    ps = run.params("rates")
    u, dead, fb = run.dead_core()
    der = beta_exponent(run.spec.exponents)
    tol = float(ps.get("tol", 0.15))
    lo = float(ps.get("lo", der.beta * (1 - tol)))
    hi = float(ps.get("hi", der.beta * (1 + tol)))
    rows, ok = [], []
    for x0 in spread_points(_fb_candidates(run, fb, 20 * run.grid.h), int(ps.get("points", 8))):
        fit = growth_fit(u, x0, zero_threshold=dead.zero_threshold)
        up = check_upper_growth(fit, der, tol)
        inside = lo <= fit.fitted_exponent <= hi
        ok.append(inside and up.passed)
        rows.append(tuple(int(i) for i in x0) + (fit.fitted_exponent, fit.fitted_constant,
                                                   fit.r_min, fit.r_max, fit.residual, int(up.passed)))
    run.write("rates.csv", rows_to_csv([f"i{k}" for k in range(run.grid.dim)] + [
        "exponent", "constant", "r_min", "r_max", "fit_residual", "upper_growth"], rows))
    exps = [r[run.grid.dim] for r in rows]
    return {"passed": bool(len(ok) >= 5 and all(ok)), "points": len(ok), "beta": der.beta,
            "window": [lo, hi], "exponents": exps,
            "dead_nodes": dead.count, "zero_threshold": dead.zero_threshold}


def _nondegeneracy(run: Run) -> dict:
    ps = run.params("nondegeneracy")
    u, dead, fb = run.dead_core()
    der = beta_exponent(run.spec.exponents)
    frac = float(ps.get("min_fraction", 0.1))
    rows, ok, verdicts = [], [], []
    for x0 in spread_points(_fb_candidates(run, fb, 20 * run.grid.h), int(ps.get("points", 8))):
        rho = default_window(run.grid, x0)[1] * 4
        nd = check_nondegeneracy(u, x0, dyadic_radii(rho, 3 * run.grid.h), der)
        ok.append(nd.min_ratio >= frac * nd.median_ratio)
        verdicts.append(nd.verdict)
        rows += [tuple(int(i) for i in x0) + (r, s, q) for r, s, q in zip(nd.radii, nd.sups, nd.ratios)]
    run.write("nondegeneracy.csv", rows_to_csv([f"i{k}" for k in range(run.grid.dim)] + ["r", "sup", "ratio"], rows))
    return {"passed": bool(ok and all(ok)), "points": len(ok), "min_fraction": frac,
            "verdicts": verdicts, "theorem_applies": der.nondegenerate}


def _dyadic(run: Run) -> dict:
    ps = run.params("dyadic")
    u, dead, fb = run.dead_core()
    k_max = int(ps.get("k_max", 4))
    gamma = float(ps.get("gamma", 1.0))
    need = 2 * 3 * run.grid.h * 2 ** k_max      # rho = dist/2 >= 3h 2^k_max
    cand = _fb_candidates(run, fb, need)
    rows, ok = [], []
    for x0 in spread_points(cand, int(ps.get("points", 4))):
        rep = dyadic_decay_check(u, x0, run.spec, k_max, gamma)
        ok.append(rep.passed)
        rows += [tuple(int(i) for i in x0) + (rep.tau, rep.rho) + row[:5] + (int(row[5]),) for row in rep.rows]
    run.write("dyadic.csv", rows_to_csv([f"i{k}" for k in range(run.grid.dim)] + [
        "tau", "rho", "k", "r", "sup", "bound", "slack", "passed"], rows))
    return {"passed": bool(ok and all(ok)), "points": len(ok), "k_max": k_max}


def _density(run: Run) -> dict:
    ps = run.params("density")
    u, dead, fb = run.dead_core()
    mult = [int(k) for k in ps.get("radii_h", [8, 16, 32])]
    frac = float(ps.get("min_fraction", 0.05))
    omega = OMEGA[run.grid.dim]
    radii = [k * run.grid.h for k in mult]
    rows, skipped = [], 0
    for x0 in fb.nodes:
        try:
            ratios = [density_ratio(dead, x0, r) for r in radii]
        except ValueError:
            skipped += 1
            continue
        rows.append(tuple(int(i) for i in x0) + tuple(q / omega for q in ratios))
    run.write("density.csv", rows_to_csv([f"i{k}" for k in range(run.grid.dim)] + [f"ratio_{k}h_over_omega" for k in mult], rows))
    m = min((min(r[run.grid.dim:]) for r in rows), default=float("nan"))
    return {"passed": bool(rows and m >= frac), "points": len(rows), "skipped": skipped,
            "min_ratio_over_omega": m, "min_fraction": frac}


def _dimension(run: Run) -> dict:
    ps = run.params("dimension")
    u, dead, fb = run.dead_core()
    levels = int(ps.get("levels", 5))
    limit = float(ps.get("max_dimension", run.grid.dim - 0.5))
    rep = box_dimension(fb, [run.grid.h * 2 ** k for k in range(levels)])
    run.write("dimension.csv", rows_to_csv(["box_size", "count"], zip(rep.box_sizes, rep.counts)))
    return {"passed": bool(rep.slope <= limit), "limit": limit, **rep.to_dict()}


def _flatness(run: Run) -> dict:
    ps = run.params("flatness")
    u, dead, _ = run.dead_core()
    gamma = float(ps.get("gamma", sup_norm(run.spec.a, run.points) + sup_norm(run.spec.lambda0, run.points)))
    probe = flatness_probe(u, run.spec, gamma, dead.zero_threshold)
    target = ps.get("target")
    run.write("flatness.csv", rows_to_csv(["gamma", "sup_half_ball"], [(gamma, probe)]))
    return {"passed": bool(target is None or probe <= float(target)), "probe": probe,
            "gamma": gamma, "target": target}


HANDLERS = {
    "oracle-residual": _oracle_residual, "counterexample": _counterexample, "barrier": _barrier,
    "comparison": _comparison, "rates": _rates, "nondegeneracy": _nondegeneracy,
    "dyadic": _dyadic, "density": _density, "dimension": _dimension, "flatness": _flatness,
}


def _versions() -> dict:
    import numba

    from importlib.metadata import PackageNotFoundError, version
    try:
        pkg = version("artifact")
    except PackageNotFoundError:
        pkg = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__,
            "numba": numba.__version__, "artifact": pkg}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def run(cfg: dict, command: str = "run") -> int:
    """Execute the analyses of ``command`` and write the output directory."""
    violations = validate(cfg)
    if violations:
        raise ConfigInvalid(violations)
    spec = ProblemSpec.from_dict(cfg["spec"])
    grid = CartesianGrid.for_domain(spec.domain, cfg["grid"]["n_cells"])
    out = Path(cfg.get("output", "out"))
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").unlink(missing_ok=True)
    state = Run(cfg, spec, grid, SolveConfig.from_dict(cfg.get("solve", {})),
                np.random.default_rng(cfg.get("seed", 0)), out)
    wanted = [a for a in cfg.get("analyses", []) if command == "run" or a in GROUPS[command]]
    checks = {}
    status = EXIT_OK
    t0 = time.perf_counter()
    try:
        if command == "solve":
            state.solution()
        for name in wanted:
            t = time.perf_counter()
            try:
                checks[name] = _jsonable(HANDLERS[name](state))
            except (ValueError, ArithmeticError) as exc:
                # a measurement precondition that only the solved field can reveal
                checks[name] = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}
            state.timings[name] = time.perf_counter() - t
    except (ConvergenceError, InstabilityError) as exc:
        status = EXIT_SOLVER
        report = getattr(exc, "report", None)
        checks["solver"] = {"passed": False, "error": str(exc),
                            "report": report.to_dict() if report is not None else None}
        if report is not None:
            state.write("solve_report.json", report.to_json() + "\n")
    state.timings["total"] = time.perf_counter() - t0
    if status == EXIT_OK and not all(c["passed"] for c in checks.values()):
        status = EXIT_CHECK_FAILED
    if checks or command == "solve":
        summary = {"command": command, "checks": checks,
                   "all_passed": all(c["passed"] for c in checks.values())}
        state.write("summary.json", json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    manifest = {
        "config_hash": config_hash(cfg),
        "config": cfg,
        "versions": _versions(),
        "timings": state.timings,
        "files": dict(sorted(state.files.items())),
        "exit_status": status,
    }
    tmp = out / "manifest.json.tmp"
    tmp.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, out / "manifest.json")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deadcore", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("solve", "solve the Dirichlet problem and write the field"),
        ("verify", "viscosity and comparison checks"),
        ("rates", "growth, non-degeneracy, density and dimension measurements"),
        ("oracle", "closed-form oracle checks"),
        ("run", "every configured analysis"),
        ("validate", "list config invariant violations without running"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="seed for randomized sampling")
        p.add_argument("--grid", type=int, help="cells along the first axis (overrides the config)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(read_config(args.config), args.out, args.seed, args.grid)
    except ConfigReadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    if args.command == "validate":
        violations = validate(cfg)
        print(json.dumps({"violations": violations}, indent=2))
        return EXIT_OK if not violations else EXIT_INVALID
    try:
        status = run(cfg, args.command)
    except ConfigInvalid as exc:
        print(f"invalid config: {exc.violations[0]}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(cfg.get("output", "out"))
    summary = out / "summary.json"
    if summary.exists():
        print(summary.read_text(encoding="utf-8"), end="")
    else:
        print(f"no analyses selected; manifest written to {out / 'manifest.json'}")
    return status


if __name__ == "__main__":
    sys.exit(main())
