"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import csv
import json
import time
from pathlib import Path

import numpy as np
import pytest

from deadcore import cli
from deadcore.analytic import (
    BarrierParams,
    CounterexampleParams,
    barrier_admissible,
    barrier_operator,
    counterexample,
)
from deadcore.grid import CartesianGrid
from deadcore.model import (
    Domain,
    EllipticityPair,
    ExponentTriple,
    OperatorKind,
    ProblemSpec,
    apply_F_batch,
    beta_exponent,
    pucci_minus,
    pucci_plus,
)
from deadcore.solver import SolveConfig, solve_dirichlet

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- 1 ---------------------------------------------------------------------------

def test_criterion_1_pucci_algebra(report):
    t = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (2, 3):
        ell = EllipticityPair(1.0, 2.0)
        w1 = np.diag(np.linspace(1.0, 2.0, n))
        w2 = np.full((n, n), 0.2) + np.eye(n) * 1.1
        kinds = [OperatorKind("trace"), OperatorKind("pucci_plus"), OperatorKind("pucci_minus"),
                 OperatorKind("min_of_two_traces", (w1.tolist(), w2.tolist()))]
        A = rng.uniform(-10, 10, (1000, n, n))
        Ms = 0.5 * (A + np.swapaxes(A, 1, 2))
        B = rng.uniform(-3, 3, (1000, n, n))
        Ns = B @ np.swapaxes(B, 1, 2)
        for M in Ms:
            worst = max(worst, abs(pucci_plus(M, ell) + pucci_minus(-M, ell)))
        lo = apply_F_batch(OperatorKind("pucci_minus"), Ns, ell)
        hi = apply_F_batch(OperatorKind("pucci_plus"), Ns, ell)
        for k in kinds:
            d = apply_F_batch(k, Ms + Ns, ell) - apply_F_batch(k, Ms, ell)
            worst = max(worst, float(np.max(lo - d)), float(np.max(d - hi)))
    dt = time.perf_counter() - t
    ok = worst <= 1e-12 and dt < 1.0
    report(1, ok, f"worst duality/sandwich defect {worst:.2e} (tol 1e-12), {dt:.2f} s")
    assert ok


# -- 2 ---------------------------------------------------------------------------

def test_criterion_2_counterexample_oracle(report):
    t = time.perf_counter()
    ce = counterexample(CounterexampleParams(n=2, p=0.0, mu=0.5, eps=0.1, gamma=1.0))
    rng = np.random.default_rng(2)
    r = rng.uniform(0.05, 1.0, 100)
    th = rng.uniform(0, 2 * np.pi, 100)
    x = np.stack([r * np.cos(th), r * np.sin(th)], -1)
    res = float(np.abs(ce.residual(x)).max())
    beta_a = beta_exponent(ExponentTriple(0.0, 0.5, 0.5)).beta_absorption
    radii = 2.0 ** -np.arange(1, 7)
    ratios = np.array([ce.sup_over_ball(q) for q in radii]) / radii ** beta_a
    step_err = float(np.abs(ratios[1:] / ratios[:-1] - 2.0 ** -0.1).max())
    dt = time.perf_counter() - t
    ok = res <= 1e-10 and step_err <= 1e-6 and np.all(np.diff(ratios) < 0) and dt < 1.0
    report(2, ok, f"max residual {res:.2e} (tol 1e-10), ratio step error {step_err:.2e} (tol 1e-6), {dt:.2f} s")
    assert ok


# -- 3 ---------------------------------------------------------------------------

def test_criterion_3_solver_consistency(report):
    t = time.perf_counter()
    spec = ProblemSpec(ExponentTriple(0, 0, 0), EllipticityPair(1, 1), OperatorKind("trace"),
                       "0", "4", "|x|^2", Domain.box((-0.5, -0.5), (0.5, 0.5)))
    errs = []
    for n in (32, 64, 128):
        grid = CartesianGrid.for_domain(spec.domain, n)
        u, _ = solve_dirichlet(spec, grid, SolveConfig(tol_residual=grid.h ** 2))
        errs.append(float(np.abs(u.values - np.sum(grid.coords() ** 2, -1)).max()))
    factors = [errs[i] / errs[i + 1] for i in range(2)]
    dt = time.perf_counter() - t
    ok = min(factors) >= 1.5 and dt < 60
    report(3, ok, f"errors {[f'{e:.2e}' for e in errs]}, factors {[round(f, 2) for f in factors]} (>= 1.5), {dt:.1f} s")
    assert ok


# -- 4 ---------------------------------------------------------------------------

def _draw(rng):
    p = float(rng.uniform(0.0, 1.0))
    q = float(rng.uniform(0.0, p + 0.8))
    mu = float(rng.uniform(0.0, p + 0.8))
    a = f"{rng.uniform(-1, 1):.3f} + {rng.uniform(-0.5, 0.5):.3f}*x1"
    lam0 = f"{rng.uniform(0.5, 5):.3f} + {rng.uniform(0, 2):.3f}*|x|"
    g1 = f"{rng.uniform(0, 1):.3f} + {rng.uniform(0, 1):.3f}*x1^2"
    g2 = f"{g1} + {rng.uniform(0, 0.5):.3f} + {rng.uniform(0, 0.5):.3f}*x2"
    kind = str(rng.choice(["trace", "pucci_plus", "pucci_minus"]))
    Lam = 1.0 if kind == "trace" else float(rng.uniform(1.0, 1.5))
    base = ProblemSpec(ExponentTriple(p, q, mu), EllipticityPair(1.0, Lam), OperatorKind(kind),
                       a, lam0, g1, Domain.box((0.0, 0.0), (1.0, 1.0)))
    return base, base.with_(g=g2)


def test_criterion_4_discrete_comparison(report):
    t = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = -np.inf
    for _ in range(10):
        s1, s2 = _draw(rng)
        grid = CartesianGrid.for_domain(s1.domain, 24)
        X = grid.coords()
        assert s1.lambda0(X).min() >= 0.5 and np.all(s1.g(X) <= s2.g(X))
        cfg = SolveConfig(tol_residual=1e-10)
        u1, _ = solve_dirichlet(s1, grid, cfg)
        u2, _ = solve_dirichlet(s2, grid, cfg)
        worst = max(worst, float((u1.values - u2.values).max()))
    dt = time.perf_counter() - t
    ok = worst <= 1e-6 and dt < 120
    report(4, ok, f"max(u1 - u2) over 10 draws {worst:.2e} (tol 1e-6), {dt:.1f} s")
    assert ok


# -- 5, 6, 8 share one 256^2 run -------------------------------------------------

@pytest.fixture(scope="module")
def deadcore_run(tmp_path_factory):
    cfg = cli.read_config(CONFIGS / "deadcore.json")
    out = tmp_path_factory.mktemp("deadcore")
    cfg = cli.apply_overrides(cfg, out=out)
    t = time.perf_counter()
    status = cli.run(cfg, "run")
    dt = time.perf_counter() - t
    summary = json.loads((out / "summary.json").read_text())
    return status, summary["checks"], out, dt, cfg


def test_criterion_5_growth_and_nondegeneracy(deadcore_run, report):
    status, checks, out, dt, cfg = deadcore_run
    spec = ProblemSpec.from_dict(cfg["spec"])
    der = beta_exponent(spec.exponents)
    rates = _csv(out / "rates.csv")
    exps = [float(r["exponent"]) for r in rates]
    inside = [1.7 <= e <= 2.3 for e in exps]
    nd = _csv(out / "nondegeneracy.csv")
    by_point = {}
    for r in nd:
        by_point.setdefault((r["i0"], r["i1"]), []).append(float(r["ratio"]))
    nd_ok = [min(v) >= 0.1 * float(np.median(v)) for v in by_point.values()]
    p, q, mu = spec.exponents.p, spec.exponents.q, spec.exponents.mu
    condition = (p + 2) / (p + 1 - mu) <= (p + 2 - q) / (p + 1 - q)
    ok = (checks["rates"]["dead_nodes"] > 0 and sum(inside) >= 5 and all(inside)
          and len(nd_ok) >= 5 and all(nd_ok) and condition and der.nondegenerate
          and checks["rates"]["passed"] and checks["nondegeneracy"]["passed"] and dt < 300)
    report(5, ok, f"dead nodes {checks['rates']['dead_nodes']}, exponents "
                  f"[{min(exps):.3f}, {max(exps):.3f}] at {len(exps)} points (window [1.7, 2.3]), "
                  f"non-degenerate at {sum(nd_ok)}/{len(nd_ok)} points, run {dt:.1f} s")
    assert ok


def test_criterion_6_dyadic_decay(deadcore_run, report):
    status, checks, out, dt, cfg = deadcore_run
    rows = _csv(out / "dyadic.csv")
    ks = sorted({int(r["k"]) for r in rows})
    ok = bool(rows) and ks == [1, 2, 3, 4] and all(float(r["sup"]) <= float(r["bound"]) for r in rows)
    worst = min(float(r["slack"]) for r in rows) if rows else float("nan")
    report(6, ok, f"{len(rows)} rows over k = {ks}, min slack tau 2^(-k beta) - sup = {worst:.3e}")
    assert ok and checks["dyadic"]["passed"]


def test_criterion_8_density_and_dimension(deadcore_run, report):
    status, checks, out, dt, cfg = deadcore_run
    rows = _csv(out / "density.csv")
    cols = [c for c in rows[0] if c.startswith("ratio_")]
    m = min(float(r[c]) for r in rows for c in cols)
    dim = checks["dimension"]["slope"]
    ok = (m >= 0.05 and dim <= 1.5 and checks["density"]["skipped"] == 0
          and checks["density"]["passed"] and checks["dimension"]["passed"])
    report(8, ok, f"min density/omega_n {m:.3f} over {len(rows)} free boundary nodes (>= 0.05), "
                  f"box dimension {dim:.3f} (<= 1.5)")
    assert ok


# -- 7 ---------------------------------------------------------------------------

def test_criterion_7_barrier(report):
    t = time.perf_counter()
    d0 = 1.0            # with p = 0, A^p = 1 for every d0
    s = barrier_admissible(0.0, 1.0, 2.0, 1.0, d0)
    rng = np.random.default_rng(7)
    r = rng.uniform(d0 / 2, d0, 10_000)
    th = rng.uniform(0, 2 * np.pi, 10_000)
    x = np.stack([r * np.cos(th), r * np.sin(th)], -1)
    L = barrier_operator(x, BarrierParams(1.0, s, d0), 0.0, EllipticityPair(1.0, 2.0), lambda0=1.0)
    dt = time.perf_counter() - t
    ok = s <= 7 and float(L.min()) >= -1e-8 and dt < 1.0
    report(7, ok, f"s* = {s:.4f} (<= 7), min L[theta] = {float(L.min()):.3e} (>= -1e-8), {dt:.2f} s")
    assert ok


# -- 9 ---------------------------------------------------------------------------

def _csv_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).glob("*.csv"))}


def test_criterion_9_determinism(deadcore_run, tmp_path, report):
    _, _, first, _, cfg = deadcore_run
    same = {}
    cli.run(cli.apply_overrides(cfg, out=tmp_path / "deadcore"), "run")
    same["deadcore"] = _csv_bytes(first) == _csv_bytes(tmp_path / "deadcore")
    for name, cmd in (("counterexample", "oracle"), ("barrier", "oracle"),
                      ("radial_exact", "oracle"), ("flatness", "rates")):
        base = cli.read_config(CONFIGS / f"{name}.json")
        a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        cli.run(cli.apply_overrides(base, out=a), cmd)
        cli.run(cli.apply_overrides(base, out=b), cmd)
        same[name] = bool(_csv_bytes(a)) and _csv_bytes(a) == _csv_bytes(b)
    ok = all(same.values())
    report(9, ok, "byte-identical CSVs: " + ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in same.items()))
    assert ok
