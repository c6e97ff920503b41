import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deadcore.analytic import (
    BarrierParams,
    CounterexampleParams,
    barrier_admissible,
    barrier_theta,
    counterexample,
    radial_exact,
    radial_exact_spec,
)
from deadcore.grid import CartesianGrid, ScalarField
from deadcore.model import Domain, EllipticityPair, ExponentTriple, OperatorKind, ProblemSpec
from deadcore.solver import (
    ConvergenceError,
    PreconditionError,
    SolveConfig,
    comparison_check,
    discrete_residual,
    solve_dirichlet,
    verify_viscosity_inequalities,
)

from conftest import make_spec


def interior(grid):
    return ~grid.edge_mask()


# -- config ------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    {"eps_schedule": (1e-2, 1e-2)}, {"eps_schedule": (1e-3, 1e-2)}, {"eps_schedule": (0.0,)},
    {"tol_residual": 0.0}, {"damping": 1.5}, {"momentum": 1.0}, {"pseudo_dt": -1.0},
])
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        SolveConfig(**kwargs)


def test_default_schedule_and_momentum():
    grid = CartesianGrid.over_box((0.0, 0.0), (1.0, 1.0), 64)
    cfg = SolveConfig()
    assert cfg.schedule(grid) == (grid.h, grid.h ** 1.5, grid.h ** 2)
    assert cfg.momentum_for(grid) == pytest.approx(1 - 12 / 64)
    assert SolveConfig(momentum=0.3).momentum_for(grid) == 0.3
    assert cfg.dt == 0.4


# -- residual ------------------------------------------------------------------

def test_residual_of_dead_state_vanishes():
    spec = make_spec(p=1.0, q=0.5, mu=0.5, a="1", g="0")
    grid = CartesianGrid.for_domain(spec.domain, 16)
    R = discrete_residual(ScalarField(grid, np.zeros(grid.shape)), spec)
    assert np.all(R.values == 0)


def test_residual_boundary_carries_data_mismatch():
    spec = make_spec(g="2")
    grid = CartesianGrid.for_domain(spec.domain, 8)
    R = discrete_residual(ScalarField(grid, np.ones(grid.shape)), spec)
    assert np.all(R.values[grid.edge_mask()] == 1.0)


def test_radial_residual_converges_at_least_first_order():
    errs = []
    for n_cells in (16, 32, 64):
        prof = radial_exact(2, 0.0, 0.5, 3.0)          # c |x|^4
        spec = radial_exact_spec(prof, 0.0, 0.5, 3.0, Domain.box((-1, -1), (1, 1)))
        grid = CartesianGrid.for_domain(spec.domain, n_cells)
        R = discrete_residual(ScalarField(grid, prof.value(grid.coords())), spec)
        errs.append(np.abs(R.values).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.0)


def test_counterexample_grid_residual_is_order_h():
    ce = counterexample(CounterexampleParams(2, 0.0, 0.5, 0.1, 1.0))
    spec = ce.spec()
    worst = []
    for n_cells in (32, 64, 128):
        grid = CartesianGrid.for_domain(spec.domain, n_cells)
        X = grid.coords()
        r = np.linalg.norm(X, axis=-1)
        R = discrete_residual(ScalarField(grid, ce.value(X)), spec)
        worst.append(np.abs(R.values[(r >= 0.25) & (r <= 0.9)]).max() / grid.h)
    # residual / h stays bounded (it actually shrinks like h)
    assert worst[-1] <= worst[0]


# -- solve ---------------------------------------------------------------------

@pytest.mark.parametrize("a, q", [("0", 1.5), ("1", 1.5), ("1", 0.5), ("-1", 0.5)])
def test_zero_data_gives_zero_solution(a, q):
    spec = make_spec(p=1.0, q=q, mu=0.5, a=a, lambda0="5", g="0")
    grid = CartesianGrid.for_domain(spec.domain, 16)
    u, rep = solve_dirichlet(spec, grid)
    assert np.all(u.values == 0) and rep.status == "converged"


def test_quadratic_exact_solution():
    spec = make_spec(lambda0="4", g="|x|^2", lo=(-0.5, -0.5), hi=(0.5, 0.5))
    grid = CartesianGrid.for_domain(spec.domain, 32)
    u, rep = solve_dirichlet(spec, grid, SolveConfig(tol_residual=1e-10))
    np.testing.assert_allclose(u.values, np.sum(grid.coords() ** 2, -1), atol=1e-9)


def test_solution_postconditions(deadcore_128, deadcore_spec):
    u, rep, cfg = deadcore_128
    grid = u.grid
    assert rep.status == "converged" and rep.final_residual <= cfg.tol_residual
    assert u.values.min() >= 0
    assert np.all(u.values[grid.edge_mask()] == 1.0)
    R = discrete_residual(u, deadcore_spec, cfg.schedule(grid)[-1]).values
    inner = interior(grid)
    proj = np.where((u.values > 0) | (R > 0), R, 0.0)[inner]
    assert np.abs(proj).max() <= cfg.tol_residual
    assert rep.sweeps_per_stage and len(rep.eps_stages) == 3


def test_large_absorption_produces_dead_core(deadcore_128):
    u, _, _ = deadcore_128
    X = u.grid.coords()
    dist = np.min(np.minimum(X, 1 - X), axis=-1)
    dead = (u.values <= 1e-8) & (dist > 0.3)
    assert dead.sum() > 100
    assert u.values[dist > 0.4].max() <= 1e-8


def test_budget_overrun():
    spec = make_spec(p=1.0, q=1.5, mu=0.5, a="1", lambda0="100")
    grid = CartesianGrid.for_domain(spec.domain, 32)
    cfg = SolveConfig(tol_residual=1e-10, max_sweeps=50)
    with pytest.raises(ConvergenceError) as info:
        solve_dirichlet(spec, grid, cfg)
    assert info.value.report.status == "max_sweeps"
    u, rep = solve_dirichlet(spec, grid, cfg, strict=False)
    assert rep.status == "max_sweeps" and rep.final_residual > 1e-10
    assert "sweep,max_residual" in rep.trace_csv()


def test_one_dimensional_solve_matches_exact_profile():
    # u = |x|^2 on [0.5, 1.5] solves u'' = 2
    spec = ProblemSpec(ExponentTriple(0, 0, 0), EllipticityPair(1, 1), OperatorKind("trace"),
                       "0", "2", "|x|^2", Domain.box((0.5,), (1.5,)))
    grid = CartesianGrid.for_domain(spec.domain, 64)
    u, _ = solve_dirichlet(spec, grid, SolveConfig(tol_residual=1e-10))
    np.testing.assert_allclose(u.values, grid.coords()[..., 0] ** 2, atol=1e-9)


@pytest.mark.parametrize("kind,weights", [
    ("pucci_plus", None), ("pucci_minus", None),
    ("min_of_two_traces", ([[1.0, 0.0], [0.0, 2.0]], [[2.0, 0.0], [0.0, 1.0]])),
])
def test_operator_menu_solves(kind, weights):
    spec = make_spec(p=0.5, q=0.5, mu=0.5, a="0.5", lambda0="20", g="1", kind=kind, Lam=2.0,
                     weights=weights)
    grid = CartesianGrid.for_domain(spec.domain, 32)
    u, rep = solve_dirichlet(spec, grid, SolveConfig(tol_residual=1e-7))
    assert rep.status == "converged" and u.values.min() >= 0


def test_singular_case_solves_with_schedule():
    spec = make_spec(p=-0.5, q=0.0, mu=0.0, lambda0="2", g="|x|^2")
    grid = CartesianGrid.for_domain(spec.domain, 32)
    u, rep = solve_dirichlet(spec, grid, SolveConfig(tol_residual=1e-7))
    assert rep.status == "converged" and rep.eps_stages[-1] == grid.h ** 2


def test_eps_continuation_is_stable():
    spec = make_spec(p=1.0, q=1.5, mu=0.5, a="1", lambda0="50")
    grid = CartesianGrid.for_domain(spec.domain, 32)
    h = grid.h
    u1, _ = solve_dirichlet(spec, grid, SolveConfig(eps_schedule=(h, h ** 2), tol_residual=1e-9))
    u2, _ = solve_dirichlet(spec, grid, SolveConfig(eps_schedule=(h, h ** 2, h ** 2 / 2), tol_residual=1e-9))
    assert np.abs(u1.values - u2.values).max() < 1e-4


@settings(max_examples=6, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.05, 0.5), st.floats(1.0, 30.0))
def test_monotone_in_boundary_data(p, shift, lam0):
    spec = make_spec(p=p, q=0.5 * (p + 1), mu=0.3 * (p + 1), a="1", lambda0=repr(lam0), g="1 + x1*x2")
    grid = CartesianGrid.for_domain(spec.domain, 16)
    cfg = SolveConfig(tol_residual=1e-9)
    u1, _ = solve_dirichlet(spec, grid, cfg)
    u2, _ = solve_dirichlet(spec.with_(g=f"1 + x1*x2 + {shift!r}"), grid, cfg)
    assert np.all(u1.values <= u2.values + 10 * cfg.tol_residual)


@settings(max_examples=6, deadline=None)
@given(st.floats(1.0, 20.0), st.floats(0.0, 20.0))
def test_monotone_in_absorption(lam0, extra):
    spec = make_spec(p=1.0, q=1.5, mu=0.5, a="1", lambda0=repr(lam0))
    grid = CartesianGrid.for_domain(spec.domain, 16)
    cfg = SolveConfig(tol_residual=1e-9)
    u1, _ = solve_dirichlet(spec, grid, cfg)
    u2, _ = solve_dirichlet(spec.with_(lambda0=f"{lam0!r} + {extra!r}*|x|"), grid, cfg)
    assert np.all(u2.values <= u1.values + 10 * cfg.tol_residual)


# -- viscosity labels ------------------------------------------------------------

def test_exact_radial_solution_labelled_solution():
    prof = radial_exact(2, 1.0, 0.5, 8.0)      # c |x|^2
    spec = radial_exact_spec(prof, 1.0, 0.5, 8.0, Domain.box((-1, -1), (1, 1)))
    grid = CartesianGrid.for_domain(spec.domain, 20)
    # Laplacian stencil is exact; the one-sided modulus overshoots by at most c h sqrt(2)
    tol = 1.01 * prof.c * grid.h * np.sqrt(2) * 4 * prof.c
    rep = verify_viscosity_inequalities(ScalarField(grid, prof.value(grid.coords())), spec, tol=tol)
    assert rep.is_solution
    assert set(rep.counts()) == {"solution", "boundary"}


def test_positive_constant_is_supersolution_only():
    spec = make_spec(p=1.0, q=0.5, mu=0.5, a="1", lambda0="3")
    grid = CartesianGrid.for_domain(spec.domain, 8)
    rep = verify_viscosity_inequalities(ScalarField(grid, np.full(grid.shape, 2.0)), spec, tol=1e-12)
    assert rep.constant_mask[interior(grid)].all()
    assert rep.is_supersolution and not rep.is_subsolution


def test_zero_plateau_is_solution(deadcore_128, deadcore_spec):
    u, _, cfg = deadcore_128
    rep = verify_viscosity_inequalities(u, deadcore_spec, 10 * cfg.tol_residual,
                                        cfg.schedule(u.grid)[-1], zero_floor=1e-10)
    assert rep.is_solution


def test_barrier_is_discrete_subsolution():
    p, d0 = 0.0, 0.5
    s = barrier_admissible(p, 1.0, 2.0, 1.0, d0)
    bp = BarrierParams(1.0, s, d0)
    spec = ProblemSpec(ExponentTriple(p, 0.0, p + 1, critical=True), EllipticityPair(1, 2),
                       OperatorKind("pucci_minus"), "0", "1", "0", Domain.box((-0.6, -0.6), (0.6, 0.6)))
    grid = CartesianGrid.for_domain(spec.domain, 48)
    X = grid.coords()
    rep = verify_viscosity_inequalities(ScalarField(grid, barrier_theta(X, bp)[0]), spec, tol=0.0)
    r = np.linalg.norm(X, axis=-1)
    ann = (r >= d0 / 2 + grid.h) & (r <= d0 - grid.h)
    assert np.all(rep.labels[ann] == "subsolution")


# -- comparison ------------------------------------------------------------------

def test_comparison_identical_fields():
    spec = make_spec()
    grid = CartesianGrid.for_domain(spec.domain, 8)
    u = ScalarField(grid, np.random.default_rng(0).uniform(0, 1, grid.shape))
    rep = comparison_check(u, u, spec)
    assert rep.max_difference == 0.0 and rep.passed
    assert rep.hypothesis.startswith("(ii)")


def test_comparison_strict_hypothesis_recorded():
    spec = make_spec()
    grid = CartesianGrid.for_domain(spec.domain, 8)
    u = ScalarField(grid, np.zeros(grid.shape))
    assert comparison_check(u, u, spec, h1=1.0, h2=0.0).hypothesis.startswith("(i)")
    with pytest.raises(PreconditionError):
        comparison_check(u, u, spec, h1=0.0, h2=1.0)


def test_comparison_rejects_boundary_violation():
    spec = make_spec()
    grid = CartesianGrid.for_domain(spec.domain, 8)
    with pytest.raises(PreconditionError, match="boundary"):
        comparison_check(ScalarField(grid, np.ones(grid.shape)), ScalarField(grid, np.zeros(grid.shape)), spec)


def test_comparison_of_ordered_solves():
    spec = make_spec(p=1.0, q=1.5, mu=0.5, a="1", lambda0="30", g="1")
    grid = CartesianGrid.for_domain(spec.domain, 32)
    cfg = SolveConfig(tol_residual=1e-8)
    u1, _ = solve_dirichlet(spec, grid, cfg)
    u2, _ = solve_dirichlet(spec.with_(g="1.2 + 0.1*x1"), grid, cfg)
    rep = comparison_check(u1, u2, spec, tol=1e-6, lipschitz_bound=50.0)
    assert rep.passed and rep.max_difference <= 1e-6


def test_barrier_below_solution_on_annulus():
    # critical absorption mu = p + 1 with a Hamiltonian term; the solution stays positive
    spec = ProblemSpec(ExponentTriple(0.0, 0.5, 1.0, critical=True), EllipticityPair(1, 1),
                       OperatorKind("trace"), "1", "1", "1", Domain.box((-1, -1), (1, 1)))
    grid = CartesianGrid.for_domain(spec.domain, 64)
    u, _ = solve_dirichlet(spec, grid, SolveConfig(tol_residual=1e-8))
    X = grid.coords()
    r = np.linalg.norm(X, axis=-1)
    d0 = 0.5
    eta = u.values[r <= d0 / 2].min()
    bp = BarrierParams(eta, barrier_admissible(0.0, 1.0, 1.0, 1.0, d0), d0)
    ann = (r >= d0 / 2) & (r <= d0)
    assert np.all(barrier_theta(X, bp)[0][ann] <= u.values[ann] + 1e-8)
