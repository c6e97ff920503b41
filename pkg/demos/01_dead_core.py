"""Dead core of a strongly absorbing problem and what the free boundary looks like.

Solve ``|grad u| Lap u + |grad u|^1.5 = 100 u^0.5`` on the unit square with
``u = 1`` on the boundary.  The absorption is strong enough that the solution
vanishes on a whole region in the middle.  We extract that region, look at how
fast ``u`` grows away from its edge, and measure the edge itself.

Run with ``python3 demos/01_dead_core.py [n_cells]``; 128 takes a few seconds.
"""
import sys

import numpy as np

from deadcore.geometry import (
    OMEGA,
    box_dimension,
    default_zero_threshold,
    density_report,
    extract_dead_core,
    free_boundary,
    spread_points,
)
from deadcore.grid import CartesianGrid
from deadcore.model import (
    Domain,
    EllipticityPair,
    ExponentTriple,
    OperatorKind,
    ProblemSpec,
    beta_exponent,
)
from deadcore.rates import check_nondegeneracy, dyadic_radii, growth_fit
from deadcore.solver import SolveConfig, solve_dirichlet

n_cells = int(sys.argv[1]) if len(sys.argv) > 1 else 128
spec = ProblemSpec(
    ExponentTriple(p=1.0, q=1.5, mu=0.5), EllipticityPair(1.0, 1.0), OperatorKind("trace"),
    a="1", lambda0="100", g="1", domain=Domain.box((0.0, 0.0), (1.0, 1.0)),
)
der = beta_exponent(spec.exponents)
print(f"growth exponent beta = {der.beta:g} "
      f"(Hamiltonian {der.beta_hamiltonian:g}, absorption {der.beta_absorption:g})")

grid = CartesianGrid.for_domain(spec.domain, n_cells)
cfg = SolveConfig(tol_residual=1e-6)
u, rep = solve_dirichlet(spec, grid, cfg)
print(f"solved on {grid.shape}: {rep.status}, residual {rep.final_residual:.2e}, "
      f"sweeps per eps stage {rep.sweeps_per_stage}")

# Values below the threshold count as zero; it sits between solver noise and one cell of growth.
thr = default_zero_threshold(grid, spec.exponents, cfg.tol_residual, 100.0)
dead = extract_dead_core(u, thr)
fb = free_boundary(dead)
print(f"zero threshold {thr:.2e}: {dead.count} dead nodes, {len(fb)} free boundary nodes")

# Growth away from the free boundary: sup over B_r(x0) against r on a log-log scale.
h = grid.h
pts = [x for x in spread_points(fb.dead_side, 8)
       if np.min(np.minimum(grid.node_coord(x), 1 - grid.node_coord(x))) > 20 * h]
print("\n  node        exponent   min/median of sup/r^beta")
for x0 in pts:
    fit = growth_fit(u, x0, [k * h for k in (4, 5, 6, 8, 10)], zero_threshold=thr)
    nd = check_nondegeneracy(u, x0, dyadic_radii(16 * h, 3 * h), der)
    print(f"  {tuple(int(i) for i in x0)!s:11} {fit.fitted_exponent:8.3f}   "
          f"{nd.min_ratio / nd.median_ratio:6.3f}")

# The positive set fills a fixed share of every small ball centred on the free boundary.
x0 = pts[0]
d = density_report(dead, x0, [4 * h, 8 * h, 16 * h])
print("\ndensity at", tuple(int(i) for i in x0), "as a fraction of the unit ball:",
      ", ".join(f"{q / OMEGA[2]:.3f}" for q in d.ratios))

dim = box_dimension(fb)
print(f"box-counting dimension of the free boundary: {dim.slope:.3f} "
      f"(fit residual {dim.fit_residual:.3f})")
