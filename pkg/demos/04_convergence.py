"""Grid convergence of the solver on a problem with a known answer.

With ``p = q = mu = 0`` and ``lambda0 = 4`` the equation is ``Lap u = 4`` where
``u > 0``; ``u = |x|^2`` solves it with its own boundary values.  The
Laplacian stencil is exact on quadratics, so the error is set by the solver
tolerance, here ``h^2``.
"""
import numpy as np

from deadcore.grid import CartesianGrid
from deadcore.model import Domain, EllipticityPair, ExponentTriple, OperatorKind, ProblemSpec
from deadcore.solver import SolveConfig, solve_dirichlet

spec = ProblemSpec(ExponentTriple(0, 0, 0), EllipticityPair(1, 1), OperatorKind("trace"),
                   "0", "4", "|x|^2", Domain.box((-0.5, -0.5), (0.5, 0.5)))
prev = None
print("  h          sup error   factor")
for n in (16, 32, 64, 128):
    grid = CartesianGrid.for_domain(spec.domain, n)
    u, _ = solve_dirichlet(spec, grid, SolveConfig(tol_residual=grid.h ** 2))
    err = np.abs(u.values - np.sum(grid.coords() ** 2, -1)).max()
    print(f"  1/{n:<7d}  {err:.3e}   {'' if prev is None else f'{prev / err:.2f}'}")
    prev = err
