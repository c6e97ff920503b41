"""A radial barrier keeps solutions away from zero when absorption is nearly linear.

For ``mu`` close to ``p + 1`` the barrier ``theta`` built on an annulus is a
subsolution once its exponent ``s`` passes the admissibility threshold.  With
``theta <= u`` on the boundary, comparison keeps ``u >= theta``, so no dead
core can form.
"""
import numpy as np

from deadcore.analytic import BarrierParams, barrier_admissible, barrier_operator, barrier_theta
from deadcore.grid import CartesianGrid
from deadcore.model import Domain, EllipticityPair, ExponentTriple, OperatorKind, ProblemSpec
from deadcore.rates import dichotomy_check
from deadcore.solver import SolveConfig, solve_dirichlet

s = barrier_admissible(p=0.0, lam=1.0, Lam=2.0, sup_lambda0=1.0, d0=1.0)
bp = BarrierParams(eta=1.0, s=s, d0=1.0)
rng = np.random.default_rng(0)
r = rng.uniform(0.5, 1.0, 10_000)
th = rng.uniform(0, 2 * np.pi, 10_000)
x = np.stack([r * np.cos(th), r * np.sin(th)], -1)
L = barrier_operator(x, bp, 0.0, EllipticityPair(1.0, 2.0), lambda0=1.0)
print(f"admissible exponent s* = {s:.4f}; min of L[theta] on the annulus = {L.min():.3e}")

# Nearly linear absorption: the solve stays strictly positive and the classifier says so.
spec = ProblemSpec(
    ExponentTriple(p=0.0, q=0.5, mu=1 - 1e-3), EllipticityPair(1.0, 1.0), OperatorKind("trace"),
    a="1", lambda0="1", g="1", domain=Domain.box((-1.0, -1.0), (1.0, 1.0)),
)
grid = CartesianGrid.for_domain(spec.domain, 64)
u, _ = solve_dirichlet(spec, grid, SolveConfig(tol_residual=1e-9))
rep = dichotomy_check(u, spec)
print(f"interior min {rep.interior_min:.4f}, classification: {rep.classification}")

# The annulus barrier around the centre sits below the solve.
pts = grid.coords()
ring = (np.linalg.norm(pts, axis=-1) >= 0.25) & (np.linalg.norm(pts, axis=-1) <= 0.5)
small = BarrierParams(eta=u.values.min(), s=s, d0=0.5)
theta, _, _ = barrier_theta(pts[ring], small)
print(f"max(theta - u) on the annulus 0.25 <= |x| <= 0.5: {np.max(theta - u.values[ring]):.4f}")
