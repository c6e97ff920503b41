import numpy as np
import pytest

from deadcore.grid import CartesianGrid
from deadcore.model import Domain, EllipticityPair, ExponentTriple, OperatorKind, ProblemSpec
from deadcore.solver import SolveConfig, solve_dirichlet


def make_spec(p=0.0, q=0.0, mu=0.0, a="0", lambda0="1", g="1", lo=(0.0, 0.0), hi=(1.0, 1.0),
              kind="trace", lam=1.0, Lam=1.0, weights=None):
    return ProblemSpec(
        ExponentTriple(p, q, mu), EllipticityPair(lam, Lam), OperatorKind(kind, weights),
        a, lambda0, g, Domain.box(lo, hi),
    )


@pytest.fixture(scope="session")
def deadcore_spec():
    return make_spec(p=1.0, q=1.5, mu=0.5, a="1", lambda0="100", g="1")


@pytest.fixture(scope="session")
def deadcore_128(deadcore_spec):
    """Dead-core solve on a 128^2 grid, shared across modules."""
    grid = CartesianGrid.for_domain(deadcore_spec.domain, 128)
    cfg = SolveConfig(tol_residual=1e-6)
    u, rep = solve_dirichlet(deadcore_spec, grid, cfg)
    return u, rep, cfg


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
