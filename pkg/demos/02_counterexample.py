"""When the Hamiltonian wins, solutions may vanish faster than the absorption rate.

With ``q = mu`` the profile ``u = |x|^(beta + eps)`` solves the equation for
suitably chosen coefficients ``a`` and ``lambda0``.  Its ratio
``sup_{B_r} u / r^beta`` shrinks like ``r^eps``, so no positive lower bound of
that form can hold.
"""
import numpy as np

from deadcore.analytic import CounterexampleParams, counterexample
from deadcore.model import ExponentTriple, beta_exponent
from deadcore.rates import nondegeneracy_from_sups

params = CounterexampleParams(n=2, p=0.0, mu=0.5, eps=0.1, gamma=1.0)
ce = counterexample(params)
print(f"beta = {params.beta:g}, profile exponent = {params.exponent:g}, "
      f"c_bar = {params.c_bar:.4f}, c_0 = {params.c_0:.5f}")

rng = np.random.default_rng(0)
r = rng.uniform(0.05, 1.0, 1000)
th = rng.uniform(0, 2 * np.pi, 1000)
x = np.stack([r * np.cos(th), r * np.sin(th)], -1)
print(f"closed-form residual on 1000 points: max |R| = {np.abs(ce.residual(x)).max():.2e}")

der = beta_exponent(ExponentTriple(params.p, params.q, params.mu))
radii = [2.0 ** -k for k in range(1, 9)]
rep = nondegeneracy_from_sups(radii, [ce.sup_over_ball(s) for s in radii], der)
print("\n  r           sup/r^beta")
for s, q in zip(rep.radii, rep.ratios):
    print(f"  {s:<10.6f}  {q:.6f}")
print(f"\nverdict: {rep.verdict} (the growth condition for a lower bound holds: {der.nondegenerate})")
