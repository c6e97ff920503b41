"""Closed-form solutions, barriers and comparison profiles.

Every profile exposes hand-written value / gradient / Hessian evaluators
vectorized over points of shape ``(..., n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    Domain,
    EllipticityPair,
    ExponentTriple,
    OperatorKind,
    ProblemSpec,
    apply_F_batch,
)


def _radial_parts(x, center):
    x = np.asarray(x, dtype=float)
    y = x - np.asarray(center, dtype=float)
    r = np.sqrt(np.sum(y * y, axis=-1))
    return y, r


def _power_profile(x, center, c, b):
    """Value, gradient and Hessian of ``c |x - center|^b``."""
    y, r = _radial_parts(x, center)
    n = y.shape[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        val = c * r ** b
        grad = (c * b * r ** (b - 2))[..., None] * y
        eye = np.eye(n)
        outer = y[..., :, None] * y[..., None, :]
        hess = c * b * ((b - 2) * r ** (b - 4))[..., None, None] * outer + (
            c * b * r ** (b - 2)
        )[..., None, None] * eye
    at0 = r == 0
    if np.any(at0):
        # limits at the center; b < 2 (or b <= 1 for the gradient) stays singular
        if b > 1:
            grad[at0] = 0.0
        if b > 2:
            hess[at0] = 0.0
        elif b == 2:
            hess[at0] = 2 * c * eye
    return val, grad, hess


@dataclass(frozen=True)
class RadialProfile:
    """``u(x) = c |x - center|^beta``."""

    c: float
    beta: float
    n: int
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("amplitude must be positive")
        object.__setattr__(self, "center", tuple(np.resize(np.asarray(self.center, float), self.n)))

    def value(self, x):
        return _power_profile(x, self.center, self.c, self.beta)[0]

    def gradient(self, x):
        return _power_profile(x, self.center, self.c, self.beta)[1]

    def hessian(self, x):
        return _power_profile(x, self.center, self.c, self.beta)[2]

    def __call__(self, x):
        return self.value(x)


def radial_exact(n: int, p: float, mu: float, lambda0_const: float, center=None) -> RadialProfile:
    """Exact solution ``c |x|^beta`` of ``|grad u|^p Lap u = lambda0 u^mu``.

    ``beta = (p+2)/(p+1-mu)`` and ``c^(p+1-mu) beta^(p+1) (beta+n-2) = lambda0``.
    """
    if not lambda0_const > 0:
        raise ValueError("lambda0 must be positive")
    ExponentTriple(p, 0.0, mu)
    beta = (p + 2) / (p + 1 - mu)
    k = beta ** (p + 1) * (beta + n - 2)
    assert k > 0, "beta + n - 2 must be positive"
    c = (lambda0_const / k) ** (1.0 / (p + 1 - mu))
    return RadialProfile(c, beta, n, center if center is not None else (0.0,) * n)


def radial_exact_spec(profile: RadialProfile, p: float, mu: float, lambda0_const: float,
                      domain: Domain) -> ProblemSpec:
    """Spec (F = trace, a = 0) whose Dirichlet data is the profile itself."""
    cx = np.asarray(profile.center)
    shift = " + ".join(f"(x{k + 1} - {float(cx[k])!r})^2" for k in range(profile.n))
    g = f"{profile.c!r}*(({shift})^0.5)^{profile.beta!r}"
    return ProblemSpec(
        ExponentTriple(p, 0.0, mu), EllipticityPair(1.0, 1.0), OperatorKind("trace"),
        "0", repr(float(lambda0_const)), g, domain,
    )


# ---------------------------------------------------------------------------
# counterexample family


@dataclass(frozen=True)
class CounterexampleParams:
    """``u = |x|^(beta+eps)`` with q = mu, where non-degeneracy of order beta fails."""

    n: int
    p: float
    mu: float
    eps: float
    gamma: float

    def __post_init__(self):
        if not (self.eps > 0 and self.gamma > 0):
            raise ValueError("eps and gamma must be positive")
        ExponentTriple(self.p, self.mu, self.mu)

    @property
    def q(self) -> float:
        return self.mu

    @property
    def beta(self) -> float:
        return (self.p + 2) / (self.p + 1 - self.mu)

    @property
    def exponent(self) -> float:
        return self.beta + self.eps

    @property
    def c_bar(self) -> float:
        b = self.exponent
        return (b + self.n - 2) * b ** (self.p + 1) + b ** self.mu

    @property
    def c_0(self) -> float:
        return self.gamma * self.exponent ** (-self.mu)


@dataclass(frozen=True)
class Counterexample:
    params: CounterexampleParams

    def _check(self, x):
        _, r = _radial_parts(x, np.zeros(self.params.n))
        pr = self.params
        if np.any(r == 0) and (pr.exponent < 2 or pr.p < 0):
            raise ValueError("derivatives are singular at x = 0")
        return r

    def value(self, x):
        _, r = _radial_parts(x, np.zeros(self.params.n))
        return r ** self.params.exponent

    def gradient(self, x):
        self._check(x)
        return _power_profile(x, np.zeros(self.params.n), 1.0, self.params.exponent)[1]

    def hessian(self, x):
        self._check(x)
        return _power_profile(x, np.zeros(self.params.n), 1.0, self.params.exponent)[2]

    def a(self, x):
        pr = self.params
        _, r = _radial_parts(x, np.zeros(pr.n))
        return r ** (pr.mu + pr.eps * (pr.p + 1 - pr.mu)) + pr.c_0 * r ** pr.mu

    def lambda0(self, x):
        pr = self.params
        _, r = _radial_parts(x, np.zeros(pr.n))
        return pr.c_bar * r ** (pr.eps * (pr.p + 1 - pr.mu)) + pr.gamma

    def residual(self, x):
        """``|grad u|^p Lap u + a |grad u|^mu - lambda0 u^mu`` from the closed forms."""
        pr = self.params
        self._check(x)
        g = self.gradient(x)
        H = self.hessian(x)
        m = np.sqrt(np.sum(g * g, axis=-1))
        lap = np.trace(H, axis1=-2, axis2=-1)
        return m ** pr.p * lap + self.a(x) * m ** pr.mu - self.lambda0(x) * self.value(x) ** pr.mu

    def spec(self, domain: Domain | None = None) -> ProblemSpec:
        pr = self.params
        domain = domain or Domain.box((-1.0,) * pr.n, (1.0,) * pr.n)
        k = pr.p + 1 - pr.mu
        return ProblemSpec(
            ExponentTriple(pr.p, pr.mu, pr.mu),
            EllipticityPair(1.0, 1.0),
            OperatorKind("trace"),
            f"|x|^{pr.mu + pr.eps * k!r} + {pr.c_0!r}*|x|^{pr.mu!r}",
            f"{pr.c_bar!r}*|x|^{pr.eps * k!r} + {pr.gamma!r}",
            f"|x|^{pr.exponent!r}",
            domain,
        )

    def sup_over_ball(self, r: float) -> float:
        """``sup_{B_r(0)} u = r^(beta+eps)``."""
        return r ** self.params.exponent


def counterexample(params: CounterexampleParams) -> Counterexample:
    return Counterexample(params)


# ---------------------------------------------------------------------------
# barrier for the positivity argument


@dataclass(frozen=True)
class BarrierParams:
    """``theta = eta (exp(-s|x-x0|^2/d0^2) - e^-s) / (e^(-s/4) - e^-s)`` on the
    annulus ``d0/2 <= |x - x0| <= d0``.

    ``dist_boundary`` is dist(x0, dOmega); it defaults to ``5 d0``.
    """

    eta: float
    s: float
    d0: float
    x0: tuple = (0.0, 0.0)
    dist_boundary: float | None = None

    def __post_init__(self):
        if not (self.eta > 0 and self.s > 2 and self.d0 > 0):
            raise ValueError("need eta > 0, s > 2, d0 > 0")
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))

    @property
    def denominator(self) -> float:
        return math.exp(-self.s / 4) - math.exp(-self.s)

    @property
    def sigma_lower(self) -> float:
        dist = 5 * self.d0 if self.dist_boundary is None else self.dist_boundary
        return 5 * self.eta * self.s * math.exp(-self.s) / (dist * self.denominator)

    def gradient_min(self) -> float:
        """Exact minimum of |grad theta| over the closed annulus.

        ``|grad theta| = 2 eta s t exp(-s t^2/d0^2) / (d0^2 D)`` is unimodal in
        t = |x - x0|, so the minimum sits at an end of [d0/2, d0].
        """
        k = 2 * self.eta * self.s / (self.d0 ** 2 * self.denominator)
        ends = [t * math.exp(-self.s * t * t / self.d0 ** 2) for t in (self.d0 / 2, self.d0)]
        return k * min(ends)


def barrier_theta(x, params: BarrierParams):
    """Value, gradient and Hessian of the barrier at points x."""
    y, r = _radial_parts(x, params.x0)
    d2 = params.d0 ** 2
    E = np.exp(-params.s * r * r / d2)
    D = params.denominator
    val = params.eta * (E - math.exp(-params.s)) / D
    grad = (-params.eta * params.s / d2 * E / D * 2)[..., None] * y
    n = y.shape[-1]
    outer = y[..., :, None] * y[..., None, :]
    hess = (2 * params.eta * params.s / d2 * E / D)[..., None, None] * (
        -np.eye(n) + (2 * params.s / d2) * outer
    )
    return val, grad, hess


def barrier_operator(
    x,
    params: BarrierParams,
    p: float,
    ell: EllipticityPair,
    kind: OperatorKind = OperatorKind("pucci_minus"),
    a: float = 0.0,
    q: float = 0.0,
    lambda0: float = 1.0,
) -> np.ndarray:
    """``|grad th|^p F(D^2 th) + a |grad th|^q - lambda0 th_+^(p+1)`` in closed form."""
    val, grad, hess = barrier_theta(x, params)
    m = np.sqrt(np.sum(grad * grad, axis=-1))
    Fv = apply_F_batch(kind, hess, ell)
    return m ** p * Fv + a * m ** q - lambda0 * np.maximum(val, 0.0) ** (p + 1)


def _A_power(p: float, d0: float) -> float:
    return min(d0 ** p, (d0 / 2) ** p)


def barrier_sign_margin(s: float, p: float, lam: float, Lam: float, sup_lambda0: float,
                        d0: float) -> float:
    """``s^(p+1)(-lam + lam s/2 - Lam) - sup_lambda0 / (A^p 2^(p+1))``."""
    return s ** (p + 1) * (-lam + lam * s / 2 - Lam) - sup_lambda0 / (_A_power(p, d0) * 2 ** (p + 1))


def barrier_admissible(p: float, lam: float, Lam: float, sup_lambda0: float, d0: float,
                       upper: float = 1e3, tol: float = 1e-12) -> float:
    """Smallest s (to bisection accuracy) meeting the barrier sign condition.

    The margin is negative below ``2(lam+Lam)/lam`` and increasing above it,
    so bisection on ``[2(lam+Lam)/lam, upper]`` finds the threshold.  The
    returned value always satisfies the condition.  The sign chain behind it
    assumes ``d0 <= 1``.
    """
    if not 0 < lam <= Lam or sup_lambda0 < 0 or d0 <= 0:
        raise ValueError("need 0 < lam <= Lam, sup_lambda0 >= 0, d0 > 0")
    lo = max(2.0, 2 * (lam + Lam) / lam)

    def margin(s):
        return barrier_sign_margin(s, p, lam, Lam, sup_lambda0, d0)

    if margin(lo) >= 0:
        return lo
    hi = upper
    while margin(hi) < 0:
        hi *= 2
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if margin(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# comparison profile for non-degeneracy


def xi_bracket(A: float, p: float, q: float, mu: float, n: int, Lam: float, sup_a: float,
               inf_lambda0: float) -> float:
    """``Lam A^(p+1) b^(p+1) (b+n-2) + sup_a A^q b^q - inf_lambda0 A^mu``."""
    b = (p + 2) / (p + 1 - mu)
    return (Lam * A ** (p + 1) * b ** (p + 1) * (b + n - 2) + sup_a * A ** q * b ** q
            - inf_lambda0 * A ** mu)


def xi_admissible_amplitude(p: float, q: float, mu: float, n: int, lam: float, Lam: float,
                            sup_a: float, inf_lambda0: float, max_halvings: int = 200) -> float:
    """Largest dyadic ``A = 2^-k <= 1`` with a non-positive bracket."""
    ExponentTriple(p, q, mu)
    ba = (p + 2) / (p + 1 - mu)
    bh = (p + 2 - q) / (p + 1 - q)
    if ba > bh:
        raise ValueError("non-degeneracy condition fails: absorption exponent exceeds Hamiltonian one")
    for k in range(max_halvings + 1):
        A = 2.0 ** -k
        if xi_bracket(A, p, q, mu, n, Lam, sup_a, inf_lambda0) <= 0:
            return A
    raise ValueError("no admissible dyadic amplitude found")


@dataclass(frozen=True)
class ComparisonProfile:
    """``Xi(x) = A |x|^beta`` with ``beta = (p+2)/(p+1-mu)``."""

    A: float
    p: float
    q: float
    mu: float
    n: int
    lam: float = 1.0
    Lam: float = 1.0
    sup_a: float = 0.0
    inf_lambda0: float = 1.0
    profile: RadialProfile = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "profile", RadialProfile(self.A, self.beta, self.n, (0.0,) * self.n))

    @property
    def beta(self) -> float:
        return (self.p + 2) / (self.p + 1 - self.mu)

    @property
    def bracket(self) -> float:
        return xi_bracket(self.A, self.p, self.q, self.mu, self.n, self.Lam, self.sup_a,
                          self.inf_lambda0)

    def operator(self, x, kind: OperatorKind = OperatorKind("pucci_plus")) -> np.ndarray:
        """Full operator on Xi with a = sup_a and lambda0 = inf_lambda0."""
        val, grad, hess = _power_profile(x, np.zeros(self.n), self.A, self.beta)
        m = np.sqrt(np.sum(grad * grad, axis=-1))
        Fv = apply_F_batch(kind, hess, EllipticityPair(self.lam, self.Lam))
        return m ** self.p * Fv + self.sup_a * m ** self.q - self.inf_lambda0 * val ** self.mu
