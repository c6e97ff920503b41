"""Equation data, the operator menu, exponent calculus and rescaling maps.

The model problem is

    |grad u|^p F(D^2 u) + a(x) |grad u|^q = lambda0(x) * max(u, 0)^mu   in Omega,
    u = g                                                             on dOmega,

with ``p > -1``, ``0 <= q < p + 1``, ``0 <= mu < p + 1`` and F a
(lambda, Lambda)-elliptic operator taken from a small fixed menu.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .expr import Expr

SYM_TOL = 1e-12


class SpecError(ValueError):
    """A problem specification violates one of its invariants."""


class SingularEvaluationError(ArithmeticError):
    """|grad|^p evaluated at grad = 0 with p < 0 and no regularization."""


# ---------------------------------------------------------------------------
# exponents and ellipticity


@dataclass(frozen=True)
class ExponentTriple:
    p: float
    q: float
    mu: float
    critical: bool = False

    def __post_init__(self):
        for v in exponent_violations(self.p, self.q, self.mu, self.critical):
            raise SpecError(v)


def exponent_violations(p: float, q: float, mu: float, critical: bool = False) -> list[str]:
    out = []
    if not p > -1:
        out.append(f"exponent range: p = {p} must exceed -1")
    if not 0 <= q < p + 1:
        out.append(f"exponent range: q = {q} must satisfy 0 <= q < p + 1 = {p + 1}")
    if critical:
        if mu != p + 1:
            out.append(f"exponent range: critical triple needs mu = p + 1, got {mu}")
    elif not 0 <= mu < p + 1:
        out.append(f"exponent range: mu = {mu} must satisfy 0 <= mu < p + 1 = {p + 1}")
    return out


@dataclass(frozen=True)
class EllipticityPair:
    lam: float
    Lam: float

    def __post_init__(self):
        if not 0 < self.lam <= self.Lam:
            raise SpecError(
                f"ellipticity: need 0 < lambda <= Lambda, got ({self.lam}, {self.Lam})"
            )


@dataclass(frozen=True)
class DerivedExponents:
    beta: float
    beta_hamiltonian: float
    beta_absorption: float
    nondegenerate: bool


def beta_exponent(exp: ExponentTriple) -> DerivedExponents:
    """Growth exponent at free boundary points and the non-degeneracy flag.

    ``beta = min{(p+2-q)/(p+1-q), (p+2)/(p+1-mu)}``; the flag is set when the
    absorption exponent is the smaller (or equal) one.
    """
    p, q, mu = exp.p, exp.q, exp.mu
    if q == p + 1 or mu == p + 1:
        raise SpecError("exponent range: q = p + 1 or mu = p + 1 makes beta undefined")
    bh = (p + 2 - q) / (p + 1 - q)
    ba = (p + 2) / (p + 1 - mu)
    return DerivedExponents(min(bh, ba), bh, ba, ba <= bh)


# ---------------------------------------------------------------------------
# operators


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] > 3:
        raise ValueError("matrices larger than 3x3 are not supported")
    if np.max(np.abs(M - M.T), initial=0.0) > SYM_TOL:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def pucci_plus(M, ell: EllipticityPair) -> float:
    e = np.linalg.eigvalsh(_check_symmetric(M))
    return float(ell.Lam * e[e > 0].sum() + ell.lam * e[e < 0].sum())


def pucci_minus(M, ell: EllipticityPair) -> float:
    e = np.linalg.eigvalsh(_check_symmetric(M))
    return float(ell.lam * e[e > 0].sum() + ell.Lam * e[e < 0].sum())


OPERATOR_TAGS = ("trace", "pucci_plus", "pucci_minus", "min_of_two_traces")


@dataclass(frozen=True)
class OperatorKind:
    """One member of the operator menu.

    ``weights`` is only used by ``min_of_two_traces``: a pair of symmetric
    matrices A1, A2 (nested lists) and F(M) = min(tr(A1 M), tr(A2 M)).
    """

    tag: str = "trace"
    weights: tuple | None = None

    def __post_init__(self):
        if self.tag not in OPERATOR_TAGS:
            raise SpecError(f"operator: unknown kind {self.tag!r}")
        if self.tag == "min_of_two_traces":
            if self.weights is None or len(self.weights) != 2:
                raise SpecError("operator: min_of_two_traces needs two weight matrices")
            w = tuple(tuple(tuple(float(v) for v in row) for row in A) for A in self.weights)
            object.__setattr__(self, "weights", w)

    def weight_arrays(self) -> list[np.ndarray]:
        return [np.array(A, dtype=float) for A in self.weights]

    def check_weights(self, ell: EllipticityPair, n: int | None = None) -> None:
        if self.tag != "min_of_two_traces":
            return
        for A in self.weight_arrays():
            if n is not None and A.shape != (n, n):
                raise SpecError(f"operator: weight shape {A.shape} does not match dimension {n}")
            e = np.linalg.eigvalsh(_check_symmetric(A))
            if e.min() < ell.lam - 1e-12 or e.max() > ell.Lam + 1e-12:
                raise SpecError(
                    f"operator: weight eigenvalues {e} outside [{ell.lam}, {ell.Lam}]"
                )

    def to_dict(self) -> dict:
        d = {"kind": self.tag}
        if self.weights is not None:
            d["weights"] = [[list(row) for row in A] for A in self.weights]
        return d


def apply_F(kind: OperatorKind, M, ell: EllipticityPair) -> float:
    M = _check_symmetric(M)
    if kind.tag == "trace":
        return float(np.trace(M))
    if kind.tag == "pucci_plus":
        return pucci_plus(M, ell)
    if kind.tag == "pucci_minus":
        return pucci_minus(M, ell)
    kind.check_weights(ell, M.shape[0])
    return float(min(np.sum(A * M) for A in kind.weight_arrays()))


# ---------------------------------------------------------------------------
# problem data


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lo, hi]^n`` or ball ``B_radius(center)``."""

    dim: int
    kind: str
    extent: tuple

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise SpecError(f"domain: dimension {self.dim} not in {{1, 2}}")
        if self.kind == "box":
            lo, hi = (tuple(float(v) for v in np.atleast_1d(c)) for c in self.extent)
            if len(lo) != self.dim or len(hi) != self.dim:
                raise SpecError("domain: box corners must have dim coordinates")
            if any(h <= l for l, h in zip(lo, hi)):
                raise SpecError("domain: box upper corner must exceed lower corner")
            object.__setattr__(self, "extent", (lo, hi))
        elif self.kind == "ball":
            center, radius = self.extent
            center = tuple(float(v) for v in np.atleast_1d(center))
            if len(center) != self.dim or not float(radius) > 0:
                raise SpecError("domain: ball needs a dim-point center and positive radius")
            object.__setattr__(self, "extent", (center, float(radius)))
        else:
            raise SpecError(f"domain: unknown kind {self.kind!r}")

    @classmethod
    def box(cls, lo, hi) -> "Domain":
        lo = tuple(float(v) for v in np.atleast_1d(lo))
        return cls(len(lo), "box", (lo, tuple(float(v) for v in np.atleast_1d(hi))))

    @classmethod
    def ball(cls, center, radius) -> "Domain":
        center = tuple(float(v) for v in np.atleast_1d(center))
        return cls(len(center), "ball", (center, float(radius)))

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "box":
            return np.array(self.extent[0]), np.array(self.extent[1])
        c, r = self.extent
        return np.array(c) - r, np.array(c) + r

    def contains(self, x) -> np.ndarray:
        """Open-set membership of points of shape (..., dim)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            lo, hi = self.bounding_box
            return np.all((x > lo) & (x < hi), axis=-1)
        c, r = self.extent
        return np.sum((x - np.array(c)) ** 2, axis=-1) < r * r

    def distance_to_boundary(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "box":
            lo, hi = self.bounding_box
            return np.min(np.minimum(x - lo, hi - x), axis=-1)
        c, r = self.extent
        return r - np.sqrt(np.sum((x - np.array(c)) ** 2, axis=-1))

    def mapped(self, center, rho) -> "Domain":
        """Image of the domain under ``y -> (y - center) / rho``."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if self.kind == "box":
            lo, hi = self.bounding_box
            return Domain.box((lo - center) / rho, (hi - center) / rho)
        c, r = self.extent
        return Domain.ball((np.array(c) - center) / rho, r / rho)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "kind": self.kind, "extent": [list(self.extent[0]),
                self.extent[1] if self.kind == "ball" else list(self.extent[1])]}


@dataclass(frozen=True)
class ProblemSpec:
    exponents: ExponentTriple
    ellipticity: EllipticityPair
    operator: OperatorKind
    a: Expr
    lambda0: Expr
    g: Expr
    domain: Domain

    def __post_init__(self):
        for name in ("a", "lambda0", "g"):
            object.__setattr__(self, name, Expr.coerce(getattr(self, name)))
        self.operator.check_weights(self.ellipticity, self.domain.dim)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def with_(self, **changes) -> "ProblemSpec":
        return replace(self, **changes)

    def sample_points(self, nodes: int = 65) -> np.ndarray:
        """Points of a uniform sampling of the closed domain, shape (N, dim)."""
        lo, hi = self.domain.bounding_box
        axes = [np.linspace(l, h, nodes) for l, h in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        if self.domain.kind == "ball":
            c, r = self.domain.extent
            pts = pts[np.sum((pts - np.array(c)) ** 2, axis=-1) <= r * r + 1e-12]
        return pts

    def invariant_violations(self, points: np.ndarray | None = None) -> list[str]:
        """Sampled checks: inf lambda0 > 0 on the domain, g >= 0 on the boundary."""
        pts = self.sample_points() if points is None else points
        out = []
        lam0 = np.atleast_1d(self.lambda0(pts))
        if not np.all(np.isfinite(lam0)) or lam0.min() <= 0:
            out.append(f"positivity: inf lambda0 = {np.nanmin(lam0):.6g} must be > 0")
        bpts = boundary_sample(self.domain)
        gv = np.atleast_1d(self.g(bpts))
        if not np.all(np.isfinite(gv)) or gv.min() < 0:
            out.append(f"boundary: g must be non-negative, min sampled {np.nanmin(gv):.6g}")
        return out

    def validate(self) -> None:
        v = self.invariant_violations()
        if v:
            raise SpecError(v[0])

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        e = self.exponents
        return {
            "exponents": {"p": e.p, "q": e.q, "mu": e.mu},
            "ellipticity": {"lambda": self.ellipticity.lam, "Lambda": self.ellipticity.Lam},
            "operator": self.operator.to_dict(),
            "coeff": {"a": self.a.text, "lambda0": self.lambda0.text},
            "boundary": {"g": self.g.text},
            "domain": self.domain.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        e = d["exponents"]
        el = d.get("ellipticity", {"lambda": 1.0, "Lambda": 1.0})
        op = d.get("operator", {"kind": "trace"})
        dom = d["domain"]
        domain = Domain(int(dom["dim"]), dom.get("kind", "box"), tuple(dom["extent"]))
        return cls(
            exponents=ExponentTriple(float(e["p"]), float(e["q"]), float(e["mu"])),
            ellipticity=EllipticityPair(float(el["lambda"]), float(el["Lambda"])),
            operator=OperatorKind(op.get("kind", "trace"), op.get("weights")),
            a=Expr.coerce(d["coeff"].get("a", 0.0)),
            lambda0=Expr.coerce(d["coeff"]["lambda0"]),
            g=Expr.coerce(d["boundary"]["g"]),
            domain=domain,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProblemSpec":
        return cls.from_dict(json.loads(text))


def boundary_sample(domain: Domain, nodes: int = 129) -> np.ndarray:
    lo, hi = domain.bounding_box
    if domain.kind == "ball":
        c, r = domain.extent
        if domain.dim == 1:
            return np.array([[c[0] - r], [c[0] + r]])
        t = np.linspace(0.0, 2 * np.pi, 4 * nodes, endpoint=False)
        return np.array(c) + r * np.stack([np.cos(t), np.sin(t)], axis=-1)
    if domain.dim == 1:
        return np.array([[lo[0]], [hi[0]]])
    s = np.linspace(0.0, 1.0, nodes)
    x = lo[0] + s * (hi[0] - lo[0])
    y = lo[1] + s * (hi[1] - lo[1])
    return np.concatenate([
        np.stack([x, np.full_like(x, lo[1])], -1),
        np.stack([x, np.full_like(x, hi[1])], -1),
        np.stack([np.full_like(y, lo[0]), y], -1),
        np.stack([np.full_like(y, hi[0]), y], -1),
    ])


def full_operator(x, grad, hess, u_val: float, spec: ProblemSpec, eps_reg: float = 0.0) -> float:
    """Pointwise value of m^p F(hess) + a(x) m^q - lambda0(x) max(u, 0)^mu.

    ``m = sqrt(|grad|^2 + eps_reg^2)``; with ``eps_reg = 0`` this is the
    unregularized operator.
    """
    e = spec.exponents
    grad = np.atleast_1d(np.asarray(grad, dtype=float))
    m = math.sqrt(float(grad @ grad) + eps_reg * eps_reg)
    if m == 0.0 and e.p < 0:
        raise SingularEvaluationError("grad = 0 with p < 0 and eps_reg = 0")
    Fv = apply_F(spec.operator, np.atleast_2d(hess), spec.ellipticity)
    diffusion = 0.0 if (m == 0.0 and e.p > 0) else m ** e.p * Fv
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(
        diffusion + float(spec.a(x)) * m ** e.q - float(spec.lambda0(x)) * max(u_val, 0.0) ** e.mu
    )


# ---------------------------------------------------------------------------
# normalization and rescaling


def sup_norm(expr: Expr, points: np.ndarray) -> float:
    return float(np.max(np.abs(np.atleast_1d(expr(points)))))


def normalization_kappa(spec: ProblemSpec, sup_u: float, points: np.ndarray | None = None) -> float:
    """max{1, sup u, ||a||^(1/(p+1-q)), ||lambda0||^(1/(p+1-mu))}, norms on sample points."""
    if sup_u < 0:
        raise ValueError("sup_u must be non-negative")
    pts = spec.sample_points() if points is None else points
    e = spec.exponents
    return max(
        1.0,
        float(sup_u),
        sup_norm(spec.a, pts) ** (1.0 / (e.p + 1 - e.q)),
        sup_norm(spec.lambda0, pts) ** (1.0 / (e.p + 1 - e.mu)),
    )


@dataclass(frozen=True)
class ScalingMap:
    """``v(x) = u(center + rho x) / tau``.

    The normalizing regime is ``tau >= 1, 0 < rho <= 1``; inverse maps leave
    it, so only positivity is enforced here.
    """

    tau: float
    rho: float
    center: tuple = (0.0,)
    targets: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.tau > 0 and self.rho > 0):
            raise ValueError(f"scaling map needs tau > 0 and rho > 0, got {self.tau}, {self.rho}")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))

    @property
    def is_normalizing(self) -> bool:
        return self.tau >= 1 and self.rho <= 1

    def inverse(self) -> "ScalingMap":
        c = np.array(self.center)
        return ScalingMap(1.0 / self.tau, 1.0 / self.rho, tuple(-c / self.rho))

    def forward(self, x) -> np.ndarray:
        """Original-space point for a rescaled point x."""
        return np.array(self.center) + self.rho * np.asarray(x, dtype=float)


def coefficient_factors(exp: ExponentTriple, tau: float, rho: float) -> tuple[float, float]:
    """Multipliers of a and lambda0 under ``v = u(x0 + rho x) / tau``."""
    p, q, mu = exp.p, exp.q, exp.mu
    fa = rho ** (p - q + 2) / tau ** (p - q + 1)
    fl = rho ** (p + 2) / tau ** (p + 1 - mu)
    return fa, fl


def rescale_spec(spec: ProblemSpec, smap: ScalingMap) -> ProblemSpec:
    """Spec solved by ``v(x) = u(x0 + rho x) / tau`` when u solves ``spec``.

    The menu operators are positively 1-homogeneous, so
    ``(tau/rho^2)^-1 F((tau/rho^2) M) = F(M)`` and the operator is unchanged.
    """
    if smap.rho <= 0 or smap.tau <= 0:
        raise ValueError("rho and tau must be positive")
    c = np.array(smap.center)
    if c.size != spec.dim:
        c = np.resize(c, spec.dim)
    fa, fl = coefficient_factors(spec.exponents, smap.tau, smap.rho)
    return replace(
        spec,
        a=spec.a.compose_affine(fa, c, smap.rho),
        lambda0=spec.lambda0.compose_affine(fl, c, smap.rho),
        g=spec.g.compose_affine(1.0 / smap.tau, c, smap.rho),
        domain=spec.domain.mapped(c, smap.rho),
    )


def growth_scaling_map(
    spec: ProblemSpec,
    sup_u: float,
    x0: Sequence[float],
    dist: float,
    gamma: float = 1.0,
    points: np.ndarray | None = None,
) -> ScalingMap:
    """tau and rho of the free-boundary growth argument.

    ``tau = max{1, sup u, (2||a||)^(1/(1+p-q)), (2||lambda0||)^(1/(p+1-mu))}`` and
    ``rho = min{dist/2, gamma^(1/(p+2-q))}``; ``dist`` is the distance from the
    interior subdomain to the boundary.
    """
    pts = spec.sample_points() if points is None else points
    e = spec.exponents
    tau = max(
        1.0,
        float(sup_u),
        (2 * sup_norm(spec.a, pts)) ** (1.0 / (1 + e.p - e.q)),
        (2 * sup_norm(spec.lambda0, pts)) ** (1.0 / (e.p + 1 - e.mu)),
    )
    rho = min(dist / 2.0, gamma ** (1.0 / (e.p + 2 - e.q)))
    fa, fl = coefficient_factors(e, tau, rho)
    targets = {
        "a1_sup": fa * sup_norm(spec.a, pts),
        "lambda1_sup": fl * sup_norm(spec.lambda0, pts),
        "gamma_half": gamma / 2.0,
    }
    return ScalingMap(tau, rho, tuple(np.atleast_1d(x0)), targets)


def dyadic_factors(exp: ExponentTriple, beta: float) -> tuple[float, float]:
    """Coefficient multipliers of the step ``v_{k+1}(x) = 2^beta v_k(x/2)``."""
    p, q, mu = exp.p, exp.q, exp.mu
    return 2.0 ** (beta * (p + 1 - q) - p - 2 + q), 2.0 ** (beta * (p + 1 - mu) - p - 2)


def apply_F_batch(kind: OperatorKind, H: np.ndarray, ell: EllipticityPair) -> np.ndarray:
    """``apply_F`` over a stack of symmetric matrices of shape (..., n, n)."""
    H = np.asarray(H, dtype=float)
    if kind.tag == "trace":
        return np.trace(H, axis1=-2, axis2=-1)
    if kind.tag == "min_of_two_traces":
        A1, A2 = kind.weight_arrays()
        return np.minimum(np.einsum("ij,...ij->...", A1, H), np.einsum("ij,...ij->...", A2, H))
    e = np.linalg.eigvalsh(0.5 * (H + np.swapaxes(H, -1, -2)))
    hi, lo = (ell.Lam, ell.lam) if kind.tag == "pucci_plus" else (ell.lam, ell.Lam)
    return np.sum(np.where(e > 0, hi * e, lo * e), axis=-1)
