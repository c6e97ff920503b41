"""Compiled Jacobi sweeps.

Each call reads ``u`` (and ``prev`` for the momentum term) and writes ``out``;
the return value is the max projected residual of ``u`` before the update.
Operator codes: 0 trace, 1 Pucci+, 2 Pucci-, 3 min of two traces.
Gradient moduli are the upwind ones of ``solver._moduli``.

The local update solves the node equation with the absorption term kept
exact and the diffusion and Hamiltonian parts frozen at their diagonal
linearization, so the non-Lipschitz ``u^mu`` near zero cannot make a node
oscillate between 0 and a tiny positive value.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _pow(m, e):
    if e == 0.0:
        return 1.0
    if m == 0.0:
        return 0.0 if e > 0 else np.inf
    if e == 1.0:
        return m
    if e == 0.5:
        return math.sqrt(m)
    if e == 2.0:
        return m * m
    if e == -0.5:
        return 1.0 / math.sqrt(m)
    return m ** e


@njit(cache=True)
def _pucci(e1, e2, hi, lo):
    v = 0.0
    v += hi * e1 if e1 > 0 else lo * e1
    v += hi * e2 if e2 > 0 else lo * e2
    return v


@njit(cache=True)
def _moduli(up2, dn2, up1, dn1, F, aa, p, q, eps2):
    """Upwind moduli and their slopes in the centre value.

    ``up2``/``dn2`` are squared one-sided moduli, ``up1``/``dn1`` the plain sums
    of the active differences over h^2, so that |dm/dc| = sum / m.  Returns the
    regularized diffusion modulus, its slope, the plain Hamiltonian modulus and
    the slope of its q-th power taken at the regularized value.
    """
    rising = F >= 0.0 if p >= 0.0 else F < 0.0
    mF = math.sqrt((up2 if rising else dn2) + eps2)
    sF = (up1 if rising else dn1) / mF
    h2 = up2 if aa >= 0.0 else dn2
    mH = math.sqrt(h2)
    dH = 0.0
    h1 = up1 if aa >= 0.0 else dn1
    if q != 0.0 and h1 > 0.0:
        dH = q * _pow(math.sqrt(h2 + eps2), q - 2.0) * h1
    return mF, sF, mH, dH


@njit(cache=True)
def _sides(a, b, c):
    """Rise and drop of the larger one-sided difference along one axis."""
    dp = a - c
    dm = b - c
    hi = dp if dp > dm else dm
    lo = dp if dp < dm else dm
    rise = hi if hi > 0.0 else 0.0
    drop = -lo if lo < 0.0 else 0.0
    return rise, drop


@njit(cache=True)
def local_root(c, r0, D, ll, mu):
    """Root v of ``r0 - D (v - c) - ll v_+^mu = 0``, or a non-positive value
    when the root would be negative.

    Newton from an upper bound on a concave decreasing function converges
    monotonically.  For mu < 1 the unknown is ``w = v^mu``, for mu >= 1 it is
    v itself.
    """
    b = D * c + r0
    if mu == 0.0:
        return (b - ll) / D
    if b <= 0.0 or ll == 0.0:
        return b / D
    if mu < 1.0:
        k = 1.0 / mu
        w = min(_pow(b / D, mu), b / ll)
        for _ in range(60):
            f = b - D * _pow(w, k) - ll * w
            if f >= 0.0:
                break
            dw = f / (D * k * _pow(w, k - 1.0) + ll)
            w += dw
            if -dw <= 1e-15 * w:
                break
        return _pow(w, k)
    v = min(b / D, _pow(b / ll, 1.0 / mu))
    for _ in range(60):
        f = b - D * v - ll * _pow(v, mu)
        if f >= 0.0:
            break
        dv = f / (D + ll * mu * _pow(v, mu - 1.0))
        v += dv
        if -dv <= 1e-15 * v:
            break
    return v


@njit(cache=True)
def sweep2d(u, prev, out, unknown, a, lam0, p, q, mu, lam, Lam, op, W, h, eps, step, mom):
    nx, ny = u.shape
    invh2 = 1.0 / (h * h)
    inv4h2 = 0.25 * invh2
    diag = 2.0 * Lam * invh2
    res = 0.0
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            c = u[i, j]
            if not unknown[i - 1, j - 1]:
                out[i, j] = c
                continue
            h11 = (u[i + 1, j] - 2.0 * c + u[i - 1, j]) * invh2
            h22 = (u[i, j + 1] - 2.0 * c + u[i, j - 1]) * invh2
            h12 = (u[i + 1, j + 1] - u[i + 1, j - 1] - u[i - 1, j + 1] + u[i - 1, j - 1]) * inv4h2
            if op == 0:
                F = h11 + h22
            elif op == 1 or op == 2:
                mean = 0.5 * (h11 + h22)
                rad = math.sqrt((0.5 * (h11 - h22)) ** 2 + h12 * h12)
                if op == 1:
                    F = _pucci(mean + rad, mean - rad, Lam, lam)
                else:
                    F = _pucci(mean + rad, mean - rad, lam, Lam)
            else:
                f1 = W[0, 0, 0] * h11 + 2.0 * W[0, 0, 1] * h12 + W[0, 1, 1] * h22
                f2 = W[1, 0, 0] * h11 + 2.0 * W[1, 0, 1] * h12 + W[1, 1, 1] * h22
                F = min(f1, f2)
            ux, dx = _sides(u[i + 1, j], u[i - 1, j], c)
            uy, dy = _sides(u[i, j + 1], u[i, j - 1], c)
            aa = a[i - 1, j - 1]
            ll = lam0[i - 1, j - 1]
            m, sF, mH, dH = _moduli((ux * ux + uy * uy) * invh2, (dx * dx + dy * dy) * invh2,
                                    (ux + uy) * invh2, (dx + dy) * invh2, F, aa, p, q, eps * eps)
            mp = _pow(m, p)
            r0 = mp * F + aa * _pow(mH, q)
            R = r0 - ll * _pow(c if c > 0.0 else 0.0, mu)
            if not math.isfinite(R):
                return np.nan
            if c > 0.0 or R > 0.0:
                if abs(R) > res:
                    res = abs(R)
            D = mp * diag + abs(p) * _pow(m, p - 1.0) * abs(F) * sF + abs(aa) * dH
            if D < 1e-300:
                D = 1e-300
            v = c + step * (local_root(c, r0, D, ll, mu) - c) + mom * (c - prev[i, j])
            out[i, j] = v if v > 0.0 else 0.0
    return res


@njit(cache=True)
def sweep1d(u, prev, out, unknown, a, lam0, p, q, mu, lam, Lam, op, W, h, eps, step, mom):
    n = u.shape[0]
    invh2 = 1.0 / (h * h)
    diag = Lam * invh2
    res = 0.0
    for i in range(1, n - 1):
        c = u[i]
        if not unknown[i - 1]:
            out[i] = c
            continue
        h11 = (u[i + 1] - 2.0 * c + u[i - 1]) * invh2
        if op == 0:
            F = h11
        elif op == 1:
            F = Lam * h11 if h11 > 0 else lam * h11
        elif op == 2:
            F = lam * h11 if h11 > 0 else Lam * h11
        else:
            F = min(W[0, 0, 0] * h11, W[1, 0, 0] * h11)
        ux, dx = _sides(u[i + 1], u[i - 1], c)
        aa = a[i - 1]
        ll = lam0[i - 1]
        m, sF, mH, dH = _moduli(ux * ux * invh2, dx * dx * invh2, ux * invh2, dx * invh2,
                                F, aa, p, q, eps * eps)
        mp = _pow(m, p)
        r0 = mp * F + aa * _pow(mH, q)
        R = r0 - ll * _pow(c if c > 0.0 else 0.0, mu)
        if not math.isfinite(R):
            return np.nan
        if c > 0.0 or R > 0.0:
            if abs(R) > res:
                res = abs(R)
        D = mp * diag + abs(p) * _pow(m, p - 1.0) * abs(F) * sF + abs(aa) * dH
        if D < 1e-300:
            D = 1e-300
        v = c + step * (local_root(c, r0, D, ll, mu) - c) + mom * (c - prev[i])
        out[i] = v if v > 0.0 else 0.0
    return res
