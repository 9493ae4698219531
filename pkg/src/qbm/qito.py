"""Change-of-variable operators for the q-deformed calculus.

For f(x, s) = sum_m b_m(s) h_m(x; s) / [m]! three operators are in play:

  * nabla, the q-gradient: a pure shift of the q-Hermite coefficients,
    nabla f = sum_m b_{m+1}(s) h_m(x; s) / [m]!;
  * the one-step generator A, acting on basis slices as
    A(h_m(.; s)) = [m] h_{m-1}(.; q s);
  * delta, the second-order part, assembled on monomials via
    delta(x**n) = sum_{k<n} x**k A(x**(n-1-k)).

The basis is space-time harmonic: (D_t + delta) h_m = 0, with D_t the
q-derivative in the time slot.  Consequently, on a geometric grid each step
satisfies the exact algebraic identity

  f(x_k, t_k) - f(x_{k+1}, t_{k+1})
      = [gradient step k] + (1 - q) t_k (D_t f + delta f)(x_{k+1}, t_k)

and the K-step change-of-variable sum telescopes, leaving a residual of
exactly |f(B_K, t_K) - f(0, 0)|, which the attached tail bound dominates.

nabla and delta also have integral forms: first and second divided
differences of f integrated against explicit transition kernels.  The
numeric versions here evaluate those by adaptive quadrature and serve as the
independent cross-check of the exact coefficient-space versions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .measures import (
    QUAD_REL_TOL,
    DensitySpec,
    QuadratureError,
    QuadratureRule,
    _transition_theta_density,
    integrate,
    support_halfwidth,
    transition_spec,
)
from .process import GeometricGrid, GeometricPath
from .qcore import Poly, QContext, Scalar, q_factorial
from .qhermite import (
    HermiteCoefficients,
    QPolynomial,
    from_hermite_basis,
    growth_constant,
    qhermite,
    to_hermite_basis,
)
from .stochint import PolynomialIntegrand, integrate_def

__all__ = [
    "GridTooShallowError",
    "ItoDecomposition",
    "KernelSpec",
    "a_operator",
    "delta_exact",
    "delta_numeric",
    "dq_time",
    "ito_decompose",
    "ito_residual",
    "ito_tail_bound",
    "nabla_exact",
    "nabla_numeric",
]


class GridTooShallowError(ValueError):
    """Raised when the truncation tail bound exceeds a requested tolerance."""


def _inv(c: Scalar) -> Scalar:
    return 1.0 / c if isinstance(c, float) else Fraction(1, 1) / c


def nabla_exact(f: QPolynomial, ctx: QContext) -> QPolynomial:
    """q-gradient of f: shift the q-Hermite coefficients down by one."""
    hc = to_hermite_basis(f, ctx)
    if len(hc.b) <= 1:
        return QPolynomial.zero()
    return from_hermite_basis(HermiteCoefficients(hc.b[1:]), ctx)


def a_operator(f: QPolynomial, ctx: QContext) -> QPolynomial:
    """Generator slice: sum_m b_m(t) h_{m-1}(x; q t) / [m-1]!."""
    hc = to_hermite_basis(f, ctx)
    out = QPolynomial.zero()
    for m in range(1, len(hc.b)):
        bm = hc.b[m]
        if bm.is_zero():
            continue
        base = qhermite(m - 1, ctx).subs_t_scale(ctx.q)
        out = out + base * (bm * _inv(q_factorial(m - 1, ctx)))
    return out


_DELTA_CACHE: dict[tuple, QPolynomial] = {}


def _delta_monomial(n: int, ctx: QContext) -> QPolynomial:
    key = (ctx.q, ctx.mode, n)
    if key not in _DELTA_CACHE:
        total = QPolynomial.zero()
        for k in range(n):
            part = a_operator(QPolynomial.x_power(n - 1 - k), ctx)
            total = total + QPolynomial.x_power(k) * part
        _DELTA_CACHE[key] = total
    return _DELTA_CACHE[key]


def delta_exact(f: QPolynomial, ctx: QContext) -> QPolynomial:
    """Second-order operator, extended x-degree by x-degree from monomials."""
    out = QPolynomial.zero()
    for n, a_n in enumerate(f.coeffs):
        if a_n.is_zero():
            continue
        out = out + _delta_monomial(n, ctx) * a_n
    return out


def dq_time(f: QPolynomial, ctx: QContext) -> QPolynomial:
    """q-derivative of f in the time slot."""
    return f.dq_time(ctx)


@dataclass(frozen=True)
class KernelSpec:
    """Transition kernels behind the integral operator forms at state (x, s).

    nu feeds the q-gradient: the first divided difference f[x, .] integrated
    against a transition started at q x between times q**2 s and s.  mu_outer
    is the outer leg of the second-order operator; its inner leg starts at
    q y for each outer state y, between times q**2 s and s, and is built on
    the fly inside delta_numeric.
    """

    x: float
    s: float
    nu: DensitySpec
    mu_outer: DensitySpec

    @classmethod
    def at_state(cls, ctx: QContext, x: float, s: float) -> "KernelSpec":
        q = ctx.qf
        return cls(
            x=float(x),
            s=float(s),
            nu=transition_spec(ctx, s=q * q * s, t=s, x=q * x),
            mu_outer=transition_spec(ctx, s=q * s, t=s, x=x),
        )


def _divdiff1_poly(a: list[float], x: float, y):
    """First divided difference of sum a_n x**n via the symmetric-sum recursion."""
    y = np.asarray(y, dtype=float)
    total = np.zeros_like(y)
    g = np.ones_like(y)
    ypow = np.ones_like(y)
    for n in range(1, len(a)):
        if a[n] != 0.0:
            total = total + a[n] * g
        ypow = ypow * y
        g = x * g + ypow
    return total


def _divdiff2_poly(a: list[float], x: float, y, z):
    """Second divided difference of sum a_n x**n, exact and singularity-free."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    shape = np.broadcast_shapes(y.shape, z.shape)
    total = np.zeros(shape)
    h = np.ones(shape)
    g = np.ones(shape)
    zpow = np.ones(shape)
    for n in range(2, len(a)):
        if a[n] != 0.0:
            total = total + a[n] * h
        zpow = zpow * z
        g = y * g + zpow
        h = x * h + g
    return total


def _divdiff1_callable(f, x: float, s: float, ctx: QContext):
    scale = support_halfwidth(s, ctx.qf)
    thresh = 1e-8 * scale
    step = 1e-5 * scale
    fx = float(f(x))
    centered = (float(f(x + step)) - float(f(x - step))) / (2.0 * step)

    def g(y):
        y = np.asarray(y, dtype=float)
        fy = np.asarray([float(f(v)) for v in y.ravel()]).reshape(y.shape)
        d = y - x
        safe = np.abs(d) >= thresh
        out = np.full(y.shape, centered)
        out[safe] = (fy[safe] - fx) / d[safe]
        return out

    return g


def _divdiff2_callable(f, x: float, s: float, ctx: QContext):
    scale = support_halfwidth(s, ctx.qf)
    thresh = 1e-5 * scale
    step = 1e-4 * scale

    def second(p: float) -> float:
        return (float(f(p + step)) - 2.0 * float(f(p)) + float(f(p - step))) / (
            2.0 * step * step
        )

    def merged(m: float, p: float) -> float:
        # f[m, m, p] with a centered derivative standing in for f'(m)
        dm = (float(f(m + step)) - float(f(m - step))) / (2.0 * step)
        return (float(f(p)) - float(f(m)) - (p - m) * dm) / ((p - m) ** 2)

    def k2(y, z):
        y, z = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(z, dtype=float))
        fv = np.asarray([float(f(v)) for v in y.ravel()]).reshape(y.shape)
        fw = np.asarray([float(f(v)) for v in z.ravel()]).reshape(z.shape)
        fx = float(f(x))
        dxy = x - y
        dyz = y - z
        dzx = z - x
        safe = (np.abs(dxy) >= thresh) & (np.abs(dyz) >= thresh) & (np.abs(dzx) >= thresh)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = fx / (dxy * (-dzx)) + fv / ((-dxy) * dyz) + fw / (dzx * (-dyz))
        if np.all(safe):
            return out
        out = np.array(out, copy=True)
        for idx in zip(*np.nonzero(~safe)):
            yi = float(y[idx])
            zi = float(z[idx])
            # merge the closest pair; if the third point is also close, all
            # three have effectively coincided and f''/2 takes over
            d, m, p = min(
                (abs(x - yi), (x + yi) / 2.0, zi),
                (abs(yi - zi), (yi + zi) / 2.0, x),
                (abs(zi - x), (zi + x) / 2.0, yi),
            )
            out[idx] = second((x + yi + zi) / 3.0) if abs(p - m) < thresh else merged(m, p)
        return out

    return k2


def nabla_numeric(f, x: float, s: float, ctx: QContext, rel_tol: float = QUAD_REL_TOL) -> float:
    """q-gradient via its kernel form: int f[x, y] nu(dy).

    f is a QPolynomial (exact divided differences) or a plain callable of the
    space variable, for which guarded finite differences stand in near the
    diagonal.
    """
    spec = KernelSpec.at_state(ctx, x, s).nu
    if isinstance(f, QPolynomial):
        a = [float(c(s)) for c in f.coeffs]
        g = lambda y: _divdiff1_poly(a, float(x), y)
    else:
        g = _divdiff1_callable(f, float(x), s, ctx)
    return integrate(g, spec, rel_tol=rel_tol)


def delta_numeric(
    f,
    x: float,
    s: float,
    ctx: QContext,
    rel_tol: float = QUAD_REL_TOL,
    max_order: int = 4097,
) -> float:
    """Second-order operator via its nested kernel form.

    Outer leg: transition from x between times q s and s; inner leg from q y
    between q**2 s and s, integrated over the second divided difference
    f[x, y, z].  Both legs share one Gauss-Legendre rule whose order doubles
    until two successive estimates agree to rel_tol.  For a non-polynomial f
    the divided differences fall back to finite differences near coincident
    nodes, which floors the attainable self-consistency near 1e-7.
    """
    q = ctx.qf
    spec = KernelSpec.at_state(ctx, x, s)
    n_fac = ctx.n_product_factors()
    w = support_halfwidth(s, q)
    if isinstance(f, QPolynomial):
        a = [float(c(s)) for c in f.coeffs]
        kernel2 = lambda y, z: _divdiff2_poly(a, float(x), y, z)
    else:
        kernel2 = _divdiff2_callable(f, float(x), s, ctx)
        rel_tol = max(rel_tol, 1e-7)
    order = 65
    prev = None
    while order <= max_order:
        rule = QuadratureRule.gauss_legendre(order)
        y = w * np.sin(rule.thetas)
        rho_out = _transition_theta_density(rule.thetas, spec.mu_outer.x, q * s, s, q, n_fac)
        rho_in = _transition_theta_density(
            rule.thetas[None, :], (q * y)[:, None], q * q * s, s, q, n_fac
        )
        vals = kernel2(y[:, None], y[None, :])
        inner = (rho_in * vals) @ rule.weights
        est = float(np.sum(rule.weights * rho_out * inner))
        if prev is not None and abs(est - prev) < rel_tol * max(1.0, abs(est)):
            return est
        prev = est
        order = 2 * order - 1
    raise QuadratureError(f"nested quadrature did not converge by order {max_order}")


@dataclass(frozen=True)
class ItoDecomposition:
    """Terms of the discrete change-of-variable identity along one path.

    lhs is f(B_0, t) - f(0, 0); the three terms are the gradient integral,
    the Jackson sum of the time q-derivative, and the Jackson sum of the
    second-order part, all truncated at depth K.  In exact arithmetic
    residual equals |f(B_K, t_K) - f(0, 0)|, and tail_bound dominates it.
    """

    lhs: Scalar
    gradient_term: Scalar
    drift_term: Scalar
    second_order_term: Scalar
    residual: float
    tail_bound: float
    K: int

    def to_json_dict(self) -> dict:
        return {
            "lhs": float(self.lhs),
            "gradient_term": float(self.gradient_term),
            "drift_term": float(self.drift_term),
            "second_order_term": float(self.second_order_term),
            "residual": self.residual,
            "tail_bound": self.tail_bound,
            "K": self.K,
        }


def ito_tail_bound(f: QPolynomial, grid: GeometricGrid, ctx: QContext) -> float:
    """Bound for |f(B_K, t_K) - f(0, 0)| on the support.

    Uses |h_m(x; u)| <= C_m u**(m/2) for m >= 1 plus the coefficient
    variation of b_0 over [0, t_K].
    """
    hc = to_hermite_basis(f, ctx)
    t_deep = float(grid.times[grid.K])
    total = float(hc.b[0].variation_bound(t_deep)) if hc.b else 0.0
    for m in range(1, len(hc.b)):
        bm = hc.b[m]
        if bm.is_zero():
            continue
        total += (
            float(bm.abs_coeff_bound(t_deep))
            * growth_constant(m, ctx)
            * t_deep ** (m / 2.0)
            / float(q_factorial(m, ctx))
        )
    return total


def ito_decompose(f: QPolynomial, path: GeometricPath, ctx: QContext) -> ItoDecomposition:
    """Evaluate the K-step change-of-variable identity along a path."""
    grid = path.grid
    hc = to_hermite_basis(f, ctx)
    integrand = PolynomialIntegrand(hc.b[1:])
    grad = integrate_def(integrand, path, ctx).value
    df = f.dq_time(ctx)
    d2 = delta_exact(f, ctx)
    drift = 0 * ctx.q
    second = 0 * ctx.q
    for k in range(grid.K):
        tk = grid.times[k]
        xk1 = path.values[k + 1]
        drift = drift + tk * df(xk1, tk)
        second = second + tk * d2(xk1, tk)
    one_minus_q = 1 - ctx.q
    drift = one_minus_q * drift
    second = one_minus_q * second
    zero = 0 * ctx.q
    lhs = f(path.values[0], grid.times[0]) - f(zero, zero)
    residual = abs(float(lhs - (grad + drift + second)))
    return ItoDecomposition(
        lhs=lhs,
        gradient_term=grad,
        drift_term=drift,
        second_order_term=second,
        residual=residual,
        tail_bound=ito_tail_bound(f, grid, ctx),
        K=grid.K,
    )


def ito_residual(
    f: QPolynomial, path: GeometricPath, ctx: QContext, tol: float | None = None
) -> float:
    """Residual of the truncated change-of-variable identity.

    With tol given, raises GridTooShallowError when the analytic tail bound
    at the path's depth exceeds it, before any arithmetic is attempted.
    """
    if tol is not None:
        bound = ito_tail_bound(f, path.grid, ctx)
        if bound > tol:
            raise GridTooShallowError(
                f"grid too shallow: tail bound {bound:.3e} exceeds tolerance {tol:.3e}"
            )
    return ito_decompose(f, path, ctx).residual
