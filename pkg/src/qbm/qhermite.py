"""Continuous q-Hermite martingale polynomials.

The family h_n(x; t) is monic in x and satisfies the three-term recurrence

    x h_n(x; t) = h_{n+1}(x; t) + t [n]_q h_{n-1}(x; t),    h_0 = 1, h_1 = x.

Coefficients are polynomials in t, kept exact in rational mode.  Any
polynomial f(x, t) can be written in the normalised basis

    f(x, t) = sum_m b_m(t) h_m(x; t) / [m]_q!

and this module converts between the monomial and q-Hermite representations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from .qcore import Poly, QContext, Scalar, q_binomial, q_factorial, q_int

__all__ = [
    "QPolynomial",
    "HermiteCoefficients",
    "qhermite",
    "to_hermite_basis",
    "from_hermite_basis",
    "hermite_eval",
    "scaling_check",
    "growth_constant",
    "growth_bound",
]


class QPolynomial:
    """Polynomial in x whose coefficients are polynomials in t.

    Stored in the monomial basis: ``coeffs[i]`` is the t-polynomial multiplying
    x**i.  Immutable, with exact equality when built over Fractions.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Union[Poly, Scalar]] = ()):
        cs = [c if isinstance(c, Poly) else Poly.const(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("QPolynomial is immutable")

    @classmethod
    def zero(cls) -> "QPolynomial":
        return cls(())

    @classmethod
    def x_power(cls, n: int, c: Scalar = 1) -> "QPolynomial":
        return cls((Poly(),) * n + (Poly.const(c),))

    @classmethod
    def from_xt_terms(cls, terms: dict[tuple[int, int], Scalar]) -> "QPolynomial":
        """Build from a {(x_power, t_power): coefficient} mapping."""
        if not terms:
            return cls.zero()
        deg = max(i for i, _ in terms)
        cols: list[list[Scalar]] = [[] for _ in range(deg + 1)]
        for (i, j), c in terms.items():
            col = cols[i]
            while len(col) <= j:
                col.append(0)
            col[j] += c
        return cls(tuple(Poly(col) for col in cols))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, i: int) -> Poly:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Poly()

    def __eq__(self, other) -> bool:
        return isinstance(other, QPolynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "QPolynomial") -> "QPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return QPolynomial(tuple(self.coeff(i) + other.coeff(i) for i in range(n)))

    def __sub__(self, other: "QPolynomial") -> "QPolynomial":
        return self + (-other)

    def __neg__(self) -> "QPolynomial":
        return QPolynomial(tuple(-c for c in self.coeffs))

    def __mul__(self, other) -> "QPolynomial":
        if isinstance(other, QPolynomial):
            if self.is_zero() or other.is_zero():
                return QPolynomial.zero()
            out = [Poly() for _ in range(self.degree + other.degree + 1)]
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] = out[i + j] + a * b
            return QPolynomial(out)
        if isinstance(other, Poly):
            return QPolynomial(tuple(c * other for c in self.coeffs))
        return QPolynomial(tuple(c * other for c in self.coeffs))

    __rmul__ = __mul__

    def mul_x(self) -> "QPolynomial":
        return QPolynomial((Poly(),) + self.coeffs)

    def mul_t(self) -> "QPolynomial":
        return QPolynomial(tuple(Poly((0,) + c.coeffs) for c in self.coeffs))

    def subs_t_scale(self, c: Scalar) -> "QPolynomial":
        """f(x, c * t) as a polynomial in (x, t)."""
        return QPolynomial(tuple(p.scale_arg(c) for p in self.coeffs))

    def dq_time(self, ctx: QContext) -> "QPolynomial":
        """q-derivative in the time variable, acting coefficient-wise."""
        return QPolynomial(tuple(p.q_derivative(ctx) for p in self.coeffs))

    def __call__(self, x: Scalar, t: Scalar) -> Scalar:
        out = 0 * x
        for c in reversed(self.coeffs):
            out = out * x + c(t)
        return out

    def to_json_dict(self) -> dict:
        return {
            "basis": "monomial",
            "degree": self.degree,
            "coeffs": [[_scalar_to_json(c) for c in p.coeffs] for p in self.coeffs],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "QPolynomial":
        if d.get("basis") != "monomial":
            raise ValueError(f"expected monomial basis, got {d.get('basis')!r}")
        return cls(tuple(Poly(tuple(_scalar_from_json(c) for c in row)) for row in d["coeffs"]))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "QPolynomial":
        return cls.from_json_dict(json.loads(s))

    def __repr__(self) -> str:
        return f"QPolynomial({list(self.coeffs)!r})"


def _scalar_to_json(c: Scalar):
    if isinstance(c, Fraction):
        return f"{c.numerator}/{c.denominator}"
    if isinstance(c, int):
        return f"{c}/1"
    return float(c)


def _scalar_from_json(v) -> Scalar:
    if isinstance(v, str):
        num, den = v.split("/")
        return Fraction(int(num), int(den))
    return float(v)


@dataclass(frozen=True)
class HermiteCoefficients:
    """Coefficients b_m(t) of f = sum_m b_m(t) h_m(x; t) / [m]_q!."""

    b: tuple[Poly, ...]

    @property
    def degree(self) -> int:
        return len(self.b) - 1

    def coeff(self, m: int) -> Poly:
        return self.b[m] if 0 <= m < len(self.b) else Poly()

    def to_json_dict(self) -> dict:
        return {
            "basis": "q-hermite",
            "degree": self.degree,
            "coeffs": [[_scalar_to_json(c) for c in p.coeffs] for p in self.b],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "HermiteCoefficients":
        if d.get("basis") != "q-hermite":
            raise ValueError(f"expected q-hermite basis, got {d.get('basis')!r}")
        return cls(tuple(Poly(tuple(_scalar_from_json(c) for c in row)) for row in d["coeffs"]))


_HERMITE_CACHE: dict[tuple, list[QPolynomial]] = {}


def _hermite_list(n: int, ctx: QContext) -> list[QPolynomial]:
    key = (ctx.q, ctx.mode)
    seq = _HERMITE_CACHE.setdefault(key, [QPolynomial.x_power(0), QPolynomial.x_power(1)])
    while len(seq) <= n:
        m = len(seq) - 1
        nxt = seq[m].mul_x() - q_int(m, ctx) * seq[m - 1].mul_t()
        seq.append(nxt)
    return seq


def qhermite(n: int, ctx: QContext) -> QPolynomial:
    """h_n(x; t) from the three-term recurrence, exact in rational mode."""
    if n < 0:
        raise ValueError("qhermite needs n >= 0")
    return _hermite_list(n, ctx)[n]


def to_hermite_basis(f: QPolynomial, ctx: QContext) -> HermiteCoefficients:
    """Expand f(x, t) over the h_m(x; t) basis by back-substitution.

    The h_m are monic in x, so the expansion is triangular: strip the leading
    x-coefficient, subtract that multiple of h_m, recurse.  Exact over
    Fractions.
    """
    hs = _hermite_list(max(f.degree, 0), ctx)
    work = list(f.coeffs)
    out = [Poly() for _ in range(len(work))]
    for m in range(len(work) - 1, -1, -1):
        lead = work[m]
        if not lead.is_zero():
            out[m] = lead * q_factorial(m, ctx)
            for i, hc in enumerate(hs[m].coeffs):
                work[i] = work[i] - lead * hc
    return HermiteCoefficients(tuple(out))


def from_hermite_basis(hc: HermiteCoefficients, ctx: QContext) -> QPolynomial:
    """Rebuild the monomial form of sum_m b_m(t) h_m(x; t) / [m]_q!."""
    out = QPolynomial.zero()
    for m, bm in enumerate(hc.b):
        if bm.is_zero():
            continue
        fact = q_factorial(m, ctx)
        if isinstance(fact, Fraction):
            scaled = bm * (1 / fact)
        else:
            scaled = bm * (1.0 / fact)
        out = out + qhermite(m, ctx) * scaled
    return out


def hermite_eval(n: int, x: Scalar, t: Scalar, ctx: QContext) -> Scalar:
    """h_n(x; t) by the value recurrence; works on scalars and numpy arrays."""
    if n < 0:
        raise ValueError("hermite_eval needs n >= 0")
    prev = x * 0 + 1
    if n == 0:
        return prev
    cur = x
    for m in range(1, n):
        prev, cur = cur, x * cur - q_int(m, ctx) * t * prev
    return cur


def hermite_eval_sequence(n_max: int, x, t, ctx: QContext) -> list:
    """[h_0(x; t), ..., h_{n_max}(x; t)] sharing one pass of the recurrence."""
    out = [x * 0 + 1]
    if n_max == 0:
        return out
    out.append(x * 0 + x)
    for m in range(1, n_max):
        out.append(x * out[m] - q_int(m, ctx) * t * out[m - 1])
    return out


def growth_constant(n: int, ctx: QContext) -> float:
    """Sharp constant C_n = (1-q)**(-n/2) * sum_k qbinom(n, k)."""
    qf = ctx.qf
    total = sum(float(q_binomial(n, k, ctx)) for k in range(n + 1))
    return (1.0 - qf) ** (-n / 2.0) * total

def growth_bound(n: int, t: float, ctx: QContext) -> float:
    """Bound C_n t**(n/2) for |h_n(x; t)| over the support |x| <= 2 sqrt(t/(1-q))."""
    if t < 0:
        raise ValueError("growth_bound needs t >= 0")
    return growth_constant(n, ctx) * float(t) ** (n / 2.0)


def scaling_check(n: int, x: float, t: float, ctx: QContext, tol: float = 1e-9) -> float:
    """|h_n(x; t) - t**(n/2) h_n(x / sqrt(t); 1)|, which should vanish.

    Returns the discrepancy; raises if it exceeds tol (relative to the bound
    scale) so misuse fails loudly.
    """
    if t <= 0:
        raise ValueError("scaling_check needs t > 0")
    lhs = float(hermite_eval(n, float(x), float(t), ctx))
    rhs = float(t) ** (n / 2.0) * float(hermite_eval(n, float(x) / math.sqrt(t), 1.0, ctx))
    err = abs(lhs - rhs)
    scale = max(1.0, growth_bound(n, t, ctx))
    if err > tol * scale:
        raise AssertionError(f"scaling identity violated: {err} > {tol} * {scale}")
    return err
