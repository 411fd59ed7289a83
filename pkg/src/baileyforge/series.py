"""Truncated bivariate Laurent series with exact rational coefficients.

A series lives in variables q and z. q-exponents are integers in scaled
units: under a context with scale d, the stored exponent e means q^(e/d).
z-exponents are plain integers. Coefficients are fractions.Fraction.
Series are compared up to the context order: all terms with scaled
q-exponent <= order are retained, everything above is dropped.

Resource guard: a retained term with z-exponent e must satisfy
d*binom(|e|,2) <= order. Every series built from the supported identity
family stays inside this region; a violation aborts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import (
    ContextMismatchError,
    DivergentProductError,
    NonUnitLeadingError,
    ZDegreeError,
)

Rational = Fraction
_ZERO = Fraction(0)

__all__ = [
    "Rational",
    "Monomial",
    "EvalContext",
    "QSeries",
    "zero",
    "one",
    "monomial",
    "poch_finite",
    "poch_infinite",
    "qbinomial",
    "dilate",
    "equal_up_to",
    "first_mismatch",
    "render",
]


@dataclass(frozen=True)
class Monomial:
    """Interpretation of z as sign * q^(qexp), qexp in scaled units."""

    sign: int
    qexp: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("monomial sign must be +1 or -1")


@dataclass(frozen=True)
class EvalContext:
    """Evaluation context: scale d, truncation order, z interpretation."""

    scale: int = 1
    order: int = 50
    z_interp: Monomial | None = None

    def __post_init__(self):
        if self.scale < 1:
            raise ValueError("scale must be >= 1")
        if self.order < 0:
            raise ValueError("order must be >= 0")

    @property
    def is_formal(self) -> bool:
        return self.z_interp is None

    @property
    def z_cap(self) -> int:
        return _z_cap(self.scale, self.order)


@lru_cache(maxsize=None)
def _z_cap(scale: int, order: int) -> int:
    # Largest j with scale*binom(j,2) <= order; |z-exponent| may not exceed it.
    j = 1
    while scale * (j + 1) * j // 2 <= order:
        j += 1
    return j


def _check_keys(ctx: EvalContext, data: dict) -> None:
    cap = ctx.z_cap
    for qe, zd in data.items():
        for ze in zd:
            if abs(ze) > cap:
                raise ZDegreeError(
                    f"z-exponent {ze} at q-exponent {qe} exceeds guard cap "
                    f"{cap} (scale {ctx.scale}, order {ctx.order})"
                )


class QSeries:
    """Immutable truncated Laurent series over a fixed context."""

    __slots__ = ("ctx", "_c")

    def __init__(self, ctx: EvalContext, data: dict | None = None, *, _trusted=False):
        self.ctx = ctx
        if data is None:
            data = {}
        if not _trusted:
            clean: dict[int, dict[int, Fraction]] = {}
            for qe, zd in data.items():
                if qe > ctx.order:
                    continue
                keep = {ze: Fraction(c) for ze, c in zd.items() if c}
                if keep:
                    clean[qe] = keep
            data = clean
        if not ctx.is_formal:
            for zd in data.values():
                if any(ze != 0 for ze in zd):
                    raise ZDegreeError("z-exponent survived monomial folding")
        _check_keys(ctx, data)
        self._c = data

    # -- inspection ---------------------------------------------------------

    def terms(self):
        """Yield (qexp, zexp, coeff) in ascending (qexp, zexp) order."""
        for qe in sorted(self._c):
            zd = self._c[qe]
            for ze in sorted(zd):
                yield qe, ze, zd[ze]

    def coefficient(self, qexp: int, zexp: int = 0) -> Fraction:
        return self._c.get(qexp, {}).get(zexp, _ZERO)

    def min_exponent(self):
        """Smallest scaled q-exponent with a nonzero term, or None."""
        return min(self._c) if self._c else None

    def is_zero(self) -> bool:
        return not self._c

    def __eq__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        return self.ctx == other.ctx and self._c == other._c

    __hash__ = None

    def __repr__(self):
        n = sum(len(zd) for zd in self._c.values())
        return f"<QSeries scale={self.ctx.scale} order={self.ctx.order} terms={n}>"

    # -- ring operations ----------------------------------------------------

    def _comp(self, other) -> "QSeries":
        if isinstance(other, QSeries):
            if other.ctx != self.ctx:
                raise ContextMismatchError(
                    f"contexts differ: {self.ctx} vs {other.ctx}"
                )
            return other
        if isinstance(other, (int, Fraction)):
            return monomial(self.ctx, other)
        return NotImplemented

    def __add__(self, other):
        other = self._comp(other)
        if other is NotImplemented:
            return other
        out = {qe: dict(zd) for qe, zd in self._c.items()}
        _acc_into(out, other._c)
        return QSeries(self.ctx, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return QSeries(
            self.ctx,
            {qe: {ze: -c for ze, c in zd.items()} for qe, zd in self._c.items()},
            _trusted=True,
        )

    def __sub__(self, other):
        other = self._comp(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                return zero(self.ctx)
            return QSeries(
                self.ctx,
                {qe: {ze: v * c for ze, v in zd.items()} for qe, zd in self._c.items()},
                _trusted=True,
            )
        other = self._comp(other)
        if other is NotImplemented:
            return other
        return QSeries(
            self.ctx, _mul_raw(self._c, other._c, self.ctx.order), _trusted=False
        )

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("series power must be a nonnegative integer")
        out = one(self.ctx)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def invert(self) -> "QSeries":
        """Multiplicative inverse; needs a single-monomial lowest slice."""
        if not self._c:
            raise NonUnitLeadingError("cannot invert the zero series")
        m = min(self._c)
        lead = self._c[m]
        if len(lead) != 1:
            raise NonUnitLeadingError(
                f"lowest q-slice (exponent {m}) is not a single monomial in z"
            )
        (mz,) = lead
        mc = lead[mz]
        work = self.ctx.order + max(0, m)
        # u = self * lead^{-1} - 1 has strictly positive minimal q-exponent.
        shifted = {}
        for qe, zd in self._c.items():
            row = shifted.setdefault(qe - m, {})
            for ze, c in zd.items():
                if ze - mz == 0 and qe - m == 0:
                    continue
                row[ze - mz] = c / mc
        shifted = {qe: zd for qe, zd in shifted.items() if zd}
        out = {0: {0: Fraction(1)}}
        term = {0: {0: Fraction(1)}}
        for _ in range(work + 1):
            term = _mul_raw(term, shifted, work)
            if not term:
                break
            term = {qe: {ze: -c for ze, c in zd.items()} for qe, zd in term.items()}
            _acc_into(out, term)
        res = {}
        for qe, zd in out.items():
            row = {}
            for ze, c in zd.items():
                if c:
                    row[ze - mz] = c / mc
            if row and qe - m <= self.ctx.order:
                res[qe - m] = row
        return QSeries(self.ctx, res, _trusted=False)


def _acc_into(target: dict, src: dict) -> None:
    for qe, zd in src.items():
        row = target.get(qe)
        if row is None:
            target[qe] = dict(zd)
            continue
        for ze, c in zd.items():
            s = row.get(ze, _ZERO) + c
            if s:
                row[ze] = s
            elif ze in row:
                del row[ze]
        if not row:
            del target[qe]


def _mul_raw(a: dict, b: dict, order: int) -> dict:
    if len(a) > len(b):
        a, b = b, a
    bitems = sorted(b.items())
    out: dict[int, dict[int, Fraction]] = {}
    for qa, zda in a.items():
        lim = order - qa
        for qb, zdb in bitems:
            if qb > lim:
                break
            row = out.setdefault(qa + qb, {})
            for za, ca in zda.items():
                for zb, cb in zdb.items():
                    z = za + zb
                    s = row.get(z, _ZERO) + ca * cb
                    if s:
                        row[z] = s
                    elif z in row:
                        del row[z]
    return {qe: zd for qe, zd in out.items() if zd}


# -- builders ---------------------------------------------------------------


def zero(ctx: EvalContext) -> QSeries:
    return QSeries(ctx, {}, _trusted=True)


def one(ctx: EvalContext) -> QSeries:
    return monomial(ctx, 1)


def monomial(ctx: EvalContext, coeff, zexp: int = 0, qexp: int = 0) -> QSeries:
    """Build coeff * z^zexp * q^(qexp/scale), folding z under a monomial context."""
    c = Fraction(coeff)
    if not c:
        return zero(ctx)
    zi = ctx.z_interp
    if zi is not None and zexp:
        qexp += zexp * zi.qexp
        if zi.sign == -1 and zexp % 2:
            c = -c
        zexp = 0
    if qexp > ctx.order:
        return zero(ctx)
    return QSeries(ctx, {qexp: {zexp: c}})


def poch_finite(ctx: EvalContext, base, step: int, length: int) -> QSeries:
    """Finite product prod_{t<length} (1 - base*q^(t*step)), base = (coeff, zexp, qexp)."""
    if length < 0:
        raise ValueError("poch_finite length must be >= 0")
    if step < 1:
        raise ValueError("poch_finite step must be >= 1")
    return _poch_finite_cached(ctx, _basekey(base), step, length)


def _basekey(base):
    c, ze, qe = base
    return (Fraction(c), int(ze), int(qe))


@lru_cache(maxsize=None)
def _poch_finite_cached(ctx, base, step, length):
    c, ze, qe = base
    if length == 0:
        return one(ctx)
    prev = _poch_finite_cached(ctx, base, step, length - 1)
    factor = one(ctx) - monomial(ctx, c, ze, qe + (length - 1) * step)
    return prev * factor


def poch_infinite(ctx: EvalContext, base, step: int, *, strict: bool = True) -> QSeries:
    """Infinite product prod_{t>=0} (1 - base*q^(t*step)).

    Factors beyond the truncation order are dropped. A factor whose folded
    form is pure-q with nonpositive exponent is exact but signals a product
    outside the usual convergence region; strict mode rejects it unless the
    factor is identically zero (which collapses the product).
    """
    if step < 1:
        raise ValueError("poch_infinite step must be >= 1")
    return _poch_infinite_cached(ctx, _basekey(base), step, strict)


@lru_cache(maxsize=None)
def _poch_infinite_cached(ctx, base, step, strict):
    c, ze, qe = base
    zi = ctx.z_interp
    out = one(ctx)
    t = 0
    while True:
        fqe = qe + t * step
        fc, fze = c, ze
        if zi is not None and fze:
            # Folded form; the effective exponent still grows with t.
            fqe += fze * zi.qexp
            if zi.sign == -1 and fze % 2:
                fc = -fc
            fze = 0
        if fqe > ctx.order:
            break
        if fze == 0 and fqe <= 0:
            if fc == 1 and fqe == 0:
                # Factor (1 - q^0) vanishes identically, so does the product.
                return zero(ctx)
            if strict:
                raise DivergentProductError(
                    f"infinite product factor (1 - {fc}*q^{fqe}) has nonpositive order"
                )
        out = out * (one(ctx) - monomial(ctx, fc, fze, fqe))
        t += 1
    return out


def qbinomial(ctx: EvalContext, n: int, k: int) -> QSeries:
    """Gaussian binomial coefficient as a series (zero when out of range)."""
    if k < 0 or k > n:
        return zero(ctx)
    return _qbinomial_cached(ctx, n, k)


@lru_cache(maxsize=None)
def _qbinomial_cached(ctx, n, k):
    d = ctx.scale
    num = poch_finite(ctx, (1, 0, d), d, n)
    den = poch_finite(ctx, (1, 0, d), d, k) * poch_finite(ctx, (1, 0, d), d, n - k)
    return num * den.invert()


def dilate(s: QSeries, m: int) -> QSeries:
    """Multiply every q-exponent by m (substitute q^(1/d) -> q^(m/d))."""
    if m < 1:
        raise ValueError("dilation factor must be >= 1")
    out = {}
    for qe, zd in s._c.items():
        if qe * m <= s.ctx.order:
            out[qe * m] = dict(zd)
    return QSeries(s.ctx, out, _trusted=True)


# -- comparison and display -------------------------------------------------


def first_mismatch(a: QSeries, b: QSeries):
    """Lowest differing (qexp, zexp, coeff_a, coeff_b), or None if equal."""
    if a.ctx != b.ctx:
        raise ContextMismatchError(f"contexts differ: {a.ctx} vs {b.ctx}")
    for qe in sorted(set(a._c) | set(b._c)):
        za = a._c.get(qe, {})
        zb = b._c.get(qe, {})
        for ze in sorted(set(za) | set(zb)):
            ca = za.get(ze, _ZERO)
            cb = zb.get(ze, _ZERO)
            if ca != cb:
                return qe, ze, ca, cb
    return None


def equal_up_to(a: QSeries, b: QSeries) -> bool:
    return first_mismatch(a, b) is None


def _fmt_qexp(qe: int, scale: int) -> str:
    if qe % scale == 0:
        return str(qe // scale)
    f = Fraction(qe, scale)
    return f"{f.numerator}/{f.denominator}"


def render(s: QSeries, max_terms: int = 200) -> str:
    """Human-readable listing, one q-exponent per line."""
    lines = []
    count = 0
    for qe in sorted(s._c):
        parts = []
        zd = s._c[qe]
        for ze in sorted(zd):
            c = zd[ze]
            if ze == 0:
                parts.append(str(c))
            elif ze == 1:
                parts.append(f"{c}*z")
            else:
                parts.append(f"{c}*z^{ze}")
            count += 1
        lines.append(f"q^{_fmt_qexp(qe, s.ctx.scale)}: " + " + ".join(parts))
        if count >= max_terms:
            lines.append("...")
            break
    return "\n".join(lines) if lines else "0"
