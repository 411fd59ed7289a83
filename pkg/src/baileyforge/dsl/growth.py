"""Exponent-growth analysis for summation bodies."""

from __future__ import annotations

from fractions import Fraction

from .nodes import (
    Add,
    Appell,
    BilateralSum,
    ChainSum,
    Div,
    Hecke,
    IAdd,
    IBinom,
    IMul,
    INeg,
    IPow,
    ISub,
    IntLit,
    IVar,
    Mul,
    Neg,
    NumPoly,
    Poch,
    Pow,
    QBinom,
    QPow,
    RangeSum,
    Rational,
    Sub,
    Theta,
    ZPow,
)

# Polynomials in one ray variable t are coefficient tuples (c0, c1, ...).

ZERO = (Fraction(0),)
T = (Fraction(0), Fraction(1))


def _trim(p):
    while len(p) > 1 and not p[-1]:
        p = p[:-1]
    return tuple(p)


def const(v) -> tuple:
    return (Fraction(v),)


def padd(a, b):
    n = max(len(a), len(b))
    return _trim(tuple(
        (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
    ))


def pneg(a):
    return tuple(-c for c in a)


def pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return _trim(tuple(out))


def peval(p, t):
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * t + c
    return acc


def ipoly(e, sub: dict, env: dict):
    """Polynomial of an integer expression in the ray variable.

    sub maps identifier names to polynomials; identifiers found in env are
    constants; any other identifier makes the result None.
    """
    if isinstance(e, IntLit):
        return const(e.value)
    if isinstance(e, IVar):
        if e.name in sub:
            return sub[e.name]
        if e.name in env:
            return const(env[e.name])
        return None
    if isinstance(e, IAdd):
        a, b = ipoly(e.left, sub, env), ipoly(e.right, sub, env)
        return None if a is None or b is None else padd(a, b)
    if isinstance(e, ISub):
        a, b = ipoly(e.left, sub, env), ipoly(e.right, sub, env)
        return None if a is None or b is None else padd(a, pneg(b))
    if isinstance(e, IMul):
        a, b = ipoly(e.left, sub, env), ipoly(e.right, sub, env)
        return None if a is None or b is None else pmul(a, b)
    if isinstance(e, INeg):
        a = ipoly(e.arg, sub, env)
        return None if a is None else pneg(a)
    if isinstance(e, IPow):
        a = ipoly(e.base, sub, env)
        if a is None:
            return None
        out = const(1)
        for _ in range(e.power):
            out = pmul(out, a)
        return out
    if isinstance(e, IBinom):
        a = ipoly(e.arg, sub, env)
        if a is None:
            return None
        return _trim(tuple(c / 2 for c in pmul(a, padd(a, const(-1)))))
    return None


def qexp_along(expr, sub: dict, env: dict, zfold):
    """Explicit q-exponent polynomial of a product body along a ray.

    Pochhammer, binomial, and inverse factors contribute exponents bounded
    below by a constant, so they count as zero here; None means the shape
    is outside what this analysis covers.
    """
    if isinstance(expr, (Rational, NumPoly, Poch, Theta, QBinom)):
        return ZERO
    if isinstance(expr, QPow):
        if expr.exp is None:
            return ZERO
        return ipoly(expr.exp, sub, env)
    if isinstance(expr, ZPow):
        if zfold is None:
            return ZERO
        e = T if expr.exp is None else ipoly(expr.exp, sub, env)
        return None if e is None else pmul(e, const(zfold[1]))
    if isinstance(expr, Neg):
        return qexp_along(expr.arg, sub, env, zfold)
    if isinstance(expr, Mul):
        a = qexp_along(expr.left, sub, env, zfold)
        b = qexp_along(expr.right, sub, env, zfold)
        return None if a is None or b is None else padd(a, b)
    if isinstance(expr, Div):
        return qexp_along(expr.left, sub, env, zfold)
    if isinstance(expr, Pow):
        a = qexp_along(expr.base, sub, env, zfold)
        e = ipoly(expr.exp, sub, env)
        if a is None or e is None:
            return None
        if a == ZERO:
            return ZERO
        return pmul(a, e)
    if isinstance(expr, (Add, Sub)):
        a = qexp_along(expr.left, sub, env, zfold)
        b = qexp_along(expr.right, sub, env, zfold)
        if a is None or b is None:
            return None
        return a if a == b else None
    if isinstance(expr, (ChainSum, BilateralSum, RangeSum, Appell, Hecke)):
        return None
    return None


def grows_both_ways(p) -> bool:
    """True when the polynomial tends to +infinity in both ray directions."""
    if p is None:
        return False
    p = _trim(p)
    return len(p) == 3 and p[2] > 0


def grows_forward(p) -> bool:
    """True when the polynomial tends to +infinity as the ray variable grows."""
    if p is None:
        return False
    p = _trim(p)
    if len(p) == 3:
        return p[2] > 0
    return len(p) == 2 and p[1] > 0
