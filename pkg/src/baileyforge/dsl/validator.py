"""Static validation of identity specs: scope, ranges, shape, termination."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import NonUnitLeadingError, PoleError, SpecError, TerminationError
from . import growth
from .growth import T, ipoly, pneg, qexp_along
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
    IdentitySpec,
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
    Span,
    Sub,
    Theta,
    ZPow,
    int_eval,
)

_PROBE_ORDER = 6


@dataclass(frozen=True)
class Finding:
    """One validation defect, located by the offending node's span."""

    code: str
    message: str
    span: Span | None = None


def _ivars(e, out):
    """Collect (name, span) for every identifier in an integer expression."""
    if isinstance(e, IVar):
        out.append((e.name, e.span))
    elif isinstance(e, (IAdd, ISub, IMul)):
        _ivars(e.left, out)
        _ivars(e.right, out)
    elif isinstance(e, INeg):
        _ivars(e.arg, out)
    elif isinstance(e, IPow):
        _ivars(e.base, out)
    elif isinstance(e, IBinom):
        _ivars(e.arg, out)


def _check_int(e, scope, findings):
    if e is None:
        return
    names: list = []
    _ivars(e, names)
    for name, span in names:
        if name not in scope:
            findings.append(Finding("unknown-name", f"unknown identifier {name!r}", span))


def _enter(index, node, scope, findings):
    if index in scope:
        findings.append(Finding("shadowed-index", f"index {index!r} shadows an outer name", node.span))
    return scope | {index}


def _walk(expr, scope, findings, zfold, env):
    if expr is None or isinstance(expr, Rational):
        return
    if isinstance(expr, (QPow, ZPow)):
        _check_int(expr.exp, scope, findings)
        return
    if isinstance(expr, NumPoly):
        _check_int(expr.poly, scope, findings)
        return
    if isinstance(expr, Pow):
        _check_int(expr.exp, scope, findings)
        _walk(expr.base, scope, findings, zfold, env)
        return
    if isinstance(expr, Neg):
        _walk(expr.arg, scope, findings, zfold, env)
        return
    if isinstance(expr, (Add, Sub, Mul, Div)):
        _walk(expr.left, scope, findings, zfold, env)
        _walk(expr.right, scope, findings, zfold, env)
        return
    if isinstance(expr, (Poch, Theta)):
        for b in expr.bases:
            _walk(b, scope, findings, zfold, env)
        _check_int(expr.step, scope, findings)
        if isinstance(expr, Poch) and expr.length is not None:
            _check_int(expr.length, scope, findings)
        return
    if isinstance(expr, QBinom):
        _check_int(expr.top, scope, findings)
        _check_int(expr.bottom, scope, findings)
        return
    if isinstance(expr, ChainSum):
        inner = scope
        seen = set()
        for idx in expr.indices:
            if idx in seen:
                findings.append(Finding("duplicate-index", f"index {idx!r} repeats", expr.span))
            seen.add(idx)
            inner = _enter(idx, expr, inner, findings)
        _walk(expr.body, inner, findings, zfold, env)
        _certify_chain(expr, findings, zfold, env)
        return
    if isinstance(expr, BilateralSum):
        inner = _enter(expr.index, expr, scope, findings)
        _walk(expr.body, inner, findings, zfold, env)
        p = qexp_along(expr.body, {expr.index: T}, env, zfold)
        if p is not None and not growth.grows_both_ways(p):
            findings.append(Finding(
                "bilateral-no-growth",
                "two-sided sum needs a positive quadratic exponent to settle",
                expr.span,
            ))
        return
    if isinstance(expr, RangeSum):
        _check_int(expr.lo, scope, findings)
        _check_int(expr.hi, scope, findings)
        inner = _enter(expr.index, expr, scope, findings)
        _walk(expr.body, inner, findings, zfold, env)
        return
    if isinstance(expr, Appell):
        inner = _enter(expr.index, expr, scope, findings)
        _walk(expr.num, inner, findings, zfold, env)
        _check_int(expr.den, inner, findings)
        p = qexp_along(expr.num, {expr.index: T}, env, zfold)
        if p is not None and not growth.grows_both_ways(p):
            findings.append(Finding(
                "appell-no-growth",
                "two-sided sum needs a positive quadratic exponent to settle",
                expr.span,
            ))
        return
    if isinstance(expr, Hecke):
        if expr.outer == expr.inner:
            findings.append(Finding("duplicate-index", "outer and inner indices coincide", expr.span))
        inner = _enter(expr.outer, expr, scope, findings)
        inner = _enter(expr.inner, expr, inner, findings)
        _walk(expr.body, inner, findings, zfold, env)
        if expr.den is not None:
            _check_int(expr.den, inner, findings)
        # For the half region walk rows n = 2t so the edge j = t stays integral.
        outer_t = growth.pmul(T, growth.const(2)) if expr.region == "half" else T
        for jray in (growth.ZERO, T, pneg(T)):
            p = qexp_along(expr.body, {expr.outer: outer_t, expr.inner: jray}, env, zfold)
            if p is not None and not growth.grows_forward(p):
                findings.append(Finding(
                    "hecke-no-growth",
                    "row exponents must grow along every edge of the region",
                    expr.span,
                ))
                break
        return
    findings.append(Finding("bad-shape", f"unsupported expression {type(expr).__name__}", getattr(expr, "span", None)))


def _certify_chain(expr: ChainSum, findings, zfold, env):
    k = len(expr.indices)
    rays = [{idx: T for idx in expr.indices}]
    if k > 1:
        first = {expr.indices[0]: T}
        first.update({idx: growth.ZERO for idx in expr.indices[1:]})
        rays.append(first)
    for sub in rays:
        p = qexp_along(expr.body, sub, env, zfold)
        if p is None:
            return
        if not growth.grows_forward(p):
            findings.append(Finding(
                "chain-no-growth",
                "sum over descending indices needs exponent growth along its rays",
                expr.span,
            ))
            return


def _probe_envs(spec: IdentitySpec):
    lo_env: dict = {}
    hi_env: dict = {}
    for p in spec.params:
        lo_env[p.name] = p.lo
        hi_env[p.name] = p.hi if isinstance(p.hi, int) else hi_env[p.hi]
    return [lo_env] if lo_env == hi_env else [lo_env, hi_env]


def validate(spec: IdentitySpec) -> list:
    """Check an identity spec and return a list of findings (empty when clean)."""
    findings: list = []
    scope = set()
    for p in spec.params:
        if p.name in scope:
            findings.append(Finding("duplicate-param", f"parameter {p.name!r} repeats", p.span))
        if isinstance(p.hi, int):
            if p.lo > p.hi:
                findings.append(Finding("empty-range", f"range {p.lo}..{p.hi} is empty", p.span))
        elif p.hi not in scope:
            findings.append(Finding(
                "unknown-name", f"range bound {p.hi!r} is not an earlier parameter", p.span))
        scope.add(p.name)
    if spec.zbind is not None:
        _check_int(spec.zbind.qexp, scope, findings)
    if findings:
        return findings

    envs = _probe_envs(spec)
    zfold = None
    if spec.zbind is not None:
        zfold = (spec.zbind.sign, int_eval(spec.zbind.qexp, envs[0]))
    for side in (spec.lhs, spec.rhs):
        _walk(side, scope, findings, zfold, envs[0])
    if findings:
        return findings

    from ..oracle import brute_force_expand

    for env in envs:
        for side in ("lhs", "rhs"):
            try:
                brute_force_expand(spec, side, env, order=_PROBE_ORDER)
            except TerminationError as e:
                findings.append(Finding(
                    "sum-not-settling", f"{side} probe: {e}",
                    (spec.lhs if side == "lhs" else spec.rhs).span))
            except NonUnitLeadingError as e:
                findings.append(Finding(
                    "non-unit-denominator", f"{side} probe: {e}",
                    (spec.lhs if side == "lhs" else spec.rhs).span))
            except PoleError as e:
                findings.append(Finding(
                    "pole", f"{side} probe: {e}",
                    (spec.lhs if side == "lhs" else spec.rhs).span))
            except SpecError as e:
                findings.append(Finding(
                    "bad-shape", f"{side} probe: {e}",
                    (spec.lhs if side == "lhs" else spec.rhs).span))
        if findings:
            break
    return findings
