"""Identity description language: parse, validate, evaluate, pretty-print."""

from .evaluator import bindings_env, context_for, evaluate, evaluate_expr
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
    IntExpr,
    IntLit,
    IVar,
    Expr,
    Mul,
    Neg,
    NumPoly,
    ParamDecl,
    Poch,
    Pow,
    QBinom,
    QPow,
    RangeSum,
    Rational,
    Span,
    Sub,
    Theta,
    ZBind,
    ZPow,
    int_eval,
    int_vars,
    pretty_print,
    pretty_print_expr,
)
from .parser import parse, parse_expr, parse_file
from .validator import Finding, validate

__all__ = [
    "Add",
    "Appell",
    "BilateralSum",
    "ChainSum",
    "Div",
    "Expr",
    "Finding",
    "Hecke",
    "IAdd",
    "IBinom",
    "IMul",
    "INeg",
    "IPow",
    "ISub",
    "IdentitySpec",
    "IntExpr",
    "IntLit",
    "IVar",
    "Mul",
    "Neg",
    "NumPoly",
    "ParamDecl",
    "Poch",
    "Pow",
    "QBinom",
    "QPow",
    "RangeSum",
    "Rational",
    "Span",
    "Sub",
    "Theta",
    "ZBind",
    "ZPow",
    "bindings_env",
    "context_for",
    "evaluate",
    "evaluate_expr",
    "int_eval",
    "int_vars",
    "parse",
    "parse_expr",
    "parse_file",
    "pretty_print",
    "pretty_print_expr",
    "validate",
]
