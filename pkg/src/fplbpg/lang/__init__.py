"""Priority-formula language: syntax, semantics, guarantees."""

from .semantics import (
    Diagnostic,
    UtilitySpec,
    bound_report,
    evaluate,
    evaluate_many,
    gradient,
    gradient_many,
    load_spec_file,
    load_spec_text,
    validate,
)
from .syntax import (
    And,
    Formula,
    FplSyntaxError,
    Leaf,
    Not,
    Offset,
    Or,
    Power,
    format_formula,
    free_variables,
    parse,
)

__all__ = [
    "And",
    "Diagnostic",
    "Formula",
    "FplSyntaxError",
    "Leaf",
    "Not",
    "Offset",
    "Or",
    "Power",
    "UtilitySpec",
    "bound_report",
    "evaluate",
    "evaluate_many",
    "format_formula",
    "free_variables",
    "gradient",
    "gradient_many",
    "load_spec_file",
    "load_spec_text",
    "parse",
    "validate",
]
