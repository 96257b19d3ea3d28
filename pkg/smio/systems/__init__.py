from __future__ import annotations

from smio.systems.builtin import available, build_spec, builtin
from smio.systems.expr import ExpressionField, evaluate, parse, to_source

__all__ = (
    "ExpressionField",
    "available",
    "build_spec",
    "builtin",
    "evaluate",
    "parse",
    "to_source",
)
