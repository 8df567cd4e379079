"""Expression evaluation over a process state tree"""

import math
from typing import Optional

from ..lang import ast
from ..values.paths import Path, Segment, path_get
from ..values.tree import Kind, ValueNode, basic_equal, in_int64, kind_of, render_basic
from ..values.tokens import TokenSource, fresh_token
from ..utils.exceptions import RuntimeFault

_ORDERABLE = (Kind.INT, Kind.DOUBLE, Kind.STRING)


def _mismatch(message: str, path: Optional[str] = None) -> RuntimeFault:
    return RuntimeFault(RuntimeFault.TYPE_MISMATCH, message, path)


def _checked_int(value: int, op: str) -> int:
    if not in_int64(value):
        raise _mismatch(f"integer overflow in '{op}'")
    return value


def _checked_double(value: float, op: str) -> float:
    if not math.isfinite(value):
        raise _mismatch(f"non-finite result of '{op}'")
    return value


def _truncated_div(a: int, b: int) -> int:
    quotient = abs(a) // abs(b)
    return quotient if (a >= 0) == (b >= 0) else -quotient


class Evaluator:
    """Evaluates expressions against `state`; `new` draws from `tokens`"""

    def __init__(self, state: ValueNode, tokens: Optional[TokenSource] = None):
        self.state = state
        self.tokens = tokens

    def path(self, expr: ast.PathExpr) -> Path:
        """Resolve index expressions to a static Path"""
        segments = []
        for segment in expr.segments:
            index = 0
            if segment.index is not None:
                value = self.eval(segment.index).root
                if isinstance(value, bool) or not isinstance(value, int):
                    raise _mismatch(f"index of {segment.name} must be an int", expr.dotted())
                if value < 0:
                    raise _mismatch(f"negative index {value} for {segment.name}", expr.dotted())
                index = value
            segments.append(Segment(segment.name, index))
        return Path(tuple(segments))

    def condition(self, expr) -> bool:
        value = self.eval(expr).root
        if not isinstance(value, bool):
            raise _mismatch("condition must be a bool")
        return value

    def eval(self, expr) -> ValueNode:
        if isinstance(expr, ast.Literal):
            return ValueNode(expr.value)
        if isinstance(expr, ast.PathExpr):
            return path_get(self.state, self.path(expr)).copy()
        if isinstance(expr, ast.NewToken):
            return ValueNode(fresh_token(self.tokens))
        if isinstance(expr, ast.SizeOf):
            path = self.path(expr.path)
            parent = path_get(self.state, path.segments[:-1])
            return ValueNode(parent.size(path.segments[-1].name))
        if isinstance(expr, ast.UnaryOp):
            return ValueNode(self.unary(expr.op, self.eval(expr.operand).root))
        if isinstance(expr, ast.BinaryOp):
            if expr.op in ("&&", "||"):
                return ValueNode(self.logical(expr))
            left = self.eval(expr.left).root
            right = self.eval(expr.right).root
            return ValueNode(self.binary(expr.op, left, right))
        raise TypeError(f"not an expression: {expr!r}")

    def unary(self, op: str, value):
        if op == "!":
            if not isinstance(value, bool):
                raise _mismatch("'!' needs a bool")
            return not value
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _mismatch("unary '-' needs an int or double")
        if isinstance(value, int):
            return _checked_int(-value, "-")
        return -value

    def logical(self, expr: ast.BinaryOp) -> bool:
        left = self.eval(expr.left).root
        if not isinstance(left, bool):
            raise _mismatch(f"'{expr.op}' needs bool operands")
        if expr.op == "&&" and not left:
            return False
        if expr.op == "||" and left:
            return True
        right = self.eval(expr.right).root
        if not isinstance(right, bool):
            raise _mismatch(f"'{expr.op}' needs bool operands")
        return right

    def binary(self, op: str, left, right):
        if op == "==":
            return basic_equal(left, right)
        if op == "!=":
            return not basic_equal(left, right)

        left_kind = kind_of(left)
        right_kind = kind_of(right)

        if op in ("<", "<=", ">", ">="):
            if left_kind != right_kind or left_kind not in _ORDERABLE:
                raise _mismatch(f"cannot order {left_kind.value} and {right_kind.value}")
            return {
                "<": left < right,
                "<=": left <= right,
                ">": left > right,
                ">=": left >= right,
            }[op]

        if op == "+" and left_kind == Kind.STRING:
            return left + render_basic(right)

        if left_kind != right_kind or left_kind not in (Kind.INT, Kind.DOUBLE):
            raise _mismatch(f"'{op}' is not defined on {left_kind.value} and {right_kind.value}")

        if op in ("/", "%") and right == 0:
            raise _mismatch("division by zero")

        if left_kind == Kind.INT:
            if op == "+":
                return _checked_int(left + right, op)
            if op == "-":
                return _checked_int(left - right, op)
            if op == "*":
                return _checked_int(left * right, op)
            if op == "/":
                return _checked_int(_truncated_div(left, right), op)
            if op == "%":
                return left - right * _truncated_div(left, right)
        else:
            if op == "+":
                return _checked_double(left + right, op)
            if op == "-":
                return _checked_double(left - right, op)
            if op == "*":
                return _checked_double(left * right, op)
            if op == "/":
                return _checked_double(left / right, op)
            if op == "%":
                return _checked_double(math.fmod(left, right), op)
        raise _mismatch(f"unknown operator {op}")


def evaluate(expr, state: ValueNode, tokens: Optional[TokenSource] = None) -> ValueNode:
    """Evaluate `expr` against `state`; path reads are deep copies"""
    return Evaluator(state, tokens).eval(expr)
