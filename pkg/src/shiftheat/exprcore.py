"""Tiny expression language for coefficient and initial-data functions.

Grammar (infix, single variable ``x``, constant ``pi``)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' factor)?
    unary  := '-'? atom
    atom   := number | 'x' | 'pi' | ident '(' expr ')' | '(' expr ')'

ASTs are immutable; evaluation is pure and accepts scalars or numpy
arrays. Differentiation is exact and closed over the AST node set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExprError",
    "ExprDomainError",
    "Const",
    "Var",
    "Call",
    "BinOp",
    "parse_expr",
    "eval_expr",
    "diff_expr",
    "to_string",
]

_FUNCTIONS = ("sin", "cos", "exp", "sqrt", "log", "neg")


class ExprError(ValueError):
    """Syntax or name error; ``offset`` is the byte position in the source."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ExprDomainError(ArithmeticError):
    """Evaluation left the real domain (division by zero, sqrt/log range)."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "ExprAst"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "ExprAst"
    right: "ExprAst"


ExprAst = Const | Var | Call | BinOp


# ---------------------------------------------------------------------------
# parsing

class _Tokenizer:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def peek(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        if self.pos >= len(self.text):
            return ("end", "", self.pos)
        ch = self.text[self.pos]
        if ch in "+-*/^()":
            return ("op", ch, self.pos)
        if ch.isdigit() or ch == ".":
            j = self.pos
            seen_dot = False
            while j < len(self.text) and (self.text[j].isdigit() or (self.text[j] == "." and not seen_dot)):
                seen_dot = seen_dot or self.text[j] == "."
                j += 1
            # optional exponent part of a float literal
            if j < len(self.text) and self.text[j] in "eE":
                k = j + 1
                if k < len(self.text) and self.text[k] in "+-":
                    k += 1
                if k < len(self.text) and self.text[k].isdigit():
                    while k < len(self.text) and self.text[k].isdigit():
                        k += 1
                    j = k
            return ("num", self.text[self.pos:j], self.pos)
        if ch.isalpha() or ch == "_":
            j = self.pos
            while j < len(self.text) and (self.text[j].isalnum() or self.text[j] == "_"):
                j += 1
            return ("ident", self.text[self.pos:j], self.pos)
        raise ExprError(f"unexpected character {ch!r}", self.pos)

    def next(self):
        kind, val, off = self.peek()
        self.pos = off + len(val)
        return kind, val, off


def parse_expr(text: str) -> ExprAst:
    """Parse ``text`` into an AST honouring standard operator precedence."""
    tok = _Tokenizer(text)
    ast = _parse_sum(tok)
    kind, val, off = tok.peek()
    if kind != "end":
        raise ExprError(f"trailing input {val!r}", off)
    return ast


def _parse_sum(tok):
    node = _parse_term(tok)
    while True:
        kind, val, _ = tok.peek()
        if kind == "op" and val in "+-":
            tok.next()
            rhs = _parse_term(tok)
            node = BinOp("add" if val == "+" else "sub", node, rhs)
        else:
            return node


def _parse_term(tok):
    node = _parse_factor(tok)
    while True:
        kind, val, _ = tok.peek()
        if kind == "op" and val in "*/":
            tok.next()
            rhs = _parse_factor(tok)
            node = BinOp("mul" if val == "*" else "div", node, rhs)
        else:
            return node


def _parse_factor(tok):
    node = _parse_unary(tok)
    kind, val, _ = tok.peek()
    if kind == "op" and val == "^":
        tok.next()
        # right associative
        rhs = _parse_factor(tok)
        return BinOp("pow", node, rhs)
    return node


def _parse_unary(tok):
    kind, val, _ = tok.peek()
    if kind == "op" and val == "-":
        tok.next()
        return Call("neg", _parse_unary(tok))
    return _parse_atom(tok)


def _parse_atom(tok):
    kind, val, off = tok.next()
    if kind == "num":
        return Const(float(val))
    if kind == "ident":
        if val == "x":
            return Var()
        if val == "pi":
            return Const(math.pi)
        if val in _FUNCTIONS and val != "neg":
            k2, v2, o2 = tok.next()
            if not (k2 == "op" and v2 == "("):
                raise ExprError(f"expected '(' after {val!r}", o2)
            arg = _parse_sum(tok)
            k3, v3, o3 = tok.next()
            if not (k3 == "op" and v3 == ")"):
                raise ExprError("expected ')'", o3)
            return Call(val, arg)
        raise ExprError(f"unknown identifier {val!r}", off)
    if kind == "op" and val == "(":
        node = _parse_sum(tok)
        k2, v2, o2 = tok.next()
        if not (k2 == "op" and v2 == ")"):
            raise ExprError("expected ')'", o2)
        return node
    raise ExprError(f"expected a value, got {val!r}" if val else "unexpected end of input", off)


# ---------------------------------------------------------------------------
# evaluation

def eval_expr(ast: ExprAst, x):
    """Evaluate ``ast`` at ``x`` (scalar or numpy array)."""
    if isinstance(ast, Const):
        if np.ndim(x) == 0:
            return ast.value
        return np.full(np.shape(x), ast.value)
    if isinstance(ast, Var):
        return x if np.ndim(x) else float(x)
    if isinstance(ast, Call):
        v = eval_expr(ast.arg, x)
        if ast.fn == "neg":
            return -v
        if ast.fn == "sin":
            return np.sin(v)
        if ast.fn == "cos":
            return np.cos(v)
        if ast.fn == "exp":
            return np.exp(v)
        if ast.fn == "sqrt":
            if np.any(np.asarray(v) < 0):
                raise ExprDomainError("sqrt of negative value")
            return np.sqrt(v)
        if ast.fn == "log":
            if np.any(np.asarray(v) <= 0):
                raise ExprDomainError("log of non-positive value")
            return np.log(v)
        raise ExprDomainError(f"unknown function {ast.fn!r}")
    l = eval_expr(ast.left, x)
    r = eval_expr(ast.right, x)
    if ast.op == "add":
        return l + r
    if ast.op == "sub":
        return l - r
    if ast.op == "mul":
        return l * r
    if ast.op == "div":
        if np.any(np.asarray(r) == 0):
            raise ExprDomainError("division by zero")
        return l / r
    if ast.op == "pow":
        base = np.asarray(l, dtype=float)
        if np.any(base < 0) and not float(np.round(_as_scalar(r))) == _as_scalar(r):
            raise ExprDomainError("negative base with non-integer exponent")
        with np.errstate(divide="raise", invalid="raise"):
            try:
                out = np.power(l, r)
            except FloatingPointError as exc:
                raise ExprDomainError(str(exc)) from None
        return out if np.ndim(x) else float(out)
    raise ExprDomainError(f"unknown operator {ast.op!r}")


def _as_scalar(v):
    arr = np.asarray(v)
    return float(arr.flat[0]) if arr.size else 0.0


# ---------------------------------------------------------------------------
# differentiation

def diff_expr(ast: ExprAst) -> ExprAst:
    """Exact symbolic derivative with respect to x (unreduced tree)."""
    if isinstance(ast, Const):
        return Const(0.0)
    if isinstance(ast, Var):
        return Const(1.0)
    if isinstance(ast, Call):
        da = diff_expr(ast.arg)
        if ast.fn == "neg":
            return Call("neg", da)
        if ast.fn == "sin":
            return BinOp("mul", Call("cos", ast.arg), da)
        if ast.fn == "cos":
            return Call("neg", BinOp("mul", Call("sin", ast.arg), da))
        if ast.fn == "exp":
            return BinOp("mul", ast, da)
        if ast.fn == "sqrt":
            return BinOp("div", da, BinOp("mul", Const(2.0), ast))
        if ast.fn == "log":
            return BinOp("div", da, ast.arg)
        raise ExprDomainError(f"unknown function {ast.fn!r}")
    dl = diff_expr(ast.left)
    dr = diff_expr(ast.right)
    if ast.op == "add":
        return BinOp("add", dl, dr)
    if ast.op == "sub":
        return BinOp("sub", dl, dr)
    if ast.op == "mul":
        return BinOp("add", BinOp("mul", dl, ast.right), BinOp("mul", ast.left, dr))
    if ast.op == "div":
        num = BinOp("sub", BinOp("mul", dl, ast.right), BinOp("mul", ast.left, dr))
        return BinOp("div", num, BinOp("mul", ast.right, ast.right))
    if ast.op == "pow":
        if isinstance(ast.right, Const):
            n = ast.right.value
            pw = BinOp("pow", ast.left, Const(n - 1.0))
            return BinOp("mul", BinOp("mul", Const(n), pw), dl)
        if not _contains_var(ast.left):
            # c^v -> c^v * ln c * v'
            return BinOp("mul", BinOp("mul", ast, Call("log", ast.left)), dr)
        # u^v -> u^v * (v' ln u + v u'/u)
        t1 = BinOp("mul", dr, Call("log", ast.left))
        t2 = BinOp("div", BinOp("mul", ast.right, dl), ast.left)
        return BinOp("mul", ast, BinOp("add", t1, t2))
    raise ExprDomainError(f"unknown operator {ast.op!r}")


def _contains_var(ast):
    if isinstance(ast, Var):
        return True
    if isinstance(ast, Call):
        return _contains_var(ast.arg)
    if isinstance(ast, BinOp):
        return _contains_var(ast.left) or _contains_var(ast.right)
    return False


# ---------------------------------------------------------------------------
# printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 3}


def to_string(ast: ExprAst) -> str:
    """Render the AST so that ``parse_expr(to_string(ast))`` evaluates identically."""
    if isinstance(ast, Const):
        return repr(ast.value)
    if isinstance(ast, Var):
        return "x"
    if isinstance(ast, Call):
        if ast.fn == "neg":
            return f"-({to_string(ast.arg)})"
        return f"{ast.fn}({to_string(ast.arg)})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}[ast.op]
    return f"({to_string(ast.left)}{sym}{to_string(ast.right)})"
