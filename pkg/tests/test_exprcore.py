import math

import numpy as np
import pytest

from shiftheat.exprcore import (BinOp, Call, Const, ExprDomainError, ExprError,
                                Var, diff_expr, eval_expr, parse_expr,
                                to_string)


def test_parse_basic_shapes():
    ast = parse_expr("sin(2*pi*x)")
    assert isinstance(ast, Call) and ast.fn == "sin"
    ast2 = parse_expr("1+0.1*x")
    assert isinstance(ast2, BinOp) and ast2.op == "add"
    assert isinstance(ast2.right, BinOp) and ast2.right.op == "mul"


def test_eval_known_values():
    assert eval_expr(parse_expr("sin(2*pi*x)"), 0.25) == pytest.approx(1.0)
    assert eval_expr(parse_expr("1"), 0.7) == 1.0
    assert eval_expr(parse_expr("1+0.1*x"), 1.0) == pytest.approx(1.1)
    assert eval_expr(parse_expr("2^3"), 0.0) == 8.0
    # per the grammar, the power base is the signed atom: -x^2 = (-x)^2
    assert eval_expr(parse_expr("-x^2"), 3.0) == 9.0
    assert eval_expr(parse_expr("-(x^2)"), 3.0) == -9.0


def test_precedence_and_associativity():
    assert eval_expr(parse_expr("2+3*4"), 0) == 14
    assert eval_expr(parse_expr("2*3^2"), 0) == 18
    assert eval_expr(parse_expr("2^3^2"), 0) == 512  # right associative
    assert eval_expr(parse_expr("8/4/2"), 0) == 1.0


def test_syntax_error_offsets():
    with pytest.raises(ExprError) as err:
        parse_expr("sin(")
    assert err.value.offset == 4
    with pytest.raises(ExprError):
        parse_expr("1+*2")
    with pytest.raises(ExprError) as err:
        parse_expr("foo(x)")
    assert "foo" in str(err.value)


def test_domain_errors():
    with pytest.raises(ExprDomainError):
        eval_expr(parse_expr("1/x"), 0.0)
    with pytest.raises(ExprDomainError):
        eval_expr(parse_expr("sqrt(x-2)"), 0.5)
    with pytest.raises(ExprDomainError):
        eval_expr(parse_expr("log(x)"), 0.0)


def test_diff_known_derivatives():
    d = diff_expr(parse_expr("sin(2*pi*x)"))
    assert eval_expr(d, 0.0) == pytest.approx(2 * math.pi)
    assert eval_expr(diff_expr(parse_expr("42")), 0.3) == 0.0
    assert eval_expr(diff_expr(parse_expr("x^2")), 3.0) == pytest.approx(6.0)
    # general power rule u^v
    d2 = diff_expr(parse_expr("x^x"))
    x = 1.7
    assert eval_expr(d2, x) == pytest.approx(x ** x * (math.log(x) + 1))


def _random_ast(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return Const(rng.uniform(0.2, 2.5)) if rng.random() < 0.5 else Var()
    kind = rng.random()
    if kind < 0.45:
        op = rng.choice(["add", "sub", "mul"])
        return BinOp(op, _random_ast(rng, depth - 1), _random_ast(rng, depth - 1))
    if kind < 0.55:
        # keep divisors away from zero on [0, 1]
        return BinOp("div", _random_ast(rng, depth - 1),
                     BinOp("add", Const(rng.uniform(1.5, 3.0)),
                           BinOp("mul", Const(0.3), Var())))
    fn = rng.choice(["sin", "cos", "exp", "neg"])
    return Call(fn, _random_ast(rng, depth - 1))


def test_derivative_matches_finite_differences():
    rng = np.random.RandomState(42)
    step = 1e-5
    for _ in range(120):
        ast = _random_ast(rng, 4)
        dast = diff_expr(ast)
        for x in rng.uniform(0.02, 0.98, 3):
            num = (eval_expr(ast, x + step) - eval_expr(ast, x - step)) / (2 * step)
            sym = eval_expr(dast, x)
            assert abs(sym - num) <= 1e-6 * (1.0 + abs(sym))


def test_print_parse_roundtrip():
    rng = np.random.RandomState(3)
    xs = rng.uniform(0.0, 1.0, 100)
    for _ in range(60):
        ast = _random_ast(rng, 4)
        back = parse_expr(to_string(ast))
        np.testing.assert_allclose(eval_expr(back, xs), eval_expr(ast, xs),
                                   rtol=0, atol=0)


def test_vectorized_eval():
    ast = parse_expr("sin(2*pi*x)+x^2")
    xs = np.linspace(0, 1, 11)
    np.testing.assert_allclose(eval_expr(ast, xs),
                               np.sin(2 * np.pi * xs) + xs ** 2, atol=1e-15)
