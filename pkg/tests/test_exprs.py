import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import jet_at, jet_slots, random_expr, richardson_slots, scalar_fn
from grwsurf import exprs
from grwsurf.exprs import ExprDomainError, ExprSyntaxError, parse, to_text


def ev(text, **env):
    return exprs.eval_scalar(parse(text, tuple(env)), env)


def test_basic_evaluation():
    assert ev("x^2-y^2", x=1.0, y=2.0) == -3.0
    assert ev("cosh(t)", t=0.0) == 1.0
    assert ev("1+4*x^2+4*y^2", x=1.0, y=1.0) == 9.0


def test_precedence():
    assert ev("-x^2", x=3.0) == -9.0
    assert ev("2^3^2", x=0.0) == 512.0
    assert ev("8/4/2", x=0.0) == 1.0
    assert ev("1-2-3", x=0.0) == -4.0
    assert ev("2*-x", x=3.0) == -6.0
    assert ev("x^-1", x=4.0) == 0.25
    assert ev("x^(1/2)", x=9.0) == 3.0


def test_constants():
    assert ev("pi", x=0.0) == math.pi
    assert ev("e", x=0.0) == math.e


def test_undeclared_variable():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("1-z^2", ["x", "y"])
    assert exc.value.offset == 2


def test_phi4_matches():
    node = parse("sqrt(2)*(1-x^2)", ["x", "y"])
    assert exprs.eval_scalar(node, {"x": 0.5, "y": 0.0}) == math.sqrt(2) * 0.75


@pytest.mark.parametrize("text,offset", [
    ("2x", 1), ("x +", 3), ("foo(x)", 0), ("(x", 2), ("x^y", 1), ("x $ y", 2), ("", 0),
    ("sin", 0), ("x y", 2),
])
def test_syntax_errors(text, offset):
    with pytest.raises(ExprSyntaxError) as exc:
        parse(text, ["x", "y"])
    assert exc.value.offset == offset


def test_byte_offset_counts_utf8():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("x + é", ["x"])
    assert exc.value.offset == 4
    with pytest.raises(ExprSyntaxError) as exc:
        parse("éé + ?", ["x"])
    assert exc.value.offset == 0


@pytest.mark.parametrize("text,env", [
    ("log(x)", {"x": 0.0}), ("sqrt(x)", {"x": -1.0}), ("1/x", {"x": 0.0}),
    ("x^(1/2)", {"x": -4.0}),
])
def test_domain_errors_name_the_node(text, env):
    node = parse(text, ["x"])
    with pytest.raises(ExprDomainError) as exc:
        exprs.eval_scalar(node, env)
    assert exc.value.node is not None
    from grwsurf.jets import jet_var
    with pytest.raises(ExprDomainError):
        exprs.eval_jet(node, {"x": jet_var(0, env["x"])})


def test_jet_examples():
    j = jet_at(parse("x*y"), 2.0, 5.0)
    assert j.value == 10.0 and list(j.grad) == [5.0, 2.0] and j.d2(0, 1) == 1.0
    j = jet_at(parse("x^2-y^2"), 1.0, 0.0)
    assert j.value == 1.0 and list(j.grad) == [2.0, 0.0]
    assert j.d2(0, 0) == 2.0 and j.d2(1, 1) == -2.0


def test_exp_cosh_jet_vs_finite_differences():
    node = parse("exp(x)*cosh(y)")
    j = jet_at(node, 0.4, 0.7)
    fd = richardson_slots(scalar_fn(node), 0.4, 0.7)
    for a, b in zip(jet_slots(j), fd):
        assert abs(a - b) <= 1e-6 * max(1.0, abs(b))


def test_round_trip_random(rng):
    for _ in range(1000):
        text = random_expr(rng, int(rng.integers(1, 5)))
        tree = parse(text)
        printed = to_text(tree)
        assert parse(printed) == tree
        assert to_text(parse(printed)) == printed


def test_round_trip_fractional_exponents():
    tree = parse("(1+x^2)^(-3/2) + x^(2/6)")
    assert tree.left.exponent == Fraction(-3, 2)
    assert tree.right.exponent == Fraction(1, 3)
    assert parse(to_text(tree)) == tree


def test_jet_value_equals_scalar_bit_for_bit(rng):
    for _ in range(300):
        text = random_expr(rng, int(rng.integers(1, 4)))
        node = parse(text)
        x, y = rng.uniform(-1, 1, 2)
        assert jet_at(node, x, y).value == exprs.eval_scalar(node, {"x": x, "y": y})


def test_vectorised_scalar_evaluation():
    node = parse("sin(x)*y + 1")
    xs = np.linspace(0, 1, 5)
    out = exprs.eval_scalar(node, {"x": xs, "y": 2.0})
    assert np.allclose(out, np.sin(xs) * 2 + 1)


def test_unbound_variable():
    with pytest.raises(ExprDomainError):
        exprs.eval_scalar(parse("x+y"), {"x": 1.0})


def test_variables_and_constant_detection():
    assert exprs.variables_of(parse("x*sin(y)+2")) == {"x", "y"}
    assert exprs.is_constant(parse("sqrt(2)/3"))
