import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import catalog_functions, catalog_metrics
from finsler_product import jets, mexpr
from finsler_product.errors import DomainError
from finsler_product.jets import DerivSpec, jet_variable
from finsler_product.mexpr import (
    ArityError,
    BinOp,
    Call,
    ExprSyntaxError,
    Neg,
    Num,
    UnboundVariable,
    UnknownIdentifier,
    Var,
    eval_float,
    eval_jet,
    parse,
    to_text,
)

M2 = mexpr.metric_variables(2)
ST = mexpr.PRODUCT_VARIABLES


def test_sphere_expression_parses():
    e = parse("y1^2 + sin(x1)^2 * y2^2", M2)
    assert mexpr.variables(e) == {"x1", "y1", "y2"}
    assert eval_float(e, {"x1": math.pi / 4, "y1": 1.0, "y2": 1.0}) == pytest.approx(1.5)


def test_product_function_parses():
    e = parse("s + t + 2*0.5*sqrt(s*t)", ST)
    assert eval_float(e, {"s": 1.0, "t": 1.0}) == pytest.approx(3.0)


def test_syntax_error_offset():
    with pytest.raises(SyntaxError) as info:
        parse("y1 + + y2", M2)
    assert info.value.offset == 5


@pytest.mark.parametrize("text", ["", "y1 +", "(y1", "y1 y2", "y1 $ 2"])
def test_malformed(text):
    with pytest.raises(ExprSyntaxError):
        parse(text, M2)


def test_unknown_identifiers():
    with pytest.raises(UnknownIdentifier):
        parse("abs(y1)", M2)
    with pytest.raises(UnknownIdentifier):
        parse("y3", M2)
    with pytest.raises(UnknownIdentifier):
        parse("s + x1", ST)


def test_arity():
    with pytest.raises(ArityError):
        parse("sqrt(y1, y2)", M2)
    with pytest.raises(ArityError):
        parse("sin()", M2)
    with pytest.raises(ArityError):
        parse("sqrt y1", M2)


def test_precedence_and_associativity():
    env = {"y1": 2.0, "y2": 3.0}
    assert eval_float(parse("-y1^2", M2), env) == -4.0
    assert eval_float(parse("y1 - y2 - 1", M2), env) == -2.0
    assert eval_float(parse("y2 / y1 / 2", M2), env) == 0.75
    assert eval_float(parse("y1^y2^2", M2), env) == pytest.approx(64.0, rel=1e-14)  # left-associative
    assert eval_float(parse("y1^-1", M2), env) == 0.5
    assert eval_float(parse("1.5e1 + .5", M2), env) == 15.5


def test_eval_jet_sum_of_squares():
    spec = DerivSpec(2, 2, 1, 3)
    env = {"x1": jet_variable(spec, 0, 0.0), "x2": jet_variable(spec, 1, 0.0),
           "y1": jet_variable(spec, 2, 3.0), "y2": jet_variable(spec, 3, 4.0)}
    j = eval_jet(parse("y1^2+y2^2", M2), env)
    assert j.value == 25.0
    assert j.partial(y=(0,)) == 6.0


def test_eval_jet_sqrt_mixed_partial():
    spec = DerivSpec(2, 2, 0, 2)
    env = {"s": jet_variable(spec, 2, 3.0), "t": jet_variable(spec, 3, 4.0)}
    j = eval_jet(parse("sqrt(s*t)", ST), env)
    # d2/dsdt sqrt(st) = 1 / (4 sqrt(st))
    assert j.partial(y=(0, 1)) == pytest.approx(1 / (4 * math.sqrt(12)), rel=1e-14)


def test_domain_error_names_subexpression():
    spec = DerivSpec(1, 1)
    with pytest.raises(DomainError) as info:
        eval_jet(parse("1 + log(y1)", mexpr.metric_variables(1)),
                 {"x1": jet_variable(spec, 0, 0.0), "y1": jet_variable(spec, 1, 0.0)})
    assert "log(y1)" in str(info.value)


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        eval_float(parse("y1 + y2", M2), {"y1": 1.0})


def _shipped_expressions():
    out = {name: m.expression for name, m in catalog_metrics().items()}
    out.update({f"f_{name}": f.expression for name, f in catalog_functions().items()})
    return out


@pytest.mark.parametrize("name,expr", sorted(_shipped_expressions().items()))
def test_round_trip_shipped(name, expr):
    names = ST if name.startswith("f_") else mexpr.metric_variables(3)
    again = parse(to_text(expr), names)
    assert again == expr
    assert to_text(again) == to_text(expr)


@pytest.mark.parametrize("name", sorted(catalog_metrics()))
def test_zero_order_jet_equals_float(name):
    m = catalog_metrics()[name]
    rng = np.random.default_rng(3)
    spec = DerivSpec(m.dim, m.dim, 0, 0)
    for _ in range(20):
        x = rng.uniform(0.4, 1.2, m.dim)
        y = rng.standard_normal(m.dim)
        env_f = {f"x{i + 1}": x[i] for i in range(m.dim)} | {f"y{i + 1}": y[i] for i in range(m.dim)}
        env_j = {k: jets.jet_constant(spec, v) for k, v in env_f.items()}
        assert eval_jet(m.expression, env_j).value == eval_float(m.expression, env_f)


# --- random trees -----------------------------------------------------------------

leaves = st.one_of(
    st.floats(min_value=0, max_value=1e6, allow_nan=False).map(Num),
    st.sampled_from(sorted(M2)).map(Var),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from(mexpr.FUNCTIONS), children).map(lambda t: Call(*t)),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_round_trip_random(tree):
    assert parse(to_text(tree), M2) == tree
