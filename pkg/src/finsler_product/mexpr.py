"""A small expression language for metric squares and product functions.

Grammar (lowest to highest precedence, all binary operators left-associative)::

    expr    := term  (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' ['-'] atom)*
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

NUMBER is a decimal literal with an optional ``e``/``E`` exponent.  NAME is
a declared variable (``x1..xm``, ``y1..ym`` or ``s``, ``t``) or one of the
functions ``sqrt sin cos exp log``.  There is no ``abs`` and nothing
piecewise; write ``sqrt(u^2)`` where a modulus is wanted.

A non-integer or non-constant exponent ``b^e`` is evaluated as
``exp(e*log(b))``; integer literal exponents use repeated multiplication.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from . import jets
from .errors import DomainError, FinslerError
from .jets import Jet

__all__ = [
    "Expr", "Num", "Var", "Neg", "BinOp", "Call",
    "ExprSyntaxError", "UnknownIdentifier", "ArityError", "UnboundVariable",
    "parse", "to_text", "variables", "eval_jet", "eval_float", "eval_mp",
    "metric_variables", "PRODUCT_VARIABLES",
]

FUNCTIONS = ("sqrt", "sin", "cos", "exp", "log")
PRODUCT_VARIABLES = frozenset({"s", "t"})


class ExprSyntaxError(FinslerError, SyntaxError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifier(FinslerError, NameError):
    pass


class ArityError(FinslerError, TypeError):
    pass


class UnboundVariable(FinslerError, NameError):
    pass


class Expr:
    """Base class of AST nodes."""

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


def metric_variables(dim: int) -> frozenset[str]:
    return frozenset([f"x{i}" for i in range(1, dim + 1)] + [f"y{i}" for i in range(1, dim + 1)])


# --- tokenizer / parser ----------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", n))
    return out


class _Parser:
    def __init__(self, text: str, names: frozenset[str]):
        self.toks = _tokenize(text)
        self.i = 0
        self.names = names

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return e

    def expr(self):
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        left = self.atom()
        while self.peek()[:2] == ("op", "^"):
            self.take()
            if self.peek()[:2] == ("op", "-"):
                self.take()
                right = Neg(self.atom())
            else:
                right = self.atom()
            left = BinOp("^", left, right)
        return left

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                if self.peek()[:2] != ("op", "("):
                    raise ArityError(f"function {val} takes exactly one argument (offset {pos})")
                self.take()
                if self.peek()[:2] == ("op", ")"):
                    raise ArityError(f"function {val} takes exactly one argument (offset {pos})")
                arg = self.expr()
                if self.peek()[:2] == ("op", ","):
                    raise ArityError(f"function {val} takes exactly one argument (offset {pos})")
                self.expect(")")
                return Call(val, arg)
            if val not in self.names:
                raise UnknownIdentifier(f"unknown identifier {val!r} at offset {pos}")
            return Var(val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {val!r}", pos)


def parse(text: str, context: Iterable[str]) -> Expr:
    """Parse ``text`` with the variable names in ``context`` in scope."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, frozenset(context)).parse()


# --- printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _num_text(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg) or (isinstance(e, Num) and e.value < 0):
        return 3
    return 5


def to_text(e: Expr) -> str:
    """Print with the fewest parentheses that re-parse to the same tree."""
    if isinstance(e, Num):
        return _num_text(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        return f"-({inner})" if _prec(e.arg) < 3 else f"-{inner}"
    p = _PREC[e.op]
    lt, rt = to_text(e.left), to_text(e.right)
    if _prec(e.left) < p:
        lt = f"({lt})"
    if e.op == "^":
        # left-assoc: a nested power on the left needs no parentheses
        lt = to_text(e.left)
        if _prec(e.left) < 5 and not (isinstance(e.left, BinOp) and e.left.op == "^"):
            lt = f"({lt})"
        # exponent grammar admits only an atom or '-' atom
        if not (_prec(e.right) == 5 or (isinstance(e.right, Neg) and _prec(e.right.arg) == 5)):
            rt = f"({rt})"
        sep = "^"
    else:
        if _prec(e.right) <= p:
            rt = f"({rt})"
        sep = f" {e.op} "
    return f"{lt}{sep}{rt}"


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Call)):
        return variables(e.arg)
    return variables(e.left) | variables(e.right)


# --- evaluation -------------------------------------------------------------

def _int_exponent(e: Expr):
    if isinstance(e, Num) and e.value.is_integer():
        return int(e.value)
    if isinstance(e, Neg) and isinstance(e.arg, Num) and e.arg.value.is_integer():
        return -int(e.arg.value)
    return None


def _ipow(b, n: int, one):
    if n < 0:
        return one / _ipow(b, -n, one)
    result = None
    while n:
        if n & 1:
            result = b if result is None else result * b
        n >>= 1
        if n:
            b = b * b
    return one if result is None else result


def _float_sqrt(v):
    if v < 0:
        raise DomainError(f"sqrt of negative value {v!r}")
    return math.sqrt(v)


def _float_log(v):
    if v <= 0:
        raise DomainError(f"log of non-positive value {v!r}")
    return math.log(v)


_FLOAT_FUNCS = {"sqrt": _float_sqrt, "sin": math.sin, "cos": math.cos, "exp": math.exp, "log": _float_log}


def _mp_funcs():
    import mpmath

    def msqrt(v):
        if v < 0:
            raise DomainError(f"sqrt of negative value {v}")
        return mpmath.sqrt(v)

    def mlog(v):
        if v <= 0:
            raise DomainError(f"log of non-positive value {v}")
        return mpmath.log(v)

    return {"sqrt": msqrt, "sin": mpmath.sin, "cos": mpmath.cos, "exp": mpmath.exp, "log": mlog}


def _evaluate(e: Expr, env: Mapping, funcs: Mapping, one):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariable(f"variable {e.name!r} is not bound") from None
    try:
        if isinstance(e, Neg):
            return -_evaluate(e.arg, env, funcs, one)
        if isinstance(e, Call):
            return funcs[e.func](_evaluate(e.arg, env, funcs, one))
        a = _evaluate(e.left, env, funcs, one)
        if e.op == "^":
            n = _int_exponent(e.right)
            if n is not None:
                if n < 0 and not isinstance(a, Jet) and a == 0:
                    raise DomainError("negative power of zero")
                return _ipow(a, n, one)
            r = _evaluate(e.right, env, funcs, one)
            return funcs["exp"](r * funcs["log"](a))
        b = _evaluate(e.right, env, funcs, one)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if not isinstance(b, Jet) and b == 0:
            raise DomainError("division by zero")
        return a / b
    except DomainError as err:
        if err.expr is None:
            raise DomainError(str(err), to_text(e)) from None
        raise


_JET_FUNCS = {"sqrt": jets.sqrt, "sin": jets.sin, "cos": jets.cos, "exp": jets.exp, "log": jets.log}


def eval_jet(e: Expr, bindings: Mapping[str, Jet]) -> Jet:
    """Evaluate ``e`` in jet arithmetic; all bound jets must share one spec."""
    missing = variables(e) - set(bindings)
    if missing:
        raise UnboundVariable(f"unbound variables: {sorted(missing)}")
    specs = {j.spec for j in bindings.values()}
    if len(specs) != 1:
        raise ValueError("bindings must share a single DerivSpec")
    spec = specs.pop()
    out = _evaluate(e, bindings, _JET_FUNCS, jets.jet_constant(spec, 1.0))
    if not isinstance(out, Jet):
        out = jets.jet_constant(spec, float(out))
    return out


def eval_float(e: Expr, bindings: Mapping[str, float]) -> float:
    return float(_evaluate(e, bindings, _FLOAT_FUNCS, 1.0))


def eval_mp(e: Expr, bindings: Mapping):
    """Evaluate with :mod:`mpmath` numbers at the current working precision."""
    import mpmath

    env = {k: mpmath.mpf(v) for k, v in bindings.items()}
    return _evaluate(e, env, _mp_funcs(), mpmath.mpf(1))
