"""Complex-valued expression trees with Wirtinger-calculus differentiation.

Expressions are immutable ASTs over variables z1..zn, their conjugates, and a
small set of entire functions (exp, sin, cos, integer powers).  d_z and d_bar
differentiate symbolically, treating z and conj(z) as independent; conjugation
swaps the two derivative kinds.  Construction applies constant folding and
0/1 absorption only, so derivative stacks stay compact without any attempt at
canonical form.
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExprSyntaxError, NumericsError, ValidationError


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()

    @property
    def max_var(self) -> int:
        return _max_var(self)


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: complex


@dataclass(frozen=True, slots=True)
class Var(Expr):
    index: int


@dataclass(frozen=True, slots=True)
class Conj(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class Add(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True, slots=True)
class Sub(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True, slots=True)
class Div(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, slots=True)
class Call(Expr):
    fn: str  # "exp" | "sin" | "cos"
    arg: Expr


ZERO = Const(0j)
ONE = Const(1 + 0j)


def const(value) -> Expr:
    return Const(complex(value))


def var(index: int) -> Expr:
    if index < 1:
        raise ValidationError(f"variable index must be >= 1, got {index}")
    return Var(index)


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(a, 0j):
        return b
    if _is_const(b, 0j):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0j):
        return a
    if _is_const(a, 0j):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is_const(a, 0j) or _is_const(b, 0j):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 0:
            raise NumericsError("division by constant zero")
        if isinstance(a, Const):
            return Const(a.value / b.value)
        if b.value == 1:
            return a
    if _is_const(a, 0j):
        return ZERO
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def conj(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(a.value.conjugate())
    if isinstance(a, Conj):
        return a.arg
    return Conj(a)


def pow_(a: Expr, k: int) -> Expr:
    if not isinstance(k, int):
        raise ValidationError(f"exponent must be an integer, got {k!r}")
    if k == 0:
        return ONE
    if k == 1:
        return a
    if isinstance(a, Const):
        return Const(a.value**k)
    return Pow(a, k)


_FUNCTIONS = {"exp": (np.exp, cmath.exp), "sin": (np.sin, cmath.sin), "cos": (np.cos, cmath.cos)}


def call(fn: str, a: Expr) -> Expr:
    if fn not in _FUNCTIONS:
        raise ValidationError(f"unknown function {fn!r}")
    if isinstance(a, Const):
        return Const(_FUNCTIONS[fn][1](a.value))
    return Call(fn, a)


def _max_var(e: Expr) -> int:
    match e:
        case Const():
            return 0
        case Var(index=j):
            return j
        case Conj(arg=a) | Neg(arg=a) | Call(arg=a) | Pow(base=a):
            return _max_var(a)
        case Add(lhs=a, rhs=b) | Sub(lhs=a, rhs=b) | Mul(lhs=a, rhs=b) | Div(lhs=a, rhs=b):
            return max(_max_var(a), _max_var(b))
    raise TypeError(f"not an expression node: {e!r}")


def eval_expr(e: Expr, point):
    """Evaluate at a point (sequence of complex scalars and/or numpy arrays).

    Array entries broadcast element-wise, so a single tree evaluation can
    cover a whole quadrature grid.
    """
    match e:
        case Const(value=v):
            return v
        case Var(index=j):
            return point[j - 1]
        case Conj(arg=a):
            return np.conjugate(eval_expr(a, point))
        case Neg(arg=a):
            return -eval_expr(a, point)
        case Add(lhs=a, rhs=b):
            return eval_expr(a, point) + eval_expr(b, point)
        case Sub(lhs=a, rhs=b):
            return eval_expr(a, point) - eval_expr(b, point)
        case Mul(lhs=a, rhs=b):
            return eval_expr(a, point) * eval_expr(b, point)
        case Div(lhs=a, rhs=b):
            num = eval_expr(a, point)
            den = eval_expr(b, point)
            if np.any(den == 0):
                raise NumericsError("division by zero while evaluating expression")
            return num / den
        case Pow(base=a, exponent=k):
            base = eval_expr(a, point)
            if k < 0 and np.any(base == 0):
                raise NumericsError("zero raised to a negative power")
            return base**k
        case Call(fn=f, arg=a):
            return _FUNCTIONS[f][0](eval_expr(a, point))
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, point) -> complex:
    """Scalar evaluation with an arity check (the array path skips it)."""
    if len(point) < e.max_var:
        raise ValidationError(
            f"expression uses z{e.max_var} but the point has {len(point)} coordinates"
        )
    return complex(eval_expr(e, tuple(complex(p) for p in point)))


def d_z(e: Expr, j: int) -> Expr:
    """Holomorphic Wirtinger derivative with respect to z_j."""
    match e:
        case Const():
            return ZERO
        case Var(index=i):
            return ONE if i == j else ZERO
        case Conj(arg=a):
            return conj(d_bar(a, j))
        case Neg(arg=a):
            return neg(d_z(a, j))
        case Add(lhs=a, rhs=b):
            return add(d_z(a, j), d_z(b, j))
        case Sub(lhs=a, rhs=b):
            return sub(d_z(a, j), d_z(b, j))
        case Mul(lhs=a, rhs=b):
            return add(mul(d_z(a, j), b), mul(a, d_z(b, j)))
        case Div(lhs=a, rhs=b):
            return div(sub(mul(d_z(a, j), b), mul(a, d_z(b, j))), mul(b, b))
        case Pow(base=a, exponent=k):
            return mul(mul(const(k), pow_(a, k - 1)), d_z(a, j))
        case Call(fn=f, arg=a):
            inner = d_z(a, j)
            if f == "exp":
                return mul(call("exp", a), inner)
            if f == "sin":
                return mul(call("cos", a), inner)
            return neg(mul(call("sin", a), inner))
    raise TypeError(f"not an expression node: {e!r}")


def d_bar(e: Expr, j: int) -> Expr:
    """Antiholomorphic Wirtinger derivative with respect to conj(z_j)."""
    match e:
        case Const():
            return ZERO
        case Var():
            return ZERO
        case Conj(arg=a):
            return conj(d_z(a, j))
        case Neg(arg=a):
            return neg(d_bar(a, j))
        case Add(lhs=a, rhs=b):
            return add(d_bar(a, j), d_bar(b, j))
        case Sub(lhs=a, rhs=b):
            return sub(d_bar(a, j), d_bar(b, j))
        case Mul(lhs=a, rhs=b):
            return add(mul(d_bar(a, j), b), mul(a, d_bar(b, j)))
        case Div(lhs=a, rhs=b):
            return div(sub(mul(d_bar(a, j), b), mul(a, d_bar(b, j))), mul(b, b))
        case Pow(base=a, exponent=k):
            return mul(mul(const(k), pow_(a, k - 1)), d_bar(a, j))
        case Call(fn=f, arg=a):
            inner = d_bar(a, j)
            if f == "exp":
                return mul(call("exp", a), inner)
            if f == "sin":
                return mul(call("cos", a), inner)
            return neg(mul(call("sin", a), inner))
    raise TypeError(f"not an expression node: {e!r}")


# --- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            at = len(text) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {text[at]!r}", at)
        if m.lastgroup == "num":
            raw = m.group("num")
            if raw.endswith("i"):
                value = complex(0.0, float(raw[:-1]))
            else:
                value = complex(float(raw))
            tokens.append(("num", value, m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            op = "^" if m.group("op") == "**" else m.group("op")
            tokens.append(("op", op, m.start("op")))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


_VAR_RE = re.compile(r"^z([1-9])$")


class _Parser:
    """Recursive-descent parser.

    Precedence, tightest first: unary minus, '^' (integer exponent),
    '*'/'/', '+'/'-'.  Function-call syntax covers conj/exp/sin/cos and
    pow(expr, int); 'i' is the imaginary unit; literals like 3i are complex.
    """

    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, value, at = self.next()
        if kind != "op" or value != op:
            raise ExprSyntaxError(f"expected {op!r}", at)

    def parse(self) -> Expr:
        e = self.expr()
        kind, _, at = self.peek()
        if kind != "end":
            raise ExprSyntaxError("unexpected trailing input", at)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                rhs = self.term()
                e = add(e, rhs) if value == "+" else sub(e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.power()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next()
                rhs = self.power()
                e = mul(e, rhs) if value == "*" else div(e, rhs)
            else:
                return e

    def power(self) -> Expr:
        e = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == "^":
                self.next()
                e = pow_(e, self.integer())
            else:
                return e

    def unary(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            return neg(self.unary())
        return self.atom()

    def integer(self) -> int:
        sign = 1
        kind, value, at = self.next()
        if kind == "op" and value == "-":
            sign = -1
            kind, value, at = self.next()
        if kind != "num" or value.imag != 0 or value.real != int(value.real):
            raise ExprSyntaxError("integer exponent required", at)
        return sign * int(value.real)

    def atom(self) -> Expr:
        kind, value, at = self.next()
        if kind == "num":
            return Const(value)
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "name":
            if value == "i":
                return Const(1j)
            m = _VAR_RE.match(value)
            if m:
                return Var(int(m.group(1)))
            if value == "conj":
                self.expect_op("(")
                e = self.expr()
                self.expect_op(")")
                return conj(e)
            if value == "pow":
                self.expect_op("(")
                e = self.expr()
                self.expect_op(",")
                k = self.integer()
                self.expect_op(")")
                return pow_(e, k)
            if value in _FUNCTIONS:
                self.expect_op("(")
                e = self.expr()
                self.expect_op(")")
                return call(value, e)
            raise ExprSyntaxError(f"unknown name {value!r}", at)
        raise ExprSyntaxError("expected a value", at)


def parse(text: str, arity: int) -> Expr:
    """Parse expression text over variables z1..z<arity>."""
    if arity < 1:
        raise ValidationError(f"arity must be >= 1, got {arity}")
    e = _Parser(text).parse()
    if e.max_var > arity:
        raise ValidationError(
            f"expression uses z{e.max_var} but the declared arity is {arity}"
        )
    return e
