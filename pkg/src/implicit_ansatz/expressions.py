"""A small expression language for smooth user-supplied functions.

Grammar::

    expr    := expr ('+' | '-') expr | expr ('*' | '/') expr
             | '-' expr | expr '^' expr | atom
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` binds tightest and is right-associative; unary minus sits between
``^`` and ``*``, so ``-x^2`` is ``-(x^2)``.  Callable names are ``sin``,
``cos``, ``exp``, ``log`` and ``sqrt``.

Parsed trees evaluate on plain floats or on :class:`~implicit_ansatz.jets.Jet2`
values through the same compiled closure, and can be differentiated
symbolically (used where constraint systems contain derivatives of the
user's functions).
"""

import math
import re
from dataclasses import dataclass

from .errors import DomainViolation, ExpressionError, UnknownFunction, UnknownIdentifier
from .jets import Jet2, jet_chain

__all__ = [
    "Num",
    "Var",
    "Neg",
    "Bin",
    "Call",
    "parse",
    "to_source",
    "diff",
    "substitute",
    "free_names",
    "SmoothMap",
    "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)

_BINARY = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY = 25


def _tokenize(source):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", None, len(source)))
    return tokens


class _Parser:
    def __init__(self, source, params):
        self.tokens = _tokenize(source)
        self.i = 0
        self.params = params

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, value, pos = self.advance()
        if value != text:
            found = "end of input" if kind == "end" else repr(value)
            raise ExpressionError(f"expected {text!r}, found {found}", pos)

    def expression(self, rbp=0):
        left = self.prefix()
        while True:
            kind, value, _ = self.peek()
            if kind != "op" or value not in _BINARY:
                break
            lbp = _BINARY[value]
            if lbp <= rbp:
                break
            self.advance()
            # ^ is right-associative
            right = self.expression(lbp - 1 if value == "^" else lbp)
            left = Bin(value, left, right)
        return left

    def prefix(self):
        kind, value, pos = self.advance()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if self.peek()[1] == "(":
                if value not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {value!r}", pos)
                self.advance()
                arg = self.expression()
                self.expect(")")
                return Call(value, arg)
            if self.params is not None and value not in self.params:
                raise UnknownIdentifier(f"unknown identifier {value!r}", pos)
            return Var(value)
        if value == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        if value == "-":
            return Neg(self.expression(_UNARY))
        found = "end of input" if kind == "end" else repr(value)
        raise ExpressionError(f"expected an operand, found {found}", pos)


def parse(source, params=None):
    """Parse ``source`` into an expression tree.

    When ``params`` is given every free identifier must be one of them.
    """
    if not source or not source.strip():
        raise ExpressionError("empty expression", 0)
    parser = _Parser(source, None if params is None else tuple(params))
    tree = parser.expression()
    kind, value, pos = parser.peek()
    if kind != "end":
        raise ExpressionError(f"unexpected token {value!r}", pos)
    return tree


# ---------------------------------------------------------------- printing


def _prec(node):
    if isinstance(node, Bin):
        return _BINARY[node.op]
    if isinstance(node, Neg):
        return _UNARY
    if isinstance(node, Num) and node.value < 0:
        return _UNARY
    return 100


def _wrap(node, needs):
    text = to_source(node)
    return f"({text})" if needs else text


def to_source(node):
    """Render a tree so that ``parse(to_source(t)) == t`` for parsed trees."""
    if isinstance(node, Num):
        v = node.value
        text = str(int(abs(v))) if v.is_integer() and abs(v) < 1e15 else repr(abs(v))
        return "-" + text if v < 0 else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({to_source(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, _prec(node.arg) <= _UNARY)
    p = _BINARY[node.op]
    if node.op == "^":
        left = _wrap(node.left, _prec(node.left) <= p)
        right = _wrap(node.right, _prec(node.right) < p)
        return f"{left}^{right}"
    left = _wrap(node.left, _prec(node.left) < p)
    right = _wrap(node.right, _prec(node.right) <= p)
    return f"{left} {node.op} {right}"


# ---------------------------------------------------------------- evaluation


def _float_fn(name, x):
    if name == "sin":
        return math.sin(x)
    if name == "cos":
        return math.cos(x)
    if name == "exp":
        return math.exp(x) if x < 709.0 else math.inf
    if name == "log":
        if x <= 0.0:
            raise DomainViolation(f"log of non-positive value {x!r}")
        return math.log(x)
    if x < 0.0:
        raise DomainViolation(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


def _apply(name, x):
    if isinstance(x, Jet2):
        return jet_chain(name, x)
    return _float_fn(name, x)


def _int_exponent(node):
    if isinstance(node, Num) and node.value.is_integer():
        return int(node.value)
    if isinstance(node, Neg) and isinstance(node.arg, Num) and node.arg.value.is_integer():
        return -int(node.arg.value)
    return None


def _ipow(x, n):
    if n == 0:
        return 1.0
    r = x
    for _ in range(abs(n) - 1):
        r = r * x
    if n < 0:
        if not isinstance(r, Jet2) and r == 0.0:
            raise DomainViolation("negative power of zero")
        return 1.0 / r
    return r


def _compile(node, index):
    if isinstance(node, Num):
        v = node.value
        return lambda a: v
    if isinstance(node, Var):
        i = index[node.name]
        return lambda a: a[i]
    if isinstance(node, Neg):
        f = _compile(node.arg, index)
        return lambda a: -f(a)
    if isinstance(node, Call):
        f = _compile(node.arg, index)
        name = node.fn
        return lambda a: _apply(name, f(a))
    lf = _compile(node.left, index)
    if node.op == "^":
        n = _int_exponent(node.right)
        if n is not None:
            return lambda a: _ipow(lf(a), n)
        rf = _compile(node.right, index)

        def power(a):
            base = lf(a)
            value = base.value if isinstance(base, Jet2) else base
            if value <= 0.0:
                raise DomainViolation(f"non-integer power of non-positive base {value!r}")
            return _apply("exp", _apply("log", base) * rf(a))

        return power
    rf = _compile(node.right, index)
    op = node.op
    if op == "+":
        return lambda a: lf(a) + rf(a)
    if op == "-":
        return lambda a: lf(a) - rf(a)
    if op == "*":
        return lambda a: lf(a) * rf(a)

    def divide(a):
        den = rf(a)
        if not isinstance(den, Jet2) and den == 0.0:
            raise DomainViolation("division by zero")
        return lf(a) / den

    return divide


# ---------------------------------------------------------------- symbolic tools

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _is(node, v):
    return isinstance(node, Num) and node.value == v


def _add(a, b):
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Bin("+", a, b)


def _sub(a, b):
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return _neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return Bin("-", a, b)


def _neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a, b):
    if _is(a, 0.0) or _is(b, 0.0):
        return _ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Bin("*", a, b)


def _div(a, b):
    if _is(a, 0.0):
        return _ZERO
    if _is(b, 1.0):
        return a
    return Bin("/", a, b)


def free_names(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg, Call)):
        return free_names(node.arg)
    return free_names(node.left) | free_names(node.right)


def diff(node, name):
    """Symbolic partial derivative of ``node`` with respect to ``name``."""
    if name not in free_names(node):
        return _ZERO
    if isinstance(node, Var):
        return _ONE
    if isinstance(node, Neg):
        return _neg(diff(node.arg, name))
    if isinstance(node, Call):
        a = node.arg
        da = diff(a, name)
        if node.fn == "sin":
            return _mul(Call("cos", a), da)
        if node.fn == "cos":
            return _neg(_mul(Call("sin", a), da))
        if node.fn == "exp":
            return _mul(node, da)
        if node.fn == "log":
            return _div(da, a)
        return _div(da, _mul(Num(2.0), node))
    a, b = node.left, node.right
    if node.op == "+":
        return _add(diff(a, name), diff(b, name))
    if node.op == "-":
        return _sub(diff(a, name), diff(b, name))
    if node.op == "*":
        return _add(_mul(diff(a, name), b), _mul(a, diff(b, name)))
    if node.op == "/":
        return _sub(_div(diff(a, name), b), _div(_mul(a, diff(b, name)), Bin("*", b, b)))
    # power
    n = _int_exponent(b)
    if n is not None:
        if n == 0:
            return _ZERO
        if n == 1:
            lowered = _ONE
        elif n == 2:
            lowered = a
        else:
            lowered = Bin("^", a, Num(float(n - 1)) if n - 1 >= 0 else Neg(Num(float(1 - n))))
        return _mul(_mul(Num(float(n)), lowered), diff(a, name))
    da, db = diff(a, name), diff(b, name)
    return _mul(node, _add(_mul(db, Call("log", a)), _div(_mul(b, da), a)))


def substitute(node, mapping):
    """Replace variables by trees according to ``mapping``."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, mapping))
    if isinstance(node, Call):
        return Call(node.fn, substitute(node.arg, mapping))
    return Bin(node.op, substitute(node.left, mapping), substitute(node.right, mapping))


# ---------------------------------------------------------------- SmoothMap


class SmoothMap:
    """A differentiable scalar function of named arguments.

    Calling the map with floats gives a float; calling it with
    :class:`Jet2` arguments (mixed with floats, treated as constants) gives
    a jet of the composite.
    """

    def __init__(self, params, body):
        self.params = tuple(params)
        self.body = body
        unknown = free_names(body) - set(self.params)
        if unknown:
            raise UnknownIdentifier(f"identifiers {sorted(unknown)} are not parameters {list(self.params)}")
        self._fn = _compile(body, {p: i for i, p in enumerate(self.params)})

    @classmethod
    def parse(cls, source, params):
        return cls(params, parse(source, params))

    @classmethod
    def constant(cls, value, params):
        return cls(params, Num(float(value)))

    def __call__(self, *args):
        if len(args) != len(self.params):
            raise ValueError(f"expected {len(self.params)} arguments, got {len(args)}")
        dims = {a.dim for a in args if isinstance(a, Jet2)}
        if len(dims) > 1:
            raise ValueError(f"jet arguments of differing dimensions {sorted(dims)}")
        return self._fn(args)

    def diff(self, name):
        if name not in self.params:
            raise UnknownIdentifier(f"{name!r} is not a parameter of this map")
        return SmoothMap(self.params, diff(self.body, name))

    def substitute(self, mapping, params):
        """Substitute trees (or SmoothMap bodies / source strings) and re-bind parameters."""
        trees = {}
        for k, v in mapping.items():
            if isinstance(v, SmoothMap):
                v = v.body
            elif isinstance(v, str):
                v = parse(v, params)
            elif isinstance(v, (int, float)):
                v = Num(float(v))
            trees[k] = v
        return SmoothMap(params, substitute(self.body, trees))

    def rename(self, params):
        """Same body with positional parameters renamed."""
        if len(params) != len(self.params):
            raise ValueError("rename needs one new name per parameter")
        return self.substitute({old: Var(new) for old, new in zip(self.params, params)}, params)

    def depends_on(self, name):
        return name in free_names(self.body)

    def is_constant_zero(self):
        return _is(self.body, 0.0)

    def to_source(self):
        return to_source(self.body)

    def __repr__(self):
        return f"SmoothMap({list(self.params)}, {self.to_source()!r})"

    def __eq__(self, other):
        return isinstance(other, SmoothMap) and self.params == other.params and self.body == other.body

    def __hash__(self):
        return hash((self.params, self.body))
