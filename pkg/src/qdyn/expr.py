"""Coefficient expressions and time-dependent operators.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | number 'j' | ident | ident '(' expr ')' | '(' expr ')'

``^`` is right-associative and binds tighter than a leading minus, so
``-2^2 == -4`` and ``2^-1 == 0.5``. Identifiers are ``t``, ``pi`` or keys
of the argument map. Functions: sin cos tan exp log sqrt abs.

Expressions are interpreted, not compiled to native code. Binding an
expression to concrete arguments folds every ``t``-free subtree into a
constant and produces a closure ``f(t) -> complex``; bound closures are
memoized in an :class:`ExpressionCache`.
"""
from __future__ import annotations

import cmath
import math
import numbers
from dataclasses import dataclass

from .errors import ExpressionEvaluationError, ExpressionSyntaxError, StructuralError
from .qobj import QuantumObject, _same_dims

__all__ = [
    "Number", "Name", "UnaryOp", "BinOp", "Call",
    "parse_expression", "eval_coeff", "to_source",
    "ExpressionCache", "clear_cache",
    "TimeDependentOperator", "build_td_operator", "evaluate_operator",
]

FUNCTIONS = {
    "sin": cmath.sin,
    "cos": cmath.cos,
    "tan": cmath.tan,
    "exp": cmath.exp,
    "log": cmath.log,
    "sqrt": cmath.sqrt,
    "abs": lambda z: complex(abs(z)),
}


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Number:
    value: complex


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


# ---------------------------------------------------------------------------
# tokenizer / parser


def _tokenize(src):
    tokens = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        start = i
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            while i < n and (src[i].isdigit() or src[i] == "."):
                i += 1
            if i < n and src[i] in "eE":
                j = i + 1
                if j < n and src[j] in "+-":
                    j += 1
                if j < n and src[j].isdigit():
                    i = j
                    while i < n and src[i].isdigit():
                        i += 1
            text = src[start:i]
            try:
                value = float(text)
            except ValueError:
                raise ExpressionSyntaxError(f"malformed number {text!r}", start) from None
            if i < n and src[i] in "jJ" and not (i + 1 < n and (src[i + 1].isalnum() or src[i + 1] == "_")):
                i += 1
                tokens.append(("num", complex(0.0, value), start))
            else:
                tokens.append(("num", complex(value, 0.0), start))
        elif ch.isalpha() or ch == "_":
            while i < n and (src[i].isalnum() or src[i] == "_"):
                i += 1
            tokens.append(("ident", src[start:i], start))
        elif src.startswith("**", i):
            tokens.append(("op", "^", start))
            i += 2
        elif ch in "+-*/^()":
            tokens.append(("op", ch, start))
            i += 1
        else:
            raise ExpressionSyntaxError(f"unexpected character {ch!r}", start)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, src):
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if kind != "op" or val != value:
            what = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {what}", off)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return UnaryOp("-", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Number(val)
        if kind == "ident":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise ExpressionSyntaxError(f"unknown function {val!r}", off)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            return Name(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {what}", off)


def parse_expression(src):
    """Parse a coefficient string into an expression tree."""
    if not isinstance(src, str) or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# printing / evaluation

def to_source(node):
    """Fully parenthesized source text that reparses to the same tree."""
    if isinstance(node, Number):
        z = node.value
        if z.imag == 0:
            return "(" + repr(z.real) + ")"
        return "(" + repr(z.imag) + "j)"
    if isinstance(node, Name):
        return node.id
    if isinstance(node, UnaryOp):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def _pow(a, b):
    if a.imag == 0 and b.imag == 0 and (a.real >= 0 or float(b.real).is_integer()):
        if a.real == 0 and b.real < 0:
            raise ZeroDivisionError("zero to a negative power")
        return complex(a.real ** b.real)
    return a ** b


def _binop(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return _pow(a, b)


def _lookup(name, t, args):
    if name == "t":
        return complex(t)
    if name == "pi":
        return complex(math.pi)
    if args is not None and name in args:
        return complex(args[name])
    raise ExpressionEvaluationError(f"unbound identifier {name!r}", name)


def eval_coeff(expr, t, args=None):
    """Evaluate an expression tree (or source string) at time ``t``."""
    if isinstance(expr, str):
        expr = parse_expression(expr)
    try:
        return _eval(expr, t, args)
    except ZeroDivisionError as exc:
        raise ExpressionEvaluationError(f"division by zero: {exc}") from None


def _eval(node, t, args):
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Name):
        return _lookup(node.id, t, args)
    if isinstance(node, UnaryOp):
        return -_eval(node.operand, t, args)
    if isinstance(node, BinOp):
        return _binop(node.op, _eval(node.left, t, args), _eval(node.right, t, args))
    return complex(FUNCTIONS[node.func](_eval(node.arg, t, args)))


def _depends_on_t(node):
    if isinstance(node, Name):
        return node.id == "t"
    if isinstance(node, UnaryOp):
        return _depends_on_t(node.operand)
    if isinstance(node, BinOp):
        return _depends_on_t(node.left) or _depends_on_t(node.right)
    if isinstance(node, Call):
        return _depends_on_t(node.arg)
    return False


def _compile(node, args):
    """Closure ``f(t)`` with t-free subtrees folded to constants."""
    if not _depends_on_t(node):
        value = eval_coeff(node, 0.0, args)
        return lambda t: value
    if isinstance(node, Name):
        return lambda t: complex(t)
    if isinstance(node, UnaryOp):
        f = _compile(node.operand, args)
        return lambda t: -f(t)
    if isinstance(node, Call):
        g = FUNCTIONS[node.func]
        f = _compile(node.arg, args)
        return lambda t: complex(g(f(t)))
    fl, fr = _compile(node.left, args), _compile(node.right, args)
    op = node.op
    if op == "+":
        return lambda t: fl(t) + fr(t)
    if op == "-":
        return lambda t: fl(t) - fr(t)
    if op == "*":
        return lambda t: fl(t) * fr(t)
    if op == "/":
        return lambda t: fl(t) / fr(t)
    return lambda t: _pow(fl(t), fr(t))


def _check_bound(node, args):
    if isinstance(node, Name):
        _lookup(node.id, 0.0, args)
    elif isinstance(node, UnaryOp):
        _check_bound(node.operand, args)
    elif isinstance(node, BinOp):
        _check_bound(node.left, args)
        _check_bound(node.right, args)
    elif isinstance(node, Call):
        _check_bound(node.arg, args)


def _freeze_args(args):
    if not args:
        return ()
    return tuple(sorted((k, complex(v)) for k, v in args.items() if isinstance(v, numbers.Number)))


class ExpressionCache:
    """Memo of bound expression closures keyed by (source, numeric args)."""

    def __init__(self):
        self._store = {}

    def __len__(self):
        return len(self._store)

    def bind(self, src, args):
        key = (src, _freeze_args(args))
        hit = self._store.get(key)
        if hit is None:
            tree = parse_expression(src)
            _check_bound(tree, args)
            hit = (tree, _compile(tree, args))
            self._store[key] = hit
        return hit

    def clear(self):
        self._store.clear()


_default_cache = ExpressionCache()


def clear_cache(cache=None):
    """Drop memoized compiled expressions. Idempotent."""
    (cache if cache is not None else _default_cache).clear()


# ---------------------------------------------------------------------------
# time-dependent operators


class Coefficient:
    """Callable time coefficient: a bound string expression or a user callback."""

    __slots__ = ("source", "tree", "_f")

    def __init__(self, source, tree, f):
        self.source = source
        self.tree = tree
        self._f = f

    def __call__(self, t):
        return self._f(t)

    def __repr__(self):
        return f"Coefficient({self.source!r})"


@dataclass(frozen=True)
class TimeDependentOperator:
    """Ordered sum of ``coeff(t) * op`` terms; ``coeff`` None means constant 1."""

    terms: tuple
    args: dict

    @property
    def dims(self):
        return self.terms[0][0].dims

    @property
    def shape(self):
        return self.terms[0][0].shape

    @property
    def is_constant(self):
        return all(c is None for _, c in self.terms)

    def constant_part(self):
        ops = [op for op, c in self.terms if c is None]
        if not ops:
            return None
        out = ops[0]
        for op in ops[1:]:
            out = out + op
        return out

    def varying_terms(self):
        return [(op, c) for op, c in self.terms if c is not None]

    def __call__(self, t):
        return evaluate_operator(self, t)


def _make_coeff(c, args, cache):
    if isinstance(c, str):
        tree, f = cache.bind(c, args)
        return Coefficient(c, tree, f)
    if callable(c):
        a = dict(args or {})
        return Coefficient(getattr(c, "__name__", "callback"), None, lambda t, c=c: complex(c(t, a)))
    raise StructuralError(f"coefficient must be a string or callable, got {type(c).__name__}")


def build_td_operator(spec, args=None, cache=None):
    """Normalize a Hamiltonian / collapse-operator specification.

    ``spec`` is a :class:`QuantumObject`, an existing
    :class:`TimeDependentOperator`, or a list whose entries are operators or
    ``[operator, coefficient]`` pairs; a coefficient is an expression string
    or a callback ``f(t, args)``. Strings are parsed here, so syntax errors
    and unbound names surface before any integration starts.
    """
    cache = cache if cache is not None else _default_cache
    args = dict(args or {})
    if isinstance(spec, TimeDependentOperator):
        if not args or args == spec.args:
            return spec
        spec = [op if c is None else [op, c.source if c.tree is not None else c] for op, c in spec.terms]
    if isinstance(spec, QuantumObject):
        spec = [spec]
    if not isinstance(spec, (list, tuple)) or not spec:
        raise StructuralError("operator specification must be a QuantumObject or a nonempty list")
    terms = []
    for entry in spec:
        if isinstance(entry, QuantumObject):
            terms.append((entry, None))
        elif isinstance(entry, (list, tuple)) and len(entry) == 2 and isinstance(entry[0], QuantumObject):
            op, c = entry
            if isinstance(c, Coefficient):
                terms.append((op, c))
            else:
                terms.append((op, _make_coeff(c, args, cache)))
        else:
            raise StructuralError(f"cannot interpret operator list entry {entry!r}")
    first = terms[0][0]
    for op, _ in terms[1:]:
        if not _same_dims(op._dims, first._dims) or op.shape != first.shape:
            raise StructuralError(f"term dims {op.dims} differ from {first.dims}")
    return TimeDependentOperator(tuple(terms), args)


def evaluate_operator(tdop, t):
    """Sum of all terms at time ``t`` as a QuantumObject."""
    out = tdop.constant_part()
    for op, c in tdop.varying_terms():
        term = c(t) * op
        out = term if out is None else out + term
    return out

