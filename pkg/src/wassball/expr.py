"""Objective expression language: tokenizer, recursive-descent parser, printer, evaluators.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" unary ] ;                (* right associative *)
    atom    = NUMBER | COORD | call | "(" expr ")" ;
    call    = FUNC "(" arglist ")" ;
    arglist = ( "x" | expr ) { "," expr } ;       (* bare "x" only inside norm *)
    COORD   = "x" DIGITS ;                        (* x1 .. xn *)
    FUNC    = "abs" | "min" | "max" | "exp" | "log" | "sqrt" | "norm" ;

``^`` binds tighter than unary minus (``-x1^2 == -(x1^2)``), unary minus
tighter than ``*``/``/``, which bind tighter than ``+``/``-``.
``norm(x)`` is the Euclidean norm of the whole point; ``norm(e1, ..., ek)``
is the Euclidean norm of the listed values. ``min``/``max`` take two or more
arguments.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .core import MetricSpec
from .errors import DiagnosticError, DomainError, InputError, ParseError

FUNCTIONS = {
    # name: (min arity, max arity or None)
    "abs": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "sqrt": (1, 1),
    "min": (2, None),
    "max": (2, None),
    "norm": (1, None),
}


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Coord:
    index: int  # 1-based


@dataclass(frozen=True)
class WholePoint:
    """The bare ``x`` argument of ``norm(x)``."""


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Const, Coord, WholePoint, Neg, BinOp, Call]


# --- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, name, op, eof
    text: str
    pos: int


def tokenize(source: str) -> list:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(source)))
    return tokens


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, source: str, dim: int):
        self.source = source
        self.dim = dim
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token = None):
        tok = tok or self.tok
        return ParseError(message, tok.pos, self.source)

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.kind != "op" or self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected token {self.tok.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.at_op("+", "-"):
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.at_op("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.at_op("-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.at_op("^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise self.error(f"numeric literal {tok.text!r} overflows", tok)
            return Const(value)
        if tok.kind == "name":
            return self.name()
        if self.at_op("("):
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")

    def name(self) -> Node:
        tok = self.advance()
        text = tok.text
        if text in FUNCTIONS:
            return self.call(tok)
        m = re.fullmatch(r"x(\d+)", text)
        if m:
            index = int(m.group(1))
            if not 1 <= index <= self.dim:
                raise InputError(
                    f"coordinate {text} out of range for dimension {self.dim} at position {tok.pos}"
                )
            return Coord(index)
        if text == "x":
            raise self.error("bare 'x' is only allowed as the argument of norm()", tok)
        raise InputError(f"unknown identifier {text!r} at position {tok.pos}")

    def call(self, name_tok: Token) -> Node:
        name = name_tok.text
        self.expect("(")
        args = []
        if name == "norm" and self.tok.kind == "name" and self.tok.text == "x":
            self.advance()
            args.append(WholePoint())
            if not self.at_op(")"):
                raise self.error("norm(x) takes no further arguments")
        else:
            args.append(self.expr())
            while self.at_op(","):
                self.advance()
                args.append(self.expr())
        self.expect(")")
        lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = f"{lo}" if lo == hi else f"at least {lo}"
            raise self.error(f"{name}() takes {want} argument(s), got {len(args)}", name_tok)
        return Call(name, tuple(args))


# --- printer ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    if isinstance(node, Const) and node.value < 0:
        return _PREC["neg"]
    return _PREC["atom"]


def to_source(node: Node, min_prec: int = 0) -> str:
    """Print an AST back to source with the minimal parentheses that re-parse to it."""
    if isinstance(node, Const):
        text = repr(float(node.value))
    elif isinstance(node, Coord):
        text = f"x{node.index}"
    elif isinstance(node, WholePoint):
        text = "x"
    elif isinstance(node, Neg):
        text = "-" + to_source(node.operand, _PREC["neg"])
    elif isinstance(node, BinOp):
        p = _PREC[node.op]
        if node.op == "^":
            text = f"{to_source(node.left, _PREC['atom'])}^{to_source(node.right, _PREC['neg'])}"
        else:
            text = f"{to_source(node.left, p)} {node.op} {to_source(node.right, p + 1)}"
    elif isinstance(node, Call):
        text = f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    else:  # pragma: no cover
        raise TypeError(f"not an AST node: {node!r}")
    return f"({text})" if _prec(node) < min_prec else text


# --- scalar evaluation ------------------------------------------------------


def _check(v: float, what: str) -> float:
    if not math.isfinite(v):
        raise DomainError(f"{what} produced a non-finite value")
    return v


def _eval(node: Node, x: Sequence[float]) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Coord):
        return float(x[node.index - 1])
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        op = node.op
        if op == "+":
            return _check(a + b, "addition")
        if op == "-":
            return _check(a - b, "subtraction")
        if op == "*":
            return _check(a * b, "multiplication")
        if op == "/":
            if b == 0:
                raise DomainError("division by zero")
            return _check(a / b, "division")
        if a == 0 and b < 0:
            raise DomainError("zero raised to a negative power")
        try:
            return _check(math.pow(a, b), "power")
        except (ValueError, OverflowError) as exc:
            raise DomainError(f"power {a}^{b} is undefined over the reals") from exc
    if isinstance(node, Call):
        name = node.name
        if name == "norm":
            if isinstance(node.args[0], WholePoint):
                vals = [float(v) for v in x]
            else:
                vals = [_eval(a, x) for a in node.args]
            return _check(math.sqrt(math.fsum(v * v for v in vals)), "norm")
        vals = [_eval(a, x) for a in node.args]
        if name == "min":
            return min(vals)
        if name == "max":
            return max(vals)
        (a,) = vals
        if name == "abs":
            return abs(a)
        if name == "sqrt":
            if a < 0:
                raise DomainError(f"sqrt of negative value {a}")
            return math.sqrt(a)
        if name == "log":
            if a <= 0:
                raise DomainError(f"log of nonpositive value {a}")
            return math.log(a)
        if name == "exp":
            try:
                return _check(math.exp(a), "exp")
            except OverflowError as exc:
                raise DomainError("exp overflow") from exc
    raise TypeError(f"not an AST node: {node!r}")  # pragma: no cover


# --- vectorized evaluation --------------------------------------------------


def _square(a):
    return a * a


def _compile(node: Node) -> Callable[[np.ndarray], np.ndarray]:
    """Compile to a function of X with shape (..., n); invalid results become NaN."""
    if isinstance(node, Const):
        v = node.value
        return lambda X: np.full(X.shape[:-1], v)
    if isinstance(node, Coord):
        k = node.index - 1
        return lambda X: X[..., k]
    if isinstance(node, Neg):
        f = _compile(node.operand)
        return lambda X: -f(X)
    if isinstance(node, BinOp):
        fa, fb = _compile(node.left), _compile(node.right)
        if node.op == "+":
            return lambda X: fa(X) + fb(X)
        if node.op == "-":
            return lambda X: fa(X) - fb(X)
        if node.op == "*":
            return lambda X: fa(X) * fb(X)
        if node.op == "/":

            def div(X):
                b = fb(X)
                return np.where(b == 0, np.nan, fa(X) / np.where(b == 0, 1.0, b))

            return div

        if isinstance(node.right, Const) and node.right.value == 2.0:
            return lambda X: _square(fa(X))

        def power(X):
            a, b = fa(X), fb(X)
            return np.where((a == 0) & (b < 0), np.nan, np.power(a, b))

        return power
    if isinstance(node, Call):
        name = node.name
        if name == "norm" and isinstance(node.args[0], WholePoint):
            return lambda X: np.sqrt(np.sum(X * X, axis=-1))
        fs = [_compile(a) for a in node.args]
        if name == "norm":
            return lambda X: np.sqrt(sum(f(X) ** 2 for f in fs))
        if name in ("min", "max"):
            red = np.minimum if name == "min" else np.maximum

            def minmax(X):
                out = fs[0](X)
                for f in fs[1:]:
                    out = red(out, f(X))
                return out

            return minmax
        (f,) = fs
        if name == "abs":
            return lambda X: np.abs(f(X))
        if name == "exp":
            return lambda X: np.exp(f(X))
        if name == "sqrt":
            return lambda X: np.sqrt(f(X))
        if name == "log":

            def log(X):
                a = f(X)
                return np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), np.nan)

            return log
    raise TypeError(f"not an AST node: {node!r}")  # pragma: no cover


# --- public API ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ObjectiveFn:
    """A parsed objective f: R^dim -> R."""

    source: str
    ast: Node
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "_batch", _compile(self.ast))

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def batch(self, X: np.ndarray) -> np.ndarray:
        """Evaluate on an array of points (..., dim); domain failures come back as NaN."""
        X = np.asarray(X, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self._batch(X), dtype=float)
            out = np.broadcast_to(out, X.shape[:-1]).copy()
        out[~np.isfinite(out)] = np.nan
        return out

    def pretty(self) -> str:
        return to_source(self.ast)

    def __repr__(self) -> str:
        return f"ObjectiveFn({self.source!r}, dim={self.dim})"


def parse(source: str, dim: int) -> ObjectiveFn:
    """Parse ``source`` as an objective over R^dim."""
    if not isinstance(source, str) or not source.strip():
        raise InputError("objective source must be a nonempty string")
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InputError(f"dimension must be a positive integer, got {dim!r}")
    return ObjectiveFn(source, _Parser(source, int(dim)).parse(), int(dim))


def evaluate(f: ObjectiveFn, x) -> float:
    """Evaluate ``f`` at one point; raises DomainError instead of returning NaN/inf."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != f.dim:
        raise InputError(f"dimension mismatch: objective has dim {f.dim}, point has {x.size}")
    return float(_eval(f.ast, x.tolist()))


def growth_ratio(
    f: ObjectiveFn,
    x0,
    p_probe: float,
    radii: Sequence[float],
    m: MetricSpec,
    samples_per_shell: int = 256,
    seed: int = 0,
) -> list:
    """Sampled sup of f(x) / (1 + d(x, x0)^p_probe) over shells d(x, x0) in [R, 1.05 R].

    Each shell draws from its own stream seeded by ``(seed, shell index)`` so the
    result does not depend on evaluation order. Points where ``f`` is undefined
    are dropped; a value that overflows to +inf gives an infinite ratio.
    """
    radii = [float(R) for R in radii]
    if not radii or any(R <= 0 for R in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise InputError("radii must be positive and strictly increasing")
    if samples_per_shell < 1:
        raise InputError("samples_per_shell must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    n = f.dim
    if x0.shape != (n,):
        raise InputError(f"x0 must have dimension {n}")
    m.check_dim(n)
    out = []
    for k, R in enumerate(radii):
        rng = np.random.default_rng([seed, k])
        u = rng.standard_normal((samples_per_shell, n))
        nu = m.norm(u)
        u = u[nu > 0] / nu[nu > 0, None]
        s = rng.uniform(R, 1.05 * R, size=u.shape[0])
        X = x0 + s[:, None] * u
        d = m.dist(X, x0)
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(f._batch(X), dtype=float), X.shape[:-1])
        # overflow to +inf is growth, not a domain failure; NaN and -inf are dropped
        ok = np.isfinite(vals) | (vals == np.inf)
        if not np.any(ok):
            raise DiagnosticError(f"every sample on shell R={R} hit a domain error")
        ratio = vals[ok] / (1.0 + d[ok] ** p_probe)
        out.append((R, float(np.max(ratio))))
    return out
