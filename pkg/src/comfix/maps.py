"""Expression grammar for self-maps of R^d plus compose/iterate combinators.

Grammar (whitespace is ignored)::

    map     := expr ("," expr)*            one expression per coordinate
    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?           right-associative, binds tightest
    atom    := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"
    VAR     := "x1" .. "xd"  (plain "x" is accepted when d == 1)
    FUNC    := sin | cos | tan | exp | log | sqrt | abs

There are no named constants; ``e`` is written ``exp(1)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

from .errors import EvaluationError, InputError, ParseError
from .metric import Point

GRAMMAR_VERSION = "1"

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
}


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


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
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class MapExpr:
    components: tuple[Node, ...]
    dim: int


# -- parser ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos), src)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(src, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(src, len(src))))
    return tokens


def _byte_offset(src: str, char_pos: int) -> int:
    return len(src[:char_pos].encode("utf-8"))


class _Parser:
    def __init__(self, src: str, dim: int):
        self.src = src
        self.dim = dim
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg: str, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, tok[2], self.src)

    def expect(self, text: str):
        tok = self.take()
        if tok[1] != text or tok[0] == "end":
            got = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {text!r}, got {got}", tok)
        return tok

    def parse_map(self) -> tuple[Node, ...]:
        comps = [self.expr()]
        while self.peek()[1] == ",":
            self.take()
            comps.append(self.expr())
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return tuple(comps)

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise self.error(f"unknown function `{text}`", tok)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            return self.variable(tok)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected token {text!r}", tok)

    def variable(self, tok) -> Var:
        text = tok[1]
        if text == "x" and self.dim == 1:
            return Var(1)
        m = re.fullmatch(r"x([1-9][0-9]*)", text)
        if m is None:
            hint = " (write exp(1) for e)" if text == "e" else ""
            if text == "x":
                hint = f" (use x1..x{self.dim} in {self.dim} dimensions)"
            raise self.error(f"unknown identifier `{text}`{hint}", tok)
        index = int(m.group(1))
        if index > self.dim:
            raise self.error(f"variable `{text}` exceeds dimension {self.dim}", tok)
        return Var(index)


def parse_map(src: str, dim: int) -> MapExpr:
    """Parse ``src`` as a ``dim``-dimensional map (comma-separated components)."""
    if dim < 1:
        raise InputError("dimension must be at least 1")
    if not src or not src.strip():
        raise ParseError("empty expression", 0, src)
    comps = _Parser(src, dim).parse_map()
    if len(comps) != dim:
        raise ParseError(
            f"expected {dim} comma-separated component(s), got {len(comps)}", 0, src
        )
    return MapExpr(comps, dim)


# -- printer -----------------------------------------------------------------


def _format_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def format_node(node: Node, dim: int) -> str:
    if isinstance(node, Num):
        if node.value < 0:
            raise InputError("negative literals are not representable; use Neg")
        return _format_number(node.value)
    if isinstance(node, Var):
        return "x" if dim == 1 else f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{format_node(node.operand, dim)})"
    if isinstance(node, BinOp):
        return f"({format_node(node.left, dim)}{node.op}{format_node(node.right, dim)})"
    if isinstance(node, Call):
        return f"{node.func}({format_node(node.arg, dim)})"
    raise TypeError(f"not an expression node: {node!r}")


def format_map(m: MapExpr) -> str:
    """Fully parenthesized canonical text; ``parse_map`` inverts it exactly."""
    return ", ".join(format_node(c, m.dim) for c in m.components)


# -- evaluation --------------------------------------------------------------


def _power(a: float, b: float) -> float:
    return math.pow(a, b)


_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": _power,
}


def _compile_node(node: Node) -> Callable[[Point], float]:
    if isinstance(node, Num):
        v = node.value
        return lambda x: v
    if isinstance(node, Var):
        i = node.index - 1
        return lambda x: x[i]
    if isinstance(node, Neg):
        inner = _compile_node(node.operand)
        return lambda x: -inner(x)
    if isinstance(node, BinOp):
        fn = _BINARY[node.op]
        left = _compile_node(node.left)
        right = _compile_node(node.right)
        return lambda x: fn(left(x), right(x))
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func]
        arg = _compile_node(node.arg)
        return lambda x: fn(arg(x))
    raise TypeError(f"not an expression node: {node!r}")


def compile_expr(m: MapExpr) -> Callable[[Point], Point]:
    comps = [_compile_node(c) for c in m.components]

    def apply(x: Point) -> Point:
        try:
            y = tuple(float(c(x)) for c in comps)
        except OverflowError:
            raise EvaluationError("overflow", x, kind="overflow") from None
        except (ValueError, ZeroDivisionError) as exc:
            raise EvaluationError(f"math domain error ({exc})", x) from None
        for v in y:
            if not math.isfinite(v):
                kind = "overflow" if math.isinf(v) else "domain"
                raise EvaluationError(f"non-finite value {v}", x, kind=kind)
        return y

    return apply


# -- map definitions and combinators ----------------------------------------


@dataclass(frozen=True)
class Expr:
    expr: MapExpr
    source: str = ""


@dataclass(frozen=True)
class Compose:
    """``outer(inner(x))``."""

    outer: str
    inner: str


@dataclass(frozen=True)
class Iterate:
    of: str
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"iterate count must be >= 1, got {self.n}")


@dataclass(frozen=True)
class Identity:
    pass


MapDef = Union[Expr, Compose, Iterate, Identity]

IDENTITY = "identity"


def references(m: MapDef) -> tuple[str, ...]:
    if isinstance(m, Compose):
        return (m.outer, m.inner)
    if isinstance(m, Iterate):
        return (m.of,)
    return ()


def describe(m: MapDef) -> str:
    if isinstance(m, Expr):
        return format_map(m.expr)
    if isinstance(m, Compose):
        return f"{m.outer} o {m.inner}"
    if isinstance(m, Iterate):
        return f"{m.of}^{m.n}"
    return IDENTITY


class MapTable:
    """Immutable table of named maps with references checked for acyclicity.

    The name ``identity`` always resolves to the identity map.
    """

    def __init__(self, maps: Mapping[str, MapDef], dim: int):
        self.dim = dim
        self._defs = dict(maps)
        self._defs.setdefault(IDENTITY, Identity())
        for name, m in self._defs.items():
            if isinstance(m, Expr) and m.expr.dim != dim:
                raise InputError(f"map `{name}` has dimension {m.expr.dim}, expected {dim}")
        self._order = self._toposort()
        self._compiled: dict[str, Callable[[Point], Point]] = {}
        for name in self._order:
            self._compiled[name] = self._build(self._defs[name])

    def _toposort(self) -> list[str]:
        order: list[str] = []
        state: dict[str, int] = {}

        def visit(name: str, path: list[str]):
            if name not in self._defs:
                raise InputError(f"unknown map `{name}` referenced from `{path[-1]}`")
            if state.get(name) == 2:
                return
            if state.get(name) == 1:
                cycle = path[path.index(name):] + [name]
                raise InputError("cyclic map references: " + " -> ".join(cycle))
            state[name] = 1
            for ref in references(self._defs[name]):
                visit(ref, path + [name])
            state[name] = 2
            order.append(name)

        for name in self._defs:
            visit(name, [name])
        return order

    def _build(self, m: MapDef) -> Callable[[Point], Point]:
        if isinstance(m, Expr):
            return compile_expr(m.expr)
        if isinstance(m, Identity):
            return lambda x: tuple(x)
        if isinstance(m, Compose):
            outer, inner = self._compiled[m.outer], self._compiled[m.inner]
            return lambda x: outer(inner(x))
        base, n = self._compiled[m.of], m.n

        def iterate(x: Point) -> Point:
            for _ in range(n):
                x = base(x)
            return x

        return iterate

    def __contains__(self, name: str) -> bool:
        return name in self._defs

    def __getitem__(self, name: str) -> MapDef:
        return self._defs[name]

    def names(self) -> list[str]:
        return list(self._defs)

    def fn(self, name: str) -> Callable[[Point], Point]:
        try:
            return self._compiled[name]
        except KeyError:
            raise InputError(f"unknown map `{name}`") from None

    def leaves(self, name: str) -> list[str]:
        """Named maps reachable from ``name`` through combinators, excluding it."""
        seen: list[str] = []
        stack = list(references(self._defs[name]))
        while stack:
            ref = stack.pop(0)
            if ref not in seen:
                seen.append(ref)
                stack.extend(references(self._defs[ref]))
        return seen


def evaluate(m: "MapDef | str", env: MapTable, x: Point) -> Point:
    """Apply a map definition (or a map name) from ``env`` to the point ``x``."""
    if isinstance(m, str):
        return env.fn(m)(tuple(x))
    if isinstance(m, Expr):
        return compile_expr(m.expr)(tuple(x))
    if isinstance(m, Identity):
        return tuple(x)
    if isinstance(m, Compose):
        return env.fn(m.outer)(env.fn(m.inner)(tuple(x)))
    y = tuple(x)
    f = env.fn(m.of)
    for _ in range(m.n):
        y = f(y)
    return y


def compose(*fns: Callable[[Point], Point]) -> Callable[[Point], Point]:
    """``compose(a, b, c)(x) == a(b(c(x)))``."""

    def composed(x: Point) -> Point:
        for fn in reversed(fns):
            x = fn(x)
        return x

    return composed


def power(fn: Callable[[Point], Point], n: int) -> Callable[[Point], Point]:
    def iterated(x: Point) -> Point:
        for _ in range(n):
            x = fn(x)
        return x

    return iterated
