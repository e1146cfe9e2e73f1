"""Right-hand-side expressions for ODEs ``x' = f(x, a)``.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := atom ['^' integer]
    atom   := number | ident | '(' expr ')' | '-' factor | func '(' expr ')'
    func   := sin | cos | exp | tanh | sqrt
    ident  := x1 .. xn | a1 .. am | a      (a is a1)

Unary minus binds looser than ``^``, so ``-x1^2`` is ``-(x1^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

from . import interval as iv
from .interval import DomainError, Interval, IntervalBox

FUNCTIONS = ("sin", "cos", "exp", "tanh", "sqrt")


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(ParseError):
    pass


class ArityError(ParseError):
    pass


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based state index


@dataclass(frozen=True)
class Act:
    index: int  # 0-based action index


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Act, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            off = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[off]!r}", off)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n: int, m: int):
        self.toks = _tokenize(text)
        self.i = 0
        self.n, self.m = n, m

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind not in ("op",):
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, val, off = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be a non-negative integer literal", off)
            return Pow(base, int(val))
        return base

    def atom(self) -> Node:
        kind, val, off = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "op" and val == "-":
            return Neg(self.factor())
        if kind == "id":
            if val in FUNCTIONS:
                k2, v2, o2 = self.take()
                if v2 != "(":
                    raise ArityError(f"function {val} needs one parenthesized argument", o2)
                arg = self.expr()
                k3, v3, o3 = self.take()
                if v3 == ",":
                    raise ArityError(f"function {val} takes exactly one argument", o3)
                if v3 != ")":
                    raise ParseError(f"expected ')', found {v3 or 'end of input'!r}", o3)
                return Call(val, arg)
            return self.ident(val, off)
        raise ParseError(f"unexpected {val or 'end of input'!r}", off)

    def ident(self, name: str, off: int) -> Node:
        m = re.fullmatch(r"([xa])(\d*)", name)
        if m is None:
            raise UnknownIdentifier(f"unknown identifier {name!r}", off)
        letter, digits = m.groups()
        if letter == "a" and digits == "":
            digits = "1"
        if digits == "" or digits.startswith("0"):
            raise UnknownIdentifier(f"unknown identifier {name!r}", off)
        k = int(digits)
        limit = self.n if letter == "x" else self.m
        if k > limit:
            raise UnknownIdentifier(f"{name!r} exceeds declared dimension {limit}", off)
        return Var(k - 1) if letter == "x" else Act(k - 1)


def parse(text: str, n: int, m: int = 1) -> Node:
    """Parse ``text`` over state ``x1..xn`` and action ``a1..am``."""
    return _Parser(text, n, m).parse()


def pretty(node: Node) -> str:
    """Fully parenthesized text; ``parse(pretty(t)) == t`` for parsed trees."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Act):
        return f"a{node.index + 1}"
    if isinstance(node, Neg):
        return f"(-{pretty(node.arg)})"
    if isinstance(node, BinOp):
        return f"({pretty(node.left)} {node.op} {pretty(node.right)})"
    if isinstance(node, Pow):
        return f"{_wrap(node.base)}^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    raise TypeError(node)


def _wrap(node: Node) -> str:
    s = pretty(node)
    return s if isinstance(node, (Var, Act, Call, Const)) and not s.startswith("-") else f"({s})"


# --- evaluation -------------------------------------------------------------

_POINT_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "tanh": math.tanh}
_BOX_FUNCS = {"sin": iv.isin, "cos": iv.icos, "exp": iv.iexp, "tanh": iv.itanh, "sqrt": iv.isqrt}


def eval_point(node: Node, s: Sequence[float], act: Sequence[float]) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return s[node.index]
    if isinstance(node, Act):
        return act[node.index]
    if isinstance(node, Neg):
        return -eval_point(node.arg, s, act)
    if isinstance(node, BinOp):
        a, b = eval_point(node.left, s, act), eval_point(node.right, s, act)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b == 0.0:
            raise DomainError("division by zero")
        return a / b
    if isinstance(node, Pow):
        return eval_point(node.base, s, act) ** node.exponent
    if isinstance(node, Call):
        x = eval_point(node.arg, s, act)
        if node.func == "sqrt":
            if x < 0:
                raise DomainError(f"sqrt of negative value {x}")
            return math.sqrt(x)
        return _POINT_FUNCS[node.func](x)
    raise TypeError(node)


def eval_box(node: Node, box: Sequence[Interval], act: Sequence[float]) -> Interval:
    """Natural interval extension of ``node`` over ``box``."""
    if isinstance(node, Const):
        return iv.point(node.value)
    if isinstance(node, Var):
        return box[node.index]
    if isinstance(node, Act):
        return iv.point(act[node.index])
    if isinstance(node, Neg):
        return -eval_box(node.arg, box, act)
    if isinstance(node, BinOp):
        a, b = eval_box(node.left, box, act), eval_box(node.right, box, act)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        return iv.ipow(eval_box(node.base, box, act), node.exponent)
    if isinstance(node, Call):
        return _BOX_FUNCS[node.func](eval_box(node.arg, box, act))
    raise TypeError(node)


# --- dynamics and Taylor coefficients in time ---------------------------------

@dataclass(frozen=True)
class Dynamics:
    """``x_i' = exprs[i](x, a)`` for a state of dimension ``n``, action ``m``."""

    exprs: tuple[Node, ...]
    n: int
    m: int

    def __post_init__(self):
        if len(self.exprs) != self.n:
            raise ExprError(f"{len(self.exprs)} right-hand sides for dimension {self.n}")

    @classmethod
    def parse(cls, texts: Sequence[str], m: int = 1) -> "Dynamics":
        n = len(texts)
        exprs = []
        for i, t in enumerate(texts):
            try:
                exprs.append(parse(t, n, m))
            except ParseError as e:
                raise type(e)(f"dynamics[{i}]: {e.args[0]}", e.offset) from None
        return cls(tuple(exprs), n, m)

    def texts(self) -> list[str]:
        return [pretty(e) for e in self.exprs]

    def rhs(self, s: Sequence[float], act: Sequence[float]) -> list[float]:
        return [eval_point(e, s, act) for e in self.exprs]

    def rhs_box(self, box: Sequence[Interval], act: Sequence[float]) -> IntervalBox:
        return tuple.__new__(IntervalBox, tuple(eval_box(e, box, act) for e in self.exprs))

    def tape(self) -> "_Tape":
        t = self.__dict__.get("_tape")
        if t is None:
            t = _Tape(self.exprs)
            object.__setattr__(self, "_tape", t)
        return t


_ZERO = Interval(0.0, 0.0)


class _Tape:
    """Expressions flattened to a shared DAG in topological order.

    Integer powers are rewritten into squarings and products so every node
    has a simple Taylor-coefficient recurrence.
    """

    def __init__(self, exprs: Sequence[Node]):
        self.ops: list[tuple] = []
        self._memo: dict = {}
        self.outputs = [self._add(e) for e in exprs]

    def _emit(self, key) -> int:
        idx = self._memo.get(key)
        if idx is None:
            idx = len(self.ops)
            self.ops.append(key)
            self._memo[key] = idx
        return idx

    def _add(self, node: Node) -> int:
        if isinstance(node, Const):
            return self._emit(("const", node.value))
        if isinstance(node, Var):
            return self._emit(("var", node.index))
        if isinstance(node, Act):
            return self._emit(("act", node.index))
        if isinstance(node, Neg):
            return self._emit(("neg", self._add(node.arg)))
        if isinstance(node, BinOp):
            return self._emit((node.op, self._add(node.left), self._add(node.right)))
        if isinstance(node, Pow):
            return self._pow(self._add(node.base), node.exponent)
        if isinstance(node, Call):
            return self._emit((node.func, self._add(node.arg)))
        raise TypeError(node)

    def _pow(self, base: int, n: int) -> int:
        if n == 0:
            return self._emit(("const", 1.0))
        if n == 1:
            return base
        sq = self._emit(("sqr", self._pow(base, n // 2)))
        if n % 2:
            return self._emit(("*", sq, base))
        return sq

    def taylor(self, x0: Sequence[Interval], act: Sequence[float], k: int) -> list[list[Interval]]:
        """Coefficients ``c_0..c_k`` of the solution series in time."""
        n = len(self.outputs)
        X = [[x0[i]] for i in range(n)]
        vals: list[list[Interval]] = [[] for _ in self.ops]
        aux: dict[int, list[Interval]] = {}
        for j in range(k):
            for idx, op in enumerate(self.ops):
                vals[idx].append(self._coef(op, idx, j, vals, aux, X, act))
            for i, out in enumerate(self.outputs):
                X[i].append(vals[out][j] / (j + 1))
        return X

    @staticmethod
    def _coef(op, idx, j, vals, aux, X, act) -> Interval:
        kind = op[0]
        if kind == "var":
            return X[op[1]][j]
        if kind == "const":
            return iv.point(op[1]) if j == 0 else _ZERO
        if kind == "act":
            return iv.point(act[op[1]]) if j == 0 else _ZERO
        if kind == "neg":
            return -vals[op[1]][j]
        if kind == "+":
            return vals[op[1]][j] + vals[op[2]][j]
        if kind == "-":
            return vals[op[1]][j] - vals[op[2]][j]
        if kind == "*":
            u, v = vals[op[1]], vals[op[2]]
            acc = u[0] * v[j]
            for i in range(1, j + 1):
                acc = acc + u[i] * v[j - i]
            return acc
        if kind == "sqr":
            u = vals[op[1]]
            if j == 0:
                return iv.isqr(u[0])
            acc = None
            for i in range((j + 1) // 2):
                t = u[i] * u[j - i]
                acc = t if acc is None else acc + t
            acc = acc * 2.0
            if j % 2 == 0:
                acc = acc + iv.isqr(u[j // 2])
            return acc
        if kind == "/":
            u, v, w = vals[op[1]], vals[op[2]], vals[idx]
            acc = u[j]
            for i in range(1, j + 1):
                acc = acc - v[i] * w[j - i]
            return acc / v[0]
        u = vals[op[1]]
        if kind == "exp":
            w = vals[idx]
            if j == 0:
                return iv.iexp(u[0])
            return _convolve_deriv(u, w, j)
        if kind in ("sin", "cos"):
            # companion series: (sin, cos) of the same argument
            s_c = aux.setdefault(idx, [])
            if j == 0:
                s, c = iv.isin(u[0]), iv.icos(u[0])
            else:
                prev_s = [p[0] for p in s_c]
                prev_c = [p[1] for p in s_c]
                s = _convolve_deriv(u, prev_c, j)
                c = -_convolve_deriv(u, prev_s, j)
            s_c.append((s, c))
            return s if kind == "sin" else c
        if kind == "tanh":
            w = vals[idx]
            q = aux.setdefault(idx, [])
            if j == 0:
                t = iv.itanh(u[0])
                q.append(1.0 - iv.isqr(t))
                return t
            t = _convolve_deriv(u, q, j)
            ww = w + [t]
            sq = None
            for i in range(j + 1):
                p = ww[i] * ww[j - i]
                sq = p if sq is None else sq + p
            q.append(-sq)
            return t
        if kind == "sqrt":
            w = vals[idx]
            if j == 0:
                return iv.isqrt(u[0])
            acc = u[j]
            for i in range(1, j):
                acc = acc - w[i] * w[j - i]
            return acc / (w[0] * 2.0)
        raise ExprError(f"unknown tape op {kind}")


def _convolve_deriv(u: Sequence[Interval], w: Sequence[Interval], j: int) -> Interval:
    # (1/j) * sum_{i=1}^{j} i * u_i * w_{j-i}
    acc = (u[1] * w[j - 1])
    for i in range(2, j + 1):
        acc = acc + (u[i] * w[j - i]) * float(i)
    return acc / float(j)


def taylor_coeffs(dyn: Dynamics, x0: Sequence[Interval] | Sequence[float],
                  act: Sequence[float], k: int) -> list[list[Interval]]:
    """Per-dimension time-series coefficients ``c_0..c_k`` of ``x(t)``."""
    if k < 1:
        raise ExprError("Taylor order must be >= 1")
    box = [v if isinstance(v, Interval) else iv.point(v) for v in x0]
    if len(box) != dyn.n:
        raise ExprError(f"initial value has {len(box)} dims, dynamics has {dyn.n}")
    return dyn.tape().taylor(box, act, k)
