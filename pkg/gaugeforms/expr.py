"""Expression language for complex scalar fields on a chart.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' int)?
    base   := number | 'i' | 'pi' | var | func '(' expr ')' | '(' expr ')' | '-' base

Variables are ``x1`` .. ``x4`` and functions are ``sin``, ``cos`` and ``exp``. Trees are
immutable. Evaluation is vectorised over an array of points and carries exact first
partial derivatives with forward-mode dual numbers.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .exceptions import DivisionByZero, ParseError, UnknownIdentifier

FUNCTIONS = ("sin", "cos", "exp")
MAX_VARIABLE = 4


# --------------------------
# Dual numbers
# --------------------------
class Dual:
    """Values and gradients of a scalar field at P points: value (P,), grad (P, dim)."""

    __slots__ = ("value", "grad")

    def __init__(self, value, grad):
        self.value = value
        self.grad = grad

    @classmethod
    def constant(cls, c, size, dim):
        return cls(np.full(size, complex(c)), np.zeros((size, dim), dtype=complex))

    @classmethod
    def variable(cls, points, index):
        size, dim = points.shape
        grad = np.zeros((size, dim), dtype=complex)
        grad[:, index - 1] = 1.0
        return cls(points[:, index - 1].astype(complex), grad)

    def __add__(self, other):
        return Dual(self.value + other.value, self.grad + other.grad)

    def __sub__(self, other):
        return Dual(self.value - other.value, self.grad - other.grad)

    def __neg__(self):
        return Dual(-self.value, -self.grad)

    def __mul__(self, other):
        return Dual(
            self.value * other.value,
            self.grad * other.value[:, None] + self.value[:, None] * other.grad,
        )

    def __truediv__(self, other):
        quotient = self.value / other.value
        return Dual(
            quotient,
            (self.grad - quotient[:, None] * other.grad) / other.value[:, None],
        )

    def power(self, n):
        if n == 0:
            return Dual(np.ones_like(self.value), np.zeros_like(self.grad))
        if n < 0:
            return Dual(np.ones_like(self.value), np.zeros_like(self.grad)) / self.power(-n)
        return Dual(
            self.value**n,
            (n * self.value ** (n - 1))[:, None] * self.grad,
        )

    def exp(self):
        e = np.exp(self.value)
        return Dual(e, e[:, None] * self.grad)

    def sin(self):
        return Dual(np.sin(self.value), np.cos(self.value)[:, None] * self.grad)

    def cos(self):
        return Dual(np.cos(self.value), -np.sin(self.value)[:, None] * self.grad)


class _Evaluation:
    """One vectorised evaluation of several trees.

    Structurally equal subtrees are merged and evaluated once. Intermediate duals are
    released as soon as their last consumer has been evaluated, so peak memory follows
    the width of the tree rather than its size.
    """

    def __init__(self, points):
        self.points = points
        self.size, self.dim = points.shape

    def _plan(self, roots):
        slot_of = {}
        slots = {}
        nodes, children, consumers = [], [], []
        stack = [(root, False) for root in reversed(roots)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in slot_of:
                continue
            kids = node.children()
            if not expanded:
                stack.append((node, True))
                stack.extend((kid, False) for kid in reversed(kids) if id(kid) not in slot_of)
                continue
            kid_slots = tuple(slot_of[id(kid)] for kid in kids)
            key = (type(node), node.label(), kid_slots)
            slot = slots.get(key)
            if slot is None:
                slot = slots[key] = len(nodes)
                nodes.append(node)
                children.append(kid_slots)
                consumers.append(0)
                for kid in kid_slots:
                    consumers[kid] += 1
            slot_of[id(node)] = slot
        return [slot_of[id(root)] for root in roots], nodes, children, consumers

    def run(self, roots):
        """Duals of every tree in `roots`, in order."""
        root_slots, nodes, children, consumers = self._plan(roots)
        for slot in root_slots:
            consumers[slot] += 1
        values = [None] * len(nodes)
        for slot, node in enumerate(nodes):
            values[slot] = node._apply(self, [values[kid] for kid in children[slot]])
            for kid in children[slot]:
                consumers[kid] -= 1
                if consumers[kid] == 0:
                    values[kid] = None
        return [values[slot] for slot in root_slots]


def _as_points(points, dim=None):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if dim is not None and points.shape[1] != dim:
        raise ValueError(f"points have {points.shape[1]} coordinates, expected {dim}")
    return points


# --------------------------
# Tree
# --------------------------
class Expression:
    """Base class of expression nodes."""

    __slots__ = ()

    def evaluate(self, points, dim=None):
        """Dual number of this expression at every row of `points`."""
        points = _as_points(points, dim)
        self.check_dimension(points.shape[1])
        return _Evaluation(points).run([self])[0]

    def check_dimension(self, dim):
        for index in self.variables():
            if index > dim:
                raise UnknownIdentifier(f"x{index}")

    def variables(self):
        """Indices of the coordinates the expression depends on."""
        found, seen, stack = set(), set(), [self]
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            if isinstance(node, Variable):
                found.add(node.index)
            stack.extend(node.children())
        return frozenset(found)

    def children(self):
        return ()

    def label(self):
        return None

    def __add__(self, other):
        return add(self, as_expression(other))

    def __radd__(self, other):
        return add(as_expression(other), self)

    def __sub__(self, other):
        return sub(self, as_expression(other))

    def __rsub__(self, other):
        return sub(as_expression(other), self)

    def __mul__(self, other):
        return mul(self, as_expression(other))

    def __rmul__(self, other):
        return mul(as_expression(other), self)

    def __truediv__(self, other):
        return div(self, as_expression(other))

    def __rtruediv__(self, other):
        return div(as_expression(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return power(self, n)

    def __str__(self):
        return self.to_text()


def _format_real(x):
    if x < 0:
        return f"(-{_format_real(-x)})"
    if float(x).is_integer() and abs(x) < 1e16:
        return str(int(x))
    if x == math.pi:
        return "pi"
    return repr(float(x))


@dataclass(frozen=True)
class Constant(Expression):
    value: complex

    def label(self):
        return complex(self.value)

    def _apply(self, ev, args):
        return Dual.constant(self.value, ev.size, ev.dim)

    def to_text(self):
        value = complex(self.value)
        if value == 1j:
            return "i"
        if value.imag == 0:
            return _format_real(value.real)
        if value.real == 0:
            return f"({_format_real(value.imag)}*i)"
        return f"({_format_real(value.real)} + {_format_real(value.imag)}*i)"

    def conjugate(self):
        return Constant(complex(self.value).conjugate())

    def derivative(self, axis):
        return ZERO


@dataclass(frozen=True)
class Variable(Expression):
    index: int

    def label(self):
        return self.index

    def _apply(self, ev, args):
        return Dual.variable(ev.points, self.index)

    def to_text(self):
        return f"x{self.index}"

    def conjugate(self):
        return self

    def derivative(self, axis):
        return ONE if axis == self.index else ZERO


@dataclass(frozen=True)
class Negate(Expression):
    operand: Expression

    def children(self):
        return (self.operand,)

    def _apply(self, ev, args):
        return -args[0]

    def to_text(self):
        return f"-{_wrap(self.operand)}"

    def conjugate(self):
        return neg(self.operand.conjugate())

    def derivative(self, axis):
        return neg(self.operand.derivative(axis))


@dataclass(frozen=True)
class BinaryOp(Expression):
    op: str
    left: Expression
    right: Expression

    def children(self):
        return (self.left, self.right)

    def label(self):
        return self.op

    def _apply(self, ev, args):
        left, right = args
        if self.op == "+":
            return left + right
        if self.op == "-":
            return left - right
        if self.op == "*":
            return left * right
        zeros = np.flatnonzero(right.value == 0)
        if zeros.size:
            raise DivisionByZero(ev.points[zeros[0]])
        return left / right

    def to_text(self):
        return f"({self.left.to_text()} {self.op} {self.right.to_text()})"

    def conjugate(self):
        return _BUILDERS[self.op](self.left.conjugate(), self.right.conjugate())

    def derivative(self, axis):
        dl, dr = self.left.derivative(axis), self.right.derivative(axis)
        if self.op == "+":
            return add(dl, dr)
        if self.op == "-":
            return sub(dl, dr)
        if self.op == "*":
            return add(mul(dl, self.right), mul(self.left, dr))
        return div(
            sub(mul(dl, self.right), mul(self.left, dr)),
            power(self.right, 2),
        )


@dataclass(frozen=True)
class Power(Expression):
    base: Expression
    exponent: int

    def children(self):
        return (self.base,)

    def label(self):
        return self.exponent

    def _apply(self, ev, args):
        (base,) = args
        if self.exponent < 0:
            zeros = np.flatnonzero(base.value == 0)
            if zeros.size:
                raise DivisionByZero(ev.points[zeros[0]])
        return base.power(self.exponent)

    def to_text(self):
        return f"{_wrap(self.base)}^{self.exponent}"

    def conjugate(self):
        return power(self.base.conjugate(), self.exponent)

    def derivative(self, axis):
        n = self.exponent
        return mul(
            mul(Constant(complex(n)), power(self.base, n - 1)),
            self.base.derivative(axis),
        )


@dataclass(frozen=True)
class Call(Expression):
    name: str
    argument: Expression

    def children(self):
        return (self.argument,)

    def label(self):
        return self.name

    def _apply(self, ev, args):
        return getattr(args[0], self.name)()

    def to_text(self):
        return f"{self.name}({self.argument.to_text()})"

    def conjugate(self):
        # sin, cos and exp have real Taylor coefficients.
        return Call(self.name, self.argument.conjugate())

    def derivative(self, axis):
        inner = self.argument.derivative(axis)
        if self.name == "exp":
            outer = self
        elif self.name == "sin":
            outer = Call("cos", self.argument)
        else:
            outer = neg(Call("sin", self.argument))
        return mul(outer, inner)


ZERO = Constant(0j)
ONE = Constant(1 + 0j)
I = Constant(1j)


def _wrap(node):
    if isinstance(node, (Variable, Call)):
        return node.to_text()
    atomic = isinstance(node, Constant) and (
        node.value == 1j or (node.value.imag == 0 and node.value.real >= 0)
    )
    return node.to_text() if atomic else f"({node.to_text()})"


# --------------------------
# Builders with constant folding
# --------------------------
def as_expression(value):
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float, complex, np.number)):
        return Constant(complex(value))
    raise TypeError(f"cannot use {type(value).__name__} as an expression")


def _is(node, value):
    return isinstance(node, Constant) and node.value == value


def add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value + b.value)
    return BinaryOp("+", a, b)


def sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value - b.value)
    return BinaryOp("-", a, b)


def mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value * b.value)
    return BinaryOp("*", a, b)


def div(a, b):
    if _is(b, 1):
        return a
    if _is(a, 0):
        return ZERO
    return BinaryOp("/", a, b)


def neg(a):
    if isinstance(a, Constant):
        return Constant(-a.value)
    if isinstance(a, Negate):
        return a.operand
    return Negate(a)


def power(base, n):
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return base
    return Power(base, n)


def call(name, argument):
    if name not in FUNCTIONS:
        raise UnknownIdentifier(name)
    return Call(name, argument)


_BUILDERS = {"+": add, "-": sub, "*": mul, "/": div}


# --------------------------
# Parser
# --------------------------
_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)
_VARIABLE = re.compile(r"x([1-9]\d*)")


def _tokenize(text):
    tokens = []
    position = 0
    while position < len(text):
        if text[position:].strip() == "":
            break
        match = _TOKEN.match(text, position)
        if match is None:
            offset = position + len(text[position:]) - len(text[position:].lstrip())
            raise ParseError(f"unexpected character {text[offset]!r}", offset)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append((kind, match.group(kind), start))
        position = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self):
        return self.tokens[self.index]

    def advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, op):
        kind, value, position = self.current
        if kind != "op" or value != op:
            found = repr(value) if kind != "end" else "end of input"
            raise ParseError(f"expected {op!r}, found {found}", position)
        self.advance()

    def parse(self):
        if self.current[0] == "end":
            raise ParseError("empty expression", 0)
        node = self.expr()
        kind, value, position = self.current
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", position)
        return node

    def expr(self):
        node = self.term()
        while self.current[0] == "op" and self.current[1] in "+-":
            op = self.advance()[1]
            node = BinaryOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.current[0] == "op" and self.current[1] in "*/":
            op = self.advance()[1]
            node = BinaryOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.current[0] == "op" and self.current[1] == "^":
            self.advance()
            sign = 1
            if self.current[0] == "op" and self.current[1] == "-":
                self.advance()
                sign = -1
            kind, value, position = self.current
            if kind != "number" or not value.isdigit():
                raise ParseError("exponent must be an integer literal", position)
            self.advance()
            node = Power(node, sign * int(value))
        return node

    def base(self):
        kind, value, position = self.current
        if kind == "number":
            self.advance()
            return Constant(complex(float(value)))
        if kind == "name":
            self.advance()
            if value == "i":
                return Constant(1j)
            if value == "pi":
                return Constant(complex(math.pi))
            if value in FUNCTIONS:
                self.expect("(")
                argument = self.expr()
                self.expect(")")
                return Call(value, argument)
            match = _VARIABLE.fullmatch(value)
            if match and int(match.group(1)) <= MAX_VARIABLE:
                return Variable(int(match.group(1)))
            raise UnknownIdentifier(value, position)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "op" and value == "-":
            self.advance()
            return Negate(self.base())
        found = repr(value) if kind != "end" else "end of input"
        raise ParseError(f"unexpected {found}", position)


def parse_expression(text):
    """Parse `text` into an immutable expression tree."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


def eval_with_gradient(expression, point, dim):
    """Value and the `dim` partial derivatives of `expression` at a single point."""
    if hasattr(point, "as_array"):
        point = point.as_array()
    result = expression.evaluate(np.asarray(point, dtype=float).reshape(1, -1), dim)
    return complex(result.value[0]), tuple(complex(g) for g in result.grad[0])


# --------------------------
# Matrix-valued fields
# --------------------------
@dataclass(frozen=True)
class MatrixValuedField:
    """A 2×2 matrix of expressions."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(as_expression(e) for e in row) for row in self.entries)
        if len(rows) != 2 or any(len(row) != 2 for row in rows):
            raise ValueError("a matrix-valued field is 2x2")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_texts(cls, rows):
        return cls(tuple(tuple(parse_expression(text) for text in row) for row in rows))

    @classmethod
    def constant(cls, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        return cls(tuple(tuple(Constant(complex(v)) for v in row) for row in matrix))

    @classmethod
    def identity(cls):
        return cls(((ONE, ZERO), (ZERO, ONE)))

    @classmethod
    def zeros(cls):
        return cls(((ZERO, ZERO), (ZERO, ZERO)))

    @classmethod
    def diagonal(cls, a, b):
        return cls(((as_expression(a), ZERO), (ZERO, as_expression(b))))

    def __getitem__(self, index):
        i, j = index
        return self.entries[i][j]

    def to_texts(self):
        return [[entry.to_text() for entry in row] for row in self.entries]

    def variables(self):
        found = frozenset()
        for row in self.entries:
            for entry in row:
                found |= entry.variables()
        return found

    def check_dimension(self, dim):
        for index in self.variables():
            if index > dim:
                raise UnknownIdentifier(f"x{index}")

    def _map(self, fn):
        return MatrixValuedField(tuple(tuple(fn(e) for e in row) for row in self.entries))

    def _combine(self, other, fn):
        rows = zip(self.entries, other.entries)
        return MatrixValuedField(tuple(tuple(fn(a, b) for a, b in zip(r, s)) for r, s in rows))

    def __add__(self, other):
        return self._combine(other, add)

    def __sub__(self, other):
        return self._combine(other, sub)

    def __neg__(self):
        return self._map(neg)

    def __matmul__(self, other):
        a, b = self.entries, other.entries
        return MatrixValuedField(
            tuple(
                tuple(add(mul(a[i][0], b[0][j]), mul(a[i][1], b[1][j])) for j in range(2))
                for i in range(2)
            )
        )

    def scale(self, factor):
        factor = as_expression(factor)
        return self._map(lambda e: mul(factor, e))

    def adjoint(self):
        """Conjugate transpose."""
        a = self.entries
        return MatrixValuedField(
            tuple(tuple(a[j][i].conjugate() for j in range(2)) for i in range(2))
        )

    def trace(self):
        return add(self.entries[0][0], self.entries[1][1])

    def det(self):
        a = self.entries
        return sub(mul(a[0][0], a[1][1]), mul(a[0][1], a[1][0]))

    def adjugate(self):
        a = self.entries
        return MatrixValuedField(((a[1][1], neg(a[0][1])), (neg(a[1][0]), a[0][0])))

    def inverse(self):
        determinant = self.det()
        return self.adjugate()._map(lambda e: div(e, determinant))

    def derivative(self, axis):
        return self._map(lambda e: e.derivative(axis))

    def evaluate(self, points, dim=None):
        """Values (P, 2, 2) and gradients (P, dim, 2, 2) at every row of `points`."""
        return evaluate_fields([self], points, dim)[0]


def evaluate_fields(fields, points, dim=None):
    """Evaluate several matrix fields with one shared evaluation cache."""
    points = _as_points(points, dim)
    for field_ in fields:
        field_.check_dimension(points.shape[1])
    size, dim = points.shape
    roots = [entry for field_ in fields for row in field_.entries for entry in row]
    duals = iter(_Evaluation(points).run(roots))
    results = []
    for _ in fields:
        values = np.empty((size, 2, 2), dtype=complex)
        grads = np.empty((size, dim, 2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                dual = next(duals)
                values[:, i, j] = dual.value
                grads[:, :, i, j] = dual.grad
        results.append((values, grads))
    return results
