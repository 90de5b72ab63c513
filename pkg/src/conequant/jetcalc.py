"""Second-order forward-mode jets over closed-form expressions.

A :class:`Jet` carries the value of a scalar field together with its gradient
and Hessian with respect to ``n`` coordinates.  The arrays may carry trailing
sample axes, so a single evaluation can cover many points at once::

    value : shape S
    grad  : shape (n,) + S
    hess  : shape (n, n) + S

Expressions are small trees built from :func:`variables`, numeric constants
(real or complex), the arithmetic operators and the elementary functions in
this module.  They can be evaluated to jets (:func:`eval_jet`) or
differentiated symbolically (:meth:`Expr.diff`), which is how third-order
quantities are reached while every numeric evaluation stays at order two.
"""

from __future__ import annotations

import numbers
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "EvaluationError",
    "Jet",
    "Expr",
    "Const",
    "Var",
    "Special",
    "ScalarField",
    "variables",
    "const",
    "sin",
    "cos",
    "tan",
    "exp",
    "log",
    "sqrt",
    "sign",
    "eval_jet",
    "fd_check",
]


class EvaluationError(ValueError):
    """Domain violation while evaluating an expression.

    ``subexpression`` names the innermost node whose evaluation failed.
    """

    def __init__(self, message: str, subexpression: str | None = None):
        self.reason = message
        self.subexpression = subexpression
        if subexpression is not None:
            message = f"{message} in '{subexpression}'"
        super().__init__(message)


def _is_real(a) -> bool:
    return not np.iscomplexobj(a)


class Jet:
    """Value, gradient and Hessian of a scalar at one or more points."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = value
        self.grad = grad
        self.hess = hess

    @property
    def n(self) -> int:
        return self.grad.shape[0]

    @classmethod
    def variable(cls, x, index: int, n: int) -> "Jet":
        x = np.asarray(x, dtype=float)
        grad = np.zeros((n,) + x.shape)
        grad[index] = 1.0
        return cls(x, grad, np.zeros((n, n) + x.shape))

    @classmethod
    def constant(cls, c, n: int, shape=()) -> "Jet":
        value = np.broadcast_to(np.asarray(c), shape).copy()
        dtype = value.dtype if np.iscomplexobj(value) else float
        return cls(
            value.astype(dtype),
            np.zeros((n,) + tuple(shape), dtype=dtype),
            np.zeros((n, n) + tuple(shape), dtype=dtype),
        )

    def chain(self, f0, f1, f2) -> "Jet":
        """Compose with a univariate function given f, f', f'' at ``value``."""
        g = self.grad
        outer = g[:, None] * g[None, :]
        return Jet(f0, f1 * g, f1 * self.hess + f2 * outer)

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value + other.value, self.grad + other.grad, self.hess + other.hess)
        return Jet(self.value + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            ga, gb = a.grad, b.grad
            cross = ga[:, None] * gb[None, :]
            return Jet(
                a.value * b.value,
                a.value * gb + b.value * ga,
                a.value * b.hess + b.value * a.hess + cross + np.swapaxes(cross, 0, 1),
            )
        return Jet(self.value * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        v = self.value
        if np.any(v == 0):
            raise EvaluationError("division by zero")
        inv = 1.0 / v
        return self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if np.any(np.asarray(other) == 0):
            raise EvaluationError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, c):
        if isinstance(c, Jet):
            return jet_exp(jet_log(self) * c)
        return jet_pow(self, c)

    def truncate(self, order: int) -> "Jet":
        if order >= 2:
            return self
        if order == 1:
            return Jet(self.value, self.grad, None)
        return Jet(self.value, None, None)

    def __repr__(self):
        return f"Jet(value={self.value!r}, grad={self.grad!r}, hess={self.hess!r})"


# ---------------------------------------------------------------------------
# elementary functions on jets (and plain numbers)


def jet_pow(u, c):
    if not isinstance(u, Jet):
        return np.power(u, c)
    v = u.value
    c_is_int = isinstance(c, numbers.Integral) or (
        isinstance(c, numbers.Real) and float(c).is_integer()
    )
    if c_is_int:
        c = int(c)
        if c == 0:
            return Jet.constant(1.0, u.n, np.shape(v))
        if c == 1:
            return u
        if c < 0 and np.any(v == 0):
            raise EvaluationError("zero raised to a negative power")
        if c == 2:
            return u * u
        # v**(c-2) is safe here: v != 0 whenever c < 2
        f2 = c * (c - 1) * v ** (c - 2) if c != 2 else 2.0
        f1 = c * v ** (c - 1)
        return u.chain(v**c, f1, f2)
    if _is_real(v) and np.any(v <= 0):
        raise EvaluationError("non-integer power of a non-positive base")
    if not _is_real(v) and np.any(v == 0):
        raise EvaluationError("non-integer power of zero")
    p = v ** (c - 2)
    return u.chain(p * v * v, c * p * v, c * (c - 1) * p)


def jet_sin(u):
    if not isinstance(u, Jet):
        return np.sin(u)
    s, c = np.sin(u.value), np.cos(u.value)
    return u.chain(s, c, -s)


def jet_cos(u):
    if not isinstance(u, Jet):
        return np.cos(u)
    s, c = np.sin(u.value), np.cos(u.value)
    return u.chain(c, -s, -c)


def jet_tan(u):
    c = np.cos(u.value if isinstance(u, Jet) else u)
    if np.any(c == 0):
        raise EvaluationError("tan at a pole")
    if not isinstance(u, Jet):
        return np.tan(u)
    t = np.tan(u.value)
    sec2 = 1.0 + t * t
    return u.chain(t, sec2, 2.0 * t * sec2)


def jet_exp(u):
    if not isinstance(u, Jet):
        return np.exp(u)
    e = np.exp(u.value)
    return u.chain(e, e, e)


def jet_log(u):
    v = u.value if isinstance(u, Jet) else np.asarray(u)
    if _is_real(v) and np.any(v <= 0):
        raise EvaluationError("log of a non-positive argument")
    if np.any(v == 0):
        raise EvaluationError("log of zero")
    if not isinstance(u, Jet):
        return np.log(u)
    inv = 1.0 / v
    return u.chain(np.log(v), inv, -inv * inv)


def jet_sqrt(u):
    v = u.value if isinstance(u, Jet) else np.asarray(u)
    if _is_real(v) and np.any(v < 0):
        raise EvaluationError("sqrt of a negative argument")
    if not isinstance(u, Jet):
        return np.sqrt(u)
    if np.any(v == 0):
        raise EvaluationError("sqrt is not differentiable at zero")
    s = np.sqrt(v)
    return u.chain(s, 0.5 / s, -0.25 / (s * v))


def jet_abs(u):
    v = u.value if isinstance(u, Jet) else np.asarray(u)
    if not _is_real(v):
        raise EvaluationError("abs of a complex argument")
    if np.any(v == 0):
        raise EvaluationError("abs is not differentiable at zero")
    if not isinstance(u, Jet):
        return np.abs(u)
    sg = np.sign(v)
    return u.chain(np.abs(v), sg, np.zeros_like(v))


def jet_sign(u):
    v = u.value if isinstance(u, Jet) else np.asarray(u)
    if not _is_real(v):
        raise EvaluationError("sign of a complex argument")
    if np.any(v == 0):
        raise EvaluationError("sign is discontinuous at zero")
    if not isinstance(u, Jet):
        return np.sign(u)
    z = np.zeros_like(v)
    return u.chain(np.sign(v), z, z)


# ---------------------------------------------------------------------------
# expression trees


def _wrap(x) -> "Expr":
    if isinstance(x, Expr):
        return x
    if isinstance(x, numbers.Number):
        return Const(x)
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def _is_const(e, c=None) -> bool:
    return isinstance(e, Const) and (c is None or e.value == c)


class Expr:
    """Node of a closed-form scalar expression."""

    precedence = 100

    def evaluate(self, env: Sequence, memo: dict):
        key = id(self)
        if key in memo:
            return memo[key]
        try:
            out = self._evaluate(env, memo)
        except EvaluationError as err:
            if err.subexpression is None:
                raise EvaluationError(err.reason, str(self)) from None
            raise
        memo[key] = out
        return out

    def _evaluate(self, env, memo):
        raise NotImplementedError

    def diff(self, index: int) -> "Expr":
        """Symbolic partial derivative with respect to variable ``index``."""
        raise NotImplementedError

    # operator sugar -------------------------------------------------------
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return add(self, neg(_wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), neg(self))

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __pow__(self, other):
        return power(self, _wrap(other))

    def __rpow__(self, other):
        return power(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __abs__(self):
        return Func("abs", self)

    def _paren(self, child: "Expr") -> str:
        s = str(child)
        return f"({s})" if child.precedence < self.precedence else s


class Const(Expr):
    def __init__(self, value):
        self.value = value

    def _evaluate(self, env, memo):
        return self.value

    def diff(self, index):
        return ZERO

    def __str__(self):
        v = self.value
        if isinstance(v, complex):
            return f"({v.real:g}{v.imag:+g}j)" if v.real else f"{v.imag:g}j"
        return f"{v:g}" if isinstance(v, float) else str(v)

    @property
    def precedence(self):
        v = self.value
        return 0 if (isinstance(v, complex) or v < 0) else 100


ZERO = Const(0)
ONE = Const(1)


class Var(Expr):
    def __init__(self, index: int, name: str):
        self.index = index
        self.name = name

    def _evaluate(self, env, memo):
        return env[self.index]

    def diff(self, index):
        return ONE if index == self.index else ZERO

    def __str__(self):
        return self.name


class Add(Expr):
    precedence = 10

    def __init__(self, a, b):
        self.a, self.b = a, b

    def _evaluate(self, env, memo):
        return self.a.evaluate(env, memo) + self.b.evaluate(env, memo)

    def diff(self, index):
        return add(self.a.diff(index), self.b.diff(index))

    def __str__(self):
        if isinstance(self.b, Neg):
            return f"{self.a} - {self.b._paren(self.b.a)}"
        return f"{self.a} + {self.b}"


class Neg(Expr):
    precedence = 15

    def __init__(self, a):
        self.a = a

    def _evaluate(self, env, memo):
        return -self.a.evaluate(env, memo)

    def diff(self, index):
        return neg(self.a.diff(index))

    def __str__(self):
        return f"-{self._paren(self.a)}"


class Mul(Expr):
    precedence = 20

    def __init__(self, a, b):
        self.a, self.b = a, b

    def _evaluate(self, env, memo):
        return self.a.evaluate(env, memo) * self.b.evaluate(env, memo)

    def diff(self, index):
        return add(mul(self.a.diff(index), self.b), mul(self.a, self.b.diff(index)))

    def __str__(self):
        return f"{self._paren(self.a)}*{self._paren(self.b)}"


class Div(Expr):
    precedence = 20

    def __init__(self, a, b):
        self.a, self.b = a, b

    def _evaluate(self, env, memo):
        a = self.a.evaluate(env, memo)
        b = self.b.evaluate(env, memo)
        if not isinstance(b, Jet) and np.any(np.asarray(b) == 0):
            raise EvaluationError("division by zero")
        return a / b

    def diff(self, index):
        da, db = self.a.diff(index), self.b.diff(index)
        return add(div(da, self.b), neg(div(mul(self.a, db), mul(self.b, self.b))))

    def __str__(self):
        b = str(self.b)
        if self.b.precedence <= self.precedence:
            b = f"({b})"
        return f"{self._paren(self.a)}/{b}"


class Pow(Expr):
    precedence = 30

    def __init__(self, base, exponent):
        self.base, self.exponent = base, exponent

    def _evaluate(self, env, memo):
        b = self.base.evaluate(env, memo)
        e = self.exponent.evaluate(env, memo)
        if isinstance(e, Jet):
            if not isinstance(b, Jet):
                b = Jet.constant(b, e.n, np.shape(e.value))
            return jet_exp(jet_log(b) * e)
        if isinstance(b, Jet):
            return jet_pow(b, e)
        return np.power(b, e)

    def diff(self, index):
        b, e = self.base, self.exponent
        if isinstance(e, Const):
            return mul(mul(e, power(b, Const(e.value - 1))), b.diff(index))
        return mul(self, add(mul(e.diff(index), Func("log", b)), div(mul(e, b.diff(index)), b)))

    def __str__(self):
        base = str(self.base)
        if self.base.precedence <= self.precedence:
            base = f"({base})"
        exp_ = str(self.exponent)
        if self.exponent.precedence <= self.precedence:
            exp_ = f"({exp_})"
        return f"{base}**{exp_}"


_FUNCS: dict[str, Callable] = {
    "sin": jet_sin,
    "cos": jet_cos,
    "tan": jet_tan,
    "exp": jet_exp,
    "log": jet_log,
    "sqrt": jet_sqrt,
    "abs": jet_abs,
    "sign": jet_sign,
}


class Func(Expr):
    """Elementary function applied to a subexpression."""

    def __init__(self, name: str, arg: Expr):
        if name not in _FUNCS:
            raise ValueError(f"unknown function {name!r}")
        self.name, self.arg = name, arg

    def _evaluate(self, env, memo):
        return _FUNCS[self.name](self.arg.evaluate(env, memo))

    def outer_derivative(self) -> Expr:
        a = self.arg
        name = self.name
        if name == "sin":
            return Func("cos", a)
        if name == "cos":
            return neg(Func("sin", a))
        if name == "tan":
            return add(ONE, mul(self, self))
        if name == "exp":
            return self
        if name == "log":
            return div(ONE, a)
        if name == "sqrt":
            return div(Const(0.5), self)
        if name == "abs":
            return Func("sign", a)
        return ZERO  # sign

    def diff(self, index):
        return mul(self.outer_derivative(), self.arg.diff(index))

    def __str__(self):
        return f"{self.name}({self.arg})"


class Special(Expr):
    """Univariate special function node.

    Subclasses supply :meth:`derivatives` (numeric f, f', f'' of a plain array
    argument) and :meth:`outer_derivative` (symbolic f' of the node argument).
    """

    def __init__(self, arg: Expr):
        self.arg = arg

    def derivatives(self, x):
        raise NotImplementedError

    def outer_derivative(self) -> Expr:
        raise NotImplementedError

    def _evaluate(self, env, memo):
        u = self.arg.evaluate(env, memo)
        if isinstance(u, Jet):
            return u.chain(*self.derivatives(u.value))
        return self.derivatives(np.asarray(u))[0]

    def diff(self, index):
        return mul(self.outer_derivative(), self.arg.diff(index))


# constructors with constant folding of zeros and ones ----------------------


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Add(a, b)


def neg(a: Expr) -> Expr:
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0):
        raise EvaluationError("division by zero", f"{a}/0")
    if _is_const(a, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    return Div(a, b)


def power(b: Expr, e: Expr) -> Expr:
    if _is_const(e, 0):
        return ONE
    if _is_const(e, 1):
        return b
    return Pow(b, e)


def const(c) -> Const:
    return Const(c)


def variables(names: str | Sequence[str]) -> tuple[Var, ...]:
    """Coordinate projections, e.g. ``t, r, phi = variables("t r phi")``."""
    if isinstance(names, str):
        names = names.replace(",", " ").split()
    return tuple(Var(i, name) for i, name in enumerate(names))


def _func(name):
    def f(x):
        if isinstance(x, Expr):
            return Func(name, x)
        return _FUNCS[name](x)

    f.__name__ = name
    f.__doc__ = f"{name} of an expression, jet or number."
    return f


sin = _func("sin")
cos = _func("cos")
tan = _func("tan")
exp = _func("exp")
log = _func("log")
sqrt = _func("sqrt")
sign = _func("sign")


# ---------------------------------------------------------------------------
# fields


class ScalarField:
    """A closed-form expression together with its coordinate names."""

    def __init__(self, expr, names: Sequence[str]):
        self.expr = _wrap(expr)
        self.names = tuple(names)

    @classmethod
    def from_function(cls, fn: Callable[..., Expr], names: str | Sequence[str]):
        vs = variables(names)
        return cls(fn(*vs), [v.name for v in vs])

    @property
    def arity(self) -> int:
        return len(self.names)

    def diff(self, index: int) -> "ScalarField":
        return ScalarField(self.expr.diff(index), self.names)

    def _combine(self, other, op):
        if isinstance(other, ScalarField):
            if other.names != self.names:
                raise ValueError("fields live on different charts")
            other = other.expr
        return ScalarField(op(self.expr, _wrap(other)), self.names)

    def __add__(self, other):
        return self._combine(other, add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: add(a, neg(b)))

    def __mul__(self, other):
        return self._combine(other, mul)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(neg(self.expr), self.names)

    def __str__(self):
        return str(self.expr)

    def __repr__(self):
        return f"ScalarField({self.expr}, names={self.names})"


def _as_field(f) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    raise TypeError("expected a ScalarField")


def evaluate(f: ScalarField, x) -> np.ndarray:
    """Plain value of ``f`` at point(s) ``x`` of shape (arity,) or (arity, P)."""
    f = _as_field(f)
    x = np.asarray(x, dtype=float)
    if x.shape[0] != f.arity:
        raise ValueError(f"point has dimension {x.shape[0]}, field arity is {f.arity}")
    out = f.expr.evaluate(list(x), {})
    return np.broadcast_to(out, x.shape[1:]).copy()


def eval_jet(f: ScalarField, x, order: int = 2) -> Jet:
    """Value and partial derivatives up to ``order`` of ``f`` at ``x``.

    ``x`` has shape ``(arity,)`` for one point or ``(arity, P)`` for P points.
    Raises :class:`EvaluationError` on a domain violation.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    f = _as_field(f)
    x = np.asarray(x, dtype=float)
    n = f.arity
    if x.shape[0] != n:
        raise ValueError(f"point has dimension {x.shape[0]}, field arity is {n}")
    env = [Jet.variable(x[i], i, n) for i in range(n)]
    out = f.expr.evaluate(env, {})
    if not isinstance(out, Jet):
        out = Jet.constant(out, n, x.shape[1:])
    elif out.value.shape != x.shape[1:]:
        shape = x.shape[1:]
        out = Jet(
            np.broadcast_to(out.value, shape).copy(),
            np.broadcast_to(out.grad, (n,) + shape).copy(),
            np.broadcast_to(out.hess, (n, n) + shape).copy(),
        )
    return out.truncate(order)


def fd_check(f: ScalarField, x, step: float = 1e-5) -> float:
    """Largest relative gap between jet derivatives and central differences.

    First partials are compared with central differences of the value;
    second partials with central differences of the jet gradient, which keeps
    the rounding error at O(eps/step) instead of O(eps/step**2).
    Gaps are measured as ``|jet - fd| / max(1, |jet|)``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    f = _as_field(f)
    x = np.asarray(x, dtype=float)
    n = f.arity
    jet = eval_jet(f, x, 2)
    worst = 0.0
    for i in range(n):
        e = np.zeros_like(x)
        e[i] = step
        plus = eval_jet(f, x + e, 1)
        minus = eval_jet(f, x - e, 1)
        d1 = (plus.value - minus.value) / (2 * step)
        worst = max(worst, float(np.max(np.abs(jet.grad[i] - d1) / np.maximum(1.0, np.abs(jet.grad[i])))))
        d2 = (plus.grad - minus.grad) / (2 * step)
        gap = np.abs(jet.hess[i] - d2) / np.maximum(1.0, np.abs(jet.hess[i]))
        worst = max(worst, float(np.max(gap)))
    return worst
