"""Reverse-mode automatic differentiation over scalar expression graphs.

A :class:`Tape` records every primitive applied to :class:`Var` operands
together with the local partial derivatives of that primitive. One backward
sweep over the tape in reverse creation order accumulates adjoints.

The primitive functions in this module (``exp``, ``log_sum_exp``,
``normal_lpdf``, ...) accept plain floats as well, in which case they return
floats and nothing is recorded. Model code written against them can therefore
be evaluated either way.

Example
-------
>>> value, g = grad(lambda v: v[0] * v[1], [2.0, 3.0])
>>> value, list(g)
(6.0, [3.0, 2.0])
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from . import numkit
from .numkit import DomainError

__all__ = [
    "Var",
    "Tape",
    "AutodiffDomainError",
    "grad",
    "supported_primitive_partials",
    "exp",
    "log",
    "log1p",
    "expit",
    "log_expit",
    "square",
    "log_sum_exp",
    "add_n",
    "bernoulli_lpmf",
    "bernoulli_logit_lpmf",
    "normal_lpdf",
    "beta_lpdf",
    "gamma_lpdf",
    "half_normal_lpdf",
]


class AutodiffDomainError(DomainError):
    """Domain violation raised while recording a primitive."""

    def __init__(self, kind: str, node: int, inputs, reason: str):
        super().__init__(f"{kind} at node {node} with inputs {tuple(inputs)}: {reason}")
        self.kind = kind
        self.node = node
        self.inputs = tuple(inputs)


class Tape:
    """Append-only record of primitive applications."""

    __slots__ = ("values", "parents", "partials", "kinds")

    def __init__(self):
        self.values: list[float] = []
        self.parents: list[tuple[int, ...]] = []
        self.partials: list[tuple[float, ...]] = []
        self.kinds: list[str] = []

    def __len__(self):
        return len(self.values)

    def variable(self, value: float) -> "Var":
        return self._push("input", float(value), (), ())

    def _push(self, kind, value, parents, partials) -> "Var":
        idx = len(self.values)
        self.values.append(value)
        self.parents.append(parents)
        self.partials.append(partials)
        self.kinds.append(kind)
        return Var(self, idx, value)

    def backward(self, out: "Var") -> list[float]:
        """Adjoints of every node with respect to ``out``."""
        adj = [0.0] * len(self.values)
        adj[out.idx] = 1.0
        parents = self.parents
        partials = self.partials
        for i in range(out.idx, -1, -1):
            a = adj[i]
            if a == 0.0:
                continue
            for p, d in zip(parents[i], partials[i]):
                adj[p] += a * d
        return adj


class Var:
    """A scalar recorded on a tape."""

    __slots__ = ("tape", "idx", "value")

    def __init__(self, tape: Tape, idx: int, value: float):
        self.tape = tape
        self.idx = idx
        self.value = value

    def __repr__(self):
        return f"Var(node={self.idx}, value={self.value!r})"

    def __float__(self):
        return self.value

    def __add__(self, other):
        return _apply("add", self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return _apply("sub", self, other)

    def __rsub__(self, other):
        return _apply("sub", other, self)

    def __mul__(self, other):
        return _apply("mul", self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _apply("div", self, other)

    def __rtruediv__(self, other):
        return _apply("div", other, self)

    def __neg__(self):
        return _apply("neg", self)

    def __pos__(self):
        return self


def _value(x) -> float:
    return x.value if isinstance(x, Var) else float(x)


# Each rule maps float inputs to (value, partials), or raises DomainError.


def _softmax(xs):
    m = max(xs)
    if m == -math.inf:
        raise DomainError("all inputs are -inf")
    e = [math.exp(x - m) for x in xs]
    s = math.fsum(e)
    return m + math.log(s), tuple(v / s for v in e)


def _rule_log(x):
    if not x > 0.0:
        raise DomainError("log of a non-positive number")
    return math.log(x), (1.0 / x,)


def _rule_log1p(x):
    if not x > -1.0:
        raise DomainError("log1p of a number <= -1")
    return math.log1p(x), (1.0 / (1.0 + x),)


def _rule_div(x, y):
    if y == 0.0:
        raise DomainError("division by zero")
    return x / y, (1.0 / y, -x / (y * y))


def _rule_exp(x):
    v = math.exp(x) if x < 709.0 else math.inf
    if math.isinf(v):
        raise DomainError("exp overflow")
    return v, (v,)


def _rule_expit(x):
    s = numkit.expit(x)
    return s, (s * (1.0 - s),)


def _rule_log_expit(x):
    return numkit.log_expit(x), (numkit.expit(-x),)


def _rule_bernoulli(y, p):
    v = numkit.bernoulli_lpmf(int(y), p)
    return v, (0.0, 1.0 / p if y == 1 else -1.0 / (1.0 - p))


def _rule_bernoulli_logit(y, x):
    v = numkit.bernoulli_logit_lpmf(int(y), x)
    return v, (0.0, y - numkit.expit(x))


def _rule_normal(x, mu, sigma):
    v = numkit.normal_lpdf(x, mu, sigma)
    z = (x - mu) / sigma
    return v, (-z / sigma, z / sigma, (z * z - 1.0) / sigma)


def _rule_beta(x, a, b):
    v = numkit.beta_lpdf(x, a, b)
    psi_ab = numkit.digamma(a + b)
    return v, (
        (a - 1.0) / x - (b - 1.0) / (1.0 - x),
        math.log(x) - numkit.digamma(a) + psi_ab,
        math.log1p(-x) - numkit.digamma(b) + psi_ab,
    )


def _rule_gamma(x, shape, rate):
    v = numkit.gamma_lpdf(x, shape, rate)
    return v, (
        (shape - 1.0) / x - rate,
        math.log(rate) - numkit.digamma(shape) + math.log(x),
        shape / rate - x,
    )


def _rule_half_normal(x, scale):
    v = numkit.half_normal_lpdf(x, scale)
    return v, (-x / (scale * scale), (x * x / (scale * scale) - 1.0) / scale)


_RULES: dict[str, Callable] = {
    "add": lambda x, y: (x + y, (1.0, 1.0)),
    "sub": lambda x, y: (x - y, (1.0, -1.0)),
    "mul": lambda x, y: (x * y, (y, x)),
    "div": _rule_div,
    "neg": lambda x: (-x, (-1.0,)),
    "exp": _rule_exp,
    "log": _rule_log,
    "log1p": _rule_log1p,
    "square": lambda x: (x * x, (2.0 * x,)),
    "expit": _rule_expit,
    "log_expit": _rule_log_expit,
    "sum": lambda *xs: (math.fsum(xs), (1.0,) * len(xs)),
    "log_sum_exp": lambda *xs: _softmax(xs),
    "bernoulli_lpmf": _rule_bernoulli,
    "bernoulli_logit_lpmf": _rule_bernoulli_logit,
    "normal_lpdf": _rule_normal,
    "beta_lpdf": _rule_beta,
    "gamma_lpdf": _rule_gamma,
    "half_normal_lpdf": _rule_half_normal,
}


def supported_primitive_partials(kind: str, inputs: Sequence[float]) -> tuple[float, ...]:
    """Exact local partial derivatives of primitive ``kind`` at ``inputs``."""
    try:
        rule = _RULES[kind]
    except KeyError:
        raise RuntimeError(f"unknown primitive kind {kind!r}") from None
    return rule(*[float(v) for v in inputs])[1]


def _apply(kind, *args):
    tape = None
    for a in args:
        if isinstance(a, Var):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise ValueError("operands belong to different tapes")
    vals = [_value(a) for a in args]
    try:
        value, partials = _RULES[kind](*vals)
    except DomainError as exc:
        node = len(tape) if tape is not None else -1
        raise AutodiffDomainError(kind, node, vals, str(exc)) from None
    if tape is None:
        return value
    parents = []
    local = []
    for a, d in zip(args, partials):
        if isinstance(a, Var):
            parents.append(a.idx)
            local.append(d)
    return tape._push(kind, value, tuple(parents), tuple(local))


def exp(x):
    return _apply("exp", x)


def log(x):
    return _apply("log", x)


def log1p(x):
    return _apply("log1p", x)


def square(x):
    return _apply("square", x)


def expit(x):
    return _apply("expit", x)


def log_expit(x):
    return _apply("log_expit", x)


def add_n(xs):
    """Sum of many terms recorded as a single node."""
    xs = list(xs)
    if not xs:
        return 0.0
    return _apply("sum", *xs)


def log_sum_exp(xs):
    xs = list(xs)
    if not xs:
        raise DomainError("log_sum_exp of an empty sequence")
    return _apply("log_sum_exp", *xs)


def bernoulli_lpmf(y, p):
    return _apply("bernoulli_lpmf", y, p)


def bernoulli_logit_lpmf(y, x):
    return _apply("bernoulli_logit_lpmf", y, x)


def normal_lpdf(x, mu, sigma):
    return _apply("normal_lpdf", x, mu, sigma)


def beta_lpdf(x, a, b):
    return _apply("beta_lpdf", x, a, b)


def gamma_lpdf(x, shape, rate):
    return _apply("gamma_lpdf", x, shape, rate)


def half_normal_lpdf(x, scale):
    return _apply("half_normal_lpdf", x, scale)


def grad(f: Callable[[list], object], at: Sequence[float]) -> tuple[float, np.ndarray]:
    """Value and gradient of scalar ``f`` at the point ``at``.

    ``f`` receives a list of :class:`Var` (one per coordinate) and must
    return a :class:`Var` or a float built from the primitives above.
    """
    tape = Tape()
    xs = [tape.variable(v) for v in at]
    out = f(xs)
    if not isinstance(out, Var):
        return float(out), np.zeros(len(xs))
    if out.tape is not tape:
        raise ValueError("f returned a Var from a foreign tape")
    adj = tape.backward(out)
    return out.value, np.array([adj[x.idx] for x in xs])
