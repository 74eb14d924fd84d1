"""Truncated multivariate Taylor arithmetic.

A :class:`TaylorScalar` stores the coefficients of a polynomial in one or more
variables, each truncated at its own degree.  The first variable is normally
the curve parameter tau; extra variables of size 2 act as nilpotent
perturbations (``eps**2 == 0``), which turns the same class into a
"derivative tower": the eps-component of ``f(x + eps)`` is ``f'(x)``.
Further size-``K+1`` variables can be appended to nest a second Taylor
expansion inside the first; total derivatives of partial derivatives are
computed this way.

Coefficient arrays carry leading batch dimensions, so one evaluation handles
many sample points at once.  Storage layout is ``batch + axes``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import NonzeroInnerConstant, NotInvertible, OrderExceeded, OrderMismatch, ZeroConstantTerm

__all__ = [
    "TaylorScalar",
    "TowerScalar",
    "sqrt",
    "atan",
    "exp",
    "log",
    "sin",
    "cos",
    "power",
    "taylor_arith",
    "taylor_compose",
    "taylor_invert",
    "total_derivative_read",
    "make_tower",
    "tower_part",
]


@lru_cache(maxsize=None)
def _mul_plan(axes: tuple[int, ...]):
    """Index pairs (i, j) contributing to each output coefficient, grouped by output."""
    size = int(np.prod(axes, dtype=int))
    left, right, starts = [], [], []
    for alpha in np.ndindex(*axes):
        starts.append(len(left))
        for beta in np.ndindex(*(a + 1 for a in alpha)):
            gamma = tuple(a - b for a, b in zip(alpha, beta))
            left.append(np.ravel_multi_index(beta, axes) if axes else 0)
            right.append(np.ravel_multi_index(gamma, axes) if axes else 0)
    assert len(starts) == size
    return np.array(left), np.array(right), np.array(starts)


def _nilpotency(axes: tuple[int, ...]) -> int:
    # delta**n == 0 for any element with zero constant term
    return sum(a - 1 for a in axes) + 1


class TaylorScalar:
    """Truncated Taylor coefficients, optionally batched.

    ``coeffs`` has shape ``batch + axes`` where the trailing ``naxes``
    dimensions index powers of the series variables.
    """

    __slots__ = ("data", "axes")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, coeffs, naxes: int = 1):
        data = np.asarray(coeffs, dtype=float)
        if data.ndim < naxes:
            raise ValueError(f"need at least {naxes} dimensions, got {data.ndim}")
        self.data = data
        self.axes = tuple(data.shape[data.ndim - naxes:])

    # --- construction -------------------------------------------------
    @classmethod
    def _wrap(cls, data: np.ndarray, axes: tuple[int, ...]) -> "TaylorScalar":
        obj = object.__new__(cls)
        obj.data = data
        obj.axes = axes
        return obj

    @classmethod
    def constant(cls, value, axes: tuple[int, ...] = ()) -> "TaylorScalar":
        value = np.asarray(value, dtype=float)
        data = np.zeros(value.shape + tuple(axes))
        data[(Ellipsis,) + (0,) * len(axes)] = value
        return cls._wrap(data, tuple(axes))

    @classmethod
    def variable(cls, value, order: int) -> "TaylorScalar":
        """The series ``value + tau`` truncated at ``order``."""
        out = cls.constant(value, (order + 1,))
        if order >= 1:
            out.data[..., 1] = 1.0
        return out

    @classmethod
    def stack(cls, coeffs: Sequence, axes: tuple[int, ...] | None = None) -> "TaylorScalar":
        """Build a series in a new trailing variable from its coefficients.

        Each coefficient is a TaylorScalar over ``axes`` or a plain number/array.
        """
        if axes is None:
            axes = next((c.axes for c in coeffs if isinstance(c, TaylorScalar)), ())
        parts = [_as_data(c, axes) for c in coeffs]
        parts = np.broadcast_arrays(*parts)
        return cls._wrap(np.stack(parts, axis=-1), tuple(axes) + (len(coeffs),))

    # --- views --------------------------------------------------------
    @property
    def naxes(self) -> int:
        return len(self.axes)

    @property
    def order(self) -> int:
        """Truncation order of the first variable."""
        if not self.axes:
            return 0
        return self.axes[0] - 1

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.data.shape[: self.data.ndim - self.naxes]

    @property
    def const(self) -> np.ndarray:
        return self.data[(Ellipsis,) + (0,) * self.naxes]

    @property
    def coeffs(self) -> np.ndarray:
        return self.data

    def _axis(self, axis: int) -> int:
        if axis < 0:
            axis += self.naxes
        if not 0 <= axis < self.naxes:
            raise IndexError(f"axis {axis} out of range for {self.naxes} series variables")
        return self.data.ndim - self.naxes + axis

    def part(self, axis: int, k: int) -> "TaylorScalar":
        """Coefficient of ``var**k`` along one variable, as a series in the others."""
        ax = self._axis(axis)
        rel = ax - (self.data.ndim - self.naxes)
        if not 0 <= k < self.axes[rel]:
            raise OrderExceeded(f"coefficient {k} not stored (size {self.axes[rel]})")
        axes = self.axes[:rel] + self.axes[rel + 1:]
        return TaylorScalar._wrap(np.take(self.data, k, axis=ax), axes)

    def extend(self, *sizes: int) -> "TaylorScalar":
        """Embed into an algebra with extra trailing variables (as a constant in them)."""
        data = np.zeros(self.data.shape + sizes)
        data[(Ellipsis,) + (0,) * len(sizes)] = self.data
        return TaylorScalar._wrap(data, self.axes + tuple(sizes))

    def truncate(self, *sizes: int) -> "TaylorScalar":
        if len(sizes) != self.naxes or any(s > a for s, a in zip(sizes, self.axes)):
            raise OrderMismatch(f"cannot truncate {self.axes} to {sizes}")
        idx = (Ellipsis,) + tuple(slice(0, s) for s in sizes)
        return TaylorScalar._wrap(self.data[idx].copy(), tuple(sizes))

    def deriv(self, axis: int = 0) -> "TaylorScalar":
        """d/d(var) along one variable; the top coefficient becomes unknown (0)."""
        ax = self._axis(axis)
        size = self.data.shape[ax]
        out = np.zeros_like(self.data)
        if size > 1:
            k = np.arange(1, size, dtype=float)
            shape = [1] * self.data.ndim
            shape[ax] = size - 1
            src = np.take(self.data, np.arange(1, size), axis=ax) * k.reshape(shape)
            sl = [slice(None)] * self.data.ndim
            sl[ax] = slice(0, size - 1)
            out[tuple(sl)] = src
        return TaylorScalar._wrap(out, self.axes)

    def take_batch(self, index, axis: int = 0) -> "TaylorScalar":
        return TaylorScalar._wrap(np.take(self.data, index, axis=axis), self.axes)

    def broadcast_batch(self, batch_shape: tuple[int, ...]) -> "TaylorScalar":
        return TaylorScalar._wrap(np.broadcast_to(self.data, tuple(batch_shape) + self.axes), self.axes)

    def __repr__(self) -> str:
        return f"TaylorScalar(axes={self.axes}, batch={self.batch_shape}, data={self.data!r})"

    # --- arithmetic -----------------------------------------------------
    def _check(self, other: "TaylorScalar") -> None:
        if other.axes != self.axes:
            raise OrderMismatch(f"series shapes differ: {self.axes} vs {other.axes}")

    def _scalar(self, value) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        return value.reshape(value.shape + (1,) * self.naxes)

    def _add_const(self, value, sign: float = 1.0) -> "TaylorScalar":
        value = np.asarray(value, dtype=float)
        shape = np.broadcast_shapes(self.batch_shape, value.shape) + self.axes
        data = np.array(np.broadcast_to(self.data, shape))
        data[(Ellipsis,) + (0,) * self.naxes] += sign * value
        return TaylorScalar._wrap(data, self.axes)

    def __neg__(self) -> "TaylorScalar":
        return TaylorScalar._wrap(-self.data, self.axes)

    def __pos__(self) -> "TaylorScalar":
        return self

    def __add__(self, other):
        if isinstance(other, TaylorScalar):
            self._check(other)
            return TaylorScalar._wrap(self.data + other.data, self.axes)
        return self._add_const(other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, TaylorScalar):
            self._check(other)
            return TaylorScalar._wrap(self.data - other.data, self.axes)
        return self._add_const(other, -1.0)

    def __rsub__(self, other):
        return (-self)._add_const(other)

    def __mul__(self, other):
        if isinstance(other, TaylorScalar):
            self._check(other)
            return TaylorScalar._wrap(_mul_data(self.data, other.data, self.axes), self.axes)
        return TaylorScalar._wrap(self.data * self._scalar(other), self.axes)

    __rmul__ = __mul__

    def reciprocal(self) -> "TaylorScalar":
        a0 = self.const
        if np.any(a0 == 0.0):
            raise ZeroConstantTerm("division by a series with zero constant term")
        return self._apply(lambda c0, n: _pow_coeffs(c0, -1.0, n))

    def __truediv__(self, other):
        if isinstance(other, TaylorScalar):
            self._check(other)
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        if np.any(other == 0.0):
            raise ZeroConstantTerm("division by zero")
        return TaylorScalar._wrap(self.data / self._scalar(other), self.axes)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) or (isinstance(p, float) and float(p).is_integer() and abs(p) < 64):
            p = int(p)
            if p < 0:
                return self.reciprocal() ** (-p)
            result = None
            base = self
            while p:
                if p & 1:
                    result = base if result is None else result * base
                p >>= 1
                if p:
                    base = base * base
            return result if result is not None else TaylorScalar.constant(np.ones(self.batch_shape), self.axes)
        return self.pow_real(float(p))

    def pow_real(self, p: float) -> "TaylorScalar":
        if np.any(self.const <= 0.0):
            raise ZeroConstantTerm(f"real power {p} needs a positive constant term")
        return self._apply(lambda c0, n: _pow_coeffs(c0, p, n))

    def sqrt(self) -> "TaylorScalar":
        return self.pow_real(0.5)

    def atan(self) -> "TaylorScalar":
        return self._apply(_atan_coeffs)

    def exp(self) -> "TaylorScalar":
        return self._apply(_exp_coeffs)

    def log(self) -> "TaylorScalar":
        if np.any(self.const <= 0.0):
            raise ZeroConstantTerm("log needs a positive constant term")
        return self._apply(_log_coeffs)

    def sin(self) -> "TaylorScalar":
        return self._apply(lambda c0, n: _trig_coeffs(c0, n, 0))

    def cos(self) -> "TaylorScalar":
        return self._apply(lambda c0, n: _trig_coeffs(c0, n, 1))

    def _apply(self, coeff_fn: Callable[[np.ndarray, int], np.ndarray]) -> "TaylorScalar":
        """f(self) = sum_k c_k * delta**k with c_k = f^(k)(a0)/k!, by Horner."""
        a0 = np.asarray(self.const)
        n = _nilpotency(self.axes)
        c = coeff_fn(a0, n)
        if n == 1:
            return TaylorScalar.constant(c[0], self.axes)
        delta = self._add_const(a0, -1.0)
        result = TaylorScalar.constant(c[n - 1], self.axes)
        for k in range(n - 2, -1, -1):
            result = (result * delta)._add_const(c[k])
        return result


TowerScalar = TaylorScalar
"""A TaylorScalar whose trailing size-2 variables are nilpotent perturbations."""


def _mul_data(a: np.ndarray, b: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    n = len(axes)
    left, right, starts = _mul_plan(axes)
    af = a.reshape(a.shape[: a.ndim - n] + (-1,))
    bf = b.reshape(b.shape[: b.ndim - n] + (-1,))
    prod = af[..., left] * bf[..., right]
    out = np.add.reduceat(prod, starts, axis=-1)
    return out.reshape(out.shape[:-1] + axes)


def _as_data(value, axes: tuple[int, ...]) -> np.ndarray:
    if isinstance(value, TaylorScalar):
        if value.axes != tuple(axes):
            raise OrderMismatch(f"series shapes differ: {value.axes} vs {axes}")
        return value.data
    return TaylorScalar.constant(value, axes).data


# --- elementary coefficient recurrences -----------------------------------
def _pow_coeffs(a0: np.ndarray, p: float, n: int) -> np.ndarray:
    c = np.empty((n,) + a0.shape)
    c[0] = a0**p
    for k in range(1, n):
        c[k] = c[k - 1] * (p - k + 1) / (k * a0)
    return c


def _exp_coeffs(a0: np.ndarray, n: int) -> np.ndarray:
    c = np.empty((n,) + a0.shape)
    c[0] = np.exp(a0)
    for k in range(1, n):
        c[k] = c[k - 1] / k
    return c


def _log_coeffs(a0: np.ndarray, n: int) -> np.ndarray:
    c = np.empty((n,) + a0.shape)
    c[0] = np.log(a0)
    for k in range(1, n):
        c[k] = (-1.0) ** (k + 1) / (k * a0**k)
    return c


def _trig_coeffs(a0: np.ndarray, n: int, shift: int) -> np.ndarray:
    c = np.empty((n,) + a0.shape)
    fact = 1.0
    for k in range(n):
        if k:
            fact *= k
        c[k] = np.sin(a0 + (k + shift) * np.pi / 2) / fact
    return c


def _atan_coeffs(a0: np.ndarray, n: int) -> np.ndarray:
    # series of 1/(1 + (a0 + h)^2), then integrate term by term
    d0 = 1.0 + a0 * a0
    r = [1.0 / d0]
    for k in range(1, n - 1):
        prev2 = r[k - 2] if k >= 2 else 0.0
        r.append(-(2.0 * a0 * r[k - 1] + prev2) / d0)
    c = np.empty((n,) + a0.shape)
    c[0] = np.arctan(a0)
    for k in range(1, n):
        c[k] = r[k - 1] / k
    return c


# --- functional front end ---------------------------------------------------
def sqrt(x):
    return x.sqrt() if isinstance(x, TaylorScalar) else np.sqrt(x)


def atan(x):
    return x.atan() if isinstance(x, TaylorScalar) else np.arctan(x)


def exp(x):
    return x.exp() if isinstance(x, TaylorScalar) else np.exp(x)


def log(x):
    return x.log() if isinstance(x, TaylorScalar) else np.log(x)


def sin(x):
    return x.sin() if isinstance(x, TaylorScalar) else np.sin(x)


def cos(x):
    return x.cos() if isinstance(x, TaylorScalar) else np.cos(x)


def power(x, p):
    return x**p if isinstance(x, TaylorScalar) else np.power(x, p)


_BINARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}
_UNARY = {"sqrt": sqrt, "atan": atan, "exp": exp, "log": log, "sin": sin, "cos": cos}


def taylor_arith(a: TaylorScalar, b=None, op: str = "add", p: float | None = None) -> TaylorScalar:
    """Dispatch one arithmetic operation by name (``pow_real`` takes exponent ``p``)."""
    if op in _BINARY:
        return _BINARY[op](a, b)
    if op in _UNARY:
        return _UNARY[op](a)
    if op == "pow_real":
        return a.pow_real(float(p if p is not None else b))
    raise ValueError(f"unknown operation {op!r}")


# --- series composition along the last variable ----------------------------
def _embed(c, axes: tuple[int, ...]):
    if isinstance(c, TaylorScalar):
        return c.extend(*axes[c.naxes:])
    return c


def compose_last(f_coeffs: Sequence, g: TaylorScalar) -> TaylorScalar:
    """sum_k f_k g**k, where g has zero constant term in its last variable."""
    inner0 = g.part(-1, 0)
    if np.any(inner0.data != 0.0):
        raise NonzeroInnerConstant("inner series must have zero constant term")
    result = _embed(f_coeffs[-1], g.axes) + 0.0 * g
    for fk in reversed(f_coeffs[:-1]):
        result = result * g + _embed(fk, g.axes)
    return result


def invert_last(g: TaylorScalar) -> TaylorScalar:
    """Series h with g(h(s)) = s, along the last variable of g."""
    size = g.axes[-1]
    if np.any(g.part(-1, 0).data != 0.0):
        raise NonzeroInnerConstant("series to invert must have zero constant term")
    if size < 2:
        raise NotInvertible("need at least a linear coefficient")
    g1 = g.part(-1, 1)
    if np.any(g1.const == 0.0):
        raise NotInvertible("linear coefficient is zero")
    g_coeffs = [g.part(-1, m) for m in range(size)]
    h = [0.0 * g1, 1.0 / g1] + [0.0 * g1] * (size - 2)
    for k in range(2, size):
        comp = compose_last(g_coeffs, TaylorScalar.stack(h))
        h[k] = -comp.part(-1, k) / g1
    return TaylorScalar.stack(h)


def taylor_compose(f: TaylorScalar, g: TaylorScalar) -> TaylorScalar:
    """Taylor coefficients of f(g(tau)), truncated at the common order."""
    if f.axes != g.axes or f.naxes != 1:
        raise OrderMismatch(f"compose needs equal single-variable orders, got {f.axes}, {g.axes}")
    return compose_last([f.part(-1, k) for k in range(f.axes[-1])], g)


def taylor_invert(g: TaylorScalar, order: int | None = None) -> TaylorScalar:
    if order is not None and order != g.order:
        g = g.truncate(order + 1) if order < g.order else TaylorScalar(
            np.concatenate([g.data, np.zeros(g.batch_shape + (order - g.order,))], axis=-1))
    return invert_last(g)


def total_derivative_read(f: TaylorScalar, k: int):
    """k-th derivative along the first variable at tau = 0: ``k! * c_k``."""
    if k > f.order:
        raise OrderExceeded(f"derivative {k} exceeds series order {f.order}")
    return math.factorial(k) * f.data[(Ellipsis, k) + (0,) * (f.naxes - 1)]


# --- towers -------------------------------------------------------------
def make_tower(base: TaylorScalar, tangents: Sequence[TaylorScalar]) -> TaylorScalar:
    """base + sum_a eps_a * tangents[a], with up to two nilpotent eps."""
    depth = len(tangents)
    if depth > 2:
        raise ValueError("tower depth is capped at 2")
    parts = [base] + [base._check(t) or t for t in tangents]
    shape = np.broadcast_shapes(*(p.data.shape for p in parts))
    data = np.zeros(shape + (2,) * depth)
    data[(Ellipsis,) + (0,) * depth] = base.data
    for a, tan in enumerate(tangents):
        idx = tuple(1 if b == a else 0 for b in range(depth))
        data[(Ellipsis,) + idx] = tan.data
    return TaylorScalar._wrap(data, base.axes + (2,) * depth)


def tower_part(value: TaylorScalar, mask: Sequence[int]) -> TaylorScalar:
    """Component of a tower: ``mask[a] == 1`` selects the eps_a coefficient."""
    out = value
    for bit in reversed(mask):
        out = out.part(-1, bit)
    return out
