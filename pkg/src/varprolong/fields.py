"""Evaluable functions on jet spaces.

Fields are plain Python callables that receive a :class:`JetPoint`, whose
coordinates are :class:`~varprolong.jets.TaylorScalar` values, and build their
result with ordinary arithmetic.  Because the coordinates may carry extra
series variables (a prolonged curve, nilpotent perturbations), the same
callable yields values, total derivatives and partial derivatives.

Coordinate keys are ``(s, i)`` with ``s = -1`` for ``x^i``, ``s >= 0`` for the
derivative row ``v_s^i`` and ``T_KEY = (-2, 0)`` for the time coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import OrderExceeded
from .jets import TaylorScalar

T_KEY = (-2, 0)

Key = tuple[int, int]


def as_series(value, axes: tuple[int, ...], batch_shape: tuple[int, ...] = ()) -> TaylorScalar:
    """Coerce a field result to a TaylorScalar with full batch shape."""
    if not isinstance(value, TaylorScalar):
        value = TaylorScalar.constant(np.broadcast_to(np.asarray(value, dtype=float), batch_shape), axes)
    shape = np.broadcast_shapes(value.batch_shape, tuple(batch_shape))
    if shape != value.batch_shape:
        value = value.broadcast_batch(shape)
    return value


@dataclass(frozen=True)
class JetPoint:
    """Coordinates ``t, x, v_0, ..., v_{R-1}`` of a (possibly tower-valued) jet."""

    t: TaylorScalar
    x: tuple[TaylorScalar, ...]
    derivs: tuple[tuple[TaylorScalar, ...], ...]

    @classmethod
    def from_jet(cls, jet) -> "JetPoint":
        """Lift a numeric jet (anything with ``t``, ``x``, ``derivs`` arrays) to constants."""
        t = np.asarray(jet.t, dtype=float)
        x = np.asarray(jet.x, dtype=float)
        d = np.asarray(jet.derivs, dtype=float)
        const = TaylorScalar.constant
        return cls(
            t=const(t),
            x=tuple(const(x[..., i]) for i in range(x.shape[-1])),
            derivs=tuple(tuple(const(d[..., s, i]) for i in range(d.shape[-1])) for s in range(d.shape[-2])),
        )

    @property
    def dim(self) -> int:
        return len(self.x)

    @property
    def rows(self) -> int:
        return len(self.derivs)

    @property
    def axes(self) -> tuple[int, ...]:
        return self.t.axes

    @property
    def batch_shape(self) -> tuple[int, ...]:
        shape = self.t.batch_shape
        for c in self.coords():
            shape = np.broadcast_shapes(shape, c.batch_shape)
        return shape

    @property
    def v(self):
        return self.derivs[0]

    @property
    def dv(self):
        return self.derivs[1]

    @property
    def ddv(self):
        return self.derivs[2]

    def coord(self, s: int, i: int = 0) -> TaylorScalar:
        if s == -2:
            return self.t
        if s == -1:
            return self.x[i]
        if s >= self.rows:
            raise OrderExceeded(f"jet has {self.rows} derivative rows, v_{s} requested")
        return self.derivs[s][i]

    def keys(self) -> list[Key]:
        n = self.dim
        return [T_KEY] + [(s, i) for s in range(-1, self.rows) for i in range(n)]

    def coords(self) -> Iterable[TaylorScalar]:
        yield self.t
        yield from self.x
        for row in self.derivs:
            yield from row

    def map(self, fn: Callable[[Key, TaylorScalar], TaylorScalar]) -> "JetPoint":
        n = self.dim
        return JetPoint(
            t=fn(T_KEY, self.t),
            x=tuple(fn((-1, i), self.x[i]) for i in range(n)),
            derivs=tuple(tuple(fn((s, i), row[i]) for i in range(n)) for s, row in enumerate(self.derivs)),
        )

    def truncated(self, rows: int) -> "JetPoint":
        return JetPoint(self.t, self.x, self.derivs[:rows])

    # --- series constructions --------------------------------------------
    def curve(self, degree: int) -> "JetPoint":
        """Prolonged Taylor curve through this jet, in a new trailing variable.

        Coordinate ``v_s`` becomes ``sum_m v_{s+m} sigma^m / m!``; entries
        beyond the stored rows are zero, so only the low coefficients of
        high rows are meaningful.
        """
        n = self.dim
        axes = self.axes
        zero = 0.0

        def row(s: int, i: int) -> TaylorScalar:
            coeffs = []
            for m in range(degree + 1):
                q = s + m
                c = self.coord(q, i) if q < self.rows else zero
                coeffs.append(c * (1.0 / math.factorial(m)) if m > 1 else c)
            return TaylorScalar.stack(coeffs, axes)

        t_coeffs = [self.t] + ([1.0] if degree >= 1 else []) + [zero] * (degree - 1)
        return JetPoint(
            t=TaylorScalar.stack(t_coeffs[: degree + 1], axes),
            x=tuple(row(-1, i) for i in range(n)),
            derivs=tuple(tuple(row(s, i) for i in range(n)) for s in range(self.rows)),
        )

    def perturb(self, slots: Sequence) -> "JetPoint":
        """Batch of nilpotent perturbations, one batch entry per slot.

        Each slot is a coordinate key (depth 1) or a tuple of keys, one per
        nilpotent variable (depth 2).  A new leading batch axis indexes slots.
        """
        slots = [(s,) if isinstance(s[0], (int, np.integer)) else tuple(s) for s in slots]
        depth = len(slots[0])
        if any(len(s) != depth for s in slots) or not 1 <= depth <= 2:
            raise ValueError("slots must all have the same depth, 1 or 2")
        nslot = len(slots)
        batch = self.batch_shape
        axes = self.axes
        new_axes = axes + (2,) * depth
        zero_idx = (0,) * len(axes)

        def lift(key, value: TaylorScalar) -> TaylorScalar:
            data = np.zeros((nslot,) + batch + new_axes)
            data[(Ellipsis,) + (slice(None),) * len(axes) + (0,) * depth] = value.data
            for a in range(depth):
                hit = np.array([slot[a] == key for slot in slots], dtype=float)
                if hit.any():
                    eps = tuple(1 if b == a else 0 for b in range(depth))
                    view = data[(Ellipsis,) + zero_idx + eps]
                    view += hit.reshape((nslot,) + (1,) * len(batch))
            return TaylorScalar._wrap(data, new_axes)

        return self.map(lift)

    def perturb_direction(self, direction: dict) -> "JetPoint":
        """Single nilpotent eps with coordinates moved by ``eps * direction[key]``."""
        axes = self.axes

        def lift(key, value: TaylorScalar) -> TaylorScalar:
            out = value.extend(2)
            if key in direction:
                d = direction[key]
                if isinstance(d, TaylorScalar):
                    d_data = d.data
                else:
                    d_data = TaylorScalar.constant(d, axes).data
                shape = np.broadcast_shapes(out.data.shape[:-1], d_data.shape)
                data = np.array(np.broadcast_to(out.data, shape + (2,)))
                data[..., 1] = d_data
                out = TaylorScalar._wrap(data, axes + (2,))
            return out

        return self.map(lift)

    def extend(self, *sizes: int) -> "JetPoint":
        return self.map(lambda _k, c: c.extend(*sizes))


@dataclass(frozen=True)
class ScalarField:
    """A function of ``(t, x, v_0, ..., v_{order-1})`` on an ``dim``-dimensional jet space."""

    order: int
    dim: int
    fn: Callable[[JetPoint], object]
    time_dependent: bool = True
    name: str = ""

    def evaluate(self, pt: JetPoint) -> TaylorScalar:
        if pt.rows < self.order:
            raise OrderExceeded(f"field of order {self.order} needs {self.order} rows, got {pt.rows}")
        return as_series(self.fn(pt), pt.axes, pt.batch_shape)

    def __call__(self, jet) -> np.ndarray:
        return self.evaluate(JetPoint.from_jet(jet)).const

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(
            max(self.order, other.order), self.dim, lambda pt: self.fn(pt) + other.fn(pt),
            self.time_dependent or other.time_dependent, f"{self.name}+{other.name}")

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(
            max(self.order, other.order), self.dim, lambda pt: self.fn(pt) - other.fn(pt),
            self.time_dependent or other.time_dependent, f"{self.name}-{other.name}")


@dataclass(frozen=True)
class SourceForm:
    """The components ``(E_1, ..., E_n)`` of a source form of the given order."""

    order: int
    dim: int
    fn: Callable[[JetPoint], Sequence]
    name: str = ""

    def evaluate(self, pt: JetPoint) -> list[TaylorScalar]:
        if pt.rows < self.order:
            raise OrderExceeded(f"source form of order {self.order} needs {self.order} rows, got {pt.rows}")
        vals = list(self.fn(pt))
        if len(vals) != self.dim:
            raise ValueError(f"{self.name or 'source form'} returned {len(vals)} components, expected {self.dim}")
        batch = pt.batch_shape
        return [as_series(v, pt.axes, batch) for v in vals]

    def __call__(self, jet) -> np.ndarray:
        vals = self.evaluate(JetPoint.from_jet(jet))
        return np.stack([v.const for v in vals], axis=-1)

    def scaled(self, factor: float) -> "SourceForm":
        return SourceForm(self.order, self.dim, lambda pt: [factor * e for e in self.fn(pt)], self.name)


def field_from(order: int, dim: int, time_dependent: bool = True, name: str = ""):
    """Decorator turning ``fn(pt)`` into a :class:`ScalarField`."""

    def wrap(fn):
        return ScalarField(order, dim, fn, time_dependent, name or fn.__name__)

    return wrap
