"""Jet-space points, the velocity-to-contact-element projection and homogenization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import OrderExceeded, SingularReparam, ZeroTimeVelocity
from .fields import JetPoint, ScalarField, SourceForm
from .jets import TaylorScalar, compose_last, invert_last, total_derivative_read


@dataclass(frozen=True)
class ContactJet:
    """Point ``(t, x, v, v', ..., v_{r-1})`` of ``J^r(R, R^n)``; arrays may carry batch dims."""

    t: np.ndarray
    x: np.ndarray
    derivs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        d = np.asarray(self.derivs, dtype=float)
        if d.ndim == 1:
            d = d.reshape(0, self.x.shape[-1]) if d.size == 0 else d[None, :]
        object.__setattr__(self, "derivs", d)
        if self.derivs.shape[-1] != self.x.shape[-1]:
            raise ValueError(f"derivative rows have width {self.derivs.shape[-1]}, x has {self.x.shape[-1]}")

    @property
    def order(self) -> int:
        return self.derivs.shape[-2]

    @property
    def dim(self) -> int:
        return self.x.shape[-1]

    @property
    def v(self) -> np.ndarray:
        return self.derivs[..., 0, :]

    def row(self, s: int) -> np.ndarray:
        if s == -1:
            return self.x
        return self.derivs[..., s, :]

    def truncated(self, order: int) -> "ContactJet":
        if order > self.order:
            raise OrderExceeded(f"jet has order {self.order}, {order} requested")
        return ContactJet(self.t, self.x, self.derivs[..., :order, :])

    def __getitem__(self, index) -> "ContactJet":
        return ContactJet(self.t[index], self.x[index], self.derivs[index])

    def to_dict(self) -> dict:
        return {
            "order": int(self.order),
            "dim": int(self.dim),
            "t": float(self.t),
            "x": [float(c) for c in self.x],
            "derivs": [[float(c) for c in row] for row in self.derivs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ContactJet":
        jet = cls(data["t"], data["x"], np.asarray(data["derivs"], dtype=float).reshape(-1, len(data["x"])))
        if "order" in data and int(data["order"]) != jet.order:
            raise ValueError(f"order field {data['order']} disagrees with {jet.order} derivative rows")
        if "dim" in data and int(data["dim"]) != jet.dim:
            raise ValueError(f"dim field {data['dim']} disagrees with {jet.dim} coordinates")
        return jet

    @classmethod
    def from_point(cls, pt: JetPoint) -> "ContactJet":
        """Numeric values of a lifted point (constant terms)."""
        n = pt.dim
        return cls(
            pt.t.const,
            np.stack([pt.x[i].const for i in range(n)], axis=-1),
            np.stack([np.stack([row[i].const for i in range(n)], axis=-1) for row in pt.derivs], axis=-2),
        )


@dataclass(frozen=True)
class VelocityJet:
    """Point of ``T^r M``: rows ``x^a, u^a, u'^a, ..., u_{r-1}^a`` (index 0 is time)."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim < 2 or c.shape[-2] < 2:
            raise ValueError("velocity jet needs at least the rows x and u")
        object.__setattr__(self, "coords", c)

    @property
    def order(self) -> int:
        return self.coords.shape[-2] - 1

    @property
    def dim(self) -> int:
        """Spatial dimension n (the jet lives over n + 1 coordinates)."""
        return self.coords.shape[-1] - 1

    @property
    def u(self) -> np.ndarray:
        return self.coords[..., 1, :]

    def as_jet(self) -> ContactJet:
        """View as a jet of curves ``tau -> M`` (parameter tau = 0)."""
        return ContactJet(np.zeros(self.coords.shape[:-2]), self.coords[..., 0, :], self.coords[..., 1:, :])

    def to_dict(self) -> dict:
        return {"order": int(self.order), "coords": self.coords.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "VelocityJet":
        w = cls(data["coords"])
        if "order" in data and int(data["order"]) != w.order:
            raise ValueError(f"order field {data['order']} disagrees with {w.order + 1} rows")
        return w


@dataclass(frozen=True)
class ReparamJet:
    """Jet at 0 of a local diffeomorphism ``rho`` of R with ``rho(0) = 0``.

    ``derivs[k]`` is the (k+1)-th derivative of rho at 0.
    """

    derivs: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.derivs, dtype=float))
        if np.any(d[..., 0] == 0.0):
            raise SingularReparam("first derivative of a reparametrization must be nonzero")
        object.__setattr__(self, "derivs", d)

    @property
    def order(self) -> int:
        return self.derivs.shape[-1]

    @property
    def speed(self) -> np.ndarray:
        return self.derivs[..., 0]

    @classmethod
    def identity(cls, order: int) -> "ReparamJet":
        return cls(np.r_[1.0, np.zeros(order - 1)])

    @classmethod
    def scaling(cls, lam: float, order: int) -> "ReparamJet":
        return cls(np.r_[lam, np.zeros(order - 1)])


# --- generic series helpers -------------------------------------------------
def _rows_series(rows: Sequence[TaylorScalar]) -> TaylorScalar:
    """sum_m rows[m] tau^m / m! as a series in a new trailing variable."""
    return TaylorScalar.stack([r * (1.0 / math.factorial(m)) if m > 1 else r for m, r in enumerate(rows)])


def project_rows(rows: Sequence[Sequence[TaylorScalar]]) -> JetPoint:
    """Projection to contact coordinates for (possibly tower-valued) velocity rows.

    ``rows[m][a]`` is the m-th row of coordinate a.  The time series is
    inverted about its base point and composed into the spatial series.
    """
    order = len(rows) - 1
    ndim = len(rows[0])
    u0 = rows[1][0]
    if np.any(u0.const == 0.0):
        raise ZeroTimeVelocity("u^0 = 0: the velocity is tangent to a time slice")
    zero = 0.0 * u0
    g = _rows_series([zero] + [rows[m][0] for m in range(1, order + 1)])
    h = invert_last(g)
    x = []
    derivs = [[None] * (ndim - 1) for _ in range(order)]
    for a in range(1, ndim):
        series = _rows_series([rows[m][a] for m in range(order + 1)])
        y = compose_last([series.part(-1, m) for m in range(order + 1)], h)
        x.append(rows[0][a])
        for m in range(1, order + 1):
            derivs[m - 1][a - 1] = y.part(-1, m) * float(math.factorial(m))
    return JetPoint(t=rows[0][0], x=tuple(x), derivs=tuple(tuple(r) for r in derivs))


def _velocity_rows(pt: JetPoint, order: int) -> list[list[TaylorScalar]]:
    return [list(pt.x)] + [list(pt.derivs[m]) for m in range(order)]


def _lift_velocity(w: VelocityJet) -> list[list[TaylorScalar]]:
    c = w.coords
    return [[TaylorScalar.constant(c[..., m, a]) for a in range(c.shape[-1])] for m in range(c.shape[-2])]


# --- operations ---------------------------------------------------------
def project(w: VelocityJet) -> ContactJet:
    """Contact element ``(t, x, v, ..., v_{r-1})`` of a nonzero-velocity jet."""
    return ContactJet.from_point(project_rows(_lift_velocity(w)))


def project_closed_form_order3(w: VelocityJet) -> ContactJet:
    """Printed third-order projection formulas (test oracle)."""
    c = w.coords
    if c.shape[-2] < 4:
        raise OrderExceeded("closed form needs rows x, u, u', u''")
    u0, du0, ddu0 = c[..., 1, :1], c[..., 2, :1], c[..., 3, :1]
    u, du, ddu = c[..., 1, 1:], c[..., 2, 1:], c[..., 3, 1:]
    if np.any(u0 == 0.0):
        raise ZeroTimeVelocity("u^0 = 0")
    v = u / u0
    dv = du / u0**2 - du0 / u0**3 * u
    ddv = ddu / u0**3 - 3 * du0 / u0**4 * du + 3 * du0**2 / u0**5 * u - ddu0 / u0**4 * u
    return ContactJet(c[..., 0, 0], c[..., 0, 1:], np.stack([v, dv, ddv], axis=-2))


def reparametrize(w: VelocityJet, rho: ReparamJet) -> VelocityJet:
    """Right action: the jet of ``tau -> c(rho(tau))``."""
    r = w.order
    if rho.order < r:
        raise OrderExceeded(f"reparametrization of order {rho.order} cannot act on order {r}")
    c = w.coords
    rd = rho.derivs
    rho_series = TaylorScalar.stack(
        [np.zeros(rd.shape[:-1])] + [rd[..., k] / math.factorial(k + 1) for k in range(r)])
    out = np.empty(np.broadcast_shapes(c.shape[:-2], rd.shape[:-1]) + c.shape[-2:])
    for a in range(c.shape[-1]):
        f = [c[..., m, a] / math.factorial(m) for m in range(r + 1)]
        y = compose_last(f, rho_series)
        for m in range(r + 1):
            out[..., m, a] = y.data[..., m] * math.factorial(m)
    return VelocityJet(out)


def prolong_graph_curve(x_series: Sequence[TaylorScalar], r: int, t: float = 0.0) -> ContactJet:
    """Order-r contact jet of the graph ``t -> x(t)`` from Taylor series of x."""
    for s in x_series:
        if s.order < r:
            raise OrderExceeded(f"series of order {s.order} cannot give a jet of order {r}")
    x = np.stack([total_derivative_read(s, 0) for s in x_series], axis=-1)
    derivs = np.stack(
        [np.stack([total_derivative_read(s, k + 1) for s in x_series], axis=-1) for k in range(r)], axis=-2)
    return ContactJet(np.broadcast_to(t, x.shape[:-1]), x, derivs.reshape(x.shape[:-1] + (r, len(x_series))))


def homogenize_lagrangian(L: ScalarField) -> ScalarField:
    """Parametric Lagrangian ``u^0 * L(project(w))`` on velocity jets over n + 1 coordinates."""
    k = L.order

    def fn(pt: JetPoint):
        rows = _velocity_rows(pt, k)
        contact = project_rows(rows)
        return rows[1][0] * L.evaluate(contact)

    return ScalarField(order=k, dim=L.dim + 1, fn=fn, time_dependent=False, name=f"u0*{L.name}")


def equivariance_residual(Lh: ScalarField, w: VelocityJet, rho: ReparamJet) -> np.ndarray:
    """``Lh(w . rho) - rho'(0) Lh(w)``: zero for degree-one parametric Lagrangians."""
    if np.any(rho.speed <= 0.0):
        raise SingularReparam("equivariance is checked for orientation-preserving reparametrizations only")
    return Lh(reparametrize(w, rho).as_jet()) - rho.speed * Lh(w.as_jet())


def homogenize_equation(E: SourceForm, w: VelocityJet) -> np.ndarray:
    """Components ``(-u^i E_i, u^0 E_1, ..., u^0 E_n)`` at ``project(w)``."""
    j = project(w).truncated(E.order) if project(w).order > E.order else project(w)
    e = E(j)
    u = w.u
    eps0 = -np.sum(u[..., 1:] * e, axis=-1)
    return np.concatenate([eps0[..., None], u[..., :1] * e], axis=-1)
