"""The invariant third-order equation in three-dimensional (pseudo)Euclidean space.

Space-time carries the diagonal metric ``diag(eta, g11, g22)``.  Graph-form
quantities use ``q = eta + V.V`` with ``V.V = g_ij v^i v^j``; outputs of
equations and momenta are covariant (index-lowered) components.

Formulas accept numpy arrays (component axis last) or lists of
:class:`~varprolong.jets.TaylorScalar`, so the same code path is evaluated
numerically and differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DenominatorZero, DomainError, GaugeViolation, NullVelocity
from .fields import JetPoint, ScalarField, SourceForm, as_series
from .jets import TaylorScalar, atan, log, sqrt
from .varcalc import AffineThirdOrder, _eps, total_derivatives


@dataclass(frozen=True)
class MetricConfig:
    """Signs of ``g_00`` (eta) and ``g_11, g_22``, and the orientation fixing ``eps_12``."""

    eta: int = 1
    g11: int = 1
    g22: int = 1
    orientation: int = 1

    def __post_init__(self):
        for name in ("eta", "g11", "g22", "orientation"):
            if getattr(self, name) not in (1, -1):
                raise ValueError(f"{name} must be +1 or -1, got {getattr(self, name)!r}")

    @property
    def g(self) -> np.ndarray:
        return np.array([self.g11, self.g22], dtype=float)

    @property
    def g3(self) -> np.ndarray:
        return np.array([self.eta, self.g11, self.g22], dtype=float)

    @property
    def euclidean(self) -> bool:
        return self.eta == self.g11 == self.g22 == 1

    @property
    def eps2(self) -> np.ndarray:
        o = float(self.orientation)
        return np.array([[0.0, o], [-o, 0.0]])

    def label(self) -> str:
        s = lambda k: "+" if k > 0 else "-"
        return f"eta{s(self.eta)} g{s(self.g11)}{s(self.g22)} or{s(self.orientation)}"


def signature_configs(orientation: int = 1) -> list[MetricConfig]:
    """The four graph-form signatures: eta = +1 with every choice of (g11, g22)."""
    return [MetricConfig(1, a, b, orientation) for a in (1, -1) for b in (1, -1)]


@dataclass(frozen=True)
class GeometryParams:
    mu: float = 0.0


# --- small helpers working on arrays or lists of series --------------------
def _comps(w) -> list:
    if isinstance(w, np.ndarray):
        return [w[..., i] for i in range(w.shape[-1])]
    return list(w)


def _pack(comps, like):
    if isinstance(like, np.ndarray):
        return np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in comps]), axis=-1)
    return list(comps)


def _const(value) -> np.ndarray:
    return value.const if isinstance(value, TaylorScalar) else np.asarray(value, dtype=float)


def _dot(a, b, g) -> object:
    return sum(g[k] * a[k] * b[k] for k in range(len(g)))


def q_value(v, m: MetricConfig):
    """``eta + V.V`` for contravariant ``v``."""
    vv = _comps(v)
    return m.eta + _dot(vv, vv, m.g)


def _check_q(q, what: str = "eta + V.V"):
    if np.any(_const(q) <= 0.0):
        raise DomainError(f"{what} <= 0: outside the domain of the equation")


def hodge_star(w, m: MetricConfig):
    """``(*w)_i = eps_ji w^j`` with ``eps_12 = orientation``; covariant result."""
    a, b = _comps(w)
    o = float(m.orientation)
    return _pack([-o * b, o * a], w)


def lower(w, m: MetricConfig):
    g = m.g if len(_comps(w)) == 2 else m.g3
    return _pack([g[i] * c for i, c in enumerate(_comps(w))], w)


# --- the solved normal form -------------------------------------------------
def abc_fields(m: MetricConfig, p: GeometryParams) -> AffineThirdOrder:
    """``A_ij = eps_ij q^{-3/2}``, ``B_ij = mu q^{-3/2} (q g_ij - v_i v_j)``, ``C = 0``."""
    g = m.g
    eps = m.eps2
    mu = float(p.mu)

    def A(t, x, v):
        q = q_value(v, m)
        _check_q(q)
        s = q ** -1.5
        return [[eps[i, j] * s for j in range(2)] for i in range(2)]

    def B(t, x, v):
        q = q_value(v, m)
        _check_q(q)
        s = mu * q ** -1.5
        vl = [g[i] * v[i] for i in range(2)]
        return [[s * ((q * g[i] if i == j else 0.0) - vl[i] * vl[j]) for j in range(2)] for i in range(2)]

    def C(t, x, v):
        return [0.0 * v[0], 0.0 * v[0]]

    return AffineThirdOrder(A, B, C, dim=2, name=f"euclid3(mu={mu})")


def _ep(v, dv, ddv, m: MetricConfig, mu: float):
    q = q_value(v, m)
    _check_q(q)
    vv, dd = _comps(v), _comps(dv)
    g = m.g
    s_dd, s_d = _comps(hodge_star(ddv, m)), _comps(hodge_star(dv, m))
    vdv = _dot(vv, dd, g)
    q32 = q ** -1.5
    q52 = q32 / q
    return [-s_dd[i] * q32 + 3.0 * s_d[i] * vdv * q52 + mu * q32 * (q * g[i] * dd[i] - vdv * g[i] * vv[i])
            for i in range(2)]


def ep_residual(jet, m: MetricConfig, p: GeometryParams) -> np.ndarray:
    """Left side of the invariant equation at an order-3 jet (covariant 2-vector)."""
    d = np.asarray(jet.derivs, dtype=float)
    return np.stack(np.broadcast_arrays(*_ep(d[..., 0, :], d[..., 1, :], d[..., 2, :], m, float(p.mu))), axis=-1)


def ep_form(m: MetricConfig, p: GeometryParams) -> SourceForm:
    mu = float(p.mu)
    return SourceForm(3, 2, lambda pt: _ep(pt.v, pt.dv, pt.ddv, m, mu), name=f"ep(mu={mu})")


def perturbed_form(m: MetricConfig, p: GeometryParams) -> SourceForm:
    """Negative control: the equation with A replaced by a symmetric matrix."""
    mu = float(p.mu)
    g = m.g

    def fn(pt):
        v, dv, ddv = pt.v, pt.dv, pt.ddv
        q = q_value(v, m)
        s = q ** -1.5
        vdv = _dot(v, dv, g)
        return [s * ddv[1 - i] + mu * s * (q * g[i] * dv[i] - vdv * g[i] * v[i]) for i in range(2)]

    return SourceForm(3, 2, fn, name="ep-symmetric-A")


# --- Lagrangians ------------------------------------------------------------
def _lagrangian(j: int, v, dv, m: MetricConfig, mu: float):
    if j not in (1, 2):
        raise ValueError(f"Lagrangian index must be 1 or 2, got {j}")
    q = q_value(v, m)
    _check_q(q)
    o = float(m.orientation)
    k = 2 - j  # the other coordinate (0-based)
    # *(V' ^ e_j): j = 1 -> -o v'^2, j = 2 -> o v'^1
    star = -o * dv[1] if j == 1 else o * dv[0]
    den = m.eta + m.g[k] * v[k] * v[k]
    if np.any(np.abs(_const(den)) < 1e-300):
        raise DenominatorZero(f"1 + g_jj |V ^ e_{j}|^2 vanishes")
    return star * v[j - 1] / (sqrt(q) * den) - mu * sqrt(q)


def lagrangian_field(j: int, m: MetricConfig, p: GeometryParams) -> ScalarField:
    mu = float(p.mu)
    return ScalarField(2, 2, lambda pt: _lagrangian(j, pt.v, pt.dv, m, mu), name=f"L{j}")


def lagrangian(j: int, jet, m: MetricConfig, p: GeometryParams) -> np.ndarray:
    d = np.asarray(jet.derivs, dtype=float)
    return np.asarray(_lagrangian(j, _comps(d[..., 0, :]), _comps(d[..., 1, :]), m, float(p.mu)))


def gauge_function(m: MetricConfig) -> ScalarField:
    """Function of v whose total derivative is ``L_(2) - L_(1)``.

    ``arctan(v^1 v^2 / sqrt(eta + V.V))`` when g11 and g22 agree; for mixed spatial
    signs the same integration gives ``artanh`` of that ratio.
    """
    o = float(m.orientation)
    mixed = m.g11 * m.g22 < 0

    def fn(pt):
        v = pt.v
        z = v[0] * v[1] / sqrt(q_value(v, m))
        if mixed:
            return o * 0.5 * (log(1.0 + z) - log(1.0 - z))
        return o * atan(z)

    return ScalarField(1, 2, fn, name="gauge")


def gauge_difference(jet, m: MetricConfig) -> np.ndarray:
    """``d/dt arctan(v^1 v^2 / sqrt(eta + V.V))`` at an order-2 jet."""
    return total_derivatives(gauge_function(m), jet.truncated(2), 1)[..., 1]


# --- homogeneous (parametric) forms -----------------------------------------
def norm3(u, m: MetricConfig):
    """``sqrt(u.u)`` under ``diag(eta, g11, g22)``; NullVelocity unless ``u.u > 0``."""
    uu = _comps(u)
    n2 = _dot(uu, uu, m.g3)
    if np.any(_const(n2) <= 0.0):
        raise NullVelocity("u.u <= 0: null or timelike-degenerate velocity")
    return sqrt(n2)


def cross(a, b, m: MetricConfig):
    """Covariant cross product ``(a x b)_k = eps_ijk a^i b^j`` with ``eps_012 = orientation``."""
    a0, a1, a2 = _comps(a)
    b0, b1, b2 = _comps(b)
    o = float(m.orientation)
    return _pack([o * (a1 * b2 - a2 * b1), o * (a2 * b0 - a0 * b2), o * (a0 * b1 - a1 * b0)], a)


def triple(a, b, c, m: MetricConfig):
    """Parallelepipedal product ``[a, b, c] = eps_ijk a^i b^j c^k``."""
    ab = _comps(cross(a, b, m))
    cc = _comps(c)
    return sum(ab[k] * cc[k] for k in range(3))


def _homogeneous(u, du, ddu, m: MetricConfig, mu: float):
    n = norm3(u, m)
    uu, dd = _comps(u), _comps(du)
    g3 = m.g3
    c2 = _comps(cross(ddu, u, m))
    c1 = _comps(cross(du, u, m))
    udu = _dot(uu, dd, g3)
    uu2 = _dot(uu, uu, g3)
    n3 = n * n * n
    n5 = n3 * n * n
    # the overall sign makes this the total derivative of the invariant momentum
    return [c2[k] / n3 - 3.0 * c1[k] * udu / n5 + mu * g3[k] * (uu2 * dd[k] - udu * uu[k]) / n3 for k in range(3)]


def homogeneous_residual(u, du, ddu, m: MetricConfig, p: GeometryParams):
    """Left side of the parametric counterpart of the invariant equation (covariant 3-vector).

    Normalized as ``(u'' x u)/|u|^3 - 3 (u' x u)(u'.u)/|u|^5 + mu((u.u)u' - (u'.u)u)/|u|^3``,
    i.e. the total derivative of :func:`invariant_momentum`.
    """
    return _pack(_homogeneous(_comps(u), _comps(du), _comps(ddu), m, float(p.mu)), u)


def homogeneous_form(m: MetricConfig, p: GeometryParams) -> SourceForm:
    mu = float(p.mu)
    return SourceForm(3, 3, lambda pt: _homogeneous(pt.v, pt.dv, pt.ddv, m, mu), name="homogeneous")


def invariant_momentum(u, du, m: MetricConfig, p: GeometryParams):
    """``(u' x u)/|u|^3 + mu u/|u|`` (covariant)."""
    n = norm3(u, m)
    c = _comps(cross(du, u, m))
    uu = _comps(u)
    g3 = m.g3
    return _pack([c[k] / (n * n * n) + float(p.mu) * g3[k] * uu[k] / n for k in range(3)], u)


def directional(phi: Callable, u: Sequence, w: Sequence):
    """``w . d_u phi`` for ``phi`` acting on a list of components."""
    lifted = [TaylorScalar.constant(np.asarray(c, dtype=float)) if not isinstance(c, TaylorScalar) else c
              for c in u]
    wl = [TaylorScalar.constant(np.asarray(c, dtype=float)) if not isinstance(c, TaylorScalar) else c for c in w]
    axes = max((c.axes for c in lifted + wl), key=len)
    lifted = [as_series(c, axes, c.batch_shape) if c.axes == axes else _promote(c, axes) for c in lifted]
    wl = [c if c.axes == axes else _promote(c, axes) for c in wl]
    ext = [a.extend(2) + _eps(b.extend(2)) for a, b in zip(lifted, wl)]
    out = phi(ext)
    out = as_series(out, axes + (2,), ())
    res = out.part(-1, 1)
    if all(not isinstance(c, TaylorScalar) for c in list(u) + list(w)):
        return res.const
    return res


def _promote(c: TaylorScalar, axes):
    return TaylorScalar.constant(c.const, axes) if c.axes == () else c


def default_gauge(m: MetricConfig) -> Callable:
    """``phi(u) = u^1 u^2 / (u.u)``: homogeneous of degree zero."""
    return lambda u: u[1] * u[2] / _dot(u, u, m.g3)


def _homogeneous_lagrangian(beta, u, du, m, mu, phi, a, gauge_tol=1e-9):
    if beta not in (0, 1, 2):
        raise ValueError(f"beta must be 0, 1 or 2, got {beta}")
    n = norm3(u, m)
    e = [1.0 if k == beta else 0.0 for k in range(3)]
    ce = _comps(cross(u, e, m))
    den = sum(m.g3[k] * ce[k] * ce[k] for k in range(3))  # raised with g^{kk} = g_kk
    if np.any(np.abs(_const(den)) < 1e-12):
        raise DomainError(f"|u x e_{beta}|^2 vanishes: u lies on the e_{beta} axis")
    # u_b [u, u', e_b] with the contravariant volume form eps^{ijk} = det(g)^{-1} eps_ijk
    detg = float(np.prod(m.g3))
    val = detg * m.g3[beta] * u[beta] * triple(u, du, e, m) / (n * den) - mu * n
    if phi is not None:
        euler = directional(phi, u, u)
        if np.max(np.abs(_const(euler))) > gauge_tol * (1.0 + np.max(np.abs(_const(_dot(u, u, m.g3))))):
            raise GaugeViolation("u . d_u phi must vanish")
        val = val + directional(phi, u, du)
    if a is not None:
        val = val + sum(a[k] * u[k] for k in range(3))
    return val


BETA_MARGIN = 0.05


def beta_admissible(u, beta: int, m: MetricConfig, margin: float = BETA_MARGIN) -> np.ndarray:
    """Mask of velocities kept well away from the singular set ``|u x e_b|^2 = 0``."""
    u = np.asarray(u, dtype=float)
    e = np.zeros(3)
    e[beta] = 1.0
    ce = np.asarray(cross(u, np.broadcast_to(e, u.shape), m))
    den = np.sum(m.g3 * ce * ce, axis=-1)
    return np.abs(den) > margin * np.sum(u * u, axis=-1)


def homogeneous_lagrangian(beta: int, u, du, m: MetricConfig, p: GeometryParams, phi=None, a=None):
    """``u_b [u, u', e_b] / (|u| |u x e_b|^2) - mu |u| + u'.d_u phi + a.u`` at numeric points.

    The parallelepipedal product uses the contravariant volume form, which fixes
    the sign so that the Euler-Poisson expressions equal :func:`homogeneous_residual`.
    """
    return np.asarray(_homogeneous_lagrangian(beta, _comps(np.asarray(u, float)), _comps(np.asarray(du, float)),
                                              m, float(p.mu), phi, a))


def homogeneous_lagrangian_field(beta: int, m: MetricConfig, p: GeometryParams, phi=None, a=None) -> ScalarField:
    mu = float(p.mu)
    return ScalarField(2, 3, lambda pt: _homogeneous_lagrangian(beta, list(pt.v), list(pt.dv), m, mu, phi, a),
                       time_dependent=False, name=f"Lh{beta}")


# --- finite symmetries ------------------------------------------------------
def generator_matrix(W, P, m: MetricConfig) -> np.ndarray:
    """Matrix of the linear vector field on (t, x) generated by (W, P)."""
    W = np.asarray(W, dtype=float)
    P = np.asarray(P, dtype=float)
    g = m.g
    M = np.zeros((3, 3))
    M[0, 1:] = -g * P
    M[1:, 0] = m.eta * P
    M[1:, 1:] = W * g[:, None]
    return M


def finite_motion(W, P, m: MetricConfig, s: float = 1.0) -> np.ndarray:
    """``expm(s M)``: an isometry of ``diag(eta, g11, g22)``."""
    return expm(s * generator_matrix(W, P, m))


def random_skew(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    w = rng.uniform(-scale, scale)
    return np.array([[0.0, w], [-w, 0.0]])
