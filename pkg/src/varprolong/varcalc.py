"""Euler-Poisson operator, Helmholtz criterion, affine third-order forms, symmetry residuals.

All derivatives are obtained by evaluating fields on series-valued jet points:

* total derivatives ``D_t^k`` by appending a curve variable (see
  :meth:`JetPoint.curve`) and reading ``k! c_k``;
* partial derivatives by appending nilpotent variables
  (:meth:`JetPoint.perturb`), one batch entry per coordinate;
* the truncated operator ``D_1 = d_t + v . d_x`` by evaluating along the
  straight line ``(t + l, x + l v, v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Sequence

import numpy as np

from .errors import NotOnShell, OrderExceeded, SingularA
from .fields import T_KEY, JetPoint, ScalarField, SourceForm, as_series
from .jets import TaylorScalar


# --- total derivatives and partials ------------------------------------------
def total_derivatives(f: ScalarField, jet, m: int) -> np.ndarray:
    """``[f, D_t f, ..., D_t^m f]`` at a numeric jet; result has a trailing axis of m + 1."""
    pt = JetPoint.from_jet(jet)
    if pt.rows < f.order + m:
        raise OrderExceeded(f"D_t^{m} of an order-{f.order} field needs {f.order + m} rows, got {pt.rows}")
    val = f.evaluate(pt.curve(m))
    return val.data * np.array([math.factorial(k) for k in range(m + 1)])


def _partials_along_curve(E: SourceForm, pt: JetPoint, keys: Sequence, degree: int) -> np.ndarray:
    """``G[a, j, k] = D_t^k dE_j/d(key_a)`` with trailing batch dims of ``pt``.

    ``pt`` must have enough rows for the requested degree.
    """
    curve = pt.curve(degree)
    vals = E.evaluate(curve.perturb(list(keys)))
    fact = np.array([math.factorial(k) for k in range(degree + 1)])
    out = np.stack([v.part(-1, 1).data * fact for v in vals], axis=1)  # (slot, j, *batch, k)
    return np.moveaxis(out, -1, 2)  # (slot, j, k, *batch)


def euler_poisson_form(L: ScalarField) -> SourceForm:
    """Source form ``E_i = sum_s (-1)^s D_t^s dL/dv_{s-1}^i`` (order 2k for an order-k L)."""
    k, n = L.order, L.dim
    keys = [(s - 1, i) for s in range(k + 1) for i in range(n)]
    signs = [(-1.0) ** s * math.factorial(s) for s in range(k + 1)]

    def fn(pt: JetPoint):
        curve = pt.truncated(2 * k).curve(k)
        val = L.evaluate(curve.perturb(keys)).part(-1, 1)  # leading slot axis, trailing sigma
        out = []
        for i in range(n):
            acc = None
            for s in range(k + 1):
                term = val.take_batch(s * n + i).part(-1, s) * signs[s]
                acc = term if acc is None else acc + term
            out.append(acc)
        return out

    return SourceForm(order=2 * k, dim=n, fn=fn, name=f"EP[{L.name}]")


def euler_poisson(L: ScalarField, jet) -> np.ndarray:
    if jet.order < 2 * L.order:
        raise OrderExceeded(f"Euler-Poisson of an order-{L.order} Lagrangian needs jet order {2 * L.order}")
    return euler_poisson_form(L)(jet)


def helmholtz_residuals(E: SourceForm, jet) -> np.ndarray:
    """Residual matrices of the variationality criterion for s = 0..r.

    ``R[s]_ij = dE_i/dv_{s-1}^j - sum_{k=s}^r (-1)^k k!/((k-s)! s!) D_t^{k-s} dE_j/dv_{k-1}^i``.
    Returns shape ``batch + (r + 1, n, n)``.
    """
    r, n = E.order, E.dim
    if jet.order < 2 * r:
        raise OrderExceeded(f"criterion for an order-{r} form needs jet order {2 * r}, got {jet.order}")
    pt = JetPoint.from_jet(jet).truncated(2 * r)
    keys = [(k - 1, i) for k in range(r + 1) for i in range(n)]
    G = _partials_along_curve(E, pt, keys, r)
    G = G.reshape((r + 1, n) + G.shape[1:])  # (k, i, j, order, *batch): dE_j/dv_{k-1}^i
    batch = G.shape[4:]
    R = np.zeros((r + 1, n, n) + batch)
    for s in range(r + 1):
        R[s] = np.swapaxes(G[s, :, :, 0], 0, 1)  # dE_i/dv_{s-1}^j
        for k in range(s, r + 1):
            R[s] -= (-1) ** k * math.comb(k, s) * G[k, :, :, k - s]
    return np.moveaxis(R, (0, 1, 2), (-3, -2, -1))


def criterion_antisymmetric(E: SourceForm, jet) -> np.ndarray:
    """The antisymmetric s = 0 condition, assembled directly from its own sum.

    ``dE_i/dx^j - dE_j/dx^i + sum_k (-1)^k D_t^k (dE_i/dv_{k-1}^j - dE_j/dv_{k-1}^i)``
    """
    r, n = E.order, E.dim
    pt = JetPoint.from_jet(jet).truncated(2 * r)
    keys = [(k - 1, i) for k in range(r + 1) for i in range(n)]
    G = _partials_along_curve(E, pt, keys, r)
    G = G.reshape((r + 1, n) + G.shape[1:])
    T = G[0, :, :, 0] - np.swapaxes(G[0, :, :, 0], 0, 1)  # [i(key), j(component)] -> dE_j/dx^i - dE_i/dx^j
    out = -T
    for k in range(r + 1):
        D = G[k, :, :, k]
        out = out + (-1) ** k * (np.swapaxes(D, 0, 1) - D)
    return np.moveaxis(out, (0, 1), (-2, -1))


# --- affine third-order normal form ------------------------------------------
@dataclass(frozen=True)
class AffineThirdOrder:
    """``E = A v'' + (v' . d_v) A v' + B v' + C`` with A skew; A, B, C functions of (t, x, v).

    ``A(t, x, v)`` and ``B(t, x, v)`` return n x n nested lists, ``C`` a list.
    """

    A: Callable
    B: Callable
    C: Callable
    dim: int = 2
    name: str = ""

    def _dA_along(self, pt: JetPoint):
        """(v' . d_v) A at the point, as nested lists."""
        n = self.dim
        ext = pt.extend(2)
        v = [ext.v[i] + _eps(ext.dv[i]) for i in range(n)]
        A = self.A(ext.t, list(ext.x), v)
        return [[_as(A[i][j], ext).part(-1, 1) for j in range(n)] for i in range(n)]

    def k_form(self) -> SourceForm:
        """Top-order-free part ``K = (v'.d_v)A v' + B v' + C`` (order 2)."""
        n = self.dim

        def fn(pt: JetPoint):
            dA = self._dA_along(pt)
            B = self.B(pt.t, list(pt.x), list(pt.v))
            C = self.C(pt.t, list(pt.x), list(pt.v))
            return [sum((dA[i][j] + B[i][j]) * pt.dv[j] for j in range(n)) + C[i] for i in range(n)]

        return SourceForm(order=2, dim=n, fn=fn, name=f"K[{self.name}]")

    def source_form(self) -> SourceForm:
        n = self.dim
        K = self.k_form()

        def fn(pt: JetPoint):
            A = self.A(pt.t, list(pt.x), list(pt.v))
            k = K.fn(pt)
            return [sum(A[i][j] * pt.ddv[j] for j in range(n)) + k[i] for i in range(n)]

        return SourceForm(order=3, dim=n, fn=fn, name=self.name)

    def matrices(self, t, x, v):
        """Numeric A, B, C at (batched) points: shapes batch+(n,n), batch+(n,n), batch+(n,)."""
        n = self.dim
        tt = TaylorScalar.constant(np.asarray(t, dtype=float))
        xx = [TaylorScalar.constant(np.asarray(x, dtype=float)[..., i]) for i in range(n)]
        vv = [TaylorScalar.constant(np.asarray(v, dtype=float)[..., i]) for i in range(n)]
        batch = np.broadcast_shapes(tt.batch_shape, np.asarray(v).shape[:-1], np.asarray(x).shape[:-1])
        num = lambda c: np.broadcast_to(as_series(c, (), batch).const, batch)
        A = self.A(tt, xx, vv)
        B = self.B(tt, xx, vv)
        C = self.C(tt, xx, vv)
        A = np.stack([np.stack([num(A[i][j]) for j in range(n)], -1) for i in range(n)], -2)
        B = np.stack([np.stack([num(B[i][j]) for j in range(n)], -1) for i in range(n)], -2)
        C = np.stack([num(C[i]) for i in range(n)], -1)
        return A, B, C


def _eps(value: TaylorScalar) -> TaylorScalar:
    """``eps * value`` for a value already extended by one nilpotent variable."""
    data = np.zeros_like(value.data)
    data[..., 1] = value.data[..., 0]
    return TaylorScalar._wrap(data, value.axes)


def _as(value, pt: JetPoint) -> TaylorScalar:
    return as_series(value, pt.axes, pt.batch_shape)


def assemble_affine(F: AffineThirdOrder, jet) -> np.ndarray:
    return F.source_form()(jet)


def lepage_k(F: AffineThirdOrder, jet) -> np.ndarray:
    return F.k_form()(jet.truncated(2) if jet.order > 2 else jet)


def solve_top(F: AffineThirdOrder, t, x, v, dv) -> np.ndarray:
    """``v''`` solving ``A v'' = -K`` (A invertible)."""
    n = F.dim
    A, _, _ = F.matrices(t, x, v)
    jet = _jet(t, x, [v, dv])
    K = lepage_k(F, jet)
    if np.any(np.abs(np.linalg.det(A)) == 0.0):
        raise SingularA("A is singular at the point")
    return -np.linalg.solve(A, K[..., None])[..., 0]


def _jet(t, x, rows):
    from .jetspace import ContactJet

    rows = [np.asarray(r, dtype=float) for r in rows]
    shape = np.broadcast_shapes(np.shape(t), np.shape(x)[:-1], *(r.shape[:-1] for r in rows))
    n = rows[0].shape[-1]
    return ContactJet(
        np.broadcast_to(np.asarray(t, dtype=float), shape),
        np.broadcast_to(np.asarray(x, dtype=float), shape + (n,)),
        np.stack([np.broadcast_to(r, shape + (n,)) for r in rows], axis=-2),
    )


# --- constraint PDE system -------------------------------------------------
def _antisym3(T: np.ndarray) -> np.ndarray:
    """Antisymmetrize the three leading indices with weight 1/3!."""
    out = np.zeros_like(T)
    for perm in permutations(range(3)):
        sign = np.linalg.det(np.eye(3)[list(perm)])
        out = out + sign * np.transpose(T, perm + tuple(range(3, T.ndim)))
    return out / 6.0


def _d1_table(fn: Callable, t, x, v, n: int, degree: int = 3):
    """Derivative table of a matrix/vector valued function of (t, x, v).

    Returns arrays with the function's own indices first, then
    ``[m, a, b]`` where m is the D_1 power, a, b index coordinates
    ``x^1..x^n, v^1..v^n`` and batch dims trailing:
    ``val[..., m]``, ``d1[..., m, a]``, ``d2[..., m, a, b]``.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    batch = np.broadcast_shapes(t.shape, x.shape[:-1], v.shape[:-1])
    lam = TaylorScalar.stack([np.broadcast_to(t, batch), np.ones(batch)] + [np.zeros(batch)] * (degree - 1))
    xs = [TaylorScalar.stack([np.broadcast_to(x[..., i], batch), np.broadcast_to(v[..., i], batch)]
                             + [np.zeros(batch)] * (degree - 1)) for i in range(n)]
    vs = [TaylorScalar.constant(np.broadcast_to(v[..., i], batch), (degree + 1,)) for i in range(n)]
    pt = JetPoint(lam, tuple(xs), (tuple(vs),))
    coords = [(-1, i) for i in range(n)] + [(0, i) for i in range(n)]
    pairs = [(a, b) for a in coords for b in coords]
    pp = pt.perturb(pairs)
    res = fn(pp.t, list(pp.x), list(pp.v))
    fact = np.array([math.factorial(m) for m in range(degree + 1)])
    nc = 2 * n

    def conv(val):
        d = as_series(val, pp.axes, pp.batch_shape).data  # (pair, *batch, m, e1, e2)
        d = np.moveaxis(d, 0, -1)  # (*batch, m, e1, e2, pair)
        d = d.reshape(d.shape[:-1] + (nc, nc))
        val0 = d[..., 0, 0, 0, 0] * fact
        d1 = d[..., 1, 0, :, 0] * fact[:, None]
        d2 = d[..., 1, 1, :, :] * fact[:, None, None]
        return val0, d1, d2

    def walk(obj):
        if isinstance(obj, (list, tuple)):
            parts = [walk(o) for o in obj]
            return tuple(np.stack([p[q] for p in parts]) for q in range(3))
        return conv(obj)

    val0, d1, d2 = walk(res)
    nb = len(batch)

    def batch_last(arr, extra):
        # move batch dims (located after the function indices) to the end
        k = arr.ndim - nb - extra
        return np.moveaxis(arr, list(range(k, k + nb)), list(range(arr.ndim - nb, arr.ndim)))

    return batch_last(val0, 1), batch_last(d1, 2), batch_last(d2, 3)


@dataclass(frozen=True)
class ConstraintResiduals:
    """Left-hand sides of the six constraint equations on (A, B, C); batch dims trailing."""

    skew3_dvA: np.ndarray
    B_antisym: np.ndarray
    dB_dA: np.ndarray
    C_sym: np.ndarray
    ddC: np.ndarray
    dC_D1A: np.ndarray
    A_skew: np.ndarray

    def as_list(self) -> list[np.ndarray]:
        return [self.skew3_dvA, self.B_antisym, self.dB_dA, self.C_sym, self.ddC, self.dC_D1A]

    def max_abs(self) -> np.ndarray:
        return np.array([np.max(np.abs(r)) if r.size else 0.0 for r in self.as_list()])


def constraint_residuals(F: AffineThirdOrder, t, x, v) -> ConstraintResiduals:
    """Evaluate the constraint system on A, B, C at points (t, x, v).

    Brackets carry weight 1/k!: ``T_[ij] = (T_ij - T_ji)/2``, ``T_(ij) = (T_ij + T_ji)/2``.
    """
    n = F.dim
    Av, Ad1, _ = _d1_table(F.A, t, x, v, n)
    Bv, Bd1, _ = _d1_table(F.B, t, x, v, n)
    Cv, Cd1, Cd2 = _d1_table(F.C, t, x, v, n)
    X, V = slice(0, n), slice(n, 2 * n)

    batch = np.broadcast_shapes(np.shape(t), np.shape(x)[:-1], np.shape(v)[:-1])
    nb = len(batch)

    def D(val, m):  # D_1^m of the function: (func idx, *batch)
        return np.take(val, m, axis=val.ndim - nb - 1)

    def P(d1, m, sl):  # D_1^m d_a f with a first: (a, func idx, *batch)
        sub = np.take(d1, m, axis=d1.ndim - nb - 2)
        sub = sub[(Ellipsis, sl) + (slice(None),) * nb]
        return np.moveaxis(sub, sub.ndim - nb - 1, 0)

    A = D(Av, 0)
    D1A = D(Av, 1)
    D1cubeA = D(Av, 3)
    vA, xA = P(Ad1, 0, V), P(Ad1, 0, X)
    D1vA, D1xA, D1sq_vA = P(Ad1, 1, V), P(Ad1, 1, X), P(Ad1, 2, V)
    B = D(Bv, 0)
    D1B = D(Bv, 1)
    vB, xB = P(Bd1, 0, V), P(Bd1, 0, X)
    vC, xC, D1vC = P(Cd1, 0, V), P(Cd1, 0, X), P(Cd1, 1, V)
    # second v-derivatives of C: (l, i, j) = d_{v^l} d_{v^i} C_j
    Cvv = np.take(Cd2, 0, axis=Cd2.ndim - nb - 3)[(Ellipsis, V, V) + (slice(None),) * nb]
    vvC = np.moveaxis(Cvv, (Cvv.ndim - nb - 2, Cvv.ndim - nb - 1), (0, 1))

    sw = lambda T: np.swapaxes(T, 0, 1)
    r1 = _antisym3(vA)
    r2 = B - sw(B) - 3.0 * D1A
    # (i, j, l) layout; vB[i, j, l] = d_{v^i} B_jl
    r3 = (vB - sw(vB)) - 2.0 * (xA - sw(xA)) + np.moveaxis(xA, 0, 2) + 2.0 * np.moveaxis(D1vA, 0, 2)
    r4 = 0.5 * (vC + sw(vC)) - 0.5 * (D1B + sw(D1B))
    r5 = ((np.moveaxis(vvC, 0, 2) - np.moveaxis(np.swapaxes(vvC, 1, 2), 0, 2))
          - 2.0 * (xB - sw(xB)) + np.moveaxis(D1sq_vA, 0, 2) + 6.0 * _antisym3(D1xA))
    r6 = 2.0 * (xC - sw(xC)) - (D1vC - sw(D1vC)) - D1cubeA
    return ConstraintResiduals(r1, r2, r3, r4, r5, r6, A + sw(A))



# --- point symmetries ------------------------------------------------------
@dataclass(frozen=True)
class PointGenerator:
    """``X = T d_t + Xi^i d_{x^i}`` with ``T(t, x)`` a scalar and ``Xi(t, x)`` a list of n."""

    T: Callable
    Xi: Callable
    dim: int
    name: str = ""

    def __add__(self, other: "PointGenerator") -> "PointGenerator":
        return PointGenerator(
            lambda t, x: self.T(t, x) + other.T(t, x),
            lambda t, x: [a + b for a, b in zip(self.Xi(t, x), other.Xi(t, x))],
            self.dim, f"{self.name}+{other.name}")

    def scaled(self, c: float) -> "PointGenerator":
        return PointGenerator(lambda t, x: c * self.T(t, x), lambda t, x: [c * a for a in self.Xi(t, x)],
                              self.dim, f"{c}*{self.name}")


def time_translation(n: int) -> PointGenerator:
    return PointGenerator(lambda t, x: 1.0, lambda t, x: [0.0] * n, n, "d_t")


def dilation(n: int) -> PointGenerator:
    return PointGenerator(lambda t, x: 0.0, lambda t, x: list(x), n, "x.d_x")


def euclidean_generator(W, P, g, eta: float = 1.0) -> PointGenerator:
    """Infinitesimal (pseudo)Euclidean motion of the (t, x) space.

    ``g`` is the diagonal of the spatial metric, ``eta`` the time signature,
    ``W`` a skew matrix with lowered indices and ``P`` a vector: the generator is
    ``-(P.x) d_t + eta t P.d_x + (g^{-1} W x).d_x``, where ``P.x = g_kk P^k x^k``.
    """
    W = np.asarray(W, dtype=float)
    P = np.asarray(P, dtype=float)
    g = np.asarray(g, dtype=float)
    n = len(P)
    if np.any(np.abs(W + W.T) > 1e-14):
        raise ValueError("W must be skew-symmetric")

    def T(t, x):
        return -sum(g[k] * P[k] * x[k] for k in range(n))

    def Xi(t, x):
        return [eta * P[i] * t + g[i] * sum(W[i, j] * x[j] for j in range(n)) for i in range(n)]

    return PointGenerator(T, Xi, n, "euclid")


def rotation_generator(W, g) -> PointGenerator:
    return euclidean_generator(W, np.zeros(len(g)), g)


def prolong_at(X: PointGenerator, pt: JetPoint, r: int) -> list:
    """``[T, Xi, phi_1, ..., phi_r]`` evaluated at a (possibly series-valued) point.

    ``phi_0 = Xi``, ``phi_s = D_t phi_{s-1} - v_{s-1} D_t T``.
    """
    if pt.rows < r:
        raise OrderExceeded(f"prolongation to order {r} needs {r} derivative rows, got {pt.rows}")
    n = X.dim
    c = pt.curve(r)
    batch = c.batch_shape
    T = as_series(X.T(c.t, list(c.x)), c.axes, batch)
    phi = [as_series(a, c.axes, batch) for a in X.Xi(c.t, list(c.x))]
    DT = T.deriv(-1)
    out = [T.part(-1, 0), [p.part(-1, 0) for p in phi]]
    for s in range(1, r + 1):
        phi = [phi[i].deriv(-1) - c.coord(s - 1, i) * DT for i in range(n)]
        out.append([p.part(-1, 0) for p in phi])
    return out


@dataclass(frozen=True)
class Prolongation:
    T: np.ndarray
    Xi: np.ndarray
    phi: list

    def direction(self) -> dict:
        """Coordinate key -> coefficient of the prolonged field."""
        out = {T_KEY: self.T}
        for i in range(self.Xi.shape[-1]):
            out[(-1, i)] = self.Xi[..., i]
            for s, p in enumerate(self.phi):
                out[(s, i)] = p[..., i]
        return out


def prolong_vector_field(X: PointGenerator, r: int, jet) -> Prolongation:
    vals = prolong_at(X, JetPoint.from_jet(jet), r)
    return Prolongation(
        vals[0].const,
        np.stack([c.const for c in vals[1]], axis=-1),
        [np.stack([c.const for c in row], axis=-1) for row in vals[2:]],
    )


def _apply_field(values, pt: JetPoint, direction: dict):
    """Derivative of ``values(pt)`` along ``direction`` (one nilpotent eps)."""
    res = values(pt.perturb_direction(direction))
    if isinstance(res, (list, tuple)):
        return [_apply_field_part(r, pt) for r in res]
    return _apply_field_part(res, pt)


def _apply_field_part(res, pt):
    if isinstance(res, (list, tuple)):
        return [_apply_field_part(r, pt) for r in res]
    return as_series(res, pt.axes + (2,), pt.batch_shape).part(-1, 1)


def onshell_symmetry_residual(E: SourceForm, X: PointGenerator, jet, tol: float = 1e-8) -> np.ndarray:
    """``(X^(r) E)(j)`` at a jet on the zero set of E (r = order of E)."""
    e = E(jet)
    if np.max(np.abs(e)) > tol:
        raise NotOnShell(f"|E(j)| = {np.max(np.abs(e)):.3g} exceeds {tol:g}")
    pt = JetPoint.from_jet(jet).truncated(E.order)
    vals = prolong_at(X, pt, E.order)
    direction = {T_KEY: vals[0]}
    for i in range(X.dim):
        direction[(-1, i)] = vals[1][i]
        for s in range(E.order):
            direction[(s, i)] = vals[s + 2][i]
    out = E.evaluate(pt.perturb_direction(direction))
    return np.stack([c.part(-1, 1).const for c in out], axis=-1)


@dataclass(frozen=True)
class InvarianceResult:
    """Multipliers of the Lie-derivative identity and the remaining ``dt`` residual."""

    Phi: np.ndarray
    Xi: np.ndarray
    Pi: np.ndarray
    residual: np.ndarray


def invariance_residual(F: AffineThirdOrder, W, P, v, dv, metric, t=0.0, x=None) -> InvarianceResult:
    """Invariance of the form ``A dx (x) dv' + K dx (x) dt`` under a Euclidean generator.

    The Lie derivative is matched against ``Phi eps + Xi theta_1 + Pi theta_2``
    coefficientwise in ``dv'``, ``dv``, ``dx``; the ``dt`` coefficient is returned
    as the residual ``X(K) + K d_tT + A d_t phi_2 - Phi K + Xi v + Pi v'``.
    ``metric`` provides ``g`` (diagonal) and ``eta``.
    """
    n = F.dim
    v = np.asarray(v, dtype=float)
    dv = np.asarray(dv, dtype=float)
    x = np.zeros_like(v) if x is None else np.asarray(x, dtype=float)
    X = euclidean_generator(W, P, metric.g, metric.eta)
    jet = _jet(t, x, [v, dv])
    pt = JetPoint.from_jet(jet)
    batch = pt.batch_shape

    A_num, _, _ = F.matrices(t, x, v)
    if np.any(np.abs(np.linalg.det(A_num)) < 1e-300):
        raise SingularA("A is singular at the point")
    K_num = lepage_k(F, jet)

    # derivative of phi_2 and T in every coordinate (t, x, v, v')
    keys = [T_KEY] + [(s, i) for s in (-1, 0, 1) for i in range(n)]
    pp = pt.perturb(keys)
    vals = prolong_at(X, pp, 2)
    dphi2 = np.stack([c.part(-1, 1).data for c in vals[3]], axis=0)  # (j, key, *batch)
    dT = vals[0].part(-1, 1).data  # (key, *batch)
    dphi2 = np.moveaxis(dphi2, (0, 1), (-2, -1))  # (*batch, j, key)
    dT = np.moveaxis(dT, 0, -1)
    ix = lambda s: slice(1 + (s + 1) * n, 1 + (s + 2) * n)
    dphi2_t, dphi2_x, dphi2_v, dphi2_dv = dphi2[..., 0], dphi2[..., ix(-1)], dphi2[..., ix(0)], dphi2[..., ix(1)]
    dT_t, dT_x = dT[..., 0], dT[..., ix(-1)]

    base = prolong_at(X, pt, 2)
    direction = {T_KEY: base[0]}
    for i in range(n):
        direction[(-1, i)] = base[1][i]
        direction[(0, i)] = base[2][i]
        direction[(1, i)] = base[3][i]

    def A_of(p):
        return F.A(p.t, list(p.x), list(p.v))

    XA = _apply_field(A_of, pt, direction)
    XA = np.stack([np.stack([np.broadcast_to(c.const, batch) for c in row], -1) for row in XA], -2)
    Kform = F.k_form()
    XK = _apply_field(lambda p: Kform.fn(p), pt, direction)
    XK = np.stack([np.broadcast_to(c.const, batch) for c in XK], -1)

    Ainv = np.linalg.inv(A_num)
    Phi = (XA + A_num @ dphi2_dv) @ Ainv
    Pi = A_num @ dphi2_v
    Xi = K_num[..., :, None] * dT_x[..., None, :] + A_num @ dphi2_x
    mv = lambda M, w: (M @ w[..., None])[..., 0]
    res = XK + K_num * dT_t[..., None] + mv(A_num, dphi2_t) - mv(Phi, K_num) + mv(Xi, v) + mv(Pi, dv)
    return InvarianceResult(Phi, Xi, Pi, res)
