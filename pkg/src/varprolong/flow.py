"""Integration of the invariant equation in graph form and curve diagnostics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .errors import DegenerateFrame, DomainExit, SignatureUnsupported, StepFailure, TooFewSamples
from .euclid3 import GeometryParams, MetricConfig, invariant_momentum
from .jetspace import ContactJet

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension: y(t + th h) = y + h K^T P [th, th^2, th^3, th^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class DenseSolution:
    """Piecewise quartic interpolant over the accepted steps."""

    ts: np.ndarray
    ys: np.ndarray
    hs: np.ndarray
    Q: np.ndarray  # (step, state, 4)

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.ts, t, side="right") - 1, 0, len(self.hs) - 1)
        return i, (t - self.ts[i]) / self.hs[i]

    def __call__(self, t) -> np.ndarray:
        i, th = self._locate(t)
        powers = np.stack([th, th**2, th**3, th**4], axis=-1)
        return self.ys[i] + self.hs[i][..., None] * np.einsum("...sk,...k->...s", self.Q[i], powers)

    def derivative(self, t) -> np.ndarray:
        i, th = self._locate(t)
        powers = np.stack([np.ones_like(th), 2 * th, 3 * th**2, 4 * th**3], axis=-1)
        return np.einsum("...sk,...k->...s", self.Q[i], powers)


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0


def dopri54(f: Callable, t0: float, y0, t1: float, tol: float = 1e-8, h0: float | None = None,
            fixed_step: float | None = None, check: Callable | None = None,
            h_min: float = 1e-14, max_steps: int = 1_000_000,
            per_unit_step: bool = True) -> tuple[DenseSolution, StepStats]:
    """Dormand-Prince 5(4) with PI step control (or fixed steps) and dense output.

    With ``per_unit_step`` the local error estimate is divided by the step size,
    which bounds the error of the interpolated derivative by a multiple of tol.
    ``check(t, y)`` is called after every accepted step and may raise to stop.
    """
    y = np.asarray(y0, dtype=float)
    t = float(t0)
    direction = 1.0 if t1 >= t0 else -1.0
    stats = StepStats()
    K = np.empty((7, y.size))
    K[0] = f(t, y)
    stats.evaluations += 1

    if fixed_step is not None:
        n = max(1, int(round(abs(t1 - t0) / fixed_step)))
        h = (t1 - t0) / n
    elif h0 is not None:
        h = direction * abs(h0)
    else:
        scale = tol + tol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((K[0] / scale) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = direction * min(h, abs(t1 - t0))

    beta = 0.04
    alpha = (0.25 if per_unit_step else 0.2) - 0.75 * beta
    err_prev = 1e-4
    ts, ys, hs, Qs = [], [], [], []
    while direction * (t1 - t) > 1e-14 * max(1.0, abs(t1)):
        if stats.accepted + stats.rejected > max_steps:
            raise StepFailure(f"exceeded {max_steps} steps at t = {t}")
        if direction * (t + h - t1) > 0:
            h = t1 - t
        for s in range(1, 6):
            K[s] = f(t + _C[s] * h, y + h * (np.asarray(_A[s]) @ K[:s]))
        y_new = y + h * (_B[:6] @ K[:6])
        K[6] = f(t + h, y_new)
        stats.evaluations += 6
        if fixed_step is not None:
            err = 0.0
        else:
            scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
            local = (_E @ K) if per_unit_step else h * (_E @ K)
            err = np.sqrt(np.mean((local / scale) ** 2))
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            ts.append(t)
            ys.append(y.copy())
            hs.append(h)
            Qs.append(K.T @ _P)
            t += h
            y = y_new
            K[0] = K[6]
            stats.accepted += 1
            if check is not None:
                check(t, y)
            if fixed_step is None:
                fac = 0.9 * max(err, 1e-10) ** -alpha * err_prev**beta
                h *= min(5.0, max(0.2, fac))
                err_prev = max(err, 1e-4)
        else:
            stats.rejected += 1
            h *= max(0.2, 0.9 * err**-alpha)
        if fixed_step is None and abs(h) < h_min * max(1.0, abs(t)):
            raise StepFailure(f"step size underflow at t = {t}")
    ts.append(t)
    return DenseSolution(np.array(ts), np.array(ys), np.array(hs), np.array(Qs)), stats


# --- the equation in graph form -------------------------------------------
def acceleration(v, dv, m: MetricConfig, p: GeometryParams) -> np.ndarray:
    """``v''`` solving the invariant equation (A is invertible)."""
    v = np.asarray(v, dtype=float)
    dv = np.asarray(dv, dtype=float)
    g = m.g
    o = float(m.orientation)
    q = m.eta + np.sum(g * v * v, axis=-1)
    if np.any(q <= 0.0):
        raise DomainExit("eta + V.V <= 0")
    vdv = np.sum(g * v * dv, axis=-1)
    star_dv = o * np.stack([-dv[..., 1], dv[..., 0]], axis=-1)
    R = 3.0 * star_dv * (vdv / q**2.5)[..., None] + float(p.mu) * (q[..., None] * g * dv - vdv[..., None] * g * v) / (q**1.5)[..., None]
    c = R * (q**1.5)[..., None]
    return o * np.stack([c[..., 1], -c[..., 0]], axis=-1)


@dataclass
class Trajectory:
    """Dense-output samples of a solution in graph form ``t -> (t, x(t))``."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    ddv: np.ndarray
    params: GeometryParams
    metric: MetricConfig
    tol: float = 0.0
    stats: StepStats = field(default_factory=StepStats)
    ddv_interp: np.ndarray | None = None
    dense: DenseSolution | None = None

    def __len__(self) -> int:
        return len(self.t)

    def jets(self, interpolated: bool = False) -> ContactJet:
        a = self.ddv_interp if interpolated and self.ddv_interp is not None else self.ddv
        return ContactJet(self.t, self.x, np.stack([self.v, self.dv, a], axis=-2))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x1", "x2", "v1", "v2", "a1", "a2"])
        for row in np.column_stack([self.t, self.x, self.v, self.dv]):
            w.writerow([f"{c:.17g}" for c in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, metric: MetricConfig, params: GeometryParams,
                 ddv: str = "equation") -> "Trajectory":
        """Read a trajectory CSV; v'' is solved from the equation or, with ``ddv="spline"``,
        differentiated from the stored v' samples independently of the equation."""
        if ddv not in ("equation", "spline"):
            raise ValueError(f"unknown v'' source {ddv!r}")
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["t", "x1", "x2", "v1", "v2", "a1", "a2"]:
            raise ValueError("trajectory CSV must start with the header t,x1,x2,v1,v2,a1,a2")
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, 7)
        v, dv = data[:, 3:5], data[:, 5:7]
        if ddv == "spline":
            a = CubicSpline(data[:, 0], dv).derivative()(data[:, 0])
        else:
            a = acceleration(v, dv, metric, params)
        return cls(data[:, 0], data[:, 1:3], v, dv, a, params, metric)


def integrate(x0, v0, dv0, t_span=(0.0, 20.0), tol: float = 1e-10, m: MetricConfig = MetricConfig(),
              p: GeometryParams = GeometryParams(), samples: int = 2001, fixed_step: float | None = None,
              domain_margin: float = 0.0) -> Trajectory:
    """Integrate the invariant equation from ``(x, v, v')`` and sample on a uniform grid."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    y0 = np.concatenate([np.asarray(x0, float), np.asarray(v0, float), np.asarray(dv0, float)])
    if m.eta + np.sum(m.g * y0[2:4] ** 2) <= domain_margin:
        raise DomainExit("initial velocity outside eta + V.V > 0")

    def f(t, y):
        return np.concatenate([y[2:4], y[4:6], acceleration(y[2:4], y[4:6], m, p)])

    def check(t, y):
        if m.eta + np.sum(m.g * y[2:4] ** 2) <= domain_margin:
            raise DomainExit(f"trajectory left eta + V.V > 0 at t = {t:.6g}")

    # the controller runs at tol/4 so interpolated samples meet a 10 tol residual bound
    sol, stats = dopri54(f, t_span[0], y0, t_span[1], tol=0.25 * tol, fixed_step=fixed_step, check=check)
    ts = np.linspace(t_span[0], t_span[1], samples)
    Y = sol(ts)
    dY = sol.derivative(ts)
    v, dv = Y[:, 2:4], Y[:, 4:6]
    tr = Trajectory(ts, Y[:, 0:2], v, dv, acceleration(v, dv, m, p), p, m, tol, stats, dY[:, 4:6], sol)
    return tr


# --- Frenet apparatus ---------------------------------------------------------
@dataclass
class FrenetData:
    s: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    torsion: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "kappa1", "kappa2"])
        for row in np.column_stack([self.s, self.kappa1, self.kappa2]):
            w.writerow([f"{c:.17g}" for c in row])
        return buf.getvalue()


def frenet_from_derivatives(t, d1, d2, d3, degenerate_tol: float = 1e-10) -> FrenetData:
    """Curvatures of a space curve from its first three derivatives (rows)."""
    c12 = np.cross(d1, d2)
    n12 = np.linalg.norm(c12, axis=-1)
    if np.any(n12 < degenerate_tol):
        raise DegenerateFrame("|g' x g''| below threshold: the Frenet frame is undefined")
    speed = np.linalg.norm(d1, axis=-1)
    k1 = n12 / speed**3
    tau = np.einsum("...i,...i->...", c12, d3) / n12**2
    s = cumulative_simpson(speed, x=np.asarray(t, float), initial=0.0) if len(t) > 2 else np.zeros(len(t))
    return FrenetData(s, k1, np.abs(tau), tau)


def frenet(tr: Trajectory, m: MetricConfig | None = None) -> FrenetData:
    """Curvature and torsion of ``t -> (t, x(t))`` (Euclidean signature only)."""
    m = tr.metric if m is None else m
    if not m.euclidean:
        raise SignatureUnsupported("Frenet diagnostics are implemented for the Euclidean signature only")
    n = len(tr.t)
    d1 = np.column_stack([np.ones(n), tr.v])
    d2 = np.column_stack([np.zeros(n), tr.dv])
    d3 = np.column_stack([np.zeros(n), tr.ddv])
    return frenet_from_derivatives(tr.t, d1, d2, d3)


def helix_diagnostics(fd: FrenetData, p: GeometryParams, tol: float = 1e-5) -> dict:
    if len(fd.s) < 10:
        raise TooFewSamples(f"need at least 10 samples, got {len(fd.s)}")
    k1m, k1s = float(np.mean(fd.kappa1)), float(np.std(fd.kappa1))
    k2m, k2s = float(np.mean(fd.kappa2)), float(np.std(fd.kappa2))
    dev = float(np.max(np.abs(fd.kappa2 - abs(p.mu))))
    ok = k1s <= tol * (1.0 + k1m) and dev <= tol
    return {"kappa1_mean": k1m, "kappa1_std": k1s, "kappa2_mean": k2m, "kappa2_std": k2s,
            "kappa2_max_dev": dev, "pass": bool(ok)}


def momentum(tr: Trajectory, m: MetricConfig | None = None, p: GeometryParams | None = None) -> np.ndarray:
    m = tr.metric if m is None else m
    p = tr.params if p is None else p
    n = len(tr.t)
    u = np.column_stack([np.ones(n), tr.v])
    du = np.column_stack([np.zeros(n), tr.dv])
    return invariant_momentum(u, du, m, p)


def momentum_drift(tr: Trajectory, m: MetricConfig | None = None, p: GeometryParams | None = None) -> float:
    P = momentum(tr, m, p)
    return float(np.max(np.linalg.norm(P - P[0], axis=-1)))


def helix(r: float, omega: float, t) -> tuple:
    """Jet data of ``t -> (t, r cos(w t), r sin(w t))``: (x, v, v', v'')."""
    t = np.asarray(t, dtype=float)
    c, s = np.cos(omega * t), np.sin(omega * t)
    x = r * np.stack([c, s], -1)
    v = r * omega * np.stack([-s, c], -1)
    dv = -r * omega**2 * np.stack([c, s], -1)
    ddv = r * omega**3 * np.stack([s, -c], -1)
    return x, v, dv, ddv
