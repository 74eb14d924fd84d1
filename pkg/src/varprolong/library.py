"""A library of smooth test Lagrangians on J^2(R, R^2) with orders 1 and 2."""

from __future__ import annotations

from .fields import ScalarField
from .jets import cos, exp, log, sin, sqrt


def _sq(a):
    return a * a


def lagrangian_library() -> list[ScalarField]:
    fields = [
        ScalarField(1, 2, lambda p: 0.5 * (_sq(p.v[0]) + _sq(p.v[1])) - 0.5 * (_sq(p.x[0]) + _sq(p.x[1]))
                    , name="oscillator"),
        ScalarField(1, 2, lambda p: sqrt(1.0 + _sq(p.v[0]) + _sq(p.v[1])), name="arc-length"),
        ScalarField(1, 2, lambda p: exp(0.3 * p.t) * (_sq(p.v[0]) - p.x[0] * p.x[1]), name="damped"),
        ScalarField(1, 2, lambda p: p.x[0] * p.v[1] - p.x[1] * p.v[0] + sin(p.x[0]) * cos(p.v[1]),
                    name="magnetic"),
        ScalarField(1, 2, lambda p: log(2.0 + _sq(p.v[0])) * (1.0 + _sq(p.x[1])) + p.t * p.v[1],
                    name="log-kinetic"),
        ScalarField(2, 2, lambda p: 0.5 * (_sq(p.dv[0]) + _sq(p.dv[1])), name="spline"),
        ScalarField(2, 2, lambda p: (p.v[0] * p.dv[1] - p.v[1] * p.dv[0]) / (1.0 + _sq(p.v[0]) + _sq(p.v[1])),
                    name="affine-curvature"),
        ScalarField(2, 2, lambda p: _sq(p.dv[0]) * (1.0 + _sq(p.x[0])) + sin(p.t) * p.dv[1] * p.v[0],
                    name="weighted-acceleration"),
        ScalarField(2, 2, lambda p: sqrt(1.0 + _sq(p.dv[0]) + _sq(p.dv[1]) + _sq(p.v[0])) * exp(0.2 * p.x[1]),
                    name="root-mixed"),
        ScalarField(2, 2, lambda p: p.dv[0] * p.dv[1] * p.v[0] - cos(p.x[0] + p.v[1]) * p.dv[0]
                    + p.t * p.x[0] * p.x[1], name="polynomial-trig"),
    ]
    return fields
