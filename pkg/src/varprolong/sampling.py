"""Seeded samplers for jets, velocity jets, reparametrizations and symmetry parameters."""

from __future__ import annotations

import numpy as np

from .euclid3 import MetricConfig, random_skew
from .jetspace import ContactJet, ReparamJet, VelocityJet

LOW, HIGH = -0.9, 0.9
# distance kept from eta + V.V = 0; near it the coefficients of the equation blow up
Q_MARGIN = 0.25


def rng_from(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _fill(draw, accept, n: int, batch: int = 256, max_rounds: int = 10_000):
    out = []
    have = 0
    for _ in range(max_rounds):
        cand = draw(batch)
        mask = accept(cand)
        if mask.any():
            out.append(cand[mask])
            have += int(mask.sum())
        if have >= n:
            break
    else:
        raise RuntimeError("rejection sampler could not find enough points in the domain")
    return np.concatenate(out)[:n]


def random_jets(rng: np.random.Generator, n: int, order: int, m: MetricConfig | None = None,
                dim: int = 2, low: float = LOW, high: float = HIGH, margin: float = Q_MARGIN) -> ContactJet:
    """Jets with every coordinate uniform in [low, high]; with a metric, keep eta + V.V >= margin."""
    width = 1 + dim + order * dim

    def draw(k):
        return rng.uniform(low, high, (k, width))

    def accept(c):
        if m is None or order == 0:
            return np.ones(len(c), dtype=bool)
        v = c[:, 1 + dim:1 + 2 * dim]
        return m.eta + np.sum(m.g * v * v, axis=1) >= margin

    c = _fill(draw, accept, n)
    return ContactJet(c[:, 0], c[:, 1:1 + dim], c[:, 1 + dim:].reshape(n, order, dim))


def random_points(rng: np.random.Generator, n: int, m: MetricConfig, margin: float = Q_MARGIN):
    """(t, x, v) triples for pointwise checks."""
    j = random_jets(rng, n, 1, m, margin=margin)
    return j.t, j.x, j.v


def random_velocity_jets(rng: np.random.Generator, n: int, order: int, m: MetricConfig | None = None,
                         u0_range=(0.5, 1.0), margin: float = Q_MARGIN, dim: int = 2) -> VelocityJet:
    """Velocity jets with ``u^0`` in ``u0_range`` and the other entries uniform in [-1, 1]."""

    def draw(k):
        c = rng.uniform(-1.0, 1.0, (k, order + 1, dim + 1))
        c[:, 1, 0] = rng.uniform(*u0_range, k)
        return c

    def accept(c):
        if m is None:
            return np.ones(len(c), dtype=bool)
        u = c[:, 1]
        vv = u[:, 1:] / u[:, :1]
        uu = np.sum(m.g3 * u * u, axis=1)
        return (m.eta + np.sum(m.g * vv * vv, axis=1) >= margin) & (uu >= margin * u[:, 0] ** 2)

    return VelocityJet(_fill(draw, accept, n))


def random_reparams(rng: np.random.Generator, n: int, order: int) -> ReparamJet:
    """Orientation-preserving reparametrization jets: rho' in [0.5, 2], higher terms in [-1, 1]."""
    d = rng.uniform(-1.0, 1.0, (n, order))
    d[:, 0] = rng.uniform(0.5, 2.0, n)
    return ReparamJet(d)


def random_generator_params(rng: np.random.Generator, scale: float = 1.0):
    """Skew W and vector P for a Euclidean generator."""
    return random_skew(rng, scale), rng.uniform(-scale, scale, 2)
