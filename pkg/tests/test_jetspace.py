import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varprolong import euclid3 as e3
from varprolong.errors import OrderExceeded, SingularReparam, ZeroTimeVelocity
from varprolong.fields import ScalarField, SourceForm
from varprolong.jets import TaylorScalar
from varprolong.jetspace import (ContactJet, ReparamJet, VelocityJet, equivariance_residual, homogenize_equation,
                                 homogenize_lagrangian, project, project_closed_form_order3, prolong_graph_curve,
                                 reparametrize)
from varprolong.sampling import random_reparams, random_velocity_jets, rng_from

EUCLID = e3.MetricConfig()


def vjet(rows):
    return VelocityJet(np.asarray(rows, dtype=float))


# --- project ----------------------------------------------------------------
def test_project_graph_parametrization():
    w = vjet([[0.3, 1.0, 2.0], [1.0, 0.4, -0.2], [0.0, 0.5, 0.7], [0.0, -1.1, 0.9]])
    j = project(w)
    assert np.allclose(j.derivs, w.coords[1:, 1:])
    assert j.t == 0.3 and np.allclose(j.x, [1.0, 2.0])


def test_project_hand_values():
    assert np.allclose(project(vjet([[0, 0], [2, 4], [0, 8]])).derivs, [[2], [2]])
    assert np.allclose(project(vjet([[0, 0], [2, 4], [4, 8]])).derivs, [[2], [0]])


def test_project_zero_time_velocity():
    with pytest.raises(ZeroTimeVelocity):
        project(vjet([[0, 0], [0, 1], [1, 0]]))


def test_project_matches_closed_form():
    W = random_velocity_jets(rng_from(11), 100, 3, dim=2)
    assert np.max(np.abs(project(W).derivs - project_closed_form_order3(W).derivs)) <= 1e-12


def test_project_batched_matches_single():
    W = random_velocity_jets(rng_from(3), 5, 5, dim=2)
    batched = project(W)
    for i in range(5):
        assert np.allclose(project(VelocityJet(W.coords[i])).derivs, batched.derivs[i], atol=1e-13)


# --- reparametrize -------------------------------------------------------
def test_reparametrize_identity():
    W = random_velocity_jets(rng_from(4), 3, 4, dim=2)
    assert np.allclose(reparametrize(W, ReparamJet.identity(4)).coords, W.coords)


def test_reparametrize_scaling():
    W = random_velocity_jets(rng_from(5), 3, 3, dim=2)
    lam = 1.7
    out = reparametrize(W, ReparamJet.scaling(lam, 3)).coords
    for m in range(4):
        assert np.allclose(out[:, m], lam**m * W.coords[:, m])


def test_reparametrize_order_too_low():
    with pytest.raises(OrderExceeded):
        reparametrize(random_velocity_jets(rng_from(1), 1, 4, dim=2), ReparamJet.identity(2))


def test_singular_reparam():
    with pytest.raises(SingularReparam):
        ReparamJet([0.0, 1.0])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32))
def test_projection_is_reparametrization_invariant(seed):
    rng = rng_from(seed)
    W = random_velocity_jets(rng, 20, 5, dim=3)
    rho = random_reparams(rng, 20, 5)
    diff = project(reparametrize(W, rho)).derivs - project(W).derivs
    assert np.max(np.abs(diff) / (1 + np.abs(project(W).derivs))) <= 1e-11


def test_reparametrization_is_a_right_action():
    rng = rng_from(9)
    W = random_velocity_jets(rng, 4, 4, dim=2)
    a, b = random_reparams(rng, 4, 4), random_reparams(rng, 4, 4)
    # jet of a o b from the chain rule, via the same series machinery
    ab = reparametrize(VelocityJet(np.stack([np.zeros((4, 1)), *[a.derivs[:, k:k + 1] for k in range(4)]], 1)), b)
    composite = ReparamJet(ab.coords[:, 1:, 0])
    lhs = reparametrize(reparametrize(W, a), b).coords
    rhs = reparametrize(W, composite).coords
    assert np.allclose(lhs, rhs, atol=1e-11)


# --- prolong_graph_curve ----------------------------------------------------
def test_prolong_constant_curve():
    j = prolong_graph_curve([TaylorScalar([2.0, 0, 0, 0])], 3)
    assert np.allclose(j.derivs, 0.0) and np.allclose(j.x, [2.0])


def test_prolong_polynomial_curve():
    j = prolong_graph_curve([TaylorScalar([0.0, 1.0, 0.0]), TaylorScalar([0.0, 0.0, 1.0])], 2)
    assert np.allclose(j.derivs, [[1, 0], [0, 2]])


def test_prolong_order_exceeded():
    with pytest.raises(OrderExceeded):
        prolong_graph_curve([TaylorScalar([0.0, 1.0])], 3)


# --- homogenization ---------------------------------------------------------
def test_homogenize_constant_lagrangian():
    Lh = homogenize_lagrangian(ScalarField(1, 1, lambda pt: 1.0))
    assert np.isclose(Lh(vjet([[0, 0], [2.5, 6]]).as_jet()), 2.5)


def test_homogenize_linear_lagrangian():
    Lh = homogenize_lagrangian(ScalarField(1, 1, lambda pt: pt.v[0]))
    assert np.isclose(Lh(vjet([[0, 0], [2, 6]]).as_jet()), 6.0)


def test_equivariance_controls():
    rng = rng_from(2)
    W = random_velocity_jets(rng, 10, 3, dim=1)
    rho = random_reparams(rng, 10, 3)
    u0 = ScalarField(1, 2, lambda pt: pt.v[0], time_dependent=False)
    assert np.allclose(equivariance_residual(u0, W, ReparamJet.identity(3)), 0.0)
    assert np.allclose(equivariance_residual(u0, W, rho), 0.0, atol=1e-14)
    sq = ScalarField(1, 2, lambda pt: pt.v[0] * pt.v[0], time_dependent=False)
    assert np.all(np.abs(equivariance_residual(sq, W, ReparamJet.scaling(2.0, 3))) > 1e-3)


@pytest.mark.parametrize("m", e3.signature_configs(), ids=lambda m: m.label())
def test_homogenized_lagrangian_is_equivariant(m):
    rng = rng_from(8)
    W = random_velocity_jets(rng, 50, 2, m)
    rho = random_reparams(rng, 50, 2)
    Lh = homogenize_lagrangian(e3.lagrangian_field(1, m, e3.GeometryParams(0.7)))
    assert np.max(np.abs(equivariance_residual(Lh, W, rho))) <= 1e-10


def test_homogenize_equation_direct_formula():
    E = SourceForm(1, 1, lambda pt: [3.0 + 0.0 * pt.v[0]])
    assert np.allclose(homogenize_equation(E, vjet([[0, 0], [2, 5]])), [-15, 6])
    Z = SourceForm(1, 2, lambda pt: [0.0 * pt.v[0], 0.0 * pt.v[0]])
    assert np.allclose(homogenize_equation(Z, random_velocity_jets(rng_from(0), 3, 2, dim=2)), 0.0)


def test_contact_jet_roundtrip():
    j = ContactJet(0.5, [1.0, 2.0], [[0.1, 0.2], [0.3, 0.4]])
    back = ContactJet.from_dict(j.to_dict())
    assert back.t == j.t and np.array_equal(back.x, j.x) and np.array_equal(back.derivs, j.derivs)
    with pytest.raises(ValueError):
        ContactJet.from_dict({**j.to_dict(), "order": 5})
