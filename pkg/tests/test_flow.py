import numpy as np
import pytest
from scipy.integrate import solve_ivp

from varprolong import euclid3 as e3
from varprolong import flow
from varprolong.errors import DegenerateFrame, DomainExit, SignatureUnsupported, StepFailure, TooFewSamples
from varprolong.jetspace import ContactJet, VelocityJet, project

EUCLID = e3.MetricConfig()
INIT = ([0.0, 0.0], [0.1, 0.0], [0.0, 0.2])


def run(mu, tol=1e-10, t_end=20.0, m=EUCLID, init=INIT, **kw):
    return flow.integrate(*init, (0.0, t_end), tol, m, e3.GeometryParams(mu), **kw)


def rhs(mu, m=EUCLID):
    p = e3.GeometryParams(mu)
    return lambda t, y: np.concatenate([y[2:4], y[4:6], flow.acceleration(y[2:4], y[4:6], m, p)])


# --- the integrator against scipy ----------------------------------------------
def test_dopri_oscillator_exact():
    sol, stats = flow.dopri54(lambda t, y: np.array([y[1], -y[0]]), 0.0, np.array([1.0, 0.0]), 10.0, tol=1e-11)
    t = np.linspace(0, 10, 101)
    assert np.max(np.abs(sol(t)[:, 0] - np.cos(t))) <= 1e-8
    assert np.max(np.abs(sol.derivative(t)[:, 0] + np.sin(t))) <= 1e-8
    assert stats.accepted > 0


def test_dopri_matches_scipy_on_invariant_equation():
    y0 = np.concatenate([np.array(x, float) for x in INIT])
    ref = solve_ivp(rhs(0.7), (0, 10), y0, method="DOP853", rtol=1e-13, atol=1e-13, dense_output=True)
    sol, _ = flow.dopri54(rhs(0.7), 0.0, y0, 10.0, tol=1e-11)
    t = np.linspace(0, 10, 201)
    assert np.max(np.abs(sol(t) - ref.sol(t).T)) <= 1e-8


def test_dense_output_matches_scipy_rk45():
    # same tableau and continuous extension as scipy's RK45; a capped step with a huge
    # tolerance makes scipy take the same uniform steps
    f = lambda t, y: np.array([y[1], -np.sin(y[0])])
    sol, _ = flow.dopri54(f, 0.0, np.array([1.0, 0.0]), 4.0, fixed_step=0.05)
    ref = solve_ivp(f, (0, 4), [1.0, 0.0], method="RK45", first_step=0.05, max_step=0.05, rtol=1e3, atol=1e3,
                    dense_output=True)
    t = np.linspace(0, 4, 333)
    assert np.max(np.abs(sol(t) - ref.sol(t).T)) <= 1e-12


def test_step_failure():
    with pytest.raises(StepFailure):
        flow.dopri54(lambda t, y: y**2, 0.0, np.array([1.0]), 2.0, tol=1e-8)


# --- integrate ------------------------------------------------------------
def test_rest_is_equilibrium():
    tr = flow.integrate([0.3, -0.4], [0, 0], [0, 0], (0, 5), 1e-10, EUCLID, e3.GeometryParams(0.0), samples=50)
    assert np.all(tr.v == 0.0) and np.allclose(tr.x, [0.3, -0.4])


@pytest.mark.parametrize("mu", [0.3, 0.7, 1.3])
def test_sample_residual_within_ten_tol(mu):
    tol = 1e-10
    tr = run(mu, tol)
    assert np.all(np.diff(tr.t) > 0)
    res = e3.ep_residual(tr.jets(interpolated=True), EUCLID, e3.GeometryParams(mu))
    assert np.max(np.abs(res)) <= 10 * tol


def test_sample_acceleration_solves_affine_system():
    tr = run(0.7, t_end=5.0)
    res = e3.ep_residual(tr.jets(), EUCLID, e3.GeometryParams(0.7))
    assert np.max(np.abs(res)) <= 1e-12


def test_fixed_step_convergence():
    errs = []
    for h in (0.2, 0.1, 0.05):
        tr = run(0.7, t_end=10.0, fixed_step=h, samples=401)
        errs.append(np.max(np.abs(e3.ep_residual(tr.jets(interpolated=True), EUCLID, e3.GeometryParams(0.7)))))
    assert errs[0] / errs[1] >= 4 and errs[1] / errs[2] >= 4


def test_invalid_tolerance():
    with pytest.raises(ValueError):
        run(0.7, tol=0.0)


def test_pseudo_domain_exit():
    m = e3.MetricConfig(1, -1, 1)
    # solutions approach the null cone only asymptotically; a margin turns the approach into an exit
    with pytest.raises(DomainExit):
        flow.integrate([0, 0], [0.5, 0.0], [1.5, 0.0], (0, 20), 1e-8, m, e3.GeometryParams(0.3), domain_margin=0.5)
    with pytest.raises(DomainExit):
        flow.integrate([0, 0], [1.2, 0.0], [0, 0], (0, 1), 1e-8, m, e3.GeometryParams(0.3))


def test_zero_mu_reference_init_leaves_graph_form():
    # the mu = 0 solution through this point is a circle whose plane contains the t direction
    with pytest.raises(StepFailure):
        run(0.0)


def test_csv_roundtrip():
    tr = run(0.7, t_end=2.0, samples=21)
    back = flow.Trajectory.from_csv(tr.to_csv(), EUCLID, tr.params)
    assert np.array_equal(back.t, tr.t) and np.array_equal(back.x, tr.x) and np.array_equal(back.dv, tr.dv)
    assert np.allclose(back.ddv, tr.ddv, atol=1e-15)
    assert tr.to_csv().splitlines()[0] == "t,x1,x2,v1,v2,a1,a2"


def test_deterministic():
    assert run(0.7, t_end=3.0).to_csv() == run(0.7, t_end=3.0).to_csv()


# --- Frenet and helices --------------------------------------------------
def helix_trajectory(r, w, mu, n=400):
    t = np.linspace(0, 6, n)
    x, v, dv, ddv = flow.helix(r, w, t)
    return flow.Trajectory(t, x, v, dv, ddv, e3.GeometryParams(mu), EUCLID)


def test_frenet_closed_form_helix():
    r, w = 0.8, 1.5
    fd = flow.frenet(helix_trajectory(r, w, 0.0))
    assert np.allclose(fd.kappa1, r * w**2 / (1 + r**2 * w**2), atol=1e-14)
    assert np.allclose(fd.kappa2, w / (1 + r**2 * w**2), atol=1e-14)
    assert np.all(np.diff(fd.s) > 0)
    assert np.isclose(fd.s[-1], 6 * np.sqrt(1 + r**2 * w**2), rtol=1e-10)


def test_straight_line_is_degenerate():
    t = np.linspace(0, 1, 20)
    tr = flow.Trajectory(t, np.zeros((20, 2)), np.full((20, 2), 0.3), np.zeros((20, 2)), np.zeros((20, 2)),
                         e3.GeometryParams(0.0), EUCLID)
    with pytest.raises(DegenerateFrame):
        flow.frenet(tr)


def test_frenet_requires_euclidean():
    tr = helix_trajectory(0.5, 1.0, 0.0)
    with pytest.raises(SignatureUnsupported):
        flow.frenet(tr, e3.MetricConfig(1, -1, 1))


def test_exact_helix_diagnostics():
    r, w = 0.8, 1.5
    mu = -w / (1 + r**2 * w**2)  # torsion = -mu * orientation
    tr = helix_trajectory(r, w, mu)
    assert np.max(np.abs(e3.ep_residual(tr.jets(), EUCLID, tr.params))) <= 1e-14
    d = flow.helix_diagnostics(flow.frenet(tr), tr.params)
    assert d["pass"] and d["kappa2_max_dev"] <= 1e-14
    assert flow.momentum_drift(tr) <= 1e-12


def test_mismatched_mu_drifts():
    r, w = 0.8, 1.5
    tr = helix_trajectory(r, w, -w / (1 + r**2 * w**2))
    assert flow.momentum_drift(tr, p=e3.GeometryParams(0.2)) > 0.1


def test_too_few_samples():
    with pytest.raises(TooFewSamples):
        flow.helix_diagnostics(flow.frenet(helix_trajectory(0.5, 1.0, 0.0, n=5)), e3.GeometryParams(0.0))


@pytest.mark.parametrize("mu", [0.3, 0.7, 1.3, 2.0])
def test_solutions_are_helices(mu):
    tr = run(mu)
    fd = flow.frenet(tr)
    d = flow.helix_diagnostics(fd, tr.params)
    assert d["pass"], d
    assert np.allclose(fd.torsion, -mu, atol=1e-5)
    assert flow.momentum_drift(tr) <= 1e-8


def test_zero_mu_solutions_are_planar():
    tr = run(0.0, init=([0.0, 0.0], [0.1, 0.0], [0.0, 0.02]))
    fd = flow.frenet(tr)
    assert np.max(fd.kappa2) <= 1e-6
    assert flow.helix_diagnostics(fd, tr.params)["pass"]


def test_zero_mu_reference_init_before_exit():
    fd = flow.frenet(run(0.0, t_end=4.0))
    assert np.max(fd.kappa2) <= 1e-6


def test_noise_breaks_helix():
    tr = run(1.3, t_end=10.0, samples=1001)
    rng = np.random.default_rng(0)
    x = tr.x + 1e-2 * rng.standard_normal(tr.x.shape)
    # recover derivatives from the noisy samples by finite differences
    dt = tr.t[1] - tr.t[0]
    v = np.gradient(x, dt, axis=0)
    dv = np.gradient(v, dt, axis=0)
    ddv = np.gradient(dv, dt, axis=0)
    noisy = flow.Trajectory(tr.t, x, v, dv, ddv, tr.params, EUCLID)
    assert not flow.helix_diagnostics(flow.frenet(noisy), tr.params)["pass"]


# --- symmetry of the flow -------------------------------------------------
def transform_jets(M, tr, order=3):
    n = len(tr.t)
    g = np.column_stack([tr.t, tr.x])
    rows = [g, np.column_stack([np.ones(n), tr.v]), np.column_stack([np.zeros(n), tr.dv]),
            np.column_stack([np.zeros(n), tr.ddv])][:order + 1]
    return project(VelocityJet(np.stack([r @ M.T for r in rows], 1)))


@pytest.mark.parametrize("m", e3.signature_configs(), ids=lambda m: m.label())
def test_finite_motions_map_solutions_to_solutions(m):
    rng = np.random.default_rng(5)
    p = e3.GeometryParams(0.7)
    init = ([0.0, 0.0], [0.1, 0.05], [0.05, 0.1])
    tr = flow.integrate(*init, (0.0, 2.0), 1e-10, m, p, samples=101)
    tr.ddv = tr.ddv_interp
    W = e3.random_skew(rng, 0.3)
    for M in (e3.finite_motion(W, np.zeros(2), m), e3.finite_motion(np.zeros((2, 2)), [0.2, -0.1], m)):
        J = transform_jets(M, tr)
        assert np.max(np.abs(e3.ep_residual(J, m, p))) <= 1e-6


def test_rigid_motion_equivariance():
    rng = np.random.default_rng(6)
    p = e3.GeometryParams(0.7)
    tr = run(0.7, t_end=10.0, samples=501)
    M = e3.finite_motion(e3.random_skew(rng, 0.3), rng.uniform(-0.2, 0.2, 2), EUCLID)
    J = transform_jets(M, tr, order=2)
    t0, t1 = float(J.t[0]), float(J.t[-1])
    tr2 = flow.integrate(J.x[0], J.derivs[0, 0], J.derivs[0, 1], (t0, t1), 1e-10, EUCLID, p, samples=11)
    Y = tr2.dense(J.t)
    assert np.max(np.abs(Y[:, 0:2] - J.x)) <= 1e-6
    assert np.max(np.abs(Y[:, 2:4] - J.derivs[:, 0])) <= 1e-6
