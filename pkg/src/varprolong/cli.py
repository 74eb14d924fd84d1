"""Command-line front end: verification suites, projection, integration and Frenet diagnostics.

Exit codes: 0 pass, 1 check failure, 2 usage or configuration error, 3 domain error at run time.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import euclid3 as e3
from . import flow
from . import varcalc as vc
from .errors import (DomainError, DomainExit, NotOnShell, SignatureUnsupported, StepFailure, VarProlongError,
                     ZeroTimeVelocity)
from .jetspace import ContactJet, VelocityJet, homogenize_equation, project, project_closed_form_order3
from .report import ResidualReport, make_check
from .sampling import random_jets, random_points, random_velocity_jets, rng_from

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    eta: int = 1
    g11: int = 1
    g22: int = 1
    orientation: int = 1
    mu: float = 0.7
    seed: int | None = None
    samples: int = 100
    tol: float = 1e-9

    @property
    def metric(self) -> e3.MetricConfig:
        return e3.MetricConfig(self.eta, self.g11, self.g22, self.orientation)

    @property
    def params(self) -> e3.GeometryParams:
        return e3.GeometryParams(self.mu)

    def rng(self) -> np.random.Generator:
        if self.seed is None:
            raise ConfigError("--seed is required for sampling commands")
        return rng_from(self.seed)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _sign(text: str) -> int:
    if text in ("+", "+1", "1"):
        return 1
    if text in ("-", "-1"):
        return -1
    raise argparse.ArgumentTypeError(f"expected + or -, got {text!r}")


def _config(args, default_tol: float, default_samples: int = 100) -> RunConfig:
    samples = default_samples if getattr(args, "samples", None) is None else args.samples
    tol = default_tol if args.tol is None else args.tol
    if samples <= 0:
        raise ConfigError("--samples must be positive")
    if not tol > 0:
        raise ConfigError("--tol must be positive")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    return RunConfig(args.command, args.eta, args.g11, args.g22, args.orientation, args.mu, args.seed, samples, tol)


def _jet_dict(jet: ContactJet, i: int) -> dict:
    return jet[i].to_dict()


# --- subcommands --------------------------------------------------------
def cmd_helmholtz(args) -> ResidualReport:
    cfg = _config(args, 1e-9, 200)
    m, p = cfg.metric, cfg.params
    J = random_jets(cfg.rng(), cfg.samples, 6, m)
    E = e3.perturbed_form(m, p) if args.equation == "perturbed" else e3.ep_form(m, p)
    R = vc.helmholtz_residuals(E, J)
    rep = ResidualReport("helmholtz", config={**cfg.to_dict(), "equation": args.equation})
    rep.checks.append(make_check("helmholtz", R, cfg.tol, lambda i: _jet_dict(J, i)))
    return rep


def _symmetric_a(F: vc.AffineThirdOrder, m: e3.MetricConfig) -> vc.AffineThirdOrder:
    def A(t, x, v):
        a = F.A(t, x, v)
        return [[a[i][j] if i < j else a[j][i] for j in range(2)] for i in range(2)]

    return vc.AffineThirdOrder(A, F.B, F.C, F.dim, "symmetric-A")


CONSTRAINT_NAMES = ["skew3_dvA", "B_antisym", "dB_dA", "C_sym", "ddC", "dC_D1A"]


def cmd_constraints(args) -> ResidualReport:
    cfg = _config(args, 1e-10, 100)
    m, p = cfg.metric, cfg.params
    t, x, v = random_points(cfg.rng(), cfg.samples, m)
    F = e3.abc_fields(m, p)
    if args.control == "symmetric-A":
        F = _symmetric_a(F, m)
    res = vc.constraint_residuals(F, t, x, v)
    worst = lambda i: {"t": float(t[i]), "x": x[i].tolist(), "v": v[i].tolist()}
    rep = ResidualReport("constraints", config={**cfg.to_dict(), "control": args.control})
    for name, r in zip(CONSTRAINT_NAMES, res.as_list()):
        rep.checks.append(make_check(name, np.moveaxis(r, -1, 0), cfg.tol, worst))
    rep.checks.append(make_check("A_skew", np.moveaxis(res.A_skew, -1, 0), cfg.tol, worst))
    return rep


def cmd_symmetry(args) -> ResidualReport:
    cfg = _config(args, 1e-9, 100)
    m, p = cfg.metric, cfg.params
    rng = cfg.rng()
    F = e3.abc_fields(m, p)
    E = e3.ep_form(m, p)
    n = cfg.samples
    t, x, v = random_points(rng, n, m)
    dv = rng.uniform(-0.9, 0.9, (n, 2))
    Ws = np.array([e3.random_skew(rng) for _ in range(n)])
    Ps = rng.uniform(-1.0, 1.0, (n, 2))
    if args.generator == "zero":
        Ws[:] = 0.0
        Ps[:] = 0.0
    ddv = vc.solve_top(F, t, x, v, dv)
    J = ContactJet(t, x, np.stack([v, dv, ddv], axis=-2))
    rep = ResidualReport("symmetry", config={**cfg.to_dict(), "generator": args.generator})

    def worst(i):
        return {"jet": _jet_dict(J, i), "W": Ws[i].tolist(), "P": Ps[i].tolist()}

    if args.generator in ("euclidean", "zero"):
        inv = np.stack([vc.invariance_residual(F, Ws[i], Ps[i], v[i], dv[i], m).residual for i in range(n)])
        rep.checks.append(make_check("invariance", inv, cfg.tol, worst))
        gens = [vc.euclidean_generator(Ws[i], Ps[i], m.g, m.eta) for i in range(n)]
    else:
        gens = [vc.dilation(2)] * n
    onshell = np.stack([vc.onshell_symmetry_residual(E, gens[i], J[i:i + 1])[0] for i in range(n)])
    rep.checks.append(make_check("onshell", onshell, max(cfg.tol, 1e-8), worst))
    return rep


def _relative(diff, ref):
    return np.abs(diff) / (1.0 + np.abs(ref))


def cmd_lagrangians(args) -> ResidualReport:
    cfg = _config(args, 1e-7, 50)
    m, p = cfg.metric, cfg.params
    rng = cfg.rng()
    n = cfg.samples
    J = random_jets(rng, n, 4, m)
    ep = e3.ep_residual(J, m, p)
    rep = ResidualReport("lagrangians", config=cfg.to_dict())
    wj = lambda i: _jet_dict(J, i)
    for j in (1, 2):
        E = vc.euler_poisson(e3.lagrangian_field(j, m, p), J)
        rep.checks.append(make_check(f"L{j}_euler_poisson", _relative(E - ep, ep), cfg.tol, wj))
    gd = e3.lagrangian(2, J, m, p) - e3.lagrangian(1, J, m, p) - e3.gauge_difference(J, m)
    rep.checks.append(make_check("L2_minus_L1_total_derivative", gd, 1e-10, wj))

    W = random_velocity_jets(rng, n, 6, m)
    u, du, ddu = W.coords[:, 1], W.coords[:, 2], W.coords[:, 3]
    H = e3.homogeneous_residual(u, du, ddu, m, p)
    ww = lambda i: W.coords[i].tolist()
    rep.checks.append(make_check("homogenized_equation", homogenize_equation(e3.ep_form(m, p), W) - H, 1e-9, ww))
    for beta in (0, 1, 2):
        keep = e3.beta_admissible(u, beta, m)
        sub = VelocityJet(W.coords[keep])
        Eb = vc.euler_poisson(e3.homogeneous_lagrangian_field(beta, m, p), sub.as_jet())
        rep.checks.append(make_check(f"beta{beta}_euler_poisson", Eb - H[keep], cfg.tol,
                                     lambda i, k=np.flatnonzero(keep): ww(k[i]), excluded=int((~keep).sum())))
    keep = e3.beta_admissible(u, 0, m)
    sub = VelocityJet(W.coords[keep]).as_jet()
    plain = vc.euler_poisson(e3.homogeneous_lagrangian_field(0, m, p), sub)
    gauged = vc.euler_poisson(
        e3.homogeneous_lagrangian_field(0, m, p, phi=e3.default_gauge(m), a=np.array([0.3, -0.2, 0.5])), sub)
    rep.checks.append(make_check("gauge_terms", gauged - plain, 1e-8, excluded=int((~keep).sum())))
    Rh = vc.helmholtz_residuals(e3.homogeneous_form(m, p), W.as_jet())
    rep.checks.append(make_check("parametric_variational", Rh, 1e-9, ww))
    return rep


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def cmd_euler_poisson(args) -> ResidualReport:
    cfg = _config(args, 1e-7, 1)
    m, p = cfg.metric, cfg.params
    try:
        jet = ContactJet.from_dict(_read_json(args.jet))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad jet file: {exc}") from exc
    if jet.order < 4:
        raise ConfigError("the jet must have order >= 4 for a second-order Lagrangian")
    j = int(args.lagrangian[1])
    E = vc.euler_poisson(e3.lagrangian_field(j, m, p), jet)
    ep = e3.ep_residual(jet, m, p)
    rep = ResidualReport("euler-poisson", config={**cfg.to_dict(), "lagrangian": args.lagrangian},
                         extra={"euler_poisson": E.tolist(), "closed_form": ep.tolist()})
    rep.checks.append(make_check(f"{args.lagrangian}_euler_poisson", _relative(E - ep, ep)[None], cfg.tol,
                                 lambda i: jet.to_dict()))
    return rep


def cmd_project(args) -> dict:
    try:
        w = VelocityJet.from_dict(_read_json(args.input))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad velocity jet file: {exc}") from exc
    try:
        out = project(w).to_dict()
    except ZeroTimeVelocity as exc:
        raise ConfigError(str(exc)) from exc
    if args.check_closed_form:
        closed = project_closed_form_order3(w)
        out = {"projected": out, "closed_form": closed.to_dict(),
               "difference": float(np.max(np.abs(closed.derivs[:3] - project(w).derivs[:3])))}
    return out


def _init_point(args):
    if args.init:
        d = _read_json(args.init)
        try:
            return [np.asarray(d[k], dtype=float).reshape(2) for k in ("x", "v", "dv")]
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"init file needs 2-vectors x, v, dv: {exc}") from exc
    return [np.asarray(a, dtype=float) for a in (args.x0, args.v0, args.dv0)]


def _frenet_checks(rep: ResidualReport, fd: flow.FrenetData, p: e3.GeometryParams, tol: float):
    diag = flow.helix_diagnostics(fd, p, tol)
    rep.extra.update({k: v for k, v in diag.items() if k != "pass"})
    k1 = np.abs(fd.kappa1 - np.mean(fd.kappa1))
    rep.checks.append(make_check("kappa1_constancy", k1, tol * (1.0 + diag["kappa1_mean"])))
    rep.checks.append(make_check("kappa2_minus_abs_mu", fd.kappa2 - abs(p.mu), tol))


def cmd_integrate(args) -> ResidualReport:
    cfg = _config(args, 1e-10, args.grid)
    m, p = cfg.metric, cfg.params
    x0, v0, dv0 = _init_point(args)
    if args.frenet and not m.euclidean:
        raise SignatureUnsupported("Frenet diagnostics need the Euclidean signature; pass --no-frenet")
    tr = flow.integrate(x0, v0, dv0, (0.0, args.t_end), cfg.tol, m, p, samples=cfg.samples)
    if args.out:
        Path(args.out).write_text(tr.to_csv())
    rep = ResidualReport("integrate", config={**cfg.to_dict(), "t_end": args.t_end},
                         extra={"steps": tr.stats.accepted, "rejected": tr.stats.rejected})
    res = e3.ep_residual(tr.jets(interpolated=True), m, p)
    rep.checks.append(make_check("sample_residual", res, 10 * cfg.tol))
    P = flow.momentum(tr)
    rep.checks.append(make_check("momentum_drift", np.linalg.norm(P - P[0], axis=-1), args.drift_tol))
    if args.frenet:
        fd = flow.frenet(tr)
        if args.frenet_out:
            Path(args.frenet_out).write_text(fd.to_csv())
        _frenet_checks(rep, fd, p, 1e-5)
    return rep


def cmd_frenet(args) -> ResidualReport:
    cfg = _config(args, 1e-5, 1)
    m, p = cfg.metric, cfg.params
    if not m.euclidean:
        raise SignatureUnsupported("Frenet diagnostics need the Euclidean signature")
    try:
        tr = flow.Trajectory.from_csv(Path(args.input).read_text(), m, p, ddv="spline")
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read trajectory: {exc}") from exc
    fd = flow.frenet(tr)
    if args.out:
        Path(args.out).write_text(fd.to_csv())
    rep = ResidualReport("frenet", config={**cfg.to_dict(), "input": args.input})
    _frenet_checks(rep, fd, p, cfg.tol)
    return rep


# --- parser -------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mu", type=float, default=0.7)
    common.add_argument("--eta", type=_sign, default=1, metavar="{+,-}")
    common.add_argument("--g11", type=_sign, default=1, metavar="{+,-}")
    common.add_argument("--g22", type=_sign, default=1, metavar="{+,-}")
    common.add_argument("--orientation", type=_sign, default=1, metavar="{+,-}")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=["json", "csv"], default="json")

    parser = argparse.ArgumentParser(prog="varprolong", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("helmholtz", parents=[common], help="variationality residuals of the invariant equation")
    s.add_argument("--equation", choices=["invariant", "perturbed"], default="invariant")
    s.set_defaults(func=cmd_helmholtz)

    s = sub.add_parser("constraints", parents=[common], help="constraint system residuals of (A, B, C)")
    s.add_argument("--control", choices=["none", "symmetric-A"], default="none")
    s.set_defaults(func=cmd_constraints)

    s = sub.add_parser("symmetry", parents=[common], help="invariance under (pseudo)Euclidean generators")
    s.add_argument("--generator", choices=["euclidean", "dilation", "zero"], default="euclidean")
    s.set_defaults(func=cmd_symmetry)

    s = sub.add_parser("lagrangians", parents=[common], help="Lagrangians, gauge terms, homogeneous forms")
    s.set_defaults(func=cmd_lagrangians)

    s = sub.add_parser("euler-poisson", parents=[common], help="Euler-Poisson expressions at a jet file")
    s.add_argument("--jet", required=True)
    s.add_argument("--lagrangian", choices=["L1", "L2"], default="L1")
    s.set_defaults(func=cmd_euler_poisson)

    s = sub.add_parser("project", parents=[common], help="project a velocity jet to a contact jet")
    s.add_argument("--input", required=True)
    s.add_argument("--check-closed-form", action="store_true")
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("integrate", parents=[common], help="integrate and run helix/momentum diagnostics")
    s.add_argument("--init", default=None, help='JSON file {"x": [..], "v": [..], "dv": [..]}')
    s.add_argument("--x0", type=float, nargs=2, default=[0.0, 0.0])
    s.add_argument("--v0", type=float, nargs=2, default=[0.1, 0.0])
    s.add_argument("--dv0", type=float, nargs=2, default=[0.0, 0.2])
    s.add_argument("--t-end", type=float, default=20.0)
    s.add_argument("--grid", type=int, default=2001, help="number of uniform output samples")
    s.add_argument("--drift-tol", type=float, default=1e-8)
    s.add_argument("--frenet", dest="frenet", action="store_true", default=True)
    s.add_argument("--no-frenet", dest="frenet", action="store_false")
    s.add_argument("--frenet-out", default=None)
    s.set_defaults(func=cmd_integrate)

    s = sub.add_parser("frenet", parents=[common], help="Frenet curvatures of a trajectory CSV")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_frenet)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        result = args.func(args)
    except (DomainError, DomainExit, StepFailure, NotOnShell) as exc:
        print(f"domain error: {exc}", file=stderr)
        return EXIT_DOMAIN
    except (ConfigError, SignatureUnsupported, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except VarProlongError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_DOMAIN

    if isinstance(result, ResidualReport):
        text = result.render(args.format)
        code = EXIT_PASS if result.passed else EXIT_FAIL
    else:
        text = json.dumps(result, sort_keys=True, indent=2) + "\n"
        code = EXIT_PASS
    if args.out and args.command not in ("integrate", "frenet"):
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
