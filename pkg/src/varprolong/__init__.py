"""Variational calculus on jet spaces: Taylor-series jets, Helmholtz criteria, and a
Lorentz-type third-order equation in (pseudo)Euclidean 3-space."""

from .errors import VarProlongError
from .euclid3 import GeometryParams, MetricConfig, signature_configs
from .fields import JetPoint, ScalarField, SourceForm
from .flow import Trajectory, frenet, helix_diagnostics, integrate, momentum_drift
from .jets import TaylorScalar
from .jetspace import ContactJet, ReparamJet, VelocityJet, project, reparametrize
from .varcalc import euler_poisson, helmholtz_residuals, invariance_residual

__all__ = [
    "ContactJet", "GeometryParams", "JetPoint", "MetricConfig", "ReparamJet", "ScalarField", "SourceForm",
    "TaylorScalar", "Trajectory", "VarProlongError", "VelocityJet", "euler_poisson", "frenet",
    "helix_diagnostics", "helmholtz_residuals", "integrate", "invariance_residual", "momentum_drift",
    "project", "reparametrize", "signature_configs",
]
