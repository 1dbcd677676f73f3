"""Piecewise-constant-strain kinematics: pose, Jacobian and its time derivative.

These are the dense, one-abscissa-at-a-time evaluations.  The quadrature
kernels in ``_kernels`` reuse the same recursion over all nodes at once; the
functions here are what the tests compare them against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import RobotModel
from .screw import Pose, ad_small, exp_adjoint, exp_se3, tangent_exp, tangent_exp_dot

__all__ = ["JointState", "global_config", "jacobian", "jacobian_dot", "body_twist", "tangent_exp"]


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, float)
        qd = np.asarray(self.qdot, float)
        if q.ndim != 1 or q.size % 6 or q.shape != qd.shape:
            raise ValueError("q and qdot must be 6N-vectors of equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qd)

    @property
    def n_sections(self) -> int:
        return self.q.size // 6

    def strains(self) -> np.ndarray:
        return self.q.reshape(-1, 6)

    def rates(self) -> np.ndarray:
        return self.qdot.reshape(-1, 6)


def _strains(m: RobotModel, q) -> np.ndarray:
    q = np.asarray(q, float)
    if q.shape != (m.dof,):
        raise ValueError(f"expected a {m.dof}-vector of strains, got shape {q.shape}")
    return q.reshape(-1, 6)


def global_config(m: RobotModel, q, X: float, include_base: bool = True) -> Pose:
    """Pose of the microsolid at abscissa ``X`` (inertial frame unless ``include_base`` is off)."""
    xi = _strains(m, q)
    i, s = m.section_of(X)
    g = m.base_transform if include_base else Pose.identity()
    for k in range(i):
        g = g @ exp_se3(xi[k], m.lengths[k])
    return g @ exp_se3(xi[i], s)


def jacobian(m: RobotModel, q, X: float) -> np.ndarray:
    """Body-frame Jacobian ``J(X)`` with ``eta(X) = J(X) qdot``."""
    xi = _strains(m, q)
    i, s = m.section_of(X)
    J = np.zeros((6, m.dof))
    J[:, 6 * i:6 * i + 6] = tangent_exp(xi[i], s)
    H = exp_adjoint(xi[i], -s)
    for k in range(i - 1, -1, -1):
        J[:, 6 * k:6 * k + 6] = H @ tangent_exp(xi[k], m.lengths[k])
        H = H @ exp_adjoint(xi[k], -m.lengths[k])
    return J


def _section_end_twists(m: RobotModel, xi, xid, upto: int) -> np.ndarray:
    eta = np.zeros((upto + 1, 6))
    for k in range(upto):
        eta[k + 1] = (exp_adjoint(xi[k], -m.lengths[k]) @ eta[k]
                      + tangent_exp(xi[k], m.lengths[k]) @ xid[k])
    return eta


def body_twist(m: RobotModel, q, qdot, X: float) -> np.ndarray:
    return jacobian(m, q, X) @ np.asarray(qdot, float)


def jacobian_dot(m: RobotModel, q, qdot, X: float) -> np.ndarray:
    """Time derivative of :func:`jacobian` along ``(q, qdot)``."""
    xi = _strains(m, q)
    xid = _strains(m, qdot)
    i, s = m.section_of(X)
    eta_end = _section_end_twists(m, xi, xid, i)
    A = exp_adjoint(xi[i], -s)
    Ts = tangent_exp(xi[i], s)
    eta = A @ eta_end[i] + Ts @ xid[i]
    ad_eta = ad_small(eta)
    Jd = np.zeros((6, m.dof))
    Jd[:, 6 * i:6 * i + 6] = tangent_exp_dot(xi[i], xid[i], s)
    H = A
    for k in range(i - 1, -1, -1):
        Tk = tangent_exp(xi[k], m.lengths[k])
        tilde = ad_small(eta_end[k + 1]) @ Tk + tangent_exp_dot(xi[k], xid[k], m.lengths[k])
        Jd[:, 6 * k:6 * k + 6] = -ad_eta @ (H @ Tk) + H @ tilde
        H = H @ exp_adjoint(xi[k], -m.lengths[k])
    return Jd
