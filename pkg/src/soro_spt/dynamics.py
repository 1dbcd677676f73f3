"""Generalized dynamics ``M qdd + (C1 + C2 + D) qd = u + tau + F + N Ad^-1 G``.

All integrals run over the midpoint quadrature grid of the model and may be
restricted to a subset of abscissas through an :class:`AbscissaMask`.  The
elastic and viscous part of ``tau`` is assembled in weak form, so it does not
depend on the mask.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._kernels import assemble_kernel, bias_kernel, point_jacobian
from .kinematics import JointState, global_config, jacobian
from .model import RobotModel
from .screw import adjoint_of

COND_LIMIT = 1e12


class AssemblyError(FloatingPointError):
    pass


class MassMatrixError(np.linalg.LinAlgError):
    def __init__(self, smallest_eigenvalue: float):
        self.smallest_eigenvalue = smallest_eigenvalue
        super().__init__(f"mass matrix not SPD (smallest eigenvalue ~ {smallest_eigenvalue:.3e})")


@dataclass(frozen=True)
class AbscissaMask:
    """Union of abscissa intervals ``[lo, hi)``; a node belongs if its midpoint does."""

    intervals: tuple

    def __post_init__(self):
        iv = tuple(sorted((float(lo), float(hi)) for lo, hi in self.intervals))
        for lo, hi in iv:
            if not lo <= hi:
                raise ValueError(f"bad interval [{lo}, {hi}]")
        for (_, h0), (l1, _) in zip(iv, iv[1:]):
            if l1 < h0:
                raise ValueError("mask intervals overlap")
        object.__setattr__(self, "intervals", iv)

    @classmethod
    def full(cls, m: RobotModel) -> "AbscissaMask":
        return cls(((0.0, m.total_length),))

    @classmethod
    def empty(cls) -> "AbscissaMask":
        return cls(())

    def select(self, m: RobotModel) -> np.ndarray:
        x = m.grid.abscissa
        total = m.total_length
        keep = np.zeros(x.shape, bool)
        for lo, hi in self.intervals:
            if lo < 0 or hi > total * (1 + 1e-12):
                raise ValueError(f"mask interval [{lo}, {hi}] leaves [0, {total}]")
            keep |= (x >= lo) & ((x < hi) | (hi >= total))
        return keep

    def weights(self, m: RobotModel) -> np.ndarray:
        cache = m.__dict__.setdefault("_mask_weights", {})
        w = cache.get(self.intervals)
        if w is None:
            w = cache[self.intervals] = np.where(self.select(m), m.grid.weight, 0.0)
            w.setflags(write=False)
        return w


@dataclass(frozen=True)
class DynamicsTerms:
    mass: np.ndarray
    coriolis1: np.ndarray
    coriolis2: np.ndarray
    drag: np.ndarray
    buoyancy: np.ndarray  # 6N x 6, multiplies the base-frame gravity screw
    tip_force: np.ndarray
    internal: np.ndarray
    gravity: np.ndarray  # Ad_{g_r}^-1 G

    @property
    def coriolis(self) -> np.ndarray:
        return self.coriolis1 + self.coriolis2

    def gravity_force(self) -> np.ndarray:
        return self.buoyancy @ self.gravity

    def external(self) -> np.ndarray:
        """``tau + F + N Ad^-1 G``: everything on the right but the input."""
        return self.internal + self.tip_force + self.gravity_force()


# ------------------------------------------------------------ per-section data

@dataclass(frozen=True)
class _SectionArrays:
    inertia: np.ndarray      # M_a = M + M_f, (N, 6, 6)
    buoyant: np.ndarray      # (1 - rho_f / rho) M, (N, 6, 6)
    drag: np.ndarray         # diagonal of the drag operator per unit speed, (N, 6)
    stiffness: np.ndarray    # (N, 6, 6)
    viscosity: np.ndarray    # (N, 6, 6)
    rest: np.ndarray         # (N, 6)
    gravity: np.ndarray      # Ad_{g_r}^-1 G, (6,)


def _arrays(m: RobotModel) -> _SectionArrays:
    cached = m.__dict__.get("_section_arrays")
    if cached is not None:
        return cached
    props = m.properties
    added = np.diag(np.asarray(m.fluid.added_mass, float))
    rho_f = m.fluid.fluid_density
    coef = 0.5 * m.fluid.water_density * m.fluid.drag_coefficient
    out = _SectionArrays(
        inertia=np.ascontiguousarray([p.screw_inertia + added for p in props]),
        buoyant=np.ascontiguousarray([(1.0 - rho_f / s.density) * p.screw_inertia
                                      for s, p in zip(m.sections, props)]),
        drag=np.ascontiguousarray([coef * np.array([0.0, 0.0, 0.0, p.area, 2 * s.radius, 2 * s.radius])
                                   for s, p in zip(m.sections, props)]),
        stiffness=np.ascontiguousarray([p.stiffness for p in props]),
        viscosity=np.ascontiguousarray([p.viscosity for p in props]),
        rest=m.rest_q.reshape(-1, 6).copy(),
        gravity=adjoint_of(m.base_transform, inverse=True) @ np.asarray(m.gravity, float),
    )
    object.__setattr__(m, "_section_arrays", out)  # frozen dataclass: cache by hand
    return out


def gravity_screw(m: RobotModel) -> np.ndarray:
    """The gravity screw expressed in the base frame, ``Ad_{g_r}^-1 G``."""
    return _arrays(m).gravity.copy()


def drag_matrix_at(m: RobotModel, eta, X: float) -> np.ndarray:
    """Drag operator ``D(X) |nu|`` of the microsolid at ``X`` moving with twist ``eta``."""
    i, _ = m.section_of(X)
    eta = np.asarray(eta, float)
    return np.diag(_arrays(m).drag[i] * np.linalg.norm(eta[3:]))


def internal_wrench(m: RobotModel, xi, xidot, section: int) -> np.ndarray:
    """Elastic plus viscous section wrench ``Pi (xi - xi*) + Upsilon xidot``."""
    a = _arrays(m)
    rest = np.asarray(m.sections[section].rest_strain, float)
    return a.stiffness[section] @ (np.asarray(xi, float) - rest) + a.viscosity[section] @ np.asarray(xidot, float)


def internal_force(m: RobotModel, q, qdot) -> np.ndarray:
    """Generalized internal force: minus the strain-energy gradient minus viscous loss."""
    a = _arrays(m)
    dxi = np.asarray(q, float).reshape(-1, 6) - a.rest
    xid = np.asarray(qdot, float).reshape(-1, 6)
    w = np.einsum("kij,kj->ki", a.stiffness, dxi) + np.einsum("kij,kj->ki", a.viscosity, xid)
    return -(m.lengths[:, None] * w).ravel()


def elastic_energy(m: RobotModel, q) -> float:
    a = _arrays(m)
    dq = (np.asarray(q, float) - m.rest_q).reshape(-1, 6)
    return float(sum(0.5 * L * d @ K @ d for L, d, K in zip(m.lengths, dq, a.stiffness)))


def tip_wrench_force(m: RobotModel, q) -> np.ndarray:
    """``J(Xbar)^T`` applied to the tip load, given in inertial axes and rotated into the body."""
    load = np.asarray(m.tip_load, float)
    if not np.any(load):
        return np.zeros(m.dof)
    xi = np.ascontiguousarray(q, dtype=float).reshape(-1, 6)
    i, s = m.section_of(m.actuation_abscissa)
    J, adg = point_jacobian(xi, m.lengths, i, s)
    rt = adg[:3, :3] @ m.base_transform.rotation.T  # R(Xbar)^T
    return J.T @ np.concatenate([rt @ load[:3], rt @ load[3:]])


def buoyant_weight(m: RobotModel) -> float:
    """Net weight of the immersed arm, by direct summation over microsolids."""
    a = _arrays(m)
    g = np.linalg.norm(np.asarray(m.gravity, float)[3:])
    sec = m.grid.section
    return float(np.sum(m.grid.weight * a.buoyant[sec, 3, 3]) * g)


def gravity_resultant(m: RobotModel, q) -> np.ndarray:
    """Net inertial-frame force of the buoyancy-corrected weight at configuration ``q``.

    Independent of the Jacobian machinery: each slice's body-frame weight is
    rotated back with its own pose and summed.
    """
    a = _arrays(m)
    G = np.asarray(m.gravity, float)
    total = np.zeros(3)
    for x, w, i in zip(m.grid.abscissa, m.grid.weight, m.grid.section):
        r = global_config(m, q, x).rotation
        body = a.buoyant[i][3:, 3:] @ (r.T @ G[3:])
        total += w * (r @ body)
    return total


# ---------------------------------------------------------------- assembly

def _check_state(m: RobotModel, q, qdot):
    q = np.ascontiguousarray(q, dtype=float)
    qdot = np.ascontiguousarray(qdot, dtype=float)
    if q.shape != (m.dof,) or qdot.shape != (m.dof,):
        raise ValueError(f"state must be two {m.dof}-vectors")
    if not (np.isfinite(q).all() and np.isfinite(qdot).all()):
        raise AssemblyError("non-finite joint state")
    return q.reshape(-1, 6), qdot.reshape(-1, 6)


def _locate_bad_node(m: RobotModel, q) -> str:
    for p, x in enumerate(m.grid.abscissa):
        if not np.all(np.isfinite(jacobian(m, q, x))):
            return f"node {p} (X = {x:.6g})"
    return "an unknown node"


def assemble_many(m: RobotModel, state: JointState, masks) -> list[DynamicsTerms]:
    """Assemble the masked terms for several masks in one sweep over the grid."""
    xi, xid = _check_state(m, state.q, state.qdot)
    a = _arrays(m)
    grid = m.grid
    wts = np.ascontiguousarray([mk.weights(m) for mk in masks], dtype=float).reshape(len(masks), -1)
    M, C1, C2, D, N = assemble_kernel(xi, xid, m.lengths, grid.section, grid.local, wts,
                                      a.inertia, a.buoyant, a.drag)
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(C2)) and np.all(np.isfinite(N))):
        raise AssemblyError(f"non-finite quadrature contribution at {_locate_bad_node(m, state.q)}")
    tau = internal_force(m, state.q, state.qdot)
    F = tip_wrench_force(m, state.q)
    grav = gravity_screw(m)
    return [DynamicsTerms(M[k], C1[k], C2[k], D[k], N[k], F, tau, grav) for k in range(len(masks))]


def assemble_terms(m: RobotModel, state: JointState, mask: AbscissaMask | None = None) -> DynamicsTerms:
    return assemble_many(m, state, [mask or AbscissaMask.full(m)])[0]


# ------------------------------------------------------------------ solves

def solve_spd(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Cholesky solve, falling back to a pivoted LU when badly conditioned."""
    try:
        c, low = sla.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise MassMatrixError(float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])) from None
    d = np.abs(np.diag(c))
    if (d.max() / d.min()) ** 2 > COND_LIMIT:
        warnings.warn(f"mass matrix condition estimate {(d.max() / d.min()) ** 2:.2e} exceeds "
                      f"{COND_LIMIT:.0e}; using pivoted LU", RuntimeWarning, stacklevel=3)
        return sla.lu_solve(sla.lu_factor(M, check_finite=False), rhs, check_finite=False)
    return sla.cho_solve((c, low), rhs, check_finite=False)


def forward_dynamics(terms: DynamicsTerms, qdot, u) -> np.ndarray:
    rhs = np.asarray(u, float) + terms.external() - (terms.coriolis + terms.drag) @ np.asarray(qdot, float)
    return solve_spd(terms.mass, rhs)


def mass_and_bias(m: RobotModel, q, qdot) -> tuple[np.ndarray, np.ndarray]:
    """Full-arm ``M`` and ``(C1 + C2 + D) qdot - N Ad^-1 G`` by a Newton-Euler sweep."""
    xi, xid = _check_state(m, q, qdot)
    a = _arrays(m)
    grid = m.grid
    w = grid.weight
    return bias_kernel(xi, xid, m.lengths, grid.section, grid.local, w, w, w,
                       a.inertia, a.buoyant, a.drag, gravity_screw(m), True)


def masked_bias(m: RobotModel, q, qdot, w_inertia, w_drag, w_gravity) -> np.ndarray:
    """``(C1 + C2) qdot + D qdot - N Ad^-1 G`` with a separate weight vector per part."""
    xi, xid = _check_state(m, q, qdot)
    a = _arrays(m)
    grid = m.grid
    return bias_kernel(xi, xid, m.lengths, grid.section, grid.local,
                       np.ascontiguousarray(w_inertia, dtype=float), np.ascontiguousarray(w_drag, dtype=float),
                       np.ascontiguousarray(w_gravity, dtype=float),
                       a.inertia, a.buoyant, a.drag, gravity_screw(m), False)[1]


def plant_acceleration(m: RobotModel, q, qdot, u) -> np.ndarray:
    """``qdd`` of the full arm; the fast path used by the integrators."""
    M, bias = mass_and_bias(m, q, qdot)
    rhs = np.asarray(u, float) + internal_force(m, q, qdot) + tip_wrench_force(m, q) - bias
    if not np.all(np.isfinite(rhs)):
        raise AssemblyError("non-finite generalized forces")
    return solve_spd(M, rhs)


def kinetic_energy(m: RobotModel, q, qdot) -> float:
    M, _ = mass_and_bias(m, q, np.zeros_like(np.asarray(qdot, float)))
    qdot = np.asarray(qdot, float)
    return 0.5 * float(qdot @ M @ qdot)
