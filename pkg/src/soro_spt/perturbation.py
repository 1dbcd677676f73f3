"""Two-time-scale split of the arm into a core (tip side) and a perturbed part.

The perturbed abscissas carry the light inertia that sets the fast scale.
Setting their inertia to zero turns the perturbed momentum balance into an
algebraic equation for the quasi-steady velocity ``z2bar``; what remains,
``z2tilde = z2 - z2bar``, evolves on the stretched time ``T = t / eps`` with the
core inertia.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import root

from .dynamics import (AbscissaMask, DynamicsTerms, _arrays, assemble_many, internal_force, masked_bias,
                       solve_spd, tip_wrench_force)
from .kinematics import JointState
from .model import RobotModel

PICARD_TOL = 1e-8
PICARD_MAX_ITER = 100
PICARD_RELAX = 0.5


class QuasiSteadyError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"quasi-steady iteration did not converge after {iterations} "
                         f"iterations (last step {residual:.3e})")


@dataclass(frozen=True)
class MassSplit:
    core_mask: AbscissaMask
    pert_mask: AbscissaMask
    fraction: float
    epsilon: float

    def masks(self) -> tuple[AbscissaMask, AbscissaMask]:
        return self.core_mask, self.pert_mask


@dataclass
class TwoTimeScaleState:
    z1: np.ndarray
    z2: np.ndarray
    z2_bar: np.ndarray
    z2_tilde: np.ndarray = field(init=False)
    tau_scale: float = 1.0

    def __post_init__(self):
        self.z2_tilde = self.z2 - self.z2_bar

    def refresh(self, z1, z2, z2_bar=None):
        """New sample of ``(z1, z2)``; ``z2bar`` kept unless given."""
        self.z1 = z1
        self.z2 = z2
        if z2_bar is not None:
            self.z2_bar = z2_bar
        self.z2_tilde = self.z2 - self.z2_bar


@dataclass(frozen=True)
class QuasiSteady:
    z2_bar: np.ndarray
    residual: float      # || A(z2bar) z2bar - rhs ||
    rhs_norm: float
    iterations: int
    regularization: float
    method: str = "picard"


def epsilon_of(terms_core: DynamicsTerms, terms_pert: DynamicsTerms) -> float:
    """``||M^pert||_F / ||M^core||_F``."""
    core = np.linalg.norm(terms_core.mass)
    if core == 0.0:
        raise ZeroDivisionError("core mass matrix has zero norm")
    return float(np.linalg.norm(terms_pert.mass) / core)


def split_by_fraction(m: RobotModel, fraction: float) -> MassSplit:
    """Core = the tipward ``fraction`` of the length, perturbed = the rest.

    Nodes are assigned by midpoint, so the two masks partition the grid
    whatever the boundary; epsilon is evaluated at the rest strain.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"split fraction must lie in (0, 1), got {fraction}")
    total = m.total_length
    cut = total * (1.0 - fraction)
    core = AbscissaMask(((cut, total),))
    pert = AbscissaMask(((0.0, cut),))
    if not core.select(m).any() or not pert.select(m).any():
        raise ValueError(f"split fraction {fraction} leaves one side without quadrature nodes")
    rest = JointState(m.rest_q, np.zeros(m.dof))
    tc, tp = assemble_many(m, rest, [core, pert])
    eps = epsilon_of(tc, tp)
    if not 0.0 < eps < 1.0:
        warnings.warn(f"perturbation parameter {eps:.3g} outside (0, 1)", RuntimeWarning, stacklevel=2)
    return MassSplit(core, pert, float(fraction), eps)


def viscous_matrix(m: RobotModel) -> np.ndarray:
    """Generalized viscous damping ``blockdiag(L_k Upsilon_k)``."""
    a = _arrays(m)
    out = np.zeros((m.dof, m.dof))
    for k in range(m.n_sections):
        out[6 * k:6 * k + 6, 6 * k:6 * k + 6] = m.lengths[k] * a.viscosity[k]
    return out


def slow_terms(m: RobotModel, split: MassSplit, z1, z2) -> tuple[np.ndarray, np.ndarray]:
    """``A(z2) = C1^p + C2^p + D + K_v`` and the state-only right side at ``z1``.

    The right side is the elastic force, the tip load and the perturbed
    buoyancy; the viscous force is velocity dependent and lives in ``A``.
    """
    tp, tf = assemble_many(m, JointState(z1, z2), [split.pert_mask, AbscissaMask.full(m)])
    Kv = viscous_matrix(m)
    A = tp.coriolis1 + tp.coriolis2 + tf.drag + Kv
    elastic = tp.internal + Kv @ np.asarray(z2, float)  # internal() includes -Kv z2
    rhs = elastic + tp.tip_force + tp.gravity_force()
    return A, rhs


def slow_residual(m: RobotModel, split: MassSplit, z1, z2) -> np.ndarray:
    """``A(z2) z2 - rhs(z1)`` by one Newton-Euler sweep (no matrices formed)."""
    z2 = np.asarray(z2, float)
    wp = split.pert_mask.weights(m)
    bias = masked_bias(m, z1, z2, wp, m.grid.weight, wp)  # (C^p + D) z2 - N^p G
    elastic = internal_force(m, z1, np.zeros(m.dof))
    return bias + viscous_matrix(m) @ z2 - elastic - tip_wrench_force(m, z1)


def _picard(m, split, z1, z, tol, max_iter):
    """Relaxed, regularized Picard; returns (z, converged, iterations, best, lam)."""
    eye = np.eye(m.dof)
    lam = None
    best, best_res, worse = z, np.inf, 0
    for it in range(1, max_iter + 1):
        A, rhs = slow_terms(m, split, z1, z)
        if lam is None:
            lam = 1e-6 * (1.0 + np.linalg.norm(rhs))
        res = np.linalg.norm(A @ z - rhs)
        if res < best_res:
            best, best_res, worse = z, res, 0
        else:
            worse += 1
            if worse >= 3:
                return z, False, it, best, lam
        y = np.linalg.solve(A + lam * eye, rhs + lam * z)
        new = z + PICARD_RELAX * (y - z)
        step = np.linalg.norm(new - z)
        z = new
        if step <= tol * (1.0 + np.linalg.norm(z)):
            return z, True, it, z, lam
    return z, False, max_iter, best, lam


def _newton(m, split, z1, start):
    sol = root(lambda v: slow_residual(m, split, z1, v), start, method="hybr",
               options={"xtol": 1e-13})
    return sol.x, bool(sol.success), int(sol.nfev)


def quasi_steady_velocity(m: RobotModel, split: MassSplit, z1, guess=None,
                          tol: float = PICARD_TOL, max_iter: int = PICARD_MAX_ITER,
                          method: str = "auto") -> QuasiSteady:
    """Solve ``A(z2bar) z2bar = rhs(z1)`` for the quasi-steady velocity.

    ``method="picard"`` is relaxed Picard on ``(A(z) + lam I) y = rhs + lam z``.
    The proximal ``lam z`` keeps the fixed point unbiased, so the residual is
    that of the unregularized equation.  That map is not a contraction
    everywhere (the Coriolis part of ``A`` grows with ``z``), so ``"auto"``
    runs a hybrid Newton solve on the residual from ``guess`` and from the
    linear start ``A(0)^-1 rhs`` first, and keeps Picard as the last resort.
    """
    z1 = np.asarray(z1, float)
    zero = np.zeros(m.dof)
    A0, rhs0 = slow_terms(m, split, z1, zero)
    lam = 1e-6 * (1.0 + np.linalg.norm(rhs0))
    linear = np.linalg.solve(A0 + lam * np.eye(m.dof), rhs0)
    starts = [zero if guess is None else np.array(guess, float)]
    used = "picard"
    iters = 0
    z = None
    if method in ("auto", "newton"):
        if guess is None:
            starts = [linear]
        else:
            starts.append(linear)
        for start in starts:
            cand, ok, n = _newton(m, split, z1, start)
            iters += n
            if ok and np.linalg.norm(slow_residual(m, split, z1, cand)) <= 1e-9 * (1.0 + np.linalg.norm(rhs0)):
                z, used = cand, "newton"
                break
    if z is None and method in ("auto", "picard"):
        cand, ok, n, best, lam = _picard(m, split, z1, starts[0], tol, max_iter)
        iters += n
        if ok:
            z = cand
        elif method == "auto":
            cand, ok, n = _newton(m, split, z1, best)
            iters += n
            if ok:
                z, used = cand, "newton"
    if z is None:
        res = np.linalg.norm(slow_residual(m, split, z1, starts[0]))
        raise QuasiSteadyError(float(res), iters)
    res = np.linalg.norm(slow_residual(m, split, z1, z))
    return QuasiSteady(z, float(res), float(np.linalg.norm(rhs0)), iters, float(lam), used)


def boundary_layer_rhs(m: RobotModel, split: MassSplit, z1, z2_tilde, u_f,
                       terms: DynamicsTerms | None = None) -> np.ndarray:
    """``dz2tilde/dT`` with ``z1`` frozen, on the core inertia alone."""
    if terms is None:
        terms = assemble_many(m, JointState(z1, z2_tilde), [split.core_mask])[0]
    z2_tilde = np.asarray(z2_tilde, float)
    rhs = (np.asarray(u_f, float) + terms.external()
           - (terms.coriolis + terms.drag) @ z2_tilde)
    return solve_spd(terms.mass, rhs)


def slow_rhs(m: RobotModel, split: MassSplit, z1_bar, u_s) -> np.ndarray:
    """The slow channel is a pure integrator of the virtual input."""
    return np.array(u_s, float)

