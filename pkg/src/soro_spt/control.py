"""Layered two-time-scale controller: slow virtual-velocity law, fast torque law.

The slow law returns a virtual input ``u_s`` (a velocity reference for the
fast transient); only the fast torque ``u_f`` reaches the arm.  Monitors
``V = 1/2 e1' Kp e1``, ``W = 1/2 e2' M^c e2`` and ``Sigma = (1 - phi) V + phi W``
are logged at every fast sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import DynamicsTerms, assemble_many
from .kinematics import JointState
from .model import Gains, Integration, RobotModel
from .perturbation import MassSplit

FAST_VARIANTS = ("law", "backstep")


@dataclass(frozen=True)
class Reference:
    qd: np.ndarray
    qd_dot: np.ndarray
    qd_ddot: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(self.qd), np.shape(self.qd_dot), np.shape(self.qd_ddot)}
        if len(shapes) != 1:
            raise ValueError("reference arrays must share one shape")

    @classmethod
    def setpoint(cls, qd) -> "Reference":
        qd = np.asarray(qd, float)
        return cls(qd, np.zeros_like(qd), np.zeros_like(qd))


@dataclass(frozen=True)
class ConstantReference:
    ref: Reference

    def at(self, t: float) -> Reference:
        return self.ref


@dataclass(frozen=True)
class SampledReference:
    """Piecewise-linear interpolation of sampled ``qd``, ``qd_dot``, ``qd_ddot`` rows."""

    times: np.ndarray
    qd: np.ndarray
    qd_dot: np.ndarray
    qd_ddot: np.ndarray

    def at(self, t: float) -> Reference:
        def interp(rows):
            return np.array([np.interp(t, self.times, col) for col in np.asarray(rows).T])
        return Reference(interp(self.qd), interp(self.qd_dot), interp(self.qd_ddot))


@dataclass
class ControllerState:
    held_us: np.ndarray
    held_uf: np.ndarray
    held_z2bar: np.ndarray
    held_us_dot: np.ndarray
    last_slow_sample_time: float = -np.inf
    last_fast_sample_time: float = -np.inf
    lyapunov_log: list = field(default_factory=list)
    last: dict = field(default_factory=dict)

    @classmethod
    def initial(cls, dof: int) -> "ControllerState":
        z = np.zeros(dof)
        return cls(z.copy(), z.copy(), z.copy(), z.copy())


def errors_of(z1, z2_tilde, ref: Reference, us) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(z1, float) - ref.qd, np.asarray(z2_tilde, float) - np.asarray(us, float)


def slow_control(z1, z2_tilde, ref: Reference) -> np.ndarray:
    """``u_s = qd_dot - e1 - 2 z2tilde``."""
    return ref.qd_dot - (np.asarray(z1, float) - ref.qd) - 2.0 * np.asarray(z2_tilde, float)


def core_terms(m: RobotModel, split: MassSplit, z1, z2_tilde) -> DynamicsTerms:
    return assemble_many(m, JointState(z1, z2_tilde), [split.core_mask])[0]


def fast_control(m: RobotModel, split: MassSplit, z1, z2_tilde, ref: Reference, e1, e2,
                 variant: str = "backstep", us=None, us_dot=None,
                 terms: DynamicsTerms | None = None, cancel_internal: bool = True) -> np.ndarray:
    """Boundary-layer torque.

    ``"law"``:      M^c (qd_ddot + e1) + (C^c + D) z2tilde - C^c e2 - F - N^c Ad^-1 G
    ``"backstep"``: M^c (us_dot - e2) + C^c us + D z2tilde - F - N^c Ad^-1 G

    with ``C^c = C1^c + C2^c`` at ``(z1, z2tilde)``.  With ``cancel_internal``
    the elastic/viscous force ``tau`` is cancelled too, so that the torque sets
    the whole generalized load the way the boundary-layer model assumes.
    """
    if terms is None:
        terms = core_terms(m, split, z1, z2_tilde)
    z2_tilde = np.asarray(z2_tilde, float)
    e1 = np.asarray(e1, float)
    e2 = np.asarray(e2, float)
    C = terms.coriolis
    feed = terms.tip_force + terms.gravity_force()
    if cancel_internal:
        feed = feed + terms.internal
    if variant == "law":
        u = terms.mass @ (ref.qd_ddot + e1) + (C + terms.drag) @ z2_tilde - C @ e2
    elif variant == "backstep":
        if us is None:
            raise ValueError("the backstepping form needs the virtual input us")
        us = np.asarray(us, float)
        us_dot = np.zeros_like(us) if us_dot is None else np.asarray(us_dot, float)
        u = terms.mass @ (us_dot - e2) + C @ us + terms.drag @ z2_tilde
    else:
        raise ValueError(f"unknown fast-law variant {variant!r}; expected one of {FAST_VARIANTS}")
    return u - feed


def lyapunov_values(m: RobotModel, split: MassSplit, z1, z2_tilde, ref: Reference, us, gains: Gains,
                    terms: DynamicsTerms | None = None) -> tuple[float, float, float]:
    if terms is None:
        terms = core_terms(m, split, z1, z2_tilde)
    e1, e2 = errors_of(z1, z2_tilde, ref, us)
    V = 0.5 * float(e1 @ (gains.kp * e1))
    W = 0.5 * float(e2 @ terms.mass @ e2)
    return V, W, (1.0 - gains.phi) * V + gains.phi * W


def _due(t: float, last: float, dt: float) -> bool:
    return t >= last + dt * (1.0 - 1e-9)


@dataclass(frozen=True)
class ControlSettings:
    variant: str = "backstep"
    cancel_internal: bool = False
    estimate_us_dot: bool = False  # backward difference of u_s across slow samples


def multirate_step(cs: ControllerState, t: float, z1, z2, ref: Reference,
                   m: RobotModel, split: MassSplit, gains: Gains, rates: Integration,
                   refresh_z2bar: Callable, settings: ControlSettings = ControlSettings()):
    """One controller tick at time ``t``; returns ``(u_applied, cs)``.

    At a slow instant ``z2bar`` is refreshed through ``refresh_z2bar(z1, guess)``
    and ``u_s`` recomputed; at a fast instant ``u_f`` is recomputed from the
    held ``u_s``.  Between instants both are held.
    """
    if rates.fast_dt > rates.slow_dt:
        raise ValueError("fast_dt must not exceed slow_dt")
    z1 = np.asarray(z1, float)
    z2 = np.asarray(z2, float)
    if _due(t, cs.last_slow_sample_time, rates.slow_dt):
        cs.held_z2bar = refresh_z2bar(z1, cs.held_z2bar)
        us = slow_control(z1, z2 - cs.held_z2bar, ref)
        if settings.estimate_us_dot and np.isfinite(cs.last_slow_sample_time):
            cs.held_us_dot = (us - cs.held_us) / (t - cs.last_slow_sample_time)
        cs.held_us = us
        cs.last_slow_sample_time = t
    if _due(t, cs.last_fast_sample_time, rates.fast_dt):
        z2t = z2 - cs.held_z2bar
        tc, tp = assemble_many(m, JointState(z1, z2t), [split.core_mask, split.pert_mask])
        e1, e2 = errors_of(z1, z2t, ref, cs.held_us)
        cs.held_uf = fast_control(m, split, z1, z2t, ref, e1, e2, settings.variant, cs.held_us,
                                  cs.held_us_dot, tc, settings.cancel_internal)
        V, W, S = lyapunov_values(m, split, z1, z2t, ref, cs.held_us, gains, tc)
        cs.lyapunov_log.append((t, V, W, S))
        cs.last_fast_sample_time = t
        cs.last = dict(z2_tilde=z2t, e1=e1, e2=e2, V=V, W=W, Sigma=S,
                       epsilon=float(np.linalg.norm(tp.mass) / np.linalg.norm(tc.mass)))
    return cs.held_uf, cs
