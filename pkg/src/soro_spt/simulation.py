"""Fixed-step integration of the full arm, open loop or under the layered controller.

The plant is always the complete model; the core/perturbed sub-models live
only inside the controller.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .control import (ConstantReference, ControllerState, ControlSettings, Reference, multirate_step)
from .dynamics import assemble_many, plant_acceleration
from .kinematics import JointState
from .model import Gains, Integration, RobotModel, RunConfig
from .perturbation import MassSplit, quasi_steady_velocity, split_by_fraction

TOGGLES = ("gravity", "drag", "viscosity", "tip_load")


class IntegrationError(FloatingPointError):
    def __init__(self, t: float, what: str):
        self.t = t
        super().__init__(f"{what} at t = {t:.6g} s")


def apply_toggles(m: RobotModel, toggles: dict) -> RobotModel:
    """Copy of ``m`` with the switched-off loads zeroed."""
    unknown = set(toggles) - set(TOGGLES)
    if unknown:
        raise ValueError(f"unknown toggles {sorted(unknown)}")
    if not toggles.get("gravity", True):
        m = replace(m, gravity=(0.0,) * 6)
    if not toggles.get("tip_load", True):
        m = replace(m, tip_load=(0.0,) * 6)
    if not toggles.get("drag", True):
        m = replace(m, fluid=replace(m.fluid, drag_coefficient=0.0))
    if not toggles.get("viscosity", True):
        m = replace(m, sections=tuple(replace(s, shear_viscosity=0.0) for s in m.sections))
    return m


@dataclass(frozen=True)
class Scenario:
    model: RobotModel
    initial_state: JointState
    reference: object  # anything with .at(t) -> Reference
    duration: float
    fast_dt: float = 1e-3
    slow_dt: float = 1e-2
    toggles: dict = field(default_factory=dict)
    seed: int = 0
    initial_spread: float = 0.0  # std of seeded random offsets added to the initial strains
    split_fraction: float = 0.6
    gains: Gains | None = None
    substeps: int = 1
    control: ControlSettings = ControlSettings()

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if not (self.fast_dt > 0 and self.slow_dt > 0):
            raise ValueError("time steps must be > 0")
        if self.fast_dt > self.slow_dt:
            raise ValueError("fast_dt must not exceed slow_dt")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @classmethod
    def from_config(cls, cfg: RunConfig, initial_state: JointState | None = None,
                    reference=None, **kw) -> "Scenario":
        m = cfg.model
        if initial_state is None:
            initial_state = JointState(m.rest_q, np.zeros(m.dof))
        if reference is None:
            reference = ConstantReference(Reference.setpoint(m.rest_q))
        integ = cfg.integration
        base = dict(duration=integ.duration, fast_dt=integ.fast_dt, slow_dt=integ.slow_dt,
                    substeps=integ.substeps, split_fraction=cfg.split_fraction, gains=cfg.gains)
        base.update(kw)
        return cls(m, initial_state, reference, **base)

    def plant(self) -> RobotModel:
        return apply_toggles(self.model, self.toggles)

    def start(self) -> tuple[np.ndarray, np.ndarray]:
        q = self.initial_state.q.copy()
        if self.initial_spread:
            q += self.initial_spread * np.random.default_rng(self.seed).standard_normal(q.size)
        return q, self.initial_state.qdot.copy()


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    z2bar: np.ndarray
    z2tilde: np.ndarray
    us: np.ndarray
    uf: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    V: np.ndarray
    W: np.ndarray
    Sigma: np.ndarray
    epsilon: np.ndarray

    VECTOR_FIELDS = ("q", "qdot", "z2bar", "z2tilde", "us", "uf", "e1", "e2")
    SCALAR_FIELDS = ("V", "W", "Sigma", "epsilon")

    def __len__(self) -> int:
        return self.t.size

    @property
    def dof(self) -> int:
        return self.q.shape[1]


class _Recorder:
    def __init__(self):
        self.rows = {k: [] for k in ("t",) + Trajectory.VECTOR_FIELDS + Trajectory.SCALAR_FIELDS}

    def add(self, **row):
        for k, v in row.items():
            self.rows[k].append(np.array(v, float, copy=True))

    def build(self) -> Trajectory:
        return Trajectory(**{k: np.array(v) for k, v in self.rows.items()})


def rk4_step(y, dt: float, f: Callable, t: float = 0.0) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step for ``y' = f(y)``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    y = np.asarray(y, float)
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    out = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError(t, "non-finite state")
    return out


def _plant_rhs(m: RobotModel, u: np.ndarray, n: int) -> Callable:
    def f(y):
        return np.concatenate([y[n:], plant_acceleration(m, y[:n], y[n:], u)])
    return f


def _advance(m, y, u, dt, substeps, t):
    n = y.size // 2
    f = _plant_rhs(m, u, n)
    h = dt / substeps
    for j in range(substeps):
        try:
            y = rk4_step(y, h, f, t + j * h)
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            if isinstance(exc, IntegrationError):
                raise
            raise IntegrationError(t + j * h, str(exc)) from exc
    return y


def _n_steps(duration: float, dt: float) -> int:
    return int(round(duration / dt))


def run_closed_loop(sc: Scenario, progress: Callable | None = None) -> Trajectory:
    m = sc.plant()
    split = split_by_fraction(m, sc.split_fraction)
    gains = sc.gains or Gains(np.full(m.dof, 10.0))
    if gains.kp.shape != (m.dof,):
        gains = Gains(np.broadcast_to(gains.kp, (m.dof,)).copy(), gains.phi)
    rates = Integration(fast_dt=sc.fast_dt, slow_dt=sc.slow_dt, duration=sc.duration, substeps=sc.substeps)
    q, qd = sc.start()
    n = m.dof
    y = np.concatenate([q, qd])
    cs = ControllerState.initial(n)
    rec = _Recorder()

    def refresh(z1, guess):
        return quasi_steady_velocity(m, split, z1, guess=guess).z2_bar

    steps = _n_steps(sc.duration, sc.fast_dt)
    for k in range(steps + 1):
        t = k * sc.fast_dt
        z1, z2 = y[:n], y[n:]
        ref = sc.reference.at(t)
        try:
            u, cs = multirate_step(cs, t, z1, z2, ref, m, split, gains, rates, refresh, sc.control)
        except (FloatingPointError, np.linalg.LinAlgError, RuntimeError) as exc:
            raise IntegrationError(t, f"controller failure: {exc}") from exc
        last = cs.last
        rec.add(t=t, q=z1, qdot=z2, z2bar=cs.held_z2bar, z2tilde=last["z2_tilde"], us=cs.held_us,
                uf=u, e1=last["e1"], e2=last["e2"], V=last["V"], W=last["W"], Sigma=last["Sigma"],
                epsilon=last["epsilon"])
        if progress is not None:
            progress(t)
        if k < steps:
            y = _advance(m, y, u, sc.fast_dt, sc.substeps, t)
    return rec.build()


def run_passive(sc: Scenario, record_every: int = 1, progress: Callable | None = None) -> Trajectory:
    """Open-loop run (no actuation); controller columns are zeros."""
    m = sc.plant()
    split = split_by_fraction(m, sc.split_fraction)
    q, qd = sc.start()
    n = m.dof
    y = np.concatenate([q, qd])
    zero = np.zeros(n)
    rec = _Recorder()
    steps = _n_steps(sc.duration, sc.fast_dt)
    for k in range(steps + 1):
        t = k * sc.fast_dt
        if k % record_every == 0 or k == steps:
            tc, tp = assemble_many(m, JointState(y[:n], zero), [split.core_mask, split.pert_mask])
            eps = float(np.linalg.norm(tp.mass) / np.linalg.norm(tc.mass))
            rec.add(t=t, q=y[:n], qdot=y[n:], z2bar=zero, z2tilde=zero, us=zero, uf=zero, e1=zero,
                    e2=zero, V=0.0, W=0.0, Sigma=0.0, epsilon=eps)
            if progress is not None:
                progress(t)
        if k < steps:
            y = _advance(m, y, zero, sc.fast_dt, sc.substeps, t)
    return rec.build()


def strain_deviation_integrals(m: RobotModel, split: MassSplit, q) -> tuple[float, float]:
    """``int |xi - xi*| dX`` over the core and over the perturbed abscissas."""
    dev = np.linalg.norm((np.asarray(q, float) - m.rest_q).reshape(-1, 6), axis=1)[m.grid.section]
    return (float(np.sum(split.core_mask.weights(m) * dev)),
            float(np.sum(split.pert_mask.weights(m) * dev)))
