"""Scaling benchmark of the dynamics assembly and of one controller tick."""

from __future__ import annotations

import gc
import time
from dataclasses import asdict, dataclass

import numpy as np

from .control import ConstantReference, ControllerState, ControlSettings, Reference, multirate_step
from .dynamics import assemble_terms
from .kinematics import JointState
from .model import Gains, Integration, RunConfig
from .perturbation import quasi_steady_velocity, split_by_fraction


@dataclass(frozen=True)
class BenchRow:
    n_sections: int
    nodes: int
    assemble_ns: float
    control_step_ns: float
    trials: int


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class BenchReport:
    rows: tuple
    fit: LinearFit          # assembly time against node count
    control_fit: LinearFit

    def __post_init__(self):
        for r in self.rows:
            if r.trials < 20:
                raise ValueError("each benchmark row needs at least 20 trials")
            if not (r.assemble_ns > 0 and r.control_step_ns > 0):
                raise ValueError("timings must be positive")

    def ratios(self) -> dict:
        """``time(2N) / time(N)`` for every doubling present in the rows."""
        by_n = {r.n_sections: r.assemble_ns for r in self.rows}
        return {f"{n}->{2 * n}": by_n[2 * n] / by_n[n] for n in sorted(by_n) if 2 * n in by_n}

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows], "fit": asdict(self.fit),
                "control_fit": asdict(self.control_fit), "doubling_ratios": self.ratios()}

    def to_csv(self) -> str:
        lines = ["n_sections,nodes,assemble_ns,control_step_ns,trials"]
        lines += [f"{r.n_sections},{r.nodes},{r.assemble_ns:.1f},{r.control_step_ns:.1f},{r.trials}"
                  for r in self.rows]
        return "\n".join(lines) + "\n"


def linear_fit(x, y) -> LinearFit:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2)


def _block_size(fn, target_ns: float) -> int:
    """Calls per timed sample so that one sample lasts about ``target_ns``."""
    t0 = time.perf_counter_ns()
    fn()
    once = max(time.perf_counter_ns() - t0, 1)
    return max(1, int(round(target_ns / once)))


def _interleaved_medians(fns, trials: int, warmup: int, target_ns: float) -> list[float]:
    """Median per-call time of each function.

    Trials cycle through all functions in turn, so slow machine-wide drift
    hits every row alike instead of biasing whichever size ran during it.
    """
    for fn in fns:
        for _ in range(warmup):
            fn()
    blocks = [_block_size(fn, target_ns) for fn in fns]
    samples = np.empty((len(fns), trials))
    enabled = gc.isenabled()
    gc.disable()
    try:
        for t in range(trials):
            for i, (fn, k) in enumerate(zip(fns, blocks)):
                t0 = time.perf_counter_ns()
                for _ in range(k):
                    fn()
                samples[i, t] = (time.perf_counter_ns() - t0) / k
    finally:
        if enabled:
            gc.enable()
    return [float(v) for v in np.median(samples, axis=1)]


def _bench_state(m, seed: int) -> JointState:
    rng = np.random.default_rng(seed)
    return JointState(m.rest_q + 0.05 * rng.standard_normal(m.dof), 0.05 * rng.standard_normal(m.dof))


def run_benchmark(cfg: RunConfig, n_list, trials: int = 30, warmup: int = 5, seed: int = 0,
                  target_ns: float = 2e7) -> BenchReport:
    """Time assembly and one fast controller tick for each section count in ``n_list``.

    The tick is a fast-only instant (``z2bar`` already held), which is the
    per-step cost of the loop; the quasi-steady refresh runs once per slow
    sample and is excluded.
    """
    n_list = [int(n) for n in n_list]
    if not n_list or min(n_list) < 1:
        raise ValueError("n-list must hold positive section counts")
    assemble, control, nodes = [], [], []
    for n in n_list:
        m = cfg.model.with_sections(n)
        state = _bench_state(m, seed)
        split = split_by_fraction(m, cfg.split_fraction)
        gains = Gains(np.full(m.dof, float(cfg.gains.kp[0])), cfg.gains.phi)
        rates = Integration(fast_dt=1e-3, slow_dt=1e-2)
        ref = ConstantReference(Reference.setpoint(m.rest_q)).at(0.0)
        z2bar = quasi_steady_velocity(m, split, state.q).z2_bar
        cs = ControllerState.initial(m.dof)

        def hold(z1, guess, z2bar=z2bar):
            return z2bar

        multirate_step(cs, 0.0, state.q, state.qdot, ref, m, split, gains, rates, hold)

        def control_step(cs=cs, m=m, state=state, ref=ref, split=split, gains=gains, rates=rates, hold=hold):
            # a fast-only instant: the slow sample at t = 0 is already held
            cs.last_fast_sample_time = -np.inf
            multirate_step(cs, 5e-3, state.q, state.qdot, ref, m, split, gains, rates, hold, ControlSettings())

        assemble.append(lambda m=m, state=state: assemble_terms(m, state))
        control.append(control_step)
        nodes.append(m.grid.abscissa.size)
    a_ns = _interleaved_medians(assemble, trials, warmup, target_ns)
    c_ns = _interleaved_medians(control, trials, warmup, target_ns)
    rows = [BenchRow(n, k, a, c, trials) for n, k, a, c in zip(n_list, nodes, a_ns, c_ns)]
    nodes = [r.nodes for r in rows]
    return BenchReport(tuple(rows), linear_fit(nodes, [r.assemble_ns for r in rows]),
                       linear_fit(nodes, [r.control_step_ns for r in rows]))
