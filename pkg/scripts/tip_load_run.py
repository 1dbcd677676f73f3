"""Passive response to the tip load (gravity off): where does the arm deform?"""

import argparse

import numpy as np

from soro_spt.model import default_config
from soro_spt.perturbation import split_by_fraction
from soro_spt.simulation import Scenario, run_passive, strain_deviation_integrals

p = argparse.ArgumentParser()
p.add_argument("--duration", type=float, default=2.0)
p.add_argument("--gravity", action="store_true", help="keep gravity on as well")
args = p.parse_args()

sc = Scenario.from_config(default_config(), duration=args.duration, toggles={"gravity": args.gravity})
tr = run_passive(sc, record_every=50)
m = sc.plant()
split = split_by_fraction(m, sc.split_fraction)
print(" t [s]   core integral   perturbed integral")
for t, q in zip(tr.t, tr.q):
    core, pert = strain_deviation_integrals(m, split, q)
    print(f"{t:6.2f}   {core:.6e}    {pert:.6e}")
print("final strain deviation per section:")
print(np.array2string((tr.q[-1] - m.rest_q).reshape(-1, 6), precision=6, suppress_small=True))
