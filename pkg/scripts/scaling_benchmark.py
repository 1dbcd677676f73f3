"""Assembly and controller-tick time against the number of sections."""

import argparse
import json

from soro_spt.bench import run_benchmark
from soro_spt.model import default_config

p = argparse.ArgumentParser()
p.add_argument("--n-list", default="1,2,4,8,16,32")
p.add_argument("--trials", type=int, default=40)
args = p.parse_args()

rep = run_benchmark(default_config(), [int(v) for v in args.n_list.split(",")], trials=args.trials)
print(rep.to_csv())
print(json.dumps({"fit": rep.to_dict()["fit"], "control_fit": rep.to_dict()["control_fit"],
                  "doubling_ratios": rep.ratios()}, indent=2))
