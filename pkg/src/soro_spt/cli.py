"""``soro-spt`` command line: simulate, benchmark, validate."""

from __future__ import annotations

import argparse
import csv
import json
import os
import subprocess
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from .bench import run_benchmark
from .dynamics import AssemblyError, MassMatrixError, assemble_terms
from .kinematics import JointState
from .model import ConfigError, RunConfig, default_config_text, derived_quantities, dump_config, load_config
from .perturbation import QuasiSteadyError, split_by_fraction
from .simulation import TOGGLES, IntegrationError, Scenario, Trajectory, run_closed_loop, run_passive

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (IntegrationError, MassMatrixError, AssemblyError, QuasiSteadyError,
                  FloatingPointError, np.linalg.LinAlgError)


def csv_header(dof: int) -> list[str]:
    cols = ["t"]
    for name in Trajectory.VECTOR_FIELDS:
        cols += [f"{name}_{i + 1}" for i in range(dof)]
    return cols + list(Trajectory.SCALAR_FIELDS)


def emit_csv(tr: Trajectory, path) -> Path:
    """One row per sample, 17 significant digits so that parsing back is exact."""
    if len(tr) == 0:
        raise ValueError("empty trajectory")
    path = Path(path)
    block = np.column_stack([tr.t] + [getattr(tr, k) for k in Trajectory.VECTOR_FIELDS]
                            + [getattr(tr, k) for k in Trajectory.SCALAR_FIELDS])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(csv_header(tr.dof))
        for row in block:
            w.writerow([f"{v:.17g}" for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def version_string() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _apply_threads():
    value = os.environ.get("SORO_SPT_THREADS")
    if value:
        import numba
        numba.set_num_threads(max(1, min(int(value), numba.config.NUMBA_NUM_THREADS)))


def _read_config(path) -> RunConfig:
    if path is None:
        return load_config(default_config_text())
    p = Path(path)
    if not p.is_file():
        raise ConfigError([f"config file not found: {p}"])
    return load_config(p.read_text())


def cmd_simulate(args) -> int:
    cfg = _read_config(args.config)
    toggles = {name: False for name in args.off}
    kw = {"toggles": toggles, "seed": args.seed, "initial_spread": args.spread}
    if args.duration is not None:
        kw["duration"] = args.duration
    sc = Scenario.from_config(cfg, **kw)
    tr = run_passive(sc) if args.passive else run_closed_loop(sc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(tr, out / "trajectory.csv")
    split = split_by_fraction(sc.plant(), sc.split_fraction)
    manifest = {
        "version": version_string(),
        "mode": "passive" if args.passive else "closed_loop",
        "config": json.loads(dump_config(cfg)),
        "scenario": {"duration": sc.duration, "fast_dt": sc.fast_dt, "slow_dt": sc.slow_dt,
                     "seed": sc.seed, "initial_spread": sc.initial_spread, "toggles": toggles},
        "epsilon_at_rest": split.epsilon,
        "samples": len(tr),
        "final_e1_norm": float(np.linalg.norm(tr.e1[-1])),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print(f"wrote {len(tr)} samples to {out / 'trajectory.csv'}; epsilon = {split.epsilon:.6g}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _read_config(args.config)
    try:
        n_list = [int(v) for v in args.n_list.split(",") if v.strip()]
    except ValueError:
        raise ConfigError([f"--n-list must be comma separated integers, got {args.n_list!r}"]) from None
    if not n_list:
        raise ConfigError(["--n-list is empty"])
    rep = run_benchmark(cfg, n_list, trials=args.trials, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(json.dumps(rep.to_dict(), indent=2))
    (out / "bench.csv").write_text(rep.to_csv())
    sys.stdout.write(rep.to_csv())
    print(f"assembly fit: slope {rep.fit.slope:.4g} ns/node, r^2 {rep.fit.r_squared:.4f}")
    for k, v in rep.ratios().items():
        print(f"ratio {k}: {v:.3f}")
    return EXIT_OK


def validate_lines(cfg: RunConfig) -> list[str]:
    m = cfg.model
    lines = [f"sections               {m.n_sections}",
             f"microsolids/section    {m.microsolids_per_section}",
             f"total length L [m]     {m.total_length:.6g}"]
    for i, s in enumerate(m.sections):
        p = derived_quantities(s)
        lines += [
            f"section {i}: length {s.length:.6g} m, radius r {s.radius:.6g} m, density {s.density:.6g} kg/m^3",
            f"  E {s.young_modulus:.6g} Pa, G_v {s.shear_viscosity:.6g} Pa s, poisson {s.poisson_ratio:.6g}",
            f"  A {p.area:.6e} m^2, I_x {p.inertias[0]:.6e} m^4, I_y {p.inertias[1]:.6e} m^4, "
            f"I_z {p.inertias[2]:.6e} m^4, G {p.shear_modulus:.6e} Pa",
        ]
    f = m.fluid
    split = split_by_fraction(m, cfg.split_fraction)
    lines += [f"water density          {f.water_density:.6g} kg/m^3",
              f"drag coefficient C_d   {f.drag_coefficient:.6g}",
              f"split core/perturbed   {cfg.split_fraction * 100:.0f}/{(1 - cfg.split_fraction) * 100:.0f}",
              f"epsilon at rest        {split.epsilon:.10g}"]
    return lines


def cmd_validate(args) -> int:
    cfg = _read_config(args.config)
    m = cfg.model
    terms = assemble_terms(m, JointState(m.rest_q, np.zeros(m.dof)))
    np.linalg.cholesky(terms.mass)  # smoke check: SPD at rest
    print("\n".join(validate_lines(cfg)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="soro-spt", description="Discrete Cosserat arm simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON config (default: the shipped arm)")
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("simulate", help="run a closed-loop or passive scenario")
    common(s)
    s.add_argument("--passive", action="store_true", help="no controller")
    s.add_argument("--out", metavar="DIR", default="out")
    s.add_argument("--duration", type=float, metavar="S")
    s.add_argument("--spread", type=float, default=0.0, help="std of seeded initial strain offsets")
    s.add_argument("--off", action="append", default=[], choices=TOGGLES, help="switch a load off")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("benchmark", help="O(N) scaling benchmark")
    common(b)
    b.add_argument("--n-list", default="1,2,4,8,16", metavar="CSV-ints")
    b.add_argument("--out", metavar="DIR", default="bench")
    b.add_argument("--trials", type=int, default=30)
    b.set_defaults(func=cmd_benchmark)

    v = sub.add_parser("validate", help="check a config and print derived quantities")
    common(v)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_threads()
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
