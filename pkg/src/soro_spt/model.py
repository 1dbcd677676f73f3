"""Arm description: geometry, material, fluid, discretisation, and config I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources

import numpy as np

from .screw import Pose

DEFAULT_GRAVITY = (0.0, 0.0, 0.0, -9.81, 0.0, 0.0)
REST_STRAIN = (0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
# inertial <- base: body z is rotated -90 deg from the inertial frame
DEFAULT_BASE = ((0.0, -1.0, 0.0, 0.0),
                (1.0, 0.0, 0.0, 0.0),
                (0.0, 0.0, 1.0, 0.0),
                (0.0, 0.0, 0.0, 1.0))


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration documents."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class SectionSpec:
    length: float
    radius: float
    density: float
    young_modulus: float
    shear_viscosity: float
    poisson_ratio: float
    rest_strain: tuple = REST_STRAIN

    def problems(self, where="section"):
        out = []
        for name in ("length", "radius", "density", "young_modulus"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                out.append(f"{where}.{name} must be > 0 (got {v})")
        if not (np.isfinite(self.shear_viscosity) and self.shear_viscosity >= 0):
            out.append(f"{where}.shear_viscosity must be >= 0 (got {self.shear_viscosity})")
        if not (0 <= self.poisson_ratio < 0.5):
            out.append(f"{where}.poisson_ratio must be in [0, 0.5) (got {self.poisson_ratio})")
        if len(self.rest_strain) != 6 or not np.all(np.isfinite(self.rest_strain)):
            out.append(f"{where}.rest_strain must be 6 finite numbers")
        return out


@dataclass(frozen=True)
class FluidSpec:
    water_density: float = 997.0
    drag_coefficient: float = 0.82
    added_mass: tuple = (0.0,) * 6

    @property
    def fluid_density(self):
        # buoyancy uses the same density as drag
        return self.water_density

    def problems(self):
        out = []
        if not (np.isfinite(self.water_density) and self.water_density > 0):
            out.append(f"fluid.water_density must be > 0 (got {self.water_density})")
        if not (np.isfinite(self.drag_coefficient) and self.drag_coefficient >= 0):
            out.append(f"fluid.drag_coefficient must be >= 0 (got {self.drag_coefficient})")
        if len(self.added_mass) != 6 or min(self.added_mass) < 0:
            out.append("fluid.added_mass must be 6 non-negative numbers")
        return out


@dataclass(frozen=True)
class SectionProperties:
    area: float
    inertias: tuple  # (I_x, I_y, I_z)
    shear_modulus: float
    screw_inertia: np.ndarray
    stiffness: np.ndarray  # diag(G Ix, E Iy, E Iz, E A, G A, G A)
    viscosity: np.ndarray  # G_v diag(Ix, Iy, Iz, A, A, A)


def derived_quantities(s: SectionSpec) -> SectionProperties:
    area = np.pi * s.radius ** 2
    iy = iz = np.pi * s.radius ** 4 / 4
    ix = np.pi * s.radius ** 4 / 2
    g = s.young_modulus / (2 * (1 + s.poisson_ratio))
    geo = np.array([ix, iy, iz, area, area, area])
    e = s.young_modulus
    return SectionProperties(
        area=area,
        inertias=(ix, iy, iz),
        shear_modulus=g,
        screw_inertia=np.diag(s.density * geo),
        stiffness=np.diag([g * ix, e * iy, e * iz, e * area, g * area, g * area]),
        viscosity=np.diag(s.shear_viscosity * geo),
    )


@dataclass(frozen=True)
class Grid:
    """Midpoint quadrature: one node per microsolid slice."""

    abscissa: np.ndarray
    weight: np.ndarray
    section: np.ndarray
    local: np.ndarray  # distance from the start of the node's section


@dataclass(frozen=True)
class RobotModel:
    sections: tuple
    fluid: FluidSpec = field(default_factory=FluidSpec)
    microsolids_per_section: int = 41
    base_transform: Pose = field(default_factory=lambda: Pose.from_matrix(DEFAULT_BASE))
    actuation_abscissa: float | None = None
    tip_load: tuple = (0.0,) * 6
    gravity: tuple = DEFAULT_GRAVITY

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(self.sections))
        if self.actuation_abscissa is None:
            object.__setattr__(self, "actuation_abscissa", self.total_length)
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self):
        out = []
        if not self.sections:
            return ["sections must list at least one section"]
        for i, s in enumerate(self.sections):
            out += s.problems(f"sections[{i}]")
        out += self.fluid.problems()
        if self.microsolids_per_section < 2:
            out.append("microsolids_per_section must be >= 2")
        if not out and not (0 <= self.actuation_abscissa <= self.total_length):
            out.append(f"actuation_abscissa must lie in [0, {self.total_length}]")
        if len(self.tip_load) != 6 or not np.all(np.isfinite(self.tip_load)):
            out.append("tip_load must be 6 finite numbers")
        if len(self.gravity) != 6 or not np.all(np.isfinite(self.gravity)):
            out.append("gravity must be 6 finite numbers")
        try:
            self.base_transform.validate()
        except ValueError as exc:
            out.append(f"base_transform: {exc}")
        return out

    @property
    def n_sections(self) -> int:
        return len(self.sections)

    @property
    def dof(self) -> int:
        return 6 * len(self.sections)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([s.length for s in self.sections])

    @property
    def total_length(self) -> float:
        return float(sum(s.length for s in self.sections))

    @cached_property
    def section_starts(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.lengths)])

    @cached_property
    def properties(self) -> tuple:
        return tuple(derived_quantities(s) for s in self.sections)

    @cached_property
    def rest_q(self) -> np.ndarray:
        return np.concatenate([np.asarray(s.rest_strain, float) for s in self.sections])

    @cached_property
    def grid(self) -> Grid:
        return quadrature_grid(self)

    def section_of(self, x: float) -> tuple[int, float]:
        """Index of the section containing ``x`` and the local arclength."""
        total = self.total_length
        if not (0.0 <= x <= total * (1 + 1e-15)):
            raise ValueError(f"abscissa {x} outside [0, {total}]")
        i = int(np.searchsorted(self.section_starts, x, side="right") - 1)
        i = min(max(i, 0), self.n_sections - 1)
        return i, min(x - self.section_starts[i], self.lengths[i])

    def with_sections(self, n: int) -> "RobotModel":
        """Same arm split into ``n`` equal sections cloned from the first one."""
        template = self.sections[0]
        length = self.total_length / n
        return replace(self, sections=tuple(replace(template, length=length) for _ in range(n)),
                       actuation_abscissa=self.actuation_abscissa * 1.0)


def quadrature_grid(m: RobotModel) -> Grid:
    n = m.microsolids_per_section
    xs, ws, sec, loc = [], [], [], []
    for i, (start, length) in enumerate(zip(m.section_starts[:-1], m.lengths)):
        h = length / n
        local = (np.arange(n) + 0.5) * h
        xs.append(start + local)
        ws.append(np.full(n, h))
        sec.append(np.full(n, i))
        loc.append(local)
    return Grid(np.concatenate(xs), np.concatenate(ws),
                np.concatenate(sec).astype(np.int64), np.concatenate(loc))


# ---------------------------------------------------------------- config I/O

@dataclass(frozen=True)
class Gains:
    kp: np.ndarray
    phi: float = 0.5

    def __post_init__(self):
        kp = np.asarray(self.kp, float)
        if np.any(kp <= 0):
            raise ConfigError("gains.kp entries must be > 0")
        if not 0 < self.phi < 1:
            raise ConfigError("gains.phi must lie in (0, 1)")
        object.__setattr__(self, "kp", kp)


@dataclass(frozen=True)
class Integration:
    fast_dt: float = 1e-3
    slow_dt: float = 1e-2
    duration: float = 5.0
    substeps: int = 1


@dataclass(frozen=True)
class RunConfig:
    model: RobotModel
    split_fraction: float = 0.6
    gains: Gains | None = None
    integration: Integration = field(default_factory=Integration)

    def __post_init__(self):
        if self.gains is None:
            object.__setattr__(self, "gains", Gains(np.full(self.model.dof, 10.0)))
        elif self.gains.kp.shape != (self.model.dof,):
            object.__setattr__(self, "gains", Gains(np.broadcast_to(self.gains.kp, (self.model.dof,)).copy(),
                                                    self.gains.phi))


_SECTION_KEYS = {"length", "radius", "density", "young_modulus", "shear_viscosity",
                 "poisson_ratio", "rest_strain"}


def _floats(value, n, name, problems):
    try:
        arr = np.asarray(value, float).ravel()
    except (TypeError, ValueError):
        problems.append(f"{name} must be numeric")
        return None
    if arr.size != n:
        problems.append(f"{name} must have {n} entries (got {arr.size})")
        return None
    return tuple(float(v) for v in arr)


def parse_config(doc: dict) -> RunConfig:
    problems = []
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")

    raw_sections = doc.get("sections")
    if not isinstance(raw_sections, list) or not raw_sections:
        raise ConfigError("sections must be a non-empty list")
    sections = []
    for i, raw in enumerate(raw_sections):
        where = f"sections[{i}]"
        if not isinstance(raw, dict):
            problems.append(f"{where} must be an object")
            continue
        unknown = set(raw) - _SECTION_KEYS
        if unknown:
            problems.append(f"{where}: unknown keys {sorted(unknown)}")
        missing = _SECTION_KEYS - {"rest_strain"} - set(raw)
        if missing:
            problems.append(f"{where}: missing keys {sorted(missing)}")
            continue
        rest = _floats(raw.get("rest_strain", REST_STRAIN), 6, f"{where}.rest_strain", problems)
        try:
            spec = SectionSpec(**{k: float(raw[k]) for k in _SECTION_KEYS - {"rest_strain"}},
                               rest_strain=rest or REST_STRAIN)
        except (TypeError, ValueError):
            problems.append(f"{where}: fields must be numbers")
            continue
        problems += spec.problems(where)
        sections.append(spec)

    fl = doc.get("fluid", {})
    fluid = FluidSpec(
        water_density=float(fl.get("water_density", 997.0)),
        drag_coefficient=float(fl.get("drag_coefficient", 0.82)),
        added_mass=_floats(fl.get("added_mass", [0.0] * 6), 6, "fluid.added_mass", problems) or (0.0,) * 6,
    )
    problems += fluid.problems()

    base = doc.get("base_transform", [v for row in DEFAULT_BASE for v in row])
    base_vals = _floats(base, 16, "base_transform", problems)
    pose = None
    if base_vals is not None:
        try:
            pose = Pose.from_matrix(base_vals).validate()
        except ValueError as exc:
            problems.append(f"base_transform: {exc}")

    tip = _floats(doc.get("tip_load", [0.0] * 6), 6, "tip_load", problems)
    grav = _floats(doc.get("gravity", DEFAULT_GRAVITY), 6, "gravity", problems)
    nodes = doc.get("microsolids_per_section", 41)
    if not isinstance(nodes, int) or nodes < 2:
        problems.append("microsolids_per_section must be an integer >= 2")
    fraction = doc.get("split_fraction", 0.6)
    if not isinstance(fraction, (int, float)) or not 0 < fraction < 1:
        problems.append("split_fraction must lie in (0, 1)")

    g = doc.get("gains", {})
    kp = g.get("kp", 10.0)
    phi = g.get("phi", 0.5)
    if np.any(np.asarray(kp, float) <= 0):
        problems.append("gains.kp entries must be > 0")
    if not 0 < phi < 1:
        problems.append("gains.phi must lie in (0, 1)")

    it = doc.get("integration", {})
    integ = Integration(**{k: it[k] for k in ("fast_dt", "slow_dt", "duration", "substeps") if k in it})
    if integ.fast_dt <= 0 or integ.slow_dt <= 0 or integ.duration <= 0:
        problems.append("integration time steps and duration must be > 0")
    elif integ.fast_dt > integ.slow_dt:
        problems.append("integration.fast_dt must not exceed slow_dt")

    if problems:
        raise ConfigError(problems)
    model = RobotModel(
        sections=tuple(sections), fluid=fluid, microsolids_per_section=nodes,
        base_transform=pose, actuation_abscissa=doc.get("actuation_abscissa"),
        tip_load=tip, gravity=grav,
    )
    kp_arr = np.broadcast_to(np.asarray(kp, float), (model.dof,)).copy()
    return RunConfig(model, float(fraction), Gains(kp_arr, float(phi)), integ)


def load_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(doc)


def load_model(text: str) -> RobotModel:
    return load_config(text).model


def default_config_text() -> str:
    return resources.files("soro_spt").joinpath("data/default_arm.json").read_text()


def default_config() -> RunConfig:
    return load_config(default_config_text())


def dump_config(cfg: RunConfig) -> str:
    """Canonical JSON for ``cfg``; ``load_config(dump_config(c))`` reproduces ``c``."""
    m = cfg.model
    doc = {
        "sections": [
            {"length": s.length, "radius": s.radius, "density": s.density,
             "young_modulus": s.young_modulus, "shear_viscosity": s.shear_viscosity,
             "poisson_ratio": s.poisson_ratio, "rest_strain": list(s.rest_strain)}
            for s in m.sections
        ],
        "fluid": {"water_density": m.fluid.water_density,
                  "drag_coefficient": m.fluid.drag_coefficient,
                  "added_mass": list(m.fluid.added_mass)},
        "microsolids_per_section": m.microsolids_per_section,
        "base_transform": m.base_transform.as_matrix().ravel().tolist(),
        "actuation_abscissa": m.actuation_abscissa,
        "tip_load": list(m.tip_load),
        "gravity": list(m.gravity),
        "split_fraction": cfg.split_fraction,
        "gains": {"kp": cfg.gains.kp.tolist(), "phi": cfg.gains.phi},
        "integration": {"fast_dt": cfg.integration.fast_dt, "slow_dt": cfg.integration.slow_dt,
                        "duration": cfg.integration.duration, "substeps": cfg.integration.substeps},
    }
    return json.dumps(doc, indent=2)
