import json

import numpy as np
import pytest

from soro_spt.model import (ConfigError, default_config_text, derived_quantities, dump_config,
                            load_config, parse_config)


def _doc():
    return json.loads(default_config_text())


def test_default_arm_parameters(arm, cfg):
    assert arm.n_sections == 4 and arm.total_length == pytest.approx(2.0)
    assert arm.microsolids_per_section == 41
    for s in arm.sections:
        assert (s.young_modulus, s.shear_viscosity, s.radius) == (110e3, 3e3, 0.1)
        assert (s.poisson_ratio, s.density) == (0.45, 2000.0)
    assert arm.fluid.water_density == 997.0 and arm.fluid.drag_coefficient == 0.82
    assert cfg.split_fraction == 0.6
    assert arm.gravity == (0, 0, 0, -9.81, 0, 0)


def test_derived_quantities(arm):
    p = derived_quantities(arm.sections[0])
    r = 0.1
    assert p.area == pytest.approx(np.pi * r ** 2, rel=1e-15)
    assert p.inertias[1] == pytest.approx(7.853981633974483e-05, rel=1e-15)
    assert p.inertias == (pytest.approx(np.pi * r ** 4 / 2), pytest.approx(np.pi * r ** 4 / 4),
                          pytest.approx(np.pi * r ** 4 / 4))
    assert p.shear_modulus == pytest.approx(110e3 / 2.9)
    assert np.allclose(np.diag(p.screw_inertia), 2000 * np.array([*p.inertias, p.area, p.area, p.area]))


def test_grid_partitions_the_arm(arm_n):
    g = arm_n.grid
    assert g.abscissa.size == 41 * arm_n.n_sections
    assert np.all(np.diff(g.abscissa) > 0)
    assert g.weight.sum() == pytest.approx(arm_n.total_length, rel=1e-14)


def test_section_of(arm):
    assert arm.section_of(0.0) == (0, 0.0)
    i, s = arm.section_of(1.2)
    assert i == 2 and s == pytest.approx(0.2)
    assert arm.section_of(2.0)[0] == 3
    with pytest.raises(ValueError):
        arm.section_of(2.5)


def test_with_sections_keeps_length(arm):
    m = arm.with_sections(8)
    assert m.n_sections == 8 and m.total_length == pytest.approx(2.0)


def test_round_trip(cfg):
    again = load_config(dump_config(cfg))
    assert dump_config(again) == dump_config(cfg)


@pytest.mark.parametrize("key,value,needle", [
    ("poisson_ratio", 0.6, "poisson_ratio"),
    ("radius", -0.1, "radius"),
    ("young_modulus", 0.0, "young_modulus"),
])
def test_invalid_sections_rejected(key, value, needle):
    doc = _doc()
    doc["sections"][1][key] = value
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert any(needle in p and "sections[1]" in p for p in err.value.problems)


def test_all_problems_reported():
    doc = _doc()
    doc["sections"][0]["poisson_ratio"] = 0.6
    doc["fluid"]["water_density"] = -1
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert len(err.value.problems) >= 2


def test_parse_error_is_located():
    with pytest.raises(ConfigError, match="line"):
        load_config('{"sections": [}')
