import math
import textwrap

import pytest

from orbitcount.config import SCHEMA, load_scenario, parse_scenario
from orbitcount.errors import ConfigError


def parse(text):
    return parse_scenario(textwrap.dedent(text))


BASE = """\
schema: orbitcount/1
kind: census
field: {builtin: planar_minus}
t: 0.5
"""


def test_minimal_census_resolves_defaults():
    sc = parse(BASE + "window: {s_max: 7}\n")
    assert sc.kind == "census" and sc.t == 0.5
    assert sc.window.s_max == 7.0 and sc.window.region.kind == "ball"
    r = sc.resolved()
    assert r["schema"] == SCHEMA and r["integrator"]["tol"] == 1e-10
    assert r["window"]["region"]["radius"] == 1.5


def test_time_units():
    sc = parse(BASE + "window:\n  s_max: {value: 1.5, unit: 2pi}\n")
    assert sc.window.s_max == pytest.approx(3 * math.pi)
    sc = parse(BASE.replace("kind", "units: {time: 2pi}\nkind") + "window: {s_max: 1}\n")
    assert sc.window.s_max == pytest.approx(2 * math.pi)


def test_polynomial_field_on_sphere():
    sc = parse("""\
        schema: orbitcount/1
        kind: census
        field:
          polynomial:
            dim: 4
            terms:
              - {out: 0, exp: [0, 1, 0, 0], coef: -1}
              - {out: 1, exp: [1, 0, 0, 0], coef: 1}
              - {out: 2, exp: [0, 0, 0, 1], coef: -2}
              - {out: 3, exp: [0, 0, 1, 0], coef: 2}
          constraint: {sphere: 1.0}
        window: {s_max: 7}
        """)
    assert sc.field.sphere_radius == 1.0 and sc.field.ambient_dim == 4


def test_t_dependent_polynomial_needs_t():
    with pytest.raises(ConfigError, match="depends on t"):
        parse("""\
            schema: orbitcount/1
            kind: census
            field:
              polynomial:
                dim: 1
                terms: [{out: 0, exp: [1], coef: [0, 1]}]
            window: {s_max: 7}
            """)


def test_sweep_grid_forms():
    head = "schema: orbitcount/1\nkind: sweep\nfield: {builtin: planar_plus}\nwindow: {s_max: 7}\n"
    sc = parse(head + "t_range: [-1, 1]\nt_grid: 5\n")
    assert sc.t_grid == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert sc.family.t_range == (-1.0, 1.0)
    sc = parse(head + "t_grid: [-1, -0.2, 0.3]\n")
    assert sc.t_grid == [-1.0, -0.2, 0.3]
    with pytest.raises(ConfigError, match="strictly increasing"):
        parse(head + "t_grid: [0, 0]\n")


def test_lefschetz_forms():
    sc = parse("schema: orbitcount/1\nkind: lefschetz\nhomology: cat_map\nmap: cat_map\n")
    assert sc.d_max == 6 and sc.discrete_map.kind == "toral"
    sc = parse("""\
        schema: orbitcount/1
        kind: lefschetz
        homology:
          matrices: [[[1]], [[2, 1], [1, 1]], [[1]]]
        d_max: 3
        """)
    assert len(sc.homology.per_degree) == 3


@pytest.mark.parametrize("text, line, fragment", [
    ("schema: orbitcount/1\nkind: census\nfield: {builtin: nope}\n", 3, "unknown builtin"),
    (BASE + "window:\n  s_max: -3\n", 6, "must be positive"),
    (BASE + "window:\n  s_max: 7\n  colour: red\n", 7, "unknown key 'colour'"),
    (BASE + "window:\n  s_max: {value: 1, unit: hours}\n", 6, "unknown time unit"),
    ("schema: orbitcount/2\n", 1, "unsupported schema"),
    ("schema: orbitcount/1\nkind: census\nfield: [1, 2\n", 4, "malformed YAML"),
    ("schema: orbitcount/1\nkind: census\nkind: sweep\n", 3, "duplicate key"),
    (BASE + "window:\n  s_max: 7\n  region: {kind: ball, center: [0, 0, 0], radius: 1}\n", 7,
     "expected 2 entries"),
    ("schema: orbitcount/1\nkind: lefschetz\nhomology: {eigenvalues: [[1], [x]]}\n", 3,
     "expected a number"),
])
def test_errors_carry_positions(text, line, fragment):
    with pytest.raises(ConfigError, match=fragment) as info:
        parse_scenario(text)
    assert info.value.line == line
    assert info.value.column is not None


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="schema"):
        parse_scenario("kind: census\n")
    with pytest.raises(ConfigError, match="window"):
        parse_scenario(BASE)


def test_load_from_file(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(BASE + "window: {s_max: 7}\n")
    sc = load_scenario(p)
    assert sc.source == str(p)
