"""Scenario files: a small declarative YAML format with a versioned schema.

A scenario names one experiment (``census``, ``sweep`` or ``lefschetz``), the
field or family it runs on, the window and the numerical settings. Quantities
may carry units: a bare number uses the document default from ``units``, a
``{value, unit}`` mapping overrides it. Time can be given in ``time`` (flow
time) or ``2pi`` (multiples of 2 pi); lengths are in ``chart`` coordinates.

Every validation error is a ``ConfigError`` carrying the line and column of
the offending node.
"""

from dataclasses import dataclass, field as dc_field
import math

import numpy as np
import yaml

from .errors import ConfigError
from .fields import FLOW_BUILTINS, FamilySpec, PolynomialField, builtin
from .flow import IntegratorOpts
from .holonomy import DMAX, TOL_ROOT
from .lefschetz import LEFSCHETZ_BUILTINS, DiscreteMapSpec, HomologyData, cat_map
from .window import Region, Window, default_region

SCHEMA = "orbitcount/1"
KINDS = ("census", "sweep", "lefschetz")
TIME_UNITS = {"time": 1.0, "2pi": 2.0 * math.pi}
LENGTH_UNITS = {"chart": 1.0}
BUILTIN_NAMES = sorted(FLOW_BUILTINS) + sorted(LEFSCHETZ_BUILTINS)


# -- located YAML --------------------------------------------------------------

class _Doc:
    """Plain Python data plus the source position of every node, keyed by path."""

    def __init__(self, text, source="<scenario>"):
        self.source = source
        self.marks = {}
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark or exc.context_mark
            line = mark.line + 1 if mark else None
            col = mark.column + 1 if mark else None
            raise ConfigError(f"{source}: malformed YAML: {exc.problem}", line, col) from None
        if node is None:
            raise ConfigError(f"{source}: empty scenario", 1, 1)
        self.data = self._convert(node, ())

    def _convert(self, node, path):
        self.marks[path] = (node.start_mark.line + 1, node.start_mark.column + 1)
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = k.value
                if key in out:
                    raise ConfigError(f"{self.source}: duplicate key {key!r}",
                                      k.start_mark.line + 1, k.start_mark.column + 1)
                self.marks[path + (key, "<key>")] = (k.start_mark.line + 1,
                                                     k.start_mark.column + 1)
                out[key] = self._convert(v, path + (key,))
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._convert(v, path + (i,)) for i, v in enumerate(node.value)]
        loader = yaml.SafeLoader("")
        try:
            return loader.construct_object(node, deep=True)
        finally:
            loader.dispose()

    def error(self, path, msg):
        p = tuple(path)
        while p not in self.marks and p:
            p = p[:-1]
        line, col = self.marks.get(p, (None, None))
        where = ".".join(str(k) for k in path if k != "<key>") or "<root>"
        return ConfigError(f"{self.source}: {where}: {msg}", line, col)


# -- scenario ------------------------------------------------------------------

@dataclass
class Scenario:
    name: str
    kind: str
    field: object = None
    family: FamilySpec | None = None
    t: float | None = None
    window: Window | None = None
    t_grid: list | None = None
    n_checkpoints: int = 8
    integrator: IntegratorOpts = dc_field(default_factory=IntegratorOpts)
    dmax: int = DMAX
    tol_root: float = TOL_ROOT
    per_dim: int | None = None
    transient: float | None = None
    tol_event: float = 1e-8
    tol_margin: float = 1e-3
    seed: int = 0
    homology: HomologyData | None = None
    discrete_map: DiscreteMapSpec | None = None
    d_max: int = 6
    outputs: dict = dc_field(default_factory=dict)
    units: dict = dc_field(default_factory=dict)
    source: str = "<scenario>"

    def resolved(self):
        """The full configuration after defaults and unit conversion, in base units."""
        out = {"schema": SCHEMA, "name": self.name, "kind": self.kind, "seed": self.seed,
               "units": {"time": "time", "length": "chart"}}
        if self.kind == "lefschetz":
            out["homology"] = self.homology.to_dict()
            out["d_max"] = self.d_max
            out["map"] = self.discrete_map.to_dict() if self.discrete_map else None
            return out
        fld = self.family.field if self.family is not None else self.field
        out["field"] = fld.describe()
        out["window"] = self.window.to_dict()
        out["integrator"] = self.integrator.to_dict()
        out["dmax"] = self.dmax
        out["tol_root"] = self.tol_root
        out["per_dim"] = self.per_dim
        out["transient"] = self.transient
        if self.kind == "census":
            out["t"] = self.t
        else:
            out["t_range"] = list(self.family.t_range)
            out["t_grid"] = list(self.t_grid)
            out["n_checkpoints"] = self.n_checkpoints
            out["tol_event"] = self.tol_event
            out["tol_margin"] = self.tol_margin
        return out


_TOP_KEYS = {"schema", "name", "kind", "units", "field", "t", "t_range", "t_grid", "window",
             "integrator", "rigidity", "census", "sweep", "seed", "homology", "map", "d_max",
             "outputs"}


class _Reader:
    def __init__(self, doc):
        self.doc = doc
        self.units = {"time": "time", "length": "chart"}

    def err(self, path, msg):
        return self.doc.error(path, msg)

    def get(self, path, default=None, required=False):
        node = self.doc.data
        for k in path:
            if isinstance(node, list) and isinstance(k, int) and 0 <= k < len(node):
                node = node[k]
                continue
            if not isinstance(node, dict) or k not in node:
                if required:
                    raise self.err(path[:-1] if path[:-1] else path,
                                   f"missing required key {path[-1]!r}")
                return default
            node = node[k]
        return node

    def mapping(self, path, allowed, required=False):
        m = self.get(path, None, required)
        if m is None:
            return {}
        if not isinstance(m, dict):
            raise self.err(path, "expected a mapping")
        for k in m:
            if k not in allowed:
                raise self.err(tuple(path) + (k, "<key>"),
                               f"unknown key {k!r}; allowed: {sorted(allowed)}")
        return m

    def number(self, path, *, positive=False, default=None, required=False, integer=False):
        v = self.get(path, default, required)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.err(path, f"expected a number, got {v!r}")
        if integer and (not float(v).is_integer()):
            raise self.err(path, f"expected an integer, got {v!r}")
        if not math.isfinite(float(v)):
            raise self.err(path, "expected a finite number")
        if positive and v <= 0:
            raise self.err(path, f"must be positive, got {v!r}")
        return int(v) if integer else float(v)

    def quantity(self, path, dimension, *, positive=False, default=None, required=False):
        v = self.get(path, default, required)
        if v is None:
            return None
        table = TIME_UNITS if dimension == "time" else LENGTH_UNITS
        unit = self.units[dimension]
        vpath = path
        if isinstance(v, dict):
            self.mapping(path, {"value", "unit"})
            unit = self.get(tuple(path) + ("unit",), required=True)
            vpath = tuple(path) + ("value",)
            v = self.get(vpath, required=True)
            if unit not in table:
                raise self.err(tuple(path) + ("unit",),
                               f"unknown {dimension} unit {unit!r}; known: {sorted(table)}")
        val = self.number(vpath, positive=positive, default=v)
        return val * table[unit]

    def vector(self, path, dim=None, dimension="length"):
        v = self.get(path, required=True)
        if not isinstance(v, list) or not all(isinstance(a, (int, float)) and
                                              not isinstance(a, bool) for a in v):
            raise self.err(path, "expected a list of numbers")
        if dim is not None and len(v) != dim:
            raise self.err(path, f"expected {dim} entries, got {len(v)}")
        return [float(a) * LENGTH_UNITS[self.units["length"]] for a in v]

    # -- sections --

    def read_units(self):
        u = self.mapping(("units",), {"time", "length"})
        for dim, table in (("time", TIME_UNITS), ("length", LENGTH_UNITS)):
            if dim in u:
                if u[dim] not in table:
                    raise self.err(("units", dim),
                                   f"unknown {dim} unit {u[dim]!r}; known: {sorted(table)}")
                self.units[dim] = u[dim]

    def read_field(self):
        f = self.mapping(("field",), {"builtin", "params", "polynomial", "constraint", "name"},
                         required=True)
        if ("builtin" in f) == ("polynomial" in f):
            raise self.err(("field",), "give exactly one of 'builtin' or 'polynomial'")
        if "builtin" in f:
            name = f["builtin"]
            if name not in FLOW_BUILTINS:
                raise self.err(("field", "builtin"),
                               f"unknown builtin {name!r}; known: {sorted(FLOW_BUILTINS)}")
            params = self.mapping(("field", "params"), _BUILTIN_PARAMS[name])
            kw = {}
            for k, v in params.items():
                if isinstance(v, list):
                    kw[k] = [self.number(("field", "params", k, i)) for i in range(len(v))]
                else:
                    kw[k] = self.number(("field", "params", k))
            if "constraint" in f:
                raise self.err(("field", "constraint"), "builtin fields fix their own constraint")
            try:
                return builtin(name, **kw)
            except ValueError as exc:
                raise self.err(("field", "params"), str(exc)) from None
        return self._polynomial()

    def _polynomial(self):
        base = ("field", "polynomial")
        self.mapping(base, {"dim", "terms"}, required=True)
        dim = self.number(base + ("dim",), positive=True, integer=True, required=True)
        terms_raw = self.get(base + ("terms",), required=True)
        if not isinstance(terms_raw, list) or not terms_raw:
            raise self.err(base + ("terms",), "expected a non-empty list of terms")
        terms = []
        for i, term in enumerate(terms_raw):
            p = base + ("terms", i)
            self.mapping(p, {"out", "exp", "coef"}, required=True)
            out = self.number(p + ("out",), integer=True, required=True)
            if not 0 <= out < dim:
                raise self.err(p + ("out",), f"output index must lie in [0, {dim})")
            exp = self.get(p + ("exp",), required=True)
            if (not isinstance(exp, list) or len(exp) != dim
                    or not all(isinstance(e, int) and not isinstance(e, bool) and e >= 0
                               for e in exp)):
                raise self.err(p + ("exp",), f"expected {dim} non-negative integers")
            coef = self.get(p + ("coef",), required=True)
            if isinstance(coef, list):
                if not coef:
                    raise self.err(p + ("coef",), "empty coefficient list")
                c = [self.number(p + ("coef", k)) for k in range(len(coef))]
            else:
                c = self.number(p + ("coef",))
            terms.append((out, tuple(exp), c))
        radius = None
        if self.get(("field", "constraint")) is not None:
            self.mapping(("field", "constraint"), {"sphere"})
            radius = self.quantity(("field", "constraint", "sphere"), "length", positive=True,
                                   required=True)
        name = self.get(("field", "name"), "polynomial")
        return PolynomialField.from_terms(dim, terms, name=str(name), sphere_radius=radius)

    def read_window(self, fld):
        self.mapping(("window",), {"s_max", "region", "degree_max"}, required=True)
        s_max = self.quantity(("window", "s_max"), "time", positive=True, required=True)
        degree_max = self.number(("window", "degree_max"), integer=True, positive=True)
        region = default_region(fld)
        if self.get(("window", "region")) is not None:
            rp = ("window", "region")
            r = self.mapping(rp, {"kind", "center", "radius", "lower", "upper"}, required=True)
            kind = r.get("kind")
            n = region.dim
            if kind == "ball":
                region = Region.ball(self.vector(rp + ("center",), n),
                                     self.quantity(rp + ("radius",), "length", positive=True,
                                                   required=True))
            elif kind == "box":
                lo, hi = self.vector(rp + ("lower",), n), self.vector(rp + ("upper",), n)
                if any(b <= a for a, b in zip(lo, hi)):
                    raise self.err(rp + ("upper",), "upper bounds must exceed lower bounds")
                region = Region.box(lo, hi)
            else:
                raise self.err(rp + ("kind",), "region kind must be 'ball' or 'box'")
        return Window(region=region, s_max=s_max, degree_max=degree_max)

    def read_numerics(self, sc):
        integ = self.mapping(("integrator",), {"tol", "h_min", "h_max", "bounding_box"})
        defaults = IntegratorOpts()
        sc.integrator = IntegratorOpts(
            tol=self.number(("integrator", "tol"), positive=True, default=defaults.tol),
            h_min=self.quantity(("integrator", "h_min"), "time", positive=True,
                                default=defaults.h_min),
            h_max=self.quantity(("integrator", "h_max"), "time", positive=True,
                                default=defaults.h_max),
            bounding_box=self.quantity(("integrator", "bounding_box"), "length", positive=True,
                                       default=defaults.bounding_box))
        if integ and sc.integrator.h_min >= sc.integrator.h_max:
            raise self.err(("integrator",), "h_min must be smaller than h_max")
        self.mapping(("rigidity",), {"dmax", "tol_root"})
        sc.dmax = self.number(("rigidity", "dmax"), integer=True, positive=True, default=DMAX)
        sc.tol_root = self.number(("rigidity", "tol_root"), positive=True, default=TOL_ROOT)
        self.mapping(("census",), {"per_dim", "transient"})
        sc.per_dim = self.number(("census", "per_dim"), integer=True, positive=True)
        sc.transient = self.quantity(("census", "transient"), "time", positive=True)

    def read_sweep(self, sc):
        tr = self.get(("t_range",), [-1.0, 1.0])
        if (not isinstance(tr, list) or len(tr) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in tr)
                or not tr[0] < tr[1]):
            raise self.err(("t_range",), "expected [t0, t1] with t0 < t1")
        t0, t1 = float(tr[0]), float(tr[1])
        grid = self.get(("t_grid",), 64)
        if isinstance(grid, list):
            pts = [self.number(("t_grid", i)) for i in range(len(grid))]
            if len(pts) < 2 or any(b <= a for a, b in zip(pts, pts[1:])):
                raise self.err(("t_grid",), "explicit grids must be strictly increasing")
            if pts[0] < t0 or pts[-1] > t1:
                raise self.err(("t_grid",), "grid points must lie inside t_range")
        else:
            n = self.number(("t_grid",), integer=True, positive=True)
            if n < 2:
                raise self.err(("t_grid",), "a sweep needs at least 2 grid points")
            pts = [float(v) for v in np.linspace(t0, t1, n)]
        sc.t_grid = pts
        self.mapping(("sweep",), {"n_checkpoints", "tol_event", "tol_margin"})
        sc.n_checkpoints = self.number(("sweep", "n_checkpoints"), integer=True, positive=True,
                                       default=8)
        sc.tol_event = self.number(("sweep", "tol_event"), positive=True, default=1e-8)
        sc.tol_margin = self.number(("sweep", "tol_margin"), positive=True, default=1e-3)
        return (t0, t1)

    def read_homology(self):
        h = self.get(("homology",), required=True)
        if isinstance(h, str):
            if h not in LEFSCHETZ_BUILTINS:
                raise self.err(("homology",), f"unknown homology builtin {h!r}; "
                               f"known: {sorted(LEFSCHETZ_BUILTINS)}")
            return LEFSCHETZ_BUILTINS[h]()
        self.mapping(("homology",), {"builtin", "matrices", "eigenvalues", "label"},
                     required=True)
        if "builtin" in h:
            if h["builtin"] not in LEFSCHETZ_BUILTINS:
                raise self.err(("homology", "builtin"), f"unknown homology builtin "
                               f"{h['builtin']!r}; known: {sorted(LEFSCHETZ_BUILTINS)}")
            return LEFSCHETZ_BUILTINS[h["builtin"]]()
        if ("matrices" in h) == ("eigenvalues" in h):
            raise self.err(("homology",), "give exactly one of 'matrices' or 'eigenvalues'")
        key = "matrices" if "matrices" in h else "eigenvalues"
        per = self.get(("homology", key))
        if not isinstance(per, list) or not per:
            raise self.err(("homology", key), "expected one entry per homology degree")
        label = str(h.get("label", ""))
        for k, entry in enumerate(per):
            p = ("homology", key, k)
            if not isinstance(entry, list):
                raise self.err(p, "expected a list")
            if key == "matrices":
                n = len(entry)
                for i, row in enumerate(entry):
                    if not isinstance(row, list) or len(row) != n:
                        raise self.err(p + (i,), f"matrix in degree {k} is not square")
                    for j in range(n):
                        self.number(p + (i, j))
            else:
                for i, v in enumerate(entry):
                    if isinstance(v, list):
                        if len(v) != 2:
                            raise self.err(p + (i,), "complex eigenvalues are [re, im]")
                        self.number(p + (i, 0))
                        self.number(p + (i, 1))
                    else:
                        self.number(p + (i,))
        try:
            if key == "matrices":
                return HomologyData.from_matrices(per, label=label)
            return HomologyData(per, label=label)
        except ValueError as exc:
            raise self.err(("homology", key), str(exc)) from None

    def read_map(self):
        m = self.get(("map",))
        if m is None:
            return None
        if m == "cat_map":
            return cat_map()
        self.mapping(("map",), {"kind", "matrix", "points", "images", "jacobians", "t",
                                "region", "label"}, required=True)
        kw = {k: v for k, v in m.items()}
        if "region" in kw:
            r = kw["region"]
            if not (isinstance(r, list) and len(r) == 2 and all(isinstance(c, list) for c in r)):
                raise self.err(("map", "region"), "expected [[x0, y0], [x1, y1]]")
            kw["region"] = tuple(tuple(float(v) for v in c) for c in r)
        if "kind" not in kw:
            raise self.err(("map",), "missing required key 'kind'")
        try:
            return DiscreteMapSpec(**kw)
        except (ValueError, TypeError) as exc:
            raise self.err(("map",), str(exc)) from None


_BUILTIN_PARAMS = {
    "hopf": {"radius"},
    "hopf_ab": {"a", "b", "radius"},
    "planar_plus": set(),
    "planar_minus": set(),
    "period_doubling": set(),
}


def parse_scenario(text, source="<scenario>"):
    """Parse and validate a scenario document; raises ``ConfigError`` with positions."""
    doc = _Doc(text, source)
    if not isinstance(doc.data, dict):
        raise doc.error((), "a scenario must be a mapping")
    rd = _Reader(doc)
    rd.mapping((), _TOP_KEYS)
    schema = rd.get(("schema",), required=True)
    if schema != SCHEMA:
        raise rd.err(("schema",), f"unsupported schema {schema!r}; expected {SCHEMA!r}")
    kind = rd.get(("kind",), required=True)
    if kind not in KINDS:
        raise rd.err(("kind",), f"kind must be one of {list(KINDS)}")
    rd.read_units()
    name = str(rd.get(("name",), "scenario"))
    seed = rd.number(("seed",), integer=True, default=0)
    outputs = rd.mapping(("outputs",), {"json", "csv"})
    sc = Scenario(name=name, kind=kind, seed=seed, outputs=dict(outputs), source=source,
                  units=dict(rd.units))
    if kind == "lefschetz":
        for k in ("field", "window", "t", "t_grid"):
            if rd.get((k,)) is not None:
                raise rd.err((k, "<key>"), f"{k!r} does not apply to lefschetz scenarios")
        sc.homology = rd.read_homology()
        sc.discrete_map = rd.read_map()
        sc.d_max = rd.number(("d_max",), integer=True, positive=True, default=6)
        return sc
    fld = rd.read_field()
    sc.window = rd.read_window(fld)
    rd.read_numerics(sc)
    if kind == "census":
        if rd.get(("t_grid",)) is not None or rd.get(("sweep",)) is not None:
            raise rd.err(("t_grid", "<key>") if rd.get(("t_grid",)) is not None
                         else ("sweep", "<key>"), "sweep settings in a census scenario")
        sc.field = fld
        sc.t = rd.number(("t",))
        if sc.t is None and _depends_on_t(fld):
            raise rd.err(("field",), "this field depends on t; give 't' for a census")
    else:
        if rd.get(("t",)) is not None:
            raise rd.err(("t", "<key>"), "a sweep takes t_range/t_grid, not t")
        t_range = rd.read_sweep(sc)
        sc.family = FamilySpec(fld, t_range, label=name)
    return sc


def _depends_on_t(fld):
    if isinstance(fld, PolynomialField):
        return bool(fld.depends_on_t)
    return bool(fld.is_suspension)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, source=str(path))
