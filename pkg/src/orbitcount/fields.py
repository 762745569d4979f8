"""Vector field specifications and the builtin catalog.

Every flow field in the catalog is a polynomial in the chart coordinates whose
coefficients are polynomials in the family parameter ``t``. Complex-plane
fields are realized on R^2 via ``z = x + i*y``. The period-doubling family is
the suspension of a planar diffeomorphism and is handled through its return
map instead of an ODE.
"""

from dataclasses import dataclass, field
import math
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import OffManifold
from .validation import check_vector

SPHERE_TOL = 1e-6


class Jet(NamedTuple):
    point: np.ndarray
    value: np.ndarray
    jacobian: np.ndarray


class FieldSpec:
    """Common interface for the fields the census and tracker understand."""

    ambient_dim: int
    name: str
    params: dict
    sphere_radius: float | None = None
    is_suspension = False

    def evaluate(self, x, t=None):
        raise NotImplementedError

    def check_point(self, x):
        x = check_vector(x, self.ambient_dim)
        if self.sphere_radius is not None:
            r = float(np.linalg.norm(x))
            if abs(r - self.sphere_radius) > SPHERE_TOL:
                raise OffManifold(
                    f"|x| = {r:.9g} is off the sphere of radius {self.sphere_radius}")
        return x

    def manifold_dim(self):
        return self.ambient_dim - (1 if self.sphere_radius is not None else 0)

    def describe(self):
        d = {"name": self.name, "ambient_dim": self.ambient_dim,
             "params": {k: self.params[k] for k in sorted(self.params)}}
        if self.sphere_radius is not None:
            d["constraint"] = {"sphere": self.sphere_radius}
        return d


class PolynomialField(FieldSpec):
    """Polynomial vector field with coefficients polynomial in ``t``.

    Parameters
    ----------
    exps : (T, n) int array of monomial exponents.
    coef_layers : (K, T, n) array; the coefficient at parameter ``t`` is
        ``sum_k t**k * coef_layers[k]``.
    """

    def __init__(self, exps, coef_layers, *, name="polynomial", params=None,
                 sphere_radius=None):
        exps = np.asarray(exps, dtype=np.int64)
        layers = np.asarray(coef_layers, dtype=float)
        if layers.ndim == 2:
            layers = layers[None]
        if exps.ndim != 2 or layers.shape[1:] != (exps.shape[0], exps.shape[1]):
            raise ValueError("exponent and coefficient tables do not match")
        if np.any(exps < 0):
            raise ValueError("negative exponents")
        if not np.all(np.isfinite(layers)):
            raise ValueError("non-finite polynomial coefficients")
        self.exps = exps
        self.coef_layers = layers
        self.ambient_dim = exps.shape[1]
        self.name = name
        self.params = dict(params or {})
        self.sphere_radius = None if sphere_radius is None else float(sphere_radius)
        self._cache = {}

    @classmethod
    def from_terms(cls, dim, terms, **kw):
        """Build from ``(out_index, exponents, coefficients_in_t)`` triples."""
        keys = {}
        rows = []
        entries = []
        kmax = 1
        for out, e, c in terms:
            e = tuple(int(v) for v in e)
            if len(e) != dim:
                raise ValueError(f"exponent tuple {e} has wrong length for dim {dim}")
            if not 0 <= int(out) < dim:
                raise ValueError(f"output index {out} out of range")
            c = np.atleast_1d(np.asarray(c, dtype=float))
            kmax = max(kmax, c.size)
            if e not in keys:
                keys[e] = len(rows)
                rows.append(e)
            entries.append((keys[e], int(out), c))
        exps = np.array(rows, dtype=np.int64).reshape(-1, dim)
        layers = np.zeros((kmax, len(rows), dim))
        for j, i, c in entries:
            layers[:c.size, j, i] += c
        return cls(exps, layers, **kw)

    @property
    def depends_on_t(self):
        return self.coef_layers.shape[0] > 1 and np.any(self.coef_layers[1:] != 0)

    @property
    def degree(self):
        return int(self.exps.sum(axis=1).max()) if self.exps.size else 0

    def coefficients(self, t=None):
        key = None if t is None else float(t)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        tv = 0.0 if t is None else float(t)
        coef = np.zeros(self.coef_layers.shape[1:])
        p = 1.0
        for layer in self.coef_layers:
            coef += p * layer
            p *= tv
        coef = np.ascontiguousarray(coef)
        if len(self._cache) > 256:
            self._cache.clear()
        self._cache[key] = coef
        return coef

    def evaluate(self, x, t=None):
        x = self.check_point(x)
        return self.evaluate_unchecked(x, t)

    def evaluate_unchecked(self, x, t=None):
        n = self.ambient_dim
        val = np.zeros(n)
        jac = np.zeros((n, n))
        _kernels.poly_eval(np.ascontiguousarray(x, dtype=float), self.exps,
                           self.coefficients(t), val, jac, True)
        return Jet(np.array(x, dtype=float), val, jac)

    def value(self, x, t=None):
        n = self.ambient_dim
        val = np.zeros(n)
        jac = np.zeros((1, 1))
        _kernels.poly_eval(np.ascontiguousarray(x, dtype=float), self.exps,
                           self.coefficients(t), val, jac, False)
        return val

    def scaled(self, c):
        """The field ``c * Y``."""
        return PolynomialField(self.exps, self.coef_layers * float(c), name=self.name,
                               params=dict(self.params, scale=float(c)),
                               sphere_radius=self.sphere_radius)

    def describe(self):
        d = super().describe()
        if self.name == "polynomial":
            d["exponents"] = self.exps.tolist()
            d["coefficients"] = self.coef_layers.tolist()
        return d


# -- smooth bump used by the period-doubling map --------------------------------

def _psi(u):
    return math.exp(-1.0 / u) if u > 0 else 0.0


def _dpsi(u):
    return math.exp(-1.0 / u) / (u * u) if u > 0 else 0.0


def bump(x, height=0.01, inner=20.0, outer=40.0):
    """Even smooth bump: ``height`` on [-inner, inner], zero off [-outer, outer]."""
    u = (outer - abs(x)) / (outer - inner)
    a, b = _psi(u), _psi(1.0 - u)
    return height * a / (a + b)


def dbump(x, height=0.01, inner=20.0, outer=40.0):
    u = (outer - abs(x)) / (outer - inner)
    a, b = _psi(u), _psi(1.0 - u)
    da, db = _dpsi(u), -_dpsi(1.0 - u)
    ds = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return height * ds * (-math.copysign(1.0, x) / (outer - inner))


class PeriodDoublingMap:
    """``f_t(x, y) = (-x + eta(x) (x^2 - x t), -2 y)`` with a smooth bump ``eta``."""

    dim = 2

    def apply(self, p, t):
        x, y = float(p[0]), float(p[1])
        return np.array([-x + bump(x) * (x * x - x * t), -2.0 * y])

    def jacobian(self, p, t):
        x = float(p[0])
        dx = -1.0 + dbump(x) * (x * x - x * t) + bump(x) * (2.0 * x - t)
        return np.array([[dx, 0.0], [0.0, -2.0]])

    def iterate(self, p, k, t):
        """``(f^k(p), D f^k(p))``."""
        q = np.array(p, dtype=float)
        d = np.eye(2)
        for _ in range(int(k)):
            d = self.jacobian(q, t) @ d
            q = self.apply(q, t)
        return q, d


class SuspensionField(FieldSpec):
    """The field d/d(theta) on the mapping torus of a planar map.

    Chart coordinates are ``(theta, x, y)``; the return map to ``theta = 0``
    after one unit of time is the map itself.
    """

    is_suspension = True

    def __init__(self, planar_map, *, name="period_doubling", params=None):
        self.map = planar_map
        self.ambient_dim = 1 + planar_map.dim
        self.name = name
        self.params = dict(params or {})
        self.sphere_radius = None

    def evaluate(self, x, t=None):
        x = self.check_point(x)
        return self.evaluate_unchecked(x, t)

    def evaluate_unchecked(self, x, t=None):
        v = np.zeros(self.ambient_dim)
        v[0] = 1.0
        return Jet(np.array(x, dtype=float), v, np.zeros((self.ambient_dim,) * 2))

    def value(self, x, t=None):
        v = np.zeros(self.ambient_dim)
        v[0] = 1.0
        return v


@dataclass
class FamilySpec:
    """A one-parameter family ``t -> Y_t`` over ``t_range``."""

    field: FieldSpec
    t_range: tuple = (-1.0, 1.0)
    label: str = ""
    meta: dict = field(default_factory=dict)


# -- catalog --------------------------------------------------------------------

def hopf(radius=1.0):
    """``H(x, y) = (i x, i y)`` on the sphere in C^2 = R^4."""
    return hopf_ab(1.0, 1.0, radius=radius, name="hopf")


def hopf_ab(a, b, radius=1.0, name="hopf_ab"):
    """``H_ab(x, y) = (i a x, i b y)``; ``a``/``b`` may be (value, slope-in-t) pairs."""
    a_c = np.atleast_1d(np.asarray(a, dtype=float))
    b_c = np.atleast_1d(np.asarray(b, dtype=float))
    terms = [
        (0, (0, 1, 0, 0), -a_c), (1, (1, 0, 0, 0), a_c),
        (2, (0, 0, 0, 1), -b_c), (3, (0, 0, 1, 0), b_c),
    ]
    params = {"a": a_c.tolist() if a_c.size > 1 else float(a_c[0]),
              "b": b_c.tolist() if b_c.size > 1 else float(b_c[0])}
    return PolynomialField.from_terms(4, terms, name=name, params=params,
                                      sphere_radius=radius)


def planar(sign, omega=1.0):
    """``Y(t, z) = (-t + i*omega + sign*|z|^2) z`` on C = R^2."""
    s = float(sign)
    terms = [
        (0, (1, 0), [0.0, -1.0]), (0, (0, 1), -omega),
        (1, (1, 0), omega), (1, (0, 1), [0.0, -1.0]),
        (0, (3, 0), s), (0, (1, 2), s),
        (1, (2, 1), s), (1, (0, 3), s),
    ]
    name = "planar_plus" if s > 0 else "planar_minus"
    return PolynomialField.from_terms(2, terms, name=name, params={"omega": omega})


def planar_plus():
    return planar(+1.0)


def planar_minus():
    return planar(-1.0)


def period_doubling():
    return SuspensionField(PeriodDoublingMap())


def linear_field(a):
    """``Y(x) = A x`` as a polynomial field."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    terms = []
    for i in range(n):
        for k in range(n):
            if a[i, k] != 0.0:
                e = [0] * n
                e[k] = 1
                terms.append((i, tuple(e), a[i, k]))
    if not terms:
        terms.append((0, (0,) * n, 0.0))
    return PolynomialField.from_terms(n, terms, name="linear", params={})


def zero_field(n):
    return PolynomialField.from_terms(n, [(0, (0,) * n, 0.0)], name="zero")


FLOW_BUILTINS = {
    "hopf": hopf,
    "hopf_ab": hopf_ab,
    "planar_plus": planar_plus,
    "planar_minus": planar_minus,
    "period_doubling": period_doubling,
}


def builtin(name, **params):
    try:
        ctor = FLOW_BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown builtin field {name!r}; "
                         f"known: {sorted(FLOW_BUILTINS)}") from None
    return ctor(**params)
