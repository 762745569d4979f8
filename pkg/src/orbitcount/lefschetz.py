"""Exact orbit counting for mapping-torus fields.

Lefschetz numbers come from the eigenvalue data of the maps induced on
rational homology. Möbius inversion turns them into per-period orbit weights,
and a brute-force enumerator of periodic points cross-checks them on maps
where every periodic point can be listed.
"""

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np
from sympy import Matrix, Rational, divisors
from sympy.matrices.normalforms import hermite_normal_form
from sympy.functions.combinatorial.numbers import mobius as _sympy_mobius

from .errors import NonHyperbolicPoint, NonIntegerLefschetz, NonIntegerWeight, TooManyPoints
from .fields import PeriodDoublingMap, SuspensionField

TOL_INTEGER = 1e-6
MAX_POINTS = 10**6


def _as_complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex eigenvalues are written as [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


@dataclass
class HomologyData:
    """Eigenvalues of the induced maps on ``H_k(N; Q)`` for ``k = 0..dim N``.

    ``betti`` is optional; when given, each multiset must have that size.
    """

    per_degree: list
    betti: list | None = None
    label: str = ""

    def __post_init__(self):
        self.per_degree = [[_as_complex(v) for v in vals] for vals in self.per_degree]
        if not self.per_degree:
            raise ValueError("homology data needs at least degree 0")
        if self.betti is not None:
            if len(self.betti) != len(self.per_degree):
                raise ValueError("betti numbers and eigenvalue lists differ in length")
            for k, (b, vals) in enumerate(zip(self.betti, self.per_degree)):
                if int(b) != len(vals):
                    raise ValueError(f"degree {k}: {len(vals)} eigenvalues but b_{k} = {b}")
        self._power_sums = [_PowerSums(vals) for vals in self.per_degree]

    @classmethod
    def from_matrices(cls, matrices, label=""):
        """Homology data from integer (or rational) matrices of the induced maps."""
        per = []
        for m in matrices:
            a = np.atleast_2d(np.asarray(m, dtype=float)) if len(m) else np.zeros((0, 0))
            per.append(list(np.linalg.eigvals(a)) if a.size else [])
        return cls(per, betti=[len(v) for v in per], label=label)

    @classmethod
    def toral(cls, a, label="toral"):
        """Homology of a toral automorphism of T^2: ``(1; eig A; det A)``."""
        a = np.asarray(a, dtype=float)
        if a.shape != (2, 2):
            raise ValueError("toral homology data is built for 2x2 matrices")
        return cls([[1.0], list(np.linalg.eigvals(a)), [float(round(np.linalg.det(a)))]],
                   betti=[1, 2, 1], label=label)

    def power_sum(self, k, n):
        return self._power_sums[k](n)

    def to_dict(self):
        return {"label": self.label,
                "per_degree": [[[v.real, v.imag] for v in vals] for vals in self.per_degree],
                "betti": [len(v) for v in self.per_degree]}


class _PowerSums:
    """Exact ``sum_j lambda_j^n`` when the characteristic polynomial is integral.

    Induced maps on rational homology of a closed manifold preserve the integer
    lattice, so their characteristic polynomials have integer coefficients and
    Newton's identities give every power sum exactly. Otherwise fall back to
    floating point and let the integrality check decide.
    """

    def __init__(self, eigenvalues):
        self.eigenvalues = list(eigenvalues)
        self.coeffs = self._integer_char_poly()
        self._cache = {0: len(self.eigenvalues)}

    def _integer_char_poly(self):
        c = np.poly(self.eigenvalues) if self.eigenvalues else np.array([1.0])
        c = np.real_if_close(c, tol=1e6)
        if np.iscomplexobj(c):
            return None
        r = np.rint(c)
        if np.max(np.abs(c - r)) > TOL_INTEGER:
            return None
        return [int(v) for v in r]

    def __call__(self, n):
        if self.coeffs is None:
            return sum(v ** n for v in self.eigenvalues)
        # Newton's identities for a monic polynomial with coefficients c
        c = self.coeffs
        m = len(c) - 1
        for j in range(1, n + 1):
            if j in self._cache:
                continue
            s = -j * c[j] if j <= m else 0
            for i in range(1, min(j - 1, m) + 1):
                s -= c[i] * self._cache[j - i]
            self._cache[j] = s
        return self._cache[n]


def mobius(n):
    return int(_sympy_mobius(n))


def _round_integer(value, err, what):
    if isinstance(value, int):
        return value
    v = complex(value)
    r = round(v.real)
    if abs(v.imag) > TOL_INTEGER or abs(v.real - r) > TOL_INTEGER:
        raise err(f"{what} = {v} is not an integer")
    return int(r)


def lefschetz_number(h, n):
    """``L(f^n)``: alternating sum over degrees of the traces of the induced maps."""
    if int(n) < 1:
        raise ValueError("n must be a positive integer")
    total = 0
    for k in range(len(h.per_degree)):
        total += (-1) ** k * h.power_sum(k, int(n))
    return _round_integer(total, NonIntegerLefschetz, f"L(f^{n})")


def moebius_weights(h, d_max):
    """Orbit weights ``d -> n(Gamma_d)`` for ``d = 1..d_max`` by Möbius inversion."""
    if int(d_max) < 1:
        raise ValueError("d_max must be a positive integer")
    lef, out = {}, {}
    for d in range(1, int(d_max) + 1):
        lef[d] = lefschetz_number(h, d)
        s = sum(mobius(d // l) * lef[l] for l in divisors(d))
        if s % d:
            raise NonIntegerWeight(f"n(Gamma_{d}) = {Fraction(s, d)} is not an integer")
        out[d] = s // d
    return out


def inversion_residuals(h, d_max):
    """``L(f^n) - sum_{d | n} d n(Gamma_d)`` for each ``n``; all zero when consistent."""
    w = moebius_weights(h, d_max)
    return {n: lefschetz_number(h, n) - sum(d * w[d] for d in divisors(n))
            for n in range(1, int(d_max) + 1)}


def pi_series(h, order):
    """Coefficients ``[c_1, ..., c_order]`` of the truncated orbit series ``pi_f``.

    Built eigenvalue by eigenvalue, so it is an independent route to the Möbius
    weights; the two are compared before returning.
    """
    order = int(order)
    if order < 1:
        raise ValueError("order must be a positive integer")
    coeffs = []
    for d in range(1, order + 1):
        acc = 0
        for k in range(len(h.per_degree)):
            term = 0
            for l in divisors(d):
                term += mobius(d // l) * h.power_sum(k, l)
            acc += (-1) ** k * term
        if isinstance(acc, int):
            if acc % d:
                raise NonIntegerWeight(f"pi_f coefficient {d} = {Fraction(acc, d)} is not an integer")
            coeffs.append(acc // d)
        else:
            coeffs.append(_round_integer(acc / d, NonIntegerWeight, f"pi_f coefficient {d}"))
    expected = moebius_weights(h, order)
    if coeffs != [expected[d] for d in range(1, order + 1)]:
        raise NonIntegerWeight("orbit series disagrees with Möbius weights")
    return coeffs


# -- discrete maps ---------------------------------------------------------------------------

@dataclass
class DiscreteMapSpec:
    """A map ``f: N -> N`` whose periodic points can be enumerated.

    ``kind`` is ``toral`` (``matrix``), ``explicit_grid`` (``points``,
    ``images`` as indices into ``points``, ``jacobians``) or
    ``planar_polynomial`` (the return map of the period-doubling field at
    parameter ``t`` restricted to ``region``).
    """

    kind: str
    matrix: list | None = None
    points: list | None = None
    images: list | None = None
    jacobians: list | None = None
    t: float = 0.0
    region: tuple = ((-20.0, -20.0), (20.0, 20.0))
    label: str = ""
    extra: dict = dc_field(default_factory=dict)

    KINDS = ("toral", "explicit_grid", "planar_polynomial")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown discrete map kind {self.kind!r}; known: {list(self.KINDS)}")
        if self.kind == "toral":
            a = Matrix(self.matrix)
            if not a.is_square or any(not v.is_integer for v in a):
                raise ValueError("toral automorphisms need a square integer matrix")
            if abs(a.det()) != 1:
                raise ValueError("toral automorphisms need determinant +1 or -1")
            self.matrix = [[int(v) for v in row] for row in a.tolist()]
        elif self.kind == "explicit_grid":
            if self.points is None or self.images is None or self.jacobians is None:
                raise ValueError("explicit grids need points, images and jacobians")
            if not (len(self.points) == len(self.images) == len(self.jacobians)):
                raise ValueError("points, images and jacobians must have equal lengths")
            n = len(self.points)
            if any(not 0 <= int(i) < n for i in self.images):
                raise ValueError("explicit grid images must index into points")

    def homology(self):
        if self.kind == "toral" and len(self.matrix) == 2:
            return HomologyData.toral(self.matrix, label=self.label or "toral")
        raise ValueError(f"no homology data is derived for kind {self.kind!r}")

    def to_dict(self):
        d = {"kind": self.kind, "label": self.label}
        if self.kind == "toral":
            d["matrix"] = self.matrix
        elif self.kind == "explicit_grid":
            d.update(points=[[str(Fraction(v)) for v in p] for p in self.points],
                     images=[int(i) for i in self.images],
                     jacobians=[[[str(Fraction(v)) for v in r] for r in j] for j in self.jacobians])
        else:
            d.update(t=self.t, region=[list(self.region[0]), list(self.region[1])])
        return d


@dataclass
class PeriodicOrbit:
    """A periodic orbit of minimal period ``period``; ``indices[m-1]`` is the index of f^(m*period)."""

    points: list
    period: int
    indices: list

    def weight(self, degree):
        if degree == 1:
            return self.indices[0]
        if degree == 2:
            return (self.indices[1] - self.indices[0]) // 2
        return 0


def _sign(x):
    return 1 if x > 0 else (-1 if x < 0 else 0)


def _torus_fixed_points(a, n):
    """Exact fixed points of ``A^n`` on the torus, as tuples of Fractions in [0, 1)."""
    dim = a.rows
    b = a ** n - Matrix.eye(dim)
    det = b.det()
    if det == 0:
        raise NonHyperbolicPoint(f"A^{n} - I is singular; fixed points are not isolated")
    if abs(det) > MAX_POINTS:
        raise TooManyPoints(f"|det(A^{n} - I)| = {abs(det)} exceeds {MAX_POINTS}")
    h = hermite_normal_form(b)
    diag = [int(h[i, i]) for i in range(dim)]
    binv = b.inv()
    out = set()
    for r in np.ndindex(*diag):
        x = binv * Matrix(r)
        out.add(tuple(Fraction(int(v.p), int(v.q)) % 1 for v in x))
    if len(out) != abs(det):
        raise AssertionError("lattice enumeration missed fixed points")
    return out


def _torus_apply(a_rows, x):
    return tuple(sum(Fraction(a_rows[i][j]) * x[j] for j in range(len(x))) % 1
                 for i in range(len(x)))


def _toral_orbits(spec, n_max):
    a = Matrix(spec.matrix)
    rows = spec.matrix
    dmax = int(n_max)
    signs = {}
    for m in range(1, dmax + 1):
        det = (a ** m - Matrix.eye(a.rows)).det()
        if det == 0:
            raise NonHyperbolicPoint(f"A^{m} has eigenvalue 1")
        if abs(det) > MAX_POINTS:
            raise TooManyPoints(f"|det(A^{m} - I)| = {abs(det)} exceeds {MAX_POINTS}")
        signs[m] = _sign(int(det))
    seen = set()
    orbits = []
    for k in range(1, dmax + 1):
        for p in sorted(_torus_fixed_points(a, k)):
            if p in seen:
                continue
            orbit = [p]
            q = _torus_apply(rows, p)
            while q != p:
                orbit.append(q)
                q = _torus_apply(rows, q)
            seen.update(orbit)
            per = len(orbit)
            orbits.append(PeriodicOrbit(points=[[str(v) for v in pt] for pt in orbit], period=per,
                                        indices=[signs[m * per] if m * per in signs else None
                                                 for m in (1, 2)]))
    return orbits


def _grid_orbits(spec, n_max):
    images = [int(i) for i in spec.images]
    jac = [Matrix([[Rational(str(Fraction(v))) for v in row] for row in j]) for j in spec.jacobians]
    seen = set()
    orbits = []
    for start in range(len(images)):
        if start in seen:
            continue
        path, pos = [], {}
        i = start
        while i not in pos and i not in seen:
            pos[i] = len(path)
            path.append(i)
            i = images[i]
        seen.update(path)
        if i not in pos:
            continue
        cycle = path[pos[i]:]
        per = len(cycle)
        if per > n_max:
            continue
        d = Matrix.eye(jac[cycle[0]].rows)
        for j in cycle:
            d = jac[j] * d
        idx = []
        for m in (1, 2):
            det = (d ** m - Matrix.eye(d.rows)).det()
            if det == 0:
                raise NonHyperbolicPoint(f"grid cycle through point {cycle[0]} has a root-of-unity multiplier")
            idx.append(_sign(det))
        orbits.append(PeriodicOrbit(points=[[str(Fraction(v)) for v in spec.points[j]] for j in cycle],
                                    period=per, indices=idx))
    return orbits


def _planar_orbits(spec, n_max):
    from . import census as cz
    from .window import Region, Window

    field = SuspensionField(PeriodDoublingMap())
    window = Window(Region.box(*spec.region), s_max=float(n_max))
    found, _, _ = cz._map_orbits(field, window, spec.t)
    orbits = []
    for k, pts in found:
        _, d = field.map.iterate(pts[0], k, spec.t)
        idx = []
        for m in (1, 2):
            det = float(np.linalg.det(np.linalg.matrix_power(d, m) - np.eye(2)))
            if abs(det) < 1e-9:
                raise NonHyperbolicPoint(f"period-{k} orbit at {pts[0]} is not hyperbolic")
            idx.append(_sign(det))
        orbits.append(PeriodicOrbit(points=[[float(v) for v in p] for p in pts], period=k,
                                    indices=idx))
    orbits.sort(key=lambda o: (o.period, o.points[0]))
    return orbits


def periodic_orbits(spec, n_max):
    """Every periodic orbit of minimal period at most ``n_max``."""
    if int(n_max) < 1:
        raise ValueError("n_max must be a positive integer")
    if spec.kind == "toral":
        return _toral_orbits(spec, n_max)
    if spec.kind == "explicit_grid":
        return _grid_orbits(spec, n_max)
    return _planar_orbits(spec, n_max)


def periodic_points(spec, n):
    """All points ``p`` with ``f^n(p) = p``."""
    return [p for o in periodic_orbits(spec, n) if n % o.period == 0 for p in o.points]


def brute_force_orbit_count(spec, n):
    """Weights ``d -> n(Gamma_d)`` for ``d = 1..n`` from an explicit list of periodic orbits."""
    orbits = periodic_orbits(spec, n)
    out = {}
    for d in range(1, int(n) + 1):
        out[d] = sum(o.weight(d // o.period) for o in orbits if d % o.period == 0)
    return out


def lefschetz_report(h, d_max, spec=None):
    """Everything the CLI prints for a Lefschetz scenario."""
    weights = moebius_weights(h, d_max)
    lef = {n: lefschetz_number(h, n) for n in range(1, int(d_max) + 1)}
    report = {
        "homology": h.to_dict(),
        "d_max": int(d_max),
        "lefschetz": {str(n): v for n, v in lef.items()},
        "weights": {str(d): v for d, v in weights.items()},
        "pi_series": pi_series(h, d_max),
        "inversion_ok": all(v == 0 for v in inversion_residuals(h, d_max).values()),
    }
    if spec is not None:
        brute = brute_force_orbit_count(spec, d_max)
        report["map"] = spec.to_dict()
        report["brute_force"] = {str(d): v for d, v in brute.items()}
        report["oracle_agrees"] = brute == weights
    return report


CAT_MAP = [[2, 1], [1, 1]]


def cat_map():
    return DiscreteMapSpec(kind="toral", matrix=CAT_MAP, label="cat_map")


def identity_s2():
    """Identity on the 2-sphere."""
    return HomologyData([[1.0], [], [1.0]], betti=[1, 0, 1], label="identity_s2")


LEFSCHETZ_BUILTINS = {"cat_map": lambda: cat_map().homology(), "identity_s2": identity_s2}
