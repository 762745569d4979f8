"""Ghost-orbit and periodic-orbit census of a vector field inside a window.

The census is assembled in three passes. Zeros are found by Newton's method
from a grid and decorated with their complex eigen-planes (ghost orbits).
Closed orbits are found by single shooting on ``(x, s)`` from candidates
produced by transient integration and a recurrence filter, then reduced to
their minimal period, re-based at a canonical phase and deduplicated. Finally
the degree-``d`` covers admitted by the period cutoff are synthesized and
weighted from the holonomy of the embedded orbit.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator

from .errors import (
    BlowUp,
    CollapsedToZero,
    FlowDirectionNotPreserved,
    IncompleteCensus,
    NoConvergence,
    NotRigid,
    NotSuperRigid,
    NotSuperRigidGhost,
    OrbitCountError,
    StepFailure,
)
from .flow import DEFAULT_OPTS, IntegratorOpts, flow, flow_samples, flow_with_monodromy
from .holonomy import DMAX, TOL_ROOT, RigidityReport, WeightedOrbitClass, classify_holonomy, weight_ghost, weight_periodic
from .linalg_core import Spectrum, eigenvalues
from .validation import check_positive, check_vector
from .window import Region, Window, default_region

TOL_DEDUP_ZERO = 1e-7
TOL_DEDUP_ORBIT = 1e-5
TOL_PERIOD_REL = 1e-6
TOL_TRACE = 1e-8
TOL_ORBIT = 1e-10
TOL_FLOW_DIR = 1e-4
MAX_NEWTON = 50
MAX_MULTIPLICITY = 64
N_SAMPLES = 64

_SCAN_OPTS = IntegratorOpts(tol=1e-7)
# generic direction used to pick a canonical phase on each orbit
_PHASE_FUNCTIONAL = np.array([1.0, 0.6180339887, 0.3819660113, 0.2360679775,
                              0.1458980338, 0.0901699437, 0.0557280900, 0.0344418537])


# -- records ----------------------------------------------------------------------

@dataclass
class ZeroRec:
    point: np.ndarray
    jacobian: np.ndarray
    spectrum: Spectrum
    det: float
    tangent_basis: np.ndarray | None = None


@dataclass
class GhostOrbitRec:
    zero: np.ndarray
    eigenvalue: complex
    plane_basis: np.ndarray
    trace: float
    degree: int
    period: float
    weight: int | None
    kind: str
    zero_id: int = 0
    error: str | None = None

    def to_dict(self):
        return {
            "kind": self.kind,
            "zero": self.zero.tolist(),
            "eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag],
            "plane_basis": self.plane_basis.tolist(),
            "trace": self.trace,
            "degree": self.degree,
            "period": self.period,
            "weight": self.weight,
            "zero_id": self.zero_id,
            "error": self.error,
        }


@dataclass
class PeriodicOrbitRec:
    base_point: np.ndarray
    minimal_period: float
    degree: int
    samples: np.ndarray
    monodromy: np.ndarray
    holonomy: np.ndarray
    rigidity: RigidityReport | None
    orbit_class: WeightedOrbitClass | None
    residual: float = 0.0
    margin: float = math.inf
    orbit_id: int = 0
    error: str | None = None

    @property
    def total_period(self):
        return self.degree * self.minimal_period

    @property
    def weight(self):
        return None if self.orbit_class is None else self.orbit_class.weight

    @property
    def epsilon1(self):
        return None if self.orbit_class is None else self.orbit_class.epsilon1

    @property
    def epsilon2(self):
        return None if self.orbit_class is None else self.orbit_class.epsilon2

    def to_dict(self, include_samples=True):
        d = {
            "orbit_id": self.orbit_id,
            "base_point": self.base_point.tolist(),
            "minimal_period": self.minimal_period,
            "degree": self.degree,
            "total_period": self.total_period,
            "monodromy": self.monodromy.tolist(),
            "holonomy": self.holonomy.tolist(),
            "rigidity": None if self.rigidity is None else self.rigidity.to_dict(),
            "epsilon1": self.epsilon1,
            "epsilon2": self.epsilon2,
            "weight": self.weight,
            "residual": self.residual,
            "margin": self.margin,
            "error": self.error,
        }
        if include_samples:
            d["samples"] = self.samples.tolist()
        return d


@dataclass
class Census:
    window: Window
    t: float | None
    zeros: list
    ghosts: list
    orbits: list
    diagnostics: dict = dc_field(default_factory=dict)
    settings: dict = dc_field(default_factory=dict)

    @property
    def records(self):
        return list(self.ghosts) + list(self.orbits)

    @property
    def total_weight(self):
        return sum(r.weight for r in self.records if r.weight is not None)

    @property
    def embedded(self):
        return [o for o in self.orbits if o.degree == 1]

    def weights_by_degree(self):
        out = {}
        for r in self.records:
            if r.weight is not None:
                out[r.degree] = out.get(r.degree, 0) + r.weight
        return dict(sorted(out.items()))

    def weights_by_period_index(self):
        """Weights grouped by rounded total period (meaningful for return-map suspensions)."""
        out = {}
        for r in self.orbits:
            if r.weight is not None:
                k = int(round(r.total_period))
                out[k] = out.get(k, 0) + r.weight
        return dict(sorted(out.items()))

    def records_by_period_index(self, k):
        return [r for r in self.orbits if int(round(r.total_period)) == k]

    @property
    def unweighted(self):
        return sum(1 for r in self.records if r.weight is None)

    def to_dict(self, include_samples=True):
        return {
            "t": self.t,
            "window": self.window.to_dict(),
            "settings": self.settings,
            "zeros": [{"point": z.point.tolist(),
                       "eigenvalues": [[e.real, e.imag] for e in z.spectrum.eigenvalues],
                       "det": z.det} for z in self.zeros],
            "ghosts": [g.to_dict() for g in self.ghosts],
            "orbits": [o.to_dict(include_samples) for o in self.orbits],
            "total_weight": self.total_weight,
            "weights_by_degree": {str(k): v for k, v in self.weights_by_degree().items()},
            "unweighted_records": self.unweighted,
            "diagnostics": self.diagnostics,
        }


# -- zeros and ghosts ---------------------------------------------------------------

def _tangent_basis(x):
    _, _, vt = np.linalg.svd(np.asarray(x, dtype=float)[None, :])
    return vt[1:].T


def _default_per_dim(field):
    if field.sphere_radius is not None:
        return 3
    return {1: 41, 2: 11, 3: 6, 4: 4}.get(field.ambient_dim, 3)


def _seed_points(field, region, per_dim):
    pts = region.grid(per_dim)
    if field.sphere_radius is None:
        return pts
    out = []
    for p in pts:
        r = np.linalg.norm(p)
        if r < 1e-9:
            continue
        q = p * field.sphere_radius / r
        if not any(np.linalg.norm(q - o) < 1e-9 for o in out):
            out.append(q)
    return np.array(out).reshape(-1, field.ambient_dim)


def _zero_newton(field, x, t, max_iter=40):
    r = field.sphere_radius
    for _ in range(max_iter):
        jet = field.evaluate_unchecked(x, t)
        resid = float(np.linalg.norm(jet.value))
        if r is not None:
            resid = max(resid, abs(float(x @ x) - r * r))
        if resid < 1e-13 * (1.0 + float(np.linalg.norm(x))):
            return x
        a, b = jet.jacobian, -jet.value
        if r is not None:
            a = np.vstack([a, 2.0 * x])
            b = np.append(b, r * r - float(x @ x))
        dx = np.linalg.lstsq(a, b, rcond=None)[0]
        step = float(np.linalg.norm(dx))
        if step > 1.0 + np.linalg.norm(x):
            dx *= (1.0 + np.linalg.norm(x)) / step
        x = x + dx
        if r is not None:
            x = x * r / np.linalg.norm(x)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e6:
            return None
        if step < 1e-15:
            break
    jet = field.evaluate_unchecked(x, t)
    return x if np.linalg.norm(jet.value) < 1e-10 else None


def zero_record(field, x, t=None):
    """Jacobian data of a zero, restricted to the sphere's tangent space if constrained."""
    jet = field.evaluate_unchecked(x, t)
    basis = None
    jac = jet.jacobian
    if field.sphere_radius is not None:
        basis = _tangent_basis(x)
        jac = basis.T @ jac @ basis
    spec = eigenvalues(jac)
    return ZeroRec(point=np.array(x, dtype=float), jacobian=jac, spectrum=spec,
                   det=float(np.linalg.det(jac)), tangent_basis=basis)


def find_zeros(field, region=None, t=None, per_dim=None, diagnostics=None):
    """Newton-refined zeros inside ``region``, deduplicated at 1e-7."""
    if field.is_suspension:
        return []
    region = region or default_region(field)
    per_dim = per_dim or _default_per_dim(field)
    found = []
    failures = 0
    for seed in _seed_points(field, region, per_dim):
        x = _zero_newton(field, np.array(seed, dtype=float), t)
        if x is None:
            failures += 1
            continue
        if region.margin(x) <= 0:
            continue
        if any(np.linalg.norm(x - z) < TOL_DEDUP_ZERO for z in found):
            continue
        found.append(x)
    found.sort(key=lambda p: tuple(np.round(p, 9)))
    if diagnostics is not None:
        diagnostics["zero_seeds"] = int(len(_seed_points(field, region, per_dim)))
        diagnostics["zero_newton_failures"] = failures
    return [zero_record(field, x, t) for x in found]


def eigen_plane(jacobian, lam):
    """Orthonormal basis (rows) of the real invariant plane of the pair ``lam, conj(lam)``."""
    n = jacobian.shape[0]
    _, _, vh = np.linalg.svd(jacobian - lam * np.eye(n))
    v = vh[-1].conj()
    q, _ = np.linalg.qr(np.column_stack([v.real, v.imag]))
    return q.T


def enumerate_ghosts(field, t=None, s_max=None, region=None, zeros=None, degree_max=None,
                     tol_trace=TOL_TRACE, diagnostics=None):
    """One record per zero, complex pair with trace <= tol_trace, and admissible degree."""
    s_max = check_positive(s_max, "s_max")
    if zeros is None:
        zeros = find_zeros(field, region, t)
    out = []
    errors = 0
    for zid, z in enumerate(zeros):
        for lam in z.spectrum.eigenvalues:
            if lam.imag <= 0.0:
                continue
            trace = 2.0 * lam.real
            if trace > tol_trace:
                continue
            kind = "boundary" if abs(trace) < tol_trace else "ghost"
            plane = eigen_plane(z.jacobian, lam)
            if z.tangent_basis is not None:
                plane = (z.tangent_basis @ plane.T).T
            d = 1
            while 2.0 * math.pi * d / lam.imag <= s_max:
                if degree_max is not None and d > degree_max:
                    break
                err = None
                weight = None
                if kind == "boundary":
                    err = "boundary orbit carries no weight"
                else:
                    try:
                        weight = weight_ghost(z.jacobian, d)
                    except NotSuperRigidGhost as exc:
                        err = str(exc)
                        errors += 1
                out.append(GhostOrbitRec(
                    zero=z.point.copy(), eigenvalue=lam, plane_basis=plane, trace=trace,
                    degree=d, period=2.0 * math.pi * d / lam.imag, weight=weight,
                    kind=kind, zero_id=zid, error=err))
                d += 1
    if diagnostics is not None:
        diagnostics["ghost_rigidity_errors"] = errors
    return out


# -- holonomy -----------------------------------------------------------------------

def extract_holonomy(monodromy, flow_dir, normal=None, tol=TOL_FLOW_DIR):
    """Induced map on the quotient by the flow direction, in an orthonormal basis of its complement.

    ``normal`` (optional) is an extra direction removed as well, used for the
    radial direction of a sphere constraint.
    """
    m = np.asarray(monodromy, dtype=float)
    f = check_vector(flow_dir, m.shape[0], name="flow_dir")
    nf = float(np.linalg.norm(f))
    if nf < 1e-9:
        raise FlowDirectionNotPreserved("flow direction is numerically zero")
    resid = float(np.linalg.norm(m @ f - f)) / nf
    if resid > tol:
        raise FlowDirectionNotPreserved(
            f"monodromy moves the flow direction by {resid:.3g} (relative)")
    q = normal_basis(f, normal)
    return q.T @ m @ q


def normal_basis(flow_dir, normal=None):
    """Orthonormal columns spanning the complement of the flow direction (and ``normal``)."""
    f = np.asarray(flow_dir, dtype=float)
    constraints = [f / np.linalg.norm(f)]
    if normal is not None:
        constraints.append(np.asarray(normal, dtype=float) / np.linalg.norm(normal))
    _, _, vt = np.linalg.svd(np.array(constraints))
    return vt[len(constraints):].T


# -- shooting -----------------------------------------------------------------------

def _is_collapsed(field, x, s, t):
    v = field.value(x, t)
    return float(np.linalg.norm(v)) * s < 1e-7 * (1.0 + float(np.linalg.norm(x)))


def _collapse_error(field, x, s, t):
    jet = field.evaluate_unchecked(x, t)
    near = False
    try:
        for lam in eigenvalues(jet.jacobian).eigenvalues:
            k = lam.imag * s / (2.0 * math.pi)
            if abs(lam.real) * s < 0.5 and round(k) >= 1 and abs(k - round(k)) < 0.05:
                near = True
    except OrbitCountError:
        pass
    return CollapsedToZero("shooting converged onto a zero of the field",
                           point=x.tolist(), near_ghost=near)


class _Covered(Exception):
    pass


def _shoot(field, x, s, t, opts, tol=TOL_ORBIT, max_iter=MAX_NEWTON, covered=None,
           backward=False):
    """Newton on ``(x, s)`` for ``F(s, x) = x`` with a phase condition at the guess.

    ``covered(x, s)`` may abort the iteration early once it lands on a known orbit.
    With ``backward`` the orbit is shot in reverse time, which is what makes
    repelling orbits reachable; the returned monodromy is always the forward one.
    """
    if backward and field.is_suspension:
        raise ValueError("suspension flows are shot forward only")
    sign = -1.0 if backward else 1.0
    n = field.ambient_dim
    r = field.sphere_radius
    x = np.array(x, dtype=float)
    if r is not None:
        x *= r / np.linalg.norm(x)
    anchor = x.copy()
    v = field.value(anchor, t)
    nv = float(np.linalg.norm(v))
    if nv < 1e-12:
        raise _collapse_error(field, x, s, t)
    v = v / nv
    scale = 1.0 + float(np.linalg.norm(x))

    def evaluate(xx, ss):
        try:
            xe, m = flow_with_monodromy(field, xx, sign * ss, t, opts)
        except (BlowUp, StepFailure) as exc:
            return None, None, math.inf, str(exc)
        return xe, m, float(np.linalg.norm(xe - xx)), None

    xe, m, res, err = evaluate(x, s)
    if xe is None:
        raise NoConvergence(f"initial shooting failed: {err}", escaped=True)
    for it in range(max_iter):
        if _is_collapsed(field, x, s, t):
            raise _collapse_error(field, x, s, t)
        if res < tol:
            return x, s, _forward(m, backward), res, it
        ye = sign * field.value(xe, t)
        a = np.zeros((n + 1 + (r is not None), n + 1))
        b = np.zeros(a.shape[0])
        a[:n, :n] = m - np.eye(n)
        a[:n, n] = ye
        b[:n] = x - xe
        a[n, :n] = v
        b[n] = -float(v @ (x - anchor))
        if r is not None:
            a[n + 1, :n] = 2.0 * x
            b[n + 1] = r * r - float(x @ x)
        delta = np.linalg.lstsq(a, b, rcond=None)[0]
        dx, ds = delta[:n], float(delta[n])
        step = float(np.linalg.norm(dx))
        cap = 0.25 * scale
        lam = min(1.0, cap / step) if step > 0 else 1.0
        if ds != 0.0 and s + lam * ds <= 0.1 * s:
            lam = min(lam, 0.9 * s / abs(ds))
        accepted = False
        for _ in range(10):
            xn = x + lam * dx
            if r is not None:
                xn *= r / np.linalg.norm(xn)
            sn = s + lam * ds
            xe_n, m_n, res_n, _ = evaluate(xn, sn)
            if xe_n is not None and (res_n < res * (1.0 - 1e-4 * lam) or res_n < tol):
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            # the integrator's own noise floor is reached
            if res < 1e3 * tol and step < 1e-9 * scale:
                return x, s, _forward(m, backward), res, it
            if float(np.linalg.norm(field.value(x, t))) < 0.1 * nv:
                raise _collapse_error(field, x, s, t)
            raise NoConvergence(f"shooting stalled at residual {res:.3g}", escaped=xe_n is None)
        x, s, xe, m, res = xn, sn, xe_n, m_n, res_n
        if covered is not None and covered(x, s):
            raise _Covered()
    if res < tol:
        return x, s, _forward(m, backward), res, max_iter
    if float(np.linalg.norm(field.value(x, t))) < 0.1 * nv:
        raise _collapse_error(field, x, s, t)
    raise NoConvergence(f"no convergence in {max_iter} iterations (residual {res:.3g})")


def _forward(m, backward):
    return np.linalg.inv(m) if backward else m


def prefers_backward(m):
    """True when the orbit contracts more strongly in reverse time."""
    mods = np.abs(np.linalg.eigvals(m))
    return bool(mods.max() * mods.min() > 1.0 + 1e-9)


def _shoot_either(field, x, s, t, opts, covered=None, backward=False):
    """Shoot in the preferred time direction, then in the other one."""
    try:
        return _shoot(field, x, s, t, opts, covered=covered, backward=backward)
    except NoConvergence as exc:
        if field.is_suspension or not exc.escaped:
            raise
        return _shoot(field, x, s, t, opts, covered=covered, backward=not backward)


def _minimal_period(field, x, s, t, opts, kmax=MAX_MULTIPLICITY):
    """Largest k <= kmax with ``F(s/k, x) = x``; returns ``s/k``."""
    ks = list(range(kmax, 1, -1))
    times = np.array([s / k for k in ks])
    try:
        _, xs = flow(field, x, s, t, opts, sample_times=times)
    except (BlowUp, StepFailure):
        return s
    scale = 1.0 + float(np.linalg.norm(x))
    for k, p in zip(ks, xs):
        if np.linalg.norm(p - x) < 1e-6 * scale:
            return s / k
    return s


def _canonical_phase(field, x, s, t, opts):
    """Point of the orbit where a fixed generic linear functional is maximal."""
    c = _PHASE_FUNCTIONAL[: field.ambient_dim]
    samples = flow_samples(field, x, s, t, opts, n=N_SAMPLES)
    j = int(np.argmax(samples @ c))
    p = samples[j].copy()
    dt = s / N_SAMPLES
    for _ in range(8):
        jet = field.evaluate_unchecked(p, t)
        h = float(c @ jet.value)
        hp = float(c @ (jet.jacobian @ jet.value))
        if hp >= 0.0:
            break
        delta = max(-dt, min(dt, -h / hp))
        if abs(delta) < 1e-14 * s:
            break
        p = flow(field, p, delta, t, opts)
    if field.sphere_radius is not None:
        p *= field.sphere_radius / np.linalg.norm(p)
    return p


@dataclass
class _Embedded:
    x: np.ndarray
    s1: float
    monodromy: np.ndarray
    holonomy: np.ndarray
    report: RigidityReport | None
    samples: np.ndarray
    residual: float
    error: str | None = None
    basis: np.ndarray | None = None

    @property
    def extent(self):
        return float(np.ptp(self.samples, axis=0).max())


def _finish_embedded(field, x, s, m, res, t, opts, dmax=DMAX, tol_root=TOL_ROOT):
    normal = x if field.sphere_radius is not None else None
    err = None
    basis = None
    try:
        hol = extract_holonomy(m, field.value(x, t), normal=normal)
        basis = normal_basis(field.value(x, t), normal)
        report = classify_holonomy(hol, dmax=dmax, tol_root=tol_root) if hol.size else None
    except FlowDirectionNotPreserved as exc:
        hol, report, err = np.zeros((0, 0)), None, str(exc)
    samples = flow_samples(field, x, s, t, opts, n=N_SAMPLES)
    return _Embedded(x=x, s1=s, monodromy=m, holonomy=hol, report=report,
                     samples=samples, residual=res, error=err, basis=basis)


def _embedded(field, x, s, t, opts, dmax=DMAX, tol_root=TOL_ROOT, canonical=True, covered=None):
    x, s, m, res, _ = _shoot_either(field, x, s, t, opts, covered=covered)
    back = prefers_backward(m)
    s1 = _minimal_period(field, x, s, t, opts)
    if s1 < s * (1 - 1e-9):
        x, s, m, res, _ = _shoot_either(field, x, s1, t, opts, backward=back)
    if canonical:
        p = _canonical_phase(field, x, s, t, opts)
        x, s, m, res, _ = _shoot_either(field, p, s, t, opts, backward=back)
    return _finish_embedded(field, x, s, m, res, t, opts, dmax, tol_root)


def _cover_records(emb, window, region, orbit_id, dmax=DMAX, tol_root=TOL_ROOT, margin=None):
    out = []
    if margin is None:
        margin = region.margin(emb.samples)
    d = 1
    while window.admits(d * emb.s1, d):
        hol_d = np.linalg.matrix_power(emb.holonomy, d) if emb.holonomy.size else emb.holonomy
        mono_d = np.linalg.matrix_power(emb.monodromy, d)
        cls = None
        err = emb.error
        report_d = None
        if emb.report is not None:
            report_d = classify_holonomy(hol_d, dmax=dmax, tol_root=tol_root)
            try:
                cls = weight_periodic(emb.holonomy, d, dmax=dmax, tol_root=tol_root,
                                      report=emb.report)
            except (NotSuperRigid, NotRigid) as exc:
                err = str(exc)
        elif emb.holonomy.size == 0 and err is None:
            err = "no normal directions"
        out.append(PeriodicOrbitRec(
            base_point=emb.x.copy(), minimal_period=emb.s1, degree=d, samples=emb.samples,
            monodromy=mono_d, holonomy=hol_d, rigidity=report_d, orbit_class=cls,
            residual=emb.residual, margin=margin, orbit_id=orbit_id, error=err))
        d += 1
    return out


def refine_orbit(field, x_guess, s_guess, t=None, opts=DEFAULT_OPTS, dmax=DMAX, tol_root=TOL_ROOT):
    """Shoot from ``(x_guess, s_guess)`` and return the orbit at the converged total period.

    The record's degree is the converged period divided by the minimal period.
    Raises ``NoConvergence`` or ``CollapsedToZero``.
    """
    x_guess = field.check_point(x_guess)
    s_guess = check_positive(s_guess, "s_guess")
    x, s, m, res, _ = _shoot_either(field, x_guess, s_guess, t, opts)
    s1 = _minimal_period(field, x, s, t, opts)
    degree = max(1, int(round(s / s1)))
    emb = _embedded(field, x, s1, t, opts, dmax, tol_root, canonical=False)
    win = Window(default_region(field) if field.sphere_radius is None else
                 Region.ball([0.0] * field.ambient_dim, 2.0 * field.sphere_radius),
                 s_max=degree * emb.s1 * (1 + 1e-9))
    recs = _cover_records(emb, win, win.region, 0, dmax, tol_root)
    rec = recs[degree - 1] if len(recs) >= degree else recs[-1]
    rec.margin = math.inf
    return rec


# -- candidate generation -----------------------------------------------------------

def _polyline_distance(p, pts):
    a = pts
    b = np.roll(pts, -1, axis=0)
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom[denom == 0.0] = 1.0
    u = np.clip(np.einsum("ij,ij->i", p - a, ab) / denom, 0.0, 1.0)
    proj = a + u[:, None] * ab
    return float(np.min(np.linalg.norm(proj - p, axis=1)))


def _covers(emb, x, s, region):
    """Whether a candidate is already explained by a found orbit."""
    dist = _polyline_distance(x, emb.samples)
    if dist < 1e-3 * region.diameter:
        return True
    extent = float(np.ptp(emb.samples, axis=0).max())
    return dist < 0.05 * extent and abs(s - emb.s1) < 0.05 * emb.s1


def _recurrence(field, x0, direction, t, s_max, diam, n_scan=256, reach=0.3):
    """First good return time of the trajectory through ``x0`` (or None)."""
    times = np.arange(1, n_scan + 1) * (s_max / n_scan)
    try:
        _, xs = flow(field, x0, direction * s_max, t, _SCAN_OPTS, sample_times=times)
    except (BlowUp, StepFailure):
        return None
    d = np.linalg.norm(xs - x0, axis=1)
    mins = [i for i in range(1, n_scan - 1) if d[i] <= d[i - 1] and d[i] <= d[i + 1]]
    if d[-1] < d[-2]:
        mins.append(n_scan - 1)
    if not mins:
        return None
    best = min(d[i] for i in mins)
    if best >= reach * diam:
        return None
    thresh = max(2.0 * best, 1e-3 * diam)
    for i in mins:
        if d[i] <= thresh:
            # spirals into a focus return by a fixed fraction of their size
            if d[i] > 0.3 * float(d[: i + 1].max()):
                return None
            return float(times[i]), float(d[i])
    return None


def _scan_seed(field, seed, direction, t, window, transient):
    """Transient integration then recurrence scan; returns a shooting candidate."""
    region = window.region
    x = np.array(seed, dtype=float)
    if direction != 0:
        try:
            x = flow(field, x, direction * transient, t, _SCAN_OPTS)
        except (BlowUp, StepFailure):
            return None
        if region.margin(x) <= 0:
            return None
    v = field.value(x, t)
    if np.linalg.norm(v) < 1e-6 * (1.0 + np.linalg.norm(x)):
        return None
    # raw seeds only qualify when they sit close to a closed orbit
    reach = 0.3 if direction != 0 else 0.05
    rec = _recurrence(field, x, direction or 1, t, window.s_max, region.diameter, reach=reach)
    if rec is None or _spirals_to_zero(field, x, (direction or 1) * rec[0], t):
        return None
    return x, rec[0], rec[1]


def _spirals_to_zero(field, x0, s, t):
    """Whether successive returns converge geometrically onto a zero of the field.

    Extrapolates the return points ``x0, x1, x2`` (Aitken) and tests the field
    at the limit; a slowly attracting closed orbit extrapolates onto itself.
    """
    try:
        _, xs = flow(field, x0, 2.0 * s, t, _SCAN_OPTS, sample_times=np.array([abs(s), 2.0 * abs(s)]))
    except (BlowUp, StepFailure):
        return False
    x1, x2 = xs
    d1, d2 = float(np.linalg.norm(x1 - x0)), float(np.linalg.norm(x2 - x1))
    if d1 == 0.0 or d2 >= 0.98 * d1:
        return False
    limit = x0 + (x1 - x0) / (1.0 - d2 / d1)
    if field.sphere_radius is not None:
        limit *= field.sphere_radius / np.linalg.norm(limit)
    return float(np.linalg.norm(field.value(limit, t))) < 0.05 * float(np.linalg.norm(field.value(x0, t)))


def _focus_seeds(zeros, region):
    out = []
    for z in zeros:
        for lam in z.spectrum.eigenvalues:
            if lam.imag <= 0:
                continue
            plane = eigen_plane(z.jacobian, lam)
            if z.tangent_basis is not None:
                plane = (z.tangent_basis @ plane.T).T
            for rho in (0.01, 0.05, 0.15, 0.3):
                p = z.point + rho * region.diameter * 0.5 * plane[0]
                out.append(p)
    return out


# -- suspension (return map) census --------------------------------------------------

def _map_orbits(field, window, t, per_dim=None):
    fmap = field.map
    region = window.region
    kmax = int(math.floor(window.s_max + 1e-9))
    pts = region.grid(per_dim or 16)
    found = []
    fails = 0
    for k in range(1, kmax + 1):
        for seed in pts:
            p = map_periodic_point(fmap, seed, k, t)
            if p is None:
                fails += 1
                continue
            if map_minimal_period(fmap, p, k, t) != k:
                continue
            orbit = map_orbit_points(fmap, p, k, t)
            if region.margin(orbit) <= 0:
                continue
            if any(e[0] == k and np.linalg.norm(e[1] - orbit[0], axis=1).min() < 1e-7
                   for e in found):
                continue
            found.append((k, orbit))
    return found, fails, len(pts) * kmax


def map_embedded(field, orbit, k, t, dmax=DMAX, tol_root=TOL_ROOT):
    """Embedded closed orbit of a suspension from a periodic orbit of its return map."""
    c = _PHASE_FUNCTIONAL[:2]
    j = int(np.argmax(orbit @ c))
    p = orbit[j]
    q, d = field.map.iterate(p, k, t)
    x = np.concatenate([[0.0], p])
    mono = np.eye(3)
    mono[1:, 1:] = d
    samples = np.column_stack([np.zeros(k), np.roll(orbit, -j, axis=0)])
    report = classify_holonomy(d, dmax=dmax, tol_root=tol_root)
    basis = np.vstack([np.zeros(2), np.eye(2)])
    return _Embedded(x=x, s1=float(k), monodromy=mono, holonomy=d, report=report,
                     samples=samples, residual=float(np.linalg.norm(q - p)), basis=basis)


def map_periodic_point(fmap, p, k, t, max_iter=60):
    """Newton for ``f^k(p) = p``; returns the point or None."""
    p = np.array(p, dtype=float)
    for _ in range(max_iter):
        q, d = fmap.iterate(p, k, t)
        g = q - p
        if np.linalg.norm(g) < 1e-12 * (1 + np.linalg.norm(p)):
            return p
        try:
            dp = np.linalg.solve(d - np.eye(fmap.dim), -g)
        except np.linalg.LinAlgError:
            return None
        nrm = np.linalg.norm(dp)
        if nrm > 5.0:
            dp *= 5.0 / nrm
        p = p + dp
        if not np.all(np.isfinite(p)) or np.linalg.norm(p) > 1e4:
            return None
    return None


def map_minimal_period(fmap, p, k, t):
    for j in range(1, k):
        if k % j == 0 and np.linalg.norm(fmap.iterate(p, j, t)[0] - p) < 1e-6 * (1 + np.linalg.norm(p)):
            return j
    return k


def map_orbit_points(fmap, p, k, t):
    orbit = [np.array(p, dtype=float)]
    for _ in range(k - 1):
        orbit.append(fmap.apply(orbit[-1], t))
    return np.array(orbit)


def _map_census(field, window, t, dmax, tol_root, per_dim=None):
    found, fails, attempts = _map_orbits(field, window, t, per_dim)
    records = []
    embs = [map_embedded(field, orbit, k, t, dmax, tol_root) for k, orbit in found]
    embs.sort(key=lambda e: (e.s1, tuple(np.round(e.x, 9))))
    region = window.region
    for i, e in enumerate(embs):
        records.extend(_cover_records(e, window, region, i, dmax, tol_root,
                                      margin=region.margin(e.samples[:, 1:])))
    diag = {"seeds": attempts, "newton_attempts": attempts, "newton_failures": fails,
            "collapsed": 0, "embedded_orbits": len(embs)}
    return records, diag


# -- assembly ---------------------------------------------------------------------------

def _sort_records(orbits):
    orbits.sort(key=lambda r: (round(r.total_period, 9), r.degree,
                               tuple(np.round(r.base_point, 9))))


def _same_orbit(a, b):
    if abs(a.s1 - b.s1) > TOL_PERIOD_REL * max(a.s1, b.s1) + 1e-9:
        return False
    if np.linalg.norm(a.x - b.x) < TOL_DEDUP_ORBIT:
        return True
    # phase-aligned sample sets
    da = np.max([np.min(np.linalg.norm(b.samples - p, axis=1)) for p in a.samples])
    db = np.max([np.min(np.linalg.norm(a.samples - p, axis=1)) for p in b.samples])
    return max(da, db) < TOL_DEDUP_ORBIT


def build_census(field, t=None, window=None, *, per_dim=None, transient=None, opts=DEFAULT_OPTS,
                 dmax=DMAX, tol_root=TOL_ROOT, extra_seeds=(), max_newton=200, n_jobs=1):
    """Assemble the census of ghost and periodic orbits of ``field`` at parameter ``t``."""
    if window is None:
        raise ValueError("a window is required")
    diagnostics = {}
    if field.is_suspension:
        orbits, diag = _map_census(field, window, t, dmax, tol_root)
        diagnostics.update(diag)
        _sort_records(orbits)
        return Census(window=window, t=t, zeros=[], ghosts=[], orbits=orbits,
                      diagnostics=diagnostics,
                      settings=_settings(opts, dmax, tol_root, per_dim, transient))
    region = window.region
    zeros = find_zeros(field, region, t, per_dim, diagnostics)
    ghosts = enumerate_ghosts(field, t, window.s_max, region, zeros, window.degree_max,
                              diagnostics=diagnostics)
    embs = _find_embedded(field, t, window, zeros, per_dim, transient, opts, dmax, tol_root,
                          extra_seeds, max_newton, n_jobs, diagnostics)
    orbits = []
    for i, e in enumerate(embs):
        orbits.extend(_cover_records(e, window, region, i, dmax, tol_root))
    _sort_records(orbits)
    ghosts.sort(key=lambda g: (round(g.period, 9), g.zero_id, g.degree))
    return Census(window=window, t=t, zeros=zeros, ghosts=ghosts, orbits=orbits,
                  diagnostics=diagnostics,
                  settings=_settings(opts, dmax, tol_root, per_dim, transient))


def _settings(opts, dmax, tol_root, per_dim, transient):
    return {"integrator": opts.to_dict(), "dmax": dmax, "tol_root": tol_root,
            "tol_orbit": TOL_ORBIT, "tol_trace": TOL_TRACE, "tol_dedup_zero": TOL_DEDUP_ZERO,
            "tol_dedup_orbit": TOL_DEDUP_ORBIT, "grid_per_dim": per_dim,
            "transient": transient}


def _find_embedded(field, t, window, zeros, per_dim, transient, opts, dmax, tol_root,
                   extra_seeds, max_newton, n_jobs, diagnostics):
    region = window.region
    per_dim = per_dim or _default_per_dim(field)
    transient = transient if transient is not None else 2.0 * window.s_max
    grid = list(_seed_points(field, region, per_dim))
    focus = _focus_seeds(zeros, region)
    jobs = []
    for p in list(extra_seeds) + focus:
        jobs.append((p, 0))
    for p in focus + grid:
        jobs.extend([(p, 1), (p, -1)])
    if field.ambient_dim >= 3:
        jobs.extend((p, 0) for p in grid)
    jobs = [(p, dirn) for p, dirn in jobs
            if field.sphere_radius is None or abs(np.linalg.norm(p) - field.sphere_radius) < 1e-6]

    def scan(job):
        return _scan_seed(field, job[0], job[1], t, window, transient)

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            cands = list(ex.map(scan, jobs))
    else:
        cands = [scan(j) for j in jobs]
    embs = []
    attempts = failures = collapsed = covered = 0
    for cand in cands:
        if cand is None:
            continue
        x, s, _ = cand
        if any(_covers(e, x, s, region) for e in embs):
            covered += 1
            continue
        if attempts >= max_newton:
            break
        attempts += 1
        try:
            e = _embedded(field, x, s, t, opts, dmax, tol_root,
                          covered=lambda xx, ss: any(_covers(o, xx, ss, region) for o in embs))
        except _Covered:
            covered += 1
            continue
        except CollapsedToZero:
            collapsed += 1
            continue
        except (NoConvergence, BlowUp, StepFailure):
            failures += 1
            continue
        if any(_same_orbit(e, o) for o in embs):
            continue
        embs.append(e)
    embs.sort(key=lambda e: (round(e.s1, 9), tuple(np.round(e.x, 9))))
    diagnostics.update({"seeds": len(jobs), "candidates": sum(c is not None for c in cands),
                        "covered": covered, "newton_attempts": attempts,
                        "newton_failures": failures, "collapsed": collapsed,
                        "embedded_orbits": len(embs)})
    # seeds whose scan never recurred are not failures; covered seeds are successes
    refined = attempts + covered
    if refined and failures > 0.5 * refined:
        diagnostics["incomplete"] = True
        warnings.warn(IncompleteCensus(
            f"{failures} of {refined} refined seeds failed to converge"), stacklevel=3)
    return embs


class OrbitCensus(BaseEstimator):
    """Estimator-style front end: ``OrbitCensus(s_max=7).fit(field, t)`` sets ``census_``.

    Parameters
    ----------
    s_max : period cutoff of the window.
    region : ``Region`` or None for the field's default region.
    degree_max : optional degree cutoff.
    tol : integrator tolerance per unit time.
    per_dim : seed grid points per axis (None: dimension-dependent default).
    dmax, tol_root : super-rigidity certification bounds.
    n_jobs : worker threads for the seed scan.
    """

    def __init__(self, s_max=7.0, region=None, degree_max=None, tol=1e-10, per_dim=None,
                 transient=None, dmax=DMAX, tol_root=TOL_ROOT, n_jobs=1):
        self.s_max = s_max
        self.region = region
        self.degree_max = degree_max
        self.tol = tol
        self.per_dim = per_dim
        self.transient = transient
        self.dmax = dmax
        self.tol_root = tol_root
        self.n_jobs = n_jobs

    def window_for(self, field):
        region = self.region
        if region is None:
            region = default_region(field)
        elif isinstance(region, dict):
            region = Region.from_dict(region)
        return Window(region=region, s_max=float(self.s_max), degree_max=self.degree_max)

    def fit(self, field, t=None):
        self.window_ = self.window_for(field)
        self.census_ = build_census(
            field, t, self.window_, per_dim=self.per_dim, transient=self.transient,
            opts=IntegratorOpts(tol=self.tol), dmax=self.dmax, tol_root=self.tol_root,
            n_jobs=self.n_jobs)
        self.total_weight_ = self.census_.total_weight
        return self


def orbit_samples_csv(census):
    """Rows ``orbit_id, degree, index, x0, x1, ...`` for plotting."""
    lines = []
    n = None
    for rec in census.orbits:
        if rec.degree != 1:
            continue
        n = rec.samples.shape[1]
        for i, p in enumerate(rec.samples):
            lines.append(",".join([str(rec.orbit_id), str(rec.degree), str(i)]
                                  + [repr(float(v)) for v in p]))
    header = ",".join(["orbit_id", "degree", "index"] + [f"x{i}" for i in range(n or 0)])
    return "\n".join([header] + lines) + "\n"
