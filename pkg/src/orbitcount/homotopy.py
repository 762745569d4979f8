"""Continuation of orbit censuses along a one-parameter family, with event detection.

Every zero and every embedded closed orbit is a *branch*: a record continued
over the parameter grid by a secant predictor and a Newton corrector. Full
censuses at a few checkpoints open branches that continuation alone would miss,
and branch-switch probes open the branches emitted at Hopf-type ghost
boundaries and at period doublings. Sign changes of monitored quantities along
a branch are localized with Brent's method; branch ends are attached to the
event that explains them.
"""

from dataclasses import dataclass, field as dc_field
import math

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator

from . import census as cz
from .errors import (
    BlowUp,
    CollapsedToZero,
    LostTrack,
    NoConvergence,
    OrbitCountError,
    StepFailure,
    UnresolvedEvent,
)
from .flow import DEFAULT_OPTS, IntegratorOpts, flow
from .holonomy import DMAX, TOL_ROOT, weight_ghost
from .window import Region, Window, default_region

TOL_EVENT = 1e-8
TOL_MARGIN = 1e-3
N_GRID = 64
N_CHECKPOINTS = 8
MAX_STEP = 0.1

EVENT_KINDS = ("fold", "periodDoubling", "ghostBoundary", "zeroDegeneracy", "windowBoundary")


@dataclass
class EventRecord:
    t_star: float
    kind: str
    carriers: list
    weight_before: int | None = None
    weight_after: int | None = None
    interval: tuple = ()
    details: dict = dc_field(default_factory=dict)

    def to_dict(self):
        return {"t_star": self.t_star, "kind": self.kind, "carriers": list(self.carriers),
                "weight_before": self.weight_before, "weight_after": self.weight_after,
                "interval": list(self.interval), "details": self.details}


@dataclass
class SweepReport:
    grid: list
    censuses: list
    events: list
    verdict: dict
    branches: dict = dc_field(default_factory=dict)
    unresolved: list = dc_field(default_factory=list)
    diagnostics: dict = dc_field(default_factory=dict)
    settings: dict = dc_field(default_factory=dict)

    @property
    def totals(self):
        return [c.total_weight for c in self.censuses]

    @property
    def passed(self):
        return self.verdict["status"] == "pass"

    def events_of(self, kind):
        return [e for e in self.events if e.kind == kind]

    def rows(self):
        """``(t, total, weight_d1, weight_d2, n_orbits, n_ghosts)`` per grid point."""
        out = []
        for t, c in zip(self.grid, self.censuses):
            w = c.weights_by_degree()
            out.append((t, c.total_weight, w.get(1, 0), w.get(2, 0), len(c.orbits), len(c.ghosts)))
        return out

    def to_dict(self):
        return {
            "grid": list(self.grid),
            "totals": self.totals,
            "events": [e.to_dict() for e in self.events],
            "verdict": self.verdict,
            "unresolved": self.unresolved,
            "branches": self.branches,
            "censuses": [_census_summary(c) for c in self.censuses],
            "diagnostics": self.diagnostics,
            "settings": self.settings,
        }


def _census_summary(c):
    d = c.to_dict(include_samples=False)
    d.pop("settings", None)
    d["weights_by_period_index"] = {str(k): v for k, v in c.weights_by_period_index().items()}
    return d


# -- branch states --------------------------------------------------------------------

@dataclass
class _Branch:
    bid: str
    kind: str  # "zero" or "orbit"
    states: dict = dc_field(default_factory=dict)
    origin: str = ""

    @property
    def first(self):
        return min(self.states)

    @property
    def last(self):
        return max(self.states)


def _continue_zero(field, prev, guess, t):
    x = cz._zero_newton(field, np.array(guess, dtype=float), t)
    if x is None:
        raise LostTrack("zero corrector diverged")
    jump = float(np.linalg.norm(x - guess))
    allowed = max(3.0 * float(np.linalg.norm(np.asarray(guess) - prev.point)),
                  1e-2 * (1.0 + float(np.linalg.norm(prev.point))))
    if jump > allowed:
        raise LostTrack("zero corrector jumped to another zero")
    return cz.zero_record(field, x, t)


def _continue_orbit(field, prev, guess_x, guess_s, t, opts, dmax, tol_root):
    if field.is_suspension:
        return _continue_map_orbit(field, prev, guess_x, t, dmax, tol_root)
    back = cz.prefers_backward(prev.monodromy)
    try:
        x, s, m, res, _ = cz._shoot_either(field, guess_x, guess_s, t, opts, backward=back)
    except (NoConvergence, CollapsedToZero, BlowUp, StepFailure) as exc:
        raise LostTrack(f"orbit corrector failed: {exc}") from exc
    if abs(s - guess_s) > 0.2 * guess_s:
        raise LostTrack("orbit corrector jumped in period")
    if _has_shorter_period(field, x, s, t, opts):
        raise LostTrack("orbit merged into a shorter orbit")
    try:
        p = cz._canonical_phase(field, x, s, t, opts)
        x, s, m, res, _ = cz._shoot_either(field, p, s, t, opts, backward=back)
    except (NoConvergence, CollapsedToZero, BlowUp, StepFailure) as exc:
        raise LostTrack(f"orbit re-basing failed: {exc}") from exc
    if float(np.linalg.norm(x - guess_x)) > 0.3 * max(prev.extent, 1e-6) + 1e-6:
        raise LostTrack("orbit corrector jumped in space")
    return cz._finish_embedded(field, x, s, m, res, t, opts, dmax, tol_root)


def _has_shorter_period(field, x, s, t, opts):
    times = np.array([s / 3.0, s / 2.0])
    try:
        _, xs = flow(field, x, s, t, opts, sample_times=times)
    except (BlowUp, StepFailure):
        return False
    scale = 1.0 + float(np.linalg.norm(x))
    return bool(np.any(np.linalg.norm(xs - x, axis=1) < 1e-6 * scale))


def _continue_map_orbit(field, prev, guess_x, t, dmax, tol_root):
    k = int(round(prev.s1))
    p = cz.map_periodic_point(field.map, guess_x[1:], k, t)
    if p is None:
        raise LostTrack("periodic point corrector diverged")
    if cz.map_minimal_period(field.map, p, k, t) != k:
        raise LostTrack("periodic orbit merged into a shorter orbit")
    if float(np.linalg.norm(p - guess_x[1:])) > 0.3 * max(prev.extent, 1e-3) + 1e-3:
        raise LostTrack("periodic point corrector jumped")
    orbit = cz.map_orbit_points(field.map, p, k, t)
    return cz.map_embedded(field, orbit, k, t, dmax, tol_root)


# -- monitored quantities ------------------------------------------------------------------

def _pairs(zero):
    return sorted((lam for lam in zero.spectrum.eigenvalues if lam.imag > 0),
                  key=lambda z: -z.imag)


def _admitted_degrees(window, period):
    n = int(math.floor(window.s_max / period + 1e-12))
    if window.degree_max is not None:
        n = min(n, window.degree_max)
    return n


def _zero_monitors(z, window):
    out = {"det": ("zeroDegeneracy", z.det),
           "margin": ("windowBoundary", window.region.margin(z.point))}
    for k, lam in enumerate(_pairs(z)):
        out[f"trace{k}"] = ("ghostBoundary", 2.0 * lam.real)
        out[f"turns{k}"] = ("windowBoundary", window.s_max * lam.imag / (2.0 * math.pi))
    return out


def _orbit_margin(field, window, emb):
    pts = emb.samples[:, 1:] if field.is_suspension else emb.samples
    return window.region.margin(pts)


def _orbit_monitors(field, emb, window):
    n = emb.holonomy.shape[0]
    out = {"margin": ("windowBoundary", _orbit_margin(field, window, emb)),
           "turns": ("windowBoundary", window.s_max / emb.s1)}
    if n:
        out["fold"] = ("fold", float(np.linalg.det(emb.holonomy - np.eye(n))))
        out["pd"] = ("periodDoubling", float(np.linalg.det(emb.holonomy + np.eye(n))))
    return out


def _crossing_level(name, va, vb, window):
    """Level crossed by a monitor between two values, or None."""
    if name.startswith("turns"):
        cap = window.degree_max if window.degree_max is not None else math.inf
        fa, fb = min(math.floor(va), cap), min(math.floor(vb), cap)
        if fa == fb:
            return None
        return float(max(fa, fb)) if max(fa, fb) <= cap else None
    if (va > 0) != (vb > 0) and va != vb:
        return 0.0
    return None


# -- tracker ------------------------------------------------------------------------------

class _Tracker:
    def __init__(self, family, window, grid, opts, dmax, tol_root, per_dim, n_checkpoints,
                 tol_event, transient, census_opts=None, n_jobs=1):
        self.family = family
        self.n_jobs = n_jobs
        self.field = family.field
        self.window = window
        self.grid = [float(t) for t in grid]
        self.opts = opts
        self.dmax = dmax
        self.tol_root = tol_root
        self.per_dim = per_dim
        self.n_checkpoints = n_checkpoints
        self.tol_event = tol_event
        self.transient = transient
        self.branches = []
        self.events = []
        self.unresolved = []
        self.n_census = 0
        self.n_probe = 0
        self._counts = {"zero": 0, "orbit": 0}

    # branch bookkeeping
    def _new_branch(self, kind, idx, state, origin):
        prefix = "Z" if kind == "zero" else "O"
        b = _Branch(f"{prefix}{self._counts[kind]}", kind, {idx: state}, origin)
        self._counts[kind] += 1
        self.branches.append(b)
        return b

    def _predict(self, b, i_from, i_to, direction):
        st = b.states[i_from]
        i_prev = i_from - direction
        t_to = self.grid[i_to]
        if i_prev in b.states:
            sp = b.states[i_prev]
            r = (t_to - self.grid[i_from]) / (self.grid[i_from] - self.grid[i_prev])
            if b.kind == "zero":
                return st.point + r * (st.point - sp.point), None
            return st.x + r * (st.x - sp.x), st.s1 + r * (st.s1 - sp.s1)
        if b.kind == "zero":
            return st.point.copy(), None
        return st.x.copy(), st.s1

    def _continue_to(self, b, state, gx, gs, t):
        if b.kind == "zero":
            return _continue_zero(self.field, state, gx, t)
        if self.field.sphere_radius is not None:
            gx = gx * self.field.sphere_radius / np.linalg.norm(gx)
        return _continue_orbit(self.field, state, gx, gs, t, self.opts, self.dmax, self.tol_root)

    def _step(self, b, i_from, i_to, direction):
        """Continue from grid index ``i_from`` to ``i_to``, sub-stepping when the gap is large."""
        t0, t1 = self.grid[i_from], self.grid[i_to]
        n_sub = max(1, int(math.ceil(abs(t1 - t0) / MAX_STEP)))
        gx, gs = self._predict(b, i_from, i_to, direction)
        if n_sub == 1:
            return self._continue_to(b, b.states[i_from], gx, gs, t1)
        state = start = b.states[i_from]
        x0 = start.point if b.kind == "zero" else start.x
        for j in range(1, n_sub + 1):
            tj = t0 + (t1 - t0) * j / n_sub
            r = j / n_sub
            guess = x0 + r * (gx - x0)
            sg = None if b.kind == "zero" else start.s1 + r * (gs - start.s1)
            state = self._continue_to(b, state, guess, sg, tj)
        return state

    def track(self, b, start):
        for direction in (1, -1):
            i = start
            while 0 <= i + direction < len(self.grid) and (i + direction) not in b.states:
                try:
                    b.states[i + direction] = self._step(b, i, i + direction, direction)
                except LostTrack:
                    break
                i += direction
                if self._outside(b, b.states[i], far=True):
                    break

    def _outside(self, b, state, far=False):
        """Whether ``state`` lies outside the window (``far``: well outside it)."""
        region = self.window.region
        slack = 0.25 * region.diameter if far else 0.0
        if b.kind == "zero":
            return region.margin(state.point) < -slack
        s_cap = self.window.s_max * (2.0 if far else 1.0)
        return state.s1 > s_cap or _orbit_margin(self.field, self.window, state) < -slack

    def _matches(self, b, idx, kind, state):
        if idx not in b.states or b.kind != kind:
            return False
        other = b.states[idx]
        if kind == "zero":
            return float(np.linalg.norm(other.point - state.point)) < 1e-6
        if abs(other.s1 - state.s1) > 1e-4 * state.s1:
            return False
        if float(np.linalg.norm(other.x - state.x)) < 1e-6 * (1 + np.linalg.norm(state.x)):
            return True
        return cz._polyline_distance(state.x, other.samples) < 1e-4 * (1 + state.extent)

    def _adopt(self, idx, kind, state, origin):
        """Open and track a branch unless ``state`` is already on one."""
        for b in self.branches:
            if self._matches(b, idx, kind, state):
                return None
        b = self._new_branch(kind, idx, state, origin)
        self.track(b, idx)
        return b

    def _census(self, idx):
        self.n_census += 1
        c = cz.build_census(self.field, self.grid[idx], self.window, per_dim=self.per_dim,
                            transient=self.transient, opts=self.opts, dmax=self.dmax,
                            n_jobs=self.n_jobs,
                            tol_root=self.tol_root)
        new = []
        for z in c.zeros:
            b = self._adopt(idx, "zero", z, f"census@{idx}")
            if b is not None:
                new.append(b)
        embs = {}
        for rec in c.orbits:
            if rec.degree == 1:
                embs[rec.orbit_id] = rec
        for rec in embs.values():
            emb = cz._Embedded(x=rec.base_point, s1=rec.minimal_period, monodromy=rec.monodromy,
                               holonomy=rec.holonomy, report=rec.rigidity, samples=rec.samples,
                               residual=rec.residual, error=rec.error,
                               basis=self._basis_for(rec.base_point, idx))
            b = self._adopt(idx, "orbit", emb, f"census@{idx}")
            if b is not None:
                new.append(b)
        return new

    def _basis_for(self, x, idx):
        if self.field.is_suspension:
            return np.vstack([np.zeros(2), np.eye(2)])
        normal = x if self.field.sphere_radius is not None else None
        return cz.normal_basis(self.field.value(x, self.grid[idx]), normal)

    # probes
    def _probe_hopf(self, zero_branch, idx, pair_index):
        if idx not in zero_branch.states:
            return []
        z = zero_branch.states[idx]
        pairs = _pairs(z)
        if pair_index >= len(pairs):
            return []
        lam = pairs[pair_index]
        plane = cz.eigen_plane(z.jacobian, lam)
        if z.tangent_basis is not None:
            plane = (z.tangent_basis @ plane.T).T
        s_guess = 2.0 * math.pi / lam.imag
        t = self.grid[idx]
        out = []
        rmax = 0.25 * self.window.region.diameter
        # smallest radius first; the emitted branch is unique on each side
        for j in range(11, -1, -1):
            rho = rmax * 0.5 ** j
            p = z.point + rho * plane[0]
            if self.field.sphere_radius is not None:
                p = p * self.field.sphere_radius / np.linalg.norm(p)
            self.n_probe += 1
            try:
                emb = cz._embedded(self.field, p, s_guess, t, self.opts, self.dmax, self.tol_root)
            except (OrbitCountError, LostTrack):
                continue
            b = self._adopt(idx, "orbit", emb, f"hopf-probe@{idx}")
            if b is not None:
                out.append(b)
            break
        return out

    def _probe_doubling(self, orbit_branch, idx):
        if idx not in orbit_branch.states:
            return []
        emb = orbit_branch.states[idx]
        n = emb.holonomy.shape[0]
        if n == 0 or emb.basis is None:
            return []
        w, v = np.linalg.eig(emb.holonomy)
        j = int(np.argmin(np.abs(w + 1.0)))
        if abs(w[j].imag) > 1e-9:
            return []
        direction = emb.basis @ np.real(v[:, j])
        direction /= np.linalg.norm(direction)
        t = self.grid[idx]
        out = []
        scale = 1.0 + float(np.linalg.norm(emb.x))
        for mag in (1e-3, 1e-2, 1e-1, 1.0, 3.0):
            for sign in (1.0, -1.0):
                p = emb.x + sign * mag * scale * direction
                self.n_probe += 1
                try:
                    new = self._doubled_orbit(p, emb, t)
                except (OrbitCountError, LostTrack):
                    continue
                if new is None:
                    continue
                b = self._adopt(idx, "orbit", new, f"doubling-probe@{idx}")
                if b is not None:
                    out.append(b)
                return out
        return out

    def _doubled_orbit(self, p, emb, t):
        if self.field.is_suspension:
            k = 2 * int(round(emb.s1))
            q = cz.map_periodic_point(self.field.map, p[1:], k, t)
            if q is None or cz.map_minimal_period(self.field.map, q, k, t) != k:
                return None
            orbit = cz.map_orbit_points(self.field.map, q, k, t)
            return cz.map_embedded(self.field, orbit, k, t, self.dmax, self.tol_root)
        if self.field.sphere_radius is not None:
            p = p * self.field.sphere_radius / np.linalg.norm(p)
        new = cz._embedded(self.field, p, 2.0 * emb.s1, t, self.opts, self.dmax, self.tol_root)
        if abs(new.s1 - 2.0 * emb.s1) > 0.1 * emb.s1:
            return None
        return new

    # event localization
    def _state_at(self, b, i, t):
        """Continue branch ``b`` from grid index ``i`` to an arbitrary parameter ``t``."""
        st = b.states[i]
        j = i + (1 if t > self.grid[i] else -1)
        if j in b.states:
            r = (t - self.grid[i]) / (self.grid[j] - self.grid[i])
            if b.kind == "zero":
                gx, gs = st.point + r * (b.states[j].point - st.point), None
            else:
                gx = st.x + r * (b.states[j].x - st.x)
                gs = st.s1 + r * (b.states[j].s1 - st.s1)
        else:
            gx, gs = (st.point, None) if b.kind == "zero" else (st.x, st.s1)
        return self._continue_to(b, st, gx, gs, t)

    def _monitors(self, b, state):
        if b.kind == "zero":
            return _zero_monitors(state, self.window)
        return _orbit_monitors(self.field, state, self.window)

    def _localize(self, b, i, name, level):
        ta, tb = self.grid[i], self.grid[i + 1]

        def g(t):
            if t == ta:
                st = b.states[i]
            elif t == tb:
                st = b.states[i + 1]
            else:
                st = self._state_at(b, i, t)
            return self._monitors(b, st)[name][1] - level

        try:
            ga, gb = g(ta), g(tb)
            if ga == 0.0:
                return ta, True
            if gb == 0.0 or (ga > 0) == (gb > 0):
                return tb, True
            return brentq(g, ta, tb, xtol=self.tol_event / 4, rtol=4 * np.finfo(float).eps,
                          maxiter=200), True
        except (LostTrack, OrbitCountError, KeyError, ValueError):
            return 0.5 * (ta + tb), False

    def _localize_end(self, b, i, direction):
        """Parameter where continuation of ``b`` beyond grid index ``i`` fails."""
        lo, hi = self.grid[i], self.grid[i + direction]
        state = b.states[i]
        for _ in range(80):
            if abs(hi - lo) < self.tol_event:
                break
            mid = 0.5 * (lo + hi)
            try:
                gx, gs = (state.point, None) if b.kind == "zero" else (state.x, state.s1)
                state = self._continue_to(b, state, gx, gs, mid)
                lo = mid
            except LostTrack:
                hi = mid
        return 0.5 * (lo + hi), state, lo

    def _scan(self, b):
        """Monitored sign changes along ``b``; returns new events and probe requests."""
        found = []
        idx = sorted(b.states)
        for i in idx:
            if i + 1 not in b.states:
                continue
            ma = self._monitors(b, b.states[i])
            mb = self._monitors(b, b.states[i + 1])
            for name, (kind, va) in ma.items():
                if name not in mb:
                    continue
                vb = mb[name][1]
                level = _crossing_level(name, va, vb, self.window)
                if level is None:
                    continue
                if kind == "windowBoundary" and not self._window_relevant(b, i, name):
                    continue
                t_star, ok = self._localize(b, i, name, level)
                details = {"monitor": name, "localized": ok}
                if name.startswith("trace"):
                    details["pair"] = int(name[5:])
                ev = EventRecord(t_star=t_star, kind=kind, carriers=[b.bid],
                                 interval=(self.grid[i], self.grid[i + 1]), details=details)
                found.append((ev, i))
        return found

    def _window_relevant(self, b, i, name):
        """Window crossings only matter for records that could be in the window."""
        if b.kind == "zero":
            if name == "margin":
                return True
            k = name[5:]
            za, zb = b.states[i], b.states[i + 1]
            pa, pb = _pairs(za), _pairs(zb)
            kk = int(k)
            if kk >= len(pa) or kk >= len(pb):
                return False
            return min(pa[kk].real, pb[kk].real) <= cz.TOL_TRACE / 2
        return True

    def run(self):
        n = len(self.grid)
        cps = sorted(set(int(round(v)) for v in np.linspace(0, n - 1, max(2, self.n_checkpoints))))
        worklist = []
        for c in cps:
            worklist.extend(self._census(c))
        scanned = set()
        raw_events = []
        while worklist:
            b = worklist.pop(0)
            if b.bid in scanned:
                continue
            scanned.add(b.bid)
            for ev, i in self._scan(b):
                raw_events.append(ev)
                new = []
                if ev.kind == "ghostBoundary":
                    for j in (i, i + 1):
                        new.extend(self._probe_hopf(b, j, ev.details["pair"]))
                elif ev.kind == "periodDoubling":
                    for j in (i, i + 1):
                        new.extend(self._probe_doubling(b, j))
                worklist.extend(new)
            worklist.extend(x for x in self.branches if x.bid not in scanned and x not in worklist)
        self.events = self._attach_ends(raw_events)

    def _attach_ends(self, events):
        """Explain every branch birth and death by an event."""
        n = len(self.grid)
        ends = []
        for b in self.branches:
            if b.first > 0:
                ends.append((b, b.first, -1))
            if b.last < n - 1:
                ends.append((b, b.last, 1))
        pending_folds = []
        for b, i, direction in ends:
            if self._outside(b, b.states[i]):
                continue
            lo_i, hi_i = (i, i + 1) if direction == 1 else (i - 1, i)
            ta, tb = self.grid[lo_i], self.grid[hi_i]
            host = self._host_event(events, b, ta, tb)
            if host is not None:
                if b.bid not in host.carriers:
                    host.carriers.append(b.bid)
                side = "before" if direction == 1 else "after"
                host.details.setdefault("branch_ends", []).append({"branch": b.bid, "side": side})
                if host.kind == "periodDoubling":
                    sides = {e["side"] for e in host.details["branch_ends"]}
                    host.details["emitted_side"] = sides.pop() if len(sides) == 1 else "both"
                continue
            t_end, last, t_last = self._localize_end(b, i, direction)
            pending_folds.append((b, t_end, (last, t_last), ta, tb, direction))
        used = set()
        for j, (b, t_end, last, ta, tb, direction) in enumerate(pending_folds):
            if j in used:
                continue
            kind = "zeroDegeneracy" if b.kind == "zero" else "fold"
            partner = None
            for k in range(j + 1, len(pending_folds)):
                b2, t2, _, ta2, tb2, d2 = pending_folds[k]
                if k not in used and b2.kind == b.kind and d2 == direction and abs(t2 - t_end) < 1e-4:
                    partner = k
                    break
            carriers = [b.bid]
            details = {"branch_ends": [{"branch": b.bid,
                                        "side": "before" if direction == 1 else "after"}]}
            if partner is not None:
                used.add(partner)
                b2 = pending_folds[partner][0]
                carriers.append(b2.bid)
                details["branch_ends"].append({"branch": b2.bid,
                                               "side": "before" if direction == 1 else "after"})
            elif self._collapsing(b, *last):
                kind = "ghostBoundary"
                details["collapsed_onto_zero"] = True
            else:
                self.unresolved.append({"branch": b.bid, "t": t_end,
                                        "reason": "branch ends without a partner"})
                details["unpaired"] = True
            events.append(EventRecord(t_star=t_end, kind=kind, carriers=carriers,
                                      interval=(ta, tb), details=details))
        return events

    def _collapsing(self, b, state, t):
        if b.kind != "orbit" or self.field.is_suspension:
            return False
        v = self.field.value(state.x, t)
        return state.extent < 0.05 * self.window.region.diameter or float(np.linalg.norm(v)) < 1e-3

    def _host_event(self, events, b, ta, tb):
        for ev in events:
            if not (ta - 1e-12 <= ev.t_star <= tb + 1e-12):
                continue
            if b.bid in ev.carriers:
                return ev
            if ev.kind == "ghostBoundary" and b.kind == "orbit":
                zb = self._branch(ev.carriers[0])
                if zb is not None and zb.kind == "zero" and self._near_zero(b, zb):
                    return ev
            if ev.kind == "periodDoubling" and b.kind == "orbit":
                ob = self._branch(ev.carriers[0])
                if ob is not None and ob.kind == "orbit" and self._is_double(b, ob):
                    return ev
        return None

    def _branch(self, bid):
        for b in self.branches:
            if b.bid == bid:
                return b
        return None

    def _near_zero(self, ob, zb):
        i = ob.first if ob.first in zb.states else ob.last
        j = i if i in zb.states else (min(zb.states, key=lambda k: abs(k - i)))
        st = ob.states[i]
        return cz._polyline_distance(zb.states[j].point, st.samples) <= 2.0 * st.extent + 1e-6 \
            if not self.field.is_suspension else False

    def _is_double(self, b, ob):
        sb = b.states[b.first].s1
        so = ob.states[ob.first].s1
        return abs(sb - 2.0 * so) < 0.1 * so

    # per-grid censuses
    def censuses(self):
        out = []
        field, window = self.field, self.window
        for i, t in enumerate(self.grid):
            zeros = [b.states[i] for b in self.branches
                     if b.kind == "zero" and i in b.states and window.region.margin(b.states[i].point) > 0]
            zeros.sort(key=lambda z: tuple(np.round(z.point, 9)))
            ghosts = cz.enumerate_ghosts(field, t, window.s_max, window.region, zeros,
                                         window.degree_max) if zeros else []
            orbits = []
            embs = [(b.bid, b.states[i]) for b in self.branches if b.kind == "orbit" and i in b.states]
            embs.sort(key=lambda e: (round(e[1].s1, 9), tuple(np.round(e[1].x, 9))))
            oid = 0
            for bid, e in embs:
                margin = _orbit_margin(field, window, e)
                if margin <= 0:
                    continue
                orbits.extend(cz._cover_records(e, window, window.region, oid, self.dmax,
                                                self.tol_root, margin=margin))
                oid += 1
            cz._sort_records(orbits)
            out.append(cz.Census(window=window, t=t, zeros=zeros, ghosts=ghosts, orbits=orbits))
        return out


def _proximity_events(grid, censuses, window, tol_margin):
    out = []
    for t, c in zip(grid, censuses):
        for r in c.orbits:
            near_period = abs(r.total_period - window.s_max) < tol_margin * window.s_max
            if r.margin < tol_margin * window.region.diameter or near_period:
                out.append(EventRecord(t_star=t, kind="windowBoundary", carriers=[f"orbit@{t:.6g}"],
                                       interval=(t, t), details={"proximity": True}))
        for g in c.ghosts:
            if abs(g.period - window.s_max) < tol_margin * window.s_max:
                out.append(EventRecord(t_star=t, kind="windowBoundary", carriers=[f"ghost@{t:.6g}"],
                                       interval=(t, t), details={"proximity": True}))
    return out


def _collisions(events, tol_event):
    """Pairs of distinct events closer than the localization tolerance."""
    real = [e for e in events if not e.details.get("proximity")]
    out = []
    for a, b in zip(real, real[1:]):
        if abs(b.t_star - a.t_star) < tol_event and not set(a.carriers) & set(b.carriers):
            out.append({"t": a.t_star, "reason": "collision",
                        "events": [[a.kind, a.carriers], [b.kind, b.carriers]]})
    return out


def _finalize(tracker, tol_margin):
    grid = tracker.grid
    censuses = tracker.censuses()
    totals = [c.total_weight for c in censuses]
    events = list(tracker.events) + _proximity_events(grid, censuses, tracker.window, tol_margin)
    # a grid point sitting on a localized event carries non-rigid records; it is not generic
    located = [e.t_star for e in tracker.events]
    degenerate = {i for i, c in enumerate(censuses)
                  if c.unweighted and any(abs(grid[i] - ts) <= 10 * tracker.tol_event
                                          for ts in located)}
    generic = [i for i in range(len(grid)) if i not in degenerate]
    for ev in events:
        if ev.details.get("proximity"):
            i = j = min(range(len(grid)), key=lambda k: abs(grid[k] - ev.t_star))
        else:
            before = [k for k in generic if grid[k] < ev.t_star - 10 * tracker.tol_event]
            after = [k for k in generic if grid[k] > ev.t_star + 10 * tracker.tol_event]
            i = before[-1] if before else (after[0] if after else 0)
            j = after[0] if after else i
        ev.weight_before, ev.weight_after = totals[i], totals[j]
    events.sort(key=lambda e: (round(e.t_star, 12), tuple(e.carriers), e.kind))
    unresolved = list(tracker.unresolved) + _collisions(events, tracker.tol_event)
    verdict = {"status": "pass", "first_violation": None, "explained_by_window": False,
               "total": totals[generic[0]] if generic else None,
               "degenerate_points": [grid[i] for i in sorted(degenerate)]}
    for a, b in zip(generic, generic[1:]):
        if totals[b] != totals[a]:
            ta, tb = grid[a], grid[b]
            explained = any(e.kind == "windowBoundary" and ta - 1e-12 <= e.t_star <= tb + 1e-12
                            for e in events)
            verdict.update(status="fail", first_violation=[ta, tb],
                           explained_by_window=explained, total=None)
            break
    for ev in events:
        if ev.kind != "windowBoundary" and ev.weight_before != ev.weight_after:
            if verdict["status"] == "pass":
                verdict.update(status="fail", first_violation=list(ev.interval),
                               explained_by_window=False, total=None)
    branches = {b.bid: {"kind": b.kind, "first_t": grid[b.first], "last_t": grid[b.last],
                        "origin": b.origin} for b in tracker.branches}
    diagnostics = {"n_census": tracker.n_census, "n_probe": tracker.n_probe,
                   "n_branches": len(tracker.branches)}
    return SweepReport(grid=list(grid), censuses=censuses, events=events, verdict=verdict,
                       branches=branches, unresolved=unresolved,
                       diagnostics=diagnostics)


def default_grid(family, n=N_GRID):
    lo, hi = family.t_range
    return list(np.linspace(lo, hi, n))


def audit_invariance(family, window, t_grid=None, *, opts=DEFAULT_OPTS, dmax=DMAX,
                     tol_root=TOL_ROOT, per_dim=None, n_checkpoints=N_CHECKPOINTS,
                     tol_event=TOL_EVENT, tol_margin=TOL_MARGIN, transient=None, n_jobs=1):
    """Sweep ``family`` over ``t_grid`` and audit constancy of the window total."""
    grid = default_grid(family) if t_grid is None else sorted(float(t) for t in t_grid)
    if len(grid) < 2:
        raise ValueError("a sweep needs at least two grid points")
    tracker = _Tracker(family, window, grid, opts, dmax, tol_root, per_dim, n_checkpoints,
                       tol_event, transient, n_jobs=n_jobs)
    tracker.run()
    report = _finalize(tracker, tol_margin)
    report.settings = {"integrator": opts.to_dict(), "dmax": dmax, "tol_root": tol_root,
                       "tol_event": tol_event, "tol_margin": tol_margin,
                       "n_checkpoints": n_checkpoints, "grid_per_dim": per_dim,
                       "window": window.to_dict()}
    return report


def detect_events(family, window, t_grid=None, **kw):
    """Localized events along the sweep; colliding events raise ``UnresolvedEvent``."""
    report = audit_invariance(family, window, t_grid, **kw)
    clashes = [u for u in report.unresolved if u["reason"] == "collision"]
    if clashes:
        raise UnresolvedEvent(f"events collide near t = {clashes[0]['t']:.10g}; refine the grid")
    return report.events


def continue_record(family, rec, t_from, t_to, *, opts=DEFAULT_OPTS, max_step=MAX_STEP,
                    dmax=DMAX, tol_root=TOL_ROOT):
    """Continue a ghost or embedded periodic record from ``t_from`` to ``t_to``.

    Raises ``LostTrack`` when the corrector fails on the way.
    """
    field = family.field
    n = max(1, int(math.ceil(abs(t_to - t_from) / max_step)))
    ts = np.linspace(t_from, t_to, n + 1)[1:]
    if isinstance(rec, cz.GhostOrbitRec):
        z = cz.zero_record(field, rec.zero, t_from)
        lam = rec.eigenvalue
        for t in ts:
            z = _continue_zero(field, z, z.point, t)
            lam = min(_pairs(z) or [complex(math.nan, math.nan)], key=lambda w: abs(w - lam))
            if not np.isfinite(lam.real):
                raise LostTrack("complex pair disappeared")
        trace = 2.0 * lam.real
        kind = "boundary" if abs(trace) < cz.TOL_TRACE else ("ghost" if trace < 0 else None)
        if kind is None:
            raise LostTrack("eigenvalue pair left the ghost half-plane")
        plane = cz.eigen_plane(z.jacobian, lam)
        weight = weight_ghost(z.jacobian, rec.degree) if kind == "ghost" else None
        return cz.GhostOrbitRec(zero=z.point, eigenvalue=lam, plane_basis=plane, trace=trace,
                                degree=rec.degree, period=2 * math.pi * rec.degree / lam.imag,
                                weight=weight, kind=kind)
    if field.is_suspension:
        k = int(round(rec.minimal_period))
        p = rec.base_point
        emb = cz.map_embedded(field, cz.map_orbit_points(field.map, p[1:], k, t_from), k, t_from,
                              dmax, tol_root)
    else:
        try:
            emb = cz._embedded(field, rec.base_point, rec.minimal_period, t_from, opts, dmax,
                               tol_root)
        except OrbitCountError as exc:
            raise LostTrack(f"record does not refine at t = {t_from}: {exc}") from exc
    for t in ts:
        emb = _continue_orbit(field, emb, emb.x, emb.s1, t, opts, dmax, tol_root)
    win = Window(Region.ball([0.0] * field.ambient_dim, 1e9) if not field.is_suspension
                 else Region.box([-1e9, -1e9], [1e9, 1e9]), s_max=emb.s1 * rec.degree * (1 + 1e-9))
    recs = cz._cover_records(emb, win, win.region, rec.orbit_id, dmax, tol_root, margin=math.inf)
    return recs[min(rec.degree, len(recs)) - 1]


class HomotopySweep(BaseEstimator):
    """Estimator-style sweep: ``HomotopySweep(s_max=7).fit(family)`` sets ``report_``."""

    def __init__(self, s_max=7.0, region=None, degree_max=None, n_grid=N_GRID, t_grid=None,
                 n_checkpoints=N_CHECKPOINTS, tol=1e-10, tol_event=TOL_EVENT,
                 tol_margin=TOL_MARGIN, per_dim=None, transient=None, dmax=DMAX,
                 tol_root=TOL_ROOT, n_jobs=1):
        self.s_max = s_max
        self.region = region
        self.degree_max = degree_max
        self.n_grid = n_grid
        self.t_grid = t_grid
        self.n_checkpoints = n_checkpoints
        self.tol = tol
        self.tol_event = tol_event
        self.tol_margin = tol_margin
        self.per_dim = per_dim
        self.transient = transient
        self.dmax = dmax
        self.tol_root = tol_root
        self.n_jobs = n_jobs

    def fit(self, family):
        region = self.region
        if region is None:
            region = default_region(family.field)
        elif isinstance(region, dict):
            region = Region.from_dict(region)
        self.window_ = Window(region=region, s_max=float(self.s_max), degree_max=self.degree_max)
        grid = self.t_grid if self.t_grid is not None else default_grid(family, self.n_grid)
        self.report_ = audit_invariance(
            family, self.window_, grid, opts=IntegratorOpts(tol=self.tol), dmax=self.dmax,
            tol_root=self.tol_root, per_dim=self.per_dim, n_checkpoints=self.n_checkpoints,
            tol_event=self.tol_event, tol_margin=self.tol_margin, transient=self.transient,
            n_jobs=self.n_jobs)
        self.events_ = self.report_.events
        self.verdict_ = self.report_.verdict["status"]
        return self
