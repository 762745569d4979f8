"""Acceptance criteria 1-8, one test each.

Every test prints one ``[PASS]``/``[FAIL]`` line (also under output capture)
and then asserts. Run alone with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``.
"""

import math
import sys
import time
import warnings

import numpy as np
import pytest

from orbitcount.census import OrbitCensus
from orbitcount.cli import main as cli_main
from orbitcount.cli import packaged_scenarios
from orbitcount.errors import IncompleteCensus
from orbitcount.families import invariance_suite, random_window
from orbitcount.fields import FamilySpec, hopf_ab, period_doubling, planar_minus, planar_plus
from orbitcount.flow import IntegratorOpts
from orbitcount.holonomy import epsilon, weight_family
from orbitcount.homotopy import HomotopySweep, audit_invariance
from orbitcount.lefschetz import (brute_force_orbit_count, cat_map, lefschetz_number,
                                  moebius_weights)
from orbitcount.linalg_core import eigenvalues, parity_sign, sign_det_shifted
from orbitcount.window import Region

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
DISK = Region.ball([0.0, 0.0], 1.5)
PD_BOX = Region.box([-20.0, -20.0], [20.0, 20.0])


@pytest.fixture
def verdict(capsys):
    def emit(n, title, problems, detail=""):
        ok = not problems
        line = f"[{'PASS' if ok else 'FAIL'}] acceptance {n}: {title}"
        if detail:
            line += f" ({detail})"
        if problems:
            line += " -- " + "; ".join(problems[:5])
        with capsys.disabled():
            print("\n" + line, flush=True)
        assert ok, line
    return emit


def test_hopf_census(verdict):
    problems = []
    c = OrbitCensus(s_max=7.0, degree_max=3).fit(hopf_ab(1.0, GOLDEN)).census_
    emb = c.embedded
    if len(emb) != 2:
        problems.append(f"{len(emb)} embedded orbits")
    for o in emb:
        if (o.epsilon1, o.epsilon2) != (1, 1):
            problems.append(f"eps = {(o.epsilon1, o.epsilon2)} at period {o.minimal_period}")
    periods = sorted(o.minimal_period for o in emb)
    for got, want in zip(periods, sorted([2 * math.pi, 2 * math.pi / GOLDEN])):
        if abs(got - want) > 1e-6:
            problems.append(f"period {got} vs {want}")
    w = c.weights_by_degree()
    if w.get(1) != 2 or w.get(2, 0) != 0 or w.get(3, 0) != 0:
        problems.append(f"weights {w} at sMax 7")
    # a larger cutoff admits degree-2 and degree-3 covers; their totals must still vanish
    w13 = OrbitCensus(s_max=13.0, degree_max=3).fit(hopf_ab(1.0, GOLDEN)).census_.weights_by_degree()
    if w13 != {1: 2, 2: 0, 3: 0}:
        problems.append(f"weights {w13} at sMax 13")
    verdict(1, "Hopf census n(G1)=2, n(G2)=n(G3)=0", problems,
            f"periods {', '.join(f'{p:.9f}' for p in periods)}")


def _single_boundary_sweep(family, total):
    rep = HomotopySweep(s_max=7.0, region=DISK, n_grid=64).fit(family).report_
    problems = []
    if set(rep.totals) != {total}:
        problems.append(f"{family.field.name} totals {sorted(set(rep.totals))}")
    kinds = [e.kind for e in rep.events]
    if kinds != ["ghostBoundary"]:
        problems.append(f"{family.field.name} events {kinds}")
    elif abs(rep.events[0].t_star) > 1e-6:
        problems.append(f"{family.field.name} event at {rep.events[0].t_star}")
    if not rep.passed:
        problems.append(f"{family.field.name} verdict {rep.verdict}")
    return rep, problems


@pytest.mark.slow
def test_planar_examples(verdict):
    minus, p1 = _single_boundary_sweep(FamilySpec(planar_minus()), -1)
    plus, p2 = _single_boundary_sweep(FamilySpec(planar_plus()), 0)
    problems = p1 + p2
    c = OrbitCensus(s_max=7.0, region=DISK).fit(planar_minus(), -0.25).census_
    radius_err = math.inf
    if len(c.orbits) == 1:
        radius_err = float(np.abs(np.linalg.norm(c.orbits[0].samples, axis=1) - 0.5).max())
    if radius_err > 1e-6:
        problems.append(f"orbit radius error {radius_err}")
    ts = [e.t_star for e in minus.events + plus.events]
    verdict(2, "planar totals -1 / 0 with one ghostBoundary at t=0", problems,
            f"t* = {', '.join(f'{t:.1e}' for t in ts)}; radius error {radius_err:.1e}")


@pytest.mark.slow
def test_period_doubling(verdict):
    rep = HomotopySweep(s_max=2.5, degree_max=2, region=PD_BOX, n_grid=64).fit(
        FamilySpec(period_doubling())).report_
    problems = []
    for t, c in zip(rep.grid, rep.censuses):
        by = c.weights_by_period_index()
        if by.get(1) != 1:
            problems.append(f"n(G1) = {by.get(1)} at t={t:.4f}")
        if abs(t) > 0.05 and by.get(2) != -1:
            problems.append(f"n(G2) = {by.get(2)} at t={t:.4f}")
        slice2 = sorted((r.degree, r.weight) for r in c.records_by_period_index(2))
        if t > 0 and slice2 != [(1, -1), (2, 0)]:
            problems.append(f"G2 slice {slice2} at t={t:.4f}")
        if t < 0 and slice2 != [(2, -1)]:
            problems.append(f"G2 slice {slice2} at t={t:.4f}")
    kinds = [e.kind for e in rep.events]
    if kinds != ["periodDoubling"]:
        problems.append(f"events {kinds}")
    elif abs(rep.events[0].t_star) > 1e-6:
        problems.append(f"event at {rep.events[0].t_star}")
    t_star = rep.events[0].t_star if rep.events else float("nan")
    verdict(3, "period doubling at t=0 with the G2 table", problems, f"t* = {t_star:.1e}")


def _degenerate(a, tol=1e-6):
    eig = np.linalg.eigvals(a)
    if any(0.0 < abs(z.imag) < tol for z in eig):
        return True
    for d in range(1, 5):
        if any(abs(z ** d - 1.0) < tol for z in eig):
            return True
        if abs(np.linalg.det(np.linalg.matrix_power(a, d) - np.eye(len(a)))) < tol:
            return True
    return False


def test_parity_identity_suite(verdict):
    rng = np.random.default_rng(4)
    problems, resampled = [], 0
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        a = rng.uniform(-3.0, 3.0, (n, n))
        while _degenerate(a):
            resampled += 1
            a = rng.uniform(-3.0, 3.0, (n, n))
        spec = eigenvalues(a)
        for d in range(1, 5):
            if sign_det_shifted(a, d) != parity_sign(spec, d):
                problems.append(f"dim {n}, d={d}")
    verdict(4, "parity identity on 1000 random matrices", problems,
            f"{4000 - len(problems)}/4000 agree, {resampled} resampled")


def test_moebius_oracle(verdict):
    t0 = time.perf_counter()
    spec = cat_map()
    h = spec.homology()
    weights = moebius_weights(h, 6)
    brute = brute_force_orbit_count(spec, 6)
    problems = []
    if weights != brute:
        problems.append(f"moebius {weights} vs brute force {brute}")
    for n in range(1, 7):
        lhs = sum(d * weights[d] for d in range(1, n + 1) if n % d == 0)
        if lhs != lefschetz_number(h, n):
            problems.append(f"inversion fails at n={n}")
    elapsed = time.perf_counter() - t0
    if elapsed >= 10.0:
        problems.append(f"runtime {elapsed:.1f}s")
    verdict(5, "cat map Moebius weights equal brute force for d <= 6", problems,
            f"weights {[weights[d] for d in range(1, 7)]}, {elapsed:.2f}s")


def test_family_formula(verdict):
    problems = []
    if weight_family(0, 0, 2, 1) != 2:
        problems.append("Hopf n != 2")
    if weight_family(0, 0, 2, 2) != 0:
        problems.append("Hopf n(2*) != 0")
    if any(weight_family(0, 0, 2, d) != 0 for d in range(3, 13)):
        problems.append("Hopf n(d*) != 0 for some d > 2")
    rng = np.random.default_rng(6)
    for n in (2, 3, 4):
        lam = np.concatenate([rng.uniform(0.05, 0.95, n - 1), rng.uniform(1.05, 20.0, n - 1)])
        q, _ = np.linalg.qr(rng.normal(size=(2 * n - 2, 2 * n - 2)))
        f = q @ np.diag(lam) @ q.T
        if not epsilon(f, 1) == epsilon(f, 2) == (-1) ** (n - 1):
            problems.append(f"geodesic sign wrong for n={n}")
    verdict(6, "family formula and geodesic signs", problems)


@pytest.mark.slow
def test_invariance_suite(verdict):
    problems = []
    t0 = time.perf_counter()
    grid = list(np.linspace(-1.0, 1.0, 17))
    n_events = 0
    worst_margin = worst_period = math.inf
    for fam in invariance_suite(50):
        window = random_window(fam)
        dim = fam.field.ambient_dim
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IncompleteCensus)
            rep = audit_invariance(fam, window, grid, n_checkpoints=3, per_dim=5 if dim == 2 else 3,
                                   opts=IntegratorOpts(tol=1e-9))
        if not rep.passed:
            problems.append(f"{fam.label}: {rep.verdict}")
        for e in rep.events:
            n_events += 1
            if e.kind == "windowBoundary":
                problems.append(f"{fam.label}: window boundary near t={e.t_star:.4f}")
            if e.weight_before != e.weight_after:
                problems.append(f"{fam.label}: {e.kind} changes total at t={e.t_star:.4f}")
        # auto-check that the window stays clear of every record
        for c in rep.censuses:
            for r in c.orbits:
                worst_margin = min(worst_margin, r.margin / window.region.diameter)
                worst_period = min(worst_period, abs(window.s_max - r.total_period) / window.s_max)
            for g in c.ghosts:
                worst_margin = min(worst_margin, window.region.margin(g.zero) / window.region.diameter)
                worst_period = min(worst_period, abs(window.s_max - g.period) / window.s_max)
    if worst_margin < 0.05 or worst_period < 0.05:
        problems.append(f"records approach the window: margin {worst_margin:.3f}, "
                        f"period gap {worst_period:.3f}")
    elapsed = time.perf_counter() - t0
    verdict(7, "invariance audit on 50 random families", problems,
            f"{n_events} events, min margin {worst_margin:.2f} diam, "
            f"min period gap {worst_period:.2f} sMax, {elapsed:.0f}s")


@pytest.mark.slow
def test_determinism(verdict, tmp_path):
    problems = []
    checked = 0
    for name in packaged_scenarios():
        kind = None
        outputs = []
        for run in ("a", "b"):
            out = tmp_path / run / name
            for cmd in ("census", "sweep", "lefschetz"):
                cli_main([cmd, name, "--no-meta", "--out", str(out)])
                if out.exists() and any(out.iterdir()):
                    kind = cmd
                    break
            outputs.append({p.name: p.read_bytes() for p in out.iterdir()} if out.exists() else {})
        if kind is None:
            continue  # scenarios that exit with an error write nothing
        checked += 1
        if outputs[0] != outputs[1]:
            problems.append(f"{name} differs between runs")
    verdict(8, "byte-identical reports with --no-meta", problems,
            f"{checked} golden scenarios")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
