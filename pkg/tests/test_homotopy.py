import math

import numpy as np
import pytest

from orbitcount import census as cz
from orbitcount import homotopy as hm
from orbitcount.census import OrbitCensus
from orbitcount.errors import LostTrack, UnresolvedEvent
from orbitcount.families import constant_family, hopf_slowdown
from orbitcount.fields import FamilySpec, linear_field, period_doubling, planar_minus
from orbitcount.homotopy import (EventRecord, HomotopySweep, audit_invariance, continue_record,
                                 default_grid, detect_events)
from orbitcount.window import Region, Window

DISK = Region.ball([0.0, 0.0], 1.5)


def test_continue_map_fixed_point_across_doubling():
    fam = FamilySpec(period_doubling())
    c = OrbitCensus(s_max=2.5, degree_max=2).fit(fam.field, -1.0).census_
    rec = next(r for r in c.orbits if r.degree == 1 and r.minimal_period == 1)
    out = continue_record(fam, rec, -1.0, 1.0)
    assert out.epsilon1 == 1
    assert np.allclose(out.base_point[1:], 0.0, atol=1e-9)


def test_continue_ghost_keeps_weight():
    fam = FamilySpec(planar_minus())
    g = OrbitCensus().fit(fam.field, 0.2).census_.ghosts[0]
    out = continue_record(fam, g, 0.2, 0.8)
    assert out.weight == -1
    assert out.eigenvalue.real == pytest.approx(-0.8, abs=1e-9)


def test_continue_orbit_through_collapse_loses_track():
    fam = FamilySpec(planar_minus())
    o = OrbitCensus().fit(fam.field, -0.2).census_.orbits[0]
    with pytest.raises(LostTrack):
        continue_record(fam, o, -0.2, 0.2)


def test_continue_orbit_follows_radius():
    fam = FamilySpec(planar_minus())
    o = OrbitCensus().fit(fam.field, -0.2).census_.orbits[0]
    out = continue_record(fam, o, -0.2, -0.6)
    assert np.linalg.norm(out.base_point) == pytest.approx(math.sqrt(0.6), abs=1e-7)
    assert out.weight == -1


def test_constant_family_has_no_events():
    fam = constant_family(linear_field([[-0.3, -1.0], [1.0, -0.3]]), (0.0, 1.0))
    rep = audit_invariance(fam, Window(DISK, 7.0), np.linspace(0, 1, 5), n_checkpoints=2)
    assert rep.events == [] and rep.passed
    assert rep.totals == [-1] * 5


def test_sweep_rows_and_estimator():
    est = HomotopySweep(s_max=7.0, region=DISK, t_grid=list(np.linspace(-1, 1, 17)),
                        n_checkpoints=3)
    assert est.get_params()["n_checkpoints"] == 3
    est.fit(FamilySpec(planar_minus()))
    rep = est.report_
    assert est.verdict_ == "pass"
    (event,) = est.events_
    assert event.kind == "ghostBoundary" and event.weight_before == event.weight_after == -1
    rows = rep.rows()
    assert len(rows) == 17
    # t = 0 is the boundary orbit itself: reported, but kept out of the audit
    assert rep.verdict["degenerate_points"] == [0.0]
    for t, total, w1, w2, n_orb, n_gh in rows:
        if t == 0.0:
            continue
        assert total == w1 == -1 and w2 == 0
        assert (n_orb, n_gh) == ((1, 0) if t < 0 else (0, 1))


def test_window_exit_is_reported_as_explained_failure():
    fam = hopf_slowdown()
    rep = HomotopySweep(s_max=7.0, n_grid=16).fit(fam).report_
    assert not rep.passed
    assert rep.verdict["explained_by_window"] is True
    kinds = {e.kind for e in rep.events}
    assert kinds == {"windowBoundary"}
    assert rep.totals[0] == 2 and rep.totals[-1] == 0


def test_detect_events_raises_on_collision(monkeypatch):
    def fake(events, tol_event):
        return [{"t": 0.0, "reason": "collision", "events": []}]

    monkeypatch.setattr(hm, "_collisions", fake)
    fam = constant_family(linear_field([[-0.3, -1.0], [1.0, -0.3]]), (0.0, 1.0))
    with pytest.raises(UnresolvedEvent):
        detect_events(fam, Window(DISK, 7.0), [0.0, 1.0], n_checkpoints=1)


def test_grid_validation_and_default_grid():
    fam = FamilySpec(planar_minus())
    assert default_grid(fam, 5) == [-1.0, -0.5, 0.0, 0.5, 1.0]
    with pytest.raises(ValueError):
        audit_invariance(fam, Window(DISK, 7.0), [0.0])


def test_event_record_serializes():
    ev = EventRecord(t_star=0.1, kind="fold", carriers=["O1", "O2"], weight_before=0,
                     weight_after=0, interval=(0.0, 0.2), details={})
    d = ev.to_dict()
    assert d["kind"] == "fold" and d["carriers"] == ["O1", "O2"] and d["t_star"] == 0.1
