"""Weighted counts of ghost and periodic orbits of vector fields.

The package enumerates, inside a compact window, the zeros-with-rotation
("ghosts") and closed orbits of a flow, assigns each an integer weight from
its linearization, and checks that window totals stay constant along a
homotopy of fields. A Lefschetz/Moebius module ties the same weights to
homological data for maps.
"""

from .census import Census, OrbitCensus, build_census
from .config import Scenario, load_scenario, parse_scenario
from .errors import (ConfigError, IncompleteCensus, LostTrack, NonIntegerLefschetz,
                     NonIntegerWeight, NotRigid, NotSuperRigid, OrbitCountError,
                     UnresolvedEvent)
from .fields import FamilySpec, PolynomialField, builtin
from .flow import IntegratorOpts, flow, flow_with_monodromy
from .holonomy import (classify_holonomy, epsilon, weight_family, weight_ghost,
                       weight_periodic)
from .homotopy import HomotopySweep, SweepReport, audit_invariance, continue_record, detect_events
from .lefschetz import (DiscreteMapSpec, HomologyData, brute_force_orbit_count,
                        lefschetz_number, moebius_weights, pi_series)
from .linalg_core import eigenvalues, sign_det_shifted
from .window import Region, Window

__all__ = [
    "Census", "OrbitCensus", "build_census",
    "Scenario", "load_scenario", "parse_scenario",
    "ConfigError", "IncompleteCensus", "LostTrack", "NonIntegerLefschetz", "NonIntegerWeight",
    "NotRigid", "NotSuperRigid", "OrbitCountError", "UnresolvedEvent",
    "FamilySpec", "PolynomialField", "builtin",
    "IntegratorOpts", "flow", "flow_with_monodromy",
    "classify_holonomy", "epsilon", "weight_family", "weight_ghost", "weight_periodic",
    "HomotopySweep", "SweepReport", "audit_invariance", "continue_record", "detect_events",
    "DiscreteMapSpec", "HomologyData", "brute_force_orbit_count", "lefschetz_number",
    "moebius_weights", "pi_series",
    "eigenvalues", "sign_det_shifted",
    "Region", "Window",
]
