import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orbitcount.errors import BlowUp, OffManifold
from orbitcount.families import random_family
from orbitcount.fields import (PolynomialField, builtin, hopf_ab, linear_field, planar_minus,
                               period_doubling)
from orbitcount.flow import IntegratorOpts, flow, flow_samples, flow_with_monodromy

from conftest import GOLDEN


def test_linear_rotation_matches_closed_form():
    f = linear_field([[0.0, -1.0], [1.0, 0.0]])
    s = 2.3
    x, m = flow_with_monodromy(f, [1.0, 0.0], s)
    assert np.allclose(x, [math.cos(s), math.sin(s)], atol=1e-9)
    assert np.allclose(m, [[math.cos(s), -math.sin(s)], [math.sin(s), math.cos(s)]], atol=1e-9)


def test_linear_growth_monodromy_is_exponential():
    a = np.array([[0.3, 1.0], [0.0, -0.7]])
    x, m = flow_with_monodromy(linear_field(a), [0.2, 0.1], 1.5)
    from scipy.linalg import expm
    assert np.allclose(m, expm(1.5 * a), atol=1e-8)
    assert np.allclose(x, expm(1.5 * a) @ [0.2, 0.1], atol=1e-9)


def test_planar_minus_limit_cycle_radius():
    # at t = -0.25 the circle of radius 1/2 is invariant and traversed at unit rate
    f = planar_minus()
    x = flow(f, [0.5, 0.0], 2 * math.pi, t=-0.25)
    assert np.allclose(x, [0.5, 0.0], atol=1e-8)
    samples = flow_samples(f, [0.5, 0.0], 2 * math.pi, t=-0.25, n=16)
    assert np.allclose(np.linalg.norm(samples, axis=1), 0.5, atol=1e-9)


def test_hopf_flow_stays_on_sphere():
    f = hopf_ab(1.0, GOLDEN)
    x0 = np.array([0.6, 0.0, 0.8, 0.0])
    x = flow(f, x0, 17.0)
    assert abs(np.linalg.norm(x) - 1.0) < 1e-9
    assert np.allclose(x[:2], [0.6 * math.cos(17.0), 0.6 * math.sin(17.0)], atol=1e-8)
    with pytest.raises(OffManifold):
        flow_with_monodromy(f, [1.0, 1.0, 0.0, 0.0], 1.0)


def test_monodromy_matches_finite_differences():
    f = planar_minus()
    x0, s, t, h = np.array([0.3, -0.2]), 3.0, 0.1, 1e-6
    opts = IntegratorOpts(tol=1e-12)
    _, m = flow_with_monodromy(f, x0, s, t, opts)
    fd = np.column_stack([(flow(f, x0 + h * e, s, t, opts) - flow(f, x0 - h * e, s, t, opts)) / (2 * h)
                          for e in np.eye(2)])
    assert np.allclose(m, fd, rtol=1e-5, atol=1e-6)


def test_blow_up_is_reported():
    f = PolynomialField.from_terms(1, [(0, (2,), 1.0)])
    with pytest.raises(BlowUp):
        flow(f, [1.0], 2.0)


def test_suspension_flow_iterates_the_return_map():
    f = period_doubling()
    x, m = flow_with_monodromy(f, [0.0, 1.0, 0.0], 2.0, t=0.5)
    p, d = f.map.iterate(np.array([1.0, 0.0]), 2, 0.5)
    assert np.allclose(x[1:], p) and x[0] == 2.0
    assert np.allclose(m[1:, 1:], d)


def test_builtin_catalog_and_unknown_name():
    assert builtin("planar_plus").name == "planar_plus"
    assert builtin("hopf").sphere_radius == 1.0
    with pytest.raises(ValueError):
        builtin("lorenz")


@given(st.integers(0, 5000), st.sampled_from([2, 3]), st.floats(-1, 1))
def test_jet_jacobian_matches_central_differences(seed, dim, t):
    field = random_family(np.random.default_rng(seed), dim=dim).field
    x = np.random.default_rng(seed + 1).uniform(-1.5, 1.5, dim)
    jet = field.evaluate(x, t)
    h = 1e-6
    fd = np.column_stack([(field.evaluate(x + h * e, t).value - field.evaluate(x - h * e, t).value)
                          / (2 * h) for e in np.eye(dim)])
    assert np.allclose(jet.jacobian, fd, rtol=1e-5, atol=1e-7)


@given(st.floats(0.1, 4.0), st.floats(0.1, 4.0))
def test_flow_composition(s1, s2):
    f = planar_minus()
    x0 = np.array([0.4, 0.1])
    opts = IntegratorOpts(tol=1e-11)
    direct = flow(f, x0, s1 + s2, 0.2, opts)
    composed = flow(f, flow(f, x0, s1, 0.2, opts), s2, 0.2, opts)
    assert np.allclose(direct, composed, atol=1e-8)
