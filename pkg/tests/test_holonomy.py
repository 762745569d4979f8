import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from orbitcount.errors import NotRigid, NotSuperRigid, NotSuperRigidGhost
from orbitcount.holonomy import (classify_holonomy, epsilon, weight_family, weight_ghost,
                                 weight_periodic)


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_epsilon_of_scalar_holonomy():
    assert epsilon([[0.5]], 1) == -1
    assert epsilon([[0.5]], 2) == -1
    assert epsilon([[-0.5]], 1) == -1
    assert epsilon([[-0.5]], 2) == -1
    assert epsilon([[-2.0]], 1) == -1
    assert epsilon([[-2.0]], 2) == 1
    assert epsilon([[3.0]], 1) == 1


def test_weight_periodic_by_degree():
    flip = np.diag([-2.0])
    assert weight_periodic(flip, 1).weight == -1
    assert weight_periodic(flip, 2).weight == 1
    assert weight_periodic(flip, 3).weight == 0
    attracting = np.diag([0.2, 0.3])
    assert weight_periodic(attracting, 1).weight == 1
    assert weight_periodic(attracting, 2).weight == 0


def test_root_of_unity_holonomy_is_rejected():
    with pytest.raises(NotSuperRigid):
        weight_periodic(_rotation(2 * np.pi / 5), 1)
    with pytest.raises(NotRigid):
        epsilon(np.diag([-1.0, 0.5]), 2)
    rep = classify_holonomy(_rotation(2 * np.pi / 3) * 1.0, dmax=6)
    assert rep.d_rigid[1] and rep.d_rigid[2] and not rep.d_rigid[3] and not rep.d_rigid[6]


def test_rigidity_report_counts_unit_eigenvalues():
    rep = classify_holonomy(np.diag([1.0, -1.0, 0.5]))
    assert rep.eigenvalue_one_multiplicity == 1
    assert rep.eigenvalue_minus_one_multiplicity == 1
    assert not rep.super_rigid


def test_ghost_weights():
    sink = np.array([[-1.0, -2.0], [2.0, -1.0]])
    assert weight_ghost(sink, 1) == -1
    assert weight_ghost(sink, 2) == 0
    saddle_focus = np.array([[-0.1, -1.0, 0.0], [1.0, -0.1, 0.0], [0.0, 0.0, 0.2]])
    assert weight_ghost(saddle_focus, 1) == -1
    stable = np.array([[-0.1, -1.0, 0.0], [1.0, -0.1, 0.0], [0.0, 0.0, -0.5]])
    assert weight_ghost(stable, 1) == 1


def test_ghost_with_trace_zero_partner_has_negative_weight():
    # trace zero forces the real eigenvalue to be -2 Re(lambda) > 0, so det > 0
    a = np.array([[-0.3, -1.0, 0.0], [1.0, -0.3, 0.0], [0.0, 0.0, 0.6]])
    assert weight_ghost(a, 1) == -1


def test_non_hyperbolic_ghost_is_rejected():
    with pytest.raises(NotSuperRigidGhost):
        weight_ghost(np.array([[0.0, -1.0], [1.0, 0.0]]), 1)
    with pytest.raises(NotSuperRigidGhost):
        weight_ghost(np.diag([-1.0, -1.0]), 1)


def test_family_formula():
    assert weight_family(0, 0, 2, 1) == 2
    assert weight_family(0, 0, 2, 2) == 0
    assert all(weight_family(0, 0, 2, d) == 0 for d in range(3, 9))
    assert weight_family(1, 0, 2, 2) == 2


def _hyperbolic(rng, n):
    """Random real matrix whose eigenvalues avoid the unit circle by a margin."""
    while True:
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        lam = rng.uniform(0.2, 0.8, n) * rng.choice([-1, 1], n)
        flip = rng.random(n) < 0.5
        lam[flip] = 1.0 / lam[flip]
        f = q @ np.diag(lam) @ q.T
        if np.linalg.cond(q) < 1e3:
            return f


@given(st.integers(0, 10_000), st.integers(1, 5))
def test_conjugacy_invariance(seed, n):
    rng = np.random.default_rng(seed)
    f = _hyperbolic(rng, n)
    g = rng.normal(size=(n, n)) + 3 * np.eye(n)
    assume(np.linalg.cond(g) < 1e3)
    h = g @ f @ np.linalg.inv(g)
    for d in (1, 2, 3, 4):
        assert epsilon(f, d) == epsilon(h, d)
    assert weight_periodic(f, 1).weight == weight_periodic(h, 1).weight
    assert weight_periodic(f, 2).weight == weight_periodic(h, 2).weight


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_parity_collapse_and_vanishing_high_degree(seed, n):
    f = _hyperbolic(np.random.default_rng(seed), n)
    assert epsilon(f, 1) == epsilon(f, 3) == epsilon(f, 5)
    assert epsilon(f, 2) == epsilon(f, 4) == epsilon(f, 6)
    for d in (3, 4, 7):
        assert weight_periodic(f, d).weight == 0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_geodesic_sign_convention(n):
    rng = np.random.default_rng(n)
    lam = np.concatenate([rng.uniform(0.1, 0.9, n - 1), rng.uniform(1.1, 5.0, n - 1)])
    f = np.diag(lam)
    assert epsilon(f, 1) == epsilon(f, 2) == (-1) ** (n - 1)
