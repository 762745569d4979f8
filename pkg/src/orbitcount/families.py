"""Synthetic one-parameter families used by the invariance suite and the window demo."""

import math

import numpy as np

from .fields import FamilySpec, PolynomialField, hopf_ab
from .window import Region, Window

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def _monomials(dim, degree):
    out = []
    for e in np.ndindex(*([degree + 1] * dim)):
        if sum(e) == degree:
            out.append(tuple(int(v) for v in e))
    return out


def random_family(rng, dim=2, *, perturbation=0.08, label=None):
    """A random polynomial family of degree <= 3 in ``dim`` = 2 or 3 variables.

    The first two coordinates carry a rotation at rate ``omega`` with growth
    ``mu(t)`` damped by ``-kappa |x|^2 x``; further coordinates decay at rate
    ``nu``. Random quadratic and cubic terms of size ``perturbation`` (some
    depending on ``t``) break every symmetry. ``mu`` changes sign inside the
    sweep for about half of the draws, so those families carry a Hopf-type event.
    """
    if dim not in (2, 3):
        raise ValueError("random families are planar or three-dimensional")
    omega = rng.uniform(0.9, 1.2)
    kappa = rng.uniform(1.0, 2.0)
    if rng.random() < 0.5:
        t0 = rng.uniform(-0.6, 0.6)
        slope = rng.uniform(0.2, 0.5) * rng.choice([-1.0, 1.0])
        mu = (-slope * t0, slope)
    else:
        level = rng.uniform(0.15, 0.4) * rng.choice([-1.0, 1.0])
        mu = (level, rng.uniform(-0.1, 0.1))
    terms = []
    unit = [0] * dim

    def e(*idx):
        out = list(unit)
        for i in idx:
            out[i] += 1
        return tuple(out)

    terms += [(0, e(0), list(mu)), (0, e(1), -omega), (1, e(0), omega), (1, e(1), list(mu))]
    for i in (0, 1):
        terms += [(i, e(i, 0, 0), -kappa), (i, e(i, 1, 1), -kappa)]
    if dim == 3:
        nu = rng.uniform(0.6, 1.5)
        terms += [(2, e(2), -nu), (2, e(2, 2, 2), -kappa)]
    for deg in (2, 3):
        for mono in _monomials(dim, deg):
            for out in range(dim):
                c0 = rng.uniform(-perturbation, perturbation)
                c1 = rng.uniform(-perturbation, perturbation) / 2.0
                terms.append((out, mono, [c0, c1]))
    field = PolynomialField.from_terms(
        dim, terms, name=label or f"random{dim}d",
        params={"omega": omega, "kappa": kappa, "mu": list(mu)})
    return FamilySpec(field, (-1.0, 1.0), label=label or f"random{dim}d",
                      meta={"omega": omega, "kappa": kappa, "mu": list(mu)})


def random_window(family, s_max=9.0, radius=2.0):
    """Ball of ``radius`` about the origin with period cutoff ``s_max``.

    Degree-one ghosts have period at most ``2 pi / 0.9 < 7`` and degree-two
    ghosts at least ``2 pi / 1.2 * 2 > 10``, so ``s_max = 9`` leaves room on both
    sides; the sweep still re-checks every record against the boundary.
    """
    return Window(Region.ball([0.0] * family.field.ambient_dim, radius), s_max=s_max)


def invariance_suite(n=50, seed=20240611):
    """``n`` reproducible random families, alternating planar and 3D."""
    rng = np.random.default_rng(seed)
    return [random_family(rng, dim=2 if k % 2 == 0 else 3, label=f"random{k:02d}")
            for k in range(n)]


def hopf_slowdown(rate=0.9):
    """Hopf field on S^3 whose rotation rates shrink by ``1 - rate t`` over t in [0, 1].

    No zero ever appears, so the two closed orbits can only leave a fixed
    window through its period cutoff.
    """
    field = hopf_ab((1.0, -rate), (GOLDEN, -rate * GOLDEN), name="hopf_slowdown")
    return FamilySpec(field, (0.0, 1.0), label="hopf_slowdown", meta={"rate": rate})


def constant_family(field, t_range=(-1.0, 1.0)):
    return FamilySpec(field, t_range, label=f"constant_{field.name}")
