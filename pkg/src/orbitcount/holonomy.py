"""Rigidity classification of linearized holonomy maps and orbit weights."""

from dataclasses import dataclass, field
import cmath
import math

import numpy as np

from .errors import NotRigid, NotSuperRigid, NotSuperRigidGhost
from .linalg_core import Spectrum, eigenvalues, sign_det_shifted
from .validation import check_positive, check_positive_int, check_square_matrix

DMAX = 12
TOL_ROOT = 1e-6
TOL_IMAG = 1e-9
TOL_REPEATED = 1e-8


@dataclass(frozen=True)
class RigidityReport:
    spectrum: Spectrum
    d_rigid: dict
    super_rigid: bool
    eigenvalue_one_multiplicity: int
    eigenvalue_minus_one_multiplicity: int
    dmax: int = DMAX
    tol_root: float = TOL_ROOT

    def to_dict(self):
        return {
            "eigenvalues": [[z.real, z.imag] for z in self.spectrum.eigenvalues],
            "char_poly": list(self.spectrum.char_poly),
            "d_rigid": {str(d): v for d, v in sorted(self.d_rigid.items())},
            "super_rigid": self.super_rigid,
            "eigenvalue_one_multiplicity": self.eigenvalue_one_multiplicity,
            "eigenvalue_minus_one_multiplicity": self.eigenvalue_minus_one_multiplicity,
            "dmax": self.dmax,
            "tol_root": self.tol_root,
        }


@dataclass(frozen=True)
class WeightedOrbitClass:
    degree: int
    epsilon1: int
    epsilon2: int
    weight: int = field(default=0)

    def __post_init__(self):
        if self.weight not in (-1, 0, 1):
            raise ValueError(f"weight must be in {{-1, 0, 1}}, got {self.weight}")
        if self.degree > 2 and self.weight != 0:
            raise ValueError("weight must vanish for degree > 2")


def _root_distance(lam, d):
    """Distance from ``lam`` to the nearest d-th root of unity."""
    k = round(cmath.phase(lam) * d / (2 * math.pi))
    return abs(lam - cmath.exp(2j * math.pi * k / d))


def classify_holonomy(f, dmax=DMAX, tol_root=TOL_ROOT):
    """Rigidity report of a linearized holonomy matrix up to degree ``dmax``."""
    f = check_square_matrix(f, name="holonomy")
    dmax = check_positive_int(dmax, "dmax")
    tol_root = check_positive(tol_root, "tol_root")
    spec = eigenvalues(f)
    d_rigid = {}
    for d in range(1, dmax + 1):
        d_rigid[d] = all(_root_distance(lam, d) >= tol_root for lam in spec.eigenvalues)
    ones = sum(1 for lam in spec.eigenvalues if abs(lam - 1.0) < tol_root)
    minus = sum(1 for lam in spec.eigenvalues if abs(lam + 1.0) < tol_root)
    return RigidityReport(
        spectrum=spec,
        d_rigid=d_rigid,
        super_rigid=all(d_rigid.values()),
        eigenvalue_one_multiplicity=ones,
        eigenvalue_minus_one_multiplicity=minus,
        dmax=dmax,
        tol_root=tol_root,
    )


def epsilon(f, d, tol_root=TOL_ROOT, report=None):
    """Sign of ``det(f**d - I)`` for a d-rigid holonomy ``f``."""
    d = check_positive_int(d, "d")
    if report is None:
        report = classify_holonomy(f, dmax=d, tol_root=tol_root)
    if not report.d_rigid.get(d, False):
        raise NotRigid(f"holonomy is not {d}-rigid")
    sign = sign_det_shifted(f, d)
    if sign == 0:
        raise NotRigid(f"det(f^{d} - I) is inside the degeneracy dead band")
    return sign


def weight_periodic(f, d, dmax=DMAX, tol_root=TOL_ROOT, report=None):
    """Weight of the degree-``d`` cover of an embedded orbit with holonomy ``f``."""
    d = check_positive_int(d, "d")
    if report is None:
        report = classify_holonomy(f, dmax=max(dmax, 2), tol_root=tol_root)
    if not report.super_rigid:
        raise NotSuperRigid("holonomy has a root-of-unity eigenvalue")
    e1 = epsilon(f, 1, report=report)
    e2 = epsilon(f, 2, report=report)
    if d == 1:
        w = e1
    elif d == 2:
        w = (e2 - e1) // 2
    else:
        w = 0
    return WeightedOrbitClass(degree=d, epsilon1=e1, epsilon2=e2, weight=w)


def check_super_rigid_ghost(jacobian, tol_imag=TOL_IMAG, tol_repeated=TOL_REPEATED):
    """Raise ``NotSuperRigidGhost`` unless the zero is hyperbolic with simple spectrum."""
    spec = eigenvalues(jacobian)
    eig = spec.eigenvalues
    for lam in eig:
        if abs(lam.real) < tol_imag:
            raise NotSuperRigidGhost(f"eigenvalue {lam} is on the imaginary axis")
    for i in range(len(eig)):
        for j in range(i + 1, len(eig)):
            if abs(eig[i] - eig[j]) < tol_repeated:
                raise NotSuperRigidGhost(f"repeated eigenvalue {eig[i]}")
    return spec


def weight_ghost(jacobian, degree, tol_imag=TOL_IMAG, tol_repeated=TOL_REPEATED):
    """``-sgn det(jacobian)`` for degree 1, zero otherwise."""
    degree = check_positive_int(degree, "degree")
    jac = check_square_matrix(jacobian, name="jacobian")
    check_super_rigid_ghost(jac, tol_imag, tol_repeated)
    if degree > 1:
        return 0
    det = float(np.linalg.det(jac))
    return -1 if det > 0 else 1


def weight_family(m1, m2, euler_char, d):
    """Weight of ``d`` times a closed manifold family of embedded orbits.

    ``m1``/``m2`` count the real roots of the residual characteristic
    polynomial in (-inf, 1) and (-1, 1).
    """
    d = check_positive_int(d, "d")
    chi = int(euler_char)
    if d == 1:
        return (-1) ** m1 * chi
    if d == 2:
        return ((-1) ** m2 - (-1) ** m1) // 2 * chi
    return 0
