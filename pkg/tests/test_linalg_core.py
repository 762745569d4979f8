import numpy as np
import pytest
from hypothesis import assume, example, given, strategies as st
from hypothesis.extra.numpy import arrays

from orbitcount.errors import AmbiguousBoundary, NonFinite
from orbitcount.linalg_core import (balance, eigenvalues, hessenberg, parity_sign,
                                    real_eigenvalue_counts, sign_det_shifted)


def matrices(max_dim=7, bound=3.0):
    return st.integers(1, max_dim).flatmap(
        lambda n: arrays(np.float64, (n, n),
                         elements=st.floats(-bound, bound, allow_nan=False, width=64)))


def _match(ours, ref):
    """Greedy nearest matching of two eigenvalue multisets; returns the worst distance."""
    ref = list(ref)
    worst = 0.0
    for z in ours:
        k = int(np.argmin([abs(z - r) for r in ref]))
        worst = max(worst, abs(z - ref.pop(k)))
    return worst


def _tiny_block(peak, tiny):
    a = np.full((4, 4), tiny)
    a[0, 0] = peak
    return a


@given(matrices())
@example(_tiny_block(1.0, 1.72863007e-237))
@example(np.array([[0., -1, 0, 0, 0, 0, 0], [0] * 7, [1., 0, 0, 0, 0, 0, 1], [0] * 7, [0] * 7,
                   [0] * 7, [1., 0, 0, 0, 0, 0, 0]]))
def test_eigenvalues_agree_with_lapack(a):
    ref = np.linalg.eigvals(a)
    ours = eigenvalues(a).eigenvalues
    assert len(ours) == a.shape[0]
    n = a.shape[0]
    scale = 1.0 + np.linalg.norm(a)
    # backward error: each computed z is an exact eigenvalue of a nearby matrix
    for z in ours:
        assert np.linalg.svd(a - z * np.eye(n), compute_uv=False)[-1] < 1e-12 * scale
    # forward error of a defective cluster of size k grows like eps**(1/k)
    assert _match(ours, ref) < max(1e-6, 10 * np.finfo(float).eps ** (1 / n)) * scale


@given(matrices())
def test_complex_eigenvalues_come_in_exact_conjugate_pairs(a):
    eig = eigenvalues(a).eigenvalues
    cplx = sorted((z for z in eig if z.imag != 0.0), key=lambda z: (z.real, abs(z.imag), z.imag))
    assert len(cplx) % 2 == 0
    for p, q in zip(cplx[::2], cplx[1::2]):
        assert p == q.conjugate()


@given(matrices(max_dim=6))
@example(_tiny_block(1.0, 1.72863007e-237))
def test_char_poly_matches_numpy(a):
    cp = np.array(eigenvalues(a).char_poly)
    ref = np.poly(a)[1:]
    assert np.allclose(cp, ref, atol=1e-7 * (1 + np.abs(ref).max()) * (1 + np.linalg.norm(a)) ** a.shape[0])


@given(matrices())
@example(np.array([[8.76330745e-161] * 3, [8.76330745e-161, 1.0, 8.76330745e-161],
                   [8.76330745e-161] * 3]))
def test_balance_and_hessenberg_are_similarities(a):
    b = balance(a)
    h = hessenberg(b)
    assert np.allclose(np.trace(b), np.trace(a), atol=1e-9 * (1 + np.abs(a).sum()))
    assert np.allclose(np.trace(h), np.trace(a), atol=1e-9 * (1 + np.abs(a).sum()))
    assert np.allclose(np.tril(h, -2), 0.0)


def test_balance_terminates_with_roundoff_couplings():
    a = np.array([[-7.75863190e-03, -1.16073722e+00, -1.07922090e-16],
                  [1.16073722e+00, -7.75863190e-03, -3.54168597e-17],
                  [4.14086349e-19, -3.25354376e-16, -6.33915095e-01]])
    eig = eigenvalues(a).eigenvalues
    assert _match(eig, np.linalg.eigvals(a)) < 1e-12


def test_balance_improves_badly_scaled_matrix():
    a = np.array([[1.0, 1e6], [1e-6, 2.0]])
    b = balance(a)
    assert abs(b[0, 1]) < 1e3
    assert _match(eigenvalues(a).eigenvalues, np.linalg.eigvals(a)) < 1e-9


def test_known_spectra():
    rot = np.array([[0.0, -2.0], [2.0, 0.0]])
    assert sorted(eigenvalues(rot).eigenvalues, key=lambda z: z.imag) == [-2j, 2j]
    assert eigenvalues([[3.0]]).eigenvalues == (3 + 0j,)
    d = np.diag([0.5, -4.0, 2.0])
    assert [z.real for z in eigenvalues(d).eigenvalues] == [-4.0, 0.5, 2.0]


def test_non_finite_input_is_rejected():
    with pytest.raises(NonFinite):
        eigenvalues([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        eigenvalues(np.zeros((2, 3)))


def test_real_eigenvalue_counts_and_boundary():
    assert real_eigenvalue_counts(np.diag([0.5, -2.0, 3.0])) == (2, 1)
    with pytest.raises(AmbiguousBoundary):
        real_eigenvalue_counts(np.diag([1.0 + 1e-12, 0.3]))


def test_sign_det_shifted_dead_band():
    assert sign_det_shifted(np.eye(2)) == 0
    assert sign_det_shifted(np.diag([2.0, 3.0])) == 1
    assert sign_det_shifted(np.diag([0.5, 3.0])) == -1
    assert sign_det_shifted(np.diag([-0.5, 3.0]), power=2) == -1


def _generic(a, tol=1e-6):
    for z in np.linalg.eigvals(a):
        for d in (1, 2, 3, 4):
            if abs(z ** d - 1.0) < tol:
                return False
    return all(abs(np.linalg.det(np.linalg.matrix_power(a, d) - np.eye(len(a)))) > tol
               for d in (1, 2, 3, 4))


@given(matrices(), st.integers(1, 4))
@example(_tiny_block(2.0, 7.16248007e-281), 1)
def test_parity_identity(a, d):
    assume(_generic(a))
    assert sign_det_shifted(a, d) == parity_sign(eigenvalues(a), d)
