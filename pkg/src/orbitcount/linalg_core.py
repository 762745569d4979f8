"""Small dense linear algebra for matrices of dimension at most 8.

Eigenvalues come from an in-repo balance / Hessenberg / Francis double-shift
QR pipeline so the classification thresholds used downstream behave the same
on every platform. Determinants use LAPACK's LU via numpy, which keeps the
two routes behind the parity identity independent of each other.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import AmbiguousBoundary
from .validation import check_positive_int, check_square_matrix

REAL_TOL = 1e-9
DET_DEADBAND = 1e-12
_EPS = np.finfo(float).eps
# absolute deflation floor relative to |H|; keeps products of block entries clear of underflow
_TINY = 1e-120


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with multiplicity plus the monic characteristic polynomial.

    ``char_poly`` holds ``(a1, ..., an)`` for
    ``h**n + a1*h**(n-1) + ... + an``.
    """

    eigenvalues: tuple
    char_poly: tuple

    @property
    def dim(self):
        return len(self.eigenvalues)

    def as_array(self):
        return np.array(self.eigenvalues, dtype=complex)

    def real_eigenvalues(self, tol=REAL_TOL):
        return sorted(z.real for z in self.eigenvalues if abs(z.imag) < tol)


def balance(a, max_sweeps=64):
    """Parlett-Reinsch balancing by powers of two (similarity, exact)."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    radix = 2.0
    sqrdx = radix * radix
    # couplings at roundoff level carry no information and make the scaling cycle
    floor = np.finfo(float).eps * max(float(np.max(np.abs(a))), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        done = True
        for i in range(n):
            off = np.arange(n) != i
            c = float(np.sum(np.abs(a[off, i])))
            r = float(np.sum(np.abs(a[i, off])))
            if c <= floor or r <= floor:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
        if done:
            break
    return a


def hessenberg(a):
    """Householder reduction to upper Hessenberg form (orthogonal similarity)."""
    h = np.array(a, dtype=float)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        xmax = float(np.max(np.abs(x)))
        if xmax == 0.0:
            continue
        # the reflector direction is scale-free; normalizing avoids subnormal squares
        x /= xmax
        alpha = np.linalg.norm(x)
        if x[0] > 0:
            alpha = -alpha
        v = x
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        h[k + 1:, k:] -= 2.0 * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def _hqr(h):
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.

    Works on a 1-based list-of-lists copy, following the EISPACK ``hqr``
    control flow.
    """
    n = len(h)
    a = [[0.0] * (n + 1)] + [[0.0] + [float(v) for v in row] for row in h]
    wr = [0.0] * (n + 1)
    wi = [0.0] * (n + 1)
    anorm = 0.0
    for i in range(1, n + 1):
        for j in range(max(i - 1, 1), n + 1):
            anorm += abs(a[i][j])
    nn = n
    t = 0.0
    while nn >= 1:
        its = 0
        while True:
            l = 1
            for ll in range(nn, 1, -1):
                s = abs(a[ll - 1][ll - 1]) + abs(a[ll][ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll][ll - 1]) <= max(_EPS * s, _TINY * anorm):
                    a[ll][ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn][nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1][nn - 1]
            w = a[nn][nn - 1] * a[nn - 1][nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn] = z
                    wi[nn - 1] = -z
                nn -= 2
                break
            if its == 60:
                raise np.linalg.LinAlgError("QR iteration did not converge")
            if its in (10, 20, 40):
                # exceptional shift
                t += x
                for i in range(1, nn + 1):
                    a[i][i] -= x
                s = abs(a[nn][nn - 1]) + abs(a[nn - 1][nn - 2])
                y = x = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m][m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1]
                q = a[m + 1][m + 1] - z - r - s
                r = a[m + 2][m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m][m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1][m - 1]) + abs(z) + abs(a[m + 1][m + 1]))
                if u <= _EPS * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i][i - 2] = 0.0
                if i != m + 2:
                    a[i][i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k][k - 1]
                    q = a[k + 1][k - 1]
                    r = 0.0
                    if k != nn - 1:
                        r = a[k + 2][k - 1]
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k][k - 1] = -a[k][k - 1]
                else:
                    a[k][k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k][j] + q * a[k + 1][j]
                    if k != nn - 1:
                        p += r * a[k + 2][j]
                        a[k + 2][j] -= p * z
                    a[k + 1][j] -= p * y
                    a[k][j] -= p * x
                mmin = nn if nn < k + 3 else k + 3
                for i in range(l, mmin + 1):
                    p = x * a[i][k] + y * a[i][k + 1]
                    if k != nn - 1:
                        p += z * a[i][k + 2]
                        a[i][k + 2] -= p * r
                    a[i][k + 1] -= p * q
                    a[i][k] -= p
    return [complex(wr[i], wi[i]) for i in range(1, n + 1)]


def hessenberg_char_poly(h):
    """Characteristic polynomial of an upper Hessenberg matrix.

    Uses the standard recurrence on leading principal submatrices. Returns the
    full monic coefficient array, highest power first.
    """
    n = h.shape[0]
    polys = [np.array([1.0])]
    for k in range(n):
        pk = np.polysub(np.polymul([1.0, -h[k, k]], polys[k]), [0.0])
        prod = 1.0
        for i in range(k - 1, -1, -1):
            prod *= h[i + 1, i]
            if prod == 0.0:
                break
            pk = np.polysub(pk, h[i, k] * prod * polys[i])
        polys.append(np.atleast_1d(pk))
    out = polys[n]
    return np.concatenate([np.zeros(n + 1 - out.size), out])


def _sort_key(z):
    return (round(z.real, 12), round(z.imag, 12))


def eigenvalues(m):
    """All eigenvalues of a real square matrix, with algebraic multiplicity.

    Raises ``NonFinite`` for non-finite input. Complex eigenvalues are
    returned in exactly conjugate pairs, sorted by real then imaginary part.
    """
    a = check_square_matrix(m)
    n = a.shape[0]
    if n == 1:
        eig = [complex(a[0, 0], 0.0)]
        cp = (-a[0, 0],)
        return Spectrum(tuple(eig), tuple(float(c) for c in cp))
    # exact power-of-two rescaling keeps the QR deflation tests clear of under/overflow
    peak = float(np.max(np.abs(a)))
    shift = round(math.log2(peak)) if peak > 0.0 else 0
    scale = 2.0 ** shift
    h = hessenberg(balance(a / scale))
    eig = sorted((z * scale for z in _hqr(h)), key=_sort_key)
    # coefficients beyond float range become +-inf; zeros stay exact
    with np.errstate(over="ignore"):
        cp = np.ldexp(hessenberg_char_poly(h)[1:], shift * np.arange(1, n + 1))
    return Spectrum(tuple(eig), tuple(float(c) for c in cp))


def determinant(m):
    a = check_square_matrix(m)
    return float(np.linalg.det(a))


def sign_det_shifted(m, power=1):
    """Sign of ``det(m**power - I)``; 0 inside the dead band ``|det| < 1e-12``."""
    a = check_square_matrix(m)
    power = check_positive_int(power, "power")
    mp = np.linalg.matrix_power(a, power)
    det = float(np.linalg.det(mp - np.eye(a.shape[0])))
    if abs(det) < DET_DEADBAND:
        return 0
    return 1 if det > 0 else -1


def real_eigenvalue_counts(spectrum, tol=REAL_TOL):
    """Return ``(m1, m2)``: real eigenvalues in (-inf, 1) and in (-1, 1).

    Eigenvalues with ``|Im| < tol`` count as real. Raises
    ``AmbiguousBoundary`` when a real eigenvalue lies within ``tol`` of +1
    or -1.
    """
    if not isinstance(spectrum, Spectrum):
        spectrum = eigenvalues(spectrum)
    m1 = m2 = 0
    for lam in spectrum.real_eigenvalues(tol):
        if abs(lam - 1.0) < tol or abs(lam + 1.0) < tol:
            raise AmbiguousBoundary(f"real eigenvalue {lam!r} within {tol} of +-1")
        if lam < 1.0:
            m1 += 1
            if lam > -1.0:
                m2 += 1
    return m1, m2


def parity_sign(spectrum, d):
    """``(-1)**m1`` for odd ``d`` and ``(-1)**m2`` for even ``d``."""
    m1, m2 = real_eigenvalue_counts(spectrum)
    return (-1) ** (m1 if d % 2 else m2)
