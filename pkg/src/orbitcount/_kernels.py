"""Compiled kernels: polynomial vector fields and a Dormand-Prince 5(4) stepper.

A polynomial field on R^n is stored as an exponent table ``exps`` of shape
(T, n) and a coefficient table ``coef`` of shape (T, n): component i of the
field is ``sum_j coef[j, i] * prod_k x_k**exps[j, k]``.
"""

import numpy as np
from numba import njit

OK = 0
BLOWUP = 1
STEP_FAILURE = 2
MAX_STEPS = 3

_MAX_STEPS = 2_000_000
# linearizations beyond this are useless to Newton; treat as escape
VAR_LIMIT = 1e8

# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@njit(cache=True, nogil=True)
def poly_eval(x, exps, coef, val, jac, want_jac):
    n = x.shape[0]
    nt = exps.shape[0]
    maxdeg = 0
    for j in range(nt):
        for k in range(n):
            if exps[j, k] > maxdeg:
                maxdeg = exps[j, k]
    pw = np.empty((n, maxdeg + 1))
    for k in range(n):
        pw[k, 0] = 1.0
        for p in range(1, maxdeg + 1):
            pw[k, p] = pw[k, p - 1] * x[k]
    for i in range(n):
        val[i] = 0.0
        if want_jac:
            for k in range(n):
                jac[i, k] = 0.0
    for j in range(nt):
        m = 1.0
        for k in range(n):
            m *= pw[k, exps[j, k]]
        for i in range(n):
            val[i] += coef[j, i] * m
        if want_jac:
            for k in range(n):
                e = exps[j, k]
                if e == 0:
                    continue
                dm = e * pw[k, e - 1]
                for l in range(n):
                    if l != k:
                        dm *= pw[l, exps[j, l]]
                if dm == 0.0:
                    continue
                for i in range(n):
                    jac[i, k] += coef[j, i] * dm


@njit(cache=True, nogil=True)
def _rhs(y, n, with_var, sign, exps, coef, out, val, jac):
    x = y[:n]
    poly_eval(x, exps, coef, val, jac, with_var)
    for i in range(n):
        out[i] = sign * val[i]
    if with_var:
        for i in range(n):
            for c in range(n):
                acc = 0.0
                for k in range(n):
                    acc += jac[i, k] * y[n + k * n + c]
                out[n + i * n + c] = sign * acc


@njit(cache=True, nogil=True)
def integrate(x0, s, exps, coef, with_var, tol, hmin, hmax, box, sphere_r, t_out):
    """Flow ``x0`` for signed time ``s``.

    Returns (status, x_end, M_end, samples at |t_out| times, accepted steps).
    Error control: max-norm local error estimate, scaled by 1 + |y|, per unit
    time must not exceed ``tol``.
    """
    n = x0.shape[0]
    dim = n + n * n if with_var else n
    y = np.zeros(dim)
    y[:n] = x0
    if with_var:
        for i in range(n):
            y[n + i * n + i] = 1.0
    sign = 1.0 if s >= 0 else -1.0
    total = abs(s)
    nout = t_out.shape[0]
    xs = np.zeros((nout, n))
    val = np.zeros(n)
    jac = np.zeros((n, n))
    k1 = np.zeros(dim)
    k2 = np.zeros(dim)
    k3 = np.zeros(dim)
    k4 = np.zeros(dim)
    k5 = np.zeros(dim)
    k6 = np.zeros(dim)
    k7 = np.zeros(dim)
    yt = np.zeros(dim)
    ynew = np.zeros(dim)
    status = OK
    nsteps = 0
    if total == 0.0:
        for q in range(nout):
            xs[q, :] = y[:n]
        mout = np.eye(n)
        return status, y[:n].copy(), mout, xs, 0
    _rhs(y, n, with_var, sign, exps, coef, k1, val, jac)
    h = min(hmax, total / 8.0, 1e-2)
    tcur = 0.0
    qi = 0
    while qi < nout and t_out[qi] <= 0.0:
        xs[qi, :] = y[:n]
        qi += 1
    errprev = 1e-4
    while tcur < total:
        if nsteps > _MAX_STEPS:
            status = MAX_STEPS
            break
        target = total
        if qi < nout and t_out[qi] < target:
            target = t_out[qi]
        hstep = h
        hit = False
        if tcur + hstep >= target:
            hstep = target - tcur
            hit = True
        for i in range(dim):
            yt[i] = y[i] + hstep * _A21 * k1[i]
        _rhs(yt, n, with_var, sign, exps, coef, k2, val, jac)
        for i in range(dim):
            yt[i] = y[i] + hstep * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(yt, n, with_var, sign, exps, coef, k3, val, jac)
        for i in range(dim):
            yt[i] = y[i] + hstep * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(yt, n, with_var, sign, exps, coef, k4, val, jac)
        for i in range(dim):
            yt[i] = y[i] + hstep * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        _rhs(yt, n, with_var, sign, exps, coef, k5, val, jac)
        for i in range(dim):
            yt[i] = y[i] + hstep * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                    + _A64 * k4[i] + _A65 * k5[i])
        _rhs(yt, n, with_var, sign, exps, coef, k6, val, jac)
        for i in range(dim):
            ynew[i] = y[i] + hstep * (_A71 * k1[i] + _A73 * k3[i] + _A74 * k4[i]
                                      + _A75 * k5[i] + _A76 * k6[i])
        _rhs(ynew, n, with_var, sign, exps, coef, k7, val, jac)
        err = 0.0
        finite = True
        for i in range(dim):
            e = hstep * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                         + _E6 * k6[i] + _E7 * k7[i])
            sc = 1.0 + max(abs(y[i]), abs(ynew[i]))
            r = abs(e) / sc
            if not (r == r) or not np.isfinite(ynew[i]):
                finite = False
            if r > err:
                err = r
        if finite:
            ratio = err / (hstep * tol)
        else:
            ratio = 1e10
        if ratio <= 1.0:
            tcur = target if hit else tcur + hstep
            for i in range(dim):
                y[i] = ynew[i]
                k1[i] = k7[i]
            nsteps += 1
            if sphere_r > 0.0:
                nrm = 0.0
                for i in range(n):
                    nrm += y[i] * y[i]
                nrm = np.sqrt(nrm)
                for i in range(n):
                    y[i] *= sphere_r / nrm
                if with_var:
                    # project the variational matrix onto the tangent space
                    for c in range(n):
                        dot = 0.0
                        for i in range(n):
                            dot += y[i] * y[n + i * n + c]
                        dot /= sphere_r * sphere_r
                        for i in range(n):
                            y[n + i * n + c] -= dot * y[i]
                _rhs(y, n, with_var, sign, exps, coef, k1, val, jac)
            nrm2 = 0.0
            for i in range(n):
                nrm2 += y[i] * y[i]
            if np.sqrt(nrm2) > box:
                status = BLOWUP
                break
            if with_var:
                vmax = 0.0
                for i in range(n, dim):
                    if abs(y[i]) > vmax:
                        vmax = abs(y[i])
                if vmax > VAR_LIMIT:
                    status = BLOWUP
                    break
            while qi < nout and t_out[qi] <= tcur:
                xs[qi, :] = y[:n]
                qi += 1
            fac = 0.9 * ratio ** (-0.7 / 4.0) * errprev ** (0.4 / 4.0) if ratio > 0 else 5.0
            fac = min(5.0, max(0.2, fac))
            errprev = max(ratio, 1e-4)
            if not hit or hstep >= h:
                h = min(hmax, hstep * fac)
        else:
            h = hstep * max(0.1, 0.9 * ratio ** (-1.0 / 4.0))
            if h < hmin:
                status = STEP_FAILURE
                break
    m_end = np.zeros((n, n))
    if with_var:
        for i in range(n):
            for c in range(n):
                m_end[i, c] = y[n + i * n + c]
    return status, y[:n].copy(), m_end, xs, nsteps
