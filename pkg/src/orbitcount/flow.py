"""Flow of a vector field and its linearization (variational equations)."""

from dataclasses import asdict, dataclass
import math

import numpy as np

from . import _kernels
from .errors import BlowUp, StepFailure
from .fields import PolynomialField, SuspensionField
from .validation import check_vector


@dataclass(frozen=True)
class IntegratorOpts:
    tol: float = 1e-10
    h_min: float = 1e-12
    h_max: float = 0.1
    bounding_box: float = 1e3

    def to_dict(self):
        return asdict(self)

    def loosened(self, tol):
        return IntegratorOpts(tol=max(tol, self.tol), h_min=self.h_min,
                              h_max=self.h_max, bounding_box=self.bounding_box)


DEFAULT_OPTS = IntegratorOpts()
_NO_OUT = np.zeros(0)


def _raise_status(status, s):
    if status == _kernels.BLOWUP:
        raise BlowUp(f"trajectory left the bounding box before time {s:g}")
    if status in (_kernels.STEP_FAILURE, _kernels.MAX_STEPS):
        raise StepFailure(f"step size underflow integrating to time {s:g}")


def _run(field, x0, s, t, opts, with_var, t_out):
    coef = field.coefficients(t)
    radius = field.sphere_radius or 0.0
    status, x, m, xs, _ = _kernels.integrate(
        np.ascontiguousarray(x0, dtype=float), float(s), field.exps, coef, with_var,
        opts.tol, opts.h_min, opts.h_max, opts.bounding_box, radius, t_out)
    _raise_status(status, s)
    return x, m, xs


def _suspension_steps(theta0, s):
    k = math.floor(theta0 + s + 1e-9) - math.floor(theta0 + 1e-9)
    return int(k)


def _flow_suspension(field, x0, s, t):
    if s < 0:
        raise ValueError("suspension flows are integrated forward only")
    k = _suspension_steps(x0[0], s)
    p, d = field.map.iterate(x0[1:], k, t)
    x = np.concatenate([[x0[0] + s], p])
    m = np.eye(field.ambient_dim)
    m[1:, 1:] = d
    return x, m


def flow_with_monodromy(field, x0, s, t=None, opts=DEFAULT_OPTS):
    """Return ``(x_end, M)`` with ``M`` the derivative of the time-``s`` map."""
    x0 = field.check_point(x0)
    if isinstance(field, SuspensionField):
        return _flow_suspension(field, x0, float(s), t)
    x, m, _ = _run(field, x0, s, t, opts, True, _NO_OUT)
    return x, m


def flow(field, x0, s, t=None, opts=DEFAULT_OPTS, sample_times=None):
    """State-only flow. With ``sample_times`` also returns the states at those times."""
    x0 = check_vector(x0, field.ambient_dim)
    if isinstance(field, SuspensionField):
        x, _ = _flow_suspension(field, x0, float(s), t)
        if sample_times is None:
            return x
        xs = np.array([_flow_suspension(field, x0, float(q), t)[0] for q in sample_times])
        return x, xs
    t_out = _NO_OUT if sample_times is None else np.ascontiguousarray(sample_times, dtype=float)
    x, _, xs = _run(field, x0, s, t, opts, False, t_out)
    if sample_times is None:
        return x
    return x, xs


def flow_samples(field, x0, s, t=None, opts=DEFAULT_OPTS, n=64):
    """States at ``n`` equally spaced times in [0, s)."""
    times = np.arange(n) * (float(s) / n)
    _, xs = flow(field, x0, s, t, opts, sample_times=times)
    return xs


__all__ = ["IntegratorOpts", "DEFAULT_OPTS", "flow", "flow_with_monodromy",
           "flow_samples", "PolynomialField"]
