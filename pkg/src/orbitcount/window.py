"""Census windows: a spatial region times a period cutoff (and optional degree cutoff)."""

from dataclasses import dataclass
import itertools

import numpy as np

from .validation import check_positive, check_vector


@dataclass(frozen=True)
class Region:
    """Axis-aligned box or Euclidean ball in chart coordinates.

    ``margin(x)`` is the signed distance to the boundary, positive inside.
    """

    kind: str
    center: tuple = ()
    radius: float = 0.0
    lower: tuple = ()
    upper: tuple = ()

    @classmethod
    def ball(cls, center, radius):
        c = check_vector(center, name="center")
        return cls("ball", center=tuple(float(v) for v in c),
                   radius=check_positive(radius, "radius"))

    @classmethod
    def box(cls, lower, upper):
        lo = check_vector(lower, name="lower")
        hi = check_vector(upper, dim=lo.size, name="upper")
        if np.any(hi <= lo):
            raise ValueError("box upper bounds must exceed lower bounds")
        return cls("box", lower=tuple(float(v) for v in lo), upper=tuple(float(v) for v in hi))

    @property
    def dim(self):
        return len(self.center) if self.kind == "ball" else len(self.lower)

    @property
    def diameter(self):
        if self.kind == "ball":
            return 2.0 * self.radius
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    def margin(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "ball":
            m = self.radius - np.linalg.norm(x - np.asarray(self.center), axis=1)
        else:
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            m = np.minimum(x - lo, hi - x).min(axis=1)
        return float(m.min())

    def contains(self, x):
        return self.margin(x) > 0.0

    def grid(self, per_dim):
        """Cell-centred grid points strictly inside the region."""
        if self.kind == "ball":
            c = np.asarray(self.center)
            lo, hi = c - self.radius, c + self.radius
        else:
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        axes = [lo[i] + (np.arange(per_dim) + 0.5) * (hi[i] - lo[i]) / per_dim
                for i in range(lo.size)]
        pts = np.array(list(itertools.product(*axes)))
        keep = [self.margin(p) > 0 for p in pts]
        return pts[np.array(keep, dtype=bool)]

    def to_dict(self):
        if self.kind == "ball":
            return {"kind": "ball", "center": list(self.center), "radius": self.radius}
        return {"kind": "box", "lower": list(self.lower), "upper": list(self.upper)}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        if kind == "ball":
            return cls.ball(d["center"], d["radius"])
        if kind == "box":
            return cls.box(d["lower"], d["upper"])
        raise ValueError(f"unknown region kind {kind!r}")


@dataclass(frozen=True)
class Window:
    region: Region
    s_max: float
    degree_max: int | None = None

    def __post_init__(self):
        check_positive(self.s_max, "s_max")
        if self.degree_max is not None and int(self.degree_max) < 1:
            raise ValueError("degree_max must be a positive integer")

    def admits(self, total_period, degree):
        if total_period > self.s_max:
            return False
        return self.degree_max is None or degree <= self.degree_max

    def to_dict(self):
        return {"region": self.region.to_dict(), "s_max": self.s_max,
                "degree_max": self.degree_max}


def default_region(field):
    """A region that comfortably contains the catalogued examples."""
    if field.sphere_radius is not None:
        return Region.ball([0.0] * field.ambient_dim, 1.5 * field.sphere_radius)
    if field.is_suspension:
        return Region.box([-20.0, -20.0], [20.0, 20.0])
    return Region.ball([0.0] * field.ambient_dim, 1.5)
