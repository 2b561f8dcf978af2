"""Sampling discrete solutions on uniform grids and layer diagnostics."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class FieldDump:
    resolution: int  # sampling intervals per axis
    points: np.ndarray  # (np, dim), x fastest
    values: np.ndarray  # (np, dim)

    @property
    def shape(self):
        return (self.resolution + 1,) * self.points.shape[1]

    @property
    def first_component(self):
        return self.values[:, 0]


def sampling_grid(dim, resolution):
    if resolution < 1:
        raise InvalidArgumentError("resolution must be positive")
    g = np.linspace(0.0, 1.0, resolution + 1)
    G = np.meshgrid(*([g] * dim), indexing="ij")  # last axis varies fastest
    return np.column_stack([G[-1 - d].ravel() for d in range(dim)])


def sample_field(space, coef, resolution):
    """Evaluate the discrete field on a uniform grid covering the unit square/cube."""
    pts = sampling_grid(space.dim, resolution)
    vals = space.evaluate_at_points(coef, pts)
    return FieldDump(resolution, pts, vals)


def layer_statistics(values, lower=0.0, upper=1.0):
    """Extremes and bound violations of sampled values."""
    v = np.asarray(values, dtype=float).reshape(-1)
    over = np.maximum(v - upper, 0.0)
    under = np.maximum(lower - v, 0.0)
    return {"min": float(v.min()), "max": float(v.max()),
            "overshoot": float(over.max()), "undershoot": float(under.max()),
            "violation_rms": float(np.sqrt(np.mean(over ** 2 + under ** 2))),
            "finite": bool(np.all(np.isfinite(v)))}
