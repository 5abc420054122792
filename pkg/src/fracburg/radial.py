"""Radial shell statistics and log-log slope fitting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field

__all__ = ["ShellStats", "shell_stats", "loglog_slope", "EmptyShellError"]


class EmptyShellError(ValueError):
    """A radial shell contains no grid points."""


@dataclass
class ShellStats:
    r: np.ndarray
    mean: np.ndarray
    min: np.ndarray
    max: np.ndarray
    count: np.ndarray


def shell_stats(values: np.ndarray, radius: np.ndarray, edges: np.ndarray, absolute: bool = False) -> ShellStats:
    """Statistics of ``values`` on the shells ``edges[i] <= |x| < edges[i+1]``.

    The shell radius is the mean ``|x|`` of its points.
    """
    v = np.abs(values) if absolute else values
    idx = np.digitize(radius.ravel(), edges) - 1
    nb = len(edges) - 1
    ok = (idx >= 0) & (idx < nb)
    idx, vv, rr = idx[ok], v.ravel()[ok], radius.ravel()[ok]
    count = np.bincount(idx, minlength=nb)
    if np.any(count == 0):
        raise EmptyShellError(f"empty shell(s) at {np.flatnonzero(count == 0).tolist()}")
    mean = np.bincount(idx, vv, nb) / count
    r = np.bincount(idx, rr, nb) / count
    mn = np.full(nb, np.inf)
    mx = np.full(nb, -np.inf)
    np.minimum.at(mn, idx, vv)
    np.maximum.at(mx, idx, vv)
    return ShellStats(r, mean, mn, mx, count)


def loglog_slope(
    values: Field | np.ndarray,
    r_min: float = 4.0,
    r_max: float = 16.0,
    bins: int = 8,
    stat: str = "mean",
    radius: np.ndarray | None = None,
    trust_radius: float | None = None,
) -> float:
    """OLS slope of ``log(shell statistic of |values|)`` against ``log r``.

    Shells are log-spaced on ``[r_min, r_max]``.
    """
    if isinstance(values, Field):
        radius = values.grid.radius
        trust_radius = values.grid.trust_radius if trust_radius is None else trust_radius
        values = values.values
    if radius is None:
        raise ValueError("radius is required for raw arrays")
    if bins < 4:
        raise ValueError(f"bins must be >= 4, got {bins}")
    if trust_radius is not None and r_max > trust_radius + 1e-12:
        raise ValueError(f"r_max={r_max} exceeds the trust radius {trust_radius}")
    edges = np.geomspace(r_min, r_max, bins + 1)
    s = shell_stats(values, radius, edges, absolute=True)
    y = {"mean": s.mean, "max": s.max}[stat]
    if np.any(y <= 0):
        raise EmptyShellError("shell statistic is not positive")
    return float(np.polyfit(np.log(s.r), np.log(y), 1)[0])
