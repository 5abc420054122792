"""Uniform periodic grids and the field container shared by every module.

A grid covers the box ``[-L, L)^m`` with ``N`` points per axis, so the
spacing is ``h = 2L/N`` and index ``N/2`` sits at the origin.  All spectral
operators act through the discrete Fourier transform of the sampled values,
which makes them operators on the torus of side ``2L``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
import scipy.fft as sfft

__all__ = ["GridSpec", "Field", "EstimateReport", "GridError"]


class GridError(ValueError):
    """Raised for inadmissible grid parameters."""


@dataclass(frozen=True)
class GridSpec:
    """Periodic box ``[-L, L)^m`` sampled with ``N`` points per axis."""

    m: int = 2
    N: int = 512
    L: float = 64.0

    def __post_init__(self):
        if self.m < 1:
            raise GridError(f"dimension must be >= 1, got {self.m}")
        if self.N < 4 or self.N & (self.N - 1):
            raise GridError(f"N must be a power of two >= 4, got {self.N}")
        if not self.L > 0:
            raise GridError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell_area(self) -> float:
        return self.h**self.m

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.m

    @property
    def trust_radius(self) -> float:
        return self.L / 4.0

    @property
    def center(self) -> int:
        return self.N // 2

    @cached_property
    def x(self) -> np.ndarray:
        """1-D node coordinates ``-L + j h``."""
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x] * self.m), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        c = self.coords
        return np.sqrt(sum(ci * ci for ci in c))

    @cached_property
    def xi(self) -> np.ndarray:
        """1-D angular wavenumbers in FFT order."""
        return 2.0 * np.pi * sfft.fftfreq(self.N, d=self.h)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers for a full ``fftn``, broadcastable per axis."""
        out = []
        for i in range(self.m):
            s = [1] * self.m
            s[i] = self.N
            out.append(self.xi.reshape(s))
        return tuple(out)

    @cached_property
    def rwavenumbers(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers for ``rfftn`` (last axis halved)."""
        xr = 2.0 * np.pi * sfft.rfftfreq(self.N, d=self.h)
        out = []
        for i in range(self.m):
            s = [1] * self.m
            n = len(xr) if i == self.m - 1 else self.N
            s[i] = n
            out.append((xr if i == self.m - 1 else self.xi).reshape(s))
        return tuple(out)

    def rderivative(self, axis: int) -> np.ndarray:
        """``i xi_axis`` on the ``rfftn`` layout with the unpaired Nyquist mode zeroed.

        Keeping that mode would make the product non-Hermitian and break
        the mirror symmetries of real fields.
        """
        xi = self.rwavenumbers[axis]
        return np.where(np.isclose(np.abs(xi), self.nyquist), 0.0, 1j * xi)

    @cached_property
    def knorm(self) -> np.ndarray:
        return np.sqrt(sum(k * k for k in self.wavenumbers))

    @cached_property
    def rknorm(self) -> np.ndarray:
        return np.sqrt(sum(k * k for k in self.rwavenumbers))

    @property
    def nyquist(self) -> float:
        return np.pi / self.h

    def trust_mask(self, radius: float | None = None) -> np.ndarray:
        r = self.trust_radius if radius is None else radius
        return self.radius <= r + 1e-12

    def index_of(self, *point: float) -> tuple[int, ...]:
        """Grid index of a point that lies exactly on a node."""
        idx = []
        for p in point:
            j = (p + self.L) / self.h
            if abs(j - round(j)) > 1e-9:
                raise GridError(f"{p} is not a grid node (h={self.h})")
            idx.append(int(round(j)) % self.N)
        return tuple(idx)

    # spectral helpers -------------------------------------------------
    def rfft(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfftn(values, axes=tuple(range(self.m)))

    def irfft(self, spec: np.ndarray) -> np.ndarray:
        return sfft.irfftn(spec, s=self.shape, axes=tuple(range(self.m)))

    def centered_ifft(self, multiplier: np.ndarray) -> np.ndarray:
        """Inverse transform of a multiplier sampled at ``wavenumbers``.

        The result is the periodic function ``(2L)^-m sum_k mult(xi_k) e^{i xi_k x}``
        sampled on the grid nodes (origin at index ``N/2``).
        """
        v = sfft.ifftn(multiplier, s=self.shape, axes=tuple(range(self.m)))
        v = sfft.fftshift(v, axes=tuple(range(self.m)))
        return v / self.cell_area

    def to_dict(self) -> dict:
        return {"m": self.m, "N": self.N, "L": self.L}


@dataclass
class Field:
    """Values sampled on a grid; NaN and Inf are rejected on construction."""

    grid: GridSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise GridError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise GridError("field contains non-finite values")
        self.values = v

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_area)

    def norm(self, gamma: float) -> float:
        a = np.abs(self.values)
        if np.isinf(gamma):
            return float(a.max())
        return float((np.sum(a**gamma) * self.grid.cell_area) ** (1.0 / gamma))

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values, dict(self.meta))

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values - other.values, {})

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.values + other.values, {})


@dataclass
class EstimateReport:
    """Empirical surrogate of a comparability constant or decay rate."""

    name: str
    min: float
    max: float
    region: str = ""
    tolerance: float | None = None
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.min = float(self.min)
        self.max = float(self.max)
        if self.min > self.max:
            raise ValueError(f"{self.name}: min {self.min} > max {self.max}")

    @property
    def ratio(self) -> float:
        if self.min > 0:
            return self.max / self.min
        return float("inf")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "min": self.min,
            "max": self.max,
            "ratio": self.ratio,
            "region": self.region,
            "tolerance": self.tolerance,
            "params": self.params,
            **({"extra": self.extra} if self.extra else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=float)
