"""The fractional heat semigroup, its action on the singular datum, and condition (A).

``P_t`` acts by the multiplier ``exp(-t |xi|^alpha)``.  For the datum
``u0 = M |x|^(-beta)`` the transform is the Riesz symbol
``M c_{d,beta} |xi|^(beta-d)``, so ``P_t u0`` is a single inverse FFT once two
periodic artefacts are handled: the neighbouring images of the slowly
decaying datum (summed and subtracted) and the undetermined mean mode
(pinned to a Hankel-transform oracle at one reference point).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .grid import EstimateReport, Field, GridSpec
from .kernel import KernelParams, _image_offsets, eval_kernel, stable_cdf

__all__ = [
    "ModelParams",
    "ParamError",
    "PowerDatum",
    "apply_semigroup",
    "riesz_constant",
    "riesz_hankel",
    "heat_riesz",
    "estpa_check",
    "marginal_heat",
    "condition_A_mu",
    "probe_lattice",
]

log = logging.getLogger(__name__)


class ParamError(ValueError):
    """Raised when model parameters leave the admissible range."""


@dataclass(frozen=True)
class ModelParams:
    """Problem tuple ``(d, alpha, beta, b, M)``; ``q = (alpha - 1)/beta`` is derived."""

    d: int = 2
    alpha: float = 1.5
    beta: float = 1.5
    b: tuple[float, ...] = (1.0, 0.0)
    M: float = 1.0

    def __post_init__(self):
        b = tuple(float(v) for v in self.b)
        object.__setattr__(self, "b", b)
        if self.d < 2:
            raise ParamError(f"d must be >= 2, got {self.d}")
        if not 1.0 < self.alpha < 2.0:
            raise ParamError(f"alpha must lie in (1, 2), got {self.alpha}")
        if not 1.0 < self.beta < self.d:
            raise ParamError(f"beta must lie in (1, d) = (1, {self.d}), got {self.beta}")
        if len(b) != self.d:
            raise ParamError(f"b must have {self.d} components, got {len(b)}")
        if b[0] < 0 or any(v != 0.0 for v in b[1:]):
            raise ParamError(f"b must have the form (|b|, 0, ..., 0), got {b}")
        if not self.M > 0:
            raise ParamError(f"M must be positive, got {self.M}")

    @property
    def q(self) -> float:
        return (self.alpha - 1.0) / self.beta

    @property
    def bnorm(self) -> float:
        return self.b[0]

    def to_dict(self) -> dict:
        return {"d": self.d, "alpha": self.alpha, "beta": self.beta, "q": self.q, "b": list(self.b), "M": self.M}


@dataclass(frozen=True)
class PowerDatum:
    """The singular datum ``M |x|^(-beta)`` in ``d`` dimensions."""

    M: float = 1.0
    beta: float = 1.5
    d: int = 2

    def marginal_coefficient(self) -> float:
        """``int |x|^(-beta) dx_1 = B(1/2, (beta-1)/2) |x~|^(1-beta)``."""
        return self.M * special.beta(0.5, (self.beta - 1.0) / 2.0)


def apply_semigroup(f: Field, t: float, alpha: float) -> Field:
    """``P_t f`` by spectral multiplication."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0:
        return Field(f.grid, f.values.copy(), dict(f.meta))
    g = f.grid
    mult = np.exp(-t * g.rknorm**alpha)
    vals = g.irfft(mult * g.rfft(f.values))
    return Field(g, vals, {**f.meta, "semigroup_t": t})


def riesz_constant(d: int, beta: float) -> float:
    """``c_{d,beta}`` with ``F[|x|^-beta](xi) = c |xi|^(beta-d)``."""
    return 2 ** (d - beta) * math.pi ** (d / 2) * math.gamma((d - beta) / 2) / math.gamma(beta / 2)


def riesz_hankel(d: int, alpha: float, beta: float, t: float, r: float) -> float:
    """``P_t |.|^-beta`` at radius ``r`` by one-dimensional Hankel quadrature."""
    nu = d / 2 - 1
    c = riesz_constant(d, beta)

    def radial(rho):
        z = rho * r
        bessel = special.jv(nu, z) * (z / 2) ** (-nu) if z > 0 else 1.0
        return rho ** (beta - 1) * math.exp(-t * rho**alpha) * bessel / math.gamma(nu + 1) * 2**-nu

    val, _ = integrate.quad(radial, 0, np.inf, limit=2000, epsabs=1e-13, epsrel=1e-12)
    # (2 pi)^-d times the sphere surface; the Bessel factor is normalized to 1 at 0
    surf = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return c * surf * val / (2 * math.pi) ** d


@lru_cache(maxsize=8)
def _riesz_images(grid: GridSpec, beta: float, K: int = 8) -> np.ndarray:
    """``sum_{n != 0} (|x + 2Ln|^-beta - |2Ln|^-beta)`` with a quadratic far tail."""
    P = 2.0 * grid.L
    d = grid.m
    X = grid.coords
    out = np.zeros(grid.shape)
    for n in _image_offsets(d, K):
        shift = P * n
        r2 = sum((X[i] + shift[i]) ** 2 for i in range(d))
        out += r2 ** (-beta / 2) - float(np.sum(shift * shift)) ** (-beta / 2)
    vol = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    rt = (K + 0.5) * P * 2.0 / vol ** (1.0 / d)
    surf = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    lap = beta * (beta + 2 - d)
    out += grid.radius**2 / (2 * d) * lap * surf / P**d * rt ** (d - beta - 2) / (beta + 2 - d)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _heat_riesz_unit(grid: GridSpec, alpha: float, beta: float, t: float) -> np.ndarray:
    d = grid.m
    k = grid.knorm
    with np.errstate(divide="ignore"):
        mult = riesz_constant(d, beta) * np.where(k > 0, k, 1.0) ** (beta - d) * np.exp(-t * k**alpha)
    mult.flat[0] = 0.0
    F = grid.centered_ifft(mult).real - _riesz_images(grid, beta)
    # pin the mean mode at x_ref = (L/8, 0, ...)
    ref = [0.0] * d
    ref[0] = grid.L / 8
    idx = grid.index_of(*ref)
    F = F + (riesz_hankel(d, alpha, beta, t, grid.L / 8) - F[idx])
    F.setflags(write=False)
    return F


def heat_riesz(p: ModelParams, t: float, grid: GridSpec | None = None) -> Field:
    """``P_t (M |.|^-beta)`` on the grid."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if not 1.0 < p.beta < p.d:
        raise ParamError(f"beta must lie in (1, d), got {p.beta}")
    grid = grid or GridSpec(p.d)
    vals = p.M * _heat_riesz_unit(grid, p.alpha, p.beta, float(t))
    return Field(grid, vals, {"kind": "heat_riesz", "t": t})


def _cell_average_power(grid: GridSpec, gamma: float, shift: float, near: int = 4, nodes: int = 16) -> np.ndarray:
    """Cell averages of ``(shift + |y|)^-gamma`` for cells within ``near`` of the origin."""
    h = grid.h
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    xg, wg = xg * h / 2, wg / 2
    offs = np.arange(-near, near + 1)
    out = np.empty((len(offs),) * grid.m)
    for idx in np.ndindex(out.shape):
        centre = np.array([offs[i] * h for i in idx])
        if np.all(centre == 0):
            out[idx] = _centre_cell_average(h, gamma, shift, grid.m)
            continue
        pts = np.meshgrid(*[centre[i] + xg for i in range(grid.m)], indexing="ij")
        w = np.prod(np.meshgrid(*([wg] * grid.m), indexing="ij"), axis=0)
        r = np.sqrt(sum(p * p for p in pts))
        out[idx] = np.sum(w * (shift + r) ** (-gamma))
    return out


def _centre_cell_average(h: float, gamma: float, shift: float, m: int) -> float:
    if m == 2:
        # eight congruent triangles in polar coordinates
        def inner(theta):
            A = h / 2 / math.cos(theta)
            return integrate.quad(lambda rho: (shift + rho) ** (-gamma) * rho, 0, A)[0]

        return 8 * integrate.quad(inner, 0, math.pi / 4)[0] / h**2
    # ball of equal volume
    vol = math.pi ** (m / 2) / math.gamma(m / 2 + 1)
    rb = h / vol ** (1 / m)
    surf = 2 * math.pi ** (m / 2) / math.gamma(m / 2)
    return surf * integrate.quad(lambda rho: (shift + rho) ** (-gamma) * rho ** (m - 1), 0, rb)[0] / h**m


def estpa_check(
    gamma: float,
    t: float,
    r: float,
    alpha: float = 1.5,
    grid: GridSpec | None = None,
    radius: float | None = None,
) -> EstimateReport:
    """Ratio of ``P_t (r^(1/a) + |.|)^-gamma`` to ``(r^(1/a) + t^(1/a) + |x|)^-gamma``."""
    grid = grid or GridSpec(2)
    if not 0 < gamma < grid.m:
        raise ValueError(f"gamma must lie in (0, {grid.m}), got {gamma}")
    if not t > 0 or r < 0:
        raise ValueError("need t > 0 and r >= 0")
    s = r ** (1 / alpha)
    R = grid.radius
    with np.errstate(divide="ignore"):
        f = (s + R) ** (-gamma)
    near = 4
    c = grid.center
    sl = tuple(slice(c - near, c + near + 1) for _ in range(grid.m))
    f[sl] = _cell_average_power(grid, gamma, s, near)
    conv = apply_semigroup(Field(grid, f), t, alpha).values
    mask = grid.trust_mask(radius)
    target = (s + t ** (1 / alpha) + R[mask]) ** (-gamma)
    ratio = conv[mask] / target
    return EstimateReport(
        "semigroup.estpa",
        ratio.min(),
        ratio.max(),
        region=f"|x| <= {radius or grid.trust_radius}",
        params={"gamma": gamma, "t": t, "r": r, "alpha": alpha},
    )


def _cell_integral_power(a: np.ndarray, b: np.ndarray, e: float) -> np.ndarray:
    """``int_a^b |y|^-e dy`` for cells not straddling zero (``0 <= a < b``)."""
    return (b ** (1 - e) - a ** (1 - e)) / (1 - e)


def _marginal_power(datum: PowerDatum, alpha: float, t: float, xt: np.ndarray, cells: int = 20000) -> np.ndarray:
    """``int B |y~|^(1-beta) p1(t, x~ - y~) dy~`` by cellwise exact integration.

    The datum is integrated exactly over geometric cells and the kernel enters
    through its CDF, so the result stays accurate at any ``t``.
    """
    e = datum.beta - 1.0
    s = t ** (1 / alpha)
    scale = max(s, float(np.max(np.abs(xt))) if np.size(xt) else s)
    edges = np.concatenate([[0.0], np.geomspace(1e-9 * s, 1e7 * scale, cells)])
    a, b = edges[:-1], edges[1:]
    mass = _cell_integral_power(a, b, e)
    out = np.empty(len(xt))
    for i, x in enumerate(np.atleast_1d(xt)):
        # right half-line cells [a, b] and their mirror images [-b, -a]
        right = stable_cdf((x - a) / s, alpha) - stable_cdf((x - b) / s, alpha)
        left = stable_cdf((x + b) / s, alpha) - stable_cdf((x + a) / s, alpha)
        avg = mass / (b - a)
        out[i] = np.sum(avg * (right + left))
    Y = edges[-1]
    from .kernel import tail_coefficient

    out += 2 * tail_coefficient(1, alpha, 1) * t * Y ** (-e - alpha) / (e + alpha)
    return datum.marginal_coefficient() * out


def _marginal_field(u0: Field, alpha: float, t: float, xt: np.ndarray) -> np.ndarray:
    g = u0.grid
    if g.m != 2:
        raise ValueError("field data for condition (A) must be two-dimensional")
    marg = np.abs(u0.values).sum(axis=0) * g.h
    lo = g.x - g.h / 2
    hi = g.x + g.h / 2
    s = t ** (1 / alpha)
    out = np.empty(len(xt))
    for i, x in enumerate(np.atleast_1d(xt)):
        w = stable_cdf((x - lo) / s, alpha) - stable_cdf((x - hi) / s, alpha)
        out[i] = np.sum(marg * w)
    return out


def marginal_heat(u0, alpha: float, t: float, xt) -> np.ndarray:
    """``int |u0(y)| p^(d-1)(t, x~ - y~) dy`` at the transverse points ``xt``."""
    xt = np.atleast_1d(np.asarray(xt, dtype=float))
    if isinstance(u0, PowerDatum):
        if u0.d != 2:
            raise ValueError("only d = 2 is supported for the analytic datum")
        if not u0.beta > 1:
            raise ValueError("x1-sections of |x|^-beta are not integrable for beta <= 1")
        return _marginal_power(u0, alpha, t, xt)
    if isinstance(u0, Field):
        return _marginal_field(u0, alpha, t, xt)
    raise TypeError(f"unsupported datum {type(u0).__name__}")


def probe_lattice(n_t: int = 8, n_x: int = 25, t_range=(1e-2, 1e2), x_range=(1e-2, 1e2)):
    """``n_t`` log-spaced times and ``n_x`` symmetric transverse points including 0."""
    ts = np.geomspace(*t_range, n_t)
    half = np.geomspace(*x_range, (n_x - 1) // 2)
    xs = np.concatenate([-half[::-1], [0.0], half])
    return ts, xs


def condition_A_mu(u0, p: ModelParams, t_set=None, x_set=None) -> EstimateReport:
    """Empirical ``mu`` of condition (A): max of ``t^((beta-1)/alpha) P^(d-1)_t |u0|_F``."""
    if t_set is None or x_set is None:
        t_set, x_set = probe_lattice()
    t_set = np.asarray(t_set, dtype=float)
    if np.log10(t_set.max() / t_set.min()) < 4 - 1e-9:
        raise ValueError("probe times must span at least four decades")
    vals = np.array([t ** ((p.beta - 1) / p.alpha) * marginal_heat(u0, p.alpha, t, x_set) for t in t_set])
    it, ix = np.unravel_index(np.argmax(vals), vals.shape)
    return EstimateReport(
        "semigroup.condition_A",
        vals.min(),
        vals.max(),
        region=f"{len(t_set)} t x {len(x_set)} x probes",
        params={"alpha": p.alpha, "beta": p.beta},
        extra={"argmax_t": float(t_set[it]), "argmax_x": float(np.asarray(x_set)[ix])},
    )
