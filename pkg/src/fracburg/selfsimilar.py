"""The self-similar profile ``U = u(1, .)`` for the datum ``M |x|^-beta``.

``U`` is the fixed point of

    (K f)(x) = P_1 u0(x) + alpha int_0^1 r^(d-beta)
               int b . grad_x p(1 - r^alpha, x - r w) f(w)|f(w)|^q dw dr.

For each quadrature node the substitution ``v = r w`` turns the inner
integral into a plain convolution of ``d_x1 p(1 - r^alpha)`` with the
pushforward density ``g_r(v) = r^-d G(v / r)``, ``G = f|f|^q``.  Each
target cell receives the exact mass of the cellwise-constant ``G`` over its
preimage cell.  This conserves mass even when ``r w`` collapses many cells
into one (point interpolation of ``G(v/r)`` does not) and, unlike
scattering the source lattice onto the grid, adds no grid-scale moire
noise for ``r`` near 1.  Outside the image of the box the density is
continued by the far-field law ``f ~ c |w|^-beta``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from .grid import EstimateReport, Field, GridSpec
from .mild_solver import french_power
from .radial import EmptyShellError, loglog_slope, shell_stats
from .semigroup import ModelParams, heat_riesz

__all__ = [
    "RQuadrature",
    "ProfileIterate",
    "Profile",
    "PicardDivergence",
    "rquadrature",
    "pushforward",
    "apply_K",
    "correction_integral",
    "picard",
    "solve_profile",
    "asymptotic_slope",
    "profile_gradient",
    "fd_gradient",
    "envelope",
]

log = logging.getLogger(__name__)


class PicardDivergence(RuntimeError):
    def __init__(self, msg: str, history: list):
        super().__init__(msg)
        self.history = history


@dataclass(frozen=True)
class RQuadrature:
    """Nodes and weights with ``sum w_j g(r_j) ~ int_0^1 r^(d-beta) g(r) dr``.

    ``endpoint`` is the Jacobi exponent at ``r = 1``: ``-1/alpha`` matches the
    ``(1 - r^alpha)^(-1/alpha)`` growth of the gradient kernel bound, 0 gives
    plain Gauss-Jacobi in ``r^(d-beta)``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    rule: str
    endpoint: float = 0.0

    def __post_init__(self):
        if np.any((self.nodes <= 0) | (self.nodes >= 1)):
            raise ValueError("quadrature nodes must lie in (0, 1)")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    def __len__(self):
        return len(self.nodes)

    def taus(self, alpha: float) -> np.ndarray:
        return 1.0 - self.nodes**alpha


def rquadrature(n: int, p: ModelParams, endpoint: float | None = None) -> RQuadrature:
    """Gauss-Jacobi rule in ``r = (1 + x)/2`` with ``r^(d-beta)`` absorbed."""
    e = -1.0 / p.alpha if endpoint is None else float(endpoint)
    a = p.d - p.beta
    x, w = roots_jacobi(n, e, a)  # weight (1 - x)^e (1 + x)^a
    r = (1.0 + x) / 2.0
    w = w / 2.0 ** (e + a + 1.0) / (1.0 - r) ** e
    return RQuadrature(r, w, f"gauss-jacobi(n={n}, endpoint={e:.6g}, origin={a:.6g})", e)


@dataclass
class ProfileIterate:
    index: int
    field: Field
    sup_delta: float


@dataclass
class Profile:
    field: Field
    residual: float
    params: ModelParams
    iterations: int = 0
    history: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _far_coefficient(f: np.ndarray, grid: GridSpec, beta: float, r_ext: float) -> float:
    R = grid.radius
    shell = (R >= r_ext / 2) & (R <= r_ext)
    return float(np.mean(f[shell] * R[shell] ** beta))


def _extended(f: np.ndarray, grid: GridSpec, beta: float, r_ext: float) -> tuple[np.ndarray, float]:
    c = _far_coefficient(f, grid, beta, r_ext)
    R = np.maximum(grid.radius, grid.h)
    return np.where(grid.radius <= r_ext, f, c * R ** (-beta)), c


def overlap_matrix(grid: GridSpec, r: float) -> np.ndarray:
    """``S[i, j]``: fraction of source cell ``j`` inside the preimage of target cell ``i`` under ``w -> r w``."""
    h = grid.h
    a, b = grid.x - h / 2, grid.x + h / 2
    lo, hi = a / r, b / r
    S = np.minimum(hi[:, None], b[None, :]) - np.maximum(lo[:, None], a[None, :])
    return np.maximum(S, 0.0) / h


def pushforward(G: np.ndarray, grid: GridSpec, r: float, far) -> np.ndarray:
    """Density of ``G(w) dw`` pushed forward by ``w -> r w``.

    Each target cell receives the exact mass of the piecewise-constant
    ``G`` over its preimage cell, so mass is conserved at every ``r`` and
    there is no moire pattern from scattering one lattice onto another.
    ``far(R, r)`` gives the density where the preimage leaves the box.
    """
    S = overlap_matrix(grid, r)
    dens = G
    for ax in range(grid.m):
        dens = np.moveaxis(np.tensordot(S, dens, axes=([1], [ax])), 0, ax)
    h, L = grid.h, grid.L
    inside = np.max(np.abs(np.stack(grid.coords)), axis=0) + h / 2 <= r * (L - h / 2)
    return np.where(inside, dens, far(grid.radius, r))


def _node_densities(f: Field, p: ModelParams, rq: RQuadrature, r_ext: float):
    g = f.grid
    fe, c = _extended(f.values, g, p.beta, r_ext)
    gam = 1.0 + p.q
    G = french_power(fe, gam)

    def far(R, r):
        return r ** (-g.m) * french_power(c * (np.maximum(R, g.h) / r) ** (-p.beta), gam)

    for rj, wj in zip(rq.nodes, rq.weights):
        yield rj, wj, pushforward(G, g, rj, far)


def _check(f: Field, p: ModelParams, rq: RQuadrature, min_tau: float):
    taus = rq.taus(p.alpha)
    keep = taus >= min_tau
    if not np.any(keep):
        raise ValueError("every quadrature node falls below the minimum resolvable time")
    dropped = float(rq.weights[~keep].sum())
    if dropped:
        rq = RQuadrature(rq.nodes[keep], rq.weights[keep], rq.rule + f", dropped tau<{min_tau:.3g}", rq.endpoint)
    return rq, dropped


def apply_K(
    f: Field,
    p: ModelParams,
    rq: RQuadrature,
    h1: Field | None = None,
    r_ext: float | None = None,
    min_tau: float = 0.0,
) -> Field:
    """One application of the profile operator."""
    g = f.grid
    h1 = h1 if h1 is not None else heat_riesz(p, 1.0, g)
    if p.bnorm == 0.0:
        return Field(g, h1.values.copy(), {"kind": "K", "far_c": 0.0})
    r_ext = g.L / 2 if r_ext is None else r_ext
    rq, dropped = _check(f, p, rq, min_tau)
    k = g.rknorm**p.alpha
    acc = np.zeros(k.shape, dtype=complex)
    dens = _node_densities(f, p, rq, r_ext)
    for rj, wj, gj in dens:
        acc += wj * np.exp(-(1.0 - rj**p.alpha) * k) * g.rfft(gj)
    corr = g.irfft(g.rderivative(0) * acc)
    c = _far_coefficient(f.values, g, p.beta, r_ext)
    vals = h1.values + p.alpha * p.bnorm * corr
    return Field(g, vals, {"kind": "K", "far_c": c, "dropped_weight": dropped})


def correction_integral(
    f: Field, p: ModelParams, rq: RQuadrature, r_ext: float | None = None, min_tau: float = 0.0
) -> Field:
    """``alpha int r^(d-beta) int b . grad_x p(1-r^a, x - r w) f|f|^q(w) dw dr``.

    Assembled node by node in physical space with the full vector ``b``;
    agrees with ``apply_K(f) - P_1 u0`` to roundoff.
    """
    g = f.grid
    r_ext = g.L / 2 if r_ext is None else r_ext
    rq, _ = _check(f, p, rq, min_tau)
    k = g.rknorm**p.alpha
    out = np.zeros(g.shape)
    for rj, wj, gj in _node_densities(f, p, rq, r_ext):
        spec = np.exp(-(1.0 - rj**p.alpha) * k) * g.rfft(gj)
        for ax, bi in enumerate(p.b):
            if bi:
                out += wj * bi * g.irfft(g.rderivative(ax) * spec)
    return Field(g, p.alpha * out, {"kind": "correction"})


def picard(
    n_max: int,
    tol: float,
    p: ModelParams,
    grid: GridSpec | None = None,
    rq: RQuadrature | None = None,
    relative: bool = True,
    min_tau: float = 0.0,
    relax: float | None = None,
) -> list[ProfileIterate]:
    """Iterates ``h_n = K^n 0`` until ``sup_delta < tol`` on the trust region.

    With ``relative=True`` the tolerance is scaled by ``max |h_n|``.  A
    relaxation factor 0.5 is switched on if the deltas rise twice within
    four iterations; three consecutive rises abort.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    grid = grid or GridSpec(p.d)
    rq = rq or rquadrature(48, p)
    h1 = heat_riesz(p, 1.0, grid)
    mask = grid.trust_mask()
    f = Field(grid, np.zeros(grid.shape), {"kind": "iterate", "n": 0})
    hist = [ProfileIterate(0, f, float("nan"))]
    omega = 1.0 if relax is None else relax
    rises = []
    for n in range(1, n_max + 1):
        Kf = apply_K(f, p, rq, h1, min_tau=min_tau)
        new = f.values + omega * (Kf.values - f.values)
        delta = float(np.abs(new - f.values)[mask].max())
        f = Field(grid, new, {"kind": "iterate", "n": n, "far_c": Kf.meta["far_c"], "omega": omega})
        hist.append(ProfileIterate(n, f, delta))
        log.info("picard %d sup_delta %.3e", n, delta)
        if n >= 2:
            rises.append(delta > hist[-2].sup_delta)
            if len(rises) >= 3 and all(rises[-3:]):
                raise PicardDivergence(f"sup_delta increased three times in a row at n={n}", hist)
            if relax is None and omega == 1.0 and sum(rises[-4:]) >= 2 and n > 4:
                log.warning("sup_delta oscillates; relaxing with factor 0.5")
                omega = 0.5
        scale = float(np.abs(new[mask]).max()) if relative else 1.0
        if delta < tol * scale:
            break
    return hist


def solve_profile(
    tol: float,
    p: ModelParams,
    grid: GridSpec | None = None,
    rq: RQuadrature | None = None,
    n_max: int = 40,
    min_tau: float = 0.0,
) -> Profile:
    """Picard limit with ``||K U - U||_inf < tol ||U||_inf`` on the trust region.

    The returned field is the last iterate whose residual is known exactly,
    i.e. the one before the final update.
    """
    hist = picard(n_max, tol, p, grid, rq, min_tau=min_tau)
    last, prev = hist[-1], hist[-2]
    omega = last.field.meta.get("omega", 1.0)
    residual = last.sup_delta / omega
    U = Field(prev.field.grid, prev.field.values, {"kind": "profile", "n": prev.index})
    mask = U.grid.trust_mask()
    ok = residual < tol * float(np.abs(U.values[mask]).max())
    if not ok:
        log.warning("profile residual %.3e above tolerance after %d iterations", residual, last.index)
    deltas = [it.sup_delta for it in hist[1:]]
    return Profile(U, residual, p, last.index, deltas, {"converged": bool(ok), "far_c": last.field.meta.get("far_c")})


def asymptotic_slope(diff: Field, r_min: float = 4.0, r_max: float = 16.0, bins: int = 8) -> dict:
    """Decay exponent of ``|diff|`` from shell means, falling back to shell maxima."""
    try:
        return {"slope": loglog_slope(diff, r_min, r_max, bins, "mean"), "stat": "mean", "flagged": False}
    except EmptyShellError:
        return {"slope": loglog_slope(diff, r_min, r_max, bins, "max"), "stat": "max", "flagged": True}


def profile_gradient(U: Profile | Field) -> tuple[Field, Field]:
    """Spectral gradient ``(d1 U, d2 U)``."""
    f = U.field if isinstance(U, Profile) else U
    g = f.grid
    spec = g.rfft(f.values)
    out = []
    for ax in range(g.m):
        out.append(Field(g, g.irfft(g.rderivative(ax) * spec), {"kind": "gradient"}))
    return tuple(out)


def fd_gradient(f: Field) -> tuple[Field, Field]:
    """Second-order centred differences (periodic)."""
    g = f.grid
    return tuple(
        Field(g, (np.roll(f.values, -1, ax) - np.roll(f.values, 1, ax)) / (2 * g.h), {"kind": "fd_gradient"})
        for ax in range(g.m)
    )


def envelope(f: Field, beta: float, radius: float | None = None, name: str = "profile.envelope") -> EstimateReport:
    """Range of ``f(x) (1 + |x|)^beta`` on the trust region."""
    g = f.grid
    mask = g.trust_mask(radius)
    v = f.values[mask] * (1 + g.radius[mask]) ** beta
    return EstimateReport(name, v.min(), v.max(), region=f"|x| <= {radius or g.trust_radius}", params={"beta": beta})
