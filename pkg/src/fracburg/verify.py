"""Verification harness: every estimate as a named numeric check.

Each check computes an :class:`EstimateReport` and a pass flag against a
threshold taken from the run configuration.  Checks run in dependency order
(kernel, semigroup, solver, profile) and share expensive intermediate
objects through a :class:`Context`.  A check whose dependency did not pass
is reported as ``skipped``.
"""
from __future__ import annotations

import fnmatch
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np

from .config import DEFAULT_THRESHOLDS, RunConfig
from .grid import EstimateReport, Field, GridSpec
from .kernel import (
    KernelParams,
    cauchy_oracle,
    envelope_ratio,
    eval_kernel,
    gradient_envelope_ratio,
    marginalize_x1,
)
from .mild_solver import (
    SolverConfig,
    WeightFunction,
    rescale,
    richardson_ratio,
    solve,
    truncated_initial,
    weighted_integral,
)
from .radial import loglog_slope
from .selfsimilar import (
    apply_K,
    asymptotic_slope,
    correction_integral,
    envelope,
    fd_gradient,
    profile_gradient,
    rquadrature,
    solve_profile,
)
from .semigroup import (
    ModelParams,
    PowerDatum,
    apply_semigroup,
    condition_A_mu,
    estpa_check,
    heat_riesz,
    marginal_heat,
    probe_lattice,
)

__all__ = ["Check", "CheckResult", "CheckSuite", "Context", "CHECKS", "run_suite", "select", "loglog_slope"]

log = logging.getLogger(__name__)

STAGES = ("kernel", "semigroup", "solver", "profile")


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    func: Callable
    deps: tuple[str, ...] = ()

    @property
    def stage(self) -> int:
        return STAGES.index(self.name.split(".")[0])


@dataclass
class CheckResult:
    name: str
    anchor: str
    status: str
    report: EstimateReport | None = None
    threshold: float | None = None
    message: str = ""
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == "passed"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "status": self.status,
            "threshold": self.threshold,
            "message": self.message,
            "seconds": round(self.seconds, 3),
            "report": self.report.to_dict() if self.report else None,
        }


@dataclass
class CheckSuite:
    checks: list[Check]
    results: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def empty(self) -> bool:
        return not self.checks

    def result(self, name: str) -> CheckResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "note": "no checks run" if self.empty else "",
            "counts": {s: sum(r.status == s for r in self.results) for s in ("passed", "failed", "skipped", "error")},
            "results": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=float)

    def to_text(self) -> str:
        if self.empty:
            return "no checks run\n"
        lines = []
        for r in self.results:
            lines.append(f"{r.status.upper():8s} {r.name:32s} {r.message}")
        lines.append(f"{'PASSED' if self.passed else 'FAILED'}: {sum(r.passed for r in self.results)}/{len(self.results)}")
        return "\n".join(lines) + "\n"


class Context:
    """Lazily computed, cached fields shared across checks."""

    def __init__(self, cfg: RunConfig | None = None):
        self.cfg = cfg or RunConfig()
        self.p: ModelParams = self.cfg.model
        self.grid: GridSpec = self.cfg.grid
        self.th = {**DEFAULT_THRESHOLDS, **self.cfg.thresholds}
        self._cache: dict = {}

    def cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # kernels ---------------------------------------------------------
    def kernel(self, t: float, alpha: float | None = None, deriv=None, unwrap=False, m=None) -> np.ndarray:
        a = self.p.alpha if alpha is None else alpha
        m = self.grid.m if m is None else m
        g = self.grid if m == self.grid.m else GridSpec(m, self.grid.N, self.grid.L)
        key = ("kernel", t, a, deriv, unwrap, m)
        return self.cached(key, lambda: eval_kernel(KernelParams(m, a, t, deriv), g, unwrap=unwrap))

    # solver ----------------------------------------------------------
    def trajectory(self, n: float, sign: int = 1, grid: GridSpec | None = None, cfg: SolverConfig | None = None):
        grid = grid or self.grid
        cfg = cfg or self.cfg.solver
        key = ("traj", n, sign, grid, cfg)

        def run():
            u0 = truncated_initial(n, self.p, grid)
            if sign < 0:
                u0 = -u0
            return solve(u0, self.p, cfg)

        return self.cached(key, run)

    # profile ---------------------------------------------------------
    @cached_property
    def rq(self):
        return rquadrature(self.cfg.profile.nodes, self.p, self.cfg.profile.endpoint)

    @cached_property
    def profile(self):
        pc = self.cfg.profile
        return solve_profile(pc.tol, self.p, self.grid, self.rq, n_max=pc.n_max)

    @cached_property
    def h1(self) -> Field:
        return heat_riesz(self.p, 1.0, self.grid)

    @cached_property
    def h2(self) -> Field:
        return apply_K(self.h1, self.p, self.rq, self.h1)


def _scalar(name: str, value: float, **params) -> EstimateReport:
    return EstimateReport(name, value, value, params=params)


# kernel ----------------------------------------------------------------
def _kernel_normalization(ctx: Context):
    k = ctx.kernel(1.0)
    err = abs(k.mass() - 1.0)
    return _scalar("kernel.normalization", err, t=1.0), err < ctx.th["kernel.normalization"]


def _kernel_scaling(ctx: Context):
    g = ctx.grid
    a = ctx.p.alpha
    k1 = ctx.kernel(1.0).values
    k2 = ctx.kernel(2.0**a).values
    c = g.center
    n = int(g.trust_radius / g.h)
    idx = np.arange(-n, n + 1)
    sub1 = k1[np.ix_(*([c + idx] * g.m))]
    sub2 = k2[np.ix_(*([c + 2 * idx] * g.m))]
    mask = g.radius[np.ix_(*([c + idx] * g.m))] <= g.trust_radius
    err = float(np.abs(sub2 - sub1 / 2.0**g.m)[mask].max())
    return _scalar("kernel.scaling", err, lam=2.0), err < ctx.th["kernel.scaling"]


def _kernel_marginal(ctx: Context):
    k2 = ctx.kernel(1.0)
    k1 = ctx.kernel(1.0, m=1)
    mg = marginalize_x1(k2)
    err = float(np.abs(mg.values - k1.values).max())
    return _scalar("kernel.marginal", err), err < ctx.th["kernel.marginal"]


def _kernel_cauchy(ctx: Context):
    k = ctx.kernel(1.0, alpha=1.0)
    g = ctx.grid
    mask = g.trust_mask()
    exact = cauchy_oracle(g.m, 1.0, np.stack(g.coords, axis=-1))
    err = float(np.abs(k.values - exact)[mask].max())
    return _scalar("kernel.cauchy", err, alpha=1.0, t=1.0), err < ctx.th["kernel.cauchy"]


def _kernel_semigroup(ctx: Context):
    g = ctx.grid
    ka = ctx.kernel(0.5).values
    kb = ctx.kernel(1.5).values
    kab = ctx.kernel(2.0).values
    # grid convolution of two centred kernels
    conv = np.fft.fftshift(
        np.fft.irfftn(
            np.fft.rfftn(np.fft.ifftshift(ka)) * np.fft.rfftn(np.fft.ifftshift(kb)), s=g.shape, axes=tuple(range(g.m))
        )
    ) * g.cell_area
    err = float(np.abs(conv - kab).max())
    return _scalar("kernel.semigroup", err, t1=0.5, t2=1.5), err < ctx.th["kernel.semigroup"]


def _kernel_envelope(ctx: Context):
    rep = envelope_ratio(ctx.kernel(1.0, unwrap=True))
    return rep, rep.min > 0 and rep.ratio < ctx.th["kernel.envelope"]


def _kernel_envelope_scaling(ctx: Context):
    g = ctx.grid
    a = ctx.p.alpha
    d = g.m
    E = []
    for t in (1.0, 2.0**a):
        k = ctx.kernel(t, unwrap=True).values
        E.append(k * (t ** (1 / a) + g.radius) ** (d + a) / t)
    c = g.center
    n = int(g.trust_radius / g.h)
    idx = np.arange(-n, n + 1)
    s1 = E[0][np.ix_(*([c + idx] * d))]
    s2 = E[1][np.ix_(*([c + 2 * idx] * d))]
    mask = g.radius[np.ix_(*([c + idx] * d))] <= g.trust_radius
    rel = np.abs(s2[mask] / s1[mask] - 1.0)
    rep = EstimateReport(
        "kernel.envelope_scaling",
        rel.min(),
        rel.max(),
        region=f"|x| <= {g.trust_radius}",
        params={"lam": 2.0},
        extra={"min_1": float(s1[mask].min()), "max_1": float(s1[mask].max()),
               "min_2": float(s2[mask].min()), "max_2": float(s2[mask].max())},
    )
    return rep, rep.max < ctx.th["kernel.envelope_scaling"]


def _kernel_gradient_envelope(ctx: Context):
    dk = ctx.kernel(1.0, deriv=(1,) + (0,) * (ctx.grid.m - 1), unwrap=True)
    rep = gradient_envelope_ratio(dk, ctx.kernel(1.0, unwrap=True))
    return rep, rep.max < ctx.th["kernel.gradient_envelope"]


# semigroup ------------------------------------------------------------
def _semigroup_estpa(ctx: Context):
    reps = []
    for gamma in (1.2, 1.5, 1.9):
        for r in (0.0, 1.0):
            reps.append(estpa_check(gamma, 1.0, r, ctx.p.alpha, ctx.grid))
    worst = max(reps, key=lambda e: e.ratio)
    rep = EstimateReport(
        "semigroup.estpa",
        min(e.ratio for e in reps),
        worst.ratio,
        region=worst.region,
        params={"gamma": [1.2, 1.5, 1.9], "r": [0.0, 1.0], "t": 1.0},
        extra={"ratios": {f"gamma={e.params['gamma']},r={e.params['r']}": e.ratio for e in reps}},
    )
    return rep, worst.ratio < ctx.th["semigroup.estpa"]


def _semigroup_riesz_envelope(ctx: Context):
    p, g = ctx.p, ctx.grid
    mask = g.trust_mask()
    vals = []
    for t in (0.25, 1.0, 4.0):
        h = heat_riesz(p, t, g).values[mask]
        vals.append(h * (t ** (1 / p.alpha) + g.radius[mask]) ** p.beta)
    v = np.concatenate(vals)
    rep = EstimateReport("semigroup.riesz_envelope", v.min(), v.max(), region=f"|x| <= {g.trust_radius}",
                         params={"t": [0.25, 1.0, 4.0]})
    return rep, rep.min > 0 and rep.ratio < ctx.th["semigroup.riesz_envelope"]


def _semigroup_condition_A(ctx: Context):
    p = ctx.p
    datum = PowerDatum(p.M, p.beta, p.d)
    coarse = condition_A_mu(datum, p, *probe_lattice(8, 25))
    fine = condition_A_mu(datum, p, *probe_lattice(16, 49))
    rel = abs(fine.max / coarse.max - 1.0)
    rep = EstimateReport(
        "semigroup.condition_A",
        min(coarse.max, fine.max),
        max(coarse.max, fine.max),
        region="8x25 and 16x49 probe lattices, t in [1e-2, 1e2]",
        params={"M": p.M, "beta": p.beta},
        extra={"mu_coarse": coarse.max, "mu_fine": fine.max, "relative_change": rel},
    )
    return rep, rel < ctx.th["semigroup.condition_A"]


# solver ---------------------------------------------------------------
def _solver_conservation(ctx: Context):
    tr = ctx.trajectory(ctx.cfg.n_trunc)
    u0 = tr.fields[0]
    F = WeightFunction("kernel", 1.0, 0.0, alpha=ctx.p.alpha)
    w = F.values(ctx.grid)
    drift = []
    for t, f in zip(tr.times, tr.fields):
        ref = weighted_integral(apply_semigroup(u0, t, ctx.p.alpha), w)
        drift.append(abs(weighted_integral(f, w) / ref - 1.0))
    rep = EstimateReport("solver.conservation", min(drift), max(drift), region="whole box",
                         params={"n": ctx.cfg.n_trunc, "weight": "p1(1, 0, .)"},
                         extra={"times": tr.times.tolist()})
    return rep, rep.max < ctx.th["solver.conservation"]


def _solver_monotonicity(ctx: Context):
    gaps = []
    levels = (1, 2, 4, 8)
    for lo, hi in zip(levels[:-1], levels[1:]):
        a, b = ctx.trajectory(lo), ctx.trajectory(hi)
        gaps.append(min(float((fb.values - fa.values).min()) for fa, fb in zip(a.fields, b.fields)))
    worst = min(gaps)
    rep = EstimateReport("solver.monotonicity", worst, max(gaps), region="whole box, saved times",
                         params={"n": list(levels)}, extra={"min_gap_per_pair": gaps})
    return rep, worst >= -ctx.th["solver.monotonicity"]


def _solver_sign_symmetry(ctx: Context):
    a = ctx.trajectory(ctx.cfg.n_trunc)
    b = ctx.trajectory(ctx.cfg.n_trunc, sign=-1)
    exact = all(np.array_equal(fa.values, -fb.values) for fa, fb in zip(a.fields, b.fields))
    dev = max(float(np.abs(fa.values + fb.values).max()) for fa, fb in zip(a.fields, b.fields))
    return _scalar("solver.sign_symmetry", dev, bit_exact=exact), exact


def _solver_contraction(ctx: Context):
    tr = ctx.trajectory(ctx.cfg.n_trunc)
    u0 = tr.fields[0]
    excess = {}
    for gam in (1, 2, math.inf):
        n0 = u0.norm(gam)
        excess[str(gam)] = max(f.norm(gam) / n0 - 1.0 for f in tr.fields)
    worst = max(excess.values())
    rep = EstimateReport("solver.contraction", min(excess.values()), worst, region="whole box",
                         params={"gamma": [1, 2, "inf"]}, extra={"excess": excess})
    return rep, worst <= ctx.th["solver.contraction"]


def theorem_bound_constant(ctx: Context, grid: GridSpec) -> dict:
    """Max of ``|u(t,x)| t^(1/alpha) / int |u0| p1(t, x~ - y~) dy`` over saved ``t > 0``."""
    p = ctx.p
    tr = ctx.trajectory(ctx.cfg.n_trunc, grid=grid)
    u0 = tr.fields[0]
    mask = grid.trust_mask()
    sel = np.abs(grid.x) <= grid.trust_radius + 1e-12
    worst = 0.0
    per_t = []
    for t, f in zip(tr.times[1:], tr.fields[1:]):
        den = np.zeros(grid.N)
        den[sel] = t ** (-1 / p.alpha) * marginal_heat(u0, p.alpha, t, grid.x[sel])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.abs(f.values) / den[None, :]
        m = float(ratio[mask].max())
        per_t.append(m)
        worst = max(worst, m)
    return {"C": worst, "per_time": per_t, "times": tr.times[1:].tolist()}


def _solver_theorem_bound(ctx: Context):
    L = ctx.grid.L / 2
    coarse = theorem_bound_constant(ctx, GridSpec(ctx.grid.m, ctx.grid.N, L))
    fine = theorem_bound_constant(ctx, GridSpec(ctx.grid.m, 2 * ctx.grid.N, L))
    rel = abs(fine["C"] / coarse["C"] - 1.0)
    rep = EstimateReport(
        "solver.theorem_bound",
        min(coarse["C"], fine["C"]),
        max(coarse["C"], fine["C"]),
        region=f"|x| <= {L / 4} on the box [-{L}, {L})^2",
        params={"N": [ctx.grid.N, 2 * ctx.grid.N], "L": L, "n": ctx.cfg.n_trunc},
        extra={"C_coarse": coarse["C"], "C_fine": fine["C"], "relative_change": rel},
    )
    ok = math.isfinite(coarse["C"]) and math.isfinite(fine["C"]) and rel < ctx.th["solver.theorem_bound"]
    return rep, ok


def _solver_richardson(ctx: Context):
    u0 = truncated_initial(ctx.cfg.n_trunc, ctx.p, ctx.grid)
    out = richardson_ratio(u0, ctx.p, ctx.cfg.solver)
    rep = _scalar("solver.richardson", out["ratio"], steps=out["steps"])
    rep.extra = out
    lo, hi = ctx.th["solver.richardson_low"], ctx.th["solver.richardson_high"]
    return rep, lo <= out["ratio"] <= hi


# profile --------------------------------------------------------------
def _profile_fixed_point(ctx: Context):
    P = ctx.profile
    d = P.history
    ratios = [d[i + 1] / d[i] for i in range(max(0, len(d) - 6), len(d) - 1)]
    Umax = float(np.abs(P.field.values[P.field.grid.trust_mask()]).max())
    rel = P.residual / Umax
    rep = EstimateReport(
        "profile.fixed_point", rel, rel, region=f"|x| <= {ctx.grid.trust_radius}",
        params={"nodes": ctx.cfg.profile.nodes},
        extra={"iterations": P.iterations, "sup_delta": d, "last_ratios": ratios},
    )
    ok = (
        rel < ctx.th["profile.residual"]
        and P.iterations <= ctx.th["profile.max_iterations"]
        and len(ratios) >= 5
        and max(ratios[-5:]) < ctx.th["profile.contraction"]
    )
    return rep, ok


def _profile_envelope(ctx: Context):
    rep = envelope(ctx.profile.field, ctx.p.beta)
    c_hat = max(rep.max, 1.0 / rep.min) if rep.min > 0 else math.inf
    rep.extra = {"c_hat": c_hat}
    return rep, rep.min > 0 and c_hat < ctx.th["profile.envelope"]


def _profile_slope(ctx: Context):
    s = loglog_slope(ctx.profile.field, 4.0, 16.0, 8)
    rep = _scalar("profile.slope", s, target=-ctx.p.beta, r=[4.0, 16.0])
    return rep, abs(s + ctx.p.beta) <= ctx.th["profile.slope"]


def _profile_asymptotics(ctx: Context):
    p = ctx.p
    U = ctx.profile.field
    s1 = asymptotic_slope(U - ctx.h1)
    s2 = asymptotic_slope(U - ctx.h2)
    t1 = -(p.beta + (p.alpha - 1))
    t2 = -min(p.beta + 2 * (p.alpha - 1), p.d + p.alpha + 1)
    rep = EstimateReport(
        "profile.asymptotics", min(s1["slope"], s2["slope"]), max(s1["slope"], s2["slope"]),
        region="r in [4, 16]",
        params={"target_h1": t1, "target_h2": t2},
        extra={"slope_h1": s1, "slope_h2": s2},
    )
    ok = s1["slope"] <= t1 + ctx.th["profile.slope_h1"] and s2["slope"] <= t2 + ctx.th["profile.slope_h2"]
    return rep, ok


def _profile_correction(ctx: Context):
    I = correction_integral(ctx.h1, ctx.p, ctx.rq)
    err = float(np.abs(ctx.h2.values - ctx.h1.values - I.values).max())
    return _scalar("profile.correction", err), err < ctx.th["profile.correction"]


def gradient_order(f: Field, radius: float | None = None) -> dict:
    """Errors of centred differences with steps ``h`` and ``2h`` against the spectral gradient."""
    g = f.grid
    mask = g.trust_mask(radius)
    spec = profile_gradient(f)
    e = []
    for k in (1, 2):
        errs = []
        for ax in range(g.m):
            fd = (np.roll(f.values, -k, ax) - np.roll(f.values, k, ax)) / (2 * k * g.h)
            errs.append(float(np.abs(fd - spec[ax].values)[mask].max()))
        e.append(max(errs))
    return {"err_h": e[0], "err_2h": e[1], "ratio": e[1] / e[0]}


def _profile_gradient(ctx: Context):
    U = ctx.profile.field
    g = U.grid
    g1, g2 = profile_gradient(U)
    mask = g.trust_mask()
    v = (np.hypot(g1.values, g2.values) * (1 + g.radius) ** ctx.p.beta)[mask]
    order = gradient_order(U)
    sym = float(np.abs(g2.values[:, g.center]).max())
    rep = EstimateReport("profile.gradient", v.min(), v.max(), region=f"|x| <= {g.trust_radius}",
                         params={"beta": ctx.p.beta}, extra={"fd_order": order, "d2U_on_axis": sym})
    ok = (
        v.max() < ctx.th["profile.gradient"]
        and ctx.th["profile.gradient_order_low"] <= order["ratio"] <= ctx.th["profile.gradient_order_high"]
    )
    return rep, ok


def _profile_selfsimilarity(ctx: Context):
    p = ctx.p
    U = ctx.profile.field
    g = ctx.grid
    base = ctx.cfg.solver
    steps = int(round(base.steps * 2.0 / base.t_end))
    cfg = SolverConfig(2.0, steps, base.corrector_passes, base.dealias, base.dealias_rule, steps // 4)
    tr = ctx.trajectory(32, cfg=cfg)
    mask = g.trust_mask(8.0)
    scale = float(np.abs(U.values[mask]).max())
    resc = {t: rescale(tr.at(t), t, p).values for t in (0.5, 1.0, 2.0)}
    err = float(np.abs(resc[1.0] - U.values)[mask].max()) / scale
    spread = max(float(np.abs(a - b)[mask].max()) for a in resc.values() for b in resc.values()) / scale
    rep = EstimateReport(
        "profile.selfsimilarity", min(err, spread), max(err, spread), region="|x| <= 8",
        params={"n": 32, "t": [0.5, 1.0, 2.0]},
        extra={"match_t1": err, "collapse": spread,
               "match_per_t": {str(t): float(np.abs(v - U.values)[mask].max()) / scale for t, v in resc.items()}},
    )
    th = ctx.th["profile.selfsimilarity"]
    return rep, err < th and spread < th


_K = ("kernel.normalization",)
_P = ("profile.fixed_point",)

CHECKS: list[Check] = [
    Check("kernel.normalization", "kernel normalization: total mass 1", _kernel_normalization),
    Check("kernel.scaling", "kernel scaling p(l^a t, l x) = l^-d p(t, x)", _kernel_scaling),
    Check("kernel.marginal", "marginal identity int p dx1 = p^(d-1)", _kernel_marginal),
    Check("kernel.cauchy", "alpha = 1 closed form (Cauchy density)", _kernel_cauchy),
    Check("kernel.semigroup", "semigroup law p(s) * p(t) = p(s + t)", _kernel_semigroup),
    Check("kernel.envelope", "two-sided kernel estimate p ~ t / (t^(1/a) + |x|)^(d+a)", _kernel_envelope, _K),
    Check("kernel.envelope_scaling", "two-sided kernel estimate under scaling", _kernel_envelope_scaling, _K),
    Check("kernel.gradient_envelope", "gradient estimate |grad p| <~ p / (t^(1/a) + |x|)", _kernel_gradient_envelope, _K),
    Check("semigroup.estpa", "P_t (r^(1/a) + |.|)^-g ~ (r^(1/a) + t^(1/a) + |x|)^-g", _semigroup_estpa, _K),
    Check("semigroup.riesz_envelope", "P_t |.|^-beta ~ (t^(1/a) + |x|)^-beta", _semigroup_riesz_envelope, _K),
    Check("semigroup.condition_A", "condition (A) for M |x|^-beta", _semigroup_condition_A, _K),
    Check("solver.conservation", "conservation of x1-independent weights", _solver_conservation, _K),
    Check("solver.monotonicity", "comparison principle for ordered data", _solver_monotonicity, _K),
    Check("solver.sign_symmetry", "odd symmetry u0 -> -u0", _solver_sign_symmetry, _K),
    Check("solver.contraction", "L^gamma contraction of solutions", _solver_contraction, _K),
    Check("solver.theorem_bound", "|u| <= C t^(-1/a) P^(d-1)_t |u0|_F bound", _solver_theorem_bound, _K),
    Check("solver.richardson", "second-order convergence in time", _solver_richardson, _K),
    Check("profile.fixed_point", "profile fixed point U = K U", _profile_fixed_point, ("semigroup.riesz_envelope",)),
    Check("profile.envelope", "two-sided profile bound U ~ (1 + |x|)^-beta", _profile_envelope, _P),
    Check("profile.slope", "profile decay exponent -beta", _profile_slope, _P),
    Check("profile.asymptotics", "asymptotic expansion U - h_n decay rates", _profile_asymptotics, _P),
    Check("profile.correction", "second-order correction integral equals h_2 - h_1", _profile_correction, ("semigroup.riesz_envelope",)),
    Check("profile.gradient", "gradient bound |grad U| <~ (1 + |x|)^-beta", _profile_gradient, _P),
    Check("profile.selfsimilarity", "self-similarity u(t, x) = t^(-beta/a) U(t^(-1/a) x)", _profile_selfsimilarity, _P + ("solver.conservation",)),
]


def select(patterns) -> list[Check]:
    """Checks matching any of the glob ``patterns`` (``all`` means every check)."""
    if isinstance(patterns, str):
        patterns = [patterns]
    pats = []
    for p in patterns:
        pats.extend(s.strip() for s in p.split(",") if s.strip())
    pats = ["*" if p == "all" else p for p in pats]
    chosen = [c for c in CHECKS if any(fnmatch.fnmatchcase(c.name, p) for p in pats)]
    return sorted(chosen, key=lambda c: (c.stage, CHECKS.index(c)))


def run_suite(names, cfg: RunConfig | None = None, ctx: Context | None = None) -> CheckSuite:
    """Run the selected checks; dependencies are pulled in and run first."""
    ctx = ctx or Context(cfg)
    chosen = select(names)
    by_name = {c.name: c for c in CHECKS}
    needed: dict[str, Check] = {}

    def add(c: Check):
        for d in c.deps:
            add(by_name[d])
        needed.setdefault(c.name, c)

    for c in chosen:
        add(c)
    order = sorted(needed.values(), key=lambda c: (c.stage, CHECKS.index(c)))
    status: dict[str, CheckResult] = {}
    for c in order:
        th = ctx.th.get(c.name)
        blocked = [d for d in c.deps if not status[d].passed]
        if blocked:
            status[c.name] = CheckResult(c.name, c.anchor, "skipped", threshold=th,
                                         message=f"dependency not passed: {', '.join(blocked)}")
            continue
        t0 = time.perf_counter()
        try:
            rep, ok = c.func(ctx)
            rep.tolerance = th
            msg = f"min={rep.min:.6g} max={rep.max:.6g}"
            status[c.name] = CheckResult(c.name, c.anchor, "passed" if ok else "failed", rep, th, msg,
                                         time.perf_counter() - t0)
        except Exception as e:  # a numeric abort is a failure, never a pass
            log.exception("check %s raised", c.name)
            status[c.name] = CheckResult(c.name, c.anchor, "error", None, th, f"{type(e).__name__}: {e}",
                                         time.perf_counter() - t0)
        log.info("%s %s (%.1fs)", c.name, status[c.name].status, status[c.name].seconds)
    chosen_names = {c.name for c in chosen}
    results = [status[c.name] for c in order if c.name in chosen_names]
    return CheckSuite(chosen, results)
