"""Run configuration: a flat ``key = value`` text file.

Lines look like ``alpha = 1.5`` or ``grid.N = 512``; ``#`` starts a comment.
Every key is validated and unknown keys are rejected.  Only ``OUT_DIR`` may
be taken from the environment.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .grid import GridError, GridSpec
from .mild_solver import DEALIAS_RULES, SolverConfig
from .semigroup import ModelParams, ParamError

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "ConfigRangeError",
    "ConfigUnknownKeyError",
    "ProfileConfig",
    "RunConfig",
    "DEFAULT_THRESHOLDS",
    "load_config",
    "parse_config",
]


class ConfigError(ValueError):
    pass


class ConfigParseError(ConfigError):
    """Malformed line, bad literal or missing required key."""


class ConfigRangeError(ConfigError):
    """A value outside its admissible range."""


class ConfigUnknownKeyError(ConfigError):
    """A key that the configuration does not define."""


#: pass thresholds for the verification checks
DEFAULT_THRESHOLDS: dict[str, float] = {
    "kernel.normalization": 1e-6,
    "kernel.scaling": 1e-6,
    "kernel.marginal": 1e-5,
    "kernel.cauchy": 1e-5,
    "kernel.semigroup": 1e-6,
    "kernel.envelope": 50.0,
    "kernel.envelope_scaling": 1e-3,
    "kernel.gradient_envelope": 20.0,
    "semigroup.estpa": 20.0,
    "semigroup.riesz_envelope": 20.0,
    "semigroup.condition_A": 0.05,
    "solver.conservation": 1e-4,
    "solver.monotonicity": 1e-6,
    "solver.contraction": 1e-3,
    "solver.theorem_bound": 0.10,
    "solver.richardson_low": 3.5,
    "solver.richardson_high": 4.5,
    "profile.residual": 1e-6,
    "profile.max_iterations": 40,
    "profile.contraction": 0.9,
    "profile.envelope": 20.0,
    "profile.slope": 0.15,
    "profile.slope_h1": 0.15,
    "profile.slope_h2": 0.2,
    "profile.correction": 1e-8,
    "profile.gradient": 30.0,
    "profile.gradient_order_low": 3.0,
    "profile.gradient_order_high": 5.0,
    "profile.selfsimilarity": 0.03,
}


@dataclass(frozen=True)
class ProfileConfig:
    nodes: int = 48
    tol: float = 1e-6
    n_max: int = 40
    endpoint: float | None = None


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    grid: GridSpec = field(default_factory=GridSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    n_trunc: float = 8.0
    suites: tuple[str, ...] = ("*",)
    out_dir: Path = Path("out")
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    source_text: str = ""

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()

    def to_text(self) -> str:
        """Configuration text that :func:`parse_config` maps back to this config."""
        m, g, s, p = self.model, self.grid, self.solver, self.profile
        lines = [
            f"d = {m.d}",
            f"alpha = {m.alpha!r}",
            f"beta = {m.beta!r}",
            f"M = {m.M!r}",
            "b = " + ", ".join(repr(float(v)) for v in m.b),
            f"n_trunc = {self.n_trunc!r}",
            f"t_end = {s.t_end!r}",
            f"steps = {s.steps}",
            f"corrector_passes = {s.corrector_passes}",
            f"dealias = {str(s.dealias).lower()}",
            f"dealias_rule = {s.dealias_rule}",
            f"save_every = {s.save_every}",
            f"grid.N = {g.N}",
            f"grid.L = {g.L!r}",
            f"profile.nodes = {p.nodes}",
            f"profile.tol = {p.tol!r}",
            f"profile.n_max = {p.n_max}",
            f"profile.endpoint = {p.endpoint!r}",
            "suites = " + ", ".join(self.suites),
            f"out_dir = {self.out_dir}",
        ]
        lines += [f"thresholds.{k} = {v!r}" for k, v in sorted(self.thresholds.items()) if DEFAULT_THRESHOLDS.get(k) != v]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "grid": self.grid.to_dict(),
            "solver": {
                "t_end": self.solver.t_end,
                "steps": self.solver.steps,
                "corrector_passes": self.solver.corrector_passes,
                "dealias": self.solver.dealias,
                "dealias_rule": self.solver.dealias_rule,
                "save_every": self.solver.save_every,
            },
            "profile": {
                "nodes": self.profile.nodes,
                "tol": self.profile.tol,
                "n_max": self.profile.n_max,
                "endpoint": self.profile.endpoint,
            },
            "n_trunc": self.n_trunc,
            "suites": list(self.suites),
            "out_dir": str(self.out_dir),
            "thresholds": self.thresholds,
        }


def _float(key, s):
    try:
        return float(s)
    except ValueError:
        raise ConfigParseError(f"{key}: expected a number, got {s!r}") from None


def _int(key, s):
    try:
        return int(s)
    except ValueError:
        raise ConfigParseError(f"{key}: expected an integer, got {s!r}") from None


def _bool(key, s):
    v = s.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ConfigParseError(f"{key}: expected a boolean, got {s!r}")


def _vector(key, s):
    return tuple(_float(key, v) for v in s.replace("(", "").replace(")", "").split(",") if v.strip())


def _str(key, s):
    return s.strip().strip("\"'")


def _list(key, s):
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _opt_float(key, s):
    return None if s.strip().lower() in ("none", "") else _float(key, s)


_KEYS = {
    "d": _int,
    "alpha": _float,
    "beta": _float,
    "M": _float,
    "b": _vector,
    "n_trunc": _float,
    "t_end": _float,
    "steps": _int,
    "corrector_passes": _int,
    "dealias": _bool,
    "dealias_rule": _str,
    "save_every": _int,
    "grid.N": _int,
    "grid.L": _float,
    "profile.nodes": _int,
    "profile.tol": _float,
    "profile.n_max": _int,
    "profile.endpoint": _opt_float,
    "suites": _list,
    "out_dir": _str,
}

REQUIRED = ("alpha", "beta")


def _parse_lines(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {no}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigParseError(f"line {no}: empty key")
        if key in out:
            raise ConfigParseError(f"line {no}: duplicate key {key!r}")
        out[key] = val
    return out


def _range(cond: bool, key: str, msg: str):
    if not cond:
        raise ConfigRangeError(f"{key}: {msg}")


def parse_config(text: str, env: dict | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig` from configuration text."""
    raw = _parse_lines(text)
    vals = {}
    thresholds = dict(DEFAULT_THRESHOLDS)
    for key, s in raw.items():
        if key.startswith("thresholds."):
            name = key[len("thresholds.") :]
            if name not in DEFAULT_THRESHOLDS:
                raise ConfigUnknownKeyError(f"unknown threshold {name!r}")
            thresholds[name] = _float(key, s)
            continue
        if key not in _KEYS:
            raise ConfigUnknownKeyError(f"unknown key {key!r}; known keys: {', '.join(sorted(_KEYS))}")
        vals[key] = _KEYS[key](key, s)
    for key in REQUIRED:
        if key not in vals:
            raise ConfigParseError(f"missing required key {key!r}")

    d = vals.get("d", 2)
    _range(d >= 2, "d", f"must be >= 2, got {d}")
    a, be = vals["alpha"], vals["beta"]
    _range(1.0 < a < 2.0, "alpha", f"must lie in the interval (1, 2), got {a}")
    _range(1.0 < be < d, "beta", f"must lie in the interval (1, d) = (1, {d}) (beta < d for local integrability), got {be}")
    M = vals.get("M", 1.0)
    _range(M > 0, "M", f"must be positive, got {M}")
    b = vals.get("b", (1.0,) + (0.0,) * (d - 1))
    if len(b) == 1:
        b = (b[0],) + (0.0,) * (d - 1)
    try:
        model = ModelParams(d, a, be, b, M)
    except ParamError as e:
        raise ConfigRangeError(f"b: {e}") from None

    N, L = vals.get("grid.N", 512), vals.get("grid.L", 64.0)
    try:
        grid = GridSpec(d, N, L)
    except GridError as e:
        raise ConfigRangeError(f"grid: {e}") from None

    rule = vals.get("dealias_rule", "exponential")
    _range(rule in DEALIAS_RULES, "dealias_rule", f"must be one of {DEALIAS_RULES}, got {rule!r}")
    try:
        solver = SolverConfig(
            vals.get("t_end", 1.0),
            vals.get("steps", 256),
            vals.get("corrector_passes", 1),
            vals.get("dealias", True),
            rule,
            vals.get("save_every", 32),
        )
    except ValueError as e:
        raise ConfigRangeError(str(e)) from None

    prof = ProfileConfig(
        vals.get("profile.nodes", 48),
        vals.get("profile.tol", 1e-6),
        vals.get("profile.n_max", 40),
        vals.get("profile.endpoint"),
    )
    _range(prof.nodes >= 2, "profile.nodes", f"must be >= 2, got {prof.nodes}")
    _range(prof.tol > 0, "profile.tol", f"must be positive, got {prof.tol}")
    _range(prof.n_max >= 1, "profile.n_max", f"must be >= 1, got {prof.n_max}")
    n_trunc = vals.get("n_trunc", 8.0)
    _range(n_trunc >= 1, "n_trunc", f"must be >= 1, got {n_trunc}")

    env = os.environ if env is None else env
    out_dir = Path(env.get("OUT_DIR") or vals.get("out_dir", "out"))
    return RunConfig(
        model, grid, solver, prof, n_trunc, vals.get("suites", ("*",)), out_dir, thresholds, text
    )


def load_config(path, env: dict | None = None) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ConfigParseError(f"{p}: not valid UTF-8 ({e})") from None
    return parse_config(text, env)


def default_config(env: dict | None = None) -> RunConfig:
    env = os.environ if env is None else env
    cfg = RunConfig()
    if env.get("OUT_DIR"):
        cfg = replace(cfg, out_dir=Path(env["OUT_DIR"]))
    return cfg
