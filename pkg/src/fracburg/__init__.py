"""Numerics for the fractional Burgers equation with singular data.

``u_t = Δ^{α/2} u + b·∇(u|u|^q)`` on a periodic box: stable heat kernels,
semigroup estimates, a mild-solution integrator, the self-similar profile
and a verification harness.
"""
from .config import (
    ConfigError,
    ConfigParseError,
    ConfigRangeError,
    ConfigUnknownKeyError,
    ProfileConfig,
    RunConfig,
    load_config,
    parse_config,
)
from .grid import EstimateReport, Field, GridError, GridSpec
from .io import FieldFileError, export_field_csv, export_radial_csv, load_field, save_field
from .kernel import KernelError, KernelField, KernelParams, cauchy_oracle, eval_kernel, stable_cdf
from .mild_solver import (
    SolverBlowUp,
    SolverConfig,
    Trajectory,
    WeightFunction,
    french_power,
    rescale,
    solve,
    truncated_initial,
    weighted_integral,
)
from .radial import loglog_slope
from .selfsimilar import (
    PicardDivergence,
    Profile,
    RQuadrature,
    apply_K,
    correction_integral,
    picard,
    rquadrature,
    solve_profile,
)
from .semigroup import (
    ModelParams,
    ParamError,
    PowerDatum,
    apply_semigroup,
    condition_A_mu,
    estpa_check,
    heat_riesz,
    marginal_heat,
)

__version__ = "0.1.0"
