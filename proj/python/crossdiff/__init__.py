"""Particle and PDE experiments for cross-diffusion systems."""

from ._crossdiff import (
    Error,
    ExperimentSpec,
    GridSpec,
    ModelParams,
    ParseError,
    Mollifier,
    RunReport,
    bl_distance,
    bump_normalisation,
    convolve,
    coupling_constant,
    deposit,
    eps_schedule,
    fit_rate,
    heat_exact,
    parse_config,
    run_experiment,
    serialize,
    spearman,
    version,
    w2_empirical_1d,
    write_report,
)

__version__ = version()
