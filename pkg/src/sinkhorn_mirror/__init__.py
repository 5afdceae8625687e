"""Sinkhorn matrix scaling as mirror descent, with certified rate bounds."""

from ._numerics import logsumexp
from .bounds import (
    BoundReport,
    bound_basic,
    bound_general,
    bound_quadratic,
    bound_strong,
    bound_talagrand,
)
from .divergences import (
    bregman_F,
    conjugate_bregman,
    entropy_wrt_kernel,
    hilbert_distance,
    kl,
    kl_coupling,
    second_moment,
    semi_dual_coupling,
)
from .errors import *  # noqa: F401,F403
from .measures import (
    Coupling,
    DiscreteMeasure,
    LogKernel,
    check_coupling,
    coupling_from_entries,
    kernel_marginals,
    kernel_mass,
    log_kernel_from_log,
    log_kernel_from_log_triplets,
    new_log_kernel,
    new_measure,
)
from .oracle import Certificate, bound_report, grad_check_F, round_to_feasible, solve_certified
from .problems import (
    ProblemInstance,
    gen_ou_grid,
    gen_quadratic,
    gen_random,
    instance_from_arrays,
    instance_from_json,
    quadratic_instance,
)
from .solver import IterateTrace, SolveOptions, Status, TraceRow, sinkhorn_step, solve
from .transforms import (
    F_value,
    TransformContext,
    dual_value,
    make_coupling,
    minus_transform,
    normalize_gauge,
    plus_transform,
    semi_dual_value,
    y_marginal_of,
)

__version__ = "0.1.0"
