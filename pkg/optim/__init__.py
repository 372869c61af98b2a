"""
Optimization layer: mirror geometry, losses, step sizes and the run engine
"""

from .mirror import (
    DomainError, MirrorMap, bregman, constrained_step, decaying_set_project,
    mirror_objective, mirror_step, simplex_project,
)
from .losses import (
    ConstantsEstimate, DatasetShard, LossSpec, OptimumError, StackedObjective,
    canonical_loss, estimate_constants, global_hessian, global_loss_and_grad,
    local_grad, local_loss, reference_optimum, simplex_optimum, stochastic_grad,
)
from .schedules import (
    DerivedConstants, ScheduleError, ScheduleSpec, derived_constants,
    equal_eta1_coefficient, resolve_schedule, step_size, step_sizes,
)
from .bounds import convex_regret_bound, nonconvex_gradient_bound, strongly_convex_regret_bound
from .engine import (
    DisplacementViolation, DivergenceError, RunConfig, RunTrace, Theorem1Report,
    chain_denominator, regret, run, theorem1_check,
)

__all__ = [
    'DomainError', 'MirrorMap', 'bregman', 'constrained_step', 'decaying_set_project',
    'mirror_objective', 'mirror_step', 'simplex_project',
    'ConstantsEstimate', 'DatasetShard', 'LossSpec', 'OptimumError', 'StackedObjective',
    'canonical_loss', 'estimate_constants', 'global_hessian', 'global_loss_and_grad',
    'local_grad', 'local_loss', 'reference_optimum', 'simplex_optimum', 'stochastic_grad',
    'DerivedConstants', 'ScheduleError', 'ScheduleSpec', 'derived_constants',
    'equal_eta1_coefficient', 'resolve_schedule', 'step_size', 'step_sizes',
    'convex_regret_bound', 'nonconvex_gradient_bound', 'strongly_convex_regret_bound',
    'DisplacementViolation', 'DivergenceError', 'RunConfig', 'RunTrace', 'Theorem1Report',
    'chain_denominator', 'regret', 'run', 'theorem1_check',
]
