"""Constrained multi-objective Bayesian optimization over mixed design spaces.

Core pieces: mixed design spaces with continuous relaxation
(`design_space`), PLS-reduced GP surrogates (`surrogate`), hypervolume and
Pareto archives (`pareto`), acquisition criteria (`acquisition`), the inner
acquisition maximizer (`infill`), NSGA-II post-processing (`moea`), the
ask/tell run driver (`driver`), an HTTP session service (`service`) and
analytic benchmark problems plus a CLI (`benchmarks`, `cli`).
"""

from .acquisition import AcquisitionConfig, ehvi, mpi, pi, regularized
from .benchmarks import BenchmarkProblem, builtin_problems
from .design_space import (
    ActivityRule,
    DesignSpace,
    MixedPoint,
    RelaxedVector,
    SpaceError,
    VariableSpec,
)
from .driver import (
    BudgetExhaustedError,
    FinalizeResult,
    PendingEvaluationError,
    ProtocolError,
    RunConfig,
    RunState,
    ask,
    finalize,
    run,
    tell,
)
from .infill import InfillProblem, InfillResult, dedup_guard, solve
from .moea import Nsga2Config, crowding_distance, evolve, fast_nondominated_sort
from .pareto import (
    ParetoArchive,
    dominates,
    hypervolume,
    hypervolume_improvement,
    nondominated_filter,
    reference_point,
)
from .surrogate import (
    DegenerateDataError,
    FitError,
    KernelConfig,
    MultiOutputSurrogate,
    SurrogateModel,
    fit,
    fit_pls,
    predict,
    predict_gradient,
)

__version__ = "0.1.0"
