"""Degrees of belief for basic action theories with noisy sensors and effectors.

Parse a theory, apply an agent-visible action history, and compute the
degree of belief in a query by regression to the initial situation plus
numerical integration, cross-checked by grid and particle filters.
"""

from .model import (
    ActionDecl,
    ActionEvent,
    And,
    ArityError,
    BelcalcError,
    BinOp,
    Cmp,
    DiscreteTable,
    Gaussian,
    History,
    Lit,
    Name,
    Not,
    Num,
    Or,
    PointMass,
    SourceSpan,
    Theory,
    Uniform,
    UnboundNameError,
    Valuation,
    density_pdf,
    eval_expr,
    eval_formula,
)
from .dsl import (
    Diagnostic,
    HistorySyntaxError,
    ParseResult,
    ROBOT1D_SOURCE,
    format_history,
    format_theory,
    parse_history,
    parse_query,
    parse_theory,
)
from .regression import (
    GroundAction,
    ground_history,
    progress_history,
    progress_valuation,
    regress_history,
    regress_step,
)
from .quadrature import QuadratureConfig
from .engine import (
    BeliefProblem,
    BeliefResult,
    CapacityError,
    DensityGrid,
    ImpossibleHistoryError,
    bel,
    build_problem,
    density_grid_csv,
    posterior_density,
    weight,
)
from .oracle import (
    GridBelief,
    ParticleCloud,
    grid_belief,
    grid_filter,
    particle_belief,
    particle_filter,
    truncated_gaussian_cdf,
)

__version__ = "0.1.0"
