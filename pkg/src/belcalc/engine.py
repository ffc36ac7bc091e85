"""Degrees of belief over action histories.

The weight of a candidate initial state (plus effector outcomes) is the
initial density times the likelihood of every event in the history, zeroed
whenever a precondition fails.  The degree of belief in a query is the
normalized weighted measure of the region where the query holds:

    belief = (integral of weight * indicator) / gamma,   gamma = integral of weight

The default evaluation strategy regresses the query (and every intermediate
precondition and density parameter) to the initial situation, then runs
tensor-product adaptive Simpson over the initial fluents and effector
outcomes, splitting panels at indicator discontinuities.  A sequential
grid strategy (predict/update per action on a fixed lattice) evaluates the
same semantics for higher-dimensional problems and cross-checks the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .model import (
    BelcalcError,
    Cmp,
    And,
    Or,
    Not,
    Lit,
    BinOp,
    Name,
    Num,
    DiscreteTable,
    Expr,
    Formula,
    Gaussian,
    History,
    PointMass,
    Theory,
    Uniform,
    Valuation,
    density_pdf,
    density_support,
    eval_expr,
    eval_expr_interval,
    eval_formula,
    expr_names,
)
from .quadrature import EvalBudget, QuadratureConfig, integrate_pair
from .regression import (
    GroundAction,
    ground_history,
    progress_valuation,
    regress_expr_history,
    regress_history,
    subst_expr,
    subst_formula,
)

__all__ = [
    "BeliefProblem",
    "BeliefResult",
    "DensityGrid",
    "ImpossibleHistoryError",
    "CapacityError",
    "build_problem",
    "weight",
    "bel",
    "posterior_density",
    "density_grid_csv",
]


class ImpossibleHistoryError(BelcalcError):
    """The history has zero weight; belief is undefined."""

    def __init__(self, message: str = "history has zero weight"):
        super().__init__(message)


class CapacityError(BelcalcError):
    """The problem exceeds the configured quadrature capacity."""


@dataclass(frozen=True)
class _Var:
    """One integration variable: an initial fluent or an effector outcome."""

    symbol: str
    density: object          # density with parameters regressed to initial vars
    kind: str                # "continuous" | "discrete" | "pinned"
    box: tuple[float, float]
    values: tuple = ()       # discrete support
    is_latent: bool = False


@dataclass(frozen=True)
class BeliefProblem:
    """A fully identified belief query: theory + history + query.

    ``init_vars`` list the initial fluents with their densities;
    ``latent_vars`` hold one entry per noisy physical action in the history.
    ``dimension`` counts both, whether or not a variable ends up pinned.
    """

    theory: Theory
    history: History
    query: Formula
    init_vars: tuple
    latent_vars: tuple
    ground: tuple            # GroundAction sequence with symbolic latents
    regressed_query: Formula
    regressed_poss: tuple    # per event, over initial variables
    factors: tuple           # per-event likelihood factor descriptors
    warnings: tuple = ()

    @property
    def dimension(self) -> int:
        return len(self.init_vars) + len(self.latent_vars)

    @property
    def quadrature_dimension(self) -> int:
        return sum(1 for v in self.all_vars if v.kind == "continuous")

    @property
    def all_vars(self) -> tuple:
        return self.init_vars + self.latent_vars


@dataclass(frozen=True)
class BeliefResult:
    belief: float
    gamma: float
    estimated_abs_error: float
    dimension: int
    evaluations: int
    warnings: tuple = ()


@dataclass(frozen=True)
class DensityGrid:
    """Tabulated one-fluent posterior density, normalized to integrate to 1."""

    fluent: str
    points: tuple
    densities: tuple

    def __post_init__(self):
        pts = self.points
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("grid points must be strictly ascending")
        if len(pts) != len(self.densities):
            raise ValueError("points and densities must have equal length")


def density_grid_csv(grid: DensityGrid) -> str:
    """CSV with header `point,density`, 17 significant digits, LF endings."""
    lines = ["point,density"]
    for p, d in zip(grid.points, grid.densities):
        lines.append(f"{p:.17g},{d:.17g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Problem construction: regress everything to the initial situation once.
# ---------------------------------------------------------------------------

def _subst_params(decl, args) -> dict:
    return {p: Num(float(v)) for p, v in zip(decl.params, args)}


def _regress_density(d, param_env, prefix, theory):
    """Substitute action parameters, then regress expression parameters
    through the preceding history so they mention initial variables only."""
    if isinstance(d, Gaussian):
        mean = subst_expr(d.mean, param_env)
        mean = regress_expr_history(mean, prefix, theory)
        return Gaussian(mean, d.stddev)
    if isinstance(d, PointMass):
        value = subst_expr(d.value, param_env)
        value = regress_expr_history(value, prefix, theory)
        return PointMass(value)
    return d  # Uniform / DiscreteTable carry constants only


def build_problem(theory: Theory, history: History, query: Formula,
                  cfg: Optional[QuadratureConfig] = None) -> BeliefProblem:
    """Identify variables, regress the query and all event factors."""
    cfg = cfg or QuadratureConfig()
    ground = tuple(ground_history(history, theory, "symbolic"))

    # Initial-fluent variables and their (constant-parameter) supports.
    init_vars = []
    boxes: dict = {}
    for fluent, d in theory.init:
        box = density_support(d, {}, cfg.gaussian_halfwidth)
        if isinstance(d, PointMass):
            kind = "pinned"
        elif isinstance(d, DiscreteTable):
            kind = "discrete"
        else:
            kind = "continuous"
        values = tuple(v for v, _ in d.entries) if isinstance(d, DiscreteTable) else ()
        init_vars.append(_Var(fluent, d, kind, box, values))
        boxes[fluent] = box

    # Latent variables, one per noisy event, with regressed densities.
    latent_vars = []
    factors = []
    regressed_poss = []
    for k, ga in enumerate(ground):
        decl = theory.action(ga.action)
        prefix = ground[:k]
        param_env = _subst_params(decl, ga.args)

        poss = subst_formula(decl.poss, param_env)
        poss = regress_history(poss, prefix, theory)
        regressed_poss.append(poss)

        if decl.is_noisy:
            d0 = _regress_density(decl.effector_noise, param_env, prefix, theory)
            box = density_support(d0, boxes, cfg.gaussian_halfwidth)
            if isinstance(d0, DiscreteTable):
                kind = "discrete"
                values = tuple(v for v, _ in d0.entries)
            else:
                kind = "continuous"
                values = ()
            assert isinstance(ga.latent, str)
            latent_vars.append(_Var(ga.latent, d0, kind, box, values, is_latent=True))
            boxes[ga.latent] = box
            factors.append(("pdf_at_var", d0, ga.latent))
        if decl.is_sensing:
            d0 = _regress_density(decl.sensing_likelihood, param_env, prefix, theory)
            factors.append(("pdf_at_point", d0, float(ga.reading)))

    regressed_query = regress_history(query, ground, theory)

    warnings = []
    cont = {v.symbol for v in init_vars + latent_vars if v.kind == "continuous"}
    if cont and _has_continuous_equality(regressed_query, cont, boxes):
        warnings.append(
            "query contains an equality over a continuously distributed value; "
            "its belief is 0 (measure zero) - use an interval query instead")
        # Such an atom holds on a null set; make that exact, not approximate.
        regressed_query = _drop_continuous_equalities(regressed_query, cont, boxes)

    return BeliefProblem(
        theory=theory,
        history=history,
        query=query,
        init_vars=tuple(init_vars),
        latent_vars=tuple(latent_vars),
        ground=ground,
        regressed_query=regressed_query,
        regressed_poss=tuple(regressed_poss),
        factors=tuple(factors),
        warnings=tuple(warnings),
    )


def _drop_continuous_equalities(f: Formula, cont: set, boxes: dict) -> Formula:
    """Replace measure-zero equality atoms by `false` (exact a.e. semantics)."""
    if isinstance(f, Cmp):
        if _has_continuous_equality(f, cont, boxes):
            return Lit(False)
        return f
    if isinstance(f, And):
        return And(_drop_continuous_equalities(f.left, cont, boxes),
                   _drop_continuous_equalities(f.right, cont, boxes))
    if isinstance(f, Or):
        return Or(_drop_continuous_equalities(f.left, cont, boxes),
                  _drop_continuous_equalities(f.right, cont, boxes))
    if isinstance(f, Not):
        return Not(_drop_continuous_equalities(f.inner, cont, boxes))
    return f


def _has_continuous_equality(f: Formula, cont: set, boxes: dict) -> bool:
    if isinstance(f, Cmp):
        if f.op != "=":
            return False
        diff = BinOp("-", f.lhs, f.rhs)
        names = expr_names(diff)
        if not (names & cont):
            return False
        lo, hi = eval_expr_interval(diff, {n: boxes.get(n, (0.0, 0.0)) for n in names})
        return hi - lo > 0.0
    if isinstance(f, (And, Or)):
        return (_has_continuous_equality(f.left, cont, boxes)
                or _has_continuous_equality(f.right, cont, boxes))
    if isinstance(f, Not):
        # A negated equality holds almost everywhere; no warning needed.
        return False
    return False


# ---------------------------------------------------------------------------
# The weight function (forward reading; also used by tests and the CLI).
# ---------------------------------------------------------------------------

def weight(v0: Valuation, latents: Sequence[float], hist: History, t: Theory,
           *, init_scale: float = 1.0) -> float:
    """Weight of one candidate initial state and effector-outcome vector.

    Product of the initial densities at ``v0`` and, per event in ``hist``,
    the effector-noise density of the actual outcome (noisy physical) or the
    likelihood of the reading (sensing); zero as soon as a precondition
    fails.  ``init_scale`` multiplies the initial density (testing hook for
    the normalization-invariance property).
    """
    w = float(init_scale)
    for fluent, d in t.init:
        if fluent not in v0:
            raise BelcalcError(f"valuation missing fluent {fluent!r}")
        w *= density_pdf(d, v0[fluent], v0)
        if w == 0.0:
            return 0.0

    ground = ground_history(hist, t, list(latents))
    state = {f: float(v0[f]) for f in t.fluents}
    for ga in ground:
        decl = t.action(ga.action)
        env = dict(state)
        for p, v in zip(decl.params, ga.args):
            env[p] = float(v)
        if not eval_formula(decl.poss, env):
            return 0.0
        if decl.is_noisy:
            w *= density_pdf(decl.effector_noise, float(ga.latent), env)
        if decl.is_sensing:
            env[decl.sensing_reading] = float(ga.reading)
            w *= density_pdf(decl.sensing_likelihood, float(ga.reading), env)
        if w == 0.0:
            return 0.0
        state = progress_valuation(state, ga, t)
    return w


# ---------------------------------------------------------------------------
# Regressed-form evaluation used by the quadrature strategy.
# ---------------------------------------------------------------------------

def _make_weight_fn(problem: BeliefProblem, init_scale: float) -> Callable:
    """Weight over a full assignment of initial fluents and latent symbols,
    computed from the regressed preconditions and factor densities."""
    init = problem.theory.init
    poss_list = problem.regressed_poss
    factors = problem.factors

    def w(assign: dict) -> float:
        value = init_scale
        for fluent, d in init:
            value *= density_pdf(d, assign[fluent], assign)
            if value == 0.0:
                return 0.0
        for poss in poss_list:
            if not eval_formula(poss, assign):
                return 0.0
        for kind, d, arg in factors:
            if kind == "pdf_at_var":
                value *= density_pdf(d, assign[arg], assign)
            else:
                value *= density_pdf(d, arg, assign)
            if value == 0.0:
                return 0.0
        return value

    return w


def _collect_split_exprs(problem: BeliefProblem) -> list:
    """Expressions whose zero crossings are potential integrand jumps."""
    exprs = []

    def from_formula(f: Formula):
        if isinstance(f, Cmp):
            exprs.append(BinOp("-", f.lhs, f.rhs))
        elif isinstance(f, (And, Or)):
            from_formula(f.left)
            from_formula(f.right)
        elif isinstance(f, Not):
            from_formula(f.inner)

    from_formula(problem.regressed_query)
    for poss in problem.regressed_poss:
        from_formula(poss)
    return exprs


def _assign_splits_to_vars(split_exprs: list, order: list) -> dict:
    """Map each split expression to the innermost variable it mentions."""
    result: dict = {sym: [] for sym in order}
    position = {sym: i for i, sym in enumerate(order)}
    for e in split_exprs:
        names = [n for n in expr_names(e) if n in position]
        if not names:
            continue
        innermost = max(names, key=lambda n: position[n])
        result[innermost].append(e)
    return result


def _linear_root(e: Expr, sym: str, assign: dict) -> Optional[float]:
    """Root of ``e`` in ``sym`` with everything else bound, if ``e`` is
    linear in ``sym`` there; None otherwise."""
    local = dict(assign)
    local[sym] = 0.0
    b = eval_expr(e, local)
    local[sym] = 1.0
    f1 = eval_expr(e, local)
    slope = f1 - b
    if slope == 0.0:
        return None
    local[sym] = 2.0
    f2 = eval_expr(e, local)
    # Quadratic or worse in sym: fall back to plain adaptivity.
    if abs(f2 - (b + 2.0 * slope)) > 1e-9 * (1.0 + abs(f2)):
        return None
    return -b / slope


class _QuadRunner:
    """Recursive tensor-product integrator over the problem's variables."""

    def __init__(self, problem: BeliefProblem, cfg: QuadratureConfig,
                 init_scale: float, indicator: Optional[Formula]):
        self.problem = problem
        self.cfg = cfg
        self.weight_fn = _make_weight_fn(problem, init_scale)
        self.indicator = indicator
        self.vars = list(problem.all_vars)
        self.order = [v.symbol for v in self.vars]
        self.splits = _assign_splits_to_vars(_collect_split_exprs(problem), self.order)
        self.budget = EvalBudget(cfg.max_evals)

    def run(self) -> tuple:
        """Returns ((gamma, numerator), (err_gamma, err_num))."""
        assign: dict = {}
        return self._level(0, assign)

    def _evaluate(self, assign: dict) -> tuple:
        w = self.weight_fn(assign)
        if w == 0.0:
            return (0.0, 0.0)
        if self.indicator is None:
            return (w, 0.0)
        num = w if eval_formula(self.indicator, assign) else 0.0
        return (w, num)

    def _level(self, i: int, assign: dict) -> tuple:
        if i == len(self.vars):
            self.budget.spend(0)
            return self._evaluate(assign), (0.0, 0.0)
        var = self.vars[i]
        if var.kind == "pinned":
            assert isinstance(var.density, PointMass)
            assign[var.symbol] = eval_expr(var.density.value, assign)
            value, err = self._level(i + 1, assign)
            del assign[var.symbol]
            return value, err
        if var.kind == "discrete":
            # Masses are applied by the pdf factors; just sum over support.
            tot0 = tot1 = e0 = e1 = 0.0
            for v in var.values:
                assign[var.symbol] = v
                (a0, a1), (b0, b1) = self._level(i + 1, assign)
                tot0 += a0
                tot1 += a1
                e0 += b0
                e1 += b1
            del assign[var.symbol]
            return (tot0, tot1), (e0, e1)

        lo, hi = var.box
        if var.is_latent and isinstance(var.density, Gaussian):
            # Tighten the generic interval bound using the outer assignment.
            names = expr_names(var.density.mean)
            if all(n in assign for n in names):
                mu = eval_expr(var.density.mean, assign)
                pad = self.cfg.gaussian_halfwidth * var.density.stddev
                lo, hi = max(lo, mu - pad), min(hi, mu + pad)

        roots = []
        for e in self.splits.get(var.symbol, ()):
            names = expr_names(e)
            if any(n != var.symbol and n not in assign for n in names):
                continue
            r = _linear_root(e, var.symbol, assign)
            if r is not None and lo < r < hi:
                roots.append(r)

        def integrand(t: float) -> tuple:
            assign[var.symbol] = t
            (v0, v1), (ie0, ie1) = self._level(i + 1, assign)
            return (v0, v1)

        pair, err = integrate_pair(
            integrand, lo, hi,
            splits=roots,
            abs_tol=self.cfg.abs_tol,
            budget=self.budget,
            max_depth=self.cfg.max_depth,
        )
        assign.pop(var.symbol, None)
        return pair, err


def bel(problem_or_theory, history: Optional[History] = None,
        query: Optional[Formula] = None,
        quad: Optional[QuadratureConfig] = None,
        *,
        strategy: str = "regress-quad",
        cells: int = 2048,
        init_scale: float = 1.0) -> BeliefResult:
    """Degree of belief in a query after an action history.

    Accepts either a prebuilt :class:`BeliefProblem` or a
    (theory, history, query) triple.  Raises
    :class:`ImpossibleHistoryError` when the history has zero weight and
    :class:`CapacityError` when the continuous dimension exceeds the
    configured maximum for the chosen strategy.
    """
    cfg = quad or QuadratureConfig()
    if isinstance(problem_or_theory, BeliefProblem):
        problem = problem_or_theory
    else:
        if history is None or query is None:
            raise BelcalcError("bel needs a history and a query")
        problem = build_problem(problem_or_theory, history, query, cfg)

    if strategy == "regress-quad":
        if problem.quadrature_dimension > cfg.d_max:
            raise CapacityError(
                f"quadrature dimension {problem.quadrature_dimension} exceeds "
                f"D_max={cfg.d_max}; use the sequential-grid strategy")
        # A constant initial-density scale factors out of both integrals, so
        # it is applied after quadrature: gamma scales exactly, belief not at all.
        runner = _QuadRunner(problem, cfg, 1.0, problem.regressed_query)
        (gamma, num), (e_gam, e_num) = runner.run()
        gamma_scaled = gamma * init_scale
        if not gamma_scaled > cfg.gamma_min:
            raise ImpossibleHistoryError()
        belief = min(1.0, max(0.0, num / gamma))
        err = (e_num + belief * e_gam) / gamma
        return BeliefResult(
            belief=belief,
            gamma=gamma_scaled,
            estimated_abs_error=err,
            dimension=problem.dimension,
            evaluations=runner.budget.used,
            warnings=problem.warnings,
        )
    if strategy in ("grid", "sequential-grid"):
        return _bel_sequential_grid(problem, cfg, cells, init_scale)
    raise BelcalcError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Sequential-grid strategy: predict/update on a fixed lattice.
# ---------------------------------------------------------------------------

def _np_eval_expr(e: Expr, env: dict):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        try:
            return env[e.name]
        except KeyError:
            raise BelcalcError(f"unbound name {e.name!r}") from None
    if isinstance(e, BinOp):
        a = _np_eval_expr(e.left, env)
        b = _np_eval_expr(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        return a * b
    raise BelcalcError(f"not an expression: {e!r}")


def _np_eval_formula(f: Formula, env: dict):
    if isinstance(f, Lit):
        return f.value
    if isinstance(f, Cmp):
        a = _np_eval_expr(f.lhs, env)
        b = _np_eval_expr(f.rhs, env)
        return {"<": np.less, "<=": np.less_equal, "=": np.equal,
                ">=": np.greater_equal, ">": np.greater}[f.op](a, b)
    if isinstance(f, And):
        return np.logical_and(_np_eval_formula(f.left, env),
                              _np_eval_formula(f.right, env))
    if isinstance(f, Or):
        return np.logical_or(_np_eval_formula(f.left, env),
                             _np_eval_formula(f.right, env))
    if isinstance(f, Not):
        return np.logical_not(_np_eval_formula(f.inner, env))
    raise BelcalcError(f"not a formula: {f!r}")


def _np_density_pdf(d, points, env: dict):
    if isinstance(d, Uniform):
        return np.where((points >= d.lo) & (points <= d.hi),
                        1.0 / (d.hi - d.lo), 0.0)
    if isinstance(d, Gaussian):
        mu = _np_eval_expr(d.mean, env)
        z = (points - mu) / d.stddev
        return np.exp(-0.5 * z * z) / (d.stddev * math.sqrt(2.0 * math.pi))
    if isinstance(d, DiscreteTable):
        out = np.zeros_like(np.asarray(points, dtype=float))
        for v, m in d.entries:
            out = np.where(points == v, m, out)
        return out
    if isinstance(d, PointMass):
        value = _np_eval_expr(d.value, env)
        return np.where(points == value, 1.0, 0.0)
    raise BelcalcError(f"not a density: {d!r}")


def _reachable_boxes(theory: Theory, ground, cfg: QuadratureConfig) -> dict:
    """Per-fluent interval hull of every state along the history."""
    boxes = {}
    for fluent, d in theory.init:
        boxes[fluent] = density_support(d, {}, cfg.gaussian_halfwidth)
    hull = dict(boxes)
    for k, ga in enumerate(ground):
        decl = theory.action(ga.action)
        if decl.is_sensing or not decl.effects:
            continue
        env = {p: (float(v), float(v)) for p, v in zip(decl.params, ga.args)}
        env.update(boxes)
        if decl.effector_latent is not None:
            if isinstance(decl.effector_noise, PointMass):
                env[decl.effector_latent] = eval_expr_interval(
                    decl.effector_noise.value, env)
            else:
                env[decl.effector_latent] = density_support(
                    decl.effector_noise, env, cfg.gaussian_halfwidth)
        new_boxes = dict(boxes)
        for fluent, rhs in decl.effects:
            new_boxes[fluent] = eval_expr_interval(rhs, env)
        boxes = new_boxes
        for f, (lo, hi) in boxes.items():
            h0, h1 = hull[f]
            hull[f] = (min(h0, lo), max(h1, hi))
    return hull


class _GridState:
    """Lattice of cell centers per fluent with a joint mass array."""

    def __init__(self, theory: Theory, ground, cfg: QuadratureConfig,
                 cells: int, init_scale: float):
        self.theory = theory
        self.cfg = cfg
        hull = _reachable_boxes(theory, ground, cfg)
        n_cont = sum(1 for _, d in theory.init
                     if not isinstance(d, (PointMass, DiscreteTable)))
        if n_cont > 2:
            raise CapacityError(
                "sequential grid supports at most 2 continuous fluents")
        per_axis = cells if n_cont <= 1 else max(2, min(cells, 256))

        self.axes = []       # (fluent, centers ndarray, cell width)
        for fluent, d in theory.init:
            if isinstance(d, PointMass):
                value = eval_expr(d.value, {})
                self.axes.append((fluent, np.array([value]), 1.0))
            elif isinstance(d, DiscreteTable):
                values = np.array([v for v, _ in d.entries])
                self.axes.append((fluent, values, 1.0))
            else:
                lo, hi = hull[fluent]
                width = (hi - lo) / per_axis
                centers = lo + (np.arange(per_axis) + 0.5) * width
                self.axes.append((fluent, centers, width))

        shape = tuple(len(c) for _, c, _ in self.axes)
        mesh = np.meshgrid(*[c for _, c, _ in self.axes], indexing="ij", sparse=False)
        self.state = {fluent: m.ravel() for (fluent, _, _), m in zip(self.axes, mesh)}
        mass = np.full(int(np.prod(shape)), float(init_scale))
        for (fluent, _, width) in self.axes:
            d = theory.init_density(fluent)
            if isinstance(d, PointMass):
                continue
            pdf = _np_density_pdf(d, self.state[fluent], {})
            mass = mass * pdf * (width if not isinstance(d, DiscreteTable) else 1.0)
        self.mass = mass
        self.shape = shape
        self.ops = mass.size

    def _env(self, extra: Optional[dict] = None) -> dict:
        env = dict(self.state)
        if extra:
            env.update(extra)
        return env

    def _rebin(self, new_state: dict, mass) -> None:
        """Scatter updated states back onto the fixed lattice (linear)."""
        weights = [np.ones(mass.size)]
        indices = [np.zeros(mass.size, dtype=np.int64)]
        for axis, (fluent, centers, width) in enumerate(self.axes):
            values = new_state[fluent]
            if len(centers) == 1:
                continue
            pos = (values - centers[0]) / (centers[1] - centers[0])
            left = np.floor(pos).astype(np.int64)
            frac = pos - left
            stride = int(np.prod(self.shape[axis + 1:]))
            new_weights = []
            new_indices = []
            for w, idx in zip(weights, indices):
                li = np.clip(left, 0, len(centers) - 1)
                ri = np.clip(left + 1, 0, len(centers) - 1)
                in_lo = (left >= -1) & (left <= len(centers) - 1)
                wl = np.where((left >= 0) & in_lo, 1.0 - frac, 0.0)
                wr = np.where((left + 1 <= len(centers) - 1) & in_lo, frac, 0.0)
                new_weights.append(w * wl)
                new_indices.append(idx + li * stride)
                new_weights.append(w * wr)
                new_indices.append(idx + ri * stride)
            weights = new_weights
            indices = new_indices
        out = np.zeros(mass.size)
        for w, idx in zip(weights, indices):
            np.add.at(out, idx, mass * w)
        self.mass = out
        self.ops += mass.size * len(weights)

    def apply_event(self, ga: GroundAction) -> None:
        decl = self.theory.action(ga.action)
        params = {p: float(v) for p, v in zip(decl.params, ga.args)}
        env = self._env(params)

        poss = _np_eval_formula(decl.poss, env)
        self.mass = self.mass * poss
        self.ops += self.mass.size

        if decl.is_sensing:
            env2 = dict(env)
            env2[decl.sensing_reading] = float(ga.reading)
            like = _np_density_pdf(decl.sensing_likelihood, float(ga.reading), env2)
            self.mass = self.mass * like
            self.ops += self.mass.size
            return
        if not decl.effects:
            return

        # Physical action: enumerate effector outcomes.
        if decl.effector_latent is None:
            nodes = [(None, 1.0)]
        elif isinstance(decl.effector_noise, PointMass):
            nodes = [("pm", 1.0)]
        elif isinstance(decl.effector_noise, DiscreteTable):
            nodes = [(float(v), float(m)) for v, m in decl.effector_noise.entries]
        else:
            # Continuous noise: midpoint rule over the truncated support.
            k = 129
            boxes = {f: (float(c.min()), float(c.max())) for f, c, _ in self.axes}
            boxes.update({p: (v, v) for p, v in params.items()})
            lo, hi = density_support(decl.effector_noise, boxes,
                                     self.cfg.gaussian_halfwidth)
            step = (hi - lo) / k
            ys = lo + (np.arange(k) + 0.5) * step
            nodes = [("cont", ys, step)]

        total = np.zeros(self.mass.size)
        if nodes and nodes[0] == ("pm", 1.0):
            env2 = dict(env)
            env2[decl.effector_latent] = _np_eval_expr(decl.effector_noise.value, env)
            new_state = dict(self.state)
            for fluent, rhs in decl.effects:
                new_state[fluent] = np.broadcast_to(
                    np.asarray(_np_eval_expr(rhs, env2), dtype=float),
                    (self.mass.size,)).copy()
            self._rebin(new_state, self.mass)
            return
        if nodes and nodes[0] is not None and isinstance(nodes[0], tuple) \
                and nodes[0][0] == "cont":
            _, ys, step = nodes[0]
            for y in ys:
                env2 = dict(env)
                env2[decl.effector_latent] = float(y)
                pdf = _np_density_pdf(decl.effector_noise, float(y), env)
                new_state = dict(self.state)
                for fluent, rhs in decl.effects:
                    new_state[fluent] = np.broadcast_to(
                        np.asarray(_np_eval_expr(rhs, env2), dtype=float),
                        (self.mass.size,)).copy()
                self._rebin_accumulate(new_state, self.mass * pdf * step, total)
            self.mass = total
            return
        # Deterministic (no latent) or discrete outcomes.
        for node in nodes:
            if node == (None, 1.0):
                env2 = env
                m = self.mass
            else:
                y, mass_frac = node
                env2 = dict(env)
                env2[decl.effector_latent] = float(y)
                m = self.mass * mass_frac
            new_state = dict(self.state)
            for fluent, rhs in decl.effects:
                new_state[fluent] = np.broadcast_to(
                    np.asarray(_np_eval_expr(rhs, env2), dtype=float),
                    (self.mass.size,)).copy()
            self._rebin_accumulate(new_state, m, total)
        self.mass = total

    def _rebin_accumulate(self, new_state: dict, mass, total) -> None:
        saved = self.mass
        self._rebin(new_state, mass)
        total += self.mass
        self.mass = saved

    def gamma(self) -> float:
        return float(self.mass.sum())

    def belief(self, query: Formula) -> float:
        ind = _np_eval_formula(query, self._env())
        g = self.gamma()
        return float((self.mass * ind).sum()) / g

    def marginal(self, fluent: str) -> tuple:
        axis_no = [f for f, _, _ in self.axes].index(fluent)
        mass_nd = self.mass.reshape(self.shape)
        other = tuple(i for i in range(len(self.shape)) if i != axis_no)
        marg = mass_nd.sum(axis=other) if other else mass_nd
        _, centers, width = self.axes[axis_no]
        return centers, marg, width


def _bel_sequential_grid(problem: BeliefProblem, cfg: QuadratureConfig,
                         cells: int, init_scale: float) -> BeliefResult:
    gs = _GridState(problem.theory, problem.ground, cfg, cells, init_scale)
    for ga in problem.ground:
        gs.apply_event(ga)
    gamma = gs.gamma()
    if not gamma > cfg.gamma_min:
        raise ImpossibleHistoryError()
    belief = min(1.0, max(0.0, gs.belief(problem.query)))
    # First-order discretization estimate: one cell width of indicator slack.
    width = max((w for _, c, w in gs.axes if len(c) > 1), default=0.0)
    lo, hi = gs.axes[0][1][0], gs.axes[0][1][-1]
    err = width / max(hi - lo, width) if width else 0.0
    return BeliefResult(
        belief=belief,
        gamma=gamma,
        estimated_abs_error=err,
        dimension=problem.dimension,
        evaluations=gs.ops,
        warnings=problem.warnings,
    )


# ---------------------------------------------------------------------------
# Posterior density tabulation.
# ---------------------------------------------------------------------------

def _diff_expr(e: Expr, sym: str) -> Expr:
    """Symbolic derivative of a polynomial expression."""
    if isinstance(e, Num):
        return Num(0.0)
    if isinstance(e, Name):
        return Num(1.0 if e.name == sym else 0.0)
    if isinstance(e, BinOp):
        da = _diff_expr(e.left, sym)
        db = _diff_expr(e.right, sym)
        if e.op in ("+", "-"):
            return BinOp(e.op, da, db)
        return BinOp("+", BinOp("*", da, e.right), BinOp("*", e.left, db))
    raise BelcalcError(f"not an expression: {e!r}")


def posterior_density(theory: Theory, hist: History, fluent: str,
                      points: Sequence[float],
                      quad: Optional[QuadratureConfig] = None,
                      *, cells: int = 2048) -> DensityGrid:
    """Marginal density of a fluent's post-history value on a grid.

    Uses the regression strategy with an exact linear change of variables
    when the post-history value is affine in some integration variable with
    a constant coefficient; otherwise falls back to the sequential grid.
    The result integrates to 1 (trapezoid rule) over the grid.
    """
    cfg = quad or QuadratureConfig()
    if fluent not in theory.fluents:
        raise BelcalcError(f"undeclared fluent: {fluent!r}")
    pts = [float(p) for p in points]
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise BelcalcError("grid points must be strictly ascending")

    problem = build_problem(theory, hist, Lit(True), cfg)
    post = regress_expr_history(Name(fluent), problem.ground, theory)

    pivot = _find_linear_pivot(post, problem)
    if pivot is None or problem.quadrature_dimension > cfg.d_max:
        dens = _posterior_from_grid(problem, cfg, fluent, pts, cells)
    else:
        dens = _posterior_by_substitution(problem, cfg, post, pivot, pts)

    total = np.trapezoid(dens, pts)
    if not total > cfg.gamma_min:
        raise ImpossibleHistoryError()
    dens = [d / total for d in dens]
    return DensityGrid(fluent, tuple(pts), tuple(dens))


def _find_linear_pivot(post: Expr, problem: BeliefProblem):
    """(symbol, coefficient) if post is affine in symbol with a constant
    nonzero coefficient; initial fluents are preferred over latents."""
    boxes = {v.symbol: v.box for v in problem.all_vars}
    for v in problem.all_vars:
        if v.kind != "continuous":
            continue
        if v.symbol not in expr_names(post):
            continue
        d = _diff_expr(post, v.symbol)
        lo, hi = eval_expr_interval(d, boxes)
        if hi - lo <= 1e-12 * max(1.0, abs(lo)) and abs(lo) > 1e-12:
            return (v.symbol, 0.5 * (lo + hi))
    return None


def _posterior_by_substitution(problem: BeliefProblem, cfg: QuadratureConfig,
                               post: Expr, pivot, pts) -> list:
    sym, coeff = pivot
    # post is affine in sym with constant slope, so post = coeff*sym + rest
    # where rest = post with sym set to zero.
    rest = subst_expr(post, {sym: Num(0.0)})
    remaining = [v for v in problem.all_vars if v.symbol != sym]
    weight_fn = _make_weight_fn(problem, 1.0)
    split_exprs = _collect_split_exprs(problem)
    pinned_var = next(v for v in problem.all_vars if v.symbol == sym)

    out = []
    for p in pts:
        # sym = (p - rest) / coeff under each assignment of the others.
        sym_expr = BinOp("*", Num(1.0 / coeff), BinOp("-", Num(p), rest))
        mapping = {sym: sym_expr}
        local_splits = [subst_expr(e, mapping) for e in split_exprs]
        if isinstance(pinned_var.density, Uniform):
            local_splits.append(BinOp("-", sym_expr, Num(pinned_var.density.lo)))
            local_splits.append(BinOp("-", sym_expr, Num(pinned_var.density.hi)))
        order = [v.symbol for v in remaining]
        split_map = _assign_splits_to_vars(local_splits, order)
        budget = EvalBudget(cfg.max_evals)

        def level(i: int, assign: dict) -> float:
            if i == len(remaining):
                assign[sym] = (p - eval_expr(rest, assign)) / coeff
                w = weight_fn(assign)
                del assign[sym]
                return w
            var = remaining[i]
            if var.kind == "pinned":
                assign[var.symbol] = eval_expr(var.density.value, assign)
                value = level(i + 1, assign)
                del assign[var.symbol]
                return value
            if var.kind == "discrete":
                total = 0.0
                for v in var.values:
                    assign[var.symbol] = v
                    total += level(i + 1, assign)
                del assign[var.symbol]
                return total
            lo, hi = var.box
            roots = []
            for e in split_map.get(var.symbol, ()):
                names = expr_names(e)
                if any(n != var.symbol and n not in assign for n in names):
                    continue
                r = _linear_root(e, var.symbol, assign)
                if r is not None and lo < r < hi:
                    roots.append(r)

            def integrand(t: float):
                assign[var.symbol] = t
                v0 = level(i + 1, assign)
                return (v0, 0.0)

            pair, _ = integrate_pair(integrand, lo, hi, splits=roots,
                                     abs_tol=cfg.abs_tol, budget=budget,
                                     max_depth=cfg.max_depth)
            assign.pop(var.symbol, None)
            return pair[0]

        out.append(level(0, {}) / abs(coeff))
    return out


def _posterior_from_grid(problem: BeliefProblem, cfg: QuadratureConfig,
                         fluent: str, pts, cells: int) -> list:
    gs = _GridState(problem.theory, problem.ground, cfg, cells, 1.0)
    for ga in problem.ground:
        gs.apply_event(ga)
    gamma = gs.gamma()
    if not gamma > cfg.gamma_min:
        raise ImpossibleHistoryError()
    centers, marg, width = gs.marginal(fluent)
    if len(centers) < 2:
        raise CapacityError("posterior fluent is not continuously gridded")
    density = marg / (gamma * width)
    return list(np.interp(pts, centers, density, left=0.0, right=0.0))
