"""Value and AST layer: expressions, formulas, densities, theories, histories.

Everything here is an immutable value; instances can be shared freely
between threads and evaluated concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

__all__ = [
    "SourceSpan",
    "Num",
    "Name",
    "BinOp",
    "Expr",
    "Cmp",
    "And",
    "Or",
    "Not",
    "Lit",
    "Formula",
    "Uniform",
    "Gaussian",
    "DiscreteTable",
    "PointMass",
    "Density",
    "ActionDecl",
    "Theory",
    "ActionEvent",
    "History",
    "Valuation",
    "BelcalcError",
    "UnboundNameError",
    "ArityError",
    "eval_expr",
    "eval_formula",
    "expr_names",
    "formula_names",
    "density_pdf",
    "density_names",
    "density_support",
    "eval_expr_interval",
]


class BelcalcError(Exception):
    """Base class for all errors raised by this package."""


class UnboundNameError(BelcalcError):
    """An expression referenced a name that is not bound in the valuation."""

    def __init__(self, symbol: str):
        super().__init__(f"unbound name: {symbol!r}")
        self.symbol = symbol


class ArityError(BelcalcError):
    """An action event's arguments do not match its declaration."""


@dataclass(frozen=True)
class SourceSpan:
    """Byte span plus line/column of a construct in DSL source text."""

    start: int
    end: int
    line: int
    column: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start must not exceed end")


# ---------------------------------------------------------------------------
# Arithmetic expressions over fluent names: +, -, * and real constants.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Name:
    name: str
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # one of '+', '-', '*'
    left: "Expr"
    right: "Expr"
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


Expr = Union[Num, Name, BinOp]


# ---------------------------------------------------------------------------
# Quantifier-free boolean formulas over comparisons of expressions.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cmp:
    op: str  # one of '<', '<=', '=', '>=', '>'
    lhs: Expr
    rhs: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Not:
    inner: "Formula"
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Lit:
    value: bool
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


Formula = Union[Cmp, And, Or, Not, Lit]


# ---------------------------------------------------------------------------
# Densities.  Parameters that may depend on the current state are stored as
# expressions; constants are wrapped in Num.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("uniform density requires lo < hi")


@dataclass(frozen=True)
class Gaussian:
    mean: Expr
    stddev: float
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.stddev > 0:
            raise ValueError("gaussian density requires stddev > 0")


@dataclass(frozen=True)
class DiscreteTable:
    entries: tuple[tuple[float, float], ...]  # (value, mass) pairs
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.entries:
            raise ValueError("discrete table must not be empty")
        if any(m < 0 for _, m in self.entries):
            raise ValueError("discrete table masses must be nonnegative")
        total = math.fsum(m for _, m in self.entries)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"discrete table masses sum to {total!r}, not 1")


@dataclass(frozen=True)
class PointMass:
    """Deterministic limit; only ever evaluated, never integrated."""

    value: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


Density = Union[Uniform, Gaussian, DiscreteTable, PointMass]


# ---------------------------------------------------------------------------
# Action declarations and theories.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActionDecl:
    """One action schema: physical (optionally noisy) xor sensing.

    ``effects`` maps fluent name -> right-hand side of its update; fluents
    without an entry persist unchanged (implicit frame assumption).
    """

    name: str
    params: tuple[str, ...]
    poss: Formula
    effects: tuple[tuple[str, Expr], ...] = ()
    effector_latent: Optional[str] = None     # latent outcome name, e.g. "y"
    effector_noise: Optional[Density] = None  # density of the latent
    sensing_reading: Optional[str] = None     # reading name, e.g. "z"
    sensing_likelihood: Optional[Density] = None
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.effector_noise is not None and self.sensing_likelihood is not None:
            raise ValueError("an action is either physical or sensing, not both")
        if (self.effector_noise is None) != (self.effector_latent is None):
            raise ValueError("effector noise and latent name go together")
        if (self.sensing_likelihood is None) != (self.sensing_reading is None):
            raise ValueError("sensing likelihood and reading name go together")

    @property
    def is_sensing(self) -> bool:
        return self.sensing_likelihood is not None

    @property
    def is_noisy(self) -> bool:
        """True when the effector outcome is genuinely random."""
        return self.effector_noise is not None and not isinstance(
            self.effector_noise, PointMass
        )

    def effect_for(self, fluent: str) -> Optional[Expr]:
        for name, rhs in self.effects:
            if name == fluent:
                return rhs
        return None


@dataclass(frozen=True)
class Theory:
    """A validated noise-extended basic action theory."""

    name: str
    fluents: tuple[str, ...]
    init: tuple[tuple[str, Density], ...]  # one entry per fluent, same order
    actions: tuple[ActionDecl, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if len(set(self.fluents)) != len(self.fluents):
            raise ValueError("fluent names must be unique")
        if tuple(n for n, _ in self.init) != self.fluents:
            raise ValueError("init entries must match fluents exactly, in order")
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise ValueError("action names must be unique")

    def action(self, name: str) -> ActionDecl:
        for a in self.actions:
            if a.name == name:
                return a
        raise BelcalcError(f"undeclared action: {name!r}")

    def init_density(self, fluent: str) -> Density:
        for name, d in self.init:
            if name == fluent:
                return d
        raise BelcalcError(f"undeclared fluent: {fluent!r}")


@dataclass(frozen=True)
class ActionEvent:
    """One agent-visible history entry: intended arguments plus any reading."""

    action: str
    args: tuple[float, ...] = ()
    reading: Optional[float] = None


History = tuple[ActionEvent, ...]

# A valuation assigns a real to every fluent (and possibly latent symbols).
Valuation = dict


# ---------------------------------------------------------------------------
# Evaluation.
# ---------------------------------------------------------------------------

def eval_expr(e: Expr, v: Valuation) -> float:
    """Evaluate an arithmetic expression under a valuation.

    Deterministic: identical inputs give bit-identical results.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        try:
            return v[e.name]
        except KeyError:
            raise UnboundNameError(e.name) from None
    if isinstance(e, BinOp):
        a = eval_expr(e.left, v)
        b = eval_expr(e.right, v)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        raise BelcalcError(f"unknown operator {e.op!r}")
    raise BelcalcError(f"not an expression: {e!r}")


_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def eval_formula(f: Formula, v: Valuation) -> bool:
    """Boolean satisfaction; equality compares exact reals."""
    if isinstance(f, Lit):
        return f.value
    if isinstance(f, Cmp):
        return _CMP[f.op](eval_expr(f.lhs, v), eval_expr(f.rhs, v))
    if isinstance(f, And):
        return eval_formula(f.left, v) and eval_formula(f.right, v)
    if isinstance(f, Or):
        return eval_formula(f.left, v) or eval_formula(f.right, v)
    if isinstance(f, Not):
        return not eval_formula(f.inner, v)
    raise BelcalcError(f"not a formula: {f!r}")


def expr_names(e: Expr, acc: Optional[set] = None) -> set:
    """All names appearing in an expression."""
    if acc is None:
        acc = set()
    if isinstance(e, Name):
        acc.add(e.name)
    elif isinstance(e, BinOp):
        expr_names(e.left, acc)
        expr_names(e.right, acc)
    return acc


def formula_names(f: Formula, acc: Optional[set] = None) -> set:
    if acc is None:
        acc = set()
    if isinstance(f, Cmp):
        expr_names(f.lhs, acc)
        expr_names(f.rhs, acc)
    elif isinstance(f, (And, Or)):
        formula_names(f.left, acc)
        formula_names(f.right, acc)
    elif isinstance(f, Not):
        formula_names(f.inner, acc)
    return acc


_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def density_pdf(d: Density, point: float, v: Optional[Valuation] = None) -> float:
    """Density (continuous) or mass (discrete) of ``d`` at ``point``.

    Expression parameters are evaluated under ``v``.  A point mass returns 1
    exactly at its value and 0 elsewhere; it is only meaningful on the
    deterministic evaluation path and is never integrated numerically.
    """
    if v is None:
        v = {}
    if isinstance(d, Uniform):
        if d.lo <= point <= d.hi:
            return 1.0 / (d.hi - d.lo)
        return 0.0
    if isinstance(d, Gaussian):
        mu = eval_expr(d.mean, v)
        z = (point - mu) / d.stddev
        return _INV_SQRT_2PI / d.stddev * math.exp(-0.5 * z * z)
    if isinstance(d, DiscreteTable):
        for value, mass in d.entries:
            if point == value:
                return mass
        return 0.0
    if isinstance(d, PointMass):
        return 1.0 if point == eval_expr(d.value, v) else 0.0
    raise BelcalcError(f"not a density: {d!r}")


def density_names(d: Density) -> set:
    """Free names appearing in a density's expression parameters."""
    if isinstance(d, Gaussian):
        return expr_names(d.mean)
    if isinstance(d, PointMass):
        return expr_names(d.value)
    return set()


def eval_expr_interval(e: Expr, boxes: dict) -> tuple[float, float]:
    """Conservative interval evaluation of ``e``.

    ``boxes`` maps each free name to a (lo, hi) interval.  Used to bound the
    range of state-dependent density parameters when truncating supports.
    """
    if isinstance(e, Num):
        return (e.value, e.value)
    if isinstance(e, Name):
        try:
            return boxes[e.name]
        except KeyError:
            raise UnboundNameError(e.name) from None
    if isinstance(e, BinOp):
        alo, ahi = eval_expr_interval(e.left, boxes)
        blo, bhi = eval_expr_interval(e.right, boxes)
        if e.op == "+":
            return (alo + blo, ahi + bhi)
        if e.op == "-":
            return (alo - bhi, ahi - blo)
        if e.op == "*":
            prods = (alo * blo, alo * bhi, ahi * blo, ahi * bhi)
            return (min(prods), max(prods))
        raise BelcalcError(f"unknown operator {e.op!r}")
    raise BelcalcError(f"not an expression: {e!r}")


def density_support(d: Density, boxes: Optional[dict] = None,
                    gaussian_halfwidth: float = 8.0) -> tuple[float, float]:
    """Finite interval outside which the density is negligible or zero.

    Gaussians are truncated at ``gaussian_halfwidth`` standard deviations
    (tail mass < 1e-15 at the default 8).  State-dependent means are bounded
    with interval arithmetic over ``boxes``.
    """
    if isinstance(d, Uniform):
        return (d.lo, d.hi)
    if isinstance(d, Gaussian):
        mlo, mhi = eval_expr_interval(d.mean, boxes or {})
        pad = gaussian_halfwidth * d.stddev
        return (mlo - pad, mhi + pad)
    if isinstance(d, DiscreteTable):
        values = [val for val, _ in d.entries]
        return (min(values), max(values))
    if isinstance(d, PointMass):
        vlo, vhi = eval_expr_interval(d.value, boxes or {})
        return (vlo, vhi)
    raise BelcalcError(f"not a density: {d!r}")
