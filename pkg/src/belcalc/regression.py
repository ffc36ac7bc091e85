"""Rewriting of formulas through successor-state effects, and its forward dual.

``regress_step`` rewrites a formula about the post-action state into one about
the pre-action state by substituting each effect right-hand side for its fluent.
``progress_valuation`` applies the same effects forward to a concrete state.
The two are exact duals:

    eval_formula(regress_step(f, a), v) == eval_formula(f, progress_valuation(v, a))

bit-for-bit, because both perform the identical arithmetic operations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .model import (
    ActionDecl,
    And,
    ArityError,
    BelcalcError,
    BinOp,
    Cmp,
    Expr,
    Formula,
    History,
    Lit,
    Name,
    Not,
    Num,
    Or,
    PointMass,
    Theory,
    Valuation,
    eval_expr,
)

__all__ = [
    "GroundAction",
    "ground_history",
    "latent_symbol",
    "regress_step",
    "regress_history",
    "regress_expr",
    "regress_expr_history",
    "progress_valuation",
    "progress_history",
]


@dataclass(frozen=True)
class GroundAction:
    """An action instance as the engine sees it.

    ``latent`` is the actual effector outcome: a float when known, a symbol
    name (str) when it is an integration variable, or None for actions
    without effector noise.  ``reading`` is the sensed value, if any.
    """

    action: str
    args: tuple[float, ...] = ()
    latent: Union[float, str, None] = None
    reading: Optional[float] = None


def latent_symbol(latent_name: str, index: int) -> str:
    """Fresh symbol for the index-th noisy event; '#' keeps it out of the DSL
    namespace so it can never collide with a declared fluent."""
    return f"{latent_name}#{index}"


def ground_history(hist: History, t: Theory,
                   latents: Union[str, Sequence[float]] = "symbolic") -> list:
    """Attach latent outcomes to a history's noisy physical actions.

    With ``latents="symbolic"`` each noisy action gets a fresh symbol; with a
    sequence, values are consumed in history order (length must match).
    """
    out = []
    k = 0
    for ev in hist:
        decl = t.action(ev.action)
        if len(ev.args) != len(decl.params):
            raise ArityError(
                f"action {ev.action!r} takes {len(decl.params)} args, got {len(ev.args)}")
        latent: Union[float, str, None] = None
        if decl.is_noisy:
            if latents == "symbolic":
                latent = latent_symbol(decl.effector_latent, k + 1)
            else:
                if k >= len(latents):
                    raise ArityError("not enough latent outcomes for history")
                latent = float(latents[k])
            k += 1
        out.append(GroundAction(ev.action, ev.args, latent, ev.reading))
    if latents != "symbolic" and k != len(latents):
        raise ArityError(f"history has {k} noisy actions, got {len(latents)} latents")
    return out


# ---------------------------------------------------------------------------
# Substitution with constant folding of literal-only subexpressions.
# ---------------------------------------------------------------------------

def _fold(op: str, left: Expr, right: Expr) -> Expr:
    if isinstance(left, Num) and isinstance(right, Num):
        if op == "+":
            return Num(left.value + right.value)
        if op == "-":
            return Num(left.value - right.value)
        if op == "*":
            return Num(left.value * right.value)
    return BinOp(op, left, right)


def subst_expr(e: Expr, mapping: dict) -> Expr:
    """Replace names per ``mapping`` (name -> Expr); fold literal results."""
    if isinstance(e, Num):
        return e
    if isinstance(e, Name):
        return mapping.get(e.name, e)
    if isinstance(e, BinOp):
        left = subst_expr(e.left, mapping)
        right = subst_expr(e.right, mapping)
        if left is e.left and right is e.right:
            return e
        return _fold(e.op, left, right)
    raise BelcalcError(f"not an expression: {e!r}")


def subst_formula(f: Formula, mapping: dict) -> Formula:
    if isinstance(f, Lit):
        return f
    if isinstance(f, Cmp):
        lhs = subst_expr(f.lhs, mapping)
        rhs = subst_expr(f.rhs, mapping)
        if lhs is f.lhs and rhs is f.rhs:
            return f
        return Cmp(f.op, lhs, rhs)
    if isinstance(f, And):
        return And(subst_formula(f.left, mapping), subst_formula(f.right, mapping))
    if isinstance(f, Or):
        return Or(subst_formula(f.left, mapping), subst_formula(f.right, mapping))
    if isinstance(f, Not):
        return Not(subst_formula(f.inner, mapping))
    raise BelcalcError(f"not a formula: {f!r}")


def _effect_substitution(a: GroundAction, decl: ActionDecl) -> dict:
    """fluent -> its effect RHS with params and the latent substituted."""
    env: dict = {}
    for p, v in zip(decl.params, a.args):
        env[p] = Num(float(v))
    if decl.effector_latent is not None:
        if isinstance(decl.effector_noise, PointMass):
            env[decl.effector_latent] = subst_expr(decl.effector_noise.value, env)
        elif isinstance(a.latent, str):
            env[decl.effector_latent] = Name(a.latent)
        elif a.latent is not None:
            env[decl.effector_latent] = Num(float(a.latent))
        else:
            raise BelcalcError(
                f"noisy action {a.action!r} needs a latent outcome or symbol")
    return {fluent: subst_expr(rhs, env) for fluent, rhs in decl.effects}


def regress_step(f: Formula, a: GroundAction, t: Theory) -> Formula:
    """One regression step: rewrite ``f`` to refer to pre-action fluent values.

    Sensing actions have no physical effect and leave the formula unchanged.
    """
    decl = t.action(a.action)
    if decl.is_sensing or not decl.effects:
        return f
    return subst_formula(f, _effect_substitution(a, decl))


def regress_history(f: Formula, hist: Sequence[GroundAction], t: Theory) -> Formula:
    """Iterated regression, last action first, down to the initial situation."""
    for a in reversed(hist):
        f = regress_step(f, a, t)
    return f


def regress_expr(e: Expr, a: GroundAction, t: Theory) -> Expr:
    decl = t.action(a.action)
    if decl.is_sensing or not decl.effects:
        return e
    return subst_expr(e, _effect_substitution(a, decl))


def regress_expr_history(e: Expr, hist: Sequence[GroundAction], t: Theory) -> Expr:
    for a in reversed(hist):
        e = regress_expr(e, a, t)
    return e


# ---------------------------------------------------------------------------
# Forward reading of the same effects (used by the oracles and the engine's
# weight computation).
# ---------------------------------------------------------------------------

def progress_valuation(v: Valuation, a: GroundAction, t: Theory) -> Valuation:
    """Apply one ground action's effects to a concrete state."""
    decl = t.action(a.action)
    if decl.is_sensing or not decl.effects:
        return dict(v)
    env = dict(v)
    for p, value in zip(decl.params, a.args):
        env[p] = float(value)
    if decl.effector_latent is not None:
        if isinstance(decl.effector_noise, PointMass):
            env[decl.effector_latent] = eval_expr(decl.effector_noise.value, env)
        elif isinstance(a.latent, (int, float)):
            env[decl.effector_latent] = float(a.latent)
        else:
            raise BelcalcError(
                f"cannot progress through {a.action!r} without a concrete outcome")
    out = dict(v)
    for fluent, rhs in decl.effects:
        out[fluent] = eval_expr(rhs, env)
    return out


def progress_history(v: Valuation, hist: Sequence[GroundAction], t: Theory) -> Valuation:
    for a in hist:
        v = progress_valuation(v, a, t)
    return v
