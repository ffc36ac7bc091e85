"""Adaptive Simpson quadrature for pairs of integrands sharing nodes.

The engine integrates the weight function and the weight-times-indicator
numerator on the same nodes, so the integrator works on 2-vectors and
refines an interval when either component misses the tolerance.  Known
discontinuity locations (indicator steps, precondition boundaries) are
passed in as split points so each Simpson panel sees a piecewise-smooth
integrand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

__all__ = ["QuadratureConfig", "EvalBudget", "integrate_pair"]


@dataclass(frozen=True)
class QuadratureConfig:
    """Engine-wide numerical policy.

    abs_tol: absolute tolerance per one-dimensional integral.
    max_evals: integrand-evaluation budget; when exhausted the current
        estimate is returned and the refinement gap reported as error.
    d_max: largest dimension handled by tensor-product quadrature.
    gamma_min: total weights below this raise the impossible-history error.
    gaussian_halfwidth: support truncation for gaussians, in stddevs.
    max_depth: recursion cap per axis (safety net for pathological cases).
    """

    abs_tol: float = 1e-8
    max_evals: int = 2 ** 20
    d_max: int = 4
    gamma_min: float = 1e-300
    gaussian_halfwidth: float = 8.0
    max_depth: int = 40


class EvalBudget:
    """Shared mutable counter for integrand evaluations."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1) -> bool:
        """Consume ``n`` evaluations; False once the budget is exhausted."""
        self.used += n
        return self.used <= self.limit

    @property
    def exhausted(self) -> bool:
        return self.used > self.limit


def _simpson(fa, fm, fb, h6):
    return (
        (fa[0] + 4.0 * fm[0] + fb[0]) * h6,
        (fa[1] + 4.0 * fm[1] + fb[1]) * h6,
    )


def integrate_pair(
    f: Callable[[float], tuple],
    lo: float,
    hi: float,
    *,
    splits: Sequence[float] = (),
    abs_tol: float = 1e-8,
    budget: EvalBudget,
    max_depth: int = 40,
) -> tuple:
    """Integrate a 2-vector function over [lo, hi].

    Returns ``((i0, i1), (e0, e1))``: the two integrals and the accumulated
    refinement-gap error estimates.  ``splits`` are interior points where the
    integrand may jump; panels never straddle them.
    """
    if hi <= lo:
        return (0.0, 0.0), (0.0, 0.0)

    cuts = [lo]
    for s in sorted(set(splits)):
        if lo < s < hi and s - cuts[-1] > 1e-13 * max(1.0, abs(s)):
            cuts.append(s)
    cuts.append(hi)

    total0 = total1 = 0.0
    err0 = err1 = 0.0
    npanels = len(cuts) - 1
    panel_tol = abs_tol / npanels

    for a, b in zip(cuts, cuts[1:]):
        budget.spend(3)
        fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
        whole = _simpson(fa, fm, fb, (b - a) / 6.0)
        (v0, v1), (g0, g1) = _adapt(f, a, b, fa, fm, fb, whole, panel_tol,
                                    budget, max_depth)
        total0 += v0
        total1 += v1
        err0 += g0
        err1 += g1
    return (total0, total1), (err0, err1)


def _adapt(f, a, b, fa, fm, fb, whole, tol, budget, depth):
    m = 0.5 * (a + b)
    if depth <= 0 or budget.exhausted or (b - a) < 1e-14 * max(1.0, abs(m)):
        # Cannot refine further; count the panel itself as the uncertainty.
        return whole, (abs(whole[0]), abs(whole[1]))

    budget.spend(2)
    flm = f(0.5 * (a + m))
    frm = f(0.5 * (m + b))
    left = _simpson(fa, flm, fm, (m - a) / 6.0)
    right = _simpson(fm, frm, fb, (b - m) / 6.0)
    d0 = left[0] + right[0] - whole[0]
    d1 = left[1] + right[1] - whole[1]
    # Richardson: Simpson refinement error is ~1/15 of the split difference.
    if abs(d0) <= 15.0 * tol and abs(d1) <= 15.0 * tol:
        return (left[0] + right[0] + d0 / 15.0,
                left[1] + right[1] + d1 / 15.0), (abs(d0) / 15.0, abs(d1) / 15.0)
    if budget.exhausted:
        return (left[0] + right[0], left[1] + right[1]), (abs(d0), abs(d1))
    lv, le = _adapt(f, a, m, fa, flm, fm, left, tol / 2.0, budget, depth - 1)
    rv, re = _adapt(f, m, b, fm, frm, fb, right, tol / 2.0, budget, depth - 1)
    return (lv[0] + rv[0], lv[1] + rv[1]), (le[0] + re[0], le[1] + re[1])
