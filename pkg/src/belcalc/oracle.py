"""Independent cross-checks for the belief engine.

Three routes re-derive the same posterior beliefs from first principles:
a sequential Bayes filter on a histogram grid, a bootstrap particle filter
with systematic resampling, and a closed form for the one-dimensional
uniform-prior-plus-Gaussian-sensing case built on a locally implemented
erf.  None of them share numerical code with the engine's quadrature path;
they exist for tests and the ``oracle-compare`` CLI verb.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    BelcalcError,
    BinOp,
    Cmp,
    And,
    Or,
    Not,
    Lit,
    DiscreteTable,
    Expr,
    Formula,
    Gaussian,
    History,
    Name,
    Num,
    PointMass,
    Theory,
    Uniform,
)
from .engine import ImpossibleHistoryError
from .regression import ground_history

__all__ = [
    "GridBelief",
    "ParticleCloud",
    "grid_filter",
    "grid_belief",
    "grid_marginal",
    "particle_filter",
    "particle_belief",
    "erf_local",
    "normal_cdf",
    "truncated_gaussian_cdf",
]


# ---------------------------------------------------------------------------
# Vectorized evaluation (deliberately separate from the engine's).
# ---------------------------------------------------------------------------

def _vec_expr(e: Expr, env: dict):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Name):
        try:
            return env[e.name]
        except KeyError:
            raise BelcalcError(f"unbound name {e.name!r}") from None
    if isinstance(e, BinOp):
        a = _vec_expr(e.left, env)
        b = _vec_expr(e.right, env)
        if e.op == "+":
            return np.add(a, b)
        if e.op == "-":
            return np.subtract(a, b)
        return np.multiply(a, b)
    raise BelcalcError(f"not an expression: {e!r}")


def _vec_formula(f: Formula, env: dict):
    if isinstance(f, Lit):
        return f.value
    if isinstance(f, Cmp):
        ops = {"<": np.less, "<=": np.less_equal, "=": np.equal,
               ">=": np.greater_equal, ">": np.greater}
        return ops[f.op](_vec_expr(f.lhs, env), _vec_expr(f.rhs, env))
    if isinstance(f, And):
        return np.logical_and(_vec_formula(f.left, env), _vec_formula(f.right, env))
    if isinstance(f, Or):
        return np.logical_or(_vec_formula(f.left, env), _vec_formula(f.right, env))
    if isinstance(f, Not):
        return np.logical_not(_vec_formula(f.inner, env))
    raise BelcalcError(f"not a formula: {f!r}")


def _vec_pdf(d, points, env: dict):
    if isinstance(d, Uniform):
        inside = (points >= d.lo) & (points <= d.hi)
        return np.where(inside, 1.0 / (d.hi - d.lo), 0.0)
    if isinstance(d, Gaussian):
        mu = _vec_expr(d.mean, env)
        z = (np.asarray(points, dtype=float) - mu) / d.stddev
        return np.exp(-0.5 * z * z) / (d.stddev * math.sqrt(2.0 * math.pi))
    if isinstance(d, DiscreteTable):
        out = np.zeros_like(np.asarray(points, dtype=float))
        for v, m in d.entries:
            out = np.where(np.asarray(points) == v, m, out)
        return out
    if isinstance(d, PointMass):
        value = _vec_expr(d.value, env)
        return np.where(np.asarray(points) == value, 1.0, 0.0)
    raise BelcalcError(f"not a density: {d!r}")


def _interval(e: Expr, boxes: dict) -> tuple:
    if isinstance(e, Num):
        return (e.value, e.value)
    if isinstance(e, Name):
        return boxes[e.name]
    if isinstance(e, BinOp):
        alo, ahi = _interval(e.left, boxes)
        blo, bhi = _interval(e.right, boxes)
        if e.op == "+":
            return (alo + blo, ahi + bhi)
        if e.op == "-":
            return (alo - bhi, ahi - blo)
        ps = (alo * blo, alo * bhi, ahi * blo, ahi * bhi)
        return (min(ps), max(ps))
    raise BelcalcError(f"not an expression: {e!r}")


_HALFWIDTH = 8.0


def _support(d, boxes: dict) -> tuple:
    if isinstance(d, Uniform):
        return (d.lo, d.hi)
    if isinstance(d, Gaussian):
        lo, hi = _interval(d.mean, boxes)
        return (lo - _HALFWIDTH * d.stddev, hi + _HALFWIDTH * d.stddev)
    if isinstance(d, DiscreteTable):
        vals = [v for v, _ in d.entries]
        return (min(vals), max(vals))
    if isinstance(d, PointMass):
        return _interval(d.value, boxes)
    raise BelcalcError(f"not a density: {d!r}")


# ---------------------------------------------------------------------------
# Sequential Bayes filter on a histogram grid.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridBelief:
    """Joint cell masses over per-fluent grids; masses sum to 1."""

    fluents: tuple
    grids: tuple          # tuple of 1-D ndarrays (cell centers)
    masses: np.ndarray    # shape = tuple(len(g) for g in grids)
    log_gamma: float      # accumulated log normalizer (diagnostic)

    def env(self) -> dict:
        mesh = np.meshgrid(*self.grids, indexing="ij")
        return {f: m for f, m in zip(self.fluents, mesh)}


def _hull_boxes(t: Theory, ground) -> dict:
    boxes = {f: _support(d, {}) for f, d in t.init}
    hull = dict(boxes)
    for ga in ground:
        decl = t.action(ga.action)
        if decl.is_sensing or not decl.effects:
            continue
        env = dict(boxes)
        for p, v in zip(decl.params, ga.args):
            env[p] = (float(v), float(v))
        if decl.effector_latent is not None:
            if isinstance(decl.effector_noise, PointMass):
                env[decl.effector_latent] = _interval(decl.effector_noise.value, env)
            else:
                env[decl.effector_latent] = _support(decl.effector_noise, env)
        new_boxes = dict(boxes)
        for fluent, rhs in decl.effects:
            new_boxes[fluent] = _interval(rhs, env)
        boxes = new_boxes
        for f in hull:
            hull[f] = (min(hull[f][0], boxes[f][0]), max(hull[f][1], boxes[f][1]))
    return hull


def grid_filter(t: Theory, hist: History, cells: int = 4096) -> GridBelief:
    """Discretize, then predict/update through the history. Deterministic."""
    if cells < 2:
        raise BelcalcError("grid filter needs at least 2 cells")
    ground = ground_history(hist, t, "symbolic")
    hull = _hull_boxes(t, ground)

    n_cont = sum(1 for _, d in t.init if not isinstance(d, (DiscreteTable, PointMass)))
    per_axis = cells if n_cont <= 1 else max(2, min(cells, 192))

    fluents = []
    grids = []
    widths = []
    for f, d in t.init:
        fluents.append(f)
        if isinstance(d, DiscreteTable):
            grids.append(np.array(sorted(v for v, _ in d.entries)))
            widths.append(0.0)
        elif isinstance(d, PointMass):
            grids.append(np.array([float(_vec_expr(d.value, {}))]))
            widths.append(0.0)
        else:
            lo, hi = hull[f]
            edges = np.linspace(lo, hi, per_axis + 1)
            grids.append(0.5 * (edges[:-1] + edges[1:]))
            widths.append(edges[1] - edges[0])

    mesh = np.meshgrid(*grids, indexing="ij")
    env = {f: m for f, m in zip(fluents, mesh)}
    masses = np.ones(mesh[0].shape if mesh else ())
    for f, d in t.init:
        masses = masses * _vec_pdf(d, env[f], env)
    total = masses.sum()
    if not total > 0.0:
        raise ImpossibleHistoryError("prior discretizes to zero mass")
    masses = masses / total
    log_gamma = 0.0

    axis_of = {f: i for i, f in enumerate(fluents)}

    for ga in ground:
        decl = t.action(ga.action)
        env = {f: m for f, m in zip(fluents, np.meshgrid(*grids, indexing="ij"))}
        for p, v in zip(decl.params, ga.args):
            env[p] = float(v)
        poss = _vec_formula(decl.poss, env)
        masses = masses * poss

        if decl.is_sensing:
            env2 = dict(env)
            env2[decl.sensing_reading] = float(ga.reading)
            masses = masses * _vec_pdf(decl.sensing_likelihood, float(ga.reading), env2)
        elif decl.effects:
            if decl.effector_latent is None:
                outcomes = [(None, 1.0)]
            elif isinstance(decl.effector_noise, PointMass):
                outcomes = [("pm", 1.0)]
            elif isinstance(decl.effector_noise, DiscreteTable):
                outcomes = [(float(v), float(m)) for v, m in decl.effector_noise.entries]
            else:
                boxes = {f: (float(g.min()), float(g.max())) for f, g in zip(fluents, grids)}
                for p, v in zip(decl.params, ga.args):
                    boxes[p] = (float(v), float(v))
                lo, hi = _support(decl.effector_noise, boxes)
                k = 257
                ys = np.linspace(lo, hi, k)
                step = ys[1] - ys[0]
                outcomes = [("cont", ys, step)]

            new_masses = np.zeros_like(masses)
            flat = masses.ravel()

            def push(env_lat, frac):
                targets = {}
                for f in fluents:
                    rhs = decl.effect_for(f)
                    if rhs is None:
                        targets[f] = env[f]
                    else:
                        targets[f] = np.broadcast_to(
                            np.asarray(_vec_expr(rhs, env_lat), dtype=float),
                            masses.shape)
                _scatter(new_masses, grids, widths, targets, fluents,
                         flat * np.asarray(frac).ravel() if np.ndim(frac) else flat * frac)

            if outcomes[0] == ("pm", 1.0):
                env_lat = dict(env)
                env_lat[decl.effector_latent] = _vec_expr(decl.effector_noise.value, env)
                push(env_lat, 1.0)
            elif outcomes[0] is not None and isinstance(outcomes[0], tuple) \
                    and outcomes[0][0] == "cont":
                _, ys, step = outcomes[0]
                for y in ys:
                    env_lat = dict(env)
                    env_lat[decl.effector_latent] = float(y)
                    frac = _vec_pdf(decl.effector_noise, float(y), env) * step
                    push(env_lat, frac)
            else:
                for node in outcomes:
                    if node == (None, 1.0):
                        push(env, 1.0)
                    else:
                        y, m = node
                        env_lat = dict(env)
                        env_lat[decl.effector_latent] = float(y)
                        push(env_lat, m)
            masses = new_masses

        total = masses.sum()
        if not total > 0.0:
            raise ImpossibleHistoryError()
        masses = masses / total
        log_gamma += math.log(total)

    return GridBelief(tuple(fluents), tuple(grids), masses, log_gamma)


def _scatter(target, grids, widths, values, fluents, mass_flat):
    """Linear-interpolation scatter of moved probability mass onto the grid."""
    shape = target.shape
    weights = [np.ones_like(mass_flat)]
    indices = [np.zeros(mass_flat.size, dtype=np.int64)]
    for axis, f in enumerate(fluents):
        centers = grids[axis]
        vals = np.asarray(values[f], dtype=float).ravel()
        stride = int(np.prod(shape[axis + 1:]))
        if len(centers) == 1:
            continue
        step = centers[1] - centers[0]
        pos = (vals - centers[0]) / step
        left = np.floor(pos).astype(np.int64)
        frac = pos - left
        nw, ni = [], []
        n = len(centers)
        for w, idx in zip(weights, indices):
            wl = np.where((left >= 0) & (left <= n - 1), (1.0 - frac), 0.0)
            wr = np.where((left + 1 >= 0) & (left + 1 <= n - 1), frac, 0.0)
            nw.append(w * wl)
            ni.append(idx + np.clip(left, 0, n - 1) * stride)
            nw.append(w * wr)
            ni.append(idx + np.clip(left + 1, 0, n - 1) * stride)
        weights, indices = nw, ni
    out = target.ravel()
    for w, idx in zip(weights, indices):
        np.add.at(out, idx, mass_flat * w)


def grid_belief(gb: GridBelief, query: Formula) -> float:
    ind = _vec_formula(query, gb.env())
    return float((gb.masses * ind).sum())


def grid_marginal(gb: GridBelief, fluent: str) -> tuple:
    """(centers, density) for one fluent, normalized to integrate to 1."""
    axis = gb.fluents.index(fluent)
    other = tuple(i for i in range(gb.masses.ndim) if i != axis)
    marg = gb.masses.sum(axis=other) if other else gb.masses
    centers = gb.grids[axis]
    if len(centers) < 2:
        raise BelcalcError("fluent has no continuous grid")
    width = centers[1] - centers[0]
    return centers, marg / width


# ---------------------------------------------------------------------------
# Bootstrap particle filter with systematic resampling.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParticleCloud:
    """Weighted sample of final states; fully reproducible from the seed.

    RNG: numpy PCG64 behind ``np.random.Generator``; the algorithm is fixed
    and seeded, so identical inputs give bit-identical clouds everywhere.
    """

    fluents: tuple
    states: dict           # fluent -> ndarray of final values
    weights: np.ndarray    # normalized, sum 1
    seed: int
    n_resamplings: int


def _sample(d, n: int, rng: np.random.Generator, env: dict):
    if isinstance(d, Uniform):
        return rng.uniform(d.lo, d.hi, n)
    if isinstance(d, Gaussian):
        mu = np.broadcast_to(np.asarray(_vec_expr(d.mean, env), dtype=float), (n,))
        return rng.normal(mu, d.stddev)
    if isinstance(d, DiscreteTable):
        values = np.array([v for v, _ in d.entries])
        masses = np.array([m for _, m in d.entries])
        idx = rng.choice(len(values), size=n, p=masses / masses.sum())
        return values[idx]
    if isinstance(d, PointMass):
        return np.broadcast_to(
            np.asarray(_vec_expr(d.value, env), dtype=float), (n,)).copy()
    raise BelcalcError(f"not a density: {d!r}")


def _systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions)


def particle_filter(t: Theory, hist: History, n: int = 10000,
                    seed: int = 0) -> ParticleCloud:
    """Sample init, push effector noise forward, reweight on readings.

    Resamples systematically whenever the effective sample size drops below
    n/2.  Raises the impossible-history error if every weight collapses.
    """
    if n < 1:
        raise BelcalcError("particle filter needs at least one particle")
    rng = np.random.Generator(np.random.PCG64(seed))
    ground = ground_history(hist, t, "symbolic")

    states = {}
    for f, d in t.init:
        states[f] = _sample(d, n, rng, states)
    weights = np.full(n, 1.0 / n)
    n_resamplings = 0

    for ga in ground:
        decl = t.action(ga.action)
        env = dict(states)
        for p, v in zip(decl.params, ga.args):
            env[p] = float(v)

        poss = _vec_formula(decl.poss, env)
        weights = weights * poss

        if decl.is_sensing:
            env2 = dict(env)
            env2[decl.sensing_reading] = float(ga.reading)
            weights = weights * _vec_pdf(
                decl.sensing_likelihood, float(ga.reading), env2)
        elif decl.effects:
            if decl.effector_latent is not None:
                env[decl.effector_latent] = _sample(decl.effector_noise, n, rng, env)
            new_states = dict(states)
            for fluent, rhs in decl.effects:
                new_states[fluent] = np.broadcast_to(
                    np.asarray(_vec_expr(rhs, env), dtype=float), (n,)).copy()
            states = new_states

        total = weights.sum()
        if not total > 0.0:
            raise ImpossibleHistoryError()
        weights = weights / total
        ess = 1.0 / float((weights ** 2).sum())
        if ess < n / 2.0:
            idx = _systematic_resample(weights, rng)
            states = {f: v[idx] for f, v in states.items()}
            weights = np.full(n, 1.0 / n)
            n_resamplings += 1

    return ParticleCloud(tuple(t.fluents), states, weights, seed, n_resamplings)


def particle_belief(cloud: ParticleCloud, query: Formula) -> float:
    ind = _vec_formula(query, dict(cloud.states))
    return float((cloud.weights * ind).sum())


# ---------------------------------------------------------------------------
# Closed form: uniform prior + a single Gaussian observation.
# ---------------------------------------------------------------------------

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def erf_local(x: float) -> float:
    """erf via Maclaurin series (|x| <= 3) or a Lentz continued fraction
    for erfc (|x| > 3); absolute error below 1e-13 everywhere."""
    if x < 0:
        return -erf_local(-x)
    if x == 0.0:
        return 0.0
    if x <= 3.0:
        # erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
        term = x
        total = x
        n = 0
        x2 = x * x
        while True:
            n += 1
            term *= -x2 / n
            delta = term / (2 * n + 1)
            total += delta
            if abs(delta) < 1e-18 * max(1.0, abs(total)):
                break
            if n > 200:
                break
        return _TWO_OVER_SQRT_PI * total
    # erfc(x)*sqrt(pi)*exp(x^2) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + ...)))))
    # i.e. a continued fraction with b_n = x and a_1 = 1, a_n = (n-1)/2;
    # evaluated with the modified Lentz algorithm.
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    for n in range(1, 400):
        a = 1.0 if n == 1 else (n - 1) / 2.0
        d = x + a * d
        if d == 0.0:
            d = tiny
        c = x + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    erfc = math.exp(-x * x) / math.sqrt(math.pi) * f
    return 1.0 - erfc


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + erf_local(x / math.sqrt(2.0)))


def truncated_gaussian_cdf(lo: float, hi: float, mean: float, stddev: float,
                           at: float) -> float:
    """CDF at ``at`` of a Gaussian(mean, stddev) truncated to [lo, hi]."""
    if not lo < hi:
        raise BelcalcError("truncation requires lo < hi")
    if not stddev > 0:
        raise BelcalcError("stddev must be positive")
    if not lo <= at <= hi:
        raise BelcalcError("evaluation point must lie inside [lo, hi]")
    z = lambda t: (t - mean) / stddev
    denom = normal_cdf(z(hi)) - normal_cdf(z(lo))
    if denom < 1e-300:
        raise ImpossibleHistoryError("truncated mass is numerically zero")
    return (normal_cdf(z(at)) - normal_cdf(z(lo))) / denom
