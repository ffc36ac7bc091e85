"""Shared generators: random theories, histories, and queries.

Everything is driven by a seeded numpy Generator so failures reproduce.
Histories are generated by simulating the theory forward, which keeps the
resulting readings plausible and the total weight comfortably nonzero.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from belcalc.model import (
    ActionDecl,
    ActionEvent,
    And,
    BinOp,
    Cmp,
    DiscreteTable,
    Gaussian,
    Lit,
    Name,
    Not,
    Num,
    Or,
    PointMass,
    Theory,
    Uniform,
)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_linear_expr(rng, names, max_terms=2):
    """c0 + c1*n1 [+ c2*n2]: linear keeps every strategy applicable."""
    e = Num(round(float(rng.uniform(-3, 3)), 3))
    chosen = list(rng.choice(len(names), size=min(max_terms, len(names)), replace=False))
    for idx in chosen:
        coeff = round(float(rng.uniform(-2, 2)), 3)
        if abs(coeff) < 0.1:
            coeff = 1.0
        term = BinOp("*", Num(coeff), Name(names[int(idx)]))
        e = BinOp("+", e, term) if rng.random() < 0.7 else BinOp("-", e, term)
    return e


def random_poly_expr(rng, names, depth=2):
    """Arbitrary +,-,* tree; used where nonlinearity must be exercised."""
    if depth == 0 or rng.random() < 0.35:
        if names and rng.random() < 0.6:
            return Name(str(rng.choice(names)))
        return Num(round(float(rng.uniform(-4, 4)), 3))
    op = str(rng.choice(["+", "-", "*"]))
    return BinOp(op, random_poly_expr(rng, names, depth - 1),
                 random_poly_expr(rng, names, depth - 1))


def random_formula(rng, names, depth=2, expr_fn=random_linear_expr):
    if depth == 0 or rng.random() < 0.4:
        if rng.random() < 0.06:
            return Lit(bool(rng.random() < 0.5))
        op = str(rng.choice(["<", "<=", ">=", ">"]))
        return Cmp(op, expr_fn(rng, names), Num(round(float(rng.uniform(-8, 14)), 3)))
    pick = rng.random()
    if pick < 0.4:
        return And(random_formula(rng, names, depth - 1, expr_fn),
                   random_formula(rng, names, depth - 1, expr_fn))
    if pick < 0.8:
        return Or(random_formula(rng, names, depth - 1, expr_fn),
                  random_formula(rng, names, depth - 1, expr_fn))
    return Not(random_formula(rng, names, depth - 1, expr_fn))


def random_init(rng):
    kind = rng.random()
    if kind < 0.5:
        lo = round(float(rng.uniform(-4, 6)), 2)
        return Uniform(lo, lo + round(float(rng.uniform(2, 8)), 2))
    if kind < 0.8:
        return Gaussian(Num(round(float(rng.uniform(-2, 8)), 2)),
                        round(float(rng.uniform(0.5, 2.0)), 2))
    values = sorted(set(round(float(v), 1) for v in rng.uniform(-3, 9, 3)))
    masses = rng.uniform(0.2, 1.0, len(values))
    masses = masses / masses.sum()
    # round but keep the sum exactly 1 for the table invariant
    masses = [float(m) for m in masses]
    masses[-1] = 1.0 - math.fsum(masses[:-1])
    return DiscreteTable(tuple((v, m) for v, m in zip(values, masses)))


def random_theory(rng, n_fluents=None, allow_noisy=True) -> Theory:
    n_fluents = n_fluents or int(rng.integers(1, 3))
    fluents = tuple(f"f{i}" for i in range(n_fluents))
    init = tuple((f, random_init(rng)) for f in fluents)

    actions = []
    n_actions = int(rng.integers(1, 4))
    for i in range(n_actions):
        name = f"a{i}"
        if rng.random() < 0.45:
            # sensing action over a random fluent
            target = str(rng.choice(fluents))
            sd = round(float(rng.uniform(0.5, 1.5)), 2)
            actions.append(ActionDecl(
                name=name,
                params=(),
                poss=Lit(True),
                sensing_reading="z",
                sensing_likelihood=Gaussian(Name(target), sd),
            ))
            continue
        params = ("x",) if rng.random() < 0.8 else ()
        latent = None
        noise = None
        if allow_noisy and rng.random() < 0.55:
            latent = "y"
            if rng.random() < 0.75:
                mean = Name("x") if params else Num(round(float(rng.uniform(-1, 2)), 2))
                noise = Gaussian(mean, round(float(rng.uniform(0.4, 1.2)), 2))
            else:
                noise = DiscreteTable(((-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)))
        elif params and rng.random() < 0.3:
            latent = "y"
            noise = PointMass(Name("x"))
        effect_names = list(fluents) + list(params) + ([latent] if latent else [])
        effects = []
        for f in fluents:
            if rng.random() < 0.75:
                shift = Name(latent) if latent else (
                    Name("x") if params else Num(round(float(rng.uniform(-2, 2)), 2)))
                sign = "-" if rng.random() < 0.6 else "+"
                rhs = BinOp(sign, Name(f), shift)
                if rng.random() < 0.25:
                    rhs = BinOp("+", rhs, Num(round(float(rng.uniform(-1, 1)), 2)))
                effects.append((f, rhs))
        if not effects:
            effects.append((fluents[0], BinOp("+", Name(fluents[0]), Num(1.0))))
        actions.append(ActionDecl(
            name=name,
            params=params,
            poss=Lit(True),
            effects=tuple(effects),
            effector_latent=latent,
            effector_noise=noise,
        ))
    return Theory(f"rand{int(rng.integers(0, 10**6))}", fluents, init, tuple(actions))


def sample_from_density(rng, d):
    if isinstance(d, Uniform):
        return float(rng.uniform(d.lo, d.hi))
    if isinstance(d, Gaussian):
        assert isinstance(d.mean, Num)
        return float(rng.normal(d.mean.value, d.stddev))
    if isinstance(d, DiscreteTable):
        values = [v for v, _ in d.entries]
        masses = np.array([m for _, m in d.entries])
        return float(values[int(rng.choice(len(values), p=masses / masses.sum()))])
    if isinstance(d, PointMass):
        assert isinstance(d.value, Num)
        return float(d.value.value)
    raise AssertionError(d)


def simulate_history(rng, theory: Theory, length: int, max_noisy: int = 3):
    """Simulate the theory to get a plausible (nonzero-weight) history."""
    from belcalc.model import eval_expr, eval_formula
    from belcalc.regression import progress_valuation
    from belcalc.regression import GroundAction

    state = {f: sample_from_density(rng, d) for f, d in theory.init}
    events = []
    noisy_used = 0
    attempts = 0
    while len(events) < length and attempts < 20 * length:
        attempts += 1
        decl = theory.actions[int(rng.integers(0, len(theory.actions)))]
        if decl.is_noisy and noisy_used >= max_noisy:
            continue
        args = tuple(round(float(rng.uniform(-1.5, 2.5)), 2) for _ in decl.params)
        env = dict(state)
        env.update({p: a for p, a in zip(decl.params, args)})
        if not eval_formula(decl.poss, env):
            continue
        if decl.is_sensing:
            mean = eval_expr(decl.sensing_likelihood.mean, env)
            reading = round(float(rng.normal(mean, decl.sensing_likelihood.stddev)), 3)
            events.append(ActionEvent(decl.name, args, reading))
            continue
        latent = None
        if decl.effector_latent is not None:
            if isinstance(decl.effector_noise, PointMass):
                latent = eval_expr(decl.effector_noise.value, env)
            elif isinstance(decl.effector_noise, Gaussian):
                latent = float(rng.normal(eval_expr(decl.effector_noise.mean, env),
                                          decl.effector_noise.stddev))
                noisy_used += 1
            else:
                latent = sample_from_density(rng, decl.effector_noise)
                noisy_used += 1
        ga = GroundAction(decl.name, args, latent, None)
        state = progress_valuation(state, ga, theory)
        events.append(ActionEvent(decl.name, args, None))
    return tuple(events)


@pytest.fixture
def robot1d():
    from belcalc.dsl import ROBOT1D_SOURCE, parse_theory

    result = parse_theory(ROBOT1D_SOURCE)
    assert result.ok, result.diagnostics
    return result.theory
