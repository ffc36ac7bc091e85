import math

import numpy as np
import pytest

from conftest import random_theory, rng_for, simulate_history

from belcalc.dsl import parse_history, parse_query, parse_theory
from belcalc.engine import (
    CapacityError,
    ImpossibleHistoryError,
    bel,
    build_problem,
    density_grid_csv,
    posterior_density,
    weight,
)
from belcalc.model import (
    ActionEvent,
    Cmp,
    Lit,
    Name,
    Num,
    Not,
    density_pdf,
    Gaussian,
    Uniform,
)
from belcalc.oracle import truncated_gaussian_cdf
from belcalc.quadrature import QuadratureConfig
from belcalc.regression import GroundAction, regress_step

GAUSS_PEAK = 0.3989422804014327  # (2*pi)^(-1/2), independently verified


class TestWeight:
    def test_empty_history_is_init_product(self, robot1d):
        assert weight({"h": 7.0}, [], (), robot1d) == pytest.approx(0.1)

    def test_sensing_multiplies_likelihood(self, robot1d):
        hist = (ActionEvent("sonar", (), 5.0),)
        got = weight({"h": 5.0}, [], hist, robot1d)
        assert got == pytest.approx(0.1 * GAUSS_PEAK, rel=1e-12)

    def test_poss_failure_zeroes(self, robot1d):
        hist = (ActionEvent("sonar", (), 5.0),)
        assert weight({"h": -1.0}, [], hist, robot1d) == 0.0

    def test_out_of_support_prior_zeroes(self, robot1d):
        assert weight({"h": 1.0}, [], (), robot1d) == 0.0

    def test_noisy_action_consumes_latent(self, robot1d):
        hist = (ActionEvent("fwd", (2.0,)),)
        got = weight({"h": 7.0}, [2.5], hist, robot1d)
        expected = 0.1 * density_pdf(Gaussian(Num(2.0), 1.0), 2.5)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_arity_mismatch(self, robot1d):
        from belcalc.model import ArityError

        with pytest.raises(ArityError):
            weight({"h": 7.0}, [1.0, 2.0], (ActionEvent("fwd", (2.0,)),), robot1d)


class TestBelPrior:
    def test_uniform_prior_interval(self, robot1d):
        r = bel(robot1d, (), parse_query("h <= 7", robot1d))
        assert r.belief == pytest.approx(0.5, abs=1e-9)
        assert r.gamma == pytest.approx(1.0, abs=1e-9)
        assert r.dimension == 1

    def test_deterministic_shift(self):
        src = """\
theory shifty
fluent h : real
init h ~ uniform(2.0, 12.0)
action fwd(x: real) {
  noisy y ~ pointmass(x)
  poss true
  effect h := h - y
}
"""
        t = parse_theory(src).theory
        hist = parse_history("fwd(2.0)", t)
        r = bel(t, hist, parse_query("h <= 5", t))
        assert r.belief == pytest.approx(0.5, abs=1e-9)

    def test_sensing_posterior_matches_truncated_normal(self, robot1d):
        hist = parse_history("sonar() = 5.0", robot1d)
        r = bel(robot1d, hist, parse_query("h <= 5", robot1d))
        expected = truncated_gaussian_cdf(2.0, 12.0, 5.0, 1.0, 5.0)
        assert r.belief == pytest.approx(expected, abs=1e-4)
        assert abs(r.belief - 0.4993) < 2e-4


class TestBelInvariants:
    def test_normalization_and_complementarity(self):
        failures = []
        for seed in range(12):
            rng = rng_for(7000 + seed)
            t = random_theory(rng)
            hist = simulate_history(rng, t, int(rng.integers(0, 3)), max_noisy=2)
            phi = parse_query_for(t, rng)
            try:
                r_true = bel(t, hist, Lit(True))
                r = bel(t, hist, phi)
                r_not = bel(t, hist, Not(phi))
            except ImpossibleHistoryError:
                continue
            if abs(r_true.belief - 1.0) > 1e-6:
                failures.append((seed, "norm", r_true.belief))
            if abs(r.belief + r_not.belief - 1.0) > 1e-6:
                failures.append((seed, "compl", r.belief, r_not.belief))
        assert not failures, failures

    def test_monotonicity(self, robot1d):
        hist = parse_history("sonar() = 6.0", robot1d)
        values = []
        for c in (3.0, 4.5, 6.0, 7.5, 9.0):
            r = bel(robot1d, hist, Cmp("<=", Name("h"), Num(c)))
            values.append(r.belief)
        for a, b in zip(values, values[1:]):
            assert a <= b + 1e-9

    def test_scale_invariance(self, robot1d):
        hist = parse_history("sonar() = 5.0", robot1d)
        phi = parse_query("h <= 5", robot1d)
        base = bel(robot1d, hist, phi)
        scaled = bel(robot1d, hist, phi, init_scale=10.0)
        assert scaled.gamma == pytest.approx(10.0 * base.gamma, rel=1e-6)
        assert abs(scaled.belief - base.belief) <= 1e-9

    def test_deterministic_change_of_variables(self):
        src = """\
theory detmove
fluent h : real
init h ~ uniform(2.0, 12.0)
action fwd(x: real) {
  noisy y ~ pointmass(x)
  poss true
  effect h := h - y
}
action sonar() senses z {
  poss true
  likelihood gaussian(mean = h, stddev = 1.0)
}
"""
        t = parse_theory(src).theory
        hist = parse_history("sonar() = 6.0", t)
        phi = parse_query("h <= 4", t)
        det = GroundAction("fwd", (2.0,), None, None)
        lhs = bel(t, hist + parse_history("fwd(2.0)", t), phi)
        rhs = bel(t, hist, regress_step(phi, det, t))
        assert lhs.belief == pytest.approx(rhs.belief, abs=1e-8)

    def test_sensing_commutation(self, robot1d):
        a = parse_history("sonar() = 5.0; sonar() = 6.5", robot1d)
        b = parse_history("sonar() = 6.5; sonar() = 5.0", robot1d)
        phi = parse_query("h <= 5.5", robot1d)
        ra = bel(robot1d, a, phi)
        rb = bel(robot1d, b, phi)
        assert ra.belief == pytest.approx(rb.belief, abs=1e-6)


def parse_query_for(theory, rng):
    from conftest import random_formula, random_linear_expr

    return random_formula(rng, list(theory.fluents), depth=2,
                          expr_fn=random_linear_expr)


class TestZeroWeight:
    def test_poss_always_false(self, robot1d):
        src = """\
theory blocked
fluent h : real
init h ~ uniform(2.0, 12.0)
action probe() senses z {
  poss h <= 0
  likelihood gaussian(mean = h, stddev = 1.0)
}
"""
        t = parse_theory(src).theory
        hist = parse_history("probe() = 5.0", t)
        with pytest.raises(ImpossibleHistoryError):
            bel(t, hist, parse_query("h <= 5", t))

    def test_discrete_reading_outside_support(self):
        src = """\
theory beeper
fluent h : real
init h ~ uniform(0.0, 1.0)
action beep() senses z {
  poss true
  likelihood discrete(0.0: 0.5, 1.0: 0.5)
}
"""
        t = parse_theory(src).theory
        hist = parse_history("beep() = 7.0", t)
        with pytest.raises(ImpossibleHistoryError):
            bel(t, hist, parse_query("h <= 5", t))

    def test_never_nan(self, robot1d):
        src = """\
theory blocked2
fluent h : real
init h ~ uniform(2.0, 12.0)
action fwd(x: real) {
  noisy y ~ gaussian(mean = x, stddev = 1.0)
  poss h >= 100.0
  effect h := h - y
}
"""
        t = parse_theory(src).theory
        hist = parse_history("fwd(1.0)", t)
        try:
            r = bel(t, hist, parse_query("h <= 5", t))
            assert not math.isnan(r.belief)
            pytest.fail("expected ImpossibleHistoryError")
        except ImpossibleHistoryError:
            pass


class TestEqualityQueries:
    def test_zero_with_warning(self, robot1d):
        r = bel(robot1d, (), parse_query("h = 4", robot1d))
        assert r.belief == 0.0
        assert any("measure zero" in w for w in r.warnings)

    def test_negated_equality_is_one(self, robot1d):
        r = bel(robot1d, (), parse_query("not (h = 4)", robot1d))
        assert r.belief == pytest.approx(1.0, abs=1e-9)
        assert not r.warnings

    def test_discrete_equality_is_fine(self):
        src = """\
theory die
fluent h : real
init h ~ discrete(1.0: 0.25, 2.0: 0.5, 3.0: 0.25)
"""
        t = parse_theory(src).theory
        r = bel(t, (), parse_query("h = 2", t))
        assert r.belief == pytest.approx(0.5, abs=1e-12)
        assert not r.warnings


class TestCapacity:
    def test_dimension_gate(self, robot1d):
        hist = parse_history("fwd(1.0); fwd(1.0); fwd(1.0); fwd(1.0)", robot1d)
        phi = parse_query("h <= 5", robot1d)
        problem = build_problem(robot1d, hist, phi)
        assert problem.dimension == 5
        with pytest.raises(CapacityError):
            bel(problem, strategy="regress-quad")
        # sequential grid covers the same semantics
        r = bel(problem, strategy="grid", cells=2048)
        assert 0.0 <= r.belief <= 1.0


class TestStrategiesAgree:
    @pytest.mark.parametrize("history,query", [
        ("", "h <= 7"),
        ("sonar() = 5.0", "h <= 5"),
        ("fwd(2.0)", "h <= 5"),
        ("fwd(2.0); sonar() = 4.0", "h <= 4"),
        ("sonar() = 9.0; fwd(3.0); sonar() = 5.5", "h >= 6"),
    ])
    def test_quad_vs_sequential_grid(self, robot1d, history, query):
        hist = parse_history(history, robot1d)
        phi = parse_query(query, robot1d)
        a = bel(robot1d, hist, phi, strategy="regress-quad")
        b = bel(robot1d, hist, phi, strategy="grid", cells=4096)
        assert a.belief == pytest.approx(b.belief, abs=2e-3)


class TestPosteriorDensity:
    def test_prior_is_flat(self, robot1d):
        pts = list(np.linspace(2.0, 12.0, 101))
        grid = posterior_density(robot1d, (), "h", pts)
        assert np.allclose(grid.densities, 0.1, atol=1e-9)

    def test_sensing_matches_bayes_product(self, robot1d):
        hist = parse_history("sonar() = 5.0", robot1d)
        pts = np.linspace(2.0, 12.0, 401)
        grid = posterior_density(robot1d, hist, "h", list(pts))
        prior = np.full_like(pts, 0.1)
        like = np.exp(-0.5 * (pts - 5.0) ** 2) / math.sqrt(2 * math.pi)
        product = prior * like
        product /= np.trapezoid(product, pts)
        sup = float(np.max(np.abs(np.array(grid.densities) - product)))
        assert sup <= 1e-3

    def test_noisy_forward_matches_convolution(self, robot1d):
        hist = parse_history("fwd(2.0)", robot1d)
        pts = np.linspace(-8.0, 12.0, 501)
        grid = posterior_density(robot1d, hist, "h", list(pts))
        # independent discrete-convolution oracle on a fine lattice
        fine = np.linspace(-12.0, 16.0, 4001)
        du = fine[1] - fine[0]
        prior = np.where((fine >= 2.0) & (fine <= 12.0), 0.1, 0.0)
        out = np.zeros_like(pts)
        for i, p in enumerate(pts):
            # h' = h - y, y ~ N(2,1): density(p) = sum_h prior(h) N(h - p; 2, 1) du
            kernel = np.exp(-0.5 * ((fine - p) - 2.0) ** 2) / math.sqrt(2 * math.pi)
            out[i] = float(np.sum(prior * kernel) * du)
        out /= np.trapezoid(out, pts)
        sup = float(np.max(np.abs(np.array(grid.densities) - out)))
        assert sup <= 1e-3

    def test_density_integrates_to_one(self, robot1d):
        hist = parse_history("fwd(2.0); sonar() = 4.0", robot1d)
        pts = np.linspace(-8.0, 12.0, 301)
        grid = posterior_density(robot1d, hist, "h", list(pts))
        total = np.trapezoid(grid.densities, grid.points)
        assert total == pytest.approx(1.0, abs=1e-4)

    def test_impossible_history(self):
        src = """\
theory blocked
fluent h : real
init h ~ uniform(2.0, 12.0)
action probe() senses z {
  poss h <= 0
  likelihood gaussian(mean = h, stddev = 1.0)
}
"""
        t = parse_theory(src).theory
        hist = parse_history("probe() = 5.0", t)
        with pytest.raises(ImpossibleHistoryError):
            posterior_density(t, hist, "h", list(np.linspace(2, 12, 51)))


class TestDensityGridCsv:
    def test_format(self, robot1d):
        pts = list(np.linspace(2.0, 12.0, 11))
        grid = posterior_density(robot1d, (), "h", pts)
        csv = density_grid_csv(grid)
        lines = csv.split("\n")
        assert lines[0] == "point,density"
        assert lines[-1] == ""
        assert "\r" not in csv
        first = lines[1].split(",")
        assert float(first[0]) == pytest.approx(2.0)
        assert float(first[1]) == pytest.approx(0.1)
        # 17 significant digits survive a round trip
        assert float(f"{math.pi:.17g}") == math.pi
