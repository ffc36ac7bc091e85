import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from belcalc.model import (
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
    Uniform,
    UnboundNameError,
    density_pdf,
    density_support,
    eval_expr,
    eval_formula,
    eval_expr_interval,
)

H = Name("h")
G = Name("g")


class TestEvalExpr:
    def test_arithmetic(self):
        assert eval_expr(BinOp("-", H, Num(2.0)), {"h": 5.0}) == 3.0

    def test_constant(self):
        assert eval_expr(Num(0.0), {"h": 5.0}) == 0.0

    def test_unbound_name_is_reported(self):
        with pytest.raises(UnboundNameError) as exc:
            eval_expr(BinOp("+", H, G), {"h": 1.0})
        assert exc.value.symbol == "g"

    def test_deterministic_bitwise(self):
        e = BinOp("*", BinOp("+", H, Num(0.1)), BinOp("-", H, Num(7.3)))
        v = {"h": 3.7183}
        results = {eval_expr(e, v) for _ in range(100)}
        assert len(results) == 1


class TestEvalFormula:
    def test_simple_true(self):
        assert eval_formula(Cmp("<=", H, Num(7.0)), {"h": 5.0}) is True

    def test_compound(self):
        f = And(Not(Cmp("<=", H, Num(7.0))), Cmp(">=", H, Num(3.0)))
        assert eval_formula(f, {"h": 9.0}) is True

    def test_exact_equality(self):
        assert eval_formula(Cmp("=", H, Num(4.0)), {"h": 4.0}) is True
        assert eval_formula(Cmp("=", H, Num(4.0)), {"h": 4.0 + 1e-12}) is False


@st.composite
def formulas(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        op = draw(st.sampled_from(["<", "<=", "=", ">=", ">"]))
        c = draw(st.floats(-10, 10, allow_nan=False))
        return Cmp(op, H, Num(c))
    kind = draw(st.integers(0, 2))
    if kind == 0:
        return And(draw(formulas(depth=depth - 1)), draw(formulas(depth=depth - 1)))
    if kind == 1:
        return Or(draw(formulas(depth=depth - 1)), draw(formulas(depth=depth - 1)))
    return Not(draw(formulas(depth=depth - 1)))


class TestTautologies:
    @given(formulas(), st.floats(-20, 20, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_excluded_middle_and_contradiction(self, f, x):
        v = {"h": x}
        assert eval_formula(Or(f, Not(f)), v) is True
        assert eval_formula(And(f, Not(f)), v) is False


class TestDensityPdf:
    def test_gaussian_at_mean(self):
        # (2*pi)^(-1/2), checked against an independent high-precision source
        assert density_pdf(Gaussian(Num(5.0), 1.0), 5.0) == pytest.approx(
            0.3989422804014327, abs=1e-12)

    def test_uniform(self):
        assert density_pdf(Uniform(2.0, 12.0), 7.0) == pytest.approx(0.1)
        assert density_pdf(Uniform(2.0, 12.0), 1.0) == 0.0

    def test_discrete(self):
        third = 1.0 / 3.0
        d = DiscreteTable(((-1.0, third), (0.0, third), (1.0, 1.0 - 2 * third)))
        assert density_pdf(d, 0.0) == pytest.approx(third)
        assert density_pdf(d, 0.5) == 0.0

    def test_pointmass(self):
        d = PointMass(Num(3.0))
        assert density_pdf(d, 3.0) == 1.0
        assert density_pdf(d, 3.0001) == 0.0

    def test_gaussian_mean_expression(self):
        d = Gaussian(BinOp("+", H, Num(1.0)), 2.0)
        expected = math.exp(-0.5 * (0.5 / 2.0) ** 2) / (2.0 * math.sqrt(2 * math.pi))
        assert density_pdf(d, 4.5, {"h": 3.0}) == pytest.approx(expected, rel=1e-12)


class TestDensityNormalization:
    """Numerical integral/sum of the pdf over its support is 1 (1e-6)."""

    @pytest.mark.parametrize("density", [
        Uniform(2.0, 12.0),
        Uniform(-0.5, 0.25),
        Gaussian(Num(0.0), 1.0),
        Gaussian(Num(3.0), 0.25),
        Gaussian(Num(-7.0), 4.0),
        DiscreteTable(((1.0, 0.25), (2.0, 0.25), (5.0, 0.5))),
    ])
    def test_mass_is_one(self, density):
        if isinstance(density, DiscreteTable):
            total = sum(density_pdf(density, v) for v, _ in density.entries)
        else:
            lo, hi = density_support(density)
            xs = np.linspace(lo, hi, 20001)
            ys = [density_pdf(density, float(x)) for x in xs]
            total = np.trapezoid(ys, xs)
        assert total == pytest.approx(1.0, abs=1e-6)


class TestInvalidDensities:
    def test_uniform_needs_ordered_bounds(self):
        with pytest.raises(ValueError):
            Uniform(3.0, 3.0)

    def test_gaussian_needs_positive_stddev(self):
        with pytest.raises(ValueError):
            Gaussian(Num(0.0), 0.0)

    def test_discrete_must_normalize(self):
        with pytest.raises(ValueError):
            DiscreteTable(((0.0, 0.5), (1.0, 0.6)))


class TestIntervalEval:
    def test_linear(self):
        e = BinOp("-", H, Num(2.0))
        assert eval_expr_interval(e, {"h": (2.0, 12.0)}) == (0.0, 10.0)

    def test_product_sign_handling(self):
        e = BinOp("*", H, H)
        lo, hi = eval_expr_interval(e, {"h": (-2.0, 3.0)})
        assert lo <= -6.0 and hi >= 9.0

    def test_support_gaussian_expression_mean(self):
        d = Gaussian(H, 1.0)
        lo, hi = density_support(d, {"h": (2.0, 12.0)})
        assert lo == pytest.approx(2.0 - 8.0) and hi == pytest.approx(12.0 + 8.0)
