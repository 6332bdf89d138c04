import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from karamata import core
from karamata.core import (
    Add, Const, Div, ExpSqrtLog, GridSpec, Hat, HatSup, LimitKind, LogLogP, LogP,
    Mul, Pow, RecipArg, ShiftArg, Tilde, TildeSup, TruncLeft, TruncRight, Witness,
)
from karamata.errors import DivergentValue, PreconditionFailed

us = st.floats(-600.0, 600.0, allow_nan=False)


def leaves():
    return st.sampled_from([Const(1.0), Const(2.5), LogP(), LogLogP(), ExpSqrtLog()])


def algebraic(depth=3):
    """Expressions without integral nodes, whose values stay finite on |u| <= 600."""
    return st.recursive(
        leaves(),
        lambda kids: st.one_of(
            st.builds(Pow, kids, st.sampled_from([-2.0, -0.5, 0.5, 1.0, 2.0])),
            st.builds(Add, kids, kids),
            st.builds(Mul, kids, kids),
            st.builds(Div, kids, kids),
            st.builds(RecipArg, kids),
            st.builds(TruncLeft, kids),
            st.builds(TruncRight, kids),
        ),
        max_leaves=depth,
    )


def test_eval_examples():
    assert core.eval_log(Const(1.0), 5.0) == 1.0
    assert core.eval_log(ExpSqrtLog(), 1.0) == pytest.approx(math.e, rel=1e-15)
    assert core.eval_log(LogP(), -2.0) == 3.0
    assert core.eval_log(RecipArg(LogP()), 2.0) == 3.0


def test_eval_far_out_does_not_overflow():
    assert core.eval_log(ExpSqrtLog(), 690.0) == pytest.approx(math.exp(math.sqrt(690.0)))
    assert core.eval_log(LogLogP(), -600.0) == pytest.approx(1.0 + math.log(601.0))


def test_eval_log_rejects_non_finite():
    with pytest.raises(ValueError):
        core.eval_log(LogP(), math.inf)


def test_const_must_be_positive():
    with pytest.raises(ValueError):
        Const(0.0)
    with pytest.raises(ValueError):
        Const(math.inf)


@settings(max_examples=200, deadline=None)
@given(e=algebraic(), u=us)
def test_positivity(e, u):
    v = core.eval_log(e, u)
    assert v > 0 and math.isfinite(v)


@settings(max_examples=200, deadline=None)
@given(e=algebraic(), u=us, r=st.floats(-3.0, 3.0))
def test_pow_matches_power_of_value(e, u, r):
    assert core.eval_log(Pow(e, r), u) == pytest.approx(core.eval_log(e, u) ** r, rel=4e-16)


@settings(max_examples=200, deadline=None)
@given(e=algebraic(), u=us)
def test_quotient_of_identical_terms_is_one(e, u):
    assert core.eval_log(Div(e, e), u) == 1.0


@settings(max_examples=200, deadline=None)
@given(e=algebraic(), u=us)
def test_recip_is_an_involution(e, u):
    assert core.eval_log(RecipArg(RecipArg(e)), u) == core.eval_log(e, u)


@settings(max_examples=200, deadline=None)
@given(e=algebraic(), u=us)
def test_truncations(e, u):
    inner = core.eval_log(e, u)
    right = core.eval_log(TruncRight(e), u)
    left = core.eval_log(TruncLeft(e), u)
    assert right == (1.0 if u <= 0 else inner)
    assert left == (inner if u <= 0 else 1.0)


def test_evaluate_is_vectorised():
    u = np.linspace(-5, 5, 11)
    np.testing.assert_array_equal(core.evaluate(LogP(), u), 1.0 + np.abs(u))
    assert core.evaluate(LogP(), u.reshape(1, 11)).shape == (1, 11)


def test_breakpoints_examples():
    assert core.breakpoints(Const(2.0), -5, 5) == []
    assert core.breakpoints(LogP(), -1, 1) == [0.0]
    assert core.breakpoints(Mul(LogP(), TruncRight(LogP())), -1, 1) == [0.0]
    assert core.breakpoints(LogP(), 1, 2) == []


def test_breakpoints_of_shift():
    e = ShiftArg(TruncRight(LogP()), 1.0)
    pts = core.breakpoints(e, -5, 5)
    # b(t - 1) is 1 up to t = 2 and kinks there; t = 1 is where the shifted
    # argument leaves the extension
    assert pts == pytest.approx([0.0, math.log(2.0)])


def test_limit_at_zero_examples():
    assert core.limit_at_zero(Const(3.0)) == core.Limit(LimitKind.FINITE, 3.0)
    assert core.limit_at_zero(TruncRight(LogP())) == core.Limit(LimitKind.FINITE, 1.0)
    assert core.limit_at_zero(LogP()).kind is LimitKind.DIVERGES
    assert core.limit_at_zero(Pow(LogP(), -1.0)).kind is LimitKind.DECAYS


def test_shift_needs_finite_limit():
    with pytest.raises(PreconditionFailed):
        ShiftArg(LogP(), 1.0)


def test_shift_extends_by_limit():
    e = ShiftArg(TruncRight(LogP()), 2.0)
    # t = 1.5 is left of the shift: the extension value 1 applies
    assert core.eval_log(e, math.log(1.5)) == 1.0
    assert core.eval_log(e, math.log(2.0 + math.e)) == pytest.approx(2.0, rel=1e-15)


def test_shift_equality_ignores_cached_limit():
    assert ShiftArg(Const(2.0), 0.5) == ShiftArg(Const(2.0), 0.5, floor=2.0)


def test_tilde_closed_form():
    # int_0^t (1 - log s)^-2 ds / s = 1 / (1 - log t) for t <= 1
    e = Tilde(Pow(LogP(), -2.0))
    u = np.array([-20.0, -3.0, -0.5, 0.0])
    np.testing.assert_allclose(core.evaluate(e, u), 1.0 / (1.0 - u), rtol=1e-8)
    assert core.eval_log(e, 0.0) == pytest.approx(1.0, abs=1e-8)


def test_hat_closed_form():
    e = Hat(Pow(LogP(), -2.0))
    u = np.array([0.0, 0.5, 3.0, 40.0])
    np.testing.assert_allclose(core.evaluate(e, u), 1.0 / (1.0 + u), rtol=1e-8)


def test_sup_nodes():
    u = np.array([-6.0, -2.0, -0.1])
    np.testing.assert_allclose(core.evaluate(TildeSup(Pow(LogP(), -1.0)), u), 1.0 / (1.0 - u),
                               rtol=1e-12)
    np.testing.assert_allclose(core.evaluate(HatSup(Pow(LogP(), -1.0)), u), 1.0)


def test_divergent_tilde_raises():
    with pytest.raises(DivergentValue):
        core.eval_log(Tilde(Const(1.0)), 0.0)


def test_witness_node():
    # int_0^t ds = t and int_t^inf s^-2 ds = 1/t
    u = np.array([-4.0, 0.0, 2.5])
    np.testing.assert_allclose(core.evaluate(Witness(Const(1.0), 1.0), u), np.exp(u), rtol=1e-8)
    np.testing.assert_allclose(core.evaluate(Witness(Const(1.0), -1.0), u), np.exp(-u), rtol=1e-8)
    with pytest.raises(ValueError):
        Witness(LogP(), 0.0)


def test_default_grid():
    g = GridSpec.default()
    pts = g.points()
    assert pts.size == 257
    assert np.all(np.diff(pts) > 0)
    assert 0.0 in pts
    assert pts[0] == pytest.approx(math.log(1e-8)) and pts[-1] == pytest.approx(math.log(1e8))


@settings(max_examples=100, deadline=None)
@given(lo=st.floats(-50, 50), width=st.floats(0.01, 50), ppd=st.integers(1, 40))
def test_grid_sorted_and_deduplicated(lo, width, ppd):
    g = GridSpec(lo, lo + width, ppd)
    pts = g.points()
    assert pts[0] == lo and pts[-1] == lo + width
    assert np.all(np.diff(pts) > 1e-9)
    assert GridSpec.from_dict(g.to_dict()) == g


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(1.0, 1.0)
    with pytest.raises(ValueError):
        GridSpec.from_t(0.0, 1.0)
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, 0)
