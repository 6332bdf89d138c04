import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from karamata import core, quadrature, verify
from karamata.core import CATALOG, Const, GridSpec, LogP, Pow, TruncRight
from karamata.errors import (
    DivergentConstruction,
    DivergentValue,
    PreconditionFailed,
    UndeterminedLimitingCase,
)

SMALL_GRID = GridSpec.from_t(1e-4, 1e4, 4)
EXPRS = [CATALOG[k] for k in sorted(CATALOG)]


# -- check_sv --------------------------------------------------------------

@pytest.mark.parametrize("eps", [0.25, 0.5, 1.0, 2.0])
def test_constant_ratios_are_one(eps):
    (r,) = verify.check_sv(Const(1.0), [eps]).values()
    assert r.passed and r.eps == eps
    for fam in r.families:
        np.testing.assert_allclose(fam.ratios, 1.0, rtol=0, atol=1e-8)


def test_logp_closed_forms():
    # eps = 1, t <= 1: r_low = (2 - ln t) / (1 - ln t)
    grid = GridSpec(-9.0, 0.0, 1)
    r = verify.check_sv(LogP(), [1.0], grid)[1.0]
    low = dict(zip(r.families[0].u, r.families[0].ratios))
    assert low[0.0] == pytest.approx(2.0, abs=1e-8)
    assert low[-9.0] == pytest.approx(1.1, abs=1e-6)
    u = np.array(r.families[0].u)
    np.testing.assert_allclose(r.families[0].ratios, (2 - u) / (1 - u), rtol=1e-9)


def test_logp_upper_closed_form():
    # t >= 1: int_t^inf s^-2 (1 + ln s) ds = (2 + ln t) / t
    grid = GridSpec(0.0, 12.0, 2)
    r = verify.check_sv(LogP(), [1.0], grid)[1.0]
    u = np.array(r.families[1].u)
    np.testing.assert_allclose(r.families[1].ratios, (2 + u) / (1 + u), rtol=1e-9)


def test_sup_families_for_constant():
    r = verify.check_sv(Const(3.0), [0.5], SMALL_GRID, include_sup=True)[0.5]
    assert len(r.families) == 4
    for fam in r.families[2:]:
        np.testing.assert_allclose(fam.ratios, 1.0, rtol=1e-12)


def test_check_sv_rejects_bad_eps():
    with pytest.raises(ValueError):
        verify.check_sv(LogP(), [])
    with pytest.raises(ValueError):
        verify.check_sv(LogP(), [1.0, -0.5])


def test_divergence_fails_with_reason(monkeypatch):
    def boom(*args, **kwargs):
        raise DivergentValue("tail does not settle")

    monkeypatch.setattr(quadrature, "leff_sweep", boom)
    r = verify.check_sv(LogP(), [1.0], SMALL_GRID)[1.0]
    assert not r.passed
    assert r.reason.startswith("NotSlowlyVarying")


def test_summarize_verdicts():
    fam = lambda rs: [verify.RatioFamily("x", list(range(len(rs))), rs)]
    assert verify.summarize(SMALL_GRID, fam([0.5, 2.0]), ceiling=10).passed
    wide = verify.summarize(SMALL_GRID, fam([0.01, 1.0]), ceiling=10)
    assert not wide.passed and "leave" in wide.reason
    spread = verify.summarize(SMALL_GRID, fam([0.2, 9.0]), ceiling=10)
    assert not spread.passed and "spread" in spread.reason
    assert not verify.summarize(SMALL_GRID, fam([0.0, 1.0])).passed
    assert not verify.summarize(SMALL_GRID, fam([1.0, math.inf])).passed
    assert not verify.summarize(SMALL_GRID, []).passed


@settings(max_examples=40, deadline=None)
@given(e=st.sampled_from(EXPRS + [TruncRight(LogP()), Pow(LogP(), -1.5)]),
       eps=st.sampled_from([0.1, 0.5, 1.0, 3.0]),
       ceiling=st.sampled_from([5.0, 100.0, 1e6]))
def test_report_invariants(e, eps, ceiling):
    r = verify.check_sv(e, [eps], SMALL_GRID, ceiling=ceiling)[eps]
    assert r.c_low <= r.c_high
    ratios = np.concatenate([f.ratios for f in r.families])
    assert np.all(ratios > 0)
    in_band = np.all((ratios >= 1 / ceiling) & (ratios <= ceiling))
    assert r.passed == bool(in_band and r.spread <= ceiling)


# Power closure with K a configured ceiling.  Taking K as the minimal
# passing ceiling is too strong: for r = 1/2 the LEFF ratios of b**r are not
# bounded by the square root of those of b (logp, eps = 1: 2.00 vs 2.64**0.5).
@settings(max_examples=30, deadline=None)
@given(e=st.sampled_from(EXPRS), r=st.sampled_from([-2.0, -1.0, 0.5, 2.0]),
       eps=st.sampled_from([0.5, 1.0]), K=st.sampled_from([100.0, 1e6]))
def test_power_closure(e, r, eps, K):
    assert verify.check_sv(e, [eps], SMALL_GRID, ceiling=K)[eps].passed
    powered = verify.check_sv(Pow(e, r), [abs(r) * eps], SMALL_GRID, ceiling=K ** abs(r))
    assert powered[abs(r) * eps].passed


# the witness of b, raised to r, certifies b**r with exactly the r-th power constants
@settings(max_examples=20, deadline=None)
@given(e=st.sampled_from(EXPRS), r=st.sampled_from([-2.0, -1.0, 0.5, 2.0]),
       eps=st.sampled_from([0.5, 1.0]))
def test_power_closure_witness(e, r, eps):
    node, rep = verify.monotone_witness(e, eps, "+", SMALL_GRID)
    u = SMALL_GRID.points()
    w = core.evaluate(node, u) ** r
    d = np.diff(w) if r > 0 else -np.diff(w)
    assert np.all(d >= 0)
    ratio = (eps * core.evaluate(node, u)) ** r / (np.exp(eps * r * u) * core.evaluate(Pow(e, r), u))
    K = max(rep.c_high, 1 / rep.c_low)
    assert np.all(ratio <= K ** abs(r) * (1 + 1e-12))
    assert np.all(ratio >= K ** -abs(r) * (1 - 1e-12))


# -- monotone witnesses ----------------------------------------------------

def test_witness_examples():
    grid = GridSpec.from_t(1e-6, 1e6, 4)
    u = grid.points()
    node, r = verify.monotone_witness(Const(1.0), 1.0, "+", grid)
    np.testing.assert_allclose(core.evaluate(node, u), np.exp(u), rtol=1e-10)
    assert r.passed and r.c_low == pytest.approx(1.0) and r.c_high == pytest.approx(1.0)
    node, _ = verify.monotone_witness(Const(1.0), 1.0, "-", grid)
    np.testing.assert_allclose(core.evaluate(node, u), np.exp(-u), rtol=1e-10)
    node, _ = verify.monotone_witness(LogP(), 1.0, "+", grid)
    assert core.evaluate(node, np.array([0.0]))[0] == pytest.approx(2.0, abs=1e-8)


def test_witness_rejects_bad_arguments():
    with pytest.raises(ValueError):
        verify.monotone_witness(LogP(), 0.0)
    with pytest.raises(ValueError):
        verify.monotone_witness(LogP(), 1.0, sign="*")


@settings(max_examples=25, deadline=None)
@given(e=st.sampled_from(EXPRS + [Pow(LogP(), -2.0)]), eps=st.sampled_from([0.1, 0.5, 2.0]),
       sign=st.sampled_from("+-"))
def test_witness_monotone(e, eps, sign):
    node, _ = verify.monotone_witness(e, eps, sign, SMALL_GRID)
    w = core.evaluate(node, GridSpec.from_t(1e-6, 1e6, 8).points())
    d = np.diff(w) if sign == "+" else -np.diff(w)
    assert np.all(d >= -1e-9 * np.abs(w[1:]))


# -- scaling ---------------------------------------------------------------

def _brute_scaling(b, c, eps, ppd=1000):
    u = np.linspace(math.log(1e-8), math.log(1e8), 16 * ppd + 1)
    lc = math.log(c)
    lo, hi = min(c ** -eps, c ** eps), max(c ** -eps, c ** eps)
    return max(1.0, np.max(b(u + lc) / (hi * b(u))), np.max(lo * b(u) / b(u + lc)))


def test_scaling_trivial():
    r = verify.check_scaling(Const(1.0), [2.0], 1.0)
    assert r.c_eps == 1.0 and r.validated
    for e in EXPRS:
        assert verify.check_scaling(e, [1.0], 0.5).c_eps == 1.0


@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_scaling_logp_brute_force(eps):
    r = verify.check_scaling(LogP(), [math.e], eps)
    oracle = _brute_scaling(lambda u: 1 + np.abs(u), math.e, eps)
    assert r.validated
    assert r.c_eps == pytest.approx(oracle, rel=1e-2)


def test_scaling_expsqrtlog_brute_force():
    b = lambda u: np.exp(np.sqrt(np.abs(u)))
    # the oracle sees no breakpoints, so it can only undershoot
    r = verify.check_scaling(CATALOG["expsqrtlog"], [0.1, 10.0], 0.1)
    oracle = max(_brute_scaling(b, c, 0.1) for c in (0.1, 10.0))
    assert oracle <= r.c_eps * (1 + 1e-12)
    assert r.c_eps == pytest.approx(oracle, rel=1e-2)


@settings(max_examples=20, deadline=None)
@given(e=st.sampled_from(EXPRS), factors=st.lists(st.sampled_from([0.1, 0.5, 2.0, 10.0]),
                                                  min_size=1, max_size=4, unique=True),
       eps=st.sampled_from([0.1, 1.0]))
def test_scaling_literal(e, factors, eps):
    r = verify.check_scaling(e, factors, eps, SMALL_GRID)
    assert r.c_eps >= 1.0 and r.validated
    u = SMALL_GRID.points()
    b = core.evaluate(e, u)
    for c in factors:
        bc = core.evaluate(e, u + math.log(c))
        lo, hi = min(c ** -eps, c ** eps), max(c ** -eps, c ** eps)
        assert np.all(lo * b / r.c_eps <= bc) and np.all(bc <= r.c_eps * hi * b)


# -- shifts ----------------------------------------------------------------

def test_shift_constant_and_zero():
    r = verify.check_shift(Const(1.0), 1.0)
    assert r.c_low == r.c_high == 1.0
    r = verify.check_shift(TruncRight(LogP()), 0.0)
    assert r.c_low == r.c_high == 1.0


def test_shift_brute_force():
    r = verify.check_shift(TruncRight(LogP()), 1.0)
    t = np.exp(np.linspace(math.log(1e-8), math.log(1e8), 16 * 1000 + 1))
    b = lambda x: np.where(x > 1, 1 + np.log(np.maximum(x, 1)), 1.0)
    ratios = np.stack([b(t - t1) / b(t) for t1 in np.linspace(-1, 1, 201)])
    assert r.passed
    assert r.c_low == pytest.approx(ratios.min(), rel=1e-2)
    assert r.c_high == pytest.approx(ratios.max(), rel=1e-2)
    assert r.c_high == pytest.approx(1 + math.log(2), rel=1e-12)


def test_shift_needs_finite_limit():
    with pytest.raises(PreconditionFailed):
        verify.check_shift(LogP(), 1.0)
    with pytest.raises(PreconditionFailed):
        verify.check_shift(Pow(LogP(), -1.0), 1.0)


@settings(max_examples=15, deadline=None)
@given(e=st.sampled_from([Const(2.0), TruncRight(LogP()), TruncRight(CATALOG["expsqrtlog"])]))
def test_zero_shift_is_identity(e):
    r = verify.check_shift(e, 0.0, SMALL_GRID)
    assert r.c_low == r.c_high == 1.0


# -- limits ----------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.0, -1.0])
def test_limiting_cases(alpha):
    with pytest.raises(UndeterminedLimitingCase, match="limiting case"):
        verify.limit_diagnostics(LogP(), alpha)


def test_limits_logp_alpha_one():
    r = verify.limit_diagnostics(LogP(), 1.0)
    assert r.zero_trend == "to_zero" and r.infinity_trend == "to_infinity"
    assert r.consistent


def test_limits_constant_alpha_minus_two():
    r = verify.limit_diagnostics(Const(1.0), -2.0)
    assert r.integral_0_1 == "diverges"
    assert r.integral_1_inf == "converges"
    assert r.integral_1_inf_value == pytest.approx(1.0, rel=1e-9)
    assert r.consistent


@pytest.mark.parametrize("alpha", [-3.0, -0.5, 0.5, 2.0])
def test_limits_catalog_consistent(alpha):
    for e in EXPRS:
        assert verify.limit_diagnostics(e, alpha).consistent


# -- tilde / hat -----------------------------------------------------------

def test_tilde_of_constant_diverges():
    with pytest.raises(DivergentConstruction):
        verify.tilde_hat_growth(Const(1.0))
    with pytest.raises(DivergentConstruction):
        verify.tilde_hat_growth(Const(1.0), kind="hat")


def test_tilde_closed_form():
    e = Pow(LogP(), -2.0)
    u = np.array([-20.0, -3.0, 0.0])
    np.testing.assert_allclose(core.evaluate(core.Tilde(e), u), 1 / (1 - u), rtol=1e-10)
    assert core.evaluate(core.Tilde(e), np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-8)


def test_tildesup_closed_form():
    u = np.array([-7.0, -1.0, 0.0])
    np.testing.assert_allclose(core.evaluate(core.TildeSup(Pow(LogP(), -1.0)), u), 1 / (1 - u))


def test_growth_report_trend():
    r = verify.tilde_hat_growth(Pow(LogP(), -2.0))
    # tilde/b = 1 - ln t for t <= 1, so the ratio keeps rising towards 0
    assert r.zero_end_increasing
    assert r.label == "non-decisive diagnostic"
    assert r.min_ratio > 0
    r = verify.tilde_hat_growth(Pow(LogP(), -2.0), kind="hat")
    # hat/b = (2 - 1/(1 - u)) (1 - u)**2 for u <= 0: rising at both ends
    assert r.infinity_end_increasing and r.zero_end_increasing
