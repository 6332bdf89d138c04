"""Numerical evidence for slow variation and its quantitative consequences.

Every check samples a :class:`~karamata.core.GridSpec` and reports raw ratios
together with their global sandwich constants.  A finite grid cannot prove a
statement about all of (0, inf); the grid span is part of what a report
claims.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core, quadrature
from .core import GridSpec, LimitKind
from .errors import (
    DivergentConstruction,
    DivergentValue,
    PreconditionFailed,
    UndeterminedLimitingCase,
)
from .quadrature import DEFAULT_CONFIG

DEFAULT_CEILING = 1e6


@dataclass
class RatioFamily:
    """Ratios sampled at ``u`` for one quantity; ``label`` records its provenance."""

    label: str
    u: list
    ratios: list


@dataclass
class EquivalenceReport:
    grid: GridSpec
    families: list
    c_low: float
    c_high: float
    ceiling: float
    passed: bool
    reason: str = ""
    eps: float = None

    @property
    def spread(self):
        return self.c_high / self.c_low if self.c_low > 0 else math.inf


def summarize(grid, families, ceiling=DEFAULT_CEILING, eps=None):
    """Build a report from ratio families.

    The verdict passes when every ratio lies in ``[1/ceiling, ceiling]`` and
    the spread ``c_high / c_low`` is finite and at most ``ceiling``.
    """
    allr = np.concatenate([np.asarray(f.ratios, dtype=float) for f in families]) \
        if families else np.empty(0)
    if allr.size == 0:
        return EquivalenceReport(grid, families, math.nan, math.nan, ceiling, False,
                                 "no samples", eps)
    c_low = float(allr.min())
    c_high = float(allr.max())
    reason = ""
    if not np.all(np.isfinite(allr)) or c_low <= 0:
        reason = "non-finite or non-positive ratio"
    elif c_low < 1.0 / ceiling or c_high > ceiling:
        reason = f"ratios leave [1/{ceiling:g}, {ceiling:g}]"
    elif c_high / c_low > ceiling:
        reason = f"spread {c_high / c_low:.3g} exceeds ceiling {ceiling:g}"
    return EquivalenceReport(grid, families, c_low, c_high, ceiling, not reason, reason, eps)


def _diverged(grid, ceiling, exc, eps=None):
    return EquivalenceReport(grid, [], 0.0, math.inf, ceiling, False,
                             f"NotSlowlyVarying: {exc}", eps)


def compare(values, e, grid, ceiling=DEFAULT_CEILING, label="c/b", cfg=None):
    """Equivalence report for ``values(u) / b(exp(u))`` over ``grid``."""
    u = grid.points()
    ratios = np.asarray(values(u), dtype=float) / core.evaluate(e, u, cfg)
    return summarize(grid, [RatioFamily(label, u.tolist(), ratios.tolist())], ceiling)


# -- slow variation via LEFF -------------------------------------------------

def _sup_family(e, eps, u, b, side, cfg):
    fn = quadrature.running_sup_lower if side == "lower" else quadrature.running_sup_upper
    sign = 1.0 if side == "lower" else -1.0
    ratios = [fn(e, eps, x, cfg) / math.exp(sign * eps * x) / bx for x, bx in zip(u, b)]
    return RatioFamily(f"sup_{side}(eps={eps!r})", u.tolist(), ratios)


def check_sv(e, eps_list, grid=None, cfg=None, ceiling=DEFAULT_CEILING, include_sup=False):
    """LEFF ratios of ``e`` for each ``eps``; returns ``{eps: EquivalenceReport}``.

    ``r_low(t) = eps int_0^t s**(eps-1) b ds / (t**eps b(t))`` and
    ``r_up(t) = eps int_t^inf s**(-eps-1) b ds / (t**-eps b(t))``.  The factor
    ``eps`` makes both ratios identically 1 for a constant ``b``.  A divergent
    integral or node makes the verdict fail with reason ``NotSlowlyVarying``.
    """
    cfg = cfg or DEFAULT_CONFIG
    grid = grid or GridSpec.default()
    eps_list = [float(x) for x in eps_list]
    if not eps_list or min(eps_list) <= 0:
        raise ValueError("eps_list must be non-empty and positive")
    u = grid.points()
    reports = {}
    for eps in eps_list:
        try:
            b = core.evaluate(e, u, cfg)
            low = eps * quadrature.leff_sweep(e, eps, u, "lower", cfg) / b
            up = eps * quadrature.leff_sweep(e, eps, u, "upper", cfg) / b
            families = [
                RatioFamily(f"leff_lower(eps={eps!r})", u.tolist(), low.tolist()),
                RatioFamily(f"leff_upper(eps={eps!r})", u.tolist(), up.tolist()),
            ]
            if include_sup:
                families.append(_sup_family(e, eps, u, b, "lower", cfg))
                families.append(_sup_family(e, eps, u, b, "upper", cfg))
        except DivergentValue as exc:
            reports[eps] = _diverged(grid, ceiling, exc, eps)
            continue
        reports[eps] = summarize(grid, families, ceiling, eps)
    return reports


def monotone_witness(e, eps, sign="+", grid=None, cfg=None, ceiling=DEFAULT_CEILING):
    """Monotone representative of ``t**(+-eps) b(t)`` and its certificate.

    Returns ``(witness, report)``.  ``witness`` is the integral node
    ``int_0^t s**(eps-1) b ds`` for ``sign='+'`` (non-decreasing) or
    ``int_t^inf s**(-eps-1) b ds`` for ``sign='-'`` (non-increasing); the report
    holds ``eps witness / (t**(+-eps) b)`` over the grid.
    """
    cfg = cfg or DEFAULT_CONFIG
    grid = grid or GridSpec.default()
    if not eps > 0:
        raise ValueError("eps must be positive")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    side = "lower" if sign == "+" else "upper"
    witness = core.Witness(e, eps if sign == "+" else -eps)
    u = grid.points()
    scaled = quadrature.leff_sweep(e, eps, u, side, cfg)
    ratios = eps * scaled / core.evaluate(e, u, cfg)
    report = summarize(grid, [RatioFamily(f"witness{sign}(eps={eps!r})", u.tolist(),
                                          ratios.tolist())], ceiling, eps)
    return witness, report


# -- scaling -----------------------------------------------------------------

@dataclass
class ScalingReport:
    grid: GridSpec
    eps: float
    factors: list
    c_eps: float
    worst_t_log: float
    worst_factor: float
    points_checked: int
    validated: bool


def _with_breaks(u, breaks):
    br = np.asarray(breaks, dtype=float)
    pts = np.concatenate([u, br, np.nextafter(br, -math.inf), np.nextafter(br, math.inf)])
    pts = pts[(pts >= u[0]) & (pts <= u[-1])]
    return np.unique(pts)


def check_scaling(e, factors, eps, grid=None, cfg=None):
    """Smallest ``C >= 1`` making the scaling inequality hold on the grid.

    The inequality is ``C**-1 min(c**-eps, c**eps) b(t) <= b(ct) <=
    C max(c**-eps, c**eps) b(t)`` for every listed factor ``c``.  Grid points are
    augmented with the breakpoints of ``b`` and of ``b(c .)``.  The returned
    constant is re-validated literally and nudged up by ulps if rounding
    demands it.
    """
    cfg = cfg or DEFAULT_CONFIG
    grid = grid or GridSpec.default()
    factors = [float(c) for c in factors]
    if not factors or min(factors) <= 0:
        raise ValueError("factors must be positive")
    if not eps > 0:
        raise ValueError("eps must be positive")
    base = grid.points()
    c_eps, worst_u, worst_c = 1.0, float(base[0]), factors[0]
    checks = []
    for c in factors:
        lc = math.log(c)
        br = core.breakpoints(e, base[0], base[-1]) + \
            [p - lc for p in core.breakpoints(e, base[0] + lc, base[-1] + lc)]
        u = _with_breaks(base, br)
        b = core.evaluate(e, u, cfg)
        bc = core.evaluate(e, u + lc, cfg)
        lo_f = min(c ** -eps, c ** eps)
        hi_f = max(c ** -eps, c ** eps)
        need = np.maximum(bc / (hi_f * b), lo_f * b / bc)
        i = int(np.argmax(need))
        if need[i] > c_eps:
            c_eps, worst_u, worst_c = float(need[i]), float(u[i]), c
        checks.append((b, bc, lo_f, hi_f))

    def holds(C):
        return all(np.all(lo_f * b / C <= bc) and np.all(bc <= C * hi_f * b)
                   for b, bc, lo_f, hi_f in checks)

    validated = holds(c_eps)
    for _ in range(64):
        if validated:
            break
        c_eps = float(np.nextafter(c_eps, math.inf))
        validated = holds(c_eps)
    return ScalingReport(grid, float(eps), factors, c_eps, worst_u, worst_c,
                         sum(ch[0].size for ch in checks), validated)


# -- shifts ------------------------------------------------------------------

def check_shift(e, t0, grid=None, cfg=None, n_shifts=20, ceiling=DEFAULT_CEILING):
    """Sandwich constants of ``b(t - t1) / b(t)`` for ``t1`` swept over ``[-t0, t0]``.

    ``b`` is extended to (-inf, 0] by its limit at zero, which must be finite
    and positive.  The ``t`` samples include both sides of every breakpoint
    of ``b`` and of the shifted function.
    """
    cfg = cfg or DEFAULT_CONFIG
    grid = grid or GridSpec.default()
    t0 = abs(float(t0))
    lim = core.limit_at_zero(e, cfg)
    if lim.kind is not LimitKind.FINITE or not lim.value > 0:
        raise PreconditionFailed(
            f"shift equivalence needs a finite positive limit at 0, got {lim.kind.value}"
        )
    if t0 == 0:
        shifts = np.array([0.0])
    else:
        shifts = np.linspace(-t0, t0, 2 * n_shifts + 1)
        shifts[n_shifts] = 0.0
    base = grid.points()
    families = []
    for t1 in shifts:
        node = core.ShiftArg(e, float(t1), floor=lim.value)
        br = core.breakpoints(e, base[0], base[-1]) + core.breakpoints(node, base[0], base[-1])
        u = _with_breaks(base, br)
        ratios = core.evaluate(node, u, cfg) / core.evaluate(e, u, cfg)
        families.append(RatioFamily(f"shift(t1={float(t1)!r})", u.tolist(), ratios.tolist()))
    return summarize(grid, families, ceiling)


# -- limiting behaviour ------------------------------------------------------

@dataclass
class TrendReport:
    """Observed behaviour of ``t**alpha b(t)`` at both ends, and of its integrals."""

    alpha: float
    zero_trend: str
    zero_expected: str
    infinity_trend: str
    infinity_expected: str
    integral_0_1: str
    integral_0_1_expected: str
    integral_0_1_value: float
    integral_1_inf: str
    integral_1_inf_expected: str
    integral_1_inf_value: float
    schedule: list = field(default_factory=list)

    @property
    def consistent(self):
        return (self.zero_trend == self.zero_expected
                and self.infinity_trend == self.infinity_expected
                and self.integral_0_1 == self.integral_0_1_expected
                and self.integral_1_inf == self.integral_1_inf_expected)


TREND_SCHEDULE = 10.0 * np.arange(1, 61)


def _trend(logs):
    late = logs[len(logs) // 2:]
    d = np.diff(late)
    if np.all(d < 0) and late[-1] - late[0] < -1.0:
        return "to_zero"
    if np.all(d > 0) and late[-1] - late[0] > 1.0:
        return "to_infinity"
    return "undetermined"


def _half_line_integral(e, alpha, direction, cfg):
    def f(v):
        with np.errstate(over="ignore"):
            return np.exp((alpha + 1.0) * v + np.log(core.evaluate(e, v, cfg)))

    try:
        res = quadrature.integrate_tail(
            f, 0.0, direction, cfg, lambda lo, hi: core.breakpoints(e, lo, hi)
        )
    except DivergentValue:
        return "diverges", math.inf
    return "converges", res.value


def limit_diagnostics(e, alpha, cfg=None):
    """Trend of ``t**alpha b(t)`` at ``0+`` and ``inf`` plus convergence of its integrals.

    The ends are sampled at ``|log t| = 10, 20, ..., 600`` and a trend is an
    escape that is monotone over the second half of that schedule and changes
    the value by more than a factor ``e``.  ``alpha = 0`` (limits) and
    ``alpha = -1`` (integrals) are limiting cases that slow variation does not
    decide; both raise :class:`UndeterminedLimitingCase`.
    """
    cfg = cfg or DEFAULT_CONFIG
    alpha = float(alpha)
    if alpha == 0.0:
        raise UndeterminedLimitingCase(
            "alpha = 0 is a limiting case: slow variation of b does not determine "
            "the limits of b(t) itself at 0+ or at infinity"
        )
    if alpha == -1.0:
        raise UndeterminedLimitingCase(
            "alpha = -1 is a limiting case: slow variation of b does not determine "
            "whether int t**-1 b(t) dt converges at 0+ or at infinity"
        )
    zero_logs = -alpha * TREND_SCHEDULE + np.log(core.evaluate(e, -TREND_SCHEDULE, cfg))
    inf_logs = alpha * TREND_SCHEDULE + np.log(core.evaluate(e, TREND_SCHEDULE, cfg))
    s01, v01 = _half_line_integral(e, alpha, -1, cfg)
    s1i, v1i = _half_line_integral(e, alpha, 1, cfg)
    return TrendReport(
        alpha=alpha,
        zero_trend=_trend(zero_logs),
        zero_expected="to_zero" if alpha > 0 else "to_infinity",
        infinity_trend=_trend(inf_logs),
        infinity_expected="to_infinity" if alpha > 0 else "to_zero",
        integral_0_1=s01,
        integral_0_1_expected="converges" if alpha > -1 else "diverges",
        integral_0_1_value=v01,
        integral_1_inf=s1i,
        integral_1_inf_expected="converges" if alpha < -1 else "diverges",
        integral_1_inf_value=v1i,
        schedule=TREND_SCHEDULE.tolist(),
    )


# -- tilde / hat constructions -----------------------------------------------

GROWTH_KINDS = {
    "tilde": core.Tilde,
    "hat": core.Hat,
    "tildesup": core.TildeSup,
    "hatsup": core.HatSup,
}


@dataclass
class GrowthReport:
    """Ratio of a tilde/hat construction to ``b``; a trend, never a verdict.

    A limsup cannot be decided by finitely many samples, so the two
    ``*_increasing`` flags only say whether the running maximum of the ratio
    was still rising over the last sampled decade at that end.
    """

    kind: str
    grid: GridSpec
    u: list
    ratios: list
    min_ratio: float
    zero_end_increasing: bool
    infinity_end_increasing: bool
    label: str = "non-decisive diagnostic"


def _still_rising(ratios, last, rest):
    if not rest.any():
        return False
    return bool(ratios[last].max() > ratios[rest].max())


def tilde_hat_growth(e, grid=None, cfg=None, kind="tilde"):
    """Ratio of ``kind`` (tilde, hat, tildesup, hatsup) of ``e`` to ``e`` on the grid.

    Raises :class:`DivergentConstruction` when the construction is infinite.
    """
    cfg = cfg or DEFAULT_CONFIG
    grid = grid or GridSpec.default()
    node = GROWTH_KINDS[kind](e)
    u = grid.points()
    try:
        values = core.evaluate(node, u, cfg)
    except DivergentValue as exc:
        raise DivergentConstruction(f"{kind} of {e} is infinite: {exc}") from exc
    ratios = values / core.evaluate(e, u, cfg)
    decade = math.log(10.0)
    mid = 0.5 * (u[0] + u[-1])
    zero_half, inf_half = u <= mid, u >= mid
    zero_last = u <= u[0] + decade
    inf_last = u >= u[-1] - decade
    zero_inc = _still_rising(ratios, zero_last, zero_half & ~zero_last)
    inf_inc = _still_rising(ratios, inf_last, inf_half & ~inf_last)
    return GrowthReport(kind, grid, u.tolist(), ratios.tolist(), float(ratios.min()),
                        zero_inc, inf_inc)
