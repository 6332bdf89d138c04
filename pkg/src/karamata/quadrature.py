"""Adaptive quadrature over finite intervals and half-lines.

Everything here works on vectorised integrands: ``f`` receives a 1-d float
array and returns an array of the same shape.  The engine is a batched
Gauss-Kronrod (10, 21) scheme with the usual QUADPACK error heuristic.
Intervals are pre-split at the supplied breakpoints and refined by bisection.

Half-line integrals are assembled from blocks whose widths double
(``w, 2w, 4w, ...`` with ``w = tail_block_width``), which copes with both
exponentially decaying integrands (LEFF weights) and the slow algebraic tails
of tilde/hat constructions.  The remainder after the last block is estimated
from the ratio of the last two blocks.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import core
from .errors import DivergentValue, NoConvergence

# Kronrod abscissae (descending, last is the centre) and weights for the
# 21-point rule; every second abscissa is a 10-point Gauss node.
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208814474804,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES = np.concatenate([-_XGK[:10], [0.0], _XGK[9::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:10], [_WGK[10]], _WGK[9::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[19:10:-2] = _WG

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class CheckConfig:
    """Tolerances shared by every numerical claim the package makes."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    limit_tol: float = 1e-9
    tail_block_width: float = 5.0
    max_subdivisions: int = 4000
    max_tail_blocks: int = 48
    eps_list: tuple = (0.25, 0.5, 1.0, 2.0)

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "limit_tol", "tail_block_width"):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if self.max_subdivisions < 1 or self.max_tail_blocks < 2:
            raise ValueError("max_subdivisions and max_tail_blocks must be positive")
        object.__setattr__(self, "eps_list", tuple(float(x) for x in self.eps_list))
        if not self.eps_list or min(self.eps_list) <= 0:
            raise ValueError("eps_list must be non-empty and positive")

    @classmethod
    def from_env(cls, **overrides):
        """Default config, with ``rel_tol`` taken from ``KARAMATA_TOL`` when set."""
        tol = os.environ.get("KARAMATA_TOL")
        if tol and "rel_tol" not in overrides:
            overrides["rel_tol"] = float(tol)
        return cls(**overrides)

    def to_dict(self):
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "limit_tol": self.limit_tol,
            "tail_block_width": self.tail_block_width,
            "max_subdivisions": self.max_subdivisions,
            "max_tail_blocks": self.max_tail_blocks,
            "eps_list": list(self.eps_list),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["eps_list"] = tuple(d.get("eps_list", cls.eps_list))
        return cls(**d)


DEFAULT_CONFIG = CheckConfig()


@dataclass
class QuadResult:
    value: float
    err_est: float
    evaluations: int = 0
    blocks: list = field(default_factory=list, repr=False)


def _kronrod_batch(f, a, b, seg, with_index):
    """Apply the 21-point rule to every interval in (a, b) at once."""
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = centre[:, None] + half[:, None] * NODES[None, :]
    if with_index:
        fx = f(x.ravel(), np.repeat(seg, 21))
    else:
        fx = f(x.ravel())
    fx = np.asarray(fx, dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)][0]
        raise DivergentValue(f"integrand is not finite at {bad!r}")
    resk = fx @ KRONROD_WEIGHTS
    resg = fx @ GAUSS_WEIGHTS
    resabs = np.abs(fx) @ KRONROD_WEIGHTS
    resasc = np.abs(fx - 0.5 * resk[:, None]) @ KRONROD_WEIGHTS
    hl = np.abs(half)
    value = resk * half
    resabs *= hl
    resasc *= hl
    err = np.abs((resk - resg) * half)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    err = np.maximum(err, 50 * _EPS * resabs)
    return value, err, resabs


def integrate_segments(f, lo, hi, breaks=(), cfg=None, *, rel_tol=None,
                       abs_tol=None, with_index=False):
    """Integrate ``f`` over each segment ``[lo[i], hi[i]]``.

    Segments are split at every breakpoint lying strictly inside them and then
    refined adaptively.  An interval is accepted once its error estimate is
    below ``rel_tol`` times its absolute integral, or below its share of
    ``abs_tol``; a whole segment is accepted once its summed error is below
    ``max(abs_tol, rel_tol * |integral|)``.  With ``with_index`` the
    integrand is called as ``f(x, segment_index)``.

    Returns ``(values, errors, evaluations)``.
    """
    cfg = cfg or DEFAULT_CONFIG
    rel_tol = cfg.rel_tol if rel_tol is None else rel_tol
    abs_tol = cfg.abs_tol if abs_tol is None else abs_tol
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    nseg = lo.size
    values = np.zeros(nseg)
    errors = np.zeros(nseg)
    if nseg == 0:
        return values, errors, 0
    br = np.unique(np.asarray(breaks, dtype=float)) if len(breaks) else np.empty(0)

    a_list, b_list, s_list = [], [], []
    for i in range(nseg):
        if hi[i] == lo[i]:
            continue
        inner = br[(br > lo[i]) & (br < hi[i])]
        edges = np.concatenate([[lo[i]], inner, [hi[i]]])
        a_list.append(edges[:-1])
        b_list.append(edges[1:])
        s_list.append(np.full(edges.size - 1, i))
    if not a_list:
        return values, errors, 0
    a = np.concatenate(a_list)
    b = np.concatenate(b_list)
    seg = np.concatenate(s_list)
    seg_len = np.abs(hi - lo)

    evaluations = 0
    subdivisions = 0
    while a.size:
        val, err, resabs = _kronrod_batch(f, a, b, seg, with_index)
        evaluations += 21 * a.size
        share = abs_tol * np.abs(b - a) / seg_len[seg]
        narrow = np.abs(b - a) <= 64 * _EPS * np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-300)
        ok = (err <= np.maximum(rel_tol * resabs, share)) | narrow
        # a segment is also done once its total error meets the global target;
        # this stops bisection of noise-dominated slivers whose summed error is
        # negligible but which never pass the local test
        pend_val = np.bincount(seg, np.where(ok, 0.0, val), nseg)
        pend_err = np.bincount(seg, np.where(ok, 0.0, err), nseg)
        tot_val = values + np.bincount(seg, np.where(ok, val, 0.0), nseg) + pend_val
        tot_err = errors + np.bincount(seg, np.where(ok, err, 0.0), nseg) + pend_err
        done = tot_err <= np.maximum(abs_tol, rel_tol * np.abs(tot_val))
        ok |= done[seg]
        np.add.at(values, seg[ok], val[ok])
        np.add.at(errors, seg[ok], err[ok])
        bad = ~ok
        subdivisions += int(bad.sum())
        if subdivisions > cfg.max_subdivisions:
            np.add.at(values, seg[bad], val[bad])
            np.add.at(errors, seg[bad], err[bad])
            raise NoConvergence(
                f"quadrature exhausted {cfg.max_subdivisions} subdivisions "
                f"(error estimate {errors.sum():.3g})",
                value=values, err_est=errors,
            )
        mid = 0.5 * (a[bad] + b[bad])
        a, b, seg = (
            np.concatenate([a[bad], mid]),
            np.concatenate([mid, b[bad]]),
            np.concatenate([seg[bad], seg[bad]]),
        )
    return values, errors, evaluations


def integrate(f, a, b, breaks=(), cfg=None, **kwargs):
    """Adaptive integral of a vectorised ``f`` over the finite interval ``[a, b]``."""
    if a > b:
        raise ValueError("integrate requires a <= b")
    vals, errs, n = integrate_segments(f, [a], [b], breaks, cfg, **kwargs)
    return QuadResult(float(vals[0]), float(errs[0]), n)


# the drift of an extrapolated remainder understates its error, hence the
# extra safety factor
_DRIFT_TOL = 1e-3


def _block_edges(anchor, direction, width, k):
    near = anchor + direction * width * (2.0**k - 1.0)
    far = anchor + direction * width * (2.0 ** (k + 1) - 1.0)
    return (far, near) if direction < 0 else (near, far)


def integrate_tail(f, anchor, direction, cfg=None, breaks_fn=None):
    """Integral of ``f`` from ``anchor`` to ``-inf`` (direction -1) or ``+inf`` (+1).

    Blocks of doubling width are added until the remainder, extrapolated
    geometrically from the last block ratio, is below ``rel_tol`` of the
    accumulated value or stops changing at that level between ratios.  When
    the last four block ratios are all at least one and have settled (the
    integrand decays no faster than ``1/|u|``) the integral is declared
    divergent.
    """
    cfg = cfg or DEFAULT_CONFIG
    width = cfg.tail_block_width
    total = 0.0
    err = 0.0
    evaluations = 0
    blocks = []
    ratios = []
    for k in range(cfg.max_tail_blocks):
        lo, hi = _block_edges(anchor, direction, width, k)
        breaks = breaks_fn(lo, hi) if breaks_fn else ()
        vals, errs, n = integrate_segments(f, [lo], [hi], breaks, cfg)
        block = float(vals[0])
        evaluations += n
        err += float(errs[0])
        total += block
        blocks.append(block)
        if not math.isfinite(total):
            raise DivergentValue(f"half-line integral from {anchor!r} overflows")
        if len(blocks) >= 2 and blocks[-2] > 0:
            ratios.append(block / blocks[-2])
        last = ratios[-4:]
        # far from the origin the first ratios exceed 1 even for convergent
        # tails, so only a settled run of ratios counts as divergence
        if len(last) == 4 and min(last) >= 1.0 - 1e-3 and max(last) - min(last) <= 0.05:
            raise DivergentValue(
                f"half-line integral from {anchor!r} diverges "
                f"(block ratios {ratios[-4:]!r})"
            )
        if k < 1:
            continue
        q = ratios[-1] if ratios else 0.0
        if total == 0.0 and block == 0.0:
            return QuadResult(0.0, err, evaluations, blocks)
        if q < 1.0:
            remainder = block * max(q, 0.0) / (1.0 - q)
            if block <= cfg.rel_tol * total and remainder <= cfg.rel_tol * total:
                return QuadResult(total + remainder, err + remainder, evaluations, blocks)
            # slowly decaying tails: accept once the geometric estimate of the
            # remainder no longer moves when the ratio is re-estimated
            if len(ratios) >= 3 and 0.0 < ratios[-2] < 1.0 - 1e-3 and q < 1.0 - 1e-3:
                drift = abs(remainder - block * ratios[-2] / (1.0 - ratios[-2]))
                if drift <= _DRIFT_TOL * cfg.rel_tol * abs(total + remainder):
                    return QuadResult(total + remainder, err + drift, evaluations, blocks)
    if ratios and ratios[-1] >= 1.0 - 1e-3:
        raise DivergentValue(f"half-line integral from {anchor!r} does not settle")
    raise NoConvergence(
        f"half-line integral from {anchor!r} not converged after "
        f"{cfg.max_tail_blocks} blocks", value=total, err_est=err,
    )


# -- suprema -----------------------------------------------------------------

_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


def _golden_max(g, lo, hi, iters=48):
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    g1, g2 = float(g(np.array([x1]))[0]), float(g(np.array([x2]))[0])
    for _ in range(iters):
        if g1 < g2:
            lo, x1, g1 = x1, x2, g2
            x2 = lo + _GOLDEN * (hi - lo)
            g2 = float(g(np.array([x2]))[0])
        else:
            hi, x2, g2 = x2, x1, g1
            x1 = hi - _GOLDEN * (hi - lo)
            g1 = float(g(np.array([x1]))[0])
    return max(g1, g2)


def interval_sup(logf, lo, hi, breaks=(), n=65, open_end="hi"):
    """Supremum of ``logf`` over ``[lo, hi]`` with one end excluded.

    The sample grid is uniform plus both sides of every breakpoint, so jumps
    are seen; the best grid cell is refined by golden-section search.
    ``open_end`` names the endpoint that is replaced by its floating point
    neighbour inside the interval.
    """
    if hi <= lo:
        return -math.inf
    if open_end == "hi":
        lo_s, hi_s = lo, np.nextafter(hi, -math.inf)
    else:
        lo_s, hi_s = np.nextafter(lo, math.inf), hi
    xs = np.linspace(lo_s, hi_s, n)
    br = np.asarray([x for x in breaks if lo <= x <= hi], dtype=float)
    extra = np.concatenate([br, np.nextafter(br, -math.inf), np.nextafter(br, math.inf)])
    extra = extra[(extra >= lo_s) & (extra <= hi_s)]
    pts = np.concatenate([xs, extra])
    vals = np.asarray(logf(pts), dtype=float)
    if np.any(np.isnan(vals)) or np.any(vals == math.inf):
        raise DivergentValue(f"supremum is infinite on [{lo!r}, {hi!r}]")
    best = float(vals.max())
    i = int(vals[:n].argmax())
    if 0 < i < n - 1:
        cell_lo, cell_hi = xs[i - 1], xs[i + 1]
        if not np.any((br > cell_lo) & (br < cell_hi)):
            best = max(best, _golden_max(logf, cell_lo, cell_hi))
    return best


def tail_sup(logf, anchor, direction, cfg=None, breaks_fn=None):
    """Supremum of ``logf`` over the open half-line beyond ``anchor``.

    Blocks of doubling width are scanned.  The scan stops once two consecutive
    block maxima fail to increase and stay below the running best.  If the
    last block still raises the maximum by more than ``limit_tol`` the
    supremum is declared infinite.
    """
    cfg = cfg or DEFAULT_CONFIG
    width = cfg.tail_block_width
    maxima = []
    best = previous_best = -math.inf
    for k in range(cfg.max_tail_blocks):
        lo, hi = _block_edges(anchor, direction, width, k)
        breaks = breaks_fn(lo, hi) if breaks_fn else ()
        m = interval_sup(logf, lo, hi, breaks, open_end="hi" if direction < 0 else "lo")
        maxima.append(m)
        previous_best = best
        best = max(best, m)
        if k >= 2 and maxima[-1] <= maxima[-2] <= maxima[-3] and maxima[-1] < best:
            return best
        if k >= 2 and maxima[-1] == maxima[-2] == maxima[-3]:
            return best
    if maxima[-1] - previous_best > cfg.limit_tol:
        raise DivergentValue(f"supremum beyond {anchor!r} grows without bound")
    return best


# -- LEFF integrals and suprema ---------------------------------------------

def _check_eps(eps):
    if not eps > 0 or not math.isfinite(eps):
        raise ValueError(f"eps must be positive and finite, got {eps!r}")


def leff_sweep(e, eps, u, side, cfg=None):
    """Scaled LEFF integrals at every point of ``u``.

    For ``side='lower'`` returns ``t**-eps * int_0^t s**(eps-1) b(s) ds`` and for
    ``side='upper'`` returns ``t**eps * int_t^inf s**(-eps-1) b(s) ds``, with
    ``t = exp(u)``.  Working with the scaled form keeps every quantity of the
    order of ``b`` itself.  Points are swept in order: one half-line integral at
    the extreme point, then one batched pass over the gaps between points.
    """
    _check_eps(eps)
    cfg = cfg or DEFAULT_CONFIG
    u = np.asarray(u, dtype=float)
    uu, inverse = np.unique(u, return_inverse=True)
    sign = 1.0 if side == "lower" else -1.0
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")

    def breaks_fn(lo, hi):
        return core.breakpoints(e, lo, hi)

    anchor = uu[0] if side == "lower" else uu[-1]
    tail = integrate_tail(
        lambda v: np.exp(sign * eps * (v - anchor)) * core.evaluate(e, v, cfg),
        anchor, -sign, cfg, breaks_fn,
    ).value
    out = np.empty(uu.size)
    if uu.size == 1:
        out[0] = tail
        return out[inverse.reshape(u.shape)]

    if side == "lower":
        lo, hi, ref = uu[:-1], uu[1:], uu[1:]
    else:
        lo, hi, ref = uu[:-1], uu[1:], uu[:-1]

    def g(v, idx):
        return np.exp(sign * eps * (v - ref[idx])) * core.evaluate(e, v, cfg)

    gaps, _, _ = integrate_segments(
        g, lo, hi, core.breakpoints(e, uu[0], uu[-1]), cfg, with_index=True
    )
    decay = np.exp(-eps * np.diff(uu))
    if side == "lower":
        out[0] = tail
        for k in range(1, uu.size):
            out[k] = out[k - 1] * decay[k - 1] + gaps[k - 1]
    else:
        out[-1] = tail
        for k in range(uu.size - 2, -1, -1):
            out[k] = out[k + 1] * decay[k] + gaps[k]
    return out[inverse.reshape(u.shape)]


def leff_lower(e, eps, t_log, cfg=None):
    """``int_0^t s**(eps-1) b(s) ds`` at ``t = exp(t_log)``."""
    _check_eps(eps)
    cfg = cfg or DEFAULT_CONFIG
    res = integrate_tail(
        lambda v: np.exp(eps * (v - t_log)) * core.evaluate(e, v, cfg),
        t_log, -1, cfg, lambda lo, hi: core.breakpoints(e, lo, hi),
    )
    scale = math.exp(eps * t_log)
    return QuadResult(res.value * scale, res.err_est * scale, res.evaluations, res.blocks)


def leff_upper(e, eps, t_log, cfg=None):
    """``int_t^inf s**(-eps-1) b(s) ds`` at ``t = exp(t_log)``."""
    _check_eps(eps)
    cfg = cfg or DEFAULT_CONFIG
    res = integrate_tail(
        lambda v: np.exp(-eps * (v - t_log)) * core.evaluate(e, v, cfg),
        t_log, 1, cfg, lambda lo, hi: core.breakpoints(e, lo, hi),
    )
    scale = math.exp(-eps * t_log)
    return QuadResult(res.value * scale, res.err_est * scale, res.evaluations, res.blocks)


def _weighted_log(e, weight, cfg):
    def logf(v):
        return weight * v + np.log(core.evaluate(e, v, cfg))
    return logf


def running_sup_lower(e, eps, t_log, cfg=None):
    """``sup_{0 < s < t} s**eps b(s)`` at ``t = exp(t_log)``."""
    _check_eps(eps)
    cfg = cfg or DEFAULT_CONFIG
    best = tail_sup(_weighted_log(e, eps, cfg), t_log, -1, cfg,
                    lambda lo, hi: core.breakpoints(e, lo, hi))
    return math.exp(best)


def running_sup_upper(e, eps, t_log, cfg=None):
    """``sup_{s > t} s**-eps b(s)`` at ``t = exp(t_log)``."""
    _check_eps(eps)
    cfg = cfg or DEFAULT_CONFIG
    best = tail_sup(_weighted_log(e, -eps, cfg), t_log, 1, cfg,
                    lambda lo, hi: core.breakpoints(e, lo, hi))
    return math.exp(best)


# -- cached pieces used by the integral nodes of ``core`` -------------------

@lru_cache(maxsize=4096)
def node_tail_integral(node, anchor, direction, cfg):
    """Half-line integral of ``node.child`` evaluated in log coordinates (memoised)."""
    child = node.child
    return integrate_tail(
        lambda v: core.evaluate(child, v, cfg), anchor, direction, cfg,
        lambda lo, hi: core.breakpoints(child, lo, hi),
    ).value


@lru_cache(maxsize=4096)
def node_tail_sup(node, anchor, direction, cfg):
    """Half-line log-supremum of ``node.child`` (memoised)."""
    child = node.child
    return tail_sup(
        lambda v: np.log(core.evaluate(child, v, cfg)), anchor, direction, cfg,
        lambda lo, hi: core.breakpoints(child, lo, hi),
    )
