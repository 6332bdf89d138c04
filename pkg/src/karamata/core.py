"""Expressions for positive functions on (0, inf) and their evaluation.

An expression is a tree of frozen dataclasses.  Leaves are the built-in
catalog (constants, ``1+|log t|``, ``1+log(1+|log t|)``, ``exp(sqrt|log t|)``)
and inner nodes are the closure operations of slow variation: powers, sums,
products, quotients, ``t -> 1/t``, truncation to 1 on one side of ``t = 1``,
argument shifts, and the four tilde/hat constructions.

All evaluation happens in the variable ``u = log t``.  The catalog spans
hundreds of decades, so working in ``t`` would overflow long before the
functions themselves do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import quadrature
from .errors import PreconditionFailed

LN10 = math.log(10.0)


class Expr:
    """Base class of every expression node."""

    def __str__(self):
        from .dsl import to_text
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    k: float = 1.0

    def __post_init__(self):
        k = float(self.k)
        if not (k > 0 and math.isfinite(k)):
            raise ValueError(f"constant must be positive and finite, got {self.k!r}")
        object.__setattr__(self, "k", k)


@dataclass(frozen=True)
class LogP(Expr):
    """``t -> 1 + |log t|``."""


@dataclass(frozen=True)
class LogLogP(Expr):
    """``t -> 1 + log(1 + |log t|)``."""


@dataclass(frozen=True)
class ExpSqrtLog(Expr):
    """``t -> exp(sqrt(|log t|))``."""


def _real(x, what):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{what} must be finite, got {x!r}")
    return x


@dataclass(frozen=True)
class Pow(Expr):
    child: Expr
    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", _real(self.r, "exponent"))


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class RecipArg(Expr):
    """``t -> b(1/t)``."""

    child: Expr


@dataclass(frozen=True)
class TruncLeft(Expr):
    """``b`` on (0, 1] and 1 on (1, inf)."""

    child: Expr


@dataclass(frozen=True)
class TruncRight(Expr):
    """1 on (0, 1] and ``b`` on (1, inf)."""

    child: Expr


@dataclass(frozen=True)
class ShiftArg(Expr):
    """``t -> b(t - t1)``, with ``b`` extended by its limit at 0 on (-inf, 0].

    The limit is computed once at construction; a child without a finite
    positive limit at zero is rejected.
    """

    child: Expr
    t1: float
    floor: float = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "t1", _real(self.t1, "shift"))
        if self.floor is None:
            lim = limit_at_zero(self.child)
            if lim.kind is not LimitKind.FINITE:
                raise PreconditionFailed(
                    f"shift needs a finite positive limit at 0, got {lim.kind.value}"
                )
            object.__setattr__(self, "floor", lim.value)


@dataclass(frozen=True)
class Tilde(Expr):
    """``t -> int_0^t b(s) ds/s``."""

    child: Expr


@dataclass(frozen=True)
class Hat(Expr):
    """``t -> int_t^inf b(s) ds/s``."""

    child: Expr


@dataclass(frozen=True)
class TildeSup(Expr):
    """``t -> sup_{0<s<t} b(s)``."""

    child: Expr


@dataclass(frozen=True)
class HatSup(Expr):
    """``t -> sup_{s>t} b(s)``."""

    child: Expr


@dataclass(frozen=True)
class Witness(Expr):
    """Monotone LEFF representative of ``t**eps * b(t)``.

    ``eps > 0`` gives ``int_0^t s**(eps-1) b(s) ds`` (non-decreasing) and
    ``eps < 0`` gives ``int_t^inf s**(eps-1) b(s) ds`` (non-increasing).
    """

    child: Expr
    eps: float

    def __post_init__(self):
        eps = _real(self.eps, "witness exponent")
        if eps == 0:
            raise ValueError("witness exponent must be non-zero")
        object.__setattr__(self, "eps", eps)


UNARY = (Pow, RecipArg, TruncLeft, TruncRight, ShiftArg, Tilde, Hat, TildeSup, HatSup, Witness)
BINARY = (Add, Mul, Div)
INTEGRAL_NODES = (Tilde, Hat, TildeSup, HatSup, Witness)


# -- evaluation --------------------------------------------------------------

def evaluate(e, u, cfg=None):
    """Vectorised ``b(exp(u))``.

    Raises ``DivergentValue`` when an integral or supremum node is infinite.
    """
    cfg = cfg or quadrature.DEFAULT_CONFIG
    u = np.asarray(u, dtype=float)
    return _eval(e, u.ravel(), cfg).reshape(u.shape)


def eval_log(e, u, cfg=None):
    """``b(exp(u))`` for a single finite ``u``."""
    u = float(u)
    if not math.isfinite(u):
        raise ValueError(f"u must be finite, got {u!r}")
    return float(evaluate(e, np.array([u]), cfg)[0])


def _masked(e, u, mask, outside, cfg):
    out = np.full(u.shape, outside, dtype=float)
    if mask.any():
        out[mask] = _eval(e, u[mask], cfg)
    return out


def _eval(e, u, cfg):
    match e:
        case Const(k=k):
            return np.full(u.shape, k)
        case LogP():
            return 1.0 + np.abs(u)
        case LogLogP():
            return 1.0 + np.log1p(np.abs(u))
        case ExpSqrtLog():
            return np.exp(np.sqrt(np.abs(u)))
        case Pow(child=c, r=r):
            return _eval(c, u, cfg) ** r
        case Add(left=a, right=b):
            return _eval(a, u, cfg) + _eval(b, u, cfg)
        case Mul(left=a, right=b):
            return _eval(a, u, cfg) * _eval(b, u, cfg)
        case Div(left=a, right=b):
            return _eval(a, u, cfg) / _eval(b, u, cfg)
        case RecipArg(child=c):
            return _eval(c, -u, cfg)
        case TruncRight(child=c):
            return _masked(c, u, u > 0, 1.0, cfg)
        case TruncLeft(child=c):
            return _masked(c, u, u <= 0, 1.0, cfg)
        case ShiftArg(child=c, t1=t1, floor=floor):
            if t1 == 0.0:
                return _eval(c, u, cfg)
            with np.errstate(over="ignore"):
                w = t1 * np.exp(-u)
            inside = w < 1.0
            shifted = np.where(inside, u + np.log1p(-np.where(inside, w, 0.0)), 0.0)
            out = np.full(u.shape, floor)
            if inside.any():
                out[inside] = _eval(c, shifted[inside], cfg)
            return out
        case Tilde() | Hat():
            return _integral_node(e, u, cfg)
        case TildeSup() | HatSup():
            return _sup_node(e, u, cfg)
        case Witness(child=c, eps=eps):
            side = "lower" if eps > 0 else "upper"
            scaled = quadrature.leff_sweep(c, abs(eps), u, side, cfg)
            return np.exp(eps * u) * scaled
    raise TypeError(f"not an expression node: {e!r}")


def _lattice_anchor(uu, lower):
    # half-line pieces are cached per (node, anchor); snapping the anchor to
    # an integer lets repeated batches share them
    return float(math.floor(uu[0]) if lower else math.ceil(uu[-1]))


def _integral_node(node, u, cfg):
    if u.size == 0:
        return np.empty(0)
    uu, inverse = np.unique(u, return_inverse=True)
    lower = isinstance(node, Tilde)
    anchor = _lattice_anchor(uu, lower)
    tail = quadrature.node_tail_integral(node, anchor, -1 if lower else 1, cfg)
    edges = np.concatenate([[anchor], uu]) if lower else np.concatenate([uu, [anchor]])
    gaps, _, _ = quadrature.integrate_segments(
        lambda v: _eval(node.child, v, cfg), edges[:-1], edges[1:],
        breakpoints(node.child, edges[0], edges[-1]), cfg,
    )
    if lower:
        vals = tail + np.cumsum(gaps)
    else:
        vals = tail + np.cumsum(gaps[::-1])[::-1]
    return vals[inverse]


def _sup_node(node, u, cfg):
    if u.size == 0:
        return np.empty(0)
    uu, inverse = np.unique(u, return_inverse=True)
    lower = isinstance(node, TildeSup)
    anchor = _lattice_anchor(uu, lower)
    best = quadrature.node_tail_sup(node, anchor, -1 if lower else 1, cfg)
    edges = np.concatenate([[anchor], uu]) if lower else np.concatenate([uu, [anchor]])
    logf = lambda v: np.log(_eval(node.child, v, cfg))
    seg = np.empty(uu.size)
    for k in range(uu.size):
        lo, hi = edges[k], edges[k + 1]
        if hi <= lo:
            seg[k] = -math.inf
            continue
        seg[k] = quadrature.interval_sup(
            logf, lo, hi, breakpoints(node.child, lo, hi),
            n=9, open_end="hi" if lower else "lo",
        )
    if lower:
        logs = np.maximum.accumulate(np.maximum(seg, best))
    else:
        logs = np.maximum.accumulate(np.maximum(seg, best)[::-1])[::-1]
    return np.exp(logs)[inverse]


# -- breakpoints -------------------------------------------------------------

def breakpoints(e, u_lo, u_hi):
    """Sorted points of ``[u_lo, u_hi]`` where ``e`` may fail to be smooth in ``u``."""
    if u_lo > u_hi:
        raise ValueError("breakpoints requires u_lo <= u_hi")
    pts = _breaks(e, u_lo, u_hi)
    return sorted(p for p in set(pts) if u_lo <= p <= u_hi)


def _breaks(e, lo, hi):
    match e:
        case Const():
            return []
        case LogP() | LogLogP() | ExpSqrtLog():
            return [0.0]
        case Pow(child=c) | Witness(child=c):
            return _breaks(c, lo, hi)
        case Add(left=a, right=b) | Mul(left=a, right=b) | Div(left=a, right=b):
            return _breaks(a, lo, hi) + _breaks(b, lo, hi)
        case RecipArg(child=c):
            return [-p for p in _breaks(c, -hi, -lo)]
        case TruncLeft(child=c) | TruncRight(child=c):
            return [0.0] + _breaks(c, lo, hi)
        case ShiftArg(child=c, t1=t1):
            if t1 == 0.0:
                return _breaks(c, lo, hi)
            out = [math.log(t1)] if t1 > 0 else []
            # child breakpoints are needed over the preimage of [lo, hi]
            c_lo = _shift_preimage(lo, t1, -math.inf)
            c_hi = _shift_preimage(hi, t1, math.inf)
            for p in _breaks(c, c_lo, c_hi):
                w = t1 * math.exp(-p) if p > -700 else math.copysign(math.inf, t1)
                if w > -1.0:
                    out.append(p + math.log1p(w))
            return out
        case Tilde(child=c) | Hat(child=c) | TildeSup(child=c) | HatSup(child=c):
            return _breaks(c, lo, hi)
    raise TypeError(f"not an expression node: {e!r}")


def _shift_preimage(u, t1, default):
    """``log(exp(u) - t1)``, or ``default`` when that is not a positive number."""
    if not math.isfinite(u):
        return u
    w = t1 * math.exp(-u) if u > -700 else math.copysign(math.inf, t1)
    if w >= 1.0:
        return default
    return u + math.log1p(-w)


# -- limit at zero -----------------------------------------------------------

class LimitKind(Enum):
    FINITE = "finite"
    DIVERGES = "diverges_to_infinity"
    DECAYS = "decays_to_zero"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Limit:
    kind: LimitKind
    value: float = None


LIMIT_SCHEDULE = -10.0 * np.arange(1, 61)


def limit_at_zero(e, cfg=None):
    """Classify ``lim_{t->0+} b(t)`` from samples at ``u = -10, -20, ..., -600``.

    Finite when the second half of the schedule is Cauchy at ``limit_tol``
    (relative); the reported value is the last sample.  Otherwise the log of
    the samples is inspected over the same range: a monotone trend whose
    increments do not shrink by more than a quarter between ``u = -150 ->
    -300`` and ``u = -300 -> -600`` is classified as escape to infinity or
    zero.  Anything else is undetermined.
    """
    from .errors import DivergentValue

    cfg = cfg or quadrature.DEFAULT_CONFIG
    try:
        vals = evaluate(e, LIMIT_SCHEDULE, cfg)
    except DivergentValue:
        return Limit(LimitKind.DIVERGES)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        return Limit(LimitKind.UNDETERMINED)
    late = vals[29:]
    steps = np.abs(np.diff(late))
    if np.all(steps <= cfg.limit_tol * np.abs(late[1:])):
        return Limit(LimitKind.FINITE, float(vals[-1]))
    logs = np.log(late)
    d = np.diff(logs)
    l150, l300, l600 = np.log(vals[[14, 29, 59]])
    first, second = l300 - l150, l600 - l300
    if np.all(d > 0) and second >= 0.75 * first > 0:
        return Limit(LimitKind.DIVERGES)
    if np.all(d < 0) and second <= 0.75 * first < 0:
        return Limit(LimitKind.DECAYS)
    return Limit(LimitKind.UNDETERMINED)


# -- grids -------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Log-uniform grid in ``u = log t`` anchored at decades of ``t``."""

    u_min: float
    u_max: float
    points_per_decade: int = 16

    def __post_init__(self):
        if not (math.isfinite(self.u_min) and math.isfinite(self.u_max)):
            raise ValueError("grid endpoints must be finite")
        if not self.u_min < self.u_max:
            raise ValueError("grid requires u_min < u_max")
        if int(self.points_per_decade) != self.points_per_decade or self.points_per_decade < 1:
            raise ValueError("points_per_decade must be a positive integer")
        object.__setattr__(self, "points_per_decade", int(self.points_per_decade))

    @classmethod
    def from_t(cls, t_min, t_max, points_per_decade=16):
        if not (t_min > 0 and t_max > 0):
            raise ValueError("grid endpoints in t must be positive")
        return cls(math.log(t_min), math.log(t_max), points_per_decade)

    @classmethod
    def default(cls):
        return cls.from_t(1e-8, 1e8, 16)

    def points(self):
        """Sorted, deduplicated ``u`` values; ``t = 10**(k/ppd)`` plus both ends."""
        ppd = self.points_per_decade
        k_lo = math.ceil(self.u_min / LN10 * ppd - 1e-9)
        k_hi = math.floor(self.u_max / LN10 * ppd + 1e-9)
        ks = np.arange(k_lo, k_hi + 1)
        lattice = ks * LN10 / ppd
        # lattice points that merely round onto an endpoint yield to it
        inner = lattice[(lattice > self.u_min + 1e-9) & (lattice < self.u_max - 1e-9)]
        return np.concatenate([[self.u_min], inner, [self.u_max]])

    def to_dict(self):
        return {"u_min": self.u_min, "u_max": self.u_max,
                "points_per_decade": self.points_per_decade}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["u_min"]), float(d["u_max"]), int(d["points_per_decade"]))


CATALOG = {
    "one": Const(1.0),
    "logp": LogP(),
    "loglogp": LogLogP(),
    "expsqrtlog": ExpSqrtLog(),
}
