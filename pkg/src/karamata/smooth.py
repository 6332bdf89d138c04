"""Smooth equivalents of slowly varying functions.

The pipeline splits ``b`` into a near-infinity half ``truncr(b)`` and a
near-zero half ``truncr(recip(b))``, both equal to 1 on (0, 1].  Each half is
extended to the real line by its value at 0, convolved with a bump kernel of
radius 1 and rescaled so that it equals 1 at 0.  The two smooth halves are then
glued at ``t = 1``::

    c(t) = c2(1/t - 1)   for t < 1
    c(1) = 1
    c(t) = c1(t - 1)     for t > 1

Because each smoothed half is constant on (-inf, 0], every derivative of
``c`` vanishes at the glue point.

Derivatives come from ``int (f(t-s) - f(t)) eta^(n)(s) ds``.  Far from the
glue point the n-th derivative is orders of magnitude smaller than the
integrand, so its absolute accuracy is bounded by the rounding of ``f``;
``error(n, t)`` reports that bound alongside every value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core, quadrature
from .core import GridSpec, LimitKind
from .errors import CoefficientOverflow, GlueMismatch, PreconditionFailed
from .quadrature import DEFAULT_CONFIG
from .verify import DEFAULT_CEILING, compare, summarize, RatioFamily

# tolerance for the convolution integrals; tighter settings drown in
# rounding next to square-root kinks such as expsqrtlog at t = 1
MOLLIFY_REL_TOL = 1e-11
KERNEL_REL_TOL = 1e-13
EVAL_NOISE = 1e-13
FD_STEP = 1e-4
FD_REL_TOL = 1e-6
FD_POINTS = (0.0, 0.25, -0.25, 0.5, -0.5, 0.75, -0.75)
_COEFF_LIMIT = 1e300


# -- kernel --------------------------------------------------------------------

def _poly_eval(coeffs, x):
    out = np.zeros_like(x)
    for c in reversed(coeffs):
        out = out * x + float(c)
    return out


def _next_poly(p, n):
    """Coefficients of P_{n+1} from P_n (ascending powers, exact integers).

    P_{n+1} = P_n' (1-x^2)^2 + 4n x P_n (1-x^2) - 2x P_n
    """
    out = [0] * (len(p) + 3)
    for k, c in enumerate(p):
        if k:
            # k c x^(k-1) (1 - 2x^2 + x^4)
            out[k - 1] += k * c
            out[k + 1] -= 2 * k * c
            out[k + 3] += k * c
        # 4n c x^(k+1) (1 - x^2) - 2 c x^(k+1)
        out[k + 1] += (4 * n - 2) * c
        out[k + 3] -= 4 * n * c
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


@dataclass(frozen=True)
class MollifierKernel:
    """The normalized bump ``N exp(-1/(1-x^2))`` on (-1, 1) and its derivatives.

    ``polys[n]`` holds the integer coefficients of ``P_n`` with
    ``eta^(n)(x) = N P_n(x) (1-x^2)^(-2n) exp(-1/(1-x^2))``.
    """

    norm: float
    n_max: int
    polys: tuple
    base_integral: float
    mass: float
    l1_norms: tuple = ()

    def __call__(self, x):
        return self.derivative(0, x)

    def derivative(self, n, x):
        if not 0 <= n <= self.n_max:
            raise ValueError(f"kernel built for orders up to {self.n_max}, got {n}")
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = np.abs(x) < 1.0
        xi = x[inside]
        q = 1.0 - xi * xi
        p = _poly_eval(self.polys[n], xi)
        with np.errstate(divide="ignore"):
            # log form keeps (1-x^2)^(-2n) from overflowing before the
            # exponential factor kills it near the edges
            mag = np.log(np.abs(p)) - 2 * n * np.log(q) - 1.0 / q
        out[inside] = self.norm * np.sign(p) * np.exp(mag)
        return out


def kernel_build(n_max=4, cfg=None):
    """Build the bump kernel with derivative tables up to order ``n_max``."""
    cfg = cfg or DEFAULT_CONFIG
    if int(n_max) != n_max or n_max < 0:
        raise ValueError(f"n_max must be a non-negative integer, got {n_max!r}")
    n_max = int(n_max)
    polys = [(1,)]
    for n in range(n_max):
        nxt = _next_poly(polys[-1], n)
        if max(abs(c) for c in nxt) > _COEFF_LIMIT:
            raise CoefficientOverflow(
                f"kernel derivative coefficients overflow at order {n + 1}"
            )
        polys.append(nxt)

    base = quadrature.integrate(
        _bump, -1.0, 1.0, (0.0,), cfg, rel_tol=KERNEL_REL_TOL, abs_tol=1e-16
    ).value
    k = MollifierKernel(1.0 / base, n_max, tuple(polys), base, 1.0)
    mass = quadrature.integrate(
        k, -1.0, 1.0, (0.0,), cfg, rel_tol=KERNEL_REL_TOL, abs_tol=1e-16
    ).value
    l1 = tuple(
        quadrature.integrate(
            lambda x, n=n: np.abs(k.derivative(n, x)), -1.0, 1.0, (0.0,), cfg,
            rel_tol=1e-4, abs_tol=1e-6,
        ).value
        for n in range(n_max + 1)
    )
    k = MollifierKernel(k.norm, n_max, k.polys, base, mass, l1)
    _validate(k)
    return k


def kernel_fd_errors(kernel, h=FD_STEP, points=FD_POINTS):
    """Relative gap between each ``eta^(n)`` and a central difference of ``eta^(n-1)``.

    The five-point stencil is used: at ``h = 1e-4`` the three-point one
    carries a truncation error above 1e-6 for the fourth derivative.  Returns ``{(n, x): error}``; exact agreement
    (including both zero) counts as 0.
    """
    x = np.asarray(points, dtype=float)
    out = {}
    for n in range(1, kernel.n_max + 1):
        exact = kernel.derivative(n, x)
        d = lambda j: kernel.derivative(n - 1, x + j * h)
        fd = (8 * (d(1) - d(-1)) - (d(2) - d(-2))) / (12 * h)
        for xi, a, b in zip(points, exact, fd):
            gap = abs(a - b)
            out[(n, xi)] = 0.0 if gap == 0 else gap / max(abs(a), abs(b))
    return out


def _validate(kernel):
    bad = {k: v for k, v in kernel_fd_errors(kernel).items() if v > FD_REL_TOL}
    if bad:
        (n, x), err = max(bad.items(), key=lambda kv: kv[1])
        raise ArithmeticError(
            f"kernel derivative {n} disagrees with finite differences at x={x} "
            f"(relative error {err:.3g})"
        )


# -- extension and decomposition ---------------------------------------------

@dataclass(frozen=True)
class ExtendedFunction:
    """``expr`` on (0, inf) and its limit at 0 on (-inf, 0].

    ``constant_until`` is a point up to which the function is known to equal
    ``floor``; mollification skips quadrature in windows below it.
    """

    expr: core.Expr
    floor: float
    constant_until: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.floor)
        pos = x > 0
        if pos.any():
            out[pos] = core.evaluate(self.expr, np.log(x[pos]))
        return out

    def breaks(self, lo, hi):
        """Non-smooth points inside ``(lo, hi)``."""
        pts = [0.0] if lo < 0.0 < hi else []
        if hi > 0:
            u_lo = math.log(max(lo, 1e-300))
            u_hi = math.log(hi)
            pts += [math.exp(p) for p in core.breakpoints(self.expr, u_lo, u_hi)]
        return sorted(p for p in pts if lo < p < hi)


def extend_at_zero(e, cfg=None):
    """Extend ``e`` to the real line by its limit at 0+."""
    lim = core.limit_at_zero(e, cfg)
    if lim.kind is not LimitKind.FINITE or not lim.value > 0:
        raise PreconditionFailed(
            f"extension needs a finite positive limit at 0, got {lim.kind.value}"
        )
    match e:
        case core.Const():
            until = math.inf
        case core.TruncRight(child=core.Const(k=1.0)):
            until = math.inf
        case core.TruncRight():
            until = 1.0
        case _:
            until = 0.0
    return ExtendedFunction(e, lim.value, until)


def decompose(e):
    """Split ``e`` into its near-infinity and near-zero halves.

    Both halves equal 1 on (0, 1]; the first is ``e`` on (1, inf) and the
    second is ``t -> e(1/t)`` on (1, inf).
    """
    return core.TruncRight(e), core.TruncRight(core.RecipArg(e))


def certify_decomposition(e, grid=None, cfg=None, ceiling=DEFAULT_CEILING):
    """Ratios of each half against ``e`` on the side where it stands in for it.

    ``c1(t) / e(t)`` is sampled for ``t > 1`` and ``c2(1/t) / e(t)`` for
    ``t < 1``.  Both are identically 1 by construction; the report makes that
    checkable on the same footing as every other equivalence.
    """
    grid = grid or GridSpec.default()
    u = grid.points()
    c1, c2 = decompose(e)
    b = core.evaluate(e, u, cfg)
    right, left = u > 0, u < 0
    fams = [
        RatioFamily("c1/b", u[right].tolist(),
                    (core.evaluate(c1, u[right], cfg) / b[right]).tolist()),
        RatioFamily("c2(1/t)/b", u[left].tolist(),
                    (core.evaluate(c2, -u[left], cfg) / b[left]).tolist()),
    ]
    return summarize(grid, fams, ceiling)


# -- smooth evaluators ---------------------------------------------------------

class SmoothEvaluator:
    """A smooth positive function with derivatives up to ``n_max``.

    ``report`` holds the equivalence report against the source expression
    once the pipeline has attached it.
    """

    n_max = 0
    report = None

    def derivative(self, n, t):
        raise NotImplementedError

    def error(self, n, t):
        """Absolute error bound for ``derivative(n, t)``."""
        raise NotImplementedError

    def value(self, t):
        return self.derivative(0, t)

    def __call__(self, t):
        return self.value(t)

    def values(self, ts, n=0):
        return np.array([self.derivative(n, float(t)) for t in np.ravel(ts)])

    def _check_order(self, n):
        if not 0 <= n <= self.n_max:
            raise ValueError(f"derivative order must be in [0, {self.n_max}], got {n}")


class Mollified(SmoothEvaluator):
    """``t -> scale * int_{-1}^{1} f(t-s) eta(s) ds`` and its derivatives."""

    def __init__(self, f, kernel, cfg=None, scale=1.0):
        self.f = f
        self.kernel = kernel
        self.cfg = cfg or DEFAULT_CONFIG
        self.scale = scale
        self.n_max = kernel.n_max
        self._cache = {}

    def normalized(self):
        """Copy rescaled so that its value at 0 is 1."""
        return Mollified(self.f, self.kernel, self.cfg, self.scale / self.value(0.0))

    def derivative(self, n, t):
        return self._lookup(n, t)[0]

    def error(self, n, t):
        return self._lookup(n, t)[1]

    def _lookup(self, n, t):
        self._check_order(n)
        t = float(t)
        key = (n, t)
        hit = self._cache.get(key)
        if hit is None:
            value, err = self._raw(n, t)
            hit = self._cache[key] = (self.scale * value, abs(self.scale) * err)
        return hit

    def _raw(self, n, t):
        f, k = self.f, self.kernel
        if t + 1.0 <= f.constant_until:
            # the whole window sits where f is constant
            return (f.floor * k.mass, 0.0) if n == 0 else (0.0, 0.0)
        splits = [t - x for x in f.breaks(t - 1.0, t + 1.0)]
        lo, mid, hi = f(np.array([t - 1.0, t, t + 1.0]))
        if n == 0:
            g = lambda s: f(t - s) * k.derivative(0, s)
            size = max(lo, mid, hi)
        else:
            # eta^(n) integrates to 0, so subtracting f(t) removes the
            # cancellation between its positive and negative lobes
            g = lambda s: (f(t - s) - mid) * k.derivative(n, s)
            size = max(abs(lo - mid), abs(hi - mid))
        # values of f carry relative noise of order EVAL_NOISE, which bounds
        # how finely a small derivative can be resolved
        noise = EVAL_NOISE * max(lo, mid, hi) * k.l1_norms[n]
        res = quadrature.integrate(
            g, -1.0, 1.0, splits + [0.0], self.cfg,
            rel_tol=MOLLIFY_REL_TOL, abs_tol=max(MOLLIFY_REL_TOL * size, noise),
        )
        return res.value, max(res.err_est, noise)


def mollify(f, kernel, cfg=None):
    """Convolve an extended function with the kernel."""
    return Mollified(f, kernel, cfg)


def _bell(n, k, xs, memo=None):
    """Partial Bell polynomial ``B_{n,k}(xs[1], xs[2], ...)``."""
    memo = {} if memo is None else memo
    if (n, k) in memo:
        return memo[(n, k)]
    if n == 0 and k == 0:
        out = 1.0
    elif n == 0 or k == 0:
        out = 0.0
    else:
        out = sum(
            math.comb(n - 1, i - 1) * xs[i] * _bell(n - i, k - 1, xs, memo)
            for i in range(1, n - k + 2)
        )
    memo[(n, k)] = out
    return out


class Glued(SmoothEvaluator):
    """``c2(1/t - 1)`` below 1, exactly 1 at 1, ``c1(t - 1)`` above 1."""

    def __init__(self, c1, c2):
        self.c1, self.c2 = c1, c2
        self.n_max = min(c1.n_max, c2.n_max)

    def derivative(self, n, t):
        return self._chain(n, t, lambda c, k, x: c.derivative(k, x), lambda w: w)

    def error(self, n, t):
        if float(t) == 1.0 and n == 0:
            return 0.0
        return self._chain(n, t, lambda c, k, x: c.error(k, x), abs)

    def _chain(self, n, t, get, weight):
        self._check_order(n)
        t = float(t)
        if not t > 0:
            raise ValueError(f"t must be positive, got {t!r}")
        if t > 1.0:
            return get(self.c1, n, t - 1.0)
        if t == 1.0:
            return 1.0 if n == 0 else get(self.c1, n, 0.0)
        x = 1.0 / t - 1.0
        if n == 0:
            return get(self.c2, 0, x)
        # derivatives of t -> 1/t - 1
        inner = [0.0] + [(-1) ** j * math.factorial(j) * t ** (-j - 1) for j in range(1, n + 1)]
        memo = {}
        return sum(get(self.c2, k, x) * weight(_bell(n, k, inner, memo))
                   for k in range(1, n + 1))


def recombine(c1, c2, cfg=None):
    """Glue two halves that equal 1, with vanishing derivatives, at 0."""
    cfg = cfg or DEFAULT_CONFIG
    for name, c in (("c1", c1), ("c2", c2)):
        v = c.derivative(0, 0.0)
        if abs(v - 1.0) > cfg.limit_tol:
            raise GlueMismatch(f"{name}(0) = {v!r}, expected 1")
        for n in range(1, c.n_max + 1):
            d = c.derivative(n, 0.0)
            if abs(d) > cfg.limit_tol:
                raise GlueMismatch(f"{name} derivative {n} at 0 is {d!r}, expected 0")
    return Glued(c1, c2)


def smooth_equivalent(e, cfg=None, grid=None, kernel=None, n_max=4, ceiling=DEFAULT_CEILING):
    """Smooth function equivalent to ``e``, with its equivalence report attached.

    Returns ``(c, report)``; ``c.report`` is the same report.
    """
    cfg = cfg or DEFAULT_CONFIG
    grid = grid or GridSpec.default()
    kernel = kernel or kernel_build(n_max, cfg)
    halves = [
        mollify(extend_at_zero(h, cfg), kernel, cfg).normalized() for h in decompose(e)
    ]
    c = recombine(*halves, cfg)
    report = compare(lambda u: c.values(np.exp(u)), e, grid, ceiling, cfg=cfg)
    c.report = report
    return c, report


# -- exploratory derivative diagnostic -----------------------------------------

@dataclass
class DerivativeDiagnostic:
    """Samples of ``b0(t) = t c'(t)`` with raw LEFF-style ratios.

    Exploratory: no verdict is drawn from these numbers.
    """

    grid: GridSpec
    u: list
    b0: list
    identically_zero: bool
    sign_changes: int
    orientation: str
    leff_ratios: dict = field(default_factory=dict)
    reference_ratios: list | None = None
    label: str = "EXPLORATORY"


def _sign_changes(x):
    s = np.sign(x[x != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _sampled_leff(u, b, eps):
    """Discrete ``int_{u0}^{u} exp(eps (v-u)) b(v) dv / b(u)`` by trapezoids.

    The integral starts at the first sample, so ratios near it are
    truncated; they are reported as they come.
    """
    w = b * np.exp(eps * (u - u[-1]))
    acc = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(u))])
    return acc / w


def derivative_ratio_diagnostic(c, grid=None, cfg=None, reference=None, eps_list=None):
    """Sample ``b0 = t c'(t)`` and look at it through the LEFF lens.

    ``reference``, if given, is an expression compared pointwise against
    ``b0``.  Sign changes are counted rather than rejected; the LEFF ratios
    use the longest run of samples where ``b0`` has one strict sign, with the
    sign flipped when that run is negative.
    """
    cfg = cfg or DEFAULT_CONFIG
    grid = grid or GridSpec.default()
    eps_list = cfg.eps_list if eps_list is None else eps_list
    u = grid.points()
    t = np.exp(u)
    b0 = t * c.values(t, n=1)
    scale = np.max(np.abs(c.values(t)))
    zero = bool(np.all(np.abs(b0) <= 1e-12 * max(scale, 1.0)))
    diag = DerivativeDiagnostic(grid, u.tolist(), b0.tolist(), zero, _sign_changes(b0), "none")
    if reference is not None:
        diag.reference_ratios = (b0 / core.evaluate(reference, u, cfg)).tolist()
    if zero:
        return diag

    # longest run of one strict sign
    sign = np.sign(b0)
    best, start = (0, 0, 0), 0
    for i in range(1, len(sign) + 1):
        if i == len(sign) or sign[i] != sign[start]:
            if sign[start] != 0 and i - start > best[1] - best[0]:
                best = (start, i, sign[start])
            start = i
    lo, hi, sgn = best
    if hi - lo < 2:
        return diag
    diag.orientation = "increasing" if sgn > 0 else "decreasing"
    uu, bb = u[lo:hi], sgn * b0[lo:hi]
    for eps in eps_list:
        lower = _sampled_leff(uu, bb, eps)
        upper = _sampled_leff(-uu[::-1], bb[::-1], eps)[::-1]
        diag.leff_ratios[eps] = {
            "u": uu.tolist(),
            "lower": (eps * lower).tolist(),
            "upper": (eps * upper).tolist(),
        }
    return diag
