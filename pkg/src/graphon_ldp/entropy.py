"""Bernoulli relative entropy and the profile psi_p(x) = h_p(x**(1/d)).

The curvature of psi_p has a closed-form sign.  With y = x**(1/d),

    psi''(x) = y / (d x)**2 * [1/(1-y) - (d-1) (logit y - logit p)],

so all convexity questions reduce to the bracketed factor, which is
minimised at y = (d-1)/d.  Below the threshold p_zero(d) that minimum is
negative and psi has exactly two inflection points; the convex minorant
then replaces the concave stretch by the lower common tangent whose touch
points (a, b) form the *tangency window*.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .errors import DomainError

NEWTON_MAX_ITER = 200
NEWTON_TOL = 1e-11
BISECT_TOL = 1e-12
ON_MINORANT_TOL = 1e-10


def _check_p(p):
    if not np.all((np.asarray(p) > 0.0) & (np.asarray(p) < 1.0)):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")


def bernoulli_kl(p, u):
    """h_p(u) = u log(u/p) + (1-u) log((1-u)/(1-p)), vectorised (broadcasting).

    Uses 0 log 0 = 0, so h_p(0) = log(1/(1-p)) and h_p(1) = log(1/p).
    ``p`` must be in the open interval; Zero/One blocks are handled by masks.
    """
    _check_p(p)
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)):
        raise DomainError("u must lie in [0, 1]")
    out = special.rel_entr(u, p) + special.rel_entr(1.0 - u, 1.0 - p)
    return float(out) if out.ndim == 0 else out


def _logit(y):
    with np.errstate(divide="ignore"):
        return np.log(y) - np.log1p(-y)


def _curvature_factor(p, d, y):
    """Bracketed factor of psi''; same sign as psi'' for y in (0, 1)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / (1.0 - y) - (d - 1) * (_logit(y) - _logit(p))


def psi_eval(p, d, x):
    """Value, first and second derivative of psi_p(x) = h_p(x**(1/d)).

    Vectorised over ``x``.  At the endpoints the derivatives are unbounded and
    reported as one-sided limits: (-inf, +inf) at x = 0 and (+inf, +inf) at x = 1.
    """
    _check_p(p)
    if d < 1:
        raise DomainError(f"d must be a positive integer, got {d!r}")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any((x < 0) | (x > 1)):
        raise DomainError("x must lie in [0, 1]")
    y = x ** (1.0 / d)
    val = special.rel_entr(y, p) + special.rel_entr(1.0 - y, 1.0 - p)
    d1 = np.empty_like(x)
    d2 = np.empty_like(x)
    inner = (x > 0) & (x < 1)
    yi, xi = y[inner], x[inner]
    slope = _logit(yi) - _logit(p)
    with np.errstate(over="ignore"):
        d1[inner] = slope * yi / (d * xi)
        d2[inner] = (yi / (d * xi)) / (d * xi) * _curvature_factor(p, d, yi)
    d1[x == 0] = -np.inf
    d2[x == 0] = np.inf
    d1[x == 1] = np.inf
    d2[x == 1] = np.inf
    if scalar:
        return float(val[0]), float(d1[0]), float(d2[0])
    return val, d1, d2


def _psi(p, d, x):
    return psi_eval(p, d, x)[0]


def _dpsi(p, d, x):
    return psi_eval(p, d, x)[1]


def p_zero(d: int) -> float:
    """Convexity threshold p0(d) = (d-1) / (d-1 + e^{d/(d-1)}).

    For d = 1 the profile is h_p itself, always convex; the sentinel 0.0 is
    returned so that the test ``p < p_zero(d)`` is never true.
    """
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d!r}")
    if d == 1:
        return 0.0
    return (d - 1) / (d - 1 + math.exp(d / (d - 1)))


class Convexity(str, enum.Enum):
    STRICTLY_CONVEX = "StrictlyConvex"
    MARGINALLY_CONVEX = "MarginallyConvex"
    NON_CONVEX = "NonConvex"


@dataclass(frozen=True)
class PsiProfile:
    p: float
    d: int
    convexity: Convexity
    inflection: tuple[float, float] | None = None
    window: tuple[float, float] | None = None
    slope: float | None = None
    intercept: float | None = None
    method: str | None = None

    @property
    def convex(self) -> bool:
        return self.convexity is not Convexity.NON_CONVEX

    def on_minorant_x(self, x: float) -> bool:
        if self.window is None:
            return True
        a, b = self.window
        return not (a + ON_MINORANT_TOL < x < b - ON_MINORANT_TOL)

    def minorant(self, x):
        x = np.asarray(x, dtype=float)
        val = psi_eval(self.p, self.d, x)[0]
        if self.window is None:
            return val
        a, b = self.window
        inside = (x > a) & (x < b)
        out = np.where(inside, self.slope * x + self.intercept, val)
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "convexity": self.convexity.value,
            "p0": p_zero(self.d),
            "inflection": list(self.inflection) if self.inflection else None,
            "window": list(self.window) if self.window else None,
            "slope": self.slope,
            "intercept": self.intercept,
            "method": self.method,
        }


def _inflection_points(p, d):
    """Roots of psi'' in x, found by bisection on the curvature factor in y = x**(1/d)."""
    y_star = (d - 1) / d
    factor = lambda y: _curvature_factor(p, d, y)  # noqa: E731
    # factor(p) = 1/(1-p) > 0, factor(y*) < 0 below p0, factor -> +inf at 1
    y1 = optimize.bisect(factor, p, y_star, xtol=BISECT_TOL * p, rtol=1e-15, maxiter=500)
    hi = None
    for k in range(1, 17):
        cand = 1.0 - 10.0**-k
        if factor(cand) > 0:
            hi = cand
            break
    if hi is None:  # pragma: no cover
        raise RuntimeError("could not bracket the upper inflection point")
    y2 = optimize.bisect(factor, y_star, hi, xtol=BISECT_TOL, rtol=1e-15, maxiter=500)
    return y1**d, y2**d


def _newton_from(p, d, x1, x2, a, b):
    for _ in range(NEWTON_MAX_ITER):
        (pa, da, dda), (pb, db, ddb) = psi_eval(p, d, a), psi_eval(p, d, b)
        F = np.array([da - db, da * (b - a) - (pb - pa)])
        J = np.array([[dda, -ddb], [dda * (b - a), da - db]])
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        # damping keeps the iterates on their convex pieces
        lam = 1.0
        while lam > 1e-8:
            na, nb = a + lam * step[0], b + lam * step[1]
            if 0.0 < na < x1 and x2 < nb < 1.0:
                break
            lam *= 0.5
        else:
            return None
        a, b = na, nb
        if abs(lam * step[0]) < NEWTON_TOL * max(a, 1e-3) and abs(lam * step[1]) < NEWTON_TOL:
            return a, b
    return None


def _tangent_newton(p, d, x1, x2):
    """Newton on psi'(a) = psi'(b), psi'(a)(b - a) = psi(b) - psi(a).

    The Jacobian is singular at the inflection points themselves, so the
    seeds are pushed outward into the convex pieces.
    """
    w = x2 - x1
    seeds = [
        (0.5 * x1, x2 + 0.5 * (1.0 - x2)),
        (max(x1 - w, 0.5 * x1), min(x2 + w, x2 + 0.5 * (1.0 - x2))),
        (max(x1 - 0.25 * w, 0.5 * x1), min(x2 + 0.25 * w, x2 + 0.5 * (1.0 - x2))),
    ]
    for a, b in seeds:
        ab = _newton_from(p, d, x1, x2, a, b)
        if ab is not None and _tangent_ok(p, d, *ab):
            return ab
    return None


def _tangent_bisection(p, d, x1, x2):
    """Common tangent by bisection on the slope.

    For a slope s, a(s) and b(s) are the tangency points on the left and right
    convex pieces; the intercept gap c_L(s) - c_R(s) has derivative b - a > 0,
    so the common tangent is its unique root.
    """
    lo_s, hi_s = _dpsi(p, d, x2), _dpsi(p, d, x1)

    def left(s):
        if s >= hi_s:
            return x1
        lo = 1e-300
        return optimize.bisect(lambda x: _dpsi(p, d, x) - s, lo, x1, xtol=1e-300, rtol=1e-15, maxiter=4000)

    def right(s):
        if s <= lo_s:
            return x2
        hi = np.nextafter(1.0, 0.0)
        if _dpsi(p, d, hi) <= s:
            # touch point closer to 1 than float spacing: use the endpoint
            return 1.0
        return optimize.bisect(lambda x: _dpsi(p, d, x) - s, x2, hi, xtol=1e-300, rtol=1e-15, maxiter=4000)

    def gap(s):
        a, b = left(s), right(s)
        return (_psi(p, d, a) - s * a) - (_psi(p, d, b) - s * b)

    s = optimize.bisect(gap, lo_s, hi_s, xtol=1e-14, rtol=1e-15, maxiter=2000)
    return left(s), right(s)


def _chord_supports(p, d, a, b):
    """Chord through the touch points stays below psi (up to 1e-9) on a dense grid."""
    pa, pb = _psi(p, d, a), _psi(p, d, b)
    slope = (pb - pa) / (b - a)
    rel = np.concatenate([-np.logspace(-8, 0, 200), np.logspace(-8, 0, 200)])
    xs = np.concatenate([
        np.linspace(0.0, 1.0, 10001),
        np.clip(a * (1.0 + rel), 0.0, 1.0),
        np.clip(b + (1.0 - b) * rel, 0.0, 1.0),
        np.clip(b - b * np.logspace(-12, 0, 200), 0.0, 1.0),
    ])
    gap = psi_eval(p, d, xs)[0] - (pa + slope * (xs - a))
    return float(gap.min()) >= -1e-9


def _tangent_ok(p, d, a, b):
    if not (0.0 < a < b <= 1.0):
        return False
    pa, da, _ = psi_eval(p, d, a)
    pb, db, _ = psi_eval(p, d, b)
    chord = (pb - pa) / (b - a)
    scale = max(1.0, abs(chord))
    if b < 1.0 and abs(da - db) <= 1e-7 * scale and abs(da - chord) <= 1e-7 * scale:
        return True
    # near x = p^d and x = 1 psi' is too steep to compare slopes in floating
    # point; fall back to the geometric certificate
    return _chord_supports(p, d, a, b)


def _tangent_local_cubic(x1, x2):
    """Window for a nearly merged inflection pair.

    With psi'' ~ k((x-c)^2 - w^2) around c = (x1+x2)/2, w = (x2-x1)/2, the
    common tangent touches at c -/+ sqrt(3) w.
    """
    c, w = 0.5 * (x1 + x2), 0.5 * (x2 - x1)
    return c - math.sqrt(3.0) * w, c + math.sqrt(3.0) * w


@lru_cache(maxsize=4096)
def analyze_psi(p: float, d: int) -> PsiProfile:
    """Convexity class, inflection points and tangency window of psi_p."""
    _check_p(p)
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d!r}")
    d = int(d)
    p = float(p)
    if d == 1:
        return PsiProfile(p, d, Convexity.STRICTLY_CONVEX)
    p0 = p_zero(d)
    if abs(p - p0) <= 1e-12:
        return PsiProfile(p, d, Convexity.MARGINALLY_CONVEX)
    if p > p0:
        return PsiProfile(p, d, Convexity.STRICTLY_CONVEX)
    x1, x2 = _inflection_points(p, d)
    method = "newton"
    ab = _tangent_newton(p, d, x1, x2)
    if ab is None:
        method = "bisection"
        try:
            ab = _tangent_bisection(p, d, x1, x2)
        except (ValueError, RuntimeError):
            ab = None
        if ab is not None and not _tangent_ok(p, d, *ab):
            ab = None
    if ab is None and x2 - x1 < 1e-3:
        # inflection points nearly merged: the tangency conditions are too
        # flat to resolve in double precision, use the local expansion
        method = "local-cubic"
        ab = _tangent_local_cubic(x1, x2)
    if ab is None:
        raise RuntimeError(f"tangency window failed for p={p}, d={d}")
    a, b = float(ab[0]), float(ab[1])
    pa, pb = _psi(p, d, a), _psi(p, d, b)
    slope = (pb - pa) / (b - a)
    return PsiProfile(
        p, d, Convexity.NON_CONVEX,
        inflection=(x1, x2), window=(a, b),
        slope=slope, intercept=pa - slope * a, method=method,
    )


def on_minorant(p: float, d: int, r: float, profile: PsiProfile | None = None) -> bool:
    """Whether (r^d, h_p(r)) lies on the convex minorant of psi_p."""
    if not (p <= r <= 1.0):
        raise DomainError(f"r must lie in [p, 1], got r={r!r}, p={p!r}")
    prof = profile or analyze_psi(p, d)
    return prof.on_minorant_x(r**d)


def minorant_value(p: float, d: int, x):
    """Convex minorant of psi_p at ``x`` (vectorised)."""
    return analyze_psi(p, d).minorant(x)


def limit_entropy_ratio(W0, f) -> float:
    """lim_{p->0} I_{W0}(f) / log(1/p) = (t(E, f) - |Omega_1|) / 2.

    ``W0`` takes values in {0, p, 1} for a single p; ``f`` must lie in W_Omega.
    """
    from .graphon import common_refinement, in_omega

    vals = np.asarray(W0.values)
    free = vals[(vals > 0) & (vals < 1)]
    if free.size and not np.all(free == free.flat[0]):
        raise DomainError("base graphon has more than one non-trivial block value")
    if not in_omega(W0, f):
        raise DomainError("f does not agree with W0 on its Zero/One blocks")
    w, g = common_refinement(W0, f)
    area = np.outer(w.gamma, w.gamma)
    omega_one = float(np.sum(area[w.values == 1.0]))
    return 0.5 * (float(np.sum(area * g.values)) - omega_one)
