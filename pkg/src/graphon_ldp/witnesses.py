"""Explicit graphons that beat the symmetric candidate.

* g^eps: a perturbation of f_r^gamma that moves mass towards the two ends of
  the tangency window; it wins whenever (r^d, h_p(r)) is off the minorant.
* chi_t: a clique on an interval, against f_{0,p,p} and f_{1,p,p} bases.
* chi_alpha: a planted construction against f_{1,p,0}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize

from .entropy import analyze_psi, bernoulli_kl, limit_entropy_ratio, on_minorant
from .errors import DomainError, WitnessNotFoundError
from .graphon import StepGraphon, as_fraction, hom_density, hom_density_exact, relative_entropy, two_block
from .graphs import FiniteGraph
from .linalg import operator_norm
from .variational import ConstraintKind, bipartite_t

EPS_GRID = tuple(2.0**-k for k in range(3, 13))
MARGIN = 1e-12
EXTENDED_MAX_EXP = 80


@dataclass
class Witness:
    graphon: StepGraphon
    construction: str
    params: dict
    constraint_kind: ConstraintKind
    target_witness: float
    target_symmetric: float
    entropy_witness: float
    entropy_symmetric: float
    extra: dict = field(default_factory=dict)
    # margins may be supplied directly when they were computed more accurately
    # than the difference of the rounded targets or entropies
    constraint_margin: float | None = None
    entropy_margin: float | None = None

    def __post_init__(self):
        if self.constraint_margin is None:
            self.constraint_margin = self.target_witness - self.target_symmetric
        if self.entropy_margin is None:
            self.entropy_margin = self.entropy_symmetric - self.entropy_witness

    @property
    def valid(self) -> bool:
        # the constraint is t >= target, so a tie is feasible; the entropy must strictly improve
        return self.constraint_margin >= 0.0 and self.entropy_margin > 0.0

    def to_dict(self) -> dict:
        return {
            "construction": self.construction,
            "params": self.params,
            "constraint_kind": self.constraint_kind.value,
            "target_witness": self.target_witness,
            "target_symmetric": self.target_symmetric,
            "entropy_witness": self.entropy_witness,
            "entropy_symmetric": self.entropy_symmetric,
            "constraint_margin": self.constraint_margin,
            "entropy_margin": self.entropy_margin,
            "valid": self.valid,
            "graphon": self.graphon,
            **self.extra,
        }


def _check_gamma(gamma) -> Fraction:
    g = as_fraction(gamma)
    if not 0 < g < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    return g


# --- g^eps -------------------------------------------------------------------------

def geps_graphon(gamma, r: float, r1: float, r2: float, s: float, eps: float) -> StepGraphon:
    """The g^eps construction on six blocks.

    Blocks, left to right: I1, the rest of [0, gamma] split around I4, I4 at
    the right end of [0, gamma], then I2 at the left end of (gamma, 1], the
    middle, and I3 at the right end.  Cross values are r1 on I1 x I_c23 and
    I2 x I_c14, r2 on I3 x I_c14 and I4 x I_c23, r elsewhere across, and 0
    inside each side.
    """
    g = _check_gamma(gamma)
    S, E = Fraction(s), Fraction(eps)
    a1 = g * S * E**2
    a2 = (1 - g) * S * E**2
    a3 = (1 - g) * ((1 - S) * E**2 + E**3)
    a4 = g * ((1 - S) * E**2 + E**3)
    widths = [a1, g - a1 - a4, a4, a2, (1 - g) - a2 - a3, a3]
    if any(w <= 0 for w in widths):
        raise DomainError(f"eps = {eps!r} too large for gamma = {gamma!r}")
    V = np.zeros((6, 6))
    cross = np.full((3, 3), r)
    # rows: I1, Ic14, I4 ; columns: I2, Ic23, I3
    cross[0, 1] = r1  # I1 x Ic23
    cross[1, 0] = r1  # Ic14 x I2
    cross[1, 2] = r2  # Ic14 x I3
    cross[2, 1] = r2  # I4 x Ic23
    V[:3, 3:] = cross
    V[3:, :3] = cross.T
    return StepGraphon(widths, V)


def geps_entropy_gap(p, gamma, r, r1, r2, s, eps) -> float:
    """Closed form of I(g^eps) - I(f_r^gamma)."""
    g = float(gamma)
    h = lambda u: bernoulli_kl(p, u)  # noqa: E731
    bracket = s * h(r1) + (1 - s) * h(r2) - h(r) + eps * (h(r2) - h(r))
    return 2 * g * (1 - g) * (1 - eps**2 - eps**3) * eps**2 * bracket


def geps_t_gap_coefficient(H: FiniteGraph, gamma, r, r2) -> float:
    """Leading coefficient K in t(H, g^eps) - t(H, f_r^gamma) ~ K eps^3."""
    d = H.regular_degree()
    m = H.v // 2
    c = H.component_count()
    g = float(gamma)
    return 2 ** (c + 1) * m * g**m * (1 - g) ** m * r ** (H.e - d) * (r2**d - r**d)


def entropy_gap(W0: StepGraphon, f: StepGraphon, g: StepGraphon) -> tuple[float, float]:
    """I(g) - I(f) summed blockwise on the common refinement, with a rounding bound.

    Blocks where f and g agree contribute exactly zero, so the difference never
    suffers the cancellation of subtracting two full entropies.
    """
    bps = sorted(set(W0.breakpoints) | set(f.breakpoints) | set(g.breakpoints))
    w, F, G = W0.refine(bps), f.refine(bps), g.refine(bps)
    diff = F.values != G.values
    if not np.any(diff):
        return 0.0, 0.0
    hg = bernoulli_kl(w.values[diff], G.values[diff])
    hf = bernoulli_kl(w.values[diff], F.values[diff])
    area = w.area()[diff]
    terms = area * (hg - hf)
    err = 8 * np.finfo(float).eps * float(np.sum(area * (np.abs(hg) + np.abs(hf)))) + 1e-300
    return 0.5 * float(np.sum(terms)), err


def _opnorm_gap(g: StepGraphon, c2: Fraction) -> float:
    """Certified lower bound on ||g||_op - sqrt(c2), from a rational Rayleigh quotient.

    With A = D^{1/2} P D^{1/2} and x = D^{1/2} y, lambda_max >= L = (y' D P D y) / (y' D y)
    for any y; y is the float top eigenvector read as rationals.  L^2 - c2 is
    exact, so the sign of the returned gap is reliable even far below double
    resolution.
    """
    A = np.sqrt(g.gamma)[:, None] * g.values * np.sqrt(g.gamma)[None, :]
    vals, vecs = np.linalg.eigh(A)
    x = vecs[:, int(np.argmax(np.abs(vals)))]
    y = [Fraction(float(v)) for v in x / np.sqrt(g.gamma)]
    W = g.widths
    P = [[Fraction(float(v)) for v in row] for row in g.values]
    m = g.m
    num = sum(y[i] * W[i] * P[i][j] * W[j] * y[j] for i in range(m) for j in range(m))
    den = sum(y[i] * W[i] * y[i] for i in range(m))
    if den == 0:
        return -math.inf
    L = num / den
    if L <= 0:
        return -math.inf
    return float(L * L - c2) / (float(L) + math.sqrt(float(c2)))


def geps_search(p, gamma, H, r, r1, r2, constraint=ConstraintKind.HOM_DENSITY,
                eps_grid=EPS_GRID, margin=MARGIN):
    """Evaluate g^eps over the eps grid for a given pair r1 < r < r2.

    The constraint gap is certified exactly (rational einsum for t, a rational
    Rayleigh quotient for the operator norm); the entropy gap is summed over
    changed blocks only.  ``margin`` is the acceptance threshold for both gaps;
    with ``margin=0`` the entropy gap must instead clear its rounding bound.
    """
    constraint = ConstraintKind(constraint)
    d = 2 if constraint is ConstraintKind.OPERATOR_NORM else H.regular_degree()
    g = _check_gamma(gamma)
    x, x1, x2 = r**d, r1**d, r2**d
    s = (x2 - x) / (x2 - x1)
    W0 = two_block(gamma, 0.0, p, 0.0)
    sym = two_block(gamma, 0.0, r, 0.0)
    I_sym = float(g * (1 - g)) * bernoulli_kl(p, r)
    if constraint is ConstraintKind.HOM_DENSITY:
        T_sym_exact = hom_density_exact(H, sym)
        T_sym = float(T_sym_exact)
    else:
        c2 = Fraction(r) ** 2 * g * (1 - g)
        T_sym = r * math.sqrt(float(g * (1 - g)))
    rows = []
    for eps in eps_grid:
        try:
            ge = geps_graphon(gamma, r, r1, r2, s, eps)
        except DomainError:
            continue
        if constraint is ConstraintKind.HOM_DENSITY:
            t_gap = float(hom_density_exact(H, ge) - T_sym_exact)
            T = T_sym + t_gap
            t_ok = t_gap > margin
        else:
            t_gap = _opnorm_gap(ge, c2)
            T = T_sym + t_gap
            t_ok = t_gap > margin
        e_gap, e_err = entropy_gap(W0, sym, ge)
        e_ok = -e_gap > max(margin, e_err)
        rows.append({
            "eps": eps, "graphon": ge, "target": T, "entropy": I_sym + e_gap,
            "t_gap": t_gap, "entropy_gap": e_gap, "accepted": bool(t_ok and e_ok),
        })
    return rows, s, T_sym, I_sym


def witness_geps(p: float, gamma, H: FiniteGraph | None, r: float,
                 constraint: ConstraintKind | str = ConstraintKind.HOM_DENSITY,
                 eps_grid=EPS_GRID) -> Witness:
    """Symmetry-breaking witness g^eps for r off the convex minorant.

    The grid is searched with the 1e-12 margin first.  Near the ends of the
    tangency window the admissible eps shrinks like the distance to the
    minorant, so the search then continues geometrically below the grid with
    exactly certified (margin-free) gaps.
    """
    constraint = ConstraintKind(constraint)
    if constraint is ConstraintKind.HOM_DENSITY:
        if H is None:
            raise DomainError("a pattern graph is required")
        d = H.regular_degree()
        if d is None or not H.is_bipartite() or H.e == 0:
            raise DomainError("g^eps needs a regular bipartite pattern graph")
    else:
        d = 2
    _check_gamma(gamma)
    if not p < r < 1:
        raise DomainError(f"r must lie in (p, 1), got {r!r}")
    prof = analyze_psi(p, d)
    if on_minorant(p, d, r, prof):
        raise DomainError(f"r = {r!r} lies on the convex minorant; no symmetry breaking")
    a, b = prof.window
    r1, r2 = a ** (1.0 / d), b ** (1.0 / d)
    rows, s, T_sym, I_sym = geps_search(p, gamma, H, r, r1, r2, constraint, eps_grid)
    accepted = [row for row in rows if row["accepted"]]
    extended = False
    if not accepted:
        start = -int(round(math.log2(min(eps_grid)))) + 1
        ext = tuple(2.0**-k for k in range(start, EXTENDED_MAX_EXP + 1))
        rows, s, T_sym, I_sym = geps_search(p, gamma, H, r, r1, r2, constraint, ext, margin=0.0)
        # stop at the first accepted pair of eps values; smaller ones add nothing
        accepted = [row for row in rows if row["accepted"]][:2]
        extended = True
    if not accepted:
        raise WitnessNotFoundError(f"no eps gives a valid g^eps for p={p}, r={r}")
    best = min(accepted, key=lambda row: row["entropy_gap"])
    extra = {
        "extended_grid": extended,
        "accepted_eps": [row["eps"] for row in accepted],
        "t_gaps": [row["t_gap"] for row in accepted],
        "entropy_gaps": [row["entropy_gap"] for row in accepted],
        "entropy_gap_closed_form": [geps_entropy_gap(p, gamma, r, r1, r2, s, row["eps"]) for row in accepted],
    }
    if constraint is ConstraintKind.OPERATOR_NORM:
        # target_witness is the certified lower bound; this is the Jacobi value
        extra["op_norm_jacobi"] = operator_norm(best["graphon"])
    else:
        K = geps_t_gap_coefficient(H, gamma, r, r2)
        small = sorted(accepted, key=lambda row: row["eps"])[:2]
        ratios = [row["t_gap"] / row["eps"] ** 3 / K for row in small]
        extra.update({
            "leading_coefficient": K,
            "leading_ratio": ratios,
            "leading_order_ok": bool(all(abs(q - 1) <= 0.2 for q in ratios)),
        })
    return Witness(
        best["graphon"], "GEps",
        {"eps": best["eps"], "r1": r1, "r2": r2, "s": s, "r": r, "p": p, "gamma": float(gamma), "d": d},
        constraint, best["target"], T_sym, best["entropy"], I_sym, extra,
        constraint_margin=best["t_gap"], entropy_margin=-best["entropy_gap"],
    )


# --- clique witnesses --------------------------------------------------------------

class CliqueCase(str, enum.Enum):
    PLANTED_INDEPENDENT = "PlantedIndependent"
    PLANTED_CLIQUE = "PlantedClique"


def clique_base(case: CliqueCase | str, gamma, p: float) -> StepGraphon:
    case = CliqueCase(case)
    first = 0.0 if case is CliqueCase.PLANTED_INDEPENDENT else 1.0
    return two_block(gamma, first, p, p)


def _clique_side(t: float, v: int) -> float:
    """Smallest float s near t^{1/v} with s**v >= t, so rounding never loses the constraint."""
    s = t ** (1.0 / v)
    while s**v < t:
        s = math.nextafter(s, 2.0)
    return s


def chi_t_graphon(case: CliqueCase | str, gamma, t: float, v: int) -> StepGraphon:
    """1 on a square of side t^{1/v}: at the top end for the independent case, from 0 for the clique case."""
    case = CliqueCase(case)
    g = _check_gamma(gamma)
    side = Fraction(_clique_side(t, v))
    if case is CliqueCase.PLANTED_INDEPENDENT:
        if not side < 1 - g:
            raise DomainError("clique side exceeds the free block")
        return StepGraphon([g, 1 - g - side, side], [[0, 0, 0], [0, 0, 0], [0, 0, 1]])
    if not g < side < 1:
        raise DomainError("clique side must lie strictly between gamma and 1")
    return StepGraphon([g, side - g, 1 - side], [[1, 1, 0], [1, 1, 0], [0, 0, 0]])


def clique_t_range(case: CliqueCase | str, gamma, H: FiniteGraph) -> tuple[float, float]:
    case = CliqueCase(case)
    if case is CliqueCase.PLANTED_INDEPENDENT:
        return 0.0, hom_density(H, two_block(gamma, 0.0, 0.0, 1.0))
    return hom_density(H, two_block(gamma, 1.0, 0.0, 0.0)), 1.0


def _family_member(z, alpha, beta, case):
    first = 0.0 if case is CliqueCase.PLANTED_INDEPENDENT else 1.0
    return two_block(z, first, alpha, beta)


def symmetric_family_min(case: CliqueCase | str, gamma, t: float, H: FiniteGraph, p: float | None,
                         n_alpha: int = 201) -> dict:
    """Smallest entropy (or limit ratio if p is None) over f_{c,alpha,beta}^z with t(H, .) >= t.

    z runs over {gamma, 1 - gamma}; members outside W_Omega(W0) have infinite
    entropy and are skipped.  For each alpha the cheapest admissible beta is
    found by bisection (t is increasing in beta), then alpha is refined by a
    bounded scalar minimisation around the best grid point.
    """
    case = CliqueCase(case)
    g = _check_gamma(gamma)
    W0 = clique_base(case, gamma, p if p is not None else 0.5)

    def cost(f):
        if p is None:
            # limit ratio needs membership in W_Omega of the {0, p, 1} base
            return limit_entropy_ratio(W0, f) if _in_omega_any(W0, f) else math.inf
        return relative_entropy(W0, f)

    base = 0.0 if p is None else p
    best = {"value": math.inf}
    for z in sorted({g, 1 - g}):
        def beta_for(alpha):
            # t is increasing in beta and the cost is smallest at beta = p
            if hom_density(H, _family_member(z, alpha, 1.0, case)) < t:
                return None
            if hom_density(H, _family_member(z, alpha, base, case)) >= t:
                return base
            return optimize.brentq(lambda b: hom_density(H, _family_member(z, alpha, b, case)) - t,
                                   base, 1.0, xtol=1e-15, rtol=1e-15)

        def obj(alpha):
            b = beta_for(alpha)
            if b is None:
                return math.inf, None
            return cost(_family_member(z, alpha, b, case)), b

        alphas = np.linspace(0.0, 1.0, n_alpha)
        vals = [obj(a)[0] for a in alphas]
        k = int(np.argmin(vals))
        if not math.isfinite(vals[k]):
            continue
        lo, hi = alphas[max(k - 1, 0)], alphas[min(k + 1, n_alpha - 1)]
        res = optimize.minimize_scalar(lambda a: obj(a)[0], bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12})
        cands = [(vals[k], alphas[k]), (res.fun, res.x)]
        val, alpha = min(cands, key=lambda c: c[0])
        if val < best["value"]:
            best = {"value": float(val), "z": float(z), "alpha": float(alpha), "beta": float(obj(alpha)[1])}
    return best


def _in_omega_any(W0, f):
    from .graphon import in_omega

    return in_omega(W0, f)


def witness_clique(case: CliqueCase | str, gamma, t: float, H: FiniteGraph, p: float | None = None) -> Witness:
    """chi_t against the symmetric family; compares limit ratios and, for a given p, entropies."""
    case = CliqueCase(case)
    _check_gamma(gamma)
    lo, hi = clique_t_range(case, gamma, H)
    if not lo < t < hi:
        raise DomainError(
            f"t = {t!r} outside the admissible range ({lo!r}, {hi!r}) for {case.value}; "
            "the excluded range is refused rather than extrapolated"
        )
    chi = chi_t_graphon(case, gamma, t, H.v)
    g = float(gamma)
    ratio_w = 0.5 * t ** (2.0 / H.v) - (0.5 * g**2 if case is CliqueCase.PLANTED_CLIQUE else 0.0)
    sym_limit = symmetric_family_min(case, gamma, t, H, None)
    extra = {
        "case": case.value,
        "limit_ratio_witness": ratio_w,
        "limit_ratio_witness_direct": limit_entropy_ratio(clique_base(case, gamma, 0.5), chi),
        "limit_ratio_symmetric": sym_limit["value"],
        "symmetric_limit_argmin": sym_limit,
    }
    if p is not None:
        W0 = clique_base(case, gamma, p)
        I_w = relative_entropy(W0, chi)
        sym = symmetric_family_min(case, gamma, t, H, p)
        extra["symmetric_argmin"] = sym
        extra["ratio_at_p"] = I_w / math.log(1 / p)
        I_s = sym["value"]
    else:
        I_w, I_s = ratio_w, sym_limit["value"]
    return Witness(chi, "CliqueChi", {"t": t, "gamma": g, "p": p, "side": t ** (1.0 / H.v)},
                   ConstraintKind.HOM_DENSITY, hom_density(H, chi), t, I_w, I_s, extra)


# --- planted chi_alpha -------------------------------------------------------------------

def chi_alpha_graphon(gamma, alpha: float, d: int) -> StepGraphon:
    g = _check_gamma(gamma)
    q = Fraction(alpha**d)
    return StepGraphon([g, (1 - g) * q, (1 - g) * (1 - q)], [[1, 1, 0], [1, 0, 0], [0, 0, 0]])


def independent_set_polynomial(H: FiniteGraph, gamma, alpha: float) -> float:
    """sum_k s_k gamma^{v-k} (1-gamma)^k alpha^{dk} with s_k the independent k-sets of H."""
    d = H.regular_degree()
    g = float(gamma)
    s = H.independent_set_counts()
    return float(sum(sk * g ** (H.v - k) * (1 - g) ** k * alpha ** (d * k) for k, sk in enumerate(s)))


def witness_planted(gamma, alpha: float, H: FiniteGraph, p: float | None = None) -> Witness:
    """chi_alpha against f_{1,alpha,0}^gamma on the base f_{1,p,0}^gamma."""
    d = H.regular_degree()
    if d is None:
        raise DomainError("witness_planted needs a regular pattern graph")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    g = float(_check_gamma(gamma))
    chi = chi_alpha_graphon(gamma, alpha, d)
    sym = two_block(gamma, 1.0, alpha, 0.0)
    t_chi, t_sym = hom_density(H, chi), hom_density(H, sym)
    poly = independent_set_polynomial(H, gamma, alpha)
    W_lim = two_block(gamma, 1.0, 0.5, 0.0)
    extra = {
        "independent_set_counts": H.independent_set_counts(),
        "independent_set_polynomial": poly,
        "density_identity_error": max(abs(t_chi - t_sym), abs(t_chi - poly)),
        "limit_ratio_witness": (1 - g) * g * alpha**d,
        "limit_ratio_symmetric": (1 - g) * g * alpha,
        "limit_ratio_witness_direct": limit_entropy_ratio(W_lim, chi),
        "limit_ratio_symmetric_direct": limit_entropy_ratio(W_lim, sym),
    }
    if p is not None:
        W0 = two_block(gamma, 1.0, p, 0.0)
        I_w, I_s = relative_entropy(W0, chi), relative_entropy(W0, sym)
    else:
        I_w, I_s = extra["limit_ratio_witness"], extra["limit_ratio_symmetric"]
    # t(chi) = t(sym) is an identity, so the margin is taken exactly rather than from floats
    margin = float(hom_density_exact(H, chi) - hom_density_exact(H, sym))
    return Witness(chi, "PlantedChiAlpha", {"alpha": alpha, "gamma": g, "p": p, "d": d},
                   ConstraintKind.HOM_DENSITY, t_chi, t_sym, I_w, I_s, extra, constraint_margin=margin)


__all__ = [
    "Witness", "witness_geps", "witness_clique", "witness_planted", "geps_graphon", "geps_search",
    "geps_entropy_gap", "geps_t_gap_coefficient", "CliqueCase", "chi_t_graphon", "chi_alpha_graphon",
    "symmetric_family_min", "independent_set_polynomial", "bipartite_t",
]
