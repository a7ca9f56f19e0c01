"""The symmetric variational problem and its phase classification.

symmetric_min minimises I_{W0}(g) over block graphons g on W0's partition
subject to t(H, g) = t.  Only the Free relevant blocks move: masked blocks are
fixed by W_Omega and irrelevant blocks do not affect t(H, .), so leaving them
at W0 is optimal.  The constraint is handled by an augmented Lagrangian with
a bound-constrained inner solve, then a Newton step on the KKT system.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import rng as rngmod
from .entropy import analyze_psi, bernoulli_kl, on_minorant
from .errors import DomainError, InfeasibleError, WitnessNotFoundError
from .graphon import (
    HomPolynomial,
    StepGraphon,
    f_max_graphon,
    hom_density,
    omega_mask,
    relative_entropy,
    relevant_blocks,
    two_block,
)
from .graphs import FiniteGraph

N_RESTARTS = 20
UNIQUE_TOL = 1e-6
KKT_TOL = 1e-10
UPPER_CAP = 1.0 - 1e-12


class ConstraintKind(str, enum.Enum):
    HOM_DENSITY = "HomDensity"
    OPERATOR_NORM = "OperatorNorm"


class Regime(str, enum.Enum):
    SYMMETRIC_CERTIFIED = "SymmetricCertified"
    BROKEN_CERTIFIED = "BrokenCertified"
    BRACKET_ONLY = "BracketOnly"


class Phase(str, enum.Enum):
    SYMMETRIC = "Symmetric"
    BROKEN = "Broken"


@dataclass
class VariationalSolution:
    optimizer: StepGraphon
    objective: float
    target: float
    constraint_kind: ConstraintKind
    residual: float
    regime: Regime
    bracket: tuple[float, float]
    t_base: float
    t_max: float
    restarts: int = 0
    restart_spread: float = 0.0
    unique_certified: bool = True
    kkt_residual: float = 0.0
    multiplier: float = 0.0
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "optimizer": self.optimizer,
            "objective": self.objective,
            "target": self.target,
            "constraint_kind": self.constraint_kind.value,
            "residual": self.residual,
            "regime": self.regime.value,
            "bracket": list(self.bracket),
            "t_base": self.t_base,
            "t_max": self.t_max,
            "restarts": self.restarts,
            "restart_spread": self.restart_spread,
            "unique_certified": self.unique_certified,
            "kkt_residual": self.kkt_residual,
            "multiplier": self.multiplier,
            "note": self.note,
        }


class _Reduced:
    """The finite-dimensional problem in the Free relevant upper-triangular blocks."""

    def __init__(self, W0: StepGraphon, H: FiniteGraph, mask: np.ndarray):
        self.W0 = W0
        self.poly = HomPolynomial(H, W0.gamma)
        iu, ju = np.nonzero(np.triu(mask))
        self.I, self.J = iu, ju
        self.p = W0.values[iu, ju]
        g = W0.gamma
        self.w = np.where(iu == ju, 0.5 * g[iu] ** 2, g[iu] * g[ju])
        self.base = W0.values.copy()

    @property
    def n(self) -> int:
        return len(self.I)

    def matrix(self, x) -> np.ndarray:
        P = self.base.copy()
        P[self.I, self.J] = x
        P[self.J, self.I] = x
        return P

    def t(self, x) -> float:
        return self.poly.value(self.matrix(x))

    def t_grad(self, x) -> np.ndarray:
        return self.poly.sym_grad(self.matrix(x))[self.I, self.J]

    def t_and_grad(self, x) -> tuple[float, np.ndarray]:
        val, S = self.poly.value_and_sym_grad(self.matrix(x))
        return val, S[self.I, self.J]

    def t_hess(self, x, h=1e-7) -> np.ndarray:
        n = self.n
        Hm = np.empty((n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            Hm[:, k] = (self.t_grad(x + e) - self.t_grad(x - e)) / (2 * h)
        return 0.5 * (Hm + Hm.T)

    def F(self, x) -> float:
        return float(np.sum(self.w * bernoulli_kl(self.p, np.clip(x, 0.0, 1.0))))

    def F_grad(self, x) -> np.ndarray:
        x = np.clip(x, 1e-300, UPPER_CAP)
        return self.w * (np.log(x / self.p) - np.log((1 - x) / (1 - self.p)))

    def F_hess_diag(self, x) -> np.ndarray:
        x = np.clip(x, 1e-300, UPPER_CAP)
        return self.w * (1.0 / x + 1.0 / (1.0 - x))


def _augmented_lagrangian(red: _Reduced, t_star: float, x0: np.ndarray, max_outer=60):
    lam, mu = 0.0, 10.0
    x = x0.copy()
    bounds = list(zip(red.p, np.full(red.n, UPPER_CAP)))
    prev_c = math.inf
    for _ in range(max_outer):
        def fun(z, lam=lam, mu=mu):
            tz, gz = red.t_and_grad(z)
            c = tz / t_star - 1.0
            gc = gz / t_star
            val = red.F(z) + lam * c + 0.5 * mu * c * c
            return val, red.F_grad(z) + (lam + mu * c) * gc

        res = optimize.minimize(fun, x, jac=True, method="L-BFGS-B", bounds=bounds,
                                options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 500})
        x = res.x
        c = red.t(x) / t_star - 1.0
        lam += mu * c
        if abs(c) > 0.25 * abs(prev_c):
            mu *= 2.0
        prev_c = c
        if abs(c) < 1e-9:
            break
    # multiplier in the unscaled form F'(x) = lam * grad t
    return x, lam / t_star


def _newton_polish(red: _Reduced, t_star: float, x: np.ndarray, lam: float, iters=30):
    """Newton on [F'(x) - lam grad t(x); t(x) - t*] over the variables off their bounds."""
    for _ in range(iters):
        g = red.t_grad(x)
        r1 = red.F_grad(x) + lam * (-g)
        r2 = red.t(x) - t_star
        free = x < UPPER_CAP
        kkt = max(float(np.max(np.abs(r1[free]), initial=0.0)), abs(r2))
        if kkt <= KKT_TOL:
            return x, lam, kkt
        Hl = np.diag(red.F_hess_diag(x)) - lam * red.t_hess(x)
        idx = np.nonzero(free)[0]
        k = len(idx)
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = Hl[np.ix_(idx, idx)]
        K[:k, k] = -g[idx]
        K[k, :k] = g[idx]
        rhs = -np.concatenate([r1[idx], [r2]])
        try:
            step = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            return x, lam, kkt
        # stay inside [p, 1)
        alpha = 1.0
        dx = step[:k]
        for _ in range(60):
            xn = x.copy()
            xn[idx] = x[idx] + alpha * dx
            if np.all(xn >= red.p) and np.all(xn <= UPPER_CAP):
                break
            alpha *= 0.5
        x = xn
        lam = lam + alpha * step[k]
    g = red.t_grad(x)
    r1 = red.F_grad(x) - lam * g
    free = x < UPPER_CAP
    kkt = max(float(np.max(np.abs(r1[free]), initial=0.0)), abs(red.t(x) - t_star))
    return x, lam, kkt


def _require_regular(H: FiniteGraph) -> int:
    d = H.regular_degree()
    if d is None or H.e == 0:
        raise DomainError(f"pattern {H} must be a regular graph with at least one edge")
    return d


def symmetric_min(W0: StepGraphon, H: FiniteGraph, t: float, *, restarts: int = N_RESTARTS,
                  seed: int = rngmod.DEFAULT_SEED) -> VariationalSolution:
    """Minimise I_{W0}(g) over g on W0's blocks with t(H, g) = t."""
    _require_regular(H)
    t0 = hom_density(H, W0)
    fmax, tmax = f_max_graphon(H, W0)
    kind = ConstraintKind.HOM_DENSITY
    if t <= t0:
        return VariationalSolution(W0, 0.0, t, kind, t0 - t, Regime.SYMMETRIC_CERTIFIED, (0.0, 0.0),
                                   t0, tmax, note="target at or below the base density")
    if t > tmax * (1 + 1e-12):
        raise InfeasibleError(f"target {t!r} exceeds t_max = {tmax!r}")
    if t >= tmax * (1 - 1e-12):
        obj = relative_entropy(W0, fmax)
        return VariationalSolution(fmax, obj, t, kind, tmax - t, Regime.SYMMETRIC_CERTIFIED, (obj, obj),
                                   t0, tmax, note="target equals t_max; f_max is the unique minimiser")

    mask = relevant_blocks(H, W0).mask() & omega_mask(W0).free
    red = _Reduced(W0, H, mask)
    results = []
    for k in range(restarts):
        gen = rngmod.substream(seed, k)
        x0 = red.p + gen.random(red.n) * (1.0 - red.p)
        x, lam = _augmented_lagrangian(red, t, x0)
        x, lam, kkt = _newton_polish(red, t, x, lam)
        results.append((red.F(x), tuple(x), lam, kkt))
    # deterministic reduction: lexicographic min on (objective, entries)
    results.sort(key=lambda r: (r[0], r[1]))
    best = results[0]
    xs = np.array([r[1] for r in results])
    spread = float(np.max(np.abs(xs - xs[0]))) if len(xs) > 1 else 0.0
    x = np.array(best[1])
    g = W0.with_values(red.matrix(x))
    obj = relative_entropy(W0, g)
    return VariationalSolution(
        g, obj, t, kind, hom_density(H, g) - t, Regime.BRACKET_ONLY, (0.0, obj), t0, tmax,
        restarts=restarts, restart_spread=spread, unique_certified=spread <= UNIQUE_TOL,
        kkt_residual=best[3], multiplier=best[2],
    )


# --- bipartite and Erdos-Renyi bases --------------------------------------------

def bipartite_base(W0: StepGraphon):
    """(gamma, p) if W0 is f_p^gamma up to merging equal blocks, else None."""
    s = W0.simplified()
    v = s.values
    if s.m == 2 and v[0, 0] == 0.0 and v[1, 1] == 0.0 and 0.0 < v[0, 1] < 1.0:
        return s.widths[0], float(v[0, 1])
    return None


def constant_base(W0: StepGraphon):
    v = W0.values
    if np.all(v == v[0, 0]) and 0.0 < v[0, 0] < 1.0:
        return float(v[0, 0])
    return None


def bipartite_t(H: FiniteGraph, gamma, r: float) -> float:
    """t(H, f_r^gamma) = t(H, f_1^gamma) r^{e(H)}."""
    return hom_density(H, two_block(gamma, 0.0, 1.0, 0.0)) * r**H.e


def bipartite_phase(p: float, gamma, constraint: ConstraintKind | str, r: float, d: int | None = None) -> Phase:
    """Symmetric iff (r^d, h_p(r)) is on the convex minorant (d = 2 for the operator norm)."""
    constraint = ConstraintKind(constraint)
    if not 0.0 < float(gamma) < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    if constraint is ConstraintKind.OPERATOR_NORM:
        d = 2
    elif d is None:
        raise DomainError("degree d is required for the homomorphism-density constraint")
    return Phase.SYMMETRIC if on_minorant(p, d, r) else Phase.BROKEN


@dataclass
class PhiBracket:
    lower: float
    upper: float
    regime: Regime
    solution: VariationalSolution
    witness: object = None
    increasing: bool | None = None
    grid: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "regime": self.regime.value,
            "solution": self.solution.to_dict(),
            "witness": self.witness.to_dict() if self.witness is not None else None,
            "monotone_grid": self.grid,
            "increasing": self.increasing,
        }


def phi_bracket(W0: StepGraphon, H: FiniteGraph, t: float, *, seed: int = rngmod.DEFAULT_SEED,
                restarts: int = N_RESTARTS, monotone_points: int = 0) -> PhiBracket:
    """Bracket on phi(W0, t); certified where the minorant theory applies."""
    from .witnesses import witness_geps

    d = _require_regular(H)
    sol = symmetric_min(W0, H, t, restarts=restarts, seed=seed)
    out = PhiBracket(0.0, sol.objective, Regime.BRACKET_ONLY, sol)
    if t <= sol.t_base:
        out.regime = Regime.SYMMETRIC_CERTIFIED
    else:
        bp = bipartite_base(W0)
        cp = constant_base(W0)
        r = None
        if bp is not None and H.is_bipartite():
            gamma, p = bp
            r = (t / bipartite_t(H, gamma, 1.0)) ** (1.0 / H.e)
        elif cp is not None:
            p = cp
            r = t ** (1.0 / H.e)
        if r is not None and r <= 1.0:
            if on_minorant(p, d, r):
                out.lower = out.upper = sol.objective
                out.regime = Regime.SYMMETRIC_CERTIFIED
                sol.regime = Regime.SYMMETRIC_CERTIFIED
                sol.bracket = (sol.objective, sol.objective)
            elif bp is not None:
                try:
                    w = witness_geps(p, bp[0], H, r)
                except WitnessNotFoundError:
                    w = None
                if w is not None and w.entropy_witness < out.upper:
                    out.upper = w.entropy_witness
                    out.witness = w
                    out.regime = Regime.BROKEN_CERTIFIED
                    sol.regime = Regime.BROKEN_CERTIFIED
                    sol.bracket = (0.0, out.upper)
    if monotone_points > 1 and t > sol.t_base:
        ts = np.linspace(sol.t_base, t, monotone_points + 1)[1:]
        objs = [symmetric_min(W0, H, float(s), restarts=max(2, restarts // 4), seed=seed).objective for s in ts]
        out.grid = [[float(a), float(b)] for a, b in zip(ts, objs)]
        out.increasing = bool(all(b > a for a, b in zip(objs, objs[1:])))
    return out


@dataclass
class ScanRow:
    r: float
    t_target: float
    on_minorant: bool
    symmetric_I: float
    witness_I: float | None


def phase_scan(p: float, gamma, constraint: ConstraintKind | str, r_grid, H: FiniteGraph | None = None,
               with_witness: bool = True) -> list[ScanRow]:
    """One row per r: target value, minorant flag, symmetric entropy, witness entropy when broken."""
    from .linalg import operator_norm
    from .witnesses import witness_geps

    constraint = ConstraintKind(constraint)
    if constraint is ConstraintKind.HOM_DENSITY:
        if H is None:
            raise DomainError("a pattern graph is required for the homomorphism-density scan")
        d = _require_regular(H)
    else:
        d = 2
    g = float(gamma)
    prof = analyze_psi(p, d)
    rows = []
    for r in r_grid:
        r = float(r)
        if not p <= r <= 1.0:
            raise DomainError(f"r = {r!r} outside [p, 1]")
        if constraint is ConstraintKind.HOM_DENSITY:
            target = bipartite_t(H, gamma, r)
        else:
            target = operator_norm(two_block(gamma, 0.0, r, 0.0))
        onm = on_minorant(p, d, r, prof)
        sym = g * (1 - g) * bernoulli_kl(p, r)
        wit = None
        if not onm and with_witness:
            try:
                wit = witness_geps(p, gamma, H, r, constraint=constraint).entropy_witness
            except WitnessNotFoundError:
                wit = None
        rows.append(ScanRow(r, target, onm, sym, wit))
    return rows
