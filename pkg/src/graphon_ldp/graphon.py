"""Step graphons with exact rational block widths.

A step graphon is a partition of [0, 1] into consecutive intervals of widths
gamma_1..gamma_m (stored as ``Fraction``) together with a symmetric matrix of
block values.  Every binary operation first moves both arguments onto the
common refinement of their partitions, so width round-off never creates
spurious slivers.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DomainError, InvalidLabelingError, StructuralError
from .graphs import FiniteGraph

MAX_EQUIPARTITION = 4096


def as_fraction(w) -> Fraction:
    """Accept ``Fraction``, ``int``, ``"a/b"`` strings, ``(num, den)`` pairs or floats.

    Floats are read through their shortest decimal repr, so 0.3 becomes 3/10;
    pass a ``Fraction`` to get the exact binary value instead.
    """
    if isinstance(w, Fraction):
        return w
    if isinstance(w, (tuple, list)) and len(w) == 2:
        return Fraction(int(w[0]), int(w[1]))
    if isinstance(w, (int, np.integer)):
        return Fraction(int(w))
    if isinstance(w, str):
        return Fraction(w.strip())
    if isinstance(w, (float, np.floating)):
        if not math.isfinite(w):
            raise DomainError(f"width must be finite, got {w!r}")
        return Fraction(repr(float(w)))
    raise DomainError(f"cannot interpret {w!r} as a rational width")


class StepGraphon:
    """Block-constant graphon f = (p_ij) on the partition given by ``widths``.

    The value matrix is copied and made read-only, so instances behave as
    immutable values and may be shared freely.
    """

    __slots__ = ("widths", "values", "_gamma", "_cuts")

    def __init__(self, widths: Iterable, values):
        widths = tuple(as_fraction(w) for w in widths)
        if not widths:
            raise DomainError("a step graphon needs at least one block")
        if any(w <= 0 for w in widths):
            raise DomainError("block widths must be positive")
        if sum(widths) != 1:
            raise DomainError(f"block widths must sum to 1 exactly, got {sum(widths)}")
        vals = np.array(values, dtype=float)
        m = len(widths)
        if vals.shape != (m, m):
            raise DomainError(f"values must be {m}x{m}, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)) or np.any((vals < 0) | (vals > 1)):
            raise DomainError("block values must lie in [0, 1]")
        if not np.array_equal(vals, vals.T):
            raise DomainError("block values must be symmetric")
        vals.setflags(write=False)
        self.widths = widths
        self.values = vals
        self._gamma = None
        self._cuts = None

    @property
    def m(self) -> int:
        return len(self.widths)

    @property
    def gamma(self) -> np.ndarray:
        """Widths as floats."""
        if self._gamma is None:
            g = np.array([float(w) for w in self.widths])
            g.setflags(write=False)
            self._gamma = g
        return self._gamma

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        """Cumulative right endpoints; the last one is 1."""
        if self._cuts is None:
            acc, cuts = Fraction(0), []
            for w in self.widths:
                acc += w
                cuts.append(acc)
            self._cuts = tuple(cuts)
        return self._cuts

    def area(self) -> np.ndarray:
        return np.outer(self.gamma, self.gamma)

    def block_index(self, x) -> np.ndarray:
        """Block containing each point of ``x`` (right-closed intervals, 0 in block 0)."""
        cuts = np.array([float(c) for c in self.breakpoints[:-1]])
        return np.searchsorted(cuts, np.asarray(x, dtype=float), side="left")

    def evaluate(self, x, y) -> np.ndarray:
        return self.values[self.block_index(x), self.block_index(y)]

    def refine(self, breakpoints: Sequence[Fraction]) -> StepGraphon:
        """Same function on a finer partition; ``breakpoints`` must contain ours."""
        bps = sorted(set(as_fraction(b) for b in breakpoints) | {Fraction(1)})
        bps = [b for b in bps if 0 < b <= 1]
        own = self.breakpoints
        if not set(own) <= set(bps):
            raise StructuralError("refinement must contain every existing breakpoint")
        widths, idx, prev = [], [], Fraction(0)
        for b in bps:
            widths.append(b - prev)
            idx.append(bisect.bisect_left(own, b))
            prev = b
        idx = np.array(idx)
        return StepGraphon(widths, self.values[np.ix_(idx, idx)])

    def permuted(self, perm: Sequence[int]) -> StepGraphon:
        """Reorder the blocks; block ``k`` of the result is block ``perm[k]`` of self."""
        perm = list(perm)
        if sorted(perm) != list(range(self.m)):
            raise DomainError("not a permutation of the blocks")
        return StepGraphon([self.widths[i] for i in perm], self.values[np.ix_(perm, perm)])

    def with_values(self, values) -> StepGraphon:
        return StepGraphon(self.widths, values)

    def equipartition(self, cap: int = MAX_EQUIPARTITION) -> tuple[StepGraphon, int]:
        """Refine to N equal blocks, N the lcm of the width denominators."""
        n = reduce(math.lcm, (w.denominator for w in self.widths), 1)
        if n > cap:
            raise CapacityError(f"equipartition needs {n} blocks (cap {cap})")
        return self.refine([Fraction(k, n) for k in range(1, n + 1)]), n

    def simplified(self) -> StepGraphon:
        """Merge adjacent blocks whose rows and columns coincide."""
        keep = [0]
        for i in range(1, self.m):
            j = keep[-1]
            if not np.array_equal(self.values[i], self.values[j]):
                keep.append(i)
        if len(keep) == self.m:
            return self
        groups = keep + [self.m]
        widths = [sum(self.widths[groups[k]:groups[k + 1]], Fraction(0)) for k in range(len(keep))]
        return StepGraphon(widths, self.values[np.ix_(keep, keep)])

    def __eq__(self, other):
        if not isinstance(other, StepGraphon):
            return NotImplemented
        return self.widths == other.widths and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.widths, self.values.tobytes()))

    def __repr__(self):
        w = ", ".join(str(x) for x in self.widths)
        return f"StepGraphon(widths=({w}), values={self.values.tolist()})"


def common_refinement(f: StepGraphon, g: StepGraphon) -> tuple[StepGraphon, StepGraphon]:
    if f.widths == g.widths:
        return f, g
    bps = sorted(set(f.breakpoints) | set(g.breakpoints))
    return f.refine(bps), g.refine(bps)


# --- builders ---------------------------------------------------------------

def constant(a: float) -> StepGraphon:
    return StepGraphon([1], [[a]])


def two_block(gamma, a: float, b: float, c: float) -> StepGraphon:
    """f_{a,b,c}^gamma: value a on [0,gamma]^2, c on (gamma,1]^2, b across."""
    g = as_fraction(gamma)
    if not 0 < g < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    return StepGraphon([g, 1 - g], [[a, b], [b, c]])


def bipartite(gamma, r: float) -> StepGraphon:
    """f_r^gamma: complete bipartite shape with weight r across the cut."""
    return two_block(gamma, 0.0, r, 0.0)


def uniform_blocks(values) -> StepGraphon:
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    return StepGraphon([Fraction(1, m)] * m, values)


def from_adjacency(adj) -> StepGraphon:
    """Empirical graphon of a graph on N vertices (N equal blocks)."""
    return uniform_blocks(np.asarray(adj, dtype=float))


# --- homomorphism densities -------------------------------------------------

@lru_cache(maxsize=256)
def _hom_terms(v: int, edges: tuple) -> tuple:
    """einsum argument skeleton: one vector per vertex, one matrix per edge."""
    return tuple([(i,) for i in range(v)] + [tuple(e) for e in edges])


# contraction paths depend only on the pattern and the block count
_PATHS: dict = {}


class HomPolynomial:
    """t(H, .) as a polynomial in the block values for fixed widths.

    ``value(P)`` and ``grad(P)`` take a full symmetric m x m matrix.  ``grad``
    returns the unsymmetrised partial derivatives G[a, b] with respect to the
    matrix entry P[a, b] treated as independent of P[b, a].
    """

    def __init__(self, H: FiniteGraph, gamma):
        self.H = H
        self.gamma = np.asarray(gamma, dtype=float)
        self._terms = _hom_terms(H.v, H.edges)
        self._paths = {}

    def _einsum(self, operands, subs, out, key):
        args = []
        for op, s in zip(operands, subs):
            args += [op, list(s)]
        args.append(list(out))
        path = self._paths.get(key)
        if path is None:
            gkey = (self.H.v, self.H.edges, len(self.gamma), key)
            path = _PATHS.get(gkey)
            if path is None:
                path = _PATHS[gkey] = np.einsum_path(*args, optimize="greedy")[0]
            self._paths[key] = path
        return np.einsum(*args, optimize=path)

    def value(self, P) -> float:
        P = np.asarray(P, dtype=float)
        v = self.H.v
        ops = [self.gamma] * v + [P] * self.H.e
        return float(self._einsum(ops, self._terms, (), "value"))

    def edge_grad(self, P, k: int) -> np.ndarray:
        """Derivative with respect to the matrix used by edge ``k`` alone."""
        P = np.asarray(P, dtype=float)
        v = self.H.v
        ops = [self.gamma] * v + [P] * self.H.e
        subs = list(self._terms)
        del ops[v + k]
        del subs[v + k]
        return self._einsum(ops, subs, self.H.edges[k], ("edge", k))

    def grad(self, P) -> np.ndarray:
        G = np.zeros((len(self.gamma), len(self.gamma)))
        for k in range(self.H.e):
            G += self.edge_grad(P, k)
        return G

    def sym_grad(self, P) -> np.ndarray:
        """Gradient with respect to the symmetric entries: G + G^T off the diagonal, G on it."""
        return self.value_and_sym_grad(P)[1]

    def value_and_sym_grad(self, P) -> tuple[float, np.ndarray]:
        """t and its symmetric gradient, one contraction per edge orbit of H.

        For symmetric P an automorphism carrying edge k to edge j maps the
        edge-k derivative to the edge-j one or its transpose, and both give the
        same symmetrised matrix.  t itself is <P, G_k> for any single edge k.
        """
        P = np.asarray(P, dtype=float)
        S = np.zeros_like(P)
        value = None
        for orbit in self.H.edge_orbits():
            G = self.edge_grad(P, orbit[0])
            if value is None:
                value = float(np.sum(P * G))
            Gs = G + G.T
            np.fill_diagonal(Gs, np.diag(G))
            S += len(orbit) * Gs
        return value, S


def hom_density(H: FiniteGraph, f: StepGraphon) -> float:
    """t(H, f) as the labeling sum over [m]^v, contracted with einsum."""
    if H.e == 0:
        return 1.0
    return HomPolynomial(H, f.gamma).value(f.values)


def hom_density_exact(H: FiniteGraph, f: StepGraphon) -> Fraction:
    """t(H, f) in exact rational arithmetic.

    Widths and float values are both dyadic-or-rational, so everything is
    scaled to integers by the common denominators and contracted with an
    object-dtype einsum.  Meant for small m and v (witness certification).
    """
    if H.e == 0:
        return Fraction(1)
    widths = f.widths
    vals = [[Fraction(float(x)) for x in row] for row in f.values]
    A = math.lcm(*(w.denominator for w in widths))
    B = math.lcm(*(x.denominator for row in vals for x in row))
    g = np.array([int(w * A) for w in widths], dtype=object)
    P = np.array([[int(x * B) for x in row] for row in vals], dtype=object)
    # fold each vertex weight into one incident edge matrix; isolated vertices give A each
    args, fargs, seen = [], [], set()
    for a, b in H.edges:
        M = P
        if a not in seen:
            M = g[:, None] * M
        if b not in seen:
            M = M * g[None, :]
        seen |= {a, b}
        args += [M, [a, b]]
        fargs += [M.astype(float), [a, b]]
    path = np.einsum_path(*fargs, [], optimize="greedy")[0]
    total = int(np.einsum(*args, [], optimize=path)) * A ** (H.v - len(seen))
    return Fraction(total, A**H.v * B**H.e)


def labeled_density(H: FiniteGraph, f: StepGraphon, Y: Sequence[int]) -> float:
    """t(H, f, Y) for a 0-indexed labeling vector Y in [m]^v."""
    Y = list(Y)
    if len(Y) != H.v:
        raise InvalidLabelingError(f"labeling has length {len(Y)}, graph has {H.v} vertices")
    if any(int(y) != y or not 0 <= y < f.m for y in Y):
        raise InvalidLabelingError(f"labels must lie in 0..{f.m - 1}, got {Y}")
    out = float(np.prod(f.gamma[Y]))
    for a, b in H.edges:
        out *= f.values[Y[a], Y[b]]
    return out


# --- masks and relevance ----------------------------------------------------

class BlockTag(enum.IntEnum):
    ZERO = 0
    ONE = 1
    FREE = 2


@dataclass(frozen=True)
class OmegaMask:
    """Per-block tags of a base graphon: Zero, One or Free."""

    tags: np.ndarray

    @property
    def zero(self) -> np.ndarray:
        return self.tags == BlockTag.ZERO

    @property
    def one(self) -> np.ndarray:
        return self.tags == BlockTag.ONE

    @property
    def free(self) -> np.ndarray:
        return self.tags == BlockTag.FREE


def omega_mask(W0: StepGraphon) -> OmegaMask:
    v = W0.values
    tags = np.full(v.shape, BlockTag.FREE, dtype=int)
    tags[v == 0.0] = BlockTag.ZERO
    tags[v == 1.0] = BlockTag.ONE
    tags.setflags(write=False)
    return OmegaMask(tags)


@dataclass(frozen=True)
class RelevantSet:
    """Relevant blocks of W0 for H, stored as ordered pairs closed under swap."""

    m: int
    pairs: frozenset

    def __contains__(self, ab) -> bool:
        return tuple(ab) in self.pairs

    def __len__(self):
        return len(self.pairs)

    def mask(self) -> np.ndarray:
        M = np.zeros((self.m, self.m), dtype=bool)
        for a, b in self.pairs:
            M[a, b] = True
        return M

    def region_measure(self, widths) -> float:
        g = np.asarray([float(w) for w in widths])
        return float(np.sum(np.outer(g, g)[self.mask()]))


def relevant_blocks(H: FiniteGraph, W0: StepGraphon) -> RelevantSet:
    """Blocks touched by an edge of some labeling Y with every edge on a positive block.

    Counting relevant labelings through each edge is a contraction of the
    support matrix, so the m^v enumeration is carried out by einsum.
    """
    m = W0.m
    support = (W0.values > 0).astype(float)
    pairs = set()
    if H.e:
        poly = HomPolynomial(H, np.ones(m))
        for k in range(H.e):
            through = poly.edge_grad(support, k) * support
            for a, b in zip(*np.nonzero(through > 0)):
                pairs.add((int(a), int(b)))
                pairs.add((int(b), int(a)))
    return RelevantSet(m, frozenset(pairs))


def f_max_graphon(H: FiniteGraph, W0: StepGraphon) -> tuple[StepGraphon, float]:
    """f_max = 1 on relevant blocks, W0 elsewhere, and t_max = t(H, f_max)."""
    vals = W0.values.copy()
    vals[relevant_blocks(H, W0).mask()] = 1.0
    fmax = W0.with_values(vals)
    return fmax, hom_density(H, fmax)


# --- entropy and Omega membership --------------------------------------------

def in_omega(W0: StepGraphon, f: StepGraphon, tol: float = 0.0) -> bool:
    """f agrees with W0 on every block where W0 is 0 or 1 (exactly, or within ``tol``)."""
    w, g = common_refinement(W0, f)
    fixed = (w.values == 0.0) | (w.values == 1.0)
    return bool(np.all(np.abs(g.values[fixed] - w.values[fixed]) <= tol))


def relative_entropy(W0: StepGraphon, f: StepGraphon, tol: float = 0.0) -> float:
    """I_{W0}(f) = 1/2 sum gamma_i gamma_j h_{p_ij}(f_ij); +inf outside W_Omega."""
    from .entropy import bernoulli_kl

    if not in_omega(W0, f, tol):
        return math.inf
    w, g = common_refinement(W0, f)
    free = (w.values > 0.0) & (w.values < 1.0)
    if not np.any(free):
        return 0.0
    h = bernoulli_kl(w.values[free], g.values[free])
    return 0.5 * float(np.sum(w.area()[free] * h))


# --- norms and averaging ------------------------------------------------------

def lp_norm(f: StepGraphon, q: float = 1.0) -> float:
    """||f||_q = (int |f|^q)^(1/q)."""
    return float(np.sum(f.area() * np.abs(f.values) ** q)) ** (1.0 / q)


def edge_density(f: StepGraphon) -> float:
    return float(np.sum(f.area() * f.values))


def d_average(f: StepGraphon, coarse_widths: Sequence, d: int) -> StepGraphon:
    """Blockwise d-norm coarsening f* with (f*)_ij = ||f on block ij||_d."""
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d!r}")
    coarse = StepGraphon(coarse_widths, np.zeros((len(coarse_widths),) * 2))
    fine = f.breakpoints
    if not set(coarse.breakpoints) <= set(fine):
        raise StructuralError("coarse partition is not a coarsening of the graphon's partition")
    # group of each fine block
    group = np.array([bisect.bisect_left(coarse.breakpoints, c) for c in fine])
    k = coarse.m
    onehot = np.zeros((f.m, k))
    onehot[np.arange(f.m), group] = f.gamma
    num = onehot.T @ (f.values**d) @ onehot
    G = coarse.gamma
    vals = (num / np.outer(G, G)) ** (1.0 / d)
    vals = np.clip(0.5 * (vals + vals.T), 0.0, 1.0)
    return StepGraphon(coarse.widths, vals)


def random_step_graphon(rng: np.random.Generator, m: int, denom: int | None = None) -> StepGraphon:
    """Random widths (multiples of 1/denom) and uniform symmetric values, for tests and demos."""
    denom = denom or 4 * m
    cuts = np.sort(rng.choice(np.arange(1, denom), size=m - 1, replace=False)) if m > 1 else []
    edges = [0, *cuts, denom]
    widths = [Fraction(int(b - a), denom) for a, b in zip(edges[:-1], edges[1:])]
    u = rng.random((m, m))
    return StepGraphon(widths, np.triu(u) + np.triu(u, 1).T)
