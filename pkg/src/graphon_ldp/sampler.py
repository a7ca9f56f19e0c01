"""Sampling G_{kn} from a block model, empirical densities and tail probabilities.

Vertex i (0-based) of a sample on kn vertices sits in block i // n.  Edge
indicators are independent Bernoulli variables with the block probability,
so Zero blocks never carry an edge and One blocks always do.

Homomorphism counts are exact integers (int64 einsum over the adjacency
matrix), and the event t(H, G) >= t is decided against the integer threshold
ceil(t * (kn)^v), so no float round-off enters the tail estimates.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from . import rng as rngmod
from .cutnorm import delta_cut_upper
from .errors import CapacityError, DomainError, InsufficientConditioningError
from .graphon import StepGraphon, _hom_terms
from .graphs import FiniteGraph

MAX_MAPS = 10**8
MAX_FREE_PAIRS = 21
MIN_SAMPLES = 1000
MIN_ACCEPTED = 20
CHUNK = 10_000
WILSON_Z = float(stats.norm.ppf(0.975))


@dataclass
class SampledGraph:
    kn: int
    n: int
    adjacency: np.ndarray
    blocks: np.ndarray
    seed: int

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def to_graph(self) -> FiniteGraph:
        return FiniteGraph(self.kn, tuple(self.edges()))

    def step_graphon(self) -> StepGraphon:
        """The empirical graphon f^G on kn equal blocks."""
        return StepGraphon([Fraction(1, self.kn)] * self.kn, self.adjacency.astype(float))

    def to_dict(self) -> dict:
        return {"kn": self.kn, "n": self.n, "seed": self.seed, "blocks": self.blocks.tolist(),
                "edges": [list(e) for e in self.edges()]}


class TailMode(str, enum.Enum):
    MONTE_CARLO = "MonteCarlo"
    EXACT = "ExactEnumeration"


@dataclass
class TailEstimate:
    t: float
    kn: int
    samples: int
    p_hat: float
    interval: tuple[float, float]
    mode: TailMode
    hits: int = 0
    rate: float | None = None
    rate_lower_bound: float | None = None

    @property
    def sigma(self) -> float:
        """Binomial standard error of p_hat (0 for exact enumeration)."""
        if self.mode is TailMode.EXACT or self.samples == 0:
            return 0.0
        return math.sqrt(self.p_hat * (1 - self.p_hat) / self.samples)

    def to_dict(self) -> dict:
        return {
            "t": self.t, "kn": self.kn, "samples": self.samples, "hits": self.hits,
            "p_hat": self.p_hat, "interval": list(self.interval), "sigma": self.sigma,
            "rate": self.rate, "rate_lower_bound": self.rate_lower_bound, "mode": self.mode.value,
        }


def wilson_interval(hits: int, n: int, z: float = WILSON_Z) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ph = hits / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if hits == 0 else max(0.0, mid - half)
    hi = 1.0 if hits == n else min(1.0, mid + half)
    return lo, hi


# --- block structure ---------------------------------------------------------------

def _uniform_blocks(W0: StepGraphon) -> tuple[StepGraphon, int]:
    """W0 on its LCM equipartition, with the block count."""
    if len(set(W0.widths)) == 1:
        return W0, W0.m
    return W0.equipartition()


def vertex_probabilities(W0: StepGraphon, n: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Pair probability matrix Q (kn x kn, zero diagonal), block labels, and k."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    U, k = _uniform_blocks(W0)
    blocks = np.repeat(np.arange(k), n)
    Q = U.values[np.ix_(blocks, blocks)].copy()
    np.fill_diagonal(Q, 0.0)
    return Q, blocks, k


def _draw(Q: np.ndarray, gen: np.random.Generator, count: int) -> np.ndarray:
    """``count`` symmetric 0/1 adjacency matrices with P(A_ij = 1) = Q_ij."""
    N = Q.shape[0]
    iu = np.triu_indices(N, 1)
    u = gen.random((count, len(iu[0])))
    bits = (u < Q[iu]).astype(np.int64)
    A = np.zeros((count, N, N), dtype=np.int64)
    A[:, iu[0], iu[1]] = bits
    A[:, iu[1], iu[0]] = bits
    return A


def sample_graph(W0: StepGraphon, n: int, seed: int = rngmod.DEFAULT_SEED) -> SampledGraph:
    """One draw of G_{kn} from W0 (auto-refined to equal blocks)."""
    Q, blocks, k = vertex_probabilities(W0, n)
    A = _draw(Q, rngmod.master(seed), 1)[0]
    return SampledGraph(k * n, int(n), A.astype(bool), blocks, int(seed))


# --- homomorphism counts --------------------------------------------------------------

class _HomCounter:
    """hom(H, G) for a batch of adjacency matrices, as exact int64."""

    def __init__(self, H: FiniteGraph, N: int):
        if float(N) ** H.v > MAX_MAPS:
            raise CapacityError(f"(kn)^v = {N}^{H.v} exceeds the brute-force cap {MAX_MAPS:.0e}")
        self.H, self.N = H, N
        terms = _hom_terms(H.v, H.edges)[H.v:]
        # vertices not on any edge contribute a factor N each
        self.isolated = H.v - len({x for e in H.edges for x in e})
        letters = "abcdefghijklmnopqrstuvwxy"
        if H.v > len(letters):
            raise CapacityError("pattern graph too large for the counter")
        self.expr = ",".join("z" + letters[a] + letters[b] for a, b in terms) + "->z"
        self._path = None

    def __call__(self, A: np.ndarray) -> np.ndarray:
        if self.H.e == 0:
            return np.full(A.shape[0], self.N**self.H.v, dtype=np.int64)
        ops = [A] * self.H.e
        if self._path is None:
            self._path = np.einsum_path(self.expr, *[a[:1].astype(float) for a in ops], optimize="greedy")[0]
        return np.einsum(self.expr, *ops, optimize=self._path) * self.N**self.isolated


def _threshold(t: float, N: int, v: int) -> int:
    """Smallest integer hom count with hom / N^v >= t."""
    return math.ceil(Fraction(float(t)) * N**v)


def empirical_density(H: FiniteGraph, G: SampledGraph) -> float:
    """hom(H, G) / (kn)^v over all vertex maps, loops and repeats included."""
    count = _HomCounter(H, G.kn)(G.adjacency.astype(np.int64)[None])[0]
    return float(Fraction(int(count), G.kn**H.v))


# --- tails ------------------------------------------------------------------------------

def _free_pairs(Q: np.ndarray):
    N = Q.shape[0]
    iu = np.triu_indices(N, 1)
    q = Q[iu]
    free = (q > 0) & (q < 1)
    return iu, q, free


def exact_tail(W0: StepGraphon, H: FiniteGraph, t: float, kn: int) -> TailEstimate:
    """P(t(H, G_{kn}) >= t) by summing over every graph on the Free pairs."""
    k = _uniform_blocks(W0)[1]
    if kn % k:
        raise DomainError(f"kn = {kn} is not a multiple of the {k} equal blocks")
    Q, _, _ = vertex_probabilities(W0, kn // k)
    iu, q, free = _free_pairs(Q)
    nf = int(np.sum(free))
    if nf > MAX_FREE_PAIRS:
        raise CapacityError(f"{nf} free vertex pairs exceed the enumeration cap {MAX_FREE_PAIRS}")
    counter = _HomCounter(H, kn)
    thr = _threshold(t, kn, H.v)
    fixed = np.zeros((kn, kn), dtype=np.int64)
    ones = (~free) & (q == 1)
    fixed[iu[0][ones], iu[1][ones]] = 1
    fixed = fixed + fixed.T
    fi, fj = iu[0][free], iu[1][free]
    qf = q[free]
    logp, log1p = np.log(qf), np.log1p(-qf)
    total = 0.0
    step = 1 << 14
    for lo in range(0, 1 << nf, step):
        codes = np.arange(lo, min(lo + step, 1 << nf), dtype=np.int64)
        bits = (codes[:, None] >> np.arange(nf)) & 1
        A = np.repeat(fixed[None], len(codes), axis=0)
        A[:, fi, fj] = bits
        A[:, fj, fi] = bits
        hit = counter(A) >= thr
        if np.any(hit):
            b = bits[hit]
            total += float(np.sum(np.exp(b @ logp + (1 - b) @ log1p)))
    p = min(1.0, total)
    rate = -math.log(p) / kn**2 if p > 0 else None
    return TailEstimate(float(t), kn, 1 << nf, p, (p, p), TailMode.EXACT, rate=rate)


def _count_chunk(Q, counter, thr, seed, c, size):
    A = _draw(Q, rngmod.substream(seed, c), size)
    return int(np.sum(counter(A) >= thr))


def tail_estimate(W0: StepGraphon, H: FiniteGraph, t: float, kn: int, samples: int,
                  seed: int = rngmod.DEFAULT_SEED, workers: int | None = None) -> TailEstimate:
    """Monte Carlo P(t(H, G_{kn}) >= t) with a Wilson 95% interval.

    Samples are drawn in fixed chunks, chunk c from substream c, so the result
    depends on the seed only and not on how many workers run.
    """
    if samples < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    k = _uniform_blocks(W0)[1]
    if kn % k:
        raise DomainError(f"kn = {kn} is not a multiple of the {k} equal blocks")
    Q, _, _ = vertex_probabilities(W0, kn // k)
    counter = _HomCounter(H, kn)
    thr = _threshold(t, kn, H.v)
    sizes = [min(CHUNK, samples - lo) for lo in range(0, samples, CHUNK)]
    workers = workers or rngmod.worker_count()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        hits = sum(pool.map(lambda cs: _count_chunk(Q, counter, thr, seed, *cs), enumerate(sizes)))
    p = hits / samples
    lo, hi = wilson_interval(hits, samples)
    est = TailEstimate(float(t), kn, samples, p, (lo, hi), TailMode.MONTE_CARLO, hits=hits)
    if hits > 0:
        est.rate = -math.log(p) / kn**2
    else:
        est.rate_lower_bound = -math.log(hi) / kn**2
    return est


# --- conditional concentration -----------------------------------------------------

@dataclass
class ConcentrationSummary:
    kn: int
    t: float
    samples: int
    accepted: int
    acceptance_rate: float
    mean: float
    median: float
    q10: float
    q90: float
    maximum: float
    distances: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "kn": self.kn, "t": self.t, "samples": self.samples, "accepted": self.accepted,
            "acceptance_rate": self.acceptance_rate, "mean": self.mean, "median": self.median,
            "q10": self.q10, "q90": self.q90, "max": self.maximum,
        }


def coarsen(A: np.ndarray, W0: StepGraphon, n: int) -> StepGraphon:
    """Average the empirical graphon of A over W0's own block grid."""
    k = _uniform_blocks(W0)[1]
    # fine block index -> W0 block index via the breakpoints
    mids = (np.arange(k) + 0.5) / k
    owner = W0.block_index(mids)
    vert = owner[np.repeat(np.arange(k), n)]
    m = W0.m
    S = np.zeros((m, m))
    np.add.at(S, (vert[:, None], vert[None, :]), A)
    sizes = np.bincount(vert, minlength=m).astype(float)
    avg = S / np.outer(sizes, sizes)
    avg = np.clip(0.5 * (avg + avg.T), 0.0, 1.0)
    return StepGraphon(W0.widths, avg)


def conditional_concentration(W0: StepGraphon, H: FiniteGraph, t: float, kn: int, samples: int,
                              optimizer: StepGraphon, seed: int = rngmod.DEFAULT_SEED,
                              workers: int | None = None) -> ConcentrationSummary:
    """Distances from accepted samples to the optimizer under the event t(H, G) >= t.

    Each accepted graph is averaged over W0's blocks and compared with the
    optimizer through the upper end of delta_cut_bounds (delta_cut_upper), which already takes
    the best block relabeling.
    """
    k = _uniform_blocks(W0)[1]
    if kn % k:
        raise DomainError(f"kn = {kn} is not a multiple of the {k} equal blocks")
    n = kn // k
    Q, _, _ = vertex_probabilities(W0, n)
    counter = _HomCounter(H, kn)
    thr = _threshold(t, kn, H.v)
    sizes = [min(CHUNK, samples - lo) for lo in range(0, samples, CHUNK)]

    def run(cs):
        c, size = cs
        A = _draw(Q, rngmod.substream(seed, c), size)
        keep = A[counter(A) >= thr]
        return [delta_cut_upper(coarsen(a, W0, n), optimizer, seed=seed)[0] for a in keep]

    workers = workers or rngmod.worker_count()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        dist = [d for part in pool.map(run, enumerate(sizes)) for d in part]
    rate = len(dist) / samples
    if len(dist) < MIN_ACCEPTED:
        raise InsufficientConditioningError(
            f"only {len(dist)} of {samples} samples met t(H, G) >= {t!r}", rate)
    d = np.array(dist)
    q10, med, q90 = np.quantile(d, [0.1, 0.5, 0.9])
    return ConcentrationSummary(kn, float(t), samples, len(dist), rate, float(d.mean()), float(med),
                                float(q10), float(q90), float(d.max()), dist)
