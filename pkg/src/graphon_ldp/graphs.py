"""Small simple graphs used as homomorphism patterns."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path

from .errors import DomainError, FormatError


@dataclass(frozen=True)
class FiniteGraph:
    """A simple labeled graph on vertices ``0..v-1``.

    ``regular`` may be set to a degree ``d``; construction then fails unless
    every vertex has degree exactly ``d``.
    """

    v: int
    edges: tuple[tuple[int, int], ...]
    regular: int | None = field(default=None, compare=False)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if int(self.v) != self.v or self.v < 1:
            raise DomainError(f"vertex count must be a positive integer, got {self.v!r}")
        seen = set()
        normalized = []
        for a, b in self.edges:
            a, b = int(a), int(b)
            if not (0 <= a < self.v and 0 <= b < self.v):
                raise DomainError(f"edge ({a}, {b}) out of range for {self.v} vertices")
            if a == b:
                raise DomainError(f"loop at vertex {a}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise DomainError(f"duplicate edge {key}")
            seen.add(key)
            normalized.append(key)
        object.__setattr__(self, "edges", tuple(normalized))
        if self.regular is not None:
            degs = self.degrees()
            if any(x != self.regular for x in degs):
                raise DomainError(f"graph is not {self.regular}-regular (degrees {degs})")

    @property
    def e(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.v
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def regular_degree(self) -> int | None:
        """Common degree if the graph is regular, else None."""
        degs = self.degrees()
        return degs[0] if all(x == degs[0] for x in degs) else None

    def edge_orbits(self) -> tuple[tuple[int, ...], ...]:
        """Edge indices grouped by the automorphism group (possibly finer if the group is huge)."""
        return _edge_orbits(self.v, self.edges)

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.v)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def components(self) -> list[list[int]]:
        adj = self.adjacency()
        seen = [False] * self.v
        comps = []
        for s in range(self.v):
            if seen[s]:
                continue
            stack, comp = [s], []
            seen[s] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in adj[u]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def component_count(self) -> int:
        return len(self.components())

    def bipartition(self) -> list[int] | None:
        """A 2-colouring (0/1 per vertex), or None if the graph has an odd cycle."""
        adj = self.adjacency()
        colour = [-1] * self.v
        for s in range(self.v):
            if colour[s] >= 0:
                continue
            colour[s] = 0
            stack = [s]
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if colour[w] < 0:
                        colour[w] = 1 - colour[u]
                        stack.append(w)
                    elif colour[w] == colour[u]:
                        return None
        return colour

    def is_bipartite(self) -> bool:
        return self.bipartition() is not None

    def independent_set_counts(self) -> list[int]:
        """``s[k]`` = number of independent vertex subsets of size ``k``."""
        adj = self.adjacency()
        counts = [0] * (self.v + 1)
        for k in range(self.v + 1):
            for subset in combinations(range(self.v), k):
                ss = set(subset)
                if all(not (adj[u] & ss) for u in subset):
                    counts[k] += 1
        return counts

    def __str__(self):
        return self.name or f"FiniteGraph(v={self.v}, e={self.e})"


def edge() -> FiniteGraph:
    return FiniteGraph(2, ((0, 1),), regular=1, name="edge")


def path(k: int) -> FiniteGraph:
    """Path with ``k`` edges."""
    return FiniteGraph(k + 1, tuple((i, i + 1) for i in range(k)), name=f"path{k}")


def cycle(k: int) -> FiniteGraph:
    return FiniteGraph(k, tuple((i, (i + 1) % k) for i in range(k)), regular=2, name=f"C{k}")


def triangle() -> FiniteGraph:
    return FiniteGraph(3, ((0, 1), (1, 2), (0, 2)), regular=2, name="triangle")


def complete(k: int) -> FiniteGraph:
    return FiniteGraph(k, tuple(combinations(range(k), 2)), regular=k - 1, name=f"K{k}")


def complete_bipartite(a: int, b: int) -> FiniteGraph:
    edges = tuple((i, a + j) for i in range(a) for j in range(b))
    return FiniteGraph(a + b, edges, regular=a if a == b else None, name=f"K{a},{b}")


def cube() -> FiniteGraph:
    """The 3-dimensional hypercube graph (3-regular, bipartite, 8 vertices)."""
    edges = tuple(
        (u, u ^ (1 << bit)) for u in range(8) for bit in range(3) if u < u ^ (1 << bit)
    )
    return FiniteGraph(8, edges, regular=3, name="cube")


BUILTIN = {
    "edge": edge,
    "path2": lambda: path(2),
    "triangle": triangle,
    "K3": triangle,
    "C4": lambda: cycle(4),
    "C6": lambda: cycle(6),
    "K4": lambda: complete(4),
    "K33": lambda: complete_bipartite(3, 3),
    "cube": cube,
}


def parse_graph(text: str, path: str | None = None) -> FiniteGraph:
    """Parse the edge-list format: a ``v e`` header then ``e`` lines ``a b`` (1-indexed)."""
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise FormatError("empty graph file", path=path)
    lineno, header = lines[0]
    parts = header.split()
    try:
        v, e = (int(x) for x in parts)
    except ValueError:
        raise FormatError(f"expected 'v e' header, got {header!r}", path=path, line=lineno) from None
    if v < 1 or e < 0:
        raise FormatError("vertex count must be positive and edge count non-negative", path=path, line=lineno)
    body = lines[1:]
    if len(body) != e:
        raise FormatError(f"header announces {e} edges, found {len(body)}", path=path, line=lineno)
    edges = []
    seen = set()
    for lineno, ln in body:
        try:
            a, b = (int(x) for x in ln.split())
        except ValueError:
            raise FormatError(f"expected 'a b', got {ln!r}", path=path, line=lineno) from None
        if not (1 <= a <= v and 1 <= b <= v):
            raise FormatError(f"vertex out of range 1..{v}", path=path, line=lineno)
        if a == b:
            raise FormatError(f"loop at vertex {a}", path=path, line=lineno)
        key = (min(a, b), max(a, b))
        if key in seen:
            raise FormatError(f"duplicate edge {a} {b}", path=path, line=lineno)
        seen.add(key)
        edges.append((a - 1, b - 1))
    return FiniteGraph(v, tuple(edges), name=Path(path).stem if path else "")


def format_graph(H: FiniteGraph) -> str:
    out = [f"{H.v} {H.e}"]
    out += [f"{a + 1} {b + 1}" for a, b in H.edges]
    return "\n".join(out) + "\n"


def load_graph(spec: str | Path) -> FiniteGraph:
    """Load a graph file, or build a builtin pattern by name (``C4``, ``cube``, ...)."""
    p = Path(spec)
    if not p.exists() and str(spec) in BUILTIN:
        return BUILTIN[str(spec)]()
    try:
        text = p.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read graph file: {exc}", path=str(spec)) from None
    return parse_graph(text, path=str(spec))


AUTOMORPHISM_CAP = 5000


@lru_cache(maxsize=256)
def _edge_orbits(v: int, edges: tuple) -> tuple[tuple[int, ...], ...]:
    adj = [set() for _ in range(v)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    deg = [len(x) for x in adj]
    index = {e: k for k, e in enumerate(edges)}
    parent = list(range(len(edges)))

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    image = [-1] * v
    used = [False] * v
    found = 0

    def extend(u):
        nonlocal found
        if found >= AUTOMORPHISM_CAP:
            return
        if u == v:
            found += 1
            for k, (a, b) in enumerate(edges):
                x, y = image[a], image[b]
                j = index[(min(x, y), max(x, y))]
                parent[find(k)] = find(j)
            return
        for c in range(v):
            if used[c] or deg[c] != deg[u]:
                continue
            if all((image[w] in adj[c]) == (w in adj[u]) for w in range(u)):
                image[u], used[c] = c, True
                extend(u + 1)
                image[u], used[c] = -1, False

    extend(0)
    groups: dict[int, list[int]] = {}
    for k in range(len(edges)):
        groups.setdefault(find(k), []).append(k)
    return tuple(tuple(g) for g in groups.values())
