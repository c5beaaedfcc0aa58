"""Simple graphs as per-vertex bitsets.

Covers strong products and powers, induced subgraphs, characteristic graphs
of sources and channels, and exact chromatic / independence numbers for
small graphs (branch and bound).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .config import DEFAULT_CAPS, Caps, check_cap


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    ``adj[v]`` is an int bitset of the neighbours of ``v``. ``radix`` is set
    on strong products: vertex ``i`` then stands for the tuple of base
    indices given by :meth:`label`. ``labels`` is set on induced subgraphs and
    maps each vertex back to the parent graph.
    """

    n: int
    adj: tuple[int, ...]
    radix: tuple[int, ...] | None = field(default=None, compare=False)
    labels: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        if len(self.adj) != self.n:
            raise ValueError("adjacency length does not match vertex count")
        full = (1 << self.n) - 1
        for v, row in enumerate(self.adj):
            if row & ~full:
                raise ValueError(f"vertex {v} has neighbours out of range")
            if (row >> v) & 1:
                raise ValueError(f"self-loop at vertex {v}")
            for u in _bits(row):
                if not (self.adj[u] >> v) & 1:
                    raise ValueError(f"edge ({v},{u}) is not symmetric")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        rows = [0] * n
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for {n} vertices")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, tuple(rows))

    @classmethod
    def from_matrix(cls, a) -> "Graph":
        a = np.asarray(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency matrix must be square")
        b = a != 0
        if not np.array_equal(b, b.T):
            raise ValueError("adjacency matrix is not symmetric")
        if b.diagonal().any():
            raise ValueError("adjacency matrix has self-loops")
        rows = tuple(sum(1 << int(j) for j in np.flatnonzero(r)) for r in b)
        return cls(a.shape[0], rows)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls(n, tuple(full ^ (1 << v) for v in range(n)))

    @classmethod
    def edgeless(cls, n: int) -> "Graph":
        return cls(n, (0,) * n)

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def clique_union(cls, sizes: Sequence[int]) -> "Graph":
        edges, start = [], 0
        for s in sizes:
            edges += itertools.combinations(range(start, start + s), 2)
            start += s
        return cls.from_edges(start, edges)

    # -- views -------------------------------------------------------------

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.adj[u] >> v) & 1)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in _bits(self.adj[u]) if u < v]

    def degree(self, v: int) -> int:
        return self.adj[v].bit_count()

    def degrees(self) -> list[int]:
        return [r.bit_count() for r in self.adj]

    def max_degree(self) -> int:
        return max(self.degrees())

    def num_edges(self) -> int:
        return sum(self.degrees()) // 2

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        for u, v in self.edges():
            m[u, v] = m[v, u] = True
        return m

    def closed_matrix(self) -> np.ndarray:
        """Adjacency plus identity, the support pattern used by kappa."""
        return self.matrix() | np.eye(self.n, dtype=bool)

    def label(self, v: int) -> tuple[int, ...]:
        if self.radix is None:
            return (v,)
        return decode_vertex(v, self.radix)

    def complement(self) -> "Graph":
        full = (1 << self.n) - 1
        return Graph(self.n, tuple(full ^ r ^ (1 << v) for v, r in enumerate(self.adj)))

    def is_proper_coloring(self, colors: Sequence[int]) -> bool:
        return all(colors[u] != colors[v] for u, v in self.edges())

    def to_json(self) -> dict:
        return {"vertices": self.n, "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_json(cls, obj: dict) -> "Graph":
        if "adjacency" in obj:
            return cls.from_matrix(obj["adjacency"])
        return cls.from_edges(int(obj["vertices"]), obj.get("edges", []))


def decode_vertex(v: int, radix: Sequence[int]) -> tuple[int, ...]:
    out = []
    for r in reversed(radix):
        v, d = divmod(v, r)
        out.append(d)
    return tuple(reversed(out))


def encode_vertex(label: Sequence[int], radix: Sequence[int]) -> int:
    v = 0
    for d, r in zip(label, radix):
        v = v * r + d
    return v


# -- products and subgraphs ------------------------------------------------


def strong_product(g: Graph, h: Graph, caps: Caps = DEFAULT_CAPS) -> Graph:
    n = g.n * h.n
    check_cap("strong product vertices", n, caps.product_vertices)
    closed_h = [r | (1 << v) for v, r in enumerate(h.adj)]
    rows = []
    for u in range(g.n):
        nbrs = [u, *_bits(g.adj[u])]
        for v in range(h.n):
            row = 0
            for u2 in nbrs:
                row |= closed_h[v] << (u2 * h.n)
            rows.append(row ^ (1 << (u * h.n + v)))
    radix = (g.radix or (g.n,)) + (h.radix or (h.n,))
    return Graph(n, tuple(rows), radix=radix)


def strong_power(g: Graph, n: int, caps: Caps = DEFAULT_CAPS) -> Graph:
    if n < 1:
        raise ValueError("power must be >= 1")
    check_cap("strong power vertices", g.n**n, caps.product_vertices)
    out = Graph(g.n, g.adj, radix=(g.n,))
    for _ in range(n - 1):
        out = strong_product(out, g, caps)
    return out


def induced_subgraph(g: Graph, vertices: Iterable[int]) -> Graph:
    verts = sorted(set(int(v) for v in vertices))
    if not verts:
        raise ValueError("induced subgraph needs at least one vertex")
    for v in verts:
        if not 0 <= v < g.n:
            raise IndexError(f"vertex {v} out of range for graph on {g.n} vertices")
    pos = {v: i for i, v in enumerate(verts)}
    rows = []
    for v in verts:
        row = 0
        for u in _bits(g.adj[v]):
            if u in pos:
                row |= 1 << pos[u]
        rows.append(row)
    return Graph(len(verts), tuple(rows), labels=tuple(verts))


def sequence_adjacency(g: Graph, seqs: np.ndarray) -> np.ndarray:
    """Adjacency matrix of ``g^n`` restricted to the given rows of ``seqs``.

    Two sequences are adjacent iff every coordinate pair is equal or adjacent
    in ``g`` and the sequences differ.
    """
    seqs = np.asarray(seqs, dtype=np.intp)
    closed = g.closed_matrix()
    m = len(seqs)
    out = np.ones((m, m), dtype=bool)
    for i in range(seqs.shape[1]):
        col = seqs[:, i]
        out &= closed[col[:, None], col[None, :]]
    np.fill_diagonal(out, False)
    return out


def graph_from_bool_matrix(a: np.ndarray) -> Graph:
    """Fast path for trusted boolean matrices (no symmetry check)."""
    weights = [1 << j for j in range(a.shape[0])]
    rows = []
    for r in a:
        idx = np.flatnonzero(r)
        rows.append(sum(weights[j] for j in idx))
    return Graph(a.shape[0], tuple(rows))


# -- characteristic graphs -------------------------------------------------


def characteristic_graph(p_xy, zero_tol: float = 0.0) -> Graph:
    """Graph on X with x ~ x' iff some y has P(x,y) P(x',y) > 0."""
    from .probability import as_joint

    p = as_joint(p_xy)
    support = p > zero_tol
    share = (support.astype(np.int64) @ support.T.astype(np.int64)) > 0
    np.fill_diagonal(share, False)
    return Graph.from_matrix(share)


def channel_graph(w, zero_tol: float = 0.0) -> Graph:
    """Confusability graph of a channel: rows are inputs, columns outputs."""
    from .probability import as_channel

    support = as_channel(w) > zero_tol
    share = (support.astype(np.int64) @ support.T.astype(np.int64)) > 0
    np.fill_diagonal(share, False)
    return Graph.from_matrix(share)


def confusable_set(p_xy, y_seq: Sequence[int], caps: Caps = DEFAULT_CAPS) -> list[tuple[int, ...]]:
    """All x-sequences with prod_i P(x_i | y_i) > 0, in lexicographic order."""
    from .probability import as_joint

    p = as_joint(p_xy)
    choices = []
    for y in y_seq:
        if not 0 <= y < p.shape[1]:
            raise IndexError(f"side-information symbol {y} out of range")
        choices.append(np.flatnonzero(p[:, y] > 0).tolist())
    total = int(np.prod([len(c) for c in choices], dtype=object)) if choices else 1
    check_cap("confusable set size", total, caps.sequences)
    return list(itertools.product(*choices))


# -- colouring and independent sets ---------------------------------------


def greedy_coloring_bound(g: Graph, order: Sequence[int] | None = None) -> tuple[int, list[int]]:
    """First-fit colouring; default order is descending degree, ties by index."""
    if order is None:
        deg = g.degrees()
        order = sorted(range(g.n), key=lambda v: (-deg[v], v))
    colors = [-1] * g.n
    for v in order:
        used = {colors[u] for u in _bits(g.adj[v])}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return max(colors) + 1, colors


def greedy_coloring_matrix(a: np.ndarray) -> tuple[int, np.ndarray]:
    """First-fit colouring on a dense boolean adjacency (large type classes)."""
    m = a.shape[0]
    deg = a.sum(axis=1)
    order = np.lexsort((np.arange(m), -deg))
    colors = np.full(m, -1, dtype=np.int64)
    for v in order:
        used = colors[a[v]]
        used = used[used >= 0]
        if used.size == 0:
            colors[v] = 0
            continue
        taken = np.zeros(used.max() + 2, dtype=bool)
        taken[used] = True
        colors[v] = int(np.argmin(taken))
    return int(colors.max()) + 1, colors


def _max_clique(adj: Sequence[int], cand: int) -> int:
    """Size of a maximum clique inside the vertex bitset ``cand``."""
    best = 0

    def colour_bound(p: int) -> list[tuple[int, int]]:
        # greedy colour classes give an upper bound for each prefix
        order, k = [], 0
        while p:
            k += 1
            q = p
            while q:
                low = q & -q
                v = low.bit_length() - 1
                q &= ~adj[v] & ~low
                p &= ~low
                order.append((v, k))
        return order

    def expand(size: int, p: int) -> None:
        nonlocal best
        for v, k in reversed(colour_bound(p)):
            if size + k <= best:
                return
            if not (p >> v) & 1:
                continue
            newp = p & adj[v]
            if newp:
                expand(size + 1, newp)
            elif size + 1 > best:
                best = size + 1
            p &= ~(1 << v)

    expand(0, cand)
    return best


def clique_number(g: Graph) -> int:
    return _max_clique(g.adj, (1 << g.n) - 1)


def independence_number(g: Graph, caps: Caps = DEFAULT_CAPS) -> int:
    check_cap("independence number vertices", g.n, caps.exact_vertices)
    return clique_number(g.complement())


def chromatic_number(g: Graph, caps: Caps = DEFAULT_CAPS) -> int:
    """Exact chromatic number by DSATUR branch and bound."""
    return optimal_coloring(g, caps)[0]


def optimal_coloring(g: Graph, caps: Caps = DEFAULT_CAPS) -> tuple[int, list[int]]:
    """A minimum proper colouring (DSATUR branch and bound)."""
    check_cap("exact colouring vertices", g.n, caps.exact_vertices,
              "use greedy_coloring_bound for larger graphs")
    lower = clique_number(g)
    upper, best_colors = greedy_coloring_bound(g)
    if lower == upper:
        return upper, best_colors
    n, adj = g.n, g.adj
    deg = g.degrees()
    best = upper
    colors = [-1] * n
    sat = [0] * n  # bitmask of neighbour colours

    def pick() -> int:
        v_best, key_best = -1, None
        for v in range(n):
            if colors[v] >= 0:
                continue
            key = (sat[v].bit_count(), deg[v], -v)
            if key_best is None or key > key_best:
                v_best, key_best = v, key
        return v_best

    def search(colored: int, used: int) -> None:
        nonlocal best, best_colors
        if used >= best:
            return
        if colored == n:
            best, best_colors = used, colors.copy()
            return
        v = pick()
        for c in range(min(used + 1, best - 1)):
            if (sat[v] >> c) & 1:
                continue
            colors[v] = c
            changed = [u for u in _bits(adj[v]) if colors[u] < 0 and not (sat[u] >> c) & 1]
            for u in changed:
                sat[u] |= 1 << c
            search(colored + 1, max(used, c + 1))
            for u in changed:
                sat[u] &= ~(1 << c)
            colors[v] = -1
            if best == lower:
                return

    search(0, 0)
    return best, best_colors


def tightness_graph(k: int) -> Graph:
    """Path 0-1-...-2^k plus a star from 0 to every vertex >= 2.

    Chromatic number 3 for every k >= 2 while kappa grows like k/2.
    """
    n = 2**k + 1
    edges = {(i, i + 1) for i in range(n - 1)} | {(0, j) for j in range(2, n)}
    return Graph.from_edges(n, sorted(edges))
