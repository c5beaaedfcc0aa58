"""Semi-universal colouring/binning Slepian-Wolf scheme at small blocklengths.

The encoder sends the type of x and then, inside the type class, either a
colour of the induced subgraph of G_X^n (when few enough colours suffice
for rate r) or a pseudo-random bin index. The decoder knows only the zero
pattern of P_XY. Also here: brute-force oracles for the degree and
chromatic number of type-class subgraphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing.pool import ThreadPool

import numpy as np
from scipy.stats import beta

from .config import DEFAULT_CAPS, Caps, check_cap
from .graphs import (Graph, characteristic_graph, graph_from_bool_matrix,
                     greedy_coloring_matrix, optimal_coloring, sequence_adjacency)
from .probability import (EmpiricalType, as_joint, batch_conditional_entropy,
                          enumerate_types, type_class_array)

CHUNK = 4096


class CodebookError(RuntimeError):
    pass


@dataclass
class TypeRecord:
    index: int
    counts: tuple[int, ...]
    mode: str  # "color" or "bin"
    bound: int  # colours needed (exact or greedy)
    bound_kind: str  # "exact" or "greedy"
    members: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)  # 1-based colour or bin per member

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class SchemeCodebook:
    n: int
    rate: float
    seed: int
    p_support: np.ndarray
    graph: Graph
    num_bins: int
    types: list[TypeRecord]
    type_of: np.ndarray = field(repr=False)  # sequence code -> type index
    rank_of: np.ndarray = field(repr=False)  # sequence code -> rank in its class

    @property
    def kx(self) -> int:
        return self.p_support.shape[0]

    @property
    def ky(self) -> int:
        return self.p_support.shape[1]

    def code(self, seqs) -> np.ndarray:
        seqs = np.atleast_2d(np.asarray(seqs, dtype=np.int64))
        return seqs @ (self.kx ** np.arange(self.n - 1, -1, -1, dtype=np.int64))

    def split(self) -> dict:
        colored = sum(t.mode == "color" for t in self.types)
        return {"colored": colored, "binned": len(self.types) - colored}


def _bin_labels(seed: int, type_index: int, size: int, num_bins: int) -> np.ndarray:
    # counter-based generator keyed by (seed, type): reproducible per type
    gen = np.random.Generator(np.random.Philox(key=[seed % 2**64, type_index]))
    return gen.integers(num_bins, size=size) + 1


def build_scheme(p_xy, n: int, r: float, seed: int = 0, caps: Caps = DEFAULT_CAPS
                 ) -> SchemeCodebook:
    p = as_joint(p_xy)
    if n < 1 or r < 0:
        raise ValueError("need n >= 1 and r >= 0")
    kx = p.shape[0]
    check_cap("source sequences |X|^n", kx**n, caps.sequences)
    g = characteristic_graph(p)
    num_bins = math.ceil(2 ** (n * r))
    powers = kx ** np.arange(n - 1, -1, -1, dtype=np.int64)
    type_of = np.empty(kx**n, dtype=np.int64)
    rank_of = np.empty(kx**n, dtype=np.int64)
    records = []
    for ti, t in enumerate(enumerate_types(n, kx, caps)):
        members = type_class_array(t, caps)
        codes = members.astype(np.int64) @ powers
        type_of[codes] = ti
        rank_of[codes] = np.arange(len(members))
        adj = sequence_adjacency(g, members)
        if len(members) <= caps.exact_vertices:
            bound, colors = optimal_coloring(graph_from_bool_matrix(adj), caps)
            colors, kind = np.asarray(colors), "exact"
        else:
            bound, colors = greedy_coloring_matrix(adj)
            kind = "greedy"
        if math.log2(bound) < n * r:
            mode, labels = "color", np.asarray(colors, dtype=np.int64) + 1
        else:
            mode, labels = "bin", _bin_labels(seed, ti, len(members), num_bins)
        records.append(TypeRecord(ti, t.counts, mode, int(bound), kind, members, labels))
    return SchemeCodebook(n, float(r), int(seed), p > 0, g, num_bins, records, type_of, rank_of)


def encode(cb: SchemeCodebook, x_seq) -> tuple[int, int]:
    x = np.asarray(x_seq)
    if x.shape != (cb.n,):
        raise ValueError(f"expected a sequence of length {cb.n}")
    code = int(cb.code(x)[0])
    ti, rank = int(cb.type_of[code]), int(cb.rank_of[code])
    return ti, int(cb.types[ti].labels[rank])


def min_entropy_decode(candidates: np.ndarray, y_seq, kx: int, ky: int) -> np.ndarray:
    """Candidate with the least empirical H(x|y); ties go to the first row."""
    cand = np.asarray(candidates)
    if len(cand) == 0:
        raise CodebookError("empty bin")
    h = batch_conditional_entropy(cand, np.asarray(y_seq), kx, ky)
    best = h.min()
    return cand[int(np.flatnonzero(h <= best + 1e-12)[0])]


def decode(cb: SchemeCodebook, message: tuple[int, int], y_seq) -> np.ndarray:
    ti, label = message
    if not 0 <= ti < len(cb.types):
        raise ValueError(f"type index {ti} out of range")
    rec = cb.types[ti]
    y = np.asarray(y_seq, dtype=np.intp)
    members = rec.members[rec.labels == label]
    if rec.mode == "bin":
        # class arrays are lexicographic, so the first minimiser is the tie-break
        return min_entropy_decode(members, y, cb.kx, cb.ky)
    ok = cb.p_support[members.astype(np.intp), y[None, :]].all(axis=1)
    hits = members[ok]
    if len(hits) != 1:
        raise CodebookError(f"{len(hits)} sequences of colour {label} are compatible with y")
    return hits[0]


@dataclass
class SimulationReport:
    n: int
    rate: float
    seed: int
    trials: int
    errors: int
    colored_trials: int
    colored_errors: int
    per_type: list[dict]
    num_bins: int
    num_types: int
    p_xy: list

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials

    @property
    def empirical_exponent(self) -> float:
        if self.errors == 0:
            return math.inf
        return -math.log2(self.error_rate) / self.n

    def confidence_interval(self, level: float = 0.95) -> tuple[float, float]:
        """Clopper-Pearson interval for the error probability."""
        a = (1 - level) / 2
        k, t = self.errors, self.trials
        lo = 0.0 if k == 0 else float(beta.ppf(a, k, t - k + 1))
        hi = 1.0 if k == t else float(beta.ppf(1 - a, k + 1, t - k))
        return lo, hi

    def to_json(self) -> dict:
        lo, hi = self.confidence_interval()

        def exp_of(pr):
            return "inf" if pr <= 0 else _fmt(-math.log2(pr) / self.n)

        ee = self.empirical_exponent
        return {
            "config": {"n": self.n, "rate": self.rate, "seed": self.seed, "trials": self.trials,
                       "p_xy": self.p_xy},
            "trials": self.trials,
            "errors": self.errors,
            "error_rate": _fmt(self.error_rate),
            "empirical_exponent": "inf" if math.isinf(ee) else _fmt(ee),
            "error_rate_ci95": [_fmt(lo), _fmt(hi)],
            "exponent_ci95": [exp_of(hi), exp_of(lo)],
            "colored_trials": self.colored_trials,
            "colored_errors": self.colored_errors,
            "message_set": {
                "bins": self.num_bins,
                "types": self.num_types,
                "log2_bins_per_symbol": _fmt(math.log2(self.num_bins) / self.n),
                "log2_types_per_symbol": _fmt(math.log2(self.num_types) / self.n),
            },
            "per_type": self.per_type,
        }


def _fmt(v: float) -> float:
    return float(f"{v:.12g}")


def _run_chunk(cb: SchemeCodebook, p_flat: np.ndarray, ky: int, chunk: int, size: int):
    rng = np.random.default_rng([cb.seed % 2**64, chunk])
    draws = rng.choice(p_flat.size, size=(size, cb.n), p=p_flat)
    xs, ys = np.divmod(draws, ky)
    codes = cb.code(xs)
    tis = cb.type_of[codes]
    ranks = cb.rank_of[codes]
    labels = np.array([cb.types[t].labels[k] for t, k in zip(tis, ranks)], dtype=np.int64)
    ycodes = ys @ (ky ** np.arange(cb.n - 1, -1, -1, dtype=np.int64))
    keys = np.stack([tis, labels, ycodes], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = np.ravel(inv)
    first = np.zeros(len(uniq), dtype=np.int64)
    first[inv[::-1]] = np.arange(size)[::-1]
    decoded = np.empty((len(uniq), cb.n), dtype=np.int64)
    for j, (ti, lab, _) in enumerate(uniq):
        decoded[j] = decode(cb, (int(ti), int(lab)), ys[first[j]])
    wrong = (decoded[inv] != xs).any(axis=1)
    ntypes = len(cb.types)
    return (np.bincount(tis, minlength=ntypes), np.bincount(tis[wrong], minlength=ntypes))


def simulate(p_xy, n: int, r: float, trials: int, seed: int = 0, threads: int = 1,
             caps: Caps = DEFAULT_CAPS, codebook: SchemeCodebook | None = None
             ) -> SimulationReport:
    """Monte Carlo error rate of the scheme; reproducible from ``seed``."""
    p = as_joint(p_xy)
    if trials < 1:
        raise ValueError("need at least one trial")
    cb = codebook or build_scheme(p, n, r, seed, caps)
    sizes = [min(CHUNK, trials - s) for s in range(0, trials, CHUNK)]
    jobs = [(cb, p.ravel(), p.shape[1], c, s) for c, s in enumerate(sizes)]
    if threads > 1:
        with ThreadPool(threads) as pool:
            parts = pool.starmap(_run_chunk, jobs)
    else:
        parts = [_run_chunk(*j) for j in jobs]
    per_trials = sum(a for a, _ in parts)
    per_errors = sum(b for _, b in parts)
    colored = np.array([t.mode == "color" for t in cb.types])
    per_type = [
        {"counts": list(t.counts), "mode": t.mode, "bound": t.bound, "bound_kind": t.bound_kind,
         "size": t.size, "trials": int(per_trials[t.index]), "errors": int(per_errors[t.index])}
        for t in cb.types if per_trials[t.index] > 0
    ]
    return SimulationReport(
        n=cb.n, rate=cb.rate, seed=cb.seed, trials=trials, errors=int(per_errors.sum()),
        colored_trials=int(per_trials[colored].sum()),
        colored_errors=int(per_errors[colored].sum()),
        per_type=per_type, num_bins=cb.num_bins, num_types=len(cb.types), p_xy=p.tolist())


# -- oracles -------------------------------------------------------------------


def _type_of(g: Graph, q, n: int | None) -> EmpiricalType:
    if not isinstance(q, EmpiricalType):
        q = EmpiricalType(tuple(int(c) for c in q))
    if q.k != g.n:
        raise ValueError(f"type over {q.k} letters for a graph on {g.n} vertices")
    if n is not None and q.n != n:
        raise ValueError(f"type has length {q.n}, not {n}")
    return q


def oracle_degree(g: Graph, q, n: int | None = None, caps: Caps = DEFAULT_CAPS,
                  block: int = 2048) -> int:
    """Maximum degree of G^n restricted to the type class, by a full scan."""
    q = _type_of(g, q, n)
    members = type_class_array(q, caps).astype(np.intp)
    closed = g.closed_matrix()
    best = 0
    for s in range(0, len(members), block):
        rows = members[s:s + block]
        adj = np.ones((len(rows), len(members)), dtype=bool)
        for i in range(q.n):
            adj &= closed[rows[:, i][:, None], members[:, i][None, :]]
        best = max(best, int(adj.sum(axis=1).max()) - 1)  # drop the sequence itself
    return best


def oracle_chromatic_typeclass(g: Graph, q, n: int | None = None,
                               caps: Caps = DEFAULT_CAPS) -> int:
    """Exact chromatic number of G^n restricted to the type class."""
    q = _type_of(g, q, n)
    check_cap("exact colouring vertices", q.size(), caps.exact_vertices)
    members = type_class_array(q, caps)
    return optimal_coloring(graph_from_bool_matrix(sequence_adjacency(g, members)), caps)[0]


@dataclass
class FiniteNRate:
    value: float
    argmax_type: tuple[int, ...]
    n: int
    per_type: dict = field(repr=False)


def witsenhausen_finite_n(g: Graph, n: int, caps: Caps = DEFAULT_CAPS) -> FiniteNRate:
    """max over types of (1/n) log2 of the type-class chromatic number."""
    best, arg, table = -1.0, None, {}
    for t in enumerate_types(n, g.n, caps):
        val = math.log2(oracle_chromatic_typeclass(g, t, n, caps)) / n
        table[t.counts] = val
        if val > best:
            best, arg = val, t.counts
    return FiniteNRate(best, arg, n, table)
