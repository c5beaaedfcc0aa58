"""The graph functional kappa and the quantities built from it.

kappa(G, Q) is the largest conditional entropy H(V|Q) over channels V that
are supported on the closed neighbourhoods of G and leave Q invariant
(QV = Q). Writing J = diag(Q) V, this is the maximum-entropy coupling of Q
with itself on the support pattern A + I, minus H(Q). The maximiser has the
form J_ij = exp(w_i + w_j) on the pattern, and ``w`` is found by Newton's
method on the (strictly convex) dual. The dual objective at ``w`` is an
upper bound on kappa, so every solution carries a certified gap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .config import DEFAULT_CAPS, Caps, SolverError, check_cap
from .graphs import Graph, channel_graph, characteristic_graph, chromatic_number
from .probability import (
    EmpiricalType,
    _compositions,
    as_channel,
    as_distribution,
    as_joint,
    conditional_entropy,
    entropy,
)

LN2 = math.log(2.0)
FEAS_TOL = 1e-10


@dataclass
class KappaSolution:
    value: float
    argmax_channel: np.ndarray
    feasibility_residual: float
    iterations: int
    upper_bound: float
    # d kappa / d Q on the support of Q (bits); off-support entries are nan
    gradient: np.ndarray = field(repr=False)

    @property
    def gap(self) -> float:
        return max(0.0, self.upper_bound - self.value)

    def to_json(self) -> dict:
        return {
            "value_bits": self.value,
            "argmax_channel": self.argmax_channel.tolist(),
            "residual": self.feasibility_residual,
            "duality_gap": self.gap,
            "iterations": self.iterations,
            "restarts_used": 1,
        }


def symmetric_scaling(kernel: np.ndarray, q: np.ndarray, tol: float = 1e-15,
                      max_iter: int = 200) -> tuple[np.ndarray, np.ndarray, int]:
    """Find w with sum_j K_ij exp(w_i + w_j) = q_i.

    ``kernel`` must be symmetric, nonnegative, with positive diagonal, and
    ``q`` strictly positive. Returns the scaled matrix, ``w`` and the Newton
    iteration count.
    """
    w = 0.5 * np.log(q / np.diag(kernel))

    def phi(w):
        e = np.exp(w)
        p = kernel * np.outer(e, e)
        return p.sum() - 2.0 * q @ w, p

    val, p = phi(w)
    for it in range(1, max_iter + 1):
        r = p.sum(axis=1)
        res = r - q
        if np.max(np.abs(res)) <= tol * max(1.0, q.max()):
            return p, w, it
        hess = np.diag(r) + p
        try:
            step = np.linalg.solve(hess, -res)
        except np.linalg.LinAlgError:
            step = -res / r
        dec = -res @ step
        if dec < 1e-10:
            # inside the quadratic-convergence region; phi changes fall below
            # float resolution, so skip the line search
            w = w + step
            val, p = phi(w)
            continue
        t = 1.0
        while True:
            new_val, new_p = phi(w + t * step)
            if new_val <= val - 0.25 * t * dec or t < 1e-12:
                break
            t *= 0.5
        if new_val > val and t < 1e-12:
            # no further progress possible at machine precision
            return p, w, it
        w, val, p = w + t * step, new_val, new_p
    r = p.sum(axis=1)
    if np.max(np.abs(r - q)) > 1e-11:
        raise SolverError("symmetric scaling did not converge", best=(p, w))
    return p, w, max_iter


def kappa(g: Graph, q, tol: float = 1e-9) -> KappaSolution:
    """kappa(G, Q) in bits, with the maximising channel."""
    q = as_distribution(q)
    if q.size != g.n:
        raise ValueError(f"distribution has {q.size} letters, graph has {g.n} vertices")
    return _kappa_pattern(g.closed_matrix(), q, tol)


def _kappa_pattern(pattern: np.ndarray, q: np.ndarray, tol: float = 1e-9) -> KappaSolution:
    k = q.size
    sup = np.flatnonzero(q > 0)
    v_full = np.eye(k)
    grad = np.full(k, np.nan)
    if sup.size == 1:
        grad[sup] = 0.0
        return KappaSolution(0.0, v_full, 0.0, 0, 0.0, grad)
    qs = q[sup]
    mask = pattern[np.ix_(sup, sup)].astype(float)
    p, w, iters = symmetric_scaling(mask, qs)
    r = p.sum(axis=1)
    v = p / r[:, None]
    value = conditional_entropy(v, qs)
    residual = float(np.max(np.abs(qs @ v - qs)))
    hq = entropy(qs)
    upper = (p.sum() - 2.0 * qs @ w - 1.0) / LN2 - hq
    v_full[np.ix_(sup, sup)] = v
    grad[sup] = (np.log(qs) - 2.0 * w) / LN2
    sol = KappaSolution(value, v_full, residual, iters, float(upper), grad)
    if residual > FEAS_TOL or sol.gap > tol:
        raise SolverError(
            f"kappa solver stopped with residual {residual:.3g}, gap {sol.gap:.3g}", best=sol)
    return sol


def clique_union_kappa(sizes, q) -> float:
    """Closed form for a disjoint union of cliques: H(X | clique index)."""
    q = np.asarray(q, dtype=float)
    out, start = 0.0, 0
    for s in sizes:
        block = q[start:start + s]
        mass = block.sum()
        if mass > 0:
            out += mass * entropy(block / mass)
        start += s
    return out


# -- type-restricted variant -------------------------------------------------


def kappa_n(g: Graph, q: EmpiricalType, caps: Caps = DEFAULT_CAPS) -> float:
    """Max of H(V|Q) over conditional types V << G with QV = Q, exhaustively.

    Enumerates integer matrices N with row and column sums ``q.counts`` and
    support inside the closed neighbourhoods of ``g``.
    """
    if q.k != g.n:
        raise ValueError("type alphabet does not match graph")
    counts = list(q.counts)
    n = q.n
    closed = g.closed_matrix()
    allowed = [np.flatnonzero(closed[a]).tolist() for a in range(g.n)]
    bound = 1
    for a, c in enumerate(counts):
        if c:
            bound *= math.comb(c + len(allowed[a]) - 1, len(allowed[a]) - 1)
    check_cap("conditional type enumeration", bound, caps.types)

    def row_entropy(row, c):
        return -sum(x / c * math.log2(x / c) for x in row if x)

    best = 0.0
    cap = counts[:]  # remaining column capacity
    rows = [a for a in range(g.n) if counts[a]]

    def fill(cols, c, remaining):
        # compositions of c over the allowed columns within remaining capacity;
        # the capacity stays reduced by the composition while it is yielded
        if len(cols) == 1:
            if c <= remaining[cols[0]]:
                remaining[cols[0]] -= c
                yield (c,)
                remaining[cols[0]] += c
            return
        head, tail = cols[0], cols[1:]
        tail_cap = sum(remaining[j] for j in tail)
        for x in range(max(0, c - tail_cap), min(c, remaining[head]) + 1):
            remaining[head] -= x
            for rest in fill(tail, c - x, remaining):
                yield (x, *rest)
            remaining[head] += x

    def rec(i, acc):
        nonlocal best
        if i == len(rows):
            best = max(best, acc)
            return
        a = rows[i]
        cols = allowed[a]
        for comp in fill(cols, counts[a], cap):
            rec(i + 1, acc + counts[a] / n * row_entropy(comp, counts[a]))

    rec(0, 0.0)
    return best


# -- maximisation over the simplex ------------------------------------------


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    return np.array(list(_compositions(resolution, k)), dtype=float) / resolution


def _face_centroids(k: int, max_k: int = 10) -> list[np.ndarray]:
    if k > max_k:
        return [np.eye(k)[i] for i in range(k)] + [np.full(k, 1.0 / k)]
    out = []
    for size in range(1, k + 1):
        for face in itertools.combinations(range(k), size):
            q = np.zeros(k)
            q[list(face)] = 1.0 / size
            out.append(q)
    return out


def _ascend(fun, q0: np.ndarray, max_iter: int = 200):
    """Local ascent from ``q0`` on its face of the simplex (SLSQP)."""
    idx = np.flatnonzero(q0 > 0)
    f0, _ = fun(q0)
    if idx.size < 2:
        return f0, q0

    def embed(x):
        q = np.zeros_like(q0)
        q[idx] = np.maximum(x, 0.0)
        return q / q.sum()

    def neg(x):
        f, g = fun(embed(x))
        return -f, -g[idx]

    res = minimize(neg, q0[idx], jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * idx.size,
                   constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0,
                                 "jac": lambda x: np.ones_like(x)}],
                   options={"ftol": 1e-13, "maxiter": max_iter})
    q = embed(res.x)
    q[q < 1e-15] = 0.0
    q /= q.sum()
    f, _ = fun(q)
    if f < f0:
        return f0, q0
    return f, q


@dataclass
class SimplexMax:
    value: float
    argmax: np.ndarray
    restarts_used: int
    seeds_evaluated: int


def maximize_on_simplex(fun, k: int, resolution: int = 16, restarts: int = 32,
                        max_seeds: int = 256, seed: int = 0) -> SimplexMax:
    """Multi-start local ascent; ``fun(q) -> (value, gradient)``.

    Seeds are face barycentres plus (a deterministic subsample of) the
    simplex grid with step ``1/resolution``. The best ``restarts`` seeds are
    refined by projected gradient ascent. The result is a lower bound on the
    true maximum.
    """
    grid = _grid_seeds(k, resolution, max_seeds, seed)
    seeds = _face_centroids(k) + list(grid)
    scored = []
    for s in seeds:
        f, _ = fun(s)
        scored.append((f, tuple(np.round(s, 12)), s))
    scored.sort(key=lambda t: (-t[0], t[1]))
    best_f, best_q = -math.inf, None
    used = 0
    seen = set()
    for f0, key, s in scored:
        if used >= restarts:
            break
        if key in seen:
            continue
        seen.add(key)
        used += 1
        f, q = _ascend(fun, s)
        if f > best_f + 1e-15 or (abs(f - best_f) <= 1e-15 and tuple(q) < tuple(best_q)):
            best_f, best_q = f, q
    return SimplexMax(float(best_f), best_q, used, len(seeds))


def _grid_seeds(k: int, resolution: int, max_seeds: int, seed: int) -> np.ndarray:
    total = math.comb(resolution + k - 1, k - 1)
    if total <= max_seeds:
        return simplex_grid(k, resolution)
    # uniform sample of grid points via sorted random cuts
    rng = np.random.default_rng(seed)
    pts = set()
    while len(pts) < max_seeds:
        cuts = np.sort(rng.choice(resolution + k - 1, size=k - 1, replace=False))
        parts = np.diff(np.concatenate(([-1], cuts, [resolution + k - 1]))) - 1
        pts.add(tuple(int(x) for x in parts))
    return np.array(sorted(pts), dtype=float) / resolution


def _kappa_objective(g: Graph, sign: float = 1.0, with_entropy: bool = False):
    pattern = g.closed_matrix()

    def fun(q):
        sol = _kappa_pattern(pattern, q)
        grad = np.nan_to_num(sol.gradient, nan=0.0)
        if not with_entropy:
            return sol.value, grad
        pos = q > 0
        hgrad = np.zeros_like(q)
        hgrad[pos] = -np.log2(q[pos]) - 1.0 / LN2
        return entropy(q) - sol.value, hgrad - grad

    return fun


@dataclass
class WitsenhausenBound:
    kappa_max: float
    argmax_q: np.ndarray
    log2_gamma: float | None
    restarts_used: int

    @property
    def best(self) -> float:
        if self.log2_gamma is None:
            return self.kappa_max
        return min(self.kappa_max, self.log2_gamma)

    @property
    def smaller(self) -> str:
        if self.log2_gamma is None or self.kappa_max < self.log2_gamma:
            return "kappa"
        return "gamma"


def witsenhausen_bound(g: Graph, resolution: int = 16, restarts: int = 32,
                       caps: Caps = DEFAULT_CAPS) -> WitsenhausenBound:
    """max_Q kappa(G, Q) (multi-start estimate) alongside log2 chromatic number."""
    res = maximize_on_simplex(_kappa_objective(g), g.n, resolution, restarts)
    log_gamma = None
    if g.n <= caps.exact_vertices:
        log_gamma = math.log2(chromatic_number(g, caps))
    return WitsenhausenBound(max(0.0, res.value), res.argmax, log_gamma, res.restarts_used)


def kappa2(p_xy, q_x, q_u_given_x) -> float:
    """[kappa(G_U, Q_U) - H(Q_{U|X} | Q_X)]^+ for the auxiliary graph G_U."""
    p = as_joint(p_xy)
    qx = as_distribution(q_x)
    w = as_channel(q_u_given_x)
    if p.shape[0] != qx.size or w.shape[0] != qx.size:
        raise ValueError("dimension mismatch between source, Q_X and test channel")
    q_uy = w.T @ p
    g_u = characteristic_graph(q_uy / q_uy.sum())
    q_u = qx @ w
    q_u = q_u / q_u.sum()
    return max(0.0, kappa(g_u, q_u).value - conditional_entropy(w, qx))


@dataclass
class ZeroErrorBound:
    lb_bits: float
    argmax_prior: np.ndarray
    graph: Graph
    restarts_used: int


def zero_error_capacity_lb(w, resolution: int = 16, restarts: int = 32) -> ZeroErrorBound:
    """max_P [H(P) - kappa(G(W), P)], which equals log2 of the independence number."""
    g = channel_graph(as_channel(w))
    return zero_error_lb_graph(g, resolution, restarts)


def zero_error_lb_graph(g: Graph, resolution: int = 16, restarts: int = 32) -> ZeroErrorBound:
    res = maximize_on_simplex(_kappa_objective(g, with_entropy=True), g.n, resolution, restarts)
    return ZeroErrorBound(max(0.0, res.value), res.argmax, g, res.restarts_used)
