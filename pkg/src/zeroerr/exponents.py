"""Slepian-Wolf error exponents with full side information.

Every exponent here is an infimum over joint distributions Q_XY. Q is
restricted to the support of P_XY (elsewhere the divergence is infinite),
the infimum is taken over a fixed simplex grid on that support, and the best
grid point is then polished with SLSQP. The grid is shared between exponents
for the same source, so orderings that hold pointwise hold on the output.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .config import DEFAULT_CAPS, Caps, check_cap
from .graphs import Graph, characteristic_graph, chromatic_number
from .kappa import LN2, _kappa_pattern, symmetric_scaling
from .probability import as_joint, entropy

INF = math.inf
# constraint comparisons accept values this far below the rate
RATE_TOL = 1e-9


@dataclass
class ExponentValue:
    value: float
    argmin_q: np.ndarray | None
    certificate: str
    grid_resolution: int | None = None
    grid_points: int | None = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def to_json(self) -> dict:
        return {
            "value": self.value if self.finite else "inf",
            "argmin_q": None if self.argmin_q is None else self.argmin_q.tolist(),
            "certificate": self.certificate,
            "grid_resolution": self.grid_resolution,
            "grid_points": self.grid_points,
        }


def _plogp(a):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0, a * np.log2(np.where(a > 0, a, 1.0)), 0.0)


def composition_grid(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    bars = np.array(list(itertools.combinations(range(total + parts - 1), parts - 1)),
                    dtype=np.int64)
    edges = np.hstack([np.full((len(bars), 1), -1), bars,
                       np.full((len(bars), 1), total + parts - 1)])
    return np.diff(edges, axis=1) - 1


def default_resolution(p_xy) -> int:
    kx, ky = np.shape(p_xy)
    return 24 if kx * ky <= 6 else 12


class SourceGrid:
    """Precomputed information quantities on a simplex grid over supp(P_XY)."""

    def __init__(self, p_xy, resolution: int | None = None, caps: Caps = DEFAULT_CAPS):
        p = as_joint(p_xy)
        if p.ndim != 2:
            raise ValueError("expected a joint distribution over X x Y")
        self.p = p
        self.kx, self.ky = p.shape
        self.resolution = resolution or default_resolution(p)
        self.support = np.flatnonzero(p.ravel() > 0)
        self.sx, self.sy = np.divmod(self.support, self.ky)
        m = self.support.size
        check_cap("exponent grid points", math.comb(self.resolution + m - 1, m - 1),
                  caps.grid_points)
        self.q = composition_grid(self.resolution, m) / self.resolution
        self.ps = p.ravel()[self.support]
        # marginal maps: support entries -> x letters, -> y letters
        self.mx = np.zeros((m, self.kx))
        self.mx[np.arange(m), self.sx] = 1.0
        self.my = np.zeros((m, self.ky))
        self.my[np.arange(m), self.sy] = 1.0
        q = self.q
        self.div = (_plogp(q) - q * np.log2(self.ps)).sum(axis=1)
        self.qx = q @ self.mx
        self.h_x = -_plogp(self.qx).sum(axis=1)
        h_xy = -_plogp(q).sum(axis=1)
        self.h_cond = h_xy + _plogp(q @ self.my).sum(axis=1)
        self.graph = characteristic_graph(p)
        self.pattern = self.graph.closed_matrix()
        self._log_gamma = None
        self._kappa = None
        self._kappa_cache: dict = {}

    @property
    def size(self) -> int:
        return len(self.q)

    @property
    def log_gamma(self) -> float:
        if self._log_gamma is None:
            self._log_gamma = math.log2(chromatic_number(self.graph))
        return self._log_gamma

    def kappa_of(self, qx: np.ndarray) -> float:
        key = tuple(np.round(qx, 12))
        val = self._kappa_cache.get(key)
        if val is None:
            qx = np.maximum(qx, 0.0)
            val = _kappa_pattern(self.pattern, qx / qx.sum()).value
            self._kappa_cache[key] = val
        return val

    @property
    def kappa(self) -> np.ndarray:
        """kappa(G_X, Q_X) at every grid point (cached by Q_X)."""
        if self._kappa is None:
            keys, inv = np.unique(np.round(self.qx, 12), axis=0, return_inverse=True)
            vals = np.array([self.kappa_of(k) for k in keys])
            self._kappa = vals[np.ravel(inv)]
        return self._kappa

    def joint(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.kx * self.ky)
        out[self.support] = x
        return out.reshape(self.kx, self.ky)

    # pointwise quantities for refinement
    def point(self, x: np.ndarray) -> dict:
        x = np.maximum(x, 0.0)
        xs = np.maximum(x, 1e-300)
        qx, qy = x @ self.mx, x @ self.my
        d = float((_plogp(x) - x * np.log2(self.ps)).sum())
        h_xy = float(-_plogp(x).sum())
        h_y = float(-_plogp(qy).sum())
        h_x = float(-_plogp(qx).sum())
        return {
            "div": d,
            "div_grad": np.log2(xs / self.ps) + 1.0 / LN2,
            "h_cond": h_xy - h_y,
            "h_cond_grad": np.log2(np.maximum(qy[self.sy], 1e-300) / xs),
            "h_x": h_x,
            "h_x_grad": -np.log2(np.maximum(qx[self.sx], 1e-300)) - 1.0 / LN2,
            "qx": qx,
        }

    def kappa_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        qx = np.maximum(x @ self.mx, 0.0)
        sol = _kappa_pattern(self.pattern, qx / qx.sum())
        g = np.nan_to_num(sol.gradient, nan=0.0)
        return sol.value, g[self.sx]


@functools.lru_cache(maxsize=32)
def _cached_grid(key: bytes, shape: tuple, resolution: int | None) -> SourceGrid:
    p = np.frombuffer(key, dtype=float).reshape(shape)
    return SourceGrid(p, resolution)


def source_grid(p_xy, grid=None) -> SourceGrid:
    """Return a (cached) :class:`SourceGrid`; ``grid`` may be one or a resolution."""
    if isinstance(grid, SourceGrid):
        return grid
    p = as_joint(p_xy)
    return _cached_grid(np.ascontiguousarray(p, dtype=float).tobytes(), p.shape, grid)


# -- the four exponents ------------------------------------------------------


_KINDS = ("sp", "oh", "new")


def _grid_terms(sg: SourceGrid, kind: str, r: float):
    if kind == "sp":
        feas = sg.h_cond >= r - RATE_TOL
        obj = sg.div
    elif kind == "oh":
        feas = sg.h_x >= r - RATE_TOL
        obj = sg.div + np.maximum(0.0, r - sg.h_cond)
    else:
        feas = np.minimum(sg.kappa, sg.log_gamma) >= r - RATE_TOL
        obj = sg.div + np.maximum(0.0, r - sg.h_cond)
    return feas, obj


def _feasible(sg: SourceGrid, kind: str, r: float, x: np.ndarray) -> bool:
    pt = sg.point(x)
    if kind == "sp":
        return pt["h_cond"] >= r - RATE_TOL
    if kind == "oh":
        return pt["h_x"] >= r - RATE_TOL
    return min(sg.kappa_of(pt["qx"]), sg.log_gamma) >= r - RATE_TOL


def _objective(sg: SourceGrid, kind: str, r: float, x: np.ndarray) -> float:
    pt = sg.point(x)
    if kind == "sp":
        return pt["div"]
    return pt["div"] + max(0.0, r - pt["h_cond"])


def _refine(sg: SourceGrid, kind: str, r: float, x0: np.ndarray) -> np.ndarray | None:
    m = x0.size
    with_slack = kind != "sp"
    z0 = np.concatenate([x0, [max(0.0, r - sg.point(x0)["h_cond"])]]) if with_slack else x0

    def split(z):
        return (z[:m], z[m]) if with_slack else (z, 0.0)

    def fun(z):
        x, t = split(z)
        pt = sg.point(x)
        g = pt["div_grad"]
        if with_slack:
            return pt["div"] + t, np.concatenate([g, [1.0]])
        return pt["div"], g

    def pad(g):
        return np.concatenate([g, [0.0]]) if with_slack else g

    cons = [{"type": "eq",
             "fun": lambda z: split(z)[0].sum() - 1.0,
             "jac": lambda z: pad(np.ones(m))}]
    if kind == "sp":
        cons.append({"type": "ineq",
                     "fun": lambda z: sg.point(z)["h_cond"] - r,
                     "jac": lambda z: sg.point(z)["h_cond_grad"]})
    elif kind == "oh":
        cons.append({"type": "ineq",
                     "fun": lambda z: sg.point(split(z)[0])["h_x"] - r,
                     "jac": lambda z: pad(sg.point(split(z)[0])["h_x_grad"])})
    else:
        cons.append({"type": "ineq",
                     "fun": lambda z: sg.kappa_grad(split(z)[0])[0] - r,
                     "jac": lambda z: pad(sg.kappa_grad(split(z)[0])[1])})
    if with_slack:
        def slack_fun(z):
            x, t = split(z)
            return t - (r - sg.point(x)["h_cond"])

        def slack_jac(z):
            x, _ = split(z)
            return np.concatenate([sg.point(x)["h_cond_grad"], [1.0]])

        cons.append({"type": "ineq", "fun": slack_fun, "jac": slack_jac})
    bounds = [(0.0, 1.0)] * m + ([(0.0, None)] if with_slack else [])
    try:
        res = minimize(fun, z0, jac=True, method="SLSQP", bounds=bounds, constraints=cons,
                       options={"ftol": 1e-14, "maxiter": 300})
    except (ValueError, FloatingPointError):
        return None
    x = np.maximum(split(res.x)[0], 0.0)
    if not np.all(np.isfinite(x)) or x.sum() <= 0:
        return None
    x = x / x.sum()
    if _feasible(sg, kind, r, x):
        return x
    # pull back toward the feasible grid point
    lo, hi = 0.0, 1.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if _feasible(sg, kind, r, (1 - mid) * x + mid * x0):
            hi = mid
        else:
            lo = mid
    return (1 - hi) * x + hi * x0


def _exponent(kind: str, r: float, p_xy, grid=None, refine: bool = True) -> ExponentValue:
    if r < 0:
        raise ValueError("rate must be nonnegative")
    sg = source_grid(p_xy, grid)
    meta = dict(grid_resolution=sg.resolution, grid_points=sg.size)
    if kind == "new" and sg.log_gamma < r - RATE_TOL:
        return ExponentValue(INF, None, "rate above log2 chromatic number", **meta)
    # D >= 0, so a feasible P with no rate penalty is an exact minimiser
    at_p = sg.point(sg.ps)
    if _feasible(sg, kind, r, sg.ps) and (kind == "sp" or at_p["h_cond"] >= r):
        return ExponentValue(0.0, sg.p.copy(), "attained at P", **meta)
    feas, obj = _grid_terms(sg, kind, r)
    if not feas.any():
        return ExponentValue(INF, None, "no feasible grid point", **meta)
    vals = np.where(feas, obj, INF)
    i = int(np.argmin(vals))
    best, x_best, cert = float(vals[i]), sg.q[i], "grid"
    if refine and best > 0:
        x = _refine(sg, kind, r, sg.q[i])
        if x is not None:
            v = _objective(sg, kind, r, x)
            if v < best:
                best, x_best, cert = v, x, "refined"
    if kind == "new":
        k_val = sg.kappa_of(x_best @ sg.mx)
        cert += "; binding: " + ("kappa" if k_val <= sg.log_gamma else "log2 gamma")
    return ExponentValue(max(0.0, best), sg.joint(x_best), cert, **meta)


def sphere_packing(r: float, p_xy, grid=None, refine: bool = True) -> ExponentValue:
    """inf D(Q||P) over Q_XY with H_Q(X|Y) >= r."""
    return _exponent("sp", r, p_xy, grid, refine)


def exponent_oh(r: float, p_xy, grid=None, refine: bool = True) -> ExponentValue:
    """inf over H(Q_X) >= r of D(Q||P) + (r - H_Q(X|Y))^+."""
    return _exponent("oh", r, p_xy, grid, refine)


def exponent_new(r: float, p_xy, grid=None, refine: bool = True) -> ExponentValue:
    """inf over min(kappa(G_X, Q_X), log2 gamma(G_X)) >= r of D(Q||P) + (r - H_Q(X|Y))^+."""
    return _exponent("new", r, p_xy, grid, refine)


# -- Csiszar-Korner expurgated exponent -------------------------------------


def bhattacharyya_distance(x: int, x_tilde: int, p_y_given_x) -> float:
    w = np.asarray(p_y_given_x, dtype=float)
    bc = float(np.sqrt(w[x] * w[x_tilde]).sum())
    if bc <= 0:
        return INF
    return max(0.0, -math.log2(bc))


def bhattacharyya_kernel(p_xy) -> np.ndarray:
    """Matrix of 2^{-d_P(x, x')}; zero where d_P is infinite."""
    p = as_joint(p_xy)
    px = p.sum(axis=1)
    w = np.divide(p, px[:, None], out=np.zeros_like(p), where=px[:, None] > 0)
    k = np.sqrt(w) @ np.sqrt(w).T
    return np.minimum(k, 1.0)


def _ck_inner(kern: np.ndarray, q: np.ndarray, r: float) -> float:
    """inf over couplings of q with itself, H(X~|X) >= r, of E d + r - H(X~|X)."""
    sup = np.flatnonzero(q > 0)
    qs, ks = q[sup], kern[np.ix_(sup, sup)]
    mask = ks > 0
    dist = np.where(mask, -np.log2(np.where(mask, ks, 1.0)), 0.0)
    hq = entropy(qs)
    if sup.size == 1:
        return r if r <= RATE_TOL else INF

    def solve(s):
        # minimiser of E d - (1/s) H over couplings: kernel K^s on its support
        kern_s = np.where(mask, ks ** s, 0.0) if s > 0 else mask.astype(float)
        p, _, _ = symmetric_scaling(kern_s, qs)
        p = p / p.sum()
        h = entropy(p.ravel()) - hq
        return h, float((p * dist).sum())

    h1, e1 = solve(1.0)
    if h1 >= r - RATE_TOL:
        return e1 + r - h1
    h0, _ = solve(0.0)
    if h0 < r - RATE_TOL:
        return INF
    if h0 <= r:
        return solve(0.0)[1]
    s = brentq(lambda s: solve(s)[0] - r, 0.0, 1.0, xtol=1e-12, rtol=1e-12)
    return solve(s)[1]


def exponent_ck(r: float, p_xy, grid=None, refine: bool = True) -> ExponentValue:
    """Csiszar-Korner expurgated exponent with the Bhattacharyya distance.

    A negative value of the formula is reported as 0 (certificate "clipped").
    """
    if r < 0:
        raise ValueError("rate must be nonnegative")
    p = as_joint(p_xy)
    px = p.sum(axis=1)
    sx = np.flatnonzero(px > 0)
    res = grid.resolution if isinstance(grid, SourceGrid) else (grid or default_resolution(p))
    kern = bhattacharyya_kernel(p)
    pts = composition_grid(res, sx.size) / res
    meta = dict(grid_resolution=res, grid_points=len(pts))

    def total(qs: np.ndarray) -> float:
        q = np.zeros(p.shape[0])
        q[sx] = qs
        pos = qs > 0
        div = float((qs[pos] * np.log2(qs[pos] / px[sx][pos])).sum())
        inner = _ck_inner(kern, q, r)
        return div + inner

    vals = np.array([total(qs) for qs in pts])
    if not np.isfinite(vals).any():
        return ExponentValue(INF, None, "inner problem infeasible for every Q_X", **meta)
    i = int(np.argmin(vals))
    best, q_best, cert = float(vals[i]), pts[i], "grid"
    if refine and sx.size > 1:
        def nm(z):
            if np.any(z < 0) or z.sum() > 1:
                return 1e6
            qs = np.append(z, 1.0 - z.sum())
            v = total(qs)
            return v if math.isfinite(v) else 1e6

        out = minimize(nm, pts[i][:-1], method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-11, "maxiter": 400})
        if out.fun < best:
            best, q_best, cert = float(out.fun), np.append(out.x, 1 - out.x.sum()), "refined"
    if best < 0:
        best, cert = 0.0, cert + "; clipped"
    q = np.zeros(p.shape[0])
    q[sx] = q_best
    return ExponentValue(best, q, cert, **meta)


# -- sweeps ------------------------------------------------------------------


@dataclass
class ExponentRow:
    rate: float
    e_new: ExponentValue
    e_oh: ExponentValue
    e_ck: ExponentValue | None
    e_sp: ExponentValue
    log2_gamma: float


def exponent_sweep(p_xy, rates, grid=None, include_ck: bool = True,
                   refine: bool = True) -> list[ExponentRow]:
    rates = [float(r) for r in rates]
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise ValueError("rates must be strictly increasing")
    sg = source_grid(p_xy, grid)
    rows = []
    for r in rates:
        rows.append(ExponentRow(
            rate=r,
            e_new=exponent_new(r, p_xy, sg, refine),
            e_oh=exponent_oh(r, p_xy, sg, refine),
            e_ck=exponent_ck(r, p_xy, sg, refine) if include_ck else None,
            e_sp=sphere_packing(r, p_xy, sg, refine),
            log2_gamma=sg.log_gamma,
        ))
    return rows


def format_value(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return f"{v:.12g}"


def sweep_csv(rows: list[ExponentRow]) -> str:
    lines = ["rate,e_new,e_oh,e_ck,e_sp,gamma_gx_log2"]
    for row in rows:
        ck = format_value(row.e_ck.value) if row.e_ck is not None else ""
        lines.append(",".join([format_value(row.rate), format_value(row.e_new.value),
                               format_value(row.e_oh.value), ck,
                               format_value(row.e_sp.value), format_value(row.log2_gamma)]))
    return "\n".join(lines) + "\n"


# -- example sources ---------------------------------------------------------


def deterministic_source(p_x, f) -> np.ndarray:
    """Joint P_XY for Y = f(X)."""
    p_x = np.asarray(p_x, dtype=float)
    ky = max(f) + 1
    p = np.zeros((p_x.size, ky))
    p[np.arange(p_x.size), list(f)] = p_x
    return p


def parity_source() -> np.ndarray:
    return deterministic_source(np.full(4, 0.25), [0, 1, 0, 1])


def path_source() -> np.ndarray:
    """X uniform on {0,1,2}; 0 sees only y=0, 2 only y=1, 1 sees both.

    Characteristic graph is the path 0-1-2 (chromatic number 2).
    """
    w = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    return w / 3.0
