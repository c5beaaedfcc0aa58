"""Wyner-Ziv (lossy, side information at the decoder) exponents.

``wz_eta`` evaluates the three-branch integrand, ``wz_exponent`` the nested
inf-sup-inf-sup-inf over finite grids, and ``wz_deterministic_si`` the
closed form that applies when the side information is a function of the
source.

Error convention: the first branch applies when E d(X, phi(Y,U)) > delta.
With this convention delta = 0 describes lossless coding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize

from .config import DEFAULT_CAPS, Caps, SolverError, check_cap
from .exponents import INF, RATE_TOL, ExponentValue, composition_grid
from .graphs import characteristic_graph
from .kappa import _kappa_pattern
from .probability import as_channel, as_distribution, as_joint, entropy, kl_divergence

DIST_TOL = 1e-12


@dataclass(frozen=True)
class DistortionMeasure:
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != 2 or not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError("distortion table must be a finite nonnegative matrix")
        object.__setattr__(self, "table", t)

    @classmethod
    def hamming(cls, k: int) -> "DistortionMeasure":
        return cls(1.0 - np.eye(k))

    @property
    def shape(self) -> tuple[int, int]:
        return self.table.shape


def _mi(q_ab: np.ndarray) -> float:
    return max(0.0, entropy(q_ab.sum(axis=1)) + entropy(q_ab.sum(axis=0)) - entropy(q_ab.ravel()))


def _h_cond_channel(w: np.ndarray, q: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
    return float(max(0.0, -(q[:, None] * t).sum()))


def _kappa2(p: np.ndarray, q_x: np.ndarray, w: np.ndarray, cache: dict | None = None) -> float:
    q_uy = w.T @ p
    g_u = characteristic_graph(q_uy / q_uy.sum())
    q_u = q_x @ w
    q_u = np.maximum(q_u, 0.0) / q_u.sum()
    key = (g_u.adj, tuple(np.round(q_u, 12)))
    val = None if cache is None else cache.get(key)
    if val is None:
        h = entropy(q_u)
        if g_u.num_edges() == g_u.n * (g_u.n - 1) // 2:
            val = h
        else:
            val = min(h, _kappa_pattern(g_u.closed_matrix(), q_u).value)
        if cache is not None:
            cache[key] = val
    return max(0.0, val - _h_cond_channel(w, q_x))


def _split(q_xyu: np.ndarray, q_u_given_x=None):
    q_x = q_xyu.sum(axis=(1, 2))
    q_xu = q_xyu.sum(axis=1)
    if q_u_given_x is None:
        ku = q_xyu.shape[2]
        w = np.divide(q_xu, q_x[:, None], out=np.full_like(q_xu, 1.0 / ku),
                      where=q_x[:, None] > 0)
    else:
        w = as_channel(q_u_given_x)
    return q_x, q_xu, w


def _eta(r, p_xy, q_xyu, phi, delta, d, q_u_given_x, variant) -> float:
    p = as_joint(p_xy)
    q = as_joint(q_xyu)
    dm = d if isinstance(d, DistortionMeasure) else DistortionMeasure(d)
    phi = np.asarray(phi, dtype=int)
    kx, ky, ku = q.shape
    if p.shape != (kx, ky) or phi.shape != (ky, ku) or dm.shape[0] != kx:
        raise ValueError(f"dimension mismatch: P {p.shape}, Q {q.shape}, phi {phi.shape}, "
                         f"d {dm.shape}")
    if phi.min() < 0 or phi.max() >= dm.shape[1]:
        raise ValueError("phi maps outside the reproduction alphabet")
    q_x, q_xu, w = _split(q, q_u_given_x)
    ref = p[:, :, None] * w[:, None, :]
    div = kl_divergence(q.ravel(), ref.ravel())
    ed = float((q * dm.table[:, phi]).sum())
    if ed > delta + DIST_TOL:
        return div
    i_xu = _mi(q_xu)
    if variant == "kappa":
        threshold = _kappa2(p, q_x, w)
    else:
        threshold = i_xu
    if threshold < r - RATE_TOL:
        return INF
    i_yu = _mi(q.sum(axis=0))
    return div + max(0.0, r - i_xu + i_yu)


def wz_eta(r, p_xy, q_xyu, phi, delta, d, q_u_given_x=None) -> float:
    """Integrand of the Wyner-Ziv exponent.

    ``q_u_given_x`` fixes the test channel where Q_X vanishes; by default it
    is read off ``q_xyu`` (uniform on unused rows).
    """
    return _eta(r, p_xy, q_xyu, phi, delta, d, q_u_given_x, "kappa")


def wz_eta_D(r, p_xy, q_xyu, phi, delta, d, q_u_given_x=None) -> float:
    """As :func:`wz_eta` with I(X;U) >= r in place of the kappa_2 condition."""
    return _eta(r, p_xy, q_xyu, phi, delta, d, q_u_given_x, "mi")


# -- nested optimisation -----------------------------------------------------


@dataclass(frozen=True)
class WZGrids:
    """Grid resolutions for :func:`wz_exponent`.

    ``u_size`` defaults to |X| + 1.
    """

    qx_resolution: int = 12
    channel_resolution: int = 2
    conditional_resolution: int = 4
    u_size: int | None = None


def _phi_tables(khat: int, cells: int, caps: Caps) -> np.ndarray:
    check_cap("reproduction tables", khat ** cells, caps.phi_tables,
              "lower |U| or use a smaller reproduction alphabet")
    return np.array(list(itertools.product(range(khat), repeat=cells)), dtype=np.intp)


def _channels(kx: int, ku: int, res: int, caps: Caps) -> np.ndarray:
    rows = composition_grid(res, ku) / res
    check_cap("test channels", len(rows) ** kx, caps.grid_points)
    return np.array([np.vstack(c) for c in itertools.product(rows, repeat=kx)])


def _inner_members(p_y_given_x: np.ndarray, q_xu: np.ndarray, res: int, caps: Caps):
    """Grid of Q_{Y|XU}, each row supported inside supp P(.|x)."""
    kx, ku = q_xu.shape
    ky = p_y_given_x.shape[1]
    choices = []
    total = 1
    for x in range(kx):
        sup = np.flatnonzero(p_y_given_x[x] > 0)
        for u in range(ku):
            if q_xu[x, u] > 0:
                comps = composition_grid(res, sup.size) / res
                rows = np.zeros((len(comps), ky))
                rows[:, sup] = comps
            else:
                rows = p_y_given_x[x][None, :]
            choices.append(rows)
            total *= len(rows)
    check_cap("inner conditional grid", total, caps.grid_points)
    members = np.array([np.vstack(c) for c in itertools.product(*choices)])
    return members.reshape(-1, kx, ku, ky)


def wz_exponent(r: float, delta: float, p_xy, d, grids: WZGrids = WZGrids(),
                caps: Caps = DEFAULT_CAPS, refine: bool = True) -> ExponentValue:
    """Grid estimate of inf_QX sup_QU|X inf_QY sup_phi inf_QXYU eta.

    The value depends on the grid resolutions (recorded in the certificate).
    """
    if r < 0 or delta < 0:
        raise ValueError("rate and distortion level must be nonnegative")
    p = as_joint(p_xy)
    dm = d if isinstance(d, DistortionMeasure) else DistortionMeasure(d)
    kx, ky = p.shape
    if dm.shape[0] != kx:
        raise ValueError("distortion table rows must match the source alphabet")
    khat = dm.shape[1]
    ku = grids.u_size or kx + 1
    phis = _phi_tables(khat, ky * ku, caps)
    chans = _channels(kx, ku, grids.channel_resolution, caps)
    p_x = p.sum(axis=1)
    p_y_x = np.divide(p, p_x[:, None], out=np.zeros_like(p), where=p_x[:, None] > 0)
    sx = np.flatnonzero(p_x > 0)
    qx_pts = composition_grid(grids.qx_resolution, sx.size) / grids.qx_resolution
    qxs = np.zeros((len(qx_pts), kx))
    qxs[:, sx] = qx_pts
    qxs = np.vstack([p_x, qxs])
    with np.errstate(divide="ignore", invalid="ignore"):
        divs = np.where(qxs > 0, qxs * np.log2(qxs / np.where(p_x > 0, p_x, 1.0)), 0.0).sum(1)
    order = np.argsort(divs, kind="stable")
    cert = (f"grid estimate: |U|={ku}, qx_res={grids.qx_resolution}, "
            f"channel_res={grids.channel_resolution}, "
            f"conditional_res={grids.conditional_resolution}")
    meta = dict(grid_resolution=grids.qx_resolution, grid_points=len(qxs))
    k2_cache: dict = {}

    def outer(q_x, div_x):
        return _sup_over_channels(r, delta, p, p_y_x, q_x, div_x, chans, phis, dm,
                                  grids, caps, k2_cache)

    best, best_q = INF, None
    for i in order:
        if divs[i] >= best:
            break
        val = outer(qxs[i], divs[i])
        if val < best:
            best, best_q = val, qxs[i]
    if refine and 0 < best < INF and sx.size > 1:
        def obj(z):
            qs = np.append(z, 1.0 - z.sum())
            if np.any(qs < 0):
                return 1e6
            q_x = np.zeros(kx)
            q_x[sx] = qs
            v = outer(q_x, kl_divergence(qs, p_x[sx]))
            return v if v < INF else 1e6

        out = minimize(obj, best_q[sx][:-1], method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-11, "maxiter": 300})
        if out.fun < best:
            best = float(out.fun)
            best_q = np.zeros(kx)
            best_q[sx] = np.append(out.x, 1.0 - out.x.sum())
            cert += "; refined"
    return ExponentValue(best, best_q, cert, **meta)


def _sup_over_channels(r, delta, p, p_y_x, q_x, div_x, chans, phis, dm, grids, caps,
                       k2_cache) -> float:
    kx, ky = p.shape
    ku = chans.shape[2]
    sup_val = -INF
    for w in chans:
        q_xu = q_x[:, None] * w
        members = _inner_members(p_y_x, q_xu, grids.conditional_resolution, caps)
        q_xyu = np.einsum("xu,mxuy->mxyu", q_xu, members)
        # divergence: D(Q_X||P_X) + sum Q_XU D(Q_{Y|XU} || P_{Y|X})
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(members > 0, members * np.log2(
                members / np.where(p_y_x[None, :, None, :] > 0, p_y_x[None, :, None, :], 1.0)),
                0.0)
        div = div_x + np.einsum("xu,mxuy->m", q_xu, ratio)
        # expected distortion for every phi: cost[m, y, u, xhat]
        cost = np.einsum("mxyu,xh->myuh", q_xyu, dm.table).reshape(len(members), ky * ku, -1)
        ed = np.zeros((len(members), len(phis)))
        for j in range(ky * ku):
            ed += cost[:, j, phis[:, j]]
        q_y = q_xyu.sum(axis=(1, 3))
        q_yu = q_xyu.sum(axis=1)
        h_y = -np.where(q_y > 0, q_y * np.log2(np.where(q_y > 0, q_y, 1.0)), 0.0).sum(1)
        q_u = q_xu.sum(axis=0)
        h_u = entropy(q_u)
        h_yu = -np.where(q_yu > 0, q_yu * np.log2(np.where(q_yu > 0, q_yu, 1.0)), 0.0).sum((1, 2))
        i_yu = np.maximum(0.0, h_y + h_u - h_yu)
        i_xu = _mi(q_xu)
        lossy = ed > delta + DIST_TOL
        if lossy.all():
            eta = np.broadcast_to(div[:, None], ed.shape)
        else:
            k2 = _kappa2(p, q_x, w, k2_cache)
            branch2 = div + np.maximum(0.0, r - i_xu + i_yu) if k2 >= r - RATE_TOL \
                else np.full(len(members), INF)
            eta = np.where(lossy, div[:, None], branch2[:, None])
        # inf over Q_XYU within each Q_Y group, sup over phi, inf over Q_Y
        _, groups = np.unique(np.round(q_y, 12), axis=0, return_inverse=True)
        groups = np.ravel(groups)
        ng = groups.max() + 1
        per_group = np.full((ng, len(phis)), INF)
        np.minimum.at(per_group, groups, eta)
        val = float(per_group.max(axis=1).min())
        sup_val = max(sup_val, val)
        if sup_val == INF:
            break
    return sup_val


# -- deterministic side information -----------------------------------------


def conditional_rate_distortion(delta: float, q_x, f, d, tol: float = 1e-8,
                                max_iter: int = 20000) -> float:
    """R_{X|Y}(delta) for Y = f(X) under Q_X, by Blahut-Arimoto with a shared slope."""
    q_x = as_distribution(q_x)
    dm = d if isinstance(d, DistortionMeasure) else DistortionMeasure(d)
    f = np.asarray(f, dtype=int)
    ky = int(f.max()) + 1
    q_y = np.bincount(f, weights=q_x, minlength=ky)
    ys = np.flatnonzero(q_y > 0)
    # conditional sources, one row per y
    cond = np.zeros((ys.size, q_x.size))
    for i, y in enumerate(ys):
        mask = f == y
        cond[i, mask] = q_x[mask] / q_y[y]
    wy = q_y[ys]
    t = dm.table
    d_min = float(wy @ (cond @ t.min(axis=1)))
    d_max = float(wy @ (cond @ t).min(axis=1))
    if delta >= d_max - 1e-15:
        return 0.0
    if delta < d_min - 1e-12:
        return INF
    if delta <= d_min + 1e-12:
        return _restricted_rate(cond, wy, t, tol, max_iter)

    def ba(s):
        kern = 2.0 ** (-s * t)
        qh = np.full((ys.size, t.shape[1]), 1.0 / t.shape[1])
        for _ in range(max_iter):
            z = (qh[:, None, :] * kern[None]).sum(axis=2)
            c = np.einsum("yx,yxh->yh", cond, kern[None] / z[:, :, None])
            # Blahut's bound: R is certified to within the weighted gap
            with np.errstate(divide="ignore"):
                logc = np.log2(c)
            gap = np.log2(c.max(axis=1)) - np.where(qh > 0, qh * logc, 0.0).sum(axis=1)
            qh = qh * c
            qh /= qh.sum(axis=1, keepdims=True)
            if float(wy @ gap) < tol:
                break
        w = qh[:, None, :] * kern[None]
        w /= w.sum(axis=2, keepdims=True)
        dist = float(wy @ np.einsum("yx,yxh,xh->y", cond, w, t))
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.where(w > 0, np.log2(w / np.where(qh[:, None, :] > 0, qh[:, None, :], 1.0)), 0.0)
        rate = float(wy @ np.einsum("yx,yxh,yxh->y", cond, w, lr))
        return dist, max(0.0, rate)

    # BA is sublinear at slopes where the output support changes; those sit at
    # log-ratios of source masses, so avoid probing at dyadic values
    hi = 1.1
    while ba(hi)[0] > delta:
        hi *= 2.0
        if hi > 1e4:
            raise SolverError("slope search diverged in conditional rate-distortion")
    lo = hi / 2.0
    while ba(lo)[0] <= delta:
        # D(s) tends to d_max > delta as s -> 0, so this terminates
        hi, lo = lo, lo / 2.0
        if lo < 1e-9:
            return ba(lo)[1]
    s = brentq(lambda s: ba(s)[0] - delta, lo, hi, xtol=1e-12, rtol=1e-12)
    return ba(s)[1]


def _normalise_rows(w, fallback):
    s = w.sum(axis=2, keepdims=True)
    fb = np.broadcast_to(fallback / fallback.sum(axis=1, keepdims=True), w.shape)
    return np.where(s > 0, w / np.where(s > 0, s, 1.0), fb)


def _restricted_rate(cond, wy, t, tol, max_iter) -> float:
    """min I(X; Xhat | Y) with every x mapped into its minimum-distortion set."""
    allowed = np.isclose(t, t.min(axis=1, keepdims=True), rtol=0, atol=1e-12).astype(float)
    qh = np.full((cond.shape[0], t.shape[1]), 1.0 / t.shape[1])
    for _ in range(max_iter):
        w = _normalise_rows(qh[:, None, :] * allowed[None], allowed)
        new = np.einsum("yx,yxh->yh", cond, w)
        done = np.abs(new - qh).max() < tol * 1e-2
        qh = new
        if done:
            break
    w = _normalise_rows(qh[:, None, :] * allowed[None], allowed)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.where(w > 0, np.log2(w / np.where(qh[:, None, :] > 0, qh[:, None, :], 1.0)), 0.0)
    return float(max(0.0, wy @ np.einsum("yx,yxh,yxh->y", cond, w, lr)))


def wz_deterministic_si(r: float, delta: float, p_x, f, d, grid: int | None = None,
                        refine: bool = True) -> ExponentValue:
    """inf over Q_X with R_{X|Y}(delta) >= r of D(Q_X||P_X), for Y = f(X)."""
    if r < 0 or delta < 0:
        raise ValueError("rate and distortion level must be nonnegative")
    p_x = as_distribution(p_x)
    f = np.asarray(f, dtype=int)
    if f.shape != p_x.shape:
        raise ValueError("f must assign one side-information letter per source letter")
    res = grid or (24 if p_x.size * (int(f.max()) + 1) <= 6 else 12)
    sx = np.flatnonzero(p_x > 0)
    pts = composition_grid(res, sx.size) / res
    meta = dict(grid_resolution=res, grid_points=len(pts))

    def embed(qs):
        q = np.zeros(p_x.size)
        q[sx] = qs
        return q

    def feasible(qs):
        return conditional_rate_distortion(delta, embed(qs), f, d) >= r - RATE_TOL

    def div(qs):
        return kl_divergence(qs, p_x[sx])

    divs = np.array([div(qs) for qs in pts])
    best, best_q = INF, None
    for i in np.argsort(divs, kind="stable"):
        if feasible(pts[i]):
            best, best_q = float(divs[i]), pts[i]
            break
    if best == INF:
        return ExponentValue(INF, None, "no feasible grid point", **meta)
    cert = "grid"
    if refine and best > 0 and sx.size > 1:
        def obj(z):
            qs = np.append(z, 1.0 - z.sum())
            if np.any(qs < 0):
                return 1e6
            return div(qs) if feasible(qs) else 1e6

        out = minimize(obj, best_q[:-1], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 600})
        if out.fun < best:
            best, best_q, cert = float(out.fun), np.append(out.x, 1 - out.x.sum()), "refined"
    return ExponentValue(best, embed(best_q), cert, **meta)


def lift_auxiliary(q_x, f, q_u_given_x, phi):
    """Lift U to U~ = (U, f(X)) so that Y becomes a function of U~.

    Returns the channel Q_{U~|X} (columns indexed u * |Y| + y) and the
    reproduction table phi~(y, u~) = phi(y, u).
    """
    q_x = as_distribution(q_x)
    w = as_channel(q_u_given_x)
    f = np.asarray(f, dtype=int)
    phi = np.asarray(phi, dtype=int)
    kx, ku = w.shape
    ky = int(f.max()) + 1
    if f.size != kx or q_x.size != kx or phi.shape != (ky, ku):
        raise ValueError("dimension mismatch in lift")
    lifted = np.zeros((kx, ku * ky))
    for x in range(kx):
        lifted[x, np.arange(ku) * ky + f[x]] = w[x]
    phi_t = np.empty((ky, ku * ky), dtype=int)
    for u in range(ku):
        for y2 in range(ky):
            phi_t[:, u * ky + y2] = phi[:, u]
    return lifted, phi_t


def deterministic_joint(q_x, f, w) -> np.ndarray:
    """Q_XYU = Q_X 1[y = f(x)] W(u|x) as an array indexed [x, y, u]."""
    q_x, w, f = np.asarray(q_x, float), np.asarray(w, float), np.asarray(f, int)
    ky = int(f.max()) + 1
    out = np.zeros((q_x.size, ky, w.shape[1]))
    out[np.arange(q_x.size), f, :] = q_x[:, None] * w
    return out


def conditional_mi_xu_given_y(q_xyu) -> float:
    """I(X;U|Y) for an array indexed [x, y, u]."""
    q = np.asarray(q_xyu, dtype=float)
    return max(0.0, entropy(q.sum(axis=2).ravel()) + entropy(q.sum(axis=0).ravel())
               - entropy(q.ravel()) - entropy(q.sum(axis=(0, 2))))
