"""Finite-alphabet distributions, types and information measures.

All logarithms are base 2; ``0 log 0 = 0`` and ``q log(q/0) = +inf`` for
``q > 0``. Distributions, joints and channels are plain numpy arrays checked
by the ``as_*`` validators; empirical types keep exact integer counts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .config import DEFAULT_CAPS, Caps, check_cap

MASS_TOL = 1e-12


class DistributionError(ValueError):
    pass


def _check_entries(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(a))[0])
        raise DistributionError(f"{what}: non-finite entry at {idx}")
    if np.any(a < 0):
        idx = tuple(int(i) for i in np.argwhere(a < 0)[0])
        raise DistributionError(f"{what}: negative entry {float(a[idx])!r} at {idx}")


def as_distribution(q, tol: float = MASS_TOL) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise DistributionError("distribution must be a non-empty vector")
    _check_entries(q, "distribution")
    if abs(q.sum() - 1.0) > tol:
        raise DistributionError(f"distribution sums to {float(q.sum())!r}, not 1")
    return q


def as_joint(p, tol: float = MASS_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim < 2 or p.size == 0:
        raise DistributionError("joint distribution must be a matrix or tensor")
    _check_entries(p, "joint distribution")
    if abs(p.sum() - 1.0) > tol:
        raise DistributionError(f"joint distribution sums to {float(p.sum())!r}, not 1")
    return p


def as_channel(w, tol: float = MASS_TOL) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.size == 0:
        raise DistributionError("channel must be a matrix")
    _check_entries(w, "channel")
    sums = w.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        raise DistributionError(f"channel row {int(bad[0])} sums to {float(sums[bad[0]])!r}, not 1")
    return w


def joint_from_json(obj: dict) -> np.ndarray:
    """Parse ``{"x_alphabet": k, "y_alphabet": m, "pxy": [[...], ...]}``."""
    p = np.asarray(obj["pxy"], dtype=float)
    k, m = int(obj.get("x_alphabet", p.shape[0])), int(obj.get("y_alphabet", p.shape[-1]))
    if p.shape != (k, m):
        raise DistributionError(f"pxy has shape {p.shape}, expected ({k}, {m})")
    return as_joint(p)


def joint_to_json(p: np.ndarray) -> dict:
    return {"x_alphabet": p.shape[0], "y_alphabet": p.shape[1], "pxy": p.tolist()}


def absolutely_continuous(v, w) -> bool:
    """``v << w``: every zero of ``w`` is a zero of ``v``."""
    return bool(np.all((np.asarray(w) != 0) | (np.asarray(v) == 0)))


# -- information measures ---------------------------------------------------


def _plogp(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * np.log2(a[pos])
    return out


def entropy(q) -> float:
    return float(max(0.0, -_plogp(q).sum()))


def conditional_entropy(v, q) -> float:
    """H(V|Q) = sum_a Q(a) H(V(.|a))."""
    v, q = np.asarray(v, dtype=float), np.asarray(q, dtype=float)
    if v.ndim != 2 or v.shape[0] != q.shape[0]:
        raise DistributionError(f"channel with {v.shape[0]} rows cannot act on {q.shape[0]} letters")
    return float(max(0.0, -(q * _plogp(v).sum(axis=1)).sum()))


def kl_divergence(q, p) -> float:
    q, p = np.asarray(q, dtype=float), np.asarray(p, dtype=float)
    if q.shape != p.shape:
        raise DistributionError(f"shape mismatch {q.shape} vs {p.shape}")
    pos = q > 0
    if np.any(p[pos] <= 0):
        return math.inf
    return float(max(0.0, (q[pos] * np.log2(q[pos] / p[pos])).sum()))


def mutual_information(q_xy) -> float:
    q = np.asarray(q_xy, dtype=float)
    val = entropy(q.sum(axis=1)) + entropy(q.sum(axis=0)) - entropy(q.ravel())
    return max(0.0, val)


def conditional_entropy_joint(q_xy) -> float:
    """H(X|Y) for a joint array indexed [x, y]."""
    q = np.asarray(q_xy, dtype=float)
    return max(0.0, entropy(q.ravel()) - entropy(q.sum(axis=0)))


# -- types --------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalType:
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValueError("type counts must be nonnegative")
        if sum(self.counts) < 1:
            raise ValueError("type needs positive length")

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def k(self) -> int:
        return len(self.counts)

    def distribution(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n

    def size(self) -> int:
        return multinomial(self.counts)

    @classmethod
    def of(cls, seq: Sequence[int], k: int) -> "EmpiricalType":
        counts = [0] * k
        for s in seq:
            counts[s] += 1
        return cls(tuple(counts))


def multinomial(counts: Sequence[int]) -> int:
    out, total = 1, 0
    for c in counts:
        total += c
        out *= math.comb(total, c)
    return out


def _compositions(n: int, k: int) -> Iterator[tuple[int, ...]]:
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first, *rest)


def enumerate_types(n: int, k: int, caps: Caps = DEFAULT_CAPS) -> list[EmpiricalType]:
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    check_cap("number of types", math.comb(n + k - 1, k - 1), caps.types)
    return [EmpiricalType(c) for c in _compositions(n, k)]


def _multiset_perms(counts: list[int], n: int) -> Iterator[tuple[int, ...]]:
    seq = [0] * n

    def rec(pos: int) -> Iterator[tuple[int, ...]]:
        if pos == n:
            yield tuple(seq)
            return
        for a, c in enumerate(counts):
            if c:
                counts[a] -= 1
                seq[pos] = a
                yield from rec(pos + 1)
                counts[a] += 1

    yield from rec(0)


def type_class(q: EmpiricalType, caps: Caps = DEFAULT_CAPS) -> Iterator[tuple[int, ...]]:
    """Stream the sequences of type ``q`` in lexicographic order."""
    check_cap("type class size", q.size(), caps.typeclass)
    return _multiset_perms(list(q.counts), q.n)


def type_class_array(q: EmpiricalType, caps: Caps = DEFAULT_CAPS) -> np.ndarray:
    """Type class as an ``(|T_Q|, n)`` integer array, rows in lexicographic order."""
    size = q.size()
    check_cap("type class size", size, caps.typeclass)
    out = np.empty((size, q.n), dtype=np.int8 if q.k < 128 else np.int32)
    for i, s in enumerate(_multiset_perms(list(q.counts), q.n)):
        out[i] = s
    return out


def joint_counts(x_seq: Sequence[int], y_seq: Sequence[int], kx: int | None = None,
                 ky: int | None = None) -> np.ndarray:
    x, y = np.asarray(x_seq, dtype=np.intp), np.asarray(y_seq, dtype=np.intp)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    kx = int(x.max()) + 1 if kx is None else kx
    ky = int(y.max()) + 1 if ky is None else ky
    return np.bincount(x * ky + y, minlength=kx * ky).reshape(kx, ky)


def empirical_conditional_entropy(x_seq: Sequence[int], y_seq: Sequence[int]) -> float:
    c = joint_counts(x_seq, y_seq)
    return conditional_entropy_joint(c / c.sum())


def batch_conditional_entropy(xs: np.ndarray, y: np.ndarray, kx: int, ky: int) -> np.ndarray:
    """H(x|y) for every row of ``xs`` against a fixed ``y`` (vectorised)."""
    xs = np.asarray(xs, dtype=np.intp)
    m, n = xs.shape
    idx = (np.arange(m)[:, None] * (kx * ky) + xs * ky + np.asarray(y, dtype=np.intp)[None, :])
    c = np.bincount(idx.ravel(), minlength=m * kx * ky).reshape(m, kx, ky).astype(float)
    cy = c.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_xy = np.where(c > 0, c * np.log2(c), 0.0).sum(axis=(1, 2))
        t_y = np.where(cy > 0, cy * np.log2(cy), 0.0).sum(axis=1)
    return np.maximum(0.0, (t_y - t_xy) / n)


def conditional_types(q: EmpiricalType, caps: Caps = DEFAULT_CAPS) -> list[np.ndarray]:
    """All channels V with Q x V a joint type at blocklength ``q.n``.

    Row ``a`` has denominator ``q.counts[a]``; rows of unused letters are the
    point mass on ``a``.
    """
    k = q.k
    per_row = []
    total = 1
    for a, c in enumerate(q.counts):
        if c == 0:
            row = np.zeros(k)
            row[a] = 1.0
            per_row.append([row])
        else:
            per_row.append([np.asarray(comp, dtype=float) / c for comp in _compositions(c, k)])
        total *= len(per_row[-1])
    check_cap("conditional types", total, caps.types)
    return [np.vstack(rows) for rows in itertools.product(*per_row)]


def count_S(x_seq: Sequence[int], y_seq: Sequence[int], kx: int | None = None,
            caps: Caps = DEFAULT_CAPS, tol: float = 1e-12) -> int:
    """|{x' of the same type as x : H(x'|y) <= H(x|y)}| by enumeration."""
    x, y = np.asarray(x_seq), np.asarray(y_seq)
    if x.shape != y.shape:
        raise ValueError("length mismatch")
    kx = int(x.max()) + 1 if kx is None else kx
    ky = int(y.max()) + 1
    t = EmpiricalType.of(x.tolist(), kx)
    cls = type_class_array(t, caps)
    h = batch_conditional_entropy(cls, y, kx, ky)
    h0 = empirical_conditional_entropy(x, y)
    return int(np.count_nonzero(h <= h0 + tol))


def sequence_probability(x_seq: Sequence[int], y_seq: Sequence[int], p_xy) -> float:
    p = np.asarray(p_xy, dtype=float)
    return float(np.prod(p[np.asarray(x_seq), np.asarray(y_seq)]))
