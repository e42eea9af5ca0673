"""Finite-alphabet distributions, information measures in bits, and k-type grids.

Exponent values throughout the package are plain floats; ``math.inf`` plays the
role of the "+infinity" branch and IEEE arithmetic already saturates the way
the bounds need (finite + inf = inf, min/max behave).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

LN2 = math.log(2.0)
MASS_TOL = 1e-12
INF = math.inf


def _check_table(probs: np.ndarray) -> None:
    if probs.size == 0:
        raise ValueError("empty probability table")
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise ValueError("probabilities must be finite and non-negative")
    if abs(probs.sum() - 1.0) > MASS_TOL * max(1, probs.size):
        raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FiniteDist:
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = _frozen(np.ravel(self.probs))
        _check_table(p)
        object.__setattr__(self, "probs", p)

    @property
    def alphabet_size(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True)
class CondDist:
    """Channel with ``rows[i]`` the output law given input ``i``."""

    rows: np.ndarray

    def __post_init__(self) -> None:
        r = _frozen(np.atleast_2d(self.rows))
        if r.ndim != 2:
            raise ValueError("channel must be a 2-D table")
        for row in r:
            _check_table(row)
        object.__setattr__(self, "rows", r)

    @property
    def input_size(self) -> int:
        return int(self.rows.shape[0])

    @property
    def output_size(self) -> int:
        return int(self.rows.shape[1])


@dataclass(frozen=True)
class JointDist:
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = _frozen(self.probs)
        if p.ndim not in (2, 3):
            raise ValueError("joint tables have 2 or 3 axes")
        _check_table(p)
        object.__setattr__(self, "probs", p)

    @property
    def axis_sizes(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self.probs.shape)

    def to_json(self) -> str:
        return json.dumps({"axis_sizes": list(self.axis_sizes), "probs": self.probs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "JointDist":
        return joint_from_obj(json.loads(text))


def joint_from_obj(obj) -> JointDist:
    """Accepts {"axis_sizes": [...], "probs": [...]} or a bare nested list."""
    if not isinstance(obj, dict):
        return JointDist(np.asarray(obj, dtype=float))
    probs = np.asarray(obj["probs"], dtype=float)
    if "axis_sizes" in obj and list(probs.shape) != list(obj["axis_sizes"]):
        raise ValueError(f"axis_sizes {obj['axis_sizes']} disagree with table shape {probs.shape}")
    return JointDist(probs)


@dataclass(frozen=True)
class GridSpec:
    """Discretization knobs shared by the nested searches.

    ``resolution`` is the denominator for outer marginal grids, ``cond_resolution``
    the one used for channel rows (coarser by default since the product of rows
    grows quickly).
    """

    resolution: int = 16
    cond_resolution: int = 8
    refine_rounds: int = 2
    refine_shrink: float = 0.2
    strict_eps: float = 1e-9

    def __post_init__(self) -> None:
        if self.resolution < 1 or self.cond_resolution < 1:
            raise ValueError("grid resolution must be >= 1")
        if not 0 < self.refine_shrink < 1:
            raise ValueError("refine_shrink must lie in (0, 1)")
        if self.strict_eps <= 0:
            raise ValueError("strict_eps must be positive")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be >= 0")


def _arr(d) -> np.ndarray:
    if isinstance(d, (FiniteDist, JointDist)):
        return d.probs
    if isinstance(d, CondDist):
        return d.rows
    return np.asarray(d, dtype=float)


# ---------------------------------------------------------------- measures

def xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def entropy(d) -> float:
    p = _arr(d)
    return float(max(0.0, -xlog2x(p).sum()))


def kl_divergence(q, p) -> float:
    q, p = _arr(q), _arr(p)
    if q.shape != p.shape:
        raise ValueError(f"alphabet mismatch: {q.shape} vs {p.shape}")
    pos = q > 0
    if np.any(p[pos] <= 0):
        return INF
    return float(max(0.0, np.sum(q[pos] * np.log2(q[pos] / p[pos]))))


def binary_entropy(q: float) -> float:
    if q <= 0 or q >= 1:
        return 0.0
    return -(q * math.log2(q) + (1 - q) * math.log2(1 - q))


def binary_kl(a: float, b: float) -> float:
    return kl_divergence(np.array([a, 1 - a]), np.array([b, 1 - b]))


def compose(p, v) -> JointDist:
    pa, va = _arr(p), _arr(v)
    if pa.ndim != 1 or va.ndim != 2 or va.shape[0] != pa.size:
        raise ValueError(f"size mismatch: marginal {pa.shape} vs channel {va.shape}")
    return JointDist(pa[:, None] * va)


def decompose(j, axis: int = 0) -> tuple[FiniteDist, CondDist]:
    """Split a 2-axis joint into the law of ``axis`` and the channel to the other axis.

    For 3-axis tables the remaining axes are flattened row-major.
    """
    t = _arr(j)
    t = np.moveaxis(t, axis, 0).reshape(t.shape[axis], -1)
    marg = t.sum(axis=1)
    rows = np.full_like(t, 1.0 / t.shape[1])
    pos = marg > 0
    rows[pos] = t[pos] / marg[pos, None]
    return FiniteDist(marg / marg.sum()), CondDist(rows)


def marginal(j, axes: Iterable[int]) -> np.ndarray:
    t = _arr(j)
    keep = tuple(sorted(set(axes)))
    drop = tuple(a for a in range(t.ndim) if a not in keep)
    return t.sum(axis=drop)


def mutual_information(j) -> float:
    t = _arr(j)
    if t.ndim != 2:
        raise ValueError("mutual_information expects a 2-axis joint")
    mi = entropy(t.sum(1)) + entropy(t.sum(0)) - entropy(t)
    return max(0.0, mi)


def conditional_entropy(j, target: int | Sequence[int], given: Sequence[int] = ()) -> float:
    t = _arr(j)
    tgt = {target} if isinstance(target, (int, np.integer)) else set(target)
    giv = set(given)
    if tgt & giv:
        raise ValueError("target and conditioning axes must be disjoint")
    if any(a < 0 or a >= t.ndim for a in tgt | giv):
        raise ValueError("axis out of range")
    h = entropy(marginal(t, tgt | giv)) - (entropy(marginal(t, giv)) if giv else 0.0)
    return max(0.0, h)


# ---------------------------------------------------------------- grids

@lru_cache(maxsize=None)
def composition_counts(size: int, k: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``size`` summing to ``k``, lexicographic."""
    if size < 1 or k < 0:
        raise ValueError("need size >= 1 and k >= 0")
    if size == 1:
        out = np.array([[k]], dtype=np.int64)
    else:
        blocks = []
        for first in range(k + 1):
            rest = composition_counts(size - 1, k - first)
            blocks.append(np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest]))
        out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def simplex_grid(size: int, k: int) -> np.ndarray:
    """k-types as an array of shape (count, size)."""
    if k < 1:
        raise ValueError("resolution must be >= 1")
    return composition_counts(size, k) / k


def enumerate_simplex(size: int, k: int) -> list[FiniteDist]:
    return [FiniteDist(row) for row in simplex_grid(size, k)]


def empirical_joint_type(*sequences: Sequence[int], sizes: Sequence[int] | None = None) -> JointDist | FiniteDist:
    seqs = [np.asarray(s, dtype=np.int64) for s in sequences]
    if not seqs or seqs[0].size == 0:
        raise ValueError("need at least one non-empty sequence")
    n = seqs[0].size
    if any(s.size != n for s in seqs):
        raise ValueError("sequences must have equal length")
    if sizes is None:
        sizes = [int(s.max()) + 1 for s in seqs]
    counts = np.zeros(tuple(sizes))
    np.add.at(counts, tuple(seqs), 1.0)
    probs = counts / n
    return FiniteDist(probs) if len(seqs) == 1 else JointDist(probs)


@dataclass(frozen=True)
class ExponentReport:
    """An exponent value together with the arguments that attain it."""

    value: float
    witnesses: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    refined: bool = False

    def to_obj(self) -> dict:
        def conv(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, dict):
                return {str(k): conv(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            if isinstance(v, (np.floating, float)):
                return fmt_ext(float(v))
            if isinstance(v, np.integer):
                return int(v)
            return v

        return {"value": fmt_ext(self.value), "witnesses": conv(self.witnesses),
                "grid": conv(self.grid), "refined": self.refined}


def fmt_ext(v: float) -> float | str:
    """JSON-friendly float: infinities become the string "inf"."""
    return "inf" if math.isinf(v) else v


class BudgetError(RuntimeError):
    """A requested enumeration exceeds the configured size budget."""


def channel_grid(n_in: int, n_out: int, k: int, dedup: bool = True, budget: int = 2_000_000) -> np.ndarray:
    """Channels whose rows are k-types, shape (count, n_in, n_out).

    With ``dedup`` only the first member of every output-relabeling orbit is
    kept; callers whose objective is invariant under renaming the output
    symbols lose nothing.
    """
    rows = composition_counts(n_out, k)
    total = len(rows) ** n_in
    if total > budget:
        raise BudgetError(f"channel grid has {total} members (budget {budget})")
    idx = np.indices((len(rows),) * n_in).reshape(n_in, -1).T
    counts = rows[idx]  # (C, n_in, n_out)
    if dedup and n_out > 1:
        weights = (k + 1) ** np.arange(n_in - 1, -1, -1, dtype=np.int64)
        codes = np.einsum("cio,i->co", counts, weights)
        keys = -np.sort(-codes, axis=1)
        _, first = np.unique(keys, axis=0, return_index=True)
        counts = counts[np.sort(first)]
    return counts / k
