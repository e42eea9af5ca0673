"""Alpha-beta style grid search with pattern-search refinement around the incumbent."""

from __future__ import annotations

import math
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .info import GridSpec

Evaluate = Callable[[np.ndarray, float], tuple[float, Any]]


def simplex_moves(q: np.ndarray, step: float) -> list[np.ndarray]:
    """Neighbours ``q + step*(e_a - e_b)`` that stay on the simplex (each row separately)."""
    rows = q if q.ndim == 2 else q[None]
    out = []
    for i in range(rows.shape[0]):
        for a in range(rows.shape[1]):
            for b in range(rows.shape[1]):
                if a == b or rows[i, b] < step - 1e-15:
                    continue
                r = rows.copy()
                r[i, a] += step
                r[i, b] = max(r[i, b] - step, 0.0)
                out.append(r if q.ndim == 2 else r[0])
    return out


def search(cands: Sequence[np.ndarray], evaluate: Evaluate, maximize: bool, cutoff: float, step: float,
           grid: GridSpec, lower_bound: Optional[Callable[[np.ndarray], float]] = None,
           max_moves: int = 25) -> tuple[float, Any, Optional[np.ndarray]]:
    """Optimize ``evaluate`` over grid candidates, then refine.

    ``evaluate(c, incumbent)`` may return any value that does not beat the
    incumbent when it can prove the true value does not beat it either.
    The search stops early once the incumbent crosses ``cutoff`` (the parent's
    incumbent), which is the usual alpha-beta cut.  For minimizing levels a
    ``lower_bound`` lets hopeless candidates be skipped without evaluation.
    """
    sign = 1.0 if maximize else -1.0
    best, wit, arg = -sign * math.inf, None, None

    def done() -> bool:
        return best >= cutoff if maximize else best <= cutoff

    def consider(c: np.ndarray) -> bool:
        nonlocal best, wit, arg
        if lower_bound is not None and not maximize and lower_bound(c) >= best:
            return False
        v, w = evaluate(c, best)
        if sign * v > sign * best:
            best, wit, arg = v, w, c
            return True
        return False

    order = range(len(cands))
    if lower_bound is not None and not maximize:
        lbs = np.array([lower_bound(c) for c in cands])
        order = np.argsort(lbs, kind="stable")
    for i in order:
        if lower_bound is not None and not maximize and lbs[i] >= best:
            break
        consider(cands[i])
        if done():
            return best, wit, arg
    if arg is None or not math.isfinite(best):
        return best, wit, arg
    for r in range(1, grid.refine_rounds + 1):
        h = step * grid.refine_shrink ** r
        for _ in range(max_moves):
            moved = False
            for c in simplex_moves(arg, h):
                if consider(c):
                    moved = True
                    break
            if done():
                return best, wit, arg
            if not moved:
                break
    return best, wit, arg
