"""Small parametrized convex programs shared by the discrete exponent solvers.

Each builder is cached per alphabet shape so the cvxpy canonicalization runs
once; later calls only swap parameter values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import cvxpy as cp
import numpy as np

from .info import LN2

_OK = ("optimal", "optimal_inaccurate")


@dataclass
class Program:
    problem: cp.Problem
    var: cp.Variable
    params: dict

    def run(self, **values) -> np.ndarray | None:
        """Solve with the given parameter values; ``None`` when infeasible or failed."""
        for name, val in values.items():
            self.params[name].value = val
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                self.problem.solve(solver=cp.CLARABEL, warm_start=False)
        except cp.error.SolverError:
            return None
        if self.problem.status not in _OK or self.var.value is None:
            return None
        return np.array(self.var.value, dtype=float)


def positive_ref(ref: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reference table with zero cells replaced by 1, plus the mask forcing them to 0."""
    zero = (ref <= 0).astype(float)
    return np.where(ref > 0, ref, 1.0), zero


@lru_cache(maxsize=None)
def sccsi_lower_inner(nx: int, m: int, ns: int) -> Program:
    """min D(J||ref) + [shift - H(X,S)]^+  s.t. column sums fixed, H(X) >= r1.

    Columns of J index (y, s) pairs, ``m = ny * ns``; ``fold`` maps them to s.
    """
    ny = m // ns
    fold = np.kron(np.ones((ny, 1)), np.eye(ns))
    J = cp.Variable((nx, m), nonneg=True)
    ref = cp.Parameter((nx, m), nonneg=True)
    zero = cp.Parameter((nx, m), nonneg=True)
    col = cp.Parameter(m, nonneg=True)
    shift = cp.Parameter()
    hx_min = cp.Parameter()
    hxs = cp.sum(cp.entr(J @ fold)) / LN2
    obj = cp.sum(cp.rel_entr(J, ref)) / LN2 + cp.pos(shift - hxs)
    cons = [cp.sum(J, axis=0) == col,
            cp.sum(cp.entr(cp.sum(J, axis=1))) / LN2 >= hx_min,
            cp.multiply(zero, J) == 0]
    prob = cp.Problem(cp.Minimize(obj), cons)
    return Program(prob, J, dict(ref=ref, zero=zero, col=col, shift=shift, hx_min=hx_min))


@lru_cache(maxsize=None)
def sccsi_upper_inner(nx: int, ny: int, ns: int) -> Program:
    """min D(J||P) over joints with Y-marginal fixed and H(X,S) >= hxs_min, S drawn through W."""
    J = cp.Variable((nx, ny), nonneg=True)
    ref = cp.Parameter((nx, ny), nonneg=True)
    zero = cp.Parameter((nx, ny), nonneg=True)
    qy = cp.Parameter(ny, nonneg=True)
    W = cp.Parameter((ny, ns), nonneg=True)
    hxs_min = cp.Parameter()
    cons = [cp.sum(J, axis=0) == qy,
            cp.sum(cp.entr(J @ W)) / LN2 >= hxs_min,
            cp.multiply(zero, J) == 0]
    prob = cp.Problem(cp.Minimize(cp.sum(cp.rel_entr(J, ref)) / LN2), cons)
    return Program(prob, J, dict(ref=ref, zero=zero, qy=qy, W=W, hxs_min=hxs_min))


@lru_cache(maxsize=None)
def entropy_ball(n: int) -> Program:
    """min D(q||p) s.t. H(q) >= h."""
    q = cp.Variable(n, nonneg=True)
    ref = cp.Parameter(n, nonneg=True)
    zero = cp.Parameter(n, nonneg=True)
    h = cp.Parameter()
    cons = [cp.sum(q) == 1, cp.sum(cp.entr(q)) / LN2 >= h, cp.multiply(zero, q) == 0]
    prob = cp.Problem(cp.Minimize(cp.sum(cp.rel_entr(q, ref)) / LN2), cons)
    return Program(prob, q, dict(ref=ref, zero=zero, h=h))


@lru_cache(maxsize=None)
def wz_coupling(rows: int, ny: int, nz: int, mode: str) -> Program:
    """Couplings J over ((x,z), y) with both marginals fixed.

    mode "free": min D(J||ref)
    mode "ge":   min D(J||ref)              s.t. <dmat, J> >= delta
    mode "pen":  min D(J||ref) + [shift - H(Y,Z)]^+
    mode "le":   as "pen"                   s.t. <dmat, J> <= delta
    Rows are ordered x-major so ``fold`` sums over x to get the (z, y) table.
    """
    nx = rows // nz
    fold = np.kron(np.ones((1, nx)), np.eye(nz))
    J = cp.Variable((rows, ny), nonneg=True)
    ref = cp.Parameter((rows, ny), nonneg=True)
    zero = cp.Parameter((rows, ny), nonneg=True)
    rsum = cp.Parameter(rows, nonneg=True)
    csum = cp.Parameter(ny, nonneg=True)
    params = dict(ref=ref, zero=zero, rsum=rsum, csum=csum)
    obj = cp.sum(cp.rel_entr(J, ref)) / LN2
    cons = [cp.sum(J, axis=1) == rsum, cp.sum(J, axis=0) == csum, cp.multiply(zero, J) == 0]
    if mode in ("pen", "le"):
        shift = cp.Parameter()
        params["shift"] = shift
        obj = obj + cp.pos(shift - cp.sum(cp.entr(fold @ J)) / LN2)
    if mode in ("ge", "le"):
        dmat = cp.Parameter((rows, ny), nonneg=True)
        delta = cp.Parameter()
        params.update(dmat=dmat, delta=delta)
        ed = cp.sum(cp.multiply(dmat, J))
        cons.append(ed >= delta if mode == "ge" else ed <= delta)
    prob = cp.Problem(cp.Minimize(obj), cons)
    return Program(prob, J, params)


@lru_cache(maxsize=None)
def functional_program(nx: int, ny: int, ng: int, mode: str) -> Program:
    """Functional source coding exponents over joints Q(x, y).

    ``G`` (ng x nx, 0/1) maps x to g(x).  mode "con": min D s.t. H(G|Y) >= rate;
    mode "pen": min D + [rate - H(G|Y)]^+.
    """
    J = cp.Variable((nx, ny), nonneg=True)
    ref = cp.Parameter((nx, ny), nonneg=True)
    zero = cp.Parameter((nx, ny), nonneg=True)
    G = cp.Parameter((ng, nx), nonneg=True)
    rate = cp.Parameter()
    qgy = G @ J
    qy = cp.sum(J, axis=0)
    hgy = -cp.sum(cp.rel_entr(qgy, cp.vstack([qy] * ng))) / LN2
    obj = cp.sum(cp.rel_entr(J, ref)) / LN2
    cons = [cp.sum(J) == 1, cp.multiply(zero, J) == 0]
    if mode == "con":
        cons.append(hgy >= rate)
    else:
        obj = obj + cp.pos(rate - hgy)
    prob = cp.Problem(cp.Minimize(obj), cons)
    return Program(prob, J, dict(ref=ref, zero=zero, G=G, rate=rate))


def clean_columns(J: np.ndarray, zero: np.ndarray, col: np.ndarray, axis: int = 0) -> np.ndarray:
    """Clip solver noise and rescale so the fixed marginal along ``axis`` is exact."""
    J = np.where(zero > 0, 0.0, np.clip(J, 0.0, None))
    s = J.sum(axis=axis, keepdims=True)
    target = np.expand_dims(col, axis)
    scale = np.divide(target, s, out=np.zeros_like(s), where=s > 0)
    J = J * scale
    return J

