"""Error-exponent bounds for source coding with a coded side-information helper.

Three bounds are computed as nested games over k-type grids:

* ``eta_lower``: achievable exponent (inf over Q_Y, sup over test channels,
  inf over the conditional of X given (Y, S) with an entropy constraint).
* ``eta_upper``: converse with a Markov inner optimization.
* ``eta_sp``: sphere-packing style bound.

All values are in bits. Inner problems are convex; they are seeded on the grid
and then solved exactly with a conic solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import _convex
from .info import (INF, ExponentReport, GridSpec, JointDist, binary_entropy, binary_kl, channel_grid,
                   composition_counts, entropy, joint_from_obj, kl_divergence, simplex_grid, xlog2x)

FEAS_TOL = 1e-7  # bits; accepted violation of the inner entropy constraint after solving
S_SIZE_CAP = 4


@dataclass(frozen=True)
class SccsiProblem:
    p_xy: np.ndarray
    r1: float
    r2: float
    s_size: Optional[int] = None

    def __post_init__(self) -> None:
        p = JointDist(np.asarray(self.p_xy, dtype=float)).probs
        if p.ndim != 2:
            raise ValueError("p_xy must be a 2-axis table (X, Y)")
        object.__setattr__(self, "p_xy", p)
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("rates must be non-negative")
        if self.s_size is not None and self.s_size < 1:
            raise ValueError("s_size must be >= 1")

    @property
    def nx(self) -> int:
        return self.p_xy.shape[0]

    @property
    def ny(self) -> int:
        return self.p_xy.shape[1]

    def helper_size(self, cap: int = S_SIZE_CAP) -> int:
        if self.s_size is not None:
            return self.s_size
        return min(self.nx * self.ny + self.ny + 2, cap)

    @classmethod
    def from_obj(cls, obj: dict) -> "SccsiProblem":
        return cls(joint_from_obj(obj["p_xy"]).probs, float(obj["r1"]), float(obj["r2"]), obj.get("s_size"))


# ---------------------------------------------------------------- helpers

def _h_rows(t: np.ndarray, axis: int = -1) -> np.ndarray:
    return -xlog2x(t).sum(axis=axis)


def _mi_batch(joint: np.ndarray) -> np.ndarray:
    """I between the last two axes of a batch of 2-D joints."""
    return np.maximum(_h_rows(joint.sum(-1)) + _h_rows(joint.sum(-2)) - _h_rows(joint.reshape(len(joint), -1)), 0.0)


def _order_by_bound(bounds: np.ndarray) -> np.ndarray:
    # stable: ties keep enumeration order
    return np.argsort(bounds, kind="stable")


def _kl_rows(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """D(q_i || p) for each row of q (bits), inf where unsupported."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(q > 0, q * np.log2(q / p), 0.0)
    bad = np.any((q > 0) & (p <= 0), axis=-1)
    out = terms.sum(-1)
    out[bad] = INF
    return np.maximum(out, 0.0)


# ---------------------------------------------------------------- point to point

def point_to_point_exponent(p_x, r1: float) -> float:
    """inf of D(Q||P) over {H(Q) >= r1} (bits)."""
    p = np.asarray(getattr(p_x, "probs", p_x), dtype=float)
    if r1 < 0:
        raise ValueError("r1 must be non-negative")
    if r1 >= math.log2(p.size) - 1e-12:
        return INF
    if entropy(p) >= r1:
        return 0.0
    if p.size == 2:
        a = min(p[0], p[1])
        # binary entropy is increasing on [a, 1/2]; root nearest 1/2 side of a
        q = brentq(lambda t: binary_entropy(t) - r1, a, 0.5, xtol=1e-15, rtol=1e-15)
        return binary_kl(q, a)
    return _p2p_general(p, r1)


def _p2p_general(p: np.ndarray, r1: float, k: int = 32) -> float:
    grid = simplex_grid(p.size, k)
    feas = _h_rows(grid) >= r1
    best = float(_kl_rows(grid[feas], p).min()) if feas.any() else INF
    ref, zero = _convex.positive_ref(p)
    q = _convex.entropy_ball(p.size).run(ref=ref, zero=zero, h=r1)
    if q is not None:
        q = np.where(zero > 0, 0.0, np.clip(q, 0, None))
        q /= q.sum()
        if entropy(q) >= r1 - FEAS_TOL:
            best = min(best, kl_divergence(q, p))
    return best


# ---------------------------------------------------------------- eta_lower

def _lower_penalty(r1: float, r2: float, i_ys: np.ndarray, h_x_given_s: np.ndarray) -> np.ndarray:
    c = np.where(i_ys >= r2, r1 + r2 - i_ys, r1)
    return np.maximum(c - h_x_given_s, 0.0)


def lower_objective(p_xy: np.ndarray, r1: float, r2: float, q_y: np.ndarray, channel: np.ndarray,
                    joint: np.ndarray) -> float:
    """Objective of the achievable bound at an inner joint Q(x, y, s)."""
    ref = p_xy[:, :, None] * channel[None, :, :]
    d = kl_divergence(joint, ref)
    q_ys = joint.sum(0)
    i_ys = entropy(q_ys.sum(1)) + entropy(q_ys.sum(0)) - entropy(q_ys)
    q_xs = joint.sum(1)
    h_x_s = entropy(q_xs) - entropy(q_xs.sum(0))
    return d + float(_lower_penalty(r1, r2, np.array(i_ys), np.array(h_x_s)))


class _LowerInner:
    """Inner infimum of the achievable bound for one (Q_Y, channel) pair."""

    def __init__(self, prob: SccsiProblem, grid: GridSpec):
        self.prob = prob
        self.p = prob.p_xy
        py = self.p.sum(0)
        self.p_x_y = np.divide(self.p, py, out=np.full_like(self.p, 1.0 / prob.nx), where=py > 0)
        # constant-conditional seeds r(x) with H(r) >= r1
        r = simplex_grid(prob.nx, grid.cond_resolution)
        self.seed_r = r[_h_rows(r) >= prob.r1]
        self.seed_h = _h_rows(self.seed_r)

    def seeds(self, q_y: np.ndarray, chans: np.ndarray, dqy: float) -> tuple[np.ndarray, np.ndarray]:
        """Upper bounds for a batch of channels plus the index of the best seed (-1 nominal)."""
        r1, r2 = self.prob.r1, self.prob.r2
        q_ys = q_y[None, :, None] * chans
        i_ys = _mi_batch(q_ys)
        h_s = _h_rows(q_ys.sum(1))
        # nominal conditional P(x|y)
        q_xs = np.einsum("xy,cys->cxs", self.p_x_y, q_ys)
        q_x = q_xs.sum(-1)
        h_xs = _h_rows(q_xs.reshape(len(chans), -1)) - h_s
        nominal = dqy + _lower_penalty(r1, r2, i_ys, h_xs)
        nominal[_h_rows(q_x) < r1] = INF
        best, which = nominal, np.full(len(chans), -1)
        if len(self.seed_r):
            # D of the constant conditional r: sum_y q(y) D(r || P(.|y)) + D(Q_Y||P_Y)
            div = (_kl_rows(self.seed_r[:, None, :], self.p_x_y.T[None, :, :]) * q_y[None, :]).sum(-1)
            vals = dqy + div[None, :] + _lower_penalty(r1, r2, i_ys[:, None], self.seed_h[None, :])
            j = np.argmin(vals, axis=1)
            v = vals[np.arange(len(chans)), j]
            take = v < best
            best = np.where(take, v, best)
            which = np.where(take, j, which)
        return best, which

    def seed_joint(self, q_y: np.ndarray, chan: np.ndarray, which: int) -> np.ndarray:
        q_ys = q_y[:, None] * chan
        cond = self.p_x_y[:, :, None] if which < 0 else self.seed_r[which][:, None, None]
        return cond * q_ys[None, :, :]

    def solve(self, q_y: np.ndarray, chan: np.ndarray) -> Optional[np.ndarray]:
        prob = self.prob
        nx, ny = self.p.shape
        ns = chan.shape[1]
        q_ys = q_y[:, None] * chan
        i_ys = entropy(q_ys.sum(1)) + entropy(q_ys.sum(0)) - entropy(q_ys)
        c = prob.r1 + prob.r2 - i_ys if i_ys >= prob.r2 else prob.r1
        ref = (self.p[:, :, None] * chan[None, :, :]).reshape(nx, ny * ns)
        col = q_ys.reshape(-1)
        ref_pos, zero = _convex.positive_ref(ref)
        zero = np.maximum(zero, (col[None, :] <= 0).astype(float))
        J = _convex.sccsi_lower_inner(nx, ny * ns, ns).run(
            ref=ref_pos, zero=zero, col=col, shift=c + entropy(q_ys.sum(0)), hx_min=prob.r1)
        if J is None:
            return None
        J = _convex.clean_columns(J, zero, col, axis=0).reshape(nx, ny, ns)
        if entropy(J.sum((1, 2))) < prob.r1 - FEAS_TOL:
            return None
        return J


def eta_lower(prob: SccsiProblem, grid: GridSpec = GridSpec(), s_size_cap: int = S_SIZE_CAP) -> ExponentReport:
    nx, ny = prob.nx, prob.ny
    ns = prob.helper_size(s_size_cap)
    meta = {"resolution": grid.resolution, "cond_resolution": grid.cond_resolution, "s_size": ns}
    if prob.r1 >= math.log2(nx) - 1e-12:
        return ExponentReport(INF, {"reason": "r1 >= log|X|"}, meta)
    p_y = prob.p_xy.sum(0)
    q_grid = simplex_grid(ny, grid.resolution)
    dq = _kl_rows(q_grid, p_y)
    chans = channel_grid(ny, ns, grid.cond_resolution)
    inner = _LowerInner(prob, grid)

    best, best_w = INF, {}
    for qi in _order_by_bound(dq):
        if dq[qi] >= best:
            break
        q_y = q_grid[qi]
        ub, which = inner.seeds(q_y, chans, float(dq[qi]))
        sup_v, sup_w = -INF, None
        for ci in range(len(chans)):
            # the seed is feasible, so an upper bound below the running sup cannot matter
            if ub[ci] <= sup_v:
                continue
            joint = inner.seed_joint(q_y, chans[ci], int(which[ci])) if math.isfinite(ub[ci]) else None
            v = lower_objective(prob.p_xy, prob.r1, prob.r2, q_y, chans[ci], joint) if joint is not None else INF
            J = inner.solve(q_y, chans[ci])
            if J is not None:
                vj = lower_objective(prob.p_xy, prob.r1, prob.r2, q_y, chans[ci], J)
                if vj < v:
                    v, joint = vj, J
            if v > sup_v:
                sup_v, sup_w = v, (chans[ci], joint)
            if sup_v >= best:
                break
        if sup_v < best:
            best = sup_v
            best_w = {"q_y": q_y, "channel_s_given_y": sup_w[0], "inner_joint_xys": sup_w[1]}
    return ExponentReport(best, best_w, meta, refined=True)


# ---------------------------------------------------------------- eta_upper and eta_sp

def _check_positive(prob: SccsiProblem) -> None:
    if np.any(prob.p_xy <= 0):
        raise ValueError("the converse bound needs a strictly positive p_xy")


def _allowed_channels(q_y: np.ndarray, chans: np.ndarray, r2: float) -> np.ndarray:
    i_ys = _mi_batch(q_y[None, :, None] * chans)
    return chans[i_ys <= r2 + 1e-12]


def _cond_entropy_xs(q_xy: np.ndarray, chans: np.ndarray) -> np.ndarray:
    """H(X|S) for joints Q(x,y) (batch a) and channels (batch c) -> (a, c)."""
    q_xs = np.einsum("axy,cys->acxs", q_xy, chans)
    h_xs = -xlog2x(q_xs).sum((-1, -2))
    h_s = -xlog2x(q_xs.sum(-2)).sum(-1)
    return h_xs - h_s


def _joint_seeds(q_y_counts: np.ndarray, nx: int, k: int) -> np.ndarray:
    """All joint k-types with the given Y-marginal counts, shape (count, nx, ny)."""
    cols = [composition_counts(nx, int(c)) for c in q_y_counts]
    idx = np.indices([len(c) for c in cols]).reshape(len(cols), -1).T
    out = np.stack([np.stack([cols[y][row[y]] for y in range(len(cols))], axis=1) for row in idx])
    return out / k


def upper_objective(p_xy: np.ndarray, joint_xy: np.ndarray) -> float:
    return kl_divergence(joint_xy, p_xy)


def eta_upper(prob: SccsiProblem, grid: GridSpec = GridSpec(), s_size_cap: int = S_SIZE_CAP) -> ExponentReport:
    _check_positive(prob)
    nx, ny = prob.nx, prob.ny
    ns = prob.helper_size(s_size_cap)
    k = grid.resolution
    meta = {"resolution": k, "cond_resolution": grid.cond_resolution, "s_size": ns}
    target = prob.r1 + grid.strict_eps
    q_counts = composition_counts(ny, k)
    q_grid = q_counts / k
    dq = _kl_rows(q_grid, prob.p_xy.sum(0))
    chans_all = channel_grid(ny, ns, grid.cond_resolution)
    ref_pos, zero = _convex.positive_ref(prob.p_xy)

    best, best_w = INF, {}
    for qi in _order_by_bound(dq):
        if dq[qi] >= best:
            break
        q_y = q_grid[qi]
        chans = _allowed_channels(q_y, chans_all, prob.r2)
        seeds = _joint_seeds(q_counts[qi], nx, k)
        seed_d = _kl_rows(seeds.reshape(len(seeds), -1), prob.p_xy.reshape(-1))
        feas = _cond_entropy_xs(seeds, chans) >= target  # (seeds, chans)
        masked = np.where(feas, seed_d[:, None], INF)
        seed_best = masked.min(0)
        seed_arg = masked.argmin(0)
        sup_v, sup_w = -INF, None
        for ci in range(len(chans)):
            if seed_best[ci] <= sup_v:
                continue
            v, joint = float(seed_best[ci]), seeds[seed_arg[ci]]
            W = chans[ci]
            J = _convex.sccsi_upper_inner(nx, ny, ns).run(
                ref=ref_pos, zero=zero, qy=q_y, W=W, hxs_min=target + entropy(q_y @ W))
            if J is not None:
                J = _convex.clean_columns(J, zero, q_y, axis=0)
                if _cond_entropy_xs(J[None], W[None])[0, 0] >= target - FEAS_TOL:
                    vj = upper_objective(prob.p_xy, J)
                    if vj < v:
                        v, joint = vj, J
            if v > sup_v:
                sup_v, sup_w = v, (W, joint)
            if sup_v >= best:
                break
        if sup_v < best:
            best = sup_v
            best_w = {"q_y": q_y}
            if sup_w is not None:
                best_w.update(channel_s_given_y=sup_w[0], inner_joint_xy=sup_w[1])
    return ExponentReport(best, best_w, meta, refined=True)


def eta_sp(prob: SccsiProblem, grid: GridSpec = GridSpec(), s_size_cap: int = S_SIZE_CAP) -> ExponentReport:
    """Sphere-packing bound; a grid joint is admissible when no rate-limited channel
    pushes H(X|S) below r1 + strict_eps."""
    nx, ny = prob.nx, prob.ny
    ns = prob.helper_size(s_size_cap)
    k = grid.resolution
    meta = {"resolution": k, "cond_resolution": grid.cond_resolution, "s_size": ns}
    joints = simplex_grid(nx * ny, k)
    d = _kl_rows(joints, prob.p_xy.reshape(-1))
    chans_all = channel_grid(ny, ns, grid.cond_resolution)
    target = prob.r1 + grid.strict_eps
    allowed: dict[bytes, np.ndarray] = {}
    for i in _order_by_bound(d):
        if not math.isfinite(d[i]):
            break
        q = joints[i].reshape(nx, ny)
        q_y = q.sum(0)
        key = q_y.tobytes()
        if key not in allowed:
            allowed[key] = _allowed_channels(q_y, chans_all, prob.r2)
        if np.all(_cond_entropy_xs(q[None], allowed[key])[0] >= target):
            return ExponentReport(float(d[i]), {"q_xy": q}, meta)
    return ExponentReport(INF, {}, meta)
