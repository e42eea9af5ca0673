"""Wyner-Ziv exponents for discrete memoryless sources.

``theta_lower`` plays the five-level game (source type, test channel, side
information type, reproduction map, coupling). ``theta_upper`` uses the
Wyner-Ziv rate function ``rwz``. ``xi_exponents`` covers the lossless
functional special case. Units are bits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _convex
from ._search import search
from .info import (INF, ExponentReport, GridSpec, JointDist, binary_entropy, binary_kl, channel_grid, entropy,
                   joint_from_obj, kl_divergence, simplex_grid, xlog2x)

BRANCH_TOL = 1e-9  # distortion slack when deciding E d >= delta on solver output
F_TABLE_BITS = 12


@dataclass(frozen=True)
class WzProblem:
    p_xy: np.ndarray
    rate: float
    delta: float
    dist: np.ndarray
    z_size: Optional[int] = None

    def __post_init__(self) -> None:
        p = JointDist(np.asarray(self.p_xy, dtype=float)).probs
        d = np.asarray(self.dist, dtype=float)
        if p.ndim != 2:
            raise ValueError("p_xy must be a 2-axis table (X, Y)")
        if d.ndim != 2 or d.shape[0] != p.shape[0]:
            raise ValueError("distortion table must have one row per source symbol")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distortion entries must be finite and non-negative")
        if self.rate <= 0 or self.delta <= 0:
            raise ValueError("rate and delta must be positive")
        object.__setattr__(self, "p_xy", p)
        object.__setattr__(self, "dist", d)

    @property
    def aux_size(self) -> int:
        return self.z_size if self.z_size is not None else self.p_xy.shape[0] + 1

    @property
    def xhat_size(self) -> int:
        return self.dist.shape[1]

    @classmethod
    def from_obj(cls, obj: dict) -> "WzProblem":
        return cls(joint_from_obj(obj["p_xy"]).probs, float(obj["rate"]), float(obj["delta"]),
                   np.asarray(obj["dist"], dtype=float), obj.get("z_size"))


def hamming(n: int) -> np.ndarray:
    return 1.0 - np.eye(n)


# ---------------------------------------------------------------- G_D

def g_d(q_xyz: np.ndarray, p_xy: np.ndarray, q_zx: np.ndarray, f: np.ndarray, delta: float, rate: float,
        dist: np.ndarray, tol: float = 0.0) -> float:
    """Error-event exponent of one joint type Q(x, y, z) under reproduction map f[y, z].

    ``tol`` widens the "distortion exceeded" branch by a small slack; 0 gives the
    textbook definition.
    """
    q = np.asarray(q_xyz, dtype=float)
    q_xz = q.sum(1)
    q_x = q_xz.sum(1)
    if np.any(np.abs(q_xz - q_x[:, None] * q_zx)[q_x > 0] > 1e-9):
        raise ValueError("q_xyz does not match the test channel Q(z|x)")
    ref = p_xy[:, :, None] * q_zx[:, None, :]
    d = kl_divergence(q, ref)
    ed = float(np.einsum("xyz,xyz->", q, dist[:, f]))
    if ed >= delta - tol:
        return d
    i_xz = entropy(q_x) + entropy(q_xz.sum(0)) - entropy(q_xz)
    if i_xz >= rate:
        q_yz = q.sum(0)
        i_yz = entropy(q_yz.sum(1)) + entropy(q_yz.sum(0)) - entropy(q_yz)
        return d + max(rate - i_xz + i_yz, 0.0)
    return INF


def all_maps(ny: int, nz: int, nxhat: int, max_bits: float = F_TABLE_BITS) -> np.ndarray:
    """Every reproduction table f[y, z], in lexicographic order."""
    bits = ny * nz * math.log2(max(nxhat, 1))
    if bits > max_bits:
        raise ValueError(f"reproduction-map table needs {bits:.1f} bits (cap {max_bits})")
    tables = np.array(list(itertools.product(range(nxhat), repeat=ny * nz)), dtype=np.int64)
    return tables.reshape(-1, ny, nz)


def _fit_margins(J: np.ndarray, zero: np.ndarray, r: np.ndarray, c: np.ndarray, iters: int = 500) -> np.ndarray:
    """Clip solver noise, then Sinkhorn-scale so both marginals are exact."""
    J = np.where(zero > 0, 0.0, np.clip(J, 0.0, None))
    J = np.where((r[:, None] > 0) & (c[None, :] > 0) & (zero == 0), np.maximum(J, 1e-300), 0.0)
    for _ in range(iters):
        s = J.sum(1)
        J *= np.divide(r, s, out=np.zeros_like(s), where=s > 0)[:, None]
        t = J.sum(0)
        J *= np.divide(c, t, out=np.zeros_like(t), where=t > 0)[None, :]
        if np.abs(J.sum(1) - r).max() < 1e-15:
            break
    return J


class _Coupling:
    """Inner coupling problems for fixed (Q_X, Q_{Z|X}, Q_Y)."""

    def __init__(self, prob: WzProblem, q_x: np.ndarray, W: np.ndarray, q_y: np.ndarray):
        self.prob = prob
        nx, ny = prob.p_xy.shape
        nz = W.shape[1]
        self.shape = (nx, ny, nz)
        self.W, self.q_x, self.q_y = W, q_x, q_y
        q_xz = q_x[:, None] * W
        self.i_xz = max(entropy(q_x) + entropy(q_xz.sum(0)) - entropy(q_xz), 0.0)
        self.binning = self.i_xz >= prob.rate
        ref = (prob.p_xy[:, None, :] * W[:, :, None]).reshape(nx * nz, ny)
        self.ref_pos, self.zero = _convex.positive_ref(ref)
        self.rsum = q_xz.reshape(-1)
        self.zero = np.maximum(self.zero, (self.rsum[:, None] <= 0) | (q_y[None, :] <= 0)).astype(float)
        self.shift = prob.rate - self.i_xz + entropy(q_y) + entropy(q_xz.sum(0))

    def _run(self, mode: str, dmat: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
        nx, ny, nz = self.shape
        kw = dict(ref=self.ref_pos, zero=self.zero, rsum=self.rsum, csum=self.q_y)
        if mode in ("pen", "le"):
            kw["shift"] = self.shift
        if dmat is not None:
            kw.update(dmat=dmat, delta=self.prob.delta)
        J = _convex.wz_coupling(nx * nz, ny, nz, mode).run(**kw)
        if J is None:
            return None
        J = _fit_margins(J, self.zero, self.rsum, self.q_y)
        if np.abs(J.sum(0) - self.q_y).max() > 1e-9:
            return None
        return J.reshape(nx, nz, ny).transpose(0, 2, 1)  # (x, y, z)

    def value(self, q_xyz: Optional[np.ndarray], f: np.ndarray) -> float:
        if q_xyz is None:
            return INF
        p = self.prob
        return g_d(q_xyz, p.p_xy, self.W, f, p.delta, p.rate, p.dist, tol=BRANCH_TOL)


def _dmat(dist: np.ndarray, f: np.ndarray, nz: int) -> np.ndarray:
    # rows (x, z), columns y: d(x, f(y, z))
    d = dist[:, f]  # (x, y, z)
    return d.transpose(0, 2, 1).reshape(dist.shape[0] * nz, -1)


def _ed(q_xyz: np.ndarray, dist: np.ndarray, f: np.ndarray) -> float:
    return float(np.einsum("xyz,xyz->", q_xyz, dist[:, f]))


def theta_lower(prob: WzProblem, grid: GridSpec = GridSpec(resolution=8, cond_resolution=4)) -> ExponentReport:
    """Achievable exponent: inf Q_X, sup Q_{Z|X}, inf Q_Y, sup f, inf coupling."""
    nx, ny = prob.p_xy.shape
    nz = prob.aux_size
    maps = all_maps(ny, nz, prob.xhat_size)
    dmats = [_dmat(prob.dist, f, nz) for f in maps]
    p_x, p_y = prob.p_xy.sum(1), prob.p_xy.sum(0)
    qx_grid = simplex_grid(nx, grid.resolution)
    qy_grid = simplex_grid(ny, grid.resolution)
    chans = channel_grid(nx, nz, grid.cond_resolution)
    step_m, step_c = 1.0 / grid.resolution, 1.0 / grid.cond_resolution
    meta = {"resolution": grid.resolution, "cond_resolution": grid.cond_resolution, "z_size": nz,
            "maps": len(maps), "refine_rounds": grid.refine_rounds}

    def level3(q_x, W, alpha):
        dx = kl_divergence(q_x, p_x)
        return search(qy_grid, lambda q_y, beta: _level4(prob, q_x, W, q_y, maps, dmats, beta),
                      maximize=False, cutoff=alpha, step=step_m, grid=grid,
                      lower_bound=lambda q_y: max(kl_divergence(q_y, p_y), dx))

    def level2(q_x, beta):
        def ev(W, alpha):
            v, w, _ = level3(q_x, W, alpha)
            return v, (W, w)
        extra = rd_test_channels(q_x, prob.dist, prob.delta, nz)
        v, w, _ = search(extra + list(chans), ev, maximize=True, cutoff=beta, step=step_c, grid=grid)
        return v, w

    value, w2, q_x = search(qx_grid, level2, maximize=False, cutoff=-INF, step=step_m, grid=grid,
                            lower_bound=lambda q: kl_divergence(q, p_x))
    wit = {"q_x": q_x}
    if w2 is not None:
        wit["channel_z_given_x"] = w2[0]
        if w2[1] is not None:
            wit.update(w2[1])
    return ExponentReport(value, wit, meta, refined=grid.refine_rounds > 0)


def _level4(prob: WzProblem, q_x, W, q_y, maps, dmats, beta: float):
    """sup over maps f of the coupling infimum; returns (value, witness)."""
    cp_ = _Coupling(prob, q_x, W, q_y)
    J0 = cp_._run("free")
    if J0 is None:
        return INF, {"q_y": q_y, "reason": "no coupling"}
    J1 = cp_._run("pen") if cp_.binning else None
    sup4, w4 = -INF, None
    for f, dm in zip(maps, dmats):
        if _ed(J0, prob.dist, f) >= prob.delta - BRANCH_TOL:
            cands = [J0]
        else:
            cands = []
            if cp_.binning:
                cands.append(J1 if J1 is not None and _ed(J1, prob.dist, f) <= prob.delta else cp_._run("le", dm))
                vb = min(cp_.value(c, f) for c in cands)
                if vb <= sup4:
                    continue  # cannot raise the sup
            cands.append(cp_._run("ge", dm))
        vals = [cp_.value(c, f) for c in cands]
        j = int(np.argmin(vals))
        if vals[j] > sup4:
            sup4, w4 = vals[j], {"q_y": q_y, "map_f": f, "inner_joint_xyz": cands[j]}
        if sup4 >= beta:
            break
    return sup4, w4


def blahut_arimoto(q_x: np.ndarray, dist: np.ndarray, slope: float, iters: int = 400) -> np.ndarray:
    """Rate-distortion test channel Q(xhat|x) at Lagrange slope ``slope`` (nats per unit distortion)."""
    r = np.full(dist.shape[1], 1.0 / dist.shape[1])
    kern = np.exp(-slope * (dist - dist.min(1, keepdims=True)))
    for _ in range(iters):
        w = r[None, :] * kern
        w /= w.sum(1, keepdims=True)
        r_new = q_x @ w
        if np.abs(r_new - r).max() < 1e-14:
            break
        r = r_new
    w = r[None, :] * kern
    return w / w.sum(1, keepdims=True)


def rd_test_channels(q_x: np.ndarray, dist: np.ndarray, delta: float, nz: int,
                     shrink: Sequence[float] = (1e-3, 1e-2)) -> list[np.ndarray]:
    """Blahut-Arimoto channels whose distortion sits just below ``delta``.

    They are the designer's natural candidates for avoiding both error events,
    so the test-channel search tries them before the grid. Needs nz >= |Xhat|.
    """
    nxhat = dist.shape[1]
    if nz < nxhat:
        return []
    out = []
    for eps in shrink:
        target = delta * (1 - eps)
        ed = lambda s: float(q_x @ (blahut_arimoto(q_x, dist, s) * dist).sum(1))
        if ed(0.0) <= target:
            continue
        lo, hi = 0.0, 1.0
        while ed(hi) > target and hi < 1e3:
            lo, hi = hi, 2 * hi
        if ed(hi) > target:
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if ed(mid) > target else (lo, mid)
        w = np.zeros((dist.shape[0], nz))
        w[:, :nxhat] = blahut_arimoto(q_x, dist, hi)
        out.append(w)
    return out


def marton_binary_hamming(p_x, rate: float, delta: float) -> float:
    """inf of D(q||p) over {h(q) - h(delta) > rate}."""
    p = np.asarray(getattr(p_x, "probs", p_x), dtype=float)
    if p.size != 2:
        raise ValueError("binary source expected")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    t = rate + binary_entropy(delta)
    if t >= 1.0:
        return INF
    a = float(min(p))
    if binary_entropy(a) > t:
        return 0.0
    q = brentq(lambda s: binary_entropy(s) - t, a, 0.5, xtol=1e-15, rtol=1e-15)
    return binary_kl(q, a)


# ---------------------------------------------------------------- R_WZ and the converse

def _rwz_batch(q_xy: np.ndarray, chans: np.ndarray, dist: np.ndarray, delta: float) -> float:
    q = q_xy[None, :, :, None] * chans[:, :, None, :]  # (c, x, y, z)
    q_xz = q.sum(2)
    q_yz = q.sum(1)
    h = lambda t: -xlog2x(t.reshape(len(t), -1)).sum(-1)
    i_xz = h(q_xz.sum(2)) + h(q_xz.sum(1)) - h(q_xz)
    i_yz = h(q_yz.sum(2)) + h(q_yz.sum(1)) - h(q_yz)
    min_ed = np.einsum("cxyz,xk->cyzk", q, dist).min(-1).sum((1, 2))
    ok = min_ed <= delta + 1e-12
    if not ok.any():
        return INF
    return max(float((i_xz - i_yz)[ok].min()), 0.0)


def rwz(q_xy, delta: float, dist: np.ndarray, grid: GridSpec = GridSpec(), z_size: Optional[int] = None) -> float:
    q = np.asarray(getattr(q_xy, "probs", q_xy), dtype=float)
    if delta < 0:
        raise ValueError("delta must be non-negative")
    nz = z_size if z_size is not None else q.shape[0] + 1
    return _rwz_batch(q, channel_grid(q.shape[0], nz, grid.cond_resolution), np.asarray(dist, float), delta)


def theta_upper(prob: WzProblem, grid: GridSpec = GridSpec()) -> ExponentReport:
    nx, ny = prob.p_xy.shape
    joints = simplex_grid(nx * ny, grid.resolution)
    d = np.array([kl_divergence(j, prob.p_xy.reshape(-1)) for j in joints])
    chans = channel_grid(nx, prob.aux_size, grid.cond_resolution)
    meta = {"resolution": grid.resolution, "cond_resolution": grid.cond_resolution, "z_size": prob.aux_size}
    for i in np.argsort(d, kind="stable"):
        if not math.isfinite(d[i]):
            break
        q = joints[i].reshape(nx, ny)
        r = _rwz_batch(q, chans, prob.dist, prob.delta)
        if r > prob.rate + grid.strict_eps:
            return ExponentReport(float(d[i]), {"q_xy": q, "rwz": r}, meta)
    return ExponentReport(INF, {}, meta)


# ---------------------------------------------------------------- functional source coding

@dataclass(frozen=True)
class FunctionalProblem:
    p_xy: np.ndarray
    g: np.ndarray
    rate: float

    def __post_init__(self) -> None:
        p = JointDist(np.asarray(self.p_xy, dtype=float)).probs
        g = np.asarray(self.g, dtype=np.int64)
        if g.shape != (p.shape[0],) or np.any(g < 0):
            raise ValueError("g must assign a non-negative label to every source symbol")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")
        object.__setattr__(self, "p_xy", p)
        object.__setattr__(self, "g", g)

    @classmethod
    def from_obj(cls, obj: dict) -> "FunctionalProblem":
        return cls(joint_from_obj(obj["p_xy"]).probs, np.asarray(obj["g"]), float(obj["rate"]))


@dataclass(frozen=True)
class XiResult:
    xi_lower: float
    xi_upper: float
    xi_lower_unconstrained: float
    witness_upper: Optional[np.ndarray] = None
    witness_unconstrained: Optional[np.ndarray] = None


def _h_g_given_y(q: np.ndarray, G: np.ndarray) -> np.ndarray:
    """H(g(X)|Y) for a batch of joints (b, x, y)."""
    q_gy = np.einsum("gx,bxy->bgy", G, q)
    return -xlog2x(q_gy).sum((1, 2)) + xlog2x(q.sum(1)).sum(1)


def xi_exponents(prob: FunctionalProblem, grid: GridSpec = GridSpec()) -> XiResult:
    nx, ny = prob.p_xy.shape
    ng = int(prob.g.max()) + 1
    G = np.zeros((ng, nx))
    G[prob.g, np.arange(nx)] = 1.0
    seeds = simplex_grid(nx * ny, grid.resolution).reshape(-1, nx, ny)
    flat_p = prob.p_xy.reshape(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(seeds > 0, seeds * np.log2(seeds / prob.p_xy), 0.0)
    d = terms.reshape(len(seeds), -1).sum(1)
    d[np.any((seeds.reshape(len(seeds), -1) > 0) & (flat_p <= 0), axis=1)] = INF
    d = np.maximum(d, 0.0)
    h = _h_g_given_y(seeds, G)
    ref_pos, zero = _convex.positive_ref(prob.p_xy)

    def finish(J):
        J = np.where(zero > 0, 0.0, np.clip(J, 0, None))
        return J / J.sum()

    def pen_obj(q):
        return kl_divergence(q, prob.p_xy) + max(prob.rate - float(_h_g_given_y(q[None], G)[0]), 0.0)

    # constrained: min D on {H(g|Y) >= rate}
    feas = h >= prob.rate
    up, w_up = INF, None
    if feas.any():
        i = int(np.argmin(np.where(feas, d, INF)))
        up, w_up = float(d[i]), seeds[i]
    J = _convex.functional_program(nx, ny, ng, "con").run(ref=ref_pos, zero=zero, G=G, rate=prob.rate)
    if J is not None:
        J = finish(J)
        if _h_g_given_y(J[None], G)[0] >= prob.rate - 1e-7 and kl_divergence(J, prob.p_xy) < up:
            up, w_up = kl_divergence(J, prob.p_xy), J
    low = pen_obj(w_up) if w_up is not None else INF

    # unconstrained: min D + [rate - H(g|Y)]^+
    pen = d + np.maximum(prob.rate - h, 0.0)
    i = int(np.argmin(pen))
    un, w_un = float(pen[i]), seeds[i]
    J = _convex.functional_program(nx, ny, ng, "pen").run(ref=ref_pos, zero=zero, G=G, rate=prob.rate)
    if J is not None:
        J = finish(J)
        if pen_obj(J) < un:
            un, w_un = pen_obj(J), J
    return XiResult(low, up, un, w_up, w_un)
