"""Binary-erasure Wyner-Ziv example.

The source is uniform on {-1, +1}; the side information Y erases X with
probability p. Reproductions live in {-1, 0, +1}: 0 costs 1 and a sign error
costs ``kappa``. The encoder's test channel is an erasure channel with erasure
probability ``delta_z``. G1 is the distortion-error exponent and G2 the
binning-error exponent; the scheme's exponent is max over delta_z of min(G1, G2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .info import INF, LN2, GridSpec, binary_kl, entropy

X_SYMBOLS = (-1, 1)
Y_SYMBOLS = (-1, 0, 1)  # also Z and the reproduction alphabet
XHAT_SYMBOLS = Y_SYMBOLS


@dataclass(frozen=True)
class BeConfig:
    p: float = 0.5
    delta_target: float = 0.15
    kappa: float = 100.0
    rate: float = 0.425
    dgrid: float = 0.005
    inner_grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self) -> None:
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if not 0 < self.delta_target < 1:
            raise ValueError("delta_target must lie in (0, 1)")
        if self.kappa <= 1:
            raise ValueError("kappa must exceed 1")
        if not 0 < self.rate <= 1:
            raise ValueError("rate must lie in (0, 1]")
        if not 0 < self.dgrid <= 1:
            raise ValueError("dgrid must lie in (0, 1]")


def natural_f() -> np.ndarray:
    """Reproduction table f[y, z] as symbols: +1 if z=+1 or y=+1, 0 if both are 0, else -1."""
    f = np.empty((3, 3), dtype=np.int64)
    for i, y in enumerate(Y_SYMBOLS):
        for j, z in enumerate(Y_SYMBOLS):
            f[i, j] = 1 if (z == 1 or y == 1) else (0 if (z == 0 and y == 0) else -1)
    return f


def distortion(kappa: float) -> np.ndarray:
    """d[x, xhat] indexed by positions in X_SYMBOLS and XHAT_SYMBOLS."""
    return np.array([[0.0 if xh == x else (1.0 if xh == 0 else kappa) for xh in XHAT_SYMBOLS] for x in X_SYMBOLS])


def source_joint(p: float) -> np.ndarray:
    """P(x, y) over X_SYMBOLS x Y_SYMBOLS."""
    return np.array([[0.5 * (1 - p) if y == x else (0.5 * p if y == 0 else 0.0) for y in Y_SYMBOLS]
                     for x in X_SYMBOLS])


def erasure_channel(delta_z: float) -> np.ndarray:
    """Q(z|x): keep x with prob 1-delta_z, output 0 otherwise."""
    return np.array([[1 - delta_z if z == x else (delta_z if z == 0 else 0.0) for z in Y_SYMBOLS]
                     for x in X_SYMBOLS])


def _cell_distortion(cfg: BeConfig) -> np.ndarray:
    """d(x, f(y, z)) as an array (x, y, z)."""
    d = distortion(cfg.kappa)
    f_idx = natural_f() + 1  # symbol -> index in XHAT_SYMBOLS
    return d[:, f_idx]


def rd_function(delta_target: float, p: float) -> float:
    return max(0.0, p - delta_target)


def two_sided_exponent(rate: float, cfg: BeConfig) -> float:
    """D(Bern(rate + delta) || Bern(p)) in bits; zero below the rate-distortion function."""
    a = rate + cfg.delta_target
    if not 0 <= a <= 1:
        raise ValueError("rate + delta must lie in [0, 1]")
    if rate <= cfg.p - cfg.delta_target:
        return 0.0
    return binary_kl(a, cfg.p)


# ---------------------------------------------------------------- G1 by tilting

def g1(delta_z: float, cfg: BeConfig) -> float:
    """min D(Q_XYZ || P_XY Q_{Z|X}) subject to E d >= delta, Q_X uniform, erasure test channel.

    Each (x, z) cell tilts P(y|x) by exp(b d); one multiplier b couples the cells.
    """
    if not 0 <= delta_z <= 1:
        raise ValueError("delta_z must lie in [0, 1]")
    p_xy = source_joint(cfg.p)
    p_y_x = p_xy / p_xy.sum(1, keepdims=True)
    w = 0.5 * erasure_channel(delta_z)  # Q(x, z)
    dcell = _cell_distortion(cfg)  # (x, y, z)
    cells = [(i, k) for i in range(2) for k in range(3) if w[i, k] > 0]
    target = cfg.delta_target

    def tilt(b: float):
        ed, div = 0.0, 0.0
        for i, k in cells:
            sup = p_y_x[i] > 0
            logit = np.log(p_y_x[i][sup]) + b * dcell[i, sup, k]
            logit -= logit.max()
            q = np.exp(logit)
            q /= q.sum()
            ed += w[i, k] * float(q @ dcell[i, sup, k])
            div += w[i, k] * float(np.sum(np.where(q > 0, q * np.log2(np.where(q > 0, q, 1) / p_y_x[i][sup]), 0)))
        return ed, div

    if tilt(0.0)[0] >= target:
        return 0.0
    top = sum(w[i, k] * dcell[i, p_y_x[i] > 0, k].max() for i, k in cells)
    if top < target - 1e-15:
        return INF
    if top <= target + 1e-15:
        # only the extreme law meets the constraint: mass on the max-distortion outputs
        div = 0.0
        for i, k in cells:
            sup = p_y_x[i] > 0
            dm = dcell[i, :, k]
            mx = dm[sup].max()
            div += w[i, k] * -math.log2(p_y_x[i][sup & (dm == mx)].sum())
        return div
    hi = 1.0
    while tilt(hi)[0] < target:
        hi *= 2.0
    b = brentq(lambda t: tilt(t)[0] - target, 0.0, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    return tilt(b)[1]


# ---------------------------------------------------------------- G2 by symmetric reduction

def _sym_coupling(delta_z: float, q1: float, q0: float) -> np.ndarray:
    """Q(x, y, z) invariant under global sign flip.

    q1 = Q(y=0 | x, z=x) and q0 = Q(y=0 | x, z=0); the remaining mass sits on y = x.
    """
    q = np.zeros((2, 3, 3))
    for i, x in enumerate(X_SYMBOLS):
        zx, x_y = x + 1, x + 1  # index of symbol x in the ternary alphabets
        q[i, x_y, zx] = 0.5 * (1 - delta_z) * (1 - q1)
        q[i, 1, zx] = 0.5 * (1 - delta_z) * q1
        q[i, x_y, 1] = 0.5 * delta_z * (1 - q0)
        q[i, 1, 1] = 0.5 * delta_z * q0
    return q


def g2_objective(q_xyz: np.ndarray, delta_z: float, cfg: BeConfig) -> tuple[float, float]:
    """(divergence + binning penalty, expected distortion) of a coupling (bits)."""
    ref = source_joint(cfg.p)[:, :, None] * erasure_channel(delta_z)[:, None, :]
    pos = q_xyz > 0
    if np.any(ref[pos] <= 0):
        return INF, INF
    div = float(np.sum(q_xyz[pos] * np.log2(q_xyz[pos] / ref[pos])))
    q_yz = q_xyz.sum(0)
    i_yz = entropy(q_yz.sum(1)) + entropy(q_yz.sum(0)) - entropy(q_yz)
    pen = max(cfg.rate - (1 - delta_z) + i_yz, 0.0)
    ed = float(np.sum(q_xyz * _cell_distortion(cfg)))
    return max(div, 0.0) + pen, ed


def _g2_fast(delta_z: float, cfg: BeConfig):
    """Scalar closed form of g2_objective on the symmetric family (same value, ~50x faster)."""
    p, r, dz = cfg.p, cfg.rate, delta_z
    a = 1 - dz

    def xlx(t):
        return t * math.log2(t) if t > 0 else 0.0

    def kl(q):
        v = (xlx(q) - q * math.log2(p) if q > 0 else 0.0) + (xlx(1 - q) - (1 - q) * math.log2(1 - p) if q < 1 else 0.0)
        return max(v, 0.0)

    def obj(q1, q0):
        # joint of (y, z): (x,x) cells, (0,x) cells, (x,0) cells, (0,0)
        m_xx = 0.5 * a * (1 - q1)
        m_0x = 0.5 * a * q1
        m_x0 = 0.5 * dz * (1 - q0)
        m_00 = dz * q0
        h_yz = -(2 * xlx(m_xx) + 2 * xlx(m_0x) + 2 * xlx(m_x0) + xlx(m_00))
        py_pm = m_xx + m_x0
        py_0 = 2 * m_0x + m_00
        h_y = -(2 * xlx(py_pm) + xlx(py_0))
        h_z = -(2 * xlx(0.5 * a) + xlx(dz))
        i_yz = max(h_y + h_z - h_yz, 0.0)
        return a * kl(q1) + dz * kl(q0) + max(r - a + i_yz, 0.0)

    return obj


def _bounded_min(fun, lo: float, hi: float, tol: float = 1e-12) -> tuple[float, float]:
    """Minimize a convex scalar function on [lo, hi], endpoints included."""
    if hi - lo <= tol:
        return fun(lo), lo
    res = minimize_scalar(fun, bounds=(lo, hi), method="bounded", options={"xatol": tol, "maxiter": 500})
    best = (float(res.fun), float(res.x))
    for e in (lo, hi):
        v = fun(e)
        if v < best[0]:
            best = (v, e)
    return best


def g2(delta_z: float, cfg: BeConfig, return_args: bool = False):
    """min over couplings with E d <= delta of divergence + [R - I(X;Z) + I(Y;Z)]^+.

    The problem is convex and sign-flip symmetric, so the optimum is symmetric and
    depends on two numbers (q1, q0); a nested bounded Brent search finds it.
    """
    if not 0 <= delta_z <= 1:
        raise ValueError("delta_z must lie in [0, 1]")
    if 1 - delta_z < cfg.rate:
        return (INF, None) if return_args else INF
    obj = _g2_fast(delta_z, cfg)
    # E d = delta_z * q0 for the natural map (sign errors are off the support)
    q0_max = 1.0 if delta_z <= cfg.delta_target else cfg.delta_target / delta_z

    def inner(q0: float) -> float:
        return _bounded_min(lambda q1: obj(q1, q0), 0.0, 1.0)[0]

    val, q0 = _bounded_min(inner, 0.0, q0_max)
    _, q1 = _bounded_min(lambda t: obj(t, q0), 0.0, 1.0)
    val = obj(q1, q0)
    return (val, (q1, q0)) if return_args else val


@dataclass(frozen=True)
class BeCurvePoint:
    delta: float
    g1: float
    g2: float


def delta_grid(step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.arange(n + 1) / n


def be_exponent(cfg: BeConfig) -> tuple[float, float, list[BeCurvePoint]]:
    """sup over the erasure test channels of min(G1, G2); ties go to the smallest delta."""
    curve = []
    best, arg = -INF, math.nan
    for d in delta_grid(cfg.dgrid):
        a, b = g1(float(d), cfg), g2(float(d), cfg)
        curve.append(BeCurvePoint(float(d), a, b))
        v = min(a, b)
        if v > best:
            best, arg = v, float(d)
    return best, arg, curve


def g1_closed_form(delta_z: float, cfg: BeConfig) -> float:
    """delta_z * D(delta/delta_z || p): only the erased cells can carry distortion."""
    if delta_z <= 0 or delta_z < cfg.delta_target:
        return INF
    ratio = cfg.delta_target / delta_z
    if ratio <= cfg.p:
        return 0.0
    return delta_z * binary_kl(ratio, cfg.p)
