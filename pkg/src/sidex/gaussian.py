"""Quadratic-Gaussian Wyner-Ziv exponents (nats).

The source pair (X, Y) has unit variances and correlation ``zeta``. The
achievable bound is a five-level game:

    inf over sigma_X^2, sup over rho_xz, inf over sigma_Y^2,
    sup over the linear estimator (alpha, beta), inf over (rho_xy, rho_yz)

with nature's covariance K compared against the Markov reference K-bar.
The innermost level is evaluated on a dense correlation grid, vectorized over
batches of estimators; every other level is a grid pass followed by local
refinement around the incumbent, with alpha-beta cut-offs between levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .info import INF, ExponentReport

PSD_TOL = 1e-10


# ---------------------------------------------------------------- closed forms

def _check_psd(k: np.ndarray) -> None:
    if not np.allclose(k, k.T, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    if np.linalg.eigvalsh(k).min() < -PSD_TOL:
        raise ValueError("covariance must be positive semidefinite")


def gauss_kl(k: np.ndarray, kbar: np.ndarray) -> float:
    """D(N(0,k) || N(0,kbar)) in nats."""
    k, kbar = np.atleast_2d(np.asarray(k, float)), np.atleast_2d(np.asarray(kbar, float))
    if k.shape != kbar.shape:
        raise ValueError("dimension mismatch")
    _check_psd(k)
    _check_psd(kbar)
    sb, ldb = np.linalg.slogdet(kbar)
    if sb <= 0 or np.linalg.eigvalsh(kbar).min() <= PSD_TOL:
        raise ValueError("reference covariance is singular")
    sk, ldk = np.linalg.slogdet(k)
    if sk <= 0:
        return INF
    d = k.shape[0]
    val = 0.5 * (ldb - ldk + np.trace(np.linalg.solve(kbar, k)) - d)
    return max(float(val), 0.0)


def sigma(zeta: float) -> np.ndarray:
    return np.array([[1.0, zeta], [zeta, 1.0]])


def kbar(sigma_x2: float, rho_xz: float, zeta: float) -> np.ndarray:
    """Markov reference Z - X - Y: the (X, Y) block is the source covariance."""
    if sigma_x2 <= 0 or abs(rho_xz) >= 1:
        raise ValueError("need sigma_x2 > 0 and |rho_xz| < 1")
    sx = math.sqrt(sigma_x2)
    c = rho_xz / sx
    return np.array([[1.0, zeta, c],
                     [zeta, 1.0, zeta * c],
                     [c, zeta * c, rho_xz ** 2 / sigma_x2 + 1 - rho_xz ** 2]])


def cov3(sigma_x2: float, sigma_y2: float, rho_xy: float, rho_xz: float, rho_yz: float) -> np.ndarray:
    """Nature's covariance of (X, Y, Z) with unit Z variance."""
    sx, sy = math.sqrt(sigma_x2), math.sqrt(sigma_y2)
    return np.array([[sigma_x2, sx * sy * rho_xy, sx * rho_xz],
                     [sx * sy * rho_xy, sigma_y2, sy * rho_yz],
                     [sx * rho_xz, sy * rho_yz, 1.0]])


_AXES = {"x": 0, "y": 1, "z": 2}


def gauss_mi(k: np.ndarray, pair: tuple) -> float:
    i, j = (_AXES[a] if isinstance(a, str) else a for a in pair)
    rho = k[i, j] / math.sqrt(k[i, i] * k[j, j])
    if abs(rho) >= 1:
        return INF
    return -0.5 * math.log1p(-rho * rho)


def mse(k: np.ndarray, lam: tuple[float, float]) -> float:
    """E[(X - alpha Y - beta Z)^2] under covariance k."""
    a, b = lam
    return float(k[0, 0] + a * a * k[1, 1] + b * b * k[2, 2] - 2 * a * k[0, 1] - 2 * b * k[0, 2] + 2 * a * b * k[1, 2])


def mse_gradient(k: np.ndarray, lam: tuple[float, float]) -> np.ndarray:
    a, b = lam
    return np.array([2 * a * k[1, 1] - 2 * k[0, 1] + 2 * b * k[1, 2],
                     2 * b * k[2, 2] - 2 * k[0, 2] + 2 * a * k[1, 2]])


def marton_gauss(rate: float, delta: float) -> float:
    t = delta * math.exp(2 * rate)
    if t <= 1:
        return 0.0
    return 0.5 * (t - math.log(t) - 1)


def two_sided_gauss(rate: float, delta: float, zeta: float) -> float:
    u = delta * math.exp(2 * rate) / (1 - zeta * zeta)
    if u <= 1:
        return 0.0
    return 0.5 * (u - math.log(u) - 1)


def kstar(rate: float, delta: float, zeta: float) -> np.ndarray:
    t = delta * math.exp(2 * rate)
    return np.array([[zeta * zeta + t, zeta], [zeta, 1.0]])


def cond_rd(pi: np.ndarray, delta: float) -> float:
    """Conditional rate-distortion function 1/2 log+(Var(X|Y) / delta), nats."""
    pi = np.asarray(pi, float)
    _check_psd(pi)
    var = np.linalg.det(pi) / pi[1, 1]
    if var <= delta:
        return 0.0
    return 0.5 * math.log(var / delta)


# ---------------------------------------------------------------- problem

@dataclass(frozen=True)
class GaussGrids:
    """Search grids. Variance and correlation grids are built from integers so
    that 1.0 and 0.0 are represented exactly."""

    var_lo: float = 0.1
    var_hi: float = 4.0
    var_step: float = 0.05
    corr_max: float = 0.98
    corr_step: float = 0.02
    nature_step: float = 0.02
    lam_step: float = 0.25
    refine_rounds: int = 2
    refine_shrink: float = 0.2
    refine_span: int = 5

    def variances(self) -> np.ndarray:
        lo = max(1, round(self.var_lo / self.var_step))  # never a zero variance
        hi = round(self.var_hi / self.var_step)
        return np.arange(lo, hi + 1) * self.var_step

    def correlations(self, step: Optional[float] = None, nonneg: bool = False) -> np.ndarray:
        step = step or self.corr_step
        n = math.floor(self.corr_max / step + 1e-9)  # stay inside (-1, 1)
        return np.arange(0 if nonneg else -n, n + 1) * step


@dataclass(frozen=True)
class GaussProblem:
    zeta: float
    delta: float
    rate: float
    m_lambda: float = 4.0
    grids: GaussGrids = field(default_factory=GaussGrids)

    def __post_init__(self) -> None:
        if not -1 < self.zeta < 1:
            raise ValueError("|zeta| must be < 1")
        if self.delta <= 0 or self.rate <= 0 or self.m_lambda <= 0:
            raise ValueError("delta, rate and m_lambda must be positive")


def g_g(k: np.ndarray, lam: tuple[float, float], prob: GaussProblem) -> float:
    """Exponent of one (covariance, estimator) pair."""
    sx2 = k[0, 0]
    rho_xz = k[0, 2] / math.sqrt(sx2 * k[2, 2])
    d = gauss_kl(k, kbar(sx2, rho_xz, prob.zeta))
    if mse(k, lam) >= prob.delta:
        return d
    i_xz = gauss_mi(k, ("x", "z"))
    if i_xz >= prob.rate:
        return d + max(prob.rate - i_xz + gauss_mi(k, ("y", "z")), 0.0)
    return INF


def _kl1(v: float) -> float:
    return 0.5 * (v - math.log(v) - 1)


def rate_breakpoint(rate: float) -> float:
    """Correlation at which I(X;Z) reaches the rate."""
    return math.sqrt(-math.expm1(-2 * rate))


# ---------------------------------------------------------------- the game

class _Stage:
    """Levels below the designer's rho_xz for fixed (sigma_X^2, rho_xz)."""

    CHUNK = 256

    def __init__(self, prob: GaussProblem, sx2: float, rxz: float):
        self.prob, self.sx2, self.r = prob, sx2, rxz
        self.sx = math.sqrt(sx2)
        kb = kbar(sx2, rxz, prob.zeta)
        self.kbinv = np.linalg.inv(kb)
        self.logdet_bar = float(np.linalg.slogdet(kb)[1])
        self.i_xz = -0.5 * math.log1p(-rxz * rxz)
        self.binning = self.i_xz >= prob.rate
        g = prob.grids.correlations(prob.grids.nature_step)
        a, b = np.meshgrid(g, g, indexing="ij")
        a, b = a.ravel(), b.ravel()
        detc = 1 - a * a - b * b - rxz * rxz + 2 * a * b * rxz
        keep = detc > PSD_TOL
        self.a, self.b, self.detc = a[keep], b[keep], detc[keep]
        self.lam_lattice = self._lattice()

    def _lattice(self) -> np.ndarray:
        m, h = self.prob.m_lambda, self.prob.grids.lam_step
        n = int(round(m / h))
        v = np.arange(-n, n + 1) * h
        al, be = np.meshgrid(v, v, indexing="ij")
        return np.column_stack([al.ravel(), be.ravel()])

    # nature's divergence on arbitrary (a, b)
    def _div(self, sy2: float, a, b, detc):
        B, sx, sy = self.kbinv, self.sx, math.sqrt(sy2)
        tr = (B[0, 0] * self.sx2 + B[1, 1] * sy2 + B[2, 2] + 2 * B[0, 2] * sx * self.r
              + 2 * B[0, 1] * sx * sy * a + 2 * B[1, 2] * sy * b)
        return 0.5 * (tr - np.log(self.sx2 * sy2 * detc) + self.logdet_bar - 3)

    def nominal(self, sy2: float) -> tuple[float, float]:
        """Nature's cheapest (rho_xy, rho_yz): damped Newton on the convex divergence."""
        B, sx, sy, r = self.kbinv, self.sx, math.sqrt(sy2), self.r
        x = np.zeros(2)

        def f(z):
            dc = 1 - z[0] ** 2 - z[1] ** 2 - r * r + 2 * z[0] * z[1] * r
            return INF if dc <= PSD_TOL else float(self._div(sy2, z[0], z[1], dc))

        def grad(z):
            dc = 1 - z[0] ** 2 - z[1] ** 2 - r * r + 2 * z[0] * z[1] * r
            return np.array([B[0, 1] * sx * sy + (z[0] - z[1] * r) / dc, B[1, 2] * sy + (z[1] - z[0] * r) / dc])

        fx = f(x)
        for _ in range(100):
            g = grad(x)
            h = 1e-6
            H = np.column_stack([(grad(x + h * e) - grad(x - h * e)) / (2 * h) for e in np.eye(2)])
            try:
                step = -np.linalg.solve(0.5 * (H + H.T), g)
            except np.linalg.LinAlgError:
                step = -g
            t = 1.0
            while t > 1e-12:
                xn = x + t * step
                fn = f(xn)
                if fn <= fx:
                    break
                t *= 0.5
            if t <= 1e-12 or abs(fx - fn) < 1e-15:
                if fn <= fx:
                    x, fx = xn, fn
                break
            x, fx = xn, fn
        return float(x[0]), float(x[1])

    def tables(self, sy2: float):
        """Nature's grid with divergence D and the binning-branch objective P."""
        a0, b0 = self.nominal(sy2)
        a = np.append(self.a, a0)
        b = np.append(self.b, b0)
        detc = 1 - a * a - b * b - self.r ** 2 + 2 * a * b * self.r
        d = np.maximum(self._div(sy2, a, b, detc), 0.0)
        if self.binning:
            i_yz = -0.5 * np.log1p(-b * b)
            p = d + np.maximum(self.prob.rate - self.i_xz + i_yz, 0.0)
        else:
            p = np.full_like(d, INF)
        return a, b, d, p

    def mmse_estimator(self, sy2: float, a: float, b: float) -> np.ndarray:
        k = cov3(self.sx2, sy2, a, self.r, b)
        lam = np.linalg.solve(k[1:, 1:], k[1:, 0])
        return np.clip(lam, -self.prob.m_lambda, self.prob.m_lambda)

    def lam_values(self, sy2: float, tab, lams: np.ndarray) -> np.ndarray:
        """inf over nature's grid for each estimator row of ``lams``."""
        a, b, d, p = tab
        sx, sy, r, delta = self.sx, math.sqrt(sy2), self.r, self.prob.delta
        out = np.empty(len(lams))
        for s in range(0, len(lams), self.CHUNK):
            al, be = lams[s:s + self.CHUNK, 0], lams[s:s + self.CHUNK, 1]
            m0 = self.sx2 + al * al * sy2 + be * be - 2 * be * sx * r
            m = m0[:, None] + (-2 * al * sx * sy)[:, None] * a[None, :] + (2 * al * be * sy)[:, None] * b[None, :]
            viol = m >= delta
            va = np.where(viol, d[None, :], INF).min(1)
            vb = np.where(viol, INF, p[None, :]).min(1)
            out[s:s + self.CHUNK] = np.minimum(va, vb)
        return out

    def sup_lambda(self, sy2: float, beta: float) -> tuple[float, np.ndarray]:
        """sup over estimators; stops as soon as the value reaches ``beta``."""
        tab = self.tables(sy2)
        g = self.prob.grids
        m = self.prob.m_lambda
        first = self.mmse_estimator(sy2, tab[0][-1], tab[1][-1])[None, :]
        best, arg = -INF, first[0]
        for batch in (first, self.lam_lattice):
            vals = self.lam_values(sy2, tab, batch)
            i = int(np.argmax(vals))
            if vals[i] > best:
                best, arg = float(vals[i]), batch[i]
            if best >= beta:
                return best, arg
        if not math.isfinite(best):
            return best, arg
        span = np.arange(-g.refine_span, g.refine_span + 1)
        for rnd in range(1, g.refine_rounds + 1):
            h = g.lam_step * g.refine_shrink ** rnd
            da, db = np.meshgrid(span * h, span * h, indexing="ij")
            cand = np.clip(arg[None, :] + np.column_stack([da.ravel(), db.ravel()]), -m, m)
            vals = self.lam_values(sy2, tab, cand)
            i = int(np.argmax(vals))
            if vals[i] > best:
                best, arg = float(vals[i]), cand[i]
            if best >= beta:
                break
        return best, arg

    def inf_sigma_y(self, alpha: float) -> tuple[float, dict]:
        """inf over sigma_Y^2; stops once the value drops to ``alpha``."""
        g = self.prob.grids
        lb_x = _kl1(self.sx2)
        cands = g.variances()
        lbs = np.array([max(lb_x, _kl1(v)) for v in cands])
        best, wit = INF, {}

        def consider(v: float) -> None:
            nonlocal best, wit
            if max(lb_x, _kl1(v)) >= best:
                return
            val, lam = self.sup_lambda(v, best)
            if val < best:
                best, wit = val, {"sigma_y2": v, "lambda": lam}

        for i in np.argsort(lbs, kind="stable"):
            if lbs[i] >= best or best <= alpha:
                break
            consider(float(cands[i]))
        if math.isfinite(best) and best > alpha:
            span = np.arange(-g.refine_span, g.refine_span + 1)
            for rnd in range(1, g.refine_rounds + 1):
                h = g.var_step * g.refine_shrink ** rnd
                centre = wit["sigma_y2"]
                for v in centre + span * h:
                    if v > 0 and v != centre:
                        consider(float(v))
                    if best <= alpha:
                        break
        return best, wit


def _designer_rhos(prob: GaussProblem) -> list[float]:
    out = []
    rb = rate_breakpoint(prob.rate)
    if rb < 1:
        out += [rb * (1 - 1e-9), rb]
    out += [float(r) for r in prob.grids.correlations(nonneg=True)]
    return out


def g3_profile(prob: GaussProblem, sigma_x2: float = 1.0) -> list[tuple[float, float]]:
    """(rho_xz, G3) over the non-negative designer grid; G3 is even in rho_xz."""
    out = []
    for r in prob.grids.correlations(nonneg=True):
        v, _ = _Stage(prob, sigma_x2, float(r)).inf_sigma_y(-INF)
        out.append((float(r), v))
    return out


def _sup_rho(prob: GaussProblem, sx2: float, beta: float) -> tuple[float, dict]:
    g = prob.grids
    best, wit = -INF, {}

    def consider(r: float) -> None:
        nonlocal best, wit
        if not 0 <= r < 1:
            return
        v, w = _Stage(prob, sx2, r).inf_sigma_y(best)
        if v > best:
            best, wit = v, dict(w, rho_xz=r)

    for r in _designer_rhos(prob):
        consider(r)
        if best >= beta:
            return best, wit
    if math.isfinite(best):
        span = np.arange(-g.refine_span, g.refine_span + 1)
        for rnd in range(1, g.refine_rounds + 1):
            h = g.corr_step * g.refine_shrink ** rnd
            centre = wit["rho_xz"]
            for r in centre + span * h:
                if r != centre:
                    consider(float(r))
                if best >= beta:
                    return best, wit
    return best, wit


def theta_gauss_lower(prob: GaussProblem) -> ExponentReport:
    g = prob.grids
    cands = g.variances()
    lbs = np.array([_kl1(v) for v in cands])
    best, wit = INF, {}

    def consider(v: float) -> None:
        nonlocal best, wit
        if _kl1(v) >= best:
            return
        val, w = _sup_rho(prob, v, best)
        if val < best:
            best, wit = val, dict(w, sigma_x2=v)

    for i in np.argsort(lbs, kind="stable"):
        if lbs[i] >= best:
            break
        consider(float(cands[i]))
    if math.isfinite(best):
        span = np.arange(-g.refine_span, g.refine_span + 1)
        for rnd in range(1, g.refine_rounds + 1):
            h = g.var_step * g.refine_shrink ** rnd
            centre = wit["sigma_x2"]
            for v in centre + span * h:
                if v > 0 and v != centre:
                    consider(float(v))
    meta = {k: getattr(g, k) for k in g.__dataclass_fields__}
    return ExponentReport(best, wit, meta, refined=g.refine_rounds > 0)


# ---------------------------------------------------------------- converse

def theta_gauss_upper(prob: GaussProblem) -> ExponentReport:
    """inf of D(Pi || Sigma) over covariances whose conditional RD at delta reaches the rate."""
    sig = sigma(prob.zeta)
    if prob.rate <= cond_rd(sig, prob.delta):
        raise ValueError("rate must exceed the conditional rate-distortion function of the source")
    g = prob.grids
    sinv = np.linalg.inv(sig)
    ld = float(np.linalg.slogdet(sig)[1])
    need = prob.delta * math.exp(2 * prob.rate)

    def evaluate(s1, s2, rho):
        c = rho * np.sqrt(s1 * s2)
        det = s1 * s2 * (1 - rho * rho)
        tr = sinv[0, 0] * s1 + sinv[1, 1] * s2 + 2 * sinv[0, 1] * c
        with np.errstate(divide="ignore", invalid="ignore"):
            d = 0.5 * (ld - np.log(det) + tr - 2)
        ok = (s1 > 0) & (s2 > 0) & (np.abs(rho) < 1) & (s1 * (1 - rho * rho) >= need)
        return np.where(ok, d, INF)

    v = g.variances()
    s1, s2, rho = np.meshgrid(v, v, g.correlations(), indexing="ij")
    vals = evaluate(s1, s2, rho)
    i = int(np.argmin(vals))
    best = float(vals.flat[i])
    arg = np.array([s1.flat[i], s2.flat[i], rho.flat[i]])
    if math.isfinite(best):
        span = np.arange(-g.refine_span, g.refine_span + 1)
        steps = np.array([g.var_step, g.var_step, g.corr_step])
        for rnd in range(1, g.refine_rounds + 1):
            h = steps * g.refine_shrink ** rnd
            a, b, c = np.meshgrid(arg[0] + span * h[0], arg[1] + span * h[1], arg[2] + span * h[2], indexing="ij")
            vals = evaluate(a, b, c)
            j = int(np.argmin(vals))
            if vals.flat[j] < best:
                best = float(vals.flat[j])
                arg = np.array([a.flat[j], b.flat[j], c.flat[j]])
    pi = np.array([[arg[0], arg[2] * math.sqrt(arg[0] * arg[1])], [arg[2] * math.sqrt(arg[0] * arg[1]), arg[1]]])
    meta = {k: getattr(g, k) for k in g.__dataclass_fields__}
    return ExponentReport(best, {"pi": pi}, meta, refined=g.refine_rounds > 0)
