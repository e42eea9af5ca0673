"""Monte Carlo implementations of the type-based binning codes.

Two codes are simulated at small blocklengths:

* the coded-side-information code: the helper quantizes Y through a per-type
  test channel and bins the codeword, the main encoder bins X within its type
  class, and the decoder picks the pair of minimum joint empirical entropy;
* the Wyner-Ziv code: the encoder quantizes X, bins the codeword, and the
  decoder picks the codeword of minimum conditional empirical entropy given Y
  and then applies a symbol-wise reproduction map.

All randomness flows from ``numpy.random.SeedSequence`` children keyed by a
master seed, a structure label and an index, so results do not depend on the
order in which codes or trials are evaluated.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .info import BudgetError, ExponentReport, JointDist, composition_counts

TYPE_BUDGET = 1_000_000
MAX_ALPHABET = 3
MAX_N = 16
TIE_TOL = 1e-9  # on sum c*log2(c); distinct count profiles differ by far more at n <= 16

Counts = tuple[int, ...]
ChannelPicker = Callable[[Counts, int], np.ndarray]


# ---------------------------------------------------------------- seeds

def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little")


def derive_seed(master_seed: int, label: str, *index: int) -> np.random.SeedSequence:
    """Child seed for (master, label, index...); independent of evaluation order."""
    return np.random.SeedSequence(entropy=int(master_seed) & (2**64 - 1),
                                  spawn_key=(_label_key(label),) + tuple(int(i) for i in index))


def derive_rng(master_seed: int, label: str, *index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, label, *index))


# ---------------------------------------------------------------- type classes

def multinomial(counts: Sequence[int]) -> int:
    out, tot = 1, 0
    for c in counts:
        tot += int(c)
        out *= math.comb(tot, int(c))
    return out


@lru_cache(maxsize=256)
def type_class(counts: Counts) -> np.ndarray:
    """All sequences with the given symbol counts, in lexicographic order (rows)."""
    size = multinomial(counts)
    if size > TYPE_BUDGET:
        raise BudgetError(f"type class {counts} has {size} members (budget {TYPE_BUDGET})")
    n = sum(counts)
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    blocks = []
    for a, c in enumerate(counts):
        if c == 0:
            continue
        rest = list(counts)
        rest[a] -= 1
        tail = type_class(tuple(rest))
        blocks.append(np.hstack([np.full((len(tail), 1), a, dtype=np.int8), tail]))
    return np.vstack(blocks)


def type_rank(seq: Sequence[int], counts: Counts) -> int:
    """Lexicographic position of ``seq`` inside its type class (matches ``type_class``)."""
    rem = list(counts)
    rank = 0
    for s in seq:
        for b in range(int(s)):
            if rem[b] > 0:
                rem[b] -= 1
                rank += multinomial(rem)
                rem[b] += 1
        rem[int(s)] -= 1
    return rank


def counts_of(seq: np.ndarray, size: int) -> Counts:
    return tuple(int(c) for c in np.bincount(seq, minlength=size))


def log2_type_size(counts: Counts) -> float:
    return math.log2(multinomial(counts))


def joint_counts(a: np.ndarray, b: np.ndarray, na: int, nb: int) -> np.ndarray:
    """Joint count table(s) of paired sequences; broadcasts over leading axes."""
    codes = a.astype(np.int64) * nb + b.astype(np.int64)
    lead, n = codes.shape[:-1], codes.shape[-1]
    k = na * nb
    rows = int(np.prod(lead)) if lead else 1
    flat = (codes.reshape(rows, n) + k * np.arange(rows)[:, None]).ravel()
    return np.bincount(flat, minlength=rows * k).reshape(lead + (k,))


def _sum_clogc(counts: np.ndarray) -> np.ndarray:
    c = counts.astype(float)
    return np.sum(np.where(c > 0, c * np.log2(np.where(c > 0, c, 1.0)), 0.0), axis=-1)


def empirical_entropy(counts: np.ndarray, n: int) -> np.ndarray:
    """H of the type with the given counts (last axis), bits."""
    return math.log2(n) - _sum_clogc(counts) / n


def codebook_size(n: int, mi_bits: float, a_size: int, b_size: int) -> int:
    """ceil(2^{nI} + (|A||B| + 3) log2(n+1)): the midpoint of the codebook-size bracket."""
    return math.ceil(2.0 ** (n * mi_bits) + (a_size * b_size + 3) * math.log2(n + 1))


def codebook_bracket(n: int, mi_bits: float, a_size: int, b_size: int) -> tuple[float, float]:
    base = 2.0 ** (n * mi_bits)
    lg = math.log2(n + 1)
    return base + (a_size * b_size + 2) * lg, base + (a_size * b_size + 4) * lg


def _cond_mi_bits(ncounts: np.ndarray) -> float:
    """I(A;B) in bits of the joint type with count table ``ncounts``."""
    n = ncounts.sum()
    p = ncounts / n
    pa, pb = p.sum(1), p.sum(0)
    m = p > 0
    return float(np.sum(p[m] * np.log2(p[m] / np.outer(pa, pb)[m])))


# ---------------------------------------------------------------- channel pickers

def round_conditional(row_counts: Counts, channel: np.ndarray) -> np.ndarray:
    """Nearest conditional type: row a gets N(a) * channel[a] rounded by largest remainder."""
    channel = np.asarray(channel, dtype=float)
    out = np.zeros(channel.shape, dtype=np.int64)
    for a, na in enumerate(row_counts):
        raw = na * channel[a]
        base = np.floor(raw).astype(np.int64)
        short = na - int(base.sum())
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:short]] += 1
        out[a] = base
    return out


def fixed_channel_picker(channel: np.ndarray) -> ChannelPicker:
    ch = np.asarray(channel, dtype=float)

    def pick(row_counts: Counts, out_size: int) -> np.ndarray:
        if ch.shape != (len(row_counts), out_size):
            raise ValueError("channel shape does not match the alphabets")
        return round_conditional(row_counts, ch)

    return pick


def uniform_channel_picker(row_counts: Counts, out_size: int) -> np.ndarray:
    return round_conditional(row_counts, np.full((len(row_counts), out_size), 1.0 / out_size))


def report_channel_picker(report: ExponentReport, key: str) -> ChannelPicker:
    """Use the test channel stored in a theory report; uniform when it has none."""
    ch = report.witnesses.get(key) if report.witnesses else None
    if ch is None:
        return uniform_channel_picker
    return fixed_channel_picker(np.asarray(ch, dtype=float))


# ---------------------------------------------------------------- shared pieces

@dataclass(frozen=True)
class SimSource:
    p_xy: JointDist
    n: int
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.p_xy.probs.ndim != 2:
            raise ValueError("p_xy must be a two-variable joint")

    @property
    def sizes(self) -> tuple[int, int]:
        return self.p_xy.probs.shape  # type: ignore[return-value]

    def sample(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.sizes
        flat = rng.choice(nx * ny, size=self.n, p=self.p_xy.probs.ravel())
        return (flat // ny).astype(np.int8), (flat % ny).astype(np.int8)


def _check_sizes(src: SimSource, extra: int) -> None:
    if max(max(src.sizes), extra) > MAX_ALPHABET:
        raise BudgetError(f"alphabets larger than {MAX_ALPHABET} are outside the simulation budget")
    if src.n > MAX_N:
        raise BudgetError(f"n > {MAX_N} is outside the simulation budget")


def _all_types(size: int, n: int) -> list[Counts]:
    return [tuple(int(v) for v in c) for c in composition_counts(size, n)]


@dataclass
class Codebook:
    """Codewords for one conditioning type; ``words`` may repeat (drawn with replacement)."""

    cond: np.ndarray  # conditional count table N(a, b)
    mi_bits: float
    words: np.ndarray  # (m, n)
    distinct: np.ndarray  # (d, n) unique rows
    word_to_distinct: np.ndarray  # (m,)
    index: np.ndarray  # (d,) bin index of each distinct codeword
    injective: bool
    onehot: Optional[np.ndarray] = field(default=None, repr=False)
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.words)


def _build_codebook(n: int, row_counts: Counts, cond: np.ndarray, a_size: int, b_size: int,
                    n_bins: int, rng: np.random.Generator, injective_rule: Callable[[int, int], bool]) -> Codebook:
    mi = _cond_mi_bits(cond)
    m = codebook_size(n, mi, a_size, b_size)
    if m > TYPE_BUDGET:
        raise BudgetError(f"codebook of {m} words exceeds the budget")
    base = np.repeat(np.arange(b_size, dtype=np.int8), cond.sum(0))
    words = np.stack([rng.permutation(base) for _ in range(m)])
    distinct, inv = np.unique(words, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    d = len(distinct)
    inj = injective_rule(m, d)
    if inj:
        index = np.arange(d, dtype=np.int64)
    else:
        index = rng.integers(0, n_bins, size=d)
    return Codebook(cond, mi, words, distinct, inv, index, inj)


def _matches(book: Codebook, seq: np.ndarray, a_size: int, b_size: int) -> np.ndarray:
    """Indices of codewords whose joint type with ``seq`` is the target conditional type."""
    key = seq.tobytes()
    hit = book.cache.get(key)
    if hit is None:
        if book.onehot is None:
            m, n = book.words.shape
            oh = (book.words[:, None, :] == np.arange(b_size, dtype=np.int8)[None, :, None])
            book.onehot = oh.reshape(m * b_size, n).astype(np.float64)
        ys = (seq[:, None] == np.arange(a_size)[None, :]).astype(np.float64)
        counts = (book.onehot @ ys).reshape(len(book.words), b_size, a_size)
        hit = np.flatnonzero(np.all(np.rint(counts) == book.cond.T[None], axis=(1, 2)))
        book.cache[key] = hit
    return hit


def _quantize(book: Codebook, seq: np.ndarray, a_size: int, b_size: int, rng: np.random.Generator) -> int:
    """Index into ``book.words`` of the codeword chosen for ``seq``.

    Uniform over codewords whose joint type with ``seq`` is the target conditional
    type (repeated codewords count with multiplicity); uniform over the whole
    codebook when none qualifies.
    """
    good = _matches(book, seq, a_size, b_size)
    if len(good):
        return int(good[rng.integers(len(good))])
    return int(rng.integers(len(book.words)))


def _argmin_random(values: np.ndarray, rng: np.random.Generator) -> int:
    """Uniform choice among entries within TIE_TOL of the minimum."""
    flat = values.ravel()
    best = flat.min()
    ties = np.flatnonzero(flat <= best + TIE_TOL)
    return int(ties[rng.integers(len(ties))]) if len(ties) > 1 else int(ties[0])


# ---------------------------------------------------------------- coded side information

@dataclass
class SccsiCode:
    src: SimSource
    r1: float
    r2: float
    s_size: int
    m1: int
    m2: int
    codebooks: dict  # Y-type counts -> Codebook
    _u1: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.src.n

    def x_injective(self, x_type: Counts) -> bool:
        return log2_type_size(x_type) <= self.n * self.r1 + 1e-12

    def u1(self, x_type: Counts) -> np.ndarray:
        """Bin index of every member of the X type class (built lazily, seeded per type)."""
        if x_type not in self._u1:
            size = multinomial(x_type)
            if size > TYPE_BUDGET:
                raise BudgetError(f"type class {x_type} exceeds the budget")
            if self.x_injective(x_type):
                self._u1[x_type] = np.arange(size, dtype=np.int64)
            else:
                tidx = _all_types(len(x_type), self.n).index(x_type)
                rng = derive_rng(self.src.master_seed, "sccsi/U1", self.n, tidx)
                self._u1[x_type] = rng.integers(0, self.m1, size=size)
        return self._u1[x_type]

    def bracket_ok(self) -> bool:
        ny = self.src.sizes[1]
        for book in self.codebooks.values():
            lo, hi = codebook_bracket(self.n, book.mi_bits, ny, self.s_size)
            if not lo <= book.size <= hi:
                return False
        return True

    def quantizer_ok(self, y: np.ndarray, word: int) -> Optional[bool]:
        """Whether the chosen codeword has the target joint type; None when no codeword qualifies."""
        ny = self.src.sizes[1]
        good = _matches(self.codebooks[counts_of(y, ny)], np.asarray(y, dtype=np.int8), ny, self.s_size)
        return bool(word in set(good.tolist())) if len(good) else None


def build_sccsi_code(src: SimSource, r1: float, r2: float, channel_picker: ChannelPicker = uniform_channel_picker,
                     s_size: int = 2) -> SccsiCode:
    """Codebooks for every Y type plus bin maps; X bin maps are materialized on first use."""
    nx, ny = src.sizes
    _check_sizes(src, s_size)
    if r1 < 0 or r2 < 0:
        raise ValueError("rates must be non-negative")
    n = src.n
    for t in _all_types(nx, n):
        if multinomial(t) > TYPE_BUDGET:
            raise BudgetError(f"type class {t} exceeds the budget")
    m1 = math.ceil(2.0 ** (n * r1) - 1e-9)
    m2 = math.ceil(2.0 ** (n * r2) - 1e-9)
    books = {}
    for ti, ty in enumerate(_all_types(ny, n)):
        cond = np.asarray(channel_picker(ty, s_size), dtype=np.int64)
        if cond.shape != (ny, s_size) or tuple(cond.sum(1)) != ty:
            raise ValueError("channel picker returned a table that is not a conditional type")
        rng = derive_rng(src.master_seed, "sccsi/B", n, ti)
        books[ty] = _build_codebook(n, ty, cond, ny, s_size, m2, rng, lambda m, d: d <= m2)
    return SccsiCode(src, r1, r2, s_size, m1, m2, books)


@dataclass(frozen=True)
class SccsiMessage:
    x_type: Counts
    i: int
    y_type: Counts
    j: int
    s_word: int


def sccsi_encode(code: SccsiCode, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> SccsiMessage:
    nx, ny = code.src.sizes
    tx, ty = counts_of(x, nx), counts_of(y, ny)
    i = int(code.u1(tx)[type_rank(x, tx)])
    book = code.codebooks[ty]
    w = _quantize(book, y, ny, code.s_size, rng)
    j = int(book.index[book.word_to_distinct[w]])
    return SccsiMessage(tx, i, ty, j, w)


def sccsi_decode(code: SccsiCode, msg: SccsiMessage, rng: np.random.Generator) -> np.ndarray:
    nx = code.src.sizes[0]
    members = type_class(msg.x_type)
    xs = members[np.flatnonzero(code.u1(msg.x_type) == msg.i)]
    book = code.codebooks[msg.y_type]
    ss = book.distinct[np.flatnonzero(book.index == msg.j)]
    if len(xs) == 1:
        return xs[0]
    jc = joint_counts(xs[:, None, :], ss[None, :, :], nx, code.s_size)
    h = empirical_entropy(jc, code.n)
    k = _argmin_random(h, rng)
    return xs[k // len(ss)]


def sccsi_round(code: SccsiCode, x, y, rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, bool]:
    """One encode/decode pass; returns (xhat, error flag)."""
    x = np.asarray(x, dtype=np.int8)
    y = np.asarray(y, dtype=np.int8)
    if len(x) != code.n or len(y) != code.n:
        raise ValueError("sequences must have length n")
    if rng is None:
        rng = derive_rng(code.src.master_seed, "sccsi/round", 0)
    msg = sccsi_encode(code, x, y, rng)
    xhat = sccsi_decode(code, msg, rng)
    return xhat, bool(np.any(xhat != x))


# ---------------------------------------------------------------- trial statistics

def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    den = 1 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


@dataclass(frozen=True)
class TrialRow:
    n: int
    trials: int
    errors: int

    def __post_init__(self) -> None:
        if not 0 <= self.errors <= self.trials:
            raise ValueError("errors must lie in [0, trials]")

    @property
    def p_hat(self) -> float:
        return self.errors / self.trials

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.trials)

    def csv(self) -> str:
        lo, hi = self.ci
        return f"{self.n},{self.trials},{self.errors},{self.p_hat:.10g},{lo:.10g},{hi:.10g}"


@dataclass
class TrialStats:
    rows: list[TrialRow] = field(default_factory=list)

    @property
    def trials(self) -> int:
        return sum(r.trials for r in self.rows)

    @property
    def errors(self) -> int:
        return sum(r.errors for r in self.rows)

    def add(self, row: TrialRow) -> None:
        self.rows.append(row)

    def half_widths(self) -> list[float]:
        return [(r.ci[1] - r.ci[0]) / 2 for r in self.rows]

    def csv(self) -> str:
        return "\n".join(["n,trials,errors,p_hat,ci_lo,ci_hi"] + [r.csv() for r in self.rows]) + "\n"

    def nonincreasing_up_to_ci(self) -> bool:
        """Each P-hat's interval reaches down to the previous (smaller n) interval or below it."""
        rows = sorted(self.rows, key=lambda r: r.n)
        return all(b.ci[0] <= a.ci[1] for a, b in zip(rows, rows[1:]))


def run_sccsi_trials(src: SimSource, code: SccsiCode, trials: int) -> TrialStats:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    errors = 0
    for t in range(trials):
        rng = derive_rng(src.master_seed, "sccsi/trial", src.n, t)
        x, y = src.sample(rng)
        errors += sccsi_round(code, x, y, rng)[1]
    return TrialStats([TrialRow(src.n, trials, errors)])


# ---------------------------------------------------------------- Wyner-Ziv

@dataclass
class WzCode:
    src: SimSource
    rate: float
    delta: float
    dist: np.ndarray  # d[x, xhat]
    z_size: int
    m: int
    codebooks: dict  # X-type counts -> Codebook
    f_picker: Callable[[Counts, Counts], np.ndarray]

    @property
    def n(self) -> int:
        return self.src.n

    def f(self, x_type: Counts, y_type: Counts) -> np.ndarray:
        return np.asarray(self.f_picker(x_type, y_type), dtype=np.int64)

    def bracket_ok(self) -> bool:
        nx = self.src.sizes[0]
        for book in self.codebooks.values():
            lo, hi = codebook_bracket(self.n, book.mi_bits, nx, self.z_size)
            if not lo <= book.size <= hi:
                return False
        return True


def constant_f_picker(f: np.ndarray) -> Callable[[Counts, Counts], np.ndarray]:
    table = np.asarray(f, dtype=np.int64)
    return lambda tx, ty: table


def build_wz_code(src: SimSource, rate: float, delta: float, dist: np.ndarray,
                  channel_picker: ChannelPicker = uniform_channel_picker,
                  f_picker: Optional[Callable[[Counts, Counts], np.ndarray]] = None,
                  z_size: Optional[int] = None) -> WzCode:
    """Per-X-type codebooks; the codeword index is one-to-one when log2|B| < nR."""
    nx, ny = src.sizes
    dist = np.asarray(dist, dtype=float)
    nz = nx if z_size is None else int(z_size)
    _check_sizes(src, max(nz, dist.shape[1]))
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if f_picker is None:
        # reproduce z itself when the alphabets allow it
        if dist.shape[1] < nz:
            raise ValueError("an f_picker is required when |Z| exceeds the reproduction alphabet")
        f_picker = constant_f_picker(np.tile(np.arange(nz), (ny, 1)))
    n = src.n
    m = math.ceil(2.0 ** (n * rate) - 1e-9)
    books = {}
    for ti, tx in enumerate(_all_types(nx, n)):
        cond = np.asarray(channel_picker(tx, nz), dtype=np.int64)
        if cond.shape != (nx, nz) or tuple(cond.sum(1)) != tx:
            raise ValueError("channel picker returned a table that is not a conditional type")
        rng = derive_rng(src.master_seed, "wz/B", n, ti)
        books[tx] = _build_codebook(n, tx, cond, nx, nz, m, rng,
                                    lambda size, d: math.log2(size) < n * rate)
    return WzCode(src, rate, delta, dist, nz, m, books, f_picker)


def wz_round(code: WzCode, x, y, rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, float, bool]:
    """Encode x, decode with y; returns (xhat, per-letter distortion, violation flag)."""
    x = np.asarray(x, dtype=np.int8)
    y = np.asarray(y, dtype=np.int8)
    if len(x) != code.n or len(y) != code.n:
        raise ValueError("sequences must have length n")
    if rng is None:
        rng = derive_rng(code.src.master_seed, "wz/round", 0)
    nx, ny = code.src.sizes
    tx, ty = counts_of(x, nx), counts_of(y, ny)
    book = code.codebooks[tx]
    w = _quantize(book, x, nx, code.z_size, rng)
    i = book.index[book.word_to_distinct[w]]
    cands = book.distinct[np.flatnonzero(book.index == i)]
    if len(cands) == 1:
        zhat = cands[0]
    else:
        # H(z|y) = H(y,z) - H(y); H(y) is common to all candidates
        jc = joint_counts(y[None, :], cands, ny, code.z_size)
        zhat = cands[_argmin_random(empirical_entropy(jc, code.n), rng)]
    f = code.f(tx, ty)
    xhat = f[y, zhat]
    d = float(np.mean(code.dist[x, xhat]))
    return xhat, d, d > code.delta + 1e-12


def run_wz_trials(src: SimSource, code: WzCode, trials: int) -> TrialStats:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    errors = 0
    for t in range(trials):
        rng = derive_rng(src.master_seed, "wz/trial", src.n, t)
        x, y = src.sample(rng)
        errors += wz_round(code, x, y, rng)[2]
    return TrialStats([TrialRow(src.n, trials, errors)])


# ---------------------------------------------------------------- exponent estimate

@dataclass(frozen=True)
class EmpiricalExponent:
    """Least-squares slope of -ln P-hat against n (nats per symbol).

    Finite-n polynomial factors bias the slope downward, so it is a sanity
    check rather than an estimate of the asymptotic exponent.  When no errors
    were seen at all, ``slope`` is the resolvable floor and ``is_floor`` is set.
    """

    slope: float
    intercept: float
    used_n: tuple[int, ...]
    is_floor: bool = False


def empirical_exponent(stats: TrialStats | Sequence[TrialRow]) -> EmpiricalExponent:
    rows = sorted(stats.rows if isinstance(stats, TrialStats) else stats, key=lambda r: r.n)
    if len(rows) < 2:
        raise ValueError("need at least two blocklengths")
    if all(r.errors == 0 for r in rows):
        # P_e < 3/trials with ~95% confidence (rule of three)
        top = rows[-1]
        return EmpiricalExponent(-math.log(3.0 / top.trials) / top.n, 0.0, tuple(r.n for r in rows), True)
    nz = [r for r in rows if r.errors > 0]
    if len(nz) >= 2:
        pts = [(r.n, r.p_hat) for r in nz]
    else:
        # continuity correction for zero counts
        pts = [(r.n, max(r.errors, 0.5) / r.trials) for r in rows]
    ns = np.array([p[0] for p in pts], dtype=float)
    ys = -np.log(np.array([p[1] for p in pts]))
    slope, intercept = np.polyfit(ns, ys, 1)
    return EmpiricalExponent(float(slope), float(intercept), tuple(int(v) for v in ns))


# ---------------------------------------------------------------- cardinality oracles

def lemma3_set_size(x: np.ndarray, y: np.ndarray, nx: int, ny: int) -> tuple[int, float]:
    """(|{(x~, y~): H(x~, y~) <= H(x, y)}|, (n+1)^{|X||Y|} 2^{nH(x,y)})."""
    n = len(x)
    h = float(empirical_entropy(joint_counts(x, y, nx, ny), n))
    size = 0
    for c in composition_counts(nx * ny, n):
        if float(empirical_entropy(c, n)) <= h + TIE_TOL:
            size += multinomial(c)
    return size, (n + 1) ** (nx * ny) * 2.0 ** (n * h)


def lemma4_set_size(x: np.ndarray, y: np.ndarray, nx: int, ny: int) -> tuple[int, float]:
    """(|{x~: H(x~|y) <= H(x|y)}|, (n+1)^{|X||Y|} 2^{nH(x|y)})."""
    n = len(x)
    jc = joint_counts(y, x, ny, nx).reshape(ny, nx)
    h_cond = float(empirical_entropy(jc.ravel(), n) - empirical_entropy(jc.sum(1), n))
    rows = [composition_counts(nx, int(ny_c)) for ny_c in jc.sum(1)]
    # per y-row: (sum c log c, multinomial) of every candidate row; H(x|y) = (sum_y N_y log N_y - sum c log c)/n
    ny_counts = jc.sum(1)
    base = float(_sum_clogc(ny_counts))
    per_row = [[(float(_sum_clogc(r)), multinomial(r)) for r in rs] for rs in rows]
    size = 0

    def walk(k: int, acc: float, mult: int) -> None:
        nonlocal size
        if k == ny:
            if (base - acc) / n <= h_cond + TIE_TOL:
                size += mult
            return
        for s, mlt in per_row[k]:
            walk(k + 1, acc + s, mult * mlt)

    walk(0, 0.0, 1)
    return size, (n + 1) ** (nx * ny) * 2.0 ** (n * h_cond)
