"""Exact polynomial calculus on Nbar for B_t and its horizontal derivatives.

Polynomials live in the real coordinates of Nbar (``x_0 .. x_{nx-1}`` then
``z_0 .. z_{nz-1}``, in the layout of :meth:`HeisenbergPoint.to_real`) plus a
formal parameter ``u`` standing for ``e^{-2t}``.  Coefficients are
:class:`fractions.Fraction`, so every identity here is checked exactly.

Word convention: the word ``(j1, ..., js)`` is the operator ``E_{j1} ... E_{js}``,
so ``E_{js}`` acts first.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import heisenberg as hb
from .algebra import FieldTag, field_tag
from .boundary import CocycleContext

MAX_ORDER = 6

Word = tuple[int, ...]


# ---------------------------------------------------------------------------
# polynomial ring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ring:
    """Variables ``x_*``, ``z_*`` and ``u`` for one (field, n) pair."""
    tag: FieldTag
    n: int
    nx: int = field(init=False)
    nz: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "tag", field_tag(self.tag))
        object.__setattr__(self, "nx", hb.n_horizontal(self.tag, self.n))
        object.__setattr__(self, "nz", self.tag.im_dim)

    @property
    def nvars(self) -> int:
        return self.nx + self.nz + 1

    @property
    def u_index(self) -> int:
        return self.nx + self.nz

    def x(self, k: int) -> int:
        return k

    def z(self, c: int) -> int:
        return self.nx + c

    @property
    def names(self) -> tuple[str, ...]:
        return (tuple(f"x{k}" for k in range(self.nx))
                + tuple(f"z{c}" for c in range(self.nz)) + ("u",))

    @property
    def weights(self) -> tuple[int, ...]:
        """Homogeneous weights: 1 for x, 2 for z, 0 for u."""
        return (1,) * self.nx + (2,) * self.nz + (0,)


def ring(ctx: CocycleContext | Ring) -> Ring:
    if isinstance(ctx, Ring):
        return ctx
    return Ring(ctx.tag, ctx.n)


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        raise TypeError("float coefficients are not allowed in the exact layer")
    return Fraction(c)


class MultiPoly:
    """Sparse polynomial: exponent tuple -> nonzero Fraction."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring_: Ring, terms: Mapping[tuple, object] | None = None):
        self.ring = ring_
        clean = {}
        for e, c in (terms or {}).items():
            if len(e) != ring_.nvars:
                raise ValueError(f"exponent {e} has wrong length for {ring_.names}")
            c = _frac(c)
            if c:
                clean[tuple(int(k) for k in e)] = c
        self.terms = clean

    # constructors ---------------------------------------------------------
    @classmethod
    def const(cls, ring_: Ring, c) -> "MultiPoly":
        return cls(ring_, {(0,) * ring_.nvars: c})

    @classmethod
    def var(cls, ring_: Ring, index: int) -> "MultiPoly":
        e = [0] * ring_.nvars
        e[index] = 1
        return cls(ring_, {tuple(e): 1})

    # basic protocol -------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.ring == other.ring and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == MultiPoly.const(self.ring, other)
        return NotImplemented

    __hash__ = None

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"MultiPoly({self.ring.tag}, n={self.ring.n}, {len(self.terms)} terms)"

    def _lift(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.ring != self.ring:
                raise ValueError("polynomials from different rings")
            return other
        return MultiPoly.const(self.ring, other)

    # ring operations ------------------------------------------------------
    def __add__(self, other) -> "MultiPoly":
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(self.ring, out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.ring, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "MultiPoly":
        return self._lift(other) - self

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            c = _frac(other)
            return MultiPoly(self.ring, {e: c * v for e, v in self.terms.items()})
        other = self._lift(other)
        out: dict[tuple, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly(self.ring, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "MultiPoly":
        return self * (1 / _frac(other))

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = MultiPoly.const(self.ring, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # calculus -------------------------------------------------------------
    def diff(self, index: int) -> "MultiPoly":
        out = {}
        for e, c in self.terms.items():
            k = e[index]
            if k:
                e2 = list(e)
                e2[index] = k - 1
                out[tuple(e2)] = c * k
        return MultiPoly(self.ring, out)

    # evaluation -----------------------------------------------------------
    def evaluate(self, values: Sequence) -> Fraction:
        """Exact value at a point given as ``nvars`` rationals (coordinates then u)."""
        if len(values) != self.ring.nvars:
            raise ValueError(f"expected {self.ring.nvars} values")
        vals = [_frac(v) for v in values]
        total = Fraction(0)
        for e, c in self.terms.items():
            m = c
            for v, k in zip(vals, e):
                if k:
                    m *= v ** k
            total += m
        return total

    def evaluate_batch(self, coords, u) -> np.ndarray:
        """Float64 values at ``coords`` of shape ``(N, nx+nz)`` and ``u`` of shape ``(N,)``."""
        pts = np.column_stack([np.asarray(coords, dtype=float),
                               np.broadcast_to(np.asarray(u, dtype=float),
                                               np.shape(coords)[:1])])
        return _PowerCache(pts).evaluate(self)

    # grading --------------------------------------------------------------
    def u_parts(self) -> dict[int, "MultiPoly"]:
        """Coefficients of ``u^k`` as u-free polynomials."""
        ui = self.ring.u_index
        parts: dict[int, dict] = {}
        for e, c in self.terms.items():
            e2 = list(e)
            k = e2[ui]
            e2[ui] = 0
            parts.setdefault(k, {})[tuple(e2)] = c
        return {k: MultiPoly(self.ring, t) for k, t in sorted(parts.items())}

    def weighted_parts(self) -> dict[int, "MultiPoly"]:
        """Split by homogeneous degree (x weight 1, z weight 2, u weight 0)."""
        w = self.ring.weights
        parts: dict[int, dict] = {}
        for e, c in self.terms.items():
            deg = sum(a * b for a, b in zip(e, w))
            parts.setdefault(deg, {})[e] = c
        return {k: MultiPoly(self.ring, t) for k, t in sorted(parts.items())}

    def is_homogeneous(self, degree: int) -> bool:
        parts = self.weighted_parts()
        return not parts or set(parts) == {degree}

    def specialize_u(self, value) -> "MultiPoly":
        value = _frac(value)
        ui = self.ring.u_index
        out: dict[tuple, Fraction] = {}
        for e, c in self.terms.items():
            e2 = list(e)
            k = e2[ui]
            e2[ui] = 0
            key = tuple(e2)
            out[key] = out.get(key, 0) + c * value ** k
        return MultiPoly(self.ring, out)

    # text form ------------------------------------------------------------
    def to_text(self) -> str:
        """Canonical form: a header naming the ring, then sorted ``exps: coef`` lines."""
        lines = [f"ring {self.ring.tag} {self.ring.n}"]
        for e in sorted(self.terms):
            lines.append(" ".join(map(str, e)) + ": " + str(self.terms[e]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MultiPoly":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        head = lines[0].split()
        if len(head) != 3 or head[0] != "ring":
            raise ValueError(f"bad header line: {lines[0]!r}")
        r = Ring(field_tag(head[1]), int(head[2]))
        terms = {}
        for ln in lines[1:]:
            exps, coef = ln.split(":")
            terms[tuple(int(k) for k in exps.split())] = Fraction(coef.strip())
        return cls(r, terms)


class _PowerCache:
    """Float evaluation of several polynomials at one set of points."""

    def __init__(self, pts: np.ndarray):
        self.pts = pts
        self._pow: dict[tuple[int, int], np.ndarray] = {}

    def power(self, v: int, k: int) -> np.ndarray:
        key = (v, k)
        if key not in self._pow:
            self._pow[key] = self.pts[:, v] ** k
        return self._pow[key]

    def evaluate(self, p: MultiPoly) -> np.ndarray:
        out = np.zeros(self.pts.shape[0])
        for e, c in p.terms.items():
            m = np.full(self.pts.shape[0], float(c))
            for v, k in enumerate(e):
                if k:
                    m = m * self.power(v, k)
            out += m
        return out


# ---------------------------------------------------------------------------
# B, B_t and horizontal fields
# ---------------------------------------------------------------------------

def variables(r: Ring) -> tuple[list[MultiPoly], list[MultiPoly], MultiPoly]:
    xs = [MultiPoly.var(r, r.x(k)) for k in range(r.nx)]
    zs = [MultiPoly.var(r, r.z(c)) for c in range(r.nz)]
    return xs, zs, MultiPoly.var(r, r.u_index)


def norm_x2_poly(ctx) -> MultiPoly:
    r = ring(ctx)
    xs, _, _ = variables(r)
    return sum((x * x for x in xs), MultiPoly.const(r, 0))


def b_t_poly(ctx) -> MultiPoly:
    """``B_t = (u + |X|^2/4)^2 + |Z|^2`` with ``u = e^{-2t}``."""
    r = ring(ctx)
    _, zs, u = variables(r)
    inner = u + norm_x2_poly(r) / 4
    return inner * inner + sum((z * z for z in zs), MultiPoly.const(r, 0))


def b_poly(ctx) -> MultiPoly:
    """``B = B_t`` at ``t = 0``."""
    return b_t_poly(ctx).specialize_u(1)


def apply_field(p: MultiPoly, j: int) -> MultiPoly:
    """``E_j p`` with ``E_j = d/dx_j + (1/2) sum_c (sum_a A[j,c,a] x_a) d/dz_c``."""
    r = p.ring
    if not 0 <= j < r.nx:
        raise IndexError(f"horizontal direction {j} out of range 0..{r.nx - 1}")
    A = hb.field_coefficients(r.tag, r.n)
    out: dict[tuple, Fraction] = {}

    def acc(e, c):
        out[e] = out.get(e, 0) + c

    xj = r.x(j)
    for e, c in p.terms.items():
        if e[xj]:
            e2 = list(e)
            e2[xj] -= 1
            acc(tuple(e2), c * e[xj])
        for cz in range(r.nz):
            zi = r.z(cz)
            k = e[zi]
            if not k:
                continue
            for a in range(r.nx):
                coef = A[j, cz, a]
                if coef:
                    e2 = list(e)
                    e2[zi] -= 1
                    e2[r.x(a)] += 1
                    acc(tuple(e2), c * k * Fraction(int(coef), 2))
    return MultiPoly(r, out)


def iterated_derivative(p: MultiPoly, word: Iterable[int]) -> MultiPoly:
    """``E_{j1} ... E_{js} p``: the last letter acts first."""
    for j in reversed(tuple(word)):
        p = apply_field(p, j)
    return p


def commutator(p: MultiPoly, j: int, k: int) -> MultiPoly:
    """``[E_j, E_k] p``."""
    return iterated_derivative(p, (j, k)) - iterated_derivative(p, (k, j))


def words(r: Ring | CocycleContext, length: int) -> Iterator[Word]:
    r = ring(r)
    if not 0 <= length <= MAX_ORDER:
        raise ValueError(f"word length {length} outside 0..{MAX_ORDER}")
    return itertools.product(range(r.nx), repeat=length)


def word_count(r: Ring | CocycleContext, length: int) -> int:
    return ring(r).nx ** length


class DerivativeTable:
    """Memoised ``D^w p`` for words ``w``, built by peeling the first letter."""

    def __init__(self, p: MultiPoly):
        self.base = p
        self._cache: dict[Word, MultiPoly] = {(): p}

    @property
    def ring(self) -> Ring:
        return self.base.ring

    def __getitem__(self, word: Sequence[int]) -> MultiPoly:
        word = tuple(word)
        hit = self._cache.get(word)
        if hit is None:
            hit = apply_field(self[word[1:]], word[0])
            self._cache[word] = hit
        return hit


@dataclass(frozen=True)
class VanishingReport:
    tag: FieldTag
    n: int
    order: int
    words_checked: int
    nonzero_words: tuple[Word, ...]
    exhaustive: bool

    @property
    def passed(self) -> bool:
        return not self.nonzero_words


def verify_vanishing(ctx, order: int = 5, max_words: int = 4096, seed: int = 0) -> VanishingReport:
    """Check ``D^w B_t = 0`` for words of length ``order``.

    All words are enumerated when there are at most ``max_words`` of them;
    otherwise ``max_words`` words are drawn at random from ``seed``.
    """
    ctx = ctx if isinstance(ctx, (CocycleContext, Ring)) else CocycleContext.of(*ctx)
    r = ring(ctx)
    table = DerivativeTable(b_t_poly(r))
    total = word_count(r, order)
    if total <= max_words:
        ws = list(words(r, order))
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        ws = [tuple(int(j) for j in rng.integers(0, r.nx, order)) for _ in range(max_words)]
        exhaustive = False
    bad = tuple(w for w in ws if not table[w].is_zero())
    return VanishingReport(r.tag, r.n, order, len(ws), bad, exhaustive)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleSpec:
    """Random ``(p, t, b)`` with gauge radius log-uniform in ``[gauge_min, gauge_max]``."""
    count: int = 100_000
    gauge_max: float = 4.0
    gauge_min: float = 4e-3
    t_range: tuple[float, float] = (0.0, 10.0)
    b_range: tuple[float, float] = (-100.0, 100.0)
    seed: int = 0

    def doubled(self) -> "SampleSpec":
        return SampleSpec(2 * self.count, self.gauge_max, self.gauge_min,
                          self.t_range, self.b_range, self.seed + 1)


@dataclass(frozen=True)
class Samples:
    coords: np.ndarray   # (N, nx + nz)
    t: np.ndarray
    b: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return np.exp(-2.0 * self.t)


def draw_samples(ctx, spec: SampleSpec) -> Samples:
    if spec.count <= 0:
        raise ValueError("empty sample set")
    r = ring(ctx)
    rng = np.random.default_rng(spec.seed)
    N = spec.count
    X = rng.standard_normal((N, r.n - 1, r.tag.dim))
    Z = np.zeros((N, r.tag.dim))
    Z[:, 1:] = rng.standard_normal((N, r.nz))
    p = hb.HeisenbergPoint(X, Z)
    target = np.exp(rng.uniform(np.log(spec.gauge_min), np.log(spec.gauge_max), N))
    # per-sample dilation onto the target gauge sphere
    scale = target / hb.gauge(p)
    p = hb.HeisenbergPoint(X * scale[:, None, None], Z * scale[:, None] ** 2)
    t = rng.uniform(*spec.t_range, N)
    b = rng.uniform(*spec.b_range, N)
    return Samples(p.to_real(), t, b)


def _value_cache(samples: Samples) -> _PowerCache:
    return _PowerCache(np.column_stack([samples.coords, samples.u]))


# ---------------------------------------------------------------------------
# preparatory ratios  |D^j B_t| / B_t^{1 - j/4}
# ---------------------------------------------------------------------------

def prep_ratio(ctx, j: int, spec: SampleSpec = SampleSpec(),
               samples: Samples | None = None, max_words: int = 4096) -> float:
    """Empirical sup over samples and words of length ``j`` of ``|D^j B_t| / B_t^{1-j/4}``."""
    if not 1 <= j <= MAX_ORDER:
        raise ValueError(f"order {j} outside 1..{MAX_ORDER}")
    r = ring(ctx)
    samples = samples if samples is not None else draw_samples(r, spec)
    if samples.coords.shape[0] == 0:
        raise ValueError("empty sample set")
    table = DerivativeTable(b_t_poly(r))
    cache = _value_cache(samples)
    bt = cache.evaluate(table[()])
    best = 0.0
    for w in _word_list(r, j, max_words, spec.seed):
        poly = table[w]
        if poly.is_zero():
            continue
        ratio = np.abs(cache.evaluate(poly)) / bt ** (1 - j / 4)
        best = max(best, float(ratio.max()))
    return best


def _word_list(r: Ring, length: int, max_words: int, seed: int) -> list[Word]:
    if word_count(r, length) <= max_words:
        return list(words(r, length))
    rng = np.random.default_rng(seed)
    return [tuple(int(k) for k in rng.integers(0, r.nx, length)) for _ in range(max_words)]


# ---------------------------------------------------------------------------
# Faa di Bruno expansions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def set_partitions(size: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All set partitions of ``range(size)``; blocks are increasing tuples."""
    if size == 0:
        return ((),)
    out = []
    for part in set_partitions(size - 1):
        last = size - 1
        out.append(part + ((last,),))
        for i in range(len(part)):
            out.append(part[:i] + (part[i] + (last,),) + part[i + 1:])
    return tuple(tuple(sorted(p)) for p in out)


def _sub(word: Word, block: tuple[int, ...]) -> Word:
    return tuple(word[i] for i in block)


@dataclass(frozen=True)
class LogExpansion:
    """``D^w log B_t = sum_m numerators[m] / B_t^m``."""
    word: Word
    numerators: Mapping[int, MultiPoly]

    def evaluate(self, table: DerivativeTable, cache: _PowerCache, bt: np.ndarray) -> np.ndarray:
        out = np.zeros_like(bt)
        for m, num in self.numerators.items():
            out += cache.evaluate(num) / bt ** m
        return out


def log_expand(word: Sequence[int], table: DerivativeTable) -> LogExpansion:
    """Partition formula: ``(-1)^{m-1} (m-1)! prod_blocks D^block B_t / B_t^m``."""
    word = tuple(word)
    if not 1 <= len(word) <= MAX_ORDER:
        raise ValueError(f"order {len(word)} outside 1..{MAX_ORDER}")
    nums: dict[int, MultiPoly] = {}
    for part in set_partitions(len(word)):
        m = len(part)
        term = MultiPoly.const(table.ring, (-1) ** (m - 1) * math.factorial(m - 1))
        for block in part:
            term = term * table[_sub(word, block)]
        if term:
            nums[m] = nums.get(m, MultiPoly.const(table.ring, 0)) + term
    return LogExpansion(word, {m: p for m, p in sorted(nums.items()) if p})


@dataclass(frozen=True)
class OscillatoryTerm:
    power: int                 # l in (ib)^l
    blocks: tuple[Word, ...]   # sub-words whose log-derivatives are multiplied


@dataclass(frozen=True)
class OscillatoryExpansion:
    """``D^w (B_t^{ib}) = B_t^{ib} sum_terms (ib)^l prod_blocks D^block log B_t``."""
    word: Word
    terms: tuple[OscillatoryTerm, ...]
    logs: Mapping[Word, LogExpansion]
    table: DerivativeTable

    @property
    def order(self) -> int:
        return len(self.word)

    def evaluate_factor(self, samples: Samples, cache: _PowerCache | None = None,
                        log_values: dict | None = None) -> np.ndarray:
        """The complex sum multiplying ``B_t^{ib}``; its modulus is ``|D^w B_t^{ib}|``."""
        cache = cache or _value_cache(samples)
        log_values = {} if log_values is None else log_values
        bt = cache.evaluate(self.table[()])
        ib = 1j * samples.b
        out = np.zeros(bt.shape, dtype=complex)
        for term in self.terms:
            prod = ib ** term.power
            for blk in term.blocks:
                if blk not in log_values:
                    log_values[blk] = self.logs[blk].evaluate(self.table, cache, bt)
                prod = prod * log_values[blk]
            out += prod
        return out

    def evaluate(self, samples: Samples) -> np.ndarray:
        """Complex value of ``D^w (B_t^{ib})`` at the samples."""
        cache = _value_cache(samples)
        bt = cache.evaluate(self.table[()])
        return np.exp(1j * samples.b * np.log(bt)) * self.evaluate_factor(samples, cache)


def oscillatory_expand(word: Sequence[int], ctx=None, table: DerivativeTable | None = None
                       ) -> OscillatoryExpansion:
    word = tuple(word)
    if not 1 <= len(word) <= MAX_ORDER:
        raise ValueError(f"order {len(word)} outside 1..{MAX_ORDER}")
    if table is None:
        table = DerivativeTable(b_t_poly(ring(ctx)))
    terms = []
    logs: dict[Word, LogExpansion] = {}
    for part in set_partitions(len(word)):
        blocks = tuple(_sub(word, blk) for blk in part)
        for blk in blocks:
            if blk not in logs:
                logs[blk] = log_expand(blk, table)
        terms.append(OscillatoryTerm(len(part), blocks))
    return OscillatoryExpansion(word, tuple(terms), logs, table)


def partition_bound(s: int, prep: Mapping[int, float]) -> float:
    """Bound for the oscillatory ratio assembled from preparatory constants ``prep[k]``.

    ``sum_pi prod_beta sum_sigma (|sigma|-1)! prod_gamma C_|gamma|``, where
    ``pi`` runs over partitions of ``s`` positions, ``sigma`` over partitions of
    a block ``beta`` and ``C_k = 0`` for ``k >= 5``.
    """
    def c(k):
        return prep.get(k, 0.0) if k <= 4 else 0.0

    @lru_cache(maxsize=None)
    def log_bound(k):
        return sum(math.factorial(len(sig) - 1) * math.prod(c(len(g)) for g in sig)
                   for sig in set_partitions(k))

    return sum(math.prod(log_bound(len(beta)) for beta in pi) for pi in set_partitions(s))


def tech_ratio(ctx, s: int, spec: SampleSpec = SampleSpec(),
               samples: Samples | None = None, max_words: int = 1024) -> float:
    """Empirical sup of ``|D^s(B_t^{ib})| B_t^{s/4} (1+|b|)^{-s}`` over samples and words."""
    if not 1 <= s <= MAX_ORDER:
        raise ValueError(f"order {s} outside 1..{MAX_ORDER}")
    r = ring(ctx)
    samples = samples if samples is not None else draw_samples(r, spec)
    if samples.coords.shape[0] == 0:
        raise ValueError("empty sample set")
    table = DerivativeTable(b_t_poly(r))
    cache = _value_cache(samples)
    bt = cache.evaluate(table[()])
    weight = bt ** (s / 4) / (1 + np.abs(samples.b)) ** s
    log_values: dict = {}
    best = 0.0
    for w in _word_list(r, s, max_words, spec.seed):
        exp = oscillatory_expand(w, table=table)
        val = np.abs(exp.evaluate_factor(samples, cache, log_values)) * weight
        best = max(best, float(val.max()))
    return best
