"""Boundary geometry: Cayley transform, Busemann cocycle, lambda_g, B and B_t.

Also the Monte Carlo integral against the K-invariant probability measure mu_0
on the sphere, computed by pulling back to Nbar through the Cayley transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from . import algebra as alg
from . import group as grp
from . import heisenberg as hb
from .algebra import FieldTag, field_tag
from .group import GroupElement
from .heisenberg import HeisenbergPoint

T_MAX = 300.0


@dataclass(frozen=True)
class CocycleContext:
    tag: FieldTag
    n: int
    Q: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "tag", field_tag(self.tag))
        if self.n < 2:
            raise ValueError("rank parameter n must be >= 2")
        object.__setattr__(self, "Q", hb.homogeneous_dimension(self.tag, self.n))

    @classmethod
    def of(cls, tag="H", n: int = 2) -> "CocycleContext":
        return cls(field_tag(tag), n)

    @property
    def dim(self) -> int:
        """Real dimension of Nbar."""
        return hb.real_dimension(self.tag, self.n)

    @property
    def n_horizontal(self) -> int:
        return hb.n_horizontal(self.tag, self.n)


def _check_t(t) -> None:
    if np.any(np.abs(t) > T_MAX):
        raise OverflowError(f"|t| > {T_MAX}: cosh/sinh overflow in the matrix path")


# ---------------------------------------------------------------------------
# B, B_t, Cayley transform
# ---------------------------------------------------------------------------

def B(p: HeisenbergPoint):
    return (1 + p.norm_x2() / 4) ** 2 + p.abs_z2()


def B_t(p: HeisenbergPoint, t):
    return (np.exp(-2 * np.asarray(t)) + p.norm_x2() / 4) ** 2 + p.abs_z2()


def cayley(p: HeisenbergPoint) -> np.ndarray:
    """``C(X, Z) = B^{-1} (-X(1 + |X|^2/4 - Z), 1 - |X|^4/16 - |Z|^2 - 2Z)``."""
    nx2 = p.norm_x2()
    z2 = p.abs_z2()
    b = B(p)
    d = p.X.shape[-1]
    w = alg.freal(1 + nx2 / 4, d) - p.Z
    top = -alg.fmul(p.X, w[..., None, :])
    last = alg.freal(1 - nx2 ** 2 / 16 - z2, d) - 2 * p.Z
    top, last = np.broadcast_arrays(top, last[..., None, :])
    return np.concatenate([top, last[..., :1, :]], axis=-2) / b[..., None, None]


def z_n_of_cayley(p: HeisenbergPoint) -> np.ndarray:
    """Last coordinate of ``C(p)`` as ``-1 + 2N/B - 2Z/B`` with ``N = 1 + |X|^2/4``."""
    N = 1 + p.norm_x2() / 4
    b = np.asarray(B(p))
    return alg.freal(-1 + 2 * N / b, p.X.shape[-1]) - 2 * p.Z / b[..., None]


def inverse_cayley(zeta) -> HeisenbergPoint:
    """Inverse of :func:`cayley` on the sphere minus ``-o``."""
    zeta = np.asarray(zeta, dtype=float)
    d = zeta.shape[-1]
    w = alg.freal(1.0, d) + zeta[..., -1, :]
    # C(p) = (-X, 2 - (N + Z)) (N + Z)^{-1}  =>  N + Z = 2 (1 + zeta_n)^{-1}
    nz = 2 * alg.finv(w)
    X = -alg.fmul(zeta[..., :-1, :], nz[..., None, :])
    Z = alg.fim(nz)
    return HeisenbergPoint(X, Z)


# ---------------------------------------------------------------------------
# cocycles
# ---------------------------------------------------------------------------

def _lift(w) -> np.ndarray:
    return grp._lift(w)


def busemann(x, y, zeta) -> np.ndarray:
    """``log |q(y,z) q(x,x)^{1/2} / (q(x,z) q(y,y)^{1/2})|`` on lifts ``[1, .]``."""
    X, Y, Zt = _lift(x), _lift(y), _lift(zeta)
    qyz = alg.fabs(grp.form_q(Y, Zt))
    qxz = alg.fabs(grp.form_q(X, Zt))
    if np.any(qxz == 0):
        raise ValueError("q(x, zeta) = 0: x is not an interior point")
    qxx = alg.fabs(grp.form_q(X, X))
    qyy = alg.fabs(grp.form_q(Y, Y))
    return np.log(qyz) + 0.5 * np.log(qxx) - np.log(qxz) - 0.5 * np.log(qyy)


def lambda_g(g: GroupElement, zeta) -> np.ndarray:
    """``e^{-gamma_{0, g0}}`` evaluated through the Busemann formula."""
    o = grp.origin(g.tag, g.n)
    g0 = grp.act_on_disk(g, o)
    return np.exp(-busemann(o, g0, zeta))


def lambda_at_cayley(p: HeisenbergPoint, t) -> np.ndarray:
    """Closed form ``e^{-t} (B / B_t)^{1/2}`` of ``lambda_{a_t}`` composed with C."""
    return np.exp(-np.asarray(t)) * np.sqrt(B(p) / B_t(p, t))


def _as_dtype(p: HeisenbergPoint, dtype) -> HeisenbergPoint:
    return HeisenbergPoint(np.asarray(p.X, dtype=dtype), np.asarray(p.Z, dtype=dtype))


def lambda_at_cayley_matrix(p: HeisenbergPoint, t: float, dtype=np.longdouble) -> np.ndarray:
    """``lambda_{a_t}(C(p))`` through matrices, the Cayley map and the Busemann log.

    ``cosh t - sinh t z_n`` cancels catastrophically near ``o`` (relative loss
    about ``eps e^{2t}``), so the chain runs in ``dtype`` (extended precision by
    default) and is rounded to float64 at the end.
    """
    _check_t(t)
    t = dtype(t)
    return np.asarray(lambda_g(grp.a_t(t, p.tag, p.n), cayley(_as_dtype(p, dtype))),
                      dtype=float)


def remark_chain(p: HeisenbergPoint, t: float, dtype=np.longdouble
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Three evaluations of ``lambda_{a_t}^{-2} o C`` with ``r = tanh t``.

    Returns ``((1-r^2)^{-1} |1 - r z_n|^2``, the expanded expression in ``N, B``
    and ``e^{2t} B_t / B)``, each rounded to float64.  The first two divide by
    ``1 - r`` and are evaluated in ``dtype``.
    """
    _check_t(t)
    t = dtype(t)
    p = _as_dtype(p, dtype)
    r = np.tanh(t)
    zn = z_n_of_cayley(p)
    d = p.X.shape[-1]
    first = alg.fabs2(alg.freal(1.0, d) - r * zn) / (1 - r * r)
    N = 1 + p.norm_x2() / 4
    b = B(p)
    second = (1 + r) / (1 - r) * (1 - 4 * r / (1 + r) * N / b + 4 * r * r / (1 + r) ** 2 / b)
    third = np.exp(2 * t) * B_t(p, t) / b
    return tuple(np.asarray(v, dtype=float) for v in (first, second, third))


def remark_chain_exact(p: HeisenbergPoint, r):
    """The same three expressions in exact arithmetic.

    ``p`` carries ``Fraction`` components (``dtype=object``) and ``r`` is a
    rational in ``(0, 1)`` standing for ``tanh t``, so ``e^{-2t} = (1-r)/(1+r)``.
    """
    zn = z_n_of_cayley(p)
    d = p.X.shape[-1]
    one = alg.freal(np.array(1, dtype=object), d)
    first = alg.fabs2(one - r * zn) / (1 - r * r)
    N = 1 + p.norm_x2() / 4
    b = B(p)
    second = (1 + r) / (1 - r) * (1 - 4 * r / (1 + r) * N / b + 4 * r * r / (1 + r) ** 2 / b)
    u = (1 - r) / (1 + r)
    bt = (u + p.norm_x2() / 4) ** 2 + p.abs_z2()
    third = bt / (u * b)
    return first, second, third


def jacobian_cayley(p: HeisenbergPoint, ctx: CocycleContext):
    return B(p) ** (-ctx.Q / 2)


def jacobian_dilation(t: float, ctx: CocycleContext) -> float:
    return math.exp(ctx.Q * t)


# ---------------------------------------------------------------------------
# cutoffs
# ---------------------------------------------------------------------------

def smooth_step(s):
    """C^infinity step: 1 for ``s <= 0``, 0 for ``s >= 1``, built from ``exp(-1/x)``."""
    s = np.asarray(s, dtype=float)

    def bump(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    a = bump(1.0 - s)
    b = bump(s)
    return a / (a + b)


@dataclass(frozen=True)
class SmoothCutoff:
    """Equal to 1 on the gauge ball of ``inner_radius`` about ``center``, 0 outside ``outer_radius``."""
    center: HeisenbergPoint
    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise ValueError("need 0 < inner_radius < outer_radius")

    @classmethod
    def at_origin(cls, ctx: CocycleContext, inner_radius: float, outer_radius: float):
        return cls(hb.origin(ctx.tag, ctx.n), inner_radius, outer_radius)

    def __call__(self, p: HeisenbergPoint) -> np.ndarray:
        rel = hb.group_law(-self.center, p)
        s = (hb.gauge(rel) - self.inner_radius) / (self.outer_radius - self.inner_radius)
        return smooth_step(s)


@dataclass(frozen=True)
class AnnulusCutoff:
    """``outer * (1 - inner)``: vanishes on the inner gauge ball."""
    inner: SmoothCutoff
    outer: SmoothCutoff

    @classmethod
    def at_origin(cls, ctx: CocycleContext, r0: float, r1: float, r2: float, r3: float):
        return cls(SmoothCutoff.at_origin(ctx, r0, r1), SmoothCutoff.at_origin(ctx, r2, r3))

    def __call__(self, p: HeisenbergPoint) -> np.ndarray:
        return self.outer(p) * (1.0 - self.inner(p))


# ---------------------------------------------------------------------------
# integration against mu_0
# ---------------------------------------------------------------------------

def _t_sample(rng, count, k, dof, scale):
    g = rng.standard_normal((count, k))
    w = rng.chisquare(dof, size=count) / dof
    return scale * g / np.sqrt(w)[:, None]


def _t_logpdf(x, dof, scale):
    k = x.shape[-1]
    r2 = (x * x).sum(axis=-1) / (scale * scale)
    return (gammaln((dof + k) / 2) - gammaln(dof / 2) - k / 2 * np.log(dof * np.pi)
            - k * np.log(scale) - (dof + k) / 2 * np.log1p(r2 / dof))


@dataclass(frozen=True)
class PullbackProposal:
    """Heavy-tailed proposal on Nbar shaped after ``B^{-Q/2}``.

    ``B^{-Q/2}`` factors as a Student-t law in ``X`` times, conditionally on
    ``X``, a Student-t law in ``Z`` with scale ``N = 1 + |X|^2/4``.  The proposal
    uses the same degrees of freedom with scales widened by ``inflate``, so the
    importance weights stay bounded.
    """
    ctx: CocycleContext
    inflate: float = 1.2

    @property
    def _params(self):
        ctx = self.ctx
        kx = ctx.n_horizontal
        kz = ctx.tag.im_dim
        dof_z = ctx.Q - kz
        dof_x = 2 * (ctx.Q - kz) - kx
        scale_x = math.sqrt(4.0 / dof_x)
        scale_z = math.sqrt(1.0 / dof_z)
        return kx, kz, dof_x, dof_z, scale_x * self.inflate, scale_z * self.inflate

    def sample(self, rng: np.random.Generator, count: int) -> tuple[HeisenbergPoint, np.ndarray]:
        """Points and their log proposal densities (against Lebesgue dX dZ)."""
        kx, kz, dof_x, dof_z, sx, sz = self._params
        x = _t_sample(rng, count, kx, dof_x, sx)
        N = 1 + (x * x).sum(axis=1) / 4
        logq = _t_logpdf(x, dof_x, sx)
        if kz:
            w = _t_sample(rng, count, kz, dof_z, sz)
            logq = logq + _t_logpdf(w, dof_z, sz) - kz * np.log(N)
            coords = np.concatenate([x, w * N[:, None]], axis=1)
        else:
            coords = x
        return HeisenbergPoint.from_real(coords, self.ctx.tag, self.ctx.n), logq


@dataclass
class PullbackSample:
    """Weighted sample of mu_0 obtained by pulling back to Nbar."""
    zeta: np.ndarray
    weights: np.ndarray
    normalization: float
    seed: int
    count: int

    def integrate(self, values) -> complex | float:
        values = np.asarray(values)
        if values.shape != self.weights.shape:
            raise ValueError(f"expected {self.weights.shape} values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("integrand has non-finite values")
        return (self.weights * values).sum()

    def stderr(self, values) -> float:
        """Delta-method standard error of the self-normalised estimate."""
        values = np.asarray(values)
        mean = self.integrate(values)
        dev = np.abs(values - mean)
        return float(np.sqrt((self.weights ** 2 * dev ** 2).sum()))


def pullback_sample(ctx: CocycleContext, samples: int, seed: int, inflate: float = 1.2,
                    block_size: int = 1 << 16) -> PullbackSample:
    """Importance sample of mu_0: ``int f dmu_0 = c int (f o C) B^{-Q/2} dn``.

    Blocks draw from independent child seeds of ``seed``, so the result does not
    depend on how blocks are scheduled.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    proposal = PullbackProposal(ctx, inflate)
    nblocks = -(-samples // block_size)
    children = np.random.SeedSequence(seed).spawn(nblocks)
    zetas, logw = [], []
    for i, child in enumerate(children):
        count = min(block_size, samples - i * block_size)
        pts, logq = proposal.sample(np.random.default_rng(child), count)
        logw.append(-ctx.Q / 2 * np.log(B(pts)) + np.log(hb.haar_weight(ctx.tag)) - logq)
        zetas.append(cayley(pts))
    logw = np.concatenate(logw)
    shift = logw.max()
    w = np.exp(logw - shift)
    total = w.sum()
    normalization = float(samples / (total * np.exp(shift)))
    return PullbackSample(np.concatenate(zetas), w / total, normalization, seed, samples)


def quadrature_mu0(f: Callable[[np.ndarray], np.ndarray], samples: int, seed: int,
                   ctx: CocycleContext, inflate: float = 1.2):
    """Monte Carlo estimate of ``int f dmu_0``; ``f`` maps sphere points ``(N, n, d)`` to values."""
    sample = pullback_sample(ctx, samples, seed, inflate)
    return sample.integrate(f(sample.zeta))
