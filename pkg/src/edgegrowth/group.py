"""The rank-one groups SO0(n,1), SU(n,1), Sp(n,1) as matrices preserving q.

Vectors in F^{n+1} are right F-modules and matrices act from the left.  Arrays
carry the F-components on their last axis, so a vector has shape ``(n+1, d)``
and a matrix ``(n+1, n+1, d)``; leading batch axes are allowed for vectors.

Disk points (``G/K``) and boundary points (``G/P``) are plain arrays of shape
``(..., n, d)``: the affine coordinates ``[1, w]`` of a projective point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra as alg
from .algebra import FieldTag, field_tag

GROUP_TOL = 1e-10


class NotInGroupError(ValueError):
    pass


def form_matrix(n: int) -> np.ndarray:
    J = np.ones(n + 1)
    J[0] = -1.0
    return J


def form_q(z, w):
    """``q(z, w) = -z0^* w0 + sum_j zj^* wj`` returned as an F-component array."""
    z = np.asarray(z)
    w = np.asarray(w)
    if z.shape[-2:] != w.shape[-2:]:
        raise ValueError(f"vector shapes differ: {z.shape} vs {w.shape}")
    prods = alg.fmul(alg.fconj(z), w)
    return prods[..., 1:, :].sum(axis=-2) - prods[..., 0, :]


@dataclass(frozen=True)
class GroupElement:
    tag: FieldTag
    n: int
    entries: np.ndarray

    def __post_init__(self):
        shape = (self.n + 1, self.n + 1, self.tag.dim)
        if self.entries.shape != shape:
            raise ValueError(f"entries must have shape {shape}, got {self.entries.shape}")

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        if (other.tag, other.n) != (self.tag, self.n):
            raise alg.TagMismatchError("group elements from different groups")
        return GroupElement(self.tag, self.n, alg.matmul(self.entries, other.entries))

    def inverse(self) -> "GroupElement":
        # g^* J g = J  =>  g^{-1} = J g^* J
        J = form_matrix(self.n)
        gs = alg.conj_transpose(self.entries)
        return GroupElement(self.tag, self.n, J[:, None, None] * gs * J[None, :, None])

    def apply(self, v) -> np.ndarray:
        return alg.matvec(self.entries, v)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.entries,
                                   alg.identity_matrix(self.n + 1, self.tag.dim)))

    @property
    def origin_image(self) -> np.ndarray:
        """The first column ``g e0``, a lift of ``g . 0`` in the disk."""
        return self.entries[:, 0, :]


def identity(tag, n: int) -> GroupElement:
    tag = field_tag(tag)
    return GroupElement(tag, n, alg.identity_matrix(n + 1, tag.dim))


def membership_defect(g: GroupElement) -> float:
    """Max-norm of ``g^* J g - J``."""
    J = form_matrix(g.n)
    Jg = J[:, None, None] * g.entries
    prod = alg.matmul(alg.conj_transpose(g.entries), Jg)
    target = alg.identity_matrix(g.n + 1, g.tag.dim) * J[:, None, None]
    return float(np.abs(prod - target).max())


def is_in_group(g: GroupElement, tol: float = GROUP_TOL) -> bool:
    return membership_defect(g) < tol


def a_t(t: float, tag="H", n: int = 2) -> GroupElement:
    """``a_t``; the entries inherit the floating type of ``t`` (e.g. ``np.longdouble``)."""
    tag = field_tag(tag)
    M = alg.identity_matrix(n + 1, tag.dim, dtype=np.result_type(np.asarray(t).dtype, float))
    M[0, 0, 0] = M[n, n, 0] = np.cosh(t)
    M[0, n, 0] = M[n, 0, 0] = np.sinh(t)
    return GroupElement(tag, n, M)


def _lift(w) -> np.ndarray:
    w = np.asarray(w)
    w = w.astype(np.result_type(w.dtype, float), copy=False)
    one = np.zeros(w.shape[:-2] + (1, w.shape[-1]), dtype=w.dtype)
    one[..., 0, 0] = 1.0
    return np.concatenate([one, w], axis=-2)


def _dehomogenize(v, what: str) -> np.ndarray:
    v0 = v[..., 0, :]
    if np.any(alg.fabs(v0) < 1e-300):
        raise NotInGroupError(f"first coordinate vanished while acting on the {what}")
    return alg.fmul(v[..., 1:, :], alg.finv(v0)[..., None, :])


def act_on_disk(g: GroupElement, w) -> np.ndarray:
    """Projective action ``[1, w] -> g[1, w]`` rescaled on the right to ``[1, w']``."""
    return _dehomogenize(g.apply(_lift(w)), "disk")


def act_on_boundary(g: GroupElement, zeta) -> np.ndarray:
    out = _dehomogenize(g.apply(_lift(zeta)), "boundary")
    return out / alg.vec_norm(out)[..., None, None]


def origin(tag, n: int) -> np.ndarray:
    return np.zeros((n, field_tag(tag).dim))


def pole(tag, n: int, sign: int = 1) -> np.ndarray:
    """The boundary point ``o = (0, ..., 0, 1)`` (or ``-o`` for ``sign=-1``)."""
    p = origin(tag, n)
    p[-1, 0] = sign
    return p


def length_l(g: GroupElement) -> float:
    """``d(gK, K)``, normalised so that ``length_l(a_t(t)) = |t|``."""
    r = float(alg.vec_norm(act_on_disk(g, origin(g.tag, g.n))))
    if r >= 1.0:
        raise OverflowError(f"disk radius {r!r} >= 1: element too far out to resolve")
    return float(np.arctanh(r))


# ---------------------------------------------------------------------------
# random elements
# ---------------------------------------------------------------------------

def random_unitary(tag, size: int, rng: np.random.Generator) -> np.ndarray:
    """Random F-unitary matrix via Gram-Schmidt on Gaussian columns."""
    tag = field_tag(tag)
    cols = []
    for _ in range(size):
        v = rng.standard_normal((size, tag.dim))
        for u in cols:
            # right-module projection: v - u <u, v>
            v = v - alg.fmul(u, alg.inner(u, v)[None, :])
        v = v / alg.vec_norm(v)
        cols.append(v)
    return np.stack(cols, axis=1)


def random_k(tag, n: int, rng: np.random.Generator) -> GroupElement:
    """Random element of K = stabiliser of the origin, block form ``diag(u0, U1)``."""
    tag = field_tag(tag)
    U1 = random_unitary(tag, n, rng)
    if tag.dim == 1:
        if np.linalg.det(U1[..., 0]) < 0:
            U1[:, 0, :] *= -1
        u0 = np.array([1.0])
    else:
        u0 = rng.standard_normal(tag.dim)
        u0 /= np.linalg.norm(u0)
        if tag.dim == 2:
            # land in SU(n,1): det = u0 det(U1) = 1
            d = np.linalg.det(U1[..., 0] + 1j * U1[..., 1])
            u0 = np.array([d.real, -d.imag]) / abs(d)
    M = np.zeros((n + 1, n + 1, tag.dim))
    M[0, 0] = u0
    M[1:, 1:] = U1
    return GroupElement(tag, n, M)


def random_element(tag, n: int, rng: np.random.Generator, t_max: float = 1.0) -> GroupElement:
    """``k a_t k'`` with ``t`` uniform in ``[0, t_max]``."""
    t = rng.uniform(0.0, t_max)
    return random_k(tag, n, rng) @ a_t(t, tag, n) @ random_k(tag, n, rng)
