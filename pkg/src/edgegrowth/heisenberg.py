"""The 2-step nilpotent group Nbar = F^{n-1} + Im(F), identified with its Lie algebra.

A :class:`HeisenbergPoint` holds ``X`` with shape ``(..., n-1, d)`` and ``Z`` with
shape ``(..., d)`` (real slot zero), so one instance can carry a whole batch.

Real coordinates: the ``d(n-1)`` components of ``X`` (slot-major), followed by
the ``d-1`` imaginary components of ``Z``.  Horizontal direction ``j`` is the
``j``-th X coordinate (0-based).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import algebra as alg
from .algebra import FieldTag, field_tag
from .group import GroupElement


@dataclass(frozen=True)
class HeisenbergPoint:
    X: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X)
        Z = np.asarray(self.Z)
        if X.shape[-1] != Z.shape[-1]:
            raise ValueError("X and Z carry different field dimensions")
        if X.ndim < 2:
            raise ValueError("X must have shape (..., n-1, d)")
        if np.any(Z[..., 0] != 0):
            raise ValueError("Z must be purely imaginary")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Z", Z)

    @property
    def tag(self) -> FieldTag:
        return alg.tag_for_dim(self.X.shape[-1])

    @property
    def n(self) -> int:
        return self.X.shape[-2] + 1

    @property
    def batch_shape(self) -> tuple:
        return np.broadcast_shapes(self.X.shape[:-2], self.Z.shape[:-1])

    def __getitem__(self, idx) -> "HeisenbergPoint":
        return HeisenbergPoint(self.X[idx], self.Z[idx])

    def __neg__(self) -> "HeisenbergPoint":
        return HeisenbergPoint(-self.X, -self.Z)

    def norm_x2(self):
        return alg.fabs2(self.X).sum(axis=-1)

    def abs_z2(self):
        return alg.fabs2(self.Z)

    def to_real(self) -> np.ndarray:
        """Real coordinates ``(x..., z...)`` along the last axis."""
        batch = self.batch_shape
        Xf = self.X.reshape(self.X.shape[:-2] + (-1,))
        Xf = np.broadcast_to(Xf, batch + Xf.shape[-1:])
        Zf = np.broadcast_to(self.Z[..., 1:], batch + (self.Z.shape[-1] - 1,))
        return np.concatenate([Xf, Zf], axis=-1)

    @classmethod
    def from_real(cls, coords, tag, n: int) -> "HeisenbergPoint":
        tag = field_tag(tag)
        coords = np.asarray(coords)
        nx = tag.dim * (n - 1)
        X = coords[..., :nx].reshape(coords.shape[:-1] + (n - 1, tag.dim))
        Z = np.zeros(coords.shape[:-1] + (tag.dim,), dtype=coords.dtype)
        if coords.dtype == object:
            Z[...] = 0
        Z[..., 1:] = coords[..., nx:]
        return cls(X, Z)


def real_dimension(tag, n: int) -> int:
    tag = field_tag(tag)
    return tag.dim * (n - 1) + tag.im_dim


def n_horizontal(tag, n: int) -> int:
    return field_tag(tag).dim * (n - 1)


def homogeneous_dimension(tag, n: int) -> int:
    """``Q = dim n1 + 2 dim n2``."""
    tag = field_tag(tag)
    return tag.dim * (n - 1) + 2 * tag.im_dim


def origin(tag, n: int) -> HeisenbergPoint:
    tag = field_tag(tag)
    return HeisenbergPoint(np.zeros((n - 1, tag.dim)), np.zeros(tag.dim))


def random_points(tag, n: int, size: int, rng: np.random.Generator, scale: float = 1.0
                  ) -> HeisenbergPoint:
    tag = field_tag(tag)
    X = scale * rng.standard_normal((size, n - 1, tag.dim))
    Z = np.zeros((size, tag.dim))
    Z[:, 1:] = scale ** 2 * rng.standard_normal((size, tag.im_dim))
    return HeisenbergPoint(X, Z)


def _im_pairing(X1, X2):
    return alg.fim(alg.inner(X1, X2))


def bracket(p: HeisenbergPoint, q: HeisenbergPoint) -> HeisenbergPoint:
    Z = _im_pairing(p.X, q.X)
    X = np.zeros(np.broadcast_shapes(p.X.shape, q.X.shape), dtype=Z.dtype)
    if Z.dtype == object:
        X[...] = 0
    return HeisenbergPoint(X, Z)


def group_law(p: HeisenbergPoint, q: HeisenbergPoint) -> HeisenbergPoint:
    """Baker-Campbell-Hausdorff product ``p + q + [p, q]/2``."""
    half = _im_pairing(p.X, q.X) / 2
    return HeisenbergPoint(p.X + q.X, p.Z + q.Z + half)


def inverse(p: HeisenbergPoint) -> HeisenbergPoint:
    return -p


def dilation(p: HeisenbergPoint, t: float) -> HeisenbergPoint:
    return HeisenbergPoint(np.exp(t) * p.X, np.exp(2 * t) * p.Z)


def gauge(p: HeisenbergPoint):
    return (p.norm_x2() ** 2 / 16 + p.abs_z2()) ** 0.25


def haar_weight(tag) -> float:
    """Density of the Haar measure against Lebesgue ``dX dZ``: ``2^{dim n2}``."""
    return float(2 ** field_tag(tag).im_dim)


def exp_matrix(p: HeisenbergPoint) -> np.ndarray:
    """The matrix ``exp(X, Z)`` in ``G``; batched over the point's leading axes."""
    X, Z = np.broadcast_arrays(p.X, p.Z[..., None, :])
    Z = Z[..., 0, :]
    d = p.X.shape[-1]
    n = p.n
    batch = X.shape[:-2]
    xx8 = alg.freal(alg.fabs2(X).sum(axis=-1) / 8, d)
    Xs = alg.fconj(X)
    M = np.zeros(batch + (n + 1, n + 1, d))
    M[..., 0, 0, :] = xx8 + Z / 2
    M[..., 0, 0, 0] += 1
    M[..., 0, 1:n, :] = -Xs / 2
    M[..., 0, n, :] = xx8 + Z / 2
    M[..., 1:n, 0, :] = -X / 2
    M[..., 1:n, 1:n, :] = alg.identity_matrix(n - 1, d)
    M[..., 1:n, n, :] = -X / 2
    M[..., n, 0, :] = -xx8 - Z / 2
    M[..., n, 1:n, :] = Xs / 2
    M[..., n, n, :] = -xx8 - Z / 2
    M[..., n, n, 0] += 1
    return M


def exp_to_group(p: HeisenbergPoint) -> GroupElement:
    if p.batch_shape:
        raise ValueError("exp_to_group takes a single point; use exp_matrix for batches")
    return GroupElement(p.tag, p.n, exp_matrix(p))


# ---------------------------------------------------------------------------
# horizontal vector fields
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def field_coefficients(tag, n: int) -> np.ndarray:
    """Integer array ``A[j, c, a]``: E_j = d/dx_j + (1/2) sum_c (sum_a A[j,c,a] x_a) d/dz_c.

    Row ``c`` of the Z-correction is the ``c+1`` imaginary component of
    ``Im(X^* V_j)`` with ``V_j`` the j-th real basis vector of F^{n-1}.
    """
    tag = field_tag(tag)
    d = tag.dim
    T = alg.structure_constants(d)
    s = alg.conj_signs(d)
    nh = n_horizontal(tag, n)
    A = np.zeros((nh, tag.im_dim, nh), dtype=np.int64)
    for k in range(n - 1):
        for c in range(d):
            j = k * d + c
            for cz in range(1, d):
                for a in range(d):
                    A[j, cz - 1, k * d + a] = s[a] * T[a, c, cz]
    A.setflags(write=False)
    return A


def horizontal_basis(tag, n: int) -> list[HeisenbergPoint]:
    tag = field_tag(tag)
    out = []
    for j in range(n_horizontal(tag, n)):
        X = np.zeros((n - 1, tag.dim))
        X[j // tag.dim, j % tag.dim] = 1.0
        out.append(HeisenbergPoint(X, np.zeros(tag.dim)))
    return out


def field_direction(p: HeisenbergPoint, j: int) -> np.ndarray:
    """Tangent vector of E_j at ``p`` in real coordinates."""
    tag, n = p.tag, p.n
    A = field_coefficients(tag, n)
    x = p.to_real()[..., : n_horizontal(tag, n)]
    v = np.zeros(x.shape[:-1] + (real_dimension(tag, n),))
    v[..., j] = 1.0
    v[..., n_horizontal(tag, n):] = 0.5 * x @ A[j].T
    return v


def horizontal_derivative(f: Callable[[HeisenbergPoint], np.ndarray], j: int,
                          p: HeisenbergPoint, h: float = 1e-3):
    """``E_j f (p)`` by a five-point stencil along the tangent of the field."""
    tag, n = p.tag, p.n
    if not 0 <= j < n_horizontal(tag, n):
        raise IndexError(f"horizontal direction {j} out of range")
    base = p.to_real()
    v = field_direction(p, j)

    def at(s):
        return f(HeisenbergPoint.from_real(base + s * v, tag, n))

    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h)
