"""Arithmetic over the real division algebras R, C and H.

Elements are stored as real component vectors ``(1, i, j, k)`` truncated to the
field dimension.  Two layers live here:

* :class:`Scalar`, a small value type with exact arithmetic whenever its
  components are :class:`fractions.Fraction`;
* array functions (``fmul``, ``fconj``, ``matmul`` ...) acting on numpy arrays
  whose last axis holds the components.  They broadcast over leading axes and
  also work on ``dtype=object`` arrays of fractions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Real

import numpy as np


class TagMismatchError(ValueError):
    """Raised when scalars from different division algebras are combined."""


@dataclass(frozen=True)
class FieldTag:
    variant: str
    dim: int

    @property
    def im_dim(self) -> int:
        return self.dim - 1

    def __str__(self) -> str:
        return self.variant


R = FieldTag("R", 1)
C = FieldTag("C", 2)
H = FieldTag("H", 4)

_TAGS = {"R": R, "C": C, "H": H}
_BY_DIM = {1: R, 2: C, 4: H}


def field_tag(spec: str | FieldTag) -> FieldTag:
    if isinstance(spec, FieldTag):
        return spec
    try:
        return _TAGS[spec.upper()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown field {spec!r}; expected one of R, C, H") from None


def tag_for_dim(dim: int) -> FieldTag:
    try:
        return _BY_DIM[dim]
    except KeyError:
        raise ValueError(f"no division algebra of real dimension {dim}") from None


# Hamilton's table on basis indices 0=1, 1=i, 2=j, 3=k: e_a e_b = sign * e_c.
_QUAT = {
    (1, 1): (-1, 0), (2, 2): (-1, 0), (3, 3): (-1, 0),
    (1, 2): (1, 3), (2, 1): (-1, 3),
    (2, 3): (1, 1), (3, 2): (-1, 1),
    (3, 1): (1, 2), (1, 3): (-1, 2),
}


@lru_cache(maxsize=None)
def structure_constants(dim: int) -> np.ndarray:
    """Integer tensor ``T`` with ``(xy)_c = sum_ab x_a y_b T[a, b, c]``."""
    tag_for_dim(dim)
    T = np.zeros((dim, dim, dim), dtype=np.int64)
    for a in range(dim):
        for b in range(dim):
            if a == 0:
                T[a, b, b] = 1
            elif b == 0:
                T[a, b, a] = 1
            else:
                sign, c = _QUAT[(a, b)]
                T[a, b, c] = sign
    T.setflags(write=False)
    return T


@lru_cache(maxsize=None)
def _nonzero_table(dim: int) -> tuple[tuple[int, int, int, int], ...]:
    T = structure_constants(dim)
    return tuple((a, b, c, int(T[a, b, c])) for a, b, c in zip(*np.nonzero(T)))


@lru_cache(maxsize=None)
def conj_signs(dim: int) -> np.ndarray:
    s = -np.ones(dim, dtype=np.int64)
    s[0] = 1
    s.setflags(write=False)
    return s


# ---------------------------------------------------------------------------
# array layer
# ---------------------------------------------------------------------------

def fmul(a, b):
    """Componentwise division-algebra product of two broadcastable arrays."""
    a = np.asarray(a)
    b = np.asarray(b)
    dim = a.shape[-1]
    if b.shape[-1] != dim:
        raise TagMismatchError(f"component lengths differ: {dim} vs {b.shape[-1]}")
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (dim,)
    dtype = np.result_type(a.dtype, b.dtype)
    out = np.zeros(shape, dtype=dtype)
    if dtype == object:
        out[...] = 0
    for ia, ib, ic, sign in _nonzero_table(dim):
        term = a[..., ia] * b[..., ib]
        if sign > 0:
            out[..., ic] = out[..., ic] + term
        else:
            out[..., ic] = out[..., ic] - term
    return out


def fconj(a):
    a = np.asarray(a)
    return a * conj_signs(a.shape[-1])


def fabs2(a):
    a = np.asarray(a)
    return (a * a).sum(axis=-1)


def fabs(a):
    return np.sqrt(fabs2(a))


def finv(a):
    a = np.asarray(a)
    return fconj(a) / fabs2(a)[..., None]


def fre(a):
    return np.asarray(a)[..., 0]


def fim(a):
    """Imaginary part, keeping the full component layout (real slot zeroed)."""
    out = np.array(a, copy=True)
    out[..., 0] = 0
    return out


def freal(x, dim: int):
    """Embed real numbers as scalars of the given dimension."""
    x = np.asarray(x)
    out = np.zeros(x.shape + (dim,), dtype=np.result_type(x.dtype, float))
    out[..., 0] = x
    return out


def matmul(A, B):
    """Product of matrices over F; shapes ``(..., p, q, d) @ (..., q, r, d)``."""
    A = np.asarray(A)
    B = np.asarray(B)
    return fmul(A[..., :, :, None, :], B[..., None, :, :, :]).sum(axis=-3)


def matvec(A, v):
    """``A v`` with ``A`` of shape ``(..., p, q, d)`` and ``v`` of shape ``(..., q, d)``."""
    A = np.asarray(A)
    v = np.asarray(v)
    if A.ndim == 3 and A.dtype.kind == "f" and v.dtype.kind == "f" and v.ndim >= 2:
        # one real-coded matrix on a batch: a single real GEMM of size (qd, pd)
        p, q, d = A.shape
        if v.shape[-2:] != (q, d):
            raise TagMismatchError(f"shape mismatch: {A.shape} vs {v.shape}")
        left = np.tensordot(A, structure_constants(d).astype(A.dtype), ([-1], [0]))
        real = left.transpose(1, 2, 0, 3).reshape(q * d, p * d)
        flat = v.reshape(-1, q * d) @ real
        return flat.reshape(v.shape[:-2] + (p, d))
    return fmul(A, v[..., None, :, :]).sum(axis=-2)


def conj_transpose(A):
    return fconj(np.swapaxes(np.asarray(A), -3, -2))


def inner(v, w):
    """Hermitian pairing ``sum_k v_k^* w_k`` (conjugate-linear in the first slot)."""
    return fmul(fconj(v), w).sum(axis=-2)


def vec_norm(v):
    return np.sqrt(fabs2(v).sum(axis=-1))


def identity_matrix(size: int, dim: int, dtype=float) -> np.ndarray:
    out = np.zeros((size, size, dim), dtype=dtype)
    if dtype == object:
        out[...] = 0
    for i in range(size):
        out[i, i, 0] = 1
    return out


# ---------------------------------------------------------------------------
# scalar layer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scalar:
    tag: FieldTag
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.tag.dim:
            raise ValueError(
                f"{self.tag} scalar needs {self.tag.dim} components, got {len(self.components)}")

    @classmethod
    def of(cls, tag: str | FieldTag, *components) -> "Scalar":
        tag = field_tag(tag)
        comps = list(components) + [0] * (tag.dim - len(components))
        return cls(tag, tuple(comps))

    @classmethod
    def unit(cls, tag: str | FieldTag, index: int) -> "Scalar":
        tag = field_tag(tag)
        comps = [0] * tag.dim
        comps[index] = 1
        return cls(tag, tuple(comps))

    def _check(self, other: "Scalar") -> None:
        if not isinstance(other, Scalar):
            raise TypeError(f"expected Scalar, got {type(other).__name__}")
        if other.tag != self.tag:
            raise TagMismatchError(f"cannot combine {self.tag} with {other.tag}")

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Real):
            return Scalar.of(self.tag, other)
        self._check(other)
        return other

    def __add__(self, other):
        other = self._coerce(other)
        return Scalar(self.tag, tuple(x + y for x, y in zip(self.components, other.components)))

    __radd__ = __add__

    def __neg__(self):
        return Scalar(self.tag, tuple(-x for x in self.components))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        return mul(self, self._coerce(other))

    def __rmul__(self, other):
        return mul(self._coerce(other), self)

    def __truediv__(self, other):
        if isinstance(other, Real):
            return Scalar(self.tag, tuple(x / other for x in self.components))
        return mul(self, other.inverse())

    def __abs__(self) -> float:
        return math.sqrt(self.abs2())

    def abs2(self):
        return sum(x * x for x in self.components)

    def conj(self) -> "Scalar":
        return conj(self)

    def inverse(self) -> "Scalar":
        n2 = self.abs2()
        if n2 == 0:
            raise ZeroDivisionError("inverse of zero scalar")
        return Scalar(self.tag, tuple(x / n2 for x in conj(self).components))

    def is_real(self) -> bool:
        return all(x == 0 for x in self.components[1:])

    def to_array(self) -> np.ndarray:
        return np.array(self.components, dtype=float)

    def __repr__(self) -> str:
        names = ("", "i", "j", "k")
        parts = [f"{x}{names[i]}" for i, x in enumerate(self.components) if x != 0]
        return f"{self.tag}({' + '.join(parts) or '0'})"


def mul(a: Scalar, b: Scalar) -> Scalar:
    a._check(b)
    out = [0] * a.tag.dim
    for ia, ib, ic, sign in _nonzero_table(a.tag.dim):
        out[ic] += sign * a.components[ia] * b.components[ib]
    return Scalar(a.tag, tuple(out))


def conj(z: Scalar) -> Scalar:
    return Scalar(z.tag, (z.components[0],) + tuple(-x for x in z.components[1:]))


def re(z: Scalar):
    return z.components[0]


def im_part(z: Scalar) -> Scalar:
    return Scalar(z.tag, (0 * z.components[0],) + tuple(z.components[1:]))


def random_scalars(tag: FieldTag, size, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(tuple(np.atleast_1d(size)) + (tag.dim,))


def random_rational_scalar(tag: FieldTag, rng, bound: int = 9) -> Scalar:
    comps = [Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, bound + 1)))
             for _ in range(tag.dim)]
    return Scalar(tag, tuple(comps))

