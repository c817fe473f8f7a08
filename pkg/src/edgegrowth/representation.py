"""Spherical principal series at sigma = 0 and the three-lines interpolation arithmetic.

``pi_0(g) f (zeta) = lambda_g(zeta)^{Q/2} f(g^{-1} zeta)`` is unitary on
``L^2(G/P, mu_0)``; it is checked here by Monte Carlo quadrature.  The edge
line ``Re(s) = 1`` enters only through the bound shape
``C e^{eps l(g)} (1 + |b|)^{Q/2}``, which the three-lines calculator
interpolates against the unitary line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import group as grp
from .boundary import CocycleContext, lambda_g, pullback_sample
from .group import GroupElement

BoundaryFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SpectralParameter:
    """``s = sigma + i b`` with ``0 <= sigma <= 1``."""
    s: complex

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"Re(s) = {self.sigma} outside [0, 1]")

    @property
    def sigma(self) -> float:
        return complex(self.s).real

    @property
    def b(self) -> float:
        return complex(self.s).imag

    def cocycle_exponent(self, Q: int) -> complex:
        """Power ``(Q/2)(1 - s)`` of ``lambda_g`` in ``pi_s``."""
        return Q / 2 * (1 - complex(self.s))

    def sobolev_order(self, Q: int) -> complex:
        """Power ``(Q/4) s`` of ``(1 + Delta)`` conjugating ``pi_s``."""
        return Q / 4 * complex(self.s)


@dataclass(frozen=True)
class EdgeBound:
    """``C e^{eps l} (1 + |b|)^{Q/2}`` on the line ``Re(s) = 1``."""
    C: float
    eps: float
    Q: float

    def __post_init__(self):
        if self.C <= 0 or self.eps <= 0:
            raise ValueError("C and eps must be positive")

    @property
    def exponent(self) -> float:
        return self.Q / 2

    def __call__(self, l_g: float, b: float) -> float:
        return self.C * math.exp(self.eps * l_g) * (1 + abs(b)) ** self.exponent


# ---------------------------------------------------------------------------
# pi_0 and unitarity
# ---------------------------------------------------------------------------

def pi0(g: GroupElement, f: BoundaryFunction, ctx: CocycleContext) -> BoundaryFunction:
    """The function ``pi_0(g) f``."""
    if g.is_identity():
        return f
    g_inv = g.inverse()

    def out(zeta):
        return lambda_g(g, zeta) ** (ctx.Q / 2) * f(grp.act_on_boundary(g_inv, zeta))

    return out


@dataclass(frozen=True)
class UnitarityCheck:
    lhs: complex
    rhs: complex
    rel_err: float
    stderr: float


def pi0_unitarity_check(g: GroupElement, f1: BoundaryFunction, f2: BoundaryFunction,
                        samples: int, seed: int, ctx: CocycleContext | None = None,
                        mixture: bool = True) -> UnitarityCheck:
    """Compare ``<pi_0(g) f1, pi_0(g) f2>`` with ``<f1, f2>`` by quadrature against mu_0.

    ``rhs`` uses a plain pulled-back sample.  With ``mixture`` the left
    integrand, which carries the peaked factor ``lambda_g^Q``, is estimated on
    the same sample and on its push-forward by ``g``, combined with the balance
    heuristic.  Its weight ``1/(1 + lambda_g^Q)`` is the right one only if
    ``g_* mu_0 = lambda_g^Q mu_0``, so a wrong cocycle biases ``lhs`` and the
    check stays meaningful.  For ``g = 1`` both halves equal ``rhs / 2`` and
    ``lhs == rhs`` exactly.  Without ``mixture``, ``lhs`` uses the plain sample.
    """
    ctx = ctx if ctx is not None else CocycleContext(g.tag, g.n)
    base = pullback_sample(ctx, samples, seed)
    right = np.conj(f1(base.zeta)) * f2(base.zeta)
    rhs = complex(base.integrate(right))

    g_inv = g.inverse()

    def integrand(zeta):
        # pi_0(g) f1 and pi_0(g) f2 share lambda_g and the moved points
        if g.is_identity():
            return np.conj(f1(zeta)) * f2(zeta), np.ones(zeta.shape[:-2])
        lam_q = lambda_g(g, zeta) ** ctx.Q
        moved = grp.act_on_boundary(g_inv, zeta)
        return lam_q * np.conj(f1(moved)) * f2(moved), lam_q

    if not mixture:
        left, _ = integrand(base.zeta)
        lhs = complex(base.integrate(left))
        err = base.stderr(left)
    else:
        both = []
        pushed = base.zeta if g.is_identity() else grp.act_on_boundary(g, base.zeta)
        for zeta in (base.zeta, pushed):
            vals, lam_q = integrand(zeta)
            both.append(vals / (1 + lam_q))
        lhs = complex(base.integrate(both[0])) + complex(base.integrate(both[1]))
        # the two halves are correlated: take the error of their pointwise sum
        err = base.stderr(both[0] + both[1])
    rel = abs(lhs - rhs) / abs(rhs) if rhs != 0 else abs(lhs)
    return UnitarityCheck(lhs, rhs, rel, err / max(abs(rhs), 1e-300))


def random_test_function(ctx: CocycleContext, rng: np.random.Generator, terms: int = 3,
                         offset: float = 1.5) -> BoundaryFunction:
    """Bounded smooth ``offset + sum_k c_k exp(i <w_k, zeta>)`` with random frequencies."""
    dim = ctx.n * ctx.tag.dim
    w = rng.standard_normal((terms, dim))
    c = 0.5 * (rng.standard_normal(terms) + 1j * rng.standard_normal(terms)) / terms
    phase = rng.uniform(0, 2 * np.pi, terms)

    def f(zeta):
        flat = np.asarray(zeta).reshape(np.shape(zeta)[:-2] + (dim,))
        return offset + np.exp(1j * (flat @ w.T + phase)) @ c

    return f


# ---------------------------------------------------------------------------
# three lines
# ---------------------------------------------------------------------------

def c_prime_argmax(A: float, Q: float) -> float:
    """Stationary point of ``(1+b)^{Q/2} e^{A(1-b^2)}``: ``2Ab(1+b) = Q/2``."""
    if A <= 0:
        raise ValueError("A must be positive")
    if Q < 0:
        raise ValueError("Q must be non-negative")
    return (-1 + math.sqrt(1 + Q / A)) / 2


def c_prime(A: float, Q: float) -> float:
    """``sup_{b >= 0} (1+b)^{Q/2} e^{A(1-b^2)}``, in closed form."""
    b = c_prime_argmax(A, Q)
    return (1 + b) ** (Q / 2) * math.exp(A * (1 - b * b))


def c_prime_grid(A: float, Q: float, b_max: float = 50.0, step: float = 1e-4) -> float:
    """The same supremum by brute force over a grid of ``b``."""
    if A <= 0:
        raise ValueError("A must be positive")
    b = np.arange(0.0, b_max + step / 2, step)
    return float(np.exp(np.max(Q / 2 * np.log1p(b) + A * (1 - b * b))))


def _check_domain(M0, A, t):
    if M0 <= 0:
        raise ValueError("M0 must be positive")
    if A <= 0:
        raise ValueError("A must be positive")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")


def edge_constant(M1: EdgeBound, A: float) -> float:
    """``C' = C sup_b |(1+|b|)^{Q/2} e^{A(1+ib)^2}|``."""
    return M1.C * c_prime(A, M1.Q)


def three_lines_weighted(M0: float, M1: EdgeBound, A: float, l_g: float, t: float) -> float:
    """Three-lines bound for ``e^{A s^2} <pi_s(g) u, v>`` on ``Re(s) = t``.

    ``M0^{1-t} (C' e^{eps l})^t``: the exponential of an affine function of t.
    """
    _check_domain(M0, A, t)
    return M0 ** (1 - t) * (edge_constant(M1, A) * math.exp(M1.eps * l_g)) ** t


def three_lines_bound(M0: float, M1: EdgeBound, A: float, l_g: float, t: float) -> float:
    """Bound for ``|<pi_t(g) u, v>|`` after removing the factor ``e^{A t^2}``."""
    return math.exp(-A * t * t) * three_lines_weighted(M0, M1, A, l_g, t)


def uniform_bound(M1: EdgeBound, A: float, l_g: float) -> float:
    """``C' e^{eps l}``, the bound claimed uniformly over ``0 <= t <= 1`` when ``M0 = 1``."""
    return edge_constant(M1, A) * math.exp(M1.eps * l_g)
