"""Discrete sub-Laplacian on a box in Nbar, its Sobolev powers and multiplier norms.

Each horizontal field ``E_j = d/dx_j + (1/2) sum_c a_jc(x) d/dz_c`` becomes a
forward-difference operator from the ``m^D`` box nodes to an extended grid
with one ghost layer below each axis (indices ``-1 .. m-1``); values outside
the box are zero.  ``Delta_h = sum_j E_j^T E_j`` is then symmetric and PSD by
construction, and for the abelian case it is exactly the Dirichlet
``(-1, 2, -1)/h^2`` Laplacian.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import heisenberg as hb
from .algebra import FieldTag, field_tag
from .boundary import B, B_t, CocycleContext
from .heisenberg import HeisenbergPoint

log = logging.getLogger(__name__)

DENSE_LIMIT = 6000
LANCZOS_VECTORS = 200
POWER_TOL = 1e-6
POWER_MAX_ITER = 3000


class ConvergenceError(RuntimeError):
    """Power iteration hit its cap; ``estimate`` and ``vector`` hold the last iterate."""

    def __init__(self, message: str, estimate: float, vector: np.ndarray, iters: int):
        super().__init__(message)
        self.estimate = estimate
        self.vector = vector
        self.iters = iters


@dataclass(frozen=True)
class Grid:
    tag: FieldTag
    n: int
    L: float
    m: int

    def __post_init__(self):
        object.__setattr__(self, "tag", field_tag(self.tag))
        if self.m < 5:
            raise ValueError("grid too small for the stencil: need m >= 5")
        if self.m % 2 == 0:
            raise ValueError("m must be odd so the origin is a node")
        if self.L <= 0:
            raise ValueError("box half-width must be positive")
        if self.tag.variant == "H":
            # m^7 nodes: only coarse grids are affordable
            log.warning("quaternionic grids are experimental (m=%d, %d nodes; m <= 7 advised)",
                        self.m, self.size)

    @property
    def ctx(self) -> CocycleContext:
        return CocycleContext(self.tag, self.n)

    @property
    def h(self) -> float:
        return 2 * self.L / (self.m - 1)

    @property
    def nx(self) -> int:
        return hb.n_horizontal(self.tag, self.n)

    @property
    def nz(self) -> int:
        return self.tag.im_dim

    @property
    def dimension(self) -> int:
        return self.nx + self.nz

    @property
    def size(self) -> int:
        return self.m ** self.dimension

    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.m)

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``(m^D, D)``, C order with axis 0 slowest."""
        ax = self.axis()
        mesh = np.meshgrid(*([ax] * self.dimension), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def points(self) -> HeisenbergPoint:
        return HeisenbergPoint.from_real(self.nodes(), self.tag, self.n)


@dataclass
class GridOperator:
    """A symmetric linear map on grid functions, either a matrix or a callback."""
    size: int
    matrix: sp.spmatrix | np.ndarray | None = None
    apply_fn: Callable[[np.ndarray], np.ndarray] | None = None
    symmetric: bool = True
    eig: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ v
        return self.apply_fn(v)

    def __matmul__(self, v):
        return self.apply(v)

    def dense(self) -> np.ndarray:
        if self.matrix is None:
            return self.apply(np.eye(self.size))
        return self.matrix.toarray() if sp.issparse(self.matrix) else np.asarray(self.matrix)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached dense symmetric eigendecomposition."""
        if self.eig is None:
            if self.size > DENSE_LIMIT:
                raise MemoryError(f"{self.size} nodes exceed the dense limit {DENSE_LIMIT}")
            w, V = scipy.linalg.eigh(self.dense())
            self.eig = (w, V)
        return self.eig


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _forward(m: int) -> sp.csr_matrix:
    """(m+1) x m forward difference with zero extension; row r is index r-1."""
    return sp.diags([-np.ones(m), np.ones(m)], [-1, 0], shape=(m + 1, m), format="csr")


def _embed(m: int) -> sp.csr_matrix:
    """(m+1) x m injection leaving the ghost row ``-1`` at zero."""
    return sp.eye(m + 1, m, k=-1, format="csr")


def _kron_axes(ops: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return out


def horizontal_fields(grid: Grid) -> list[sp.csr_matrix]:
    """Forward-difference ``E_j`` as sparse ``(m+1)^D x m^D`` matrices."""
    m, D, h = grid.m, grid.dimension, grid.h
    A = hb.field_coefficients(grid.tag, grid.n)
    fw, em = _forward(m), _embed(m)

    def along(axis):
        return _kron_axes([fw if a == axis else em for a in range(D)]) / h

    # x coordinates of the extended grid rows
    ext = -grid.L + h * np.arange(-1, m)
    mesh = np.meshgrid(*([ext] * D), indexing="ij")
    xs = [g.ravel() for g in mesh[: grid.nx]]
    fields = []
    for j in range(grid.nx):
        Ej = along(j)
        for c in range(grid.nz):
            coef = 0.5 * sum(A[j, c, a] * xs[a] for a in range(grid.nx) if A[j, c, a])
            if np.ndim(coef):
                Ej = Ej + sp.diags(coef) @ along(grid.nx + c)
        fields.append(Ej.tocsr())
    return fields


def assemble_sublaplacian(grid: Grid, ctx: CocycleContext | None = None) -> GridOperator:
    if ctx is not None and (ctx.tag, ctx.n) != (grid.tag, grid.n):
        raise ValueError("context and grid describe different groups")
    lap = None
    for Ej in horizontal_fields(grid):
        term = (Ej.T @ Ej).tocsr()
        lap = term if lap is None else lap + term
    return GridOperator(grid.size, matrix=lap.tocsr())


# ---------------------------------------------------------------------------
# functional calculus
# ---------------------------------------------------------------------------

def lanczos_function(op: GridOperator, f: Callable[[np.ndarray], np.ndarray],
                     v: np.ndarray, k: int = LANCZOS_VECTORS) -> np.ndarray:
    """``f(op) v`` from a ``k``-step Lanczos run with full reorthogonalisation."""
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return (lanczos_function(op, f, v.real, k)
                + 1j * lanczos_function(op, f, v.imag, k))
    if v.ndim == 2:
        return np.stack([lanczos_function(op, f, v[:, i], k) for i in range(v.shape[1])], 1)
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return np.zeros_like(v)
    k = min(k, op.size)
    Qm = np.zeros((op.size, k))
    alpha = np.zeros(k)
    beta = np.zeros(k)
    q = v / beta0
    used = k
    for i in range(k):
        Qm[:, i] = q
        w = op.apply(q)
        alpha[i] = q @ w
        w = w - Qm[:, : i + 1] @ (Qm[:, : i + 1].T @ w)
        w = w - Qm[:, : i + 1] @ (Qm[:, : i + 1].T @ w)
        b = np.linalg.norm(w)
        if i + 1 < k:
            if b < 1e-12 * max(1.0, abs(alpha[i])):
                used = i + 1
                break
            beta[i] = b
            q = w / b
    theta, S = scipy.linalg.eigh_tridiagonal(alpha[:used], beta[: used - 1])
    coeff = S @ (f(theta) * S[0, :])
    return beta0 * (Qm[:, :used] @ coeff)


def _power_symbol(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda lam: (1.0 + np.maximum(lam, 0.0)) ** (alpha / 2)


def sobolev_power(op: GridOperator, alpha: float) -> GridOperator:
    """``(1 + op)^{alpha/2}``; dense below :data:`DENSE_LIMIT` nodes, Lanczos above."""
    if alpha == 0:
        return GridOperator(op.size, matrix=sp.identity(op.size, format="csr"))
    f = _power_symbol(alpha)
    if op.size <= DENSE_LIMIT:
        w, V = op.eigh()
        out = GridOperator(op.size, matrix=(V * f(w)) @ V.T)
        out.eig = (f(w), V)
        return out
    return GridOperator(op.size, apply_fn=lambda v: lanczos_function(op, f, v))


# ---------------------------------------------------------------------------
# multiplier norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormResult:
    norm: float
    iters: int
    converged: bool


def _node_values(mult, grid: Grid | None, size: int) -> np.ndarray:
    if callable(mult):
        if grid is None:
            raise ValueError("a callable multiplier needs a grid")
        return np.asarray(mult(grid.points()), dtype=complex).reshape(size)
    vals = np.asarray(mult, dtype=complex)
    if vals.shape[-1] != size:
        raise ValueError(f"multiplier has {vals.shape[-1]} values, grid has {size}")
    return vals


def _power_iterate(apply_tth, apply_th, size, k, seed, tol, max_iter):
    """Batched power iteration on ``T T^*``; column ``i`` belongs to multiplier ``i``."""
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((size, k)) + 1j * rng.standard_normal((size, k))
    y /= np.linalg.norm(y, axis=0)
    est = np.zeros(k)
    iters = np.zeros(k, dtype=int)
    done = np.zeros(k, dtype=bool)
    active = np.arange(k)
    for it in range(1, max_iter + 1):
        cols = active
        z = apply_th(y[:, cols], cols)
        new = np.linalg.norm(z, axis=0)
        w = apply_tth(z, cols)
        nw = np.linalg.norm(w, axis=0)
        small = nw == 0
        nw[small] = 1.0
        y[:, cols] = w / nw
        change = np.abs(new - est[cols]) <= tol * np.maximum(new, 1e-300)
        est[cols] = new
        iters[cols] = it
        finished = change | small
        done[cols[finished]] = True
        active = cols[~finished]
        if active.size == 0:
            break
    return est, iters, done, y


def multiplier_norms(mults, alpha: float, grid: Grid, op: GridOperator | None = None,
                     seed: int = 0, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER
                     ) -> list[NormResult]:
    """Norms of ``(1+Delta_h)^{a/2} M_m (1+Delta_h)^{-a/2}`` for each row of ``mults``."""
    op = op if op is not None else assemble_sublaplacian(grid)
    vals = np.atleast_2d(_node_values(mults, grid, op.size))
    k = vals.shape[0]
    if alpha == 0:
        # a multiplication operator: its norm is the max modulus
        return [NormResult(float(np.abs(v).max()), 0, True) for v in vals]
    if op.size <= DENSE_LIMIT:
        lam, V = op.eigh()
        fa = _power_symbol(alpha)(lam)[:, None]
        mT = vals.T

        def W(y, cols, conj=False):
            m = mT[:, cols].conj() if conj else mT[:, cols]
            return V.T @ (m * (V @ y))

        def apply_th(y, cols):          # T^* = F_{-a} W^* F_a in eigen-coordinates
            return W(fa * y, cols, conj=True) / fa

        def apply_tth(z, cols):         # T = F_a W F_{-a}
            return fa * W(z / fa, cols)
    else:
        up, down = sobolev_power(op, alpha), sobolev_power(op, -alpha)

        def apply_th(y, cols):
            return down.apply(vals[cols].T.conj() * up.apply(y))

        def apply_tth(z, cols):
            return up.apply(vals[cols].T * down.apply(z))

    est, iters, done, _ = _power_iterate(apply_tth, apply_th, op.size, k, seed, tol, max_iter)
    return [NormResult(float(e), int(i), bool(c)) for e, i, c in zip(est, iters, done)]


def multiplier_norm(mult, alpha: float, grid: Grid, op: GridOperator | None = None,
                    seed: int = 0, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER,
                    strict: bool = True) -> NormResult:
    """Spectral norm of ``(1+Delta_h)^{a/2} M_m (1+Delta_h)^{-a/2}``.

    ``mult`` is a callable on :class:`HeisenbergPoint` batches or an array of node
    values.  With ``strict`` a non-converged run raises :class:`ConvergenceError`.
    """
    res = multiplier_norms(mult, alpha, grid, op, seed, tol, max_iter)[0]
    if strict and not res.converged:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} steps",
                               res.norm, np.empty(0), res.iters)
    return res


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

SCAN_COLUMNS = ("field", "n", "Q", "m", "L", "alpha", "t", "b", "norm", "iters", "converged")


@dataclass(frozen=True)
class ScanRow:
    field: str
    n: int
    Q: int
    m: int
    L: float
    alpha: float
    t: float
    b: float
    norm: float
    iters: int
    converged: bool

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in SCAN_COLUMNS)


@dataclass
class ScanResult:
    rows: list[ScanRow]
    beta_b: float | None = None
    slope_t: float | None = None
    residuals: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    def table(self) -> dict[tuple[float, float], float]:
        return {(r.t, r.b): r.norm for r in self.rows}

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.rows)


def resolve_alpha(alpha, ctx: CocycleContext) -> float:
    """``"Qhalf"`` (or None) means ``Q/2``."""
    if alpha is None or (isinstance(alpha, str) and alpha.lower() == "qhalf"):
        return ctx.Q / 2
    return float(alpha)


def phase_multiplier(points: HeisenbergPoint, t: float, b: float) -> np.ndarray:
    """``B_t^{ib} B^{-ib}`` at the given points."""
    return np.exp(1j * b * (np.log(B_t(points, t)) - np.log(B(points))))


def _scan(grid, cutoff_values, t_list, b_list, alpha, seed, op, tol, max_iter):
    ctx = grid.ctx
    op = op if op is not None else assemble_sublaplacian(grid)
    pts = grid.points()
    rows = []
    for t in t_list:
        mults = np.stack([cutoff_values * phase_multiplier(pts, t, b) for b in b_list])
        res = multiplier_norms(mults, alpha, grid, op, seed, tol, max_iter)
        for b, r in zip(b_list, res):
            rows.append(ScanRow(str(grid.tag), grid.n, ctx.Q, grid.m, float(grid.L),
                                float(alpha), float(t), float(b), r.norm, r.iters, r.converged))
    return rows, op


def _lstsq_slope(x, y) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        return 0.0, 0.0
    Amat = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(Amat, y, rcond=None)
    resid = y - Amat @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def fit_growth(rows: Sequence[ScanRow]) -> tuple[float, float, dict, dict]:
    """Exponent of ``(1+|b|)`` per t and slope in t over the upper half of the t values.

    Returns the maxima over t (resp. b) with per-line fits and RMS residuals.
    """
    ts = sorted({r.t for r in rows})
    bs = sorted({r.b for r in rows})
    norm = {(r.t, r.b): r.norm for r in rows}
    beta_by_t, res_b = {}, {}
    for t in ts:
        x = [math.log1p(abs(b)) for b in bs]
        y = [math.log(max(norm[(t, b)], 1e-300)) for b in bs]
        beta_by_t[t], res_b[t] = _lstsq_slope(x, y)
    upper = [t for t in ts if t >= ts[0] + (ts[-1] - ts[0]) / 2]
    slope_by_b, res_t = {}, {}
    for b in bs:
        y = [math.log(max(norm[(t, b)], 1e-300)) for t in upper]
        slope_by_b[b], res_t[b] = _lstsq_slope(upper, y)
    beta = max(beta_by_t.values()) if beta_by_t else 0.0
    slope = max(slope_by_b.values()) if slope_by_b else 0.0
    residuals = {"beta_b": {str(k): v for k, v in res_b.items()},
                 "slope_t": {str(k): v for k, v in res_t.items()}}
    fits = {"beta_b": {str(k): v for k, v in beta_by_t.items()},
            "slope_t": {str(k): v for k, v in slope_by_b.items()},
            "t_fit_range": [upper[0], upper[-1]] if upper else []}
    return beta, slope, residuals, fits


def growth_scan(ctx: CocycleContext, grid: Grid, cutoff, t_list, b_list, seed: int = 0,
                alpha="Qhalf", op: GridOperator | None = None, tol: float = POWER_TOL,
                max_iter: int = POWER_MAX_ITER) -> ScanResult:
    """Norms of ``chi B_t^{ib} B^{-ib}`` over the ``(t, b)`` grid, with fitted exponents."""
    if (ctx.tag, ctx.n) != (grid.tag, grid.n):
        raise ValueError("context and grid describe different groups")
    if any(t < 0 or t > 6 for t in t_list):
        raise ValueError("t values must lie in [0, 6]")
    a = resolve_alpha(alpha, ctx)
    chi = np.asarray(cutoff(grid.points()), dtype=float)
    rows, _ = _scan(grid, chi, list(t_list), list(b_list), a, seed, op, tol, max_iter)
    beta, slope, residuals, fits = fit_growth(rows)
    return ScanResult(rows, beta, slope, residuals, fits)


@dataclass
class AnnulusResult:
    rows: list[ScanRow]
    ratio: float


def annulus_boundedness(ctx: CocycleContext, grid: Grid, annulus, t_list, b: float,
                        seed: int = 0, alpha="Qhalf", op: GridOperator | None = None,
                        tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> AnnulusResult:
    """Norms of ``psi B_t^{ib} B^{-ib}`` along ``t_list`` and their max/min ratio."""
    if (ctx.tag, ctx.n) != (grid.tag, grid.n):
        raise ValueError("context and grid describe different groups")
    a = resolve_alpha(alpha, ctx)
    psi = np.asarray(annulus(grid.points()), dtype=float)
    rows, _ = _scan(grid, psi, list(t_list), [b], a, seed, op, tol, max_iter)
    norms = np.array([r.norm for r in rows])
    if norms.max() == 0:
        ratio = 1.0
    else:
        ratio = float(norms.max() / norms.min()) if norms.min() > 0 else math.inf
    return AnnulusResult(rows, ratio)
