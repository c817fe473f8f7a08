import math

import numpy as np
import pytest
import scipy.sparse as sp

from edgegrowth import heisenberg as hb
from edgegrowth import spectral as spc
from edgegrowth.boundary import AnnulusCutoff, CocycleContext, SmoothCutoff


@pytest.fixture(scope="module")
def grid_c():
    return spc.Grid("C", 2, 3.0, 7)


@pytest.fixture(scope="module")
def op_c(grid_c):
    return spc.assemble_sublaplacian(grid_c)


def smooth_bump(grid, radius=1.5, shift=0.0):
    cut = SmoothCutoff.at_origin(grid.ctx, radius / 2, radius)
    x = grid.nodes()[:, 0]
    return cut(grid.points()) * (1.0 + 0.3 * np.sin(x + shift))


# ---------------------------------------------------------------------------
# grid and assembly
# ---------------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        spc.Grid("C", 2, 3.0, 3)
    with pytest.raises(ValueError):
        spc.Grid("C", 2, 3.0, 8)
    with pytest.raises(ValueError):
        spc.Grid("C", 2, 0.0, 7)


def test_grid_nodes(grid_c):
    nodes = grid_c.nodes()
    assert nodes.shape == (7 ** 3, 3)
    assert grid_c.h == 1.0
    assert np.array_equal(nodes[0], [-3, -3, -3]) and np.array_equal(nodes[-1], [3, 3, 3])
    # the origin is the central node
    assert np.array_equal(nodes[grid_c.size // 2], [0, 0, 0])
    assert np.array_equal(spc.Grid("C", 2, 3.0, 7).nodes(), nodes)


def test_sublaplacian_symmetric_psd(grid_c, op_c, rng):
    M = op_c.dense()
    assert np.abs(M - M.T).max() < 1e-12
    lam, _ = op_c.eigh()
    assert lam.min() >= -1e-10
    v = rng.standard_normal((op_c.size, 1000))
    assert np.all(np.einsum("ij,ij->j", v, op_c.apply(v)) >= 0)


def test_sublaplacian_is_sum_of_squares(grid_c, op_c, rng):
    v = rng.standard_normal(op_c.size)
    fields = spc.horizontal_fields(grid_c)
    assert len(fields) == grid_c.nx
    energy = sum(np.sum((E @ v) ** 2) for E in fields)
    assert math.isclose(v @ op_c.apply(v), energy, rel_tol=1e-12)


def test_constant_is_annihilated_in_interior(field):
    n = 3 if field == "R" else 2
    grid = spc.Grid(field, n, 3.0, 9 if field != "H" else 5)
    op = spc.assemble_sublaplacian(grid)
    out = op.apply(np.ones(grid.size))
    idx = np.rint((grid.nodes() + grid.L) / grid.h).astype(int)
    interior = np.all((idx >= 2) & (idx <= grid.m - 3), axis=1)
    assert interior.any()
    assert np.abs(out[interior]).max() < 1e-12


def test_real_case_dispersion():
    m, L = 11, 2.0
    grid = spc.Grid("R", 2, L, m)
    lam = np.sort(np.linalg.eigvalsh(spc.assemble_sublaplacian(grid).dense()))
    k = np.arange(1, m + 1)
    expect = np.sort(2 * (1 - np.cos(k * np.pi / (m + 1))) / grid.h ** 2)
    assert np.allclose(lam, expect, atol=1e-10)
    # two dimensions: sums of one-dimensional eigenvalues
    grid2 = spc.Grid("R", 3, L, m)
    lam2 = np.sort(np.linalg.eigvalsh(spc.assemble_sublaplacian(grid2).dense()))
    assert np.allclose(lam2, np.sort((expect[:, None] + expect[None, :]).ravel()), atol=1e-9)


def test_context_mismatch(grid_c):
    with pytest.raises(ValueError):
        spc.assemble_sublaplacian(grid_c, CocycleContext.of("H", 2))


# ---------------------------------------------------------------------------
# functional calculus
# ---------------------------------------------------------------------------

def test_sobolev_power_identities(op_c, rng):
    size = op_c.size
    assert np.allclose(spc.sobolev_power(op_c, 0).dense(), np.eye(size))
    two = spc.sobolev_power(op_c, 2).dense()
    assert np.abs(two - (np.eye(size) + op_c.dense())).max() < 1e-10
    v = rng.standard_normal(size)
    a, b = 1.3, 0.6
    comp = spc.sobolev_power(op_c, a).apply(spc.sobolev_power(op_c, b).apply(v))
    assert np.allclose(comp, spc.sobolev_power(op_c, a + b).apply(v), rtol=1e-8, atol=1e-8)
    inv = spc.sobolev_power(op_c, 2.0).apply(spc.sobolev_power(op_c, -2.0).apply(v))
    assert np.abs(inv - v).max() < 1e-8


def test_lanczos_matches_dense(op_c, rng):
    v = rng.standard_normal(op_c.size)
    f = spc._power_symbol(1.5)
    lam, V = op_c.eigh()
    dense = V @ (f(lam) * (V.T @ v))
    assert np.allclose(spc.lanczos_function(op_c, f, v), dense, rtol=1e-8, atol=1e-8)
    w = v + 1j * rng.standard_normal(op_c.size)
    assert np.allclose(spc.lanczos_function(op_c, f, w), V @ (f(lam) * (V.T @ w)), atol=1e-8)
    assert np.array_equal(spc.lanczos_function(op_c, f, np.zeros(op_c.size)),
                          np.zeros(op_c.size))


def test_dense_limit(monkeypatch, op_c):
    monkeypatch.setattr(spc, "DENSE_LIMIT", 100)
    fresh = spc.GridOperator(op_c.size, matrix=op_c.matrix)
    with pytest.raises(MemoryError):
        fresh.eigh()
    assert fresh.matrix is not None and spc.sobolev_power(fresh, 1.0).apply_fn is not None


# ---------------------------------------------------------------------------
# multiplier norms
# ---------------------------------------------------------------------------

def test_norm_of_one(grid_c, op_c):
    r = spc.multiplier_norm(np.ones(grid_c.size), 2.0, grid_c, op_c)
    assert r.converged and abs(r.norm - 1) < 1e-6


def test_alpha_zero_is_max_modulus(grid_c, op_c, rng):
    m = rng.standard_normal(grid_c.size) + 1j * rng.standard_normal(grid_c.size)
    assert spc.multiplier_norm(m, 0, grid_c, op_c).norm == np.abs(m).max()


def test_callable_and_array_agree(grid_c, op_c):
    cut = SmoothCutoff.at_origin(grid_c.ctx, 0.75, 1.5)
    a = spc.multiplier_norm(cut, 2.0, grid_c, op_c).norm
    b = spc.multiplier_norm(cut(grid_c.points()), 2.0, grid_c, op_c).norm
    assert a == b


def test_power_iteration_matches_svd(grid_c, op_c):
    m = smooth_bump(grid_c)
    lam, V = op_c.eigh()
    alpha = grid_c.ctx.Q / 2
    up = (V * (1 + lam) ** (alpha / 2)) @ V.T
    down = (V * (1 + lam) ** (-alpha / 2)) @ V.T
    exact = np.linalg.norm(up @ (m[:, None] * down), 2)
    got = spc.multiplier_norm(m, alpha, grid_c, op_c).norm
    assert abs(got - exact) <= 1e-5 * exact


def test_submultiplicative(grid_c, op_c):
    for shift in (0.0, 1.0, 2.5):
        m1 = smooth_bump(grid_c, 2.0, shift)
        m2 = smooth_bump(grid_c, 1.5, -shift) + 0.2j
        n1, n2, n12 = (spc.multiplier_norm(m, 2.0, grid_c, op_c, tol=1e-9).norm
                       for m in (m1, m2, m1 * m2))
        assert n12 <= n1 * n2 * (1 + 1e-6)


def test_adjoint_identity(grid_c, op_c):
    pts = grid_c.points()
    m = smooth_bump(grid_c) * spc.phase_multiplier(pts, 1.0, 3.0)
    a = spc.multiplier_norm(m, 2.0, grid_c, op_c, tol=1e-9).norm
    b = spc.multiplier_norm(np.conj(m), -2.0, grid_c, op_c, tol=1e-9).norm
    assert abs(a - b) <= 1e-6 * a


def test_lanczos_path_agrees(monkeypatch):
    grid = spc.Grid("C", 2, 2.0, 5)
    op = spc.assemble_sublaplacian(grid)
    m = smooth_bump(grid)
    dense = spc.multiplier_norm(m, 1.0, grid, op, tol=1e-9).norm
    monkeypatch.setattr(spc, "DENSE_LIMIT", 50)
    fresh = spc.GridOperator(op.size, matrix=op.matrix)
    krylov = spc.multiplier_norm(m, 1.0, grid, fresh, tol=1e-9).norm
    assert abs(krylov - dense) <= 1e-6 * dense


def test_convergence_error(grid_c, op_c):
    m = smooth_bump(grid_c) * spc.phase_multiplier(grid_c.points(), 2.0, 5.0)
    with pytest.raises(spc.ConvergenceError) as err:
        spc.multiplier_norm(m, 2.0, grid_c, op_c, max_iter=2)
    assert err.value.iters == 2 and err.value.estimate > 0
    loose = spc.multiplier_norm(m, 2.0, grid_c, op_c, max_iter=2, strict=False)
    assert not loose.converged


def test_resolve_alpha():
    ctx = CocycleContext.of("H", 2)
    assert spc.resolve_alpha("Qhalf", ctx) == 5.0
    assert spc.resolve_alpha(None, ctx) == 5.0
    assert spc.resolve_alpha(1.5, ctx) == 1.5


def test_phase_multiplier_unimodular(grid_c):
    pts = grid_c.points()
    ph = spc.phase_multiplier(pts, 2.0, 7.0)
    assert np.allclose(np.abs(ph), 1.0)
    assert np.array_equal(spc.phase_multiplier(pts, 0.0, 7.0), np.ones(grid_c.size))


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

def test_growth_scan_trivial_rows(grid_c, op_c):
    cut = SmoothCutoff.at_origin(grid_c.ctx, 0.75, 1.5)
    res = spc.growth_scan(grid_c.ctx, grid_c, cut, [0.0, 1.0, 2.0], [0.0, 4.0], op=op_c)
    tab = res.table()
    assert res.converged and len(res.rows) == 6
    assert abs(tab[(1.0, 0.0)] - tab[(0.0, 0.0)]) < 1e-6 * tab[(0.0, 0.0)]
    assert abs(tab[(2.0, 0.0)] - tab[(0.0, 0.0)]) < 1e-6 * tab[(0.0, 0.0)]
    assert abs(tab[(0.0, 4.0)] - tab[(0.0, 0.0)]) < 1e-6 * tab[(0.0, 0.0)]
    assert res.rows[0].as_tuple()[:6] == ("C", 2, 4, 7, 3.0, 2.0)


def test_growth_scan_validation(grid_c):
    cut = SmoothCutoff.at_origin(grid_c.ctx, 0.75, 1.5)
    with pytest.raises(ValueError):
        spc.growth_scan(grid_c.ctx, grid_c, cut, [7.0], [0.0])
    with pytest.raises(ValueError):
        spc.growth_scan(CocycleContext.of("H", 2), grid_c, cut, [1.0], [0.0])


def test_fit_growth_recovers_synthetic_rates():
    rows = [spc.ScanRow("C", 2, 4, 17, 3.0, 2.0, t, b,
                        (1 + b) ** 1.7 * math.exp(0.2 * t), 1, True)
            for t in (0, 1, 2, 3, 4) for b in (0, 2, 4, 8)]
    beta, slope, residuals, fits = spc.fit_growth(rows)
    assert math.isclose(beta, 1.7, rel_tol=1e-9)
    assert math.isclose(slope, 0.2, rel_tol=1e-9)
    assert fits["t_fit_range"] == [2, 4]
    assert max(residuals["beta_b"].values()) < 1e-12


def test_annulus_trivial(grid_c, op_c):
    ctx = grid_c.ctx
    ann = AnnulusCutoff.at_origin(ctx, 0.5, 1.0, 2.0, 2.5)
    zero = spc.annulus_boundedness(ctx, grid_c, lambda p: np.zeros(p.batch_shape), [1.0, 2.0],
                                   5.0, op=op_c)
    assert all(r.norm == 0 for r in zero.rows) and zero.ratio == 1.0
    flat = spc.annulus_boundedness(ctx, grid_c, ann, [1.0, 3.0, 5.0], 0.0, op=op_c)
    assert flat.ratio < 1 + 1e-6
    # psi vanishes near the origin
    assert ann(hb.origin("C", 2)) == 0
