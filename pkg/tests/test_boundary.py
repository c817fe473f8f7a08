import math
from fractions import Fraction

import numpy as np
import pytest

from edgegrowth import algebra as alg
from edgegrowth import boundary as bd
from edgegrowth import group as grp
from edgegrowth import heisenberg as hb
from edgegrowth.experiments import cocycle_errors, random_points_in_gauge_ball
from edgegrowth.heisenberg import HeisenbergPoint


def ctx_of(field, n=2):
    return bd.CocycleContext.of(field, n)


def test_context_q():
    assert bd.CocycleContext.of("H", 4).Q == 18
    assert bd.CocycleContext.of("C", 4).Q == 8
    assert bd.CocycleContext.of("R", 4).Q == 3
    with pytest.raises(ValueError):
        bd.CocycleContext.of("C", 1)


def test_cayley_examples(field, rng):
    o = bd.cayley(hb.origin(field, 3))
    assert np.array_equal(o, grp.pole(field, 3))
    p = hb.random_points(field, 3, 10_000, rng, scale=2.0)
    assert np.allclose(alg.vec_norm(bd.cayley(p)), 1.0, atol=1e-12)


def test_cayley_is_orbit_map(field, rng):
    p = hb.random_points(field, 3, 1000, rng)
    o = grp.pole(field, 3)
    C = bd.cayley(p)
    for k in range(0, 1000, 10):
        via_group = grp.act_on_boundary(hb.exp_to_group(p[k]), o)
        assert np.abs(via_group - C[k]).max() < 1e-12


def test_inverse_cayley(field, rng):
    p = hb.random_points(field, 3, 200, rng)
    q = bd.inverse_cayley(bd.cayley(p))
    assert np.allclose(q.X, p.X, atol=1e-9) and np.allclose(q.Z, p.Z, atol=1e-9)


def test_b_and_b_t(field, rng):
    o = hb.origin(field, 2)
    assert bd.B(o) == 1
    assert bd.B_t(o, 1.3) == pytest.approx(math.exp(-5.2))
    p = hb.random_points(field, 2, 100_000, rng, scale=1.5)
    t = rng.uniform(0, 10, 100_000)
    bt = bd.B_t(p, t)
    assert np.all(bt >= np.exp(-4 * t) * (1 - 1e-14))
    assert np.all(bt >= hb.gauge(p) ** 4 * (1 - 1e-14))
    assert np.allclose(bd.B_t(p, 0.0), bd.B(p))


def test_busemann_examples(field, rng):
    tag = alg.field_tag(field)
    x = 0.4 * rng.standard_normal((3, tag.dim)) / 3
    zeta = rng.standard_normal((3, tag.dim))
    zeta /= alg.vec_norm(zeta)
    assert bd.busemann(x, x, zeta) == pytest.approx(0.0, abs=1e-14)
    t = 0.8
    y = grp.act_on_disk(grp.a_t(t, field, 3), grp.origin(field, 3))
    zn = zeta[-1]
    expected = math.log(alg.fabs(alg.freal(math.cosh(t), tag.dim) - math.sinh(t) * zn))
    assert bd.busemann(grp.origin(field, 3), y, zeta) == pytest.approx(expected, abs=1e-13)


def test_busemann_telescopes(field, rng):
    tag = alg.field_tag(field)
    pts = [0.3 * rng.standard_normal((3, tag.dim)) / 2 for _ in range(3)]
    zeta = rng.standard_normal((3, tag.dim))
    zeta /= alg.vec_norm(zeta)
    x, y, w = pts
    total = bd.busemann(x, y, zeta) + bd.busemann(y, w, zeta)
    assert total == pytest.approx(bd.busemann(x, w, zeta), abs=1e-13)
    # lifts are defined up to scale
    scaled = bd.busemann(x, y, zeta)
    assert np.isfinite(scaled)


def test_busemann_rejects_boundary_base():
    o = grp.pole("C", 2)
    with pytest.raises(ValueError):
        bd.busemann(o, grp.origin("C", 2), o)


def test_lambda_examples(field):
    o = grp.pole(field, 2)
    assert bd.lambda_g(grp.identity(field, 2), o) == pytest.approx(1.0)
    assert bd.lambda_g(grp.a_t(1.7, field, 2), o) == pytest.approx(math.exp(1.7), rel=1e-14)


@pytest.mark.parametrize("field", ["R", "C", "H"])
def test_cocycle_formula(field):
    errs = cocycle_errors(ctx_of(field), samples=2000, tmax=10.0, seed=5)
    assert errs["lemma_rel_err"] < 1e-9
    assert errs["remark_rel_err"] < 1e-9
    assert errs["chain_rel_err"] < 1e-9


def test_cocycle_formula_float64_loses_digits():
    """Documents why the matrix path runs in extended precision."""
    p = HeisenbergPoint(np.array([[1e-3, 0.0]]), np.zeros(2))
    t = 10.0
    exact = float(bd.lambda_at_cayley(p, t))
    cheap = float(bd.lambda_at_cayley_matrix(p, t, dtype=np.float64))
    careful = float(bd.lambda_at_cayley_matrix(p, t))
    assert abs(careful - exact) / exact < abs(cheap - exact) / exact + 1e-15
    assert abs(careful - exact) / exact < 1e-9


def test_z_n_matches_cayley(field, rng):
    p = hb.random_points(field, 3, 10_000, rng)
    assert np.abs(bd.z_n_of_cayley(p) - bd.cayley(p)[:, -1, :]).max() < 1e-12
    assert np.array_equal(bd.z_n_of_cayley(hb.origin(field, 3)), alg.freal(1.0, alg.field_tag(field).dim))


def test_remark_chain_exact():
    X = np.array([[Fraction(1, 3), Fraction(-2, 5), Fraction(1, 7), Fraction(3, 2)]], dtype=object)
    Z = np.array([0, Fraction(1, 2), Fraction(-1, 3), Fraction(2, 9)], dtype=object)
    for r in (Fraction(1, 2), Fraction(99, 100), Fraction(999_999, 1_000_000)):
        a, b, c = bd.remark_chain_exact(HeisenbergPoint(X, Z), r)
        assert a == b == c


def test_remark_chain_float(field, rng):
    p = random_points_in_gauge_ball(ctx_of(field), 500, 4.0, rng)
    for k in range(500):
        t = rng.uniform(0, 3)
        first, second, third = bd.remark_chain(p[k], t)
        assert first == pytest.approx(third, rel=1e-9)
        assert second == pytest.approx(third, rel=1e-9)


def test_overflow_guard():
    with pytest.raises(OverflowError):
        bd.lambda_at_cayley_matrix(hb.origin("C", 2), 301.0)


def test_jacobians():
    ctx = ctx_of("H")
    o = hb.origin("H", 2)
    assert bd.jacobian_cayley(o, ctx) == 1
    p = HeisenbergPoint(np.array([[0.5, -1.0, 0.2, 0.0]]), np.array([0, 0.3, 0, -0.1]))
    assert bd.jacobian_cayley(p, ctx) == pytest.approx(float(bd.B(p)) ** -5)
    assert bd.jacobian_dilation(0.7, ctx) == pytest.approx(math.exp(7.0))


@pytest.mark.parametrize("field", ["R", "C", "H"])
def test_numeric_jacobian_proportional_to_b_power(field, rng):
    """Round-sphere Jacobian of the Cayley map (by finite differences) over B^{-Q/2}."""
    ctx = ctx_of(field, 3)
    D = ctx.dim
    pts = hb.random_points(field, 3, 100, rng)
    h = 1e-6
    ratios = []
    for k in range(100):
        x = pts[k].to_real()
        cols = []
        for a in range(D):
            e = np.zeros(D)
            e[a] = h
            up = bd.cayley(HeisenbergPoint.from_real(x + e, field, 3)).ravel()
            dn = bd.cayley(HeisenbergPoint.from_real(x - e, field, 3)).ravel()
            cols.append((up - dn) / (2 * h))
        J = np.stack(cols, axis=1)
        vol = math.sqrt(np.linalg.det(J.T @ J))
        ratios.append(vol / (hb.haar_weight(field) * float(bd.jacobian_cayley(pts[k], ctx))))
    ratios = np.array(ratios)
    assert ratios.std() / ratios.mean() < 1e-6


def test_smooth_cutoff():
    ctx = ctx_of("C")
    chi = bd.SmoothCutoff.at_origin(ctx, 0.5, 1.0)
    pts = HeisenbergPoint(np.array([[[0.2, 0.1]], [[1.5, 0]], [[3.0, 0]]]),
                          np.zeros((3, 2)))
    vals = chi(pts)
    assert vals[0] == 1.0 and 0 < vals[1] < 1 and vals[2] == 0.0
    with pytest.raises(ValueError):
        bd.SmoothCutoff.at_origin(ctx, 1.0, 0.5)


def test_smooth_cutoff_derivatives_bounded(rng):
    """Horizontal derivatives up to order 6 stay finite on the support."""
    ctx = ctx_of("C")
    chi = bd.SmoothCutoff.at_origin(ctx, 0.5, 1.0)
    pts = random_points_in_gauge_ball(ctx, 200, 1.1, rng)
    f = chi
    for order in range(1, 7):
        g = f
        f = lambda q, g=g: hb.horizontal_derivative(g, 0, q, h=0.02)
    vals = f(pts)
    assert np.all(np.isfinite(vals))


def test_annulus_vanishes_inside():
    ctx = ctx_of("C")
    psi = bd.AnnulusCutoff.at_origin(ctx, 1.0, 1.5, 2.5, 3.0)
    pts = HeisenbergPoint(np.array([[[0.5, 0]], [[4.0, 0]], [[7.0, 0]]]), np.zeros((3, 2)))
    assert list(psi(pts)) == [0.0, 1.0, 0.0]


def test_quadrature_constant_and_errors():
    ctx = ctx_of("H")
    est = bd.quadrature_mu0(lambda z: np.ones(z.shape[0]), 1000, 1, ctx)
    assert est == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        bd.quadrature_mu0(lambda z: np.ones(z.shape[0]), 0, 1, ctx)
    with pytest.raises(ValueError):
        bd.quadrature_mu0(lambda z: np.full(z.shape[0], np.nan), 100, 1, ctx)


def test_quadrature_deterministic():
    ctx = ctx_of("C")
    f = lambda z: z[:, -1, 0] ** 2
    assert bd.quadrature_mu0(f, 5000, 3, ctx) == bd.quadrature_mu0(f, 5000, 3, ctx)
    a = bd.pullback_sample(ctx, 5000, 3, block_size=1000)
    b = bd.pullback_sample(ctx, 5000, 3, block_size=1000)
    assert np.array_equal(a.weights, b.weights)


@pytest.mark.parametrize("field", ["R", "C", "H"])
def test_hemisphere_half(field):
    ctx = ctx_of(field, 3)
    sample = bd.pullback_sample(ctx, 200_000, 11)
    up = (sample.zeta[:, -1, 0] > 0).astype(float)
    down = (sample.zeta[:, -1, 0] < 0).astype(float)
    assert sample.integrate(up) + sample.integrate(down) == pytest.approx(1.0)
    assert abs(sample.integrate(up) - 0.5) < 4 * sample.stderr(up)


@pytest.mark.parametrize("field", ["R", "C", "H"])
def test_quadrature_change_of_variables(field, rng):
    ctx = ctx_of(field, 2)
    samples = 200_000
    g = grp.random_element(field, 2, rng, t_max=0.3)
    f = lambda z: 1 + z[:, 0, 0] ** 2 + 0.5 * np.sin(3 * z[:, -1, 0])
    sample = bd.pullback_sample(ctx, samples, 4)
    g_inv = g.inverse()
    moved = f(grp.act_on_boundary(g_inv, sample.zeta)) * bd.lambda_g(g, sample.zeta) ** ctx.Q
    lhs = sample.integrate(moved)
    rhs = sample.integrate(f(sample.zeta))
    assert abs(lhs - rhs) / abs(rhs) < 3 / math.sqrt(samples)
