"""One runner per CLI command.  Each takes a resolved config and returns a ResultRecord."""
from __future__ import annotations

import time
from fractions import Fraction
from typing import Callable

import numpy as np

from . import algebra as alg
from . import boundary as bd
from . import group as grp
from . import heisenberg as hb
from . import representation as rp
from . import spectral as spc
from . import symbolic as sy
from .config import ExperimentConfig, config_echo, spawn_seeds
from .report import Check, ResultRecord


def _ctx(cfg: ExperimentConfig) -> bd.CocycleContext:
    return bd.CocycleContext.of(cfg.field, cfg.n)


def random_points_in_gauge_ball(ctx, count: int, radius: float, rng) -> hb.HeisenbergPoint:
    """Points with gauge uniform in ``[0, radius]`` and Gaussian direction."""
    p = hb.random_points(ctx.tag, ctx.n, count, rng)
    target = rng.uniform(0.0, radius, count)
    scale = target / hb.gauge(p)
    return hb.HeisenbergPoint(p.X * scale[:, None, None], p.Z * scale[:, None] ** 2)


# ---------------------------------------------------------------------------
# exact and structural checks
# ---------------------------------------------------------------------------

def run_check_algebra(cfg: ExperimentConfig) -> ResultRecord:
    tag = alg.field_tag(cfg.field)
    rng = np.random.default_rng(cfg.seed)
    z = alg.random_scalars(tag, cfg.samples, rng)
    w = alg.random_scalars(tag, cfg.samples, rng)
    mult_err = float(np.max(np.abs(alg.fabs(alg.fmul(z, w)) - alg.fabs(z) * alg.fabs(w))
                            / (alg.fabs(z) * alg.fabs(w))))
    bad_conj = bad_split = 0
    for _ in range(500):
        a = alg.random_rational_scalar(tag, rng)
        b = alg.random_rational_scalar(tag, rng)
        bad_conj += alg.conj(a * b) != alg.conj(b) * alg.conj(a)
        half = (a + alg.conj(a)) / 2
        bad_split += half != alg.Scalar.of(tag, alg.re(a)) or (a - alg.conj(a)) / 2 != alg.im_part(a)
    ctx = _ctx(cfg)
    defects, qerr, lerr = [], [], []
    for _ in range(200):
        g = grp.random_element(ctx.tag, ctx.n, rng, t_max=2.0)
        defects.append(grp.membership_defect(g))
        v1 = rng.standard_normal((ctx.n + 1, tag.dim))
        v2 = rng.standard_normal((ctx.n + 1, tag.dim))
        qerr.append(float(np.abs(grp.form_q(g.apply(v1), g.apply(v2)) - grp.form_q(v1, v2)).max()))
        k1, k2 = grp.random_k(tag, ctx.n, rng), grp.random_k(tag, ctx.n, rng)
        lerr.append(abs(grp.length_l(k1 @ g @ k2) - grp.length_l(g)))
    checks = [
        Check("norm_multiplicativity_rel_err", mult_err, cfg.tol),
        Check("conj_antiautomorphism_mismatches", int(bad_conj), 0, exact=True),
        Check("re_im_split_mismatches", int(bad_split), 0, exact=True),
        Check("group_membership_defect", max(defects), grp.GROUP_TOL),
        Check("form_preservation_err", max(qerr), grp.GROUP_TOL),
        Check("length_k_biinvariance_err", max(lerr), grp.GROUP_TOL),
    ]
    return ResultRecord("check-algebra", config_echo(cfg), checks)


def cocycle_errors(ctx, samples: int, tmax: float, seed: int, radius: float = 4.0) -> dict:
    """Max relative errors of the cocycle formula and the Remark's identity."""
    rng = np.random.default_rng(seed)
    pts = random_points_in_gauge_ball(ctx, samples, radius, rng)
    ts = rng.uniform(0.0, tmax, samples)
    lemma = remark = chain = 0.0
    for i in range(samples):
        p, t = pts[i], float(ts[i])
        lam = float(bd.lambda_at_cayley_matrix(p, t))
        closed = float(bd.lambda_at_cayley(p, t))
        lemma = max(lemma, abs(lam - closed) / closed)
        first, _, third = bd.remark_chain(p, t)
        remark = max(remark, abs(lam ** -2 - float(third)) / float(third))
        chain = max(chain, abs(float(first) - float(third)) / float(third))
    return {"lemma_rel_err": lemma, "remark_rel_err": remark, "chain_rel_err": chain}


def remark_exact_mismatches(ctx, count: int, seed: int) -> int:
    """Rational points where the three Remark expressions are not all equal."""
    rng = np.random.default_rng(seed)
    d = ctx.tag.dim
    bad = 0
    for _ in range(count):
        X = np.array([[Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 8)))
                       for _ in range(d)] for _ in range(ctx.n - 1)], dtype=object)
        Z = np.array([Fraction(0)] + [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 8)))
                                      for _ in range(d - 1)], dtype=object)
        r = Fraction(int(rng.integers(1, 1000)), 1000)
        a, b, c = bd.remark_chain_exact(hb.HeisenbergPoint(X, Z), r)
        bad += not (a == b == c)
    return bad


def run_verify_cocycle(cfg: ExperimentConfig) -> ResultRecord:
    ctx = _ctx(cfg)
    errs = cocycle_errors(ctx, cfg.samples, cfg.tmax, cfg.seed)
    exact_bad = remark_exact_mismatches(ctx, 50, cfg.seed)
    checks = [Check("max_rel_err_lemma", errs["lemma_rel_err"], cfg.tol),
              Check("max_rel_err_remark", errs["remark_rel_err"], cfg.tol),
              Check("max_rel_err_remark_chain", errs["chain_rel_err"], cfg.tol),
              Check("remark_exact_mismatches", exact_bad, 0, exact=True)]
    return ResultRecord("verify-cocycle", config_echo(cfg), checks, values=errs)


def run_verify_vanishing(cfg: ExperimentConfig) -> ResultRecord:
    ctx = _ctx(cfg)
    rep = sy.verify_vanishing(ctx, 5, cfg.max_words, cfg.seed)
    checks = [Check("nonzero_length5_words", len(rep.nonzero_words), 0, exact=True)]
    return ResultRecord("verify-vanishing", config_echo(cfg), checks,
                        values={"words_checked": rep.words_checked,
                                "exhaustive": rep.exhaustive})


def derivative_constants(ctx, spec: sy.SampleSpec, orders=range(1, 6),
                         max_words: int = 1024) -> dict:
    """Preparatory and oscillatory suprema on ``spec`` and on a doubled sample."""
    out = {"prep": {}, "prep_doubled": {}, "tech": {}, "tech_doubled": {}, "bound": {}}
    for key, sp_ in (("", spec), ("_doubled", spec.doubled())):
        samples = sy.draw_samples(ctx, sp_)
        for j in orders:
            out["prep" + key][j] = sy.prep_ratio(ctx, j, sp_, samples=samples)
            out["tech" + key][j] = sy.tech_ratio(ctx, j, sp_, samples=samples,
                                                 max_words=max_words)
    for s in orders:
        out["bound"][s] = sy.partition_bound(s, out["prep"])
    return out


def _rel_change(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def run_verify_derivatives(cfg: ExperimentConfig) -> ResultRecord:
    ctx = _ctx(cfg)
    spec = sy.SampleSpec(count=cfg.samples, t_range=(0.0, cfg.tmax),
                         b_range=(cfg.b_range[0], cfg.b_range[1]), seed=cfg.seed)
    vals = derivative_constants(ctx, spec, max_words=cfg.max_words)
    checks = []
    for j in range(1, 5):
        checks.append(Check(f"prep_{j}_doubling_change",
                            _rel_change(vals["prep"][j], vals["prep_doubled"][j]), cfg.stability))
    checks.append(Check("prep_5_sup", vals["prep"][5], 0.0, exact=True))
    for s in range(1, 6):
        checks.append(Check(f"tech_{s}_doubling_change",
                            _rel_change(vals["tech"][s], vals["tech_doubled"][s]), cfg.stability))
        checks.append(Check(f"tech_{s}_over_partition_bound",
                            vals["tech"][s] / vals["bound"][s], 2.0))
    return ResultRecord("verify-derivatives", config_echo(cfg), checks, values=vals)


# ---------------------------------------------------------------------------
# spectral experiments
# ---------------------------------------------------------------------------

def _grid(cfg) -> spc.Grid:
    return spc.Grid(cfg.field, cfg.n, cfg.box, cfg.m)


def run_multiplier_norm(cfg: ExperimentConfig) -> ResultRecord:
    ctx, grid = _ctx(cfg), _grid(cfg)
    chi = bd.SmoothCutoff.at_origin(ctx, cfg.cutoff_inner, cfg.cutoff_outer)
    t, b = cfg.t_values()[0], cfg.b_values()[0]
    alpha = spc.resolve_alpha(cfg.alpha, ctx)
    pts = grid.points()
    mult = chi(pts) * spc.phase_multiplier(pts, t, b)
    res = spc.multiplier_norm(mult, alpha, grid, seed=cfg.seed, tol=cfg.tol, strict=False)
    row = spc.ScanRow(cfg.field, cfg.n, ctx.Q, cfg.m, float(cfg.box), alpha, t, b,
                      res.norm, res.iters, res.converged)
    checks = [Check("converged", float(res.converged), 1.0, exact=True)]
    return ResultRecord("multiplier-norm", config_echo(cfg), checks, rows=[row.as_tuple()])


def run_growth_scan(cfg: ExperimentConfig) -> ResultRecord:
    ctx, grid = _ctx(cfg), _grid(cfg)
    chi = bd.SmoothCutoff.at_origin(ctx, cfg.cutoff_inner, cfg.cutoff_outer)
    res = spc.growth_scan(ctx, grid, chi, cfg.t_values(), cfg.b_values(), cfg.seed,
                          cfg.alpha, tol=cfg.tol)
    beta_max = cfg.beta_max if cfg.beta_max is not None else ctx.Q / 2 + 0.5
    checks = [Check("beta_b", res.beta_b, beta_max),
              Check("slope_t", res.slope_t, cfg.slope_max),
              Check("all_converged", float(res.converged), 1.0, exact=True)]
    fits = {"beta_b": res.beta_b, "slope_t": res.slope_t, "residuals": res.residuals,
            "per_line": res.fits}
    return ResultRecord("growth-scan", config_echo(cfg), checks,
                        rows=[r.as_tuple() for r in res.rows], fits=fits)


def run_annulus_scan(cfg: ExperimentConfig) -> ResultRecord:
    ctx, grid = _ctx(cfg), _grid(cfg)
    psi = bd.AnnulusCutoff.at_origin(ctx, *cfg.annulus)
    res = spc.annulus_boundedness(ctx, grid, psi, cfg.t_values(), cfg.b_values()[0],
                                  cfg.seed, cfg.alpha, tol=cfg.tol)
    checks = [Check("max_min_ratio", res.ratio, cfg.ratio_max),
              Check("all_converged", float(all(r.converged for r in res.rows)), 1.0,
                    exact=True)]
    return ResultRecord("annulus-scan", config_echo(cfg), checks,
                        rows=[r.as_tuple() for r in res.rows], values={"ratio": res.ratio})


# ---------------------------------------------------------------------------
# representation layer
# ---------------------------------------------------------------------------

def unitarity_trials(ctx, trials: int, samples: int, seed: int, tmax: float = 1.0
                     ) -> list[rp.UnitarityCheck]:
    seeds = spawn_seeds(seed, trials)
    out = []
    for s in seeds:
        rng = np.random.default_rng(s)
        g = grp.random_element(ctx.tag, ctx.n, rng, t_max=tmax)
        f1 = rp.random_test_function(ctx, rng)
        f2 = rp.random_test_function(ctx, rng)
        out.append(rp.pi0_unitarity_check(g, f1, f2, samples, s, ctx))
    return out


def run_unitarity(cfg: ExperimentConfig) -> ResultRecord:
    ctx = _ctx(cfg)
    res = unitarity_trials(ctx, cfg.trials, cfg.samples, cfg.seed, cfg.tmax)
    threshold = cfg.tol if cfg.tol is not None else 5 / np.sqrt(cfg.samples)
    worst = max(r.rel_err for r in res)
    checks = [Check("max_rel_err", worst, float(threshold))]
    return ResultRecord("unitarity", config_echo(cfg), checks,
                        values={"rel_err": [r.rel_err for r in res],
                                "stderr": [r.stderr for r in res]})


A_GRID = (0.5, 1.0, 2.0, 4.0)
Q_GRID = (1, 4, 10)


def interpolation_checks(tol: float, eps: float = 0.1, C: float = 1.0) -> dict:
    cp_err = max(abs(rp.c_prime(A, Q) - rp.c_prime_grid(A, Q))
                 for A in A_GRID for Q in Q_GRID)
    excess = 0.0
    endpoint = 0.0
    for Q in Q_GRID:
        M1 = rp.EdgeBound(C, eps, Q)
        for A in A_GRID:
            for l_g in np.linspace(0.0, 10.0, 11):
                cap = rp.uniform_bound(M1, A, l_g)
                for t in np.linspace(0.0, 1.0, 21):
                    excess = max(excess, rp.three_lines_bound(1.0, M1, A, l_g, t) / cap - 1)
                top = rp.three_lines_weighted(1.0, M1, A, l_g, 1.0)
                endpoint = max(endpoint, abs(top - cap) / cap)
    return {"c_prime_abs_err": cp_err, "uniform_excess": max(excess, 0.0),
            "endpoint_rel_err": endpoint}


def run_interpolate(cfg: ExperimentConfig) -> ResultRecord:
    vals = interpolation_checks(cfg.tol)
    checks = [Check("c_prime_abs_err", vals["c_prime_abs_err"], cfg.tol),
              Check("uniform_excess", vals["uniform_excess"], 0.0, exact=True),
              Check("endpoint_rel_err", vals["endpoint_rel_err"], 1e-12)]
    return ResultRecord("interpolate", config_echo(cfg), checks, values=vals)


RUNNERS: dict[str, Callable[[ExperimentConfig], ResultRecord]] = {
    "check-algebra": run_check_algebra,
    "verify-cocycle": run_verify_cocycle,
    "verify-vanishing": run_verify_vanishing,
    "verify-derivatives": run_verify_derivatives,
    "multiplier-norm": run_multiplier_norm,
    "growth-scan": run_growth_scan,
    "annulus-scan": run_annulus_scan,
    "unitarity": run_unitarity,
    "interpolate": run_interpolate,
}


def run(command: str, cfg: ExperimentConfig) -> ResultRecord:
    cfg = cfg.merged(ExperimentConfig(command=command)).resolved()
    start = time.perf_counter()
    record = RUNNERS[command](cfg)
    record.wall_clock = time.perf_counter() - start
    return record
