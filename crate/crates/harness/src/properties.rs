//! Seeded structural checks: splitting, substitution, Bregman identities,
//! strong Lyapunov inequalities and the saddle lemmas. Dense oracles are
//! computed here independently of the solver library.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use monosplit::agss::strong_lyapunov_gap;
use monosplit::linalg::StrictLower;
use monosplit::lyapunov::bregman;
use monosplit::saddle::{
    apply_scaling, bsym_norm_dense, choose_scaling, duality_bregman_gap, key_lemma_gap,
    positivity_matrix, schur_spectrum, strong_saddle_gap, InnerProduct, SaddleProblem,
};
use monosplit::{split_skew, LogCoshQuadratic, Matrix, MonotoneProblem, Quadratic, Vector};

use crate::error::Result;
use crate::generate::{damped_newton, geometric_spectrum, spd_with_spectrum};
use crate::report::{Assertion, Report};

pub const SUBSTITUTION_TOL: f64 = 1e-13;
pub const IDENTITY_TOL: f64 = 1e-10;
pub const LB_SADDLE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const INVARIANCE_TOL: f64 = 1e-12;

pub fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = gaussian_matrix(n, n, rng);
    &g - g.transpose()
}

fn sym_eigs(m: &Matrix) -> Vec<f64> {
    let s = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Extreme eigenvalues of the pencil `(a, m)` via `m^{-1/2} a m^{-1/2}`.
fn pencil_extremes(a: &Matrix, m: &Matrix) -> (f64, f64) {
    let e = m.clone().symmetric_eigen();
    let w = Matrix::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let r = &e.eigenvectors * w * e.eigenvectors.transpose();
    let ev = sym_eigs(&(&r * a * &r));
    (ev[0], ev[ev.len() - 1])
}

/// `lambda_max(I_Q^{-1} B I_V^{-1} B')` from dense factors.
fn dense_l_s(p: &SaddleProblem) -> f64 {
    let s = p.coupling()
        * p.i_v().to_dense().try_inverse().expect("SPD metric")
        * p.coupling().transpose();
    pencil_extremes(&s, &p.i_q().to_dense()).1
}

fn random_diag_metric(n: usize, rng: &mut ChaCha8Rng) -> Result<InnerProduct> {
    Ok(InnerProduct::diagonal(Vector::from_fn(n, |_, _| {
        rng.random_range(0.5..2.0)
    }))?)
}

/// Quadratic saddle with random spectra, coupling and diagonal metrics.
pub fn random_saddle(rng: &mut ChaCha8Rng, constrained: bool) -> Result<SaddleProblem> {
    let m = rng.random_range(4..12);
    let n = rng.random_range(2..=m);
    let kf = 10f64.powf(rng.random_range(0.0..3.0));
    let hf = spd_with_spectrum(&geometric_spectrum(m, 1.0, kf), rng);
    let qf = Quadratic::new(hf, gaussian(m, rng))?;
    let b = gaussian_matrix(n, m, rng) * 10f64.powf(rng.random_range(-1.0..1.0));
    let i_v = random_diag_metric(m, rng)?;
    let i_q = random_diag_metric(n, rng)?;
    Ok(if constrained {
        SaddleProblem::constrained_qp(qf, b, gaussian(n, rng), i_v, i_q)?
    } else {
        let kg = 10f64.powf(rng.random_range(0.0..3.0));
        let hg = spd_with_spectrum(&geometric_spectrum(n, 0.5, 0.5 * kg), rng);
        SaddleProblem::quadratic(qf, Quadratic::new(hg, gaussian(n, rng))?, b, i_v, i_q)?
    })
}

/// Monotone problem with a log-cosh term, so `F` is not quadratic.
pub fn random_logcosh(rng: &mut ChaCha8Rng) -> Result<MonotoneProblem> {
    let n = rng.random_range(2..10);
    let kf = 10f64.powf(rng.random_range(0.0..2.0));
    let eps = 0.5;
    let h = spd_with_spectrum(&geometric_spectrum(n, 1.0, kf), rng);
    let obj = LogCoshQuadratic {
        quad: Quadratic::new(h, gaussian(n, rng))?,
        eps,
    };
    let p = MonotoneProblem::new(Arc::new(obj), random_skew(n, rng), 1.0, kf + eps)?;
    let xs = damped_newton(&p, 1e-13, 100)?;
    Ok(p.with_x_star(xs)?)
}

/// `min` that propagates NaN.
fn nan_min(acc: f64, v: f64) -> f64 {
    if acc.is_nan() || v.is_nan() {
        f64::NAN
    } else {
        acc.min(v)
    }
}

/// `max` that propagates NaN.
fn nan_max(acc: f64, v: f64) -> f64 {
    if acc.is_nan() || v.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}

pub fn run_properties() -> Result<Report> {
    let mut r = Report::new("properties");
    skew_split(&mut r)?;
    substitution(&mut r)?;
    bregman_identity(&mut r)?;
    strong_acc(&mut r)?;
    strong_saddle(&mut r)?;
    positivity(&mut r)?;
    lb_saddle(&mut r)?;
    scaling(&mut r)?;
    key_lemma(&mut r)?;
    duality_gap(&mut r)?;
    Ok(r)
}

fn skew_split(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0usize;
    for i in 0..200 {
        let n = random_skew(1 + i % 40, &mut rng);
        let s = split_skew(&n)?;
        if s.reconstruct() != n || s.reconstruct_upper() != n {
            mismatches += 1;
        }
    }
    r.push(Assertion::at_most(
        "skew_split/roundtrip_mismatches",
        mismatches as f64,
        0.0,
        0.0,
    ));
    Ok(())
}

fn substitution(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let n = 1 + i % 60;
        let g = gaussian_matrix(n, n, &mut rng);
        let lower = Matrix::from_fn(n, n, |a, b| if a > b { g[(a, b)] } else { 0.0 });
        let d = 1.0 + rng.random_range(0.0..4.0);
        let c = rng.random_range(-1.0..1.0) / (n as f64).sqrt();
        let rhs = gaussian(n, &mut rng);
        let tri = StrictLower::from_dense_lower(&lower);
        let eye = Matrix::identity(n, n) * d;
        for (fast, dense) in [
            (
                tri.solve_lower(d, c, &rhs),
                (&eye + &lower * c).lu().solve(&rhs),
            ),
            (
                tri.solve_upper(d, c, &rhs),
                (&eye + lower.transpose() * c).lu().solve(&rhs),
            ),
        ] {
            let dense = dense.expect("nonsingular triangular system");
            worst = nan_max(
                worst,
                (&fast - &dense).norm() / dense.norm().max(f64::MIN_POSITIVE),
            );
        }
    }
    r.push(Assertion::at_most(
        "substitution/relative_error_vs_dense",
        worst,
        0.0,
        SUBSTITUTION_TOL,
    ));
    Ok(())
}

fn bregman_identity(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = random_logcosh(&mut rng)?;
        let f = p.objective().as_ref();
        for _ in 0..20 {
            let (x, y, z) = (
                gaussian(p.dim(), &mut rng),
                gaussian(p.dim(), &mut rng),
                gaussian(p.dim(), &mut rng),
            );
            let lhs = bregman(f, &x, &z)?;
            let rhs = bregman(f, &x, &y)?
                + bregman(f, &y, &z)?
                + (f.gradient(&y) - f.gradient(&z)).dot(&(&x - &y));
            worst = nan_max(worst, (lhs - rhs).abs() / lhs.abs().max(1.0));
        }
    }
    r.push(Assertion::at_most(
        "bregman/three_term_identity",
        worst,
        0.0,
        IDENTITY_TOL,
    ));
    Ok(())
}

fn strong_acc(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let p = random_logcosh(&mut rng)?;
        for _ in 0..20 {
            let (x, y) = (gaussian(p.dim(), &mut rng), gaussian(p.dim(), &mut rng));
            worst = nan_min(worst, strong_lyapunov_gap(&p, &x, &y)?);
        }
    }
    r.push(
        Assertion::at_least("strong_lyapunov/acc_min_slack", worst, 0.0, IDENTITY_TOL)
            .with_detail("1000 random states on 50 log-cosh problems"),
    );
    Ok(())
}

fn strong_saddle(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let p = random_saddle(&mut rng, false)?;
        for _ in 0..20 {
            let (x, y) = (gaussian(p.dim(), &mut rng), gaussian(p.dim(), &mut rng));
            worst = nan_min(worst, strong_saddle_gap(&p, &x, &y)?);
        }
    }
    r.push(
        Assertion::at_least("strong_lyapunov/saddle_min_slack", worst, 0.0, IDENTITY_TOL)
            .with_detail("1000 random states on 50 strongly convex-concave quadratic saddles"),
    );
    Ok(())
}

fn positivity(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let p = random_saddle(&mut rng, false)?;
        let c = p.consts();
        let alpha = (c.mu_f * c.mu_g / (4.0 * dense_l_s(&p))).sqrt();
        let k = positivity_matrix(&p, alpha);
        let scale = c.mu_f.max(c.mu_g);
        worst = nan_min(worst, sym_eigs(&k)[0] / scale);
    }
    r.push(
        Assertion::at_least("positivity/min_eigenvalue", worst, 0.0, POSITIVITY_TOL)
            .with_detail("100 random saddles at alpha = sqrt(mu_f mu_g / (4 L_S))"),
    );
    Ok(())
}

fn lb_saddle(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_saddle(&mut rng, false)?;
        let c = p.consts();
        let direct = bsym_norm_dense(&p)?;
        let via_s = schur_spectrum(&p)?.bsym_norm(c.mu_f, c.mu_g);
        let oracle = (dense_l_s(&p) / (c.mu_f * c.mu_g)).sqrt();
        worst = nan_max(
            nan_max(worst, (direct - via_s).abs() / direct),
            (oracle - via_s).abs() / oracle,
        );
    }
    r.push(Assertion::at_most(
        "lb_saddle/two_way_relative_gap",
        worst,
        0.0,
        LB_SADDLE_TOL,
    ));
    Ok(())
}

fn scaling(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = 0usize;
    let mut worst_margin = f64::INFINITY;
    let mut worst_invariance = 0.0f64;
    let mut worst_recheck = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    for i in 0..50 {
        let p = random_saddle(&mut rng, i % 2 == 0)?;
        let spectrum = schur_spectrum(&p)?;
        let sc = choose_scaling(&p, &spectrum)?;
        let (q, spec_q) = apply_scaling(&p, &sc)?;
        let (cp, c) = (p.consts(), q.consts());
        worst_invariance = nan_max(worst_invariance, rel(spectrum.kappa_s, spec_q.kappa_s));
        worst_invariance = nan_max(worst_invariance, rel(cp.l_f / cp.mu_f, c.l_f / c.mu_f));
        if c.mu_g > 0.0 {
            worst_invariance = nan_max(worst_invariance, rel(cp.l_g / cp.mu_g, c.l_g / c.mu_g));
        }

        // dense oracle on the rescaled problem, accurate to about eps * kappa
        let s = q.coupling()
            * q.i_v().to_dense().try_inverse().expect("SPD metric")
            * q.coupling().transpose();
        let (mu_s, l_s) = pencil_extremes(&s, &q.i_q().to_dense());
        let hf = &q.f().as_quadratic().expect("quadratic f").h;
        let (mu_f, l_f) = pencil_extremes(hf, &q.i_v().to_dense());
        let (kappa_s, kappa_f) = (l_s / mu_s, l_f / mu_f);
        let lower = mu_s - (2.0 / 3.0 - c.mu_g);
        let upper = 0.5 / l_f - l_s;
        let rtol = INVARIANCE_TOL * kappa_s;
        let ok = lower >= -rtol * mu_s.max(1.0) && upper >= -rtol * l_s.max(1.0);
        if !ok || !sc.satisfied() {
            failures += 1;
        }
        worst_margin = nan_min(worst_margin, lower.min(upper));
        worst_recheck = nan_max(
            worst_recheck,
            rel(spectrum.kappa_s, kappa_s) / spectrum.kappa_s,
        );
        worst_recheck = nan_max(worst_recheck, rel(cp.l_f / cp.mu_f, kappa_f) / kappa_f);
    }
    r.push(
        Assertion::at_most(
            "choose_scaling/condition_failures",
            failures as f64,
            0.0,
            0.0,
        )
        .with_detail(format!(
            "50 random problems, smallest margin {worst_margin:e}"
        )),
    );
    r.push(Assertion::at_most(
        "choose_scaling/condition_number_invariance",
        worst_invariance,
        0.0,
        INVARIANCE_TOL,
    ));
    r.push(
        Assertion::at_most(
            "choose_scaling/dense_recheck_per_kappa",
            worst_recheck,
            0.0,
            INVARIANCE_TOL,
        )
        .with_detail("relative gap to a dense eigensolve, divided by the condition number"),
    );
    Ok(())
}

fn key_lemma(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::INFINITY;
    for i in 0..50 {
        let p = random_saddle(&mut rng, i % 2 == 0)?;
        for _ in 0..20 {
            let (u1, u2) = (gaussian(p.m(), &mut rng), gaussian(p.m(), &mut rng));
            let (p1, p2) = (gaussian(p.n(), &mut rng), gaussian(p.n(), &mut rng));
            worst = nan_min(worst, key_lemma_gap(&p, &u1, &u2, &p1, &p2)?);
        }
    }
    r.push(Assertion::at_least(
        "key_lemma/min_slack",
        worst,
        0.0,
        IDENTITY_TOL,
    ));
    Ok(())
}

fn duality_gap(r: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for i in 0..50 {
        let p = random_saddle(&mut rng, i % 2 == 0)?;
        let (us, ps) = p.x_star().expect("quadratic saddle has x*");
        let qf = p.f().as_quadratic().expect("quadratic f");
        let qg = p.g().as_quadratic().expect("quadratic g");
        let (hf, hg) = (&qf.h, &qg.h);
        for _ in 0..20 {
            let (u, q) = (gaussian(p.m(), &mut rng), gaussian(p.n(), &mut rng));
            let gap = duality_bregman_gap(&p, &u, &q)?;
            let (eu, ep) = (&u - us, &q - ps);
            let (ru, rp) = (
                hf * us - &qf.c + p.coupling().transpose() * ps,
                hg * ps - &qg.c - p.coupling() * us,
            );
            let bregman_sum = 0.5 * eu.dot(&(hf * &eu)) + 0.5 * ep.dot(&(hg * &ep));
            let oracle = bregman_sum + ru.dot(&eu) + rp.dot(&ep);
            worst = nan_max(worst, (gap - oracle).abs() / bregman_sum.max(1.0));
            min_gap = nan_min(min_gap, gap);
        }
    }
    r.push(
        Assertion::at_most("duality_gap/bregman_identity", worst, 0.0, 1e-12)
            .with_detail("first-order terms at the stored saddle point included"),
    );
    r.push(Assertion::at_least(
        "duality_gap/nonnegative",
        min_gap,
        0.0,
        IDENTITY_TOL,
    ));
    Ok(())
}
