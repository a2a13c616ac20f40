//! Seeded random instances shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use monosplit::saddle::{InnerProduct, SaddleProblem};
use monosplit::{LogCoshQuadratic, Matrix, MonotoneProblem, Quadratic, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn skew(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let g = gaussian_matrix(n, n, rng);
    (&g - g.transpose()) * scale
}

/// `Q diag(eigs) Q'` with `Q` from the QR factorization of a Gaussian matrix.
pub fn spd(eigs: &[f64], rng: &mut ChaCha8Rng) -> Matrix {
    let n = eigs.len();
    let q = gaussian_matrix(n, n, rng).qr().q();
    let h = &q * Matrix::from_diagonal(&Vector::from_row_slice(eigs)) * q.transpose();
    (&h + h.transpose()) * 0.5
}

pub fn spectrum(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if n == 1 {
                lo
            } else {
                lo * (hi / lo).powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

pub fn sym_eigs(m: &Matrix) -> Vec<f64> {
    let s = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `F = 1/2 x'Hx - c'x` plus `N`, with `x*` from a dense solve.
pub fn quadratic_skew(
    n: usize,
    kappa: f64,
    skew_scale: f64,
    rng: &mut ChaCha8Rng,
) -> MonotoneProblem {
    let h = spd(&spectrum(n, 1.0, kappa), rng);
    let c = gaussian(n, rng);
    let nm = skew(n, skew_scale, rng);
    let xs = (&h + &nm).lu().solve(&c).expect("nonsingular");
    MonotoneProblem::new(Arc::new(Quadratic::new(h, c).unwrap()), nm, 1.0, kappa)
        .unwrap()
        .with_x_star(xs)
        .unwrap()
}

/// Same operator with zero linear term, so `x* = 0`.
pub fn homogeneous(p: &MonotoneProblem) -> MonotoneProblem {
    let h = p.objective().as_quadratic().unwrap().h.clone();
    let n = p.dim();
    MonotoneProblem::new(
        Arc::new(Quadratic::new(h, Vector::zeros(n)).unwrap()),
        p.skew().clone(),
        p.mu(),
        p.l_f(),
    )
    .unwrap()
    .with_x_star(Vector::zeros(n))
    .unwrap()
}

/// Quadratic plus `eps sum log cosh`, without a known solution.
pub fn logcosh(n: usize, kappa: f64, eps: f64, rng: &mut ChaCha8Rng) -> LogCoshQuadratic {
    LogCoshQuadratic {
        quad: Quadratic::new(spd(&spectrum(n, 1.0, kappa), rng), gaussian(n, rng)).unwrap(),
        eps,
    }
}

pub fn diag_metric(n: usize, rng: &mut ChaCha8Rng) -> InnerProduct {
    InnerProduct::diagonal(Vector::from_fn(n, |_, _| rng.random_range(0.5..2.0))).unwrap()
}

/// Strongly-convex-strongly-concave quadratic saddle, or an equality
/// constrained QP when `constrained`.
pub fn saddle(
    m: usize,
    n: usize,
    kf: f64,
    kg: f64,
    constrained: bool,
    metrics: bool,
    rng: &mut ChaCha8Rng,
) -> SaddleProblem {
    let qf = Quadratic::new(spd(&spectrum(m, 1.0, kf), rng), gaussian(m, rng)).unwrap();
    let b = gaussian_matrix(n, m, rng);
    let (i_v, i_q) = if metrics {
        (diag_metric(m, rng), diag_metric(n, rng))
    } else {
        (InnerProduct::identity(m), InnerProduct::identity(n))
    };
    if constrained {
        SaddleProblem::constrained_qp(qf, b, gaussian(n, rng), i_v, i_q).unwrap()
    } else {
        let qg = Quadratic::new(spd(&spectrum(n, 0.5, 0.5 * kg), rng), gaussian(n, rng)).unwrap();
        SaddleProblem::quadratic(qf, qg, b, i_v, i_q).unwrap()
    }
}

/// Same saddle with zero linear terms, so the saddle point is the origin.
pub fn homogeneous_saddle(p: &SaddleProblem) -> SaddleProblem {
    let qf = Quadratic::new(
        p.f().as_quadratic().unwrap().h.clone(),
        Vector::zeros(p.m()),
    )
    .unwrap();
    if p.b_rhs().is_some() {
        SaddleProblem::constrained_qp(
            qf,
            p.coupling().clone(),
            Vector::zeros(p.n()),
            p.i_v().clone(),
            p.i_q().clone(),
        )
        .unwrap()
    } else {
        let qg = Quadratic::new(
            p.g().as_quadratic().unwrap().h.clone(),
            Vector::zeros(p.n()),
        )
        .unwrap();
        SaddleProblem::quadratic(
            qf,
            qg,
            p.coupling().clone(),
            p.i_v().clone(),
            p.i_q().clone(),
        )
        .unwrap()
    }
}

/// Largest `E_{k+1}/E_k - rate` over pairs with `E_k > 0`.
pub fn max_ratio_excess(values: &[f64], rate: f64) -> f64 {
    values
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0] - rate)
        .fold(f64::NEG_INFINITY, f64::max)
}
