//! Spectral norm estimation and condition numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{check_symmetric, dense_norm2, max_abs, sym_eigenvalues, Matrix, Vector};
use crate::problem::{check_skew, MonotoneProblem};
use crate::split::SkewSplit;

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
/// Largest dimension for which the dense eigendecomposition fallback is used.
pub const DENSE_FALLBACK_MAX_DIM: usize = 512;

const POWER_SEED: u64 = 0x05ee_d0f5_ca1e;
const MAX_RESTARTS: usize = 3;

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 0.0 {
            return v / n;
        }
    }
}

/// Power iteration for `|M|_2` of a normal operator. `gram_sign` is `+1` when
/// `M^T M = M^2` (symmetric) and `-1` when `M^T M = -M^2` (skew).
///
/// The residual of the Rayleigh quotient of `M^T M` is available one step
/// later at no extra cost; iteration stops once it is below `tol * sigma^2`.
fn power_norm<F>(apply: F, dim: usize, tol: f64, max_iter: usize, gram_sign: f64) -> Result<f64>
where
    F: Fn(&Vector) -> Vector,
{
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut last = 0.0;
    let mut iterations = 0;
    'restart: for _ in 0..=MAX_RESTARTS {
        let mut v = random_unit(dim, &mut rng);
        let mut w = apply(&v);
        let mut sigma = w.norm();
        while iterations < max_iter {
            iterations += 1;
            if sigma == 0.0 || !sigma.is_finite() {
                continue 'restart;
            }
            let v_next = &w / sigma;
            let w_next = apply(&v_next);
            let sigma_next = w_next.norm();
            // residual of (M^T M) v - sigma^2 v
            let r = gram_sign * sigma * &w_next - sigma * sigma * &v;
            last = sigma_next;
            if r.norm() <= tol * sigma * sigma {
                return Ok(sigma_next.max(sigma));
            }
            v = v_next;
            w = w_next;
            sigma = sigma_next;
        }
        break;
    }
    Err(Error::SpectralNotConverged {
        iterations,
        estimate: last,
    })
}

/// `max |lambda(M)|` for symmetric `M` by seeded power iteration, capped at
/// `10 * dim` iterations.
pub fn spectral_norm_sym(m: &Matrix, tol: f64) -> Result<f64> {
    check_symmetric(m, 1e-12)?;
    let dim = m.nrows();
    if dim == 0 || max_abs(m) == 0.0 {
        return Ok(0.0);
    }
    power_norm(|v| m * v, dim, tol, 10 * dim.max(10), 1.0)
}

/// [`spectral_norm_sym`] with a dense eigendecomposition fallback for
/// `dim <= DENSE_FALLBACK_MAX_DIM`.
pub fn spectral_norm_sym_or_dense(m: &Matrix, tol: f64) -> Result<f64> {
    match spectral_norm_sym(m, tol) {
        Err(Error::SpectralNotConverged { .. }) if m.nrows() <= DENSE_FALLBACK_MAX_DIM => {
            let ev = sym_eigenvalues(m);
            Ok(ev
                .first()
                .map_or(0.0, |a| a.abs())
                .max(ev.last().map_or(0.0, |a| a.abs())))
        }
        other => other,
    }
}

/// `|N|_2` for skew-symmetric `N`.
pub fn skew_norm(n: &Matrix, tol: f64) -> Result<f64> {
    check_skew(n)?;
    let dim = n.nrows();
    if dim == 0 || max_abs(n) == 0.0 {
        return Ok(0.0);
    }
    match power_norm(|v| n * v, dim, tol, 10 * dim.max(10), -1.0) {
        Err(Error::SpectralNotConverged { .. }) if dim <= DENSE_FALLBACK_MAX_DIM => {
            Ok(dense_norm2(n))
        }
        other => other,
    }
}

/// Lipschitz bound of `A` and the condition numbers of its parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimates {
    /// `L_F + |N|`
    pub l_a: f64,
    pub norm_n: f64,
    pub l_bsym: f64,
    pub kappa_a: f64,
    pub kappa_f: f64,
    pub kappa_n: f64,
    pub kappa_bsym: f64,
}

pub fn condition_numbers(
    problem: &MonotoneProblem,
    split: &SkewSplit,
) -> Result<SpectralEstimates> {
    let mu = problem.mu();
    let norm_n = skew_norm(problem.skew(), DEFAULT_SPECTRAL_TOL)?;
    let l_a = problem.l_f() + norm_n;
    Ok(SpectralEstimates {
        l_a,
        norm_n,
        l_bsym: split.l_bsym(),
        kappa_a: l_a / mu,
        kappa_f: problem.l_f() / mu,
        kappa_n: norm_n / mu,
        kappa_bsym: split.l_bsym() / mu,
    })
}
