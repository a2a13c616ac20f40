//! Seeded instance generation with prescribed spectra.

use std::path::PathBuf;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use monosplit::linalg::sym_eigenvalues;
use monosplit::saddle::{InnerProduct, SaddleProblem};
use monosplit::{
    split_skew, LogCoshQuadratic, Matrix, MonotoneProblem, Objective, Quadratic, Vector,
};

use crate::error::{HarnessError, Result};
use crate::mm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    ShiftedSkewLinear,
    QuadraticPlusSkew,
    BilinearSaddle,
    ConstrainedQp,
}

impl ProblemKind {
    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }

    pub fn is_saddle(self) -> bool {
        matches!(
            self,
            ProblemKind::BilinearSaddle | ProblemKind::ConstrainedQp
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixPaths {
    /// Skew part `N` for the monotone kinds.
    pub skew: Option<PathBuf>,
    /// Coupling `B` for the saddle kinds.
    pub coupling: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

/// Description of a generated instance. Monotone kinds use `dim`, `kappa_f`
/// and `kappa_bsym`; saddle kinds use `m`, `n`, `kappa_f`, `kappa_g` and
/// `kappa_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub n: Option<usize>,
    /// Smallest eigenvalue of the quadratic parts.
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default)]
    pub kappa_f: Option<f64>,
    /// `L_Bsym / mu`; zero gives `N = 0`.
    #[serde(default)]
    pub kappa_bsym: Option<f64>,
    #[serde(default)]
    pub kappa_g: Option<f64>,
    #[serde(default)]
    pub kappa_s: Option<f64>,
    /// Weight of `sum log cosh(x_i)` added to `F` (quadratic_plus_skew only).
    #[serde(default)]
    pub logcosh_eps: f64,
    pub seed: u64,
    #[serde(default)]
    pub paths: MatrixPaths,
}

impl ProblemSpec {
    pub fn monotone(
        kind: ProblemKind,
        dim: usize,
        kappa_f: f64,
        kappa_bsym: f64,
        seed: u64,
    ) -> Self {
        Self {
            kind,
            dim: Some(dim),
            m: None,
            n: None,
            mu: 1.0,
            kappa_f: Some(kappa_f),
            kappa_bsym: Some(kappa_bsym),
            kappa_g: None,
            kappa_s: None,
            logcosh_eps: 0.0,
            seed,
            paths: MatrixPaths::default(),
        }
    }

    pub fn saddle(
        kind: ProblemKind,
        m: usize,
        n: usize,
        kappa_f: f64,
        kappa_g: f64,
        kappa_s: f64,
        seed: u64,
    ) -> Self {
        Self {
            kind,
            dim: None,
            m: Some(m),
            n: Some(n),
            mu: 1.0,
            kappa_f: Some(kappa_f),
            kappa_bsym: None,
            kappa_g: Some(kappa_g),
            kappa_s: Some(kappa_s),
            logcosh_eps: 0.0,
            seed,
            paths: MatrixPaths::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Usage(msg));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        for (name, k) in [
            ("kappa_f", self.kappa_f),
            ("kappa_g", self.kappa_g),
            ("kappa_s", self.kappa_s),
        ] {
            if let Some(k) = k {
                if !(k >= 1.0 && k.is_finite()) {
                    return bad(format!("{name} must be >= 1, got {k}"));
                }
            }
        }
        if let Some(k) = self.kappa_bsym {
            if !(k >= 0.0 && k.is_finite()) {
                return bad(format!("kappa_bsym must be >= 0, got {k}"));
            }
        }
        if self.kind.is_saddle() {
            let (m, n) = (self.m.unwrap_or(0), self.n.unwrap_or(0));
            if n == 0 || m < n {
                return bad(format!(
                    "saddle kinds need 0 < n <= m, got m = {m}, n = {n}"
                ));
            }
        } else if self.dim.unwrap_or(0) == 0 {
            return bad("monotone kinds need dim > 0".into());
        }
        if self.logcosh_eps != 0.0 {
            let l = self.mu * self.kappa_f.unwrap_or(1.0);
            if self.kind != ProblemKind::QuadraticPlusSkew
                || !(self.logcosh_eps > 0.0 && self.logcosh_eps < l - self.mu)
            {
                return bad(format!(
                    "logcosh_eps must lie in (0, L_F - mu) = (0, {}) for quadratic_plus_skew",
                    l - self.mu
                ));
            }
        }
        Ok(())
    }
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum Instance {
    Monotone(MonotoneProblem),
    Saddle(SaddleProblem),
}

impl Instance {
    pub fn monotone(&self) -> Option<&MonotoneProblem> {
        match self {
            Instance::Monotone(p) => Some(p),
            Instance::Saddle(_) => None,
        }
    }

    pub fn saddle(&self) -> Option<&SaddleProblem> {
        match self {
            Instance::Saddle(p) => Some(p),
            Instance::Monotone(_) => None,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(n, |_, _| gaussian(rng))
}

/// `n` values from `lo` to `hi`, geometrically spaced with exact endpoints.
pub fn geometric_spectrum(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let r = hi / lo;
    let mut out: Vec<f64> = (0..n)
        .map(|i| lo * r.powf(i as f64 / (n - 1) as f64))
        .collect();
    out[0] = lo;
    out[n - 1] = hi;
    out
}

/// Haar-distributed orthogonal `n x k` factor (first `k` columns).
pub fn random_orthogonal(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = Matrix::from_fn(n, k, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `Q diag(eigs) Q'` for a seeded orthogonal `Q`.
pub fn spd_with_spectrum(eigs: &[f64], rng: &mut ChaCha8Rng) -> Matrix {
    let n = eigs.len();
    let q = random_orthogonal(n, n, rng);
    let d = Vector::from_row_slice(eigs);
    let h = &q * Matrix::from_diagonal(&d) * q.transpose();
    (&h + h.transpose()) * 0.5
}

/// Skew matrix from seeded strictly-upper entries scaled so that
/// `|Bsym|_2 = l_bsym`.
pub fn skew_with_bsym_norm(n: usize, l_bsym: f64, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    let mut u = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            u[(i, j)] = gaussian(rng);
        }
    }
    let raw = &u - u.transpose();
    if l_bsym == 0.0 || n < 2 {
        return Ok(Matrix::zeros(n, n));
    }
    let cur = split_skew(&raw)?.l_bsym();
    Ok(raw * (l_bsym / cur))
}

/// `n x m` coupling with singular values geometrically spaced in
/// `[1, sqrt(kappa_s)]`, so `B B'` has condition number `kappa_s`.
pub fn coupling_with_condition(n: usize, m: usize, kappa_s: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let u = random_orthogonal(n, n, rng);
    let v = random_orthogonal(m, n, rng);
    let s = geometric_spectrum(n, 1.0, kappa_s.sqrt());
    &u * Matrix::from_diagonal(&Vector::from_vec(s)) * v.transpose()
}

fn monotone_x_star(problem: &MonotoneProblem) -> Result<Vector> {
    if let Some((a, c)) = problem.linear_system() {
        return a
            .lu()
            .solve(&c)
            .ok_or(HarnessError::Numerical(monosplit::Error::Singular(
                "generated linear system",
            )));
    }
    damped_newton(problem, 1e-12, 200)
}

/// Damped Newton on `A(x) = 0` with backtracking on `|A(x)|`.
pub fn damped_newton(problem: &MonotoneProblem, tol: f64, max_iter: usize) -> Result<Vector> {
    let f = problem.objective();
    let mut x = Vector::zeros(problem.dim());
    let mut r = problem.operator(&x);
    for _ in 0..max_iter {
        let rn = r.norm();
        if rn <= tol {
            return Ok(x);
        }
        let h = f
            .hessian(&x)
            .ok_or_else(|| HarnessError::Usage("Newton solve needs a Hessian oracle".into()))?;
        let j = h + problem.skew();
        let d = j
            .lu()
            .solve(&r)
            .ok_or(HarnessError::Numerical(monosplit::Error::Singular(
                "Newton system",
            )))?;
        let mut t = 1.0;
        loop {
            let cand = &x - &d * t;
            let rc = problem.operator(&cand);
            if rc.norm() < (1.0 - 1e-4 * t) * rn || t < 1e-10 {
                x = cand;
                r = rc;
                break;
            }
            t *= 0.5;
        }
    }
    if r.norm() <= tol {
        Ok(x)
    } else {
        Err(HarnessError::Numerical(monosplit::Error::NonFinite(
            "Newton solve did not reach the tolerance",
        )))
    }
}

/// Builds the instance described by `spec`, with its solution attached.
pub fn generate(spec: &ProblemSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mu = spec.mu;
    match spec.kind {
        ProblemKind::ShiftedSkewLinear | ProblemKind::QuadraticPlusSkew => {
            let dim = spec.dim.expect("validated");
            // drawn even when replaced so the remaining data keeps its seed stream
            let mut n = skew_with_bsym_norm(dim, spec.kappa_bsym.unwrap_or(1.0) * mu, &mut rng)?;
            if let Some(p) = &spec.paths.skew {
                n = mm::read_dense(p)?;
            }
            if n.nrows() != dim {
                return Err(HarnessError::Usage(format!(
                    "skew matrix has dimension {}, spec says {dim}",
                    n.nrows()
                )));
            }
            let problem = if spec.kind == ProblemKind::ShiftedSkewLinear {
                let b = gaussian_vector(dim, &mut rng);
                MonotoneProblem::shifted_skew(mu, n, b)?
            } else {
                let l = mu * spec.kappa_f.unwrap_or(1.0);
                let eps = spec.logcosh_eps;
                let h = spd_with_spectrum(&geometric_spectrum(dim, mu, l - eps), &mut rng);
                let b = gaussian_vector(dim, &mut rng);
                let q = Quadratic::new(h, b)?;
                let obj: Arc<dyn Objective> = if eps > 0.0 {
                    Arc::new(LogCoshQuadratic { quad: q, eps })
                } else {
                    Arc::new(q)
                };
                MonotoneProblem::new(obj, n, mu, l)?
            };
            let xs = monotone_x_star(&problem)?;
            Ok(Instance::Monotone(problem.with_x_star(xs)?))
        }
        ProblemKind::BilinearSaddle | ProblemKind::ConstrainedQp => {
            let (m, n) = (spec.m.expect("validated"), spec.n.expect("validated"));
            let mut b = coupling_with_condition(n, m, spec.kappa_s.unwrap_or(1.0), &mut rng);
            if let Some(p) = &spec.paths.coupling {
                b = mm::read_dense(p)?;
            }
            if b.shape() != (n, m) {
                return Err(HarnessError::Usage(format!(
                    "coupling has shape {:?}, spec says ({n}, {m})",
                    b.shape()
                )));
            }
            let hf = spd_with_spectrum(
                &geometric_spectrum(m, mu, mu * spec.kappa_f.unwrap_or(1.0)),
                &mut rng,
            );
            let qf = Quadratic::new(hf, gaussian_vector(m, &mut rng))?;
            let p = if spec.kind == ProblemKind::BilinearSaddle {
                let hg = spd_with_spectrum(
                    &geometric_spectrum(n, mu, mu * spec.kappa_g.unwrap_or(1.0)),
                    &mut rng,
                );
                let qg = Quadratic::new(hg, gaussian_vector(n, &mut rng))?;
                SaddleProblem::quadratic(
                    qf,
                    qg,
                    b,
                    InnerProduct::identity(m),
                    InnerProduct::identity(n),
                )?
            } else {
                let rhs = gaussian_vector(n, &mut rng);
                SaddleProblem::constrained_qp(
                    qf,
                    b,
                    rhs,
                    InnerProduct::identity(m),
                    InnerProduct::identity(n),
                )?
            };
            Ok(Instance::Saddle(p))
        }
    }
}

/// Ratio of the extreme eigenvalues of a symmetric matrix.
pub fn condition_number(h: &Matrix) -> f64 {
    let ev = sym_eigenvalues(h);
    ev[ev.len() - 1] / ev[0]
}
