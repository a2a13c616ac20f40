//! Saddle problems `min_u max_p f(u) - g(p) + (Bu, p)` with inner-product
//! operators `I_V`, `I_Q`.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::metric::{InnerProduct, Prox, QuadraticProx, RescaledProx};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{generalized_sym_eigenvalues, sym_eigenvalues, Matrix, Vector};
use crate::problem::{Objective, Quadratic};
use crate::spectral::DENSE_FALLBACK_MAX_DIM;

/// Relative threshold on `sigma_min(B) / sigma_max(B)` for full row rank.
pub const RANK_TOL: f64 = 1e-10;

/// Convexity and Lipschitz constants of `f` and `g` in the `I_V` and `I_Q`
/// metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaddleConstants {
    pub mu_f: f64,
    pub l_f: f64,
    pub mu_g: f64,
    pub l_g: f64,
}

#[derive(Clone)]
pub struct SaddleProblem {
    f: Arc<dyn Objective>,
    g: Arc<dyn Objective>,
    b: Matrix,
    b_rhs: Option<Vector>,
    i_v: InnerProduct,
    i_q: InnerProduct,
    consts: SaddleConstants,
    prox_f: Option<Arc<dyn Prox>>,
    prox_g: Option<Arc<dyn Prox>>,
    x_star: Option<(Vector, Vector)>,
}

impl fmt::Debug for SaddleProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SaddleProblem")
            .field("m", &self.m())
            .field("n", &self.n())
            .field("consts", &self.consts)
            .field(
                "has_prox",
                &(self.prox_f.is_some() && self.prox_g.is_some()),
            )
            .field("has_x_star", &self.x_star.is_some())
            .finish()
    }
}

fn check_constant(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and non-negative, got {v}"),
        })
    }
}

/// Extreme eigenvalues of the pencil `(H, M)`.
pub fn metric_extremes(h: &Matrix, metric: &InnerProduct) -> Result<(f64, f64)> {
    let ev = match metric {
        InnerProduct::Identity(_) => sym_eigenvalues(h),
        _ => generalized_sym_eigenvalues(h, &metric.to_dense())?,
    };
    Ok((ev[0], ev[ev.len() - 1]))
}

impl SaddleProblem {
    /// `b` is `n x m` with `m >= n` and full row rank.
    pub fn new(
        f: Arc<dyn Objective>,
        g: Arc<dyn Objective>,
        b: Matrix,
        i_v: InnerProduct,
        i_q: InnerProduct,
        consts: SaddleConstants,
    ) -> Result<Self> {
        let (n, m) = b.shape();
        if m < n {
            return Err(Error::InvalidParameter {
                name: "B",
                reason: format!("need m >= n, got {n}x{m}"),
            });
        }
        check_dim(m, f.dim())?;
        check_dim(n, g.dim())?;
        check_dim(m, i_v.dim())?;
        check_dim(n, i_q.dim())?;
        for (name, v) in [
            ("mu_f", consts.mu_f),
            ("l_f", consts.l_f),
            ("mu_g", consts.mu_g),
            ("l_g", consts.l_g),
        ] {
            check_constant(name, v)?;
        }
        if consts.mu_f > consts.l_f || consts.mu_g > consts.l_g {
            return Err(Error::InvalidParameter {
                name: "consts",
                reason: format!("need mu <= L, got {consts:?}"),
            });
        }
        if n > 0 {
            let sv = b.clone().singular_values();
            let hi = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
            let lo = sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
            if !(lo > RANK_TOL * hi) {
                return Err(Error::InvalidParameter {
                    name: "B",
                    reason: format!("not full row rank: sigma_min = {lo:e}, sigma_max = {hi:e}"),
                });
            }
        }
        Ok(Self {
            f,
            g,
            b,
            b_rhs: None,
            i_v,
            i_q,
            consts,
            prox_f: None,
            prox_g: None,
            x_star: None,
        })
    }

    /// Quadratic `f`, `g` with exact constants, quadratic prox oracles and
    /// the dense KKT solution attached.
    pub fn quadratic(
        qf: Quadratic,
        qg: Quadratic,
        b: Matrix,
        i_v: InnerProduct,
        i_q: InnerProduct,
    ) -> Result<Self> {
        let (mu_f, l_f) = metric_extremes(&qf.h, &i_v)?;
        let (mu_g, l_g) = metric_extremes(&qg.h, &i_q)?;
        let consts = SaddleConstants {
            mu_f: mu_f.max(0.0),
            l_f: l_f.max(0.0),
            mu_g: mu_g.max(0.0),
            l_g: l_g.max(0.0),
        };
        let prox_f: Arc<dyn Prox> = Arc::new(QuadraticProx::new(qf.clone(), i_v.clone())?);
        let prox_g: Arc<dyn Prox> = Arc::new(QuadraticProx::new(qg.clone(), i_q.clone())?);
        let p = Self::new(Arc::new(qf), Arc::new(qg), b, i_v, i_q, consts)?
            .with_prox(prox_f, prox_g)?;
        let (u, q) = p
            .kkt_dense()
            .ok_or(Error::Singular("KKT system of quadratic saddle problem"))?;
        p.with_solution(u, q)
    }

    /// `min f(u)` subject to `Bu = rhs`, i.e. `g(p) = (rhs, p)`.
    pub fn constrained_qp(
        qf: Quadratic,
        b: Matrix,
        rhs: Vector,
        i_v: InnerProduct,
        i_q: InnerProduct,
    ) -> Result<Self> {
        let g = Quadratic::linear(rhs.clone());
        let mut p = Self::quadratic(qf, g, b, i_v, i_q)?;
        p.consts.mu_g = 0.0;
        p.consts.l_g = 0.0;
        p.b_rhs = Some(rhs);
        Ok(p)
    }

    pub fn with_rhs(mut self, rhs: Vector) -> Result<Self> {
        check_dim(self.n(), rhs.len())?;
        self.b_rhs = Some(rhs);
        Ok(self)
    }

    pub fn with_prox(mut self, prox_f: Arc<dyn Prox>, prox_g: Arc<dyn Prox>) -> Result<Self> {
        check_dim(self.m(), prox_f.dim())?;
        check_dim(self.n(), prox_g.dim())?;
        self.prox_f = Some(prox_f);
        self.prox_g = Some(prox_g);
        Ok(self)
    }

    pub fn with_solution(mut self, u: Vector, p: Vector) -> Result<Self> {
        check_dim(self.m(), u.len())?;
        check_dim(self.n(), p.len())?;
        self.x_star = Some((u, p));
        Ok(self)
    }

    /// Primal dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Dual dimension.
    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    pub fn dim(&self) -> usize {
        self.m() + self.n()
    }

    pub fn f(&self) -> &Arc<dyn Objective> {
        &self.f
    }

    pub fn g(&self) -> &Arc<dyn Objective> {
        &self.g
    }

    pub fn coupling(&self) -> &Matrix {
        &self.b
    }

    pub fn b_rhs(&self) -> Option<&Vector> {
        self.b_rhs.as_ref()
    }

    pub fn i_v(&self) -> &InnerProduct {
        &self.i_v
    }

    pub fn i_q(&self) -> &InnerProduct {
        &self.i_q
    }

    pub fn consts(&self) -> &SaddleConstants {
        &self.consts
    }

    pub fn prox_f(&self) -> Option<&Arc<dyn Prox>> {
        self.prox_f.as_ref()
    }

    pub fn prox_g(&self) -> Option<&Arc<dyn Prox>> {
        self.prox_g.as_ref()
    }

    pub fn x_star(&self) -> Option<(&Vector, &Vector)> {
        self.x_star.as_ref().map(|(u, p)| (u, p))
    }

    /// `[u; p]` of the known solution.
    pub fn x_star_joint(&self) -> Option<Vector> {
        self.x_star().map(|(u, p)| self.join(u, p))
    }

    pub fn join(&self, u: &Vector, p: &Vector) -> Vector {
        let mut x = Vector::zeros(self.dim());
        x.rows_mut(0, self.m()).copy_from(u);
        x.rows_mut(self.m(), self.n()).copy_from(p);
        x
    }

    pub fn split(&self, x: &Vector) -> (Vector, Vector) {
        (
            x.rows(0, self.m()).into_owned(),
            x.rows(self.m(), self.n()).into_owned(),
        )
    }

    /// `S p = B I_V^{-1} B' p`
    pub fn schur_apply(&self, p: &Vector) -> Vector {
        &self.b * self.i_v.solve(&(self.b.transpose() * p))
    }

    /// Dense `B I_V^{-1} B'`.
    pub fn schur_dense(&self) -> Matrix {
        &self.b * self.i_v.solve_matrix(&self.b.transpose())
    }

    /// `(grad f(u) + B'p, -Bu + grad g(p))`
    pub fn kkt_operator(&self, u: &Vector, p: &Vector) -> (Vector, Vector) {
        (
            self.f.gradient(u) + self.b.transpose() * p,
            self.g.gradient(p) - &self.b * u,
        )
    }

    /// `|grad f(u) + B'p| + |-Bu + grad g(p)|`
    pub fn kkt_residual(&self, u: &Vector, p: &Vector) -> f64 {
        let (a, b) = self.kkt_operator(u, p);
        a.norm() + b.norm()
    }

    /// Dense solve of the KKT system when both `f` and `g` are quadratic.
    pub fn kkt_dense(&self) -> Option<(Vector, Vector)> {
        let qf = self.f.as_quadratic()?;
        let qg = self.g.as_quadratic()?;
        let (m, n) = (self.m(), self.n());
        let mut k = Matrix::zeros(m + n, m + n);
        k.view_mut((0, 0), (m, m)).copy_from(&qf.h);
        k.view_mut((0, m), (m, n)).copy_from(&self.b.transpose());
        k.view_mut((m, 0), (n, m)).copy_from(&(-&self.b));
        k.view_mut((m, m), (n, n)).copy_from(&qg.h);
        let rhs = self.join(&qf.c, &qg.c);
        let x = k.lu().solve(&rhs)?;
        Some(self.split(&x))
    }

    /// `L(u, p) = f(u) - g(p) + (Bu, p)`
    pub fn lagrangian(&self, u: &Vector, p: &Vector) -> Result<f64> {
        let fv = self
            .f
            .value(u)
            .ok_or(Error::MissingValueOracle("Lagrangian"))?;
        let gv = self
            .g
            .value(p)
            .ok_or(Error::MissingValueOracle("Lagrangian"))?;
        Ok(fv - gv + (&self.b * u).dot(p))
    }

    /// The problem in the metrics `c_v I_V`, `c_q I_Q`, with constants and
    /// prox oracles transformed accordingly. The saddle point is unchanged.
    pub fn rescaled(&self, c_v: f64, c_q: f64) -> Result<Self> {
        let mut out = self.clone();
        out.i_v = self.i_v.scale(c_v)?;
        out.i_q = self.i_q.scale(c_q)?;
        out.consts = SaddleConstants {
            mu_f: self.consts.mu_f / c_v,
            l_f: self.consts.l_f / c_v,
            mu_g: self.consts.mu_g / c_q,
            l_g: self.consts.l_g / c_q,
        };
        out.prox_f = self
            .prox_f
            .as_ref()
            .map(|p| Arc::new(RescaledProx::new(p.clone(), c_v)) as Arc<dyn Prox>);
        out.prox_g = self
            .prox_g
            .as_ref()
            .map(|p| Arc::new(RescaledProx::new(p.clone(), c_q)) as Arc<dyn Prox>);
        Ok(out)
    }

    /// Replaces `I_Q`; constants of `g` are recomputed when `g` is quadratic
    /// and otherwise must be supplied.
    pub fn with_i_q(&self, i_q: InnerProduct, g_consts: Option<(f64, f64)>) -> Result<Self> {
        check_dim(self.n(), i_q.dim())?;
        let (mu_g, l_g) = match (g_consts, self.g.as_quadratic()) {
            (Some(c), _) => c,
            (None, Some(q)) => {
                let (lo, hi) = metric_extremes(&q.h, &i_q)?;
                (lo.max(0.0), hi.max(0.0))
            }
            (None, None) => {
                return Err(Error::InvalidParameter {
                    name: "g_consts",
                    reason: "constants of a non-quadratic g must be supplied for a new metric"
                        .into(),
                })
            }
        };
        let mut out = self.clone();
        out.i_q = i_q;
        out.consts.mu_g = mu_g;
        out.consts.l_g = l_g;
        if let Some(q) = self.g.as_quadratic() {
            out.prox_g = Some(Arc::new(QuadraticProx::new(q.clone(), out.i_q.clone())?));
        } else {
            out.prox_g = None;
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchurSpectrum {
    /// `lambda_max(I_Q^{-1} B I_V^{-1} B')`
    pub l_s: f64,
    /// `lambda_min` of the same operator.
    pub mu_s: f64,
    pub kappa_s: f64,
}

impl SchurSpectrum {
    /// `|Bsym|_{I_mu} = sqrt(L_S / (mu_f mu_g))`
    pub fn bsym_norm(&self, mu_f: f64, mu_g: f64) -> f64 {
        (self.l_s / (mu_f * mu_g)).sqrt()
    }
}

/// Extreme generalized eigenvalues of `(B I_V^{-1} B', I_Q)`. Dense for
/// `n <= 512`, power iteration in the `I_Q` inner product otherwise.
pub fn schur_spectrum(problem: &SaddleProblem) -> Result<SchurSpectrum> {
    let (lo, hi) = if problem.n() <= DENSE_FALLBACK_MAX_DIM {
        metric_extremes(&problem.schur_dense(), problem.i_q())?
    } else {
        schur_power_extremes(problem, 1e-10, 200_000)?
    };
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "Schur complement has lambda_min = {lo:e}"
        )));
    }
    Ok(SchurSpectrum {
        l_s: hi,
        mu_s: lo,
        kappa_s: hi / lo,
    })
}

fn schur_power_extremes(problem: &SaddleProblem, tol: f64, max_iter: usize) -> Result<(f64, f64)> {
    let iq = problem.i_q();
    let t = |x: &Vector| iq.solve(&problem.schur_apply(x));
    let hi = power_in_metric(problem.n(), iq, &t, tol, max_iter)?;
    let shifted = |x: &Vector| x * hi - t(x);
    let top = power_in_metric(problem.n(), iq, &shifted, tol, max_iter)?;
    Ok((hi - top, hi))
}

/// Largest eigenvalue of an operator self-adjoint and positive semidefinite in
/// the metric `M`.
fn power_in_metric<F: Fn(&Vector) -> Vector>(
    dim: usize,
    m: &InnerProduct,
    op: &F,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = Vector::from_fn(dim, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    x /= m.norm_sq(&x).sqrt();
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let y = op(&x);
        let next = m.apply(&x).dot(&y);
        let ny = m.norm_sq(&y).sqrt();
        if ny == 0.0 {
            return Ok(0.0);
        }
        x = y / ny;
        if (next - lambda).abs() <= tol * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::SpectralNotConverged {
        iterations: max_iter,
        estimate: lambda,
    })
}

/// `f(u) + beta/2 |Bu - b|^2`
pub struct AugmentedObjective {
    f: Arc<dyn Objective>,
    b: Matrix,
    rhs: Vector,
    beta: f64,
}

impl Objective for AugmentedObjective {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn gradient(&self, u: &Vector) -> Vector {
        self.f.gradient(u) + self.b.transpose() * ((&self.b * u - &self.rhs) * self.beta)
    }

    fn value(&self, u: &Vector) -> Option<f64> {
        Some(self.f.value(u)? + 0.5 * self.beta * (&self.b * u - &self.rhs).norm_squared())
    }

    fn hessian(&self, u: &Vector) -> Option<Matrix> {
        Some(self.f.hessian(u)? + self.b.transpose() * &self.b * self.beta)
    }

    fn bregman(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(self.f.bregman(x, y)? + 0.5 * self.beta * (&self.b * (x - y)).norm_squared())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentReport {
    /// `mu_f + beta sigma_min(B)^2 / lambda_max(I_V)` when `B` has full column
    /// rank, otherwise `mu_f`.
    pub mu_f_lower: f64,
    /// `L_f + beta lambda_max(B'B, I_V)`
    pub l_f_upper: f64,
    /// `B` has a nontrivial null space, so the augmentation adds no
    /// guaranteed convexity.
    pub rank_deficient: bool,
}

/// Augments `f` with `beta/2 |Bu - b|^2`. Quadratic `f` stays quadratic and
/// gets exact constants; otherwise the returned problem carries the bounds
/// from the report.
pub fn augment_objective(
    problem: &SaddleProblem,
    beta: f64,
) -> Result<(SaddleProblem, AugmentReport)> {
    let rhs = problem.b_rhs().ok_or_else(|| Error::InvalidParameter {
        name: "b_rhs",
        reason: "augmentation needs the constraint right-hand side".into(),
    })?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "beta",
            reason: format!("must be non-negative, got {beta}"),
        });
    }
    let b = problem.coupling();
    let c = problem.consts();
    let (m, n) = (problem.m(), problem.n());
    let rank_deficient = m > n;
    let iv_max = *sym_eigenvalues(&problem.i_v().to_dense())
        .last()
        .unwrap_or(&1.0);
    let btb = b.transpose() * b;
    let (_, l_bb) = metric_extremes(&btb, problem.i_v())?;
    let mu_f_lower = if rank_deficient {
        c.mu_f
    } else {
        let sv = b.clone().singular_values();
        let smin = sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
        c.mu_f + beta * smin * smin / iv_max
    };
    let report = AugmentReport {
        mu_f_lower,
        l_f_upper: c.l_f + beta * l_bb,
        rank_deficient,
    };
    if beta == 0.0 {
        return Ok((problem.clone(), report));
    }
    let mut out = problem.clone();
    if let Some(q) = problem.f().as_quadratic() {
        let h = &q.h + &btb * beta;
        let h = (&h + h.transpose()) * 0.5;
        let qa = Quadratic::new(h, &q.c + b.transpose() * rhs * beta)?;
        let (lo, hi) = metric_extremes(&qa.h, problem.i_v())?;
        out.f = Arc::new(qa.clone());
        out.consts.mu_f = lo.max(0.0);
        out.consts.l_f = hi;
        out.prox_f = Some(Arc::new(QuadraticProx::new(qa, problem.i_v().clone())?));
    } else {
        out.f = Arc::new(AugmentedObjective {
            f: problem.f().clone(),
            b: b.clone(),
            rhs: rhs.clone(),
            beta,
        });
        out.consts.mu_f = report.mu_f_lower;
        out.consts.l_f = report.l_f_upper;
        out.prox_f = None;
    }
    Ok((out, report))
}

/// `L(u, p*) - L(u*, p)`, which equals `D_f(u, u*) + D_g(p, p*)`.
pub fn duality_bregman_gap(problem: &SaddleProblem, u: &Vector, p: &Vector) -> Result<f64> {
    let (us, ps) = problem.x_star().ok_or_else(|| Error::InvalidParameter {
        name: "x_star",
        reason: "duality gap needs the saddle point".into(),
    })?;
    Ok(problem.lagrangian(u, ps)? - problem.lagrangian(us, p)?)
}
