//! Accelerated explicit, IMEX and proximal splitting schemes for
//! strongly-convex-strongly-concave saddle problems, with their Lyapunov
//! functionals and lemma checks.

use crate::agss::{AccState, InnerMethod, InnerSolveReport};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{conjugate_gradient, generalized_sym_eigenvalues, Matrix, Vector};

use super::problem::{SaddleProblem, SchurSpectrum};

/// Inner solver for the IMEX block system
/// `[(1+a) mu_f I_V, a B'; -a B, (1+a) mu_g I_Q] (v, q) = (b_v, b_q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SaddleInner {
    /// Dense LU of the block system.
    Direct,
    /// CG on the Schur complement in `q`, then back substitution for `v`.
    SchurCg,
    /// The preconditioned AOR inner iteration started from `(v_k, q_k)`.
    AorInner,
}

impl SaddleInner {
    pub fn name(self) -> &'static str {
        match self {
            SaddleInner::Direct => "direct",
            SaddleInner::SchurCg => "schur_cg",
            SaddleInner::AorInner => "aor_inner",
        }
    }

    fn report_method(self) -> InnerMethod {
        match self {
            SaddleInner::Direct => InnerMethod::Direct,
            SaddleInner::SchurCg => InnerMethod::CgNormal,
            SaddleInner::AorInner => InnerMethod::AorInner,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be positive and finite, got {alpha}"),
        })
    }
}

fn require_strong_concavity(problem: &SaddleProblem, scheme: &str) -> Result<()> {
    let c = problem.consts();
    if !(c.mu_f > 0.0 && c.mu_g > 0.0) {
        return Err(Error::Unsupported(format!(
            "{scheme} needs mu_f > 0 and mu_g > 0 (got {}, {}); use the TPD schemes for mu_g = 0",
            c.mu_f, c.mu_g
        )));
    }
    Ok(())
}

fn require_x_star(problem: &SaddleProblem) -> Result<(&Vector, &Vector)> {
    problem.x_star().ok_or_else(|| Error::InvalidParameter {
        name: "x_star",
        reason: "Lyapunov evaluation needs the saddle point".into(),
    })
}

fn bregman_sum(problem: &SaddleProblem, u: &Vector, p: &Vector) -> Result<f64> {
    let (us, ps) = require_x_star(problem)?;
    let df = problem
        .f()
        .bregman(u, us)
        .ok_or(Error::MissingValueOracle("Bregman divergence of f"))?;
    let dg = problem
        .g()
        .bregman(p, ps)
        .ok_or(Error::MissingValueOracle("Bregman divergence of g"))?;
    Ok(df + dg)
}

/// `1/2 (s_v |e_u|^2_{I_V} + s_q |e_p|^2_{I_Q}) - c (B e_u, e_p)` at the error
/// of the joint vector `x`, i.e. `1/2 |x - x*|^2_{diag(s_v I_V, s_q I_Q) - c Bsym}`.
pub fn saddle_quadratic_form(
    problem: &SaddleProblem,
    x: &Vector,
    s_v: f64,
    s_q: f64,
    c: f64,
) -> Result<f64> {
    check_dim(problem.dim(), x.len())?;
    let (us, ps) = require_x_star(problem)?;
    let (u, p) = problem.split(x);
    let eu = u - us;
    let ep = p - ps;
    Ok(
        0.5 * (s_v * problem.i_v().norm_sq(&eu) + s_q * problem.i_q().norm_sq(&ep))
            - c * (problem.coupling() * &eu).dot(&ep),
    )
}

/// `min{sqrt(mu_f mu_g / (4 L_S)), sqrt(mu_f / (2 L_f)), sqrt(mu_g / (2 L_g))}`
pub fn agss_saddle_step_bound(problem: &SaddleProblem, spectrum: &SchurSpectrum) -> f64 {
    let c = problem.consts();
    let mut a = (c.mu_f * c.mu_g / (4.0 * spectrum.l_s)).sqrt();
    if c.l_f > 0.0 {
        a = a.min((c.mu_f / (2.0 * c.l_f)).sqrt());
    }
    if c.l_g > 0.0 {
        a = a.min((c.mu_g / (2.0 * c.l_g)).sqrt());
    }
    a
}

/// One accelerated explicit step. The `v` update uses `q_k`; the `q` update
/// then uses `2 B v_{k+1} - B v_k`.
pub fn agss_saddle_step(problem: &SaddleProblem, state: &AccState, alpha: f64) -> Result<AccState> {
    check_alpha(alpha)?;
    require_strong_concavity(problem, "accelerated saddle step")?;
    check_dim(problem.dim(), state.dim())?;
    let c = problem.consts();
    let b = problem.coupling();
    let x_hat = (&state.x + &state.y * alpha) / (1.0 + alpha);
    let (uh, ph) = problem.split(&x_hat);
    let (vk, qk) = problem.split(&state.y);
    let gv = problem
        .i_v()
        .solve(&(problem.f().gradient(&uh) + b.transpose() * &qk));
    let v = (&vk + &uh * alpha - gv * (alpha / c.mu_f)) / (1.0 + alpha);
    let gq = problem
        .i_q()
        .solve(&(problem.g().gradient(&ph) - b * &v * 2.0 + b * &vk));
    let q = (&qk + &ph * alpha - gq * (alpha / c.mu_g)) / (1.0 + alpha);
    let y = problem.join(&v, &q);
    let x = (&state.x + &y * alpha - &x_hat * (0.5 * alpha)) / (1.0 + 0.5 * alpha);
    check_finite(&x, "accelerated saddle iterate")?;
    Ok(AccState { x, y, x_hat })
}

/// `D_f(u, u*) + D_g(p, p*) + 1/2 |y - x*|^2_{I_mu - alpha Bsym}`
pub fn agss_saddle_lyapunov(problem: &SaddleProblem, state: &AccState, alpha: f64) -> Result<f64> {
    let (u, p) = problem.split(&state.x);
    let c = problem.consts();
    Ok(bregman_sum(problem, &u, &p)?
        + saddle_quadratic_form(problem, &state.y, c.mu_f, c.mu_g, alpha)?)
}

/// `D_f(u, u*) + D_g(p, p*) + 1/2 |y - x*|^2_{I_mu}`
pub fn imex_saddle_lyapunov(problem: &SaddleProblem, state: &AccState) -> Result<f64> {
    let (u, p) = problem.split(&state.x);
    let c = problem.consts();
    Ok(bregman_sum(problem, &u, &p)?
        + saddle_quadratic_form(problem, &state.y, c.mu_f, c.mu_g, 0.0)?)
}

/// Whether `alpha^2 L_f <= (1 + alpha) mu_f` and `alpha^2 L_g <= (1 + alpha) mu_g`.
pub fn imex_saddle_guaranteed(problem: &SaddleProblem, alpha: f64) -> bool {
    let c = problem.consts();
    let slack = 1.0 + 1e-12;
    alpha * alpha * c.l_f <= (1.0 + alpha) * c.mu_f * slack
        && alpha * alpha * c.l_g <= (1.0 + alpha) * c.mu_g * slack
}

/// Block-system solver for [`imex_saddle_step`].
#[derive(Clone, Debug)]
pub struct SaddleInnerSolver {
    pub method: SaddleInner,
    pub tol: f64,
    pub max_iter: usize,
    /// `L_S`, needed by the AOR inner step size.
    pub l_s: f64,
}

impl SaddleInnerSolver {
    pub fn new(method: SaddleInner, tol: f64, spectrum: &SchurSpectrum) -> Self {
        Self {
            method,
            tol,
            max_iter: crate::agss::DEFAULT_INNER_MAX_ITER,
            l_s: spectrum.l_s,
        }
    }

    /// Residual of the block system at `(v, q)`.
    fn residual(
        problem: &SaddleProblem,
        alpha: f64,
        v: &Vector,
        q: &Vector,
        bv: &Vector,
        bq: &Vector,
    ) -> f64 {
        let c = problem.consts();
        let b = problem.coupling();
        let rv =
            bv - (problem.i_v().apply(v) * ((1.0 + alpha) * c.mu_f) + b.transpose() * q * alpha);
        let rq = bq - (problem.i_q().apply(q) * ((1.0 + alpha) * c.mu_g) - b * v * alpha);
        (rv.norm_squared() + rq.norm_squared()).sqrt()
    }

    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        problem: &SaddleProblem,
        alpha: f64,
        bv: &Vector,
        bq: &Vector,
        v0: &Vector,
        q0: &Vector,
    ) -> Result<(Vector, Vector, InnerSolveReport)> {
        let c = problem.consts();
        let b = problem.coupling();
        let (m, n) = (problem.m(), problem.n());
        let sv = (1.0 + alpha) * c.mu_f;
        let sq = (1.0 + alpha) * c.mu_g;
        let target = self.tol * (bv.norm_squared() + bq.norm_squared()).sqrt();
        let method = self.method.report_method();
        match self.method {
            SaddleInner::Direct => {
                let mut k = Matrix::zeros(m + n, m + n);
                k.view_mut((0, 0), (m, m))
                    .copy_from(&(problem.i_v().to_dense() * sv));
                k.view_mut((0, m), (m, n))
                    .copy_from(&(b.transpose() * alpha));
                k.view_mut((m, 0), (n, m)).copy_from(&(b * -alpha));
                k.view_mut((m, m), (n, n))
                    .copy_from(&(problem.i_q().to_dense() * sq));
                let z = k
                    .lu()
                    .solve(&problem.join(bv, bq))
                    .ok_or(Error::Singular("IMEX saddle block system"))?;
                let (v, q) = problem.split(&z);
                let r = Self::residual(problem, alpha, &v, &q, bv, bq);
                Ok((
                    v,
                    q,
                    InnerSolveReport {
                        residual_norm: r,
                        iterations: 1,
                        method,
                        converged: true,
                    },
                ))
            }
            SaddleInner::SchurCg => {
                let w = alpha * alpha / sv;
                let rhs = bq + b * problem.i_v().solve(bv) * (alpha / sv);
                let op = |q: &Vector| problem.i_q().apply(q) * sq + problem.schur_apply(q) * w;
                // Stop on the block residual, which equals the Schur residual here.
                let out = conjugate_gradient(
                    op,
                    &rhs,
                    q0.clone(),
                    self.tol * (target / (self.tol * rhs.norm()).max(f64::MIN_POSITIVE)).min(1.0),
                    self.max_iter,
                );
                let q = out.x;
                let v = problem.i_v().solve(&(bv - b.transpose() * &q * alpha)) / sv;
                let r = Self::residual(problem, alpha, &v, &q, bv, bq);
                Ok((
                    v,
                    q,
                    InnerSolveReport {
                        residual_norm: r,
                        iterations: out.iterations,
                        method,
                        converged: out.converged,
                    },
                ))
            }
            SaddleInner::AorInner => {
                let a = 1.0 / (2.0 * alpha * (self.l_s / (c.mu_f * c.mu_g)).sqrt());
                let d = 1.0 + a * (1.0 + alpha);
                let mut v = v0.clone();
                let mut q = q0.clone();
                let mut r = Self::residual(problem, alpha, &v, &q, bv, bq);
                if r <= target {
                    return Ok((
                        v,
                        q,
                        InnerSolveReport {
                            residual_norm: r,
                            iterations: 0,
                            method,
                            converged: true,
                        },
                    ));
                }
                for it in 1..=self.max_iter {
                    let v_new = (&v
                        - problem.i_v().solve(&(b.transpose() * &q * alpha - bv)) * (a / c.mu_f))
                        / d;
                    let q_new = (&q
                        - problem.i_q().solve(&(b * (&v - &v_new * 2.0) * alpha - bq))
                            * (a / c.mu_g))
                        / d;
                    v = v_new;
                    q = q_new;
                    r = Self::residual(problem, alpha, &v, &q, bv, bq);
                    if r <= target {
                        return Ok((
                            v,
                            q,
                            InnerSolveReport {
                                residual_norm: r,
                                iterations: it,
                                method,
                                converged: true,
                            },
                        ));
                    }
                }
                check_finite(&v, "inner AOR iterate")?;
                Ok((
                    v,
                    q,
                    InnerSolveReport {
                        residual_norm: r,
                        iterations: self.max_iter,
                        method,
                        converged: false,
                    },
                ))
            }
        }
    }
}

/// One IMEX step treating the coupling implicitly.
pub fn imex_saddle_step(
    problem: &SaddleProblem,
    solver: &SaddleInnerSolver,
    state: &AccState,
    alpha: f64,
) -> Result<(AccState, InnerSolveReport)> {
    check_alpha(alpha)?;
    require_strong_concavity(problem, "IMEX saddle step")?;
    check_dim(problem.dim(), state.dim())?;
    let c = problem.consts();
    let x_hat = (&state.x + &state.y * alpha) / (1.0 + alpha);
    let (uh, ph) = problem.split(&x_hat);
    let (vk, qk) = problem.split(&state.y);
    let bv = problem.i_v().apply(&(&vk + &uh * alpha)) * c.mu_f - problem.f().gradient(&uh) * alpha;
    let bq = problem.i_q().apply(&(&qk + &ph * alpha)) * c.mu_g - problem.g().gradient(&ph) * alpha;
    let (v, q, report) = solver.solve(problem, alpha, &bv, &bq, &vk, &qk)?;
    let y = problem.join(&v, &q);
    let x = (&state.x + &y * alpha) / (1.0 + alpha);
    check_finite(&x, "IMEX saddle iterate")?;
    Ok((AccState { x, y, x_hat }, report))
}

/// `1 / (2 sqrt(L_S / (mu_f mu_g)))`, the strict upper bound for the prox scheme.
pub fn prox_saddle_step_bound(problem: &SaddleProblem, spectrum: &SchurSpectrum) -> f64 {
    let c = problem.consts();
    0.5 / spectrum.bsym_norm(c.mu_f, c.mu_g)
}

/// One proximal splitting step on the joint vector `x = (u, p)`:
/// `u = prox_{(a/mu_f) f}(u_k - (a/mu_f) I_V^{-1} B'p_k)`,
/// `p = prox_{(a/mu_g) g}(p_k - (a/mu_g) I_Q^{-1} B(u_k - 2u))`.
pub fn prox_saddle_step(problem: &SaddleProblem, x: &Vector, alpha: f64) -> Result<Vector> {
    check_alpha(alpha)?;
    require_strong_concavity(problem, "prox saddle step")?;
    check_dim(problem.dim(), x.len())?;
    let (pf, pg) = match (problem.prox_f(), problem.prox_g()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Unsupported(
                "prox saddle step needs prox oracles for f and g".into(),
            ))
        }
    };
    let c = problem.consts();
    let b = problem.coupling();
    let (uk, pk) = problem.split(x);
    let gf = alpha / c.mu_f;
    let gg = alpha / c.mu_g;
    let u = pf.prox(
        &(&uk - problem.i_v().solve(&(b.transpose() * &pk)) * gf),
        gf,
    )?;
    let p = pg.prox(
        &(&pk - problem.i_q().solve(&(b * (&uk - &u * 2.0))) * gg),
        gg,
    )?;
    let out = problem.join(&u, &p);
    check_finite(&out, "prox saddle iterate")?;
    Ok(out)
}

/// `1/2 |x - x*|^2_{I_mu - 2 alpha Bsym}`, the designated functional of the
/// prox scheme.
pub fn prox_saddle_lyapunov(problem: &SaddleProblem, x: &Vector, alpha: f64) -> Result<f64> {
    let c = problem.consts();
    saddle_quadratic_form(problem, x, c.mu_f, c.mu_g, 2.0 * alpha)
}

/// `1/2 |x - x*|^2_{I_mu - alpha Bsym}`, the shifted-skew AOR functional in
/// the `I_mu` metric.
pub fn prox_saddle_lyapunov_aor(problem: &SaddleProblem, x: &Vector, alpha: f64) -> Result<f64> {
    let c = problem.consts();
    saddle_quadratic_form(problem, x, c.mu_f, c.mu_g, alpha)
}

/// Slack `-grad E . G - E - 1/2 |y - x|^2_{I_mu}` of the strong Lyapunov
/// inequality for the preconditioned accelerated saddle flow.
pub fn strong_saddle_gap(problem: &SaddleProblem, x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(problem.dim(), x.len())?;
    check_dim(problem.dim(), y.len())?;
    let (us, ps) = require_x_star(problem)?;
    let c = problem.consts();
    if !(c.mu_f > 0.0 && c.mu_g > 0.0) {
        return Err(Error::InvalidParameter {
            name: "problem",
            reason: format!(
                "strong saddle inequality needs mu_f, mu_g > 0, got {}, {}",
                c.mu_f, c.mu_g
            ),
        });
    }
    let b = problem.coupling();
    let (u, p) = problem.split(x);
    let (v, q) = problem.split(y);
    let gfu = problem.f().gradient(&u);
    let ggp = problem.g().gradient(&p);
    let de_u = &gfu - problem.f().gradient(us);
    let de_p = &ggp - problem.g().gradient(ps);
    let de_v = problem.i_v().apply(&(&v - us)) * c.mu_f;
    let de_q = problem.i_q().apply(&(&q - ps)) * c.mu_g;
    let g_u = &v - &u;
    let g_p = &q - &p;
    let g_v = &u - &v - problem.i_v().solve(&(&gfu + b.transpose() * &q)) / c.mu_f;
    let g_q = &p - &q - problem.i_q().solve(&(&ggp - b * &v)) / c.mu_g;
    let dot = de_u.dot(&g_u) + de_p.dot(&g_p) + de_v.dot(&g_v) + de_q.dot(&g_q);
    let e = bregman_sum(problem, &u, &p)? + saddle_quadratic_form(problem, y, c.mu_f, c.mu_g, 0.0)?;
    let yx = 0.5
        * (c.mu_f * problem.i_v().norm_sq(&(&v - &u)) + c.mu_g * problem.i_q().norm_sq(&(&q - &p)));
    Ok(-dot - e - yx)
}

/// Dense `[mu_f I_V, -2 alpha B'; -2 alpha B, mu_g I_Q]`.
pub fn positivity_matrix(problem: &SaddleProblem, alpha: f64) -> Matrix {
    let c = problem.consts();
    let (m, n) = (problem.m(), problem.n());
    let b = problem.coupling();
    let mut k = Matrix::zeros(m + n, m + n);
    k.view_mut((0, 0), (m, m))
        .copy_from(&(problem.i_v().to_dense() * c.mu_f));
    k.view_mut((0, m), (m, n))
        .copy_from(&(b.transpose() * (-2.0 * alpha)));
    k.view_mut((m, 0), (n, m)).copy_from(&(b * (-2.0 * alpha)));
    k.view_mut((m, m), (n, n))
        .copy_from(&(problem.i_q().to_dense() * c.mu_g));
    k
}

/// `|Bsym|_{I_mu}` by a dense generalized eigensolve of `(Bsym, I_mu)`.
pub fn bsym_norm_dense(problem: &SaddleProblem) -> Result<f64> {
    let c = problem.consts();
    let (m, n) = (problem.m(), problem.n());
    let b = problem.coupling();
    let mut bs = Matrix::zeros(m + n, m + n);
    bs.view_mut((0, m), (m, n)).copy_from(&b.transpose());
    bs.view_mut((m, 0), (n, m)).copy_from(b);
    let mut im = Matrix::zeros(m + n, m + n);
    im.view_mut((0, 0), (m, m))
        .copy_from(&(problem.i_v().to_dense() * c.mu_f));
    im.view_mut((m, m), (n, n))
        .copy_from(&(problem.i_q().to_dense() * c.mu_g));
    let ev = generalized_sym_eigenvalues(&bs, &im)?;
    Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
}

/// Slack of the cross-term estimate
/// `<grad f(u1) - grad f(u2), I_V^{-1} B'(p1 - p2)> >= mu_f/2 |v1 - v2|^2_{I_V}
///  - L_f/2 |B'(p1 - p2)|^2_{I_V^{-1}} - 1/2 <grad f(u1) - grad f(u2), u1 - u2>`
/// with `v = u + I_V^{-1} B' p`.
pub fn key_lemma_gap(
    problem: &SaddleProblem,
    u1: &Vector,
    u2: &Vector,
    p1: &Vector,
    p2: &Vector,
) -> Result<f64> {
    check_dim(problem.m(), u1.len())?;
    check_dim(problem.m(), u2.len())?;
    check_dim(problem.n(), p1.len())?;
    check_dim(problem.n(), p2.len())?;
    let c = problem.consts();
    let b = problem.coupling();
    let dg = problem.f().gradient(u1) - problem.f().gradient(u2);
    let btp = b.transpose() * (p1 - p2);
    let ivbtp = problem.i_v().solve(&btp);
    let dv = (u1 - u2) + &ivbtp;
    let lhs = dg.dot(&ivbtp);
    let rhs = 0.5 * c.mu_f * problem.i_v().norm_sq(&dv)
        - 0.5 * c.l_f * btp.dot(&ivbtp)
        - 0.5 * dg.dot(&(u1 - u2));
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agss::{agss_explicit_step, agss_imex_step, InnerMethod};
    use crate::problem::{MonotoneProblem, Quadratic};
    use crate::saddle::metric::InnerProduct;
    use crate::saddle::problem::schur_spectrum;
    use crate::split::split_skew;
    use std::sync::Arc;

    fn v(a: &[f64]) -> Vector {
        Vector::from_row_slice(a)
    }

    fn small() -> SaddleProblem {
        let b = Matrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, -1.0]);
        let f = Quadratic::new(
            Matrix::from_diagonal(&v(&[1.0, 2.0, 4.0])),
            v(&[1.0, -1.0, 0.5]),
        )
        .unwrap();
        let g = Quadratic::new(Matrix::from_diagonal(&v(&[1.0, 3.0])), v(&[0.2, 0.1])).unwrap();
        SaddleProblem::quadratic(
            f,
            g,
            b,
            InnerProduct::identity(3),
            InnerProduct::identity(2),
        )
        .unwrap()
    }

    #[test]
    fn equilibrium_is_fixed_for_all_schemes() {
        let p = small();
        let xs = p.x_star_joint().unwrap();
        let s = AccState::at(&xs);
        let spec = schur_spectrum(&p).unwrap();
        let a = agss_saddle_step(&p, &s, 0.2).unwrap();
        assert!((&a.x - &xs).amax() < 1e-14 && (&a.y - &xs).amax() < 1e-14);
        for m in [
            SaddleInner::Direct,
            SaddleInner::SchurCg,
            SaddleInner::AorInner,
        ] {
            let solver = SaddleInnerSolver::new(m, 1e-14, &spec);
            let (b, _) = imex_saddle_step(&p, &solver, &s, 0.3).unwrap();
            assert!((&b.x - &xs).amax() < 1e-12, "{}", m.name());
        }
        let c = prox_saddle_step(&p, &xs, 0.1).unwrap();
        assert!((c - &xs).amax() < 1e-14);
    }

    /// With `B = 0` and equal moduli the saddle step is two decoupled
    /// accelerated steps.
    #[test]
    fn zero_coupling_decouples() {
        let hf = Matrix::from_diagonal(&v(&[1.0, 3.0]));
        let hg = Matrix::from_diagonal(&v(&[1.0, 2.0]));
        let cf = v(&[1.0, 0.0]);
        let cg = v(&[0.0, 1.0]);
        let b = Matrix::from_row_slice(2, 2, &[1e-300, 0.0, 0.0, 1e-300]);
        let sp = SaddleProblem::quadratic(
            Quadratic::new(hf.clone(), cf.clone()).unwrap(),
            Quadratic::new(hg.clone(), cg.clone()).unwrap(),
            b,
            InnerProduct::identity(2),
            InnerProduct::identity(2),
        )
        .unwrap();
        let s = AccState::new(v(&[0.3, -0.2, 1.0, 0.5]), v(&[-1.0, 0.4, 0.2, 0.1])).unwrap();
        let out = agss_saddle_step(&sp, &s, 0.25).unwrap();
        let pf = MonotoneProblem::new(
            Arc::new(Quadratic::new(hf, cf).unwrap()),
            Matrix::zeros(2, 2),
            1.0,
            3.0,
        )
        .unwrap();
        let pg = MonotoneProblem::new(
            Arc::new(Quadratic::new(hg, cg).unwrap()),
            Matrix::zeros(2, 2),
            1.0,
            2.0,
        )
        .unwrap();
        let sf = AccState::new(s.x.rows(0, 2).into_owned(), s.y.rows(0, 2).into_owned()).unwrap();
        let sg = AccState::new(s.x.rows(2, 2).into_owned(), s.y.rows(2, 2).into_owned()).unwrap();
        let of = agss_explicit_step(&pf, &split_skew(pf.skew()).unwrap(), &sf, 0.25).unwrap();
        let og = agss_explicit_step(&pg, &split_skew(pg.skew()).unwrap(), &sg, 0.25).unwrap();
        assert!((out.x.rows(0, 2) - of.x).amax() < 1e-14);
        assert!((out.x.rows(2, 2) - og.x).amax() < 1e-14);

        let solver = SaddleInnerSolver {
            method: SaddleInner::Direct,
            tol: 1e-14,
            max_iter: 1,
            l_s: 1.0,
        };
        let (out, _) = imex_saddle_step(&sp, &solver, &s, 0.25).unwrap();
        let (of, _) = agss_imex_step(&pf, &sf, 0.25, InnerMethod::Direct, 1e-14).unwrap();
        let (og, _) = agss_imex_step(&pg, &sg, 0.25, InnerMethod::Direct, 1e-14).unwrap();
        assert!((out.x.rows(0, 2) - of.x).amax() < 1e-14);
        assert!((out.x.rows(2, 2) - og.x).amax() < 1e-14);
    }

    #[test]
    fn inner_solvers_agree() {
        let p = small();
        let spec = schur_spectrum(&p).unwrap();
        let s = AccState::new(
            v(&[1.0, 0.0, -1.0, 0.5, 0.5]),
            v(&[0.0, 2.0, 1.0, -1.0, 0.3]),
        )
        .unwrap();
        let (d, _) = imex_saddle_step(
            &p,
            &SaddleInnerSolver::new(SaddleInner::Direct, 1e-14, &spec),
            &s,
            0.4,
        )
        .unwrap();
        for m in [SaddleInner::SchurCg, SaddleInner::AorInner] {
            let (o, r) =
                imex_saddle_step(&p, &SaddleInnerSolver::new(m, 1e-13, &spec), &s, 0.4).unwrap();
            assert!(r.converged);
            assert!((o.y - &d.y).amax() < 1e-11, "{}", m.name());
        }
    }

    #[test]
    fn quadratic_example_rates() {
        // f = 1/2|u|^2, g = 1/2|p|^2, B = [1, 0]
        let p = SaddleProblem::quadratic(
            Quadratic::isotropic(1.0, v(&[1.0, 0.5])),
            Quadratic::isotropic(1.0, v(&[0.3])),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            InnerProduct::identity(2),
            InnerProduct::identity(1),
        )
        .unwrap();
        let spec = schur_spectrum(&p).unwrap();
        let alpha = agss_saddle_step_bound(&p, &spec);
        let mut s = AccState::at(&v(&[2.0, -1.0, 1.5]));
        for _ in 0..50 {
            let e0 = agss_saddle_lyapunov(&p, &s, alpha).unwrap();
            s = agss_saddle_step(&p, &s, alpha).unwrap();
            let e1 = agss_saddle_lyapunov(&p, &s, alpha).unwrap();
            assert!(e1 <= e0 / (1.0 + alpha / 2.0) + 1e-12);
        }
    }

    #[test]
    fn lemma_checks_on_small_problem() {
        let p = small();
        let spec = schur_spectrum(&p).unwrap();
        let c = p.consts();
        assert!((bsym_norm_dense(&p).unwrap() - spec.bsym_norm(c.mu_f, c.mu_g)).abs() < 1e-12);
        let alpha = (c.mu_f * c.mu_g / (4.0 * spec.l_s)).sqrt();
        let ev = crate::linalg::sym_eigenvalues(&positivity_matrix(&p, alpha));
        assert!(ev[0] >= -1e-12);
        let xs = p.x_star_joint().unwrap();
        let x = &xs + v(&[1.0, -0.5, 0.2, 0.3, -2.0]);
        let y = &xs + v(&[-0.4, 0.1, 1.0, 0.0, 0.7]);
        assert!(strong_saddle_gap(&p, &x, &y).unwrap() >= -1e-12);
        let g = key_lemma_gap(
            &p,
            &v(&[1.0, 0.0, 2.0]),
            &v(&[0.0, 1.0, -1.0]),
            &v(&[0.5, 0.2]),
            &v(&[-1.0, 0.3]),
        )
        .unwrap();
        assert!(g >= -1e-12);
    }
}
