//! Bregman divergence and the Lyapunov functionals used to certify each scheme.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::problem::Objective;

/// `D_F(x, y) = F(x) - F(y) - <grad F(y), x - y>`
pub fn bregman(f: &dyn Objective, x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(f.dim(), x.len())?;
    check_dim(f.dim(), y.len())?;
    f.bregman(x, y)
        .ok_or(Error::MissingValueOracle("Bregman divergence"))
}

/// `1/2 |x - x*|^2`
pub fn lyapunov_eq(x: &Vector, x_star: &Vector) -> Result<f64> {
    check_dim(x_star.len(), x.len())?;
    Ok(0.5 * (x - x_star).norm_squared())
}

/// `1/2 (s |e|^2 - c e'Bsym e)`
pub(crate) fn shifted_form(e: &Vector, s: f64, c: f64, bsym: &Matrix) -> Result<f64> {
    check_dim(bsym.nrows(), e.len())?;
    let quad = if c == 0.0 { 0.0 } else { e.dot(&(bsym * e)) };
    Ok(0.5 * (s * e.norm_squared() - c * quad))
}

/// Whether `I - alpha Bsym` is guaranteed positive definite.
pub fn alpha_b_definite(alpha: f64, l_bsym: f64) -> bool {
    alpha * l_bsym < 1.0
}

/// `1/2 |x - x*|^2_{I - alpha Bsym}`. The value may be negative when
/// `alpha >= 1 / L_Bsym`; see [`alpha_b_definite`].
pub fn lyapunov_alpha_b(x: &Vector, x_star: &Vector, alpha: f64, bsym: &Matrix) -> Result<f64> {
    check_dim(x_star.len(), x.len())?;
    shifted_form(&(x - x_star), 1.0, alpha, bsym)
}

/// `1/2 |x - x*|^2_{I - alpha Bsym} - alpha D_F(x*, x)`
pub fn lyapunov_alpha_bd(
    x: &Vector,
    x_star: &Vector,
    alpha: f64,
    bsym: &Matrix,
    f: &dyn Objective,
) -> Result<f64> {
    Ok(lyapunov_alpha_b(x, x_star, alpha, bsym)? - alpha * bregman(f, x_star, x)?)
}

/// `D_F(x, x*) + mu/2 |y - x*|^2`
pub fn lyapunov_acc(
    x: &Vector,
    y: &Vector,
    x_star: &Vector,
    f: &dyn Objective,
    mu: f64,
) -> Result<f64> {
    check_dim(x_star.len(), y.len())?;
    Ok(bregman(f, x, x_star)? + 0.5 * mu * (y - x_star).norm_squared())
}

/// `D_F(x, x*) + 1/2 |y - x*|^2_{mu I - alpha Bsym}`
pub fn lyapunov_acc_alpha_b(
    x: &Vector,
    y: &Vector,
    x_star: &Vector,
    alpha: f64,
    bsym: &Matrix,
    f: &dyn Objective,
    mu: f64,
) -> Result<f64> {
    check_dim(x_star.len(), y.len())?;
    Ok(bregman(f, x, x_star)? + shifted_form(&(y - x_star), mu, alpha, bsym)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnObjective, Quadratic};

    fn v(a: &[f64]) -> Vector {
        Vector::from_row_slice(a)
    }

    fn half_norm() -> Quadratic {
        Quadratic::isotropic(1.0, Vector::zeros(2))
    }

    fn swap() -> Matrix {
        Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    #[test]
    fn bregman_examples() {
        let f = half_norm();
        assert_eq!(bregman(&f, &v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), 0.5);
        assert_eq!(
            bregman(&f, &v(&[0.3, -2.0]), &v(&[0.3, -2.0])).unwrap(),
            0.0
        );
        let h = Quadratic::new(Matrix::from_diagonal(&v(&[1.0, 4.0])), Vector::zeros(2)).unwrap();
        assert_eq!(bregman(&h, &v(&[1.0, 1.0]), &v(&[0.0, 0.0])).unwrap(), 2.5);
    }

    #[test]
    fn bregman_needs_values() {
        let f = FnObjective::new(2, |x| x.clone());
        assert!(matches!(
            bregman(&f, &v(&[1.0, 0.0]), &v(&[0.0, 0.0])),
            Err(Error::MissingValueOracle(_))
        ));
    }

    #[test]
    fn eq_examples() {
        let z = v(&[0.0, 0.0]);
        assert_eq!(lyapunov_eq(&z, &z).unwrap(), 0.0);
        assert_eq!(lyapunov_eq(&v(&[1.0, 1.0]), &z).unwrap(), 1.0);
        assert_eq!(lyapunov_eq(&v(&[3.0, 4.0]), &z).unwrap(), 12.5);
        assert!(lyapunov_eq(&v(&[1.0]), &z).is_err());
    }

    #[test]
    fn alpha_b_examples() {
        let z = v(&[0.0, 0.0]);
        assert_eq!(lyapunov_alpha_b(&z, &z, 0.5, &swap()).unwrap(), 0.0);
        assert_eq!(
            lyapunov_alpha_b(&v(&[1.0, 0.0]), &z, 0.5, &swap()).unwrap(),
            0.5
        );
        // 1/2 e'(I - 0.5 Bsym)e with e = (1,1): 1/2 (2 - 0.5 * 2)
        let e = v(&[1.0, 1.0]);
        let oracle = 0.5 * e.dot(&((Matrix::identity(2, 2) - swap() * 0.5) * &e));
        assert_eq!(lyapunov_alpha_b(&e, &z, 0.5, &swap()).unwrap(), oracle);
        assert_eq!(oracle, 0.5);
    }

    #[test]
    fn alpha_bd_examples() {
        let z = v(&[0.0, 0.0]);
        let f = half_norm();
        assert_eq!(
            lyapunov_alpha_bd(&z, &z, 0.2, &Matrix::zeros(2, 2), &f).unwrap(),
            0.0
        );
        let val = lyapunov_alpha_bd(&v(&[1.0, 0.0]), &z, 0.2, &Matrix::zeros(2, 2), &f).unwrap();
        assert!((val - 0.4).abs() < 1e-15);
    }

    #[test]
    fn acc_examples() {
        let z = v(&[0.0, 0.0]);
        let f = half_norm();
        assert_eq!(lyapunov_acc(&z, &z, &z, &f, 1.0).unwrap(), 0.0);
        assert_eq!(
            lyapunov_acc(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), &z, &f, 1.0).unwrap(),
            1.0
        );
        let x = v(&[0.4, -1.0]);
        let y = v(&[2.0, 0.5]);
        assert_eq!(
            lyapunov_acc_alpha_b(&x, &y, &z, 0.3, &Matrix::zeros(2, 2), &f, 1.0).unwrap(),
            lyapunov_acc(&x, &y, &z, &f, 1.0).unwrap()
        );
        assert_eq!(
            lyapunov_acc_alpha_b(&z, &z, &z, 0.3, &swap(), &f, 1.0).unwrap(),
            0.0
        );
    }
}
