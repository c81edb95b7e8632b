//! Numerical check of the multivariate Gaussian integral
//! `∫ exp(−½ xᵀAx + bᵀx + c) dⁿx = √det(2πA⁻¹) · exp(½ bᵀA⁻¹b + c)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianCheck {
    pub numeric: f64,
    pub closed_form: f64,
    pub residual: f64,
}

const MAX_DIM: usize = 6;

fn closed_form(a: &DMatrix<f64>, b: &DVector<f64>, c: f64) -> Result<f64> {
    let chol = a.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let n = a.nrows() as f64;
    let det = chol.determinant();
    let ainv_b = chol.solve(b);
    Ok(((2.0 * std::f64::consts::PI).powf(n) / det).sqrt() * (0.5 * b.dot(&ainv_b) + c).exp())
}

/// Gauss–Hermite nodes and weights for `∫ e^{−t²} f(t) dt` (Golub–Welsch).
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let j = DMatrix::from_fn(n, n, |i, k| {
        if i + 1 == k || k + 1 == i {
            (i.max(k) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(j);
    let mut pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().unzip()
}

/// Nested adaptive quadrature over a box around the stationary point.
fn nested(a: &DMatrix<f64>, b: &DVector<f64>, c: f64, center: &DVector<f64>, half: &[f64]) -> Result<f64> {
    let n = a.nrows();
    let q = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        max_intervals: 400,
    };
    fn level(
        k: usize,
        x: &mut Vec<f64>,
        a: &DMatrix<f64>,
        b: &DVector<f64>,
        c: f64,
        center: &DVector<f64>,
        half: &[f64],
        q: &QuadOptions,
    ) -> Result<f64> {
        let n = a.nrows();
        if k == n {
            let xv = DVector::from_column_slice(x);
            return Ok((-0.5 * xv.dot(&(a * &xv)) + b.dot(&xv) + c).exp());
        }
        let (lo, hi) = (center[k] - half[k], center[k] + half[k]);
        let r = integrate(
            |t| {
                x[k] = t;
                let mut inner = x.clone();
                level(k + 1, &mut inner, a, b, c, center, half, q)
            },
            lo,
            hi,
            &[center[k]],
            q,
        )?;
        Ok(r.value)
    }
    let mut x = vec![0.0; n];
    level(0, &mut x, a, b, c, center, half, &q)
}

/// Tensor-product Gauss–Hermite in coordinates scaled per axis.
fn hermite_product(a: &DMatrix<f64>, b: &DVector<f64>, c: f64, center: &DVector<f64>, points: usize) -> f64 {
    let n = a.nrows();
    let (t, w) = gauss_hermite(points);
    let scale: Vec<f64> = (0..n).map(|i| (2.0 / a[(i, i)]).sqrt()).collect();
    let total = points.pow(n as u32);
    let mut sum = 0.0;
    let mut x = DVector::zeros(n);
    for idx in 0..total {
        let mut rem = idx;
        let mut weight = 1.0;
        let mut gauss = 0.0;
        for k in 0..n {
            let j = rem % points;
            rem /= points;
            x[k] = center[k] + scale[k] * t[j];
            weight *= w[j] * scale[k];
            gauss += t[j] * t[j];
        }
        let exponent = -0.5 * x.dot(&(a * &x)) + b.dot(&x) + c + gauss;
        sum += weight * exponent.exp();
    }
    sum
}

/// Relative difference between quadrature and the closed form.
/// Dimensions up to 3 use nested adaptive quadrature; 4 to 6 use a
/// tensor-product Gauss–Hermite rule.
pub fn gaussian_integral_identity_check(a: &DMatrix<f64>, b: &DVector<f64>, c: f64) -> Result<GaussianCheck> {
    let n = a.nrows();
    if n == 0 || n > MAX_DIM || a.ncols() != n || b.len() != n {
        return Err(Error::invalid("A", format!("need a square matrix of size 1..={MAX_DIM} matching b")));
    }
    if (a - a.transpose()).abs().max() > 1e-12 * a.abs().max() {
        return Err(Error::invalid("A", "must be symmetric"));
    }
    let closed = closed_form(a, b, c)?;
    let center = a.clone().lu().solve(b).ok_or(Error::NotPositiveDefinite)?;
    let numeric = if n <= 3 {
        // Marginal widths from the diagonal of A⁻¹.
        let inv = a.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
        let half: Vec<f64> = (0..n).map(|i| 10.0 * inv[(i, i)].sqrt()).collect();
        nested(a, b, c, &center, &half)?
    } else {
        hermite_product(a, b, c, &center, 14)
    };
    Ok(GaussianCheck {
        numeric,
        closed_form: closed,
        residual: (numeric - closed).abs() / closed.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_in_two_dimensions() {
        let r = gaussian_integral_identity_check(&DMatrix::identity(2, 2), &DVector::zeros(2), 0.0).unwrap();
        assert!((r.closed_form - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!(r.residual < 1e-8);
    }

    #[test]
    fn diagonal_is_separable() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let b = DVector::from_vec(vec![0.3, -0.4]);
        let r = gaussian_integral_identity_check(&a, &b, 0.1).unwrap();
        let pi2 = 2.0 * std::f64::consts::PI;
        let expect = (pi2 / 2.0).sqrt() * (pi2 / 0.5).sqrt() * (0.5 * (0.09 / 2.0 + 0.16 / 0.5) + 0.1f64).exp();
        assert!((r.closed_form - expect).abs() < 1e-13 * expect);
        assert!(r.residual < 1e-8);
    }

    #[test]
    fn correlated_three_dimensions() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.4, -0.3, 0.4, 1.5, 0.2, -0.3, 0.2, 1.0]);
        let b = DVector::from_vec(vec![0.2, -0.1, 0.5]);
        let r = gaussian_integral_identity_check(&a, &b, -0.2).unwrap();
        assert!(r.residual < 1e-6, "{}", r.residual);
    }

    #[test]
    fn weakly_correlated_five_dimensions() {
        let a = DMatrix::from_fn(5, 5, |i, j| if i == j { 1.0 + 0.2 * i as f64 } else { 0.05 });
        let b = DVector::from_fn(5, |i, _| 0.1 * i as f64);
        let r = gaussian_integral_identity_check(&a, &b, 0.0).unwrap();
        assert!(r.residual < 1e-6, "{}", r.residual);
    }

    #[test]
    fn rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(
            gaussian_integral_identity_check(&a, &DVector::zeros(2), 0.0).unwrap_err(),
            Error::NotPositiveDefinite
        );
    }
}
