//! Least squares and ridge regression.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_rows, LearnError};
use crate::scalar::Scalar;

/// Ridge strength used when exact least squares hits a rank-deficient system.
pub const FALLBACK_RIDGE: f64 = 1e-8;

/// `y ≈ intercept + Σ coefficients[j] · x[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<T> {
    pub intercept: T,
    pub coefficients: Vec<T>,
    /// Set when exact least squares was singular and the ridge fallback was used.
    #[serde(default)]
    pub ridge_fallback: bool,
}

impl<T: Scalar> LinearModel<T> {
    pub fn predict_row(&self, row: ArrayView1<T>) -> T {
        self.coefficients
            .iter()
            .zip(row.iter())
            .fold(self.intercept, |acc, (&w, &x)| acc + w * x)
    }

    pub fn predict(&self, x: ArrayView2<T>) -> Array1<T> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }
}

/// Column means and the centered copies of `x` and `y`.
pub(crate) struct Centered<T> {
    pub x_mean: Array1<T>,
    pub y_mean: T,
    pub x: Array2<T>,
    pub y: Array1<T>,
}

pub(crate) fn center<T: Scalar>(x: ArrayView2<T>, y: ArrayView1<T>) -> Centered<T> {
    let x_mean = x
        .mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(x.ncols()));
    let y_mean = y.mean().unwrap_or_else(T::zero);
    let xc = &x - &x_mean.view().insert_axis(Axis(0));
    let yc = y.mapv(|v| v - y_mean);
    Centered {
        x_mean,
        y_mean,
        x: xc,
        y: yc,
    }
}

fn assemble<T: Scalar>(c: &Centered<T>, coefficients: Array1<T>, ridge_fallback: bool) -> LinearModel<T> {
    let intercept = c.y_mean - coefficients.dot(&c.x_mean);
    LinearModel {
        intercept,
        coefficients: coefficients.to_vec(),
        ridge_fallback,
    }
}

/// Ordinary least squares with an intercept, solved by Householder QR on the
/// centered design. Fails with [`LearnError::SingularSystem`] when the
/// centered design does not have full column rank.
pub fn least_squares<T: Scalar>(x: ArrayView2<T>, y: ArrayView1<T>) -> Result<LinearModel<T>, LearnError> {
    check_rows(x.nrows(), y.len())?;
    let c = center(x, y);
    let coef = qr_solve(c.x.clone(), c.y.clone())?;
    Ok(assemble(&c, coef, false))
}

/// Least squares, falling back to ridge with λ = [`FALLBACK_RIDGE`] (and
/// flagging the model) when the system is singular.
pub fn least_squares_or_ridge<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView1<T>,
) -> Result<LinearModel<T>, LearnError> {
    match least_squares(x, y) {
        Err(LearnError::SingularSystem) => {
            let mut m = ridge(x, y, T::of(FALLBACK_RIDGE))?;
            m.ridge_fallback = true;
            Ok(m)
        }
        other => other,
    }
}

/// Minimizes `(1/2n)‖y − b₀ − Xb‖² + (λ/2)‖b‖²`; the intercept is not penalized.
pub fn ridge<T: Scalar>(x: ArrayView2<T>, y: ArrayView1<T>, lambda: T) -> Result<LinearModel<T>, LearnError> {
    check_rows(x.nrows(), y.len())?;
    let c = center(x, y);
    let n = T::of_usize(x.nrows());
    let mut gram = c.x.t().dot(&c.x) / n;
    for j in 0..gram.nrows() {
        gram[[j, j]] += lambda;
    }
    let rhs = c.x.t().dot(&c.y) / n;
    let coef = cholesky_solve(gram, rhs)?;
    Ok(assemble(&c, coef, false))
}

/// Solves `min ‖a·x − b‖` for full-column-rank `a` via Householder QR.
fn qr_solve<T: Scalar>(mut a: Array2<T>, mut b: Array1<T>) -> Result<Array1<T>, LearnError> {
    let (n, p) = a.dim();
    if p == 0 {
        return Ok(Array1::zeros(0));
    }
    if n < p {
        return Err(LearnError::SingularSystem);
    }
    let mut diag = Vec::with_capacity(p);
    for k in 0..p {
        let norm = a.slice(ndarray::s![k.., k]).iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm == T::zero() {
            diag.push(T::zero());
            continue;
        }
        let alpha = if a[[k, k]] > T::zero() { -norm } else { norm };
        // v = a[k.., k] - alpha e1
        let mut v: Array1<T> = a.slice(ndarray::s![k.., k]).to_owned();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|&t| t * t).sum();
        if vnorm2 == T::zero() {
            diag.push(alpha);
            continue;
        }
        let two = T::of(2.0);
        for j in k..p {
            let dot: T = (0..n - k).map(|i| v[i] * a[[k + i, j]]).sum();
            let f = two * dot / vnorm2;
            for i in 0..n - k {
                a[[k + i, j]] -= f * v[i];
            }
        }
        let dot: T = (0..n - k).map(|i| v[i] * b[k + i]).sum();
        let f = two * dot / vnorm2;
        for i in 0..n - k {
            b[k + i] -= f * v[i];
        }
        diag.push(a[[k, k]]);
    }
    let scale = diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let tol = scale * T::epsilon() * T::of_usize(n.max(p)) * T::of(10.0);
    if scale == T::zero() || diag.iter().any(|d| d.abs() <= tol) {
        return Err(LearnError::SingularSystem);
    }
    // back substitution on the upper triangle
    let mut x = Array1::zeros(p);
    for k in (0..p).rev() {
        let mut s = b[k];
        for j in k + 1..p {
            s -= a[[k, j]] * x[j];
        }
        x[k] = s / a[[k, k]];
    }
    Ok(x)
}

/// Solves `a·x = b` for symmetric positive definite `a`.
pub(crate) fn cholesky_solve<T: Scalar>(a: Array2<T>, b: Array1<T>) -> Result<Array1<T>, LearnError> {
    let p = a.nrows();
    let mut l = Array2::<T>::zeros((p, p));
    for i in 0..p {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= T::zero() {
                    return Err(LearnError::SingularSystem);
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    let mut z = Array1::<T>::zeros(p);
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    let mut x = Array1::<T>::zeros(p);
    for i in (0..p).rev() {
        let mut s = z[i];
        for k in i + 1..p {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn recovers_exact_line() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let y = array![5.0f64, 7.0, 9.0, 11.0];
        let m = least_squares(x.view(), y.view()).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((m.intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let x = array![[1.0f32, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0]];
        let y = x.map_axis(Axis(1), |r| 1.0 + 2.0 * r[0] - r[1]);
        let m = least_squares(x.view(), y.view()).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-4);
        assert!((m.coefficients[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn collinear_columns_fall_back_to_ridge() {
        let x = array![[1.0f64, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let y = array![1.0, 2.0, 3.0];
        assert_eq!(least_squares(x.view(), y.view()), Err(LearnError::SingularSystem));
        let m = least_squares_or_ridge(x.view(), y.view()).unwrap();
        assert!(m.ridge_fallback);
        let pred = m.predict(x.view());
        for (p, t) in pred.iter().zip(y.iter()) {
            assert!((p - t).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_column_is_singular() {
        let x = array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]];
        let y = array![1.0, 2.0, 3.0];
        assert_eq!(least_squares(x.view(), y.view()), Err(LearnError::SingularSystem));
    }

    #[test]
    fn ridge_shrinks() {
        let x = array![[-1.0f64], [0.0], [1.0]];
        let y = array![-2.0, 0.0, 2.0];
        let m = ridge(x.view(), y.view(), 1.0).unwrap();
        // gram = 2/3, rhs = 4/3 -> b = (4/3)/(2/3 + 1) = 0.8
        assert!((m.coefficients[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_input() {
        let x = Array2::<f64>::zeros((0, 2));
        let y = Array1::<f64>::zeros(0);
        assert_eq!(least_squares(x.view(), y.view()), Err(LearnError::EmptyTrainingSet));
    }
}
