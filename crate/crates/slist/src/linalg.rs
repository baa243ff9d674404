//! Dense symmetric positive-definite inversion.
//!
//! Everything the solver inverts is a regularized Gram matrix, so a Cholesky
//! factorization is always applicable. The routine reports the max-norm
//! residual of `A * inv(A) - I` as a diagnostic and retries once with a small
//! diagonal bump before giving up, keeping ill-conditioning loud instead of
//! silently falling back to a pseudo-inverse.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Result of [`invert_spd`].
#[derive(Debug, Clone)]
pub struct SpdInverse {
    pub inverse: Array2<f64>,
    /// `max_ij |A * inv(A) - I|`, a cheap conditioning diagnostic.
    pub max_residual: f64,
    /// Whether the diagonal-bump retry was needed.
    pub bumped: bool,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Row-oriented Cholesky (`A = L * L^T`), returning the lower factor as a flat
/// row-major buffer, or the failing row and pivot.
fn cholesky_lower(a: &Array2<f64>) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let n = a.nrows();
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            let v = a[[i, j]] - s;
            if i == j {
                if !(v > 0.0) || !v.is_finite() {
                    return Err((i, v));
                }
                l[i * n + i] = v.sqrt();
            } else {
                l[i * n + j] = v / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Inverts the lower-triangular factor by forward substitution, one column at
/// a time through a contiguous scratch buffer.
fn invert_lower(l: &[f64], n: usize) -> Array2<f64> {
    let mut m = Array2::<f64>::zeros((n, n));
    let mut col = vec![0.0f64; n];
    for j in 0..n {
        col[j] = 1.0 / l[j * n + j];
        for i in j + 1..n {
            let s = dot(&l[i * n + j..i * n + i], &col[j..i]);
            col[i] = -s / l[i * n + i];
        }
        for i in j..n {
            m[[i, j]] = col[i];
        }
    }
    m
}

fn max_asymmetry(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

/// Inverts a symmetric positive-definite matrix via Cholesky.
///
/// The input must be symmetric to within `1e-10` relative to its largest
/// entry. On a failed factorization the matrix is retried once with the
/// diagonal bumped by `1e-8 * trace(A) / n`; a second failure is an error.
pub fn invert_spd(a: &Array2<f64>) -> Result<SpdInverse> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let scale = a.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())).max(1.0);
    let asym = max_asymmetry(a);
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric(asym / scale));
    }

    let (l, bumped) = match cholesky_lower(a) {
        Ok(l) => (l, false),
        Err(_) => {
            let trace: f64 = a.diag().sum();
            let bump = 1e-8 * trace / n as f64;
            let mut retry = a.clone();
            for i in 0..n {
                retry[[i, i]] += bump;
            }
            match cholesky_lower(&retry) {
                Ok(l) => (l, true),
                Err((row, pivot)) => return Err(Error::Singular { row, pivot }),
            }
        }
    };

    let linv = invert_lower(&l, n);
    let mut inverse = linv.t().dot(&linv);
    // The product is symmetric up to rounding; make it exact.
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (inverse[[i, j]] + inverse[[j, i]]);
            inverse[[i, j]] = v;
            inverse[[j, i]] = v;
        }
    }

    let product = a.dot(&inverse);
    let mut max_residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            max_residual = max_residual.max((product[[i, j]] - target).abs());
        }
    }
    Ok(SpdInverse {
        inverse,
        max_residual,
        bumped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_matrix_inverts_exactly() {
        let a = Array2::from_diag(&Array1::from_elem(3, 2.0));
        let out = invert_spd(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((out.inverse[[i, j]] - expect).abs() < 1e-15);
            }
        }
        assert!(!out.bumped);
    }

    #[test]
    fn rank_one_update_matches_sherman_morrison() {
        // (I + c * e e^T)^{-1} = I - c / (1 + c n) * e e^T for the ones vector.
        let n = 6;
        let c = 0.37;
        let mut a = Array2::<f64>::eye(n);
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] += c;
            }
        }
        let out = invert_spd(&a).unwrap();
        let coeff = c / (1.0 + c * n as f64);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 - coeff } else { -coeff };
                assert!((out.inverse[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_spd_has_small_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10;
        let r = Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0));
        let a = r.t().dot(&r) + Array2::<f64>::eye(n);
        let out = invert_spd(&a).unwrap();
        assert!(out.max_residual < 1e-8, "residual {}", out.max_residual);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let mut a = Array2::<f64>::eye(3);
        a[[0, 1]] = 0.5;
        assert!(matches!(invert_spd(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn zero_matrix_fails_even_after_bump() {
        let a = Array2::<f64>::zeros((3, 3));
        assert!(matches!(invert_spd(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn near_singular_matrix_uses_the_bump() {
        let mut a = Array2::<f64>::zeros((2, 2));
        a[[0, 0]] = 1.0;
        let out = invert_spd(&a).unwrap();
        assert!(out.bumped);
    }
}
