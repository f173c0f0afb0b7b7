//! Cyclic Jacobi eigensolver and projection onto the PSD cone.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-12;

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Sweeps stop once the off-diagonal Frobenius
/// norm falls below `1e-12·‖A‖_F`.
pub fn jacobi_eigh(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (n, c) = a.dim();
    if n != c {
        return Err(Error::NotSquare { rows: n, cols: c });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut m: Vec<f64> = a.iter().copied().collect();
    // Eigenvectors stored as rows: v[k*n + r] is component r of vector k.
    let mut v = vec![0.0; n * n];
    for k in 0..n {
        v[k * n + k] = 1.0;
    }
    let scale = frobenius(a);
    let threshold = OFF_DIAGONAL_TOL * scale;
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += 2.0 * m[p * n + q] * m[p * n + q];
            }
        }
        s.sqrt()
    };
    let mut converged = false;
    for _ in 0..=MAX_SWEEPS {
        if off(&m) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                m[p * n + p] -= t * apq;
                m[q * n + q] += t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m[r * n + p];
                    let arq = m[r * n + q];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    m[r * n + p] = np;
                    m[p * n + r] = np;
                    m[r * n + q] = nq;
                    m[q * n + r] = nq;
                }
                let (lo, hi) = v.split_at_mut(q * n);
                let vp = &mut lo[p * n..p * n + n];
                let vq = &mut hi[..n];
                for (a, b) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence { sweeps: MAX_SWEEPS });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[[r, dst]] = v[src * n + r];
        }
    }
    Ok((values, vectors))
}

/// Symmetric part `(A + Aᵀ)/2`.
pub fn symmetrize(a: &Array2<f64>) -> Array2<f64> {
    (a + &a.t()) * 0.5
}

/// `V diag(values) Vᵀ`, symmetrized.
pub fn reconstruct(values: &Array1<f64>, vectors: &Array2<f64>) -> Array2<f64> {
    let scaled = vectors * values;
    symmetrize(&scaled.dot(&vectors.t()))
}

/// Frobenius-nearest PSD matrix: symmetrize, clamp negative eigenvalues to
/// zero, reconstruct.
pub fn project_psd(a: &Array2<f64>) -> Result<Array2<f64>> {
    let sym = symmetrize(a);
    let (values, vectors) = jacobi_eigh(&sym)?;
    if values.iter().all(|&l| l >= 0.0) {
        return Ok(sym);
    }
    let clamped = values.mapv(|l| l.max(0.0));
    Ok(reconstruct(&clamped, &vectors))
}

pub fn min_eigenvalue(a: &Array2<f64>) -> Result<f64> {
    let (values, _) = jacobi_eigh(&symmetrize(a))?;
    Ok(values.iter().cloned().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_input() {
        let a = array![[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        let (vals, vecs) = jacobi_eigh(&a).unwrap();
        assert_eq!(vals, array![-1.0, 2.0, 3.0]);
        for j in 0..3 {
            let nz = vecs.column(j).iter().filter(|v| v.abs() > 0.0).count();
            assert_eq!(nz, 1);
        }
    }

    #[test]
    fn swap_matrix() {
        let (vals, _) = jacobi_eigh(&array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clamp_negative_direction() {
        let p = project_psd(&array![[1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert_eq!(p, array![[1.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn psd_is_fixed_point() {
        let a = array![[2.0, 0.5], [0.5, 1.0]];
        let p = project_psd(&a).unwrap();
        assert!((&p - &a).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn rejects_non_square_and_nan() {
        assert!(jacobi_eigh(&Array2::zeros((2, 3))).is_err());
        assert!(jacobi_eigh(&array![[f64::NAN]]).is_err());
    }

    #[test]
    fn zero_matrix() {
        let (vals, vecs) = jacobi_eigh(&Array2::zeros((3, 3))).unwrap();
        assert!(vals.iter().all(|&v| v == 0.0));
        assert_eq!(vecs, Array2::eye(3));
    }
}
