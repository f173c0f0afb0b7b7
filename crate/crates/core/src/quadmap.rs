//! Explicit quadratic feature map and the linear form of a Mahalanobis
//! distance to a fixed center.
//!
//! `Φ(x)` layout for `x ∈ R^d`, total length `d(d+3)/2`:
//!
//! 1. squares `x₁², …, x_d²`
//! 2. cross terms `x_i·x_j` for `i > j`, row-major over `(i, j)`:
//!    `x₂x₁, x₃x₁, x₃x₂, x₄x₁, …`
//! 3. linear terms `x₁, …, x_d`
//!
//! The quadratic part (blocks 1 and 2) has length `d(d+1)/2`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;

pub fn quad_dim(d: usize) -> usize {
    d * (d + 3) / 2
}

pub fn quad_part_dim(d: usize) -> usize {
    d * (d + 1) / 2
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadFeature {
    pub values: Array1<f64>,
    pub dim: usize,
}

impl QuadFeature {
    pub fn quadratic_part(&self) -> ArrayView1<'_, f64> {
        self.values.slice(ndarray::s![..quad_part_dim(self.dim)])
    }

    pub fn linear_part(&self) -> ArrayView1<'_, f64> {
        self.values.slice(ndarray::s![quad_part_dim(self.dim)..])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn quadratic_terms(x: ArrayView1<'_, f64>, out: &mut Vec<f64>) {
    let d = x.len();
    out.extend(x.iter().map(|v| v * v));
    for i in 1..d {
        for j in 0..i {
            out.push(x[i] * x[j]);
        }
    }
}

pub fn phi(x: ArrayView1<'_, f64>) -> QuadFeature {
    let d = x.len();
    let mut v = Vec::with_capacity(quad_dim(d));
    quadratic_terms(x, &mut v);
    v.extend(x.iter().copied());
    QuadFeature {
        values: Array1::from(v),
        dim: d,
    }
}

/// `d²_M(·, x_l)` written as a hyperplane `w_lᵀΦ(x) + b_l` in quadratic
/// space, together with the shifted offset `b'_l` of the parallel plane
/// `H'_l` and the width of the band between them.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalHyperplane {
    pub w_quad: Array1<f64>,
    pub w_lin: Array1<f64>,
    pub b: f64,
    pub b_prime: f64,
    pub center_index: usize,
    pub radius: f64,
    pub gamma: f64,
    pub band: f64,
}

impl LocalHyperplane {
    pub fn dim(&self) -> usize {
        self.w_lin.len()
    }

    /// Full weight vector in `Φ` layout.
    pub fn weights(&self) -> Array1<f64> {
        let mut w = Vec::with_capacity(self.w_quad.len() + self.w_lin.len());
        w.extend(self.w_quad.iter().copied());
        w.extend(self.w_lin.iter().copied());
        Array1::from(w)
    }

    /// `R_l² + γ/2`, the gap between `b_l` and `b'_l`.
    pub fn shift(&self) -> f64 {
        self.radius * self.radius + self.gamma / 2.0
    }
}

/// Shared quadratic weights of metric `m`: `M_kk` then `2·M_ij` for `i > j`.
pub fn quadratic_weights(m: &Array2<f64>) -> Result<Array1<f64>> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    let mut asym = 0.0f64;
    for i in 0..r {
        for j in 0..i {
            asym = asym.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let mut w = Vec::with_capacity(quad_part_dim(r));
    w.extend(m.diag().iter().copied());
    for i in 1..r {
        for j in 0..i {
            w.push(2.0 * m[[i, j]]);
        }
    }
    Ok(Array1::from(w))
}

pub fn hyperplane_from_metric(
    m: &Array2<f64>,
    center_index: usize,
    x_l: ArrayView1<'_, f64>,
    radius: f64,
    gamma: f64,
) -> Result<LocalHyperplane> {
    let w_quad = quadratic_weights(m)?;
    from_shared(w_quad, m, center_index, x_l, radius, gamma)
}

pub(crate) fn from_shared(
    w_quad: Array1<f64>,
    m: &Array2<f64>,
    center_index: usize,
    x_l: ArrayView1<'_, f64>,
    radius: f64,
    gamma: f64,
) -> Result<LocalHyperplane> {
    if x_l.len() != m.nrows() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: x_l.len(),
        });
    }
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be nonnegative, got {radius}")));
    }
    let mx = m.dot(&x_l);
    let w_lin = mx.mapv(|v| -2.0 * v);
    let b = x_l.dot(&mx);
    let b_prime = b - (radius * radius + gamma / 2.0);
    let band = (radius * radius + gamma).sqrt() - radius;
    Ok(LocalHyperplane {
        w_quad,
        w_lin,
        b,
        b_prime,
        center_index,
        radius,
        gamma,
        band,
    })
}

/// `w_quadᵀ quad(Φ(x)) + w_linᵀx + b_l`.
pub fn eval_linearized(h: &LocalHyperplane, x: ArrayView1<'_, f64>) -> Result<f64> {
    let d = h.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    let mut q = Vec::with_capacity(quad_part_dim(d));
    quadratic_terms(x, &mut q);
    let quad: f64 = h.w_quad.iter().zip(&q).map(|(a, b)| a * b).sum();
    Ok(quad + h.w_lin.dot(&x) + h.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn phi_layout() {
        assert_eq!(phi(array![3.0].view()).values, array![9.0, 3.0]);
        assert_eq!(phi(array![1.0, 2.0].view()).values, array![1.0, 4.0, 2.0, 1.0, 2.0]);
        let f = phi(array![1.0, 2.0, 3.0].view());
        assert_eq!(f.len(), 9);
        assert_eq!(f.values, array![1.0, 4.0, 9.0, 2.0, 3.0, 6.0, 1.0, 2.0, 3.0]);
        assert_eq!(f.linear_part(), array![1.0, 2.0, 3.0]);
    }

    #[test]
    fn identity_at_origin() {
        let h = hyperplane_from_metric(&Array2::eye(2), 0, array![0.0, 0.0].view(), 0.0, 1.0).unwrap();
        assert_eq!(h.w_quad, array![1.0, 1.0, 0.0]);
        assert_eq!(h.w_lin, array![0.0, 0.0]);
        assert_eq!(h.b, 0.0);
        assert_eq!(h.b_prime, -0.5);
        assert_eq!(h.band, 1.0);
        assert_eq!(eval_linearized(&h, array![1.0, 2.0].view()).unwrap(), 5.0);
    }

    #[test]
    fn identity_off_origin() {
        let x_l = array![1.0, 1.0];
        let h = hyperplane_from_metric(&Array2::eye(2), 3, x_l.view(), 0.0, 1.0).unwrap();
        assert_eq!(h.w_lin, array![-2.0, -2.0]);
        assert_eq!(h.b, 2.0);
        assert_eq!(eval_linearized(&h, x_l.view()).unwrap(), 0.0);
        assert_eq!(h.weights().len(), quad_dim(2));
    }

    #[test]
    fn cross_terms_doubled() {
        let m = array![[2.0, 0.5], [0.5, 1.0]];
        assert_eq!(quadratic_weights(&m).unwrap(), array![2.0, 1.0, 1.0]);
    }

    #[test]
    fn errors() {
        let asym = array![[1.0, 0.1], [0.0, 1.0]];
        assert!(matches!(
            hyperplane_from_metric(&asym, 0, array![0.0, 0.0].view(), 0.0, 1.0),
            Err(Error::NotSymmetric(_))
        ));
        let h = hyperplane_from_metric(&Array2::eye(2), 0, array![0.0, 0.0].view(), 0.0, 1.0).unwrap();
        assert!(eval_linearized(&h, array![1.0].view()).is_err());
        assert!(hyperplane_from_metric(&Array2::eye(2), 0, array![0.0].view(), 0.0, 1.0).is_err());
    }
}
