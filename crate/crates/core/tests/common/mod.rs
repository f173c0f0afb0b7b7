#![allow(dead_code)]

use marginmetric::data::{Dataset, Label};
use marginmetric::rng;
use ndarray::{Array1, Array2};
use rand::RngCore;
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn load(name: &str) -> Dataset {
    marginmetric::data::load_auto(data_dir().join(format!("{name}.csv"))).expect("bundled dataset")
}

pub const DATASETS: [&str; 4] = ["sonar", "ionosphere", "wdbc", "bupa"];

pub fn uniform(r: &mut Xoshiro256PlusPlus, lo: f64, hi: f64) -> f64 {
    let u = (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

pub fn gaussian_matrix(r: &mut Xoshiro256PlusPlus, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng::normal(r))
}

/// `AᵀA` for a random square `A`.
pub fn random_psd(r: &mut Xoshiro256PlusPlus, d: usize) -> Array2<f64> {
    let a = gaussian_matrix(r, d, d);
    let m = a.t().dot(&a);
    (&m + &m.t()) * 0.5
}

/// Random labels with both classes present.
pub fn random_labels(r: &mut Xoshiro256PlusPlus, n: usize) -> Vec<Label> {
    loop {
        let y: Vec<Label> = (0..n)
            .map(|_| if r.next_u64() & 1 == 1 { Label::Positive } else { Label::Negative })
            .collect();
        if y.contains(&Label::Positive) && y.contains(&Label::Negative) {
            return y;
        }
    }
}

/// Two Gaussian blobs pushed apart along a random direction.
pub fn blobs(r: &mut Xoshiro256PlusPlus, n: usize, d: usize, shift: f64) -> Dataset {
    let mut x = gaussian_matrix(r, n, d);
    let dir: Vec<f64> = (0..d).map(|_| rng::normal(r)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
        for k in 0..d {
            x[[i, k]] += label.sign() * shift * dir[k] / norm;
        }
        y.push(label);
    }
    Dataset::new(x, y).unwrap()
}

/// Dual objective `Σδ − ½ δᵀQδ` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(k: &Array2<f64>, y: &[f64], delta: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += delta[i] * delta[j] * y[i] * y[j] * k[[i, j]];
        }
    }
    delta.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{lo ≤ δ ≤ hi, yᵀδ = 0}` by bisection on the
/// multiplier of the equality constraint.
pub fn project_box_hyperplane(v: &[f64], y: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let at = |tau: f64| -> (Vec<f64>, f64) {
        let d: Vec<f64> = (0..v.len()).map(|i| (v[i] - tau * y[i]).clamp(lo[i], hi[i])).collect();
        let s = d.iter().zip(y).map(|(a, b)| a * b).sum();
        (d, s)
    };
    // yᵀδ(τ) is nonincreasing in τ.
    let mut a = -1.0;
    let mut b = 1.0;
    while at(a).1 < 0.0 {
        a *= 2.0;
    }
    while at(b).1 > 0.0 {
        b *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if at(m).1 > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    at(0.5 * (a + b)).0
}

/// Accelerated projected gradient ascent with adaptive restart on the box QP
/// dual. Independent of the SMO code path.
pub fn projected_gradient_oracle(k: &Array2<f64>, y: &[f64], lo: &[f64], hi: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let q = Array2::from_shape_fn((n, n), |(i, j)| y[i] * y[j] * k[[i, j]]);
    // Lipschitz bound from the Frobenius norm.
    let lip = q.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let step = 1.0 / lip;
    let grad = |d: &[f64]| -> Vec<f64> {
        let qd = q.dot(&Array1::from(d.to_vec()));
        (0..n).map(|i| 1.0 - qd[i]).collect()
    };
    let mut x = project_box_hyperplane(&vec![0.0; n], y, lo, hi);
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut best = dual_objective(k, y, &x);
    let mut best_x = x.clone();
    for _ in 0..iters {
        let g = grad(&z);
        let cand: Vec<f64> = (0..n).map(|i| z[i] + step * g[i]).collect();
        let x_new = project_box_hyperplane(&cand, y, lo, hi);
        let f_new = dual_objective(k, y, &x_new);
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if f_new < dual_objective(k, y, &x) {
            // Restart momentum when the objective drops.
            z = x.clone();
            t = 1.0;
            continue;
        }
        z = (0..n).map(|i| x_new[i] + (t - 1.0) / t_new * (x_new[i] - x[i])).collect();
        x = x_new;
        t = t_new;
        if f_new > best {
            best = f_new;
            best_x = x.clone();
        }
    }
    (best_x, best)
}

/// Central finite-difference derivative of `f` along symmetric direction
/// `E_ij + E_ji` (or `E_ii`).
pub fn sym_fd(f: &dyn Fn(&Array2<f64>) -> f64, m: &Array2<f64>, i: usize, j: usize, h: f64) -> f64 {
    let mut e = Array2::<f64>::zeros(m.dim());
    e[[i, j]] = 1.0;
    e[[j, i]] = 1.0;
    let plus = m + &(&e * h);
    let minus = m - &(&e * h);
    (f(&plus) - f(&minus)) / (2.0 * h)
}
