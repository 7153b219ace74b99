//! Brute-force reference for the SVM dual: projected gradient ascent on the
//! full kernel matrix.

#![allow(dead_code)]

use potlab_core::svm::{rbf_kernel, LabeledSet};

pub fn kernel_matrix(data: &LabeledSet<f64>, gamma: f64) -> Vec<Vec<f64>> {
    let x = data.inputs();
    x.iter().map(|a| x.iter().map(|b| rbf_kernel(a, b, gamma).unwrap()).collect()).collect()
}

/// Euclidean projection onto {0 ≤ a ≤ c, yᵀa = 0}: a = clip(v − λy), λ by bisection.
pub fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c)).collect() };
    let s = |lam: f64| -> f64 { at(lam).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if s(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Maximum of eᵀa − ½aᵀQa by projected gradient ascent.
pub fn dual_oracle(data: &LabeledSet<f64>, c: f64, gamma: f64) -> f64 {
    let k = kernel_matrix(data, gamma);
    let y: Vec<f64> = data.labels().iter().map(|l| *l as f64).collect();
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let trace: f64 = (0..n).map(|i| q(i, i)).sum();
    let step = 1.0 / trace;
    let mut a = vec![0.0; n];
    for _ in 0..200_000 {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q(i, j) * a[j]).sum::<f64>()).collect();
        let v: Vec<f64> = (0..n).map(|i| a[i] + step * grad[i]).collect();
        a = project(&v, &y, c);
    }
    let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q(i, j) * a[j]).sum::<f64>()).sum();
    a.iter().sum::<f64>() - 0.5 * quad
}
