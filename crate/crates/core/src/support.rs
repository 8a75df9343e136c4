//! Index-set helpers. Supports are ordered sets of 0-based column indices.

use std::collections::BTreeSet;

use nalgebra::DVector;

pub type Support = BTreeSet<usize>;

/// Indices of the nonzero entries of `x`.
pub fn support_of(x: &DVector<f64>) -> Support {
    x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
}

/// Boolean membership mask of length `m`.
pub fn mask(set: &Support, m: usize) -> Vec<bool> {
    let mut out = vec![false; m];
    for &i in set {
        out[i] = true;
    }
    out
}

/// `‖x_S‖₂`
pub fn restricted_norm(x: &DVector<f64>, set: &Support) -> f64 {
    set.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt()
}

/// `‖x_S‖∞`
pub fn restricted_max_abs(x: &DVector<f64>, set: &Support) -> f64 {
    set.iter().map(|&i| x[i].abs()).fold(0.0, f64::max)
}
