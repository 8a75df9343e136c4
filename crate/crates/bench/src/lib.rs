//! Shared fixtures for the benchmarks in `benches/`.

use nalgebra::{DMatrix, DVector};
use sparsetrack::measurement::{gaussian_matrix, measure, uniform_noise};
use sparsetrack::{init_signal, ModelParams, Support};

/// A reference-scale problem: `m = 200`, `S0 = 20`, `n = 59`, `c = 0.1266`.
pub struct Problem {
    pub a: DMatrix<f64>,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub support: Support,
    pub eps: f64,
}

pub fn reference_problem(seed: u64) -> Problem {
    let params = ModelParams { m: 200, s0: 20, sa: 2, d: 3, r: 1.0 };
    let state = init_signal(&params, seed).expect("valid model");
    let a = gaussian_matrix(59, 200, seed ^ 1, true).expect("valid shape");
    let c = 0.1266;
    let y = measure(&a, &state.x, &uniform_noise(59, c, seed ^ 2)).expect("shapes agree");
    Problem { eps: sparsetrack::noise_bound(c, 59), a, x: state.x, y, support: state.support }
}
