//! Per-time-step recursions: modified-CS, modified-CS with add-LS-del, LS-CS
//! with add-LS-del, and memoryless simple CS.
//!
//! Every step takes the previous support estimate `N̂_{t−1}` (the feedback
//! set `T`) and the current measurement, and returns the new estimate
//! together with a trace of the intermediate quantities. At `t = 0` the
//! feedback set is ignored and all recursions start from simple CS.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l1::{restricted_least_squares, PartialL1Solver};
use crate::support::Support;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "cs")]
    Cs,
    #[serde(rename = "modcs")]
    ModCs,
    #[serde(rename = "modcs-aldl")]
    ModCsAldl,
    #[serde(rename = "lscs")]
    LsCs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Cs, Algorithm::ModCs, Algorithm::ModCsAldl, Algorithm::LsCs];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cs => "cs",
            Algorithm::ModCs => "modcs",
            Algorithm::ModCsAldl => "modcs-aldl",
            Algorithm::LsCs => "lscs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?} (expected cs, modcs, modcs-aldl or lscs)")))
    }
}

/// Support thresholds. `alpha` is used by modified-CS and simple CS, the other
/// two by the add-LS-del recursions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub alpha: f64,
    pub alpha_add: f64,
    pub alpha_del: f64,
}

impl Thresholds {
    /// `α_add = c/2`, `α_del = r/2`, `α = (α_add + α_del)/2`.
    pub fn recipe(c: f64, r: f64) -> Self {
        let alpha_add = c / 2.0;
        let alpha_del = r / 2.0;
        Thresholds { alpha: (alpha_add + alpha_del) / 2.0, alpha_add, alpha_del }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("alpha_add", self.alpha_add), ("alpha_del", self.alpha_del)] {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("{name} >= 0 violated ({name} = {v})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// `{i : |x̂_i| > τ}`
    Single,
    /// `base ∪ {i ∉ base : |x̂_i| > τ}`
    Add,
    /// `base \ {i ∈ base : |x̂_i| ≤ τ}`
    Del,
}

pub fn support_threshold(xhat: &DVector<f64>, tau: f64, base: &Support, mode: ThresholdMode) -> Support {
    match mode {
        ThresholdMode::Single => (0..xhat.len()).filter(|&i| xhat[i].abs() > tau).collect(),
        ThresholdMode::Add => {
            let mut out = base.clone();
            out.extend((0..xhat.len()).filter(|&i| xhat[i].abs() > tau));
            out
        }
        ThresholdMode::Del => base.iter().copied().filter(|&i| !(xhat[i].abs() <= tau)).collect(),
    }
}

/// Feedback carried between time steps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackerState {
    /// `N̂_{t−1}`
    pub n_hat: Support,
    /// Index of the next step to run.
    pub t: usize,
}

impl TrackerState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Intermediate and final quantities of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub t: usize,
    /// Feedback set `T` actually used (empty at `t = 0`).
    pub prior: Support,
    /// Partial-ℓ1 estimate (modified-CS and simple CS; the first stage of add-LS-del).
    pub x_modcs: Option<DVector<f64>>,
    /// `β̂ + x̂_init` (LS-CS).
    pub x_csres: Option<DVector<f64>>,
    pub t_det: Option<Support>,
    pub x_det: Option<DVector<f64>>,
    /// Output estimate `x̂_t`.
    pub x_final: DVector<f64>,
    /// `N̂_t`
    pub n_hat_next: Support,
    /// `(x_t − x̂_det)_{T_det}` in increasing index order, when the truth is known.
    pub ls_error_vec: Option<Vec<f64>>,
    pub solver_converged: bool,
    pub solver_iterations: usize,
    /// An LS step ran on a set larger than `n` or on rank-deficient columns.
    pub rank_deficient: bool,
}

impl StepTrace {
    fn new(t: usize, prior: Support, m: usize) -> Self {
        StepTrace {
            t,
            prior,
            x_modcs: None,
            x_csres: None,
            t_det: None,
            x_det: None,
            x_final: DVector::zeros(m),
            n_hat_next: Support::new(),
            ls_error_vec: None,
            solver_converged: true,
            solver_iterations: 0,
            rank_deficient: false,
        }
    }
}

fn prior_of(state: &TrackerState) -> Support {
    if state.t == 0 {
        Support::new()
    } else {
        state.n_hat.clone()
    }
}

fn advance(state: &TrackerState, trace: &StepTrace) -> TrackerState {
    TrackerState { n_hat: trace.n_hat_next.clone(), t: state.t + 1 }
}

/// Modified-CS: partial-ℓ1 solve with `T = N̂_{t−1}`, then `N̂_t = {|x̂_i| > α}`.
/// The output is the ℓ1 estimate itself, so it may be nonzero outside `N̂_t`.
pub fn modcs_step(
    state: &TrackerState,
    solver: &PartialL1Solver<'_>,
    y: &DVector<f64>,
    eps: f64,
    thr: &Thresholds,
) -> Result<(StepTrace, TrackerState)> {
    let prior = prior_of(state);
    let sol = solver.solve(y, &prior, eps)?;
    let mut trace = StepTrace::new(state.t, prior, sol.beta.len());
    trace.n_hat_next = support_threshold(&sol.beta, thr.alpha, &Support::new(), ThresholdMode::Single);
    trace.solver_converged = sol.converged;
    trace.solver_iterations = sol.iterations;
    trace.x_final = sol.beta.clone();
    trace.x_modcs = Some(sol.beta);
    let next = advance(state, &trace);
    Ok((trace, next))
}

/// Memoryless baseline: simple CS every step. `N̂_t` is kept for metrics only.
pub fn simple_cs_step(
    state: &TrackerState,
    solver: &PartialL1Solver<'_>,
    y: &DVector<f64>,
    eps: f64,
    thr: &Thresholds,
) -> Result<(StepTrace, TrackerState)> {
    let fresh = TrackerState { n_hat: Support::new(), t: 0 };
    let (mut trace, _) = modcs_step(&fresh, solver, y, eps, thr)?;
    trace.t = state.t;
    let next = advance(state, &trace);
    Ok((trace, next))
}

/// Add, LS, delete, LS, starting from a detection estimate.
fn add_ls_del(
    trace: &mut StepTrace,
    solver: &PartialL1Solver<'_>,
    y: &DVector<f64>,
    detect: &DVector<f64>,
    thr: &Thresholds,
    truth: Option<&DVector<f64>>,
) {
    let a = solver.matrix();
    let t_det = support_threshold(detect, thr.alpha_add, &trace.prior, ThresholdMode::Add);
    let det = restricted_least_squares(a, y, &t_det);
    let t_tilde = support_threshold(&det.x, thr.alpha_del, &t_det, ThresholdMode::Del);
    let fin = restricted_least_squares(a, y, &t_tilde);
    if let Some(x) = truth {
        trace.ls_error_vec = Some(t_det.iter().map(|&i| x[i] - det.x[i]).collect());
    }
    trace.rank_deficient = det.rank_deficient || fin.rank_deficient;
    trace.t_det = Some(t_det);
    trace.x_det = Some(det.x);
    trace.x_final = fin.x;
    trace.n_hat_next = t_tilde;
}

/// Modified-CS with add-LS-del. `truth` enables the LS-step error record.
pub fn modcs_aldl_step(
    state: &TrackerState,
    solver: &PartialL1Solver<'_>,
    y: &DVector<f64>,
    eps: f64,
    thr: &Thresholds,
    truth: Option<&DVector<f64>>,
) -> Result<(StepTrace, TrackerState)> {
    let prior = prior_of(state);
    let sol = solver.solve(y, &prior, eps)?;
    let mut trace = StepTrace::new(state.t, prior, sol.beta.len());
    trace.solver_converged = sol.converged;
    trace.solver_iterations = sol.iterations;
    add_ls_del(&mut trace, solver, y, &sol.beta, thr, truth);
    trace.x_modcs = Some(sol.beta);
    let next = advance(state, &trace);
    Ok((trace, next))
}

/// LS-CS with add-LS-del: LS on `T`, simple CS on the LS residual, add the two,
/// then add-LS-del. Identical to [`modcs_aldl_step`] at `t = 0`.
pub fn lscs_step(
    state: &TrackerState,
    solver: &PartialL1Solver<'_>,
    y: &DVector<f64>,
    eps: f64,
    thr: &Thresholds,
    truth: Option<&DVector<f64>>,
) -> Result<(StepTrace, TrackerState)> {
    if state.t == 0 {
        return modcs_aldl_step(state, solver, y, eps, thr, truth);
    }
    let prior = prior_of(state);
    let init = restricted_least_squares(solver.matrix(), y, &prior);
    let residual = y - solver.matrix() * &init.x;
    let sol = solver.solve(&residual, &Support::new(), eps)?;
    let x_csres = &sol.beta + &init.x;
    let mut trace = StepTrace::new(state.t, prior, x_csres.len());
    trace.solver_converged = sol.converged;
    trace.solver_iterations = sol.iterations;
    add_ls_del(&mut trace, solver, y, &x_csres, thr, truth);
    trace.rank_deficient |= init.rank_deficient;
    trace.x_csres = Some(x_csres);
    let next = advance(state, &trace);
    Ok((trace, next))
}

/// Dispatches one step of `algorithm`.
pub fn tracker_step(
    algorithm: Algorithm,
    state: &TrackerState,
    solver: &PartialL1Solver<'_>,
    y: &DVector<f64>,
    eps: f64,
    thr: &Thresholds,
    truth: Option<&DVector<f64>>,
) -> Result<(StepTrace, TrackerState)> {
    match algorithm {
        Algorithm::Cs => simple_cs_step(state, solver, y, eps, thr),
        Algorithm::ModCs => modcs_step(state, solver, y, eps, thr),
        Algorithm::ModCsAldl => modcs_aldl_step(state, solver, y, eps, thr, truth),
        Algorithm::LsCs => lscs_step(state, solver, y, eps, thr, truth),
    }
}
