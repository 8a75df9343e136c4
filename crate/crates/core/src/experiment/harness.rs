//! Monte-Carlo trials: one signal trajectory per trial, every selected
//! algorithm run on the same measurements.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::bounds::{support_error_metrics, TraceRecord};
use crate::error::{Error, Result};
use crate::l1::PartialL1Solver;
use crate::measurement::{measure, split_seed, uniform_noise_with_rng, MeasurementModel};
use crate::signal::{init_signal_with_rng, step_signal};
use crate::trackers::{tracker_step, Algorithm, TrackerState};

const STREAM_MATRIX: u64 = 0;
const STREAM_SIGNAL: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Per-time metrics of one algorithm in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSeries {
    pub algorithm: Algorithm,
    /// `‖x_t − x̂_t‖²`
    pub sq_error: Vec<f64>,
    /// `‖x_t‖²`
    pub power: Vec<f64>,
    pub misses: Vec<usize>,
    pub extras: Vec<usize>,
    /// `(‖e_t‖₂, ‖e_t‖∞)` of the LS-step error, add-LS-del algorithms only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ls_error_norms: Vec<(f64, f64)>,
    /// Steps where the solver failed or did not converge.
    pub solver_failures: usize,
}

impl AlgorithmSeries {
    fn new(algorithm: Algorithm, horizon: usize) -> Self {
        AlgorithmSeries {
            algorithm,
            sq_error: Vec::with_capacity(horizon),
            power: Vec::with_capacity(horizon),
            misses: Vec::with_capacity(horizon),
            extras: Vec::with_capacity(horizon),
            ls_error_norms: Vec::new(),
            solver_failures: 0,
        }
    }

    pub fn nmse(&self) -> Vec<f64> {
        self.sq_error.iter().zip(&self.power).map(|(e, p)| e / p).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub series: Vec<AlgorithmSeries>,
}

impl TrialRecord {
    pub fn series(&self, algorithm: Algorithm) -> Option<&AlgorithmSeries> {
        self.series.iter().find(|s| s.algorithm == algorithm)
    }
}

/// Cross-trial means per algorithm and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSeries {
    pub algorithm: Algorithm,
    /// Mean squared error over mean signal power.
    pub nmse: Vec<f64>,
    pub misses: Vec<f64>,
    pub extras: Vec<f64>,
    pub solver_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadStats {
    /// Steps with a nonzero LS-step error.
    pub steps: usize,
    /// Fraction of those with `‖e‖∞ ≤ ‖e‖/√Sa`.
    pub fraction: f64,
    /// `max (‖e‖/√Sa)/‖e‖∞`
    pub max_ratio: f64,
    /// `max √Sa·‖e‖∞/‖e‖`, the reciprocal orientation.
    pub max_inverse_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub config: ExperimentConfig,
    pub trials: usize,
    pub horizon: usize,
    pub series: Vec<AggregateSeries>,
    /// Spread of the add-LS-del LS-step error, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<SpreadStats>,
}

impl AggregateRecord {
    pub fn series(&self, algorithm: Algorithm) -> Option<&AggregateSeries> {
        self.series.iter().find(|s| s.algorithm == algorithm)
    }
}

/// Per-trial seed derived from the master seed.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    split_seed(master, index as u64)
}

/// Draws the trial's Gaussian measurement model and runs it.
pub fn run_trial(config: &ExperimentConfig, seed: u64) -> Result<TrialRecord> {
    let model = MeasurementModel::gaussian(config.n, config.n0(), config.m, config.c, split_seed(seed, STREAM_MATRIX))?;
    Ok(run_trial_with_model(config, &model, seed, false)?.0)
}

/// Runs one trial on a given measurement model. With `keep_traces`, also returns
/// the per-step traces of every algorithm (in `config.algorithms` order).
pub fn run_trial_with_model(
    config: &ExperimentConfig,
    model: &MeasurementModel,
    seed: u64,
    keep_traces: bool,
) -> Result<(TrialRecord, Vec<Vec<TraceRecord>>)> {
    config.validate()?;
    if model.m() != config.m {
        return Err(Error::Config(format!("matrix has {} columns, config m = {}", model.m(), config.m)));
    }
    let params = config.model();
    let thr = config.thresholds();
    let solver = PartialL1Solver::new(&model.a, config.solver)?;
    let solver0 = PartialL1Solver::new(&model.a0, config.solver)?;
    let mut signal_rng = ChaCha8Rng::seed_from_u64(split_seed(seed, STREAM_SIGNAL));
    let mut noise_rng = ChaCha8Rng::seed_from_u64(split_seed(seed, STREAM_NOISE));

    let algs = &config.algorithms;
    let mut states = vec![TrackerState::new(); algs.len()];
    let mut series: Vec<AlgorithmSeries> = algs.iter().map(|&a| AlgorithmSeries::new(a, config.horizon)).collect();
    let mut traces: Vec<Vec<TraceRecord>> = vec![Vec::new(); if keep_traces { algs.len() } else { 0 }];

    let mut state = init_signal_with_rng(&params, &mut signal_rng)?;
    for t in 0..config.horizon {
        if t > 0 {
            state = step_signal(&state, &mut signal_rng)?.0;
        }
        let (a, slv, eps) = if t == 0 { (&model.a0, &solver0, model.eps0) } else { (&model.a, &solver, model.eps) };
        let w = uniform_noise_with_rng(a.nrows(), model.c, &mut noise_rng);
        let y = measure(a, &state.x, &w)?;
        let power = state.x.norm_squared();
        for (k, &alg) in algs.iter().enumerate() {
            let s = &mut series[k];
            match tracker_step(alg, &states[k], slv, &y, eps, &thr, Some(&state.x)) {
                Ok((trace, next)) => {
                    if !trace.solver_converged {
                        s.solver_failures += 1;
                    }
                    let (misses, extras) = support_error_metrics(&state.support, &trace.n_hat_next);
                    s.sq_error.push((&state.x - &trace.x_final).norm_squared());
                    s.power.push(power);
                    s.misses.push(misses);
                    s.extras.push(extras);
                    if let Some(e) = &trace.ls_error_vec {
                        let l2 = e.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let linf = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                        s.ls_error_norms.push((l2, linf));
                    }
                    states[k] = next;
                    if keep_traces {
                        traces[k].push(TraceRecord { x: state.x.clone(), support: state.support.clone(), trace });
                    }
                }
                Err(err @ (Error::Infeasible { .. } | Error::Argument(_))) => {
                    // Keep going with an empty estimate and the old feedback.
                    let _ = err;
                    s.solver_failures += 1;
                    let (misses, extras) = support_error_metrics(&state.support, &Default::default());
                    s.sq_error.push(power);
                    s.power.push(power);
                    s.misses.push(misses);
                    s.extras.push(extras);
                    states[k].t += 1;
                }
                Err(other) => return Err(other),
            }
        }
    }
    Ok((TrialRecord { seed, series }, traces))
}

/// Runs `config.trials` independent trials (in parallel) and aggregates them
/// in trial order.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<(AggregateRecord, Vec<TrialRecord>)> {
    config.validate()?;
    let trials: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(config, trial_seed(config.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let agg = aggregate(config, &trials);
    Ok((agg, trials))
}

/// Cross-trial means. NMSE is the mean squared error over the mean power.
pub fn aggregate(config: &ExperimentConfig, trials: &[TrialRecord]) -> AggregateRecord {
    let horizon = config.horizon;
    let count = trials.len().max(1) as f64;
    let series = config
        .algorithms
        .iter()
        .map(|&alg| {
            let mut err = vec![0.0; horizon];
            let mut pow = vec![0.0; horizon];
            let mut misses = vec![0.0; horizon];
            let mut extras = vec![0.0; horizon];
            let mut failures = 0;
            for trial in trials {
                let s = trial.series(alg).expect("every trial runs every algorithm");
                failures += s.solver_failures;
                for t in 0..horizon.min(s.sq_error.len()) {
                    err[t] += s.sq_error[t];
                    pow[t] += s.power[t];
                    misses[t] += s.misses[t] as f64;
                    extras[t] += s.extras[t] as f64;
                }
            }
            AggregateSeries {
                algorithm: alg,
                nmse: err.iter().zip(&pow).map(|(e, p)| if *p > 0.0 { e / p } else { 0.0 }).collect(),
                misses: misses.iter().map(|v| v / count).collect(),
                extras: extras.iter().map(|v| v / count).collect(),
                solver_failures: failures,
            }
        })
        .collect();
    let spread = [Algorithm::ModCsAldl, Algorithm::LsCs]
        .into_iter()
        .find(|a| config.algorithms.contains(a))
        .and_then(|a| spread_statistic(trials, a, config.sa).ok());
    AggregateRecord { config: config.clone(), trials: trials.len(), horizon, series, spread }
}

/// Spread of the LS-step error `e_t` of `algorithm` across all trials and steps.
pub fn spread_statistic(trials: &[TrialRecord], algorithm: Algorithm, sa: usize) -> Result<SpreadStats> {
    let root = (sa as f64).sqrt();
    let mut steps = 0usize;
    let mut ok = 0usize;
    let mut max_ratio = 0.0f64;
    let mut max_inverse = 0.0f64;
    for trial in trials {
        let Some(s) = trial.series(algorithm) else { continue };
        for &(l2, linf) in &s.ls_error_norms {
            if !(l2 > 0.0) {
                continue;
            }
            steps += 1;
            if linf <= l2 / root {
                ok += 1;
            }
            max_ratio = max_ratio.max((l2 / root) / linf);
            max_inverse = max_inverse.max(root * linf / l2);
        }
    }
    if steps == 0 {
        return Err(Error::NoSpreadData);
    }
    Ok(SpreadStats { steps, fraction: ok as f64 / steps as f64, max_ratio, max_inverse_ratio: max_inverse })
}

/// Least-squares slope of `values[from..]` against the time index.
pub fn trend_slope(values: &[f64], from: usize) -> f64 {
    let pts: Vec<(f64, f64)> = values.iter().enumerate().skip(from).map(|(t, v)| (t as f64, *v)).collect();
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
