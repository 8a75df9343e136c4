//! Partial-ℓ1 minimization over an ℓ2 data ball, and restricted least squares.
//!
//! ```text
//! minimize   Σ_{i ∉ T} |β_i|
//! subject to ‖y − Aβ‖₂ ≤ ε
//! ```
//!
//! `T = ∅` gives basis pursuit denoising. The solver is ADMM on the splitting
//! `z₁ = Aβ` (projected onto the ball around `y`), `z₂ = β` (weighted
//! soft-thresholding with zero weight on `T`). The β-update solves
//! `(I + AᵀA)β = rhs` through a cached `n×n` Cholesky factor of `I + AAᵀ`, and
//! is independent of the penalty, so the penalty can adapt without refactoring.
//!
//! Every few iterations the solver tries to finish exactly: it takes the
//! support and signs of `z₂`, solves the KKT system of the constrained problem
//! on that support in closed form, and accepts the point if it is sign
//! consistent and dual feasible. Such a point is a certified minimizer.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::support::{mask, Support};

/// ADMM settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative/absolute tolerance on the ADMM primal and dual residuals.
    pub primal_tol: f64,
    /// Allowed excess of `‖y − Aβ‖` over `ε` for a converged result.
    pub feas_tol: f64,
    /// Initial ADMM penalty ρ.
    pub penalty: f64,
    /// Over-relaxation factor in `[1, 2)`.
    pub over_relaxation: f64,
    /// Residual balancing: ρ ×/÷ 2 when the residual ratio exceeds 10.
    pub adaptive_penalty: bool,
    /// Try the closed-form KKT finish every this many iterations (0 disables it).
    pub polish_every: usize,
    /// Keep the per-iteration fixed-point residual in [`SolveResult::history`].
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 5000,
            primal_tol: 1e-6,
            feas_tol: 1e-8,
            penalty: 1.0,
            over_relaxation: 1.0,
            adaptive_penalty: true,
            polish_every: 5,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("solver max_iters >= 1 violated".into()));
        }
        if !(self.primal_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::Config("solver penalty must be positive".into()));
        }
        if !(1.0..2.0).contains(&self.over_relaxation) {
            return Err(Error::Config("solver over_relaxation must lie in [1, 2)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub beta: DVector<f64>,
    pub iterations: usize,
    /// `max(0, ‖y − Aβ‖ − ε)`
    pub feas_violation: f64,
    /// `‖β_{Tᶜ}‖₁`
    pub objective: f64,
    pub converged: bool,
    /// Whether `beta` came from a KKT-certified closed-form finish.
    pub polished: bool,
    /// Per-iteration `‖(z, u)ᵏ⁺¹ − (z, u)ᵏ‖`, when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
}

/// Reusable solver for one measurement matrix.
pub struct PartialL1Solver<'a> {
    a: &'a DMatrix<f64>,
    /// Cholesky factor of `I + AAᵀ`.
    gram: Cholesky<f64, Dyn>,
    /// Orthonormal basis of range(A), for the feasibility test.
    range: DMatrix<f64>,
    cfg: SolverConfig,
}

impl<'a> PartialL1Solver<'a> {
    pub fn new(a: &'a DMatrix<f64>, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let n = a.nrows();
        if n == 0 || a.ncols() == 0 {
            return Err(Error::Argument("empty measurement matrix".into()));
        }
        let mut k = a * a.transpose();
        for i in 0..n {
            k[(i, i)] += 1.0;
        }
        let gram = Cholesky::new(k).ok_or_else(|| Error::Argument("I + AAᵀ is not positive definite".into()))?;
        let svd = a.clone().svd(true, false);
        let u = svd.u.as_ref().expect("requested U");
        let smax = svd.singular_values.max();
        let tol = smax * n.max(a.ncols()) as f64 * f64::EPSILON;
        let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
        let range = u.select_columns(&keep);
        Ok(PartialL1Solver { a, gram, range, cfg })
    }

    pub fn matrix(&self) -> &'a DMatrix<f64> {
        self.a
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Smallest achievable `‖y − Aβ‖`.
    pub fn min_residual(&self, y: &DVector<f64>) -> f64 {
        let proj = &self.range * (self.range.transpose() * y);
        (y - proj).norm()
    }

    pub fn solve(&self, y: &DVector<f64>, known: &Support, eps: f64) -> Result<SolveResult> {
        let (n, m) = self.a.shape();
        if y.len() != n {
            return Err(Error::Argument(format!("y has length {}, expected {n}", y.len())));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Argument(format!("eps must be finite and >= 0, got {eps}")));
        }
        if let Some(&bad) = known.iter().find(|&&i| i >= m) {
            return Err(Error::Argument(format!("known-support index {bad} out of range 0..{m}")));
        }
        let min_res = self.min_residual(y);
        if min_res > eps + self.cfg.feas_tol.max(1e-12 * y.norm()) {
            return Err(Error::Infeasible { min_residual: min_res, eps });
        }

        let in_t = mask(known, m);
        let a = self.a;
        let cfg = &self.cfg;
        let alpha = cfg.over_relaxation;
        let mut rho = cfg.penalty;

        let mut x = DVector::<f64>::zeros(m);
        let mut z1 = project_ball(&DVector::zeros(n), y, eps);
        let mut z2 = DVector::<f64>::zeros(m);
        let mut u1 = DVector::<f64>::zeros(n);
        let mut u2 = DVector::<f64>::zeros(m);
        let mut rhs = DVector::<f64>::zeros(m);
        let mut history = Vec::new();

        let mut admm_converged = false;
        let mut iterations = 0;
        for it in 1..=cfg.max_iters {
            iterations = it;
            // β-update: x = (I + AᵀA)⁻¹ rhs, and Ax = (I + AAᵀ)⁻¹ A rhs.
            rhs.copy_from(&z2);
            rhs -= &u2;
            let d1 = &z1 - &u1;
            rhs.gemv_tr(1.0, a, &d1, 1.0);
            let mut ax = a * &rhs;
            self.gram.solve_mut(&mut ax);
            x.copy_from(&rhs);
            x.gemv_tr(-1.0, a, &ax, 1.0);

            let h1 = if alpha == 1.0 { ax } else { &ax * alpha + &z1 * (1.0 - alpha) };
            let h2 = if alpha == 1.0 { x.clone() } else { &x * alpha + &z2 * (1.0 - alpha) };

            let z1_old = z1.clone();
            let z2_old = z2.clone();
            z1 = project_ball(&(&h1 + &u1), y, eps);
            let thresh = 1.0 / rho;
            z2 = DVector::from_fn(m, |i, _| {
                let v = h2[i] + u2[i];
                if in_t[i] {
                    v
                } else {
                    soft(v, thresh)
                }
            });
            let du1 = &h1 - &z1;
            let du2 = &h2 - &z2;
            u1 += &du1;
            u2 += &du2;

            if cfg.record_history {
                let dz = (&z1 - &z1_old).norm_squared() + (&z2 - &z2_old).norm_squared();
                let du = du1.norm_squared() + du2.norm_squared();
                history.push((dz + du).sqrt());
            }

            if cfg.polish_every > 0 && it % cfg.polish_every == 0 {
                if let Some(beta) = self.polish(y, &in_t, eps, &z2) {
                    return Ok(self.finish(y, &in_t, eps, beta, it, true, true, history));
                }
            }

            if it % 10 == 0 || it == cfg.max_iters {
                let ax_now = a * &x;
                let r_pri = ((&ax_now - &z1).norm_squared() + (&x - &z2).norm_squared()).sqrt();
                let mut dual = &z2 - &z2_old;
                dual.gemv_tr(1.0, a, &(&z1 - &z1_old), 1.0);
                let r_dual = rho * dual.norm();
                let scale_pri = (ax_now.norm_squared() + x.norm_squared())
                    .sqrt()
                    .max((z1.norm_squared() + z2.norm_squared()).sqrt());
                let mut at_u = u2.clone();
                at_u.gemv_tr(1.0, a, &u1, 1.0);
                let scale_dual = rho * at_u.norm();
                let tol = cfg.primal_tol;
                let eps_pri = tol * ((n + m) as f64).sqrt() + tol * scale_pri;
                let eps_dual = tol * (m as f64).sqrt() + tol * scale_dual;
                if r_pri <= eps_pri && r_dual <= eps_dual {
                    admm_converged = true;
                    break;
                }
                if cfg.adaptive_penalty {
                    if r_pri > 10.0 * r_dual {
                        rho *= 2.0;
                        u1 /= 2.0;
                        u2 /= 2.0;
                    } else if r_dual > 10.0 * r_pri {
                        rho /= 2.0;
                        u1 *= 2.0;
                        u2 *= 2.0;
                    }
                }
            }
        }

        if cfg.polish_every > 0 {
            if let Some(beta) = self.polish(y, &in_t, eps, &z2) {
                return Ok(self.finish(y, &in_t, eps, beta, iterations, true, true, history));
            }
        }
        let beta = self.repair_feasibility(y, &in_t, eps, z2);
        Ok(self.finish(y, &in_t, eps, beta, iterations, admm_converged, false, history))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        y: &DVector<f64>,
        in_t: &[bool],
        eps: f64,
        beta: DVector<f64>,
        iterations: usize,
        converged: bool,
        polished: bool,
        history: Vec<f64>,
    ) -> SolveResult {
        let residual = (y - self.a * &beta).norm();
        let feas_violation = (residual - eps).max(0.0);
        let objective = weighted_l1(&beta, in_t);
        SolveResult {
            converged: converged && feas_violation <= self.cfg.feas_tol.max(1e-12 * y.norm()),
            beta,
            iterations,
            feas_violation,
            objective,
            polished,
            history,
        }
    }

    /// Closed-form minimizer on the support/sign pattern of `guess`, if it passes
    /// the optimality checks.
    fn polish(&self, y: &DVector<f64>, in_t: &[bool], eps: f64, guess: &DVector<f64>) -> Option<DVector<f64>> {
        let (n, m) = self.a.shape();
        let set: Vec<usize> = (0..m).filter(|&i| in_t[i] || guess[i] != 0.0).collect();
        if set.len() > n {
            return None;
        }
        let a_s = self.a.select_columns(&set);
        let chol = Cholesky::new(a_s.transpose() * &a_s)?;
        let signs = DVector::from_iterator(set.len(), set.iter().map(|&i| if in_t[i] { 0.0 } else { guess[i].signum() }));
        let aty = a_s.transpose() * y;
        let beta_ls = chol.solve(&aty);
        let r0 = y - &a_s * &beta_ls;
        let r0_norm = r0.norm();
        let has_free = signs.iter().any(|s| *s != 0.0);
        let ytol = 1e-12 * y.norm().max(1.0);

        let (beta_s, nu) = if !has_free {
            // Objective 0 is attainable: T alone explains y within the ball.
            if r0_norm > eps + ytol {
                return None;
            }
            (beta_ls, None)
        } else {
            let g_inv_s = chol.solve(&signs);
            let q = &a_s * &g_inv_s;
            let q2 = q.norm_squared();
            if q2 <= 0.0 {
                return None;
            }
            if eps > 0.0 {
                let slack = eps * eps - r0_norm * r0_norm;
                if slack <= 0.0 {
                    return None;
                }
                let lambda = (slack / q2).sqrt();
                let beta_s = &beta_ls - &g_inv_s * lambda;
                let r = &r0 + &q * lambda;
                (beta_s, Some(r / lambda))
            } else {
                if r0_norm > ytol {
                    return None;
                }
                (beta_ls, Some(q))
            }
        };

        let mut beta = DVector::zeros(m);
        for (k, &i) in set.iter().enumerate() {
            if signs[k] != 0.0 && beta_s[k] * signs[k] <= 0.0 {
                return None;
            }
            beta[i] = beta_s[k];
        }
        if let Some(nu) = nu {
            let corr = self.a.transpose() * nu;
            let on_set = mask(&set.iter().copied().collect(), m);
            if (0..m).any(|i| !in_t[i] && !on_set[i] && corr[i].abs() > 1.0 + 1e-10) {
                return None;
            }
        }
        Some(beta)
    }

    /// Moves `beta` the shortest way along its support (or, failing that, the full
    /// space) towards the least-squares point until the ball constraint holds.
    fn repair_feasibility(&self, y: &DVector<f64>, in_t: &[bool], eps: f64, beta: DVector<f64>) -> DVector<f64> {
        let m = self.a.ncols();
        let res = y - self.a * &beta;
        if res.norm() <= eps {
            return beta;
        }
        let tol = self.cfg.feas_tol.max(1e-12 * y.norm());
        let set: Support = (0..m).filter(|&i| in_t[i] || beta[i] != 0.0).collect();
        for target_set in [set, (0..m).collect::<Support>()] {
            let target = restricted_least_squares(self.a, y, &target_set).x;
            if (y - self.a * &target).norm() > eps + tol {
                continue;
            }
            let dir = &target - &beta;
            let adir = self.a * &dir;
            // ‖res − τ·A·dir‖² = ε², smallest τ in [0, 1].
            let qa = adir.norm_squared();
            let qb = -2.0 * res.dot(&adir);
            let qc = res.norm_squared() - eps * eps;
            if qa > 0.0 {
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                let tau = ((-qb - disc.sqrt()) / (2.0 * qa)).clamp(0.0, 1.0);
                let moved = &beta + &dir * tau;
                if (y - self.a * &moved).norm() <= eps + tol {
                    return moved;
                }
            }
            return target;
        }
        beta
    }
}

/// One-shot wrapper around [`PartialL1Solver`].
pub fn solve_partial_l1(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    known: &Support,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    PartialL1Solver::new(a, *cfg)?.solve(y, known, eps)
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn project_ball(v: &DVector<f64>, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let diff = v - center;
    let norm = diff.norm();
    if norm <= radius {
        v.clone()
    } else {
        center + diff * (radius / norm)
    }
}

fn weighted_l1(beta: &DVector<f64>, in_t: &[bool]) -> f64 {
    beta.iter().zip(in_t).filter(|(_, t)| !**t).map(|(b, _)| b.abs()).sum()
}

/// `‖β_{Tᶜ}‖₁`
pub fn partial_l1_objective(beta: &DVector<f64>, known: &Support) -> f64 {
    beta.iter().enumerate().filter(|(i, _)| !known.contains(i)).map(|(_, b)| b.abs()).sum()
}

/// Least-squares estimate restricted to a column set.
#[derive(Debug, Clone, PartialEq)]
pub struct LsEstimate {
    /// Full-length estimate, zero outside the set.
    pub x: DVector<f64>,
    /// `|T| > n` or `A_T` lost column rank; `x` is then the minimum-norm solution.
    pub rank_deficient: bool,
}

/// `x_T = A_T† y`, `x_{Tᶜ} = 0`.
pub fn restricted_least_squares(a: &DMatrix<f64>, y: &DVector<f64>, set: &Support) -> LsEstimate {
    let (n, m) = a.shape();
    let mut x = DVector::zeros(m);
    if set.is_empty() {
        return LsEstimate { x, rank_deficient: false };
    }
    let cols: Vec<usize> = set.iter().copied().collect();
    let a_t = a.select_columns(&cols);
    let svd = a_t.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * n.max(cols.len()) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    let coef = svd.solve(y, tol).expect("U and Vᵀ were computed");
    for (k, &i) in cols.iter().enumerate() {
        x[i] = coef[k];
    }
    LsEstimate { x, rank_deficient: cols.len() > n || rank < cols.len() }
}

/// First-order optimality diagnostics for a candidate point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktDiagnostics {
    /// `max(0, ‖y − Aβ‖ − ε)`
    pub feasibility_gap: f64,
    /// `min_{μ ≥ 0, s ∈ ∂‖β_{Tᶜ}‖₁} ‖s − μ·Aᵀ(y − Aβ)‖∞`
    pub stationarity: f64,
    /// Minimizing multiplier μ.
    pub multiplier: f64,
}

/// Optimality certificate quality of `beta` for the partial-ℓ1 program.
pub fn kkt_residual(a: &DMatrix<f64>, y: &DVector<f64>, known: &Support, eps: f64, beta: &DVector<f64>) -> KktDiagnostics {
    let m = a.ncols();
    let in_t = mask(known, m);
    let res = y - a * beta;
    let res_norm = res.norm();
    let feasibility_gap = (res_norm - eps).max(0.0);
    let g = a.transpose() * &res;
    let zero_tol = 1e-9 * beta.amax().max(1.0);

    let violation = |mu: f64| -> f64 {
        (0..m)
            .map(|i| {
                let mg = mu * g[i];
                if in_t[i] {
                    mg.abs()
                } else if beta[i].abs() > zero_tol {
                    (beta[i].signum() - mg).abs()
                } else {
                    (mg.abs() - 1.0).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    };

    let free_support: Vec<usize> = (0..m).filter(|&i| !in_t[i] && beta[i].abs() > zero_tol).collect();
    // An inactive constraint forces μ = 0.
    let active = res_norm >= eps * (1.0 - 1e-7) - 1e-12;
    if free_support.is_empty() || !active {
        return KktDiagnostics { feasibility_gap, stationarity: violation(0.0), multiplier: 0.0 };
    }
    let upper = free_support
        .iter()
        .map(|&i| g[i].abs())
        .filter(|v| *v > 0.0)
        .map(|v| 4.0 / v)
        .fold(1.0, f64::max);
    // The violation is convex and piecewise linear in μ.
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if violation(m1) <= violation(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mu = 0.5 * (lo + hi);
    KktDiagnostics { feasibility_gap, stationarity: violation(mu), multiplier: mu }
}
