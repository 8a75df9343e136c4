//! Stability-theorem hypotheses and conclusions as checkable inequalities.
//!
//! [`certify`] evaluates the analytic hypotheses of a stability result from
//! exact matrix constants. [`verify_conclusions`] replays recorded tracker
//! output against the truth and checks every conclusion, plus the hypotheses
//! that can only be observed empirically (false-addition count, initial-time
//! behaviour, LS-error spread).

use std::f64::consts::SQRT_2;
use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::constants::{delta_name, theta_name, MatrixConstants};
use super::formulas::{c1, cdprime, cprime, C1_HALF, HALF_RIP_LEVEL};
use crate::error::{Error, Result};
use crate::support::Support;
use crate::trackers::StepTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Modified-CS with a single threshold.
    #[serde(rename = "T1-modcs")]
    T1Modcs,
    /// Modified-CS with add-LS-del.
    #[serde(rename = "T2-aldl")]
    T2Aldl,
    /// Add-LS-del assuming a spread-out LS error.
    #[serde(rename = "C3-aldl-relaxed")]
    C3AldlRelaxed,
    /// Add-LS-del with general miss level `d0` and false-addition budget `f`.
    #[serde(rename = "GEN-aldl")]
    GenAldl,
    /// LS-CS with add-LS-del.
    #[serde(rename = "T3-lscs")]
    T3Lscs,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::T1Modcs, Variant::T2Aldl, Variant::C3AldlRelaxed, Variant::GenAldl, Variant::T3Lscs];

    pub fn name(self) -> &'static str {
        match self {
            Variant::T1Modcs => "T1-modcs",
            Variant::T2Aldl => "T2-aldl",
            Variant::C3AldlRelaxed => "C3-aldl-relaxed",
            Variant::GenAldl => "GEN-aldl",
            Variant::T3Lscs => "T3-lscs",
        }
    }

    fn uses_add_del(self) -> bool {
        !matches!(self, Variant::T1Modcs)
    }

    fn assumes_spread(self) -> bool {
        matches!(self, Variant::C3AldlRelaxed | Variant::GenAldl)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

/// Parameters of one stability statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremParams {
    pub variant: Variant,
    pub s0: usize,
    pub sa: usize,
    /// Ramp length; only used to check `d0 ≤ d`.
    #[serde(default)]
    pub d: Option<usize>,
    pub r: f64,
    pub eps: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub alpha_add: f64,
    /// When given, it must equal the value implied by the statement.
    #[serde(default)]
    pub alpha_del: Option<f64>,
    /// False-addition budget (default `Sa`).
    #[serde(default)]
    pub f: Option<usize>,
    /// Miss level (default 2).
    #[serde(default)]
    pub d0: Option<usize>,
    /// LS-CS detection-lemma parameters (defaults `1`, `√Sa/√2`, `Sa`).
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub s_delta1: Option<usize>,
}

impl TheoremParams {
    pub fn new(variant: Variant, s0: usize, sa: usize, r: f64, eps: f64) -> Self {
        TheoremParams {
            variant,
            s0,
            sa,
            d: None,
            r,
            eps,
            alpha: 0.0,
            alpha_add: 0.0,
            alpha_del: None,
            f: None,
            d0: None,
            gamma: None,
            kappa: None,
            s_delta1: None,
        }
    }

    pub fn d0(&self) -> usize {
        self.d0.unwrap_or(2)
    }

    pub fn f(&self) -> usize {
        self.f.unwrap_or(self.sa)
    }

    /// `max(1, 2d0 − 2)`
    pub fn k1(&self) -> usize {
        (2 * self.d0()).saturating_sub(2).max(1)
    }

    /// `max(0, 2d0 − 3)`
    pub fn k2(&self) -> usize {
        (2 * self.d0()).saturating_sub(3)
    }

    /// `√(Σ_{j<d0} j² + Σ_{j<d0−1} j²)`
    pub fn k3(&self) -> f64 {
        let d0 = self.d0();
        let sq = |upto: usize| (1..=upto).map(|j| (j * j) as f64).sum::<f64>();
        (sq(d0.saturating_sub(1)) + sq(d0.saturating_sub(2))).sqrt()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or((self.sa as f64).sqrt() / SQRT_2)
    }

    pub fn s_delta1(&self) -> usize {
        self.s_delta1.unwrap_or(self.sa)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sa < 1 {
            return Err(Error::Config("Sa >= 1 violated".into()));
        }
        if !(self.r > 0.0) {
            return Err(Error::Config(format!("r > 0 violated (r = {})", self.r)));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::Config(format!("eps >= 0 violated (eps = {})", self.eps)));
        }
        if self.d0() < 1 {
            return Err(Error::Config("d0 >= 1 violated".into()));
        }
        if let Some(d) = self.d {
            if self.d0() > d {
                return Err(Error::Config(format!("d0 <= d violated ({} > {d})", self.d0())));
            }
        }
        if !(self.gamma() > 0.0 && self.gamma() <= 1.0) {
            return Err(Error::Config("0 < gamma <= 1 violated".into()));
        }
        Ok(())
    }

    /// Orders `(δ orders, θ pairs)` needed by [`certify`].
    pub fn required_constants(&self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let (s0, sa) = (self.s0, self.sa);
        match self.variant {
            Variant::T1Modcs => (vec![s0 + 3 * sa], vec![]),
            Variant::T2Aldl | Variant::C3AldlRelaxed => (vec![s0 + 3 * sa], vec![(s0 + 2 * sa, sa)]),
            Variant::GenAldl => {
                let f = self.f();
                (vec![s0 + sa * (1 + self.k1()), s0 + sa + f], vec![(s0 + sa + f, self.k2() * sa)])
            }
            Variant::T3Lscs => {
                let mut deltas: Vec<usize> = (1..=2 * sa).map(|k| 2 * k).collect();
                deltas.push(s0 + 2 * sa);
                let mut thetas: Vec<(usize, usize)> = (1..=2 * sa).map(|k| (s0, k)).collect();
                thetas.push((s0 + 2 * sa, sa));
                (deltas, thetas)
            }
        }
    }

    /// Orders needed by [`verify_conclusions`] on top of [`Self::required_constants`].
    pub fn conclusion_constants(&self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let (mut deltas, mut thetas) = self.required_constants();
        match self.variant {
            Variant::T1Modcs => {}
            Variant::T2Aldl | Variant::C3AldlRelaxed | Variant::T3Lscs => thetas.push((self.s0, 2 * self.sa)),
            Variant::GenAldl => {
                thetas.push((self.s0, (2 * self.d0()).saturating_sub(2) * self.sa));
                deltas.push(self.s0 + self.sa * (1 + self.k1()));
            }
        }
        (deltas, thetas)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

impl Relation {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => (lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0),
        }
    }

    fn margin(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Relation::Lt | Relation::Le => rhs - lhs,
            Relation::Ge => lhs - rhs,
            Relation::Eq => -(lhs - rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Hypothesis,
    Conclusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    /// Stable identifier shared by equivalent inequalities across variants.
    pub key: String,
    /// The inequality in words.
    pub name: String,
    pub kind: ConditionKind,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub margin: f64,
    /// First time index at which a per-step check failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<usize>,
}

impl ConditionEntry {
    fn new(key: &str, name: impl Into<String>, kind: ConditionKind, relation: Relation, lhs: f64, rhs: f64) -> Self {
        ConditionEntry {
            key: key.to_string(),
            name: name.into(),
            kind,
            relation,
            lhs,
            rhs,
            pass: relation.holds(lhs, rhs),
            margin: relation.margin(lhs, rhs),
            first_violation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub variant: Variant,
    pub entries: Vec<ConditionEntry>,
    /// All entries pass.
    pub pass: bool,
    /// Deletion threshold the statement prescribes, when it prescribes one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implied_alpha_del: Option<f64>,
}

impl ConditionReport {
    fn new(variant: Variant, entries: Vec<ConditionEntry>, implied_alpha_del: Option<f64>) -> Self {
        let pass = entries.iter().all(|e| e.pass);
        ConditionReport { variant, entries, pass, implied_alpha_del }
    }

    pub fn entry(&self, key: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

fn ensure_constants(constants: &MatrixConstants, (deltas, thetas): (Vec<usize>, Vec<(usize, usize)>)) -> Result<()> {
    let missing = constants.missing(&deltas, &thetas);
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingConstants(missing))
    }
}

/// `num/den`, or `+∞` when the denominator is not positive.
fn rate(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Deletion threshold prescribed by the statement.
pub fn implied_alpha_del(params: &TheoremParams, constants: &MatrixConstants) -> Result<Option<f64>> {
    let (s0, sa, eps, r) = (params.s0, params.sa, params.eps, params.r);
    let sqrt_sa = (sa as f64).sqrt();
    Ok(match params.variant {
        Variant::T1Modcs => None,
        Variant::T2Aldl | Variant::T3Lscs => {
            let theta = constants.theta(s0 + 2 * sa, sa)?;
            Some(SQRT_2 * eps + 2.0 * sqrt_sa * theta * r)
        }
        Variant::C3AldlRelaxed => {
            let theta = constants.theta(s0 + 2 * sa, sa)?;
            Some((2.0 / sa as f64).sqrt() * eps + 2.0 * theta * r)
        }
        Variant::GenAldl => {
            let theta = constants.theta(s0 + sa + params.f(), params.k2() * sa)?;
            Some((2.0 / sa as f64).sqrt() * eps + 2.0 * params.k3() * theta * r)
        }
    })
}

/// Evaluates every analytic hypothesis of the selected statement.
pub fn certify(params: &TheoremParams, constants: &MatrixConstants) -> Result<ConditionReport> {
    use ConditionKind::Hypothesis as H;
    params.validate()?;
    ensure_constants(constants, params.required_constants())?;
    let (s0, sa, eps, r) = (params.s0, params.sa, params.eps, params.r);
    let sa_f = sa as f64;
    let sqrt_sa = sa_f.sqrt();
    let implied = implied_alpha_del(params, constants)?;
    let mut entries = Vec::new();

    if let (Some(given), Some(want)) = (params.alpha_del, implied) {
        entries.push(ConditionEntry::new("alpha_del", "alpha_del equals the prescribed value", H, Relation::Eq, given, want));
    }

    match params.variant {
        Variant::T1Modcs => {
            let delta = constants.delta(s0 + 3 * sa)?;
            entries.push(ConditionEntry::new("alpha", "alpha >= 8.79 eps", H, Relation::Ge, params.alpha, C1_HALF * eps));
            entries.push(ConditionEntry::new(
                "delta_main",
                format!("{} < (sqrt(2) - 1)/2", delta_name(s0 + 3 * sa)),
                H,
                Relation::Lt,
                delta,
                HALF_RIP_LEVEL,
            ));
            let g = (params.alpha + C1_HALF * eps) / 2.0;
            entries.push(ConditionEntry::new("rate_g1", "r >= G = (alpha + 8.79 eps)/2", H, Relation::Ge, r, g));
        }
        Variant::T2Aldl => {
            let delta = constants.delta(s0 + 3 * sa)?;
            let theta = constants.theta(s0 + 2 * sa, sa)?;
            entries.push(ConditionEntry::new(
                "delta_main",
                format!("{} < (sqrt(2) - 1)/2", delta_name(s0 + 3 * sa)),
                H,
                Relation::Lt,
                delta,
                HALF_RIP_LEVEL,
            ));
            entries.push(ConditionEntry::new(
                "theta",
                format!("{} < (1/2)(1/(2 sqrt(Sa)))", theta_name(s0 + 2 * sa, sa)),
                H,
                Relation::Lt,
                theta,
                0.5 * (1.0 / (2.0 * sqrt_sa)),
            ));
            let g1 = (params.alpha_add + C1_HALF * eps) / 2.0;
            let g2 = rate(SQRT_2 * eps, 1.0 - 2.0 * sqrt_sa * theta);
            entries.push(ConditionEntry::new("rate_g1", "r >= G1 = (alpha_add + 8.79 eps)/2", H, Relation::Ge, r, g1));
            entries.push(ConditionEntry::new("rate_g2", "r >= G2 = sqrt(2) eps/(1 - 2 sqrt(Sa) theta)", H, Relation::Ge, r, g2));
        }
        Variant::C3AldlRelaxed => {
            let delta = constants.delta(s0 + 3 * sa)?;
            let theta = constants.theta(s0 + 2 * sa, sa)?;
            entries.push(ConditionEntry::new(
                "delta_main",
                format!("{} <= (sqrt(2) - 1)/2", delta_name(s0 + 3 * sa)),
                H,
                Relation::Le,
                delta,
                HALF_RIP_LEVEL,
            ));
            entries.push(ConditionEntry::new(
                "theta",
                format!("{} <= 1/4", theta_name(s0 + 2 * sa, sa)),
                H,
                Relation::Le,
                theta,
                0.25,
            ));
            let g1 = (params.alpha_add + C1_HALF * eps) / 2.0;
            let g2 = rate(SQRT_2 * eps, sqrt_sa * (1.0 - 2.0 * theta));
            entries.push(ConditionEntry::new("rate_g1", "r >= G1 = (alpha_add + 8.79 eps)/2", H, Relation::Ge, r, g1));
            entries.push(ConditionEntry::new("rate_g2", "r >= G2 = sqrt(2) eps/(sqrt(Sa)(1 - 2 theta))", H, Relation::Ge, r, g2));
        }
        Variant::GenAldl => {
            let (d0, f, k1, k2, k3) = (params.d0(), params.f(), params.k1(), params.k2(), params.k3());
            let d0_f = d0 as f64;
            let main = s0 + sa * (1 + k1);
            let ls = s0 + sa + f;
            let delta = constants.delta(main)?;
            let delta_ls = constants.delta(ls)?;
            let theta = constants.theta(ls, k2 * sa)?;
            entries.push(ConditionEntry::new(
                "delta_main",
                format!("{} < (sqrt(2) - 1)/2", delta_name(main)),
                H,
                Relation::Lt,
                delta,
                HALF_RIP_LEVEL,
            ));
            entries.push(ConditionEntry::new("delta_ls", format!("{} < 1/2", delta_name(ls)), H, Relation::Lt, delta_ls, 0.5));
            entries.push(ConditionEntry::new(
                "theta",
                format!("{} < (1/2)(d0/(4 k3))", theta_name(ls, k2 * sa)),
                H,
                Relation::Lt,
                theta,
                0.5 * (d0_f / (4.0 * k3)),
            ));
            let g1 = (params.alpha_add + C1_HALF * eps) / d0_f;
            let g2 = rate(2.0 * SQRT_2 * eps, sqrt_sa * (d0_f - 4.0 * k3 * theta));
            entries.push(ConditionEntry::new("rate_g1", "r >= G1 = (alpha_add + 8.79 eps)/d0", H, Relation::Ge, r, g1));
            entries.push(ConditionEntry::new(
                "rate_g2",
                "r >= G2 = 2 sqrt(2) eps/(sqrt(Sa)(d0 - 4 k3 theta))",
                H,
                Relation::Ge,
                r,
                g2,
            ));
        }
        Variant::T3Lscs => {
            let (gamma, kappa) = (params.gamma(), params.kappa());
            let spread = (params.s_delta1() as f64).sqrt() + kappa;
            let d4 = constants.delta(4 * sa)?;
            let d_ls = constants.delta(s0 + 2 * sa)?;
            let theta_2sa = constants.theta(s0, 2 * sa)?;
            let theta = constants.theta(s0 + 2 * sa, sa)?;
            entries.push(ConditionEntry::new(
                "delta_4sa",
                format!("{} < (sqrt(2) - 1)/2", delta_name(4 * sa)),
                H,
                Relation::Lt,
                d4,
                HALF_RIP_LEVEL,
            ));
            entries.push(ConditionEntry::new("delta_ls", format!("{} < 1/2", delta_name(s0 + 2 * sa)), H, Relation::Lt, d_ls, 0.5));
            let cdp = constants.delta(4 * sa).and_then(|d| cdprime(s0, 2 * sa, d)).unwrap_or(f64::INFINITY);
            entries.push(ConditionEntry::new(
                "theta_cdprime",
                format!("{} C''(S0, 2Sa) < gamma/(2(sqrt(S_Delta1) + kappa))", theta_name(s0, 2 * sa)),
                H,
                Relation::Lt,
                theta_2sa * cdp,
                gamma / (2.0 * spread),
            ));
            entries.push(ConditionEntry::new(
                "theta",
                format!("{} < (1/2) sqrt(1/(4 Sa))", theta_name(s0 + 2 * sa, sa)),
                H,
                Relation::Lt,
                theta,
                0.5 * (1.0 / (4.0 * sa_f)).sqrt(),
            ));
            // Detection needs ratio < b = 2r for every |Δ| ≤ 2Sa.
            let mut g1 = 0.0f64;
            for k in 1..=2 * sa {
                let d2k = constants.delta(2 * k)?;
                let th = constants.theta(s0, k)?;
                let ratio = match (cprime(s0, k, d2k), cdprime(s0, k, d2k)) {
                    (Ok(cp), Ok(cdp)) => rate(params.alpha_add + cp * eps, gamma - th * cdp * spread),
                    _ => f64::INFINITY,
                };
                g1 = g1.max(ratio / 2.0);
            }
            let g2 = rate(SQRT_2 * eps, 1.0 - theta * (4.0 * sa_f).sqrt());
            entries.push(ConditionEntry::new(
                "rate_g1",
                "r >= G1~ = max_|Delta| (alpha_add + C' eps)/(2 - (2 + sqrt(2)) theta sqrt(Sa) C'')",
                H,
                Relation::Ge,
                r,
                g1,
            ));
            entries.push(ConditionEntry::new("rate_g2", "r >= G2~ = sqrt(2) eps/(1 - theta sqrt(4 Sa))", H, Relation::Ge, r, g2));
        }
    }
    Ok(ConditionReport::new(params.variant, entries, implied))
}

/// `(|N \ N̂|, |N̂ \ N|)`
pub fn support_error_metrics(true_support: &Support, estimated: &Support) -> (usize, usize) {
    (true_support.difference(estimated).count(), estimated.difference(true_support).count())
}

/// One tracker step together with the truth at that time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub x: DVector<f64>,
    pub support: Support,
    pub trace: StepTrace,
}

/// Running worst case of a per-step inequality `value ≤ cap`.
struct Tally {
    key: &'static str,
    name: String,
    kind: ConditionKind,
    cap: f64,
    worst: f64,
    first_violation: Option<usize>,
}

impl Tally {
    fn new(key: &'static str, name: impl Into<String>, kind: ConditionKind, cap: f64) -> Self {
        Tally { key, name: name.into(), kind, cap, worst: 0.0, first_violation: None }
    }

    fn observe(&mut self, t: usize, value: f64) {
        self.worst = self.worst.max(value);
        if !(value <= self.cap) && self.first_violation.is_none() {
            self.first_violation = Some(t);
        }
    }

    fn entry(self) -> ConditionEntry {
        let mut e = ConditionEntry::new(self.key, self.name, self.kind, Relation::Le, self.worst, self.cap);
        if self.first_violation.is_some() {
            e.pass = false;
            e.margin = e.margin.min(0.0);
        }
        e.first_violation = self.first_violation;
        e
    }
}

fn small_set_from(x: &DVector<f64>, j: usize, r: f64) -> Support {
    let bound = j as f64 * r;
    (0..x.len()).filter(|&i| x[i] != 0.0 && x[i].abs() < bound).collect()
}

fn count(set: impl Iterator) -> f64 {
    set.count() as f64
}

/// Checks every conclusion of the selected statement on recorded steps, plus
/// the empirically checked hypotheses. Conclusions are checked for `t ≥ 1`; the
/// `t = 0` output is checked against the initial-time hypothesis.
pub fn verify_conclusions(records: &[TraceRecord], params: &TheoremParams, constants: &MatrixConstants) -> Result<ConditionReport> {
    use ConditionKind::{Conclusion as C, Hypothesis as H};
    params.validate()?;
    ensure_constants(constants, params.conclusion_constants())?;
    let (s0, sa, eps, r) = (params.s0, params.sa, params.eps, params.r);
    let sa_f = sa as f64;
    let variant = params.variant;
    let gen = variant == Variant::GenAldl;
    let d0 = if gen { params.d0() } else { 2 };
    let f = params.f();
    let miss_cap = ((2 * d0).saturating_sub(2) * sa) as f64;
    let check_small_set = matches!(variant, Variant::T1Modcs | Variant::GenAldl);

    let mut init = Tally::new("hyp_init", "t = 0 output meets the initial-time requirements (violations)", H, 0.0);
    let mut false_adds = Tally::new("hyp_false_additions", format!("false additions per step <= {}", if gen { f } else { sa }), H, if gen {
        f as f64
    } else {
        sa_f
    });
    let mut spread = Tally::new("hyp_spread", "sqrt(Sa) ||e||_inf / ||e|| <= 1", H, 1.0);

    let mut final_size = Tally::new("final_size", "|N^_t| <= S0", C, s0 as f64);
    let mut final_extras = Tally::new("final_extras", "|N^_t \\ N_t| = 0", C, 0.0);
    let mut final_misses = Tally::new("final_misses", format!("|N_t \\ N^_t| <= {miss_cap}"), C, miss_cap);
    let mut final_small = Tally::new("final_misses_small", format!("misses outside S_t({d0})"), C, 0.0);
    let mut prior_size = Tally::new("prior_size", "|T_t| <= S0", C, s0 as f64);
    let mut prior_extras = Tally::new("prior_extras", "|T_t \\ N_t| <= Sa", C, sa_f);
    let prior_cap = if gen { (params.k1() * sa) as f64 } else { 2.0 * sa_f };
    let mut prior_misses = Tally::new("prior_misses", format!("|N_t \\ T_t| <= {prior_cap}"), C, prior_cap);
    let (det_size_cap, det_extra_cap, det_miss_cap) = if gen {
        ((s0 + sa + f) as f64, (sa + f) as f64, (params.k2() * sa) as f64)
    } else {
        ((s0 + 2 * sa) as f64, 2.0 * sa_f, sa_f)
    };
    let mut det_size = Tally::new("det_size", format!("|T_det| <= {det_size_cap}"), C, det_size_cap);
    let mut det_extras = Tally::new("det_extras", format!("|T_det \\ N_t| <= {det_extra_cap}"), C, det_extra_cap);
    let mut det_misses = Tally::new("det_misses", format!("|N_t \\ T_det| <= {det_miss_cap}"), C, det_miss_cap);

    let final_cap = match variant {
        Variant::T1Modcs => None,
        Variant::GenAldl => {
            let th = constants.theta(s0, (2 * d0).saturating_sub(2) * sa)?;
            Some(SQRT_2 * eps + params.k3() * sa_f.sqrt() * (2.0 * th + 1.0) * r)
        }
        _ => {
            let th = constants.theta(s0, 2 * sa)?;
            Some(SQRT_2 * eps + (2.0 * th + 1.0) * (2.0 * sa_f).sqrt() * r)
        }
    };
    let mut err_final = final_cap.map(|cap| Tally::new("error_final", "||x - x^|| <= sqrt(2) eps + (2 theta + 1) sqrt(2 Sa) r", C, cap));
    let (mid_key, mid_cap) = match variant {
        Variant::GenAldl => ("error_modcs", c1(constants.delta(s0 + sa * (1 + params.k1()))?).map(|c| c * eps).unwrap_or(f64::INFINITY)),
        Variant::T3Lscs => {
            let mut best = 0.0f64;
            for k in 1..=2 * sa {
                let d2k = constants.delta(2 * k)?;
                let th = constants.theta(s0, k)?;
                let v = match (cprime(s0, k, d2k), cdprime(s0, k, d2k)) {
                    (Ok(cp), Ok(cdp)) => cp * eps + (th * cdp + 1.0) * (2.0 * sa_f).sqrt() * r,
                    _ => f64::INFINITY,
                };
                best = best.max(v);
            }
            ("error_csres", best)
        }
        _ => ("error_modcs", C1_HALF * eps),
    };
    let mut err_mid = Tally::new(mid_key, format!("intermediate estimate error <= {mid_cap:.6e}"), C, mid_cap);

    for rec in records {
        let t = rec.trace.t;
        let (misses, extras) = support_error_metrics(&rec.support, &rec.trace.n_hat_next);
        let small = small_set_from(&rec.x, d0, r);
        let outside_small = count(rec.support.difference(&rec.trace.n_hat_next).filter(|i| !small.contains(i)));
        if t == 0 {
            let mut bad = 0.0;
            bad += f64::from(rec.trace.n_hat_next.len() > s0);
            bad += f64::from(extras > 0);
            bad += f64::from(misses as f64 > miss_cap);
            bad += f64::from(outside_small > 0.0);
            init.observe(t, bad);
            continue;
        }
        final_size.observe(t, rec.trace.n_hat_next.len() as f64);
        final_extras.observe(t, extras as f64);
        final_misses.observe(t, misses as f64);
        final_small.observe(t, outside_small);
        let prior = &rec.trace.prior;
        prior_size.observe(t, prior.len() as f64);
        prior_extras.observe(t, count(prior.difference(&rec.support)));
        prior_misses.observe(t, count(rec.support.difference(prior)));

        if variant.uses_add_del() {
            if let Some(t_det) = &rec.trace.t_det {
                det_size.observe(t, t_det.len() as f64);
                det_extras.observe(t, count(t_det.difference(&rec.support)));
                det_misses.observe(t, count(rec.support.difference(t_det)));
                false_adds.observe(t, count(t_det.difference(prior).filter(|i| !rec.support.contains(i))));
            }
            if variant.assumes_spread() {
                if let Some(e) = &rec.trace.ls_error_vec {
                    let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let max = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    if norm > 0.0 {
                        spread.observe(t, sa_f.sqrt() * max / norm);
                    }
                }
            }
        }
        if let Some(tally) = err_final.as_mut() {
            tally.observe(t, (&rec.x - &rec.trace.x_final).norm());
        }
        let mid = if variant == Variant::T3Lscs { &rec.trace.x_csres } else { &rec.trace.x_modcs };
        if let Some(mid) = mid {
            err_mid.observe(t, (&rec.x - mid).norm());
        }
    }

    let mut entries = vec![init.entry()];
    if variant.uses_add_del() {
        entries.push(false_adds.entry());
    }
    if variant.assumes_spread() {
        entries.push(spread.entry());
    }
    entries.extend([final_size.entry(), final_extras.entry(), final_misses.entry()]);
    if check_small_set {
        entries.push(final_small.entry());
    }
    entries.extend([prior_size.entry(), prior_extras.entry(), prior_misses.entry()]);
    if variant.uses_add_del() {
        entries.extend([det_size.entry(), det_extras.entry(), det_misses.entry()]);
    }
    if let Some(tally) = err_final {
        entries.push(tally.entry());
    }
    entries.push(err_mid.entry());
    Ok(ConditionReport::new(variant, entries, implied_alpha_del(params, constants)?))
}
