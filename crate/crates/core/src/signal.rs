//! Sparse signal sequences with slowly changing support.
//!
//! Every support element follows a ramp: it enters at magnitude `r`, rises by
//! `r` per step up to `M = d·r`, stays there until it is picked to decay, then
//! falls by `r` per step until it leaves the support. At any time there are
//! `2·Sa` elements at each intermediate level `j·r` (half rising, half
//! falling) and `S0 − (2d−2)·Sa` elements at `M`, so support size and signal
//! power never change.
//!
//! Magnitudes are tracked as integer levels so that set bookkeeping is exact.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::support::Support;

/// Dimensions and ramp shape of the signal model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Ambient dimension.
    pub m: usize,
    /// Support size.
    pub s0: usize,
    /// Additions (and removals) per time step.
    pub sa: usize,
    /// Ramp length in steps.
    pub d: usize,
    /// Magnitude change per step.
    pub r: f64,
}

impl ModelParams {
    /// Peak magnitude `M = d·r`.
    pub fn peak(&self) -> f64 {
        self.d as f64 * self.r
    }

    /// Number of elements held at the peak magnitude.
    pub fn constant_count(&self) -> usize {
        self.s0 - (2 * self.d - 2) * self.sa
    }

    /// `(S0 − (2d−2)Sa)·M² + 2Sa·Σ_{j<d} j²r²`
    pub fn signal_power(&self) -> f64 {
        let ramp: f64 = (1..self.d).map(|j| (j * j) as f64).sum::<f64>() * self.r * self.r;
        self.constant_count() as f64 * self.peak().powi(2) + 2.0 * self.sa as f64 * ramp
    }

    pub fn validate(&self) -> Result<()> {
        if self.sa < 1 {
            return Err(Error::Config("Sa >= 1 violated".into()));
        }
        if self.d < 1 {
            return Err(Error::Config("d >= 1 violated".into()));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::Config(format!("r > 0 violated (r = {})", self.r)));
        }
        if self.s0 < (2 * self.d - 2) * self.sa {
            return Err(Error::Config(format!(
                "S0 >= (2d-2)Sa violated ({} < {})",
                self.s0,
                (2 * self.d - 2) * self.sa
            )));
        }
        // Each step draws Sa fresh decreasers from the constant set.
        if self.constant_count() < self.sa {
            return Err(Error::Config(format!(
                "S0 - (2d-2)Sa >= Sa violated ({} < {})",
                self.constant_count(),
                self.sa
            )));
        }
        if self.m <= self.s0 + self.sa {
            return Err(Error::Config(format!(
                "m > S0 + Sa violated ({} <= {})",
                self.m,
                self.s0 + self.sa
            )));
        }
        Ok(())
    }
}

/// The true signal at one time instant together with its support bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalState {
    pub t: usize,
    pub x: DVector<f64>,
    pub support: Support,
    pub inc: Support,
    pub dec: Support,
    pub con: Support,
    pub signs: BTreeMap<usize, i8>,
    levels: Vec<usize>,
    params: ModelParams,
}

/// Sets that changed between `t−1` and `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionSets {
    /// Newly added elements (`ℐₜ(1)`).
    pub added: Support,
    /// Elements that left the support (`𝒟ₜ(0)`).
    pub removed: Support,
    /// `j → ℐₜ(j)`: elements that rose from `(j−1)r` to `jr`, for `1 ≤ j ≤ d`.
    pub increased: BTreeMap<usize, Support>,
    /// `j → 𝒟ₜ(j)`: elements that fell from `(j+1)r` to `jr`, for `0 ≤ j ≤ d−1`.
    pub decreased: BTreeMap<usize, Support>,
}

impl TransitionSets {
    pub fn increased_at(&self, j: usize) -> Support {
        self.increased.get(&j).cloned().unwrap_or_default()
    }

    pub fn decreased_at(&self, j: usize) -> Support {
        self.decreased.get(&j).cloned().unwrap_or_default()
    }
}

impl SignalState {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Integer magnitude level of index `i` (`|x_i| = level·r`).
    pub fn level(&self, i: usize) -> usize {
        self.levels[i]
    }

    pub fn power(&self) -> f64 {
        self.x.norm_squared()
    }

    fn from_levels(
        params: ModelParams,
        t: usize,
        levels: Vec<usize>,
        signs: BTreeMap<usize, i8>,
        inc: Support,
        dec: Support,
        con: Support,
    ) -> Self {
        let mut x = DVector::zeros(params.m);
        for (&i, &s) in &signs {
            x[i] = f64::from(s) * levels[i] as f64 * params.r;
        }
        let support = signs.keys().copied().collect();
        SignalState { t, x, support, inc, dec, con, signs, levels, params }
    }

    /// Test hook: overwrite the level of one element without touching the set bookkeeping.
    #[doc(hidden)]
    pub fn corrupt_level(&mut self, i: usize, level: usize) {
        self.levels[i] = level;
        let s = self.signs.get(&i).copied().unwrap_or(1);
        self.x[i] = f64::from(s) * level as f64 * self.params.r;
    }

    /// Checks the per-state invariants. Returns one message per violation.
    pub fn check_invariants(&self) -> Vec<String> {
        let p = &self.params;
        let mut out = Vec::new();
        if self.support.len() != p.s0 {
            out.push(format!("t={}: |N_t| = {} != S0 = {}", self.t, self.support.len(), p.s0));
        }
        let union: Support = self.inc.union(&self.dec).copied().chain(self.con.iter().copied()).collect();
        let disjoint = self.inc.is_disjoint(&self.dec)
            && self.inc.is_disjoint(&self.con)
            && self.dec.is_disjoint(&self.con);
        if union != self.support || !disjoint {
            out.push(format!("t={}: Inc/Dec/Con do not partition N_t", self.t));
        }
        let mut hist = vec![0usize; p.d + 1];
        for (i, &lvl) in self.levels.iter().enumerate() {
            let in_support = self.support.contains(&i);
            if in_support != (lvl > 0) || lvl > p.d {
                out.push(format!("t={}: index {i} has level {lvl} inconsistent with support", self.t));
            }
            if lvl <= p.d {
                hist[lvl] += 1;
            }
            if (self.x[i].abs() - lvl as f64 * p.r).abs() > 1e-12 * p.peak() {
                out.push(format!("t={}: |x_{i}| disagrees with level {lvl}", self.t));
            }
        }
        for (j, &count) in hist.iter().enumerate().skip(1) {
            let expect = if j == p.d { p.constant_count() } else { 2 * p.sa };
            if count != expect {
                out.push(format!("t={}: {count} elements at magnitude {j}r, expected {expect}", self.t));
            }
        }
        let power = self.power();
        let expect = p.signal_power();
        if (power - expect).abs() > 1e-10 * expect.max(1.0) {
            out.push(format!("t={}: power {power} != {expect}", self.t));
        }
        out
    }
}

/// Draws the `t = 0` state from a seed.
pub fn init_signal(params: &ModelParams, seed: u64) -> Result<SignalState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_signal_with_rng(params, &mut rng)
}

/// Draws the `t = 0` state: `2Sa` elements at each of `r, …, (d−1)r` (half rising,
/// half falling) and the rest at `M`, on a uniformly drawn support with random signs.
pub fn init_signal_with_rng<R: RngCore + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<SignalState> {
    params.validate()?;
    let p = *params;
    let picked = sample(rng, p.m, p.s0).into_vec();
    let mut levels = vec![0usize; p.m];
    let mut signs = BTreeMap::new();
    let (mut inc, mut dec, mut con) = (Support::new(), Support::new(), Support::new());
    let ramp = (p.d - 1) * p.sa;
    for (k, &i) in picked.iter().enumerate() {
        if k < ramp {
            levels[i] = 1 + k / p.sa;
            inc.insert(i);
        } else if k < 2 * ramp {
            levels[i] = 1 + (k - ramp) / p.sa;
            dec.insert(i);
        } else {
            levels[i] = p.d;
            con.insert(i);
        }
        signs.insert(i, if rng.random_bool(0.5) { 1 } else { -1 });
    }
    Ok(SignalState::from_levels(p, 0, levels, signs, inc, dec, con))
}

/// Advances the signal by one step.
///
/// 1. rising elements gain `r`, falling elements lose `r`, constant ones hold;
/// 2. `Sa` fresh indices from `N_{t−1}ᶜ` enter at `r` with random signs and
///    `Sa` indices from `Con_{t−1}` start to fall (to `(d−1)r`, sign kept);
/// 3. elements that reached `M` join `Con`, elements that reached 0 leave.
pub fn step_signal<R: RngCore + ?Sized>(state: &SignalState, rng: &mut R) -> Result<(SignalState, TransitionSets)> {
    let p = state.params;
    if state.con.len() < p.sa {
        return Err(Error::ModelInfeasible(format!(
            "|Con| = {} < Sa = {} at t = {}",
            state.con.len(),
            p.sa,
            state.t
        )));
    }
    let prev_levels = &state.levels;
    let mut levels = prev_levels.clone();
    let mut signs = state.signs.clone();

    for &i in &state.inc {
        levels[i] += 1;
    }
    for &i in &state.dec {
        levels[i] -= 1;
    }

    let outside: Vec<usize> = (0..p.m).filter(|i| !state.support.contains(i)).collect();
    let added: Support = sample(rng, outside.len(), p.sa).into_iter().map(|k| outside[k]).collect();
    for &i in &added {
        levels[i] = 1;
        signs.insert(i, if rng.random_bool(0.5) { 1 } else { -1 });
    }
    let con_prev: Vec<usize> = state.con.iter().copied().collect();
    let new_dec: Support = sample(rng, con_prev.len(), p.sa).into_iter().map(|k| con_prev[k]).collect();
    for &i in &new_dec {
        levels[i] = p.d - 1;
    }

    // Rising elements that hit M and falling elements that hit 0. With d = 1 the
    // fresh additions are already at M and the fresh decreasers already at 0.
    let reached_peak: Support =
        state.inc.iter().chain(added.iter()).copied().filter(|&i| levels[i] == p.d).collect();
    let reached_zero: Support =
        state.dec.iter().chain(new_dec.iter()).copied().filter(|&i| levels[i] == 0).collect();

    let inc: Support = state.inc.union(&added).copied().filter(|i| !reached_peak.contains(i)).collect();
    let dec: Support = state.dec.union(&new_dec).copied().filter(|i| !reached_zero.contains(i)).collect();
    let con: Support = state
        .con
        .union(&reached_peak)
        .copied()
        .filter(|i| !new_dec.contains(i))
        .collect();
    for i in &reached_zero {
        signs.remove(i);
    }

    let next = SignalState::from_levels(p, state.t + 1, levels, signs, inc, dec, con);
    let sets = transition_sets(state, &next);
    Ok((next, sets))
}

/// Recovers `𝒜ₜ, ℛₜ, ℐₜ(j), 𝒟ₜ(j)` from two consecutive states.
pub fn transition_sets(prev: &SignalState, next: &SignalState) -> TransitionSets {
    let d = prev.params.d;
    let mut increased: BTreeMap<usize, Support> = (1..=d).map(|j| (j, Support::new())).collect();
    let mut decreased: BTreeMap<usize, Support> = (0..d).map(|j| (j, Support::new())).collect();
    for i in 0..prev.params.m {
        let (a, b) = (prev.levels[i], next.levels[i]);
        if b == a + 1 {
            increased.entry(b).or_default().insert(i);
        } else if b + 1 == a {
            decreased.entry(b).or_default().insert(i);
        }
    }
    TransitionSets {
        added: increased.get(&1).cloned().unwrap_or_default(),
        removed: decreased.get(&0).cloned().unwrap_or_default(),
        increased,
        decreased,
    }
}

/// `𝒮ₜ(j) = {i : 0 < |x_i| < j·r}` for `1 ≤ j ≤ d`.
pub fn small_set(state: &SignalState, j: usize) -> Result<Support> {
    if j < 1 || j > state.params.d {
        return Err(Error::Argument(format!("small_set: j = {j} outside 1..={}", state.params.d)));
    }
    Ok(state.levels.iter().enumerate().filter(|(_, &l)| l > 0 && l < j).map(|(i, _)| i).collect())
}

/// Outcome of checking the small-set evolution identities for one transition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub t: usize,
    pub j: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks, for `1 < j ≤ d`,
///
/// * `𝒮ₜ(j) = 𝒮ₜ₋₁(j) ∪ (𝒜ₜ ∪ 𝒟ₜ(j−1)) \ (ℛₜ ∪ ℐₜ(j))`
/// * `𝒮ₜ₋₁(j) ∪ 𝒜ₜ \ ℛₜ = 𝒮ₜ(j) ∪ ℐₜ(j) \ 𝒟ₜ(j−1)`
///
/// along with the disjointness and cardinality facts both rely on. For `j = 1`
/// both small sets are empty and only the trivial form is checked.
pub fn audit_transition(prev: &SignalState, next: &SignalState, ts: &TransitionSets, j: usize) -> AuditReport {
    let mut violations = Vec::new();
    let t = next.t;
    let (s_prev, s_next) = match (small_set(prev, j), small_set(next, j)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            return AuditReport { t, j, violations: vec![e.to_string()] };
        }
    };
    let sa = prev.params.sa;
    let inc_j = ts.increased_at(j);
    let dec_jm1 = ts.decreased_at(j.saturating_sub(1));

    if ts.added.len() != sa || ts.removed.len() != sa {
        violations.push(format!("|A_t| = {}, |R_t| = {}, expected Sa = {sa}", ts.added.len(), ts.removed.len()));
    }

    if j > 1 {
        let sets = [("A_t", &ts.added), ("R_t", &ts.removed), ("D_t(j-1)", &dec_jm1), ("I_t(j)", &inc_j)];
        for (a, (na, sa_)) in sets.iter().enumerate() {
            for (nb, sb) in sets.iter().skip(a + 1) {
                if !sa_.is_disjoint(sb) {
                    violations.push(format!("{na} and {nb} are not disjoint"));
                }
            }
        }
        let entering: Support = s_prev.union(&ts.added).copied().chain(dec_jm1.iter().copied()).collect();
        let leaving: Support = ts.removed.union(&inc_j).copied().collect();
        let rhs: Support = entering.difference(&leaving).copied().collect();
        if s_next != rhs {
            violations.push(format!(
                "S_t({j}) != S_(t-1)({j}) u (A_t u D_t({})) \\ (R_t u I_t({j}))",
                j - 1
            ));
        }
        let lhs2: Support = s_prev.union(&ts.added).copied().filter(|i| !ts.removed.contains(i)).collect();
        let rhs2: Support = s_next.union(&inc_j).copied().filter(|i| !dec_jm1.contains(i)).collect();
        if lhs2 != rhs2 {
            violations.push(format!(
                "S_(t-1)({j}) u A_t \\ R_t != S_t({j}) u I_t({j}) \\ D_t({})",
                j - 1
            ));
        }
    } else if !s_prev.is_empty() || !s_next.is_empty() {
        violations.push("S_t(1) must be empty".into());
    }
    AuditReport { t, j, violations }
}

/// Iterator over a seeded signal trajectory, yielding `(state, transition)` pairs.
/// The first item is the `t = 0` state with empty transition sets.
pub struct SignalTrajectory {
    rng: ChaCha8Rng,
    current: Option<SignalState>,
    started: bool,
}

impl SignalTrajectory {
    pub fn new(params: &ModelParams, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = init_signal_with_rng(params, &mut rng)?;
        Ok(SignalTrajectory { rng, current: Some(first), started: false })
    }
}

impl Iterator for SignalTrajectory {
    type Item = (SignalState, TransitionSets);

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.current.as_ref()?;
        if !self.started {
            self.started = true;
            return Some((current.clone(), TransitionSets::default()));
        }
        // Params were validated at construction, so the step cannot fail.
        let (next, sets) = step_signal(current, &mut self.rng).expect("validated signal model");
        self.current = Some(next.clone());
        Some((next, sets))
    }
}
