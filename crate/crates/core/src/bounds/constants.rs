//! Exact restricted isometry and restricted orthogonality constants by
//! exhaustive subset enumeration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of subsets (or subset pairs) visited.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Calls `f` on every `k`-subset of `pool` in lexicographic order.
fn for_each_combination(pool: &[usize], k: usize, mut f: impl FnMut(&[usize])) {
    let n = pool.len();
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut chosen: Vec<usize> = idx.iter().map(|&i| pool[i]).collect();
    loop {
        f(&chosen);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
        for j in i..k {
            chosen[j] = pool[idx[j]];
        }
    }
}

/// Calls `f` on every `k`-subset whose smallest element is `first`.
fn for_each_with_first(m: usize, first: usize, k: usize, f: impl FnMut(&[usize])) {
    let rest: Vec<usize> = (first + 1..m).collect();
    let mut f = f;
    let mut buf = Vec::with_capacity(k);
    for_each_combination(&rest, k - 1, |tail| {
        buf.clear();
        buf.push(first);
        buf.extend_from_slice(tail);
        f(&buf);
    });
}

fn sub_gram(gram: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| gram[(rows[i], cols[j])])
}

fn eigen_extremes(g: DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::try_new(g, 1e-12, 0).expect("symmetric eigen iteration converges");
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

fn check_budget(count: u128, budget: u128) -> Result<()> {
    if count > budget {
        Err(Error::EnumerationLimit { subsets: count, budget })
    } else {
        Ok(())
    }
}

/// `δ_S`: the largest deviation from 1 of any eigenvalue of `A_Tᵀ A_T`, `|T| = S`.
pub fn rip_delta(a: &DMatrix<f64>, s: usize) -> Result<f64> {
    rip_delta_with_budget(a, s, DEFAULT_BUDGET)
}

pub fn rip_delta_with_budget(a: &DMatrix<f64>, s: usize, budget: u128) -> Result<f64> {
    let (n, m) = a.shape();
    if s == 0 {
        return Ok(0.0);
    }
    if s > m {
        return Err(Error::Argument(format!("rip order {s} exceeds column count {m}")));
    }
    if s > n {
        // Some S-column submatrix is singular.
        return Err(Error::Argument(format!("rip order {s} exceeds row count {n}")));
    }
    check_budget(binomial(m, s), budget)?;
    let gram = a.transpose() * a;
    if s == 1 {
        return Ok((0..m).map(|i| (gram[(i, i)] - 1.0).abs()).fold(0.0, f64::max));
    }
    let delta = (0..=m - s)
        .into_par_iter()
        .map(|first| {
            let mut best = 0.0f64;
            for_each_with_first(m, first, s, |set| {
                let (lo, hi) = eigen_extremes(sub_gram(&gram, set, set));
                best = best.max(hi - 1.0).max(1.0 - lo);
            });
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(delta)
}

/// `θ_{S,S′}`: the largest spectral norm of `A_Tᵀ A_{T′}` over disjoint `|T| = S`, `|T′| = S′`.
pub fn roc_theta(a: &DMatrix<f64>, s: usize, sp: usize) -> Result<f64> {
    roc_theta_with_budget(a, s, sp, DEFAULT_BUDGET)
}

pub fn roc_theta_with_budget(a: &DMatrix<f64>, s: usize, sp: usize, budget: u128) -> Result<f64> {
    let m = a.ncols();
    if s == 0 || sp == 0 {
        return Ok(0.0);
    }
    if s + sp > m {
        return Err(Error::Argument(format!("roc orders {s} + {sp} exceed column count {m}")));
    }
    // The value is symmetric in its arguments; enumerate the smaller set outermost.
    let (s, sp) = if s <= sp { (s, sp) } else { (sp, s) };
    check_budget(binomial(m, s).saturating_mul(binomial(m - s, sp)), budget)?;
    let gram = a.transpose() * a;
    let theta = (0..=m - s)
        .into_par_iter()
        .map(|first| {
            let mut best = 0.0f64;
            let mut rest = Vec::with_capacity(m);
            for_each_with_first(m, first, s, |t| {
                rest.clear();
                rest.extend((0..m).filter(|i| !t.contains(i)));
                for_each_combination(&rest, sp, |tp| {
                    let cross = sub_gram(&gram, t, tp);
                    // ‖B‖₂² is the top eigenvalue of the S×S matrix BBᵀ.
                    let bbt = &cross * cross.transpose();
                    let top = if s == 1 { bbt[(0, 0)] } else { eigen_extremes(bbt).1 };
                    best = best.max(top.max(0.0).sqrt());
                });
            });
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(theta)
}

/// 64-bit FNV-1a of the matrix shape and entry bits, as hex.
pub fn matrix_fingerprint(a: &DMatrix<f64>) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&(a.nrows() as u64).to_le_bytes());
    eat(&(a.ncols() as u64).to_le_bytes());
    for v in a.iter() {
        eat(&v.to_bits().to_le_bytes());
    }
    format!("{h:016x}")
}

/// Computed `δ_S` and `θ_{S,S′}` for one matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "ConstantsFile", into = "ConstantsFile")]
pub struct MatrixConstants {
    pub delta: BTreeMap<usize, f64>,
    /// Keyed by `(S, S′)` with `S ≤ S′`.
    pub theta: BTreeMap<(usize, usize), f64>,
    pub fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct DeltaEntry {
    order: usize,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct ThetaEntry {
    s: usize,
    sp: usize,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct ConstantsFile {
    #[serde(default)]
    fingerprint: String,
    #[serde(default)]
    delta: Vec<DeltaEntry>,
    #[serde(default)]
    theta: Vec<ThetaEntry>,
}

impl From<ConstantsFile> for MatrixConstants {
    fn from(f: ConstantsFile) -> Self {
        let mut c = MatrixConstants { fingerprint: f.fingerprint, ..Default::default() };
        for d in f.delta {
            c.delta.insert(d.order, d.value);
        }
        for t in f.theta {
            c.theta.insert(theta_key(t.s, t.sp), t.value);
        }
        c
    }
}

impl From<MatrixConstants> for ConstantsFile {
    fn from(c: MatrixConstants) -> Self {
        ConstantsFile {
            fingerprint: c.fingerprint,
            delta: c.delta.into_iter().map(|(order, value)| DeltaEntry { order, value }).collect(),
            theta: c.theta.into_iter().map(|((s, sp), value)| ThetaEntry { s, sp, value }).collect(),
        }
    }
}

fn theta_key(s: usize, sp: usize) -> (usize, usize) {
    (s.min(sp), s.max(sp))
}

pub fn delta_name(s: usize) -> String {
    format!("delta_{s}")
}

pub fn theta_name(s: usize, sp: usize) -> String {
    let (a, b) = theta_key(s, sp);
    format!("theta_{a}_{b}")
}

impl MatrixConstants {
    /// Enumerates every requested order.
    pub fn compute(a: &DMatrix<f64>, delta_orders: &[usize], theta_pairs: &[(usize, usize)], budget: u128) -> Result<Self> {
        let mut c = MatrixConstants { fingerprint: matrix_fingerprint(a), ..Default::default() };
        for &s in delta_orders {
            if !c.delta.contains_key(&s) {
                c.delta.insert(s, rip_delta_with_budget(a, s, budget)?);
            }
        }
        for &(s, sp) in theta_pairs {
            let key = theta_key(s, sp);
            if !c.theta.contains_key(&key) {
                c.theta.insert(key, roc_theta_with_budget(a, s, sp, budget)?);
            }
        }
        Ok(c)
    }

    /// `δ_S`, with `δ_0 = 0`.
    pub fn delta(&self, s: usize) -> Result<f64> {
        if s == 0 {
            return Ok(0.0);
        }
        self.delta.get(&s).copied().ok_or_else(|| Error::MissingConstants(vec![delta_name(s)]))
    }

    /// `θ_{S,S′}`, symmetric, with `θ_{S,0} = 0`.
    pub fn theta(&self, s: usize, sp: usize) -> Result<f64> {
        if s == 0 || sp == 0 {
            return Ok(0.0);
        }
        self.theta.get(&theta_key(s, sp)).copied().ok_or_else(|| Error::MissingConstants(vec![theta_name(s, sp)]))
    }

    /// Names of the requested orders that are not present.
    pub fn missing(&self, delta_orders: &[usize], theta_pairs: &[(usize, usize)]) -> Vec<String> {
        let mut out: Vec<String> = delta_orders
            .iter()
            .filter(|&&s| s > 0 && !self.delta.contains_key(&s))
            .map(|&s| delta_name(s))
            .collect();
        out.extend(
            theta_pairs
                .iter()
                .filter(|&&(s, sp)| s > 0 && sp > 0 && !self.theta.contains_key(&theta_key(s, sp)))
                .map(|&(s, sp)| theta_name(s, sp)),
        );
        out.sort();
        out.dedup();
        out
    }

    /// Violations of `δ` monotonicity in `S`, `θ` monotonicity in each argument,
    /// nonnegativity, and `θ_{S,S′} ≤ δ_{S+S′}` among the stored values.
    pub fn check_invariants(&self) -> Vec<String> {
        let tol = 1e-12;
        let mut out = Vec::new();
        for (&s, &v) in &self.delta {
            if v < 0.0 {
                out.push(format!("delta_{s} = {v} < 0"));
            }
        }
        let ds: Vec<(usize, f64)> = self.delta.iter().map(|(k, v)| (*k, *v)).collect();
        for w in ds.windows(2) {
            if w[1].1 + tol < w[0].1 {
                out.push(format!("delta_{} = {} < delta_{} = {}", w[1].0, w[1].1, w[0].0, w[0].1));
            }
        }
        for (&(s, sp), &v) in &self.theta {
            if v < 0.0 {
                out.push(format!("theta_{s}_{sp} = {v} < 0"));
            }
            for (&(s2, sp2), &v2) in &self.theta {
                let dominated = (s <= s2 && sp <= sp2) || (s <= sp2 && sp <= s2);
                if dominated && (s, sp) != (s2, sp2) && v > v2 + tol {
                    out.push(format!("theta_{s}_{sp} = {v} > theta_{s2}_{sp2} = {v2}"));
                }
            }
            if let Some(&d) = self.delta.get(&(s + sp)) {
                if v > d + tol {
                    out.push(format!("theta_{s}_{sp} = {v} > delta_{} = {d}", s + sp));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("constants serialize")
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::gaussian_matrix;

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 2), 45);
        assert_eq!(binomial(200, 3), 1_313_400);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(5, 0), 1);
    }

    #[test]
    fn combinations_are_lexicographic_and_complete() {
        let mut seen = Vec::new();
        for_each_combination(&[0, 1, 2, 3], 2, |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_combination(&(0..9).collect::<Vec<_>>(), 4, |_| count += 1);
        assert_eq!(count, 126);
    }

    #[test]
    fn identity_has_zero_constants() {
        let a = DMatrix::<f64>::identity(6, 6);
        for s in 1..=6 {
            assert!(rip_delta(&a, s).unwrap() < 1e-12);
        }
        assert!(roc_theta(&a, 2, 3).unwrap() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let a = gaussian_matrix(59, 200, 0, true).unwrap();
        let err = rip_delta(&a, 10).unwrap_err();
        assert!(matches!(err, Error::EnumerationLimit { .. }));
        assert!(matches!(roc_theta(&a, 5, 5).unwrap_err(), Error::EnumerationLimit { .. }));
    }

    #[test]
    fn theta_is_symmetric() {
        let a = gaussian_matrix(6, 9, 4, true).unwrap();
        let t12 = roc_theta(&a, 1, 2).unwrap();
        let t21 = roc_theta(&a, 2, 1).unwrap();
        assert_eq!(t12, t21);
    }

    #[test]
    fn json_round_trip_and_missing() {
        let a = gaussian_matrix(6, 10, 4, true).unwrap();
        let c = MatrixConstants::compute(&a, &[1, 2, 3], &[(1, 1), (2, 1)], DEFAULT_BUDGET).unwrap();
        let back: MatrixConstants = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.theta(2, 1).unwrap(), c.theta(1, 2).unwrap());
        assert_eq!(c.missing(&[2, 4], &[(1, 1), (3, 3)]), vec!["delta_4".to_string(), "theta_3_3".to_string()]);
        assert!(c.check_invariants().is_empty(), "{:?}", c.check_invariants());
    }
}
