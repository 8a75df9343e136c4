//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsetrack::support::Support;

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn columns(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])])
}

fn off_known_l1(beta: &DVector<f64>, known: &Support) -> f64 {
    beta.iter().enumerate().filter(|(i, _)| !known.contains(i)).map(|(_, v)| v.abs()).sum()
}

/// Noiseless oracle: `min ‖β_{Tᶜ}‖₁ s.t. Aβ = y` by enumerating every basic
/// solution supported on `T ∪ S` with linearly independent columns.
pub fn equality_oracle(a: &DMatrix<f64>, y: &DVector<f64>, known: &Support) -> Option<(f64, DVector<f64>)> {
    let (n, m) = a.shape();
    let t: Vec<usize> = known.iter().copied().collect();
    let rest: Vec<usize> = (0..m).filter(|i| !known.contains(i)).collect();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 0..=n.saturating_sub(t.len()).min(rest.len()) {
        for s in subsets(rest.len(), k) {
            let mut idx = t.clone();
            idx.extend(s.iter().map(|&j| rest[j]));
            if idx.is_empty() {
                if y.norm() <= 1e-9 {
                    best = Some((0.0, DVector::zeros(m)));
                }
                continue;
            }
            let sub = columns(a, &idx);
            let svd = sub.clone().svd(true, true);
            if svd.singular_values.min() < 1e-9 * svd.singular_values.max().max(1.0) {
                continue;
            }
            let coef = svd.pseudo_inverse(1e-12).unwrap() * y;
            if (y - &sub * &coef).norm() > 1e-9 * (1.0 + y.norm()) {
                continue;
            }
            let mut beta = DVector::zeros(m);
            for (p, &i) in idx.iter().enumerate() {
                beta[i] = coef[p];
            }
            let obj = off_known_l1(&beta, known);
            if best.as_ref().map_or(true, |b| obj < b.0 - 1e-12) {
                best = Some((obj, beta));
            }
        }
    }
    best
}

/// Weighted LASSO `min ½‖y − Aβ‖² + λ‖β_{Tᶜ}‖₁` by cyclic coordinate descent.
pub fn lasso_cd(a: &DMatrix<f64>, y: &DVector<f64>, known: &Support, lambda: f64, start: Option<&DVector<f64>>) -> DVector<f64> {
    let m = a.ncols();
    let norms: Vec<f64> = (0..m).map(|j| a.column(j).norm_squared()).collect();
    let mut beta = start.cloned().unwrap_or_else(|| DVector::zeros(m));
    let mut resid = y - a * &beta;
    for _ in 0..200_000 {
        let mut change = 0.0f64;
        for j in 0..m {
            if norms[j] == 0.0 {
                continue;
            }
            let old = beta[j];
            let rho = a.column(j).dot(&resid) + norms[j] * old;
            let new = if known.contains(&j) {
                rho / norms[j]
            } else {
                rho.signum() * (rho.abs() - lambda).max(0.0) / norms[j]
            };
            if new != old {
                resid.axpy(old - new, &a.column(j), 1.0);
                beta[j] = new;
                change = change.max((new - old).abs());
            }
        }
        if change < 1e-14 {
            break;
        }
    }
    beta
}

/// Ball-constrained oracle: bisection on the LASSO weight until the residual
/// equals `eps`. Returns `(objective, β)`.
pub fn ball_oracle(a: &DMatrix<f64>, y: &DVector<f64>, known: &Support, eps: f64) -> (f64, DVector<f64>) {
    assert!(eps > 0.0);
    let m = a.ncols();
    // β supported on T only: LS on T.
    let t: Vec<usize> = known.iter().copied().collect();
    let mut beta_t = DVector::zeros(m);
    if !t.is_empty() {
        let sub = columns(a, &t);
        let coef = sub.clone().svd(true, true).pseudo_inverse(1e-12).unwrap() * y;
        for (p, &i) in t.iter().enumerate() {
            beta_t[i] = coef[p];
        }
    }
    if (y - a * &beta_t).norm() <= eps {
        return (0.0, beta_t);
    }
    let lmax = (0..m).filter(|j| !known.contains(j)).map(|j| a.column(j).dot(&(y - a * &beta_t)).abs()).fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0f64, lmax);
    let mut warm = beta_t.clone();
    let mut best = beta_t;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let b = lasso_cd(a, y, known, mid, Some(&warm));
        let r = (y - a * &b).norm();
        if r > eps {
            hi = mid;
        } else {
            lo = mid;
            best = b.clone();
        }
        warm = b;
        if (hi - lo) <= 1e-15 * lmax.max(1e-300) {
            break;
        }
    }
    (off_known_l1(&best, known), best)
}

#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub id: usize,
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub known: Support,
    pub eps: f64,
    pub x: DVector<f64>,
    pub objective: f64,
    /// Noiseless instance whose oracle minimizer is `x` itself.
    pub exact: bool,
}

pub const CORPUS_HEADER: &str = "id,n,m,eps,known,a,y,x,objective,exact";

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";")
}

fn split(s: &str) -> Vec<f64> {
    if s.is_empty() {
        return Vec::new();
    }
    s.split(';').map(|v| v.parse().unwrap()).collect()
}

pub fn write_corpus(corpus: &[OracleInstance]) -> String {
    let mut out = String::from(CORPUS_HEADER);
    out.push('\n');
    for c in corpus {
        let known = c.known.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";");
        let rows = (0..c.a.nrows()).flat_map(|i| (0..c.a.ncols()).map(move |j| (i, j)));
        let _ = writeln!(
            out,
            "{},{},{},{:?},{},{},{},{},{:?},{}",
            c.id,
            c.a.nrows(),
            c.a.ncols(),
            c.eps,
            known,
            join(rows.map(|(i, j)| c.a[(i, j)])),
            join(c.y.iter().copied()),
            join(c.x.iter().copied()),
            c.objective,
            c.exact
        );
    }
    out
}

pub fn read_corpus(text: &str) -> Vec<OracleInstance> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CORPUS_HEADER));
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 10, "bad corpus row {l}");
            let (n, m): (usize, usize) = (f[1].parse().unwrap(), f[2].parse().unwrap());
            OracleInstance {
                id: f[0].parse().unwrap(),
                a: DMatrix::from_row_slice(n, m, &split(f[5])),
                y: DVector::from_vec(split(f[6])),
                known: if f[4].is_empty() { Support::new() } else { f[4].split(';').map(|v| v.parse().unwrap()).collect() },
                eps: f[3].parse().unwrap(),
                x: DVector::from_vec(split(f[7])),
                objective: f[8].parse().unwrap(),
                exact: f[9].parse().unwrap(),
            }
        })
        .collect()
}

/// Draws the 50 tiny instances (`m ≤ 12`, `n ≤ 10`, `|N| ≤ 3`) and solves each
/// with the oracles above. The first 15 are noiseless.
pub fn generate_corpus(seed: u64) -> Vec<OracleInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < 50 {
        let id = out.len();
        let noiseless = id < 15;
        let m = rng.random_range(8..=12);
        let n = rng.random_range(6..=10.min(m - 1));
        let s = rng.random_range(1..=3);
        let a = sparsetrack::gaussian_matrix(n, m, rng.random(), true).unwrap();
        let supp: Vec<usize> = sample(&mut rng, m, s).into_vec();
        let mut x = DVector::zeros(m);
        for &i in &supp {
            x[i] = rng.random_range(0.5..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        // Known part: some of the support plus at most one extra.
        let mut known: Support = supp.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if rng.random_bool(0.3) {
            known.insert(rng.random_range(0..m));
        }
        let (y, eps) = if noiseless {
            (&a * &x, 0.0)
        } else {
            let c = rng.random_range(0.02..0.2);
            let w = sparsetrack::uniform_noise(n, c, rng.random());
            (&a * &x + w, c * (n as f64).sqrt())
        };
        let (objective, exact) = if noiseless {
            let Some((obj, beta)) = equality_oracle(&a, &y, &known) else { continue };
            (obj, (beta - &x).amax() < 1e-9)
        } else {
            (ball_oracle(&a, &y, &known, eps).0, false)
        };
        out.push(OracleInstance { id, a, y, known, eps, x, objective, exact });
    }
    out
}
