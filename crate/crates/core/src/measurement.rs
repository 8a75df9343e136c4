//! Measurement matrices and bounded noise for `y = A x + w`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Measurement matrices for `t > 0` (`a`) and for the bootstrap instant (`a0`),
/// the uniform noise half-width `c`, and the derived ℓ2 noise bounds.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    pub a: DMatrix<f64>,
    pub a0: DMatrix<f64>,
    pub c: f64,
    pub eps: f64,
    pub eps0: f64,
}

impl MeasurementModel {
    /// Draws Gaussian `A` (n×m) and `A₀` (n0×m), both column-normalized.
    pub fn gaussian(n: usize, n0: usize, m: usize, c: f64, seed: u64) -> Result<Self> {
        if n >= m {
            return Err(Error::Config(format!("n < m violated ({n} >= {m})")));
        }
        if n0 < n || n0 > m {
            return Err(Error::Config(format!("n <= n0 <= m violated (n = {n}, n0 = {n0}, m = {m})")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("c >= 0 violated (c = {c})")));
        }
        let a = gaussian_matrix(n, m, split_seed(seed, 0), true)?;
        let a0 = gaussian_matrix(n0, m, split_seed(seed, 1), true)?;
        Ok(MeasurementModel { a, a0, c, eps: noise_bound(c, n), eps0: noise_bound(c, n0) })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn n0(&self) -> usize {
        self.a0.nrows()
    }

    pub fn m(&self) -> usize {
        self.a.ncols()
    }
}

/// Default bootstrap measurement count: `min(m, 5·S0 + 10)`, never below `n`.
pub fn default_n0(m: usize, s0: usize, n: usize) -> usize {
    (5 * s0 + 10).min(m).max(n)
}

/// Derives an independent stream seed from a parent seed (splitmix64 finalizer).
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// i.i.d. standard normal `n×m` matrix, optionally with unit-norm columns.
pub fn gaussian_matrix(n: usize, m: usize, seed: u64, normalize: bool) -> Result<DMatrix<f64>> {
    if n == 0 || m == 0 {
        return Err(Error::Argument(format!("gaussian_matrix: dimensions must be positive ({n}x{m})")));
    }
    if n > m {
        return Err(Error::Argument(format!("gaussian_matrix: n = {n} exceeds m = {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Column-major fill keeps the stream layout independent of normalization.
    let mut a = DMatrix::from_fn(n, m, |_, _| 0.0);
    for j in 0..m {
        for i in 0..n {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    if normalize {
        normalize_columns(&mut a);
    }
    Ok(a)
}

pub fn normalize_columns(a: &mut DMatrix<f64>) {
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
}

/// An `(m−1)×m` matrix with unit-norm, equiangular columns: a randomly rotated
/// basis of the hyperplane orthogonal to the all-ones vector.
///
/// Its Gram matrix has off-diagonal entries `−1/(m−1)`, so `δ_S = (S−1)/(m−1)`
/// and `θ_{S,S′} = √(S·S′)/(m−1)` regardless of the rotation. Useful for
/// desk-scale configurations where the restricted isometry hypotheses must hold.
pub fn equiangular_frame(m: usize, seed: u64) -> Result<DMatrix<f64>> {
    if m < 3 {
        return Err(Error::Argument(format!("equiangular_frame: m = {m} < 3")));
    }
    let n = m - 1;
    // Columns e_i − 1/m projected to the complement of 1, written in an orthonormal basis.
    let centered = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / m as f64);
    let qr = centered.clone().qr();
    let q = qr.q();
    let basis = q.columns(0, n).into_owned();
    let mut a = basis.transpose() * centered;
    let rot = gaussian_matrix(n, n, seed, false)?.qr().q();
    a = rot * a;
    normalize_columns(&mut a);
    Ok(a)
}

/// i.i.d. `unif(−c, c)` noise of length `n`.
pub fn uniform_noise(n: usize, c: f64, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    uniform_noise_with_rng(n, c, &mut rng)
}

pub fn uniform_noise_with_rng<R: Rng + ?Sized>(n: usize, c: f64, rng: &mut R) -> DVector<f64> {
    if c == 0.0 {
        return DVector::zeros(n);
    }
    DVector::from_fn(n, |_, _| rng.random_range(-c..=c))
}

/// Worst-case ℓ2 norm of an `n`-vector with entries bounded by `c`: `c·√n`.
pub fn noise_bound(c: f64, n: usize) -> f64 {
    c * (n as f64).sqrt()
}

/// `y = A x + w`
pub fn measure(a: &DMatrix<f64>, x: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    if a.ncols() != x.len() || a.nrows() != w.len() {
        return Err(Error::Argument(format!(
            "measure: A is {}x{}, x has {}, w has {}",
            a.nrows(),
            a.ncols(),
            x.len(),
            w.len()
        )));
    }
    let mut y = w.clone();
    y.gemv(1.0, a, x, 1.0);
    Ok(y)
}

/// Writes `A` as CSV: header line `n,m`, then one row of `A` per line.
pub fn write_matrix_csv(a: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut out = format!("{},{}\n", a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:e}", a[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text).map_err(|msg| Error::parse(path, msg))
}

fn parse_matrix_csv(text: &str) -> std::result::Result<DMatrix<f64>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad header {header:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let [n, m] = dims[..] else {
        return Err(format!("header must be \"n,m\", got {header:?}"));
    };
    let mut data = Vec::with_capacity(n * m);
    for (row, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("row {row}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        if vals.len() != m {
            return Err(format!("row {row} has {} entries, expected {m}", vals.len()));
        }
        data.extend(vals);
    }
    if data.len() != n * m {
        return Err(format!("expected {n} rows, found {}", data.len() / m.max(1)));
    }
    Ok(DMatrix::from_row_slice(n, m, &data))
}
