//! Dense row-major matrices, Gram products, spectral bounds and SPD solves.

use crate::par::{for_each_row, Execution};
use crate::{Error, Result};

/// A row-major matrix of finite reals.
///
/// The checked constructors reject empty shapes and non-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or(Error::DimensionOverflow { op: "new", dim: rows.max(cols) })?;
        if data.len() != expected {
            return Err(Error::EntryCount { rows, cols, expected, found: data.len() });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / cols, col: k % cols, value: data[k] });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::EntryCount { rows: n, cols: m, expected: n * m, found: data.len() + r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(n, m, data)
    }

    /// An `n × 1` column.
    pub fn column(values: Vec<f64>) -> Result<Self> {
        Self::new(values.len(), 1, values)
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "zero-sized matrix {rows}x{cols}");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// # Panics
    /// If either dimension is zero or `f` returns a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                assert!(v.is_finite(), "non-finite entry {v} at ({i}, {j})");
                m.data[i * cols + j] = v;
            }
        }
        m
    }

    /// Unchecked constructor for kernels whose inputs were already finite.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self::from_raw(self.cols, self.rows, out)
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.matmul_with(rhs, Execution::default())
    }

    /// `self · rhs`, one output row per task.
    pub fn matmul_with(&self, rhs: &Self, exec: Execution) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch { op: "matmul", left: self.shape(), right: rhs.shape() });
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0.0; n * m];
        if m <= NARROW_RHS {
            // few right-hand columns: a dot product per output entry keeps
            // the inner loop long
            let bt = rhs.transpose();
            for_each_row(exec, &mut out, m, |i, row| {
                let a = &self.data[i * k..(i + 1) * k];
                for (c, v) in row.iter_mut().enumerate() {
                    *v = dot(a, bt.row(c));
                }
            });
            return Ok(Self::from_raw(n, m, out));
        }
        for_each_row(exec, &mut out, m, |i, row| {
            let a = &self.data[i * k..(i + 1) * k];
            for (l, &ail) in a.iter().enumerate() {
                if ail != 0.0 {
                    let b = &rhs.data[l * m..(l + 1) * m];
                    for (c, &bv) in row.iter_mut().zip(b) {
                        *c += ail * bv;
                    }
                }
            }
        });
        Ok(Self::from_raw(n, m, out))
    }

    /// `selfᵀ · rhs`.
    pub fn t_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::ShapeMismatch { op: "t_matmul", left: self.shape(), right: rhs.shape() });
        }
        self.transpose().matmul(rhs)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    fn zip_with(&self, rhs: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch { op, left: self.shape(), right: rhs.shape() });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sum of the diagonal (of the leading square block).
    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Number of entries that are not exactly zero.
    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// Largest `|a_ij − a_ji|`; `None` for non-square matrices.
    pub fn max_asymmetry(&self) -> Option<f64> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Some(worst)
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

// `matmul` switches to per-entry dot products at or below this many columns.
const NARROW_RHS: usize = 4;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four independent accumulators; fixed association order keeps the
    // result deterministic
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

/// `HᵀH`.
pub fn gram(h: &DenseMatrix) -> Result<DenseMatrix> {
    gram_with(h, Execution::default())
}

/// `HᵀH`, computing the upper triangle row by row and mirroring it so the
/// result is symmetric bit for bit.
pub fn gram_with(h: &DenseMatrix, exec: Execution) -> Result<DenseMatrix> {
    let n = h.cols;
    let len = n.checked_mul(n).ok_or(Error::DimensionOverflow { op: "gram", dim: n })?;
    let ht = h.transpose();
    let mut g = vec![0.0; len];
    for_each_row(exec, &mut g, n, |i, row| {
        let hi = ht.row(i);
        for j in i..n {
            row[j] = dot(hi, ht.row(j));
        }
    });
    for i in 0..n {
        for j in (i + 1)..n {
            g[j * n + i] = g[i * n + j];
        }
    }
    Ok(DenseMatrix::from_raw(n, n, g))
}

/// Two-sided spectral estimates for a symmetric positive semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectrumBounds {
    /// Lower estimate of the smallest eigenvalue.
    pub kappa0: f64,
    /// Upper estimate of the largest eigenvalue.
    pub kappa: f64,
    pub iterations_used: usize,
}

const SYMMETRY_TOL: f64 = 1e-9;

fn check_symmetric(g: &DenseMatrix) -> Result<f64> {
    let asym = g
        .max_asymmetry()
        .ok_or(Error::ShapeMismatch { op: "symmetric", left: g.shape(), right: (g.cols, g.rows) })?;
    let scale = g.max_abs();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym, scale });
    }
    Ok(scale)
}

/// Bounds the spectrum of a symmetric PSD matrix.
///
/// `kappa` comes from power iteration on `G`; `kappa0` from power iteration
/// on the shifted matrix `kappa·I − G`, whose dominant eigenvalue is
/// `kappa − λ_min`. Each run stops once the residual `‖Av − ρv‖` falls below
/// `tol·|ρ|`, or after `max_iter` steps. The final residual is added to
/// each Rayleigh quotient so both estimates lean to the safe side. `kappa0` is floored at 0.
pub fn spectral_bounds(g: &DenseMatrix, tol: f64, max_iter: usize) -> Result<SpectrumBounds> {
    let scale = check_symmetric(g)?;
    if scale == 0.0 {
        return Ok(SpectrumBounds { kappa0: 0.0, kappa: 0.0, iterations_used: 0 });
    }
    let n = g.rows;
    let matvec = |v: &[f64], out: &mut [f64]| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(g.row(i), v);
        }
    };
    let top = power_iteration(n, tol, max_iter, matvec);
    let kappa = (top.rho + top.residual).max(0.0);
    let shifted = |v: &[f64], out: &mut [f64]| {
        matvec(v, out);
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = kappa * vi - *o;
        }
    };
    let bottom = power_iteration(n, tol, max_iter, shifted);
    let kappa0 = (kappa - (bottom.rho + bottom.residual)).clamp(0.0, kappa);
    Ok(SpectrumBounds { kappa0, kappa, iterations_used: top.iterations + bottom.iterations })
}

struct PowerResult {
    rho: f64,
    residual: f64,
    iterations: usize,
}

fn power_iteration(n: usize, tol: f64, max_iter: usize, apply: impl Fn(&[f64], &mut [f64])) -> PowerResult {
    // deterministic, sign-varying start so no eigenvector is missed by symmetry
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut w = vec![0.0; n];
    let mut iterations = 0;
    let (mut rho, mut residual) = (0.0, f64::INFINITY);
    for it in 1..=max_iter.max(1) {
        iterations = it;
        apply(&v, &mut w);
        rho = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return PowerResult { rho: 0.0, residual: 0.0, iterations };
        }
        residual = norm2(&w.iter().zip(&v).map(|(wi, vi)| wi - rho * vi).collect::<Vec<_>>());
        if residual <= tol * rho.abs() {
            break;
        }
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / nw);
    }
    PowerResult { rho, residual, iterations }
}

/// One step of the SplitMix64 generator; also a good 64-bit mixing function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Solves `(A + jitter·I) X = B` by Cholesky factorization.
pub fn solve_spd(a: &DenseMatrix, b: &DenseMatrix, jitter: f64) -> Result<DenseMatrix> {
    check_symmetric(a)?;
    if b.rows != a.rows {
        return Err(Error::ShapeMismatch { op: "solve_spd", left: a.shape(), right: b.shape() });
    }
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(Error::InvalidParameter(format!("jitter must be finite and nonnegative, got {jitter}")));
    }
    let n = a.rows;
    let l = cholesky(a, jitter)?;
    let m = b.cols;
    let mut x = b.data.clone();
    // forward: L y = b
    for i in 0..n {
        let (done, rest) = x.split_at_mut(i * m);
        let xi = &mut rest[..m];
        for k in 0..i {
            let lik = l[i * n + k];
            if lik != 0.0 {
                for (v, &y) in xi.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                    *v -= lik * y;
                }
            }
        }
        let d = l[i * n + i];
        xi.iter_mut().for_each(|v| *v /= d);
    }
    // backward: Lᵀ x = y
    for i in (0..n).rev() {
        let (head, tail) = x.split_at_mut((i + 1) * m);
        let xi = &mut head[i * m..];
        for k in (i + 1)..n {
            let lki = l[k * n + i];
            if lki != 0.0 {
                let xk = &tail[(k - i - 1) * m..(k - i) * m];
                for (v, &y) in xi.iter_mut().zip(xk) {
                    *v -= lki * y;
                }
            }
        }
        let d = l[i * n + i];
        xi.iter_mut().for_each(|v| *v /= d);
    }
    DenseMatrix::new(n, m, x)
}

fn cholesky(a: &DenseMatrix, jitter: f64) -> Result<Vec<f64>> {
    let n = a.rows;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let lj = &l[j * n..j * n + j];
        let d = a.get(j, j) + jitter - dot(lj, lj);
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let s = a.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

/// Least-squares output weights `β ≈ H†T` via ridge-floored normal equations.
///
/// Solves `(HᵀH + ρI)β = HᵀT` with `ρ = ridge_floor · trace(HᵀH) / cols`.
pub fn min_norm_lsq(h: &DenseMatrix, t: &DenseMatrix, ridge_floor: f64) -> Result<DenseMatrix> {
    if h.rows != t.rows {
        return Err(Error::ShapeMismatch { op: "min_norm_lsq", left: h.shape(), right: t.shape() });
    }
    let g = gram(h)?;
    let htt = h.t_matmul(t)?;
    let jitter = ridge_floor * g.trace() / g.cols as f64;
    solve_spd(&g, &htt, jitter)
}
