//! Slow reference computations for tests.
//!
//! Nothing here shares code with `hybrid-elm`. Matrices are plain
//! `Vec<Vec<f64>>` so the oracles cannot accidentally reuse a kernel they are
//! meant to check.

pub type Mat = Vec<Vec<f64>>;

/// Triple-loop `a * b`.
pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for l in 0..k {
                s += a[i][l] * b[l][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn transpose(a: &Mat) -> Mat {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// `b` may have several columns.
pub fn gauss_solve(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let mut aug: Mat = (0..n)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend_from_slice(&b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        assert!(p != 0.0, "singular system");
        for r in (col + 1)..n {
            let f = aug[r][col] / p;
            if f != 0.0 {
                for c in col..(n + m) {
                    aug[r][c] -= f * aug[col][c];
                }
            }
        }
    }
    let mut x = vec![vec![0.0; m]; n];
    for i in (0..n).rev() {
        for j in 0..m {
            let mut s = aug[i][n + j];
            for k in (i + 1)..n {
                s -= aug[i][k] * x[k][j];
            }
            x[i][j] = s / aug[i][i];
        }
    }
    x
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut a = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Minimizes `½(u − t)² + pen(|u|)` over the real line.
///
/// `pen` must be nondecreasing on `[0, ∞)` with `pen(0) = 0`, so the minimizer
/// lies between 0 and `t`. `dpen` is its derivative on `(0, ∞)`. The search
/// evaluates `grid` equally spaced points on `[0, |t|]`, brackets the best
/// interior point, and refines it by bisection on the derivative. The
/// endpoint `u = 0` is always a candidate since the penalty may have a cusp
/// there.
pub fn prox_1d(t: f64, grid: usize, pen: impl Fn(f64) -> f64, dpen: impl Fn(f64) -> f64) -> f64 {
    let a = t.abs();
    if a == 0.0 {
        return 0.0;
    }
    let f = |u: f64| 0.5 * (u - a) * (u - a) + pen(u);
    let df = |u: f64| u - a + dpen(u);
    let h = a / grid as f64;
    let mut best_k = 0usize;
    let mut best_f = f(0.0);
    for k in 1..=grid {
        let fk = f(k as f64 * h);
        if fk < best_f {
            best_f = fk;
            best_k = k;
        }
    }
    let mut candidates = vec![0.0];
    if best_k > 0 {
        let mut lo = (best_k - 1) as f64 * h;
        let mut hi = ((best_k + 1) as f64 * h).min(a);
        // The derivative crosses from negative to positive at an interior
        // local minimum. Tighten the bracket until that holds.
        if lo == 0.0 {
            lo = h * 1e-6;
        }
        if df(lo) <= 0.0 && df(hi) >= 0.0 {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if df(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            candidates.push(0.5 * (lo + hi));
        } else {
            candidates.push(golden_section(&f, lo, hi));
            candidates.push(best_k as f64 * h);
        }
    }
    let u = candidates
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap();
    u * t.signum()
}

fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let x1 = hi - r * (hi - lo);
        let x2 = lo + r * (hi - lo);
        if f(x1) < f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizer of `(u − t)² + λ|u|^{1/2}`. This is the normalization in which
/// the closed-form half-thresholding function with `λ/8` inside the arccos is
/// exact.
pub fn half_prox_unit_weight(lambda: f64, t: f64, grid: usize) -> f64 {
    // (u − t)² + λ√u  ⇔  ½(u − t)² + (λ/2)√u
    let w = lambda / 2.0;
    prox_1d(t, grid, |u| w * u.sqrt(), |u| 0.5 * w / u.sqrt())
}

/// Minimizer of `½(u − t)² + λ(γ|u|^{1/2} + εu²)`.
pub fn hybrid_half_prox(lambda: f64, gamma: f64, epsilon: f64, t: f64, grid: usize) -> f64 {
    let a = lambda * gamma;
    let b = lambda * epsilon;
    prox_1d(
        t,
        grid,
        |u| a * u.sqrt() + b * u * u,
        |u| 0.5 * a / u.sqrt() + 2.0 * b * u,
    )
}

/// Minimizer of `½(u − t)² + λ(γ|u| + εu²)`.
pub fn hybrid_soft_prox(lambda: f64, gamma: f64, epsilon: f64, t: f64, grid: usize) -> f64 {
    let a = lambda * gamma;
    let b = lambda * epsilon;
    prox_1d(t, grid, |u| a * u + b * u * u, |u| a + 2.0 * b * u)
}

/// Minimizer of `½(u − t)² + λ|u|`.
pub fn soft_prox(lambda: f64, t: f64, grid: usize) -> f64 {
    prox_1d(t, grid, |u| lambda * u, |_| lambda)
}

/// Objective `½‖Hβ − t‖² + λ‖β‖₁` for a single output column.
pub fn lasso_objective(h: &Mat, t: &[f64], lambda: f64, beta: &[f64]) -> f64 {
    let r: f64 = h
        .iter()
        .zip(t)
        .map(|(row, ti)| {
            let p: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            (p - ti) * (p - ti)
        })
        .sum();
    0.5 * r + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Cyclic coordinate descent for the single-output lasso.
pub fn lasso_coordinate_descent(h: &Mat, t: &[f64], lambda: f64, sweeps: usize) -> Vec<f64> {
    let n = h.len();
    let p = h[0].len();
    let mut beta = vec![0.0; p];
    let mut resid: Vec<f64> = t.to_vec();
    let col_sq: Vec<f64> = (0..p).map(|j| (0..n).map(|i| h[i][j] * h[i][j]).sum()).collect();
    for _ in 0..sweeps {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let rho: f64 = (0..n).map(|i| h[i][j] * resid[i]).sum::<f64>() + col_sq[j] * beta[j];
            let new = rho.signum() * (rho.abs() - lambda).max(0.0) / col_sq[j];
            let d = new - beta[j];
            if d != 0.0 {
                for i in 0..n {
                    resid[i] -= h[i][j] * d;
                }
                beta[j] = new;
            }
            max_change = max_change.max(d.abs());
        }
        if max_change < 1e-15 {
            break;
        }
    }
    beta
}

/// Objective `½‖Hβ − T‖² + λ(γΣ|βᵢ|^{1/2} + εΣβᵢ²)` for a single column.
pub fn hybrid_half_objective(h: &Mat, t: &[f64], beta: &[f64], lambda: f64, gamma: f64, epsilon: f64) -> f64 {
    let r: f64 = h
        .iter()
        .zip(t)
        .map(|(row, ti)| {
            let p: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            (p - ti) * (p - ti)
        })
        .sum();
    let half: f64 = beta.iter().map(|b| b.abs().sqrt()).sum();
    let sq: f64 = beta.iter().map(|b| b * b).sum();
    0.5 * r + lambda * (gamma * half + epsilon * sq)
}

/// Best hybrid-half objective over supports of size at most `max_support`.
///
/// For each candidate support `S` (all of them when there are few enough,
/// otherwise `samples` draws from a simple LCG), solves the ridge system
/// `(H_Sᵀ H_S + 2λεI) β_S = H_Sᵀ t` exactly and evaluates the full nonconvex
/// objective at the result. Returns the smallest value found.
pub fn restricted_support_search(
    h: &Mat,
    t: &[f64],
    lambda: f64,
    gamma: f64,
    epsilon: f64,
    max_support: usize,
    samples: usize,
    seed: u64,
) -> f64 {
    let p = h[0].len();
    let mut best = hybrid_half_objective(h, t, &vec![0.0; p], lambda, gamma, epsilon);
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 33) as usize
    };
    for _ in 0..samples {
        let k = 1 + next() % max_support;
        let mut support: Vec<usize> = Vec::with_capacity(k);
        while support.len() < k {
            let j = next() % p;
            if !support.contains(&j) {
                support.push(j);
            }
        }
        support.sort_unstable();
        let hs: Mat = h
            .iter()
            .map(|row| support.iter().map(|&j| row[j]).collect())
            .collect();
        let hst = transpose(&hs);
        let mut a = matmul(&hst, &hs);
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 2.0 * lambda * epsilon;
        }
        let tcol: Mat = t.iter().map(|&v| vec![v]).collect();
        let b = matmul(&hst, &tcol);
        let xs = gauss_solve(&a, &b);
        let mut beta = vec![0.0; p];
        for (idx, &j) in support.iter().enumerate() {
            beta[j] = xs[idx][0];
        }
        let f = hybrid_half_objective(h, t, &beta, lambda, gamma, epsilon);
        if f < best {
            best = f;
        }
    }
    best
}

/// Mean and sample standard deviation, two-pass.
pub fn mean_std_two_pass(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
