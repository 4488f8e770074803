//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use raman_tda::classify::dual_objective;
use raman_tda::{Label, LabeledMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - tail) / a[i][i];
    }
    Some(x)
}

/// Exact maximum of the soft-margin dual by enumerating which variables sit
/// at 0, at `c`, or strictly inside the box, solving the KKT system of the
/// free ones, and keeping the best feasible candidate. Exponential in `n`;
/// meant for a handful of points.
pub fn exact_dual_optimum(kernel: &[f64], y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        // state per variable: 0 → at zero, 1 → at c, 2 → free
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let mut alpha: Vec<f64> = state
            .iter()
            .map(|&s| if s == 1 { c } else { 0.0 })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if !free.is_empty() {
            // [Q_FF  y_F] [α_F]   [1 - Q_FB α_B]
            // [y_Fᵀ  0  ] [ ν ] = [  -y_Bᵀ α_B ]
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = q(i, j);
                }
                a[r][m] = y[i];
                a[m][r] = y[i];
                b[r] = 1.0
                    - (0..n)
                        .filter(|j| state[*j] == 1)
                        .map(|j| q(i, j) * c)
                        .sum::<f64>();
            }
            b[m] = -(0..n)
                .filter(|j| state[*j] == 1)
                .map(|j| y[j] * c)
                .sum::<f64>();
            let Some(x) = solve_dense(a, b) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = x[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-12..=c + 1e-12).contains(&a))
            && y.iter().zip(&alpha).map(|(y, a)| y * a).sum::<f64>().abs() < 1e-9;
        if feasible {
            best = best.max(dual_objective(kernel, y, &alpha));
        }
    }
    best
}

/// Minimizes `‖Xw + b - y‖² + α‖w‖²` by gradient descent with a fixed step
/// below `1/L`. Returns `(w, b)`.
pub fn ridge_by_gradient_descent(rows: &[Vec<f64>], y: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let n = rows.len();
    let d = rows[0].len();
    // Lipschitz bound from the Frobenius norm of [X 1]
    let frob: f64 = rows.iter().flatten().map(|v| v * v).sum::<f64>() + n as f64;
    let step = 1.0 / (2.0 * (frob + alpha));
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for _ in 0..2_000_000 {
        let residual: Vec<f64> = rows
            .iter()
            .zip(y)
            .map(|(x, t)| x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b - t)
            .collect();
        let mut gw: Vec<f64> = w.iter().map(|wj| 2.0 * alpha * wj).collect();
        for (x, r) in rows.iter().zip(&residual) {
            for (g, xj) in gw.iter_mut().zip(x) {
                *g += 2.0 * r * xj;
            }
        }
        let gb: f64 = 2.0 * residual.iter().sum::<f64>();
        let norm = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if norm.sqrt() < 1e-12 {
            break;
        }
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= step * g;
        }
        b -= step * gb;
    }
    (w, b)
}

/// Random labeled problem with both classes present.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, d: usize) -> LabeledMatrix {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<Label> = (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Label::Ad
                } else {
                    Label::NoAd
                }
            })
            .collect();
        if let Ok(m) = LabeledMatrix::new(rows, labels) {
            if m.labels().contains(&Label::Ad) && m.labels().contains(&Label::NoAd) {
                return m;
            }
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Raw → BettiCurve(n) → classifier` with default hyperparameters.
pub fn raw_betti(
    kind: raman_tda::ClassifierKind,
    n: usize,
    seed: u64,
) -> raman_tda::PipelineConfig {
    raman_tda::PipelineConfig {
        transform: raman_tda::TransformKind::Raw,
        vectorization: raman_tda::VectorizationConfig::BettiCurve { resolution: n },
        classifier: raman_tda::ClassifierConfig::default_for(kind),
        seed,
        welch: raman_tda::WelchConfig::default(),
        drop_zero_persistence: false,
    }
}

/// For every fold, replaces the held-out spectra with unrelated signals and
/// checks that the fitted range, standardizer and model are bit-identical.
/// Returns the ids of folds where anything changed.
pub fn leaking_folds(
    dataset: &raman_tda::Dataset,
    config: &raman_tda::PipelineConfig,
) -> Vec<String> {
    use raman_tda::evaluate::{compute_diagrams, fit_fold, lopo_splits};
    let folds = lopo_splits(dataset).unwrap();
    let labels = dataset.labels();
    let diagrams = |d: &raman_tda::Dataset| {
        compute_diagrams(
            d,
            config.transform,
            &config.welch,
            config.drop_zero_persistence,
        )
        .unwrap()
    };
    let clean = diagrams(dataset);
    let mut rng = rng(0xfeed);
    let mut leaks = Vec::new();
    for fold in &folds {
        let replacements: Vec<(usize, raman_tda::Spectrum)> = fold
            .test
            .iter()
            .map(|&i| {
                let noise: Vec<f64> = (0..dataset.wavenumbers().len())
                    .map(|_| rng.random_range(-1e4..1e4))
                    .collect();
                (i, raman_tda::Spectrum::new(noise).unwrap())
            })
            .collect();
        let perturbed = dataset.with_spectra(&replacements);
        let dirty = diagrams(&perturbed);
        let a = fit_fold(&clean, &labels, &fold.train, config, &fold.held_out_patient).unwrap();
        let b = fit_fold(&dirty, &labels, &fold.train, config, &fold.held_out_patient).unwrap();
        let as_json = |m| serde_json::to_string(m).unwrap();
        if a != b || as_json(&a) != as_json(&b) {
            leaks.push(fold.held_out_patient.clone());
        }
    }
    leaks
}

/// `|X_k|` for `k = 0..=N/2` by direct O(N²) summation.
pub fn naive_dft_magnitude(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in s.iter().enumerate() {
                // reduce the phase index first to keep the angle small
                let angle = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                re += v * angle.cos();
                im += v * angle.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// Composite Simpson rule over `[a, b]` with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Mass of a weight-1 isotropic Gaussian at `(bx, by)` over the square
/// `[lo, hi]²`, by nested Simpson quadrature.
pub fn gaussian_mass_by_quadrature(bx: f64, by: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let density = |u: f64, v: f64| pdf((u - bx) / sigma) * pdf((v - by) / sigma) / (sigma * sigma);
    simpson(|u| simpson(|v| density(u, v), lo, hi, 2000), lo, hi, 2000)
}
