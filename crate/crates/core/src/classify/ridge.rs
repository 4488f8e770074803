//! Ridge classifier: least squares on `±1` targets with an L2 penalty.

use super::linalg::{cholesky_solve, dot};
use super::{ClassifyError, LabeledMatrix, TrainedModel};

/// Solves `(XcᵀXc + αI) w = Xcᵀyc` on column-centered data; the intercept
/// is `ȳ - x̄·w` and is not penalized.
///
/// When there are more features than rows the equivalent dual system
/// `(XcXcᵀ + αI) a = yc`, `w = Xcᵀa` is solved instead.
pub fn train_ridge(data: &LabeledMatrix, alpha: f64) -> Result<TrainedModel, ClassifyError> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(ClassifyError::InvalidParameter(format!("alpha = {alpha}")));
    }
    data.require_both_classes()?;
    let n = data.len();
    let d = data.width();
    let y = data.signs();

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut x_mean = vec![0.0; d];
    for row in data.rows() {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= n as f64);
    let xc: Vec<Vec<f64>> = data
        .rows()
        .iter()
        .map(|row| row.iter().zip(&x_mean).map(|(v, m)| v - m).collect())
        .collect();
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let weights = if d <= n {
        let mut gram = vec![0.0; d * d];
        let mut rhs = vec![0.0; d];
        for (row, t) in xc.iter().zip(&yc) {
            for i in 0..d {
                rhs[i] += row[i] * t;
                for j in 0..=i {
                    gram[i * d + j] += row[i] * row[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                gram[j * d + i] = gram[i * d + j];
            }
            gram[i * d + i] += alpha;
        }
        cholesky_solve(&gram, &rhs, d)?
    } else {
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&xc[i], &xc[j]);
                kernel[i * n + j] = v;
                kernel[j * n + i] = v;
            }
            kernel[i * n + i] += alpha;
        }
        let dual = cholesky_solve(&kernel, &yc, n)?;
        let mut w = vec![0.0; d];
        for (row, a) in xc.iter().zip(&dual) {
            for (wj, v) in w.iter_mut().zip(row) {
                *wj += a * v;
            }
        }
        w
    };
    let intercept = y_mean - dot(&x_mean, &weights);
    Ok(TrainedModel::Ridge { weights, intercept })
}
