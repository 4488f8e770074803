//! Soft-margin support vector classifier trained by SMO.
//!
//! The dual `max Σα - ½ αᵀQα` subject to `0 ≤ α ≤ C`, `yᵀα = 0` with
//! `Q_ij = y_i y_j K(x_i, x_j)` is solved by pairwise updates on the
//! maximal violating pair chosen with second-order information.

use serde::{Deserialize, Serialize};

use super::linalg::dot;
use super::{ClassifyError, LabeledMatrix, TrainedModel};

/// Stopping tolerance on the maximal KKT violation.
pub const KKT_TOLERANCE: f64 = 1e-3;
/// Cap on pair updates before giving up.
pub const MAX_PAIR_UPDATES: usize = 1_000_000;
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gamma {
    /// `1 / (d · mean per-feature variance)`, computed on the training rows.
    Scale,
    Value(f64),
}

/// Kernel as configured; `Gamma::Scale` is resolved at training time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Rbf {
        #[serde(with = "gamma_serde")]
        gamma: Gamma,
    },
    Linear,
}

mod gamma_serde {
    use super::Gamma;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(g: &Gamma, s: S) -> Result<S::Ok, S::Error> {
        match g {
            Gamma::Scale => s.serialize_str("scale"),
            Gamma::Value(v) => s.serialize_f64(*v),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Gamma, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Number(v) if v.is_finite() && v > 0.0 => Ok(Gamma::Value(v)),
            Raw::Number(v) => Err(serde::de::Error::custom(format!(
                "gamma must be positive, got {v}"
            ))),
            Raw::Text(t) if t == "scale" => Ok(Gamma::Scale),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "gamma must be a number or \"scale\", got \"{t}\""
            ))),
        }
    }
}

/// Resolved kernel function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// Row-major Gram matrix of `rows`.
    pub fn gram(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let n = rows.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(&rows[i], &rows[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

/// Gamma for the `scale` heuristic: `1 / (d · mean per-feature variance)`,
/// falling back to 1 when every feature is constant.
pub fn resolve_gamma(gamma: Gamma, rows: &[Vec<f64>]) -> f64 {
    match gamma {
        Gamma::Value(v) => v,
        Gamma::Scale => {
            let n = rows.len() as f64;
            let d = rows.first().map_or(0, Vec::len);
            if d == 0 {
                return 1.0;
            }
            let mut total_var = 0.0;
            for j in 0..d {
                let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                total_var += rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            }
            let mean_var = total_var / d as f64;
            if mean_var > 0.0 {
                1.0 / (d as f64 * mean_var)
            } else {
                1.0
            }
        }
    }
}

/// Result of the SMO solver.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Offset `b` of the decision function `Σ α_i y_i K(x_i, x) + b`.
    pub intercept: f64,
    pub updates: usize,
    /// Maximal KKT violation `m(α) - M(α)` at termination.
    pub kkt_gap: f64,
    /// Dual objective before the first update and after each update.
    pub objective_trace: Vec<f64>,
}

impl DualSolution {
    pub fn objective(&self) -> f64 {
        *self
            .objective_trace
            .last()
            .expect("trace holds the initial value")
    }
}

/// Dual objective `Σα - ½ αᵀQα` for a Gram matrix `kernel` and labels `y`.
pub fn dual_objective(kernel: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i * n + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Solves the soft-margin dual for a precomputed Gram matrix and `±1` labels.
pub fn solve_dual(
    kernel: &[f64],
    y: &[f64],
    c: f64,
    tol: f64,
    max_updates: usize,
) -> Result<DualSolution, ClassifyError> {
    let n = y.len();
    assert_eq!(kernel.len(), n * n);
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα - eᵀα
    let mut grad = vec![-1.0; n];
    let objective = |alpha: &[f64], grad: &[f64]| -> f64 {
        -0.5 * alpha
            .iter()
            .zip(grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
    };
    let mut trace = vec![0.0];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut updates = 0;
    loop {
        let mut i = None;
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = Some(t);
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
            }
        }
        let gap = g_max - g_min;
        let Some(i) = i else {
            return Ok(finish(alpha, grad, y, c, updates, 0.0, trace));
        };
        if gap < tol {
            return Ok(finish(alpha, grad, y, c, updates, gap, trace));
        }
        if updates >= max_updates {
            return Err(ClassifyError::NoConvergence(max_updates));
        }

        let mut j = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let b = g_max + y[t] * grad[t];
            if b > 0.0 {
                let mut a = kernel[i * n + i] + kernel[t * n + t] - 2.0 * kernel[i * n + t];
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -b * b / a;
                if score < best {
                    best = score;
                    j = Some(t);
                }
            }
        }
        let Some(j) = j else {
            return Ok(finish(alpha, grad, y, c, updates, gap, trace));
        };

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = kernel[i * n + i] + kernel[j * n + j] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kernel[i * n + i] + kernel[j * n + j] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
        updates += 1;
        trace.push(objective(&alpha, &grad));
    }
}

fn finish(
    alpha: Vec<f64>,
    grad: Vec<f64>,
    y: &[f64],
    c: f64,
    updates: usize,
    kkt_gap: f64,
    objective_trace: Vec<f64>,
) -> DualSolution {
    // offset from free vectors, or the midpoint of the feasible interval
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (upper + lower)
    };
    DualSolution {
        alpha,
        intercept: -rho,
        updates,
        kkt_gap,
        objective_trace,
    }
}

pub fn train_svc(
    data: &LabeledMatrix,
    c: f64,
    kernel: KernelSpec,
) -> Result<TrainedModel, ClassifyError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(ClassifyError::InvalidParameter(format!("C = {c}")));
    }
    data.require_both_classes()?;
    let kernel = match kernel {
        KernelSpec::Linear => Kernel::Linear,
        KernelSpec::Rbf { gamma } => Kernel::Rbf {
            gamma: resolve_gamma(gamma, data.rows()),
        },
    };
    let y = data.signs();
    let gram = kernel.gram(data.rows());
    let solution = solve_dual(&gram, &y, c, KKT_TOLERANCE, MAX_PAIR_UPDATES)?;

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for ((row, a), t) in data.rows().iter().zip(&solution.alpha).zip(&y) {
        if *a > 0.0 {
            support_vectors.push(row.clone());
            dual_coef.push(a * t);
        }
    }
    Ok(TrainedModel::Svc {
        kernel,
        width: data.width(),
        support_vectors,
        dual_coef,
        intercept: solution.intercept,
    })
}
