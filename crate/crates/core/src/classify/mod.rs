//! Binary classifiers with a shared train/predict contract.
//!
//! Labels are [`Label`] values; internally AD is `+1` and noAD is `-1`.
//! Every classifier breaks exact ties in favour of AD.

mod forest;
mod linalg;
mod ridge;
mod standardize;
mod svc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Label;

pub use forest::{train_forest, DecisionTree, Node};
pub use ridge::train_ridge;
pub use standardize::Standardizer;
pub use svc::{
    dual_objective, resolve_gamma, solve_dual, train_svc, DualSolution, Gamma, Kernel, KernelSpec,
    KKT_TOLERANCE, MAX_PAIR_UPDATES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("training data needs rows of both classes")]
    SingleClass,
    #[error("training data is empty")]
    Empty,
    #[error("expected rows of width {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} rows but {1} labels")]
    LabelCount(usize, usize),
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("SMO did not converge within {0} pair updates")]
    NoConvergence(usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidParameter(String),
}

/// Feature rows with one label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMatrix {
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
    width: usize,
}

impl LabeledMatrix {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self, ClassifyError> {
        if rows.len() != labels.len() {
            return Err(ClassifyError::LabelCount(rows.len(), labels.len()));
        }
        let width = rows.first().ok_or(ClassifyError::Empty)?.len();
        check_rows(&rows, width)?;
        Ok(LabeledMatrix {
            rows,
            labels,
            width,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `±1` targets.
    pub fn signs(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.sign()).collect()
    }

    fn require_both_classes(&self) -> Result<(), ClassifyError> {
        let ad = self.labels.iter().filter(|&&l| l == Label::Ad).count();
        if ad == 0 || ad == self.labels.len() {
            Err(ClassifyError::SingleClass)
        } else {
            Ok(())
        }
    }
}

fn check_rows(rows: &[Vec<f64>], width: usize) -> Result<(), ClassifyError> {
    for (r, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(ClassifyError::DimensionMismatch {
                expected: width,
                found: row.len(),
            });
        }
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFinite { row: r, col });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Ridge,
    Svc,
    Forest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Ridge,
        ClassifierKind::Svc,
        ClassifierKind::Forest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Ridge => "Ridge",
            ClassifierKind::Svc => "SVC",
            ClassifierKind::Forest => "RF",
        }
    }

    /// Ridge and SVC see standardized features; forests use raw ones.
    pub fn standardizes(self) -> bool {
        matches!(self, ClassifierKind::Ridge | ClassifierKind::Svc)
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ridge" => Ok(ClassifierKind::Ridge),
            "svc" | "svm" => Ok(ClassifierKind::Svc),
            "forest" | "rf" | "random_forest" => Ok(ClassifierKind::Forest),
            _ => Err(format!(
                "unknown classifier `{s}` (expected ridge, svc or forest)"
            )),
        }
    }
}

/// Classifier choice with hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierConfig {
    Ridge { alpha: f64 },
    Svc { c: f64, kernel: KernelSpec },
    Forest { trees: usize },
}

impl ClassifierConfig {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Ridge => ClassifierConfig::Ridge { alpha: 1.0 },
            ClassifierKind::Svc => ClassifierConfig::Svc {
                c: 1.0,
                kernel: KernelSpec::Rbf {
                    gamma: Gamma::Scale,
                },
            },
            ClassifierKind::Forest => ClassifierConfig::Forest { trees: 100 },
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierConfig::Ridge { .. } => ClassifierKind::Ridge,
            ClassifierConfig::Svc { .. } => ClassifierKind::Svc,
            ClassifierConfig::Forest { .. } => ClassifierKind::Forest,
        }
    }

    pub fn train(&self, data: &LabeledMatrix, seed: u64) -> Result<TrainedModel, ClassifyError> {
        match *self {
            ClassifierConfig::Ridge { alpha } => train_ridge(data, alpha),
            ClassifierConfig::Svc { c, kernel } => train_svc(data, c, kernel),
            ClassifierConfig::Forest { trees } => train_forest(data, trees, seed),
        }
    }
}

/// A fitted classifier. Serializes to JSON for inspection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Ridge {
        weights: Vec<f64>,
        intercept: f64,
    },
    Svc {
        kernel: Kernel,
        width: usize,
        support_vectors: Vec<Vec<f64>>,
        /// `α_i · y_i` for each support vector.
        dual_coef: Vec<f64>,
        intercept: f64,
    },
    Forest {
        width: usize,
        trees: Vec<DecisionTree>,
    },
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Ridge { .. } => ClassifierKind::Ridge,
            TrainedModel::Svc { .. } => ClassifierKind::Svc,
            TrainedModel::Forest { .. } => ClassifierKind::Forest,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            TrainedModel::Ridge { weights, .. } => weights.len(),
            TrainedModel::Svc { width, .. } => *width,
            TrainedModel::Forest { width, .. } => *width,
        }
    }

    /// Real-valued score whose sign is the prediction. For forests this is
    /// `(#AD votes - #noAD votes) / #trees`.
    pub fn decision_function(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ClassifyError> {
        check_rows(rows, self.width())?;
        Ok(match self {
            TrainedModel::Ridge { weights, intercept } => rows
                .iter()
                .map(|x| linalg::dot(x, weights) + intercept)
                .collect(),
            TrainedModel::Svc {
                kernel,
                support_vectors,
                dual_coef,
                intercept,
                ..
            } => rows
                .iter()
                .map(|x| {
                    support_vectors
                        .iter()
                        .zip(dual_coef)
                        .map(|(sv, a)| a * kernel.eval(sv, x))
                        .sum::<f64>()
                        + intercept
                })
                .collect(),
            TrainedModel::Forest { trees, .. } => rows
                .iter()
                .map(|x| {
                    let votes: f64 = trees.iter().map(|t| t.predict(x).sign()).sum();
                    votes / trees.len() as f64
                })
                .collect(),
        })
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<Label>, ClassifyError> {
        Ok(self
            .decision_function(rows)?
            .into_iter()
            .map(Label::from_decision)
            .collect())
    }
}
