//! Leave-one-patient-out evaluation, grid search and summary reporting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifierConfig, ClassifyError, LabeledMatrix, Standardizer, TrainedModel};
use crate::dataset::{Dataset, Label};
use crate::persistence::{lower_star_h0, PersistenceDiagram, PersistenceError};
use crate::transforms::{self, TransformError, TransformKind, WelchConfig};
use crate::vectorize::{fit_range, vectorize, FeatureRange, VectorizationConfig, VectorizeError};

/// Printed under every summary table.
pub const SELECTION_NOTE: &str = "Best-of-grid accuracies are selected on the same \
leave-one-patient-out predictions they report; they are not nested cross-validation estimates.";

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("leave-one-patient-out needs at least 2 patients, found {0}")]
    TooFewPatients(usize),
    #[error("training side is single-class when holding out patient(s) {}", .patients.join(", "))]
    DegenerateFold { patients: Vec<String> },
    #[error("configuration grid is empty")]
    EmptyGrid,
    #[error("transform failed on sample {sample}: {source}")]
    Transform {
        sample: String,
        #[source]
        source: TransformError,
    },
    #[error("persistence failed on sample {sample}: {source}")]
    Persistence {
        sample: String,
        #[source]
        source: PersistenceError,
    },
    #[error("vectorization failed in fold {fold}: {source}")]
    Vectorize {
        fold: String,
        #[source]
        source: VectorizeError,
    },
    #[error("classifier failed in fold {fold}: {source}")]
    Classify {
        fold: String,
        #[source]
        source: ClassifyError,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot start worker pool: {0}")]
    WorkerPool(String),
}

/// One leave-one-patient-out split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub held_out_patient: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per patient, in sorted patient order. Fails if any fold's
/// training side lacks a class, naming every such patient.
pub fn lopo_splits(dataset: &Dataset) -> Result<Vec<Fold>, EvaluateError> {
    let patients = dataset.patients();
    if patients.len() < 2 {
        return Err(EvaluateError::TooFewPatients(patients.len()));
    }
    let samples = dataset.samples();
    let mut folds = Vec::with_capacity(patients.len());
    let mut degenerate = Vec::new();
    for patient in patients {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..samples.len()).partition(|&i| samples[i].patient_id == patient);
        let ad = train
            .iter()
            .filter(|&&i| samples[i].label == Label::Ad)
            .count();
        if ad == 0 || ad == train.len() {
            degenerate.push(patient.to_string());
        }
        folds.push(Fold {
            held_out_patient: patient.to_string(),
            train,
            test,
        });
    }
    if degenerate.is_empty() {
        Ok(folds)
    } else {
        Err(EvaluateError::DegenerateFold {
            patients: degenerate,
        })
    }
}

/// Accuracy of always predicting the most frequent label.
pub fn majority_baseline(labels: &[Label]) -> Option<f64> {
    if labels.is_empty() {
        return None;
    }
    let ad = labels.iter().filter(|&&l| l == Label::Ad).count();
    Some(ad.max(labels.len() - ad) as f64 / labels.len() as f64)
}

/// Everything needed to evaluate one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub transform: TransformKind,
    pub vectorization: VectorizationConfig,
    pub classifier: ClassifierConfig,
    pub seed: u64,
    #[serde(default)]
    pub welch: WelchConfig,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub drop_zero_persistence: bool,
}

impl PipelineConfig {
    /// `"<vectorization tag> and <classifier>"`, the summary-table label.
    pub fn tag(&self) -> String {
        format!(
            "{} and {}",
            self.vectorization.tag(),
            self.classifier.kind().name()
        )
    }

    pub fn validate(&self) -> Result<(), EvaluateError> {
        self.vectorization
            .validate()
            .map_err(|e| EvaluateError::InvalidConfig(e.to_string()))?;
        self.welch
            .validate()
            .map_err(|e| EvaluateError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

/// Transforms every sample and extracts its diagram.
pub fn compute_diagrams(
    dataset: &Dataset,
    transform: TransformKind,
    welch: &WelchConfig,
    drop_zero_persistence: bool,
) -> Result<Vec<PersistenceDiagram>, EvaluateError> {
    dataset
        .samples()
        .iter()
        .map(|s| {
            let signal = transforms::apply(transform, &s.spectrum, welch).map_err(|source| {
                EvaluateError::Transform {
                    sample: s.id(),
                    source,
                }
            })?;
            let diagram =
                lower_star_h0(signal.values()).map_err(|source| EvaluateError::Persistence {
                    sample: s.id(),
                    source,
                })?;
            Ok(if drop_zero_persistence {
                diagram.without_zero_persistence()
            } else {
                diagram
            })
        })
        .collect()
}

/// Artifacts fitted on one fold's training side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldModel {
    pub range: FeatureRange,
    pub standardizer: Option<Standardizer>,
    pub model: TrainedModel,
}

impl FoldModel {
    /// Feature rows for `indices`, standardized when the classifier needs it.
    pub fn features(
        &self,
        diagrams: &[PersistenceDiagram],
        indices: &[usize],
        config: &PipelineConfig,
        fold: &str,
    ) -> Result<Vec<Vec<f64>>, EvaluateError> {
        let rows = embed(diagrams, indices, &config.vectorization, &self.range, fold)?;
        Ok(match &self.standardizer {
            Some(s) => s.apply(&rows),
            None => rows,
        })
    }

    pub fn predict(
        &self,
        diagrams: &[PersistenceDiagram],
        indices: &[usize],
        config: &PipelineConfig,
        fold: &str,
    ) -> Result<Vec<Label>, EvaluateError> {
        let rows = self.features(diagrams, indices, config, fold)?;
        self.model
            .predict(&rows)
            .map_err(|source| EvaluateError::Classify {
                fold: fold.to_string(),
                source,
            })
    }
}

fn embed(
    diagrams: &[PersistenceDiagram],
    indices: &[usize],
    config: &VectorizationConfig,
    range: &FeatureRange,
    fold: &str,
) -> Result<Vec<Vec<f64>>, EvaluateError> {
    indices
        .iter()
        .map(|&i| {
            vectorize(&diagrams[i], config, range)
                .map(|v| v.values)
                .map_err(|source| EvaluateError::Vectorize {
                    fold: fold.to_string(),
                    source,
                })
        })
        .collect()
}

/// Fits range, standardizer and classifier from the training indices only.
pub fn fit_fold(
    diagrams: &[PersistenceDiagram],
    labels: &[Label],
    train: &[usize],
    config: &PipelineConfig,
    fold: &str,
) -> Result<FoldModel, EvaluateError> {
    let training: Vec<PersistenceDiagram> = train.iter().map(|&i| diagrams[i].clone()).collect();
    let range = fit_range(&training, config.vectorization.method()).map_err(|source| {
        EvaluateError::Vectorize {
            fold: fold.to_string(),
            source,
        }
    })?;
    let rows = embed(diagrams, train, &config.vectorization, &range, fold)?;
    let (standardizer, rows) = if config.classifier.kind().standardizes() {
        let s = Standardizer::fit(&rows);
        let scaled = s.apply(&rows);
        (Some(s), scaled)
    } else {
        (None, rows)
    };
    let classify_err = |source| EvaluateError::Classify {
        fold: fold.to_string(),
        source,
    };
    let data = LabeledMatrix::new(rows, train.iter().map(|&i| labels[i]).collect())
        .map_err(classify_err)?;
    let model = config
        .classifier
        .train(&data, config.seed)
        .map_err(classify_err)?;
    Ok(FoldModel {
        range,
        standardizer,
        model,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample: String,
    pub truth: Label,
    pub predicted: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub held_out_patient: String,
    pub predictions: Vec<Prediction>,
}

impl FoldResult {
    pub fn correct(&self) -> usize {
        self.predictions
            .iter()
            .filter(|p| p.truth == p.predicted)
            .count()
    }
}

/// Pooled leave-one-patient-out outcome of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: PipelineConfig,
    /// Correct held-out predictions over all samples, pooled across folds.
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub majority_baseline: f64,
    pub folds: Vec<FoldResult>,
}

/// Evaluates `config` on precomputed diagrams and folds.
pub fn evaluate_with_diagrams(
    dataset: &Dataset,
    folds: &[Fold],
    diagrams: &[PersistenceDiagram],
    config: &PipelineConfig,
) -> Result<ExperimentResult, EvaluateError> {
    config.validate()?;
    let labels = dataset.labels();
    let samples = dataset.samples();
    let mut fold_results = Vec::with_capacity(folds.len());
    for fold in folds {
        let fitted = fit_fold(
            diagrams,
            &labels,
            &fold.train,
            config,
            &fold.held_out_patient,
        )?;
        let predicted = fitted.predict(diagrams, &fold.test, config, &fold.held_out_patient)?;
        fold_results.push(FoldResult {
            held_out_patient: fold.held_out_patient.clone(),
            predictions: fold
                .test
                .iter()
                .zip(predicted)
                .map(|(&i, predicted)| Prediction {
                    sample: samples[i].id(),
                    truth: labels[i],
                    predicted,
                })
                .collect(),
        });
    }
    let correct = fold_results.iter().map(FoldResult::correct).sum();
    let total: usize = fold_results.iter().map(|f| f.predictions.len()).sum();
    Ok(ExperimentResult {
        config: config.clone(),
        accuracy: correct as f64 / total as f64,
        correct,
        total,
        majority_baseline: majority_baseline(&labels).unwrap_or(0.0),
        folds: fold_results,
    })
}

/// Full pipeline for one configuration.
pub fn run_config(
    dataset: &Dataset,
    config: &PipelineConfig,
) -> Result<ExperimentResult, EvaluateError> {
    config.validate()?;
    let folds = lopo_splits(dataset)?;
    let diagrams = compute_diagrams(
        dataset,
        config.transform,
        &config.welch,
        config.drop_zero_persistence,
    )?;
    evaluate_with_diagrams(dataset, &folds, &diagrams, config)
}

/// A configuration that could not be evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigFailure {
    pub config: PipelineConfig,
    pub error: String,
}

/// Outcome of one grid point; serialized as one JSON line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigOutcome {
    Ok(ExperimentResult),
    Failed(ConfigFailure),
}

impl ConfigOutcome {
    pub fn config(&self) -> &PipelineConfig {
        match self {
            ConfigOutcome::Ok(r) => &r.config,
            ConfigOutcome::Failed(f) => &f.config,
        }
    }

    pub fn accuracy(&self) -> Option<f64> {
        match self {
            ConfigOutcome::Ok(r) => Some(r.accuracy),
            ConfigOutcome::Failed(_) => None,
        }
    }
}

/// Best configuration for one transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub transform: TransformKind,
    pub accuracy: Option<f64>,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// In grid order.
    pub outcomes: Vec<ConfigOutcome>,
    pub majority_baseline: f64,
    pub samples: usize,
    pub patients: usize,
}

type DiagramKey = (TransformKind, String, bool);

fn diagram_key(config: &PipelineConfig) -> DiagramKey {
    let welch = if config.transform == TransformKind::Welch {
        serde_json::to_string(&config.welch).expect("welch config serializes")
    } else {
        String::new()
    };
    (config.transform, welch, config.drop_zero_persistence)
}

/// Evaluates every configuration. Per-configuration failures are recorded
/// and the search continues; fold construction failures abort.
///
/// `workers` caps the thread count (`None` uses rayon's default). The
/// result does not depend on it.
pub fn grid_search(
    dataset: &Dataset,
    grid: &[PipelineConfig],
    workers: Option<usize>,
) -> Result<GridReport, EvaluateError> {
    if grid.is_empty() {
        return Err(EvaluateError::EmptyGrid);
    }
    let folds = lopo_splits(dataset)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| EvaluateError::WorkerPool(e.to_string()))?;

    let outcomes = pool.install(|| {
        let mut keys: BTreeMap<DiagramKey, &PipelineConfig> = BTreeMap::new();
        for config in grid {
            keys.entry(diagram_key(config)).or_insert(config);
        }
        let keyed: Vec<(DiagramKey, &PipelineConfig)> = keys.into_iter().collect();
        let diagrams: BTreeMap<DiagramKey, Result<Vec<PersistenceDiagram>, String>> = keyed
            .into_par_iter()
            .map(|(key, config)| {
                let computed = compute_diagrams(
                    dataset,
                    config.transform,
                    &config.welch,
                    config.drop_zero_persistence,
                )
                .map_err(|e| e.to_string());
                (key, computed)
            })
            .collect();

        grid.par_iter()
            .map(|config| {
                let result = match &diagrams[&diagram_key(config)] {
                    Ok(d) => evaluate_with_diagrams(dataset, &folds, d, config)
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                };
                match result {
                    Ok(r) => ConfigOutcome::Ok(r),
                    Err(error) => {
                        log::warn!("configuration {} failed: {error}", config.tag());
                        ConfigOutcome::Failed(ConfigFailure {
                            config: config.clone(),
                            error,
                        })
                    }
                }
            })
            .collect::<Vec<_>>()
    });

    Ok(GridReport {
        outcomes,
        majority_baseline: majority_baseline(&dataset.labels()).unwrap_or(0.0),
        samples: dataset.len(),
        patients: dataset.patients().len(),
    })
}

impl GridReport {
    /// Per transform, in canonical transform order, the most accurate
    /// configuration; ties go to the earliest grid entry.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for transform in TransformKind::ALL {
            let candidates: Vec<&ConfigOutcome> = self
                .outcomes
                .iter()
                .filter(|o| o.config().transform == transform)
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let best = candidates
                .iter()
                .filter_map(|o| o.accuracy().map(|a| (a, o.config())))
                .fold(
                    None,
                    |best: Option<(f64, &PipelineConfig)>, (a, c)| match best {
                        Some((b, _)) if b >= a => best,
                        _ => Some((a, c)),
                    },
                );
            rows.push(match best {
                Some((accuracy, config)) => SummaryRow {
                    transform,
                    accuracy: Some(accuracy),
                    tag: config.tag(),
                },
                None => SummaryRow {
                    transform,
                    accuracy: None,
                    tag: "all configurations failed".to_string(),
                },
            });
        }
        rows
    }

    /// Outcomes sorted by decreasing accuracy, failures last, ties in grid order.
    pub fn ranked(&self) -> Vec<&ConfigOutcome> {
        let mut out: Vec<&ConfigOutcome> = self.outcomes.iter().collect();
        out.sort_by(|a, b| {
            let key = |o: &ConfigOutcome| o.accuracy().unwrap_or(f64::NEG_INFINITY);
            key(b).total_cmp(&key(a))
        });
        out
    }

    /// One JSON object per line, in grid order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for outcome in &self.outcomes {
            out.push_str(&serde_json::to_string(outcome).expect("results serialize"));
            out.push('\n');
        }
        out
    }

    /// Summary CSV with columns `Method,Accuracy,Vectorization and Classifier`.
    pub fn summary_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["Method", "Accuracy", "Vectorization and Classifier"])
            .expect("in-memory csv");
        for row in self.summary() {
            let accuracy = row
                .accuracy
                .map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"));
            writer
                .write_record([row.transform.report_name(), &accuracy, &row.tag])
                .expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    /// All configurations, best first.
    pub fn ranking_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "rank",
                "transform",
                "vectorization",
                "classifier",
                "accuracy",
            ])
            .expect("in-memory csv");
        for (rank, outcome) in self.ranked().into_iter().enumerate() {
            let config = outcome.config();
            let accuracy = outcome
                .accuracy()
                .map_or_else(|| "error".to_string(), |a| format!("{a:.6}"));
            writer
                .write_record([
                    (rank + 1).to_string(),
                    config.transform.to_string(),
                    config.vectorization.tag(),
                    config.classifier.kind().name().to_string(),
                    accuracy,
                ])
                .expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    /// Fixed-width summary table with a footer.
    pub fn render_table(&self) -> String {
        let rows = self.summary();
        let tag_width = rows
            .iter()
            .map(|r| r.tag.len())
            .chain(["Vectorization and Classifier".len()])
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let line = "-".repeat(20 + 3 + 8 + 3 + tag_width);
        writeln!(
            out,
            "{:<20} | {:>8} | Vectorization and Classifier",
            "Method", "Accuracy"
        )
        .unwrap();
        writeln!(out, "{line}").unwrap();
        for row in &rows {
            let accuracy = row
                .accuracy
                .map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"));
            writeln!(
                out,
                "{:<20} | {:>8} | {}",
                row.transform.report_name(),
                accuracy,
                row.tag
            )
            .unwrap();
        }
        writeln!(out, "{line}").unwrap();
        let failed = self
            .outcomes
            .iter()
            .filter(|o| o.accuracy().is_none())
            .count();
        writeln!(
            out,
            "{} configurations ({} failed), {} samples from {} patients, majority baseline {:.3}",
            self.outcomes.len(),
            failed,
            self.samples,
            self.patients,
            self.majority_baseline
        )
        .unwrap();
        writeln!(out, "{SELECTION_NOTE}").unwrap();
        out
    }
}
