//! File outputs: run results and per-sample feature dumps.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::Dataset;
use crate::evaluate::{compute_diagrams, EvaluateError, GridReport};
use crate::persistence::PersistenceDiagram;
use crate::transforms::{TransformKind, WelchConfig};
use crate::vectorize::{
    fit_range, sample_points, vectorize, FeatureRange, FeatureVector, VectorizationConfig,
    VectorizeError,
};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const RANKING_CSV: &str = "ranking.csv";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unknown sample `{0}` (use patient_id/session_id)")]
    UnknownSample(String),
    #[error("unknown or invalid feature configuration: {0}")]
    UnknownConfig(String),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, ExportError> {
    std::fs::write(&path, contents).map_err(|source| ExportError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `results.jsonl`, `report.csv`, `ranking.csv` and `report.txt`.
pub fn write_run_outputs(report: &GridReport, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    std::fs::create_dir_all(dir).map_err(|source| ExportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(vec![
        write_file(dir.join(RESULTS_FILE), &report.to_jsonl())?,
        write_file(dir.join(REPORT_CSV), &report.summary_csv())?,
        write_file(dir.join(RANKING_CSV), &report.ranking_csv())?,
        write_file(dir.join(REPORT_TXT), &report.render_table())?,
    ])
}

/// CSV rendering of a feature vector for inspection.
///
/// Persistence images become an `n × n` matrix without header (rows along
/// birth). Curves get a `t` column followed by one column per layer.
pub fn feature_csv(vector: &FeatureVector, range: &FeatureRange) -> String {
    let mut out = String::new();
    let join = |values: &[f64]| {
        values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    match (vector.config, range) {
        (VectorizationConfig::PersistenceImage { resolution, .. }, _) => {
            for row in vector.values.chunks(resolution) {
                writeln!(out, "{}", join(row)).unwrap();
            }
        }
        (config, FeatureRange::Filtration { t_min, t_max }) => {
            let n = config.resolution();
            let layers = vector.values.len() / n;
            let header: Vec<String> = match config {
                VectorizationConfig::Landscape { .. } => {
                    (1..=layers).map(|k| format!("lambda_{k}")).collect()
                }
                _ => vec!["value".to_string()],
            };
            writeln!(out, "t,{}", header.join(",")).unwrap();
            for (i, t) in sample_points(*t_min, *t_max, n).into_iter().enumerate() {
                let row: Vec<f64> = (0..layers).map(|k| vector.values[k * n + i]).collect();
                writeln!(out, "{t},{}", join(&row)).unwrap();
            }
        }
        (_, FeatureRange::Image { .. }) => unreachable!("curve vectors use filtration ranges"),
    }
    out
}

/// Files written by [`export_features`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExportedFeatures {
    pub diagram_csv: PathBuf,
    pub features_csv: PathBuf,
    pub diagram: PersistenceDiagram,
    pub features: FeatureVector,
}

/// Exports one sample's diagram and feature vector. The feature range is
/// fitted on the diagrams of every sample in the dataset.
pub fn export_features(
    dataset: &Dataset,
    sample: &str,
    transform: TransformKind,
    welch: &WelchConfig,
    config: &VectorizationConfig,
    drop_zero_persistence: bool,
    dir: &Path,
) -> Result<ExportedFeatures, ExportError> {
    config
        .validate()
        .map_err(|e| ExportError::UnknownConfig(e.to_string()))?;
    let target = dataset
        .find_sample(sample)
        .ok_or_else(|| ExportError::UnknownSample(sample.to_string()))?;
    let index = dataset
        .samples()
        .iter()
        .position(|s| std::ptr::eq(s, target))
        .expect("sample belongs to dataset");
    let diagrams = compute_diagrams(dataset, transform, welch, drop_zero_persistence)?;
    let range = match fit_range(&diagrams, config.method()) {
        Ok(r) => r,
        // every diagram empty: fall back to a unit window
        Err(VectorizeError::EmptyInput) => match config {
            VectorizationConfig::PersistenceImage { .. } => {
                FeatureRange::image((0.0, 1.0), (0.0, 1.0), 0.0)?
            }
            _ => FeatureRange::filtration(0.0, 1.0)?,
        },
        Err(e) => return Err(e.into()),
    };
    let diagram = diagrams[index].clone();
    let features = vectorize(&diagram, config, &range)?;

    std::fs::create_dir_all(dir).map_err(|source| ExportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let stem = format!(
        "{}_{}_{}",
        target.patient_id.replace(['/', '\\'], "-"),
        target.session_id.replace(['/', '\\'], "-"),
        transform
    );
    let diagram_csv = write_file(dir.join(format!("{stem}_diagram.csv")), &diagram.to_csv())?;
    let features_csv = write_file(
        dir.join(format!("{stem}_{}.csv", config.method())),
        &feature_csv(&features, &range),
    )?;
    Ok(ExportedFeatures {
        diagram_csv,
        features_csv,
        diagram,
        features,
    })
}
