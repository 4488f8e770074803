//! Ingestion of labeled Raman acquisitions and per-session averaging.
//!
//! A manifest lists one record per acquisition file. Records sharing a
//! `(patient_id, session_id)` key are averaged into a single [`Sample`],
//! which is the unit of classification downstream. All files must share a
//! bitwise-identical wavenumber axis; nothing is resampled.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectrum::Spectrum;

/// Minimum number of points accepted for an ingested spectrum.
pub const MIN_SPECTRUM_LEN: usize = 8;

/// Number of acquisitions collected per session in the reference protocol.
pub const EXPECTED_ACQUISITIONS: usize = 5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing spectrum file {path}: {source}")]
    MissingFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read manifest {path}: {source}")]
    ManifestIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    ManifestFormat {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed spectrum file {path}: {reason}")]
    SpectrumFormat { path: PathBuf, reason: String },
    #[error("wavenumber axis of {offending} differs from the axis of {reference}")]
    AxisMismatch {
        reference: String,
        offending: String,
    },
    #[error("non-finite value in {location}")]
    NonFiniteValue { location: String },
    #[error("wavenumbers of {id} are not strictly increasing at row {row}")]
    NonIncreasingAxis { id: String, row: usize },
    #[error("spectrum {id} has {len} points, at least {MIN_SPECTRUM_LEN} are required")]
    TooShort { id: String, len: usize },
    #[error("acquisition {id} is listed more than once")]
    DuplicateAcquisitionId { id: String },
    #[error("session {id} mixes {reason}")]
    HeterogeneousSession { id: String, reason: String },
    #[error("dataset contains no acquisitions")]
    EmptyDataset,
}

/// Diagnostic class of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "AD")]
    Ad,
    #[serde(rename = "noAD")]
    NoAd,
}

impl Label {
    /// `+1` for AD, `-1` for noAD.
    pub fn sign(self) -> f64 {
        match self {
            Label::Ad => 1.0,
            Label::NoAd => -1.0,
        }
    }

    /// Non-negative values map to AD, so an exact zero predicts AD.
    pub fn from_decision(value: f64) -> Self {
        if value >= 0.0 {
            Label::Ad
        } else {
            Label::NoAd
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Ad => Label::NoAd,
            Label::NoAd => Label::Ad,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Ad => f.write_str("AD"),
            Label::NoAd => f.write_str("noAD"),
        }
    }
}

/// One recorded spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Acquisition {
    pub patient_id: String,
    pub session_id: String,
    pub label: Label,
    pub wavenumbers: Vec<f64>,
    pub intensities: Vec<f64>,
}

impl Acquisition {
    /// Builds an acquisition after checking axis monotonicity, finiteness and length.
    pub fn new(
        patient_id: impl Into<String>,
        session_id: impl Into<String>,
        label: Label,
        wavenumbers: Vec<f64>,
        intensities: Vec<f64>,
    ) -> Result<Self, DatasetError> {
        let acq = Acquisition {
            patient_id: patient_id.into(),
            session_id: session_id.into(),
            label,
            wavenumbers,
            intensities,
        };
        acq.check(&acq.key_string())?;
        Ok(acq)
    }

    fn key_string(&self) -> String {
        format!("{}/{}", self.patient_id, self.session_id)
    }

    fn check(&self, id: &str) -> Result<(), DatasetError> {
        if self.wavenumbers.len() != self.intensities.len() {
            return Err(DatasetError::SpectrumFormat {
                path: PathBuf::from(id),
                reason: format!(
                    "{} wavenumbers but {} intensities",
                    self.wavenumbers.len(),
                    self.intensities.len()
                ),
            });
        }
        if self.wavenumbers.len() < MIN_SPECTRUM_LEN {
            return Err(DatasetError::TooShort {
                id: id.to_string(),
                len: self.wavenumbers.len(),
            });
        }
        if let Some(row) = self
            .wavenumbers
            .iter()
            .chain(&self.intensities)
            .position(|v| !v.is_finite())
        {
            return Err(DatasetError::NonFiniteValue {
                location: format!("{id}, row {}", row % self.wavenumbers.len()),
            });
        }
        if let Some(row) = self.wavenumbers.windows(2).position(|w| w[1] <= w[0]) {
            return Err(DatasetError::NonIncreasingAxis {
                id: id.to_string(),
                row: row + 1,
            });
        }
        Ok(())
    }
}

/// A session average: the unit of classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub patient_id: String,
    pub session_id: String,
    pub label: Label,
    pub spectrum: Spectrum,
    /// Number of acquisitions that were averaged.
    pub acquisitions: usize,
}

impl Sample {
    /// `patient_id/session_id`, the identifier used by the CLI.
    pub fn id(&self) -> String {
        format!("{}/{}", self.patient_id, self.session_id)
    }
}

/// Averages the acquisitions of one session.
///
/// The mean at every index is computed over the values sorted by
/// `f64::total_cmp` with compensated summation, so the result does not
/// depend on the order of `acquisitions`. It is clamped into the range of
/// the averaged values.
pub fn average_session(acquisitions: &[Acquisition]) -> Result<Sample, DatasetError> {
    let first = acquisitions.first().ok_or(DatasetError::EmptyDataset)?;
    let id = first.key_string();
    for acq in &acquisitions[1..] {
        let reason = if acq.patient_id != first.patient_id {
            Some("patient ids")
        } else if acq.session_id != first.session_id {
            Some("session ids")
        } else if acq.label != first.label {
            Some("labels")
        } else if acq.wavenumbers != first.wavenumbers {
            Some("wavenumber axes")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(DatasetError::HeterogeneousSession {
                id,
                reason: reason.to_string(),
            });
        }
    }

    let count = acquisitions.len();
    let mut column = Vec::with_capacity(count);
    let values = (0..first.intensities.len())
        .map(|i| {
            column.clear();
            column.extend(acquisitions.iter().map(|a| a.intensities[i]));
            column.sort_by(f64::total_cmp);
            let mean = neumaier_sum(&column) / count as f64;
            mean.clamp(column[0], column[count - 1])
        })
        .collect();

    Ok(Sample {
        patient_id: first.patient_id.clone(),
        session_id: first.session_id.clone(),
        label: first.label,
        spectrum: Spectrum::new(values).map_err(|_| DatasetError::NonFiniteValue {
            location: format!("average of session {id}"),
        })?,
        acquisitions: count,
    })
}

fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Session-averaged samples sharing a single wavenumber axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    wavenumbers: Vec<f64>,
}

impl Dataset {
    /// Assembles a dataset; every sample must match the length of `wavenumbers`.
    pub fn new(samples: Vec<Sample>, wavenumbers: Vec<f64>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for s in &samples {
            if s.spectrum.len() != wavenumbers.len() {
                return Err(DatasetError::AxisMismatch {
                    reference: "dataset axis".to_string(),
                    offending: s.id(),
                });
            }
            if !seen.insert((s.patient_id.as_str(), s.session_id.as_str())) {
                return Err(DatasetError::DuplicateAcquisitionId { id: s.id() });
            }
        }
        Ok(Dataset {
            samples,
            wavenumbers,
        })
    }

    /// Groups acquisitions by `(patient_id, session_id)` in order of first
    /// appearance and averages each group.
    pub fn from_acquisitions(acquisitions: Vec<Acquisition>) -> Result<Self, DatasetError> {
        let first = acquisitions.first().ok_or(DatasetError::EmptyDataset)?;
        let axis = first.wavenumbers.clone();
        let reference = first.key_string();
        for acq in &acquisitions {
            if acq.wavenumbers != axis {
                return Err(DatasetError::AxisMismatch {
                    reference: reference.clone(),
                    offending: acq.key_string(),
                });
            }
        }

        let mut order: Vec<(String, String)> = Vec::new();
        let mut groups: HashMap<(String, String), Vec<Acquisition>> = HashMap::new();
        for acq in acquisitions {
            let key = (acq.patient_id.clone(), acq.session_id.clone());
            groups
                .entry(key.clone())
                .or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                })
                .push(acq);
        }

        let mut samples = Vec::with_capacity(order.len());
        for key in order {
            let group = &groups[&key];
            if group.len() != EXPECTED_ACQUISITIONS {
                log::warn!(
                    "session {}/{} has {} acquisitions (expected {EXPECTED_ACQUISITIONS})",
                    key.0,
                    key.1,
                    group.len()
                );
            }
            samples.push(average_session(group)?);
        }
        Dataset::new(samples, axis)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Distinct patient ids in sorted order.
    pub fn patients(&self) -> Vec<&str> {
        let set: std::collections::BTreeSet<&str> =
            self.samples.iter().map(|s| s.patient_id.as_str()).collect();
        set.into_iter().collect()
    }

    /// Looks a sample up by `patient/session`, or by session id alone when unique.
    pub fn find_sample(&self, id: &str) -> Option<&Sample> {
        if let Some(s) = self.samples.iter().find(|s| s.id() == id) {
            return Some(s);
        }
        let mut by_session = self.samples.iter().filter(|s| s.session_id == id);
        match (by_session.next(), by_session.next()) {
            (Some(s), None) => Some(s),
            _ => None,
        }
    }

    /// Returns a copy with labels replaced, in sample order.
    pub fn with_labels(&self, labels: &[Label]) -> Dataset {
        assert_eq!(labels.len(), self.samples.len(), "one label per sample");
        let samples = self
            .samples
            .iter()
            .zip(labels)
            .map(|(s, &label)| Sample { label, ..s.clone() })
            .collect();
        Dataset {
            samples,
            wavenumbers: self.wavenumbers.clone(),
        }
    }

    /// Returns a copy with the spectra of the given samples replaced.
    pub fn with_spectra(&self, replacements: &[(usize, Spectrum)]) -> Dataset {
        let mut out = self.clone();
        for (index, spectrum) in replacements {
            assert_eq!(spectrum.len(), self.wavenumbers.len());
            out.samples[*index].spectrum = spectrum.clone();
        }
        out
    }
}

/// One manifest line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub patient_id: String,
    pub session_id: String,
    pub label: Label,
    /// Path of the spectrum CSV, relative to the manifest's directory.
    pub file: PathBuf,
}

/// Reads a two-column `wavenumber,intensity` CSV.
pub fn read_spectrum_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), DatasetError> {
    let bytes = std::fs::read(path).map_err(|source| DatasetError::MissingFile {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spectrum_csv(&bytes, path)
}

fn parse_spectrum_csv(bytes: &[u8], path: &Path) -> Result<(Vec<f64>, Vec<f64>), DatasetError> {
    let format_err = |reason: String| DatasetError::SpectrumFormat {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| format_err(e.to_string()))?
        .clone();
    let header: Vec<&str> = headers.iter().collect();
    if header != ["wavenumber", "intensity"] {
        return Err(format_err(format!(
            "expected header `wavenumber,intensity`, found `{}`",
            header.join(",")
        )));
    }

    let mut wavenumbers = Vec::new();
    let mut intensities = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_err(e.to_string()))?;
        if record.len() != 2 {
            return Err(format_err(format!(
                "row {} has {} fields",
                row + 1,
                record.len()
            )));
        }
        let parse = |field: &str| -> Result<f64, DatasetError> {
            let value: f64 = field
                .parse()
                .map_err(|_| format_err(format!("row {}: cannot parse `{field}`", row + 1)))?;
            if value.is_finite() {
                Ok(value)
            } else {
                Err(DatasetError::NonFiniteValue {
                    location: format!("{}, row {}", path.display(), row + 1),
                })
            }
        };
        wavenumbers.push(parse(&record[0])?);
        intensities.push(parse(&record[1])?);
    }
    Ok((wavenumbers, intensities))
}

/// Writes a spectrum in the manifest CSV format.
pub fn write_spectrum_csv(
    path: &Path,
    wavenumbers: &[f64],
    intensities: &[f64],
) -> std::io::Result<()> {
    use std::fmt::Write as _;
    let mut out = String::from("wavenumber,intensity\n");
    for (w, v) in wavenumbers.iter().zip(intensities) {
        writeln!(out, "{w},{v}").expect("writing to a String cannot fail");
    }
    std::fs::write(path, out)
}

/// Loads a manifest and every spectrum it references.
pub fn load_manifest(path: &Path) -> Result<Dataset, DatasetError> {
    let text = std::fs::read(path).map_err(|source| DatasetError::ManifestIo {
        path: path.to_path_buf(),
        source,
    })?;
    let records: Vec<ManifestRecord> =
        serde_json::from_slice(&text).map_err(|source| DatasetError::ManifestFormat {
            path: path.to_path_buf(),
            source,
        })?;
    if records.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut seen = HashSet::new();
    let mut acquisitions = Vec::with_capacity(records.len());
    let mut reference: Option<(String, Vec<f64>)> = None;
    for record in records {
        let id = format!(
            "{}/{} ({})",
            record.patient_id,
            record.session_id,
            record.file.display()
        );
        if !seen.insert((
            record.patient_id.clone(),
            record.session_id.clone(),
            record.file.clone(),
        )) {
            return Err(DatasetError::DuplicateAcquisitionId { id });
        }
        let (wavenumbers, intensities) = read_spectrum_csv(&base.join(&record.file))?;
        let acq = Acquisition {
            patient_id: record.patient_id,
            session_id: record.session_id,
            label: record.label,
            wavenumbers,
            intensities,
        };
        acq.check(&id)?;
        match &reference {
            None => reference = Some((id, acq.wavenumbers.clone())),
            Some((ref_id, axis)) if *axis != acq.wavenumbers => {
                return Err(DatasetError::AxisMismatch {
                    reference: ref_id.clone(),
                    offending: id,
                });
            }
            Some(_) => {}
        }
        acquisitions.push(acq);
    }
    Dataset::from_acquisitions(acquisitions)
}

/// Something in a dataset that prevents or weakens an evaluation run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    EmptyDataset,
    TooFewPatients { patients: usize },
    MissingClass { label: Label },
    MixedPatientLabels { patient_id: String },
}

/// Summary of a dataset, serialized as JSON by `validate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub patients: usize,
    pub samples: usize,
    pub axis_length: usize,
    pub sessions_per_patient: BTreeMap<String, usize>,
    pub label_counts: BTreeMap<Label, usize>,
    pub findings: Vec<Finding>,
    /// Non-fatal remarks, such as sessions with an unusual acquisition count.
    pub warnings: Vec<String>,
}

pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut sessions_per_patient = BTreeMap::new();
    let mut label_counts = BTreeMap::new();
    let mut patient_labels: BTreeMap<&str, HashSet<Label>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for s in dataset.samples() {
        *sessions_per_patient
            .entry(s.patient_id.clone())
            .or_insert(0) += 1;
        *label_counts.entry(s.label).or_insert(0) += 1;
        patient_labels
            .entry(&s.patient_id)
            .or_default()
            .insert(s.label);
        if s.acquisitions != EXPECTED_ACQUISITIONS {
            warnings.push(format!(
                "session {} averages {} acquisitions (expected {EXPECTED_ACQUISITIONS})",
                s.id(),
                s.acquisitions
            ));
        }
    }

    let mut findings = Vec::new();
    if dataset.is_empty() {
        findings.push(Finding::EmptyDataset);
    } else {
        if sessions_per_patient.len() < 2 {
            findings.push(Finding::TooFewPatients {
                patients: sessions_per_patient.len(),
            });
        }
        for label in [Label::Ad, Label::NoAd] {
            if !label_counts.contains_key(&label) {
                findings.push(Finding::MissingClass { label });
            }
        }
        for (patient, labels) in &patient_labels {
            if labels.len() > 1 {
                findings.push(Finding::MixedPatientLabels {
                    patient_id: patient.to_string(),
                });
            }
        }
    }

    ValidationReport {
        valid: findings.is_empty(),
        patients: sessions_per_patient.len(),
        samples: dataset.len(),
        axis_length: dataset.wavenumbers().len(),
        sessions_per_patient,
        label_counts,
        findings,
        warnings,
    }
}
