//! Topological classification of 1D Raman spectra.
//!
//! The pipeline averages acquisitions per session ([`dataset`]), optionally
//! maps each spectrum to a Fourier, Welch or autocorrelation representation
//! ([`transforms`]), extracts the H0 persistence diagram of its lower-star
//! filtration ([`persistence`]), embeds the diagram as a fixed-length vector
//! ([`vectorize`]) and classifies it ([`classify`]). [`evaluate`] runs the
//! whole chain under leave-one-patient-out cross-validation for every entry
//! of a configuration grid.

pub mod classify;
pub mod config;
pub mod dataset;
pub mod demo;
pub mod evaluate;
pub mod export;
pub mod persistence;
pub mod spectrum;
pub mod transforms;
pub mod vectorize;

pub use classify::{ClassifierConfig, ClassifierKind, LabeledMatrix, Standardizer, TrainedModel};
pub use config::RunConfig;
pub use dataset::{Dataset, Label, Sample, ValidationReport};
pub use evaluate::{ExperimentResult, PipelineConfig};
pub use persistence::{PersistenceDiagram, PersistencePair};
pub use spectrum::Spectrum;
pub use transforms::{TransformKind, WelchConfig};
pub use vectorize::{FeatureRange, FeatureVector, Method, VectorizationConfig};
