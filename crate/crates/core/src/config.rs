//! Run configuration read from TOML.
//!
//! Every section is optional; an empty file reproduces the reference grid
//! of 4 transforms × 21 vectorizations × 3 classifiers.
//!
//! ```toml
//! manifest = "manifest.json"
//! out = "results"
//! seed = 0
//! workers = 4
//!
//! [grid]
//! transforms = ["raw", "fourier"]
//! methods = ["persistence_image", "betti_curve"]
//! pi_sigmas = [0.1, 1.0, 10.0]
//! pi_resolutions = [5, 10, 25]
//! curve_resolutions = [25, 50, 75, 100]
//! classifiers = ["ridge", "svc", "forest"]
//!
//! [welch]
//! segment_length = 256
//! overlap = 0.5
//! window = "hann"
//!
//! [svc]
//! c = 1.0
//! kernel = { type = "rbf", gamma = "scale" }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifierConfig, ClassifierKind, Gamma, KernelSpec};
use crate::evaluate::PipelineConfig;
use crate::transforms::{TransformKind, WelchConfig};
use crate::vectorize::{Method, VectorizationConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub transforms: Vec<TransformKind>,
    pub methods: Vec<Method>,
    pub pi_sigmas: Vec<f64>,
    pub pi_resolutions: Vec<usize>,
    pub curve_resolutions: Vec<usize>,
    pub landscape_layers: usize,
    pub silhouette_power: f64,
    pub classifiers: Vec<ClassifierKind>,
    pub drop_zero_persistence: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            transforms: TransformKind::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            pi_sigmas: VectorizationConfig::PI_SIGMAS.to_vec(),
            pi_resolutions: VectorizationConfig::PI_RESOLUTIONS.to_vec(),
            curve_resolutions: VectorizationConfig::CURVE_RESOLUTIONS.to_vec(),
            landscape_layers: VectorizationConfig::DEFAULT_LAYERS,
            silhouette_power: VectorizationConfig::DEFAULT_POWER,
            classifiers: ClassifierKind::ALL.to_vec(),
            drop_zero_persistence: false,
        }
    }
}

impl GridSpec {
    pub fn vectorizations(&self) -> Vec<VectorizationConfig> {
        let mut out = Vec::new();
        for method in &self.methods {
            match method {
                Method::PersistenceImage => {
                    for &sigma in &self.pi_sigmas {
                        for &resolution in &self.pi_resolutions {
                            out.push(VectorizationConfig::PersistenceImage { sigma, resolution });
                        }
                    }
                }
                Method::Landscape => out.extend(self.curve_resolutions.iter().map(|&resolution| {
                    VectorizationConfig::Landscape {
                        layers: self.landscape_layers,
                        resolution,
                    }
                })),
                Method::Silhouette => {
                    out.extend(self.curve_resolutions.iter().map(|&resolution| {
                        VectorizationConfig::Silhouette {
                            power: self.silhouette_power,
                            resolution,
                        }
                    }))
                }
                Method::BettiCurve => out.extend(
                    self.curve_resolutions
                        .iter()
                        .map(|&resolution| VectorizationConfig::BettiCurve { resolution }),
                ),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeParams {
    pub alpha: f64,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams { alpha: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvcParams {
    pub c: f64,
    pub kernel: KernelSpec,
}

impl Default for SvcParams {
    fn default() -> Self {
        SvcParams {
            c: 1.0,
            kernel: KernelSpec::Rbf {
                gamma: Gamma::Scale,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// Thread cap; `None` lets the pool decide.
    pub workers: Option<usize>,
    pub grid: GridSpec,
    pub welch: WelchConfig,
    pub ridge: RidgeParams,
    pub svc: SvcParams,
    pub forest: ForestParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            out: PathBuf::from("results"),
            seed: 0,
            workers: None,
            grid: GridSpec::default(),
            welch: WelchConfig::default(),
            ridge: RidgeParams::default(),
            svc: SvcParams::default(),
            forest: ForestParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<string>"),
            source: Box::new(e),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative `manifest` and `out` paths are taken
    /// relative to the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(e),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        if let Some(m) = &config.manifest {
            if m.is_relative() {
                config.manifest = Some(base.join(m));
            }
        }
        if config.out.is_relative() {
            config.out = base.join(&config.out);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.workers == Some(0) {
            return invalid("workers must be at least 1".into());
        }
        self.welch
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.ridge.alpha.is_finite() && self.ridge.alpha > 0.0) {
            return invalid(format!(
                "ridge alpha must be positive, got {}",
                self.ridge.alpha
            ));
        }
        if !(self.svc.c.is_finite() && self.svc.c > 0.0) {
            return invalid(format!("svc c must be positive, got {}", self.svc.c));
        }
        if self.forest.trees == 0 {
            return invalid("forest trees must be at least 1".into());
        }
        let grid = &self.grid;
        if grid.transforms.is_empty() || grid.methods.is_empty() || grid.classifiers.is_empty() {
            return invalid("grid transforms, methods and classifiers must be non-empty".into());
        }
        for v in grid.vectorizations() {
            v.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if grid.vectorizations().is_empty() {
            return invalid("grid produces no vectorizations".into());
        }
        Ok(())
    }

    pub fn classifier(&self, kind: ClassifierKind) -> ClassifierConfig {
        match kind {
            ClassifierKind::Ridge => ClassifierConfig::Ridge {
                alpha: self.ridge.alpha,
            },
            ClassifierKind::Svc => ClassifierConfig::Svc {
                c: self.svc.c,
                kernel: self.svc.kernel,
            },
            ClassifierKind::Forest => ClassifierConfig::Forest {
                trees: self.forest.trees,
            },
        }
    }

    /// Expands the grid: transforms outermost, then vectorizations, then classifiers.
    pub fn pipeline_grid(&self) -> Vec<PipelineConfig> {
        let vectorizations = self.grid.vectorizations();
        let mut out = Vec::new();
        for &transform in &self.grid.transforms {
            for &vectorization in &vectorizations {
                for &kind in &self.grid.classifiers {
                    out.push(PipelineConfig {
                        transform,
                        vectorization,
                        classifier: self.classifier(kind),
                        seed: self.seed,
                        welch: self.welch.clone(),
                        drop_zero_persistence: self.grid.drop_zero_persistence,
                    });
                }
            }
        }
        out
    }
}
