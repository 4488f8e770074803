//! Fixed-length embeddings of persistence diagrams: persistence images,
//! landscapes, silhouettes and Betti curves.
//!
//! Every method samples over a [`FeatureRange`] fitted on training diagrams
//! only, then reused unchanged for held-out diagrams.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::persistence::PersistenceDiagram;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorizeError {
    #[error("cannot fit a feature range on zero diagrams")]
    EmptyInput,
    #[error("invalid feature range: {0}")]
    InvalidRange(String),
    #[error("invalid vectorization parameters: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PersistenceImage,
    Landscape,
    Silhouette,
    BettiCurve,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::PersistenceImage,
        Method::Landscape,
        Method::Silhouette,
        Method::BettiCurve,
    ];

    pub fn abbreviation(self) -> &'static str {
        match self {
            Method::PersistenceImage => "PI",
            Method::Landscape => "PL",
            Method::Silhouette => "PS",
            Method::BettiCurve => "BC",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::PersistenceImage => "persistence_image",
            Method::Landscape => "landscape",
            Method::Silhouette => "silhouette",
            Method::BettiCurve => "betti_curve",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == lower || m.abbreviation().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown vectorization method `{s}`"))
    }
}

/// Parameters of one vectorization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorizationConfig {
    PersistenceImage { sigma: f64, resolution: usize },
    Landscape { layers: usize, resolution: usize },
    Silhouette { power: f64, resolution: usize },
    BettiCurve { resolution: usize },
}

impl VectorizationConfig {
    pub const DEFAULT_LAYERS: usize = 5;
    pub const DEFAULT_POWER: f64 = 1.0;
    pub const PI_SIGMAS: [f64; 3] = [0.1, 1.0, 10.0];
    pub const PI_RESOLUTIONS: [usize; 3] = [5, 10, 25];
    pub const CURVE_RESOLUTIONS: [usize; 4] = [25, 50, 75, 100];

    pub fn method(&self) -> Method {
        match self {
            VectorizationConfig::PersistenceImage { .. } => Method::PersistenceImage,
            VectorizationConfig::Landscape { .. } => Method::Landscape,
            VectorizationConfig::Silhouette { .. } => Method::Silhouette,
            VectorizationConfig::BettiCurve { .. } => Method::BettiCurve,
        }
    }

    pub fn resolution(&self) -> usize {
        match *self {
            VectorizationConfig::PersistenceImage { resolution, .. }
            | VectorizationConfig::Landscape { resolution, .. }
            | VectorizationConfig::Silhouette { resolution, .. }
            | VectorizationConfig::BettiCurve { resolution } => resolution,
        }
    }

    /// Length of the produced feature vector.
    pub fn output_len(&self) -> usize {
        match *self {
            VectorizationConfig::PersistenceImage { resolution, .. } => resolution * resolution,
            VectorizationConfig::Landscape { layers, resolution } => layers * resolution,
            VectorizationConfig::Silhouette { resolution, .. }
            | VectorizationConfig::BettiCurve { resolution } => resolution,
        }
    }

    pub fn validate(&self) -> Result<(), VectorizeError> {
        let err = |msg: String| Err(VectorizeError::InvalidConfig(msg));
        if self.resolution() == 0 {
            return err("resolution must be positive".into());
        }
        match *self {
            VectorizationConfig::PersistenceImage { sigma, .. }
                if !(sigma.is_finite() && sigma > 0.0) =>
            {
                err(format!("sigma must be positive, got {sigma}"))
            }
            VectorizationConfig::Landscape { layers: 0, .. } => {
                err("landscape needs at least one layer".into())
            }
            VectorizationConfig::Silhouette { power, .. }
                if !(power.is_finite() && power > 0.0) =>
            {
                err(format!("silhouette power must be positive, got {power}"))
            }
            _ => Ok(()),
        }
    }

    /// Short tag such as `PI (sigma=1, n=10)`.
    pub fn tag(&self) -> String {
        match *self {
            VectorizationConfig::PersistenceImage { sigma, resolution } => {
                format!("PI (sigma={sigma}, n={resolution})")
            }
            VectorizationConfig::Landscape { layers, resolution } => {
                format!("PL (k={layers}, n={resolution})")
            }
            VectorizationConfig::Silhouette { power, resolution } => {
                format!("PS (p={power}, n={resolution})")
            }
            VectorizationConfig::BettiCurve { resolution } => format!("BC (n={resolution})"),
        }
    }

    /// The 21 vectorizations of the reference grid: 9 persistence images
    /// and 4 resolutions for each curve-type method.
    pub fn paper_grid() -> Vec<VectorizationConfig> {
        let mut out = Vec::with_capacity(21);
        for sigma in Self::PI_SIGMAS {
            for resolution in Self::PI_RESOLUTIONS {
                out.push(VectorizationConfig::PersistenceImage { sigma, resolution });
            }
        }
        for resolution in Self::CURVE_RESOLUTIONS {
            out.push(VectorizationConfig::Landscape {
                layers: Self::DEFAULT_LAYERS,
                resolution,
            });
        }
        for resolution in Self::CURVE_RESOLUTIONS {
            out.push(VectorizationConfig::Silhouette {
                power: Self::DEFAULT_POWER,
                resolution,
            });
        }
        for resolution in Self::CURVE_RESOLUTIONS {
            out.push(VectorizationConfig::BettiCurve { resolution });
        }
        out
    }
}

/// Sampling domain fitted on training diagrams.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureRange {
    /// Birth/persistence window for persistence images. `max_persistence`
    /// is the largest training persistence and normalizes pair weights.
    Image {
        birth_min: f64,
        birth_max: f64,
        pers_min: f64,
        pers_max: f64,
        max_persistence: f64,
    },
    /// Filtration-value window for landscapes, silhouettes and Betti curves.
    Filtration { t_min: f64, t_max: f64 },
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

impl FeatureRange {
    pub fn filtration(t_min: f64, t_max: f64) -> Result<Self, VectorizeError> {
        let r = FeatureRange::Filtration { t_min, t_max };
        r.check()?;
        Ok(r)
    }

    pub fn image(
        birth: (f64, f64),
        persistence: (f64, f64),
        max_persistence: f64,
    ) -> Result<Self, VectorizeError> {
        let r = FeatureRange::Image {
            birth_min: birth.0,
            birth_max: birth.1,
            pers_min: persistence.0,
            pers_max: persistence.1,
            max_persistence,
        };
        r.check()?;
        Ok(r)
    }

    fn check(&self) -> Result<(), VectorizeError> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && hi > lo;
        let valid = match *self {
            FeatureRange::Image {
                birth_min,
                birth_max,
                pers_min,
                pers_max,
                max_persistence,
            } => {
                ok(birth_min, birth_max)
                    && ok(pers_min, pers_max)
                    && max_persistence.is_finite()
                    && max_persistence >= 0.0
            }
            FeatureRange::Filtration { t_min, t_max } => ok(t_min, t_max),
        };
        if valid {
            Ok(())
        } else {
            Err(VectorizeError::InvalidRange(format!("{self:?}")))
        }
    }
}

/// Fits the sampling domain of `method` on training diagrams. Degenerate
/// (zero-width) intervals are widened by 0.5 on each side.
pub fn fit_range(
    diagrams: &[PersistenceDiagram],
    method: Method,
) -> Result<FeatureRange, VectorizeError> {
    let pairs = || diagrams.iter().flat_map(|d| d.pairs());
    if diagrams.is_empty() || pairs().next().is_none() {
        return Err(VectorizeError::EmptyInput);
    }
    let extent = |values: &mut dyn Iterator<Item = f64>| {
        values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
    };
    let range = match method {
        Method::PersistenceImage => {
            let birth = extent(&mut pairs().map(|p| p.birth));
            let pers = extent(&mut pairs().map(|p| p.persistence()));
            let birth = widen(birth.0, birth.1);
            let widened = widen(pers.0, pers.1);
            FeatureRange::Image {
                birth_min: birth.0,
                birth_max: birth.1,
                pers_min: widened.0,
                pers_max: widened.1,
                max_persistence: pers.1,
            }
        }
        Method::Landscape | Method::Silhouette | Method::BettiCurve => {
            let lo = extent(&mut pairs().map(|p| p.birth)).0;
            let hi = extent(&mut pairs().map(|p| p.death)).1;
            let (t_min, t_max) = widen(lo, hi);
            FeatureRange::Filtration { t_min, t_max }
        }
    };
    range.check()?;
    Ok(range)
}

/// Feature vector together with the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub config: VectorizationConfig,
}

/// `n` evenly spaced points from `t_min` to `t_max` inclusive.
pub fn sample_points(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (t_min + t_max)],
        _ => {
            let step = (t_max - t_min) / (n - 1) as f64;
            (0..n).map(|i| t_min + step * i as f64).collect()
        }
    }
}

fn filtration_window(range: &FeatureRange) -> Result<(f64, f64), VectorizeError> {
    range.check()?;
    match *range {
        FeatureRange::Filtration { t_min, t_max } => Ok((t_min, t_max)),
        FeatureRange::Image { .. } => Err(VectorizeError::InvalidRange(
            "expected a filtration range".to_string(),
        )),
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Gaussian mass of `N(center, sigma²)` in each of `n` equal cells over `[lo, hi]`.
fn cell_masses(center: f64, sigma: f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let width = (hi - lo) / n as f64;
    let cdf: Vec<f64> = (0..=n)
        .map(|i| std_normal_cdf((lo + width * i as f64 - center) / sigma))
        .collect();
    cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
}

/// Persistence image on an `n × n` grid, rows along birth, columns along
/// persistence, flattened row-major.
///
/// Each pair `(b, d)` becomes the point `(b, d - b)` with weight
/// `clamp((d - b) / max_persistence, 0, 1)`; its Gaussian is integrated
/// exactly over every pixel. Points outside the range are clamped onto its
/// border.
pub fn persistence_image(
    diagram: &PersistenceDiagram,
    sigma: f64,
    n: usize,
    range: &FeatureRange,
) -> Result<FeatureVector, VectorizeError> {
    let config = VectorizationConfig::PersistenceImage {
        sigma,
        resolution: n,
    };
    config.validate()?;
    range.check()?;
    let FeatureRange::Image {
        birth_min,
        birth_max,
        pers_min,
        pers_max,
        max_persistence,
    } = *range
    else {
        return Err(VectorizeError::InvalidRange(
            "expected an image range".to_string(),
        ));
    };

    let mut values = vec![0.0; n * n];
    for pair in diagram.pairs() {
        let pers = pair.persistence();
        let weight = if max_persistence > 0.0 {
            (pers / max_persistence).clamp(0.0, 1.0)
        } else {
            0.0
        };
        if weight == 0.0 {
            continue;
        }
        let b = pair.birth.clamp(birth_min, birth_max);
        let q = pers.clamp(pers_min, pers_max);
        let rows = cell_masses(b, sigma, birth_min, birth_max, n);
        let cols = cell_masses(q, sigma, pers_min, pers_max, n);
        for (r, row_mass) in rows.iter().enumerate() {
            if *row_mass == 0.0 {
                continue;
            }
            let row = &mut values[r * n..(r + 1) * n];
            for (cell, col_mass) in row.iter_mut().zip(&cols) {
                *cell += weight * row_mass * col_mass;
            }
        }
    }
    Ok(FeatureVector { values, config })
}

fn tent(birth: f64, death: f64, t: f64) -> f64 {
    (t - birth).min(death - t).max(0.0)
}

/// `λ_1(t) .. λ_k(t)`: the `k` largest tent values at `t`, zero-padded.
pub fn landscape_at(diagram: &PersistenceDiagram, layers: usize, t: f64) -> Vec<f64> {
    let mut tents: Vec<f64> = diagram
        .pairs()
        .iter()
        .map(|p| tent(p.birth, p.death, t))
        .filter(|&v| v > 0.0)
        .collect();
    tents.sort_by(|a, b| b.total_cmp(a));
    tents.resize(layers, 0.0);
    tents
}

/// Landscape layers sampled at `n` points, concatenated layer by layer.
pub fn persistence_landscape(
    diagram: &PersistenceDiagram,
    layers: usize,
    n: usize,
    range: &FeatureRange,
) -> Result<FeatureVector, VectorizeError> {
    let config = VectorizationConfig::Landscape {
        layers,
        resolution: n,
    };
    config.validate()?;
    let (t_min, t_max) = filtration_window(range)?;
    let mut values = vec![0.0; layers * n];
    for (i, t) in sample_points(t_min, t_max, n).into_iter().enumerate() {
        for (j, v) in landscape_at(diagram, layers, t).into_iter().enumerate() {
            values[j * n + i] = v;
        }
    }
    Ok(FeatureVector { values, config })
}

/// Persistence-weighted mean of tents at `t`, weights `(d - b)^power`.
/// Zero when no pair has positive persistence.
pub fn silhouette_at(diagram: &PersistenceDiagram, power: f64, t: f64) -> f64 {
    let (num, den) = diagram
        .pairs()
        .iter()
        .filter(|p| p.persistence() > 0.0)
        .fold((0.0, 0.0), |(num, den), p| {
            let w = p.persistence().powf(power);
            (num + w * tent(p.birth, p.death, t), den + w)
        });
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn persistence_silhouette(
    diagram: &PersistenceDiagram,
    power: f64,
    n: usize,
    range: &FeatureRange,
) -> Result<FeatureVector, VectorizeError> {
    let config = VectorizationConfig::Silhouette {
        power,
        resolution: n,
    };
    config.validate()?;
    let (t_min, t_max) = filtration_window(range)?;
    let values = sample_points(t_min, t_max, n)
        .into_iter()
        .map(|t| silhouette_at(diagram, power, t))
        .collect();
    Ok(FeatureVector { values, config })
}

/// Number of pairs with `birth <= t < death`.
pub fn betti_at(diagram: &PersistenceDiagram, t: f64) -> usize {
    diagram
        .pairs()
        .iter()
        .filter(|p| p.birth <= t && t < p.death)
        .count()
}

pub fn betti_curve(
    diagram: &PersistenceDiagram,
    n: usize,
    range: &FeatureRange,
) -> Result<FeatureVector, VectorizeError> {
    let config = VectorizationConfig::BettiCurve { resolution: n };
    config.validate()?;
    let (t_min, t_max) = filtration_window(range)?;
    let values = sample_points(t_min, t_max, n)
        .into_iter()
        .map(|t| betti_at(diagram, t) as f64)
        .collect();
    Ok(FeatureVector { values, config })
}

/// Dispatches on `config`.
pub fn vectorize(
    diagram: &PersistenceDiagram,
    config: &VectorizationConfig,
    range: &FeatureRange,
) -> Result<FeatureVector, VectorizeError> {
    match *config {
        VectorizationConfig::PersistenceImage { sigma, resolution } => {
            persistence_image(diagram, sigma, resolution, range)
        }
        VectorizationConfig::Landscape { layers, resolution } => {
            persistence_landscape(diagram, layers, resolution, range)
        }
        VectorizationConfig::Silhouette { power, resolution } => {
            persistence_silhouette(diagram, power, resolution, range)
        }
        VectorizationConfig::BettiCurve { resolution } => betti_curve(diagram, resolution, range),
    }
}
