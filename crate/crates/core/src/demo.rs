//! Synthetic, topologically separable dataset for trying the pipeline
//! without clinical data.
//!
//! The cohort mirrors the reference study layout: 24 patients (19 AD, 5
//! noAD), 30 sessions (22 AD, 8 noAD), five acquisitions per session. AD
//! spectra carry five Gaussian bands on a flat background, noAD spectra
//! two, so the classes differ in the number of deep sublevel-set
//! components.

use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{write_spectrum_csv, Acquisition, Dataset, Label, ManifestRecord};

pub const AXIS_LEN: usize = 1024;
pub const AXIS_START: f64 = 400.0;
pub const AXIS_END: f64 = 1800.0;
pub const AD_PEAKS: usize = 5;
pub const NOAD_PEAKS: usize = 2;
const BACKGROUND: f64 = 100.0;
const NOISE_SD: f64 = 3.0;

/// `(patient_id, label, sessions)` for the 24 demo patients.
pub fn cohort() -> Vec<(String, Label, usize)> {
    let no_ad = [4, 9, 14, 19, 24];
    let mut ad_seen = 0;
    let mut no_ad_seen = 0;
    (1..=24)
        .map(|p| {
            let id = format!("P{p:02}");
            if no_ad.contains(&p) {
                no_ad_seen += 1;
                let sessions = match no_ad_seen {
                    1 => 3,
                    2 => 2,
                    _ => 1,
                };
                (id, Label::NoAd, sessions)
            } else {
                ad_seen += 1;
                (id, Label::Ad, if ad_seen <= 3 { 2 } else { 1 })
            }
        })
        .collect()
}

pub fn wavenumbers() -> Vec<f64> {
    let step = (AXIS_END - AXIS_START) / (AXIS_LEN - 1) as f64;
    (0..AXIS_LEN)
        .map(|i| AXIS_START + step * i as f64)
        .collect()
}

/// Noise-free session profile: background plus `peaks` bands placed in
/// disjoint slots of the axis.
fn session_profile(axis: &[f64], peaks: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let slot = (AXIS_END - AXIS_START) / peaks as f64;
    let bands: Vec<(f64, f64, f64)> = (0..peaks)
        .map(|k| {
            let center = AXIS_START + slot * (k as f64 + rng.random_range(0.35..0.65));
            let height = rng.random_range(200.0..400.0);
            let width = rng.random_range(12.0..25.0);
            (center, height, width)
        })
        .collect();
    axis.iter()
        .map(|&x| {
            BACKGROUND
                + bands
                    .iter()
                    .map(|&(c, h, w)| h * (-0.5 * ((x - c) / w).powi(2)).exp())
                    .sum::<f64>()
        })
        .collect()
}

/// All acquisitions of the demo cohort, deterministic in `seed`.
pub fn acquisitions(seed: u64) -> Vec<Acquisition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, NOISE_SD).expect("valid normal");
    let axis = wavenumbers();
    let mut out = Vec::new();
    for (patient, label, sessions) in cohort() {
        let peaks = match label {
            Label::Ad => AD_PEAKS,
            Label::NoAd => NOAD_PEAKS,
        };
        for s in 1..=sessions {
            let profile = session_profile(&axis, peaks, &mut rng);
            for _ in 0..crate::dataset::EXPECTED_ACQUISITIONS {
                let intensities = profile.iter().map(|v| v + noise.sample(&mut rng)).collect();
                out.push(
                    Acquisition::new(
                        patient.clone(),
                        format!("S{s}"),
                        label,
                        axis.clone(),
                        intensities,
                    )
                    .expect("demo acquisitions are valid"),
                );
            }
        }
    }
    out
}

pub fn dataset(seed: u64) -> Dataset {
    Dataset::from_acquisitions(acquisitions(seed)).expect("demo dataset is valid")
}

/// Config written next to the demo manifest; runs the full reference grid.
pub const DEMO_CONFIG: &str = "\
# Full reference grid on the synthetic demo cohort.
manifest = \"manifest.json\"
out = \"results\"
seed = 0
";

/// Writes spectra CSVs, `manifest.json` and `config.toml` into `dir`.
/// Returns the manifest path.
pub fn write(dir: &Path, seed: u64) -> io::Result<PathBuf> {
    let spectra = dir.join("spectra");
    std::fs::create_dir_all(&spectra)?;
    let mut records = Vec::new();
    let mut counter = std::collections::HashMap::new();
    for acq in acquisitions(seed) {
        let n = counter
            .entry((acq.patient_id.clone(), acq.session_id.clone()))
            .or_insert(0);
        *n += 1;
        let file = PathBuf::from("spectra")
            .join(format!("{}_{}_{}.csv", acq.patient_id, acq.session_id, n));
        write_spectrum_csv(&dir.join(&file), &acq.wavenumbers, &acq.intensities)?;
        records.push(ManifestRecord {
            patient_id: acq.patient_id,
            session_id: acq.session_id,
            label: acq.label,
            file,
        });
    }
    let manifest = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&records).map_err(io::Error::other)?;
    std::fs::write(&manifest, json + "\n")?;
    std::fs::write(dir.join("config.toml"), DEMO_CONFIG)?;
    Ok(manifest)
}
