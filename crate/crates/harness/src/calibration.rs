//! The calibration pipeline: estimate the speed and the tail constant of the
//! walk, validate `C_delta` against the exact oracle, and cache the outcome.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mixfree_core::engine::{single_certificate_sweep, Calibration, SoundnessSweep};
use mixfree_core::geom::HypParams;
use mixfree_core::rng::derive_seed;
use mixfree_core::walk::{estimate_speed, estimate_tail, Measure};
use mixfree_core::GroupElement;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::report::write_atomic;
use crate::HarnessError;

/// Cache entries written under another version are ignored.
pub const CACHE_VERSION: &str = concat!("calibration-cache/1/", env!("CARGO_PKG_VERSION"));
pub const CACHE_FILE: &str = "calibration-cache.json";

const SPEED_STREAM: u64 = 1;
const TAIL_STREAM: u64 = 2;
const SOUNDNESS_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub speed_length: usize,
    pub speed_trials: usize,
    pub tail_length: usize,
    pub tail_trials: usize,
    /// Element expressions; each is probed against `x_n` and `x_n^-1`.
    pub probes: Vec<String>,
    pub soundness_samples: u64,
}

impl CalibrationSettings {
    pub fn standard(measure: &Measure) -> Self {
        let backend = measure.backend();
        let mut probes: Vec<String> = backend.alphabet.iter().map(char::to_string).collect();
        // a long probe sees the decay of the tail, the generators only its head
        let long: String = (0..11).map(|i| backend.alphabet[2 * (i % 2)]).collect();
        probes.push(long);
        CalibrationSettings {
            speed_length: 1000,
            speed_trials: 1000,
            tail_length: 1000,
            tail_trials: 10_000,
            probes,
            soundness_samples: 1000,
        }
    }

    fn fingerprint(&self) -> String {
        format!(
            "{}x{}/{}x{}/{}/{}",
            self.speed_length,
            self.speed_trials,
            self.tail_length,
            self.tail_trials,
            self.probes.join(","),
            self.soundness_samples
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedSummary {
    pub mean: f64,
    pub stderr: f64,
    pub p05: f64,
    pub n: usize,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub probe: String,
    pub inverse: bool,
    pub fitted_c1: f64,
    pub survival: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessSummary {
    pub samples: u64,
    pub certified: u64,
    pub failures: u64,
    pub max_power: u32,
}

impl From<SoundnessSweep> for SoundnessSummary {
    fn from(s: SoundnessSweep) -> Self {
        SoundnessSummary {
            samples: s.samples,
            certified: s.certified,
            failures: s.failures,
            max_power: s.max_power,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// `lambda_hat` is the 5th percentile speed, `c1_hat` the largest fitted tail constant.
    pub calibration: Calibration,
    pub speed: SpeedSummary,
    pub tails: Vec<TailSummary>,
    pub soundness: SoundnessSummary,
    pub c_delta_validated: bool,
    pub single_word_constant: f64,
    pub simultaneous_constant: f64,
    pub settings: CalibrationSettings,
    /// Not serialized, so a cached and a fresh run give identical reports.
    #[serde(skip)]
    pub from_cache: bool,
}

pub fn calibrate(
    measure: &Measure,
    master_seed: u64,
    c_delta: f64,
    settings: &CalibrationSettings,
) -> Result<CalibrationReport, HarnessError> {
    let backend = measure.backend();
    let speed = estimate_speed(
        measure,
        settings.speed_length,
        settings.speed_trials,
        derive_seed(master_seed, SPEED_STREAM),
    )?;
    let mut tails = Vec::new();
    for (i, text) in settings.probes.iter().enumerate() {
        let probe = mixfree_core::mixed::parse_element_expr(text, backend)?;
        for inverse in [false, true] {
            let seed = derive_seed(derive_seed(master_seed, TAIL_STREAM), 2 * i as u64 + u64::from(inverse));
            let t = estimate_tail(
                measure,
                &probe,
                settings.tail_length,
                settings.tail_trials,
                seed,
                inverse,
            )?;
            tails.push(TailSummary {
                probe: probe.to_text(),
                inverse,
                fitted_c1: t.fitted_c1,
                survival: t.survival,
            });
        }
    }
    let c1_hat = tails.iter().map(|t| t.fitted_c1).fold(0.0, f64::max);
    let soundness: SoundnessSummary = single_certificate_sweep(
        backend,
        settings.soundness_samples,
        12,
        24,
        8,
        &HypParams::tree(c_delta),
        derive_seed(master_seed, SOUNDNESS_STREAM),
    )?
    .into();
    let calibration = Calibration::new(speed.p05, c1_hat, c_delta, master_seed);
    Ok(CalibrationReport {
        single_word_constant: calibration.single_word_constant(),
        simultaneous_constant: calibration.simultaneous_constant(backend),
        calibration,
        speed: SpeedSummary {
            mean: speed.lambda_hat,
            stderr: speed.stderr,
            p05: speed.p05,
            n: speed.n,
            trials: speed.trials,
        },
        tails,
        c_delta_validated: soundness.failures == 0,
        soundness,
        settings: settings.clone(),
        from_cache: false,
    })
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    version: String,
    entries: BTreeMap<String, CalibrationReport>,
}

pub fn cache_path(output_dir: &Path) -> PathBuf {
    output_dir.join(CACHE_FILE)
}

pub fn cache_key(config: &ExperimentConfig, settings: &CalibrationSettings) -> String {
    format!(
        "{}|{}|{}|{}|{}",
        config.backend.label(),
        config.measure.to_text(),
        config.master_seed,
        config.c_delta,
        settings.fingerprint()
    )
}

fn load_cache(path: &Path) -> CacheFile {
    let fresh = || CacheFile {
        version: CACHE_VERSION.to_string(),
        entries: BTreeMap::new(),
    };
    let Ok(text) = std::fs::read_to_string(path) else {
        return fresh();
    };
    match serde_json::from_str::<CacheFile>(&text) {
        Ok(c) if c.version == CACHE_VERSION => c,
        _ => fresh(),
    }
}

pub fn cached(config: &ExperimentConfig, settings: &CalibrationSettings) -> Option<CalibrationReport> {
    let mut r = load_cache(&cache_path(&config.output_dir))
        .entries
        .remove(&cache_key(config, settings))?;
    r.from_cache = true;
    Some(r)
}

pub fn store(
    config: &ExperimentConfig,
    settings: &CalibrationSettings,
    report: &CalibrationReport,
) -> Result<(), HarnessError> {
    let path = cache_path(&config.output_dir);
    let mut cache = load_cache(&path);
    let mut r = report.clone();
    r.from_cache = false;
    cache.entries.insert(cache_key(config, settings), r);
    let mut bytes = serde_json::to_vec_pretty(&cache)?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)
}

/// Cached calibration when present, otherwise a fresh run that is then cached.
pub fn calibrate_cached(
    config: &ExperimentConfig,
    settings: &CalibrationSettings,
    refresh: bool,
) -> Result<CalibrationReport, HarnessError> {
    if !refresh {
        if let Some(r) = cached(config, settings) {
            return Ok(r);
        }
    }
    let r = calibrate(&config.measure, config.master_seed, config.c_delta, settings)?;
    store(config, settings, &r)?;
    Ok(r)
}

/// The calibration a command should use: the config's own constants if it
/// has them, otherwise the cached or freshly run pipeline.
pub fn resolve(config: &ExperimentConfig) -> Result<Calibration, HarnessError> {
    if let Some(c) = &config.calibration {
        return Ok(c.clone());
    }
    let r = calibrate_cached(config, &CalibrationSettings::standard(&config.measure), false)?;
    if !r.c_delta_validated {
        return Err(HarnessError::Domain(format!(
            "c_delta = {} failed the soundness sweep ({} failures); raise it",
            config.c_delta, r.soundness.failures
        )));
    }
    Ok(r.calibration)
}

/// Probe text for the long tail probe of the standard settings.
pub fn long_probe(measure: &Measure) -> GroupElement {
    let s = CalibrationSettings::standard(measure);
    mixfree_core::mixed::parse_element_expr(s.probes.last().expect("standard probes"), measure.backend())
        .expect("built from the alphabet")
}
